"""
Riesz products on the unit sphere S of C^2.

A triple is a list of factors (j_k, a_k, R_k) with R_k a homogeneous
holomorphic polynomial of degree j_k, sup_S |R_k| <= 1 and
||R_k||_2 >= delta. The K-th partial product is the real density

    prod_{k <= K} (1 + (a_k R_k + conj(a_k R_k)) / 2)

with respect to the normalised surface measure sigma.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product as iproduct
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from . import circle, rw
from .circle import CircleRieszSpec, SignedCombination, unique_representation
from .harmonics import decompose
from .poly import BidegreePoly, MonomialPoly, sphere_inner_product, uniform_sphere

N_DIM = 2
SUP_TOL = 1e-6
MASS_TOL = 1e-10
MC_CHUNK = 1 << 16


# ------------------------------------------------------------------ triples --

@dataclass(frozen=True)
class RieszFactor:
    """One factor; ``coeffs[i]`` multiplies z1^i z2^(j-i)."""

    j: int
    a: complex
    coeffs: np.ndarray = field(compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128).ravel()
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "coeffs", c)
        if c.shape[0] != self.j + 1:
            raise ValueError(f"degree {self.j} needs {self.j + 1} coefficients, got {c.shape[0]}")

    @property
    def R(self):
        return rw.to_poly(self.coeffs)

    def evaluate_R(self, z):
        """R(z) at points of shape (P, 2) by Horner in z1 with powers of z2."""
        z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
        acc = np.full(z.shape[0], self.coeffs[self.j], dtype=np.complex128)
        y = np.ones(z.shape[0], dtype=np.complex128)
        for m in range(1, self.j + 1):
            y = y * z[:, 1]
            acc = acc * z[:, 0] + self.coeffs[self.j - m] * y
        return acc


@dataclass(frozen=True)
class RieszTriple:
    factors: tuple
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "delta", float(self.delta))

    def __len__(self):
        return len(self.factors)

    @property
    def J(self):
        return tuple(f.j for f in self.factors)

    @property
    def a(self):
        return np.array([f.a for f in self.factors], dtype=np.complex128)

    def to_json(self):
        return {"delta": self.delta,
                "factors": [{"j": f.j, "a": [f.a.real, f.a.imag],
                             "R": {"coeffs": [[float(x.real), float(x.imag)] for x in f.coeffs]}}
                            for f in self.factors]}


def _coeffs_from_terms(records, j):
    poly = MonomialPoly.from_records(records)
    BidegreePoly(j, 0, poly)  # raises if a term has the wrong bidegree
    c = np.zeros(j + 1, dtype=np.complex128)
    for e, v in zip(poly.exps, poly.coeffs):
        c[e[0]] += v
    return c


def _factor_coeffs(spec, j, base_dir):
    if "coeffs" in spec:
        return np.array([complex(re, im) for re, im in spec["coeffs"]])
    if "terms" in spec:
        return _coeffs_from_terms(spec["terms"], j)
    if "monomial_seed" in spec:
        return rw.monomial_from_seed(j, int(spec["monomial_seed"]))
    if "balanced_monomial" in spec:
        return rw.balanced_monomial(j)
    if "rw_certificate" in spec:
        path = Path(spec["rw_certificate"])
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        cert = rw.RWCertificate.from_json(json.loads(path.read_text()))
        if cert.j != j:
            raise ValueError(f"certificate {path} has degree {cert.j}, factor needs {j}")
        return cert.coeffs
    raise ValueError(f"unrecognised R specification: {sorted(spec)}")


def triple_from_json(obj, base_dir=None):
    """Build a triple from its JSON form; R may be given as coefficients,
    monomial terms, a monomial seed, or a path to an RW certificate."""
    factors = []
    for f in obj["factors"]:
        j = int(f["j"])
        re, im = f["a"]
        factors.append(RieszFactor(j, complex(re, im), _factor_coeffs(f["R"], j, base_dir)))
    return RieszTriple(factors, obj["delta"])


def monomial_triple(J, a, delta=None):
    """Balanced-monomial factors at the given degrees; delta defaults to the smallest L2 norm."""
    factors = [RieszFactor(j, complex(ak), rw.balanced_monomial(j)) for j, ak in zip(J, a)]
    if delta is None:
        delta = min(rw.l2_norm(f.coeffs) for f in factors) if factors else 0.5
    return RieszTriple(factors, delta)


# --------------------------------------------------------------- validation --

@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple
    per_factor: tuple

    @property
    def valid(self):
        return not self.violations

    def kinds(self):
        return sorted({v.kind for v in self.violations})

    def to_json(self):
        return {"valid": self.valid,
                "violations": [v.__dict__ for v in self.violations],
                "per_factor": list(self.per_factor)}


def validate(triple, depth=rw.DEFAULT_DEPTH):
    out = []
    per = []
    if not 0 < triple.delta < 1:
        out.append(Violation("delta", -1, f"delta={triple.delta} outside (0, 1)"))
    J = triple.J
    for k in range(len(J) - 1):
        if J[k + 1] < circle.LACUNARITY * J[k]:
            out.append(Violation("lacunarity", k + 1, f"j_{k + 2}={J[k + 1]} < 3 j_{k + 1}={3 * J[k]}"))
    for k, f in enumerate(triple.factors):
        if f.j < 1:
            out.append(Violation("degree", k, f"degree {f.j} < 1"))
        if abs(f.a) >= 1:
            out.append(Violation("coefficient", k, f"|a_{k + 1}|={abs(f.a):.6g} not < 1"))
        l2 = rw.l2_norm(f.coeffs)
        sup = rw.sup_norm_certify(f.coeffs, depth=depth)
        if sup > 1 + SUP_TOL:
            out.append(Violation("sup_norm", k, f"certified sup {sup:.9g} > 1 + {SUP_TOL:g}"))
        if l2 < triple.delta:
            out.append(Violation("l2_norm", k, f"||R||_2={l2:.6g} < delta={triple.delta:.6g}"))
        per.append({"j": f.j, "l2_norm": l2, "sup_bound": sup,
                    "delta_achieved": l2 / sup if sup > 0 else 0.0})
    return ValidationReport(tuple(out), tuple(per))


# ---------------------------------------------------------- partial products --

@dataclass(frozen=True)
class SpherePartialProduct:
    triple: RieszTriple
    K: int
    poly: MonomialPoly

    def mass(self):
        return sphere_inner_product(self.poly, MonomialPoly.constant(1.0)).real

    def is_real(self, tol=1e-12):
        return self.poly.is_real(tol)

    def density(self, z):
        return self.poly.evaluate(np.atleast_2d(z)).real


def factor_poly(f):
    """1 + (a R + conj(a R)) / 2 as a MonomialPoly."""
    aR = f.R.poly * (f.a / 2)
    return MonomialPoly.constant(1.0) + aR + aR.conj()


def partial_product(triple, K):
    if not 0 <= K <= len(triple):
        raise ValueError(f"K={K} outside 0..{len(triple)}")
    out = MonomialPoly.constant(1.0)
    for f in triple.factors[:K]:
        out = out * factor_poly(f)
    return SpherePartialProduct(triple, K, out)


def factored_density(triple, K, z):
    """prod_{k<=K} (1 + Re(a_k R_k(z))), evaluated factor by factor."""
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    out = np.ones(z.shape[0])
    for f in triple.factors[:K]:
        out *= 1 + (f.a * f.evaluate_R(z)).real
    return out


# ----------------------------------------------------------------- spectra --

def gamma_set(J, k):
    """Gamma_k = {+-j_k + sum_{l<k} eps_l j_l}, as signed combinations of length k."""
    J = [int(j) for j in J]
    if not 1 <= k <= len(J):
        raise ValueError(f"k={k} outside 1..{len(J)}")
    out = []
    for top in (1, -1):
        for eps in iproduct((-1, 0, 1), repeat=k - 1):
            e = tuple(eps) + (top,)
            out.append(SignedCombination(e, sum(x * j for x, j in zip(e, J))))
    return out


def _signed_factor(f, e):
    aR = f.R.poly * (f.a / 2)
    return aR if e == 1 else aR.conj()


def gamma_term(triple, eps):
    """The part of any partial product with K >= len(eps) living in p - q = gamma.

    It is (a_k R_k or its conjugate) / 2 times the same kind of factor for every
    l < k with eps_l != 0; the empty product is one.
    """
    eps = tuple(eps.eps) if isinstance(eps, SignedCombination) else tuple(eps)
    if eps[-1] not in (1, -1):
        raise ValueError("the top sign must be +-1")
    out = MonomialPoly.constant(1.0)
    for f, e in zip(triple.factors, eps):
        if e:
            out = out * _signed_factor(f, e)
    return out


def gamma_projection_mass(triple, eps):
    term = gamma_term(triple, eps)
    return float(sphere_inner_product(term, term).real)


def gamma_mass_bound(triple, eps):
    eps = tuple(eps.eps) if isinstance(eps, SignedCombination) else tuple(eps)
    return float(np.prod([(abs(f.a) / 2) ** 2 for f, e in zip(triple.factors, eps) if e]))


def allowed_differences(J, K):
    """{0} union Gamma_1 ... Gamma_K, as a set of p - q values."""
    out = {0}
    for k in range(1, K + 1):
        out.update(c.gamma for c in gamma_set(J, k))
    return out


def banded_epsilon(J, K=None):
    """A lower bound for |p/q - 1| over the spectrum off (0, 0).

    A component with p - q in Gamma_k has |p - q| >= j_k - sum_{l<k} j_l and
    q <= p + q <= sum_{l<=k} j_l; q = 0 components are at infinite distance.
    """
    J = [int(j) for j in J]
    K = len(J) if K is None else K
    best = math.inf
    below = 0
    for j in J[:K]:
        best = min(best, (j - below) / (below + j))
        below += j
    return best


def observed_band(dec, tol=1e-20):
    """min |p/q - 1| over the nonzero spectrum of a decomposition (q >= 1, (p, q) != (0, 0))."""
    vals = [abs(p / q - 1) for p, q in dec.spectrum(tol) if q > 0]
    return min(vals) if vals else math.inf


# ------------------------------------------------------------------ bounds --

@dataclass(frozen=True)
class SphereDimensionReport:
    alpha0: float
    energy_lb: float
    hausdorff_lb: float
    aw22_floor: float
    simplified_term: float
    simplified_lb: float
    lower_bound: float
    banded_epsilon: float
    n: int
    K: int
    window: int
    method: str

    def to_json(self):
        return dict(self.__dict__)


def dimension_bounds(J, a, K=None, window=None, method="extrapolate", n=N_DIM):
    K, window = circle._window(K, window, len(J))
    al = circle.alpha0(J, a, K, window, method)
    st = circle.simplified_term(J, a, K, window, method)
    top = 2 * n - 1
    return SphereDimensionReport(
        alpha0=al, energy_lb=top - al, hausdorff_lb=top - al, aw22_floor=float(2 * n - 2),
        simplified_term=st, simplified_lb=top - st,
        lower_bound=max(top - al, 2 * n - 2, top - st),
        banded_epsilon=banded_epsilon(J, K), n=n, K=K, window=window, method=method)


def bounds(triple, K=None, window=None, method="extrapolate"):
    return dimension_bounds(triple.J, triple.a, K, window, method)


# ------------------------------------------------------------- MC energies --

def energy_constant(t):
    """E |x - y|^-t for independent uniform x, y on S^3."""
    return math.exp((2 - t) * math.log(2) + gammaln((3 - t) / 2)
                    - 0.5 * math.log(math.pi) - gammaln(3 - t / 2))


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    pairs: int
    method: str

    def to_json(self):
        return dict(self.__dict__)


def _as_real4(z):
    return np.concatenate([z.real, z.imag], axis=1)


def _as_complex2(x):
    return x[:, :2] + 1j * x[:, 2:]


def _partner(x, t, rng):
    """y at Riesz-weighted angular distance from each row of x.

    With u = sin^2(theta / 2) ~ Beta((3 - t)/2, 3/2) and a uniform direction
    orthogonal to x, the pair (x, y) has density |x - y|^-t / Z_t.
    """
    u = rng.beta((3 - t) / 2, 1.5, size=x.shape[0])
    g = rng.standard_normal(x.shape)
    g -= np.sum(g * x, axis=1, keepdims=True) * x
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    cos = (1 - 2 * u)[:, None]
    sin = (2 * np.sqrt(u * (1 - u)))[:, None]
    return cos * x + sin * g


def mc_energy(product, t, pairs, seed, method="importance", chunk=MC_CHUNK):
    """Monte Carlo t-energy of the density against sigma x sigma.

    ``importance`` draws y from the Riesz kernel around x, so each sample is
    Z_t f(x) f(y); ``uniform`` averages f(x) f(y) |x - y|^-t over independent
    pairs (its variance is infinite once t >= 3/2).
    """
    if not 0 < t < 3:
        raise ValueError("t must lie in (0, 3)")
    if method not in ("importance", "uniform"):
        raise ValueError(f"unknown method {method!r}")
    density = product.density if hasattr(product, "density") else product
    nchunks = -(-int(pairs) // chunk)
    streams = np.random.SeedSequence(seed).spawn(nchunks)
    zt = energy_constant(t)
    mean = m2 = 0.0
    done = 0
    for idx, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        m = min(chunk, int(pairs) - idx * chunk)
        x = _as_real4(uniform_sphere(m, rng))
        if method == "importance":
            y = _partner(x, t, rng)
            vals = zt * density(_as_complex2(x)) * density(_as_complex2(y))
        else:
            y = _as_real4(uniform_sphere(m, rng))
            dist = np.linalg.norm(x - y, axis=1)
            vals = density(_as_complex2(x)) * density(_as_complex2(y)) * dist ** (-t)
        # merge chunk mean and squared deviations (Chan et al.)
        cm = float(vals.mean())
        cm2 = float(np.sum((vals - cm) ** 2))
        total = done + m
        delta = cm - mean
        mean += delta * m / total
        m2 += cm2 + delta * delta * done * m / total
        done = total
    var = m2 / max(done - 1, 1)
    return MCEstimate(mean, math.sqrt(var / done), done, method)


# ------------------------------------------------------------------- slices --

def slice_spec(triple, xi, K=None):
    """Circle spec of lambda -> Pi(lambda xi): c_k = a_k R_k(xi)."""
    xi = np.asarray(xi, dtype=np.complex128).ravel()
    if abs(np.linalg.norm(xi) - 1) > 1e-12:
        raise ValueError("xi must lie on the unit sphere")
    K = len(triple) if K is None else K
    c = [f.a * complex(f.evaluate_R(xi[None, :])[0]) for f in triple.factors[:K]]
    return CircleRieszSpec(triple.J[:K], c)


@dataclass(frozen=True)
class DisintegrationResult:
    lhs: complex
    rhs: complex
    stderr: float
    slices: int

    @property
    def discrepancy(self):
        return abs(self.lhs - self.rhs)

    def to_json(self):
        return {"lhs": [self.lhs.real, self.lhs.imag], "rhs": [self.rhs.real, self.rhs.imag],
                "stderr": self.stderr, "slices": self.slices}


def _slice_pairings(triple, K, f, xi):
    """int_T f(lambda xi) dPi_xi(lambda) for every row of xi.

    f(lambda xi) = sum_k F_xi(k) lambda^k and the slice coefficient at -k is
    read off the unique signed representation of -k.
    """
    n = f.n
    weight = f.alpha.sum(axis=1) - f.beta.sum(axis=1)
    c = np.stack([fa.a * fa.evaluate_R(xi) for fa in triple.factors[:K]]) if K else None
    out = np.zeros(xi.shape[0], dtype=np.complex128)
    for k in np.unique(weight):
        rows = weight == k
        sub = MonomialPoly(f.exps[rows], f.coeffs[rows], n=n)
        vals_f = sub.evaluate(xi)
        rep = unique_representation(triple.J, K, -int(k))
        if rep is None:
            continue
        coef = np.ones(xi.shape[0], dtype=np.complex128)
        for idx, e in enumerate(rep.eps):
            if e == 1:
                coef *= c[idx] / 2
            elif e == -1:
                coef *= np.conj(c[idx]) / 2
        out += vals_f * coef
    return out


def disintegration_check(triple, K, f, slice_count, seed):
    """Compare <Pi_K f, 1>_sigma with the average over random slices."""
    if not 0 <= K <= len(triple):
        raise ValueError(f"K={K} outside 0..{len(triple)}")
    prod = partial_product(triple, K)
    lhs = sphere_inner_product(prod.poly * f, MonomialPoly.constant(1.0))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    xi = uniform_sphere(int(slice_count), rng)
    per = _slice_pairings(triple, K, f, xi)
    mean = per.mean()
    # complex variance E|x - mean|^2, so stderr bounds the modulus of the error
    err = float(np.sqrt(np.var(per, ddof=1) / per.shape[0])) if per.shape[0] > 1 else 0.0
    return DisintegrationResult(complex(lhs), complex(mean), err, int(slice_count))


def spectrum_report(product, tol=1e-20):
    """Decompose and report Parseval, structure and band checks."""
    dec = decompose(product.poly)
    allowed = allowed_differences(product.triple.J, product.K)
    norm_sq = float(sphere_inner_product(product.poly, product.poly).real)
    total = dec.total_norm_sq()
    off = dec.mass_where(lambda p, q: (p - q) not in allowed)
    return {
        "norm_sq": norm_sq,
        "spectral_norm_sq": total,
        "parseval_error": abs(total - norm_sq),
        "off_structure_mass": off,
        "observed_band": observed_band(dec, tol),
        "support_size": len(dec.spectrum(tol)),
    }, dec
