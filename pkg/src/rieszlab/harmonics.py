"""
Complex spherical harmonics H(p, q) on S^3 (n = 2).

H(p, q) is the orthogonal complement, inside the span of bidegree-(p, q)
monomials restricted to the sphere, of |z|^2 times the bidegree-(p-1, q-1)
monomials. The torus action z -> (e^{i s} z_1, e^{i u} z_2) splits both
spans into weight blocks w = alpha - beta; each block of H(p, q) is one
dimensional, one for every w_1 in [-q, p]. Block complements are computed
from exact rational Gram matrices, then the whole family is orthonormalised
by a symmetric (Loewdin) factorisation of its floating-point Gram matrix.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .poly import BidegreePoly, MonomialPoly, sphere_inner_product, sphere_moment

N_DIM = 2
RANK_CUTOFF = 1e-12
CACHE_VERSION = 1


def hpq_dimension(p, q, n=2):
    """dim H(p, q) in C^n."""
    if p < 0 or q < 0:
        raise ValueError("bidegree must be nonnegative")
    if n == 1:
        return 1 if p == 0 or q == 0 else 0
    num = (p + q + n - 1) * math.factorial(p + n - 2) * math.factorial(q + n - 2)
    den = math.factorial(p) * math.factorial(q) * math.factorial(n - 1) * math.factorial(n - 2)
    return num // den


def _block_monomials(p, q, m1):
    """Exponents (a1, a2, b1, b2) of bidegree (p, q) with a1 - b1 = m1."""
    lo, hi = max(0, m1), min(p, q + m1)
    return [(a1, p - a1, a1 - m1, q - a1 + m1) for a1 in range(lo, hi + 1)]


def _nullspace_exact(rows, ncols):
    """Rational basis vector of the one-dimensional null space of integer ``rows``.

    Fraction-free (Bareiss) elimination to echelon form, then rational back
    substitution with the free variable set to one.
    """
    mat = [list(r) for r in rows]
    nrows = len(mat)
    pivots = []
    prev = 1
    r = 0
    for col in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        for i in range(r + 1, nrows):
            mat[i] = [(mat[r][col] * mat[i][c] - mat[i][col] * mat[r][c]) // prev
                      for c in range(ncols)]
        prev = mat[r][col]
        pivots.append(col)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    if len(free) != 1:
        raise np.linalg.LinAlgError(f"block complement has dimension {len(free)}, expected 1")
    vec = [Fraction(0)] * ncols
    vec[free[0]] = Fraction(1)
    for i in range(len(pivots) - 1, -1, -1):
        col = pivots[i]
        acc = sum(mat[i][c] * vec[c] for c in range(col + 1, ncols))
        vec[col] = Fraction(-acc) / mat[i][col]
    return vec


@lru_cache(maxsize=None)
def block_element(p, q, m1):
    """Unit-norm element of H(p, q) with weight (m1, p - q - m1).

    Returns (exponents, coefficients) with real coefficients.
    """
    if not -q <= m1 <= p:
        raise ValueError(f"weight {m1} outside [-{q}, {p}]")
    mons = _block_monomials(p, q, m1)
    index = {e: i for i, e in enumerate(mons)}
    # Gram of the block times (p+q+1)!: <e_s, e_t> = moment(alpha_s + beta_t)
    fac = math.factorial
    gram = [[fac(s[0] + t[2]) * fac(s[1] + t[3]) for t in mons] for s in mons]
    lower = _block_monomials(p - 1, q - 1, m1) if p > 0 and q > 0 else []
    # (|z|^2 g)^T G is the sum of the Gram rows of z_1 zbar_1 g and z_2 zbar_2 g
    rows = []
    for a1, a2, b1, b2 in lower:
        r1 = gram[index[(a1 + 1, a2, b1 + 1, b2)]]
        r2 = gram[index[(a1, a2 + 1, b1, b2 + 1)]]
        rows.append([x + y for x, y in zip(r1, r2)])
    if rows:
        null = _nullspace_exact(rows, len(mons))
    else:
        if len(mons) != 1:
            raise np.linalg.LinAlgError("unexpected block size without lower monomials")
        null = [Fraction(1)]
    norm2 = sum(null[s] * null[t] * gram[s][t] for s in range(len(mons))
                for t in range(len(mons))) / fac(p + q + 1)
    scale = 1.0 / math.sqrt(norm2)
    coeffs = np.array([float(x) * scale for x in null])
    return np.array(mons, dtype=np.int64), coeffs


@dataclass(frozen=True)
class HpqBasis:
    p: int
    q: int
    n: int
    basis: tuple
    weights: tuple

    def __len__(self):
        return len(self.basis)


def _lowdin(polys):
    """Symmetric orthonormalisation; raises on numerical rank deficiency."""
    k = len(polys)
    gram = np.zeros((k, k), dtype=np.complex128)
    wts = [{tuple(w) for w in b.weights()} for b in polys]
    for i in range(k):
        for j in range(i, k):
            if wts[i] & wts[j]:
                gram[i, j] = sphere_inner_product(polys[i], polys[j])
                gram[j, i] = np.conj(gram[i, j])
    d = np.sqrt(np.real(np.diag(gram)))
    corr = gram / np.outer(d, d)
    vals, vecs = np.linalg.eigh(corr)
    if vals.min() < RANK_CUTOFF:
        raise np.linalg.LinAlgError(f"Gram rank deficient (min eigenvalue {vals.min():.3e})")
    inv_sqrt = (vecs * vals ** -0.5) @ vecs.conj().T
    mix = inv_sqrt / d[:, None]
    out = []
    for col in range(k):
        acc = MonomialPoly(n=polys[0].n)
        for row in range(k):
            if abs(mix[row, col]) > 0:
                acc = acc + polys[row] * mix[row, col]
        out.append(acc)
    return out


@lru_cache(maxsize=None)
def _build_basis(p, q):
    weights = tuple(range(-q, p + 1))
    raw = [MonomialPoly(*block_element(p, q, m1)) for m1 in weights]
    ortho = _lowdin(raw)
    basis = tuple(BidegreePoly(p, q, b) for b in ortho)
    return HpqBasis(p, q, N_DIM, basis, weights)


def build_basis(p, q, cache=None):
    """Orthonormal basis of H(p, q) for n = 2; ``cache`` is an optional BasisCache."""
    if p < 0 or q < 0:
        raise ValueError("bidegree must be nonnegative")
    if cache is not None:
        hit = cache.get(p, q)
        if hit is not None:
            return hit
    basis = _build_basis(p, q)
    if cache is not None:
        cache.put(basis)
    return basis


class BasisCache:
    """JSON file of built bases keyed by "p,q"."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.entries = {}
        self.used = set()
        if self.path and self.path.exists():
            data = json.loads(self.path.read_text())
            if data.get("version") == CACHE_VERSION:
                self.entries = data["bases"]

    def get(self, p, q):
        rec = self.entries.get(f"{p},{q}")
        if rec is None:
            return None
        self.used.add((p, q))
        basis = tuple(BidegreePoly(p, q, MonomialPoly.from_records(b)) for b in rec["basis"])
        return HpqBasis(p, q, N_DIM, basis, tuple(rec["weights"]))

    def put(self, hb):
        self.used.add((hb.p, hb.q))
        self.entries[f"{hb.p},{hb.q}"] = {
            "weights": list(hb.weights),
            "basis": [b.poly.to_records() for b in hb.basis],
        }

    def save(self):
        if self.path:
            self.path.write_text(json.dumps({"version": CACHE_VERSION, "bases": self.entries},
                                            sort_keys=True))

    def describe(self):
        return {"version": CACHE_VERSION,
                "used": [list(k) for k in sorted(self.used)]}


# ------------------------------------------------------------ projections ---

@dataclass(frozen=True)
class SpectralComponent:
    projection: BidegreePoly
    norm_sq: float


@dataclass(frozen=True)
class SpectralDecomposition:
    entries: dict

    def spectrum(self, tol=1e-20):
        return sorted(k for k, v in self.entries.items() if v.norm_sq > tol)

    def total_norm_sq(self):
        return float(sum(v.norm_sq for v in self.entries.values()))

    def mass_where(self, pred):
        return float(sum(v.norm_sq for k, v in self.entries.items() if pred(*k)))

    def by_difference(self):
        """Map p - q -> summed norm_sq."""
        out = {}
        for (p, q), v in self.entries.items():
            out[p - q] = out.get(p - q, 0.0) + v.norm_sq
        return out


def _weight_groups(f):
    w = f.weights()
    groups = {}
    for i, row in enumerate(w):
        groups.setdefault((int(row[0]), int(row[1])), []).append(i)
    return {k: np.array(v) for k, v in groups.items()}


def _coefficient(f, idx, exps, coeffs):
    """<f restricted to rows idx, element (exps, coeffs)> with matching weights."""
    m = f.alpha[idx][:, None, :] + exps[None, :, 2:]
    mom = sphere_moment(m, 2)
    return complex(np.sum(f.coeffs[idx][:, None] * coeffs[None, :] * mom))


def _component(f, p, q, groups):
    coefs, elems = [], []
    for (w1, w2), idx in groups.items():
        if w1 + w2 != p - q or not -q <= w1 <= p:
            continue
        exps, coeffs = block_element(p, q, w1)
        c = _coefficient(f, idx, exps, coeffs)
        coefs.append(c)
        elems.append((exps, coeffs))
    if not coefs:
        return BidegreePoly(p, q, MonomialPoly(n=2)), 0.0
    exps = np.vstack([e for e, _ in elems])
    cs = np.concatenate([c * co for c, (_, co) in zip(coefs, elems)])
    return BidegreePoly(p, q, MonomialPoly(exps, cs)), float(sum(abs(c) ** 2 for c in coefs))


def _require_n2(f):
    if f.n != N_DIM:
        raise ValueError("harmonic machinery is implemented for n = 2 only")


def project(f, p, q):
    """H(p, q)-projection of f as a BidegreePoly.

    The weight-block elements are exactly the Loewdin-orthonormalised basis
    (their Gram matrix is diagonal), so sum_b <f, b> b is computed blockwise.
    """
    _require_n2(f)
    proj, _ = _component(f, p, q, _weight_groups(f))
    return proj


def decompose(f):
    _require_n2(f)
    if len(f) == 0:
        return SpectralDecomposition({})
    groups = _weight_groups(f)
    cand = set()
    for P, Q in {(int(a), int(b)) for a, b in f.bidegrees()}:
        for l in range(min(P, Q) + 1):
            cand.add((P - l, Q - l))
    entries = {}
    for p, q in sorted(cand):
        proj, nsq = _component(f, p, q, groups)
        entries[(p, q)] = SpectralComponent(proj, nsq)
    return SpectralDecomposition(entries)


def reproducing_kernel(p, q, z, zeta):
    """K_{p,q}(z, zeta) = sum_b b(z) conj(b(zeta)); z may hold many points."""
    hb = build_basis(p, q)
    z = np.asarray(z, dtype=np.complex128)
    zeta = np.asarray(zeta, dtype=np.complex128)
    total = 0
    for b in hb.basis:
        total = total + b.evaluate(z) * np.conj(b.evaluate(zeta))
    return total


def kernel_polynomial(p, q, zeta):
    """K_{p,q}(., zeta) as a polynomial in z."""
    hb = build_basis(p, q)
    acc = MonomialPoly(n=2)
    for b in hb.basis:
        acc = acc + b.poly * np.conj(b.evaluate(zeta))
    return acc


@dataclass(frozen=True)
class MultiplicationReport:
    L: int
    window: tuple
    off_window_mass: float
    window_mass: dict

    @property
    def ok(self):
        return self.off_window_mass < 1e-10


def multiplication_window(p, q, r, s):
    L = min(p, s) + min(q, r)
    return L, tuple((p + r - l, q + s - l) for l in range(L + 1))


def verify_multiplication_rule(f, g):
    """Check that f g lies in sum_{l <= L} H(p+r-l, q+s-l), L = min(p,s) + min(q,r)."""
    L, window = multiplication_window(f.p, f.q, g.p, g.q)
    dec = decompose(f.poly * g.poly)
    inside = set(window)
    off = dec.mass_where(lambda a, b: (a, b) not in inside)
    masses = {k: dec.entries[k].norm_sq if k in dec.entries else 0.0 for k in window}
    return MultiplicationReport(L, window, off, masses)


def sphere_energy_sum(dec, t, n=2):
    """|mu_00|^2 + sum_{j>=1} j^(t-2n+1) sum_{p+q=j} |mu_pq|^2."""
    if not 0 < t < 2 * n - 1:
        raise ValueError(f"t must lie in (0, {2 * n - 1})")
    total = 0.0
    for (p, q), comp in dec.entries.items():
        j = p + q
        total += comp.norm_sq if j == 0 else j ** (t - 2 * n + 1) * comp.norm_sq
    return float(total)
