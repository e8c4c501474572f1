"""
Classical Riesz products on the circle.

A spec is a lacunary frequency list J (j_{k+1} >= 3 j_k) together with
coefficients c_k in the closed unit disk. Its N-th partial product is the
trigonometric polynomial

    prod_{k <= N} (1 + (c_k lambda^{j_k} + conj(c_k) lambda^{-j_k}) / 2),

whose coefficient at gamma is indexed so that it multiplies lambda^gamma.
Lacunarity makes every gamma a signed sum of the j_k in at most one way,
which is what ``fourier_coefficient`` exploits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import kernels
from .poly import LaurentPoly

LACUNARITY = 3
DENSITY_TOL = 1e-10


@dataclass(frozen=True)
class CircleRieszSpec:
    J: tuple
    c: np.ndarray = field(compare=False)

    def __post_init__(self):
        J = tuple(int(j) for j in self.J)
        c = np.asarray(self.c, dtype=np.complex128).ravel()
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "c", c)
        if len(J) != len(c):
            raise ValueError(f"J has {len(J)} entries but c has {len(c)}")
        if any(j <= 0 for j in J):
            raise ValueError("frequencies must be positive")
        for k in range(len(J) - 1):
            if J[k + 1] < LACUNARITY * J[k]:
                raise ValueError(f"lacunarity violated at k={k + 1}: {J[k + 1]} < 3*{J[k]}")
        if np.any(np.abs(c) > 1 + 1e-12):
            raise ValueError("coefficients must satisfy |c_k| <= 1")

    def __len__(self):
        return len(self.J)

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj["J"]), [complex(re, im) for re, im in obj["c"]])

    def to_json(self):
        return {"J": list(self.J), "c": [[float(x.real), float(x.imag)] for x in self.c]}


@dataclass(frozen=True)
class SignedCombination:
    eps: tuple
    gamma: int

    def __post_init__(self):
        if any(e not in (-1, 0, 1) for e in self.eps):
            raise ValueError("signs must lie in {-1, 0, 1}")

    def recompute(self, J):
        return sum(e * j for e, j in zip(self.eps, J))


@dataclass(frozen=True)
class CircleDimensionReport:
    alpha0: float
    energy_dim_lb: float
    hausdorff_lb: float
    simplified_term: float
    simplified_lb: float
    K: int
    window: int
    method: str

    def to_json(self):
        return dict(self.__dict__)


def _check_n(spec, n):
    if not 0 <= n <= len(spec):
        raise ValueError(f"N={n} outside 0..{len(spec)}")


def partial_product(spec, n):
    """Expanded N-factor Riesz product as a LaurentPoly."""
    _check_n(spec, n)
    out = LaurentPoly.constant(1.0)
    for j, c in zip(spec.J[:n], spec.c[:n]):
        out = out * LaurentPoly([-j, 0, j], [np.conj(c) / 2, 1.0, c / 2])
    return out


def unique_representation(J, K, gamma):
    """Signs eps with sum_{l<=K} eps_l j_l = gamma, or None.

    Greedy from the top index; with ratio >= 3 the tail sum is below j_K / 2
    so the sign choice at every step is forced.
    """
    J = [int(j) for j in J[:K]]
    if abs(gamma) > sum(J):
        return None
    rest = int(gamma)
    eps = [0] * len(J)
    for idx in range(len(J) - 1, -1, -1):
        j = J[idx]
        best = min((-1, 0, 1), key=lambda e: abs(rest - e * j))
        eps[idx] = best
        rest -= best * j
    if rest != 0:
        return None
    return SignedCombination(tuple(eps), int(gamma))


def fourier_coefficient(spec, n, gamma):
    _check_n(spec, n)
    rep = unique_representation(spec.J, n, gamma)
    if rep is None:
        return 0j
    value = 1 + 0j
    for e, c in zip(rep.eps, spec.c):
        if e == 1:
            value *= c / 2
        elif e == -1:
            value *= np.conj(c) / 2
    return complex(value)


def signed_sums(J):
    """All 3^K values sum eps_l j_l, in itertools.product order."""
    J = np.asarray(J, dtype=np.int64)
    sums = np.zeros(1, dtype=np.int64)
    for j in J:
        sums = (sums[:, None] + np.array([-j, 0, j])[None, :]).ravel()
    return sums


def _as_coeff_arrays(coeffs):
    if isinstance(coeffs, LaurentPoly):
        return coeffs.freqs, coeffs.coeffs
    items = sorted(coeffs.items())
    return (np.array([k for k, _ in items], dtype=np.int64),
            np.array([v for _, v in items], dtype=np.complex128))


def energy_fourier(coeffs, t, cutoff):
    """|c(0)|^2 + sum_{0<|k|<=cutoff} |k|^(t-1) |c(k)|^2."""
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    k, c = _as_coeff_arrays(coeffs)
    mass = np.abs(c) ** 2
    absk = np.abs(k)
    zero = mass[absk == 0].sum()
    sel = (absk > 0) & (absk <= cutoff)
    return float(zero + np.sum(absk[sel].astype(np.float64) ** (t - 1) * mass[sel]))


def energy_direct(density, t, m):
    """Off-diagonal M x M Riemann sum of the chordal t-energy of f dm."""
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    vals = density.grid_values(m)
    if np.max(np.abs(vals.imag)) > 1e-9:
        raise ValueError("density is not real-valued")
    f = vals.real
    if f.min() < -DENSITY_TOL:
        raise ValueError(f"density negative on grid (min {f.min():.3e})")
    return kernels.grid_pair_energy(f, t)


# ------------------------------------------------------- dimension bounds ---

def _window(K, window, length):
    if K is None:
        K = length
    if K > length:
        raise ValueError(f"K={K} exceeds sequence length {length}")
    if window is None:
        window = (K + 1) // 2
    if window < 1 or window > K:
        raise ValueError(f"empty window: window={window}, K={K}")
    return K, window


def _limsup(values, logj, method):
    """Finite surrogate for limsup of ``values``; -inf entries are skipped.

    ``max`` takes the trailing maximum. ``extrapolate`` fits
    value = L + C / log j by least squares and returns L; sequences of the
    form (N_k) / log j_k with N_k affine in log j_k are recovered exactly.
    """
    values = np.asarray(values, dtype=np.float64)
    logj = np.asarray(logj, dtype=np.float64)
    ok = np.isfinite(values) & (logj > 0)
    if not ok.any():
        return -math.inf
    v, x = values[ok], 1.0 / logj[ok]
    if method == "max":
        return float(v.max())
    if method != "extrapolate":
        raise ValueError(f"unknown limsup method {method!r}")
    if v.size < 2 or np.ptp(x) == 0:
        return float(v[-1])
    slope, intercept = np.polyfit(x, v, 1)
    return float(intercept)


def alpha0_terms(J, a):
    """Per-index ratios [log(|a_k|^2/2) + sum_{l<k} log(1+|a_l|^2/2)] / log j_k."""
    mod2 = np.abs(np.asarray(a, dtype=np.complex128)) ** 2
    acc = np.concatenate([[0.0], np.cumsum(np.log1p(mod2 / 2))[:-1]])
    with np.errstate(divide="ignore"):
        head = np.log(mod2 / 2)
    logj = np.array([math.log(j) for j in J], dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(logj > 0, (head + acc) / np.where(logj > 0, logj, 1.0), -np.inf)
    terms[~np.isfinite(head)] = -np.inf
    return terms, logj


def alpha0(J, a, K=None, window=None, method="extrapolate"):
    """Deficit alpha_0 = max(0, limsup of ``alpha0_terms``) over a trailing window."""
    K, window = _window(K, window, len(J))
    terms, logj = alpha0_terms(J[:K], a[:K])
    lo = K - window
    return max(0.0, _limsup(terms[lo:], logj[lo:], method))


def simplified_term(J, a, K=None, window=None, method="extrapolate"):
    """limsup of sum_{l<k} |a_l|^2 / (2 log j_k) over the same window."""
    K, window = _window(K, window, len(J))
    mod2 = np.abs(np.asarray(a[:K], dtype=np.complex128)) ** 2
    acc = np.concatenate([[0.0], np.cumsum(mod2)[:-1]])
    logj = np.array([math.log(j) for j in J[:K]], dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(logj > 0, acc / (2 * np.where(logj > 0, logj, 1.0)), -np.inf)
    lo = K - window
    return max(0.0, _limsup(terms[lo:], logj[lo:], method))


def simplified_bound(J, a, K=None, window=None, ambient=1.0, method="extrapolate"):
    return ambient - simplified_term(J, a, K, window, method)


def dimension_report(J, a, K=None, window=None, method="extrapolate"):
    K, window = _window(K, window, len(J))
    al = alpha0(J, a, K, window, method)
    st = simplified_term(J, a, K, window, method)
    return CircleDimensionReport(alpha0=al, energy_dim_lb=1 - al, hausdorff_lb=1 - al,
                                 simplified_term=st, simplified_lb=1 - st,
                                 K=K, window=window, method=method)


# ---------------------------------------------------------------- sampling ---

SAMPLE_GRID = 1 << 16


def sample_density(dens, count, rng, grid=SAMPLE_GRID):
    """Angles in [0, 2 pi) drawn from a nonnegative LaurentPoly density.

    The density is frozen at cell midpoints of a ``grid``-point partition and
    inverted through its cumulative sum; within a cell the angle is uniform.
    """
    h = 2 * np.pi / grid
    if dens.max_frequency() < grid // 2:
        # half-cell shift turns midpoint values into an FFT grid evaluation
        shifted = LaurentPoly(dens.freqs, dens.coeffs * np.exp(1j * dens.freqs * h / 2))
        vals = shifted.grid_values(grid).real
    else:
        vals = dens.evaluate(np.exp(1j * (np.arange(grid) + 0.5) * h)).real
    if vals.min() < -DENSITY_TOL:
        raise ValueError("density is negative on the sampling grid")
    cdf = np.cumsum(np.clip(vals, 0.0, None))
    cdf /= cdf[-1]
    u = rng.random(count)
    cell = np.minimum(np.searchsorted(cdf, u, side="right"), grid - 1)
    return (cell + rng.random(count)) * h


def sample(spec, n, count, seed, grid=SAMPLE_GRID):
    """Angles drawn from the N-factor partial product."""
    return sample_density(partial_product(spec, n), count, np.random.default_rng(seed), grid)


def all_sign_vectors(K):
    return list(product((-1, 0, 1), repeat=K))
