"""
Sample-based dimension estimates and pluriharmonic measures on tori.

Samples live on one of three manifolds: the circle (angles), the sphere S^3
(unit vectors of R^4) or the flat torus T^n (angle tuples). Distances are
chordal on the circle, Euclidean in R^4 on the sphere and flat with period
2 pi on the torus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np
from scipy.stats import linregress

from . import kernels
from .circle import sample_density
from .poly import LaurentPoly, uniform_sphere

TWO_PI = 2 * np.pi
MANIFOLDS = ("circle", "sphere", "torus")


class DegenerateFit(ValueError):
    pass


# ----------------------------------------------------------------- samples --

@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray = field(compare=False)
    manifold: str
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.manifold not in MANIFOLDS:
            raise ValueError(f"unknown manifold {self.manifold!r}")
        pts = np.asarray(self.points, dtype=np.float64)
        if self.manifold == "circle":
            pts = pts.reshape(-1)
        elif pts.ndim == 1:
            pts = pts[:, None]
        object.__setattr__(self, "points", pts)
        self.check()

    def __len__(self):
        return self.points.shape[0]

    def check(self, tol=1e-12):
        p = self.points
        if self.manifold == "sphere":
            if p.shape[1] != 4:
                raise ValueError("sphere samples must be points of R^4")
            if p.size and np.max(np.abs(np.linalg.norm(p, axis=1) - 1)) > tol:
                raise ValueError("sphere samples off the unit sphere")
        elif p.size and (p.min() < -tol or p.max() >= TWO_PI + tol):
            raise ValueError("angles must lie in [0, 2 pi)")

    def metric_points(self):
        """Coordinates and period handed to the pair-count kernel."""
        if self.manifold == "circle":
            return np.stack([np.cos(self.points), np.sin(self.points)], axis=1), 0.0
        if self.manifold == "torus":
            return self.points, TWO_PI
        return self.points, 0.0

    def box_coordinates(self):
        """Coordinates scaled into [0, 1) for box counting."""
        if self.manifold == "circle":
            return (self.points % TWO_PI)[:, None] / TWO_PI
        if self.manifold == "torus":
            return (self.points % TWO_PI) / TWO_PI
        return np.clip((self.points + 1) / 2, 0.0, np.nextafter(1.0, 0.0))


def uniform_circle_samples(count, seed):
    rng = np.random.default_rng(seed)
    return SampleSet(rng.random(count) * TWO_PI, "circle", {"source": "uniform", "seed": seed})


def uniform_sphere_samples(count, seed):
    z = uniform_sphere(count, np.random.default_rng(seed))
    return SampleSet(np.concatenate([z.real, z.imag], axis=1), "sphere",
                     {"source": "uniform", "seed": seed})


def uniform_torus_samples(count, n, seed):
    rng = np.random.default_rng(seed)
    return SampleSet(rng.random((count, n)) * TWO_PI, "torus", {"source": "uniform", "seed": seed})


# -------------------------------------------------------------- estimators --

@dataclass(frozen=True)
class DimensionEstimate:
    method: str
    value: float
    stderr: float
    scale_range: tuple
    scales: tuple = ()
    counts: tuple = ()

    def to_json(self):
        return {"method": self.method, "value": self.value, "stderr": self.stderr,
                "scale_range": list(self.scale_range)}

    def table(self):
        return list(zip(self.scales, self.counts))


def _fit(x, y, method, rng_used, scales, counts):
    if len(x) < 2:
        raise DegenerateFit(f"{method}: fewer than two usable scales")
    if np.ptp(y) == 0:
        slope, err = 0.0, 0.0
    else:
        res = linregress(x, y)
        slope, err = float(res.slope), float(res.stderr)
    return DimensionEstimate(method, max(slope, 0.0), err, rng_used,
                             tuple(float(s) for s in scales), tuple(float(c) for c in counts))


def correlation_integral(samples, radii):
    """C(r) = fraction of unordered pairs at distance < r."""
    pts, period = samples.metric_points()
    n = pts.shape[0]
    counts = kernels.pair_count(pts, np.asarray(radii, dtype=np.float64), period)
    return counts / (n * (n - 1) / 2)


def _default_radii(samples):
    if samples.manifold == "torus":
        diam = math.pi * math.sqrt(samples.points.shape[1])
    else:
        diam = 2.0
    return np.geomspace(1e-4, 1.0, 41) * diam


def correlation_dimension(samples, radii=None, min_pairs=100, max_fraction=0.05):
    """Slope of log C(r) against log r.

    Without explicit radii a wide geometric grid is scanned and the fit keeps
    the scales with at least ``min_pairs`` close pairs and C(r) below
    ``max_fraction``; if that leaves fewer than three scales every scale
    with C(r) > 0 is used.
    """
    if len(samples) < 2:
        raise DegenerateFit("need at least two samples")
    auto = radii is None
    radii = _default_radii(samples) if auto else np.asarray(radii, dtype=np.float64)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and increasing")
    corr = correlation_integral(samples, radii)
    npairs = len(samples) * (len(samples) - 1) / 2
    if not np.any(corr > 0):
        raise DegenerateFit("all correlation sums are zero")
    sel = corr > 0
    if auto:
        win = (corr * npairs >= min_pairs) & (corr <= max_fraction)
        if win.sum() >= 3:
            sel = win
    r, c = radii[sel], corr[sel]
    return _fit(np.log(r), np.log(c), "correlation", (float(r[0]), float(r[-1])), radii, corr)


def box_counts(samples, scales):
    """Occupied boxes when every coordinate is cut into m equal pieces."""
    x = samples.box_coordinates()
    out = []
    for m in scales:
        idx = np.minimum((x * m).astype(np.int64), m - 1)
        out.append(np.unique(idx, axis=0).shape[0])
    return np.array(out, dtype=np.int64)


def box_counting(samples, scales=None, saturation=0.125):
    """Slope of log N(m) against log m over box side 1/m.

    Without explicit scales, m runs over powers of two and stops once the
    number of occupied boxes exceeds ``saturation`` times the sample count.
    """
    if len(samples) < 2:
        raise DegenerateFit("need at least two samples")
    if scales is None:
        scales, counts = [], []
        m = 2
        while True:
            cnt = int(box_counts(samples, [m])[0])
            if cnt > saturation * len(samples) or m > 1 << 20:
                break
            scales.append(m)
            counts.append(cnt)
            m *= 2
        scales, counts = np.array(scales), np.array(counts)
    else:
        scales = np.asarray(scales, dtype=np.int64)
        counts = box_counts(samples, scales)
    if len(scales) < 2:
        raise DegenerateFit("box counting: fewer than two unsaturated scales")
    return _fit(np.log(scales), np.log(counts), "box",
                (1.0 / float(scales[-1]), 1.0 / float(scales[0])), scales, counts)


# --------------------------------------------------------- torus measures ---

@dataclass(frozen=True)
class PointMass:
    angle: float = 0.0

    def fourier(self, k):
        return np.exp(-1j * np.asarray(k) * self.angle)

    def support(self, cutoff):
        return np.arange(-cutoff, cutoff + 1)

    def sample(self, count, rng):
        return np.full(count, self.angle % TWO_PI)


@dataclass(frozen=True)
class Lebesgue:

    def fourier(self, k):
        return (np.asarray(k) == 0).astype(np.complex128)

    def support(self, cutoff):
        return np.array([0])

    def sample(self, count, rng):
        return rng.random(count) * TWO_PI


@dataclass(frozen=True)
class Density:
    """Absolutely continuous factor with LaurentPoly density f, f-hat(k) = f.coefficient(k)."""

    poly: LaurentPoly

    def fourier(self, k):
        k = np.asarray(k)
        lookup = dict(zip(self.poly.freqs.tolist(), self.poly.coeffs.tolist()))
        return np.array([lookup.get(int(x), 0j) for x in k.ravel()]).reshape(k.shape)

    def support(self, cutoff):
        f = self.poly.freqs
        return f[np.abs(f) <= cutoff]

    def sample(self, count, rng):
        return sample_density(self.poly, count, rng)


@dataclass(frozen=True)
class TorusMeasureSpec:
    """A probability measure on T^n.

    Either a product of one-dimensional factors, or an absolutely continuous
    measure given by its density's coefficient map {multi-index: value}.
    """

    n: int
    factors: tuple = ()
    joint: dict = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.joint is not None and self.factors:
            raise ValueError("give either factors or a joint coefficient map, not both")
        if self.joint is None and len(self.factors) != self.n:
            raise ValueError(f"{self.n}-torus needs {self.n} factors")
        if self.joint is not None:
            joint = {tuple(int(x) for x in k): complex(v) for k, v in self.joint.items()}
            if any(len(k) != self.n for k in joint):
                raise ValueError("multi-index length must equal n")
            object.__setattr__(self, "joint", joint)
        if abs(self.fourier((0,) * self.n) - 1) > 1e-12:
            raise ValueError("total mass must be one")

    def fourier(self, k):
        k = tuple(int(x) for x in k)
        if self.joint is not None:
            return self.joint.get(k, 0j)
        return complex(np.prod([f.fourier(x) for f, x in zip(self.factors, k)]))

    def support(self, cutoff):
        """Multi-indices with |k_i| <= cutoff where the transform may be nonzero."""
        if self.joint is not None:
            return [k for k in self.joint if max(abs(x) for x in k) <= cutoff]
        return iproduct(*[f.support(cutoff).tolist() for f in self.factors])

    def support_size(self, cutoff):
        if self.joint is not None:
            return len(self.support(cutoff))
        return math.prod(len(f.support(cutoff)) for f in self.factors)

    def fourier_grid(self, cutoff):
        """All transform values on [-cutoff, cutoff]^n as an n-dimensional array."""
        ks = np.arange(-cutoff, cutoff + 1)
        if self.joint is not None:
            out = np.zeros((2 * cutoff + 1,) * self.n, dtype=np.complex128)
            for k, v in self.joint.items():
                if max(abs(x) for x in k) <= cutoff:
                    out[tuple(x + cutoff for x in k)] = v
            return out
        out = np.ones((), dtype=np.complex128)
        for f in self.factors:
            out = np.multiply.outer(out, f.fourier(ks))
        return out

    def sample(self, count, seed):
        rng = np.random.default_rng(seed)
        if self.joint is not None:
            return SampleSet(self._rejection(count, rng), "torus", {"seed": seed})
        cols = [f.sample(count, r) for f, r in
                zip(self.factors, [np.random.default_rng(s) for s in
                                   np.random.SeedSequence(seed).spawn(self.n)])]
        return SampleSet(np.stack(cols, axis=1), "torus", {"seed": seed})

    def _rejection(self, count, rng):
        keys = np.array(list(self.joint), dtype=np.float64)
        vals = np.array(list(self.joint.values()))
        bound = float(np.sum(np.abs(vals)))
        out = []
        have = 0
        while have < count:
            x = rng.random((2 * count, self.n)) * TWO_PI
            dens = (np.exp(1j * x @ keys.T) @ vals).real
            take = x[rng.random(x.shape[0]) * bound < dens]
            out.append(take)
            have += take.shape[0]
        return np.concatenate(out)[:count]


@dataclass(frozen=True)
class PluriharmonicReport:
    pluriharmonic: bool
    max_violation: float
    worst_index: tuple
    cutoff: int
    scanned: int

    def to_json(self):
        return {"pluriharmonic": self.pluriharmonic, "max_violation": self.max_violation,
                "worst_index": list(self.worst_index), "cutoff": self.cutoff,
                "scanned": self.scanned}


def is_pluriharmonic(spec, cutoff, tol=1e-12):
    """Scan every mixed-sign multi-index with |k_i| <= cutoff for a nonzero transform."""
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    grid = np.abs(spec.fourier_grid(cutoff))
    axes = np.meshgrid(*[np.arange(-cutoff, cutoff + 1)] * spec.n, indexing="ij")
    pos = np.zeros(grid.shape, dtype=bool)
    neg = np.zeros(grid.shape, dtype=bool)
    for a in axes:
        pos |= a > 0
        neg |= a < 0
    mixed = pos & neg
    vals = np.where(mixed, grid, 0.0)
    flat = int(np.argmax(vals))
    worst = tuple(int(a.ravel()[flat]) for a in axes) if vals.ravel()[flat] > 0 else ()
    mx = float(vals.max())
    return PluriharmonicReport(mx <= tol, mx, worst, int(cutoff), int(mixed.sum()))


MAX_SUPPORT = 50_000_000


def torus_energy(spec, t, cutoff):
    """sum over 0 < |k| <= cutoff (Euclidean) of |k|^(t-n) |mu-hat(k)|^2."""
    n = spec.n
    if not 0 < t < n:
        raise ValueError(f"t must lie in (0, {n})")
    if spec.support_size(cutoff) > MAX_SUPPORT:
        raise ValueError("transform support too large to enumerate at this cutoff")
    if spec.joint is None:
        supports = [f.support(cutoff) for f in spec.factors]
        grids = np.meshgrid(*supports, indexing="ij")
        k2 = sum(g.astype(np.float64) ** 2 for g in grids)
        mod2 = np.ones((), dtype=np.float64)
        for f, s in zip(spec.factors, supports):
            mod2 = np.multiply.outer(mod2, np.abs(f.fourier(s)) ** 2)
    else:
        keys = np.array(spec.support(cutoff), dtype=np.float64).reshape(-1, n)
        k2 = np.sum(keys ** 2, axis=1)
        mod2 = np.array([abs(spec.joint[tuple(int(x) for x in k)]) ** 2 for k in keys])
    sel = (k2 > 0) & (k2 <= cutoff * cutoff)
    return float(np.sum(k2[sel] ** ((t - n) / 2) * mod2[sel]))


@dataclass(frozen=True)
class TransitionReport:
    t: float
    cutoffs: tuple
    sums: tuple
    increment_ratios: tuple
    relative_increment: float

    @property
    def converging(self):
        r = self.increment_ratios
        return all(x < 1 for x in r)

    def to_json(self):
        return {"t": self.t, "cutoffs": list(self.cutoffs), "sums": list(self.sums),
                "increment_ratios": list(self.increment_ratios),
                "relative_increment": self.relative_increment, "converging": self.converging}


def energy_transition(spec, t, exponents=range(4, 11)):
    """Partial sums at cutoffs 2^m and the ratios of consecutive increments.

    A convergent series with terms of order k^(t-n) times the support
    growth shows ratios near 2^(t - d) < 1; a divergent one shows ratios >= 1.
    """
    cutoffs = tuple(2 ** int(m) for m in exponents)
    sums = tuple(torus_energy(spec, t, c) for c in cutoffs)
    inc = np.diff(sums)
    ratios = tuple(float(inc[i + 1] / inc[i]) if inc[i] > 0 else math.inf
                   for i in range(len(inc) - 1))
    rel = float(inc[-1] / sums[-1]) if sums[-1] > 0 else 0.0
    return TransitionReport(float(t), cutoffs, sums, ratios, rel)


def plh_spec(n):
    """delta_1 on the first coordinate, normalised Lebesgue measure on the others."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return TorusMeasureSpec(n, [PointMass(0.0)] + [Lebesgue()] * (n - 1))


def plh_example(n, samples=10_000, seed=0, cutoff=8, gap=0.2):
    spec = plh_spec(n)
    ph = is_pluriharmonic(spec, cutoff)
    below = energy_transition(spec, n - 1 - gap)
    above = energy_transition(spec, n - 1 + gap)
    box = box_counting(spec.sample(samples, seed))
    report = {
        "n": n,
        "pluriharmonic": ph.to_json(),
        "energy_below": below.to_json(),
        "energy_above": above.to_json(),
        "transition_separates": below.converging and not above.converging,
        "box_counting": box.to_json(),
        "expected_dimension": n - 1,
    }
    return spec, report
