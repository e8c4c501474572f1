"""
Ryll-Wojtaszczyk candidates for n = 2.

A candidate of degree j is R(z) = sum_i c_i z_1^i z_2^(j-i). We want
sup_S |R| <= 1 with ||R||_{L^2(sigma)} as large as possible.

Sup-norm certification
----------------------
By homogeneity it suffices to look at z = (cos(th) e^{i ph}, sin(th)).
T(th, ph) = |R|^2 is a trigonometric polynomial of degree 2j in th and j in
ph, so along any direction u its second derivative is bounded by
(2j|u_th| + j|u_ph|)^2 max T (Bernstein). At a global maximiser the
gradient vanishes; if the nearest grid point is within half a cell
(h_th/2, h_ph/2), then

    max T <= M / (1 - eps),   eps = (j (h_th + h_ph / 2))^2 / 2,

where M is the best grid value. Cells whose value is below M (1 - eps)
cannot host the maximiser and are discarded; the rest are refined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .poly import BidegreePoly, MonomialPoly

COARSE = 64
REFINE = 8
DEFAULT_DEPTH = 2
MAX_EVALS = 40_000_000
_CHUNK = 1 << 20


def l2_norm(coeffs, j=None):
    """||sum c_i z1^i z2^(j-i)||_{L^2(sigma)} from |c_i|^2 i! (j-i)! / (j+1)!."""
    c = np.asarray(coeffs, dtype=np.complex128)
    if j is None:
        j = c.shape[0] - 1
    w = np.array([math.factorial(i) * math.factorial(j - i) / math.factorial(j + 1)
                  for i in range(j + 1)])
    if not np.any(c):
        return 0.0
    scale = _pow2_scale(c)
    return float(np.sqrt(np.sum(np.abs(c / scale) ** 2 * w))) * scale


def to_poly(coeffs):
    """The candidate as a BidegreePoly of bidegree (j, 0)."""
    c = np.asarray(coeffs, dtype=np.complex128)
    j = c.shape[0] - 1
    exps = [[i, j - i, 0, 0] for i in range(j + 1)]
    return BidegreePoly(j, 0, MonomialPoly(exps, c))


def binomial_profile(j):
    return np.sqrt([math.comb(j, i) for i in range(j + 1)]).astype(np.complex128)


def monomial_candidate(j, i):
    """z1^i z2^(j-i) scaled to sup-norm one.

    The sup of |cos^i sin^(j-i)| is (i/j)^(i/2) ((j-i)/j)^((j-i)/2).
    """
    if not 0 <= i <= j:
        raise ValueError(f"exponent {i} outside 0..{j}")
    peak = math.sqrt((i / j) ** i * ((j - i) / j) ** (j - i)) if j else 1.0
    c = np.zeros(j + 1, dtype=np.complex128)
    c[i] = 1.0 / peak
    return c


def balanced_monomial(j):
    """z1^ceil(j/2) z2^floor(j/2), scaled to sup-norm one."""
    return monomial_candidate(j, (j + 1) // 2)


def monomial_from_seed(j, seed):
    """A seeded random monomial z1^i z2^(j-i) with i uniform in 0..j, at sup-norm one."""
    i = int(np.random.default_rng(seed).integers(0, j + 1))
    return monomial_candidate(j, i)


def _eps(j, hth, hph):
    return 0.5 * (j * (hth + 0.5 * hph)) ** 2


@dataclass
class SupCertificate:
    bound: float
    grid_max: float
    eps: float
    levels: int
    evaluations: int


def _refine(c, cth, cph, hth, hph, best, eps_next):
    """Evaluate REFINE x REFINE sub-cell centres of every surviving cell.

    Returns the sub-cells that can still host the maximiser (pruned against
    the running best, which only makes the pruning conservative) and the
    updated best value.
    """
    offs = np.arange(REFINE) - (REFINE - 1) / 2
    out_th, out_ph, out_v = [], [], []
    evals = 0
    step = max(1, _CHUNK // (REFINE * REFINE))
    for s in range(0, cth.shape[0], step):
        th, ph = np.broadcast_arrays(cth[s:s + step, None, None] + offs[None, :, None] * hth,
                                     cph[s:s + step, None, None] + offs[None, None, :] * hph)
        th, ph = th.ravel(), ph.ravel()
        vals = kernels.rw_abs2(c, th, ph)
        evals += vals.size
        best = max(best, float(vals.max()))
        keep = vals >= best * (1 - eps_next)
        out_th.append(th[keep])
        out_ph.append(ph[keep])
        out_v.append(vals[keep])
    return np.concatenate(out_th), np.concatenate(out_ph), np.concatenate(out_v), best, evals


def _pow2_scale(c):
    return math.ldexp(1.0, math.frexp(float(np.abs(c).max()))[1])


def certify(coeffs, depth=DEFAULT_DEPTH):
    c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    j = c.shape[0] - 1
    if j == 0 or not np.any(c):
        v = abs(c[0]) if j == 0 else 0.0
        return SupCertificate(float(v), float(v), 0.0, 0, 1)
    # |R|^2 under- or overflows for extreme coefficient scales; a power of two rescales exactly
    scale = _pow2_scale(c)
    c = c / scale
    nth, nph = COARSE * j, COARSE * j
    hth, hph = (np.pi / 2) / nth, 2 * np.pi / nph
    th, ph = np.meshgrid(np.linspace(0, np.pi / 2, nth + 1), np.arange(nph) * hph, indexing="ij")
    th, ph = th.ravel(), ph.ravel()
    vals = kernels.rw_abs2(c, th, ph)
    evals = vals.size
    best = float(vals.max())
    eps = _eps(j, hth, hph)
    levels = 0
    for _ in range(depth):
        keep = vals >= best * (1 - eps)
        if keep.sum() * REFINE * REFINE > MAX_EVALS:
            break
        hth, hph = hth / REFINE, hph / REFINE
        eps = _eps(j, hth, hph)
        th, ph, vals, best, n = _refine(c, th[keep], ph[keep], hth, hph, best, eps)
        evals += n
        levels += 1
    bound = math.sqrt(best / (1 - eps))
    return SupCertificate(bound * scale, math.sqrt(best) * scale, eps, levels, evals)


def sup_norm_certify(coeffs, j=None, depth=DEFAULT_DEPTH):
    """Certified upper bound on sup_S |R|."""
    c = np.asarray(coeffs, dtype=np.complex128)
    if j is not None and c.shape[0] != j + 1:
        raise ValueError(f"expected {j + 1} coefficients, got {c.shape[0]}")
    return certify(c, depth).bound


def sup_estimate(coeffs, grid=16, starts=4):
    """Fast, uncertified sup |R|: coarse grid plus local polishing."""
    c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    j = c.shape[0] - 1
    if j == 0 or not np.any(c):
        return float(abs(c[0])) if j == 0 else 0.0
    scale = _pow2_scale(c)
    c = c / scale
    nth = nph = grid * j
    th, ph = np.meshgrid(np.linspace(0, np.pi / 2, nth + 1),
                         np.arange(nph) * 2 * np.pi / nph, indexing="ij")
    vals = kernels.rw_abs2(c, th.ravel(), ph.ravel())
    best = float(vals.max())
    top = np.argsort(vals)[-starts:]

    def neg(x):
        return -float(kernels.rw_abs2_np(c, np.array([x[0]]), np.array([x[1]]))[0])

    for k in top:
        res = minimize(neg, [th.ravel()[k], ph.ravel()[k]], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": 200})
        best = max(best, -res.fun)
    return math.sqrt(best) * scale


def delta_estimate(coeffs):
    s = sup_estimate(coeffs)
    return l2_norm(coeffs) / s if s > 0 else 0.0


@dataclass
class RWCertificate:
    j: int
    coeffs: np.ndarray
    l2_norm: float
    sup_bound: float
    delta: float
    search_meta: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "j": self.j,
            "coeffs": [[float(x.real), float(x.imag)] for x in self.coeffs],
            "l2_norm": self.l2_norm,
            "sup_bound": self.sup_bound,
            "delta": self.delta,
            "seed": self.search_meta.get("seed"),
            "search_meta": self.search_meta,
        }

    @classmethod
    def from_json(cls, obj):
        coeffs = np.array([complex(re, im) for re, im in obj["coeffs"]])
        return cls(int(obj["j"]), coeffs, float(obj["l2_norm"]), float(obj["sup_bound"]),
                   float(obj["delta"]), dict(obj.get("search_meta") or {"seed": obj.get("seed")}))

    def poly(self):
        return to_poly(self.coeffs)


def make_certificate(coeffs, depth=DEFAULT_DEPTH, meta=None):
    """Rescale to certified sup-norm one and re-certify."""
    c = np.asarray(coeffs, dtype=np.complex128)
    first = sup_norm_certify(c, depth=depth)
    c = c / first
    sup = sup_norm_certify(c, depth=depth)
    l2 = l2_norm(c)
    return RWCertificate(c.shape[0] - 1, c, l2, sup, l2 / sup, dict(meta or {}))


def _starts(j, rng, n_random):
    binom = binomial_profile(j)
    out = [("binomial", binom), ("balanced_monomial", balanced_monomial(j))]
    signs = np.where(np.arange(j + 1) % 2 == 0, 1.0, -1.0)
    out.append(("binomial_alternating", binom * signs))
    out.append(("binomial_chirp", binom * np.exp(1j * np.pi * np.arange(j + 1) ** 2 / (j + 1))))
    for k in range(n_random):
        g = rng.standard_normal(j + 1) + 1j * rng.standard_normal(j + 1)
        out.append((f"gaussian_{k}", g))
    return out


def _ascend(c, budget, rng, step=0.3, min_step=1e-7):
    c = c / l2_norm(c)
    cur = delta_estimate(c)
    used = 0
    while used < budget and step > min_step:
        improved = False
        for i in range(c.shape[0]):
            if used >= budget:
                break
            trial = c.copy()
            trial[i] += step * (rng.standard_normal() + 1j * rng.standard_normal())
            n = l2_norm(trial)
            if n == 0:
                continue
            trial /= n
            val = delta_estimate(trial)
            used += 1
            if val > cur:
                c, cur, improved = trial, val, True
        if not improved:
            step *= 0.5
    return c, cur, used


def search(j, budget=400, seed=0, depth=DEFAULT_DEPTH, n_random=3):
    """Multi-start ascent on delta = ||R||_2 / sup|R|; returns the best certificate."""
    if j < 1:
        raise ValueError("degree must be at least 1")
    root = np.random.SeedSequence(seed)
    rng0 = np.random.default_rng(root.spawn(1)[0])
    starts = _starts(j, rng0, n_random)
    per_start = max(1, budget // len(starts))
    results = []
    for (name, c0), ss in zip(starts, root.spawn(len(starts))):
        rng = np.random.default_rng(ss)
        c, val, used = _ascend(np.asarray(c0, dtype=np.complex128), per_start, rng)
        # fix the global phase so ties compare deterministically
        k = int(np.argmax(np.abs(c)))
        c = c * np.exp(-1j * np.angle(c[k]))
        results.append((val, tuple(np.round(np.concatenate([c.real, c.imag]), 12)), name, c, used))
    results.sort(key=lambda r: (-r[0], r[1]))
    val, _, name, c, used = results[0]
    meta = {"seed": seed, "iterations": int(sum(r[4] for r in results)),
            "refinement_depth": depth, "best_start": name, "estimated_delta": val}
    return make_certificate(c, depth=depth, meta=meta)
