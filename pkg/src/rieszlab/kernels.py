"""
Hot numeric loops.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version computing the same quantity. The public names dispatch to numba
unless it is missing or ``RIESZLAB_DISABLE_NUMBA`` is set to a truthy value
before import. Both variants are always reachable through ``BACKENDS`` so
tests and ``benchmarks/bench_kernels.py`` can compare them.
"""
import os

import numpy as np

try:
    import numba

    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

_flag = os.environ.get("RIESZLAB_DISABLE_NUMBA", "").strip().lower()
DISABLE_NUMBA = _flag not in ("", "0", "false", "no", "off")
USE_NUMBA = HAS_NUMBA and not DISABLE_NUMBA

_POINT_CHUNK = 1 << 15
_ROW_CHUNK = 256


# ---------------------------------------------------------------- numpy ---

def eval_monomials_np(z, exps, coeffs):
    """Evaluate sum_t c_t z^alpha_t conj(z)^beta_t at every row of ``z``.

    Parameters
    ----------
    z : (P, n) complex array
    exps : (T, 2n) int array, holomorphic exponents first
    coeffs : (T,) complex array
    """
    z = np.ascontiguousarray(z, dtype=np.complex128)
    npts, n = z.shape
    out = np.zeros(npts, dtype=np.complex128)
    if exps.shape[0] == 0:
        return out
    chunk = max(64, _POINT_CHUNK * 32 // exps.shape[0])
    for start in range(0, npts, chunk):
        zc = z[start:start + chunk]
        vals = np.broadcast_to(coeffs[:, None], (exps.shape[0], zc.shape[0])).copy()
        for v in range(n):
            for col, base in ((v, zc[:, v]), (n + v, np.conj(zc[:, v]))):
                emax = int(exps[:, col].max())
                if emax == 0:
                    continue
                table = np.ones((emax + 1, zc.shape[0]), dtype=np.complex128)
                for e in range(1, emax + 1):
                    table[e] = table[e - 1] * base
                vals *= table[exps[:, col]]
        out[start:start + zc.shape[0]] = vals.sum(axis=0)
    return out


def _lag_kernel(m, t):
    lags = np.arange(m)
    dist = 2.0 * np.abs(np.sin(np.pi * lags / m))
    ker = np.zeros(m)
    ker[1:] = dist[1:] ** (-t)
    return ker


def grid_pair_energy_np(f, t):
    """Off-diagonal double Riemann sum of f_i f_j |l_i - l_j|^-t / M^2.

    ``f`` holds density values on the M-point uniform grid of the circle;
    the distance is chordal. The sum is organised by lag, with the lag
    autocorrelation of ``f`` obtained by FFT.
    """
    f = np.asarray(f, dtype=np.float64)
    m = f.shape[0]
    spec = np.fft.rfft(f)
    acorr = np.fft.irfft(spec * np.conj(spec), n=m)
    return float(np.dot(_lag_kernel(m, t), acorr) / (m * m))


def pair_count_np(points, radii, period=0.0):
    """Number of unordered pairs at distance strictly below each radius.

    ``period > 0`` treats every coordinate as periodic with that period
    (flat torus); otherwise the metric is Euclidean.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    r2 = np.asarray(radii, dtype=np.float64) ** 2
    npts = pts.shape[0]
    hist = np.zeros(r2.shape[0] + 1, dtype=np.int64)
    for start in range(0, npts, _ROW_CHUNK):
        block = pts[start:start + _ROW_CHUNK]
        diff = np.abs(block[:, None, :] - pts[None, :, :])
        if period > 0.0:
            diff = np.minimum(diff, period - diff)
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        rows = np.arange(start, start + block.shape[0])
        mask = np.arange(npts)[None, :] > rows[:, None]
        bins = np.searchsorted(r2, d2[mask], side="right")
        hist += np.bincount(bins, minlength=r2.shape[0] + 1)
    return np.cumsum(hist)[:-1]


def rw_abs2_np(coeffs, theta, phi):
    """|sum_i c_i (cos(th) e^{i ph})^i sin(th)^(j-i)|^2, homogeneous Horner."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    j = coeffs.shape[0] - 1
    x = np.cos(theta) * np.exp(1j * phi)
    y = np.sin(theta)
    acc = np.full(x.shape, coeffs[j], dtype=np.complex128)
    ypow = np.ones_like(y)
    for m in range(1, j + 1):
        ypow = ypow * y
        acc = acc * x + coeffs[j - m] * ypow
    return acc.real ** 2 + acc.imag ** 2


# ---------------------------------------------------------------- numba ---

if HAS_NUMBA:

    @numba.njit(parallel=True, cache=True)
    def eval_monomials_nb(z, exps, coeffs):
        npts, n = z.shape
        nterms = exps.shape[0]
        emax = 0
        for t in range(nterms):
            for c in range(2 * n):
                if exps[t, c] > emax:
                    emax = exps[t, c]
        out = np.zeros(npts, dtype=np.complex128)
        for p in numba.prange(npts):
            table = np.ones((2 * n, emax + 1), dtype=np.complex128)
            for v in range(n):
                zv = z[p, v]
                zb = np.conj(zv)
                for e in range(1, emax + 1):
                    table[v, e] = table[v, e - 1] * zv
                    table[n + v, e] = table[n + v, e - 1] * zb
            acc = 0j
            for t in range(nterms):
                term = coeffs[t]
                for c in range(2 * n):
                    term *= table[c, exps[t, c]]
                acc += term
            out[p] = acc
        return out

    @numba.njit(parallel=True, cache=True)
    def _grid_rows_nb(f, ker):
        m = f.shape[0]
        rows = np.zeros(m)
        for i in numba.prange(m):
            s = 0.0
            for j in range(m):
                if j != i:
                    lag = i - j
                    if lag < 0:
                        lag += m
                    s += f[j] * ker[lag]
            rows[i] = f[i] * s
        return rows

    def grid_pair_energy_nb(f, t):
        f = np.ascontiguousarray(f, dtype=np.float64)
        m = f.shape[0]
        rows = _grid_rows_nb(f, _lag_kernel(m, t))
        return float(rows.sum() / (m * m))

    @numba.njit(parallel=True, cache=True)
    def _pair_hist_nb(pts, r2, period):
        npts, dim = pts.shape
        nb = r2.shape[0] + 1
        hist = np.zeros((npts, nb), dtype=np.int64)
        for i in numba.prange(npts):
            for j in range(i + 1, npts):
                d2 = 0.0
                for k in range(dim):
                    d = abs(pts[i, k] - pts[j, k])
                    if period > 0.0 and period - d < d:
                        d = period - d
                    d2 += d * d
                hist[i, np.searchsorted(r2, d2, side="right")] += 1
        return hist

    def pair_count_nb(points, radii, period=0.0):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        r2 = np.ascontiguousarray(np.asarray(radii, dtype=np.float64) ** 2)
        hist = _pair_hist_nb(pts, r2, float(period)).sum(axis=0)
        return np.cumsum(hist)[:-1]

    @numba.njit(parallel=True, cache=True)
    def rw_abs2_nb(coeffs, theta, phi):
        j = coeffs.shape[0] - 1
        out = np.empty(theta.shape[0])
        for p in numba.prange(theta.shape[0]):
            x = np.cos(theta[p]) * np.exp(1j * phi[p])
            y = np.sin(theta[p])
            acc = coeffs[j]
            ypow = 1.0
            for m in range(1, j + 1):
                ypow *= y
                acc = acc * x + coeffs[j - m] * ypow
            out[p] = acc.real * acc.real + acc.imag * acc.imag
        return out


def _as_kernel_inputs(z, exps, coeffs):
    return (np.ascontiguousarray(z, dtype=np.complex128),
            np.ascontiguousarray(exps, dtype=np.int64),
            np.ascontiguousarray(coeffs, dtype=np.complex128))


BACKENDS = {
    "numpy": {
        "eval_monomials": eval_monomials_np,
        "grid_pair_energy": grid_pair_energy_np,
        "pair_count": pair_count_np,
        "rw_abs2": rw_abs2_np,
    },
}
if HAS_NUMBA:
    BACKENDS["numba"] = {
        "eval_monomials": eval_monomials_nb,
        "grid_pair_energy": grid_pair_energy_nb,
        "pair_count": pair_count_nb,
        "rw_abs2": lambda c, th, ph: rw_abs2_nb(
            np.ascontiguousarray(c, dtype=np.complex128),
            np.ascontiguousarray(th, dtype=np.float64),
            np.ascontiguousarray(ph, dtype=np.float64)),
    }

BACKEND = "numba" if USE_NUMBA else "numpy"


def eval_monomials(z, exps, coeffs):
    return BACKENDS[BACKEND]["eval_monomials"](*_as_kernel_inputs(z, exps, coeffs))


def grid_pair_energy(f, t):
    return BACKENDS[BACKEND]["grid_pair_energy"](f, t)


def pair_count(points, radii, period=0.0):
    return BACKENDS[BACKEND]["pair_count"](points, radii, period)


def rw_abs2(coeffs, theta, phi):
    return BACKENDS[BACKEND]["rw_abs2"](coeffs, np.ravel(theta), np.ravel(phi)).reshape(np.shape(theta))


def set_threads(n):
    """Bound numba's worker pool; a no-op on the numpy path."""
    if USE_NUMBA and n:
        numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))
