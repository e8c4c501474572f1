"""
Sparse polynomial arithmetic on the circle and on C^n.

``LaurentPoly`` is a finite trigonometric polynomial sum_k c(k) lambda^k on T.
``MonomialPoly`` is a finite sum of z^alpha conj(z)^beta terms on C^n; the
polynomial machinery elsewhere fixes n = 2 but the formulas here carry n.

Both are immutable. Terms are kept in lexicographic order of their exponent
keys, duplicates merged, and coefficients below ``PRUNE`` dropped.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import kernels

PRUNE = 1e-15


def _canonical(keys, coeffs):
    """Sort, merge duplicate keys and prune small coefficients."""
    coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()
    if keys.shape[0] == 0:
        return keys, coeffs
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    merged = (np.bincount(inv, weights=coeffs.real, minlength=uniq.shape[0])
              + 1j * np.bincount(inv, weights=coeffs.imag, minlength=uniq.shape[0]))
    keep = np.abs(merged) >= PRUNE
    return uniq[keep], merged[keep]


# ------------------------------------------------------------- circle -----

class LaurentPoly:
    """Trigonometric polynomial on the unit circle, sum_k c(k) lambda^k."""

    __slots__ = ("freqs", "coeffs")

    def __init__(self, freqs=(), coeffs=()):
        k = np.asarray(freqs, dtype=np.int64).reshape(-1, 1)
        k, c = _canonical(k, coeffs)
        self.freqs = k.ravel()
        self.coeffs = c
        self.freqs.setflags(write=False)
        self.coeffs.setflags(write=False)

    @classmethod
    def from_dict(cls, mapping):
        items = sorted(mapping.items())
        return cls([k for k, _ in items], [v for _, v in items])

    @classmethod
    def constant(cls, value=1.0):
        return cls([0], [value])

    @classmethod
    def monomial(cls, k, value=1.0):
        return cls([k], [value])

    def to_dict(self):
        return {int(k): complex(c) for k, c in zip(self.freqs, self.coeffs)}

    def __len__(self):
        return self.freqs.shape[0]

    def __repr__(self):
        return f"LaurentPoly({self.to_dict()!r})"

    def coefficient(self, k):
        idx = np.searchsorted(self.freqs, k)
        if idx < len(self.freqs) and self.freqs[idx] == k:
            return complex(self.coeffs[idx])
        return 0j

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.constant(other)
        return LaurentPoly(np.concatenate([self.freqs, other.freqs]),
                           np.concatenate([self.coeffs, other.coeffs]))

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.freqs, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return LaurentPoly(self.freqs, self.coeffs * complex(other))
        if len(self) == 0 or len(other) == 0:
            return LaurentPoly()
        k = np.add.outer(self.freqs, other.freqs).ravel()
        c = np.multiply.outer(self.coeffs, other.coeffs).ravel()
        return LaurentPoly(k, c)

    __rmul__ = __mul__

    def conj(self):
        """Pointwise complex conjugate on T: c(k) -> conj(c(-k))."""
        return LaurentPoly(-self.freqs, np.conj(self.coeffs))

    def reflect(self):
        """lambda -> conj(lambda), i.e. c(k) -> c(-k)."""
        return LaurentPoly(-self.freqs, self.coeffs)

    def is_real(self, tol=1e-14):
        return self.allclose(self.conj(), atol=tol)

    def allclose(self, other, atol=1e-12):
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    def max_frequency(self):
        return int(np.abs(self.freqs).max()) if len(self) else 0

    def __call__(self, lam):
        return self.evaluate(lam)

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=np.complex128)
        out = np.zeros(lam.shape, dtype=np.complex128)
        for k, c in zip(self.freqs, self.coeffs):
            out += c * lam ** int(k)
        return out

    def grid_values(self, m):
        """Values at the m-th roots of unity exp(2 pi i l / m), l = 0..m-1."""
        if self.max_frequency() < m // 2:
            buf = np.zeros(m, dtype=np.complex128)
            np.add.at(buf, self.freqs % m, self.coeffs)
            return np.fft.ifft(buf) * m
        return self.evaluate(np.exp(2j * np.pi * np.arange(m) / m))

    def to_records(self):
        return [{"exponents": int(k), "re": float(c.real), "im": float(c.imag)}
                for k, c in zip(self.freqs, self.coeffs)]

    @classmethod
    def from_records(cls, records):
        return cls([int(r["exponents"]) for r in records],
                   [complex(r["re"], r["im"]) for r in records])


def circle_inner_product(f, g):
    """<f, g> = int_T f conj(g) dm = sum_k c_f(k) conj(c_g(k))."""
    common, i_f, i_g = np.intersect1d(f.freqs, g.freqs, assume_unique=True,
                                      return_indices=True)
    return complex(np.sum(f.coeffs[i_f] * np.conj(g.coeffs[i_g])))


# ------------------------------------------------------------- sphere -----

class MonomialPoly:
    """Finite sum of c * z^alpha * conj(z)^beta on C^n.

    ``exps`` has shape (T, 2n): columns 0..n-1 hold alpha, n..2n-1 hold beta.
    """

    __slots__ = ("n", "exps", "coeffs")

    def __init__(self, exps=None, coeffs=(), n=2):
        self.n = int(n)
        if exps is None:
            exps = np.zeros((0, 2 * self.n), dtype=np.int64)
        e = np.asarray(exps, dtype=np.int64).reshape(-1, 2 * self.n)
        if e.size and e.min() < 0:
            raise ValueError("negative exponent")
        e, c = _canonical(e, coeffs)
        self.exps = e
        self.coeffs = c
        self.exps.setflags(write=False)
        self.coeffs.setflags(write=False)

    @classmethod
    def from_dict(cls, mapping, n=2):
        items = sorted(mapping.items())
        return cls([k for k, _ in items], [v for _, v in items], n=n)

    @classmethod
    def constant(cls, value=1.0, n=2):
        return cls([[0] * (2 * n)], [value], n=n)

    @classmethod
    def monomial(cls, alpha, beta=None, coeff=1.0):
        alpha = list(alpha)
        beta = [0] * len(alpha) if beta is None else list(beta)
        return cls([alpha + beta], [coeff], n=len(alpha))

    @classmethod
    def coordinate(cls, i, n=2, conjugate=False):
        e = [0] * (2 * n)
        e[i + (n if conjugate else 0)] = 1
        return cls([e], [1.0], n=n)

    def to_dict(self):
        return {tuple(int(x) for x in e): complex(c) for e, c in zip(self.exps, self.coeffs)}

    def __len__(self):
        return self.exps.shape[0]

    def __repr__(self):
        return f"MonomialPoly(n={self.n}, {self.to_dict()!r})"

    @property
    def alpha(self):
        return self.exps[:, :self.n]

    @property
    def beta(self):
        return self.exps[:, self.n:]

    def bidegrees(self):
        """Per-term (|alpha|, |beta|) as an (T, 2) array."""
        return np.stack([self.alpha.sum(axis=1), self.beta.sum(axis=1)], axis=1)

    def degree(self):
        return int(self.exps.sum(axis=1).max()) if len(self) else 0

    def weights(self):
        """Per-term alpha - beta; the torus action multiplies a term by exp(i w.psi)."""
        return self.alpha - self.beta

    def _check(self, other):
        if self.n != other.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, MonomialPoly):
            other = MonomialPoly.constant(other, n=self.n)
        self._check(other)
        return MonomialPoly(np.vstack([self.exps, other.exps]),
                            np.concatenate([self.coeffs, other.coeffs]), n=self.n)

    __radd__ = __add__

    def __neg__(self):
        return MonomialPoly(self.exps, -self.coeffs, n=self.n)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, MonomialPoly):
            return MonomialPoly(self.exps, self.coeffs * complex(other), n=self.n)
        self._check(other)
        if len(self) == 0 or len(other) == 0:
            return MonomialPoly(n=self.n)
        e = (self.exps[:, None, :] + other.exps[None, :, :]).reshape(-1, 2 * self.n)
        c = np.multiply.outer(self.coeffs, other.coeffs).ravel()
        return MonomialPoly(e, c, n=self.n)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = MonomialPoly.constant(1.0, n=self.n)
        for _ in range(int(k)):
            out = out * self
        return out

    def conj(self):
        """Pointwise complex conjugate: swap alpha and beta, conjugate coefficients."""
        return MonomialPoly(np.hstack([self.beta, self.alpha]), np.conj(self.coeffs), n=self.n)

    def is_real(self, tol=1e-14):
        return self.allclose(self.conj(), atol=tol)

    def allclose(self, other, atol=1e-12):
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    def evaluate(self, z):
        """Evaluate at one point (shape (n,)) or many (shape (P, n))."""
        z = np.asarray(z, dtype=np.complex128)
        single = z.ndim == 1
        pts = z.reshape(-1, self.n)
        vals = kernels.eval_monomials(pts, self.exps, self.coeffs)
        return complex(vals[0]) if single else vals

    __call__ = evaluate

    def compose_linear(self, u):
        """f(Uz) for an n x n complex matrix U."""
        u = np.asarray(u, dtype=np.complex128)
        lin = [MonomialPoly(np.eye(self.n, 2 * self.n, dtype=np.int64), u[i], n=self.n)
               for i in range(self.n)]
        lin_bar = [x.conj() for x in lin]
        out = MonomialPoly(n=self.n)
        for e, c in zip(self.exps, self.coeffs):
            term = MonomialPoly.constant(c, n=self.n)
            for i in range(self.n):
                term = term * lin[i] ** e[i] * lin_bar[i] ** e[self.n + i]
            out = out + term
        return out

    def to_records(self):
        return [{"exponents": [int(x) for x in e], "re": float(c.real), "im": float(c.imag)}
                for e, c in zip(self.exps, self.coeffs)]

    @classmethod
    def from_records(cls, records, n=2):
        if not records:
            return cls(n=n)
        return cls([r["exponents"] for r in records],
                   [complex(r["re"], r["im"]) for r in records], n=n)

    def to_json(self):
        return json.dumps(self.to_records())


@dataclass(frozen=True)
class BidegreePoly:
    """A MonomialPoly all of whose terms have bidegree exactly (p, q)."""

    p: int
    q: int
    poly: MonomialPoly

    def __post_init__(self):
        if len(self.poly):
            bd = self.poly.bidegrees()
            if not np.all((bd[:, 0] == self.p) & (bd[:, 1] == self.q)):
                raise ValueError(f"term outside bidegree ({self.p}, {self.q})")

    def evaluate(self, z):
        return self.poly.evaluate(z)

    __call__ = evaluate


_MOMENT_TABLE = np.zeros((0, 0))


def _moment_table(size):
    """Correctly rounded m1! m2! / (m1 + m2 + 1)! for m1, m2 < size."""
    global _MOMENT_TABLE
    if _MOMENT_TABLE.shape[0] < size:
        size = max(size, 2 * _MOMENT_TABLE.shape[0], 64)
        fac = [math.factorial(k) for k in range(2 * size + 1)]
        _MOMENT_TABLE = np.array([[fac[a] * fac[b] / fac[a + b + 1] for b in range(size)]
                                  for a in range(size)])
    return _MOMENT_TABLE


def sphere_moment(m, n=2):
    """int_{S^{2n-1}} |z^m|^2 dsigma = (n-1)! m! / (n-1+|m|)! for m of shape (..., n).

    n = 2 reads exact ratios from a table; other n go through log-gamma.
    """
    m = np.asarray(m)
    if n == 2 and m.size and m.max() < 512:
        table = _moment_table(int(m.max()) + 1)
        return table[m[..., 0], m[..., 1]]
    m = m.astype(np.float64)
    return np.exp(gammaln(n) + gammaln(m + 1).sum(axis=-1) - gammaln(n + m.sum(axis=-1)))


def sphere_inner_product(f, g):
    """<f, g> = int_S f conj(g) dsigma, exact term by term.

    A pair of terms contributes only when their weights alpha - beta agree;
    then f_t conj(g_s) = |z^(alpha_t + beta_s)|^2 on the sphere.
    """
    f._check(g)
    if len(f) == 0 or len(g) == 0:
        return 0j
    n = f.n
    wf, wg = f.weights(), g.weights()
    uw, inv_f = np.unique(wf, axis=0, return_inverse=True)
    inv_f = inv_f.ravel()
    total = 0j
    # locate g's weights among f's
    key_g = {tuple(w): i for i, w in enumerate(uw)}
    gidx = np.array([key_g.get(tuple(w), -1) for w in wg], dtype=np.int64)
    for gi in range(uw.shape[0]):
        fs = np.nonzero(inv_f == gi)[0]
        gs = np.nonzero(gidx == gi)[0]
        if gs.size == 0:
            continue
        m = f.alpha[fs][:, None, :] + g.beta[gs][None, :, :]
        mom = sphere_moment(m, n)
        total += np.sum(f.coeffs[fs][:, None] * np.conj(g.coeffs[gs])[None, :] * mom)
    return complex(total)


def sphere_norm(f):
    return float(np.sqrt(max(sphere_inner_product(f, f).real, 0.0)))


def uniform_sphere(count, rng, n=2):
    """Uniform points on S^{2n-1} in C^n from normalised Gaussian vectors."""
    x = rng.standard_normal((count, 2 * n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x[:, :n] + 1j * x[:, n:]


def random_unitary(rng, n=2):
    """Haar-random unitary via QR with phase correction."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    return q * (d / np.abs(d))
