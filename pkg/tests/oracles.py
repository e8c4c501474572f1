"""
Independent reference computations used by the tests.

Nothing here goes through the package's own arithmetic: polynomials are read
as plain (exponent, coefficient) lists and evaluated term by term, sphere
integrals use an exact product quadrature instead of the monomial moment
formula, and circle products are expanded as dense coefficient arrays.
"""
import math

import numpy as np


def terms(f):
    return [(tuple(int(x) for x in e), complex(c)) for e, c in zip(f.exps, f.coeffs)]


def term_sum(f, z):
    """f(z) for one point z of C^2, summed term by term in plain Python."""
    z1, z2 = complex(z[0]), complex(z[1])
    total = 0j
    for (a1, a2, b1, b2), c in terms(f):
        total += c * z1 ** a1 * z2 ** a2 * z1.conjugate() ** b1 * z2.conjugate() ** b2
    return total


def hopf_nodes(degree):
    """Nodes and weights integrating polynomials of total degree <= ``degree`` in
    z, conj(z) exactly against sigma on S^3.

    With z = (sqrt(u) e^{i a}, sqrt(1-u) e^{i b}) the measure sigma is
    du da db / (2 pi)^2 on [0,1] x T^2. After averaging over the angles only
    integer powers of u and 1 - u survive, so Gauss-Legendre in u is exact.
    """
    m = degree + 1
    ang = 2 * np.pi * np.arange(m) / m
    x, w = np.polynomial.legendre.leggauss(degree // 2 + 2)
    u, wu = (x + 1) / 2, w / 2
    U, A, B = np.meshgrid(u, ang, ang, indexing="ij")
    W = np.broadcast_to(wu[:, None, None] / (m * m), U.shape)
    z = np.stack([np.sqrt(U) * np.exp(1j * A), np.sqrt(1 - U) * np.exp(1j * B)], axis=-1)
    return z.reshape(-1, 2), W.ravel()


def dense_eval(f, pts):
    """Vectorised term-by-term evaluation at many points (plain numpy)."""
    out = np.zeros(pts.shape[0], dtype=np.complex128)
    for (a1, a2, b1, b2), c in terms(f):
        out += (c * pts[:, 0] ** a1 * pts[:, 1] ** a2
                * np.conj(pts[:, 0]) ** b1 * np.conj(pts[:, 1]) ** b2)
    return out


def sphere_inner(f, g):
    deg = (max((sum(e) for e, _ in terms(f)), default=0)
           + max((sum(e) for e, _ in terms(g)), default=0))
    pts, w = hopf_nodes(deg)
    return complex(np.sum(w * dense_eval(f, pts) * np.conj(dense_eval(g, pts))))


def dense_circle_product(J, c, n):
    """Coefficients of prod_{k<n} (1 + (c_k x^{j_k} + conj(c_k) x^{-j_k}) / 2)
    as a dict, by dense array convolution."""
    span = sum(J[:n])
    arr = np.zeros(2 * span + 1, dtype=np.complex128)
    arr[span] = 1
    for j, ck in zip(J[:n], c[:n]):
        fac = np.zeros(2 * j + 1, dtype=np.complex128)
        fac[0], fac[j], fac[2 * j] = np.conj(ck) / 2, 1, ck / 2
        arr = np.convolve(arr, fac)[j:j + 2 * span + 1]
    return {k - span: v for k, v in enumerate(arr) if v != 0}


def laplacian(f):
    """4 sum_i d^2/dz_i dzbar_i applied term by term; returned as {exps: coeff}."""
    out = {}
    for (a1, a2, b1, b2), c in terms(f):
        for i in range(2):
            a = [a1, a2]
            b = [b1, b2]
            if a[i] and b[i]:
                k = a[i] * b[i]
                a[i] -= 1
                b[i] -= 1
                key = (a[0], a[1], b[0], b[1])
                out[key] = out.get(key, 0) + 4 * k * c
    return out


def sphere_pair_distance_mean(t):
    """E |x - y|^-t for independent uniform x, y on S^3, by 1-D quadrature of
    the angle law (2 / pi) sin^2(th) d th."""
    from scipy.integrate import quad

    val, _ = quad(lambda th: (2 / math.pi) * math.sin(th) ** 2 * (2 * math.sin(th / 2)) ** (-t),
                  0, math.pi, limit=200)
    return val


def circle_lebesgue_energy(t):
    """int int |l - w|^-t dm dm on T by 1-D quadrature."""
    from scipy.integrate import quad

    val, _ = quad(lambda th: (2 * math.sin(th / 2)) ** (-t) / (2 * math.pi), 0, 2 * math.pi,
                  limit=200)
    return val
