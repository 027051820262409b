"""Independent oracles used across the test suite.

Everything here is deliberately brute-force and built from different
primitives than the library (scipy/mpmath special functions, grid
quadrature, direct enumeration) so that agreement is evidence, not
tautology.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sps


# ---------------------------------------------------------------------------
# brute-force determinantal covariance on the plane
#
# Cov = int fg K(z,z) mu - int int f(z) g(w) |K(z,w)|^2 mu mu with the
# degree-(N-1) polynomial kernel and weight e^{-N|z|^2} dA; evaluated on a
# polar product grid (Gauss-Legendre radially, trapezoid in the angle).
# ---------------------------------------------------------------------------

def quad4d_cov_rt(f, g, n: int, r_nodes: int = 120, t_nodes: int = 64,
                  r_max: float | None = None) -> float:
    """f, g: vectorized callables of (r, theta) on broadcastable grids."""
    if r_max is None:
        r_max = 1.0 + 6.0 / math.sqrt(n)
    xr, wr = np.polynomial.legendre.leggauss(r_nodes)
    r = 0.5 * r_max * (xr + 1.0)
    wr = 0.5 * r_max * wr
    theta = -math.pi + 2.0 * math.pi * np.arange(t_nodes) / t_nodes
    wt = np.full(t_nodes, 2.0 * math.pi / t_nodes)

    # basis functions with the half-weight absorbed:
    # phi_l(r, t) = sqrt(N^{l+1}/(pi l!)) r^l e^{ilt} e^{-N r^2/2}
    ells = np.arange(n)
    log_amp = 0.5 * ((ells + 1) * math.log(n) - np.log(math.pi) - sps.gammaln(ells + 1))
    rad = np.exp(log_amp[:, None] + ells[:, None] * np.log(np.maximum(r, 1e-300))[None, :]
                 - 0.5 * n * r[None, :] ** 2)          # (n, R)
    ang = np.exp(1j * np.outer(ells, theta))            # (n, T)

    pts_w = (wr[:, None] * r[:, None] * wt[None, :]).ravel()        # (R*T,)
    grid = np.broadcast_to(np.ones((r_nodes, t_nodes)), (r_nodes, t_nodes))
    fv = (f(r[:, None], theta[None, :]) * grid).ravel()
    gv = (g(r[:, None], theta[None, :]) * grid).ravel()
    phi = (rad[:, :, None] * ang[:, None, :]).reshape(n, -1)        # (n, P)

    kdiag = np.sum(np.abs(phi) ** 2, axis=0).real
    term1 = float(np.sum(fv * gv * kdiag * pts_w))

    term2 = 0.0
    p = phi.shape[1]
    chunk = max(1, 2_000_000 // p)
    wf = fv * pts_w
    wg = gv * pts_w
    for lo in range(0, p, chunk):
        hi = min(lo + chunk, p)
        kblock = phi[:, lo:hi].conj().T @ phi          # (hi-lo, P)
        term2 += float(wf[lo:hi] @ (np.abs(kblock) ** 2 @ wg))
    return term1 - term2


def quad4d_cov(f, g, n: int, r_nodes: int = 120, t_nodes: int = 64,
               r_max: float | None = None) -> float:
    """f, g: vectorized callables of the angle theta in (-pi, pi]."""
    return quad4d_cov_rt(lambda r, t: f(t) + 0.0 * r,
                         lambda r, t: g(t) + 0.0 * r,
                         n, r_nodes, t_nodes, r_max)


# ---------------------------------------------------------------------------
# closed forms and exact densities
# ---------------------------------------------------------------------------

def i_arg_closed(beta: float) -> float:
    """Closed form of the defining two-integral display (derived by
    integrating each piece in terms of incomplete-gamma/error functions)."""
    t1 = 1.0 - math.gamma(0.25) * sps.gammainc(0.25, beta) / (4.0 * beta ** 0.25)
    t2 = 0.5 * math.sqrt(math.pi) * beta * math.erfc(beta)
    t3 = math.sqrt(math.pi) / (4.0 * beta) * math.erf(beta)
    t4 = -0.5 * math.exp(-(beta ** 2))
    return t1 + t2 + t3 + t4


def gamma_std_density(a: float, m: int) -> float:
    """Exact density of (S - M)/sqrt(M) at a for S ~ Gamma(M, 1)."""
    x = m + a * math.sqrt(m)
    if x <= 0.0:
        return 0.0
    return math.sqrt(m) * math.exp((m - 1) * math.log(x) - x - sps.gammaln(m))


# ---------------------------------------------------------------------------
# independent-Bernoulli count enumeration
# ---------------------------------------------------------------------------

def bernoulli_count_pmf(p) -> np.ndarray:
    """Exact pmf of sum of independent Bernoulli(p_k), by convolution."""
    pmf = np.array([1.0])
    for pk in p:
        nxt = np.zeros(len(pmf) + 1)
        nxt[:-1] += pmf * (1.0 - pk)
        nxt[1:] += pmf * pk
        pmf = nxt
    return pmf


def cumulants_from_pmf(pmf: np.ndarray, n_max: int) -> list[float]:
    """Cumulants kappa_1..kappa_nmax from an exact pmf on {0, 1, ..}."""
    support = np.arange(len(pmf), dtype=float)
    raw = [float(np.sum(pmf * support ** j)) for j in range(n_max + 1)]
    kappa = [0.0] * (n_max + 1)
    for nn in range(1, n_max + 1):
        acc = raw[nn]
        for j in range(1, nn):
            acc -= math.comb(nn - 1, j - 1) * kappa[j] * raw[nn - j]
        kappa[nn] = acc
    return kappa[1:]


# ---------------------------------------------------------------------------
# characteristic-polynomial eigenvalue oracle
# ---------------------------------------------------------------------------

def charpoly_coefficients(a: np.ndarray) -> np.ndarray:
    """Coefficients of det(zI - A) = z^n + c[1] z^{n-1} + ... + c[n], via
    sums of principal minors in extended precision."""
    a = np.asarray(a, dtype=np.clongdouble)
    n = a.shape[0]
    coeffs = np.zeros(n + 1, dtype=np.clongdouble)
    coeffs[0] = 1.0
    from itertools import combinations

    for k in range(1, n + 1):
        s = np.clongdouble(0.0)
        for rows in combinations(range(n), k):
            sub = a[np.ix_(rows, rows)]
            s += _det_cofactor(sub)
        coeffs[k] = (-1.0) ** k * s
    return coeffs


def _det_cofactor(m: np.ndarray) -> np.clongdouble:
    k = m.shape[0]
    if k == 1:
        return m[0, 0]
    if k == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    total = np.clongdouble(0.0)
    rest = np.arange(1, k)
    for j in range(k):
        cols = [c for c in range(k) if c != j]
        total += (-1.0) ** j * m[0, j] * _det_cofactor(m[np.ix_(rest, cols)])
    return total


def durand_kerner_roots(coeffs: np.ndarray, iters: int = 500,
                        tol: float = 1e-14) -> np.ndarray:
    """All roots of a monic polynomial given coefficient array c[0]=1."""
    c = np.asarray(coeffs, dtype=np.clongdouble)
    n = len(c) - 1
    radius = 1.0 + max(abs(np.complex128(v)) for v in c[1:])
    z = radius * np.exp(2j * np.pi * (np.arange(n) + 0.25) / n).astype(np.clongdouble)

    def poly(x):
        out = np.full_like(x, c[0])
        for ck in c[1:]:
            out = out * x + ck
        return out

    for _ in range(iters):
        move = 0.0
        pz = poly(z)
        for i in range(n):
            denom = np.clongdouble(1.0)
            for j in range(n):
                if j != i:
                    denom *= z[i] - z[j]
            delta = pz[i] / denom
            z[i] -= delta
            move = max(move, abs(np.complex128(delta)))
        if move < tol:
            break
    return np.asarray(z, dtype=complex)


def eig_via_charpoly(a: np.ndarray) -> np.ndarray:
    return durand_kerner_roots(charpoly_coefficients(a))
