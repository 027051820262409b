"""Counting statistics through the projection-operator route.

Restricting the planar kernel to a region A gives a self-adjoint operator
with spectrum in [0, 1]; the count in A is then a sum of independent
Bernoulli(p_j) over its eigenvalues p_j.  For annuli the Gram matrix in the
monomial basis is diagonal (incomplete-gamma entries); for sectors it is a
Hermitian matrix with closed-form entries.  Cumulants of the count follow
from traces of operator powers via the Stirling-number inversion

    U_k = (-1)^{k-1} (k-1)! Tr(G^k),   C_n = sum_k S(n,k) U_k,

which doubles as an independent cross-check of the exact covariance modules.
The same formulas with plain probability sequences (sum p^k in place of
traces) cover the quaternion radial counts, whose moduli are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .angular import ArcWindow, _tables
from .specfun import gamma_interval_prob, stirling2

__all__ = [
    "GramOperator",
    "CumulantSet",
    "CltReport",
    "gram_annulus",
    "gram_sector",
    "quaternion_radial_probabilities",
    "cumulants_from_gram",
    "cumulants_permanental",
    "clt_certificate",
]

MAX_ORDER = 12


@dataclass(frozen=True)
class GramOperator:
    """Region-restricted projection in the monomial basis."""

    n: int
    structure: str                      # "diagonal" | "sector" | "dense"
    diag: np.ndarray | None = None      # real probabilities, diagonal case
    matrix: np.ndarray | None = None    # Hermitian, dense cases

    def __post_init__(self) -> None:
        if self.structure == "diagonal":
            if self.diag is None or len(self.diag) != self.n:
                raise ValueError("diagonal operator needs a length-N diag")
        else:
            if self.matrix is None or self.matrix.shape != (self.n, self.n):
                raise ValueError("dense operator needs an N x N matrix")

    def trace(self) -> float:
        if self.structure == "diagonal":
            return float(np.sum(self.diag))
        return math.fsum(np.diagonal(self.matrix).real)

    def trace_powers(self, kmax: int) -> list[float]:
        """[Tr G, Tr G^2, ..., Tr G^kmax]."""
        if self.structure == "diagonal":
            return _diag_trace_powers(self.diag, kmax)
        out = []
        power = None
        g = self.matrix
        for _ in range(kmax):
            power = g if power is None else power @ g
            power = 0.5 * (power + power.conj().T)
            out.append(math.fsum(np.diagonal(power).real))
        return out

    def eigenvalues(self) -> np.ndarray:
        if self.structure == "diagonal":
            return np.sort(np.asarray(self.diag, dtype=float))
        return np.linalg.eigvalsh(self.matrix)


def _diag_trace_powers(p: np.ndarray, kmax: int) -> list[float]:
    p = np.asarray(p, dtype=float)
    out = []
    power = np.ones_like(p)
    for _ in range(kmax):
        power = power * p
        out.append(float(np.sum(power)))
    return out


@dataclass(frozen=True)
class CumulantSet:
    """Cluster integrals U_1..U_nmax and count cumulants C_1..C_nmax."""

    n_max: int
    u: tuple[float, ...]
    c: tuple[float, ...]

    def cumulant(self, n: int) -> float:
        if not 1 <= n <= self.n_max:
            raise ValueError(f"order {n} outside 1..{self.n_max}")
        return self.c[n - 1]

    def cluster(self, k: int) -> float:
        if not 1 <= k <= self.n_max:
            raise ValueError(f"order {k} outside 1..{self.n_max}")
        return self.u[k - 1]


# ---------------------------------------------------------------------------
# operators for the two window families
# ---------------------------------------------------------------------------

def gram_annulus(n: int, a: float, b: float) -> GramOperator:
    """Annulus a <= |z| <= b: diagonal with incomplete-gamma entries."""
    if n < 1:
        raise ValueError("N must be >= 1")
    if not (0.0 <= a <= b):
        raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
    s_lo = n * a * a
    s_hi = n * b * b if math.isfinite(b) else math.inf
    diag = np.array([gamma_interval_prob(ell + 1, s_lo, s_hi) for ell in range(n)])
    return GramOperator(n=n, structure="diagonal", diag=diag)


def gram_sector(n: int, arc: ArcWindow) -> GramOperator:
    """Sector alpha <= arg z <= beta: Hermitian with closed-form entries.

    G_{lm} = Gamma((l+m)/2 + 1)/sqrt(l! m!) * what(l - m), assembled in log
    space; what is the arc indicator's Fourier coefficient in the same
    convention as the angular module, which ties the two routes together.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    lgf, lgh = _tables(2 * n)
    idx = np.arange(n)
    radial = np.exp(lgh[idx[:, None] + idx[None, :]]
                    - 0.5 * (lgf[idx][:, None] + lgf[idx][None, :]))
    wvals = np.array([arc.fourier(d) for d in range(-(n - 1), n)])
    wmat = wvals[(idx[:, None] - idx[None, :]) + (n - 1)]
    return GramOperator(n=n, structure="sector", matrix=radial * wmat)


def quaternion_radial_probabilities(n: int, a: float, b: float) -> np.ndarray:
    """Occupation probabilities for the quaternion radial count (independent)."""
    if n < 1:
        raise ValueError("N must be >= 1")
    if not (0.0 <= a <= b):
        raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
    s_lo = 2.0 * n * a * a
    s_hi = 2.0 * n * b * b if math.isfinite(b) else math.inf
    return np.array([gamma_interval_prob(2 * k, s_lo, s_hi) for k in range(1, n + 1)])


# ---------------------------------------------------------------------------
# cumulants
# ---------------------------------------------------------------------------

def _cumulants_from_traces(traces: list[float], n_max: int) -> CumulantSet:
    u = tuple((-1.0) ** (k - 1) * math.factorial(k - 1) * traces[k - 1]
              for k in range(1, n_max + 1))
    c = tuple(math.fsum(stirling2(nn, k) * u[k - 1] for k in range(1, nn + 1))
              for nn in range(1, n_max + 1))
    return CumulantSet(n_max=n_max, u=u, c=c)


def cumulants_from_gram(g: GramOperator, n_max: int) -> CumulantSet:
    """Count cumulants C_1..C_nmax of the region count described by g."""
    if not 1 <= n_max <= MAX_ORDER:
        raise ValueError(f"n_max must be in 1..{MAX_ORDER}, got {n_max}")
    if g.structure == "diagonal":
        # identical code path (and summation order) as the permanental route
        return cumulants_permanental(g.diag, n_max)
    return _cumulants_from_traces(g.trace_powers(n_max), n_max)


def cumulants_permanental(p, n_max: int) -> CumulantSet:
    """Cumulants of a sum of independent Bernoulli(p_k)."""
    if not 1 <= n_max <= MAX_ORDER:
        raise ValueError(f"n_max must be in 1..{MAX_ORDER}, got {n_max}")
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise ValueError("p must be a nonempty 1-d probability sequence")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return _cumulants_from_traces(_diag_trace_powers(p, n_max), n_max)


def cumulant_bound_factor(n: int) -> float:
    """B_n with |C_n| <= B_n * C_2 for any Bernoulli-sum count, from the
    Stirling expansion: B_n = sum_{k=2}^n S(n,k) (k-1)! (k-1)."""
    return float(sum(stirling2(n, k) * math.factorial(k - 1) * (k - 1)
                     for k in range(2, n + 1)))


@dataclass(frozen=True)
class CltReport:
    n_max: int
    variance: float
    normalized: tuple[float, ...] = field(default=())   # C_n / C_2^{n/2}, n = 3..n_max
    bound_witness: float = 0.0                          # max |C_n| / (B_n C_2) <= 1
    tolerance: float = 0.1
    certified: bool = False


def clt_certificate(cs: CumulantSet, tolerance: float = 0.1) -> CltReport:
    """Normalized cumulants and the linear-in-variance bound witness.

    Deterministic counts (C_2 = 0) carry no normalization and are rejected.
    """
    c2 = cs.cumulant(2)
    if c2 <= 0.0:
        raise ValueError("C_2 is zero: deterministic count, nothing to certify")
    normalized = tuple(cs.cumulant(nn) / c2 ** (0.5 * nn)
                       for nn in range(3, cs.n_max + 1))
    witness = 0.0
    for nn in range(3, cs.n_max + 1):
        witness = max(witness, abs(cs.cumulant(nn)) / (cumulant_bound_factor(nn) * c2))
    certified = all(abs(v) <= tolerance for v in normalized)
    return CltReport(n_max=cs.n_max, variance=c2, normalized=normalized,
                     bound_witness=witness, tolerance=tolerance, certified=certified)
