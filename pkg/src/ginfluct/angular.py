"""Exact finite-N covariances for statistics of the eigenvalue arguments.

Conventions (fixed by the brute-force determinantal quadrature oracle in the
test suite): angles are physical radians on [-pi, pi]; the circle carries the
normalized measure dtheta/(2pi); Fourier coefficients are
fhat(k) = (1/2pi) int e^{-ik theta} f(theta) dtheta, and for phi = f * g~
(g~(theta) = g(-theta)) one has phihat(k) = fhat(k) ghat(-k), phi(0) = sum_k
phihat(k).

The exact covariance is  N phi(0) - sum_{0<=k,l<N} Gamma((k+l)/2+1)^2
phihat(k-l) / (k! l!).  Regrouping the double sum along k+l produces the
C_l kernel decomposition; counting statistics feed arc-indicator
coefficients through the same machinery (their infinite Fourier tail enters
only via phi(0), which is known in closed form, so counts are exact).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from .specfun import log_gamma

__all__ = [
    "FourierStatistic",
    "ConvolvedStatistic",
    "ArcWindow",
    "DecomposedCovariance",
    "angular_cov_exact",
    "angular_cov_decomposed",
    "angular_var_sesquilinear",
    "angular_count_var",
    "angular_count_cov",
    "kernel_c_eval",
    "kernel_c_fourier",
    "kernel_c_apply_at_zero",
    "read_fourier_file",
    "write_fourier_file",
]

MAX_BAND = 4096

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# log-gamma tables
#
# Both the double sum and the regrouped kernel form are assembled from the
# same table entries (lgf[j] = ln j!, lgh[s] = ln Gamma(s/2+1), with
# lgh[2j] copied bitwise from lgf[j]); the decomposition identity then holds
# to machine precision because the two routes multiply identical factors.
# ---------------------------------------------------------------------------

_lgf = np.zeros(1)
_lgh = np.zeros(1)
_table_size = 0  # number of valid entries (indices 0.._table_size-1)


def _tables(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Shared log-gamma tables with at least `size` entries each."""
    global _lgf, _lgh, _table_size
    if size > _table_size:
        new = max(size, 2 * _table_size, 64)
        lgf = np.empty(new)
        lgh = np.empty(new)
        for j in range(new):
            lgf[j] = log_gamma(j + 1.0)
        lgh[0::2] = lgf[: (new + 1) // 2]
        for s in range(1, new, 2):
            lgh[s] = log_gamma(0.5 * s + 1.0)
        _lgf, _lgh, _table_size = lgf, lgh, new
    return _lgf, _lgh


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierStatistic:
    """Band-limited test function of the angle, stored as fhat(-K..K)."""

    coeffs: np.ndarray  # complex, length 2K+1, index k+K
    real: bool = True

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or len(c) % 2 != 1:
            raise ValueError("coefficient array must have odd length 2K+1")
        if self.band > MAX_BAND:
            raise ValueError(f"band {self.band} exceeds the supported maximum {MAX_BAND}")
        object.__setattr__(self, "coeffs", c)
        if self.real:
            sym = np.conj(c[::-1])
            if not np.allclose(c, sym, rtol=0.0, atol=1e-12 * (1.0 + np.abs(c).max())):
                raise ValueError("real statistic requires fhat(-k) = conj(fhat(k))")

    @property
    def band(self) -> int:
        return (len(self.coeffs) - 1) // 2

    def get(self, k: int) -> complex:
        if abs(k) > self.band:
            return 0.0 + 0.0j
        return complex(self.coeffs[k + self.band])

    @classmethod
    def from_dict(cls, d: dict[int, complex], real: bool = True) -> "FourierStatistic":
        if not d:
            return cls(coeffs=np.zeros(1, dtype=complex), real=real)
        band = max(abs(k) for k in d)
        c = np.zeros(2 * band + 1, dtype=complex)
        for k, v in d.items():
            c[k + band] = v
        return cls(coeffs=c, real=real)

    @classmethod
    def constant(cls, value: float) -> "FourierStatistic":
        return cls.from_dict({0: complex(value)})

    @classmethod
    def cosine(cls, k: int, amplitude: float = 1.0) -> "FourierStatistic":
        """amplitude * cos(k theta)"""
        if k == 0:
            return cls.constant(amplitude)
        return cls.from_dict({k: amplitude / 2.0, -k: amplitude / 2.0})

    @classmethod
    def sine(cls, k: int, amplitude: float = 1.0) -> "FourierStatistic":
        """amplitude * sin(k theta)"""
        if k == 0:
            return cls.constant(0.0)
        return cls.from_dict({k: -0.5j * amplitude, -k: 0.5j * amplitude})

    def conjugate(self) -> "FourierStatistic":
        """Coefficients of conj(f); equals f itself for real statistics."""
        return FourierStatistic(coeffs=np.conj(self.coeffs[::-1]), real=self.real)

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        ks = np.arange(-self.band, self.band + 1)
        out = np.tensordot(self.coeffs, np.exp(1j * np.multiply.outer(ks, theta)), axes=(0, 0))
        return out.real if self.real else out


@dataclass(frozen=True)
class ConvolvedStatistic:
    """phi = f * g~ for a band-limited pair: phihat(k) = fhat(k) ghat(-k)."""

    phat: np.ndarray  # complex, length 2K+1
    real_pair: bool

    @classmethod
    def from_pair(cls, f: FourierStatistic, g: FourierStatistic) -> "ConvolvedStatistic":
        band = max(f.band, g.band)
        ks = np.arange(-band, band + 1)
        vals = np.array([f.get(k) * g.get(-k) for k in ks], dtype=complex)
        return cls(phat=vals, real_pair=f.real and g.real)

    @property
    def band(self) -> int:
        return (len(self.phat) - 1) // 2

    def get(self, k: int) -> complex:
        if abs(k) > self.band:
            return 0.0 + 0.0j
        return complex(self.phat[k + self.band])

    @property
    def phi0(self) -> complex:
        return complex(self.phat.sum())


@dataclass(frozen=True)
class ArcWindow:
    """Arc [alpha, beta] of the circle, alpha < beta, both in [-pi, pi]."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (-math.pi <= self.alpha < self.beta <= math.pi):
            raise ValueError(
                f"arc needs -pi <= alpha < beta <= pi, got [{self.alpha}, {self.beta}]")

    @classmethod
    def symmetric(cls, length: float) -> "ArcWindow":
        return cls(alpha=-0.5 * length, beta=0.5 * length)

    @property
    def length(self) -> float:
        return self.beta - self.alpha

    def fourier(self, d: int) -> complex:
        """what(d) of the arc indicator in the normalized convention."""
        if d == 0:
            return complex(self.length / (2.0 * math.pi))
        return (np.exp(-1j * d * self.alpha) - np.exp(-1j * d * self.beta)) / (2j * math.pi * d)

    def fourier_row(self, dmax: int) -> np.ndarray:
        """what(d) for d = 1..dmax as a vector."""
        d = np.arange(1, dmax + 1)
        return (np.exp(-1j * d * self.alpha) - np.exp(-1j * d * self.beta)) / (2j * math.pi * d)

    def tent_fourier(self, d: int) -> float:
        """Coefficients of the indicator's self-correlation (the tent
        (L - |theta|)/2pi on |theta| <= L): |what(d)|^2, with peak value
        sum_d tent_fourier(d) = L/2pi."""
        if d == 0:
            return (self.length / (2.0 * math.pi)) ** 2
        return math.sin(0.5 * d * self.length) ** 2 / (math.pi * d) ** 2


# ---------------------------------------------------------------------------
# the C_l kernel
# ---------------------------------------------------------------------------

def kernel_c_eval(ell: int, theta):
    """C_l(theta) = a(l) cos^{2l} + b(l) cos^{2l+1}, log-space coefficients."""
    if ell < 0 or ell > 10 ** 6:
        raise ValueError(f"l out of range: {ell}")
    la = 2 * ell * LN2 + 2.0 * log_gamma(ell + 1.0) - log_gamma(2.0 * ell + 1.0)
    lb = (2 * ell + 1) * LN2 + 2.0 * log_gamma(ell + 1.5) - log_gamma(2.0 * ell + 2.0)
    c = np.cos(np.asarray(theta, dtype=float))
    val = math.exp(la) * c ** (2 * ell) + math.exp(lb) * c ** (2 * ell + 1)
    return float(val) if np.isscalar(theta) else val


def kernel_c_fourier(ell: int, k: int) -> float:
    """Chat_l(k): even in k, zero outside |k| <= 2l+1."""
    if ell < 0:
        raise ValueError("l must be nonnegative")
    k = abs(int(k))
    if k > 2 * ell + 1:
        return 0.0
    lgf, lgh = _tables(2 * ell + 2)
    if k % 2 == 0:
        m = k // 2
        return float(np.exp(2.0 * lgf[ell] - lgf[ell - m] - lgf[ell + m]))
    m = (k + 1) // 2
    return float(np.exp(2.0 * lgh[2 * ell + 1] - lgf[ell + m] - lgf[ell - m + 1]))


def _chat_row(ell: int, kmax: int) -> np.ndarray:
    """Chat_l(k) for k = 0..kmax, vectorized off the shared tables."""
    lgf, lgh = _tables(2 * ell + 3)
    kmax = min(kmax, 2 * ell + 1)
    out = np.zeros(kmax + 1)
    me = np.arange(0, min(ell, kmax // 2) + 1)          # even k = 2m
    out[2 * me] = np.exp(2.0 * lgf[ell] - lgf[ell - me] - lgf[ell + me])
    mo = np.arange(1, (kmax + 1) // 2 + 1)              # odd k = 2m-1
    mo = mo[2 * mo - 1 <= kmax]
    out[2 * mo - 1] = np.exp(2.0 * lgh[2 * ell + 1] - lgf[ell + mo] - lgf[ell - mo + 1])
    return out


def kernel_c_apply_at_zero(ell: int, phi: ConvolvedStatistic) -> complex:
    """(C_l * phi)(0) = sum_k Chat_l(k) phihat(k)."""
    kmax = min(phi.band, 2 * ell + 1)
    row = _chat_row(ell, kmax)
    total = row[0] * phi.get(0)
    for k in range(1, kmax + 1):
        total += row[k] * (phi.get(k) + phi.get(-k))
    return total


# ---------------------------------------------------------------------------
# exact covariance: the Fourier double sum, evaluated per diagonal
# ---------------------------------------------------------------------------

def _diagonal_sums(n: int, dmax: int) -> np.ndarray:
    """C_d = sum_{l=0}^{n-1-d} Gamma(l+d/2+1)^2/((l+d)! l!) for d = 0..dmax."""
    if dmax >= n // 2:
        return _row_sums(n)[: dmax + 1]
    lgf, lgh = _tables(2 * n)
    out = np.empty(dmax + 1)
    for d in range(dmax + 1):
        l = np.arange(0, n - d)
        out[d] = np.exp(2.0 * lgh[2 * l + d] - lgf[l + d] - lgf[l]).sum()
    return out


@lru_cache(maxsize=4)
def _row_sums(n: int) -> np.ndarray:
    """All diagonal sums C_0..C_{n-1}; O(n^2) once, cached per n."""
    lgf, lgh = _tables(2 * n)
    out = np.empty(n)
    for d in range(n):
        l = np.arange(0, n - d)
        out[d] = np.exp(2.0 * lgh[2 * l + d] - lgf[l + d] - lgf[l]).sum()
    return out


def _finite_or_raise(x, what: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise RuntimeError(f"internal defect: non-finite {what}")
    return x


def angular_cov_exact(f: FourierStatistic, g: FourierStatistic, n: int):
    """Cov(X(f), X(g)); real when both statistics are real-valued."""
    if n < 1:
        raise ValueError("N must be >= 1")
    phi = ConvolvedStatistic.from_pair(f, g)
    dmax = min(phi.band, n - 1)
    cd = _diagonal_sums(n, dmax)
    total = n * phi.phi0 - cd[0] * phi.get(0)
    for d in range(1, dmax + 1):
        total -= cd[d] * (phi.get(d) + phi.get(-d))
    if phi.real_pair:
        return _finite_or_raise(total.real, "angular covariance")
    _finite_or_raise(abs(total), "angular covariance")
    return complex(total)


def angular_var_sesquilinear(f: FourierStatistic, n: int) -> float:
    """Var X(f) for complex-valued f: the bilinear form against conj(f)."""
    val = angular_cov_exact(f, f.conjugate(), n)
    return val if isinstance(val, float) else val.real


class DecomposedCovariance(NamedTuple):
    main: float
    correction: float

    @property
    def total(self) -> float:
        return self.main + self.correction


def angular_cov_decomposed(f: FourierStatistic, g: FourierStatistic, n: int) -> DecomposedCovariance:
    """Kernel form of the covariance.

    main = N phi(0) - sum_{l<N} (C_l * phi)(0); the correction restores the
    band edges the regrouping over-counts: for each l, Fourier modes with
    |k| > 2N - 2l - 2 (nonempty once l >= floor(N/2)) re-enter with a plus
    sign.  main + correction reproduces the double sum identically; both
    sides are assembled from the same log-gamma tables, so the identity
    holds to rounding error at any N.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    phi = ConvolvedStatistic.from_pair(f, g)
    if not phi.real_pair:
        raise ValueError("decomposition is reported for real statistic pairs")
    conv_sum = 0.0
    corr = 0.0
    for ell in range(n):
        kmax = min(phi.band, 2 * ell + 1)
        row = _chat_row(ell, kmax)
        pair = np.empty(kmax + 1)
        pair[0] = phi.get(0).real
        for k in range(1, kmax + 1):
            pair[k] = (phi.get(k) + phi.get(-k)).real
        conv_sum += float(row @ pair)
        cutoff = 2 * n - 2 * ell - 2
        if kmax > cutoff:
            # excluded modes of this l: cutoff < |k| <= kmax
            corr += float(row[cutoff + 1:] @ pair[cutoff + 1:])
    main = n * phi.phi0.real - conv_sum
    return DecomposedCovariance(main=_finite_or_raise(main, "decomposed main"),
                                correction=_finite_or_raise(corr, "decomposed correction"))


# ---------------------------------------------------------------------------
# counting statistics (exact: the tail enters only through phi(0))
# ---------------------------------------------------------------------------

def angular_count_var(n: int, arc: ArcWindow) -> float:
    """Var #{angles in arc}; depends on the arc only through its length."""
    if n < 1:
        raise ValueError("N must be >= 1")
    q = arc.length / (2.0 * math.pi)
    if q >= 1.0:
        return 0.0  # full circle: the count is deterministically N
    cd = _row_sums(n)
    d = np.arange(1, n)
    if len(d):
        w2 = np.sin(0.5 * d * arc.length) ** 2 / (math.pi ** 2 * d ** 2)
        tail = 2.0 * float(cd[1:] @ w2)
    else:
        tail = 0.0
    return _finite_or_raise(n * q - cd[0] * q * q - tail, "angular count variance")


def angular_count_cov(n: int, arc1: ArcWindow, arc2: ArcWindow) -> float:
    """Cov(#arc1, #arc2) via phi = 1_{arc1} * 1~_{arc2}."""
    if n < 1:
        raise ValueError("N must be >= 1")
    if arc1 == arc2:
        # same expression as the variance, so the two agree bit for bit
        return angular_count_var(n, arc1)
    overlap = max(0.0, min(arc1.beta, arc2.beta) - max(arc1.alpha, arc2.alpha))
    phi0 = overlap / (2.0 * math.pi)
    cd = _row_sums(n)
    q1 = arc1.length / (2.0 * math.pi)
    q2 = arc2.length / (2.0 * math.pi)
    total = n * phi0 - cd[0] * q1 * q2
    if n > 1:
        w1 = arc1.fourier_row(n - 1)
        w2 = arc2.fourier_row(n - 1)
        total -= 2.0 * float(cd[1:] @ (w1 * np.conj(w2)).real)
    return _finite_or_raise(total, "angular count covariance")


# ---------------------------------------------------------------------------
# Fourier coefficient files: one line per mode, "k re im"
# ---------------------------------------------------------------------------

def write_fourier_file(path, f: FourierStatistic) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for k in range(-f.band, f.band + 1):
            v = f.get(k)
            fh.write(f"{k} {v.real!r} {v.imag!r}\n")


def read_fourier_file(path, real: bool = True) -> FourierStatistic:
    coeffs: dict[int, complex] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'k re im', got {line!r}")
            try:
                k = int(parts[0])
                v = complex(float(parts[1]), float(parts[2]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: unparsable numbers") from exc
            if k in coeffs:
                raise ValueError(f"{path}:{lineno}: duplicate mode k={k}")
            coeffs[k] = v
    return FourierStatistic.from_dict(coeffs, real=real)
