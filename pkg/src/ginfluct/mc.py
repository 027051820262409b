"""Monte Carlo ground truth for the exact modules.

Two samplers: the gamma representation of the squared moduli (exact, O(N)
per replica, covers every radial statistic) and the full matrix route
(complex Gaussian entries of variance 1/N, eigenvalues from a dense solver)
for angular and joint statistics.  Streams are counter-based (Philox), so a
(seed, stream) pair reproduces a sample path exactly, independent of
platform or thread count.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from ._version import VERSION
from .radial import Ensemble
from .specfun import std_normal_cdf

__all__ = [
    "RngStream",
    "SampleBatch",
    "save_batch",
    "load_batch",
    "save_batch_csv",
    "sample_radial_moduli",
    "sample_ginibre_eigenvalues",
    "eig_dense",
    "estimate_mean",
    "estimate_cov",
    "KsResult",
    "ks_normal_test",
    "normalized_count_samples",
]

MAX_MATRIX_N = 512
GENERATOR_NAME = "philox4x64"

# replicas are generated in fixed-size chunks; the rule is part of the
# reproducibility contract (it fixes the order of generator consumption)
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: (seed, stream) fully determines the path."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SampleBatch:
    """Per-replica statistic values plus the provenance needed to recreate them."""

    n: int
    ensemble: Ensemble
    seed: int
    values: np.ndarray
    statistic: str = ""
    generator: str = GENERATOR_NAME
    version: str = VERSION

    @property
    def size(self) -> int:
        return len(self.values)


_MAGIC = b"GFSB"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQBQQ")  # magic, version, N, ensemble tag, seed, S
_ENS_TAG = {Ensemble.COMPLEX: 0, Ensemble.QUATERNION: 1}
_TAG_ENS = {v: k for k, v in _ENS_TAG.items()}


def save_batch(batch: SampleBatch, path) -> None:
    vals = np.ascontiguousarray(batch.values, dtype="<f8")
    header = _HEADER.pack(_MAGIC, _FORMAT_VERSION, batch.n,
                          _ENS_TAG[batch.ensemble], batch.seed, len(vals))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(vals.tobytes())


def load_batch(path) -> SampleBatch:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, fmt, n, ens_tag, seed, s = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if fmt != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {fmt}")
        data = fh.read(8 * s)
    if len(data) != 8 * s:
        raise ValueError(f"{path}: expected {s} values, file is short")
    values = np.frombuffer(data, dtype="<f8").astype(float)
    return SampleBatch(n=n, ensemble=_TAG_ENS[ens_tag], seed=seed, values=values)


def save_batch_csv(batch: SampleBatch, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# n={batch.n} ensemble={batch.ensemble.value} seed={batch.seed}"
                 f" s={batch.size} generator={batch.generator} version={batch.version}\n")
        fh.write("index,value\n")
        for i, v in enumerate(batch.values):
            fh.write(f"{i},{float(v)!r}\n")


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_radial_moduli(n: int, ens: Ensemble, rng: RngStream,
                         size: int | None = None) -> np.ndarray:
    """Moduli sets via the gamma representation; shape (N,) or (size, N).

    The set is exchangeable, not ordered by magnitude; use it only through
    symmetric statistics.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    shapes = np.array([ens.shape(ell) for ell in range(1, n + 1)], dtype=float)
    scale = ens.scale(n)
    gen = rng.generator()
    if size is None:
        s = gen.standard_gamma(shapes)
    else:
        s = np.empty((size, n))
        step = max(1, _CHUNK_ELEMENTS // n)
        for lo in range(0, size, step):
            hi = min(lo + step, size)
            s[lo:hi] = gen.standard_gamma(np.broadcast_to(shapes, (hi - lo, n)))
    return np.sqrt(s / scale)


def sample_ginibre_eigenvalues(n: int, rng: RngStream, size: int | None = None,
                               backend: str = "lapack") -> np.ndarray:
    """Eigenvalues of matrices with iid complex Gaussian entries, E|A_ij|^2 = 1/N."""
    if not 1 <= n <= MAX_MATRIX_N:
        raise ValueError(f"N must be in 1..{MAX_MATRIX_N}")
    gen = rng.generator()
    reps = 1 if size is None else size
    out = np.empty((reps, n), dtype=complex)
    sig = 1.0 / math.sqrt(2.0 * n)
    for r in range(reps):
        z = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
        try:
            out[r] = eig_dense(sig * z, backend=backend)
        except RuntimeError as exc:
            raise RuntimeError(
                f"eigensolver failure at replica {r} "
                f"(seed={rng.seed}, stream={rng.stream}): {exc}") from exc
    return out[0] if size is None else out


# ---------------------------------------------------------------------------
# dense eigensolver: Hessenberg + implicitly shifted QR, with a LAPACK
# backend behind the same accuracy contract
# ---------------------------------------------------------------------------

def _hessenberg(a: np.ndarray) -> np.ndarray:
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            continue
        alpha = -norm_x if x[0] == 0 else -x[0] / abs(x[0]) * norm_x
        v = x.copy()
        v[0] -= alpha
        norm_v = np.linalg.norm(v)
        if norm_v < 1e-300:
            continue
        v /= norm_v
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
    return h


def _eig_2x2(a, b, c, d) -> tuple[complex, complex]:
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(half_tr * half_tr - (a * d - b * c))
    return half_tr + disc, half_tr - disc


def _qr_eigenvalues(h: np.ndarray, max_sweeps: int) -> np.ndarray:
    n = h.shape[0]
    h = h.copy()
    eigs = np.empty(n, dtype=complex)
    found = 0
    hi = n - 1
    sweeps = 0
    stagnant = 0
    eps = np.finfo(float).eps
    while hi >= 0:
        # deflate tiny subdiagonals in the active block
        for k in range(hi, 0, -1):
            if abs(h[k, k - 1]) <= eps * (abs(h[k - 1, k - 1]) + abs(h[k, k])):
                h[k, k - 1] = 0.0
        if hi == 0 or h[hi, hi - 1] == 0.0:
            eigs[found] = h[hi, hi]
            found += 1
            hi -= 1
            stagnant = 0
            continue
        if hi == 1 or h[hi - 1, hi - 2] == 0.0:
            lo = hi - 1
            lam1, lam2 = _eig_2x2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi])
            eigs[found] = lam1
            eigs[found + 1] = lam2
            found += 2
            hi = lo - 1
            stagnant = 0
            continue
        lo = hi
        while lo > 0 and h[lo, lo - 1] != 0.0:
            lo -= 1
        if sweeps >= max_sweeps:
            raise RuntimeError(f"no convergence after {max_sweeps} QR sweeps")
        sweeps += 1
        stagnant += 1
        if stagnant % 12 == 0:
            # exceptional shift: breaks symmetric stagnation (e.g. unitary blocks)
            shift = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            # Wilkinson shift: trailing 2x2 eigenvalue closest to the corner
            lam1, lam2 = _eig_2x2(h[hi - 1, hi - 1], h[hi - 1, hi],
                                  h[hi, hi - 1], h[hi, hi])
            shift = lam1 if abs(lam1 - h[hi, hi]) <= abs(lam2 - h[hi, hi]) else lam2
        _qr_sweep(h, lo, hi, shift)
    return eigs


def _qr_sweep(h: np.ndarray, lo: int, hi: int, shift: complex) -> None:
    """One explicit shifted QR pass on the Hessenberg block lo..hi, in place."""
    m = hi - lo + 1
    rot = np.empty((m - 1, 2), dtype=complex)
    for k in range(lo, hi + 1):
        h[k, k] -= shift
    for k in range(lo, hi):
        a, b = h[k, k], h[k + 1, k]
        r = math.hypot(abs(a), abs(b))
        if r == 0.0:
            rot[k - lo] = (1.0, 0.0)
            continue
        ca, cb = np.conj(a) / r, np.conj(b) / r
        rot[k - lo] = (ca, cb)
        rk = h[k, k:hi + 1].copy()
        rk1 = h[k + 1, k:hi + 1].copy()
        h[k, k:hi + 1] = ca * rk + cb * rk1
        h[k + 1, k:hi + 1] = -np.conj(cb) * rk + np.conj(ca) * rk1
    for k in range(lo, hi):
        ca, cb = rot[k - lo]
        rows = slice(lo, min(k + 2, hi) + 1)
        ck = h[rows, k].copy()
        ck1 = h[rows, k + 1].copy()
        h[rows, k] = np.conj(ca) * ck + np.conj(cb) * ck1
        h[rows, k + 1] = -cb * ck + ca * ck1
    for k in range(lo, hi + 1):
        h[k, k] += shift


def eig_dense(a: np.ndarray, backend: str = "lapack") -> np.ndarray:
    """All eigenvalues of a dense square matrix.

    Both backends sit behind the same accuracy contract, checked on every
    call: the eigenvalue sum must match the trace and the sum of squares the
    trace of A^2, to 1e-10*|A|_F*N and 1e-8*|A^2|_F*N respectively.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    if n > MAX_MATRIX_N:
        raise ValueError(f"dimension {n} exceeds the supported maximum {MAX_MATRIX_N}")
    a_c = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a_c)):
        raise ValueError("matrix entries must be finite")
    if n == 0:
        return np.empty(0, dtype=complex)
    if backend == "lapack":
        lam = np.linalg.eigvals(a)
    elif backend == "qr":
        if n == 1:
            lam = np.array([complex(a[0, 0])])
        else:
            lam = _qr_eigenvalues(_hessenberg(a), max_sweeps=30 * n)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    a2 = a_c @ a_c
    norm_a = np.linalg.norm(a_c)
    norm_a2 = np.linalg.norm(a2)
    if abs(lam.sum() - np.trace(a_c)) > 1e-10 * max(norm_a, 1e-300) * n + 1e-300:
        raise RuntimeError("eigenvalue sum violates the trace contract")
    if abs((lam ** 2).sum() - np.trace(a2)) > 1e-8 * max(norm_a2, 1e-300) * n + 1e-300:
        raise RuntimeError("eigenvalue square-sum violates the trace contract")
    return lam


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def estimate_mean(values) -> tuple[float, float]:
    """(sample mean, standard error)."""
    v = np.asarray(values, dtype=float)
    s = len(v)
    if s < 2:
        raise ValueError("need at least 2 replicas")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(s))


def estimate_cov(values_f, values_g) -> tuple[float, float]:
    """Unbiased sample covariance with a jackknife standard error."""
    f = np.asarray(values_f, dtype=float)
    g = np.asarray(values_g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError("need two equal-length 1-d sequences")
    s = len(f)
    if s < 2:
        raise ValueError("need at least 2 replicas")
    fbar, gbar = f.mean(), g.mean()
    cov = float((f - fbar) @ (g - gbar) / (s - 1))
    if s == 2:
        return cov, abs(cov)
    # leave-one-out covariances from running sums, O(S)
    sf, sg = f.sum(), g.sum()
    sfg = float(f @ g)
    fi_bar = (sf - f) / (s - 1)
    gi_bar = (sg - g) / (s - 1)
    cov_i = (sfg - f * g - (s - 1) * fi_bar * gi_bar) / (s - 2)
    se = math.sqrt(max(0.0, (s - 1) / s * np.sum((cov_i - cov_i.mean()) ** 2)))
    return cov, se


@dataclass(frozen=True)
class KsResult:
    statistic: float
    threshold: float        # 1.63/sqrt(S): 1% level
    size: int
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "passed", self.statistic <= self.threshold)


def ks_normal_test(samples) -> KsResult:
    """One-sample KS distance to N(0,1) after studentizing."""
    x = np.asarray(samples, dtype=float)
    s = len(x)
    if s < 100:
        raise ValueError("need at least 100 samples")
    z = np.sort((x - x.mean()) / x.std(ddof=1))
    cdf = np.array([std_normal_cdf(v) for v in z])
    grid_hi = np.arange(1, s + 1) / s
    grid_lo = np.arange(0, s) / s
    d = max(float(np.max(grid_hi - cdf)), float(np.max(cdf - grid_lo)))
    return KsResult(statistic=d, threshold=1.63 / math.sqrt(s), size=s)


def normalized_count_samples(n: int, a: float, b: float, ens: Ensemble,
                             rng: RngStream, size: int,
                             jitter: bool = True) -> np.ndarray:
    """Standardized annulus counts from the gamma sampler.

    Counts are integers; a uniform(-1/2, 1/2) dither (drawn from the same
    stream, after all counts) removes the lattice spacing so the KS distance
    to the normal limit is meaningful.  Centering and scaling use the exact
    mean/variance, not sample estimates.
    """
    from .radial import radial_count_var, count_probabilities

    if size < 1:
        raise ValueError("size must be >= 1")
    p = count_probabilities(n, a, b, ens)
    mean = float(np.sum(p))
    var = radial_count_var(n, a, b, ens)
    if var <= 0.0:
        raise ValueError("window has zero variance; nothing to normalize")
    gen = rng.generator()
    shapes = np.array([ens.shape(ell) for ell in range(1, n + 1)], dtype=float)
    scale = ens.scale(n)
    s_lo, s_hi = scale * a * a, scale * b * b
    counts = np.empty(size)
    step = max(1, _CHUNK_ELEMENTS // n)
    for lo in range(0, size, step):
        hi = min(lo + step, size)
        sblock = gen.standard_gamma(np.broadcast_to(shapes, (hi - lo, n)))
        counts[lo:hi] = np.count_nonzero((sblock >= s_lo) & (sblock < s_hi), axis=1)
    if jitter:
        counts = counts + gen.uniform(-0.5, 0.5, size)
    return (counts - mean) / math.sqrt(var)
