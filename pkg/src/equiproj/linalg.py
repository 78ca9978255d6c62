"""Dense complex matrix helpers: norms, inner products, least squares.

Matrices are plain ``numpy.ndarray`` of dtype complex128. The norm family
covers the spectral norm (largest singular value, computed by power
iteration on A*A with a deterministic start vector), the Frobenius norm,
the entrywise infinity norm, and row-wise mixed (p, q)-norms with
p, q in {1, 2, 3}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, RankDeficiencyError

SPECTRAL_TOL = 1e-12
SPECTRAL_MAX_ITER = 10_000
_MIXED_EXPONENTS = (1, 2, 3)


@dataclass(frozen=True)
class NormKind:
    """Tagged choice of matrix norm; use the module constants or mixed()."""

    kind: str
    p: int = 0
    q: int = 0

    def __post_init__(self):
        if self.kind not in ("spectral", "frobenius", "entry_infinity", "mixed"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "mixed":
            if self.p not in _MIXED_EXPONENTS or self.q not in _MIXED_EXPONENTS:
                raise ValueError("mixed norm exponents must lie in {1, 2, 3}")

    def __str__(self) -> str:
        if self.kind == "mixed":
            return f"mixed:{self.p}:{self.q}"
        return self.kind


SPECTRAL = NormKind("spectral")
FROBENIUS = NormKind("frobenius")
ENTRY_INFINITY = NormKind("entry_infinity")


def mixed(p: int, q: int) -> NormKind:
    return NormKind("mixed", p, q)


def parse_norm_kind(text: str) -> NormKind:
    """Parse 'spectral' | 'frobenius' | 'entry_infinity' | 'mixed:p:q'."""
    parts = text.strip().lower().split(":")
    if parts[0] == "mixed":
        if len(parts) != 3:
            raise ValueError(f"mixed norm spec must be 'mixed:p:q', got {text!r}")
        return mixed(int(parts[1]), int(parts[2]))
    if len(parts) != 1:
        raise ValueError(f"malformed norm spec {text!r}")
    return NormKind(parts[0])


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a finite 2-D complex128 array."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_complex_matrix(a, "a")
    b = as_complex_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch for matmul: {a.shape} @ {b.shape}")
    return a @ b


def conj_transpose(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128).conj().T


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product sum_ij a_ij conj(b_ij)."""
    a = as_complex_matrix(a, "a")
    b = as_complex_matrix(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch for hs_inner: {a.shape} vs {b.shape}")
    return complex(np.sum(a * b.conj()))


def tree_sum(stack: np.ndarray) -> np.ndarray:
    """Pairwise (fixed-pairing) sum along axis 0; bit-stable reduction order."""
    stack = np.asarray(stack)
    while stack.shape[0] > 1:
        k = stack.shape[0]
        if k % 2:
            tail = stack[-1:]
            stack = stack[:-1]
        else:
            tail = None
        stack = stack[0::2] + stack[1::2]
        if tail is not None:
            stack = np.concatenate([stack, tail], axis=0)
    return stack[0]


def _power_iteration_start(n: int) -> np.ndarray:
    # All-ones plus a small index ramp; avoids starts orthogonal to the top
    # singular vector while staying deterministic.
    v = 1.0 + 1e-3 * (np.arange(n) + 1.0) / n
    return (v / np.linalg.norm(v)).astype(np.complex128)


_GRAM_SQUARINGS = 10


def spectral_norm_with_vectors(a: np.ndarray):
    """Top singular triple (sigma, u, v) of a via power iteration on A*A.

    The Gram matrix is repeatedly squared (with renormalisation) before
    iterating, which amplifies the spectral gap so that nearly degenerate
    top singular pairs still converge within the iteration cap; the
    Rayleigh value is always taken against the original operator. Stops
    when the squared-norm estimate changes by less than 1e-12 relatively;
    raises ConvergenceError after 10 000 iterations.
    """
    a = as_complex_matrix(a, "a")
    rows, cols = a.shape
    if a.size == 0 or not np.any(a):
        return (
            0.0,
            np.zeros(rows, dtype=np.complex128),
            np.zeros(cols, dtype=np.complex128),
        )
    gram = a.conj().T @ a
    iterate = gram / np.max(np.abs(gram))
    for _ in range(_GRAM_SQUARINGS):
        iterate = iterate @ iterate
        peak = np.max(np.abs(iterate))
        if peak == 0.0:  # underflow: gap already maximally amplified
            iterate = gram / np.max(np.abs(gram))
            break
        iterate /= peak
    v = _power_iteration_start(cols)
    lam = 0.0
    for iteration in range(1, SPECTRAL_MAX_ITER + 1):
        lam_new = float(np.real(np.vdot(v, gram @ v)))
        w = iterate @ v
        wnorm = np.linalg.norm(w)
        if wnorm == 0.0:
            # v landed exactly in the null space; restart deterministically.
            v = np.zeros(cols, dtype=np.complex128)
            v[iteration % cols] = 1.0
            continue
        v = w / wnorm
        if abs(lam_new - lam) <= SPECTRAL_TOL * max(abs(lam_new), 1e-300):
            lam = lam_new
            break
        lam = lam_new
    else:
        raise ConvergenceError("spectral norm power iteration did not converge",
                               SPECTRAL_MAX_ITER)
    sigma = math.sqrt(max(lam, 0.0))
    av = a @ v
    u = av / sigma if sigma > 0 else np.zeros(rows, dtype=np.complex128)
    return sigma, u, v


def norm(a: np.ndarray, kind: NormKind = FROBENIUS) -> float:
    a = as_complex_matrix(a, "a")
    if kind.kind == "frobenius":
        return float(np.sqrt(np.sum(np.abs(a) ** 2)))
    if kind.kind == "entry_infinity":
        return float(np.max(np.abs(a))) if a.size else 0.0
    if kind.kind == "spectral":
        return spectral_norm_with_vectors(a)[0]
    # Row-wise mixed norm: inner exponent p over columns, outer q over rows.
    p, q = kind.p, kind.q
    row = np.sum(np.abs(a) ** p, axis=1)
    return float(np.sum(row ** (q / p)) ** (1.0 / q))


def norm_gradient(a: np.ndarray, kind: NormKind = FROBENIUS) -> np.ndarray:
    """Gradient G of A -> norm(A) such that d norm = Re <G, dA>_HS.

    Subgradient conventions at ties/zeros: zero matrix maps to zero;
    the entrywise-infinity norm picks the lexicographically first maximiser;
    the spectral norm uses the power-iteration singular pair u v^*.
    """
    a = as_complex_matrix(a, "a")
    if not np.any(a):
        return np.zeros_like(a)
    if kind.kind == "frobenius":
        return a / norm(a, FROBENIUS)
    if kind.kind == "entry_infinity":
        mags = np.abs(a)
        i, j = np.unravel_index(int(np.argmax(mags)), a.shape)
        g = np.zeros_like(a)
        g[i, j] = a[i, j] / mags[i, j]
        return g
    if kind.kind == "spectral":
        _, u, v = spectral_norm_with_vectors(a)
        return np.outer(u, v.conj())
    p, q = kind.p, kind.q
    mags = np.abs(a)
    row = np.sum(mags**p, axis=1)
    value = float(np.sum(row ** (q / p)) ** (1.0 / q))
    if value == 0.0:
        return np.zeros_like(a)
    phase = np.zeros_like(a)
    nz = mags > 0
    phase[nz] = a[nz] / mags[nz]
    row_factor = np.where(row > 0, row ** (q / p - 1.0), 0.0)
    return value ** (1 - q) * row_factor[:, None] * mags ** (p - 1) * phase


@dataclass(frozen=True)
class LeastSquaresResult:
    solution: np.ndarray
    residual: float


def solve_least_squares(a: np.ndarray, b: np.ndarray) -> LeastSquaresResult:
    """Minimise ||a x - b||_F for tall full-column-rank a.

    Raises RankDeficiencyError (carrying the numerical rank) if the columns
    of a are numerically dependent.
    """
    a = as_complex_matrix(a, "a")
    b = np.asarray(b, dtype=np.complex128)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if a.shape[0] < a.shape[1]:
        raise ValueError("least squares requires rows >= cols")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"shape mismatch: a {a.shape} vs b {b.shape}")
    x, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < a.shape[1]:
        raise RankDeficiencyError("least-squares matrix is rank deficient", int(rank))
    residual = float(np.linalg.norm(a @ x - b))
    if squeeze:
        x = x[:, 0]
    return LeastSquaresResult(solution=x, residual=residual)
