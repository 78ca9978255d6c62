"""Pure-numpy implementations of the hot kernels.

These mirror the compiled extension in ``_kernels.pyx`` one to one; the
active implementation is chosen at import time in ``backend.py``. Keep the
semantics in lockstep: both sides must return per-term stacks in the same
order so that the shared deterministic tree reduction gives bit-stable
results regardless of backend.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def reynolds_terms(rho_out: np.ndarray, w: np.ndarray, rho_in: np.ndarray) -> np.ndarray:
    """Stack of rho_out[g]^* @ w @ rho_in[g] over all group elements."""
    return rho_out.conj().transpose(0, 2, 1) @ w @ rho_in


def circulant_diagonal_sums(t: np.ndarray) -> np.ndarray:
    """Stack over k of the cyclically shifted matrix t[(i+k)%n, (j+k)%n].

    Averaging the stack along axis 0 yields the nearest circulant.
    """
    n = t.shape[0]
    idx = np.arange(n)
    rows = (idx[None, :, None] + idx[:, None, None]) % n  # [k, i, 1]
    cols = (idx[None, None, :] + idx[:, None, None]) % n  # [k, 1, j]
    return t[rows, cols]


def c4_kernel_terms(values: np.ndarray) -> np.ndarray:
    """The four orbit terms S^r (rot_r K) S^-r of a steerable kernel.

    ``values`` has axes [c_out, c_in, orient_out, orient_in, row, col];
    one 90-degree rotation sends the value at (i, j) to (j, s-1-i), and the
    orientation axes cyclically shift with the same r.
    """
    terms = np.empty((4,) + values.shape, dtype=values.dtype)
    rotated = values
    for r in range(4):
        if r:
            # value at (i, j) -> (j, s-1-i): out[a, b] = in[s-1-b, a]
            rotated = rotated[..., ::-1, :].swapaxes(-2, -1)
        terms[r] = np.roll(rotated, shift=(r, r), axis=(2, 3))
    return terms
