"""Spatial-domain projection onto the equivariant subspace.

For a finite group acting unitarily on both sides of a linear layer, the
group average (1/|G|) sum_g rho_out(g)^* W rho_in(g) is the orthogonal
projection (in the Hilbert-Schmidt sense) onto the operators that commute
with the action. A dense constraint-solve oracle is shipped alongside for
cross-validation, plus the specialisation to C4-steerable convolution
kernels where the group acts by quarter-turn spatial rotation combined
with cyclic shifts of the orientation axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import CapacityError
from .groups import FiniteGroup, Representation, same_group
from .linalg import as_complex_matrix, tree_sum

COMMUTANT_DIM_CAP = 4096
_GS_DROP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearLayerSpec:
    """A weight matrix together with the group actions on its two ends."""

    weight: np.ndarray
    rep_in: Representation
    rep_out: Representation

    def __post_init__(self):
        w = as_complex_matrix(self.weight, "weight")
        if not same_group(self.rep_in.group, self.rep_out.group):
            raise ValueError("rep_in and rep_out must share the group")
        if w.shape != (self.rep_out.dim, self.rep_in.dim):
            raise ValueError(
                f"weight shape {w.shape} does not match representation dims "
                f"({self.rep_out.dim}, {self.rep_in.dim})"
            )
        object.__setattr__(self, "weight", w)

    @property
    def group(self) -> FiniteGroup:
        return self.rep_in.group


def project_finite(layer: LinearLayerSpec) -> np.ndarray:
    """Group-average projection of the layer weight.

    Terms are reduced with a fixed pairwise tree so the result is bit-stable
    across backends' term order and, for power-of-two group orders acting by
    permutations, an exact fixed point.
    """
    kernels = backend.active_backend()
    terms = kernels.reynolds_terms(
        np.ascontiguousarray(layer.rep_out.matrices),
        np.ascontiguousarray(layer.weight),
        np.ascontiguousarray(layer.rep_in.matrices),
    )
    return tree_sum(terms) / layer.group.order


def orbit_decompose(layer: LinearLayerSpec):
    """Split the weight into (equivariant, anti) = (P(W), W - P(W))."""
    equivariant = project_finite(layer)
    return equivariant, layer.weight - equivariant


def _commutant_constraint_gram(layer: LinearLayerSpec) -> np.ndarray:
    """Gram matrix K = sum_g C_g^* C_g of the commutation constraints.

    C_g acts on vec(X) (row-major) as vec(rho_out(g) X - X rho_in(g)), i.e.
    C_g = kron(rho_out(g), I) - kron(I, rho_in(g)^T).
    """
    d_out, d_in = layer.weight.shape
    n_vec = d_out * d_in
    eye_in = np.eye(d_in)
    eye_out = np.eye(d_out)
    gram = np.zeros((n_vec, n_vec), dtype=np.complex128)
    for g in range(layer.group.order):
        c = np.kron(layer.rep_out.matrices[g], eye_in) - np.kron(
            eye_out, layer.rep_in.matrices[g].T
        )
        gram += c.conj().T @ c
    return gram


def _modified_gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    """Orthonormalise columns (MGS with one re-orthogonalisation pass).

    Columns whose residual norm falls below 1e-10 are dropped as dependent.
    """
    basis = []
    for k in range(vectors.shape[1]):
        v = vectors[:, k].astype(np.complex128)
        for _ in range(2):
            for b in basis:
                v = v - b * np.vdot(b, v)
        nrm = np.linalg.norm(v)
        if nrm >= _GS_DROP_TOL:
            basis.append(v / nrm)
    if not basis:
        return np.zeros((vectors.shape[0], 0), dtype=np.complex128)
    return np.stack(basis, axis=1)


def commutant_oracle(layer: LinearLayerSpec) -> np.ndarray:
    """Independent projection via a dense solve of the commutation constraints.

    Builds the linear system {rho_out(g) X = X rho_in(g) for all g}, extracts
    an orthonormal basis of its null space, and projects vec(W) onto that
    span. Deliberately shares no code with project_finite.
    """
    d_out, d_in = layer.weight.shape
    if d_out * d_in > COMMUTANT_DIM_CAP:
        raise CapacityError(
            f"commutant oracle capped at {COMMUTANT_DIM_CAP} weight entries,"
            f" got {d_out * d_in}"
        )
    gram = _commutant_constraint_gram(layer)
    eigvals, eigvecs = np.linalg.eigh(gram)
    scale = max(float(eigvals[-1]), 1.0)
    candidates = eigvecs[:, eigvals <= 1e-9 * scale]
    basis = _modified_gram_schmidt(candidates)
    w_vec = layer.weight.reshape(-1)
    coeffs = basis.conj().T @ w_vec
    return (basis @ coeffs).reshape(d_out, d_in)


@dataclass(frozen=True, eq=False)
class SteerableKernel:
    """A C4-steerable convolution kernel.

    Axes: [c_out, c_in, orient_out, orient_in, row, col] with four
    orientation channels and an odd spatial size so that quarter-turn
    rotation about the kernel centre is an exact index permutation.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 6:
            raise ValueError(f"kernel must have 6 axes, got {v.ndim}")
        c_out, c_in, a, b, s1, s2 = v.shape
        if a != 4 or b != 4:
            raise ValueError("orientation axes must have length 4")
        if s1 != s2:
            raise ValueError("spatial axes must be square")
        if s1 % 2 == 0:
            raise ValueError(f"spatial size must be odd, got {s1}")
        if not np.all(np.isfinite(v)):
            raise ValueError("kernel contains non-finite values")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def c_out(self) -> int:
        return self.values.shape[0]

    @property
    def c_in(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> int:
        return self.values.shape[4]


def rot90_kernel(kernel: SteerableKernel, r: int) -> SteerableKernel:
    """Rotate the spatial axes by 90 degrees r times.

    One rotation maps the value at (i, j) to (j, s-1-i); orientation and
    channel axes are untouched.
    """
    v = kernel.values
    for _ in range(r % 4):
        v = v[..., ::-1, :].swapaxes(-2, -1)
    return SteerableKernel(np.ascontiguousarray(v))


def project_c4_kernel(kernel: SteerableKernel) -> SteerableKernel:
    """Average the four combined rotation/orientation-shift actions.

    The r-th term rotates the spatial axes by 90r degrees and cyclically
    shifts both orientation axes by r (left-multiplying the output axis by
    the shift matrix S^r and right-multiplying the input axis by S^-r).
    """
    kernels = backend.active_backend()
    terms = kernels.c4_kernel_terms(np.ascontiguousarray(kernel.values))
    return SteerableKernel(tree_sum(terms) / 4.0)


def project_c4_kernel_indexwise(kernel: SteerableKernel) -> SteerableKernel:
    """Reference form: [P(K)]_{p,a;q,b}[i,j] = 1/4 sum_r [rot_r K]_{p,a-r;q,b-r}[i,j].

    Shipped as an independent formulation of project_c4_kernel; the two must
    produce the identical array.
    """
    v = kernel.values
    terms = []
    rotated = v
    for r in range(4):
        if r:
            rotated = rotated[..., ::-1, :].swapaxes(-2, -1)
        a_idx = (np.arange(4) - r) % 4
        b_idx = (np.arange(4) - r) % 4
        terms.append(rotated[:, :, a_idx][:, :, :, b_idx])
    return SteerableKernel(tree_sum(np.stack(terms)) / 4.0)


def kernel_flatten_representations(c_out: int, c_in: int, size: int):
    """Permutation representations of C4 matching the flattened kernel action.

    Flatten a kernel to a matrix with rows (p, alpha) and columns
    (q, beta, i, j); then P(K) = project_finite of that matrix under the
    returned (rep_in, rep_out). Used as a cross-check oracle.
    """
    from .groups import make_cyclic  # local import to avoid cycle at module load

    group = make_cyclic(4)
    shift = np.zeros((4, 4))
    shift[(np.arange(4) + 1) % 4, np.arange(4)] = 1.0  # S[a, b] = 1 iff a = b+1

    spatial = np.zeros((size * size, size * size))
    for i in range(size):
        for j in range(size):
            spatial[j * size + (size - 1 - i), i * size + j] = 1.0  # (i,j)->(j,s-1-i)

    def _pows(m):
        out = [np.eye(m.shape[0])]
        for _ in range(3):
            out.append(m @ out[-1])
        return np.stack(out)

    shift_pows = _pows(shift)
    spatial_pows = _pows(spatial)
    eye_out = np.eye(c_out)
    eye_in = np.eye(c_in)
    rep_out_mats = np.stack([np.kron(eye_out, shift_pows[r]) for r in range(4)])
    rep_in_mats = np.stack(
        [np.kron(eye_in, np.kron(shift_pows[r], spatial_pows[r])) for r in range(4)]
    )
    rep_out = Representation(group, 4 * c_out, rep_out_mats.astype(np.complex128))
    rep_in = Representation(
        group, 4 * c_in * size * size, rep_in_mats.astype(np.complex128)
    )
    return rep_in, rep_out


def flatten_kernel(kernel: SteerableKernel) -> np.ndarray:
    """Matrix view with rows (p, alpha) and columns (q, beta, i, j)."""
    c_out, c_in, _, _, s, _ = kernel.values.shape
    return (
        kernel.values.transpose(0, 2, 1, 3, 4, 5)
        .reshape(c_out * 4, c_in * 4 * s * s)
        .astype(np.complex128)
    )


def unflatten_kernel(matrix: np.ndarray, c_out: int, c_in: int, size: int) -> SteerableKernel:
    """Inverse of flatten_kernel (drops any residual imaginary part)."""
    v = matrix.reshape(c_out, 4, c_in, 4, size, size).transpose(0, 2, 1, 3, 4, 5)
    return SteerableKernel(np.ascontiguousarray(v.real))
