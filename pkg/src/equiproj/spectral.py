"""Fourier-domain machinery on finite groups.

The forward transform carries the uniform Haar weight,
``fhat(pi) = (1/|G|) sum_g f(g) pi(g)^*``, and inversion restores
``f(g) = sum_pi d_pi tr(fhat(pi) pi(g))``. Operators between group-indexed
feature spaces are conjugated into a Peter-Weyl block basis in which
equivariant maps are block-diagonal across irreps; projriction then amounts
to masking off-diagonal blocks and group-averaging the diagonal ones. For
cyclic groups acting on themselves with scalar fibers this collapses to the
classical fact that the nearest circulant is obtained by masking the
cross-spectral matrix (or, equivalently, averaging wrapped diagonals).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .groups import FiniteGroup, IrrepCatalogue, Representation, same_group
from .linalg import as_complex_matrix, solve_least_squares, tree_sum


@dataclass(frozen=True, eq=False)
class GroupFunction:
    """A complex-valued function on a finite group, one value per element."""

    group: FiniteGroup
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.group.order,):
            raise ValueError(
                f"values must have length {self.group.order}, got {v.shape}"
            )
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ValueError("group function contains non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class FourierBlocks:
    """Per-irrep Fourier coefficients, aligned with the catalogue order."""

    catalogue: IrrepCatalogue
    blocks: list

    def __post_init__(self):
        if len(self.blocks) != len(self.catalogue.irreps):
            raise ValueError("one block per irrep required")
        for blk, rep in zip(self.blocks, self.catalogue.irreps):
            if blk.shape != (rep.dim, rep.dim):
                raise ValueError("block shape does not match irrep dimension")


def trivial_irrep_index(cat: IrrepCatalogue) -> int:
    for idx, rep in enumerate(cat.irreps):
        if rep.dim == 1 and np.allclose(rep.matrices, 1.0, atol=1e-14):
            return idx
    raise ValueError("catalogue has no trivial representation")


def fourier_transform(f: GroupFunction, cat: IrrepCatalogue) -> FourierBlocks:
    """fhat(pi) = (1/|G|) sum_g f(g) pi(g)^* for every irrep in the catalogue."""
    if not same_group(f.group, cat.group):
        raise ValueError("function and catalogue must share the group")
    n = f.group.order
    blocks = []
    for rep in cat.irreps:
        stack = f.values[:, None, None] * rep.matrices.conj().transpose(0, 2, 1)
        blocks.append(tree_sum(stack) / n)
    return FourierBlocks(catalogue=cat, blocks=blocks)


def inverse_fourier_transform(b: FourierBlocks) -> GroupFunction:
    """f(g) = sum_pi d_pi tr(fhat(pi) pi(g)); requires a complete catalogue."""
    cat = b.catalogue
    if not cat.completeness_checked:
        raise ValueError("inversion requires a completeness-checked catalogue")
    n = cat.group.order
    values = np.zeros(n, dtype=np.complex128)
    for blk, rep in zip(b.blocks, cat.irreps):
        values += rep.dim * np.einsum("ij,gji->g", blk, rep.matrices)
    return GroupFunction(group=cat.group, values=values)


def project_invariant(f: GroupFunction, cat: IrrepCatalogue) -> GroupFunction:
    """Zero every non-trivial Fourier block and invert.

    The result is the constant function whose value is the mean of f.
    """
    blocks = fourier_transform(f, cat)
    keep = trivial_irrep_index(cat)
    masked = [
        blk if idx == keep else np.zeros_like(blk)
        for idx, blk in enumerate(blocks.blocks)
    ]
    return inverse_fourier_transform(FourierBlocks(catalogue=cat, blocks=masked))


def peter_weyl_matrix(cat: IrrepCatalogue) -> np.ndarray:
    """Unitary change of basis from group-element values to matrix coefficients.

    Row (pi, i, j) -- irreps in catalogue order, i varying slowest -- holds
    sqrt(d_pi / |G|) * conj(pi(g)_ij) across columns g. Unitarity is Schur
    orthogonality; for cyclic groups this is the normalised DFT matrix.
    """
    if not cat.completeness_checked:
        raise ValueError("Peter-Weyl basis requires a complete catalogue")
    n = cat.group.order
    rows = []
    for rep in cat.irreps:
        scale = np.sqrt(rep.dim / n)
        coeffs = scale * rep.matrices.conj()  # [g, i, j]
        rows.append(coeffs.transpose(1, 2, 0).reshape(rep.dim * rep.dim, n))
    u = np.concatenate(rows, axis=0)
    if u.shape != (n, n):
        raise ValueError("catalogue dimension count does not match group order")
    return u


@dataclass(frozen=True)
class BlockLayout:
    """Row/column bookkeeping for the Peter-Weyl operator basis.

    Within one irrep block the V_pi index varies slowest, then the matrix
    coefficient column index, then the fiber index (fastest).
    """

    irrep_dims: tuple
    fiber_dim: int
    offsets: tuple = field(init=False)

    def __post_init__(self):
        sizes = [d * d * self.fiber_dim for d in self.irrep_dims]
        offs = np.concatenate([[0], np.cumsum(sizes)])
        object.__setattr__(self, "offsets", tuple(int(o) for o in offs))

    def span(self, idx: int) -> slice:
        return slice(self.offsets[idx], self.offsets[idx + 1])


@dataclass(frozen=True, eq=False)
class OperatorBlocks:
    """An operator expressed in the Peter-Weyl basis on both sides."""

    catalogue: IrrepCatalogue
    fiber_in_dim: int
    fiber_out_dim: int
    matrix: np.ndarray
    row_layout: BlockLayout
    col_layout: BlockLayout

    def block(self, pi_idx: int, sigma_idx: int) -> np.ndarray:
        return self.matrix[self.row_layout.span(pi_idx), self.col_layout.span(sigma_idx)]

    def blocks(self) -> dict:
        m = len(self.catalogue.irreps)
        return {(i, j): self.block(i, j) for i in range(m) for j in range(m)}


def _fiber_transform(cat: IrrepCatalogue, fiber_dim: int) -> np.ndarray:
    return np.kron(peter_weyl_matrix(cat), np.eye(fiber_dim))


def operator_fourier(
    t: np.ndarray,
    cat: IrrepCatalogue,
    fiber_in: Representation,
    fiber_out: Representation,
) -> OperatorBlocks:
    """Change of basis of an operator on group-indexed feature vectors.

    ``t`` maps vectors indexed (group element major, fiber minor) of size
    |G| * dim(fiber_in) to the analogous output space. The transform is
    unitary, so Frobenius norms are preserved.
    """
    t = as_complex_matrix(t, "operator")
    if not (same_group(cat.group, fiber_in.group) and same_group(cat.group, fiber_out.group)):
        raise ValueError("catalogue and fiber representations must share the group")
    n = cat.group.order
    expected = (n * fiber_out.dim, n * fiber_in.dim)
    if t.shape != expected:
        raise ValueError(f"operator shape {t.shape} does not match {expected}")
    u_out = _fiber_transform(cat, fiber_out.dim)
    u_in = _fiber_transform(cat, fiber_in.dim)
    transformed = u_out @ t @ u_in.conj().T
    dims = tuple(int(d) for d in cat.dims())
    return OperatorBlocks(
        catalogue=cat,
        fiber_in_dim=fiber_in.dim,
        fiber_out_dim=fiber_out.dim,
        matrix=transformed,
        row_layout=BlockLayout(dims, fiber_out.dim),
        col_layout=BlockLayout(dims, fiber_in.dim),
    )


def operator_inverse_fourier(blocks: OperatorBlocks) -> np.ndarray:
    """Back to the spatial (group-element) basis."""
    u_out = _fiber_transform(blocks.catalogue, blocks.fiber_out_dim)
    u_in = _fiber_transform(blocks.catalogue, blocks.fiber_in_dim)
    return u_out.conj().T @ blocks.matrix @ u_in


def _block_action(rep_irrep: Representation, fiber: Representation) -> np.ndarray:
    """Per-element action on one diagonal block: conj(pi(g)) (x) I (x) rho(g)."""
    n = rep_irrep.group.order
    d = rep_irrep.dim
    eye = np.eye(d)
    mats = np.empty((n, d * d * fiber.dim, d * d * fiber.dim), dtype=np.complex128)
    for g in range(n):
        mats[g] = np.kron(rep_irrep.matrices[g].conj(), np.kron(eye, fiber.matrices[g]))
    return mats


def project_equivariant_spectral(
    t: np.ndarray,
    cat: IrrepCatalogue,
    fiber_in: Representation,
    fiber_out: Representation,
) -> np.ndarray:
    """Spectral-domain equivariant projection.

    Transforms to Peter-Weyl blocks, zeroes every cross-irrep block,
    replaces each diagonal block by its group average under the induced
    conjugation, and transforms back. Matches the spatial group-average
    projection whenever no cross-frequency intertwiners exist between the
    two fiber actions (in particular for scalar fibers and for fibers built
    from a single matching harmonic).
    """
    blocks = operator_fourier(t, cat, fiber_in, fiber_out)
    m = len(cat.irreps)
    n = cat.group.order
    result = np.zeros_like(blocks.matrix)
    for idx in range(m):
        rep = cat.irreps[idx]
        diag = blocks.block(idx, idx)
        a_out = _block_action(rep, fiber_out)
        a_in = _block_action(rep, fiber_in)
        terms = a_out.conj().transpose(0, 2, 1) @ diag @ a_in
        result[blocks.row_layout.span(idx), blocks.col_layout.span(idx)] = (
            tree_sum(terms) / n
        )
    projected = OperatorBlocks(
        catalogue=cat,
        fiber_in_dim=blocks.fiber_in_dim,
        fiber_out_dim=blocks.fiber_out_dim,
        matrix=result,
        row_layout=blocks.row_layout,
        col_layout=blocks.col_layout,
    )
    return operator_inverse_fourier(projected)


def fit_isotypic_block(block: np.ndarray, irrep_dim: int):
    """Least-squares fit of block ~ kron(I_d, B); returns (B, residual).

    Used to verify that equivariant operators act as the identity on the
    irrep factor and freely on the multiplicity factor.
    """
    block = as_complex_matrix(block, "block")
    rows, cols = block.shape
    if rows % irrep_dim or cols % irrep_dim:
        raise ValueError("block shape incompatible with irrep dimension")
    m_out = rows // irrep_dim
    m_in = cols // irrep_dim
    design = np.zeros((rows * cols, m_out * m_in), dtype=np.complex128)
    eye = np.eye(irrep_dim)
    for a in range(m_out):
        for b in range(m_in):
            basis_elem = np.zeros((m_out, m_in))
            basis_elem[a, b] = 1.0
            design[:, a * m_in + b] = np.kron(eye, basis_elem).reshape(-1)
    fit = solve_least_squares(design, block.reshape(-1))
    b_mat = fit.solution.reshape(m_out, m_in)
    return b_mat, fit.residual


def project_equivariant_circulant(t: np.ndarray, method: str = "fft") -> np.ndarray:
    """Nearest circulant in Frobenius norm.

    ``method='fft'`` masks the cross-spectral matrix (the fast path);
    ``method='diag'`` averages wrapped diagonals directly and is shipped as
    an independent oracle. Both agree to machine precision.
    """
    t = as_complex_matrix(t, "operator")
    n, m = t.shape
    if n != m:
        raise ValueError(f"circulant projection requires a square matrix, got {t.shape}")
    if method == "diag":
        kernels = backend.active_backend()
        stack = kernels.circulant_diagonal_sums(np.ascontiguousarray(t))
        return tree_sum(stack) / n
    if method != "fft":
        raise ValueError(f"unknown method {method!r}")
    spec = np.fft.fft(np.fft.ifft(t, axis=1), axis=0)
    masked = np.diag(np.diag(spec))
    return np.fft.ifft(np.fft.fft(masked, axis=1), axis=0)


def harmonic_mask_matrix(
    degrees_out: np.ndarray, degrees_in: np.ndarray, c_out: int, c_in: int
) -> np.ndarray:
    """0/1 mask keeping only blocks whose harmonic degrees match.

    Layout is degree-major, channel-minor on both axes.
    """
    degrees_out = np.asarray(degrees_out)
    degrees_in = np.asarray(degrees_in)
    keep = (degrees_out[:, None] == degrees_in[None, :]).astype(np.float64)
    return np.kron(keep, np.ones((c_out, c_in)))


def harmonic_mask(
    weights: np.ndarray, degrees_out: np.ndarray, degrees_in: np.ndarray
) -> np.ndarray:
    """Zero every block whose output and input harmonic degrees differ.

    ``weights`` has shape (len(degrees_out) * C_out, len(degrees_in) * C_in)
    in degree-major, channel-minor layout; channel counts are inferred.
    """
    weights = as_complex_matrix(weights, "weights")
    degrees_out = np.asarray(degrees_out)
    degrees_in = np.asarray(degrees_in)
    if degrees_out.ndim != 1 or degrees_in.ndim != 1 or not degrees_out.size or not degrees_in.size:
        raise ValueError("degree arrays must be non-empty 1-D")
    rows, cols = weights.shape
    if rows % degrees_out.size or cols % degrees_in.size:
        raise ValueError(
            f"weights shape {weights.shape} incompatible with "
            f"{degrees_out.size} output / {degrees_in.size} input degrees"
        )
    c_out = rows // degrees_out.size
    c_in = cols // degrees_in.size
    return weights * harmonic_mask_matrix(degrees_out, degrees_in, c_out, c_in)
