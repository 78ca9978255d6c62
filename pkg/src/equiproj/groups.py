"""Finite groups as explicit Cayley tables, plus unitary representations.

Elements are integers ``0..n-1``. Groups are stored as full multiplication
tables so that identity, inverses and associativity can be checked
exhaustively at construction time (associativity only for ``n <= 64``).
Dihedral indexing convention: ``0..n-1`` are the rotations ``r^k``,
``n..2n-1`` are the reflections ``s*r^k``.

All objects are immutable after construction (arrays are marked read-only),
so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HOMOMORPHISM_TOL = 1e-12
UNITARITY_TOL = 1e-12
CHARACTER_TOL = 1e-10

_ASSOCIATIVITY_CHECK_CAP = 64


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """A finite group given by its multiplication table.

    ``cayley[g, h]`` is the index of the product ``g * h``.
    """

    order: int
    cayley: np.ndarray
    inverse: np.ndarray
    identity: int = 0
    name: str = ""

    def __post_init__(self):
        n = self.order
        if n < 1:
            raise ValueError(f"group order must be positive, got {n}")
        cayley = np.asarray(self.cayley, dtype=np.int64)
        if cayley.shape != (n, n):
            raise ValueError(f"cayley table must be {n}x{n}, got {cayley.shape}")
        if cayley.min() < 0 or cayley.max() >= n:
            raise ValueError("cayley table entries out of range")
        inverse = np.asarray(self.inverse, dtype=np.int64)
        if inverse.shape != (n,):
            raise ValueError("inverse array has wrong length")
        object.__setattr__(self, "cayley", _freeze(cayley))
        object.__setattr__(self, "inverse", _freeze(inverse))
        self._validate()

    def _validate(self):
        n = self.order
        e = self.identity
        idx = np.arange(n)
        if not (np.array_equal(self.cayley[e], idx) and np.array_equal(self.cayley[:, e], idx)):
            raise ValueError("identity axiom failed")
        if not np.array_equal(self.cayley[idx, self.inverse], np.full(n, e)):
            raise ValueError("inverse axiom failed")
        if not np.array_equal(self.cayley[self.inverse, idx], np.full(n, e)):
            raise ValueError("inverse axiom failed (left)")
        if n <= _ASSOCIATIVITY_CHECK_CAP:
            # (a*b)*c == a*(b*c), checked for all triples via table gathers.
            ab = self.cayley  # [a, b]
            ab_c = self.cayley[ab]  # [a, b, c]
            bc = self.cayley  # [b, c]
            a_bc = self.cayley[:, bc]  # [a, b, c]
            if not np.array_equal(ab_c, a_bc):
                raise ValueError("associativity failed")

    def mul(self, g: int, h: int) -> int:
        return int(self.cayley[g, h])

    def inv(self, g: int) -> int:
        return int(self.inverse[g])

    def elements(self) -> range:
        return range(self.order)


def same_group(a: FiniteGroup, b: FiniteGroup) -> bool:
    """Structural equality: same order and multiplication table."""
    return a is b or (a.order == b.order and np.array_equal(a.cayley, b.cayley))


def make_cyclic(n: int) -> FiniteGroup:
    """The cyclic group Z/nZ with addition mod n."""
    if n < 1:
        raise ValueError(f"cyclic group order must be >= 1, got {n}")
    idx = np.arange(n)
    cayley = (idx[:, None] + idx[None, :]) % n
    inverse = (-idx) % n
    return FiniteGroup(order=n, cayley=cayley, inverse=inverse, name=f"C{n}")


def make_dihedral(n: int) -> FiniteGroup:
    """The dihedral group D_n of order 2n, presentation s*r*s = r^-1.

    Indices ``k`` are rotations ``r^k``; indices ``n + k`` are ``s*r^k``.
    """
    if n < 1:
        raise ValueError(f"dihedral parameter must be >= 1, got {n}")
    order = 2 * n
    cayley = np.empty((order, order), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            cayley[a, b] = (a + b) % n  # r^a r^b
            cayley[a, n + b] = n + (b - a) % n  # r^a (s r^b) = s r^(b-a)
            cayley[n + a, b] = n + (a + b) % n  # (s r^a) r^b = s r^(a+b)
            cayley[n + a, n + b] = (b - a) % n  # (s r^a)(s r^b) = r^(b-a)
    inverse = np.empty(order, dtype=np.int64)
    inverse[:n] = (-np.arange(n)) % n
    inverse[n:] = n + np.arange(n)  # reflections are involutions
    return FiniteGroup(order=order, cayley=cayley, inverse=inverse, name=f"D{n}")


@dataclass(frozen=True, eq=False)
class Representation:
    """A unitary matrix representation of a finite group.

    ``matrices[g]`` is the d x d complex matrix of element ``g``. The
    homomorphism property is checked on all |G|^2 pairs and unitarity on all
    elements at construction, both to 1e-12; the identity element must map to
    the exact identity matrix. Use :meth:`unchecked` only for benchmarks.
    """

    group: FiniteGroup
    dim: int
    matrices: np.ndarray
    label: str = ""
    _skip_validation: bool = field(default=False, repr=False)

    def __post_init__(self):
        mats = np.ascontiguousarray(np.asarray(self.matrices, dtype=np.complex128))
        if mats.shape != (self.group.order, self.dim, self.dim):
            raise ValueError(
                f"matrices must have shape ({self.group.order}, {self.dim}, {self.dim}),"
                f" got {mats.shape}"
            )
        object.__setattr__(self, "matrices", _freeze(mats))
        if not self._skip_validation:
            self._validate()

    @classmethod
    def unchecked(cls, group: FiniteGroup, dim: int, matrices: np.ndarray,
                  label: str = "") -> "Representation":
        """Skip invariant validation (benchmark use only)."""
        return cls(group, dim, matrices, label, _skip_validation=True)

    def _validate(self):
        mats = self.matrices
        eye = np.eye(self.dim, dtype=np.complex128)
        if not np.array_equal(mats[self.group.identity], eye):
            raise ValueError("identity element must map to the exact identity matrix")
        # Unitarity for every element.
        gram = mats @ mats.conj().transpose(0, 2, 1)
        if np.max(np.abs(gram - eye)) > UNITARITY_TOL:
            raise ValueError("representation matrices are not unitary to 1e-12")
        # Homomorphism on all pairs: rho(g*h) == rho(g) rho(h).
        prod = mats[:, None] @ mats[None, :]
        expected = mats[self.group.cayley]
        if np.max(np.abs(prod - expected)) > HOMOMORPHISM_TOL:
            raise ValueError("homomorphism property failed at 1e-12")

    def character(self) -> np.ndarray:
        """chi(g) = trace of the matrix of g, for every element."""
        return np.trace(self.matrices, axis1=1, axis2=2)


def regular_representation(group: FiniteGroup) -> Representation:
    """Left regular representation by permutation matrices.

    ``matrices[g][x, y] = 1`` iff ``x = g * y``, realising
    ``(tau(g) f)(x) = f(g^-1 x)`` on functions over the group.
    """
    n = group.order
    mats = np.zeros((n, n, n), dtype=np.complex128)
    cols = np.arange(n)
    for g in range(n):
        mats[g, group.cayley[g, cols], cols] = 1.0
    return Representation(group, n, mats, label="regular")


def tensor_representation(a: Representation, b: Representation) -> Representation:
    """Kronecker product representation g -> kron(a(g), b(g))."""
    if not same_group(a.group, b.group):
        raise ValueError("tensor product requires representations of the same group")
    n = a.group.order
    mats = np.einsum("gij,gkl->gikjl", a.matrices, b.matrices).reshape(
        n, a.dim * b.dim, a.dim * b.dim
    )
    label = f"({a.label})x({b.label})" if a.label or b.label else ""
    return Representation(a.group, a.dim * b.dim, mats, label=label)


def conjugate_representation(a: Representation) -> Representation:
    """Elementwise complex conjugate (the dual of a unitary representation)."""
    label = f"conj({a.label})" if a.label else ""
    return Representation(a.group, a.dim, a.matrices.conj(), label=label)


def direct_sum_representation(a: Representation, b: Representation) -> Representation:
    """Block-diagonal direct sum of two representations of the same group."""
    if not same_group(a.group, b.group):
        raise ValueError("direct sum requires representations of the same group")
    n = a.group.order
    d = a.dim + b.dim
    mats = np.zeros((n, d, d), dtype=np.complex128)
    mats[:, : a.dim, : a.dim] = a.matrices
    mats[:, a.dim :, a.dim :] = b.matrices
    return Representation(a.group, d, mats)


def conjugated_by_unitary(rep: Representation, u: np.ndarray) -> Representation:
    """Change of basis g -> U rho(g) U^*; U must be unitary."""
    u = np.asarray(u, dtype=np.complex128)
    mats = u @ rep.matrices @ u.conj().T
    mats[rep.group.identity] = np.eye(rep.dim)
    return Representation(rep.group, rep.dim, mats)


@dataclass(frozen=True, eq=False)
class IrrepCatalogue:
    """A complete list of irreducible representations of a group.

    Completeness is certified by the dimension count sum(d^2) = |G| and by
    orthonormality of the characters under (1/|G|) sum_g chi(g) conj(chi'(g)).
    """

    group: FiniteGroup
    irreps: list
    completeness_checked: bool = False

    def __post_init__(self):
        for rep in self.irreps:
            if not same_group(rep.group, self.group):
                raise ValueError("irrep catalogue mixes groups")
        if self.completeness_checked:
            self._verify()

    def _verify(self):
        dims = np.array([rep.dim for rep in self.irreps])
        if int(np.sum(dims**2)) != self.group.order:
            raise ValueError("Peter-Weyl dimension count failed")
        chars = np.stack([rep.character() for rep in self.irreps])
        gram = chars @ chars.conj().T / self.group.order
        if np.max(np.abs(gram - np.eye(len(self.irreps)))) > CHARACTER_TOL:
            raise ValueError("character orthonormality failed at 1e-10")

    def __len__(self) -> int:
        return len(self.irreps)

    def dims(self) -> np.ndarray:
        return np.array([rep.dim for rep in self.irreps], dtype=np.int64)


def cyclic_irreps(n: int) -> IrrepCatalogue:
    """All irreps of Z/nZ: the characters pi_k(g) = exp(2*pi*i*k*g/n).

    Label ``k=0`` is the trivial representation.
    """
    group = make_cyclic(n)
    irreps = []
    for k in range(n):
        angles = 2.0 * np.pi * k * np.arange(n) / n
        mats = np.exp(1j * angles).reshape(n, 1, 1)
        mats[0] = 1.0  # identity exact
        irreps.append(Representation(group, 1, mats, label=f"k={k}"))
    return IrrepCatalogue(group=group, irreps=irreps, completeness_checked=True)


def trivial_representation(group: FiniteGroup, dim: int = 1) -> Representation:
    """The trivial action of any group on C^dim."""
    mats = np.broadcast_to(
        np.eye(dim, dtype=np.complex128), (group.order, dim, dim)
    ).copy()
    return Representation(group, dim, mats, label="trivial")
