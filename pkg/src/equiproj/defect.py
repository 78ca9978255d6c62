"""Equivariance-defect metrics and executable bound checks.

The defect of a layer at a group element is ||rho_out(g) W - W rho_in(g)||;
its maximum over the group is the worst-case defect. In the operator norm
this is sandwiched between the distance to the equivariant subspace and
twice that distance, and composite networks obey a per-stage decomposition
weighted by downstream Lipschitz constants. Both inequalities are verified
here on random instances rather than trusted.
"""

from __future__ import annotations

import io as _io
import csv
from dataclasses import dataclass

import numpy as np

from .errors import BoundViolationError, ModelEvaluationError
from .groups import same_group
from .linalg import SPECTRAL, NormKind, norm, parse_norm_kind
from .projection import LinearLayerSpec, SteerableKernel, project_finite

SANDWICH_SLACK = 1e-9


@dataclass(frozen=True)
class DefectReport:
    """Per-element defects plus the worst case and projection distance."""

    element_indices: np.ndarray
    defects: np.ndarray
    worst_case: float
    projection_distance: float
    norm_kind: NormKind

    def to_csv_text(self) -> str:
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["norm_kind", "worst_case", "projection_distance"])
        writer.writerow(
            [str(self.norm_kind), repr(self.worst_case), repr(self.projection_distance)]
        )
        writer.writerow(["element_index", "defect"])
        for idx, val in zip(self.element_indices, self.defects):
            writer.writerow([int(idx), repr(float(val))])
        return buf.getvalue()

    @classmethod
    def from_csv_text(cls, text: str) -> "DefectReport":
        rows = list(csv.reader(_io.StringIO(text)))
        if len(rows) < 3 or rows[0] != ["norm_kind", "worst_case", "projection_distance"]:
            raise ValueError("malformed defect report CSV")
        kind = parse_norm_kind(rows[1][0])
        worst = float(rows[1][1])
        dist = float(rows[1][2])
        if rows[2] != ["element_index", "defect"]:
            raise ValueError("malformed defect report CSV (element header)")
        idx = np.array([int(r[0]) for r in rows[3:]], dtype=np.int64)
        vals = np.array([float(r[1]) for r in rows[3:]])
        return cls(idx, vals, worst, dist, kind)


def defect_at(layer: LinearLayerSpec, g: int, kind: NormKind = SPECTRAL) -> float:
    """||rho_out(g) W - W rho_in(g)|| in the requested norm."""
    if not 0 <= g < layer.group.order:
        raise ValueError(f"element index {g} out of range for |G|={layer.group.order}")
    delta = layer.rep_out.matrices[g] @ layer.weight - layer.weight @ layer.rep_in.matrices[g]
    return norm(delta, kind)


def worst_case_defect(layer: LinearLayerSpec, kind: NormKind = SPECTRAL) -> DefectReport:
    """Exact maximum defect over the whole (finite) group.

    For the spectral norm the sandwich
    ||W - P(W)|| <= max_g defect <= 2 ||W - P(W)|| is asserted before
    returning; a violation beyond 1e-9 slack raises BoundViolationError.
    """
    n = layer.group.order
    defects = np.array([defect_at(layer, g, kind) for g in range(n)])
    worst = float(np.max(defects))
    distance = norm(layer.weight - project_finite(layer), kind)
    if kind.kind == "spectral":
        if not (distance <= worst + SANDWICH_SLACK and worst <= 2.0 * distance + SANDWICH_SLACK):
            raise BoundViolationError(
                f"defect sandwich violated: distance={distance!r}, worst={worst!r}"
            )
    return DefectReport(
        element_indices=np.arange(n, dtype=np.int64),
        defects=defects,
        worst_case=worst,
        projection_distance=distance,
        norm_kind=kind,
    )


def rotate2d(theta: float, points: np.ndarray) -> np.ndarray:
    """Rotate (N, 2) points about the origin by theta."""
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return points @ rot.T


def empirical_defect(model, inputs, rotations, rep_in=rotate2d, rep_out=None) -> float:
    """Sampled defect sum_{k,l} ||rho_out(g_l) T(x_k) - T(rho_in(g_l) x_k)||.

    ``model`` maps a batch of inputs to a batch of outputs; ``rep_in`` and
    ``rep_out`` map (angle, batch) to the transformed batch, with ``None``
    meaning the trivial action. The sum is not normalised, so values are
    comparable only at fixed sample/rotation counts.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    rotations = np.asarray(rotations, dtype=np.float64)
    if rotations.size == 0:
        raise ValueError("at least one rotation is required")
    base = _evaluate_model(model, inputs, rotation_index=-1)
    total = 0.0
    for l, theta in enumerate(rotations):
        moved = _evaluate_model(model, rep_in(theta, inputs), rotation_index=l)
        reference = base if rep_out is None else rep_out(theta, base)
        mismatch = np.asarray(reference) - np.asarray(moved)
        if mismatch.ndim == 1:
            total += float(np.sum(np.abs(mismatch)))
        else:
            total += float(np.sum(np.linalg.norm(mismatch.reshape(len(inputs), -1), axis=1)))
    return total


def _evaluate_model(model, batch, rotation_index):
    try:
        return model(batch)
    except Exception as exc:  # locate the offending sample for the report
        for k in range(len(batch)):
            try:
                model(batch[k : k + 1])
            except Exception:
                raise ModelEvaluationError(
                    f"model evaluation failed: {exc}", k, rotation_index
                ) from exc
        raise ModelEvaluationError(
            f"model evaluation failed: {exc}", -1, rotation_index
        ) from exc


@dataclass(frozen=True)
class ActivationSpec:
    """Interleaved activation: identity, relu (on real parts), or scaling."""

    kind: str
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "relu", "scaling"):
            raise ValueError(f"unknown activation {self.kind!r}")

    @property
    def lipschitz(self) -> float:
        return abs(self.c) if self.kind == "scaling" else 1.0

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return x
        if self.kind == "scaling":
            return self.c * x
        return np.maximum(x.real, 0.0) + 1j * x.imag


@dataclass(frozen=True, eq=False)
class LayerChain:
    """Linear layers with activations interleaved between them."""

    layers: list
    activations: list

    def __post_init__(self):
        if len(self.activations) != max(len(self.layers) - 1, 0):
            raise ValueError("need exactly one activation between consecutive layers")
        for a, b in zip(self.layers, self.layers[1:]):
            if not same_group(a.group, b.group):
                raise ValueError("all layers must share the group")
            if a.rep_out.dim != b.rep_in.dim or not np.allclose(
                a.rep_out.matrices, b.rep_in.matrices, atol=1e-12
            ):
                raise ValueError("rep_out of each stage must equal rep_in of the next")

    @property
    def group(self):
        return self.layers[0].group

    @property
    def rep_in(self):
        return self.layers[0].rep_in

    @property
    def rep_out(self):
        return self.layers[-1].rep_out

    def is_linear(self) -> bool:
        return all(act.kind in ("identity", "scaling") for act in self.activations)

    def lipschitz_constants(self) -> list:
        """Per-stage constants: spectral norms for layers, declared for activations."""
        consts = []
        for i, layer in enumerate(self.layers):
            consts.append(norm(layer.weight, SPECTRAL))
            if i < len(self.activations):
                consts.append(self.activations[i].lipschitz)
        return consts

    def composed_matrix(self) -> np.ndarray:
        """The overall linear map; only valid when is_linear()."""
        if not self.is_linear():
            raise ValueError("chain contains relu; no exact composed matrix")
        total = self.layers[0].weight
        for i, layer in enumerate(self.layers[1:]):
            total = self.activations[i].c * total if self.activations[i].kind == "scaling" else total
            total = layer.weight @ total
        return total

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Apply the chain to one vector or a batch of column vectors."""
        y = self.layers[0].weight @ x
        for act, layer in zip(self.activations, self.layers[1:]):
            y = layer.weight @ act.apply(y)
        return y


@dataclass(frozen=True)
class CompositionBoundReport:
    lhs: float
    rhs: float
    holds: bool
    sampled: bool


def _sampled_chain_defect(chain: LayerChain, n_samples: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    d_in = chain.rep_in.dim
    samples = rng.normal(size=(d_in, n_samples)) + 1j * rng.normal(size=(d_in, n_samples))
    samples /= np.linalg.norm(samples, axis=0, keepdims=True)
    worst = 0.0
    base = chain.evaluate(samples)
    for g in range(chain.group.order):
        lhs = chain.rep_out.matrices[g] @ base
        rhs = chain.evaluate(chain.rep_in.matrices[g] @ samples)
        worst = max(worst, float(np.max(np.linalg.norm(lhs - rhs, axis=0))))
    return worst


def composition_bound_check(
    chain: LayerChain,
    kind: NormKind = SPECTRAL,
    n_samples: int = 64,
    seed: int = 0,
) -> CompositionBoundReport:
    """Check E(chain) <= sum_i (prod_{m != i} L_m) E(f_i).

    The left side is exact (worst-case defect of the composed matrix) for
    identity/scaling activations; with relu it is sampled on random unit
    inputs and therefore a lower bound, which keeps the check sound.
    """
    consts = chain.lipschitz_constants()
    rhs = 0.0
    stage = 0
    for i, layer in enumerate(chain.layers):
        others = np.prod([c for m, c in enumerate(consts) if m != stage])
        rhs += float(others) * worst_case_defect(layer, kind).worst_case
        stage += 2  # skip the following activation slot (defect zero)
    if chain.is_linear():
        composed = LinearLayerSpec(
            weight=chain.composed_matrix(), rep_in=chain.rep_in, rep_out=chain.rep_out
        )
        lhs = worst_case_defect(composed, kind).worst_case
        sampled = False
    else:
        lhs = _sampled_chain_defect(chain, n_samples, seed)
        sampled = True
    return CompositionBoundReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs + SANDWICH_SLACK, sampled=sampled)


@dataclass(frozen=True)
class NetworkBoundReport:
    constant: float
    chain_defect: float
    penalty_sum: float
    holds: bool
    sampled: bool


def network_bound_constant(
    chain: LayerChain, n_samples: int = 64, seed: int = 0
) -> NetworkBoundReport:
    """The explicit network constant C = 2 (prod Lip(sigma)) max_k prod_{r!=k} ||W_r||.

    Asserts E(chain) <= C * sum_l ||W_l - P(W_l)|| (spectral norms) on the
    evaluated chain, raising BoundViolationError otherwise.
    """
    weight_norms = [norm(layer.weight, SPECTRAL) for layer in chain.layers]
    act_product = float(np.prod([act.lipschitz for act in chain.activations]))
    if len(chain.layers) == 1:
        max_prod = 1.0
    else:
        max_prod = max(
            float(np.prod([w for r, w in enumerate(weight_norms) if r != k]))
            for k in range(len(weight_norms))
        )
    constant = 2.0 * act_product * max_prod
    penalty = sum(
        norm(layer.weight - project_finite(layer), SPECTRAL) for layer in chain.layers
    )
    if chain.is_linear():
        composed = LinearLayerSpec(
            weight=chain.composed_matrix(), rep_in=chain.rep_in, rep_out=chain.rep_out
        )
        chain_defect = worst_case_defect(composed, SPECTRAL).worst_case
        sampled = False
    else:
        chain_defect = _sampled_chain_defect(chain, n_samples, seed)
        sampled = True
    holds = chain_defect <= constant * penalty + SANDWICH_SLACK
    if not holds:
        raise BoundViolationError(
            f"network bound violated: defect={chain_defect!r} > "
            f"C*penalty={constant * penalty!r}"
        )
    return NetworkBoundReport(
        constant=constant,
        chain_defect=chain_defect,
        penalty_sum=penalty,
        holds=holds,
        sampled=sampled,
    )


def c4_correlate(kernel: SteerableKernel, x: np.ndarray) -> np.ndarray:
    """Circular cross-correlation of a steerable kernel with a feature map.

    ``x`` has axes [c_in, orient, H, W]; the output sums over input channel
    and input orientation, with the kernel centred (odd size) and circular
    padding on the spatial axes.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[0] != kernel.c_in or x.shape[1] != 4:
        raise ValueError(f"feature map shape {x.shape} does not match kernel")
    h, w = x.shape[2], x.shape[3]
    s = kernel.size
    c = (s - 1) // 2
    idx_u = (np.arange(h)[:, None] + np.arange(s)[None, :] - c) % h
    idx_v = (np.arange(w)[:, None] + np.arange(s)[None, :] - c) % w
    windows = x[:, :, idx_u, :][:, :, :, :, idx_v]  # [q, b, u, i, v, j]
    return np.einsum("pqabij,qbuivj->pauv", kernel.values, windows)


def c4_feature_action(x: np.ndarray, r: int) -> np.ndarray:
    """Rotate a [*, orient, H, W] feature map by 90r degrees.

    Combines the quarter-turn grid rotation about the torus origin with the
    matching cyclic shift of the orientation axis, mirroring the kernel
    action used in the projection.
    """
    y = np.asarray(x)
    for _ in range(r % 4):
        y = y.swapaxes(-2, -1)  # y[u, v] = x[v, u]
        y = np.roll(y[..., ::-1], 1, axis=-1)  # y[u, v] -> x[(-v) % H, u]
    return np.roll(y, r % 4, axis=-3)


def c4_conv_defect(kernel: SteerableKernel, trials: int = 10, seed: int = 0,
                   grid: int = 16) -> float:
    """Relative defect of the convolution induced by a kernel.

    Draws random [c_in, 4, grid, grid] inputs and measures
    max over r in {1,2,3} and trials of
    ||act_r(conv(x)) - conv(act_r(x))||_F / ||conv(x)||_F.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.normal(size=(kernel.c_in, 4, grid, grid))
        base = c4_correlate(kernel, x)
        scale = float(np.linalg.norm(base))
        if scale == 0.0:
            continue
        for r in (1, 2, 3):
            lhs = c4_feature_action(base, r)
            rhs = c4_correlate(kernel, c4_feature_action(x, r))
            worst = max(worst, float(np.linalg.norm(lhs - rhs)) / scale)
    return worst
