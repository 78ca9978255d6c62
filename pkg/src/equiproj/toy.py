"""Approximately rotation-invariant toy classifier and its training loop.

Points in the plane are embedded into circular harmonics up to degree M
with Gaussian radial channels, passed through two complex linear layers,
combined by a degree-truncated channelwise tensor product whose degree-0
component feeds a real linear head. With harmonic-mask-projected weights
the logit is exactly rotation invariant; training penalises the masked-out
weight component (and optionally the full weight norm) to steer the model
toward invariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Tape
from .defect import empirical_defect
from .errors import TrainingDivergedError
from .linalg import FROBENIUS, NormKind, norm as matrix_norm
from .spectral import harmonic_mask_matrix

DEFECT_ROTATION_COUNT = 32  # 16 evenly spaced + 16 seeded-random angles
DEFECT_RECORD_EVERY = 20


@dataclass(frozen=True)
class TrainConfig:
    lambda_g: float = 0.0
    lambda_perp: float = 0.0
    norm_kind: NormKind = FROBENIUS
    lr: float = 0.003
    epochs: int = 200
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    hidden: int = 8
    hard_project: bool = False

    def __post_init__(self):
        if self.lambda_g < 0 or self.lambda_perp < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.lr <= 0 or self.epochs < 1:
            raise ValueError("lr must be positive and epochs >= 1")


@dataclass
class ToyModelParams:
    """Weights and fixed embedding constants of the toy classifier."""

    radial_centers: np.ndarray
    radial_width: float
    max_degree: int
    channels: int
    hidden: int
    w1: np.ndarray  # complex, ((2M+1)*hidden, (2M+1)*channels)
    w2: np.ndarray  # complex, ((2M+1)*hidden, (2M+1)*hidden)
    w_final: np.ndarray  # real, (hidden,)
    bias: float

    def degrees(self) -> np.ndarray:
        return np.arange(-self.max_degree, self.max_degree + 1)

    def masks(self):
        """Harmonic masks for (w1, w2) in the shared degree-major layout."""
        deg = self.degrees()
        m1 = harmonic_mask_matrix(deg, deg, self.hidden, self.channels)
        m2 = harmonic_mask_matrix(deg, deg, self.hidden, self.hidden)
        return m1, m2

    def trainable(self) -> dict:
        return {
            "w1_re": self.w1.real.copy(),
            "w1_im": self.w1.imag.copy(),
            "w2_re": self.w2.real.copy(),
            "w2_im": self.w2.imag.copy(),
            "w_final": self.w_final.copy(),
            "bias": np.asarray(self.bias, dtype=np.float64),
        }

    def with_trainable(self, values: dict) -> "ToyModelParams":
        return replace(
            self,
            w1=values["w1_re"] + 1j * values["w1_im"],
            w2=values["w2_re"] + 1j * values["w2_im"],
            w_final=np.asarray(values["w_final"], dtype=np.float64),
            bias=float(values["bias"]),
        )


def init_params(cfg: TrainConfig, max_degree: int = 4, channels: int = 4,
                radial_width: float = 0.5) -> ToyModelParams:
    """Seeded initialisation; complex entries uniform with fan-in scaling."""
    rng = np.random.default_rng(cfg.seed)
    n_deg = 2 * max_degree + 1
    d_in = n_deg * channels
    d_hid = n_deg * cfg.hidden
    centers = 4.0 * np.arange(channels) / (channels - 1) if channels > 1 else np.zeros(1)

    def complex_uniform(rows, cols, fan_in):
        a = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-a, a, size=(rows, cols)) + 1j * rng.uniform(
            -a, a, size=(rows, cols)
        )

    w1 = complex_uniform(d_hid, d_in, d_in)
    w2 = complex_uniform(d_hid, d_hid, d_hid)
    w_final = rng.uniform(-1, 1, size=cfg.hidden) / np.sqrt(cfg.hidden)
    return ToyModelParams(
        radial_centers=centers,
        radial_width=radial_width,
        max_degree=max_degree,
        channels=channels,
        hidden=cfg.hidden,
        w1=w1,
        w2=w2,
        w_final=w_final,
        bias=0.0,
    )


def embed_batch(points: np.ndarray, params: ToyModelParams) -> np.ndarray:
    """Harmonic embedding H[b, m, n] = b_n(r) * zhat^m for a batch of points.

    zhat = z/|z| with the convention zhat = 1 at the origin, so rotating a
    point multiplies row m by exp(i m theta).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[None, :]
    if not np.all(np.isfinite(points)):
        raise ValueError("points contain non-finite coordinates")
    z = points[:, 0] + 1j * points[:, 1]
    r = np.abs(z)
    zhat = np.ones_like(z)
    nz = r > 0
    zhat[nz] = z[nz] / r[nz]
    radial = np.exp(
        -((r[:, None] - params.radial_centers[None, :]) ** 2)
        / (2.0 * params.radial_width**2)
    )  # [b, n]
    degrees = params.degrees()
    phases = zhat[:, None] ** degrees[None, :]  # [b, m]
    return phases[:, :, None] * radial[:, None, :]


def embed(point, params: ToyModelParams) -> np.ndarray:
    """Single-point embedding of shape (2M+1, channels)."""
    return embed_batch(np.asarray(point, dtype=np.float64)[None, :], params)[0]


def _forward_values(h_flat: np.ndarray, params: ToyModelParams) -> np.ndarray:
    """Tape-free batched forward pass from flattened embeddings to logits."""
    y1 = h_flat @ params.w1.T
    y2 = y1 @ params.w2.T
    n_deg = 2 * params.max_degree + 1
    h = y2.reshape(-1, n_deg, params.hidden)
    h0 = np.sum(h * h[:, ::-1, :], axis=1)  # degree-0 tensor-product component
    return h0.real @ params.w_final + params.bias


def forward(point, params: ToyModelParams) -> float:
    """Scalar logit for one point."""
    h = embed_batch(np.asarray(point, dtype=np.float64)[None, :], params)
    return float(_forward_values(h.reshape(1, -1), params)[0])


def forward_batch(points: np.ndarray, params: ToyModelParams) -> np.ndarray:
    h = embed_batch(points, params)
    return _forward_values(h.reshape(h.shape[0], -1), params)


def model_fn(params: ToyModelParams):
    """Batched logit closure for defect evaluation."""

    def run(points):
        return forward_batch(np.asarray(points, dtype=np.float64), params)

    return run


def _loss_graph(tape: Tape, h_flat: np.ndarray, labels01: np.ndarray,
                params: ToyModelParams, cfg: TrainConfig):
    """Build the objective on a tape; returns (loss, parts, leaves)."""
    leaves = {name: tape.leaf(value) for name, value in params.trainable().items()}
    e_re = tape.constant(h_flat.real)
    e_im = tape.constant(h_flat.imag)

    def complex_linear(x_re, x_im, w_re, w_im):
        wt_re = tape.transpose(w_re)
        wt_im = tape.transpose(w_im)
        y_re = tape.matmul(x_re, wt_re) - tape.matmul(x_im, wt_im)
        y_im = tape.matmul(x_re, wt_im) + tape.matmul(x_im, wt_re)
        return y_re, y_im

    y1_re, y1_im = complex_linear(e_re, e_im, leaves["w1_re"], leaves["w1_im"])
    y2_re, y2_im = complex_linear(y1_re, y1_im, leaves["w2_re"], leaves["w2_im"])

    n_deg = 2 * params.max_degree + 1
    batch = h_flat.shape[0]
    h_re = tape.reshape(y2_re, (batch, n_deg, params.hidden))
    h_im = tape.reshape(y2_im, (batch, n_deg, params.hidden))
    # degree-0 component of the channelwise tensor product: sum_m h_m * h_{-m}
    prod = tape.sub(
        tape.mul(h_re, tape.flip(h_re, axis=1)),
        tape.mul(h_im, tape.flip(h_im, axis=1)),
    )
    h0_re = tape.sum_axis(prod, axis=1)
    logits = tape.add(tape.matvec(h0_re, leaves["w_final"]), leaves["bias"])
    task = tape.bce_with_logits(logits, labels01)

    mask1, mask2 = params.masks()
    parts = {"task": float(task.value)}
    loss = task
    penalty_g = 0.0
    penalty_perp = 0.0
    if cfg.lambda_g > 0:
        g1 = tape.complex_norm(leaves["w1_re"], leaves["w1_im"], cfg.norm_kind)
        g2 = tape.complex_norm(leaves["w2_re"], leaves["w2_im"], cfg.norm_kind)
        penalty_g = float(g1.value + g2.value)
        loss = loss + cfg.lambda_g * (g1 + g2)
    if cfg.lambda_perp > 0:
        p1 = tape.complex_norm(
            leaves["w1_re"], leaves["w1_im"], cfg.norm_kind, mask=1.0 - mask1
        )
        p2 = tape.complex_norm(
            leaves["w2_re"], leaves["w2_im"], cfg.norm_kind, mask=1.0 - mask2
        )
        penalty_perp = float(p1.value + p2.value)
        loss = loss + cfg.lambda_perp * (p1 + p2)
    parts["penalty_g"] = penalty_g
    parts["penalty_perp"] = penalty_perp
    return loss, parts, leaves


def loss(batch, params: ToyModelParams, cfg: TrainConfig) -> float:
    """Objective value on a (points, labels) batch; labels are +/-1."""
    points, labels = batch
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    if len(points) == 0:
        raise ValueError("batch must be non-empty")
    h = embed_batch(points, params)
    labels01 = (labels > 0).astype(np.float64)
    tape = Tape()
    value, _, _ = _loss_graph(tape, h.reshape(len(points), -1), labels01, params, cfg)
    return float(value.value)


def loss_and_grads(points, labels, params: ToyModelParams, cfg: TrainConfig):
    """(loss, parts, grads-by-name) on a full batch."""
    points = np.asarray(points, dtype=np.float64)
    labels01 = (np.asarray(labels) > 0).astype(np.float64)
    if len(points) == 0:
        raise ValueError("batch must be non-empty")
    h = embed_batch(points, params)
    tape = Tape()
    value, parts, leaves = _loss_graph(
        tape, h.reshape(len(points), -1), labels01, params, cfg
    )
    grads = tape.grad(value, leaves)
    return float(value.value), parts, grads


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros_like(cls, params: dict) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
        )


def adam_step(params: dict, grads: dict, state: AdamState, cfg: TrainConfig):
    """One Adam update; returns (new params, new state).

    Standard first/second-moment update with bias correction; complex
    parameters enter as independent real pairs.
    """
    t = state.t + 1
    new_params, new_m, new_v = {}, {}, {}
    for key, theta in params.items():
        g = grads[key]
        m = cfg.adam_beta1 * state.m[key] + (1 - cfg.adam_beta1) * g
        v = cfg.adam_beta2 * state.v[key] + (1 - cfg.adam_beta2) * g * g
        m_hat = m / (1 - cfg.adam_beta1**t)
        v_hat = v / (1 - cfg.adam_beta2**t)
        new_params[key] = theta - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        new_m[key] = m
        new_v[key] = v
    return new_params, AdamState(m=new_m, v=new_v, t=t)


@dataclass(frozen=True)
class ToyDataset:
    points: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise ValueError("labels must be +/-1")
        joined = np.sort(np.concatenate([self.train_idx, self.test_idx]))
        if not np.array_equal(joined, np.arange(len(self.points))):
            raise ValueError("train/test split must partition the dataset")

    @property
    def train_points(self):
        return self.points[self.train_idx]

    @property
    def train_labels(self):
        return self.labels[self.train_idx]

    @property
    def test_points(self):
        return self.points[self.test_idx]

    @property
    def test_labels(self):
        return self.labels[self.test_idx]


def _split(n_total: int, rng: np.random.Generator, train_fraction: float = 0.8):
    perm = rng.permutation(n_total)
    cut = int(round(train_fraction * n_total))
    return perm[:cut], perm[cut:]


def _polar_to_xy(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def gen_disk_annulus(n_per_class: int, seed: int = 0) -> ToyDataset:
    """Inner disk (label +1, r in [0,1]) vs outer annulus sector (label -1,
    r in [2.3, 3], angle in [-pi/4, pi/4)); seeded, 80/20 split."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    r_in = rng.uniform(0.0, 1.0, n_per_class)
    th_in = rng.uniform(0.0, 2 * np.pi, n_per_class)
    r_out = rng.uniform(2.3, 3.0, n_per_class)
    th_out = rng.uniform(-np.pi / 4, np.pi / 4, n_per_class)
    points = np.concatenate([_polar_to_xy(r_in, th_in), _polar_to_xy(r_out, th_out)])
    labels = np.concatenate([np.ones(n_per_class), -np.ones(n_per_class)]).astype(int)
    train_idx, test_idx = _split(2 * n_per_class, rng)
    return ToyDataset(points, labels, train_idx, test_idx)


def gen_wavey_rings(
    n_per_class: int = 350, sigma_perp: float = 0.0, seed: int = 0
) -> ToyDataset:
    """Two rings with an angular wave of amplitude sigma_perp.

    Radii are r_inner(theta) = 1.1 + sigma_perp sin(5 theta) + eps_in and
    r_outer(theta) = 2.2 + sigma_perp sin(5 theta) + eps_out with jitters
    eps_in ~ U[-0.15, 0.15], eps_out ~ U[-0.22, 0.22]. Negative radii are
    kept as-is (the point reflects through the origin). 80/20 seeded split.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if sigma_perp < 0:
        raise ValueError("sigma_perp must be nonnegative")
    rng = np.random.default_rng(seed)
    th_in = rng.uniform(0.0, 2 * np.pi, n_per_class)
    th_out = rng.uniform(0.0, 2 * np.pi, n_per_class)
    eps_in = rng.uniform(-0.15, 0.15, n_per_class)
    eps_out = rng.uniform(-0.22, 0.22, n_per_class)
    r_in = 1.1 + sigma_perp * np.sin(5 * th_in) + eps_in
    r_out = 2.2 + sigma_perp * np.sin(5 * th_out) + eps_out
    points = np.concatenate([_polar_to_xy(r_in, th_in), _polar_to_xy(r_out, th_out)])
    labels = np.concatenate([np.ones(n_per_class), -np.ones(n_per_class)]).astype(int)
    train_idx, test_idx = _split(2 * n_per_class, rng)
    return ToyDataset(points, labels, train_idx, test_idx)


@dataclass(frozen=True)
class HistoryRow:
    epoch: int
    task_loss: float
    penalty_g: float
    penalty_perp: float
    test_accuracy: float
    empirical_defect: float | None


@dataclass(frozen=True)
class TrainResult:
    params: ToyModelParams
    history: list


def defect_rotations(seed: int) -> np.ndarray:
    """16 evenly spaced plus 16 seeded-random angles in [0, 2 pi)."""
    rng = np.random.default_rng(seed)
    even = np.arange(16) * (2 * np.pi / 16)
    return np.concatenate([even, rng.uniform(0.0, 2 * np.pi, 16)])


def accuracy(params: ToyModelParams, points, labels) -> float:
    logits = forward_batch(np.asarray(points, dtype=np.float64), params)
    return float(np.mean((logits > 0) == (np.asarray(labels) > 0)))


def train_toy(data: ToyDataset, cfg: TrainConfig) -> TrainResult:
    """Full-batch training; deterministic for a fixed (data, config) pair.

    The history records the empirical rotation defect (32 angles, all data
    points, identity output action) every 20 epochs and at the final epoch.
    In hard-projection mode the harmonic mask is re-applied to the weights
    after every optimiser step.
    """
    params = init_params(cfg)
    values = params.trainable()
    state = AdamState.zeros_like(values)
    rotations = defect_rotations(cfg.seed)
    mask1, mask2 = params.masks()
    history: list = []
    last_finite = -1
    for epoch in range(cfg.epochs):
        current = params.with_trainable(values)
        loss_value, parts, grads = loss_and_grads(
            data.train_points, data.train_labels, current, cfg
        )
        if not np.isfinite(loss_value):
            raise TrainingDivergedError("training loss became non-finite", last_finite)
        last_finite = epoch
        values, state = adam_step(values, grads, state, cfg)
        if cfg.hard_project:
            values["w1_re"] = values["w1_re"] * mask1
            values["w1_im"] = values["w1_im"] * mask1
            values["w2_re"] = values["w2_re"] * mask2
            values["w2_im"] = values["w2_im"] * mask2
        stepped = params.with_trainable(values)
        record_defect = epoch % DEFECT_RECORD_EVERY == 0 or epoch == cfg.epochs - 1
        defect_value = (
            empirical_defect(model_fn(stepped), data.points, rotations)
            if record_defect
            else None
        )
        history.append(
            HistoryRow(
                epoch=epoch,
                task_loss=parts["task"],
                penalty_g=parts["penalty_g"],
                penalty_perp=parts["penalty_perp"],
                test_accuracy=accuracy(stepped, data.test_points, data.test_labels),
                empirical_defect=defect_value,
            )
        )
    return TrainResult(params=params.with_trainable(values), history=history)


def final_defect(result: TrainResult) -> float:
    for row in reversed(result.history):
        if row.empirical_defect is not None:
            return row.empirical_defect
    raise ValueError("history contains no defect records")
