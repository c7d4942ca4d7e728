"""Kolmogorov-Arnold network for binary probability estimation.

Every edge applies base_weight * silu(x) plus a learned cubic B-spline
combination evaluated on a fixed grid over standardized inputs; node outputs
are sums over incoming edges. Training is full-batch AdamW on binary
cross-entropy plus an L1/entropy penalty on the spline coefficients.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from . import kernels
from .common import clip_probs
from .errors import ConfigError, DataValidationError


@dataclass(frozen=True)
class SplineGrid:
    """Uniform B-spline grid on [lo, hi] with grid_size interior intervals.

    `order` is the polynomial degree; a grid carries grid_size + order basis
    functions over grid_size + 2*order + 1 uniformly extended knots.
    """

    lo: float = -3.0
    hi: float = 3.0
    grid_size: int = 4
    order: int = 3

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"grid range [{self.lo}, {self.hi}] is empty")
        if self.grid_size < 1:
            raise ConfigError(f"grid_size must be >= 1, got {self.grid_size}")
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")

    @property
    def n_basis(self) -> int:
        return self.grid_size + self.order

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / self.grid_size

    @property
    def knots(self) -> np.ndarray:
        h = self.spacing
        count = self.grid_size + 2 * self.order + 1
        return self.lo + (np.arange(count, dtype=np.float64) - self.order) * h


@dataclass(frozen=True)
class KanConfig:
    hidden_width: int = 16
    grid: SplineGrid = field(default_factory=SplineGrid)
    steps: int = 25
    lr: float = 1e-3
    weight_decay: float = 1e-4
    reg_strength: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.hidden_width < 1:
            raise ConfigError(f"hidden_width must be >= 1, got {self.hidden_width}")
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        for name in ("lr", "beta1", "beta2", "adam_eps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("weight_decay", "reg_strength"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")


def bspline_basis(x: float, grid: SplineGrid) -> np.ndarray:
    """Basis vector (length grid.n_basis) at one scalar input."""
    return kernels.bspline_basis_batch(
        np.asarray([x], dtype=np.float64), grid.lo, grid.hi, grid.grid_size, grid.order
    )[0]


@dataclass(frozen=True)
class KanLayer:
    """One layer of edge transforms: in_dim inputs to out_dim node sums."""

    spline_coeff: np.ndarray  # (out_dim, in_dim, n_basis)
    base_weight: np.ndarray  # (out_dim, in_dim)

    def __post_init__(self):
        c = np.ascontiguousarray(self.spline_coeff, dtype=np.float64)
        b = np.ascontiguousarray(self.base_weight, dtype=np.float64)
        if c.ndim != 3 or b.ndim != 2 or c.shape[:2] != b.shape:
            raise ConfigError(
                f"inconsistent layer shapes: coeff {c.shape}, base {b.shape}"
            )
        if not (np.isfinite(c).all() and np.isfinite(b).all()):
            raise DataValidationError("layer parameters must be finite")
        object.__setattr__(self, "spline_coeff", c)
        object.__setattr__(self, "base_weight", b)

    @property
    def in_dim(self) -> int:
        return self.base_weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.base_weight.shape[0]


@dataclass(frozen=True)
class KanModel:
    """Trained network plus the standardization statistics of its inputs."""

    layers: tuple
    grid: SplineGrid
    feature_mean: np.ndarray
    feature_std: np.ndarray
    loss_history: np.ndarray

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("model needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ConfigError("layer widths do not chain")
        if self.layers[-1].out_dim != 1:
            raise ConfigError("final layer must have a single output")
        if self.layers[0].in_dim != self.feature_mean.shape[0]:
            raise ConfigError("standardization stats do not match input width")


def kan_init(widths, grid: SplineGrid, seed: int):
    """Random parameters for the given width chain, as [(coeff, base), ...].

    Spline coefficients ~ N(0, 0.1^2); base weights ~ N(0, (1/sqrt(in))^2).
    """
    rng = np.random.default_rng(seed)
    params = []
    for in_dim, out_dim in zip(widths, widths[1:]):
        coeff = rng.normal(0.0, 0.1, size=(out_dim, in_dim, grid.n_basis))
        base = rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=(out_dim, in_dim))
        params.append((coeff, base))
    return params


def _silu(a, sig):
    return a * sig


def _forward_cached(params, grid: SplineGrid, X: np.ndarray, need_grad: bool):
    a = X
    caches = []
    for coeff, base in params:
        n, in_dim = a.shape
        out_dim = base.shape[0]
        flat = a.ravel()
        if need_grad:
            b, db = kernels.bspline_basis_deriv_batch(
                flat, grid.lo, grid.hi, grid.grid_size, grid.order
            )
            db = db.reshape(n, in_dim, grid.n_basis)
        else:
            b = kernels.bspline_basis_batch(
                flat, grid.lo, grid.hi, grid.grid_size, grid.order
            )
            db = None
        b = b.reshape(n, in_dim, grid.n_basis)
        sig = expit(a)
        s = _silu(a, sig)
        out = s @ base.T + b.reshape(n, -1) @ coeff.reshape(out_dim, -1).T
        if need_grad:
            inside = (a >= grid.lo) & (a <= grid.hi)
            caches.append((a, sig, s, b, db, inside))
        a = out
    return a, caches


def kan_forward(params, grid: SplineGrid, X: np.ndarray) -> np.ndarray:
    """Network output (n, out_dim) for pre-standardized inputs X (n, in_dim)."""
    out, _ = _forward_cached(params, grid, np.asarray(X, dtype=np.float64), False)
    return out


def _backward(params, grid: SplineGrid, caches, g_out):
    """Gradients [(dcoeff, dbase), ...] for the data loss given d(loss)/d(output)."""
    grads = [None] * len(params)
    g = g_out
    for li in range(len(params) - 1, -1, -1):
        coeff, base = params[li]
        a, sig, s, b, db, inside = caches[li]
        n, in_dim = a.shape
        out_dim = base.shape[0]
        cdim = b.shape[2]
        gbase = g.T @ s
        gcoeff = (g.T @ b.reshape(n, -1)).reshape(out_dim, in_dim, cdim)
        grads[li] = (gcoeff, gbase)
        if li > 0:
            t = (g @ coeff.reshape(out_dim, -1)).reshape(n, in_dim, cdim)
            silu_p = sig * (1.0 + a * (1.0 - sig))
            g = (g @ base) * silu_p + (t * db).sum(axis=2) * inside
    return grads


def kan_reg_loss(params) -> float:
    """Per-layer mean absolute spline coefficient plus entropy of the
    edge-magnitude distribution; all-zero layers contribute 0."""
    total = 0.0
    for coeff, _ in params:
        edge_mag = np.abs(coeff).mean(axis=2)
        s = edge_mag.sum()
        if s == 0.0:
            continue
        p = edge_mag / s
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(edge_mag > 0, p * np.log(p), 0.0)
        total += edge_mag.mean() + (-plogp.sum())
    return float(total)


def _reg_grads(params):
    """d(reg loss)/d(spline_coeff) per layer (base weights unpenalized)."""
    out = []
    for coeff, _ in params:
        cdim = coeff.shape[2]
        edge_mag = np.abs(coeff).mean(axis=2)
        s = edge_mag.sum()
        if s == 0.0:
            out.append(np.zeros_like(coeff))
            continue
        n_edges = edge_mag.size
        p = edge_mag / s
        with np.errstate(divide="ignore"):
            dent = np.where(edge_mag > 0, (-np.log(p) - _entropy(p)) / s, 0.0)
        dmag = 1.0 / n_edges + dent
        out.append(dmag[:, :, None] * np.sign(coeff) / cdim)
    return out


def _entropy(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    return -plogp.sum()


@dataclass(frozen=True)
class AdamState:
    m: tuple
    v: tuple
    t: int


def adam_state_init(params) -> AdamState:
    return AdamState(
        m=tuple(np.zeros_like(p) for p in params),
        v=tuple(np.zeros_like(p) for p in params),
        t=0,
    )


def adamw_step(params, grads, state: AdamState, *, lr, weight_decay, beta1, beta2, eps):
    """One decoupled-weight-decay Adam step over a flat list of arrays.

    Decay shrinks each parameter by lr*weight_decay before the Adam update;
    moment estimates are bias-corrected. Returns (new_params, new_state).
    """
    t = state.t + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        p = p * (1.0 - lr * weight_decay)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        mhat = m / c1
        vhat = v / c2
        new_params.append(p - lr * mhat / (np.sqrt(vhat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(m=tuple(new_m), v=tuple(new_v), t=t)


def _standardize_stats(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    return mean, np.where(std == 0.0, 1.0, std)


def _flatten(layer_params):
    flat = []
    for coeff, base in layer_params:
        flat.append(coeff)
        flat.append(base)
    return flat


def _unflatten(flat):
    return [(flat[i], flat[i + 1]) for i in range(0, len(flat), 2)]


def _loss_and_grads(layer_params, grid, Xs, targets, reg_strength):
    n = Xs.shape[0]
    logits, caches = _forward_cached(layer_params, grid, Xs, True)
    z = logits[:, 0]
    data_loss = float(np.mean((1.0 - targets) * z + np.logaddexp(0.0, -z)))
    loss = data_loss + reg_strength * kan_reg_loss(layer_params)
    gz = ((expit(z) - targets) / n)[:, None]
    grads = _backward(layer_params, grid, caches, gz)
    rgrads = _reg_grads(layer_params)
    full = [
        (gc + reg_strength * rg, gb)
        for (gc, gb), rg in zip(grads, rgrads)
    ]
    return loss, full


def kan_fit(features, targets, config: KanConfig, seed: int | None = None) -> KanModel:
    """Train a [d, hidden_width, 1] network on binary targets.

    Inputs are standardized column-wise with training statistics (constant
    columns map to 0). Bit-deterministic given (features, targets, config,
    seed). The returned model records the loss trajectory, including the
    post-training value (length steps + 1).
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    t = np.ascontiguousarray(targets, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != t.shape[0]:
        raise DataValidationError(
            f"features {X.shape} and targets {t.shape} do not align"
        )
    if X.shape[0] == 0:
        raise DataValidationError("cannot fit on an empty sample")
    if not np.isin(t, (0.0, 1.0)).all():
        raise DataValidationError("targets must be binary 0/1")
    if seed is None:
        seed = config.seed

    mean, std = _standardize_stats(X)
    Xs = (X - mean) / std
    widths = [X.shape[1], config.hidden_width, 1]
    layer_params = kan_init(widths, config.grid, seed)
    state = adam_state_init(_flatten(layer_params))

    history = np.empty(config.steps + 1, dtype=np.float64)
    for step in range(config.steps):
        loss, layer_grads = _loss_and_grads(
            layer_params, config.grid, Xs, t, config.reg_strength
        )
        history[step] = loss
        flat, state = adamw_step(
            _flatten(layer_params),
            _flatten(layer_grads),
            state,
            lr=config.lr,
            weight_decay=config.weight_decay,
            beta1=config.beta1,
            beta2=config.beta2,
            eps=config.adam_eps,
        )
        layer_params = _unflatten(flat)

    logits, _ = _forward_cached(layer_params, config.grid, Xs, False)
    z = logits[:, 0]
    history[config.steps] = float(
        np.mean((1.0 - t) * z + np.logaddexp(0.0, -z))
    ) + config.reg_strength * kan_reg_loss(layer_params)

    return KanModel(
        layers=tuple(KanLayer(spline_coeff=c, base_weight=b) for c, b in layer_params),
        grid=config.grid,
        feature_mean=mean,
        feature_std=std,
        loss_history=history,
    )


def kan_predict_proba(model: KanModel, features) -> np.ndarray:
    """Class-1 probabilities, clipped away from 0 and 1."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_mean.shape[0]:
        raise DataValidationError(
            f"expected (n, {model.feature_mean.shape[0]}) features, got {X.shape}"
        )
    Xs = (X - model.feature_mean) / model.feature_std
    params = [(l.spline_coeff, l.base_weight) for l in model.layers]
    logits = kan_forward(params, model.grid, Xs)
    return clip_probs(expit(logits[:, 0]))


def model_to_json(model: KanModel) -> str:
    """Serialize a model (grid, parameters, standardization stats) to JSON."""
    doc = {
        "grid": {
            "lo": model.grid.lo,
            "hi": model.grid.hi,
            "grid_size": model.grid.grid_size,
            "order": model.grid.order,
        },
        "layers": [
            {
                "spline_coeff": l.spline_coeff.tolist(),
                "base_weight": l.base_weight.tolist(),
            }
            for l in model.layers
        ],
        "feature_mean": model.feature_mean.tolist(),
        "feature_std": model.feature_std.tolist(),
        "loss_history": np.asarray(model.loss_history).tolist(),
    }
    return json.dumps(doc)


def model_from_json(doc: str) -> KanModel:
    d = json.loads(doc)
    grid = SplineGrid(**d["grid"])
    layers = tuple(
        KanLayer(
            spline_coeff=np.asarray(l["spline_coeff"], dtype=np.float64),
            base_weight=np.asarray(l["base_weight"], dtype=np.float64),
        )
        for l in d["layers"]
    )
    return KanModel(
        layers=layers,
        grid=grid,
        feature_mean=np.asarray(d["feature_mean"], dtype=np.float64),
        feature_std=np.asarray(d["feature_std"], dtype=np.float64),
        loss_history=np.asarray(d["loss_history"], dtype=np.float64),
    )


def with_seed(config: KanConfig, seed: int) -> KanConfig:
    return replace(config, seed=seed)
