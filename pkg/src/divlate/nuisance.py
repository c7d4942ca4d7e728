"""Per-fold nuisance fitting: instrument propensity, treatment propensity,
and the outcome-CDF family, behind a common backend interface."""

from dataclasses import dataclass, field

import numpy as np

from .common import FALLBACK_MIN_COUNT, clip_probs, derive_seed
from .data import Dataset, YGrid
from .errors import ConfigError
from .forest import ForestConfig, forest_fit, forest_predict_proba
from .kan import KanConfig, kan_fit, kan_predict_proba

# role tags used in seed derivation
_ROLE_PI, _ROLE_P, _ROLE_MU = 0, 1, 2


@dataclass(frozen=True)
class KanBackend:
    """Spline-network backend; fits one network per nuisance target."""

    config: KanConfig = field(default_factory=KanConfig)
    name: str = "kan"
    learning: bool = True

    def fit_binary(self, features, targets, seed):
        return _KanModelWrap(kan_fit(features, targets, self.config, seed=seed))


@dataclass(frozen=True)
class ForestBackend:
    """Random-forest backend; fits one forest per nuisance target."""

    config: ForestConfig = field(default_factory=ForestConfig)
    name: str = "forest"
    learning: bool = True

    def fit_binary(self, features, targets, seed):
        return _ForestModelWrap(forest_fit(features, targets, self.config, seed=seed))


@dataclass(frozen=True)
class FixedBackend:
    """Injected nuisance functions instead of learned fits.

    pi_fn(x) -> P(Z=1|x); p_fn(z, x) -> P(W=1|z, x); mu_fn(y, w, x) ->
    P(Y<=y|w, x), each vectorized over rows. Predictions are used as given
    (no clipping, no minority fallback): the caller supplies exactly the
    functions the scores should see.
    """

    pi_fn: object
    p_fn: object
    mu_fn: object
    name: str = "fixed"
    learning: bool = False


class _KanModelWrap:
    def __init__(self, model):
        self.model = model

    def predict_proba(self, features):
        return kan_predict_proba(self.model, features)


class _ForestModelWrap:
    def __init__(self, model):
        self.model = model

    def predict_proba(self, features):
        return forest_predict_proba(self.model, features)


class _ConstantModel:
    """Minority-class fallback: constant majority-class probability, clipped."""

    def __init__(self, majority: float):
        self.majority = float(majority)
        self.value = float(clip_probs(np.asarray([majority]))[0])

    def predict_proba(self, features):
        return np.full(np.asarray(features).shape[0], self.value)


@dataclass(frozen=True)
class FoldNuisanceFit:
    """Models trained on one fold's complement.

    mu_models has one entry per grid level. fallback flags record where the
    minority-class rule replaced a fit with a constant.
    """

    pi_model: object
    p_model: object
    mu_models: tuple
    pi_fallback: bool
    p_fallback: bool
    mu_fallback: tuple
    levels: np.ndarray

    def predict_pi(self, x: np.ndarray) -> np.ndarray:
        return self.pi_model.predict_proba(x)

    def predict_p(self, z: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.p_model.predict_proba(_with_arm(z, x))

    def predict_mu(self, level_index: int, w, x: np.ndarray) -> np.ndarray:
        return self.mu_models[level_index].predict_proba(_with_arm(w, x))


def _with_arm(arm, x: np.ndarray) -> np.ndarray:
    arm = np.broadcast_to(np.asarray(arm, dtype=np.float64), (x.shape[0],))
    return np.column_stack([arm, x])


class _FixedPi:
    def __init__(self, fn):
        self.fn = fn

    def predict_proba(self, features):
        return np.asarray(self.fn(features), dtype=np.float64)


class _FixedArm:
    """Adapter for p/mu callables over [arm | x] feature blocks."""

    def __init__(self, fn):
        self.fn = fn

    def predict_proba(self, features):
        return np.asarray(self.fn(features[:, 0], features[:, 1:]), dtype=np.float64)


def _fit_or_fallback(backend, features, targets, seed):
    targets = np.asarray(targets, dtype=np.float64)
    n_pos = int(targets.sum())
    n_neg = targets.shape[0] - n_pos
    if min(n_pos, n_neg) < FALLBACK_MIN_COUNT:
        return _ConstantModel(1.0 if n_pos >= n_neg else 0.0), True
    return backend.fit_binary(features, targets, seed), False


def fit_fold(train: Dataset, ygrid: YGrid, backend, seed: int = 0) -> FoldNuisanceFit:
    """Fit all nuisance models for one fold on its training complement.

    Learning backends get a derived seed per (role, level) and fall back to a
    constant majority-class prediction when the binary target's minority
    count is below the threshold. The fixed backend wraps its functions
    directly.
    """
    if not hasattr(backend, "learning"):
        raise ConfigError(f"not a nuisance backend: {backend!r}")
    levels = ygrid.levels
    if not backend.learning:
        mu_models = tuple(
            _FixedArm(lambda w, x, yl=float(yl): backend.mu_fn(yl, w, x))
            for yl in levels
        )
        return FoldNuisanceFit(
            pi_model=_FixedPi(backend.pi_fn),
            p_model=_FixedArm(backend.p_fn),
            mu_models=mu_models,
            pi_fallback=False,
            p_fallback=False,
            mu_fallback=tuple(False for _ in levels),
            levels=levels,
        )

    pi_model, pi_fb = _fit_or_fallback(
        backend, train.x, train.z, derive_seed(seed, _ROLE_PI, 0)
    )
    p_model, p_fb = _fit_or_fallback(
        backend, _with_arm(train.z, train.x), train.w, derive_seed(seed, _ROLE_P, 0)
    )
    mu_models = []
    mu_fb = []
    wx = _with_arm(train.w, train.x)
    for g, yl in enumerate(levels):
        model, fb = _fit_or_fallback(
            backend, wx, (train.y <= yl).astype(np.float64), derive_seed(seed, _ROLE_MU, g)
        )
        mu_models.append(model)
        mu_fb.append(fb)
    return FoldNuisanceFit(
        pi_model=pi_model,
        p_model=p_model,
        mu_models=tuple(mu_models),
        pi_fallback=pi_fb,
        p_fallback=p_fb,
        mu_fallback=tuple(mu_fb),
        levels=levels,
    )
