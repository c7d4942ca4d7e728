"""Synthetic data generating processes with a shared instrument design.

Both DGPs draw d=5 standard normal covariates and a fair-coin instrument.

dgp 1 (latent compliance types): units are compliers with probability 0.5,
always-takers 0.25, never-takers 0.25. W follows Z for compliers and is fixed
for the other types. Y(0) = x1 + 0.5*x2^2 + eps0; treatment shifts compliers
by 5 + x3 + 2*eps1 and leaves non-compliers unchanged.

dgp 2 (threshold selection): W = 1{u <= p(Z, x)} with a shared uniform u, so
treatment uptake is monotone in the instrument. Y(0) = x1 + sin(pi*x2) + eps0
and Y(1) = Y(0) + 10 + cos(pi*x3) + eps1.

The formula evaluators (dgp2_pi, dgp2_p, dgp2_mu) expose the nuisance
surfaces in closed form. Note the generator draws Z as a fair coin; dgp2_pi
describes a covariate-dependent instrument design and is provided as an
evaluator only. dgp2_outcome_cdf is the exact conditional outcome CDF implied
by the outcome equations, suitable as an injected truth for mu.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtr

from .data import Dataset, YGrid
from .errors import ConfigError, OracleError

_SQRT2 = np.sqrt(2.0)


def _covariate_index(x: np.ndarray) -> tuple:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] < 5:
        raise ConfigError(f"these designs use 5 covariates, got {x.shape[1]}")
    return x[:, 0], x[:, 1], x[:, 2], x[:, 3], x[:, 4]


def dgp2_pi(x) -> np.ndarray:
    """Instrument propensity surface sigmoid(x1 + sin(pi x2) - cos(pi x3) + 0.5 x4^2 - 0.5 x5^2)."""
    x1, x2, x3, x4, x5 = _covariate_index(x)
    return expit(x1 + np.sin(np.pi * x2) - np.cos(np.pi * x3) + 0.5 * x4**2 - 0.5 * x5**2)


def dgp2_p(z, x) -> np.ndarray:
    """Treatment propensity sigmoid(z + x1 + sin(pi x2) - cos(pi x3) + 0.5 x4^2 - 0.5 x5^2)."""
    x1, x2, x3, x4, x5 = _covariate_index(x)
    z = np.asarray(z, dtype=np.float64)
    return expit(z + x1 + np.sin(np.pi * x2) - np.cos(np.pi * x3) + 0.5 * x4**2 - 0.5 * x5**2)


def dgp2_mu(y, w, x) -> np.ndarray:
    """Descriptive outcome-CDF surface used by the threshold-selection design."""
    x1, x2, x3, x4, x5 = _covariate_index(x)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    return expit(
        y - w * (x1 + np.sin(np.pi * x2)) - (1.0 - w) * np.cos(np.pi * x3)
        - 0.5 * x4**2 + 0.5 * x5**2
    )


def dgp2_outcome_cdf(y, w, x) -> np.ndarray:
    """Exact P(Y <= y | W=w, X=x) implied by the dgp 2 outcome equations.

    Y(0) | x ~ N(m0, 1) with m0 = x1 + sin(pi x2); Y(1) | x ~ N(m0 + 10 +
    cos(pi x3), 2). Treatment selection is independent of the outcome noise
    given x, so conditioning on W only selects the arm.
    """
    x1, x2, x3, _, _ = _covariate_index(x)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    m0 = x1 + np.sin(np.pi * x2)
    m1 = m0 + 10.0 + np.cos(np.pi * x3)
    return w * ndtr((y - m1) / _SQRT2) + (1.0 - w) * ndtr(y - m0)


@dataclass(frozen=True)
class Dgp1Latents:
    """Compliance type (0 complier, 1 always-taker, 2 never-taker), noises,
    and both potential outcomes."""

    unit_type: np.ndarray
    eps0: np.ndarray
    eps1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray

    @property
    def complier(self) -> np.ndarray:
        return self.unit_type == 0


@dataclass(frozen=True)
class Dgp2Latents:
    """Uniform selection threshold, outcome noises, complier flag, and both
    potential outcomes."""

    u: np.ndarray
    eps0: np.ndarray
    eps1: np.ndarray
    complier: np.ndarray
    y0: np.ndarray
    y1: np.ndarray


def gen_dgp1(n: int, seed: int) -> tuple[Dataset, Dgp1Latents]:
    """Draw from the latent-compliance-type design."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 5))
    z = (rng.random(n) < 0.5).astype(np.float64)
    t = rng.random(n)
    unit_type = np.where(t < 0.5, 0, np.where(t < 0.75, 1, 2)).astype(np.int64)
    eps0 = rng.standard_normal(n)
    eps1 = rng.standard_normal(n)
    complier = unit_type == 0
    w = np.where(unit_type == 0, z, np.where(unit_type == 1, 1.0, 0.0))
    y0 = x[:, 0] + 0.5 * x[:, 1] ** 2 + eps0
    y1 = y0 + np.where(complier, 5.0 + x[:, 2] + 2.0 * eps1, 0.0)
    y = np.where(w == 1.0, y1, y0)
    data = Dataset(y=y, w=w, z=z, x=x)
    return data, Dgp1Latents(unit_type=unit_type, eps0=eps0, eps1=eps1, y0=y0, y1=y1)


def gen_dgp2(n: int, seed: int) -> tuple[Dataset, Dgp2Latents]:
    """Draw from the threshold-selection design."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 5))
    z = (rng.random(n) < 0.5).astype(np.float64)
    u = rng.random(n)
    eps0 = rng.standard_normal(n)
    eps1 = rng.standard_normal(n)
    p0 = dgp2_p(0.0, x)
    p1 = dgp2_p(1.0, x)
    w0 = u <= p0
    w1 = u <= p1
    w = np.where(z == 1.0, w1, w0).astype(np.float64)
    complier = w1 & ~w0
    y0 = x[:, 0] + np.sin(np.pi * x[:, 1]) + eps0
    y1 = y0 + 10.0 + np.cos(np.pi * x[:, 2]) + eps1
    y = np.where(w == 1.0, y1, y0)
    data = Dataset(y=y, w=w, z=z, x=x)
    return data, Dgp2Latents(u=u, eps0=eps0, eps1=eps1, complier=complier, y0=y0, y1=y1)


_GENERATORS = {1: gen_dgp1, 2: gen_dgp2}


def generator(dgp: int):
    try:
        return _GENERATORS[int(dgp)]
    except (KeyError, ValueError):
        raise ConfigError(f"unknown dgp {dgp!r}; choose 1 or 2") from None


def true_divlate(dgp: int, ygrid: YGrid, m: int = 100_000, seed: int = 0) -> np.ndarray:
    """Brute-force complier outcome-CDF contrast at each grid level.

    Draws m units, restricts to compliers, and differences the empirical CDFs
    of the two potential outcomes.
    """
    if m < 1:
        raise ConfigError(f"oracle sample size must be >= 1, got {m}")
    _, lat = generator(dgp)(m, seed)
    mask = np.asarray(lat.complier, dtype=bool)
    nc = int(mask.sum())
    if nc == 0:
        raise OracleError(f"no compliers in an oracle draw of m={m}")
    y1c = np.sort(lat.y1[mask])
    y0c = np.sort(lat.y0[mask])
    levels = ygrid.levels
    f1 = np.searchsorted(y1c, levels, side="right") / nc
    f0 = np.searchsorted(y0c, levels, side="right") / nc
    return f1 - f0
