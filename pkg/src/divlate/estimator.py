"""Cross-fitted orthogonal-score estimation of the complier outcome-CDF
contrast, with plug-in variance and pointwise confidence bands."""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .common import derive_seed
from .data import Dataset, FoldAssignment, YGrid, kfold_split
from .errors import ConfigError, WeakInstrumentError
from .nuisance import fit_fold

WEAK_FIRST_STAGE_TOL = 1e-6
_Z95 = 1.96


@dataclass(frozen=True)
class CrossFitPredictions:
    """Out-of-fold nuisance predictions for every observation.

    p1/p0 and mu1/mu0 are counterfactual queries of the same per-fold
    models at both instrument and treatment arms; p_obs and mu_obs pick
    the observed arm per row.
    """

    pi: np.ndarray  # (n,)
    p_obs: np.ndarray  # (n,)
    p1: np.ndarray  # (n,)
    p0: np.ndarray  # (n,)
    mu_obs: np.ndarray  # (n, G)
    mu1: np.ndarray  # (n, G)
    mu0: np.ndarray  # (n, G)
    folds: FoldAssignment


@dataclass(frozen=True)
class ScoreTable:
    """Per-observation orthogonal scores: psi_beta for the first stage and
    one psi_alpha column per grid level."""

    psi_beta: np.ndarray  # (n,)
    psi_alpha: np.ndarray  # (n, G)
    levels: np.ndarray


@dataclass(frozen=True)
class DivLateCurve:
    """Estimated curve with pointwise standard errors and 95% bands."""

    levels: np.ndarray
    delta: np.ndarray
    se: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    beta_hat: float
    n: int

    def __post_init__(self):
        g = self.levels.shape[0]
        for name in ("delta", "se", "ci_lo", "ci_hi"):
            if getattr(self, name).shape[0] != g:
                raise ConfigError(f"curve field {name} does not match grid size")
        if (self.se < 0).any():
            raise ConfigError("negative standard error")
        if ((self.ci_lo > self.delta) | (self.delta > self.ci_hi)).any():
            raise ConfigError("confidence band does not bracket the estimate")


def _validate_inputs(data: Dataset, ygrid: YGrid, n_folds: int):
    if n_folds < 2:
        raise ConfigError(f"cross-fitting needs n_folds >= 2, got {n_folds}")
    if n_folds > data.n:
        raise ConfigError(f"n_folds={n_folds} exceeds n={data.n}")
    z1 = int(data.z.sum())
    if z1 == 0 or z1 == data.n:
        raise WeakInstrumentError(0.0, "instrument is constant in the sample")


def cross_fit(
    data: Dataset,
    ygrid: YGrid,
    backend,
    n_folds: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> CrossFitPredictions:
    """Train per-fold nuisances on fold complements and predict out of fold.

    Each fold's models get a seed derived from (seed, fold), so results are
    independent of scheduling; fold fits may run concurrently.
    """
    _validate_inputs(data, ygrid, n_folds)
    folds = kfold_split(data.n, n_folds, seed)
    g = ygrid.size
    n = data.n
    pi = np.empty(n)
    p_obs = np.empty(n)
    p1 = np.empty(n)
    p0 = np.empty(n)
    mu_obs = np.empty((n, g))
    mu1 = np.empty((n, g))
    mu0 = np.empty((n, g))

    def run_fold(k: int):
        train = data.subset(folds.train_rows(k))
        return fit_fold(train, ygrid, backend, seed=derive_seed(seed, 100 + k))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(run_fold, range(n_folds)))
    else:
        fits = [run_fold(k) for k in range(n_folds)]

    for k, fit in enumerate(fits):
        rows = folds.test_rows(k)
        xk = data.x[rows]
        wk = data.w[rows]
        zk = data.z[rows]
        pi[rows] = fit.predict_pi(xk)
        q1 = fit.predict_p(1.0, xk)
        q0 = fit.predict_p(0.0, xk)
        p1[rows] = q1
        p0[rows] = q0
        p_obs[rows] = np.where(zk == 1.0, q1, q0)
        for j in range(g):
            m1 = fit.predict_mu(j, 1.0, xk)
            m0 = fit.predict_mu(j, 0.0, xk)
            mu1[rows, j] = m1
            mu0[rows, j] = m0
            mu_obs[rows, j] = np.where(wk == 1.0, m1, m0)

    return CrossFitPredictions(
        pi=pi, p_obs=p_obs, p1=p1, p0=p0, mu_obs=mu_obs, mu1=mu1, mu0=mu0, folds=folds
    )


def instrument_weight(z, pi_hat) -> np.ndarray:
    """Signed inverse-propensity weight (z - pi)/(pi(1 - pi)); averaging
    wgt*g(Z,X) estimates E[g(1,X) - g(0,X)]."""
    z = np.asarray(z, dtype=np.float64)
    return (z - pi_hat) / (pi_hat * (1.0 - pi_hat))


def score_beta(z, w, pi_hat, p_hat) -> np.ndarray:
    """Treatment-residual component of the first-stage score: instrument
    weight times (w - p_hat at the observed arm). Mean zero when p_hat is
    correct; the plug-in uptake contrast carries the first-stage level."""
    return instrument_weight(z, pi_hat) * (np.asarray(w, dtype=np.float64) - p_hat)


def score_alpha(indicator, z, pi_hat, mu_at_obs, mu1, mu0) -> np.ndarray:
    """Weighted outcome-CDF residual plus the raw counterfactual contrast.

    This is the numerator score for designs where treatment follows the
    instrument one-for-one. compute_scores instead scales the contrast by
    the estimated uptake contrast, which that special case makes 1.
    """
    wgt = instrument_weight(z, pi_hat)
    ind = np.asarray(indicator, dtype=np.float64)
    if ind.ndim == 2:
        wgt = wgt[:, None]
    return wgt * (ind - mu_at_obs) + (mu1 - mu0)


def compute_scores(data: Dataset, ygrid: YGrid, preds: CrossFitPredictions) -> ScoreTable:
    """Assemble per-observation scores whose means identify the numerator
    and denominator of the ratio.

    Each score is a plug-in term plus a weighted residual: the residual has
    zero mean at correct nuisances and removes first-order sensitivity to
    nuisance error, so the plug-in term sets the target. For the first stage
    the plug-in is the uptake contrast p1 - p0; for the numerator it is
    (p1 - p0)(mu1 - mu0), the instrument's effect on the outcome CDF routed
    through treatment uptake.
    """
    indicator = (data.y[:, None] <= ygrid.levels[None, :]).astype(np.float64)
    wgt = instrument_weight(data.z, preds.pi)
    p_contrast = preds.p1 - preds.p0
    psi_beta = p_contrast + wgt * (data.w - preds.p_obs)
    psi_alpha = (
        p_contrast[:, None] * (preds.mu1 - preds.mu0)
        + wgt[:, None] * (indicator - preds.mu_obs)
    )
    return ScoreTable(psi_beta=psi_beta, psi_alpha=psi_alpha, levels=ygrid.levels)


def solve_curve(scores: ScoreTable, n: int) -> DivLateCurve:
    """Ratio estimate, plug-in variance, and symmetric 95% bands from scores."""
    beta_hat = float(np.mean(scores.psi_beta))
    if abs(beta_hat) < WEAK_FIRST_STAGE_TOL:
        raise WeakInstrumentError(beta_hat)
    alpha_hat = np.mean(scores.psi_alpha, axis=0)
    delta = alpha_hat / beta_hat
    resid = scores.psi_alpha - delta[None, :] * scores.psi_beta[:, None]
    variance = np.mean(resid * resid, axis=0) / beta_hat**2
    se = np.sqrt(variance / n)
    return DivLateCurve(
        levels=scores.levels,
        delta=delta,
        se=se,
        ci_lo=delta - _Z95 * se,
        ci_hi=delta + _Z95 * se,
        beta_hat=beta_hat,
        n=n,
    )


def estimate(
    data: Dataset,
    ygrid: YGrid,
    backend,
    n_folds: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> DivLateCurve:
    """Cross-fitted orthogonal-score estimate of the curve on `ygrid`.

    Raises WeakInstrumentError when the first-stage mean score is numerically
    zero (|beta_hat| < 1e-6) or the instrument is constant.
    """
    preds = cross_fit(data, ygrid, backend, n_folds=n_folds, seed=seed, threads=threads)
    scores = compute_scores(data, ygrid, preds)
    return solve_curve(scores, data.n)


def wald_estimate(data: Dataset, ygrid: YGrid) -> DivLateCurve:
    """Unadjusted instrument-arm contrast of outcome CDFs over the treatment
    uptake contrast. No nuisances; se and bands are reported as zero."""
    z1 = data.z == 1.0
    if not z1.any() or z1.all():
        raise WeakInstrumentError(0.0, "instrument is constant in the sample")
    beta_hat = float(data.w[z1].mean() - data.w[~z1].mean())
    if abs(beta_hat) < WEAK_FIRST_STAGE_TOL:
        raise WeakInstrumentError(beta_hat)
    indicator = (data.y[:, None] <= ygrid.levels[None, :]).astype(np.float64)
    num = indicator[z1].mean(axis=0) - indicator[~z1].mean(axis=0)
    delta = num / beta_hat
    zero = np.zeros_like(delta)
    return DivLateCurve(
        levels=ygrid.levels,
        delta=delta,
        se=zero,
        ci_lo=delta.copy(),
        ci_hi=delta.copy(),
        beta_hat=beta_hat,
        n=data.n,
    )


def write_curve_csv(curve: DivLateCurve, path) -> None:
    """One row per level: y, delta, se, ci_lo, ci_hi, beta_hat."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "delta", "se", "ci_lo", "ci_hi", "beta_hat"])
        for j in range(curve.levels.shape[0]):
            writer.writerow(
                [
                    repr(float(curve.levels[j])),
                    repr(float(curve.delta[j])),
                    repr(float(curve.se[j])),
                    repr(float(curve.ci_lo[j])),
                    repr(float(curve.ci_hi[j])),
                    repr(float(curve.beta_hat)),
                ]
            )
