"""Core data containers: observational dataset, outcome grid, fold assignment."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CsvParseError, DataValidationError, SchemaError


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _check_binary(v: np.ndarray, name: str) -> None:
    if not np.isin(v, (0.0, 1.0)).all():
        bad = v[~np.isin(v, (0.0, 1.0))][0]
        raise DataValidationError(f"column '{name}' must be binary 0/1, found {bad!r}")


@dataclass(frozen=True)
class Dataset:
    """One observation per row: outcome y, binary treatment w, binary
    instrument z, covariate matrix x of shape (n, d)."""

    y: np.ndarray
    w: np.ndarray
    z: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = _readonly(np.asarray(self.y).ravel())
        w = _readonly(np.asarray(self.w).ravel())
        z = _readonly(np.asarray(self.z).ravel())
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2:
            raise DataValidationError(f"x must be 2-d, got shape {x.shape}")
        x = _readonly(x)
        n = y.shape[0]
        if n == 0:
            raise DataValidationError("dataset is empty")
        if w.shape[0] != n or z.shape[0] != n or x.shape[0] != n:
            raise DataValidationError(
                f"length mismatch: y={n} w={w.shape[0]} z={z.shape[0]} x={x.shape[0]}"
            )
        if x.shape[1] == 0:
            raise DataValidationError("x must have at least one column")
        for v, name in ((y, "y"), (w, "w"), (z, "z"), (x, "x")):
            if not np.isfinite(v).all():
                raise DataValidationError(f"column '{name}' contains NaN or infinity")
        _check_binary(w, "w")
        _check_binary(z, "z")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.y[rows], self.w[rows], self.z[rows], self.x[rows])


@dataclass(frozen=True)
class YGrid:
    """Strictly increasing outcome levels the curve is evaluated on."""

    levels: np.ndarray

    def __post_init__(self):
        levels = _readonly(np.asarray(self.levels).ravel())
        if levels.shape[0] == 0:
            raise DataValidationError("ygrid is empty")
        if not np.isfinite(levels).all():
            raise DataValidationError("ygrid contains NaN or infinity")
        if levels.shape[0] > 1 and not (np.diff(levels) > 0).all():
            raise DataValidationError("ygrid levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)

    @property
    def size(self) -> int:
        return self.levels.shape[0]


def build_ygrid(y, size: int, lo_pct: float = 1.0, hi_pct: float = 99.0) -> YGrid:
    """Equally spaced levels between two empirical percentiles of `y`.

    Percentiles use linear interpolation. A degenerate range collapses the
    grid to a single level.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0:
        raise DataValidationError("cannot build a ygrid from an empty sample")
    if size < 1:
        raise ConfigError(f"ygrid size must be >= 1, got {size}")
    if not (0.0 <= lo_pct < hi_pct <= 100.0):
        raise ConfigError(f"bad percentile range ({lo_pct}, {hi_pct})")
    qlo, qhi = np.percentile(y, [lo_pct, hi_pct])
    if not qlo < qhi:
        return YGrid(np.array([qlo]))
    return YGrid(np.linspace(qlo, qhi, size))


@dataclass(frozen=True)
class FoldAssignment:
    """Maps each row to one of n_folds cross-fitting folds."""

    fold_of: np.ndarray
    n_folds: int

    def __post_init__(self):
        fold_of = np.ascontiguousarray(np.asarray(self.fold_of).ravel(), dtype=np.int64)
        fold_of.flags.writeable = False
        if self.n_folds < 1:
            raise ConfigError(f"n_folds must be >= 1, got {self.n_folds}")
        counts = np.bincount(fold_of, minlength=self.n_folds)
        if fold_of.size and (fold_of.min() < 0 or fold_of.max() >= self.n_folds):
            raise DataValidationError("fold labels out of range")
        if (counts == 0).any():
            raise DataValidationError("every fold must be nonempty")
        object.__setattr__(self, "fold_of", fold_of)

    def test_rows(self, k: int) -> np.ndarray:
        return np.nonzero(self.fold_of == k)[0]

    def train_rows(self, k: int) -> np.ndarray:
        return np.nonzero(self.fold_of != k)[0]


def kfold_split(n: int, n_folds: int, seed: int) -> FoldAssignment:
    """Deterministic shuffled K-fold split; fold sizes differ by at most one.

    Requires n_folds >= 2: a single fold would leave every training
    complement empty.
    """
    if n_folds < 2:
        raise ConfigError(f"n_folds must be >= 2, got {n_folds}")
    if n_folds > n:
        raise ConfigError(f"n_folds={n_folds} exceeds n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    base = n // n_folds
    extra = n % n_folds
    start = 0
    for k in range(n_folds):
        size = base + (1 if k < extra else 0)
        fold_of[perm[start : start + size]] = k
        start += size
    return FoldAssignment(fold_of, n_folds)


def _fmt(v) -> str:
    return repr(float(v))


def load_csv(path, schema: dict) -> Dataset:
    """Read a dataset from CSV using a role -> column-name schema.

    `schema` must carry keys "outcome", "treatment", "instrument" (column
    names) and "covariates" (list of column names). Row order is preserved.
    """
    for key in ("outcome", "treatment", "instrument", "covariates"):
        if key not in schema:
            raise SchemaError(f"schema is missing role '{key}'")
    covs = list(schema["covariates"])
    if not covs:
        raise SchemaError("schema lists no covariate columns")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: file is empty") from None
        col_of = {name: i for i, name in enumerate(header)}
        wanted = [schema["outcome"], schema["treatment"], schema["instrument"], *covs]
        for name in wanted:
            if name not in col_of:
                raise SchemaError(f"column '{name}' not found in {path} header")
        pick = [col_of[name] for name in wanted]
        rows = []
        for rnum, rec in enumerate(reader, start=2):
            vals = []
            for name, ci in zip(wanted, pick):
                try:
                    vals.append(float(rec[ci]))
                except (ValueError, IndexError):
                    cell = rec[ci] if ci < len(rec) else "<missing>"
                    raise CsvParseError(
                        f"{path}: line {rnum}, column '{name}': cannot parse {cell!r}"
                    ) from None
            rows.append(vals)
    if not rows:
        raise DataValidationError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    return Dataset(y=arr[:, 0], w=arr[:, 1], z=arr[:, 2], x=arr[:, 3:])


def save_csv(dataset: Dataset, path) -> list[str]:
    """Write a dataset with canonical columns y,w,z,x1..xd; returns the header.

    Floats are written in shortest round-trip form so a reload is bit-identical.
    """
    header = ["y", "w", "z"] + [f"x{i + 1}" for i in range(dataset.d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(dataset.n):
            row = [_fmt(dataset.y[i]), str(int(dataset.w[i])), str(int(dataset.z[i]))]
            row.extend(_fmt(v) for v in dataset.x[i])
            writer.writerow(row)
    return header


def default_schema(d: int) -> dict:
    return {
        "outcome": "y",
        "treatment": "w",
        "instrument": "z",
        "covariates": [f"x{i + 1}" for i in range(d)],
    }
