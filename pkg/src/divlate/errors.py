"""Typed errors raised across the package."""


class DivlateError(Exception):
    """Base class for all package errors."""


class SchemaError(DivlateError, KeyError):
    """A required column is missing or the schema mapping is malformed."""


class DataValidationError(DivlateError, ValueError):
    """Input data violates a documented invariant (non-binary column, NaN, empty)."""


class CsvParseError(DivlateError, ValueError):
    """A CSV cell could not be parsed; message names row and column."""


class ConfigError(DivlateError, ValueError):
    """A configuration value is out of its documented range."""


class WeakInstrumentError(DivlateError, ArithmeticError):
    """First-stage denominator is numerically zero; message carries the estimate."""

    def __init__(self, beta_hat: float, detail: str = ""):
        self.beta_hat = float(beta_hat)
        msg = f"first stage is too weak to invert: beta_hat={beta_hat:.3e}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class OracleError(DivlateError, RuntimeError):
    """The brute-force truth oracle could not produce a curve."""


class MonteCarloError(DivlateError, RuntimeError):
    """Too many failed replications to summarise a Monte Carlo run."""
