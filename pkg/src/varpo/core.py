"""Numeric value types and diagonal-weighted linear algebra.

Everything here is an immutable value. Vectors are stored as read-only
float64 numpy arrays over the flattened (prompt, response) space, so a
table with |X| prompts and |Y| responses has n = |X|*|Y| entries laid out
prompt-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Centralized tolerances.
ATOL_ALGEBRA = 1e-12
SIMPLEX_ATOL = 1e-12
BOUNDARY_RTOL = 1e-9


class VarpoError(Exception):
    """Base class for all package errors."""


class DimensionError(VarpoError, ValueError):
    """Lengths disagree or a vector is empty."""


class DomainError(VarpoError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateError(VarpoError, ValueError):
    """The requested quantity is undefined for this input (e.g. zero direction)."""


class NumericalError(VarpoError, ArithmeticError):
    """A numerical procedure produced non-finite values."""


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.size < 1:
        raise DimensionError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} entries must be finite")
    arr.setflags(write=False)
    return arr


def _as_vector(v) -> np.ndarray:
    if isinstance(v, (RewardVector, RawPolicy)):
        return v.values if isinstance(v, RewardVector) else v.weights
    if isinstance(v, SimplexPolicy):
        return v.probabilities
    if isinstance(v, DiagonalCovariance):
        return v.variances
    return np.asarray(v, dtype=np.float64).reshape(-1)


@dataclass(frozen=True, eq=False)
class RewardVector:
    """Real rewards over the flattened pair space (holds r* or an estimate)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, "RewardVector"))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class DiagonalCovariance:
    """Diagonal covariance given by strictly positive per-pair variances."""

    variances: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.variances, "DiagonalCovariance")
        if np.any(arr <= 0.0):
            raise DomainError("variances must be strictly positive")
        object.__setattr__(self, "variances", arr)

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "DiagonalCovariance":
        return cls(np.full(n, float(scale)))

    @property
    def n(self) -> int:
        return int(self.variances.size)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variances)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class RawPolicy:
    """Unconstrained policy-shaped vector; entries may leave [0, 1]."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights, "RawPolicy"))

    @classmethod
    def uniform(cls, n: int) -> "RawPolicy":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return int(self.weights.size)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class SimplexPolicy:
    """Validated probability vector.

    With ``block`` set, the vector is a table of conditional distributions:
    each consecutive run of ``block`` entries must sum to one.
    """

    probabilities: np.ndarray
    block: int | None = None

    def __post_init__(self):
        arr = _frozen(self.probabilities, "SimplexPolicy")
        block = arr.size if self.block is None else int(self.block)
        if block < 1 or arr.size % block:
            raise DimensionError("length must be a multiple of the block size")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("probabilities must lie in [0, 1]")
        sums = arr.reshape(-1, block).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > SIMPLEX_ATOL):
            raise DomainError("probabilities must sum to 1 per block")
        object.__setattr__(self, "probabilities", arr)
        object.__setattr__(self, "block", block)

    @classmethod
    def uniform(cls, n: int) -> "SimplexPolicy":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return int(self.probabilities.size)

    def table(self) -> np.ndarray:
        return self.probabilities.reshape(-1, self.block)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class TrustRegion:
    """Squared-distance budget and penalty multiplier."""

    epsilon: float
    beta: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise DomainError("epsilon must be > 0")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise DomainError("beta must be > 0")


def _pair(d, sigma) -> tuple[np.ndarray, np.ndarray]:
    dv = _as_vector(d)
    sv = _as_vector(sigma)
    if dv.size != sv.size:
        raise DimensionError(f"length mismatch: {dv.size} vs {sv.size}")
    return dv, sv


def weighted_norm(d, sigma) -> float:
    """sqrt(sum sigma_i^2 d_i^2), where sigma holds the variances."""
    dv, sv = _pair(d, sigma)
    return float(np.sqrt(np.sum(sv * dv * dv)))


def inverse_weighted_norm(d, sigma) -> float:
    """sqrt(sum d_i^2 / sigma_i^2), where sigma holds the variances."""
    dv, sv = _pair(d, sigma)
    if np.any(sv <= 0.0):
        raise DomainError("variances must be strictly positive")
    return float(np.sqrt(np.sum(dv * dv / sv)))


def lambda_min(sigma) -> float:
    """Smallest eigenvalue of a diagonal covariance, i.e. its smallest entry."""
    sv = _as_vector(sigma)
    if sv.size == 0:
        raise DimensionError("covariance is empty")
    return float(np.min(sv))
