"""Karhunen-Loeve expansion (PCA) of finite-dimensional random vectors."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .eigen import CLIP_RTOL, solve_symmetric_eigen
from .errors import InsufficientSpectrumError, InvalidArgumentError

__all__ = [
    "VectorKLE",
    "SampleEnsemble",
    "vector_kle",
    "project",
    "reconstruct",
    "truncation_error",
    "variance_ratio",
    "select_rank",
    "ky_fan_gap",
    "empirical_covariance",
]

# slack on cumulative sums so that ``threshold=1`` is reachable despite round-off
_RANK_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class VectorKLE:
    mean: np.ndarray
    lambdas: np.ndarray
    basis: np.ndarray

    @property
    def n(self) -> int:
        return int(self.mean.size)


@dataclass(frozen=True, eq=False)
class SampleEnsemble:
    """Realizations stored row-wise, with the seed that produced them."""

    samples: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=float)
        if a.ndim != 2 or a.shape[0] < 2:
            raise InvalidArgumentError("an ensemble needs a 2-D array with at least 2 rows")
        if not np.all(np.isfinite(a)):
            raise InvalidArgumentError("ensemble entries must be finite")
        object.__setattr__(self, "samples", a)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x_{k + 1}" for k in range(self.samples.shape[1])])
            for row in self.samples:
                w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path, seed: int | None = None) -> "SampleEnsemble":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header != [f"x_{k + 1}" for k in range(len(header))]:
            raise InvalidArgumentError(f"{path}: header must be x_1,...,x_n")
        return cls(np.array(body, dtype=float), seed)


def vector_kle(cov, mean=None) -> VectorKLE:
    """Eigendecomposition ``cov = V diag(lambda) V^T`` with descending ``lambda``."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InvalidArgumentError(f"covariance must be square, got {cov.shape}")
    n = cov.shape[0]
    mean = np.zeros(n) if mean is None else np.asarray(mean, dtype=float)
    if mean.shape != (n,):
        raise InvalidArgumentError(f"mean must have shape ({n},), got {mean.shape}")
    lam, V = solve_symmetric_eigen(cov)
    lam1 = max(float(lam[0]), 0.0)
    if lam[-1] < -CLIP_RTOL * lam1:
        raise InvalidArgumentError(
            f"covariance is indefinite: eigenvalue {lam[-1]:.3e} vs largest {lam1:.3e}"
        )
    lam = np.where(np.abs(lam) <= CLIP_RTOL * lam1, 0.0, lam)
    return VectorKLE(mean, lam, V)


def _check_rank(r, limit):
    if int(r) != r or not 0 <= r <= limit:
        raise InvalidArgumentError(f"rank must satisfy 0 <= r <= {limit}, got {r}")
    return int(r)


def project(kle: VectorKLE, z, r: int | None = None) -> np.ndarray:
    """Coefficients ``<z - mean, v_i>`` for ``i < r``; ``z`` may hold one sample per row."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != kle.n:
        raise InvalidArgumentError(f"expected vectors of length {kle.n}, got {z.shape}")
    r = kle.n if r is None else _check_rank(r, kle.n)
    return (z - kle.mean) @ kle.basis[:, :r]


def reconstruct(kle: VectorKLE, coeffs) -> np.ndarray:
    """``mean + sum_i coeffs_i v_i`` using as many modes as there are coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    r = _check_rank(coeffs.shape[-1], kle.n)
    return kle.mean + coeffs @ kle.basis[:, :r].T


def truncation_error(lambdas, r: int) -> float:
    """Mean-square error of the rank-``r`` truncation, ``sum_{i > r} lambda_i``."""
    lambdas = np.asarray(lambdas, dtype=float)
    r = _check_rank(r, lambdas.size)
    return float(np.sum(lambdas[r:]))


def variance_ratio(lambdas, total_variance: float, r: int) -> float:
    """Fraction of ``total_variance`` captured by the first ``r`` eigenvalues, clamped to [0, 1]."""
    if not total_variance > 0:
        raise InvalidArgumentError(f"total variance must be > 0, got {total_variance}")
    lambdas = np.asarray(lambdas, dtype=float)
    r = _check_rank(r, lambdas.size)
    return float(np.clip(np.sum(lambdas[:r]) / total_variance, 0.0, 1.0))


def select_rank(lambdas, total_variance: float, threshold: float) -> int:
    """Smallest ``r`` whose variance ratio reaches ``threshold``.

    Raises
    ------
    InsufficientSpectrumError
        If all supplied eigenvalues together fall short; more eigenvalues
        (a finer grid) are needed.
    """
    if not 0 < threshold <= 1:
        raise InvalidArgumentError(f"threshold must lie in (0, 1], got {threshold}")
    if not total_variance > 0:
        raise InvalidArgumentError(f"total variance must be > 0, got {total_variance}")
    lambdas = np.asarray(lambdas, dtype=float)
    target = threshold * total_variance * (1.0 - _RANK_RTOL)
    csum = np.cumsum(lambdas)
    hit = np.nonzero(csum >= target)[0]
    if hit.size == 0:
        got = csum[-1] / total_variance if csum.size else 0.0
        raise InsufficientSpectrumError(
            f"{lambdas.size} eigenvalues capture only {got:.6f} of the variance, "
            f"below the threshold {threshold}; increase the number of nodes n"
        )
    return int(hit[0]) + 1


def ky_fan_gap(cov, Q) -> float:
    """``sum_{i<=r} lambda_i - trace(Q^T C Q)``, non-negative for orthonormal ``Q``."""
    cov = np.asarray(cov, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    if Q.shape[0] != cov.shape[0]:
        raise InvalidArgumentError(f"Q has {Q.shape[0]} rows, covariance is {cov.shape}")
    r = Q.shape[1]
    if np.max(np.abs(Q.T @ Q - np.eye(r))) > 1e-10:
        raise InvalidArgumentError("Q must have orthonormal columns (Q^T Q = I to 1e-10)")
    lam, _ = solve_symmetric_eigen(cov)
    return float(np.sum(lam[:r]) - np.trace(Q.T @ cov @ Q))


def empirical_covariance(ensemble) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and unbiased (``N - 1``) sample covariance, symmetrized."""
    if not isinstance(ensemble, SampleEnsemble):
        ensemble = SampleEnsemble(ensemble)
    X = ensemble.samples
    mean = X.mean(axis=0)
    D = X - mean
    cov = D.T @ D / (X.shape[0] - 1)
    return mean, 0.5 * (cov + cov.T)
