"""Numerical checks of the spectral theory and the refinement/correlation studies."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .eigen import SpectralDecomposition, eigenfunctions, nystrom_eigen
from .errors import InvalidArgumentError
from .field import FieldEnsemble
from .kernels import Exponential, KernelSpec, kernel_matrix
from .quadrature import Interval, QuadratureRule, integrate, make_trapezoid

__all__ = [
    "StudyReport",
    "TraceCheck",
    "mercer_residual",
    "default_probe_grid",
    "trace_identity_check",
    "coefficient_stats",
    "basis_optimality_gap",
    "w_orthonormalize",
    "fourier_basis",
    "random_w_orthonormal_basis",
    "pythagorean_split",
    "grid_refinement_study",
    "correlation_study",
]


@dataclass
class StudyReport:
    """Tabular result of a study or check, plus everything needed to rerun it."""

    name: str
    parameters: dict
    columns: list
    rows: list = field(default_factory=list)
    passed: bool | None = None

    def add_row(self, *values) -> None:
        if len(values) != len(self.columns):
            raise InvalidArgumentError(
                f"row has {len(values)} values, report {self.name!r} has {len(self.columns)} columns"
            )
        self.rows.append(tuple(float(v) for v in values))

    def column(self, name) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([row[j] for row in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([f"{v:.17g}" for v in row])

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(
                {"name": self.name, "parameters": self.parameters, "pass": self.passed},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")


def default_probe_grid(rule: QuadratureRule) -> np.ndarray:
    """Nodes together with the midpoints between consecutive nodes."""
    x = rule.nodes
    return np.sort(np.concatenate([x, 0.5 * (x[:-1] + x[1:])]))


def mercer_residual(
    dec: SpectralDecomposition, m: int, probe_grid=None, *, diagonal_only: bool = False
) -> float:
    """Sup over probe pairs of ``|c(x, y) - sum_{i<=m} lambda_i v_i(x) v_i(y)|``.

    The sup is taken over a finite grid (default: nodes and midpoints), so
    it is a lower bound for the sup over the interval.  Modes with zero
    eigenvalue contribute nothing and are skipped.
    """
    if int(m) != m or not 0 <= m <= dec.m:
        raise InvalidArgumentError(f"m must satisfy 0 <= m <= {dec.m}, got {m}")
    x = default_probe_grid(dec.rule) if probe_grid is None else np.atleast_1d(np.asarray(probe_grid, dtype=float))
    modes = np.nonzero(dec.lambdas[: int(m)] > 0)[0]
    V = eigenfunctions(dec, x, modes)
    lam = dec.lambdas[modes]
    if diagonal_only:
        resid = dec.spec.diagonal(x) - (V * V) @ lam
    else:
        resid = dec.spec(x[:, None], x[None, :]) - (V * lam) @ V.T
    return float(np.max(np.abs(resid)))


@dataclass(frozen=True)
class TraceCheck:
    sum_lambdas: float
    integral: float
    abs_gap: float
    passed: bool


def trace_identity_check(dec: SpectralDecomposition, spec: KernelSpec, rule: QuadratureRule, rtol: float = 1e-10) -> TraceCheck:
    """Compare the eigenvalue sum with ``integrate(rule, c(x, x))``.

    ``dec`` should hold all ``n`` modes; the gap must not exceed
    ``rtol * max(integral, 1)``.
    """
    s = float(np.sum(dec.lambdas))
    integral = integrate(rule, spec.diagonal)
    gap = abs(s - integral)
    return TraceCheck(s, integral, gap, gap <= rtol * max(integral, 1.0))


def coefficient_stats(ensemble: FieldEnsemble, min_samples: int = 100):
    """Sample moments of the coefficients: ``(E[xi_i xi_j], E[xi_i])``."""
    xi = ensemble.coeffs
    if xi.shape[0] < min_samples:
        raise InvalidArgumentError(f"need at least {min_samples} samples, got {xi.shape[0]}")
    return xi.T @ xi / xi.shape[0], xi.mean(axis=0)


def _w_gram(U, weights):
    return U.T @ (weights[:, None] * U)


def w_orthonormalize(U, weights) -> np.ndarray:
    """Weighted modified Gram-Schmidt (two passes) of the columns of ``U``."""
    U = np.array(U, dtype=float)
    w = np.asarray(weights, dtype=float)
    for _ in range(2):
        for j in range(U.shape[1]):
            for i in range(j):
                U[:, j] -= np.dot(w * U[:, i], U[:, j]) * U[:, i]
            norm = np.sqrt(np.dot(w * U[:, j], U[:, j]))
            if norm == 0:
                raise InvalidArgumentError(f"column {j} is linearly dependent on the previous ones")
            U[:, j] /= norm
    return U


def fourier_basis(rule: QuadratureRule, r: int) -> np.ndarray:
    """First ``r`` of ``1, cos(2 pi k t), sin(2 pi k t), ...`` W-orthonormalized on the nodes."""
    t = (rule.nodes - rule.interval.a) / rule.interval.length
    cols = [np.ones_like(t)]
    k = 1
    while len(cols) < r:
        cols.append(np.cos(2 * np.pi * k * t))
        cols.append(np.sin(2 * np.pi * k * t))
        k += 1
    return w_orthonormalize(np.column_stack(cols[:r]), rule.weights)


def random_w_orthonormal_basis(rule: QuadratureRule, r: int, rng: np.random.Generator) -> np.ndarray:
    """Random ``n x r`` basis with ``U^T W U = I`` (QR of a Gaussian matrix, rescaled)."""
    Q, _ = np.linalg.qr(rng.standard_normal((rule.n, r)))
    return Q / np.sqrt(rule.weights)[:, None]


def basis_optimality_gap(
    spec: KernelSpec,
    rule: QuadratureRule,
    r: int,
    alt_basis,
    dec: SpectralDecomposition | None = None,
) -> float:
    """Excess mean-square truncation error of ``alt_basis`` over the KLE basis.

    Equals ``sum_{i<=r} lambda_i - sum_{i<=r} <C u_i, u_i>`` with the
    W-weighted inner product, where ``(C u)(x_k) = sum_l w_l c(x_k, x_l) u(x_l)``.
    """
    U = np.asarray(alt_basis, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape != (rule.n, r):
        raise InvalidArgumentError(f"alt_basis must have shape ({rule.n}, {r}), got {U.shape}")
    if np.max(np.abs(_w_gram(U, rule.weights) - np.eye(r))) > 1e-10:
        raise InvalidArgumentError("alt_basis must be W-orthonormal to 1e-10")
    if dec is None:
        dec = nystrom_eigen(spec, rule, r)
    C = kernel_matrix(spec, rule).entries
    WU = rule.weights[:, None] * U
    captured = float(np.trace(WU.T @ C @ WU))
    return float(np.sum(dec.lambdas[:r])) - captured


def pythagorean_split(Z, U, weights=None):
    """Per-sample ``(||Z||^2, ||P Z||^2, ||(I - P) Z||^2)`` in the W-norm.

    ``P = U U^T W`` is the W-orthogonal projector onto the span of the
    W-orthonormal columns of ``U``; ``weights=None`` means the Euclidean case.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    U = np.asarray(U, dtype=float)
    w = np.ones(Z.shape[1]) if weights is None else np.asarray(weights, dtype=float)
    PZ = (Z * w) @ U @ U.T
    R = Z - PZ
    nrm = lambda A: np.sum(A * A * w, axis=1)  # noqa: E731
    return nrm(Z), nrm(PZ), nrm(R)


def grid_refinement_study(
    spec: KernelSpec,
    interval,
    index_set=(5, 10),
    n_values=(20, 50, 100, 200, 500, 1000),
    n_ref: int = 2000,
) -> StudyReport:
    """Relative eigenvalue error against a fine trapezoid grid.

    Rows are ``(n, k, rel_error)`` with ``k`` 1-based.
    """
    interval = interval if isinstance(interval, Interval) else Interval(*interval)
    index_set = [int(k) for k in index_set]
    n_values = [int(n) for n in n_values]
    if n_ref <= max(n_values):
        raise InvalidArgumentError("n_ref must exceed every n in n_values")
    kmax = max(index_set)
    if min(index_set) < 1 or kmax > min(n_values):
        raise InvalidArgumentError("eigenvalue indices must lie in 1..min(n_values)")
    ref = nystrom_eigen(spec, make_trapezoid(interval, n_ref), kmax).lambdas
    report = StudyReport(
        "grid_refinement",
        {
            "kernel": spec.to_dict(),
            "interval": [interval.a, interval.b],
            "rule": "trapezoid",
            "index_set": index_set,
            "n_values": n_values,
            "n_ref": int(n_ref),
        },
        ["n", "k", "rel_error"],
    )
    for n in n_values:
        lam = nystrom_eigen(spec, make_trapezoid(interval, n), kmax).lambdas
        for k in index_set:
            report.add_row(n, k, abs(lam[k - 1] - ref[k - 1]) / ref[k - 1])
    return report


def correlation_study(
    x0: float = 0.25,
    y_grid=None,
    ells=(1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0),
    sigma: float = 1.0,
) -> StudyReport:
    """Rows ``(ell, y, c(x0, y) / sigma**2)`` for the exponential kernel."""
    y = np.linspace(x0, 1.0, 76) if y_grid is None else np.atleast_1d(np.asarray(y_grid, dtype=float))
    report = StudyReport(
        "correlation",
        {"x0": float(x0), "y_grid": y.tolist(), "ells": [float(e) for e in ells], "sigma": float(sigma)},
        ["ell", "y", "correlation"],
    )
    for ell in ells:
        spec = Exponential(sigma, ell)
        corr = spec(x0, y) / sigma**2
        for yj, cj in zip(y, corr):
            report.add_row(ell, yj, cj)
    return report
