"""Truncated KLE of a random field on an interval and Gaussian sampling.

Realizations are ``Y(x) = zbar(x) + sum_{i<=r} sqrt(lambda_i) xi_i v_i(x)``
with i.i.d. standard normal ``xi``.

Random streams: sample ``j`` of seed ``s`` draws its ``r`` normals from
``numpy.random.Generator(Philox(key=s, counter=[0, 0, 0, j]))`` using
numpy's ziggurat normal sampler.  Each sample therefore owns a disjoint
block of the counter space and its coefficients do not depend on how many
other samples are drawn or in which order.  Because the normals of one
stream are produced sequentially, the first ``r1`` coefficients drawn
for rank ``r2 > r1`` equal those drawn for rank ``r1``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .discrete_kle import select_rank, variance_ratio
from .eigen import SpectralDecomposition, eigenfunctions, nystrom_eigen
from .errors import DegenerateModeError, InvalidArgumentError, NumericError
from .kernels import KernelSpec
from .quadrature import QuadratureRule, integrate

__all__ = [
    "MeanFunction",
    "ZeroMean",
    "GridMean",
    "CustomMean",
    "mean_from_dict",
    "TruncatedKLE",
    "FieldEnsemble",
    "build_truncated_kle",
    "sample",
    "standard_normals",
    "evaluate",
    "pointwise_variance",
    "average_variance",
    "log_normal_field",
    "RNG_DESCRIPTION",
]

RNG_DESCRIPTION = "numpy Philox(key=seed, counter=[0,0,0,sample_index]); ziggurat standard_normal"

# exp overflows a float64 just above 709.78
_EXP_LIMIT = 700.0


class MeanFunction:
    def __call__(self, x):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class ZeroMean(MeanFunction):
    def __call__(self, x):
        return np.zeros(np.shape(x))

    def to_dict(self):
        return {"type": "zero"}


@dataclass(frozen=True, eq=False)
class GridMean(MeanFunction):
    """Piecewise-linear interpolant of nodal values."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.shape != v.shape or x.ndim != 1:
            raise InvalidArgumentError("grid mean needs matching 1-D nodes and values")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("grid mean values must be finite")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return np.interp(x, self.nodes, self.values)

    def to_dict(self):
        return {"type": "grid", "values": self.values.tolist()}


@dataclass(frozen=True)
class CustomMean(MeanFunction):
    """User function of ``x``; continuity is the caller's responsibility."""

    fn: Callable
    description: str = "custom"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.fn(x), dtype=float), x.shape).copy()

    def to_dict(self):
        return {"type": "custom", "description": self.description}


def mean_from_dict(d: dict | None, rule: QuadratureRule) -> MeanFunction:
    """Parse ``{"type": "zero"}``, ``{"type": "constant", "value": v}`` or
    ``{"type": "grid", "values": [...]}`` (one value per node)."""
    if d is None:
        return ZeroMean()
    kind = d.get("type")
    allowed = {"zero": set(), "constant": {"value"}, "grid": {"values"}}
    if kind not in allowed:
        raise InvalidArgumentError(f"mean.type: unknown mean {kind!r}; choose from {sorted(allowed)}")
    extra = set(d) - {"type"} - allowed[kind]
    if extra:
        raise InvalidArgumentError(f"mean: unknown keys {sorted(extra)}")
    if kind == "zero":
        return ZeroMean()
    if kind == "constant":
        value = float(d["value"])
        return CustomMean(lambda x: np.full(np.shape(x), value), f"constant {value!r}")
    values = np.asarray(d["values"], dtype=float)
    if values.shape != (rule.n,):
        raise InvalidArgumentError(f"mean.values: expected {rule.n} nodal values, got {values.size}")
    return GridMean(rule.nodes, values)


@dataclass(frozen=True, eq=False)
class TruncatedKLE:
    """Rank-``r`` KLE: the first ``r`` Nystrom modes plus a mean function."""

    dec: SpectralDecomposition
    r: int
    mean: MeanFunction = field(default_factory=ZeroMean)
    rho: float = float("nan")
    total_variance: float = float("nan")

    @property
    def rule(self) -> QuadratureRule:
        return self.dec.rule

    @property
    def lambdas(self) -> np.ndarray:
        return self.dec.lambdas[: self.r]

    def modes(self, x=None) -> np.ndarray:
        """``v_i(x)`` for the retained modes; nodes when ``x`` is None."""
        if x is None:
            return self.dec.eigvecs[:, : self.r]
        return eigenfunctions(self.dec, x, np.arange(self.r))

    def metadata(self) -> dict:
        return {
            "kernel": self.dec.spec.to_dict(),
            "quadrature": self.rule.to_dict(),
            "mean": self.mean.to_dict(),
            "r": self.r,
            "rho": self.rho,
            "n": self.rule.n,
            "total_variance": self.total_variance,
        }


def build_truncated_kle(
    spec: KernelSpec,
    rule: QuadratureRule,
    mean: MeanFunction | None = None,
    *,
    rank: int | None = None,
    threshold: float | None = None,
    dec: SpectralDecomposition | None = None,
) -> TruncatedKLE:
    """Build a truncated KLE with either a fixed ``rank`` or a variance ``threshold``.

    The total variance is ``integrate(rule, c(x, x))``; the achieved ratio
    is recorded as ``rho``.  A precomputed decomposition ``dec`` may be
    passed to avoid re-solving.
    """
    if (rank is None) == (threshold is None):
        raise InvalidArgumentError("give exactly one of rank or threshold")
    mean = ZeroMean() if mean is None else mean
    if dec is None:
        dec = nystrom_eigen(spec, rule)
    total = integrate(rule, spec.diagonal)
    if total <= 0:
        raise InvalidArgumentError(f"kernel has non-positive total variance {total}")
    if threshold is not None:
        r = select_rank(dec.lambdas, total, threshold)
    else:
        if int(rank) != rank or not 0 <= rank <= rule.n:
            raise InvalidArgumentError(f"rank must satisfy 0 <= r <= n={rule.n}, got {rank}")
        r = int(rank)
        if r > dec.m:
            raise InvalidArgumentError(f"rank {r} exceeds the {dec.m} computed modes")
    if r > 0 and dec.lambdas[r - 1] <= 0:
        positive = int(np.count_nonzero(dec.lambdas > 0))
        raise DegenerateModeError(
            f"rank {r} requested but only {positive} eigenvalues are positive"
        )
    rho = variance_ratio(dec.lambdas, total, r)
    return TruncatedKLE(dec.truncate(r), r, mean, rho, total)


def standard_normals(seed: int, index: int, r: int) -> np.ndarray:
    """The ``r`` coefficients of sample ``index`` under ``seed``."""
    bitgen = np.random.Philox(key=int(seed), counter=[0, 0, 0, int(index)])
    return np.random.Generator(bitgen).standard_normal(r)


@dataclass(frozen=True, eq=False)
class FieldEnsemble:
    """Sampled coefficients; realizations are evaluated on demand."""

    kle: TruncatedKLE
    coeffs: np.ndarray
    seed: int | None = None

    @property
    def N(self) -> int:
        return int(self.coeffs.shape[0])

    def realizations(self, x=None) -> np.ndarray:
        """All realizations, shape ``(N, len(x))``; at the nodes when ``x`` is None."""
        pts = self.kle.rule.nodes if x is None else np.atleast_1d(np.asarray(x, dtype=float))
        V = self.kle.modes(x)
        return self.kle.mean(pts) + (self.coeffs * np.sqrt(self.kle.lambdas)) @ V.T

    def to_csv(self, path, x=None) -> None:
        """Columns ``x, sample_0, ..., sample_{N-1}``, one row per point."""
        pts = self.kle.rule.nodes if x is None else np.atleast_1d(np.asarray(x, dtype=float))
        Z = self.realizations(x)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"sample_{j}" for j in range(self.N)])
            for k, xk in enumerate(pts):
                w.writerow([f"{xk:.17g}"] + [f"{v:.17g}" for v in Z[:, k]])

    def metadata(self) -> dict:
        meta = self.kle.metadata()
        meta.update({"seed": self.seed, "N": self.N, "rng": RNG_DESCRIPTION})
        return meta

    def write_metadata(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def sample(kle: TruncatedKLE, N: int, seed: int = 0, *, coeffs=None) -> FieldEnsemble:
    """Draw ``N`` realizations.

    ``coeffs`` (shape ``(N, r)``) bypasses the generator and forces the
    standard-normal coefficients; intended for tests.
    """
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"N must be >= 1, got {N}")
    N = int(N)
    if coeffs is not None:
        xi = np.array(coeffs, dtype=float).reshape(N, kle.r)
        if not np.all(np.isfinite(xi)):
            raise InvalidArgumentError("forced coefficients must be finite")
    else:
        if int(seed) != seed or seed < 0:
            raise InvalidArgumentError(f"seed must be a non-negative integer, got {seed}")
        xi = np.empty((N, kle.r))
        for j in range(N):
            xi[j] = standard_normals(seed, j, kle.r)
    xi.setflags(write=False)
    return FieldEnsemble(kle, xi, None if coeffs is not None else int(seed))


def evaluate(ensemble: FieldEnsemble, sample_index: int, x):
    """Realization ``sample_index`` at ``x`` (scalar or array)."""
    if not 0 <= sample_index < ensemble.N:
        raise InvalidArgumentError(f"sample index {sample_index} out of range 0..{ensemble.N - 1}")
    kle = ensemble.kle
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    if not kle.rule.interval.contains(pts):
        raise InvalidArgumentError(f"x must lie in [{kle.rule.interval.a}, {kle.rule.interval.b}]")
    V = kle.modes(pts)
    vals = kle.mean(pts) + V @ (np.sqrt(kle.lambdas) * ensemble.coeffs[sample_index])
    return float(vals[0]) if np.ndim(x) == 0 else vals


def pointwise_variance(kle: TruncatedKLE, x):
    """``sum_{i<=r} lambda_i v_i(x)**2``."""
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    if kle.r == 0:
        vals = np.zeros(pts.shape)
    else:
        V = kle.modes(pts)
        vals = (V * V) @ kle.lambdas
    return float(vals[0]) if np.ndim(x) == 0 else vals


def average_variance(kle: TruncatedKLE) -> float:
    """Average over the interval of the pointwise variance, ``sum lambda_i / (b - a)``."""
    return float(np.sum(kle.lambdas)) / kle.rule.interval.length


def log_normal_field(ensemble: FieldEnsemble, sample_index: int, x):
    """``exp`` of a realization, e.g. a permeability field."""
    y = evaluate(ensemble, sample_index, x)
    arr = np.atleast_1d(y)
    if np.any(arr > _EXP_LIMIT):
        k = int(np.argmax(arr))
        xk = np.atleast_1d(np.asarray(x, dtype=float))[k]
        raise NumericError(
            f"log-normal field overflows: exponent {arr[k]:.4g} > {_EXP_LIMIT} "
            f"at x={xk:.6g} (sample {sample_index})"
        )
    return np.exp(y) if np.ndim(y) else float(np.exp(y))
