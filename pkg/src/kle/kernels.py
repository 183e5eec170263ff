"""Covariance kernels and their Gram matrices on quadrature nodes."""

from __future__ import annotations

import importlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, NumericError
from .quadrature import Interval, QuadratureRule

__all__ = [
    "KernelSpec",
    "Exponential",
    "Constant",
    "BrownianMin",
    "Custom",
    "KernelMatrix",
    "eval_kernel",
    "kernel_matrix",
    "admissibility_check",
    "AdmissibilityResult",
    "kernel_from_dict",
]


class KernelSpec:
    """Base class for a symmetric covariance function ``c(x, y)``.

    Subclasses implement :meth:`__call__` with numpy broadcasting.
    """

    vectorized = True

    def __call__(self, x, y):
        raise NotImplementedError

    def diagonal(self, x):
        x = np.asarray(x, dtype=float)
        return self(x, x)

    def check_domain(self, x, y):
        pass

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(KernelSpec):
    """``sigma**2 * exp(-|x - y| / ell)``."""

    sigma: float = 1.0
    ell: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgumentError(f"sigma must be > 0, got {self.sigma}")
        if not (np.isfinite(self.ell) and self.ell > 0):
            raise InvalidArgumentError(f"ell must be > 0, got {self.ell}")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.sigma**2 * np.exp(-np.abs(x - y) / self.ell)

    def diagonal(self, x):
        return np.full(np.shape(x), self.sigma**2)

    def to_dict(self):
        return {"kernel": "exponential", "sigma": self.sigma, "ell": self.ell}


@dataclass(frozen=True)
class Constant(KernelSpec):
    """``sigma**2`` everywhere: a rank-one operator."""

    sigma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgumentError(f"sigma must be > 0, got {self.sigma}")

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.full(x.shape, self.sigma**2)

    def to_dict(self):
        return {"kernel": "constant", "sigma": self.sigma}


@dataclass(frozen=True)
class BrownianMin(KernelSpec):
    """``min(x, y)``, the Brownian-motion covariance.

    Test fixture only: on ``[0, 1]`` its eigenpairs are known in closed form,
    ``lambda_k = ((k - 1/2) pi)**-2`` and ``v_k(x) = sqrt(2) sin((k - 1/2) pi x)``.
    """

    def __call__(self, x, y):
        return np.minimum(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def check_domain(self, x, y):
        if np.any(np.asarray(x) < 0) or np.any(np.asarray(y) < 0):
            raise InvalidArgumentError("BrownianMin is defined for x, y >= 0")

    @staticmethod
    def exact_eigenvalue(k: int) -> float:
        return 1.0 / ((k - 0.5) * np.pi) ** 2

    @staticmethod
    def exact_eigenfunction(k: int, x):
        return np.sqrt(2.0) * np.sin((k - 0.5) * np.pi * np.asarray(x, dtype=float))

    def to_dict(self):
        return {"kernel": "brownian_min"}


@dataclass(frozen=True)
class Custom(KernelSpec):
    """User-supplied symmetric kernel.

    Set ``vectorized=False`` when ``evaluator`` only accepts scalars.
    """

    evaluator: Callable
    vectorized: bool = True
    name: str = "custom"

    def __call__(self, x, y):
        if self.vectorized:
            x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
            out = np.asarray(self.evaluator(x, y), dtype=float)
            return np.broadcast_to(out, x.shape)
        return np.vectorize(lambda s, t: float(self.evaluator(s, t)), otypes=[float])(x, y)

    def to_dict(self):
        return {"kernel": "custom", "callable": self.name}


def _check_points(spec: KernelSpec, x, y, interval: Interval | None):
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError("kernel arguments must be finite")
    if interval is not None and not (interval.contains(x) and interval.contains(y)):
        raise InvalidArgumentError(
            f"kernel arguments must lie in [{interval.a}, {interval.b}]"
        )
    spec.check_domain(x, y)


def eval_kernel(spec: KernelSpec, x, y, interval: Interval | None = None):
    """Evaluate ``c(x, y)``; raises if points fall outside ``interval`` or the kernel domain."""
    _check_points(spec, x, y, interval)
    out = spec(x, y)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    rule: QuadratureRule
    entries: np.ndarray


def kernel_matrix(spec: KernelSpec, rule: QuadratureRule) -> KernelMatrix:
    """Assemble ``C[k, l] = c(x_k, x_l)`` on the rule's nodes.

    Only the upper triangle is evaluated and then mirrored, so the result
    is exactly symmetric even for a kernel with round-off asymmetry.
    """
    x = rule.nodes
    n = x.size
    _check_points(spec, x, x, rule.interval)
    iu, ju = np.triu_indices(n)
    upper = np.asarray(spec(x[iu], x[ju]), dtype=float)
    if not np.all(np.isfinite(upper)):
        raise NumericError("kernel produced non-finite values on the nodes")
    C = np.empty((n, n))
    C[iu, ju] = upper
    C[ju, iu] = upper
    C.setflags(write=False)
    return KernelMatrix(rule, C)


@dataclass(frozen=True)
class AdmissibilityResult:
    passed: bool
    min_eigenvalue: float
    tol: float

    def __bool__(self):
        return self.passed


def admissibility_check(spec: KernelSpec, rule: QuadratureRule, tol: float = 1e-10) -> AdmissibilityResult:
    """Positivity test on the discretized operator ``W^1/2 C W^1/2``."""
    if not tol >= 0:
        raise InvalidArgumentError(f"tol must be >= 0, got {tol}")
    C = kernel_matrix(spec, rule).entries
    s = np.sqrt(rule.weights)
    B = s[:, None] * C * s[None, :]
    try:
        lam = np.linalg.eigvalsh(B)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue solve failed: {exc}") from exc
    lam_min = float(lam[0])
    return AdmissibilityResult(lam_min >= -tol, lam_min, float(tol))


def _load_callable(path: str) -> Callable:
    module, _, attr = path.partition(":")
    if not module or not attr:
        raise InvalidArgumentError(f"custom kernel callable must be 'module:function', got {path!r}")
    try:
        return getattr(importlib.import_module(module), attr)
    except (ImportError, AttributeError) as exc:
        raise InvalidArgumentError(f"cannot load custom kernel {path!r}: {exc}") from exc


_KERNEL_KEYS = {
    "exponential": {"sigma", "ell"},
    "constant": {"sigma"},
    "brownian_min": set(),
    "custom": {"callable", "vectorized"},
}


def kernel_from_dict(d: dict) -> KernelSpec:
    """Parse e.g. ``{"kernel": "exponential", "sigma": 1.0, "ell": 0.0625}``.

    Custom kernels are referenced by import path:
    ``{"kernel": "custom", "callable": "package.module:function"}``.
    """
    if not isinstance(d, dict) or "kernel" not in d:
        raise InvalidArgumentError("kernel: expected an object with a 'kernel' key")
    kind = d["kernel"]
    if kind not in _KERNEL_KEYS:
        raise InvalidArgumentError(
            f"kernel.kernel: unknown kernel {kind!r}; choose from {sorted(_KERNEL_KEYS)}"
        )
    extra = set(d) - {"kernel"} - _KERNEL_KEYS[kind]
    if extra:
        raise InvalidArgumentError(f"kernel: unknown keys {sorted(extra)} for {kind!r}")
    try:
        if kind == "exponential":
            return Exponential(float(d.get("sigma", 1.0)), float(d.get("ell", 1.0)))
        if kind == "constant":
            return Constant(float(d.get("sigma", 1.0)))
        if kind == "brownian_min":
            return BrownianMin()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidArgumentError):
            raise InvalidArgumentError(f"kernel: {exc}") from exc
        raise InvalidArgumentError(f"kernel: numeric parameters expected ({exc})") from exc
    if "callable" not in d:
        raise InvalidArgumentError("kernel.callable: required for custom kernels")
    fn = _load_callable(d["callable"])
    return Custom(fn, vectorized=bool(d.get("vectorized", True)), name=d["callable"])
