"""Nystrom discretization of the covariance eigenproblem.

With nodes ``x_k`` and weights ``w_k`` the integral eigenproblem becomes
``C W v = lambda v``.  It is solved in the symmetric form
``(W^1/2 C W^1/2) u = lambda u`` and mapped back with ``v = W^-1/2 u``,
so the discrete eigenvectors satisfy ``v_i^T W v_j = delta_ij``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateModeError,
    InadmissibleKernelError,
    InvalidArgumentError,
    NumericError,
)
from .kernels import KernelSpec, _check_points, kernel_matrix
from .quadrature import QuadratureRule

__all__ = [
    "SpectralDecomposition",
    "solve_symmetric_eigen",
    "nystrom_eigen",
    "nystrom_extend",
    "eigenfunctions",
    "CLIP_RTOL",
]

#: negative eigenvalues down to ``-CLIP_RTOL * lambda_1`` are treated as round-off
CLIP_RTOL = 1e-10


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # largest-magnitude component of every column made positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def solve_symmetric_eigen(A) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a real symmetric matrix.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns, each column signed so its largest-magnitude
    entry is positive.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise InvalidArgumentError("matrix is not symmetric to 1e-12")
    try:
        lam, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver did not converge: {exc}") from exc
    # stable reversal keeps solver order among ties
    lam = lam[::-1].copy()
    V = _fix_signs(V[:, ::-1])
    return lam, V


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Leading ``m`` Nystrom eigenpairs of a covariance kernel.

    Attributes
    ----------
    rule : QuadratureRule
    lambdas : ndarray, shape (m,)
        Descending, non-negative.
    eigvecs : ndarray, shape (n, m)
        Column ``i`` holds ``v_i`` at the nodes; W-orthonormal.
    spec : KernelSpec
    trace : float
        Sum of all ``n`` discrete eigenvalues, retained or not.
    """

    rule: QuadratureRule
    lambdas: np.ndarray
    eigvecs: np.ndarray
    spec: KernelSpec
    trace: float

    @property
    def m(self) -> int:
        return int(self.lambdas.size)

    @property
    def n(self) -> int:
        return self.rule.n

    def truncate(self, m: int) -> "SpectralDecomposition":
        if not 0 <= m <= self.m:
            raise InvalidArgumentError(f"cannot keep {m} of {self.m} modes")
        return SpectralDecomposition(
            self.rule, self.lambdas[:m], self.eigvecs[:, :m], self.spec, self.trace
        )

    def with_lambdas(self, lambdas) -> "SpectralDecomposition":
        """Copy with replaced eigenvalues (the trace is left as computed)."""
        lambdas = np.asarray(lambdas, dtype=float)
        if lambdas.shape != self.lambdas.shape:
            raise InvalidArgumentError("replacement eigenvalues must keep the same shape")
        return SpectralDecomposition(self.rule, lambdas, self.eigvecs, self.spec, self.trace)

    def to_csv(self, path) -> None:
        """Write rows ``index, lambda, v_at_node_1..n`` (index is 1-based)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "lambda"] + [f"v_at_node_{k + 1}" for k in range(self.n)])
            for i in range(self.m):
                writer.writerow(
                    [i + 1, f"{self.lambdas[i]:.17g}"]
                    + [f"{v:.17g}" for v in self.eigvecs[:, i]]
                )


def nystrom_eigen(spec: KernelSpec, rule: QuadratureRule, m: int | None = None) -> SpectralDecomposition:
    """Solve the Nystrom-discretized eigenproblem and keep the top ``m`` pairs.

    Eigenvalues with ``|lambda| <= 1e-10 * lambda_1`` are round-off and set
    to zero; anything more negative raises
    :class:`~kle.errors.InadmissibleKernelError`.
    """
    n = rule.n
    if m is None:
        m = n
    if int(m) != m or not 0 <= m <= n:
        raise InvalidArgumentError(f"m must satisfy 0 <= m <= n={n}, got {m}")
    m = int(m)
    C = kernel_matrix(spec, rule).entries
    s = np.sqrt(rule.weights)
    B = s[:, None] * C * s[None, :]
    B = 0.5 * (B + B.T)
    lam, U = solve_symmetric_eigen(B)
    trace = float(np.sum(lam))
    lam1 = max(float(lam[0]), 0.0)
    if lam[-1] < -CLIP_RTOL * lam1:
        raise InadmissibleKernelError(
            f"discrete covariance operator has eigenvalue {lam[-1]:.3e} "
            f"(largest {lam1:.3e}); the kernel is not positive semidefinite"
        )
    lam = np.where(np.abs(lam) <= CLIP_RTOL * lam1, 0.0, lam)
    V = _fix_signs(U[:, :m] / s[:, None])
    lam = lam[:m].copy()
    lam.setflags(write=False)
    V.setflags(write=False)
    return SpectralDecomposition(rule, lam, V, spec, trace)


def _node_hits(rule: QuadratureRule, x: np.ndarray):
    pos = np.clip(np.searchsorted(rule.nodes, x), 0, rule.n - 1)
    hit = rule.nodes[pos] == x
    return pos, hit


def eigenfunctions(dec: SpectralDecomposition, x, modes=None) -> np.ndarray:
    """Values ``v_i(x)`` for the selected modes, shape ``(len(x), len(modes))``.

    Off-grid points use the Nystrom extension
    ``v_i(x) = lambda_i^-1 sum_l w_l c(x, x_l) v_i(x_l)``; at nodes the stored
    values are returned unchanged.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise InvalidArgumentError("x must be a scalar or 1-D array")
    modes = np.arange(dec.m) if modes is None else np.atleast_1d(np.asarray(modes, dtype=int))
    if modes.size and (modes.min() < 0 or modes.max() >= dec.m):
        raise InvalidArgumentError(f"mode index out of range 0..{dec.m - 1}")
    _check_points(dec.spec, x, x, dec.rule.interval)
    out = np.empty((x.size, modes.size))
    pos, hit = _node_hits(dec.rule, x)
    out[hit] = dec.eigvecs[np.ix_(pos[hit], modes)]
    off = ~hit
    if np.any(off):
        lam = dec.lambdas[modes]
        if np.any(lam <= 0):
            bad = modes[lam <= 0]
            raise DegenerateModeError(
                f"modes {bad.tolist()} have zero eigenvalue and cannot be extended off-grid"
            )
        K = dec.spec(x[off][:, None], dec.rule.nodes[None, :])
        out[off] = (K * dec.rule.weights) @ dec.eigvecs[:, modes] / lam
    return out


def nystrom_extend(dec: SpectralDecomposition, i: int, x):
    """Eigenfunction ``v_i`` (0-based mode index) at ``x``, scalar or array."""
    if not 0 <= i < dec.m:
        raise InvalidArgumentError(f"mode index {i} out of range 0..{dec.m - 1}")
    if dec.lambdas[i] <= 0:
        raise DegenerateModeError(f"mode {i} has zero eigenvalue")
    vals = eigenfunctions(dec, x, [i])[:, 0]
    return float(vals[0]) if np.ndim(x) == 0 else vals
