"""Command-line front end.

Exit codes: 0 success, 1 a check failed or the computation was rejected,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import RunConfig, load_config
from .eigen import CLIP_RTOL, SpectralDecomposition, nystrom_eigen
from .errors import InadmissibleKernelError, InvalidArgumentError, KLEError
from .field import RNG_DESCRIPTION, build_truncated_kle, sample, standard_normals
from .kernels import Exponential, admissibility_check, kernel_matrix
from .quadrature import integrate

__all__ = [
    "cmd_spectrum",
    "cmd_sample",
    "cmd_truncation_study",
    "cmd_verify",
    "cmd_study",
    "main",
]

STUDIES = ("grid-refinement", "correlation")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _config_record(cfg: RunConfig) -> dict:
    record = {
        "kernel": cfg.kernel.to_dict(),
        "quadrature": cfg.rule.to_dict(),
        "mean": cfg.mean.to_dict(),
        "selection": {"rank": cfg.rank} if cfg.rank is not None else {"threshold": cfg.threshold},
        "sampling": {"N": cfg.N, "seed": cfg.seed},
    }
    if cfg.raw:
        record["config"] = {k: v for k, v in cfg.raw.items() if k != "output"}
    return record


def _build_kle(cfg: RunConfig, rank=None, dec=None):
    if rank is None and cfg.rank is None:
        return build_truncated_kle(cfg.kernel, cfg.rule, cfg.mean, threshold=cfg.threshold, dec=dec)
    return build_truncated_kle(cfg.kernel, cfg.rule, cfg.mean, rank=rank or cfg.rank, dec=dec)


def cmd_spectrum(cfg: RunConfig) -> list:
    """Write ``spectrum.csv`` (index, lambda, lambda_normalized, rho_cumulative)."""
    out = _outdir(cfg)
    dec = nystrom_eigen(cfg.kernel, cfg.rule)
    total = integrate(cfg.rule, cfg.kernel.diagonal)
    lam = dec.lambdas
    rho = np.clip(np.cumsum(lam) / total, 0.0, 1.0)
    path = out / "spectrum.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "lambda", "lambda_normalized", "rho_cumulative"])
        for i in range(dec.m):
            w.writerow([i + 1, f"{lam[i]:.17g}", f"{lam[i] / lam[0]:.17g}", f"{rho[i]:.17g}"])
    meta = out / "spectrum.meta.json"
    _write_json(meta, {**_config_record(cfg), "total_variance": total, "trace": dec.trace})
    return [path, meta]


def cmd_sample(cfg: RunConfig) -> list:
    """Write ``realizations.csv`` (x, sample_0, ...) and ``meta.json``."""
    out = _outdir(cfg)
    kle = _build_kle(cfg)
    ens = sample(kle, cfg.N, cfg.seed)
    path = out / "realizations.csv"
    ens.to_csv(path)
    meta = out / "meta.json"
    _write_json(meta, {**_config_record(cfg), **ens.metadata()})
    return [path, meta]


def cmd_truncation_study(cfg: RunConfig, r_list=None) -> list:
    """One realization (sample 0 of the seed) at several truncation levels.

    Columns share the same coefficients, so column ``r2`` minus column
    ``r1`` is exactly the partial sum of modes ``r1+1..r2``.
    """
    r_list = list(cfg.r_list if r_list is None else r_list)
    if not r_list or any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise InvalidArgumentError("r_list must be non-empty and strictly ascending")
    out = _outdir(cfg)
    rmax = r_list[-1]
    kle = build_truncated_kle(cfg.kernel, cfg.rule, cfg.mean, rank=rmax)
    xi = standard_normals(cfg.seed, 0, rmax)
    scaled = np.sqrt(kle.lambdas) * xi
    V = kle.modes()
    x = cfg.rule.nodes
    zbar = kle.mean(x)
    cols = [zbar + V[:, :r] @ scaled[:r] for r in r_list]
    path = out / "truncation.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"] + [f"r_{r}" for r in r_list])
        for k in range(x.size):
            w.writerow([f"{x[k]:.17g}"] + [f"{c[k]:.17g}" for c in cols])
    meta = out / "truncation.meta.json"
    _write_json(meta, {**_config_record(cfg), "r_list": r_list, "sample_index": 0,
                       "seed": cfg.seed, "rng": RNG_DESCRIPTION})
    return [path, meta]


def _check(name, passed, **detail):
    return {"name": name, "pass": bool(passed), **detail}


def run_verification(cfg: RunConfig, dec: SpectralDecomposition | None = None,
                     n_random_bases: int = 100) -> dict:
    """Run the diagnostic suite and return ``{"pass": bool, "checks": [...]}``.

    A precomputed (possibly altered) decomposition may be supplied; it is
    then checked instead of a fresh one.
    """
    spec, rule = cfg.kernel, cfg.rule
    checks = []
    adm = admissibility_check(spec, rule, tol=0.0)
    if dec is None:
        try:
            dec = nystrom_eigen(spec, rule)
        except InadmissibleKernelError as exc:
            checks.append(_check("admissibility", False, min_eigenvalue=adm.min_eigenvalue, detail=str(exc)))
            return {"pass": False, "checks": checks}
    lam1 = float(dec.lambdas[0])
    checks.append(_check("admissibility", adm.min_eigenvalue >= -CLIP_RTOL * max(lam1, 0.0),
                         min_eigenvalue=adm.min_eigenvalue, tol=CLIP_RTOL * lam1))

    V, lam, w = dec.eigvecs, dec.lambdas, rule.weights
    ortho = float(np.max(np.abs(V.T @ (w[:, None] * V) - np.eye(dec.m))))
    C = kernel_matrix(spec, rule).entries
    resid = float(np.max(np.linalg.norm(C @ (w[:, None] * V) - V * lam, axis=0)))
    checks.append(_check("w_orthonormality", ortho <= 1e-10, max_deviation=ortho))
    checks.append(_check("eigen_residual", resid <= 1e-8 * max(lam1, 1.0), max_residual=resid))

    tr = dg.trace_identity_check(dec, spec, rule)
    checks.append(_check("trace_identity", tr.passed, sum_lambdas=tr.sum_lambdas,
                         integral=tr.integral, abs_gap=tr.abs_gap))

    diag_max = float(np.max(spec.diagonal(rule.nodes)))
    ms = sorted({m for m in (1, 5, 20, 100, dec.m) if m <= dec.m})
    res = [dg.mercer_residual(dec, m, rule.nodes, diagonal_only=True) for m in ms]
    monotone = all(b <= a + 1e-12 for a, b in zip(res, res[1:]))
    checks.append(_check("mercer", monotone and res[-1] <= 1e-8 * max(diag_max, 1.0),
                         m_values=ms, diagonal_residuals=res))

    rng = np.random.default_rng(cfg.seed)
    gaps = []
    lead_gaps = []
    for r in (1, 5, 10):
        if r > dec.m:
            continue
        lead_gaps.append(dg.basis_optimality_gap(spec, rule, r, V[:, :r], dec))
        gaps.append(dg.basis_optimality_gap(spec, rule, r, dg.fourier_basis(rule, r), dec))
        for _ in range(n_random_bases):
            U = dg.random_w_orthonormal_basis(rule, r, rng)
            gaps.append(dg.basis_optimality_gap(spec, rule, r, U, dec))
    min_gap = float(min(gaps))
    lead = float(max(abs(g) for g in lead_gaps))
    checks.append(_check("ky_fan", min_gap >= -1e-10 * lam1 and lead <= 1e-10 * max(lam1, 1.0),
                         min_gap=min_gap, max_leading_gap=lead, bases=len(gaps)))

    if cfg.N >= 100:
        kle = _build_kle(cfg, dec=dec)
        ens = sample(kle, cfg.N, cfg.seed)
        second, first = dg.coefficient_stats(ens)
        e_mean = float(np.max(np.abs(first)))
        e_second = float(np.max(np.abs(second - np.eye(kle.r))))
        tol_mean, tol_second = 5 / np.sqrt(cfg.N), 5 * np.sqrt(2 / cfg.N)
        checks.append(_check("coefficient_stats", e_mean <= tol_mean and e_second <= tol_second,
                             r=kle.r, N=cfg.N, max_abs_mean=e_mean, max_abs_second_moment_error=e_second,
                             tol_mean=tol_mean, tol_second=tol_second))
    else:
        checks.append({"name": "coefficient_stats", "pass": True, "skipped": "N < 100"})
    return {"pass": all(c["pass"] for c in checks), "checks": checks}


def cmd_verify(cfg: RunConfig, dec: SpectralDecomposition | None = None) -> tuple:
    """Write ``verify.json``; returns ``(exit_status, report)``."""
    out = _outdir(cfg)
    report = run_verification(cfg, dec)
    report["config"] = _config_record(cfg)
    _write_json(out / "verify.json", report)
    return (0 if report["pass"] else 1), report


def cmd_study(cfg: RunConfig, study: str) -> list:
    """Run a named study and write ``<name>.csv`` plus ``<name>.json``."""
    params = dict(cfg.study)
    if study == "grid-refinement":
        allowed = {"index_set", "n_values", "n_ref"}
        _reject_unknown(params, allowed)
        report = dg.grid_refinement_study(cfg.kernel, cfg.interval, **params)
    elif study == "correlation":
        allowed = {"x0", "y_grid", "ells"}
        _reject_unknown(params, allowed)
        sigma = cfg.kernel.sigma if isinstance(cfg.kernel, Exponential) else 1.0
        report = dg.correlation_study(sigma=sigma, **params)
    else:
        raise InvalidArgumentError(f"unknown study {study!r}; choose from {list(STUDIES)}")
    out = _outdir(cfg)
    stem = study.replace("-", "_")
    report.to_csv(out / f"{stem}.csv")
    report.to_json(out / f"{stem}.json")
    return [out / f"{stem}.csv", out / f"{stem}.json"]


def _reject_unknown(params, allowed):
    extra = set(params) - allowed
    if extra:
        raise InvalidArgumentError(f"study: unknown keys {sorted(extra)}; allowed {sorted(allowed)}")


def _thread_limit():
    value = os.environ.get("KLE_THREADS")
    if not value:
        return contextlib.nullcontext()
    try:
        limit = int(value)
    except ValueError:
        raise InvalidArgumentError(f"KLE_THREADS must be a positive integer, got {value!r}")
    if limit < 1:
        raise InvalidArgumentError(f"KLE_THREADS must be a positive integer, got {value!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=limit)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kle", description="Truncated Karhunen-Loeve expansions of random fields on an interval.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="eigenvalues and cumulative variance ratio")
    sub.add_parser("sample", parents=[common], help="Gaussian realizations on the nodes")
    p = sub.add_parser("truncation", parents=[common], help="one realization at several ranks")
    p.add_argument("--r-list", type=lambda s: [int(v) for v in s.split(",")], help="comma-separated ascending ranks")
    sub.add_parser("verify", parents=[common], help="run the diagnostic checks")
    p = sub.add_parser("study", parents=[common], help="grid-refinement or correlation study")
    p.add_argument("study", choices=STUDIES)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig.from_dict({})
        if args.seed is not None or args.out is not None:
            cfg = cfg.with_overrides(seed=args.seed, output=args.out)
        limiter = _thread_limit()
    except InvalidArgumentError as exc:
        print(f"kle: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        with limiter:
            if args.command == "spectrum":
                cmd_spectrum(cfg)
            elif args.command == "sample":
                cmd_sample(cfg)
            elif args.command == "truncation":
                cmd_truncation_study(cfg, args.r_list)
            elif args.command == "verify":
                status, report = cmd_verify(cfg)
                for c in report["checks"]:
                    print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
                return status
            elif args.command == "study":
                cmd_study(cfg, args.study)
    except InvalidArgumentError as exc:
        print(f"kle: {exc}", file=sys.stderr)
        return 2
    except KLEError as exc:
        print(f"kle: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
