"""Run configuration for the command-line tool."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InvalidArgumentError
from .field import MeanFunction, mean_from_dict
from .kernels import KernelSpec, kernel_from_dict
from .quadrature import Interval, QuadratureRule, make_gauss_legendre, make_trapezoid

__all__ = ["RunConfig", "load_config", "DEFAULTS"]

DEFAULTS = {
    "kernel": {"kernel": "exponential", "sigma": 1.0, "ell": 1.0},
    "interval": [0.0, 1.0],
    "quadrature": {"rule": "trapezoid", "n": 500},
    "mean": {"type": "zero"},
    "selection": {"threshold": 0.99},
    "sampling": {"N": 1000, "seed": 0},
    "output": ".",
    "truncation": {"r_list": [5, 15, 30, 100]},
    "study": {},
}


def _require_keys(section: str, d, allowed: set):
    if not isinstance(d, dict):
        raise InvalidArgumentError(f"{section}: expected an object")
    extra = set(d) - allowed
    if extra:
        raise InvalidArgumentError(f"{section}: unknown keys {sorted(extra)}")


def _int(section, value, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise InvalidArgumentError(f"{section}: expected an integer >= {minimum}, got {value!r}")
    return value


@dataclass
class RunConfig:
    """Validated configuration; every field is checked at construction."""

    kernel: KernelSpec
    rule: QuadratureRule
    mean: MeanFunction
    rank: int | None
    threshold: float | None
    N: int
    seed: int
    output: str
    r_list: list = field(default_factory=lambda: [5, 15, 30, 100])
    study: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def interval(self) -> Interval:
        return self.rule.interval

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _require_keys("config", d, set(DEFAULTS))
        merged = {**DEFAULTS, **d}
        kernel = kernel_from_dict(merged["kernel"])

        iv = merged["interval"]
        if not (isinstance(iv, (list, tuple)) and len(iv) == 2):
            raise InvalidArgumentError("interval: expected [a, b]")
        try:
            interval = Interval(float(iv[0]), float(iv[1]))
        except InvalidArgumentError as exc:
            raise InvalidArgumentError(f"interval: {exc}") from exc

        q = merged["quadrature"]
        _require_keys("quadrature", q, {"rule", "n"})
        rule_name = q.get("rule", "trapezoid")
        n = _int("quadrature.n", q.get("n", 500), 1)
        if rule_name == "trapezoid":
            rule = make_trapezoid(interval, _int("quadrature.n", n, 2))
        elif rule_name == "gauss":
            rule = make_gauss_legendre(interval, n)
        else:
            raise InvalidArgumentError(f"quadrature.rule: expected 'trapezoid' or 'gauss', got {rule_name!r}")

        mean = mean_from_dict(merged["mean"], rule)

        sel = merged["selection"]
        _require_keys("selection", sel, {"rank", "threshold"})
        if len(sel) != 1:
            raise InvalidArgumentError("selection: give exactly one of 'rank' or 'threshold'")
        rank = threshold = None
        if "rank" in sel:
            rank = _int("selection.rank", sel["rank"], 1)
            if rank > rule.n:
                raise InvalidArgumentError(f"selection.rank: {rank} exceeds quadrature.n={rule.n}")
        else:
            threshold = sel["threshold"]
            if not isinstance(threshold, (int, float)) or not 0 < threshold <= 1:
                raise InvalidArgumentError(f"selection.threshold: expected a number in (0, 1], got {threshold!r}")
            threshold = float(threshold)

        s = merged["sampling"]
        _require_keys("sampling", s, {"N", "seed"})
        N = _int("sampling.N", s.get("N", 1000), 1)
        seed = _int("sampling.seed", s.get("seed", 0), 0)
        if seed >= 2**64:
            raise InvalidArgumentError("sampling.seed: must fit in an unsigned 64-bit integer")

        if not isinstance(merged["output"], str):
            raise InvalidArgumentError("output: expected a directory path string")

        t = merged["truncation"]
        _require_keys("truncation", t, {"r_list"})
        r_list = [_int("truncation.r_list", r, 1) for r in t.get("r_list", [])]
        if not r_list or any(b <= a for a, b in zip(r_list, r_list[1:])):
            raise InvalidArgumentError("truncation.r_list: expected a non-empty strictly ascending list")

        if not isinstance(merged["study"], dict):
            raise InvalidArgumentError("study: expected an object")

        return cls(kernel, rule, mean, rank, threshold, N, seed, merged["output"],
                   r_list, dict(merged["study"]), merged)

    def with_overrides(self, *, seed=None, output=None) -> "RunConfig":
        raw = dict(self.raw)
        if seed is not None:
            raw["sampling"] = {**raw["sampling"], "seed": seed}
        if output is not None:
            raw["output"] = output
        return RunConfig.from_dict(raw)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(d)
