"""Experiment configuration files (JSON, ``schema_version`` 1).

A config describes a null model, an alternative generator, a kernel, the
Monte Carlo sizes and an optional sweep over one parameter of the
alternative.  See README.md for the field reference.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from importlib import resources

from .kernels import KernelSpec

SCHEMA_VERSION = 1

NULL_KINDS = ("er", "ermm", "chung-lu", "dcsbm-preset")
ALT_KINDS = ("null", "model", "chung-lu-shift", "dcsbm-preset", "plant-clique", "plant-hubs", "nlpa")

# fields each kind cannot do without
_NULL_NEEDS = {"er": ("p",), "ermm": ("Q",), "chung-lu": (), "dcsbm-preset": ()}
_ALT_NEEDS = {"model": ("model",), "plant-clique": ("K",)}


class ConfigError(ValueError):
    """Schema violation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class ExperimentConfig:
    name: str
    n: int
    null: dict
    alternative: dict = field(default_factory=lambda: {"kind": "null"})
    kernel: KernelSpec = field(default_factory=KernelSpec)
    M: int = 200
    m: int = 50
    B: int = 0
    alpha: float = 0.05
    seed: int = 1
    estimated: str | None = None
    labels: list | None = None
    sweep: dict | None = None
    baselines: dict = field(default_factory=dict)
    variants: list | None = None

    def settings(self):
        """(x value, config) pairs for each sweep point (one pair without a sweep)."""
        if not self.sweep:
            return [(None, self)]
        out = []
        for val in self.sweep["values"]:
            alt = dict(self.alternative)
            alt[self.sweep["param"]] = val
            out.append((val, replace(self, alternative=alt, sweep=None)))
        return out

    def variant_configs(self):
        """(label, config) per test variant; baselines run with the first only."""
        if not self.variants:
            return [(self.kernel.label() + ("-" + self.estimated if self.estimated else ""), self)]
        out = []
        for i, v in enumerate(self.variants):
            out.append((v["label"], replace(
                self, kernel=KernelSpec.parse(v.get("kernel", self.kernel.label())),
                estimated=v.get("estimated"), variants=None,
                baselines=self.baselines if i == 0 else {},
            )))
        return out

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION, "name": self.name, "n": self.n,
            "null": self.null, "alternative": self.alternative, "kernel": self.kernel.label(),
            "M": self.M, "m": self.m, "B": self.B, "alpha": self.alpha, "seed": self.seed,
            "estimated": self.estimated, "baselines": self.baselines,
        }
        if self.labels is not None:
            d["labels"] = self.labels
        if self.sweep:
            d["sweep"] = self.sweep
        if self.variants:
            d["variants"] = self.variants
        return d


def _need(d, name, path, typ=None):
    if name not in d:
        raise ConfigError(f"{path}.{name}", "missing required field")
    val = d[name]
    if typ is not None and not isinstance(val, typ):
        raise ConfigError(f"{path}.{name}", f"expected {getattr(typ, '__name__', typ)}")
    return val


def config_from_dict(d: dict, base_dir: str | None = None) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("$", "config must be an object")
    ver = d.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ConfigError("$.schema_version", f"expected {SCHEMA_VERSION}, got {ver!r}")
    n = _need(d, "n", "$", int)
    if n < 3:
        raise ConfigError("$.n", "need at least 3 vertices")
    null = _need(d, "null", "$", dict)
    if null.get("kind") not in NULL_KINDS:
        raise ConfigError("$.null.kind", f"must be one of {NULL_KINDS}")
    for name in _NULL_NEEDS[null["kind"]]:
        _need(null, name, "$.null")
    if null["kind"] in ("ermm", "dcsbm-preset") and "sizes" not in null and "labels" not in d:
        raise ConfigError("$.null.sizes", "group sizes (or top-level labels) required")
    alt = d.get("alternative", {"kind": "null"})
    if not isinstance(alt, dict) or alt.get("kind") not in ALT_KINDS:
        raise ConfigError("$.alternative.kind", f"must be one of {ALT_KINDS}")
    sweep_param = (d.get("sweep") or {}).get("param") if isinstance(d.get("sweep"), dict) else None
    for name in _ALT_NEEDS.get(alt["kind"], ()):
        if name != sweep_param:
            _need(alt, name, "$.alternative")
    if alt["kind"] == "chung-lu-shift" and null["kind"] != "chung-lu":
        raise ConfigError("$.alternative.kind", "chung-lu-shift needs a chung-lu null")
    if alt["kind"] == "dcsbm-preset" and null["kind"] != "dcsbm-preset":
        raise ConfigError("$.alternative.kind", "dcsbm-preset alternative needs a dcsbm-preset null")
    try:
        kernel = KernelSpec.parse(str(d.get("kernel", "wl:3")))
    except ValueError as exc:
        raise ConfigError("$.kernel", str(exc)) from None
    M = d.get("M", 200)
    if not isinstance(M, int) or M < 20:
        raise ConfigError("$.M", "must be an integer >= 20")
    m = d.get("m", 50)
    if not isinstance(m, int) or m < 0:
        raise ConfigError("$.m", "must be a non-negative integer")
    B = d.get("B", 0)
    if not isinstance(B, int) or B < 0:
        raise ConfigError("$.B", "must be a non-negative integer")
    alpha = d.get("alpha", 0.05)
    if not isinstance(alpha, (int, float)) or not 0.0 < alpha < 1.0:
        raise ConfigError("$.alpha", "must lie in (0, 1)")
    est = d.get("estimated")
    if est not in (None, False, "ermm", "dcsbm"):
        raise ConfigError("$.estimated", "must be null, 'ermm' or 'dcsbm'")
    labels = d.get("labels")
    if isinstance(labels, str):
        path = labels if base_dir is None or os.path.isabs(labels) else os.path.join(base_dir, labels)
        if not os.path.exists(path):
            raise ConfigError("$.labels", f"file not found: {labels}")
        with open(path, encoding="utf-8") as fh:
            labels = [int(t) for t in fh.read().split()]
    if labels is not None and len(labels) != n:
        raise ConfigError("$.labels", f"expected {n} labels")
    sweep = d.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or "param" not in sweep or not isinstance(sweep.get("values"), list):
            raise ConfigError("$.sweep", "needs 'param' and a list 'values'")
    base = d.get("baselines", {})
    if not isinstance(base, dict):
        raise ConfigError("$.baselines", "must be an object")
    variants = d.get("variants")
    if variants is not None:
        if not isinstance(variants, list) or not variants:
            raise ConfigError("$.variants", "must be a non-empty list")
        for i, v in enumerate(variants):
            if not isinstance(v, dict) or "label" not in v:
                raise ConfigError(f"$.variants[{i}]", "needs a 'label'")
            try:
                KernelSpec.parse(str(v.get("kernel", "wl:3")))
            except ValueError as exc:
                raise ConfigError(f"$.variants[{i}].kernel", str(exc)) from None
            if v.get("estimated") not in (None, "ermm", "dcsbm"):
                raise ConfigError(f"$.variants[{i}].estimated", "must be null, 'ermm' or 'dcsbm'")
    return ExperimentConfig(
        name=str(d.get("name", "experiment")), n=n, null=null, alternative=alt, kernel=kernel,
        M=M, m=m, B=B, alpha=float(alpha), seed=int(d.get("seed", 1)), estimated=est or None,
        labels=labels, sweep=sweep, baselines=base, variants=variants,
    )


def load_config(path) -> ExperimentConfig:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON: {exc}") from None
    return config_from_dict(d, os.path.dirname(os.path.abspath(path)))


def preset_names() -> list[str]:
    root = resources.files("irggkss").joinpath("data/presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> ExperimentConfig:
    root = resources.files("irggkss").joinpath("data/presets")
    res = root.joinpath(f"{name}.json")
    if not res.is_file():
        raise FileNotFoundError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    return config_from_dict(json.loads(res.read_text(encoding="utf-8")))
