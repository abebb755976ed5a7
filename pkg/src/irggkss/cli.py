"""Command-line front end.

Exit codes report operational failure only (2 = bad input, missing file or
invalid config); test decisions are printed and written to CSV.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources

import numpy as np

from . import __version__
from .config import ConfigError, load_config, load_preset, preset_names
from .graph import Graph, GraphParseError, load_graph, load_labels, write_graph
from .kernels import KernelSpec
from .mctest import (
    SUMMARY_COLUMNS,
    TEST_COLUMNS,
    RUN_COLUMNS,
    csv_lines,
    power_experiment,
    run_test,
    run_test_estimated,
    run_test_resampled,
    summary_row,
    test_row,
    write_csv,
)
from .models import (
    dcsbm_estimate,
    er_probabilities,
    ermm_mle,
    ermm_probabilities,
    irg_sample,
    nlpa_sample,
    NlpaParams,
    probabilities_for,
)
from .plant import plant_clique, plant_hubs
from .stein import (
    MAX_EXHAUSTIVE_PAIRS,
    UnsupportedKernelError,
    discrepancy_bound,
    exhaustive_moments,
    theorem_bound,
    variance_lower_bound,
)

log = logging.getLogger("irggkss")

DATASETS = {
    "karate": ("karate.edges", 34, "karate_2groups.labels"),
    "florentine": ("florentine.edges", 15, None),
}


class UsageError(Exception):
    """Bad command-line input; reported with exit status 2."""


# --- input resolution -------------------------------------------------------------


def _data_path(name: str) -> str:
    return str(resources.files("irggkss").joinpath("data", name))


def _infer_n(path: str) -> int:
    top = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            text = line.split("#", 1)[0].split()
            top = max([top] + [int(t) for t in text if t.lstrip("-").isdigit()])
    return top


def resolve_graph(spec: str, n: int | None, labels: str | None) -> Graph:
    """``spec`` is an edge-list path or ``dataset:NAME`` for a bundled network."""
    if spec.startswith("dataset:"):
        name = spec.split(":", 1)[1]
        if name not in DATASETS:
            raise UsageError(f"unknown dataset {name!r}; bundled: {', '.join(DATASETS)}")
        fname, size, lab = DATASETS[name]
        lab_path = labels or (_data_path(lab) if lab else None)
        return load_graph(_data_path(fname), size, lab_path)
    if not os.path.exists(spec):
        raise FileNotFoundError(spec)
    if n is None:
        n = len(load_labels(labels, None)) if labels else _infer_n(spec)
    return load_graph(spec, n, labels)


def resolve_model(text: str, g: Graph | None = None, n: int | None = None) -> np.ndarray:
    """Edge probabilities from a model argument.

    ``er:P`` fixes an ER model; ``er-fit``, ``ermm-fit`` and ``dcsbm-fit``
    estimate from the observed graph; anything else is a JSON file written by
    ``irggkss fit`` or holding a model dict.
    """
    if text.startswith("er:"):
        size = g.n if g is not None else n
        if size is None:
            raise UsageError("--n is needed for an ER model without a graph")
        return er_probabilities(size, float(text[3:]))
    if text in ("er-fit", "ermm-fit", "dcsbm-fit"):
        if g is None:
            raise UsageError(f"{text} needs --graph")
        if text == "er-fit":
            return ermm_probabilities(ermm_mle(g, np.ones(g.n, dtype=np.int64)))
        return probabilities_for(g, {"kind": text})
    if not os.path.exists(text):
        raise FileNotFoundError(text)
    with open(text, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{text}: invalid JSON ({exc})") from None
    p = probabilities_for(g if g is not None else n, spec)
    if g is not None and p.size != g.N:
        raise UsageError(f"model {text} has {p.size} pairs, graph has {g.N}")
    return p


def _kernel(text: str) -> KernelSpec:
    try:
        return KernelSpec.parse(text)
    except ValueError as exc:
        raise UsageError(f"--kernel: {exc}") from None


def _emit(lines, out):
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------------


def cmd_test(a) -> int:
    g = resolve_graph(a.graph, a.n, a.labels)
    spec = _kernel(a.kernel)
    if a.estimated:
        res = run_test_estimated(g, a.estimated, spec, a.M, a.alpha, a.seed, a.B, a.workers)
        model = f"{a.estimated}-estimated"
    else:
        p0 = resolve_model(a.model, g)
        model = a.model
        if a.B:
            res = run_test_resampled(g, p0, spec, a.M, a.B, a.alpha, a.seed, a.workers)
        else:
            res = run_test(g, p0, spec, a.M, a.alpha, a.seed, a.workers)
    print(f"phi       {res.phi:.10e}")
    print(f"quantiles [{res.gamma_lo:.10e}, {res.gamma_hi:.10e}]  (alpha = {res.alpha:g}, M = {res.M})")
    print(f"p-value   {res.p_value:.5f}")
    print(f"decision  {'reject' if res.reject else 'do not reject'} H0")
    row = test_row(res, graph=a.graph, n=g.n, model=model)
    if a.out:
        write_csv(a.out, TEST_COLUMNS, [row])
    return 0


def cmd_power(a) -> int:
    if bool(a.config) == bool(a.preset):
        raise UsageError("give exactly one of --config or --preset")
    cfg = load_config(a.config) if a.config else load_preset(a.preset)
    if a.m is not None:
        cfg.m = a.m
    if a.M is not None:
        cfg.M = a.M
    if a.seed is not None:
        cfg.seed = a.seed
    param = cfg.sweep["param"] if cfg.sweep else ""
    rows, runs = [], []
    for val, setting in cfg.settings():
        shown = "" if val is None else val
        cells = []
        for label, variant in setting.variant_configs():
            s = power_experiment(variant, a.workers)
            rows.append(summary_row(s, cfg.name, param, shown, label))
            runs += [dict(r, value=shown, variant=label) for r in s.runs]
            cells += [f"{k}={v:.2f}" for k, v in s.baselines.items()]
            cells.append(f"{label}={s.rejection_rate:.2f}")
            skipped = s.skipped
        tag = f"{param}={val} " if param else ""
        print(f"{tag}{' '.join(cells)} skipped={skipped}", file=sys.stderr)
    if cfg.m == 0:
        log.warning("m = 0: the summary has no runs")
    _emit(csv_lines(SUMMARY_COLUMNS, rows), a.out)
    if a.runs_out:
        write_csv(a.runs_out, ("variant", "value") + RUN_COLUMNS, runs)
    return 0


def fit_params(g: Graph, kind: str, eps: float = 0.001) -> dict:
    """JSON-ready fitted parameters, reloadable by ``--model FILE``."""
    if kind == "er":
        q = ermm_mle(g, np.ones(g.n, dtype=np.int64)).Q[0, 0]
        return {"schema_version": 1, "kind": "er", "n": g.n, "p": float(q)}
    if kind == "ermm":
        prm = ermm_mle(g)
        return {"schema_version": 1, "kind": "ermm", "labels": prm.labels.tolist(),
                "Q": prm.Q.tolist(), "undefined": prm.undefined.tolist()}
    if kind == "dcsbm":
        prm = dcsbm_estimate(g, eps=eps)
        return {"schema_version": 1, "kind": "dcsbm", "labels": prm.labels.tolist(),
                "theta": prm.theta.tolist(), "Q": prm.Q.tolist(), "eps": eps,
                "zero_blocks": prm.zero_blocks.tolist()}
    raise UsageError(f"unknown model kind {kind!r}")


def cmd_fit(a) -> int:
    g = resolve_graph(a.graph, a.n, a.labels)
    if g.num_edges == 0:
        log.warning("graph has no edges; all fitted probabilities are 0")
    d = fit_params(g, a.model, a.eps)
    Q = np.atleast_2d(d.get("Q", d.get("p")))
    for row in Q:
        print(" ".join(f"{v:.4f}" for v in np.atleast_1d(row)))
    if a.out:
        _emit([json.dumps(d, indent=1)], a.out)
    return 0


def cmd_diagnostics(a) -> int:
    spec = _kernel(a.kernel)
    p = resolve_model(a.model, None, a.n)
    N = p.size
    print(f"N = {N}, N0 = {int(((p > 0) & (p < 1)).sum())}")
    if not spec.is_product:
        print(f"kernel {spec.label()} is not a product kernel: bounds skipped")
    else:
        try:
            diag = theorem_bound(p, spec)
        except UnsupportedKernelError as exc:
            print(f"bounds skipped: {exc}")
        else:
            for k, v in diag.as_dict().items():
                print(f"{k:18s} {v}")
            vlb, degen = variance_lower_bound(p, spec)
            print(f"variance_lower_bound {vlb:.10e}{' (N0 = 0)' if degen else ''}")
            if N <= MAX_EXHAUSTIVE_PAIRS:
                mean, var = exhaustive_moments(p, spec)
                analytic = diag.mean_offdiag + diag.mean_diag
                print(f"exhaustive mean {mean:.12e}  analytic {analytic:.12e}  "
                      f"diff {abs(mean - analytic):.2e}")
                print(f"exhaustive var  {var:.12e}  lower bound holds: {vlb <= var}")
    if a.p_star:
        q = resolve_model(a.p_star, None, a.n)
        print(f"discrepancy_bound {discrepancy_bound(p, q, a.delta):.10e}")
    return 0


def cmd_simulate(a) -> int:
    labels = load_labels(a.labels, a.n) if a.labels else None
    if a.model.startswith("nlpa"):
        parts = dict(kv.split("=") for kv in a.model.split(":", 1)[1].split(",")) if ":" in a.model else {}
        prm = NlpaParams(int(parts.get("m", 1)), float(parts.get("alpha", 1.0)),
                         int(parts["m0"]) if "m0" in parts else None)
        g = nlpa_sample(a.n, prm, a.seed, labels)
    else:
        g = irg_sample(resolve_model(a.model, None, a.n), a.seed, labels)
    _write_graph(g, a)
    return 0


def cmd_plant(a) -> int:
    g = resolve_graph(a.graph, a.n, a.labels)
    if a.kind == "clique":
        out = plant_clique(g, a.K, None, a.max_rep, a.seed)
    else:
        out = plant_hubs(g, a.R, a.k, None, a.seed)
    print(f"planted {out.planted} attempts {out.attempts} reason {out.skipped_reason or '-'} "
          f"added {len(out.added)} deleted {len(out.deleted)}", file=sys.stderr)
    _write_graph(out.graph, a)
    return 0


def _write_graph(g: Graph, a):
    if a.out:
        write_graph(g, a.out, a.labels_out)
    else:
        sys.stdout.write("".join(f"{u} {v}\n" for u, v in g.edges() + 1))


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="irggkss", description="Kernel Stein goodness-of-fit tests for random graph models.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def graph_args(p, required=True):
        p.add_argument("--graph", required=required, help="edge-list file or dataset:NAME")
        p.add_argument("--labels", help="label file (one integer per line)")
        p.add_argument("--n", type=int, help="vertex count (default: from labels or max id)")

    p = sub.add_parser("test", help="Monte Carlo goodness-of-fit test of one graph")
    graph_args(p)
    p.add_argument("--model", default="er-fit")
    p.add_argument("--estimated", choices=("ermm", "dcsbm"), help="re-fit the model on every null graph")
    p.add_argument("--kernel", default="wl:3")
    p.add_argument("--M", type=int, default=200)
    p.add_argument("--B", type=int, default=0, help="resampled pairs per statistic (0 = all)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV file for the result row")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("power", help="calibration or power experiment from a config")
    p.add_argument("--config")
    p.add_argument("--preset", help=f"bundled config: {', '.join(preset_names())}")
    p.add_argument("--m", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="summary CSV (default stdout)")
    p.add_argument("--runs-out", help="per-run CSV")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("fit", help="estimate ER, ERMM or DCSBM parameters")
    graph_args(p)
    p.add_argument("--model", choices=("er", "ermm", "dcsbm"), default="ermm")
    p.add_argument("--eps", type=float, default=0.001)
    p.add_argument("--out", help="JSON parameter file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnostics", help="moment identities and approximation bounds")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--kernel", default="veh-gauss:1")
    p.add_argument("--p-star", help="second model for the discrepancy bound")
    p.add_argument("--delta", type=float, help="kernel-gap norm (default 3/N)")
    p.set_defaults(func=cmd_diagnostics)

    p = sub.add_parser("simulate", help="sample a graph")
    p.add_argument("--model", required=True, help="er:P, a model JSON or nlpa[:m=1,alpha=1,m0=2]")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--labels")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--labels-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plant", help="plant a clique or hubs into a graph")
    graph_args(p)
    p.add_argument("--kind", choices=("clique", "hubs"), required=True)
    p.add_argument("--K", type=int, default=5)
    p.add_argument("--max-rep", type=int, default=100)
    p.add_argument("--R", type=int, default=1)
    p.add_argument("--k", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--labels-out")
    p.set_defaults(func=cmd_plant)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return a.func(a)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
    except ConfigError as exc:
        print(f"error: config {exc}", file=sys.stderr)
    except (GraphParseError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
