"""Command-line front end.

Usage::

    boolperc --config run.json [--seed N] [--threads N] [--out DIR] [--force]

The environment variable ``BOOLPERC_OUT`` overrides ``--out``.

Run config (JSON)
-----------------
``command``
    One of ``theta``, ``crossing``, ``critical``, ``osss``, ``russo``,
    ``renorm``, ``heavy-tail``, ``ratio``, ``decay-fit``, ``sharpness``,
    ``vacant``.
``model``
    ``{"d": 2, "lambda": 0.3, "law": {...}, "eps_trunc": 1e-6}``.  Law forms:
    ``{"kind": "dirac", "r0": 1}``, ``{"kind": "exp_tail", "c": 1}``,
    ``{"kind": "power_law_c1", "c": 0.5}`` (``"d"`` defaults to the model
    dimension), ``{"kind": "stretched_exp_c2", "c": 1, "a": 0.5}`` and
    ``{"kind": "truncated", "inner": {...}, "rmax": 8}``.
``params``
    Command parameters; see ``COMMAND_PARAMS``.
``seed``, ``n_reps``, ``threads``, ``plot``
    Optional, defaulting to 0, 1000, 1 and true.
``sweep``
    Optional ``{"lambda": [...]}``: one run per intensity, each written to
    ``OUT/<config_hash>/``, with the rows of all runs collected in
    ``OUT/results.csv``.

Outputs
-------
``results.csv``
    Columns ``CSV_COLUMNS``, in that order.  Floats are written as the
    shortest decimal that round-trips; empty cells mean "not applicable".
``report.json``
    Config, config hash, seed, truncation budget, timestamp and the full
    structured result.  The timestamp honours ``SOURCE_DATE_EPOCH``.
``plot.svg``
    Line plot of the main curve, when the command has one.
``coords.csv``
    ``osss`` only: sparse per-coordinate ``x, n, delta, inf``.
``runs.log``
    Append-only JSON lines, one per completed run.  Runs whose hash is
    already logged are skipped unless ``--force`` is given.

Exit codes: 0 success, 2 config error, 3 infeasible parameters, 4 internal
invariant breach.
"""
from __future__ import annotations

import argparse
import copy
import csv
import datetime as dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import analysis, estimators, osss_lab
from .analytic import phi
from .plotting import line_plot
from .sampler import ModelSpec, truncation_radius

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 2, 3, 4

CSV_COLUMNS = ("config_hash", "model_hash", "command", "query", "r", "s", "lambda", "mean", "stderr", "n",
               "seed", "phi", "pi_delta")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 1}
_POS_LIST = {"type": "array", "items": _POS, "minItems": 1}
_BRACKET = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2, "maxItems": 2}

# command -> (required params, optional params)
COMMAND_PARAMS = {
    "theta": ({"s_grid": _POS_LIST}, {}),
    "crossing": ({"r": _POS}, {"lambdas": {"type": "array", "items": {"type": "number", "minimum": 0}}}),
    "critical": ({"r_list": _POS_LIST, "bracket": _BRACKET},
                 {"threshold": _POS, "r_c": _POS, "methods": {"type": "array", "minItems": 1,
                                                              "items": {"enum": ["tilde", "c"]}}}),
    "osss": ({"s": {"type": "number", "minimum": 0}, "L": _POS, "r": _POS}, {}),
    "russo": ({"r": _POS}, {"lam0": _POS, "dlam": _POS, "K": _INT, "n_reps_fd": _INT}),
    "renorm": ({"r_list": _POS_LIST, "alpha": _POS, "delta": _POS}, {"u_grid_size": _INT}),
    "heavy-tail": ({"alpha": _POS, "eta_exp": _POS, "eps": _POS, "r0": _POS, "r": _POS}, {"n_grid": _INT}),
    "ratio": ({"r_grid": _POS_LIST}, {"lambda_tilde": _POS}),
    "decay-fit": ({"s_grid": _POS_LIST, "s_min": _NUM}, {"s_max": _NUM, "trim": {"type": "boolean"}}),
    "sharpness": ({"lam_grid": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                   "r_proxy": _POS}, {"lambda_c": _POS}),
    "vacant": ({"r": _POS, "h": _POS}, {}),
}


def _schema() -> dict:
    branches = []
    for cmd, (req, opt) in COMMAND_PARAMS.items():
        branches.append({
            "if": {"properties": {"command": {"const": cmd}}},
            "then": {"properties": {"params": {"type": "object", "required": sorted(req),
                                               "properties": {**req, **opt}, "additionalProperties": False}},
                     "required": ["params"] if req else []},
        })
    return {
        "type": "object",
        "required": ["command", "model"],
        "additionalProperties": False,
        "properties": {
            "command": {"enum": sorted(COMMAND_PARAMS)},
            "model": {"type": "object", "required": ["d", "lambda", "law"], "additionalProperties": False,
                      "properties": {"d": {"type": "integer", "minimum": 1, "maximum": 3},
                                     "lambda": {"type": "number", "minimum": 0},
                                     "law": {"type": "object", "required": ["kind"]},
                                     "eps_trunc": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}},
            "params": {"type": "object"},
            "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
            "n_reps": _INT,
            "threads": _INT,
            "out": {"type": "string"},
            "plot": {"type": "boolean"},
            "sweep": {"type": "object", "required": ["lambda"], "additionalProperties": False,
                      "properties": {"lambda": {"type": "array", "minItems": 1,
                                                "items": {"type": "number", "minimum": 0}}}},
        },
        "allOf": branches,
    }


SCHEMA = _schema()


class ConfigError(Exception):
    pass


# --- config handling --------------------------------------------------------------

def validate(config) -> None:
    """Raise :class:`ConfigError` with a field path on the first schema violation."""
    v = jsonschema.Draft7Validator(SCHEMA)
    e = jsonschema.exceptions.best_match(v.iter_errors(config))
    if e is not None:
        raise ConfigError(f"{e.json_path}: {e.message}")
    try:
        ModelSpec.from_dict(config["model"])
    except ValueError as exc:
        raise ConfigError(f"$.model: {exc}") from None


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _hash(obj) -> str:
    return hashlib.sha256(canonical(obj).encode()).hexdigest()[:16]


def config_hash(config: dict) -> str:
    """64-bit hash of the canonical config; output location and thread count excluded."""
    return _hash({k: v for k, v in config.items() if k not in ("out", "threads", "force")})


def expand(config: dict) -> list[dict]:
    """One concrete run config per sweep element (or the config itself)."""
    base = {k: v for k, v in config.items() if k != "sweep"}
    base.setdefault("seed", 0)
    base.setdefault("n_reps", 1000)
    base.setdefault("plot", True)
    base.setdefault("params", {})
    if "sweep" not in config:
        return [base]
    runs = []
    for lam in config["sweep"]["lambda"]:
        c = copy.deepcopy(base)
        c["model"]["lambda"] = lam
        runs.append(c)
    return runs


# --- output formatting -----------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, rows: list[dict]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])
    path.write_text(buf.getvalue())


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch else dt.datetime.now(dt.timezone.utc)
    return t.replace(microsecond=0).isoformat()


# --- commands ----------------------------------------------------------------------
# each returns (rows, result, plot) where plot is None or kwargs for line_plot

def _row(query, mean, stderr=None, n=None, r=None, s=None, lam=None, **extra):
    return {"query": query, "mean": mean, "stderr": stderr, "n": n, "r": r, "s": s, "lambda": lam, **extra}


def _est_row(query, e: estimators.Estimate, **kw):
    return _row(query, e.mean, e.stderr, e.n, **kw)


def cmd_theta(model, p, n, seed, threads):
    curve = estimators.estimate_theta_curve(model, p["s_grid"], n, seed, threads)
    phis = [phi(model.law, model.lam, model.d, float(s)) for s in curve.s_grid]
    rows = [_est_row("theta", e, s=float(s), lam=model.lam, phi=f) for s, e, f in zip(curve.s_grid, curve.values, phis)]
    result = {"theta0": curve.theta0, "sigma_r": estimators.sigma_r(curve, float(curve.s_grid[-1])),
              "curve": [dict(e.to_dict(), s=float(s), phi=f, meta=None)
                        for s, e, f in zip(curve.s_grid, curve.values, phis)],
              "lower_bound_ok": all(e.mean >= f - 4 * e.stderr for e, f in zip(curve.values, phis))}
    plot = {"series": [{"x": curve.s_grid, "y": curve.means, "err": curve.stderrs, "label": "theta_s"},
                       {"x": curve.s_grid, "y": phis, "label": "phi_s", "marker": ""}],
            "xlabel": "s", "ylabel": "probability", "title": f"lambda = {model.lam}"}
    return rows, result, plot


def cmd_crossing(model, p, n, seed, threads):
    r = float(p["r"])
    lams = p.get("lambdas")
    if not lams:
        e = estimators.estimate_crossing(model, r, n, seed, threads)
        return [_est_row("crossing", e, r=r, lam=model.lam)], {"crossing": e.to_dict()}, None
    lams = sorted(float(x) for x in lams)
    top = model.with_lam(lams[-1])
    lam_star = estimators.coupled_thresholds(top, [(r, 2 * r)], 2 * r, n, seed, threads)[:, 0]
    est = estimators.coupled_curve(lam_star, lams, seed)
    rows = [_est_row("crossing", e, r=r, lam=x) for x, e in zip(lams, est)]
    result = {"curve": [dict(e.to_dict(), **{"lambda": x}) for x, e in zip(lams, est)]}
    plot = {"series": [{"x": lams, "y": [e.mean for e in est], "err": [e.stderr for e in est],
                        "label": f"r = {r}"}],
            "xlabel": "lambda", "ylabel": "P[B_r <-> dB_2r]", "title": "crossing"}
    return rows, result, plot


def cmd_critical(model, p, n, seed, threads):
    methods = p.get("methods", ["tilde", "c"])
    rows, result, series = [], {}, []
    if "tilde" in methods:
        est = estimators.find_lambda_tilde(model, p["r_list"], p["bracket"], n, seed, threads)
        rows.append(_row("lambda_tilde", est.lambda_hat, 0.5 * (est.bracket[1] - est.bracket[0]), n,
                         r=max(p["r_list"])))
        result["lambda_tilde"] = est.to_dict()
        grid = est.diagnostics["lambda_grid"]
        series += [{"x": grid, "y": ys, "label": f"crossing r = {r}"} for r, ys in est.diagnostics["curves"].items()]
    if "c" in methods:
        rc = float(p.get("r_c", max(p["r_list"])))
        est = estimators.find_lambda_c(model, rc, p["bracket"], n, seed, p.get("threshold", 0.05), threads)
        rows.append(_row("lambda_c", est.lambda_hat, 0.5 * (est.bracket[1] - est.bracket[0]), n, r=rc))
        result["lambda_c"] = est.to_dict()
        grid = est.diagnostics["lambda_grid"]
        series += [{"x": grid, "y": ys, "label": f"theta r = {r}", "linestyle": "--"}
                   for r, ys in est.diagnostics["curves"].items()]
    plot = {"series": series, "xlabel": "lambda", "ylabel": "probability", "title": "critical intensity"}
    return rows, result, plot


def cmd_osss(model, p, n, seed, threads):
    rep = osss_lab.osss_check(model, float(p["s"]), float(p["L"]), float(p["r"]), n, seed, threads)
    rows = [_row("var_f", rep.var_f, rep.var_se, n, r=p["r"], s=p["s"], lam=model.lam),
            _row("sum_delta_inf", rep.sum_delta_inf, rep.sum_se, n, r=p["r"], s=p["s"], lam=model.lam)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "n", "delta", "inf"))
    for x, band, dl, nf in rep.rows():
        w.writerow((x if isinstance(x, str) else " ".join(map(str, x)), band, repr(dl), repr(nf)))
    return rows, rep.to_dict(), None, {"coords.csv": buf.getvalue()}


def cmd_russo(model, p, n, seed, threads):
    lam0 = float(p.get("lam0", model.lam))
    rep = osss_lab.russo_check(model, float(p["r"]), lam0, p.get("dlam"), n, seed, p.get("K", 4),
                               p.get("n_reps_fd"), threads)
    rows = [_est_row("theta_derivative", rep.derivative, r=p["r"], lam=lam0),
            _est_row("pivotal_sum", rep.pivotal, r=p["r"], lam=lam0)]
    return rows, rep.to_dict(), None


def cmd_renorm(model, p, n, seed, threads):
    reps = [analysis.renorm_report(model, float(r), p["alpha"], p["delta"], p.get("u_grid_size", 33), n, seed,
                                   threads) for r in p["r_list"]]
    rows = []
    for rep in reps:
        rows.append(_est_row("theta_alpha", rep.theta_alpha_r, r=rep.r, lam=model.lam, pi_delta=rep.pi_delta_r))
        rows.append(_row("implied_constant", rep.implied_constant, None, n, r=rep.r, lam=model.lam,
                         pi_delta=rep.pi_delta_r))
    result = {"reports": [rep.to_dict() for rep in reps], "stability_ratio": analysis.renorm_stability(reps)}
    plot = {"series": [{"x": [rep.r for rep in reps], "y": [rep.implied_constant for rep in reps],
                        "label": "implied constant"}],
            "xlabel": "r", "ylabel": "constant", "title": "renormalization", "logy": True}
    if not all(0 < rep.implied_constant < math.inf for rep in reps):
        plot = None
    return rows, result, plot


def cmd_heavy_tail(model, p, n, seed, threads):
    res = analysis.verify_heavy_tail_lemma(model, p["alpha"], p["eta_exp"], p["eps"], p["r0"], p["r"], n, seed,
                                           p.get("n_grid", 9), threads)
    rows = [_row("f1_theta", x["theta"], x["stderr"], n, s=x["s"], lam=model.lam) for x in res["f1"]]
    rows += [_row("f2_pi", x["pi"], s=x["s"], lam=model.lam, pi_delta=x["pi"]) for x in res["f2"]]
    c = res["conclusion"]
    rows.append(_row("theta_alpha", c["theta_alpha_r"], c["stderr"], n, r=p["r"], lam=model.lam,
                     pi_delta=res["pi_alpha_r"]))
    return rows, res, None


def cmd_ratio(model, p, n, seed, threads):
    pts = analysis.ratio_curve(model, model.lam, p["r_grid"], n, seed, threads, p.get("lambda_tilde"))
    rows = [_row("ratio", x["ratio"], x["ratio_stderr"], n, r=x["r"], lam=model.lam, phi=x["phi"]) for x in pts]
    plot = {"series": [{"x": [x["r"] for x in pts], "y": [x["ratio"] for x in pts],
                        "err": [x["ratio_stderr"] for x in pts], "label": "theta_r / phi_r"}],
            "xlabel": "r", "ylabel": "ratio", "title": f"lambda = {model.lam}"}
    return rows, {"curve": pts}, plot


def cmd_decay_fit(model, p, n, seed, threads):
    curve = estimators.estimate_theta_curve(model, p["s_grid"], n, seed, threads)
    s_max = p.get("s_max")
    if p.get("trim", True):
        top = analysis.positive_range(curve)
        s_max = top if s_max is None else min(s_max, top)
    rate, r2 = analysis.fit_exponential_decay(curve, p["s_min"], s_max)
    rows = [_est_row("theta", e, s=float(s), lam=model.lam) for s, e in zip(curve.s_grid, curve.values)]
    rows += [_row("decay_rate", rate, lam=model.lam), _row("r_squared", r2, lam=model.lam)]
    result = {"rate": rate, "r_squared": r2, "s_min": p["s_min"], "s_max": s_max,
              "curve": [{"s": float(s), "mean": e.mean, "stderr": e.stderr, "successes": e.successes}
                        for s, e in zip(curve.s_grid, curve.values)]}
    keep = curve.means > 0
    plot = {"series": [{"x": curve.s_grid[keep], "y": curve.means[keep], "label": "theta_s"}],
            "xlabel": "s", "ylabel": "theta_s", "title": f"decay rate {rate:.4g}", "logy": True}
    return rows, result, plot


def cmd_sharpness(model, p, n, seed, threads):
    res = analysis.sharpness_scan(model, p["lam_grid"], p["r_proxy"], n, seed, p.get("lambda_c"), threads)
    rows = [_row("theta", x["theta"], x["stderr"], n, r=p["r_proxy"], lam=x["lambda"]) for x in res["table"]]
    series = [{"x": [x["lambda"] for x in res["table"]], "y": [x["theta"] for x in res["table"]],
               "err": [x["stderr"] for x in res["table"]], "label": f"theta_{p['r_proxy']}"}]
    if res["fit"] is not None:
        f = res["fit"]
        xs = [x["lambda"] for x in res["table"]]
        series.append({"x": xs, "y": [max(f["slope"] * x + f["intercept"], 0.0) for x in xs],
                       "label": "supercritical fit", "marker": ""})
    return rows, res, {"series": series, "xlabel": "lambda", "ylabel": "theta", "title": "sharpness"}


def cmd_vacant(model, p, n, seed, threads):
    e = estimators.estimate_vacant(model, float(p["r"]), float(p["h"]), n, seed, threads)
    return [_est_row("vacant", e, r=p["r"], lam=model.lam)], {"vacant": e.to_dict()}, None


COMMANDS = {"theta": cmd_theta, "crossing": cmd_crossing, "critical": cmd_critical, "osss": cmd_osss,
            "russo": cmd_russo, "renorm": cmd_renorm, "heavy-tail": cmd_heavy_tail, "ratio": cmd_ratio,
            "decay-fit": cmd_decay_fit, "sharpness": cmd_sharpness, "vacant": cmd_vacant}


def _window(command: str, model: ModelSpec, p: dict) -> tuple[ModelSpec, float]:
    """Largest intensity and window a command samples at, for the truncation budget."""
    d = model.d
    if command in ("theta", "decay-fit"):
        return model, max(p["s_grid"])
    if command == "crossing":
        lam = max(p.get("lambdas") or [model.lam])
        return model.with_lam(lam), 2 * p["r"]
    if command == "critical":
        return model.with_lam(p["bracket"][1]), 2 * max(p["r_list"] + [p.get("r_c", 0)])
    if command == "osss":
        return model, p["L"] + math.sqrt(d) / 2
    if command == "russo":
        return model.with_lam(1.02 * p.get("lam0", model.lam) + p.get("dlam", 0)), p["r"]
    if command == "renorm":
        return model, max(p["r_list"])
    if command == "heavy-tail":
        return model, max(p["r"], p["r0"] / p["alpha"])
    if command == "ratio":
        return model, max(p["r_grid"])
    if command == "sharpness":
        return model.with_lam(max(p["lam_grid"])), p["r_proxy"]
    return model, p["r"]


# --- running ---------------------------------------------------------------------

def _read_log(path: Path) -> set[str]:
    done = set()
    if path.exists():
        for line in path.read_text().splitlines():
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue  # a run killed mid-write leaves a partial last line
            if rec.get("status") == "ok":
                done.add(rec["config_hash"])
    return done


def execute(config: dict, outdir: Path, threads: int) -> list[dict]:
    """Run one concrete config and write its artifacts into ``outdir``; returns the CSV rows."""
    model = ModelSpec.from_dict(config["model"])
    p = config["params"]
    h = config_hash(config)
    mh = _hash(model.to_dict())
    wm, w = _window(config["command"], model, p)
    budget = {"eps_trunc": model.eps_trunc, "window": float(w), "n_max": truncation_radius(wm, w)}
    out = COMMANDS[config["command"]](model, p, config["n_reps"], config["seed"], threads)
    rows, result, plot = out[:3]
    extra = out[3] if len(out) > 3 else {}
    for row in rows:
        row.update(config_hash=h, model_hash=mh, command=config["command"], seed=config["seed"])
        row.setdefault("phi", None)
        row.setdefault("pi_delta", None)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "results.csv", rows)
    report = {"config": config, "config_hash": h, "model_hash": mh, "seed": config["seed"],
              "truncation": budget, "timestamp": _timestamp(), "result": result}
    (outdir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")
    for name, text in extra.items():
        (outdir / name).write_text(text)
    if plot and config.get("plot", True):
        line_plot(outdir / "plot.svg", **plot)
    return rows


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boolperc", description="Poisson-Boolean percolation experiments.")
    ap.add_argument("--config", required=True, help="run config (JSON)")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ap.add_argument("--threads", type=int, help="worker threads; results do not depend on it")
    ap.add_argument("--out", help="output directory (BOOLPERC_OUT overrides)")
    ap.add_argument("--force", action="store_true", help="rerun configs already in runs.log")
    return ap


def _load(args) -> tuple[dict, Path, int]:
    try:
        config = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$: invalid JSON: {exc}") from None
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed: must be an unsigned 64-bit integer")
        if isinstance(config, dict):
            config["seed"] = args.seed
    validate(config)
    threads = args.threads if args.threads is not None else config.get("threads", 1)
    if threads < 1:
        raise ConfigError("--threads: must be positive")
    out = os.environ.get("BOOLPERC_OUT") or args.out or config.get("out") or "boolperc_out"
    return config, Path(out), threads


def run(args) -> int:
    config, out, threads = _load(args)
    runs = expand(config)
    out.mkdir(parents=True, exist_ok=True)
    log = out / "runs.log"
    done = set() if args.force else _read_log(log)
    sweep = "sweep" in config
    all_rows = []
    for c in runs:
        h = config_hash(c)
        target = out / h if sweep else out
        if h in done:
            print(f"skip {h} (already in runs.log)")
            if sweep and (target / "results.csv").exists():
                with open(target / "results.csv", newline="") as fh:
                    all_rows += list(csv.DictReader(fh))
            continue
        rows = execute(c, target, threads)
        all_rows += rows
        with open(log, "a") as fh:
            fh.write(canonical({"config_hash": h, "command": c["command"], "lambda": c["model"]["lambda"],
                                "seed": c["seed"], "status": "ok", "dir": str(target)}) + "\n")
        print(f"done {h} -> {target}")
    if sweep:
        write_csv(out / "results.csv", all_rows)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, NotImplementedError, OverflowError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
