"""Command-line experiment driver.

A run is described by a single JSON document::

    {"command": "learn", "seed": 42,
     "target": {"class": "dnf", "params": {"n": 10, "terms": 3, "width": 3}},
     "model": {"oracle": "CRW"},
     "algorithm": {"epsilon": 0.1, "delta": 0.1}}

Missing fields are filled from ``DEFAULTS`` and the completed config is echoed
into ``report.json``.  Reports contain no wall-clock data (timings go to
``run.log``), so a config always reproduces the same report byte for byte.

Exit codes: 0 success, 2 config error, 3 learning failure, 4 resource error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from walklearn.domain import EXACT_CAP, FreqIndex, random_instance, read_function
from walklearn.errors import ContractViolation, LearningFailure, ParameterError, ResourceError
from walklearn.estimators import (
    EstimateRecord, EstimatorConfig, RunLog, collision_decay_experiment, estimate_coefficient,
    estimate_prefix_energy_crw, estimate_t_ns, estimate_t_prime_ns, hoeffding_samples, uniform_examples)
from walklearn.fourier import Spectrum, prefix_energy_exact, t_exact, t_prime_exact, transform
from walklearn.learners import (
    class_params, default_theta, empirical_spectrum, learn_top_crw, learn_ubox_ns, low_noise_parity_learner)
from walklearn.oracles import OracleSession
from walklearn.rng import child_seed, spawn_seeds

EXIT_OK, EXIT_CONFIG, EXIT_LEARNING, EXIT_RESOURCE = 0, 2, 3, 4
COMMANDS = ("transform", "estimate", "learn", "experiment")

DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "out": "out",
    "target": {"class": None, "params": {}, "seed": 0, "file": None},
    "model": {"oracle": None, "rho": None, "cycle": None},
    "algorithm": {
        "transform": {"tol": 1e-12},
        "estimate": {"quantity": "coefficient", "a": None, "I": [], "tolerance": 0.05, "confidence": 0.05,
                     "budget": None},
        "learn": {"learner": None, "epsilon": 0.1, "delta": 0.1, "theta": None, "theta_rule": "relative",
                  "degree": None, "samples": None, "max_rounds": 60, "eval_samples": None, "budget": 1000000},
        "experiment": {"name": "collision_decay", "rhos": [0.25, 0.5, 0.75], "ns": [4, 8, 12],
                       "samples": 100000, "trials": 10, "runs": 100, "quantity": "t_prime", "I": [0, 1],
                       "tolerance": 0.05, "confidence": 0.05, "learn": {}},
    },
}


class ConfigError(ParameterError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# config handling

def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if key not in base:
            raise ConfigError(f"{path}{key}", "unknown field")
        if isinstance(base[key], dict) and base[key] and isinstance(value, dict) and key != "params":
            out[key] = _merge(base[key], value, f"{path}{key}.")
        else:
            out[key] = value
    return out


def normalize_config(raw: dict, command=None) -> dict:
    """Fill defaults and validate; raises :class:`ConfigError` naming the bad field."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    raw = dict(raw)
    cmd = raw.pop("command", None) or command
    if command is not None and cmd != command:
        raise ConfigError("command", f"config says {cmd!r} but the subcommand is {command!r}")
    if cmd not in COMMANDS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
    algo = raw.pop("algorithm", {})
    base = {k: v for k, v in DEFAULTS.items() if k != "algorithm"}
    cfg = _merge(base, raw)
    cfg["algorithm"] = _merge(DEFAULTS["algorithm"][cmd], algo, "algorithm.")
    cfg["command"] = cmd
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed", "must be a non-negative integer")
    if not isinstance(cfg["workers"], int) or cfg["workers"] < 1:
        raise ConfigError("workers", "must be a positive integer")
    t = cfg["target"]
    if t["file"] is None and t["class"] is None and not (cmd == "experiment" and cfg["algorithm"]["name"] == "collision_decay"):
        raise ConfigError("target", "give either target.class (with params) or target.file")
    oracle = cfg["model"]["oracle"]
    if oracle is not None and oracle not in ("MQ", "UQ", "RW", "CRW", "NS"):
        raise ConfigError("model.oracle", f"unknown oracle {oracle!r}")
    rho = cfg["model"]["rho"]
    if rho is not None and not (isinstance(rho, (int, float)) and 0.0 <= rho <= 1.0):
        raise ConfigError("model.rho", "must lie in [0, 1]")
    return {k: cfg[k] for k in ("command", "seed", "workers", "out", "target", "model", "algorithm")}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"not valid JSON: {exc}") from None


def build_target(spec: dict, default_seed=0):
    try:
        if spec.get("file"):
            return read_function(spec["file"])
        return random_instance(spec["class"], spec.get("seed", default_seed), **spec.get("params", {}))
    except (ParameterError, ContractViolation) as exc:
        raise ConfigError("target", str(exc)) from None


def _session(target, model, seed, default_oracle):
    oracle = model["oracle"] or default_oracle
    try:
        return OracleSession(target, oracle, seed=seed, rho=model["rho"], cycle=model["cycle"])
    except (ParameterError, ContractViolation) as exc:
        raise ConfigError("model", str(exc)) from None


# ---------------------------------------------------------------------------
# output helpers

def _clean(obj):
    """JSON-safe copy: non-finite floats become None, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def atomic_write(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _exact_ok(target) -> bool:
    return target.alphabet.size <= EXACT_CAP


# ---------------------------------------------------------------------------
# commands

def _cmd_transform(cfg, out, log):
    target = build_target(cfg["target"], cfg["seed"])
    spectrum = transform(target)
    tol = cfg["algorithm"]["tol"]
    path = os.path.join(out, "spectrum.csv")
    buf = io.StringIO()
    spectrum.to_csv(buf, tol=tol)
    atomic_write(path, buf.getvalue())
    nonzero = sum(1 for _ in spectrum.items(tol))
    return {"result": {"spectrum": "spectrum.csv", "rows": nonzero, "mass": spectrum.mass(),
                       "error_tag": "exact"}}


def _cmd_estimate(cfg, out, log):
    a_cfg = cfg["algorithm"]
    target = build_target(cfg["target"], cfg["seed"])
    q = a_cfg["quantity"]
    default_oracle = {"coefficient": "UQ", "spectrum": "UQ", "prefix_energy": "CRW", "t_prime": "NS", "t": "NS"}
    if q not in default_oracle:
        raise ConfigError("algorithm.quantity", f"unknown quantity {q!r}")
    try:
        ecfg = EstimatorConfig(a_cfg["tolerance"], a_cfg["confidence"])
    except ParameterError as exc:
        raise ConfigError("algorithm", str(exc)) from None
    session = _session(target, cfg["model"], cfg["seed"], default_oracle[q])
    exact = None
    result = {"quantity": q, "tolerance": ecfg.tolerance, "confidence": ecfg.confidence,
              "error_tag": "estimated"}
    spec = transform(target) if _exact_ok(target) else None
    if q == "coefficient":
        if a_cfg["a"] is None:
            raise ConfigError("algorithm.a", "coefficient estimation needs a frequency digit string")
        a = FreqIndex.from_string(a_cfg["a"])
        value = estimate_coefficient(session, a, ecfg, log=log)
        exact = spec[a] if spec is not None else None
    elif q == "spectrum":
        m = hoeffding_samples(ecfg)
        X, y = uniform_examples(session, m)
        est = Spectrum(target.alphabet, empirical_spectrum(X, y.astype(np.float64), target.alphabet))
        buf = io.StringIO()
        est.to_csv(buf)
        atomic_write(os.path.join(out, "spectrum.csv"), buf.getvalue())
        result["spectrum"] = "spectrum.csv"
        value = None
        if spec is not None:
            result["max_deviation_from_exact"] = float(np.max(np.abs(est.coeffs - spec.coeffs)))
    elif q == "prefix_energy":
        if a_cfg["a"] is None:
            raise ConfigError("algorithm.a", "prefix energy needs a prefix digit string")
        prefix = tuple(FreqIndex.from_string(a_cfg["a"]).digits)
        value = estimate_prefix_energy_crw(session, prefix, ecfg, log=log)
        if spec is not None:
            from walklearn.estimators import crw_prefix_coords
            exact = prefix_energy_exact(spec, prefix, crw_prefix_coords(session, len(prefix)))
    else:
        I = tuple(a_cfg["I"])
        if q == "t_prime":
            value = estimate_t_prime_ns(session, I, ecfg, a_cfg["budget"], log=log)
            exact = t_prime_exact(spec, session.rho, I) if spec is not None else None
        else:
            value = estimate_t_ns(session, I, ecfg, a_cfg["budget"], log=log)
            exact = t_exact(spec, session.rho, I) if spec is not None else None
    result.update({"estimate": value, "exact": exact, "queries": session.query_count})
    if exact is not None:
        result["deviation"] = abs(complex(value) - complex(exact))
    return {"result": result}


def _default_learner(target, oracle):
    if oracle == "NS" and target.kind == "parity":
        return "parity"
    return {"CRW": "km", "NS": "sieve"}.get(oracle, "km")


def _learn_once(target, model, a_cfg, seed):
    """One learning run; returns (result dict, hypothesis or None)."""
    oracle = model["oracle"] or ("NS" if target.kind == "ubox" else "CRW")
    learner = a_cfg["learner"] or _default_learner(target, oracle)
    model = dict(model, oracle=oracle)
    if learner == "sieve" and model["rho"] is None:
        model["rho"] = 0.5
    if learner == "parity" and model["rho"] is None:
        n = target.alphabet.n
        model["rho"] = 1.0 - 4.0 * math.log(n) / n
    session = _session(target, model, seed, oracle)
    if learner == "parity":
        try:
            res = low_noise_parity_learner(session, int(a_cfg["budget"]))
        except LearningFailure as exc:
            return {"learner": learner, "success": False, "stage": exc.stage, "message": str(exc),
                    "queries": session.query_count}, None
        correct = getattr(target, "vector", None) == res.vector
        return {"learner": learner, "success": True, "stage": "done", "vector": res.vector.to_string(),
                "samples": res.samples, "witnesses": res.witnesses, "queries": session.query_count,
                "exact_match": correct, "error_tag": "exact"}, None
    params = class_params(target)
    kw = {"max_rounds": a_cfg["max_rounds"], "eval_samples": a_cfg["eval_samples"]}
    if a_cfg["theta"] is not None:
        kw["theta"] = a_cfg["theta"]
    elif a_cfg["theta_rule"] == "size":
        kw["theta"] = default_theta(params["size"], a_cfg["epsilon"])
    elif a_cfg["theta_rule"] != "relative":
        raise ConfigError("algorithm.theta_rule", "must be 'relative' or 'size'")
    if a_cfg["samples"] is not None:
        kw["samples"] = a_cfg["samples"]
    if learner == "km":
        res = learn_top_crw(session, params, a_cfg["epsilon"], a_cfg["delta"], **kw)
    elif learner == "sieve":
        res = learn_ubox_ns(session, params, a_cfg["epsilon"], a_cfg["delta"], degree=a_cfg["degree"], **kw)
    else:
        raise ConfigError("algorithm.learner", f"unknown learner {learner!r}")
    out = {"learner": learner, "oracle": oracle, "rho": model["rho"], "success": res.success,
           "stage": res.stage, "message": res.message, "rounds": res.rounds,
           "estimated_error": {"value": res.estimated_error, "tag": "estimated",
                               "tolerance": a_cfg["epsilon"] / 4, "confidence": a_cfg["delta"]},
           "queries": res.queries, "searches": res.searches, "history": res.history}
    if res.hypothesis is not None and _exact_ok(target):
        out["exact_error"] = {"value": res.hypothesis.exact_error(target), "tag": "exact"}
    return out, res.hypothesis


def _cmd_learn(cfg, out, log):
    target = build_target(cfg["target"], cfg["seed"])
    result, hyp = _learn_once(target, cfg["model"], cfg["algorithm"], cfg["seed"])
    if hyp is not None:
        atomic_write(os.path.join(out, "hypothesis.json"), json.dumps(hyp.to_dict(), indent=1) + "\n")
        result["hypothesis"] = "hypothesis.json"
    return {"result": result, "failed": not result["success"]}


# experiment tasks run in worker processes; each receives its own seed

def _collision_task(args):
    rho, n, samples, seed = args
    r = collision_decay_experiment(rho, n, samples, seed=seed)
    return [rho, n, samples, r.hits, r.empirical, r.analytic, r.sigma, r.z_score]


def _trial_task(args):
    target_spec, model, a_cfg, target_seed, session_seed = args
    target = random_instance(target_spec["class"], target_seed, **target_spec.get("params", {}))
    res, _ = _learn_once(target, model, a_cfg, session_seed)
    err = res.get("exact_error", {}).get("value")
    if res["learner"] == "parity":
        ok = bool(res["success"] and res["exact_match"])
    else:
        ok = err is not None and err <= a_cfg["epsilon"]
    return [target_seed, session_seed, res["success"], res.get("rounds", 0), err, ok, res["queries"]]


def _calibration_task(args):
    target_spec, model, quantity, I, tol, conf, target_seed, session_seed = args
    target = random_instance(target_spec["class"], target_seed, **target_spec.get("params", {}))
    session = OracleSession(target, "NS", seed=session_seed, rho=model["rho"] if model["rho"] is not None else 0.5)
    ecfg = EstimatorConfig(tol, conf)
    spec = transform(target)
    if quantity == "t_prime":
        est, exact = estimate_t_prime_ns(session, I, ecfg), t_prime_exact(spec, session.rho, I)
    else:
        est, exact = estimate_t_ns(session, I, ecfg), t_exact(spec, session.rho, I)
    return [target_seed, session_seed, est, exact, abs(est - exact), abs(est - exact) <= tol]


def _map(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _cmd_experiment(cfg, out, log):
    a = cfg["algorithm"]
    name = a["name"]
    if name == "collision_decay":
        pairs = [(float(r), int(n)) for r in a["rhos"] for n in a["ns"]]
        seeds = [child_seed(s) for s in spawn_seeds(cfg["seed"], len(pairs))]
        rows = _map(_collision_task, [(r, n, int(a["samples"]), s) for (r, n), s in zip(pairs, seeds)],
                    cfg["workers"])
        header = ["rho", "n", "samples", "hits", "empirical", "analytic", "sigma", "z"]
        summary = {"rows": len(rows), "max_abs_z": max(abs(r[7]) for r in rows)}
    elif name == "learning_trials":
        k = int(a["trials"])
        seeds = [child_seed(s) for s in spawn_seeds(cfg["seed"], 2 * k)]
        l_cfg = _merge(DEFAULTS["algorithm"]["learn"], a["learn"], "algorithm.learn.")
        tasks = [(cfg["target"], cfg["model"], l_cfg, seeds[2 * i], seeds[2 * i + 1]) for i in range(k)]
        rows = _map(_trial_task, tasks, cfg["workers"])
        header = ["target_seed", "session_seed", "success", "rounds", "exact_error", "within_epsilon", "queries"]
        summary = {"trials": k, "successes": sum(1 for r in rows if r[5]), "error_tag": "exact"}
    elif name == "calibration":
        k = int(a["runs"])
        if a["quantity"] not in ("t_prime", "t"):
            raise ConfigError("algorithm.quantity", "calibration supports t_prime and t")
        seeds = [child_seed(s) for s in spawn_seeds(cfg["seed"], 2 * k)]
        tasks = [(cfg["target"], cfg["model"], a["quantity"], tuple(a["I"]), a["tolerance"], a["confidence"],
                  seeds[2 * i], seeds[2 * i + 1]) for i in range(k)]
        rows = _map(_calibration_task, tasks, cfg["workers"])
        header = ["target_seed", "session_seed", "estimate", "exact", "deviation", "within_tolerance"]
        summary = {"runs": k, "within": sum(1 for r in rows if r[5]), "tolerance": a["tolerance"],
                   "confidence": a["confidence"]}
    else:
        raise ConfigError("algorithm.name", "must be collision_decay, learning_trials or calibration")
    atomic_write(os.path.join(out, "experiment.csv"), _csv_text(header, rows))
    return {"result": dict(summary, table="experiment.csv")}


HANDLERS = {"transform": _cmd_transform, "estimate": _cmd_estimate, "learn": _cmd_learn,
            "experiment": _cmd_experiment}


def run(config: dict) -> dict:
    """Execute one run and return its report (also written to ``<out>/report.json``).

    The report's ``exit_code`` follows the module's exit-code table.  Config
    problems raise :class:`ConfigError` before any output is written.
    """
    cfg = normalize_config(config)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    log_path = os.path.join(out, "run.log")
    if os.path.exists(log_path):
        os.unlink(log_path)
    log = RunLog(log_path)
    started = time.perf_counter()
    report = {"command": cfg["command"], "config": cfg, "status": "ok", "exit_code": EXIT_OK}
    try:
        body = HANDLERS[cfg["command"]](cfg, out, log)
        report["result"] = body["result"]
        if body.get("failed"):
            report["status"] = "learning_failure"
            report["exit_code"] = EXIT_LEARNING
    except ConfigError:
        raise
    except LearningFailure as exc:
        report.update(status="learning_failure", exit_code=EXIT_LEARNING,
                      error={"stage": exc.stage, "message": str(exc), "details": exc.details})
    except ResourceError as exc:
        report.update(status="resource_error", exit_code=EXIT_RESOURCE,
                      error={"message": str(exc), "details": exc.details})
    log.append(EstimateRecord("run", {"command": cfg["command"], "status": report["status"]}, None, 0.0, 0,
                              time.perf_counter() - started))
    atomic_write(os.path.join(out, "report.json"), json.dumps(_clean(report), indent=1, sort_keys=True) + "\n")
    return _clean(report)


# ---------------------------------------------------------------------------
# comparison

def _load_report(r):
    if isinstance(r, dict):
        return r, None
    with open(r) as fh:
        return json.load(fh), os.path.dirname(os.path.abspath(r))


def _walk(a, b, path, tol, out):
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            _walk(a.get(k), b.get(k), f"{path}.{k}" if path else k, tol, out)
    elif isinstance(a, list) and isinstance(b, list) and len(a) == len(b):
        for i, (x, y) in enumerate(zip(a, b)):
            _walk(x, y, f"{path}[{i}]", tol, out)
    elif (isinstance(a, (int, float)) and isinstance(b, (int, float))
          and not isinstance(a, bool) and not isinstance(b, bool)):
        if abs(a - b) > tol:
            out.append({"field": path, "a": a, "b": b, "abs_diff": abs(a - b)})
    elif a != b:
        out.append({"field": path, "a": a, "b": b})


def compare(report_a, report_b, tol: float = 1e-12) -> dict:
    """Field-wise diff of two reports (dicts or report.json paths).

    Numeric fields differing by at most ``tol`` count as equal.  Reports of
    different commands are comparable only when both carry a spectrum (an
    exact transform against an estimated one); the largest coefficient
    deviation is then reported as ``spectrum_max_deviation``.
    """
    a, dir_a = _load_report(report_a)
    b, dir_b = _load_report(report_b)
    spectra = bool(a.get("result", {}).get("spectrum") and b.get("result", {}).get("spectrum"))
    if a.get("command") != b.get("command") and not spectra:
        raise ContractViolation(f"cannot compare a {a.get('command')!r} report with a {b.get('command')!r} report")
    diffs = []
    _walk(a, b, "", tol, diffs)
    summary = {"equal": not diffs, "differences": diffs}
    sa, sb = a.get("result", {}).get("spectrum"), b.get("result", {}).get("spectrum")
    if sa and sb and dir_a and dir_b:
        alpha = build_target(a["config"]["target"]).alphabet
        ca = Spectrum.read_csv(os.path.join(dir_a, sa), alpha).coeffs
        cb = Spectrum.read_csv(os.path.join(dir_b, sb), alpha).coeffs
        summary["spectrum_max_deviation"] = float(np.max(np.abs(ca - cb)))
    return summary


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walklearn", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--workers", type=int, help="worker processes for experiments")
        p.add_argument("--out", help="output directory (overrides the config)")
    p = sub.add_parser("compare")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--tol", type=float, default=1e-12)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "compare":
        try:
            diff = compare(args.report_a, args.report_b, args.tol)
        except (OSError, ContractViolation, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(json.dumps(_clean(diff), indent=1))
        return EXIT_OK
    try:
        raw = load_config(args.config)
        for key in ("seed", "workers", "out"):
            if getattr(args, key) is not None:
                raw[key] = getattr(args, key)
        raw.setdefault("command", args.command)
        report = run(normalize_config(raw, args.command))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({k: report[k] for k in ("command", "status", "exit_code")}))
    return report["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
