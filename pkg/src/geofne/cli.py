"""Batch experiment runner.

Usage::

    geofne <command> --config path.json [--seed n] [--out dir]

Each command reads one JSON config, writes ``report.json`` (and ``trace.csv``
where there is a trace) into the output directory, and exits with 0 when all
checks pass, 1 when a mathematical check fails and 2 on a configuration or
module error. The only non-deterministic field of a report is ``generated_at``.
"""

import argparse
import datetime
import json
import math
import os
import sys

import numpy as np

from .axiom_verifier import Sampler, make_modulus, modulus_audit, verify_space_axioms
from .centers import SequenceWindow, asymptotic_center, delta_convergence_diagnostic
from .convex_sets import make_set
from .errors import InvalidInputError, NonconvergenceError
from .functionals import ResolventParams, make_functional, resolvent
from .iteration import (certify_asymptotic_regularity, displacement_analytics, fejer_audit,
                        picard_trace, proximal_point_run, rate_bound, union_fixed_point_search)
from .model_spaces import make_space
from .operators import DEFAULT_LAMBDA_GRID, firm_nonexpansiveness_audit, make_operator

COMMANDS = ("verify", "audit-operator", "iterate", "rate", "prox", "centers", "union-fixpoint")
TIMESTAMP_KEY = "generated_at"


class ConfigError(InvalidInputError):
    """The config file is unreadable or incomplete."""


def _require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"config is missing {key!r}")
    return cfg[key]


def _jsonable(obj):
    """Plain-Python copy of ``obj``; non-finite floats become strings so the output is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dumps(report):
    # float repr is the shortest string that round-trips, never more than 17 digits
    return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- commands -------------------------------------------------------------------------
# Each returns (passed, result dict); a trace, if any, goes to out/trace.csv.


def cmd_verify(cfg, seed, out):
    space = make_space(_require(cfg, "space"))
    sampler = Sampler(seed=seed, count=int(cfg.get("samples", 10_000)))
    tol = float(cfg.get("tol", 1e-7))
    rep = verify_space_axioms(space, sampler, tol=tol, check_cn=cfg.get("check_cn"),
                              check_betweenness=cfg.get("check_betweenness"))
    result = {"axioms": rep.to_json()}
    passed = rep.passed
    if "modulus" in cfg:
        mod_samples = int(cfg.get("modulus_samples", 2000))
        mrep = modulus_audit(space, make_modulus(cfg["modulus"]), Sampler(seed=seed, count=mod_samples), tol=tol)
        result["modulus"] = {**mrep.to_json(), "skipped": mrep.skipped, "descriptor": mrep.modulus}
        passed = passed and mrep.passed
    return passed, result


def cmd_audit_operator(cfg, seed, out):
    space = make_space(_require(cfg, "space"))
    T = make_operator(space, _require(cfg, "operator"))
    rep = firm_nonexpansiveness_audit(T, cfg.get("lambda_grid", DEFAULT_LAMBDA_GRID),
                                      pairs=int(cfg.get("pairs", 200)), tol=float(cfg.get("tol", 1e-6)),
                                      seed=seed)
    return rep.passed, {"audit": rep.to_json()}


def _trace(cfg, space):
    T = make_operator(space, _require(cfg, "operator"))
    x0 = space.point_from_json(_require(cfg, "x0"))
    return T, picard_trace(T, x0, int(cfg.get("N", 10_000)))


def cmd_iterate(cfg, seed, out):
    space = make_space(_require(cfg, "space"))
    T, trace = _trace(cfg, space)
    anchors = [space.point_from_json(a) for a in cfg.get("anchors", [])]
    trace.write_csv(os.path.join(out, "trace.csv"), anchors)
    analytics = displacement_analytics(trace, K=int(cfg.get("K", 5)), tol=float(cfg.get("analytics_tol", 5e-3)))
    result = {"trace": trace.to_json(), "analytics": analytics.to_json()}
    passed = analytics.passed
    if anchors:
        fej = fejer_audit(trace, anchors)
        result["fejer"] = fej.to_json()
        passed = passed and fej.passed
    if cfg.get("delta_diagnostic"):
        C = make_set(space, cfg["set"]) if "set" in cfg else None
        rep = delta_convergence_diagnostic(trace, C, cfg.get("windows"), tol=float(cfg.get("tol", 1e-6)))
        result["delta"] = rep.to_json()
        expected = cfg.get("expect_delta")
        passed = passed and (rep.consistent if expected is None else rep.verdict == expected)
    return passed, result


def _certificates(cfg):
    certs = cfg.get("certificates")
    if certs is not None:
        return certs
    grid = _require(cfg, "grid")
    return [{"kind": k, "epsilon": e, "lambda": lam, "b": grid["b"], "modulus": grid.get("modulus")}
            for k in grid.get("kinds", ["Phi", "PhiTilde"])
            for e in grid["epsilon"] for lam in grid["lambda"]]


def cmd_rate(cfg, seed, out):
    space = make_space(_require(cfg, "space"))
    T = make_operator(space, _require(cfg, "operator"))
    x0 = space.point_from_json(_require(cfg, "x0"))
    witness = space.point_from_json(cfg["witness"]) if "witness" in cfg else None
    certs = []
    for c in _certificates(cfg):
        try:
            certs.append(rate_bound(c["kind"], c["epsilon"], c["lambda"], c["b"], c.get("modulus"), space))
        except KeyError as exc:
            raise ConfigError(f"certificate {c!r} is missing {exc}") from None
    # the trace covers the largest bound unless that exceeds max_N
    N = min(max(c.bound for c in certs) + 2, int(cfg.get("max_N", 10_000)))
    trace = picard_trace(T, x0, max(N, 2))
    trace.write_csv(os.path.join(out, "trace.csv"))
    verdicts = [certify_asymptotic_regularity(trace, c, witness, T) for c in certs]
    result = {"trace": trace.to_json(), "certificates": [v.to_json() for v in verdicts]}
    if cfg.get("compare_psi"):
        result["psi_vs_phitilde"] = psi_comparison(trace, certs, witness, T)
    return all(v.passed for v in verdicts), result


def psi_comparison(trace, certs, witness=None, T=None):
    """For each PhiTilde certificate, whether the printed Psi bound also holds on this trace.

    Report only: nothing here decides pass or fail.
    """
    rows = []
    for c in certs:
        if c.kind != "PhiTilde":
            continue
        psi = rate_bound("Psi", c.epsilon, c.lam, c.b, space=trace.space)
        v = certify_asymptotic_regularity(trace, psi, witness, T)
        rows.append({"epsilon": c.epsilon, "lambda": c.lam, "b": c.b, "PhiTilde": c.bound,
                     "Psi": psi.bound, "Psi_status": v.status})
    return rows


def _step_sizes(steps, N):
    if isinstance(steps, list):
        if len(steps) < N:
            raise ConfigError(f"need {N} step sizes, got {len(steps)}")
        return steps
    if isinstance(steps, (int, float)):
        return [float(steps)] * N
    if isinstance(steps, dict) and "constant" in steps:
        return [float(steps["constant"])] * N
    if isinstance(steps, dict) and "geometric" in steps:
        r, a = float(steps["geometric"]), float(steps.get("initial", 1.0))
        return [a * r ** n for n in range(N)]
    if isinstance(steps, dict) and "harmonic" in steps:
        a = float(steps["harmonic"])
        return [a / (n + 1) for n in range(N)]
    raise ConfigError(f"cannot read step sizes from {steps!r}")


def cmd_prox(cfg, seed, out):
    space = make_space(_require(cfg, "space"))
    F = make_functional(space, _require(cfg, "functional"))
    x0 = space.point_from_json(_require(cfg, "x0"))
    N = int(cfg.get("N", 20))
    tol = float(cfg.get("tol", 1e-7))
    run = proximal_point_run(F, _step_sizes(cfg.get("step_sizes", 0.5), N), x0, N,
                             divergence_threshold=float(cfg.get("divergence_threshold", 5.0)))
    run.trace.write_csv(os.path.join(out, "trace.csv"))
    result = {"run": run.to_json()}
    # a minimizer is fixed by every resolvent
    m = F.minimizer()
    fixed = []
    if m is not None:
        for mu in sorted(set(2.0 * v for v in run.step_sizes)):
            fixed.append({"mu": mu, "residual": space.distance(m, resolvent(F, ResolventParams(mu), m))})
        result["distance_to_minimizer"] = space.distance(run.trace.points[-1], m)
    result["minimizer_fixed"] = fixed
    return all(r["residual"] <= tol for r in fixed), result


def cmd_centers(cfg, seed, out):
    space = make_space(_require(cfg, "space"))
    C = make_set(space, cfg["set"]) if "set" in cfg else None
    tol = float(cfg.get("tol", 1e-6))
    if "points" in cfg:
        pts = [space.point_from_json(p) for p in cfg["points"]]
        w = cfg.get("window", {})
        win = SequenceWindow(pts, w.get("start", 0), w.get("stop"), w.get("stride", 1))
        res = asymptotic_center(space, win, C, tol=min(tol, 1e-8), seed=seed)
        result = {"center": space.point_to_json(res.center), "radius": res.radius, "residual": res.residual}
        return res.residual <= 10.0 * tol, result
    T, trace = _trace(cfg, space)
    trace.write_csv(os.path.join(out, "trace.csv"))
    rep = delta_convergence_diagnostic(trace, C, cfg.get("windows"), tol=tol)
    expected = cfg.get("expect", "CONSISTENT")
    return rep.verdict == expected, {"trace": trace.to_json(), "delta": rep.to_json()}


def cmd_union_fixpoint(cfg, seed, out):
    space = make_space(_require(cfg, "space"))
    T = make_operator(space, _require(cfg, "operator"))
    z = space.point_from_json(_require(cfg, "z"))
    res = union_fixed_point_search(T, T.pieces, z, window=int(cfg.get("window", 200)),
                                   tol=float(cfg.get("tol", 1e-6)))
    # periodic points of a firmly nonexpansive map must be fixed
    passed = res.classification == "fixed" or not T.claims_fne
    return passed, {"search": res.to_json(space), "claims_fne": T.claims_fne}


HANDLERS = {
    "verify": cmd_verify,
    "audit-operator": cmd_audit_operator,
    "iterate": cmd_iterate,
    "rate": cmd_rate,
    "prox": cmd_prox,
    "centers": cmd_centers,
    "union-fixpoint": cmd_union_fixpoint,
}


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def run(command, cfg, seed=None, out="."):
    """Run one command and write its report; returns ``(exit status, report)``."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    if cfg.get("command", command) != command:
        raise ConfigError(f"config is for {cfg['command']!r}, not {command!r}")
    seed = int(cfg.get("seed", 0)) if seed is None else int(seed)
    os.makedirs(out, exist_ok=True)
    passed, result = HANDLERS[command](cfg, seed, out)
    report = {
        "command": command,
        "seed": seed,
        "config": cfg,
        "result": result,
        "pass": bool(passed),
        TIMESTAMP_KEY: datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(dumps(report))
    return (0 if passed else 1), report


def build_parser():
    p = argparse.ArgumentParser(prog="geofne", description="Experiments on W-hyperbolic and CAT(0) model spaces.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="overrides the config's seed")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        status, _ = run(args.command, cfg, args.seed, args.out)
    except (InvalidInputError, NonconvergenceError, KeyError, TypeError, ValueError) as exc:
        print(f"geofne: error: {exc}", file=sys.stderr)
        return 2
    print(f"geofne {args.command}: {'PASS' if status == 0 else 'FAIL'} (report in {os.path.join(args.out, 'report.json')})")
    return status


if __name__ == "__main__":
    sys.exit(main())
