"""Command-line front end: ``aoi-mds {pmf,bep,analyze,sweep,simulate,optimize}``.

Exit codes: 0 success, 2 invalid input, 3 a tracked source never received an update.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from jsonschema import ValidationError

from . import analysis as an
from .channel import BASELINE_CHANNEL, GEParams, marginal_erasure_prob
from .erasure import N_CLOSED, bep_mds, erasure_pmf_closed, erasure_pmf_dp
from .io import SCHEMA_VERSION, csv_table, dumps, fmt, sim_config_from_dict, sim_config_to_dict
from .simulator import analytic_predictions, run_replications

EXIT_INVALID = 2
EXIT_NO_DELIVERY = 3

SWEEP_COLUMNS = ["n", "k", "rate", "p_c", "aoi_approx", "aoi_gaussian", "aoi_uncoded", "gain", "c_n", "region", "tag"]
SIM_COLUMNS = ["source", "position", "mean_aoi", "ex", "ex2", "deliveries", "analytic_aoi", "rel_error"]


class UsageError(Exception):
    pass


def _channel(args) -> GEParams:
    try:
        base = GEParams.from_json(args.channel_config).to_dict() if args.channel_config else BASELINE_CHANNEL.to_dict()
        for key in ("alpha", "beta", "eps0", "eps1"):
            v = getattr(args, key)
            if v is not None:
                base[key] = v
        params = GEParams.from_dict(base)
        params.pi_g
    except (OSError, KeyError, json.JSONDecodeError, ValueError) as e:
        raise UsageError(str(e)) from e
    return params


def _header(command: str, params: GEParams) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "channel": params.to_dict()}


def _kv_csv(pairs) -> str:
    return csv_table(["key", "value"], pairs)


def cmd_pmf(args) -> tuple[str, int]:
    params = _channel(args)
    n = args.n
    if n is None or n < 1:
        raise UsageError("pmf needs --n >= 1")
    dp = erasure_pmf_dp(n, params).probs
    closed = None
    if args.closed:
        if n > N_CLOSED:
            raise UsageError(f"--closed is limited to n <= {N_CLOSED}")
        closed = erasure_pmf_closed(n, params).probs
    if args.format == "csv":
        header = ["e", "P"] + (["P_closed"] if closed is not None else [])
        rows = [[e, float(dp[e])] + ([float(closed[e])] if closed is not None else []) for e in range(n + 1)]
        return csv_table(header, rows), 0
    doc = _header("pmf", params)
    doc.update(n=n, method="dynamic_program", rows=[
        {"e": e, "P": float(dp[e]), **({"P_closed": float(closed[e])} if closed is not None else {})}
        for e in range(n + 1)
    ])
    return dumps(doc), 0


def cmd_bep(args) -> tuple[str, int]:
    params = _channel(args)
    if args.n is None or args.k is None or args.n < 1 or args.k < 1:
        raise UsageError("bep needs --n >= 1 and --k >= 1")
    v = bep_mds(args.n, args.k, params)
    if args.format == "csv":
        return fmt(v) + "\n", 0
    doc = _header("bep", params)
    doc.update(n=args.n, k=args.k, bep=v)
    return dumps(doc), 0


def _system(args, require_divisible: bool) -> an.SystemConfig:
    for name in ("K", "n", "k"):
        if getattr(args, name) is None:
            raise UsageError(f"--{name} is required")
    try:
        return an.SystemConfig(args.K, args.ell, args.n, args.k, require_divisible=require_divisible)
    except ValueError as e:
        raise UsageError(str(e)) from e


def cmd_analyze(args) -> tuple[str, int]:
    params = _channel(args)
    p = marginal_erasure_prob(params)
    cfg = _system(args, require_divisible=args.source is not None)
    if args.source is not None and not 0 <= args.source < cfg.K:
        raise UsageError("--source out of range")
    ev = an.event_probs(cfg, params)
    approx = an.coded_aoi_approx(cfg, params)
    exact = None
    if args.source is not None:
        exact = [(args.source, cfg.position(args.source), an.coded_aoi_exact(args.source, cfg, params).mean_aoi)]
    elif cfg.K % cfg.k == 0:
        exact = [(i, i, an.coded_aoi_exact(i, cfg, params).mean_aoi) for i in range(cfg.k)]
    fields = {
        "erasure_prob": p,
        "uncoded_exact": an.uncoded_aoi(cfg.K, cfg.ell, p).mean_aoi,
        "uncoded_large_k": an.uncoded_aoi(cfg.K, cfg.ell, p, an.Mode.LARGE_K).mean_aoi,
        "p_a": ev.p_a,
        "p_b": ev.p_b,
        "p_c": ev.p_c,
        "coded_approx": approx.mean_aoi,
        "approx_threshold": approx.components.get("threshold"),
        "approx_valid": approx.components.get("valid"),
    }
    if args.format == "csv":
        pairs = list(fields.items())
        for i, pos, v in exact or []:
            pairs.append((f"coded_exact[{i}]", v))
        return _kv_csv(pairs), 0
    doc = _header("analyze", params)
    doc["system"] = {"K": cfg.K, "ell": cfg.ell, "n": cfg.n, "k": cfg.k}
    doc.update(fields)
    doc["coded_exact"] = None if exact is None else [
        {"source": i, "position": pos, "mean_aoi": v} for i, pos, v in exact
    ]
    return dumps(doc), 0


def sweep_rows(n: int, params: GEParams, K: int, ell: int, k_min: int = 1, k_max: int | None = None,
               c_eps: float | None = None) -> tuple[list[dict], dict]:
    """One row per k plus a summary (argmin, gain, region boundaries)."""
    k_max = n if k_max is None else k_max
    p = marginal_erasure_prob(params)
    c_eps = an.calibrate_c_eps() if c_eps is None else c_eps
    p_c, aoi = an.coded_aoi_approx_all(n, params, K, ell)
    unc = an.uncoded_aoi(K, ell, p, an.Mode.LARGE_K).mean_aoi
    degenerate = p <= 0.0 or p >= 1.0
    rows = []
    for k in range(k_min, k_max + 1):
        a = float(aoi[k - 1])
        if degenerate:
            c, gauss, region = None, None, None
        else:
            c = an.c_n_for_k(k, n, p)
            gauss = an.gaussian_aoi(c, n, K, ell, p).mean_aoi
            region = an.classify_region(c, c_eps).value
        rows.append({
            "n": n, "k": k, "rate": k / n, "p_c": float(p_c[k - 1]),
            "aoi_approx": a, "aoi_gaussian": gauss, "aoi_uncoded": unc,
            "gain": unc / a if math.isfinite(a) and math.isfinite(unc) else math.nan,
            "c_n": c, "region": region, "tag": "",
        })
    window = aoi[k_min - 1 : k_max]
    best = k_min + int(np.flatnonzero(window == window.min())[-1])
    summary = {"k": best, "rate": best / n, "aoi": float(aoi[best - 1]),
               "gain": rows[best - k_min]["gain"], "aoi_uncoded": unc, "c_eps": c_eps}
    if not degenerate:
        sd = math.sqrt(n * p * (1.0 - p))
        summary["region_boundaries"] = {
            "k_lower": n * (1.0 - p) - c_eps * sd,
            "k_upper": n * (1.0 - p) + c_eps * sd,
        }
    else:
        summary["region_boundaries"] = None
    return rows, summary


def cmd_sweep(args) -> tuple[str, int]:
    params = _channel(args)
    if args.n is None or args.K is None:
        raise UsageError("sweep needs --n and --K")
    k_min = 1 if args.k_min is None else args.k_min
    k_max = args.n if args.k_max is None else args.k_max
    if not 1 <= k_min <= k_max <= args.n:
        raise UsageError("need 1 <= k_min <= k_max <= n")
    rows, summary = sweep_rows(args.n, params, args.K, args.ell, k_min, k_max, args.c_eps)
    if args.format == "csv":
        body = [[r[c] for c in SWEEP_COLUMNS] for r in rows]
        star = dict(rows[summary["k"] - k_min], tag="argmin")
        body.append([star[c] for c in SWEEP_COLUMNS])
        return csv_table(SWEEP_COLUMNS, body), 0
    doc = _header("sweep", params)
    doc.update(n=args.n, K=args.K, ell=args.ell, rows=rows)
    for r in doc["rows"]:
        r.pop("tag")
    doc["argmin"] = {k: summary[k] for k in ("k", "rate", "aoi", "gain")}
    doc["aoi_uncoded"] = summary["aoi_uncoded"]
    doc["c_eps"] = summary["c_eps"]
    doc["region_boundaries"] = summary["region_boundaries"]
    return dumps(doc), 0


def cmd_simulate(args) -> tuple[str, int]:
    try:
        raw = json.loads(Path(args.config).read_text())
        cfg = sim_config_from_dict(raw)
    except ValidationError as e:
        raise UsageError(f"invalid simulation config: {e.message}") from e
    except (OSError, json.JSONDecodeError, ValueError, KeyError) as e:
        raise UsageError(f"invalid simulation config: {e}") from e
    reps = run_replications(cfg, args.replications)
    pred = analytic_predictions(cfg)
    agg = []
    for i, s in enumerate(reps[0].sources):
        per = [r.sources[i] for r in reps]
        m = float(np.mean([x.mean_aoi for x in per]))
        a = pred[s.source]["mean_aoi"]
        agg.append({
            "source": s.source, "position": s.position, "mean_aoi": m,
            "ex": float(np.mean([x.ex for x in per])), "ex2": float(np.mean([x.ex2 for x in per])),
            "deliveries": int(sum(x.deliveries for x in per)),
            "analytic_aoi": a, "analytic_ex": pred[s.source]["ex"], "analytic_ex2": pred[s.source]["ex2"],
            "rel_error": (m - a) / a if math.isfinite(a) else None,
        })
    code = EXIT_NO_DELIVERY if any(r.no_delivery for r in reps) else 0
    if args.format == "csv":
        return csv_table(SIM_COLUMNS, [[r[c] for c in SIM_COLUMNS] for r in agg]), code
    doc = {"schema_version": SCHEMA_VERSION, "command": "simulate", "config": sim_config_to_dict(cfg),
           "replications": len(reps), "sources": agg, "reports": [r.to_dict() for r in reps]}
    return dumps(doc), code


def cmd_optimize(args) -> tuple[str, int]:
    params = _channel(args)
    if args.n is None or args.n < 1 or args.K is None:
        raise UsageError("optimize needs --n >= 1 and --K")
    p = marginal_erasure_prob(params)
    try:
        g = an.coding_gain(args.n, params, args.K, args.ell)
    except ValueError as e:
        raise UsageError(str(e)) from e
    fields = {
        "n": args.n, "K": args.K, "ell": args.ell,
        "k_star": g.k_star, "rate": g.k_star / args.n,
        "aoi_opt": g.aoi_coded, "aoi_uncoded": g.aoi_uncoded,
        "gain": g.gain, "gain_ceiling": g.ceiling, "asymptotic_k": args.n * (1.0 - p),
    }
    if args.format == "csv":
        return _kv_csv(fields.items()), 0
    doc = _header("optimize", params)
    doc.update(fields)
    return dumps(doc), 0


COMMANDS = {
    "pmf": cmd_pmf, "bep": cmd_bep, "analyze": cmd_analyze,
    "sweep": cmd_sweep, "simulate": cmd_simulate, "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("channel (defaults: alpha=0.2 beta=0.8 eps0=0.2 eps1=0.9)")
    for name in ("alpha", "beta", "eps0", "eps1"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--channel-config", help="JSON file with alpha, beta, eps0, eps1")
    s = common.add_argument_group("system")
    s.add_argument("--K", type=int)
    s.add_argument("--ell", type=int, default=1)
    s.add_argument("--n", type=int)
    s.add_argument("--k", type=int)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="aoi-mds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("pmf", parents=[common], help="erasure-count pmf P(n, e)")
    p.add_argument("--closed", action="store_true", help="add the closed-form column (n <= 30)")
    sub.add_parser("bep", parents=[common], help="MDS block error probability")
    p = sub.add_parser("analyze", parents=[common], help="analytical AoI for one configuration")
    p.add_argument("--source", type=int)
    p = sub.add_parser("sweep", parents=[common], help="AoI versus k for fixed n")
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--c-eps", type=float, help="region half-width (default: calibrated at 1e-3)")
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo run from a JSON config")
    p.add_argument("config")
    p.add_argument("--replications", type=int, default=1)
    sub.add_parser("optimize", parents=[common], help="optimal k and coding gain")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text, code = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"aoi-mds {args.command}: {e}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_NO_DELIVERY:
        print("aoi-mds simulate: a tracked source received no update", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
