"""Serialisation helpers shared by the CLI: float formatting, schemas, config loading."""
from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources

import jsonschema

from .analysis import SystemConfig
from .channel import GEParams
from .simulator import RecoveryOffset, SimConfig

SCHEMA_VERSION = 1
DIVERGENT = "divergent"


def fmt(v) -> str:
    """CSV cell: shortest round-trip repr for floats, 'divergent' for infinities."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return DIVERGENT
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def jsonable(v):
    if isinstance(v, float):
        if math.isinf(v):
            return DIVERGENT
        if math.isnan(v):
            return None
        return v
    if isinstance(v, dict):
        return {k: jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if hasattr(v, "item"):  # numpy scalar
        return jsonable(v.item())
    return v


def dumps(doc: dict) -> str:
    return json.dumps(jsonable(doc), indent=2, allow_nan=False) + "\n"


def csv_table(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def load_schema(name: str) -> dict:
    return json.loads(resources.files("aoi_mds.schemas").joinpath(f"{name}.json").read_text())


def validate(doc: dict, name: str) -> None:
    jsonschema.validate(doc, load_schema(name))


def sim_config_from_dict(d: dict) -> SimConfig:
    validate(d, "sim_config")
    coded = d.get("mode", "coded") == "coded"
    s = d["system"]
    system = SystemConfig(
        K=int(s["K"]),
        ell=int(s.get("ell", 1)),
        n=int(s.get("n", 1)),
        k=int(s.get("k", 1)),
        require_divisible=False,
    )
    return SimConfig(
        system=system,
        channel=GEParams.from_dict(d["channel"]),
        rounds=int(d["rounds"]),
        warmup_rounds=d.get("warmup_rounds"),
        seed=int(d.get("seed", 0)),
        tracked_sources=d.get("tracked_sources"),
        recovery_age_offset=RecoveryOffset(d.get("recovery_age_offset", "delayed")),
        coded=coded,
    )


def sim_config_to_dict(cfg: SimConfig) -> dict:
    s = cfg.system
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": "coded" if cfg.coded else "uncoded",
        "system": {"K": s.K, "ell": s.ell, "n": s.n, "k": s.k},
        "channel": cfg.channel.to_dict(),
        "rounds": cfg.rounds,
        "warmup_rounds": cfg.warmup_rounds,
        "seed": cfg.seed,
        "tracked_sources": list(cfg.tracked_sources),
        "recovery_age_offset": cfg.recovery_age_offset.value,
    }
