"""Experiment configuration: flat key = value sections (INI) or the same
structure as JSON. Every run requires an explicit seed; nothing defaults
to wall-clock entropy.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .geometry import LineSegment
from .observables import BoundaryLine, ObservableKind, ObservableSpec
from .systems.billiard import BilliardTable, Scatterer, default_table
from .systems.coupled import CoupledMapSystem
from .systems.toral import ToralAutomorphism

__all__ = ["ExperimentConfig", "load_config", "parse_config_text", "build_experiment"]

_REQUIRED_FIELDS = [
    ("system", "kind"),
    ("observable", "kind"),
    ("run", "n"),
    ("run", "realizations"),
    ("run", "quantile"),
    ("run", "seed"),
]

_DEFAULT_COUPLED_NOISE = 1e-2


@dataclass(frozen=True)
class ExperimentConfig:
    label: str
    system: object
    observable: ObservableSpec
    n: int
    n_realizations: int
    quantile_level: float
    seed: int
    burn_in: int = 0
    estimator: str = "suveges"
    estimator_params: dict = field(default_factory=dict)
    q_max: int = 12
    alignment_tol: float = 1e-9
    sweep_key: Optional[str] = None
    sweep_values: tuple = ()
    evl_tau_grid: tuple = ()
    raw_sections: dict = field(default_factory=dict)


def _tokens(value):
    if isinstance(value, str):
        return value.replace(",", " ").split()
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _floats(value):
    return [float(t) for t in _tokens(value)]


def _ints(value):
    out = []
    for t in _tokens(value):
        f = float(t)
        if f != int(f):
            raise ConfigError(f"expected integer, got {t!r}")
        out.append(int(f))
    return out


def _bool(value):
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected boolean, got {value!r}")


def parse_config_text(text: str, label: str = "config") -> dict:
    """Parse INI or JSON text into {section: {key: value}}."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{label}: invalid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"{label}: top level must be an object")
        return {str(k): dict(v) for k, v in data.items()}
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"{label}: invalid config: {e}")
    return {s: dict(parser.items(s)) for s in parser.sections()}


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), label=str(path))


def _build_system(sec: dict):
    kind = str(sec["kind"]).strip().lower()
    if kind == "toral":
        matrix = _ints(sec.get("matrix", "2 1 1 1"))
        if len(matrix) != 4:
            raise ConfigError("system.matrix needs four integers a b c d")
        return ToralAutomorphism.from_matrix(np.array(matrix).reshape(2, 2))
    if kind == "coupled":
        if "m" not in sec or "gamma" not in sec:
            raise ConfigError("coupled system needs m and gamma")
        return CoupledMapSystem(
            m=_ints(sec["m"])[0],
            gamma=float(sec["gamma"]),
            base_slope=float(sec.get("slope", 3.0)),
            noise_eps=float(sec.get("noise", _DEFAULT_COUPLED_NOISE)),
        )
    if kind == "billiard":
        if "scatterers" not in sec:
            table = default_table()
            if "max_flight" in sec:
                table = BilliardTable(table.scatterers, max_flight=float(sec["max_flight"]))
            return table
        scats = []
        spec = sec["scatterers"]
        groups = spec.split("|") if isinstance(spec, str) else spec
        for g in groups:
            vals = _floats(g)
            if len(vals) != 3:
                raise ConfigError("each scatterer needs: center_x center_y radius")
            scats.append(Scatterer(center=(vals[0], vals[1]), radius=vals[2]))
        return BilliardTable(tuple(scats), max_flight=float(sec.get("max_flight", 10.0)))
    raise ConfigError(f"unknown system kind {kind!r}")


def _parse_direction(token, system):
    s = str(token).strip().lower() if isinstance(token, str) else token
    if isinstance(s, str) and s in ("v+", "vplus"):
        return np.asarray(system.v_plus)
    if isinstance(s, str) and s in ("v-", "vminus"):
        return np.asarray(system.v_minus)
    parts = _floats(token if not isinstance(token, str) else token.replace("combo", " "))
    if isinstance(token, str) and token.strip().lower().startswith("combo"):
        if len(parts) != 2:
            raise ConfigError("combo direction needs two coefficients")
        return parts[0] * np.asarray(system.v_plus) + parts[1] * np.asarray(system.v_minus)
    if len(parts) != 2:
        raise ConfigError("direction must be v+, v-, 'combo a b', or two numbers")
    return np.array(parts)


def _build_observable(sec: dict, system) -> ObservableSpec:
    kind_s = str(sec["kind"]).strip().lower()
    try:
        kind = ObservableKind(kind_s)
    except ValueError:
        raise ConfigError(
            f"unknown observable kind {kind_s!r}; valid: "
            + ", ".join(k.value for k in ObservableKind)
        )
    if kind in (ObservableKind.NEG_LOG_SEGMENT_DIST, ObservableKind.ONE_MINUS_SEGMENT_DIST):
        if isinstance(system, BilliardTable) or "scatterer" in sec:
            idx = _ints(sec.get("scatterer", 0))[0]
            if "r0" in sec:
                r0 = float(sec["r0"])
            elif "r0_fraction" in sec:
                if not isinstance(system, BilliardTable):
                    raise ConfigError("r0_fraction needs a billiard system")
                r0 = float(sec["r0_fraction"]) * system.scatterers[idx].perimeter
            else:
                raise ConfigError("billiard observable needs r0 or r0_fraction")
            return ObservableSpec(kind=kind, boundary_line=BoundaryLine(idx, r0))
        missing = [k for k in ("point", "direction", "length") if k not in sec]
        if missing:
            raise ConfigError(f"segment observable missing: {', '.join(missing)}")
        seg = LineSegment.through_point(
            point=_floats(sec["point"]),
            direction=_parse_direction(sec["direction"], system),
            length=float(sec["length"]),
            anchor=str(sec.get("anchor", "center")).strip().lower(),
        )
        return ObservableSpec(kind=kind, segment=seg)
    if kind is ObservableKind.NEG_LOG_PERP:
        return ObservableSpec(kind=kind)
    blocks_spec = sec.get("blocks")
    if blocks_spec is None:
        raise ConfigError("block observable needs blocks = i j ... | k l ...")
    groups = blocks_spec.split("|") if isinstance(blocks_spec, str) else blocks_spec
    blocks = []
    for g in groups:
        sites = _ints(g)
        if any(s < 1 for s in sites):
            raise ConfigError("block sites are 1-based in config")
        blocks.append(tuple(s - 1 for s in sites))
    return ObservableSpec(kind=kind, blocks=tuple(blocks))


def build_experiment(sections: dict, label: str = "config") -> ExperimentConfig:
    """Validate sections and construct the experiment. Missing required
    fields are reported together."""
    missing = [
        f"{s}.{k}"
        for s, k in _REQUIRED_FIELDS
        if s not in sections or k not in sections[s]
    ]
    if missing:
        raise ConfigError(f"{label}: missing required fields: {', '.join(missing)}")

    system = _build_system(sections["system"])
    observable = _build_observable(sections["observable"], system)
    run = sections["run"]
    est = sections.get("estimator", {})
    theta = sections.get("theta", {})

    params = {}
    if "cluster_gap" in est:
        params["cluster_gap"] = _ints(est["cluster_gap"])[0]
    if "block_len" in est:
        params["block_len"] = _ints(est["block_len"])[0]
    if "run_gap" in est:
        params["run_gap"] = _ints(est["run_gap"])[0]
    if "use_quantile_level" in est:
        params["q_as_quantile_level"] = _bool(est["use_quantile_level"])

    sweep_key, sweep_values = None, ()
    if "sweep" in sections:
        sweep = sections["sweep"]
        if len(sweep) != 1:
            raise ConfigError("sweep section must contain exactly one key")
        sweep_key = next(iter(sweep))
        if sweep_key not in ("gamma", "m"):
            raise ConfigError(f"unsupported sweep key {sweep_key!r}")
        sweep_values = tuple(
            _floats(sweep[sweep_key]) if sweep_key == "gamma" else _ints(sweep[sweep_key])
        )
        if not isinstance(system, CoupledMapSystem):
            raise ConfigError("sweeps are only supported for coupled systems")

    evl_grid = ()
    if "evl" in sections:
        evl_grid = tuple(_floats(sections["evl"].get("tau_grid", "0.5 1.0 2.0")))

    quantile = float(run["quantile"])
    if not 0.5 < quantile < 1.0:
        raise ConfigError("run.quantile must lie in (0.5, 1)")

    return ExperimentConfig(
        label=label,
        system=system,
        observable=observable,
        n=_ints(run["n"])[0],
        n_realizations=_ints(run["realizations"])[0],
        quantile_level=quantile,
        seed=_ints(run["seed"])[0],
        burn_in=_ints(run.get("burn_in", 0))[0],
        estimator=str(est.get("method", "suveges")).strip().lower(),
        estimator_params=params,
        q_max=_ints(theta.get("q_max", 12))[0],
        alignment_tol=float(theta.get("alignment_tol", 1e-9)),
        sweep_key=sweep_key,
        sweep_values=sweep_values,
        evl_tau_grid=evl_grid,
        raw_sections=sections,
    )
