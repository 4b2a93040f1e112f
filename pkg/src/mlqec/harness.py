"""Experiment driver: channel sweeps over decoders, reports and provenance."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import gf2
from .codes import StabilizerCode, five_qubit_code, hypergraph_product_code, load_code
from .decoders import (
    EXHAUSTIVE_GUARD,
    LOOKUP_GUARD,
    SSF_WEIGHT_GUARD,
    DecoderInfeasible,
    SmallSetFlip,
    build_lookup_table,
    build_map_table,
    code_digest,
    exact_failure_rate,
)
from .nn import TrainConfig
from .nn_decoder import DEFAULT_HIDDEN, DEFAULT_SAMPLES, NeuralDecoder, ci95, count_failures, train_decoder
from .pauli import ChannelParams

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "TrialReport",
    "DECODERS",
    "CSV_HEADER",
    "PRESETS",
    "sweep_grid",
    "load_config",
    "resolve_code",
    "run_sweep",
    "write_report",
    "report_csv",
    "split_report",
    "config_hash",
]

DECODERS = ("lookup", "small-set-flip", "nn", "exact-map")
CSV_HEADER = "px,py,pz,code,decoder,n_trials,failures,failure_rate,ci95"
THREADS_ENV = "MLQEC_THREADS"

# ratio presets for p_y / p_x and p_z / p_x
PRESETS = {
    "fig3a": (1.0, 1.0),
    "fig3b": (0.05, 0.05),
    "fig4a": (1.0, 1.0),
    "fig4b": (0.1, 0.1),
}

BUILTIN_CODES = {
    "five_qubit": five_qubit_code,
    "hamming74_hgp": lambda: hypergraph_product_code(gf2.hamming_parity_check(3), name="hamming74_hgp"),
}


class ConfigError(ValueError):
    """An experiment configuration is malformed; the message names the field."""


def sweep_grid(px_max: float = 0.3, points: int = 20, ratio_y: float = 1.0, ratio_z: float = 1.0, px_min: float = 0.0):
    """Evenly spaced p_x values with p_y, p_z fixed ratios of p_x."""
    return [ChannelParams.from_ratios(float(px), ratio_y, ratio_z) for px in np.linspace(px_min, px_max, points)]


@dataclass(frozen=True)
class ExperimentConfig:
    code: dict
    decoders: tuple[str, ...]
    channels: tuple[ChannelParams, ...]
    n_trials: int = 25000
    seed: int = 0
    output: str | None = None
    exact: bool = False
    nn: dict = field(default_factory=dict)
    small_set_flip: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.decoders:
            raise ConfigError("field 'decoders': must be a nonempty list")
        bad = [d for d in self.decoders if d not in DECODERS]
        if bad:
            raise ConfigError(f"field 'decoders': unknown decoder(s) {bad}; choose from {list(DECODERS)}")
        if not self.channels:
            raise ConfigError("field 'channels': channel grid is empty")
        if self.n_trials < 1:
            raise ConfigError("field 'n_trials': must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if "code" not in doc:
            raise ConfigError("field 'code': missing")
        code = doc["code"]
        if isinstance(code, str):
            code = {"builtin": code}
        if not isinstance(code, dict) or not ({"builtin", "file", "classical_h"} & code.keys()):
            raise ConfigError("field 'code': expected {'builtin': name} | {'file': path} | {'classical_h': path}")
        decoders = doc.get("decoders")
        if not isinstance(decoders, list):
            raise ConfigError("field 'decoders': must be a list")
        channels = _parse_channels(doc)
        try:
            n_trials = int(doc.get("n_trials", 25000))
            seed = int(doc.get("seed", 0))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field 'n_trials'/'seed': {exc}") from None
        for key in ("nn", "small_set_flip"):
            if not isinstance(doc.get(key, {}), dict):
                raise ConfigError(f"field {key!r}: must be an object")
        return cls(
            code=code,
            decoders=tuple(decoders),
            channels=tuple(channels),
            n_trials=n_trials,
            seed=seed,
            output=doc.get("output"),
            exact=bool(doc.get("exact", False)),
            nn=dict(doc.get("nn", {})),
            small_set_flip=dict(doc.get("small_set_flip", {})),
            raw=doc,
        )

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "decoders": list(self.decoders),
            "channels": [{"px": c.p_x, "py": c.p_y, "pz": c.p_z} for c in self.channels],
            "n_trials": self.n_trials,
            "seed": self.seed,
            "exact": self.exact,
            "nn": self.nn,
            "small_set_flip": self.small_set_flip,
        }


def _parse_channels(doc: dict) -> list[ChannelParams]:
    try:
        if "channels" in doc:
            return [ChannelParams(c["px"], c.get("py", 0.0), c.get("pz", 0.0)) for c in doc["channels"]]
        if "sweep" in doc:
            sw = dict(doc["sweep"])
            preset = sw.pop("preset", None)
            if preset is not None:
                if preset not in PRESETS:
                    raise ConfigError(f"field 'sweep.preset': unknown preset {preset!r}; choose from {sorted(PRESETS)}")
                sw.setdefault("ratio_y", PRESETS[preset][0])
                sw.setdefault("ratio_z", PRESETS[preset][1])
            return sweep_grid(**sw)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"field 'channels'/'sweep': {exc}") from None
    raise ConfigError("field 'channels': provide 'channels' or 'sweep'")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(doc)


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def resolve_code(spec: dict, base_dir: str | Path = ".") -> StabilizerCode:
    base = Path(base_dir)
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in BUILTIN_CODES:
            raise ConfigError(f"field 'code.builtin': unknown code {name!r}; choose from {sorted(BUILTIN_CODES)}")
        return BUILTIN_CODES[name]()
    if "file" in spec:
        return load_code(base / spec["file"])
    construction = spec.get("construction", "hypergraph-product")
    if construction != "hypergraph-product":
        raise ConfigError(f"field 'code.construction': unsupported {construction!r}")
    h = gf2.read_matrix(base / spec["classical_h"])
    return hypergraph_product_code(h, name=Path(spec["classical_h"]).stem + "_hgp")


@dataclass
class TrialReport:
    cells: list[dict]
    provenance: dict
    timing: list[float] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"provenance": self.provenance, "cells": self.cells}, indent=1, sort_keys=True) + "\n"

    def cell(self, decoder: str, index: int = 0) -> dict:
        return [c for c in self.cells if c["decoder"] == decoder][index]


def _nn_config(config: ExperimentConfig, point: int) -> tuple[TrainConfig, tuple[int, ...], int]:
    o = config.nn
    seed = o.get("seed")
    if seed is None:
        seed = int(np.random.SeedSequence(config.seed, spawn_key=(point, 1 << 20)).generate_state(1)[0])
    tc = TrainConfig(
        batch_size=int(o.get("batch_size", 100)),
        epochs=int(o.get("epochs", 1000)),
        learning_rate=float(o.get("learning_rate", 0.01)),
        seed=int(seed),
    )
    return tc, tuple(o.get("hidden", DEFAULT_HIDDEN)), int(o.get("n_samples", DEFAULT_SAMPLES))


def _feasibility(code: StabilizerCode, decoder: str, config: ExperimentConfig) -> str | None:
    if decoder == "lookup" and code.n_generators > LOOKUP_GUARD:
        return f"table infeasible: n-k={code.n_generators} exceeds lookup guard {LOOKUP_GUARD}"
    if decoder == "exact-map" and code.n > EXHAUSTIVE_GUARD:
        return f"exact MAP infeasible: n={code.n} exceeds enumeration guard {EXHAUSTIVE_GUARD}"
    if decoder == "small-set-flip":
        guard = int(config.small_set_flip.get("weight_guard", SSF_WEIGHT_GUARD))
        w = max(len(s) for s in code.generator_supports())
        if w > guard:
            return f"generator weight too large: {w} exceeds small-set-flip guard {guard}"
    return None


def _build_decoder(code: StabilizerCode, decoder: str, params: ChannelParams, config: ExperimentConfig, point: int):
    if decoder == "lookup":
        return build_lookup_table(code), {}
    if decoder == "exact-map":
        return build_map_table(code, params), {}
    if decoder == "small-set-flip":
        o = config.small_set_flip
        hp = {"css_restricted": bool(o.get("css_restricted", False)), "weight_guard": int(o.get("weight_guard", SSF_WEIGHT_GUARD))}
        return SmallSetFlip(code, hp["weight_guard"], hp["css_restricted"]), hp
    tc, hidden, n_samples = _nn_config(config, point)
    model = train_decoder(code, params, tc, hidden, n_samples)
    hp = {**asdict(tc), "hidden": list(hidden), "n_samples": n_samples}
    return NeuralDecoder(model), hp


def _run_cell(args) -> tuple[dict, float]:
    code, config, point, _, decoder = args
    params = config.channels[point]
    start = time.perf_counter()
    cell: dict[str, Any] = {
        "px": params.p_x,
        "py": params.p_y,
        "pz": params.p_z,
        "code": code.name or code_digest(code),
        "decoder": decoder,
    }
    reason = _feasibility(code, decoder, config)
    if reason is not None:
        cell.update(status="skipped", reason=reason, n_trials=0, failures=None, failure_rate=None, ci95=None)
        return cell, time.perf_counter() - start
    try:
        dec, hp = _build_decoder(code, decoder, params, config, point)
    except DecoderInfeasible as exc:
        cell.update(status="skipped", reason=str(exc), n_trials=0, failures=None, failure_rate=None, ci95=None)
        return cell, time.perf_counter() - start
    cell["hyperparameters"] = hp
    if config.exact and decoder in ("lookup", "exact-map") and code.n <= EXHAUSTIVE_GUARD:
        rate = exact_failure_rate(dec, code, params)
        cell.update(status="ok", method="exact", n_trials=0, failures=None, failure_rate=rate, ci95=0.0)
    else:
        ss = np.random.SeedSequence(config.seed, spawn_key=(point,))
        cell["trial_seed"] = [config.seed, point]
        failures = count_failures(dec, code, params, config.n_trials, np.random.default_rng(ss))
        cell.update(
            status="ok",
            method="monte-carlo",
            n_trials=config.n_trials,
            failures=failures,
            failure_rate=failures / config.n_trials,
            ci95=ci95(failures, config.n_trials),
        )
    return cell, time.perf_counter() - start


def run_sweep(config: ExperimentConfig, threads: int | None = None, base_dir: str | Path = ".") -> TrialReport:
    """Evaluate every (channel point, decoder) cell; deterministic for a fixed config."""
    code = resolve_code(config.code, base_dir)
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    jobs = [(code, config, p, d, name) for p in range(len(config.channels)) for d, name in enumerate(config.decoders)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    provenance = {
        "config_hash": config_hash(config),
        "seed": config.seed,
        "code": {"name": code.name, "n": code.n, "k": code.k, "digest": code_digest(code)},
        "config": config.to_dict(),
    }
    return TrialReport([c for c, _ in results], provenance, [t for _, t in results])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csv(report: TrialReport) -> str:
    """CSV of the evaluated cells, preceded by a provenance comment line."""
    out = io.StringIO()
    out.write(f"# config_hash={report.provenance['config_hash']} seed={report.provenance['seed']}\n")
    out.write(CSV_HEADER + "\n")
    for c in report.cells:
        if c["status"] != "ok":
            continue
        row = [c["px"], c["py"], c["pz"], c["code"], c["decoder"], c["n_trials"], c["failures"], c["failure_rate"], c["ci95"]]
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def write_report(report: TrialReport, prefix: str | Path) -> tuple[Path, Path]:
    """Write ``<prefix>.json`` and ``<prefix>.csv`` (deterministic) plus ``<prefix>.timing.json``."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    jpath = prefix.with_name(prefix.name + ".json")
    cpath = prefix.with_name(prefix.name + ".csv")
    jpath.write_text(report.to_json())
    cpath.write_text(report_csv(report))
    timing = [
        {"px": c["px"], "py": c["py"], "pz": c["pz"], "decoder": c["decoder"], "wall_time": t}
        for c, t in zip(report.cells, report.timing)
    ]
    prefix.with_name(prefix.name + ".timing.json").write_text(json.dumps(timing, indent=1) + "\n")
    return jpath, cpath


def split_report(report_json: str | Path, out_dir: str | Path) -> list[Path]:
    """Plot-ready CSV per decoder: ``px,py,pz,failure_rate,ci95``."""
    doc = json.loads(Path(report_json).read_text())
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_decoder: dict[str, list[dict]] = {}
    for c in doc["cells"]:
        if c["status"] == "ok":
            by_decoder.setdefault(c["decoder"], []).append(c)
    paths = []
    prov = doc["provenance"]
    for name, cells in by_decoder.items():
        path = out_dir / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"# config_hash={prov['config_hash']} seed={prov['seed']}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["px", "py", "pz", "failure_rate", "ci95"])
            for c in cells:
                w.writerow([_fmt(c["px"]), _fmt(c["py"]), _fmt(c["pz"]), _fmt(c["failure_rate"]), _fmt(c["ci95"])])
        paths.append(path)
    return paths
