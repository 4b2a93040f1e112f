"""Command line entry point: ``mlqec <command> ...``."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import gf2
from .codes import CodeError, code_from_dict, hypergraph_product_code, save_code, validate_code
from .decoders import DecoderInfeasible, code_digest
from .dqn import RewardBudget, RLConfig, learn_code, random_full_rank, write_log
from .gf2 import ShapeError
from .harness import THREADS_ENV, ConfigError, ExperimentConfig, resolve_code, run_sweep, split_report, write_report
from .nn import ModelFormatError, TrainConfig, save_model
from .nn_decoder import DEFAULT_HIDDEN, DEFAULT_SAMPLES, fit_decoder
from .pauli import ChannelParams


class UsageError(ValueError):
    pass


def _channel(args) -> ChannelParams:
    try:
        return ChannelParams(args.px, args.py, args.pz)
    except ValueError as exc:
        raise UsageError(f"field 'channel': {exc}") from None


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def cmd_build_code(args) -> int:
    h = gf2.read_matrix(args.h)
    code = hypergraph_product_code(h, name=args.name or Path(args.h).stem + "_hgp")
    save_code(code, args.out)
    print(f"wrote {args.out}: n={code.n} k={code.k} generators={code.n_generators}")
    return 0


def cmd_validate(args) -> int:
    doc = _read_json(args.code)
    try:
        check = gf2.BinaryMatrix.from_rows(doc["check"])
        n, k = doc["n"], doc["k"]
    except (KeyError, TypeError) as exc:
        raise CodeError(f"code file missing field {exc}") from None
    validate_code(check, n, k)
    code = code_from_dict(doc)
    w = max(len(s) for s in code.generator_supports())
    print(json.dumps({"valid": True, "n": n, "k": k, "generators": code.n_generators, "max_generator_weight": w, "digest": code_digest(code)}))
    return 0


def cmd_train_decoder(args) -> int:
    code = resolve_code(_code_source(args))
    params = _channel(args)
    tc = TrainConfig(
        batch_size=args.batch_size, epochs=args.epochs, learning_rate=args.learning_rate, seed=args.seed
    )
    hidden = tuple(int(v) for v in args.hidden.split(",")) if args.hidden else DEFAULT_HIDDEN
    fit = fit_decoder(code, params, tc, hidden, args.samples, args.labeling)
    save_model(fit.model, args.out)
    print(f"wrote {args.out}: final loss {fit.history[-1]:.6g}")
    return 0


def _code_source(args) -> dict:
    if args.code in ("five_qubit", "hamming74_hgp"):
        return {"builtin": args.code}
    return {"file": args.code}


def cmd_simulate(args) -> int:
    doc = _read_json(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.trials is not None:
        doc["n_trials"] = args.trials
    config = ExperimentConfig.from_dict(doc)
    out = args.out or config.output or Path(args.config).with_suffix("").name + "_report"
    report = run_sweep(config, threads=args.threads, base_dir=Path(args.config).parent)
    jpath, cpath = write_report(report, out)
    skipped = sum(c["status"] != "ok" for c in report.cells)
    print(f"wrote {cpath} and {jpath}: {len(report.cells)} cells, {skipped} skipped")
    return 0


def _rl_config(doc: dict, seed: int | None) -> RLConfig:
    doc = dict(doc)
    budget = doc.pop("reward_budget", {})
    known = {f.name for f in fields(RLConfig)}
    for key in doc:
        if key not in known:
            raise ConfigError(f"field {key!r}: unknown RL configuration key")
    bknown = {f.name for f in fields(RewardBudget)}
    for key in budget:
        if key not in bknown:
            raise ConfigError(f"field 'reward_budget.{key}': unknown key")
    if "hidden" in budget:
        budget["hidden"] = tuple(budget["hidden"])
    if "q_hidden" in doc:
        doc["q_hidden"] = tuple(doc["q_hidden"])
    if seed is not None:
        doc["seed"] = seed
    try:
        return RLConfig(reward_budget=RewardBudget(**budget), **doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"RL configuration: {exc}") from None


def cmd_learn_code(args) -> int:
    params = _channel(args)
    config = _rl_config(_read_json(args.config) if args.config else {}, args.seed)
    if args.h:
        h = gf2.read_matrix(args.h)
    else:
        n1, n2 = (int(v) for v in args.random_h.lower().split("x"))
        h = random_full_rank(n1, n2, np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(7,))))
    result = learn_code(h, params, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    blob = json.dumps({"config": config.to_dict(), "channel": asdict(params), "seed_h": h.to_rows()}, sort_keys=True)
    prov = {"config_hash": hashlib.sha256(blob.encode()).hexdigest(), "seed": config.seed, "channel": asdict(params), "seed_h": h.to_rows()}
    gf2.write_matrix(result.h_final, out / "h_final.txt")
    save_model(result.qnet, out / "qnet.json")
    summary = {
        **prov,
        "initial_reward": result.initial_reward,
        "best_reward": result.best_reward,
        "reward_calls": result.reward_calls,
        "h_final": result.h_final.to_rows(),
        "h_best": None,
    }
    if result.h_best is not None:
        gf2.write_matrix(result.h_best, out / "h_best.txt")
        save_code(hypergraph_product_code(result.h_best, name="learnt_hgp"), out / "learnt_code.json")
        summary["h_best"] = result.h_best.to_rows()
    summary["h_best_differs_from_final"] = summary["h_best"] != summary["h_final"]
    write_log(result, out / "log.jsonl", prov)
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(f"best reward {result.best_reward:.6g} (initial {result.initial_reward:.6g}); files in {out}")
    return 0


def cmd_report(args) -> int:
    paths = split_report(args.report, args.out)
    for p in paths:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlqec", description="Stabilizer codes, decoders and learned code search.")
    sub = p.add_subparsers(dest="command", required=True)

    def channel(sp):
        sp.add_argument("--px", type=float, required=True)
        sp.add_argument("--py", type=float, default=0.0)
        sp.add_argument("--pz", type=float, default=0.0)

    sp = sub.add_parser("build-code", help="hypergraph product of a classical parity-check matrix")
    sp.add_argument("--h", required=True, help="text file of 0/1 rows")
    sp.add_argument("--out", required=True)
    sp.add_argument("--name", default=None)
    sp.set_defaults(func=cmd_build_code)

    sp = sub.add_parser("validate", help="check a code file's invariants")
    sp.add_argument("code")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("train-decoder", help="train a neural decoder and write a checkpoint")
    sp.add_argument("--code", required=True, help="code file or builtin name (five_qubit, hamming74_hgp)")
    channel(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epochs", type=int, default=1000)
    sp.add_argument("--batch-size", type=int, default=100)
    sp.add_argument("--learning-rate", type=float, default=0.01)
    sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sp.add_argument("--hidden", default=None, help="comma separated hidden widths")
    sp.add_argument("--labeling", default="auto", choices=["auto", "exact-map", "empirical-map"])
    sp.set_defaults(func=cmd_train_decoder)

    sp = sub.add_parser("simulate", help="run an experiment config and write CSV + JSON reports")
    sp.add_argument("config")
    sp.add_argument("--seed", type=int, default=None, help="overrides the config's master seed")
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--out", default=None, help="output prefix")
    sp.add_argument("--threads", type=int, default=None, help=f"worker processes (default ${THREADS_ENV} or 1)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("learn-code", help="search parity-check matrices with a DQN agent")
    start = sp.add_mutually_exclusive_group(required=True)
    start.add_argument("--h", help="seed parity-check matrix")
    start.add_argument("--random-h", metavar="N1xN2", help="random full-rank seed matrix of this shape")
    channel(sp)
    sp.add_argument("--config", default=None, help="JSON RL configuration overrides")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_learn_code)

    sp = sub.add_parser("report", help="split a JSON report into one CSV per decoder")
    sp.add_argument("report")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_report)
    return p


_ERROR_KINDS = (
    (ConfigError, "config"),
    (UsageError, "usage"),
    (DecoderInfeasible, "infeasible"),
    (CodeError, "code"),
    (ShapeError, "shape"),
    (ModelFormatError, "model"),
    (FileNotFoundError, "file"),
    (OSError, "io"),
    (ValueError, "value"),
)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parseable line
        kind = next((k for cls, k in _ERROR_KINDS if isinstance(exc, cls)), "internal")
        msg = " ".join(str(exc).split())
        print(f"error: {kind}: {msg}", file=sys.stderr)
        return 2 if kind in ("config", "usage") else 1


if __name__ == "__main__":
    sys.exit(main())
