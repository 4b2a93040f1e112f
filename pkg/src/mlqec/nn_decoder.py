"""Neural syndrome decoder: labelled datasets, training, thresholding, evaluation."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import nn
from .codes import StabilizerCode, syndromes
from .decoders import EXHAUSTIVE_GUARD, DecoderInfeasible, build_map_table, code_digest
from .gf2 import ShapeError
from .nn import MlpModel, TrainConfig
from .pauli import ChannelParams, PauliString, error_probabilities, sample_errors

__all__ = [
    "DecoderDataset",
    "DecoderFit",
    "NeuralDecoder",
    "EvalResult",
    "DEFAULT_HIDDEN",
    "DEFAULT_SAMPLES",
    "generate_dataset",
    "encode_syndrome",
    "encode_error",
    "decode_output",
    "fit_decoder",
    "train_decoder",
    "nn_decode",
    "evaluate_decoder",
    "save_dataset",
    "load_dataset",
]

DEFAULT_HIDDEN = (100,) * 5
DEFAULT_SAMPLES = 5000


@dataclass(frozen=True, eq=False)
class DecoderDataset:
    """Syndrome / target-error pairs; row ``i`` of each array is one sample."""

    code: StabilizerCode
    params: ChannelParams
    syndromes: np.ndarray
    x: np.ndarray
    z: np.ndarray
    labeling: str
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.syndromes.shape[0]

    def inputs(self) -> np.ndarray:
        return self.syndromes.astype(np.float64)

    def targets(self) -> np.ndarray:
        return np.hstack([self.x, self.z]).astype(np.float64)

    def pairs(self):
        for s, x, z in zip(self.syndromes, self.x, self.z):
            yield s, PauliString(x, z)


def _lex_key(x: np.ndarray, z: np.ndarray) -> tuple:
    return tuple(np.where(x == 1, 1 + z, 3 * z).tolist())


def _empirical_labels(code: StabilizerCode, params: ChannelParams, s: np.ndarray, x: np.ndarray, z: np.ndarray):
    """Modal sampled error per syndrome; ties by probability, weight, then lexicographic order."""
    counts: dict[bytes, dict[bytes, int]] = defaultdict(lambda: defaultdict(int))
    rows = {}
    for i in range(s.shape[0]):
        sk = s[i].tobytes()
        ek = x[i].tobytes() + z[i].tobytes()
        counts[sk][ek] += 1
        rows.setdefault(ek, i)
    label_of = {}
    for sk, errs in counts.items():
        def rank(ek):
            i = rows[ek]
            prob = float(error_probabilities(x[i], z[i], params))
            wt = int(np.count_nonzero(x[i] | z[i]))
            return (-errs[ek], -prob, wt, _lex_key(x[i], z[i]))

        label_of[sk] = rows[min(errs, key=rank)]
    pick = np.array([label_of[s[i].tobytes()] for i in range(s.shape[0])], dtype=np.int64)
    return x[pick].copy(), z[pick].copy()


def generate_dataset(
    code: StabilizerCode,
    params: ChannelParams,
    n_samples: int,
    labeling: str = "auto",
    rng: np.random.Generator | None = None,
) -> DecoderDataset:
    """Sample channel errors and label each syndrome with a most-likely error.

    ``labeling`` is ``"exact-map"`` (exhaustive table, small codes only),
    ``"empirical-map"`` (modal error among the samples sharing a syndrome) or
    ``"auto"``, which picks exact-map whenever the code is small enough.  One
    pair is emitted per draw, so repeated syndromes keep their natural
    frequency.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if labeling == "auto":
        labeling = "exact-map" if code.n <= EXHAUSTIVE_GUARD else "empirical-map"
    if labeling == "exact-map" and code.n > EXHAUSTIVE_GUARD:
        raise DecoderInfeasible(
            f"exact MAP labelling infeasible for n={code.n} (guard {EXHAUSTIVE_GUARD}); use labeling='empirical-map'"
        )
    if labeling not in ("exact-map", "empirical-map"):
        raise ValueError(f"unknown labeling {labeling!r}")
    rng = rng if rng is not None else np.random.default_rng()
    ex, ez = sample_errors(params, code.n, n_samples, rng)
    s = syndromes(code, ex, ez)
    if labeling == "exact-map":
        table = build_map_table(code, params)
        lx, lz = table.decode_batch(s)
        lx, lz = lx.copy(), lz.copy()
    else:
        lx, lz = _empirical_labels(code, params, s, ex, ez)
    meta = {"samples": "raw channel draws", "n_samples": n_samples}
    return DecoderDataset(code, params, s, lx, lz, labeling, meta)


def encode_syndrome(s) -> np.ndarray:
    return np.asarray(s, dtype=np.float64)


def encode_error(e: PauliString) -> np.ndarray:
    return np.concatenate([e.x_bits, e.z_bits]).astype(np.float64)


def _threshold(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bits = (y > 0.5).astype(np.uint8)
    n = bits.shape[-1] // 2
    return bits[..., :n], bits[..., n:]


def decode_output(y) -> PauliString:
    """Threshold a length-2n network output; exactly 0.5 reads as 0."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size % 2:
        raise ShapeError(f"output length {y.size} is not 2n")
    x, z = _threshold(y)
    return PauliString(x, z)


def nn_decode(model: MlpModel, s) -> PauliString:
    s = np.asarray(s).reshape(-1)
    if s.size != model.n_inputs:
        raise ShapeError(f"syndrome has length {s.size}, model expects {model.n_inputs}")
    return decode_output(nn.forward(model, encode_syndrome(s)))


class NeuralDecoder:
    """Callable wrapper around a trained model with a vectorised batch path."""

    def __init__(self, model: MlpModel):
        self.model = model

    def __call__(self, s) -> PauliString:
        return nn_decode(self.model, s)

    def decode_batch(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _threshold(nn.forward(self.model, np.atleast_2d(s).astype(np.float64)))


@dataclass
class DecoderFit:
    model: MlpModel
    history: list[float]
    dataset: DecoderDataset

    @property
    def decoder(self) -> NeuralDecoder:
        return NeuralDecoder(self.model)


def fit_decoder(
    code: StabilizerCode,
    params: ChannelParams,
    train_config: TrainConfig = TrainConfig(),
    hidden: Sequence[int] = DEFAULT_HIDDEN,
    n_samples: int = DEFAULT_SAMPLES,
    labeling: str = "auto",
) -> DecoderFit:
    """Generate a labelled dataset and train a sigmoid-output MLP on it with BCE."""
    data_seed, init_seed = np.random.SeedSequence(train_config.seed).spawn(2)
    dataset = generate_dataset(code, params, n_samples, labeling, np.random.default_rng(data_seed))
    sizes = (code.n_generators, *hidden, 2 * code.n)
    model = nn.init_model(sizes, np.random.default_rng(init_seed), "sigmoid")
    model, history = nn.train(model, (dataset.inputs(), dataset.targets()), train_config, loss="bce")
    return DecoderFit(model, history, dataset)


def train_decoder(
    code: StabilizerCode,
    params: ChannelParams,
    train_config: TrainConfig = TrainConfig(),
    hidden: Sequence[int] = DEFAULT_HIDDEN,
    n_samples: int = DEFAULT_SAMPLES,
    labeling: str = "auto",
) -> MlpModel:
    return fit_decoder(code, params, train_config, hidden, n_samples, labeling).model


class EvalResult(NamedTuple):
    failure_rate: float
    ci95: float


def _decode_rows(decode_fn, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    batch = getattr(decode_fn, "decode_batch", None)
    if batch is not None:
        return batch(s)
    out = [decode_fn(row) for row in s]
    return np.array([e.x_bits for e in out]), np.array([e.z_bits for e in out])


def count_failures(
    decode_fn: Callable, code: StabilizerCode, params: ChannelParams, n_trials: int, rng: np.random.Generator, chunk: int = 10000
) -> int:
    """Number of trials where the correction differs from the channel error."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    failures = 0
    done = 0
    while done < n_trials:
        size = min(chunk, n_trials - done)
        ex, ez = sample_errors(params, code.n, size, rng)
        cx, cz = _decode_rows(decode_fn, syndromes(code, ex, ez))
        wrong = np.any(cx != ex, axis=1) | np.any(cz != ez, axis=1)
        failures += int(np.count_nonzero(wrong))
        done += size
    return failures


def ci95(failures: int, n_trials: int) -> float:
    p = failures / n_trials
    return 1.96 * math.sqrt(p * (1.0 - p) / n_trials)


def evaluate_decoder(
    decode_fn: Callable, code: StabilizerCode, params: ChannelParams, n_trials: int, rng: np.random.Generator
) -> EvalResult:
    """Monte Carlo estimate of ``Pr(correction != error)`` with a normal-approximation 95% half-width."""
    failures = count_failures(decode_fn, code, params, n_trials, rng)
    return EvalResult(failures / n_trials, ci95(failures, n_trials))


def save_dataset(dataset: DecoderDataset, path: str | Path) -> None:
    header = {
        "header": True,
        "code_digest": code_digest(dataset.code),
        "n": dataset.code.n,
        "k": dataset.code.k,
        "channel": {"px": dataset.params.p_x, "py": dataset.params.p_y, "pz": dataset.params.p_z},
        "labeling": dataset.labeling,
        **dataset.meta,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for s, e in dataset.pairs():
            fh.write(json.dumps({"s": "".join(map(str, s.tolist())), "e": str(e)}) + "\n")


def load_dataset(path: str | Path, code: StabilizerCode) -> DecoderDataset:
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"empty dataset file {path}")
    header = json.loads(lines[0])
    if not header.get("header"):
        raise ValueError("dataset file has no header record")
    if header.get("code_digest") != code_digest(code):
        raise ValueError("dataset was generated for a different code")
    ch = header["channel"]
    params = ChannelParams(ch["px"], ch["py"], ch["pz"])
    s_rows, x_rows, z_rows = [], [], []
    for ln in lines[1:]:
        rec = json.loads(ln)
        e = PauliString.from_string(rec["e"])
        s_rows.append([int(c) for c in rec["s"]])
        x_rows.append(e.x_bits)
        z_rows.append(e.z_bits)
    meta = {k: v for k, v in header.items() if k not in ("header", "code_digest", "n", "k", "channel", "labeling")}
    return DecoderDataset(
        code, params, np.array(s_rows, np.uint8), np.array(x_rows, np.uint8), np.array(z_rows, np.uint8), header["labeling"], meta
    )
