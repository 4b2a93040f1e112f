"""Table decoders, exact MAP tables and the small-set-flip decoder.

Enumeration order used for every tie-break in this module: increasing weight,
then lexicographic over per-qubit letters with I < X < Y < Z and qubit 0 most
significant.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from pathlib import Path

import numpy as np

from .codes import StabilizerCode, syndromes
from .gf2 import ShapeError, pack_rows
from .pauli import ChannelParams, PauliString, all_paulis, error_probabilities

__all__ = [
    "DecoderInfeasible",
    "SyndromeTable",
    "LOOKUP_GUARD",
    "EXHAUSTIVE_GUARD",
    "SSF_WEIGHT_GUARD",
    "syndrome_index",
    "build_lookup_table",
    "build_map_table",
    "table_decode",
    "exact_failure_rate",
    "SmallSetFlip",
    "small_set_flip",
    "save_table",
    "load_table",
    "code_digest",
]

LOOKUP_GUARD = 20  # max n - k for a full syndrome table
EXHAUSTIVE_GUARD = 10  # max n for 4**n enumeration
SSF_WEIGHT_GUARD = 12  # max generator weight for small-set-flip


class DecoderInfeasible(RuntimeError):
    """A feasibility guard was exceeded."""


def code_digest(code: StabilizerCode) -> str:
    return hashlib.sha256("\n".join(code.check.to_rows()).encode()).hexdigest()[:16]


def syndrome_index(s: np.ndarray) -> np.ndarray | int:
    """Integer label of a syndrome (first generator is the most significant bit)."""
    s = np.asarray(s, dtype=np.int64)
    m = s.shape[-1]
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    out = s @ weights
    return int(out) if out.ndim == 0 else out


def _index_to_bits(idx: int, m: int) -> str:
    return format(idx, f"0{m}b")


@dataclass(frozen=True, eq=False)
class SyndromeTable:
    """Total map from each syndrome to a correction, stored densely by syndrome index."""

    code: StabilizerCode
    x: np.ndarray
    z: np.ndarray
    policy: str
    params: ChannelParams | None = None

    def __post_init__(self):
        self.x.setflags(write=False)
        self.z.setflags(write=False)

    @property
    def size(self) -> int:
        return self.x.shape[0]

    def entry(self, s) -> PauliString:
        return table_decode(self, s)

    def __call__(self, s) -> PauliString:
        return table_decode(self, s)

    def decode_batch(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = syndrome_index(np.atleast_2d(s))
        return self.x[idx], self.z[idx]

    def items(self):
        m = self.code.n_generators
        for i in range(self.size):
            yield _index_to_bits(i, m), PauliString(self.x[i], self.z[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SyndromeTable):
            return NotImplemented
        return (
            self.code == other.code
            and self.policy == other.policy
            and self.params == other.params
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )


def _weight_block(n: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """All weight-``w`` errors on ``n`` qubits in lexicographic order."""
    supports = list(combinations(range(n), w))
    letters = list(product((1, 2, 3), repeat=w))
    digits = np.zeros((len(supports) * len(letters), n), dtype=np.int8)
    row = 0
    for sup in supports:
        block = np.array(letters, dtype=np.int8).reshape(len(letters), w)
        digits[row : row + len(letters), list(sup)] = block
        row += len(letters)
    order = np.lexsort(digits.T[::-1])
    digits = digits[order]
    x = ((digits == 1) | (digits == 2)).astype(np.uint8)
    z = ((digits == 2) | (digits == 3)).astype(np.uint8)
    return x, z


def build_lookup_table(code: StabilizerCode, guard: int = LOOKUP_GUARD) -> SyndromeTable:
    """Minimum-weight syndrome table; the first error in enumeration order claims each syndrome."""
    m = code.n_generators
    if m > guard:
        raise DecoderInfeasible(f"table infeasible: n-k={m} exceeds lookup guard {guard}")
    size = 1 << m
    filled = np.zeros(size, dtype=bool)
    tx = np.zeros((size, code.n), dtype=np.uint8)
    tz = np.zeros((size, code.n), dtype=np.uint8)
    remaining = size
    for w in range(code.n + 1):
        if w == 0:
            bx = np.zeros((1, code.n), np.uint8)
            bz = bx.copy()
        else:
            bx, bz = _weight_block(code.n, w)
        idx = syndrome_index(syndromes(code, bx, bz))
        uniq, first = np.unique(idx, return_index=True)
        new = ~filled[uniq]
        uniq, first = uniq[new], first[new]
        tx[uniq] = bx[first]
        tz[uniq] = bz[first]
        filled[uniq] = True
        remaining -= uniq.size
        if remaining == 0:
            break
    if remaining:
        raise RuntimeError(f"{remaining} syndromes unreachable; check matrix is not a valid code")
    return SyndromeTable(code, tx, tz, "min-weight")


def build_map_table(code: StabilizerCode, params: ChannelParams, guard: int = EXHAUSTIVE_GUARD) -> SyndromeTable:
    """Most probable error for every syndrome, by exhaustive enumeration."""
    if code.n > guard:
        raise DecoderInfeasible(f"exact MAP infeasible: n={code.n} exceeds enumeration guard {guard}")
    ax, az = all_paulis(code.n)
    prob = error_probabilities(ax, az, params)
    wt = np.count_nonzero(ax | az, axis=1)
    idx = syndrome_index(syndromes(code, ax, az))
    lex = np.arange(ax.shape[0])
    # primary key syndrome, then -prob, weight, lexicographic rank
    order = np.lexsort((lex, wt, -prob, idx))
    sorted_idx = idx[order]
    first = order[np.r_[True, sorted_idx[1:] != sorted_idx[:-1]]]
    size = 1 << code.n_generators
    if first.size != size:
        raise RuntimeError("some syndromes are unreachable; check matrix is not a valid code")
    return SyndromeTable(code, ax[first].copy(), az[first].copy(), "exact-map", params)


def table_decode(table: SyndromeTable, s) -> PauliString:
    s = np.asarray(s, dtype=np.uint8).reshape(-1)
    if s.size != table.code.n_generators:
        raise ShapeError(f"syndrome has length {s.size}, code has {table.code.n_generators} generators")
    i = syndrome_index(s)
    return PauliString(table.x[i], table.z[i])


def exact_failure_rate(
    table: SyndromeTable, code: StabilizerCode, params: ChannelParams, guard: int = EXHAUSTIVE_GUARD
) -> float:
    """``Pr(correction != error)`` computed without sampling.

    An error is corrected exactly when it is the table entry for its own
    syndrome, so the success probability is the total channel mass of the
    entries.
    """
    if code.n > guard:
        raise DecoderInfeasible(f"exact evaluation infeasible: n={code.n} exceeds guard {guard}")
    if table.code != code:
        raise ValueError("table was built for a different code")
    success = float(np.sum(error_probabilities(table.x, table.z, params)))
    return max(0.0, 1.0 - success)


class SmallSetFlip:
    """Greedy decoder flipping Pauli patterns supported on a single generator.

    Every candidate pattern (all non-identity patterns on the support of one
    generator) is precomputed with its syndrome effect.  Candidates are held in
    one array sorted by (pattern weight, generator row, lexicographic pattern);
    a pass picks the first candidate attaining the smallest residual weight.
    Pattern weight precedes generator order so that a lighter correction wins
    any tie in syndrome reduction.

    With ``css_restricted`` on a CSS code, X-type generators only propose
    Z-only patterns and Z-type generators only X-only patterns.
    """

    def __init__(self, code: StabilizerCode, weight_guard: int = SSF_WEIGHT_GUARD, css_restricted: bool = False):
        supports = code.generator_supports()
        w_max = max(len(s) for s in supports)
        if w_max > weight_guard:
            raise DecoderInfeasible(f"generator weight too large: {w_max} exceeds small-set-flip guard {weight_guard}")
        if css_restricted and code.hx is None:
            raise ValueError("css_restricted mode needs a CSS code")
        self.code = code
        self.css_restricted = css_restricted
        m = code.n_generators

        # packed syndrome effect of each single-qubit letter: shape (n, 4, words)
        letters_x = np.array([0, 1, 1, 0], np.uint8)
        letters_z = np.array([0, 0, 1, 1], np.uint8)
        single = np.zeros((code.n, 4, m), np.uint8)
        for q in range(code.n):
            ex = np.zeros((4, code.n), np.uint8)
            ez = np.zeros((4, code.n), np.uint8)
            ex[:, q] = letters_x
            ez[:, q] = letters_z
            single[q] = syndromes(code, ex, ez)
        self._words = (m + 63) // 64
        single_packed = pack_rows(single.reshape(-1, m)).reshape(code.n, 4, self._words)

        eff_blocks, wt_blocks, gen_blocks, digit_blocks = [], [], [], []
        for g, sup in enumerate(supports):
            w = len(sup)
            if css_restricted:
                allowed = (0, 3) if g < code.hx.rows else (0, 1)
            else:
                allowed = (0, 1, 2, 3)
            digits = np.array(list(product(allowed, repeat=w)), dtype=np.int8).reshape(-1, w)[1:]
            wt = np.count_nonzero(digits, axis=1)
            order = np.argsort(wt, kind="stable")  # product() is already lexicographic
            digits, wt = digits[order], wt[order]
            eff = np.zeros((digits.shape[0], self._words), np.uint64)
            for j, q in enumerate(sup):
                eff ^= single_packed[q, digits[:, j].astype(np.int64)]
            eff_blocks.append(eff)
            wt_blocks.append(wt)
            gen_blocks.append(np.full(wt.size, g, np.int32))
            full = np.zeros((digits.shape[0], code.n), np.int8)
            full[:, sup] = digits
            digit_blocks.append(full)

        wt_all = np.concatenate(wt_blocks)
        gen_all = np.concatenate(gen_blocks)
        within = np.concatenate([np.arange(b.size) for b in wt_blocks])
        order = np.lexsort((within, gen_all, wt_all))
        self._effects = np.concatenate(eff_blocks)[order]
        self._weights = wt_all[order]
        self._gens = gen_all[order]
        digits_all = np.concatenate(digit_blocks)[order]
        self._cand_x = ((digits_all == 1) | (digits_all == 2)).astype(np.uint8)
        self._cand_z = ((digits_all == 2) | (digits_all == 3)).astype(np.uint8)
        self._memo: dict[bytes, tuple[bytes, bytes]] = {}

    @property
    def n_candidates(self) -> int:
        return self._effects.shape[0]

    def decode(self, s, max_passes: int | None = None, trace: list | None = None) -> PauliString:
        """Greedy decoding of one syndrome.

        If ``trace`` is a list, the residual syndrome weight is appended before
        the first pass and after every applied flip.
        """
        s = np.asarray(s, dtype=np.uint8).reshape(-1)
        if s.size != self.code.n_generators:
            raise ShapeError(f"syndrome has length {s.size}, code has {self.code.n_generators} generators")
        residual = pack_rows(s[None, :])[0]
        res_w = int(np.bitwise_count(residual).sum())
        ex = np.zeros(self.code.n, np.uint8)
        ez = np.zeros(self.code.n, np.uint8)
        if trace is not None:
            trace.append(res_w)
        passes = 0
        while res_w > 0 and (max_passes is None or passes < max_passes):
            new_w = np.bitwise_count(self._effects ^ residual).sum(axis=1, dtype=np.int64)
            best = int(np.argmin(new_w))
            if new_w[best] >= res_w:
                break
            residual = residual ^ self._effects[best]
            res_w = int(new_w[best])
            ex ^= self._cand_x[best]
            ez ^= self._cand_z[best]
            passes += 1
            if trace is not None:
                trace.append(res_w)
        return PauliString(ex, ez)

    def __call__(self, s) -> PauliString:
        return self.decode(s)

    def decode_batch(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = np.atleast_2d(np.asarray(s, dtype=np.uint8))
        out_x = np.zeros((s.shape[0], self.code.n), np.uint8)
        out_z = np.zeros_like(out_x)
        for i, row in enumerate(s):
            key = row.tobytes()
            hit = self._memo.get(key)
            if hit is None:
                e = self.decode(row)
                hit = (e.x_bits.tobytes(), e.z_bits.tobytes())
                if len(self._memo) < 1 << 16:
                    self._memo[key] = hit
            out_x[i] = np.frombuffer(hit[0], np.uint8)
            out_z[i] = np.frombuffer(hit[1], np.uint8)
        return out_x, out_z


@lru_cache(maxsize=8)
def _ssf_for(code: StabilizerCode, weight_guard: int, css_restricted: bool) -> SmallSetFlip:
    return SmallSetFlip(code, weight_guard, css_restricted)


def small_set_flip(
    code: StabilizerCode,
    s,
    max_passes: int | None = None,
    weight_guard: int = SSF_WEIGHT_GUARD,
    css_restricted: bool = False,
) -> PauliString:
    return _ssf_for(code, weight_guard, css_restricted).decode(s, max_passes)


def _params_to_dict(p: ChannelParams | None):
    return None if p is None else {"px": p.p_x, "py": p.p_y, "pz": p.p_z}


def save_table(table: SyndromeTable, path: str | Path) -> None:
    doc = {
        "policy": table.policy,
        "params": _params_to_dict(table.params),
        "n": table.code.n,
        "k": table.code.k,
        "code_digest": code_digest(table.code),
        "entries": {s: str(e) for s, e in table.items()},
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_table(path: str | Path, code: StabilizerCode) -> SyndromeTable:
    doc = json.loads(Path(path).read_text())
    if doc.get("code_digest") != code_digest(code):
        raise ValueError("table was saved for a different code")
    m = code.n_generators
    size = 1 << m
    entries = doc["entries"]
    if len(entries) != size:
        raise ValueError(f"table has {len(entries)} entries, expected {size}")
    tx = np.zeros((size, code.n), np.uint8)
    tz = np.zeros_like(tx)
    for key, letters in entries.items():
        if len(key) != m:
            raise ValueError(f"syndrome key {key!r} has wrong length")
        e = PauliString.from_string(letters)
        if e.n != code.n:
            raise ValueError(f"entry {letters!r} has wrong length")
        i = int(key, 2)
        tx[i], tz[i] = e.x_bits, e.z_bits
    p = doc.get("params")
    params = None if p is None else ChannelParams(p["px"], p["py"], p["pz"])
    return SyndromeTable(code, tx, tz, doc["policy"], params)
