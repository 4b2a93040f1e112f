"""Pauli strings modulo phase and the asymmetric depolarizing channel."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .gf2 import ShapeError

__all__ = [
    "PauliString",
    "ChannelParams",
    "LETTERS",
    "weight",
    "symplectic_product",
    "multiply",
    "sample_error",
    "sample_errors",
    "error_probability",
    "error_probabilities",
    "all_paulis",
    "paulis_in_order",
]

LETTERS = "IXYZ"
# per-qubit (x, z) pairs in letter order I < X < Y < Z
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}


@dataclass(frozen=True)
class ChannelParams:
    """Per-qubit probabilities of X, Y and Z errors."""

    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self):
        for name in ("p_x", "p_y", "p_z"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v} is not a probability")
        if self.p_x + self.p_y + self.p_z > 1.0 + 1e-12:
            raise ValueError(f"p_x + p_y + p_z = {self.p_x + self.p_y + self.p_z} exceeds 1")

    @property
    def p_i(self) -> float:
        return max(0.0, 1.0 - self.p_x - self.p_y - self.p_z)

    @property
    def letter_probs(self) -> np.ndarray:
        """Probabilities of I, X, Y, Z in that order."""
        return np.array([self.p_i, self.p_x, self.p_y, self.p_z])

    @classmethod
    def from_ratios(cls, p_x: float, ratio_y: float, ratio_z: float) -> "ChannelParams":
        return cls(p_x, ratio_y * p_x, ratio_z * p_x)

    @classmethod
    def symmetric(cls, q: float) -> "ChannelParams":
        return cls(q, q, q)


class PauliString:
    """An n-qubit Pauli operator stored as its (x | z) binary image."""

    __slots__ = ("_x", "_z")

    def __init__(self, x_bits, z_bits):
        x = np.array(x_bits, dtype=np.uint8).reshape(-1)
        z = np.array(z_bits, dtype=np.uint8).reshape(-1)
        if x.shape != z.shape:
            raise ShapeError(f"x and z parts differ in length: {x.size} vs {z.size}")
        if np.any(x > 1) or np.any(z > 1):
            raise ValueError("bits must be 0 or 1")
        x.setflags(write=False)
        z.setflags(write=False)
        self._x = x
        self._z = z

    @property
    def n(self) -> int:
        return self._x.size

    @property
    def x_bits(self) -> np.ndarray:
        return self._x

    @property
    def z_bits(self) -> np.ndarray:
        return self._z

    @property
    def vector(self) -> np.ndarray:
        """Length-2n vector, x part first."""
        return np.concatenate([self._x, self._z])

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def from_string(cls, text: str) -> "PauliString":
        try:
            pairs = [_LETTER_BITS[c] for c in text.upper()]
        except KeyError as exc:
            raise ValueError(f"invalid Pauli letter {exc.args[0]!r} in {text!r}") from None
        if not pairs:
            return cls(np.zeros(0, np.uint8), np.zeros(0, np.uint8))
        x, z = zip(*pairs)
        return cls(x, z)

    @classmethod
    def from_vector(cls, vec) -> "PauliString":
        vec = np.asarray(vec, dtype=np.uint8).reshape(-1)
        if vec.size % 2:
            raise ShapeError(f"symplectic vector must have even length, got {vec.size}")
        n = vec.size // 2
        return cls(vec[:n], vec[n:])

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        """Weight-one operator ``letter`` on ``qubit`` (0-based)."""
        chars = ["I"] * n
        chars[qubit] = letter
        return cls.from_string("".join(chars))

    def __str__(self) -> str:
        return "".join(_BITS_LETTER[(int(a), int(b))] for a, b in zip(self._x, self._z))

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return np.array_equal(self._x, other._x) and np.array_equal(self._z, other._z)

    def __hash__(self) -> int:
        return hash((self._x.tobytes(), self._z.tobytes()))

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    @property
    def weight(self) -> int:
        return weight(self)


def weight(p: PauliString) -> int:
    return int(np.count_nonzero(p.x_bits | p.z_bits))


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Product modulo phase (component-wise XOR)."""
    if p.n != q.n:
        raise ShapeError(f"Pauli strings act on {p.n} and {q.n} qubits")
    return PauliString(p.x_bits ^ q.x_bits, p.z_bits ^ q.z_bits)


def symplectic_product(p: PauliString, q: PauliString) -> int:
    """0 if ``p`` and ``q`` commute, 1 if they anticommute."""
    if p.n != q.n:
        raise ShapeError(f"Pauli strings act on {p.n} and {q.n} qubits")
    return int((np.dot(p.x_bits, q.z_bits) + np.dot(p.z_bits, q.x_bits)) & 1)


def sample_errors(params: ChannelParams, n: int, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` i.i.d. channel errors; returns (x, z) arrays of shape (size, n)."""
    u = rng.random((size, n))
    c1 = params.p_x
    c2 = c1 + params.p_y
    c3 = c2 + params.p_z
    is_x = u < c1
    is_y = (u >= c1) & (u < c2)
    is_z = (u >= c2) & (u < c3)
    x = (is_x | is_y).astype(np.uint8)
    z = (is_y | is_z).astype(np.uint8)
    return x, z


def sample_error(params: ChannelParams, n: int, rng: np.random.Generator) -> PauliString:
    x, z = sample_errors(params, n, 1, rng)
    return PauliString(x[0], z[0])


def _letter_codes(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    # 0=I, 1=X, 2=Y, 3=Z
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    return np.where(x == 1, 1 + z, 3 * z)


def error_probabilities(x: np.ndarray, z: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Channel probability of each row of a batch of errors."""
    probs = params.letter_probs[_letter_codes(x, z)]
    return np.prod(probs, axis=-1)


def error_probability(p: PauliString, params: ChannelParams) -> float:
    return float(error_probabilities(p.x_bits, p.z_bits, params))


def all_paulis(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Every n-qubit Pauli in lexicographic order (I<X<Y<Z, qubit 0 most significant).

    Returns (x, z) arrays of shape (4**n, n).
    """
    idx = np.arange(4**n)
    digits = (idx[:, None] // 4 ** np.arange(n - 1, -1, -1)[None, :]) % 4
    x = ((digits == 1) | (digits == 2)).astype(np.uint8)
    z = ((digits == 2) | (digits == 3)).astype(np.uint8)
    return x, z


def paulis_in_order(n: int, max_weight: int | None = None) -> Iterator[PauliString]:
    """Pauli strings by increasing weight, lexicographic within each weight."""
    from itertools import combinations, product

    top = n if max_weight is None else min(n, max_weight)
    for w in range(top + 1):
        # lexicographic over full strings: iterate supports and letters jointly
        block = []
        for support in combinations(range(n), w):
            for letters in product("XYZ", repeat=w):
                chars = ["I"] * n
                for q, c in zip(support, letters):
                    chars[q] = c
                block.append("".join(chars))
        for s in sorted(block, key=lambda s: [LETTERS.index(c) for c in s]):
            yield PauliString.from_string(s)
