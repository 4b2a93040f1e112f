"""Stabilizer and CSS codes: construction, validation, syndromes, file format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gf2
from .gf2 import BinaryMatrix, ShapeError
from .pauli import PauliString

__all__ = [
    "CodeError",
    "StabilizerCode",
    "hypergraph_product",
    "hypergraph_product_code",
    "css_check_matrix",
    "five_qubit_code",
    "syndrome",
    "syndromes",
    "code_params",
    "validate_code",
    "save_code",
    "load_code",
    "code_to_dict",
    "code_from_dict",
]


class CodeError(ValueError):
    """A matrix does not define a valid stabilizer code."""


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """An [[n, k]] stabilizer code given by its (n-k) x 2n check matrix.

    Row ``i`` of ``check`` is the (x | z) image of generator ``g_i``.  Build
    instances through :func:`css_check_matrix`, :func:`five_qubit_code` or
    :func:`code_from_dict`, which validate; the constructor itself does not.
    """

    n: int
    k: int
    check: BinaryMatrix
    hx: BinaryMatrix | None = None
    hz: BinaryMatrix | None = None
    name: str = ""

    @property
    def n_generators(self) -> int:
        return self.check.rows

    @property
    def x_part(self) -> np.ndarray:
        return self.check.bits[:, : self.n]

    @property
    def z_part(self) -> np.ndarray:
        return self.check.bits[:, self.n :]

    def generator(self, i: int) -> PauliString:
        return PauliString.from_vector(self.check.bits[i])

    def generators(self) -> list[PauliString]:
        return [self.generator(i) for i in range(self.n_generators)]

    def generator_supports(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.x_part[i] | self.z_part[i]) for i in range(self.n_generators)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StabilizerCode):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and self.check == other.check
            and self.hx == other.hx
            and self.hz == other.hz
        )

    def __hash__(self) -> int:
        return hash((self.n, self.k, self.check))

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"StabilizerCode([[{self.n},{self.k}]]{label})"


def _commutation_matrix(check: np.ndarray, n: int) -> np.ndarray:
    x = check[:, :n].astype(np.int64)
    z = check[:, n:].astype(np.int64)
    return (x @ z.T + z @ x.T) & 1


def validate_code(check: BinaryMatrix, n: int | None = None, k: int | None = None) -> tuple[int, int]:
    """Check commutation and independence of the generator rows; return (n, k)."""
    if check.cols % 2:
        raise CodeError(f"check matrix must have an even number of columns, got {check.cols}")
    n_phys = check.cols // 2
    if n is not None and n != n_phys:
        raise CodeError(f"n={n} does not match check matrix width {check.cols}")
    comm = _commutation_matrix(check.bits, n_phys)
    if comm.any():
        i, j = np.argwhere(comm)[0]
        raise CodeError(f"generators do not commute (rows {i} and {j})")
    if gf2.rank(check) != check.rows:
        raise CodeError("generators not independent")
    k_actual = n_phys - check.rows
    if k is not None and k != k_actual:
        raise CodeError(f"k={k} does not match n - rank = {k_actual}")
    return n_phys, k_actual


def hypergraph_product(h: BinaryMatrix) -> tuple[BinaryMatrix, BinaryMatrix]:
    """CSS pair from one classical m x n parity-check matrix of full row rank.

    ``H_X = [H (x) I_n | I_m (x) H^T]`` and ``H_Z = [I_n (x) H | H^T (x) I_m]``,
    each acting on ``n**2 + m**2`` qubits.
    """
    m, n = h.shape
    if m >= n:
        raise CodeError(f"parity-check matrix must have fewer rows than columns, got {m}x{n}")
    r = gf2.rank(h)
    if r != m:
        raise CodeError(f"parity-check matrix is rank deficient (rank {r} < {m} rows)")
    ht = gf2.transpose(h)
    hx = gf2.hstack(gf2.kron(h, gf2.identity(n)), gf2.kron(gf2.identity(m), ht))
    hz = gf2.hstack(gf2.kron(gf2.identity(n), h), gf2.kron(ht, gf2.identity(m)))
    return hx, hz


def css_check_matrix(hx: BinaryMatrix, hz: BinaryMatrix, name: str = "") -> StabilizerCode:
    """Block-diagonal check matrix ``[[H_X, 0], [0, H_Z]]`` with validation."""
    if hx.cols != hz.cols:
        raise ShapeError(f"H_X has {hx.cols} columns but H_Z has {hz.cols}")
    if not gf2.mat_mul(hx, gf2.transpose(hz)).is_zero():
        raise CodeError("not a valid CSS pair: H_X H_Z^T != 0")
    n = hx.cols
    top = gf2.hstack(hx, gf2.zeros(hx.rows, n))
    bottom = gf2.hstack(gf2.zeros(hz.rows, n), hz)
    check = gf2.vstack(top, bottom)
    if gf2.rank(check) != check.rows:
        raise CodeError("generators not independent")
    return StabilizerCode(n=n, k=n - check.rows, check=check, hx=hx, hz=hz, name=name)


def hypergraph_product_code(h: BinaryMatrix, name: str = "") -> StabilizerCode:
    hx, hz = hypergraph_product(h)
    return css_check_matrix(hx, hz, name=name or f"hgp({h.rows}x{h.cols})")


FIVE_QUBIT_GENERATORS = ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")


def five_qubit_code() -> StabilizerCode:
    """The perfect [[5, 1]] code."""
    rows = [PauliString.from_string(g).vector for g in FIVE_QUBIT_GENERATORS]
    check = BinaryMatrix(np.array(rows))
    n, k = validate_code(check)
    return StabilizerCode(n=n, k=k, check=check, name="five_qubit")


def syndromes(code: StabilizerCode, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Syndromes of a batch of errors given as (batch, n) x and z arrays."""
    x = np.atleast_2d(np.asarray(x))
    z = np.atleast_2d(np.asarray(z))
    if x.shape[-1] != code.n or z.shape[-1] != code.n:
        raise ShapeError(f"errors act on {x.shape[-1]} qubits, code has n={code.n}")
    # generator (a|b) against error (x|z): a.z + b.x
    s = x.astype(np.int32) @ code.z_part.T.astype(np.int32) + z.astype(np.int32) @ code.x_part.T.astype(np.int32)
    return (s & 1).astype(np.uint8)


def syndrome(code: StabilizerCode, error: PauliString) -> np.ndarray:
    """Bit ``i`` is 1 exactly when ``error`` anticommutes with generator ``i``."""
    if error.n != code.n:
        raise ShapeError(f"error acts on {error.n} qubits, code has n={code.n}")
    return syndromes(code, error.x_bits[None, :], error.z_bits[None, :])[0]


def code_params(code: StabilizerCode) -> tuple[int, int]:
    return code.n, code.k


def code_to_dict(code: StabilizerCode) -> dict:
    out = {"n": code.n, "k": code.k, "check": code.check.to_rows()}
    if code.hx is not None and code.hz is not None:
        out["hx"] = code.hx.to_rows()
        out["hz"] = code.hz.to_rows()
    if code.name:
        out["name"] = code.name
    return out


def code_from_dict(data: dict, validate: bool = True) -> StabilizerCode:
    for key in ("n", "k", "check"):
        if key not in data:
            raise CodeError(f"code file is missing field {key!r}")
    check = BinaryMatrix.from_rows(data["check"])
    hx = BinaryMatrix.from_rows(data["hx"]) if data.get("hx") else None
    hz = BinaryMatrix.from_rows(data["hz"]) if data.get("hz") else None
    n, k = int(data["n"]), int(data["k"])
    if validate:
        validate_code(check, n, k)
        if hx is not None and hz is not None:
            expected = css_check_matrix(hx, hz).check
            if expected != check:
                raise CodeError("hx/hz do not match the check matrix")
    return StabilizerCode(n=n, k=k, check=check, hx=hx, hz=hz, name=data.get("name", ""))


def save_code(code: StabilizerCode, path: str | Path) -> None:
    Path(path).write_text(json.dumps(code_to_dict(code), indent=1) + "\n")


def load_code(path: str | Path, validate: bool = True) -> StabilizerCode:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CodeError(f"malformed code file {path}: {exc}") from None
    return code_from_dict(data, validate=validate)
