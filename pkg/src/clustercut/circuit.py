"""Circuits, gates and classical post-processing functions.

A QC algorithm is a circuit acting on |0...0> followed by a computational-basis
measurement of every qubit and a classical function ``f`` of the outcome bits.
Qubit 0 is the most significant bit of every bitstring index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from clustercut.errors import CircuitParseError

_SQ2 = 1.0 / np.sqrt(2.0)

NAMED = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "cnot": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}
ROTATIONS = ("rx", "ry", "rz")
EXPLICIT = ("u1", "u2")

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": NAMED["x"],
    "Y": NAMED["y"],
    "Z": NAMED["z"],
}


def rotation(kind: str, angle: float) -> np.ndarray:
    """exp(-i angle P / 2) for P the Pauli named by ``kind``."""
    p = PAULI[kind[1].upper()]
    return np.cos(angle / 2) * PAULI["I"] - 1j * np.sin(angle / 2) * p


def arity(kind: str) -> int | None:
    if kind in ("cnot", "cz", "swap", "u2"):
        return 2
    if kind in NAMED or kind in ROTATIONS or kind == "u1":
        return 1
    return None


@dataclass(frozen=True, eq=False)
class Gate:
    """A 1- or 2-qubit gate. Construction never raises; use :func:`validate`."""

    kind: str
    targets: tuple
    angle: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", str(self.kind).lower())
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.matrix is not None:
            object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))

    @property
    def unitary(self) -> np.ndarray:
        if self.kind in NAMED:
            return NAMED[self.kind]
        if self.kind in ROTATIONS:
            return rotation(self.kind, float(self.angle))
        return self.matrix

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.kind, self.targets, self.angle) != (other.kind, other.targets, other.angle):
            return False
        if self.matrix is None or other.matrix is None:
            return self.matrix is None and other.matrix is None
        return np.array_equal(self.matrix, other.matrix)

    __hash__ = object.__hash__


def gate(kind: str, *targets: int, angle: float | None = None) -> Gate:
    return Gate(kind, targets, angle=angle)


def unitary_gate(matrix, *targets: int) -> Gate:
    m = np.asarray(matrix, dtype=complex)
    return Gate("u1" if m.shape == (2, 2) else "u2", targets, matrix=m)


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    def __len__(self):
        return len(self.gates)

    def then(self, *gates: Gate) -> "Circuit":
        return Circuit(self.n, self.gates + tuple(gates), self.name)


@dataclass
class ValidationReport:
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.problems)


def _check_gate(i: int, g, n: int, out: list) -> None:
    where = f"gate {i}"
    kind = getattr(g, "kind", None)
    want = arity(kind) if isinstance(kind, str) else None
    if want is None:
        out.append(f"{where}: unknown kind {kind!r}")
    targets = tuple(getattr(g, "targets", ()) or ())
    if len(targets) == 0 or len(targets) > 2:
        out.append(f"{where}: {len(targets)} targets (1 or 2 allowed)")
    elif want is not None and len(targets) != want:
        out.append(f"{where}: arity mismatch ({kind} on {len(targets)} qubits)")
    if len(set(targets)) != len(targets):
        out.append(f"{where}: duplicate targets {targets}")
    for t in targets:
        if not isinstance(t, (int, np.integer)) or not 0 <= t < n:
            out.append(f"{where}: target {t} out of range [0, {n})")
    if kind in ROTATIONS:
        a = getattr(g, "angle", None)
        if a is None or not np.isfinite(a):
            out.append(f"{where}: rotation needs a finite angle")
    if kind in EXPLICIT:
        m = getattr(g, "matrix", None)
        size = 2 if kind == "u1" else 4
        if m is None or np.shape(m) != (size, size):
            out.append(f"{where}: {kind} needs a {size}x{size} matrix")
        elif not np.all(np.isfinite(m)):
            out.append(f"{where}: matrix has non-finite entries")
        elif not np.allclose(m @ np.conj(m).T, np.eye(size), rtol=0, atol=1e-10):
            out.append(f"{where}: non-unitary matrix")


def validate(c) -> ValidationReport:
    """List every broken invariant of ``c``; never raises."""
    report = ValidationReport()
    try:
        n = c.n
        gates = list(c.gates)
    except Exception as exc:  # noqa: BLE001 - total by contract
        report.problems.append(f"not a circuit: {exc}")
        return report
    if not isinstance(n, (int, np.integer)) or n < 0:
        report.problems.append(f"bad qubit count {n!r}")
        n = 0
    for i, g in enumerate(gates):
        try:
            _check_gate(i, g, n, report.problems)
        except Exception as exc:  # noqa: BLE001
            report.problems.append(f"gate {i}: {exc}")
    return report


# -- post-processing ---------------------------------------------------------


def bits_of(index: int, width: int) -> tuple:
    return tuple((index >> (width - 1 - k)) & 1 for k in range(width))


def index_of(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


@dataclass(frozen=True, eq=False)
class General:
    """Arbitrary f: {0,1}^n -> [-1, 1] given as a callable on bit tuples or a table."""

    n: int
    fn: Callable | None = None
    table: np.ndarray | None = None

    def __call__(self, bits) -> float:
        if self.table is not None:
            return float(self.table[index_of(bits)])
        return float(self.fn(tuple(bits)))

    def values(self) -> np.ndarray:
        """Table of f over all 2^n bitstrings."""
        if self.table is not None:
            return np.asarray(self.table, dtype=float)
        return np.array([self.fn(bits_of(i, self.n)) for i in range(1 << self.n)], dtype=float)


@dataclass(frozen=True, eq=False)
class Decomposable:
    """f(y) = prod_j f_j(y restricted to blocks[j]); tables indexed by block bits."""

    n: int
    blocks: tuple
    tables: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(tuple(int(q) for q in b) for b in self.blocks))
        object.__setattr__(self, "tables", tuple(np.asarray(t, dtype=float) for t in self.tables))

    def __call__(self, bits) -> float:
        out = 1.0
        for block, table in zip(self.blocks, self.tables):
            out *= table[index_of([bits[q] for q in block])]
        return float(out)

    def values(self) -> np.ndarray:
        return restricted_table(self, tuple(range(self.n)))


PostProcess = General | Decomposable


def restricted_table(post: Decomposable, qubits: Sequence[int], blocks=None) -> np.ndarray:
    """Product of the given blocks (default: all) as a table over ``qubits`` (in order)."""
    qubits = tuple(qubits)
    pos = {q: k for k, q in enumerate(qubits)}
    idx = np.arange(1 << len(qubits))
    out = np.ones(1 << len(qubits))
    chosen = range(len(post.blocks)) if blocks is None else blocks
    for j in chosen:
        block, table = post.blocks[j], post.tables[j]
        sub = np.zeros_like(idx)
        for q in block:
            sub = (sub << 1) | ((idx >> (len(qubits) - 1 - pos[q])) & 1)
        out = out * table[sub]
    return out


def constant_post(n: int, value: float = 1.0) -> Decomposable:
    return Decomposable(n, (), ()) if value == 1.0 else General(n, table=np.full(1 << n, value))


def pauli_observable_expectation_post(paulis: Sequence[str]) -> Decomposable:
    """Parity post-processing for a Pauli string measured after basis changes.

    Each non-identity qubit contributes +1 for bit 0 and -1 for bit 1.
    """
    labels = [str(p).upper() for p in paulis]
    bad = [p for p in labels if p not in PAULI]
    if bad:
        raise ValueError(f"unknown Pauli label(s): {bad}")
    blocks, tables = [], []
    for q, p in enumerate(labels):
        if p != "I":
            blocks.append((q,))
            tables.append([1.0, -1.0])
    return Decomposable(len(labels), tuple(blocks), tuple(tables))


def basis_change_gates(paulis: Sequence[str]) -> list:
    """Gates rotating each X/Y qubit so its Pauli becomes Z."""
    out = []
    for q, p in enumerate(str(x).upper() for x in paulis):
        if p == "X":
            out.append(gate("h", q))
        elif p == "Y":
            out += [gate("sdg", q), gate("h", q)]
    return out


@dataclass(frozen=True)
class QCAlgorithm:
    circuit: Circuit
    post: General | Decomposable

    def __post_init__(self):
        if self.post.n != self.circuit.n:
            raise ValueError(f"post-processing acts on {self.post.n} bits, circuit has {self.circuit.n}")


# -- JSON --------------------------------------------------------------------


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def gate_to_json(g: Gate) -> dict:
    out = {"kind": g.kind, "targets": list(g.targets)}
    if g.angle is not None:
        out["angle"] = float(g.angle)
    if g.matrix is not None:
        out["matrix"] = _matrix_to_json(g.matrix)
    return out


def circuit_to_json(c: Circuit) -> dict:
    out = {"n": c.n, "gates": [gate_to_json(g) for g in c.gates]}
    if c.name:
        out["name"] = c.name
    return out


def circuit_from_json(data: dict) -> Circuit:
    try:
        gates = []
        for i, g in enumerate(data["gates"]):
            try:
                m = _matrix_from_json(g["matrix"]) if "matrix" in g else None
                gates.append(Gate(g["kind"], tuple(g["targets"]), angle=g.get("angle"), matrix=m))
            except (KeyError, TypeError, ValueError) as exc:
                raise CircuitParseError(f"gate {i}: {exc!r}") from exc
        return Circuit(int(data["n"]), tuple(gates), data.get("name", ""))
    except KeyError as exc:
        raise CircuitParseError(f"missing field {exc}") from exc


def post_to_json(post) -> dict:
    if isinstance(post, Decomposable):
        return {
            "type": "blocks",
            "n": post.n,
            "blocks": [list(b) for b in post.blocks],
            "tables": [t.tolist() for t in post.tables],
        }
    return {"type": "table", "n": post.n, "table": post.values().tolist()}


def post_from_json(data: dict, n: int | None = None):
    kind = data.get("type")
    if kind == "pauli":
        labels = data["labels"]
        if n is not None and len(labels) != n:
            raise CircuitParseError(f"pauli labels have length {len(labels)}, circuit has {n} qubits")
        return pauli_observable_expectation_post(labels)
    if kind == "blocks":
        return Decomposable(int(data.get("n", n)), data["blocks"], data["tables"])
    if kind == "table":
        return General(int(data.get("n", n)), table=np.asarray(data["table"], dtype=float))
    if kind == "constant":
        return constant_post(int(data.get("n", n)), float(data.get("value", 1.0)))
    raise CircuitParseError(f"unknown post-processing type {kind!r}")


def load_json(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise CircuitParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n  {line}") from exc
