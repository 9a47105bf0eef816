"""Small-width engines that run bound fragments.

``run_fragment_exact`` propagates a (quasi-)density matrix and returns exact
values; ``run_fragment_shot`` compiles the fragment to a flat program for the
statevector kernels and samples mid-circuit and terminal outcomes.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from clustercut import kernels
from clustercut.circuit import PAULI
from clustercut.cutting import PREP, TO_Z, Realization, rotation_half
from clustercut.errors import WidthExceeded
from clustercut.network import oracle_limit
from clustercut.rng import stream

FUSE_MAX_WIDTH = 6

_segments_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _check_width(real: Realization, max_width: int | None) -> int:
    w = real.fragment.width
    cap = oracle_limit() if max_width is None else max_width
    if w > cap:
        raise WidthExceeded(f"fragment needs {w} qubits, engine allows {cap}")
    return w


def _apply_dense(psi: np.ndarray, n: int, wires, u: np.ndarray) -> None:
    u = np.ascontiguousarray(u, dtype=complex)
    if len(wires) == 1:
        kernels.apply_1q(psi, n, wires[0], u)
    else:
        kernels.apply_2q(psi, n, wires[0], wires[1], u)


def _fuse(width: int, gates) -> np.ndarray:
    dim = 1 << width
    out = np.empty((dim, dim), dtype=complex)
    for col in range(dim):
        psi = np.zeros(dim, dtype=complex)
        psi[col] = 1.0
        for _, wires, u in gates:
            _apply_dense(psi, width, wires, u)
        out[:, col] = psi
    return out


def segments(fragment) -> list:
    """Ops grouped into ("gates", [gate ops], fused-or-None) and ("cut", op) items."""
    cached = _segments_cache.get(fragment)
    if cached is not None:
        return cached
    out, run = [], []

    def flush():
        if run:
            fused = _fuse(fragment.width, run) if len(run) > 1 and fragment.width <= FUSE_MAX_WIDTH else None
            out.append(("gates", list(run), fused))
            run.clear()

    for op in fragment.ops:
        if op[0] == "gate":
            run.append(op)
        else:
            flush()
            out.append(("cut", op))
    flush()
    _segments_cache[fragment] = out
    return out


# -- exact engine ------------------------------------------------------------------


class _Density:
    """Quasi-density matrix on ``w`` wires stored as a 2w-qubit vector (rows high)."""

    def __init__(self, w: int):
        self.w = w
        self.vec = np.zeros(1 << (2 * w), dtype=complex)
        self.vec[0] = 1.0

    def unitary(self, wires, u) -> None:
        w = self.w
        _apply_dense(self.vec, 2 * w, wires, u)
        _apply_dense(self.vec, 2 * w, tuple(q + w for q in wires), np.conj(u))

    def full(self, u) -> None:
        dim = 1 << self.w
        rho = self.vec.reshape(dim, dim)
        self.vec = np.ascontiguousarray((u @ rho @ np.conj(u).T).reshape(-1))

    def signed(self, q: int, p: np.ndarray) -> None:
        left = self.vec.copy()
        _apply_dense(left, 2 * self.w, (q,), p)
        _apply_dense(self.vec, 2 * self.w, (q + self.w,), np.ascontiguousarray(p.T))
        self.vec = 0.5 * (left + self.vec)

    def measure_reset(self, q: int, p: np.ndarray) -> None:
        w = self.w
        t = np.moveaxis(self.vec.reshape((2,) * (2 * w)), (q, q + w), (0, 1))
        reduced = np.einsum("ba,ab...->...", p, t)
        out = np.zeros_like(t)
        out[0, 0] = reduced
        self.vec = np.ascontiguousarray(np.moveaxis(out, (0, 1), (q, q + w)).reshape(-1))

    def diagonal(self) -> np.ndarray:
        dim = 1 << self.w
        return np.real(np.diagonal(self.vec.reshape(dim, dim)))


def local_unitary(action: tuple) -> np.ndarray | None:
    kind = action[0]
    if kind == "prep":
        return PREP[action[1]]
    if kind == "pauli":
        return PAULI[action[1]]
    if kind == "rot":
        return rotation_half(action[1], action[2])
    return None


def quasi_distribution(real: Realization, max_width: int | None = None) -> np.ndarray:
    """Signed weights over terminal bitstrings (qubit order), including cut-sign factors."""
    w = _check_width(real, max_width)
    rho = _Density(w)
    actions = iter(real.actions)
    for item in segments(real.fragment):
        if item[0] == "gates":
            if item[2] is not None:
                rho.full(item[2])
            else:
                for _, wires, u in item[1]:
                    rho.unitary(wires, u)
            continue
        wire = item[1][3]
        action = next(actions)
        kind = action[0]
        if kind == "meas":
            rho.measure_reset(wire, PAULI[action[1]])
        elif kind == "signed":
            rho.signed(wire, PAULI[action[1]])
        elif kind != "id":
            rho.unitary((wire,), local_unitary(action))
    diag = rho.diagonal().reshape((2,) * w) if w else rho.diagonal()
    term_wires = [wi for _, wi in real.fragment.terminal]
    others = tuple(k for k in range(w) if k not in term_wires)
    marg = diag.sum(axis=others) if others else diag
    # axes of marg follow ascending wire order; reorder to qubit order
    ranked = sorted(term_wires)
    perm = [ranked.index(wi) for wi in term_wires]
    return np.asarray(np.transpose(marg, perm) if perm else marg).reshape(-1)


def run_fragment_exact(real: Realization, table=None, max_width: int | None = None) -> float:
    """Exact fragment value: E[prod sigma * f_j(terminal bits)] with f_j given as a table."""
    q = quasi_distribution(real, max_width)
    if table is None:
        return float(q.sum())
    return float(q @ np.asarray(table, dtype=float))


# -- shot engine ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Program:
    width: int
    code: np.ndarray
    mats: np.ndarray
    n_uniforms: int
    n_records: int
    terminal_wires: tuple


@dataclass(frozen=True)
class ShotRecord:
    bits: tuple  # terminal bits in qubit order
    sigmas: tuple  # +-1 per recorded cut measurement


def compile_program(real: Realization, max_width: int | None = None) -> Program:
    w = _check_width(real, max_width)
    code, mats = [], []
    offset = 0
    n_meas = n_rec = 0

    def add_matrix(u) -> int:
        nonlocal offset
        flat = np.ascontiguousarray(u, dtype=complex).reshape(-1)
        mats.append(flat)
        start, offset = offset, offset + flat.size
        return start

    def unitary(wires, u):
        if len(wires) == 1:
            code.append((kernels.OP_U1, wires[0], 0, 0, add_matrix(u)))
        else:
            code.append((kernels.OP_U2, wires[0], wires[1], 0, add_matrix(u)))

    actions = iter(real.actions)
    for item in segments(real.fragment):
        if item[0] == "gates":
            if item[2] is not None:
                code.append((kernels.OP_FULL, 0, 0, 0, add_matrix(item[2])))
            else:
                for _, wires, u in item[1]:
                    unitary(wires, u)
            continue
        wire = item[1][3]
        action = next(actions)
        kind = action[0]
        if kind == "meas":
            p = action[1]
            if p in ("X", "Y"):
                unitary((wire,), TO_Z[p])
            slot = -1 if p == "I" else n_rec
            n_rec += p != "I"
            code.append((kernels.OP_MEASZ, wire, slot, 1, 0))
            n_meas += 1
        elif kind == "signed":
            b = TO_Z[action[1]]
            if action[1] != "Z":
                unitary((wire,), b)
            code.append((kernels.OP_MEASZ, wire, n_rec, 0, 0))
            n_rec += 1
            n_meas += 1
            if action[1] != "Z":
                unitary((wire,), np.conj(b).T)
        elif kind != "id":
            unitary((wire,), local_unitary(action))
    code_arr = np.array(code, dtype=np.longlong).reshape(-1, 5)
    mats_arr = np.concatenate(mats) if mats else np.zeros(1, dtype=complex)
    return Program(
        w, code_arr, mats_arr, n_meas + 1, n_rec, tuple(wi for _, wi in real.fragment.terminal)
    )


def run_program(prog: Program, uniforms: np.ndarray):
    """One shot; returns (terminal index in qubit order, sign product, records)."""
    psi = np.zeros(1 << prog.width, dtype=complex)
    psi[0] = 1.0
    records = np.ones(max(prog.n_records, 1), dtype=np.intc)
    u = np.ascontiguousarray(uniforms[: prog.n_uniforms], dtype=float)
    idx = kernels.run_program(psi, prog.width, prog.code, prog.mats, u, records)
    out = 0
    for wi in prog.terminal_wires:
        out = (out << 1) | ((idx >> (prog.width - 1 - wi)) & 1)
    sigma = int(np.prod(records[: prog.n_records])) if prog.n_records else 1
    return out, sigma, records[: prog.n_records]


def sample_program(prog: Program, uniforms: np.ndarray):
    """Run one shot per row of ``uniforms``; returns (terminal indices, sign products)."""
    rows = uniforms.shape[0]
    idx = np.empty(rows, dtype=np.int64)
    sig = np.empty(rows, dtype=np.int64)
    psi = np.empty(1 << prog.width, dtype=complex)
    records = np.ones(max(prog.n_records, 1), dtype=np.intc)
    shifts = [prog.width - 1 - wi for wi in prog.terminal_wires]
    for k in range(rows):
        psi[:] = 0
        psi[0] = 1.0
        raw = kernels.run_program(
            psi, prog.width, prog.code, prog.mats, uniforms[k, : prog.n_uniforms], records
        )
        out = 0
        for sh in shifts:
            out = (out << 1) | ((raw >> sh) & 1)
        idx[k] = out
        sig[k] = int(np.prod(records[: prog.n_records])) if prog.n_records else 1
    return idx, sig


def run_fragment_shot(real: Realization, seed: int, shot: int = 0, max_width: int | None = None) -> ShotRecord:
    """One sampled execution; the stream is keyed by (seed, cluster, shot)."""
    prog = compile_program(real, max_width)
    u = stream(seed, "shot", real.fragment.cluster, shot).random(prog.n_uniforms)
    idx, _, rec = run_program(prog, u)
    nb = len(prog.terminal_wires)
    bits = tuple((idx >> (nb - 1 - k)) & 1 for k in range(nb))
    return ShotRecord(bits, tuple(int(x) for x in rec))
