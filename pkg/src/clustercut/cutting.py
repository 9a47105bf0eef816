"""Wire cuts, gate cuts and the fragment circuits they produce.

A *coordinate* is one cut location with a finite alphabet of terms. Term ``t``
carries a real coefficient ``coeffs[t]`` and, for every role (side) of the cut, a
hashable local action. Writing ``t_j(s)`` for the value of fragment ``j`` when
every coordinate is fixed by ``s``,

    value = sum_s prod_coords coeffs[s_c] * prod_j t_j(s).

Local actions:

* ``("meas", P)``   measure Pauli P, record its sign, free and reset the wire
* ``("prep", lab)`` start a wire in the Pauli eigenstate ``lab``
* ``("id",)``, ``("pauli", P)``, ``("rot", P, +1/-1)`` unitary actions in place
* ``("signed", P)`` measure P in place and record its sign; the wire continues

Term indices are 0-based everywhere.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from clustercut.circuit import NAMED, PAULI, Decomposable, General
from clustercut.errors import ClustersNotSeparable, InfeasibleClustering
from clustercut.network import (
    INPUT,
    OBSERVABLE,
    Clustering,
    ClusterParams,
    TensorNetwork,
    build_network,
    complete_clustering,
    induced_params,
)

_SQ2 = 1.0 / np.sqrt(2.0)

STATES = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_SQ2, _SQ2], dtype=complex),
    "-": np.array([_SQ2, -_SQ2], dtype=complex),
    "+i": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "-i": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}

# unitary taking |0> to each state
PREP = {
    "0": np.eye(2, dtype=complex),
    "1": NAMED["x"],
    "+": NAMED["h"],
    "-": NAMED["h"] @ NAMED["x"],
    "+i": NAMED["s"] @ NAMED["h"],
    "-i": NAMED["sdg"] @ NAMED["h"],
}

# unitary B with B P B^dag = Z, applied before a Z-basis readout
TO_Z = {
    "I": np.eye(2, dtype=complex),
    "X": NAMED["h"],
    "Y": NAMED["h"] @ NAMED["sdg"],
    "Z": np.eye(2, dtype=complex),
}

RULE_OBSERVABLES = ("I", "I", "X", "X", "Y", "Y", "Z", "Z")
RULE_STATES = ("0", "1", "+", "-", "+i", "-i", "0", "1")
RULE_COEFFS = np.array([0.5, 0.5, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5])


def projector(label: str) -> np.ndarray:
    v = STATES[label]
    return np.outer(v, np.conj(v))


def rotation_half(p: str, sign: int) -> np.ndarray:
    """exp(-i sign pi/4 P)."""
    return np.cos(np.pi / 4) * PAULI["I"] - 1j * sign * np.sin(np.pi / 4) * PAULI[p]


@dataclass(frozen=True, eq=False)
class CutRule:
    observables: tuple
    states: tuple
    coeffs: np.ndarray

    def __len__(self):
        return len(self.coeffs)

    def entry(self, i: int):
        """(O, rho, c) for 0-based entry ``i``."""
        return PAULI[self.observables[i]], projector(self.states[i]), float(self.coeffs[i])

    def swap_sum(self) -> np.ndarray:
        """sum_i c_i O_i (x) rho_i, which is the two-qubit SWAP."""
        out = np.zeros((4, 4), dtype=complex)
        for i in range(len(self)):
            o, rho, c = self.entry(i)
            out += c * np.kron(o, rho)
        return out

    def reconstruct(self, a: np.ndarray) -> np.ndarray:
        """sum_i c_i Tr(A O_i) rho_i, the identity channel."""
        out = np.zeros((2, 2), dtype=complex)
        for i in range(len(self)):
            o, rho, c = self.entry(i)
            out += c * np.trace(a @ o) * rho
        return out


def cut_rule_table() -> CutRule:
    return CutRule(RULE_OBSERVABLES, RULE_STATES, RULE_COEFFS.copy())


# -- local channels (used by oracles and the exact engine) ---------------------


def apply_local(action: tuple, rho: np.ndarray) -> np.ndarray:
    """Apply a local action to a single-qubit (quasi-)density matrix.

    A ``meas`` action returns the scalar Tr(P rho) times |0><0|.
    """
    kind = action[0]
    if kind == "id":
        return rho
    if kind == "pauli":
        p = PAULI[action[1]]
        return p @ rho @ p
    if kind == "rot":
        r = rotation_half(action[1], action[2])
        return r @ rho @ np.conj(r).T
    if kind == "signed":
        p = PAULI[action[1]]
        return 0.5 * (p @ rho + rho @ p)
    if kind == "meas":
        return np.trace(PAULI[action[1]] @ rho) * projector("0")
    if kind == "prep":
        return np.trace(rho) * projector(action[1])
    raise ValueError(f"unknown action {action!r}")


# -- gate cuts -------------------------------------------------------------------


def _pauli2(p: str, q: str) -> np.ndarray:
    return np.kron(PAULI[p], PAULI[q])


def _split_local(v: np.ndarray, tol: float = 1e-9):
    """Factor a 4x4 unitary as L_a (x) L_b if possible."""
    t = v.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(t)
    if s[1] > tol * s[0]:
        return None
    la = np.sqrt(s[0]) * u[:, 0].reshape(2, 2)
    lb = np.sqrt(s[0]) * vh[0].reshape(2, 2)
    la = la / np.sqrt(abs(np.linalg.det(la)))
    lb = lb / np.sqrt(abs(np.linalg.det(lb)))
    return la, lb


@dataclass(frozen=True, eq=False)
class RotationCut:
    """U = phase * (L_a (x) L_b) exp(-i theta P (x) Q), cut into six local terms."""

    p: str
    q: str
    theta: float
    local_a: np.ndarray
    local_b: np.ndarray

    def terms(self):
        """List of (coefficient, action on side a, action on side b)."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        p, q = self.p, self.q
        out = [
            (c * c, ("id",), ("id",)),
            (s * s, ("pauli", p), ("pauli", q)),
            (c * s, ("signed", p), ("rot", q, 1)),
            (-c * s, ("signed", p), ("rot", q, -1)),
            (c * s, ("rot", p, 1), ("signed", q)),
            (-c * s, ("rot", p, -1), ("signed", q)),
        ]
        return [t for t in out if abs(t[0]) > 1e-15]

    @property
    def gamma(self) -> float:
        return float(sum(abs(t[0]) for t in self.terms()))

    def __iter__(self):
        return iter(self.terms())

    def __len__(self):
        return len(self.terms())

    def channel(self, rho: np.ndarray) -> np.ndarray:
        """Recombine the terms on a two-qubit density matrix."""
        out = np.zeros((4, 4), dtype=complex)
        t = rho.reshape(2, 2, 2, 2)
        for coef, act_a, act_b in self.terms():
            part = np.zeros((2, 2, 2, 2), dtype=complex)
            # apply act_a on qubit a, act_b on qubit b via the operator basis
            for i, j in itertools.product(range(2), repeat=2):
                ea = np.zeros((2, 2), dtype=complex)
                ea[i, j] = 1
                fa = apply_local(act_a, ea)
                for k, l in itertools.product(range(2), repeat=2):
                    eb = np.zeros((2, 2), dtype=complex)
                    eb[k, l] = 1
                    fb = apply_local(act_b, eb)
                    part += t[i, k, j, l] * np.einsum("ab,cd->acbd", fa, fb)
            out += coef * part.reshape(4, 4)
        loc = np.kron(self.local_a, self.local_b)
        return loc @ out @ np.conj(loc).T


def pauli_rotation_form(u: np.ndarray, tol: float = 1e-9) -> RotationCut | None:
    """Recognise U = phase (L_a (x) L_b) exp(-i theta P (x) Q); None if not of that form."""
    u = np.asarray(u, dtype=complex)
    labels = "XYZ"
    for p, q in itertools.product(labels, repeat=2):
        pq = _pauli2(p, q)
        a = np.trace(u) / 4
        b = np.trace(pq @ u) / 4
        if np.allclose(u, a * np.eye(4) + b * pq, atol=tol) and abs(a) + abs(b) > 0:
            phase = a / abs(a) if abs(a) > tol else (1j * b) / abs(b)
            cos_t = (a / phase).real
            sin_t = (1j * b / phase).real
            return RotationCut(p, q, float(np.arctan2(sin_t, cos_t)), np.eye(2), np.eye(2))
    for p, q in itertools.product(labels, repeat=2):
        pq = _pauli2(p, q)
        for theta in (np.pi / 4, -np.pi / 4):
            v = u @ (np.cos(theta) * np.eye(4) + 1j * np.sin(theta) * pq)
            split = _split_local(v, tol)
            if split is not None:
                return RotationCut(p, q, float(theta), split[0], split[1])
    return None


def cz_decomposition() -> RotationCut:
    """The six-term CZ cut: CZ ~ (RZ(-pi/2) (x) RZ(-pi/2)) exp(-i pi/4 Z (x) Z)."""
    rz = np.diag([np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)])
    return RotationCut("Z", "Z", np.pi / 4, rz, rz.copy())


def generic_gate_terms(u: np.ndarray, tol: float = 1e-14):
    """Four wire cuts around U with the gate evaluated classically.

    Returns (keys, coeffs): key (k1, k2, k3, k4) cuts the a-input, b-input,
    a-output and b-output wires; zero-weight keys are dropped.
    """
    rule = cut_rule_table()
    u = np.asarray(u, dtype=complex)
    ud = np.conj(u).T
    obs = [PAULI[o] for o in rule.observables]
    rhos = [projector(s) for s in rule.states]
    keys, coeffs = [], []
    for k1, k2 in itertools.product(range(8), repeat=2):
        evolved = u @ np.kron(rhos[k1], rhos[k2]) @ ud
        for k3, k4 in itertools.product(range(8), repeat=2):
            g = np.trace(np.kron(obs[k3], obs[k4]) @ evolved).real
            c = rule.coeffs[k1] * rule.coeffs[k2] * rule.coeffs[k3] * rule.coeffs[k4] * g
            if abs(c) > tol:
                keys.append((k1, k2, k3, k4))
                coeffs.append(c)
    return keys, np.array(coeffs)


# -- plan data -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Coordinate:
    """One cut location. ``actions[role][t]`` is the local action of term ``t``."""

    index: int
    kind: str  # wire | rotation | gate
    coeffs: np.ndarray
    actions: dict
    clusters: dict  # role -> cluster id
    info: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.coeffs)

    @property
    def gamma(self) -> float:
        return float(np.abs(self.coeffs).sum())

    @property
    def probs(self) -> np.ndarray:
        return np.abs(self.coeffs) / self.gamma

    @property
    def endpoints(self) -> tuple:
        return tuple(sorted(set(self.clusters.values())))


def wire_coordinate(index: int, out_cluster: int, in_cluster: int, **info) -> Coordinate:
    rule = cut_rule_table()
    actions = {
        "out": tuple(("meas", o) for o in rule.observables),
        "in": tuple(("prep", s) for s in rule.states),
    }
    return Coordinate(
        index, "wire", rule.coeffs, actions, {"out": out_cluster, "in": in_cluster}, dict(info)
    )


def rotation_coordinate(index, cut: RotationCut, ca, cb, **info) -> Coordinate:
    terms = cut.terms()
    actions = {"a": tuple(t[1] for t in terms), "b": tuple(t[2] for t in terms)}
    coeffs = np.array([t[0] for t in terms])
    return Coordinate(index, "rotation", coeffs, actions, {"a": ca, "b": cb}, dict(info))


def generic_coordinate(index, u, ca, cb, **info) -> Coordinate:
    keys, coeffs = generic_gate_terms(u)
    obs, sts = RULE_OBSERVABLES, RULE_STATES
    actions = {
        "a_in": tuple(("meas", obs[k[0]]) for k in keys),
        "b_in": tuple(("meas", obs[k[1]]) for k in keys),
        "a_out": tuple(("prep", sts[k[2]]) for k in keys),
        "b_out": tuple(("prep", sts[k[3]]) for k in keys),
    }
    clusters = {"a_in": ca, "a_out": ca, "b_in": cb, "b_out": cb}
    return Coordinate(index, "gate", coeffs, actions, clusters, dict(info, keys=keys))


@dataclass(frozen=True, eq=False)
class Fragment:
    """A cluster's circuit over physical wires, with cut slots.

    ``ops`` holds ``("gate", wires, matrix)`` and ``("cut", coord, role, wire)``;
    ``terminal`` lists ``(qubit, wire)`` pairs, sorted by qubit.
    """

    cluster: int
    width: int
    ops: tuple
    terminal: tuple

    @property
    def cut_ops(self) -> list:
        return [op for op in self.ops if op[0] == "cut"]

    @property
    def coords(self) -> tuple:
        return tuple(sorted({op[1] for op in self.cut_ops}))

    @property
    def qubits(self) -> tuple:
        return tuple(q for q, _ in self.terminal)

    @property
    def prep_slots(self) -> list:
        return [(op[3], op[1], op[2]) for op in self.cut_ops if op[2] in ("in", "a_out", "b_out")]

    @property
    def meas_slots(self) -> list:
        return [(op[3], op[1], op[2]) for op in self.cut_ops if op[2] in ("out", "a_in", "b_in")]

    def local_key(self, plan: "CutPlan", s) -> tuple:
        """Actions this fragment takes under the full assignment ``s``."""
        return tuple(plan.coords[op[1]].actions[op[2]][s[op[1]]] for op in self.cut_ops)


class _WireAllocator:
    """FIFO recycling: a wire freed by a cut measurement is reused first."""

    def __init__(self):
        self.pool = deque()
        self.count = 0

    def take(self) -> int:
        if self.pool:
            return self.pool.popleft()
        self.count += 1
        return self.count - 1

    def free(self, w: int) -> None:
        self.pool.append(w)


@dataclass(frozen=True, eq=False)
class CutPlan:
    alg: object
    net: TensorNetwork | None
    clustering: Clustering | None
    partition: tuple | None
    coords: tuple
    fragments: tuple
    params: ClusterParams

    @property
    def r(self) -> int:
        return len(self.fragments)

    @property
    def K(self) -> int:
        return len(self.coords)

    @property
    def post(self):
        return self.alg.post

    @property
    def cut_edges(self) -> list:
        return [c.info["edge"] for c in self.coords if c.kind == "wire"]

    @property
    def cut_gates(self) -> list:
        return [c.info["gate"] for c in self.coords if c.kind != "wire"]

    @property
    def d(self) -> int:
        return max((f.width for f in self.fragments), default=0)

    def graph(self):
        """Contraction graph: clusters as vertices, one edge per coordinate."""
        return [c.endpoints for c in self.coords]

    def alphabet(self) -> list:
        return [c.size for c in self.coords]

    def weight(self, s) -> float:
        return float(np.prod([c.coeffs[t] for c, t in zip(self.coords, s)]))

    def to_json(self) -> dict:
        return {
            "clusters": [list(f.qubits) for f in self.fragments],
            "fragment_widths": [f.width for f in self.fragments],
            "cut_edges": [list(e) for e in self.cut_edges],
            "cut_gates": self.cut_gates,
            "coordinates": [{"kind": c.kind, "terms": c.size} for c in self.coords],
            **self.params.to_json(),
            "d_recycled": self.d,
        }


def _qubit_sequences(net: TensorNetwork):
    """Per qubit, the vertices visited in time order (input first, observable last)."""
    seq = {q: [q] for q in range(net.n)}
    for i, g in enumerate(net.alg.circuit.gates):
        for q in g.targets:
            seq[q].append(net.gate_vertex(i))
    return seq


def _neighbours(seq):
    prev, nxt = {}, {}
    for q, vs in seq.items():
        for a, b in zip(vs, vs[1:]):
            nxt[(a, q)] = b
            prev[(b, q)] = a
    return prev, nxt


def _vertex_plan(net: TensorNetwork, cl: Clustering):
    complete_clustering(net, cl)
    cl = cl.normalized()
    a = cl.assignment
    gates = net.alg.circuit.gates
    prev, nxt = _neighbours(_qubit_sequences(net))
    coords, coord_of = [], {}

    def coordinate(u, v, q):
        key = (u, v, q)
        if key not in coord_of:
            coord_of[key] = len(coords)
            coords.append(wire_coordinate(len(coords), a[u], a[v], edge=(u, v), qubit=q))
        return coord_of[key]

    # register coordinates in edge order so numbering is deterministic
    for e in net.edges:
        if e.src in a and e.dst in a and a[e.src] != a[e.dst]:
            coordinate(e.src, e.dst, e.qubit)

    fragments = []
    for c in range(cl.r):
        alloc, ops, current, terminal = _WireAllocator(), [], {}, {}
        for q in range(net.n):
            if a[q] != c:
                continue
            succ = nxt.get((q, q))
            if succ is None:
                terminal[q] = None
            elif a[succ] != c:
                w = alloc.take()
                ops.append(("cut", coordinate(q, succ, q), "out", w))
                alloc.free(w)
        for i, g in enumerate(gates):
            v = net.gate_vertex(i)
            if a[v] != c:
                continue
            for q in g.targets:
                if q in current:
                    continue
                pred = prev[(v, q)]
                if a[pred] == c:  # lazily started |0> line
                    current[q] = alloc.take()
                else:
                    w = alloc.take()
                    ops.append(("cut", coordinate(pred, v, q), "in", w))
                    current[q] = w
            ops.append(("gate", tuple(current[q] for q in g.targets), g.unitary))
            for q in g.targets:
                succ = nxt.get((v, q))
                if succ is None:
                    terminal[q] = current[q]
                elif a[succ] != c:
                    w = current.pop(q)
                    ops.append(("cut", coordinate(v, succ, q), "out", w))
                    alloc.free(w)
        for q in sorted(terminal):
            if terminal[q] is None:
                terminal[q] = alloc.take()
        fragments.append(
            Fragment(c, alloc.count, tuple(ops), tuple(sorted(terminal.items())))
        )
    return cl, coords, fragments


def _partition_plan(alg, parts, gate_rule: str):
    n = alg.circuit.n
    party = {}
    for j, qs in enumerate(parts):
        for q in qs:
            if q in party:
                raise InfeasibleClustering(f"qubit {q} is in two parts")
            party[q] = j
    if sorted(party) != list(range(n)):
        raise InfeasibleClustering("partition must cover every qubit exactly once")
    coords, crossing = [], {}
    for i, g in enumerate(alg.circuit.gates):
        if len(g.targets) == 2 and party[g.targets[0]] != party[g.targets[1]]:
            ca, cb = party[g.targets[0]], party[g.targets[1]]
            rot = pauli_rotation_form(g.unitary) if gate_rule in ("auto", "rotation") else None
            if gate_rule == "rotation" and rot is None:
                raise ValueError(f"gate {i} has no Pauli-rotation form")
            if rot is not None:
                coords.append(rotation_coordinate(len(coords), rot, ca, cb, gate=i))
            else:
                coords.append(generic_coordinate(len(coords), g.unitary, ca, cb, gate=i))
            crossing[i] = len(coords) - 1
    fragments = []
    for c in range(len(parts)):
        alloc, ops, current = _WireAllocator(), [], {}

        def wire(q):
            if q not in current:
                current[q] = alloc.take()
            return current[q]

        for i, g in enumerate(alg.circuit.gates):
            mine = [q for q in g.targets if party[q] == c]
            if not mine:
                continue
            if i not in crossing:
                ops.append(("gate", tuple(wire(q) for q in g.targets), g.unitary))
                continue
            coord = coords[crossing[i]]
            (q,) = mine
            side = "a" if q == g.targets[0] else "b"
            if coord.kind == "rotation":
                rot = pauli_rotation_form(g.unitary)
                ops.append(("cut", coord.index, side, wire(q)))
                local = rot.local_a if side == "a" else rot.local_b
                if not np.allclose(local, np.eye(2) * local[0, 0], atol=1e-12):
                    ops.append(("gate", (wire(q),), local))
            else:
                w = current.pop(q) if q in current else alloc.take()
                ops.append(("cut", coord.index, side + "_in", w))
                alloc.free(w)
                ops.append(("cut", coord.index, side + "_out", wire(q)))
        terminal = tuple((q, wire(q)) for q in sorted(parts[c]))
        fragments.append(Fragment(c, alloc.count, tuple(ops), terminal))
    return coords, fragments


def _partition_params(r: int, coords, width: int) -> ClusterParams:
    """Each cut gate becomes its own vertex joined by four wires (two per side)."""
    edges = []
    for k, c in enumerate(coords):
        gv = r + k
        a, b = c.clusters.get("a", c.clusters.get("a_in")), c.clusters.get("b", c.clusters.get("b_in"))
        edges += [(a, gv), (a, gv), (b, gv), (b, gv)]
    return induced_params(r + len(coords), edges, width)


def plan_cuts(
    alg_or_net,
    clustering: Clustering | None = None,
    *,
    partition=None,
    gate_rule: str = "auto",
    mode: str | None = None,
) -> CutPlan:
    """Cut a circuit along a vertex clustering (wire cuts) or a qubit partition (gate cuts).

    ``gate_rule`` chooses how crossing gates are cut: ``auto`` uses the six-term
    Pauli-rotation rule when the gate has that form (CZ, CNOT, exp(-i t P(x)Q))
    and the four-wire rule otherwise; ``generic`` always uses four wires.
    """
    net = alg_or_net if isinstance(alg_or_net, TensorNetwork) else build_network(alg_or_net)
    alg = net.alg
    if (clustering is None) == (partition is None):
        raise ValueError("give exactly one of clustering or partition")
    if partition is not None:
        parts = tuple(tuple(sorted(int(q) for q in p)) for p in partition if len(p))
        coords, fragments = _partition_plan(alg, parts, gate_rule)
        width = max((f.width for f in fragments), default=0)
        params = _partition_params(len(parts), coords, width)
        cl = None
    else:
        parts = None
        cl, coords, fragments = _vertex_plan(net, clustering)
        from clustercut.network import cluster_params

        base = cluster_params(net, cl)
        width = max((f.width for f in fragments), default=0)
        params = ClusterParams(
            base.K, width, base.r, base.g_edges, base.cc_upper, base.cc_exact,
            base.cc_order, base.degree,
        )
    plan = CutPlan(alg, net, cl, parts, tuple(coords), tuple(fragments), params)
    if mode == "tensor" and isinstance(alg.post, General) and plan.r > 1:
        raise ClustersNotSeparable(
            "a general post-processing function joins the clusters; tensor mode needs a decomposable f"
        )
    return plan


@dataclass(frozen=True)
class CutAssignment:
    s: tuple
    coefficient: float
    weight: float  # prod_c (alphabet size * coefficient); 8^K c_s for wire cuts


@dataclass(frozen=True, eq=False)
class Realization:
    """A fragment with every cut slot bound to a concrete local action."""

    fragment: Fragment
    actions: tuple

    @property
    def key(self) -> tuple:
        return (self.fragment.cluster, self.actions)


def assignment(plan: CutPlan, s) -> CutAssignment:
    s = tuple(int(t) for t in s)
    if len(s) != plan.K:
        raise ValueError(f"assignment has length {len(s)}, plan has {plan.K} coordinates")
    for c, t in zip(plan.coords, s):
        if not 0 <= t < c.size:
            raise IndexError(f"term {t} out of range for coordinate {c.index} ({c.size} terms)")
    coef = plan.weight(s)
    return CutAssignment(s, coef, coef * float(np.prod(plan.alphabet())) if s else 1.0)


def instantiate(plan: CutPlan, s):
    """Bind every fragment's cut slots under ``s``; returns (realizations, CutAssignment)."""
    ca = assignment(plan, s.s if isinstance(s, CutAssignment) else s)
    reals = [Realization(f, f.local_key(plan, ca.s)) for f in plan.fragments]
    return reals, ca


def decomposable_tables(plan: CutPlan):
    """Per-fragment table of f_j over its terminal qubits, or None if f does not split."""
    post = plan.post
    if isinstance(post, General):
        return None if plan.r > 1 else [post.values()]
    owner = {q: f.cluster for f in plan.fragments for q in f.qubits}
    per = [[] for _ in plan.fragments]
    for j, block in enumerate(post.blocks):
        homes = {owner[q] for q in block}
        if len(homes) != 1:
            return None
        per[homes.pop()].append(j)
    from clustercut.circuit import restricted_table

    return [restricted_table(post, f.qubits, blocks=per[k]) for k, f in enumerate(plan.fragments)]
