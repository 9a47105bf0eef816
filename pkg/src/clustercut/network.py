"""Tensor-network view of a QC algorithm, clusterings and cluster parameters.

Each wire carries an index in {0,1}^2 flattened to ``a = 2*a1 + a2``, standing
for the elementary matrix |a1><a2|. With that convention

* an input state rho has entries ``rho[a1, a2]``,
* a gate U maps index a to b with weight ``(U M(a) U^dag)[b1, b2]``,
* an observable O has entries ``O[b2, b1]``,

and the full contraction equals E_y f(y).
"""

from __future__ import annotations

import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from clustercut import kernels
from clustercut.circuit import Circuit, Decomposable, General, QCAlgorithm, restricted_table
from clustercut.contraction import contraction_complexity
from clustercut.errors import InfeasibleClustering, OracleTooLarge

INPUT, GATE, OBSERVABLE = "input", "gate", "observable"


def oracle_limit() -> int:
    return int(os.environ.get("CLUSTERCUT_ORACLE_LIMIT", "12"))


# -- statevector oracle -------------------------------------------------------


def statevector(circuit: Circuit) -> np.ndarray:
    psi = np.zeros(1 << circuit.n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        u = np.ascontiguousarray(g.unitary, dtype=complex)
        if len(g.targets) == 1:
            kernels.apply_1q(psi, circuit.n, g.targets[0], u)
        else:
            kernels.apply_2q(psi, circuit.n, g.targets[0], g.targets[1], u)
    return psi


def expectation(alg: QCAlgorithm) -> float:
    """E_y f(y) by dense statevector simulation."""
    if alg.circuit.n > oracle_limit():
        raise OracleTooLarge(f"{alg.circuit.n} qubits exceeds oracle limit {oracle_limit()}")
    probs = np.abs(statevector(alg.circuit)) ** 2
    return float(probs @ alg.post.values())


# -- tensors ------------------------------------------------------------------


def state_tensor(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(4)


def gate_tensor(u: np.ndarray) -> np.ndarray:
    """Tensor of U with axes (inputs..., outputs...), each of dimension 4."""
    u = np.asarray(u, dtype=complex)
    k = int(round(np.log2(u.shape[0])))
    ut = u.reshape((2,) * (2 * k))  # (b1..., a1...)
    # T[a1, a2, b1, b2] = U[b1, a1] conj(U[b2, a2]) with multi-qubit a, b
    t = np.einsum(ut, list(range(2 * k)), np.conj(ut), list(range(2 * k, 4 * k)))
    # axes now: b1(k) a1(k) b2(k) a2(k); regroup per qubit as (a1_q a2_q) then (b1_q b2_q)
    order = []
    for q in range(k):
        order += [k + q, 3 * k + q]
    for q in range(k):
        order += [q, 2 * k + q]
    return t.transpose(order).reshape((4,) * (2 * k))


def observable_tensor(obs: np.ndarray) -> np.ndarray:
    """Tensor of O with one axis per qubit: entry O[b2, b1]."""
    o = np.asarray(obs, dtype=complex)
    k = int(round(np.log2(o.shape[0])))
    ot = o.reshape((2,) * (2 * k))  # (b2..., b1...)
    order = []
    for q in range(k):
        order += [k + q, q]
    return ot.transpose(order).reshape((4,) * k)


@dataclass(frozen=True, eq=False)
class TNVertex:
    kind: str
    qubits: tuple
    tensor: np.ndarray | None
    label: str = ""


@dataclass(frozen=True)
class Edge:
    src: int
    src_port: int
    dst: int
    dst_port: int
    qubit: int


@dataclass(frozen=True, eq=False)
class TensorNetwork:
    """Vertices are numbered: inputs 0..n-1, gates n..n+m-1, observables after."""

    alg: QCAlgorithm
    vertices: tuple
    edges: tuple
    final_observable: int | None = None

    @property
    def n(self) -> int:
        return self.alg.circuit.n

    def gate_vertex(self, i: int) -> int:
        return self.n + i

    def observables(self) -> list:
        return [v for v, x in enumerate(self.vertices) if x.kind == OBSERVABLE]

    def in_edges(self, v: int) -> list:
        return sorted((e for e in self.edges if e.dst == v), key=lambda e: e.dst_port)

    def out_edges(self, v: int) -> list:
        return sorted((e for e in self.edges if e.src == v), key=lambda e: e.src_port)


def build_network(alg: QCAlgorithm) -> TensorNetwork:
    """One input per qubit, one vertex per gate, observables for f."""
    c = alg.circuit
    zero = np.zeros((2, 2), dtype=complex)
    zero[0, 0] = 1.0
    vertices = [TNVertex(INPUT, (q,), state_tensor(zero), f"in{q}") for q in range(c.n)]
    edges = []
    last = [(q, 0) for q in range(c.n)]  # (vertex, port) currently holding each wire
    for i, g in enumerate(c.gates):
        v = len(vertices)
        vertices.append(TNVertex(GATE, g.targets, gate_tensor(g.unitary), g.kind))
        for port, q in enumerate(g.targets):
            src, sport = last[q]
            edges.append(Edge(src, sport, v, port, q))
            last[q] = (v, port)
    final = None
    post = alg.post
    if isinstance(post, General):
        final = len(vertices)
        vertices.append(TNVertex(OBSERVABLE, tuple(range(c.n)), None, "f"))
        groups = [tuple(range(c.n))]
        owners = [final]
    else:
        groups, owners = [], []
        covered = set()
        for j, block in enumerate(post.blocks):
            v = len(vertices)
            diag = restricted_table(post, block, blocks=[j])
            vertices.append(TNVertex(OBSERVABLE, block, observable_tensor(np.diag(diag)), f"f{j}"))
            groups.append(block)
            owners.append(v)
            covered |= set(block)
        rest = tuple(q for q in range(c.n) if q not in covered)
        if rest:
            v = len(vertices)
            eye = np.eye(1 << len(rest))
            vertices.append(TNVertex(OBSERVABLE, rest, observable_tensor(eye), "id"))
            groups.append(rest)
            owners.append(v)
    for block, v in zip(groups, owners):
        for port, q in enumerate(block):
            src, sport = last[q]
            edges.append(Edge(src, sport, v, port, q))
    return TensorNetwork(alg, tuple(vertices), tuple(edges), final)


def exact_value(net: TensorNetwork) -> float:
    """T(G, A) evaluated through the statevector oracle."""
    return expectation(net.alg)


def contract_network(net: TensorNetwork) -> float:
    """T(G, A) by summing the tensor network directly (small networks only)."""
    if net.n > oracle_limit():
        raise OracleTooLarge(f"{net.n} qubits exceeds oracle limit {oracle_limit()}")
    operands = []
    for v, vert in enumerate(net.vertices):
        ins = [k for k, e in enumerate(net.edges) if e.dst == v]
        outs = [k for k, e in enumerate(net.edges) if e.src == v]
        ins.sort(key=lambda k: net.edges[k].dst_port)
        outs.sort(key=lambda k: net.edges[k].src_port)
        tensor = vert.tensor
        if tensor is None:  # implicit O_f
            tensor = observable_tensor(np.diag(net.alg.post.values()))
        operands += [tensor, ins + outs]
    value = np.einsum(*operands, [], optimize=True)
    return float(np.real(value))


# -- clusterings ----------------------------------------------------------------


@dataclass(frozen=True)
class Clustering:
    """Map from vertex id to cluster id; observables may be left out."""

    assignment: dict

    @property
    def labels(self) -> list:
        return sorted(set(self.assignment.values()))

    @property
    def r(self) -> int:
        return len(self.labels)

    def normalized(self) -> "Clustering":
        """Relabel clusters 0..r-1 in order of their smallest vertex."""
        first = {}
        for v in sorted(self.assignment):
            first.setdefault(self.assignment[v], len(first))
        return Clustering({v: first[c] for v, c in self.assignment.items()})

    def members(self) -> list:
        out = defaultdict(list)
        for v, c in self.assignment.items():
            out[c].append(v)
        return [sorted(out[c]) for c in self.labels]

    @classmethod
    def from_groups(cls, groups) -> "Clustering":
        return cls({int(v): j for j, group in enumerate(groups) for v in group})


def complete_clustering(net: TensorNetwork, cl: Clustering) -> Clustering:
    """Check coverage of inputs and gates; observables are optional."""
    missing = [
        v for v, x in enumerate(net.vertices) if x.kind != OBSERVABLE and v not in cl.assignment
    ]
    if missing:
        raise ValueError(f"vertices {missing} are not assigned to a cluster")
    return cl


@dataclass(frozen=True)
class ClusterParams:
    K: int
    d: int
    r: int
    g_edges: tuple
    cc_upper: int
    cc_exact: int | None = None
    cc_order: tuple = ()
    degree: int = 0

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "d": self.d,
            "r": self.r,
            "induced_edges": [list(e) for e in self.g_edges],
            "cc_upper": self.cc_upper,
            "cc_exact": self.cc_exact,
            "max_degree": self.degree,
        }


def induced_params(r: int, g_edges, d: int, exact_limit: int = 12) -> ClusterParams:
    g_edges = tuple(tuple(e) for e in g_edges)
    upper, order = contraction_complexity(r, g_edges, mode="greedy")
    exact = None
    if r <= exact_limit:
        exact, order = contraction_complexity(r, g_edges, mode="exact")
    deg = Counter()
    for a, b in g_edges:
        deg[a] += 1
        deg[b] += 1
    return ClusterParams(
        K=len(g_edges),
        d=d,
        r=r,
        g_edges=g_edges,
        cc_upper=upper,
        cc_exact=exact,
        cc_order=tuple(order),
        degree=max(deg.values(), default=0),
    )


def cut_edges(net: TensorNetwork, cl: Clustering) -> list:
    """Inter-cluster edges, ignoring edges into unassigned observables."""
    a = cl.assignment
    return [e for e in net.edges if e.dst in a and e.src in a and a[e.src] != a[e.dst]]


def cluster_params(net: TensorNetwork, cl: Clustering) -> ClusterParams:
    """K, the out-degree width bound d, induced multigraph and cc bounds."""
    complete_clustering(net, cl)
    cl = cl.normalized()
    a = cl.assignment
    cut = cut_edges(net, cl)
    width = Counter()
    for v, c in a.items():
        if net.vertices[v].kind == INPUT:
            width[c] += 1
    for e in cut:
        width[a[e.dst]] += 1
    d = max(width.values(), default=0)
    g_edges = [tuple(sorted((a[e.src], a[e.dst]))) for e in cut]
    return induced_params(cl.r, g_edges, d)


def auto_cluster(net: TensorNetwork, max_width: int) -> Clustering:
    """Greedy merge of inputs and gates minimising K subject to d <= max_width.

    Starts from singletons; each round merges the pair joined by the most edges
    whose union still fits, ties broken by the lowest cluster indices.
    """
    nodes = [v for v, x in enumerate(net.vertices) if x.kind != OBSERVABLE]
    inputs = {v for v in nodes if net.vertices[v].kind == INPUT}
    edges = [(e.src, e.dst) for e in net.edges if net.vertices[e.dst].kind != OBSERVABLE]
    widest = max((len(net.vertices[v].qubits) for v in nodes), default=0)
    if max_width < widest:
        raise InfeasibleClustering(f"max width {max_width} is below the widest gate ({widest} qubits)")
    owner = {v: v for v in nodes}

    def width(members: set) -> int:
        return len(members & inputs) + sum(1 for a, b in edges if b in members and a not in members)

    groups = {v: {v} for v in nodes}
    while True:
        between = Counter()
        for a, b in edges:
            ca, cb = owner[a], owner[b]
            if ca != cb:
                between[(min(ca, cb), max(ca, cb))] += 1
        best = None
        for pair in sorted(between, key=lambda p: (-between[p], p)):
            if width(groups[pair[0]] | groups[pair[1]]) <= max_width:
                best = pair
                break
        if best is None:
            break
        keep, gone = best
        groups[keep] |= groups.pop(gone)
        for v in groups[keep]:
            owner[v] = keep
    return Clustering(dict(owner)).normalized()


def to_dot(r: int, g_edges, name: str = "g") -> str:
    lines = [f"graph {name} {{"]
    lines += [f"  c{j};" for j in range(r)]
    lines += [f"  c{u} -- c{v};" for u, v in g_edges]
    return "\n".join(lines + ["}"]) + "\n"
