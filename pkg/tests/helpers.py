"""Random circuits with a known number of cut wires, shared by the tests."""

import numpy as np

from clustercut.circuit import Circuit, Decomposable, General, gate, unitary_gate

ONE_QUBIT = ("h", "x", "s", "t", "rx", "ry", "rz")
TWO_QUBIT = ("cnot", "cz", "swap", "u2")


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ np.conj(a).T
    return rho / np.trace(rho)


def random_gate(rng, qubits):
    """A one- or two-qubit gate on a random subset of ``qubits``."""
    qubits = list(qubits)
    if len(qubits) >= 2 and rng.random() < 0.6:
        a, b = rng.choice(qubits, size=2, replace=False)
        kind = TWO_QUBIT[rng.integers(len(TWO_QUBIT))]
        if kind == "u2":
            return unitary_gate(random_unitary(rng, 4), int(a), int(b))
        return gate(kind, int(a), int(b))
    q = int(rng.choice(qubits))
    kind = ONE_QUBIT[rng.integers(len(ONE_QUBIT))]
    if kind in ("rx", "ry", "rz"):
        return gate(kind, q, angle=float(rng.uniform(-np.pi, np.pi)))
    return gate(kind, q)


def bridged_circuit(rng, n, m, K):
    """Circuit on two qubit groups where exactly K wires pass from cluster 0 to cluster 1.

    Returns (circuit, vertex groups, qubit groups at the end). Cluster 0 owns the first group's inputs and
    early gates; each of K bridge gates pulls one of its wires into cluster 1.
    """
    na = int(rng.integers(max(K, 1), n))
    side_a, side_b = list(range(na)), list(range(na, n))
    gates, owner = [], []

    def add(g, cluster):
        gates.append(g)
        owner.append(cluster)

    budget = m - K
    early = int(rng.integers(0, budget + 1))
    for _ in range(early):
        if rng.random() < 0.5:
            add(random_gate(rng, side_a), 0)
        else:
            add(random_gate(rng, side_b), 1)
    moved = []
    for k in range(K):
        b = int(rng.choice(side_b + moved))
        add(unitary_gate(random_unitary(rng, 4), side_a[k], b), 1)
        moved.append(side_a[k])
    rest_a = [q for q in side_a if q not in moved]
    for _ in range(budget - early):
        if rest_a and rng.random() < 0.3:
            add(random_gate(rng, rest_a), 0)
        else:
            add(random_gate(rng, side_b + moved), 1)
    groups = [[], []]
    for q in range(n):
        groups[0 if q in side_a else 1].append(q)
    for i, c in enumerate(owner):
        groups[c].append(n + i)
    final = [rest_a, sorted(side_b + moved)]
    return Circuit(n, tuple(gates)), groups, [g for g in final if g]


def random_general(rng, n):
    return General(n, table=rng.uniform(-1, 1, size=1 << n))


def random_blocks(rng, n, groups):
    """A product post-processing function with one block per qubit group."""
    blocks = [sorted(g) for g in groups if g]
    return Decomposable(n, blocks, [rng.uniform(-1, 1, size=1 << len(b)) for b in blocks])
