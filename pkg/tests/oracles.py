"""Independent dense reference simulators built from Kronecker products only."""

from functools import reduce

import numpy as np

I2 = np.eye(2)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def full_operator(u, targets, n):
    """Embed u on ``targets`` by sandwiching it between SWAP networks; qubit 0 is leftmost."""
    targets = list(targets)
    k = len(targets)
    order = list(range(n))
    perm = np.eye(1 << n, dtype=complex)
    # bring targets to the front with adjacent swaps
    for pos, q in enumerate(targets):
        at = order.index(q)
        while at > pos:
            ops = [I2] * (at - 1) + [SWAP] + [I2] * (n - at - 1)
            perm = reduce(np.kron, ops) @ perm
            order[at - 1], order[at] = order[at], order[at - 1]
            at -= 1
    body = np.kron(u, np.eye(1 << (n - k)))
    return perm.conj().T @ body @ perm


def state(circuit):
    psi = np.zeros(1 << circuit.n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        psi = full_operator(g.unitary, g.targets, circuit.n) @ psi
    return psi


def unitary(circuit):
    out = np.eye(1 << circuit.n, dtype=complex)
    for g in circuit.gates:
        out = full_operator(g.unitary, g.targets, circuit.n) @ out
    return out


def expectation(circuit, table):
    """E_y f(y) with f given as a table over bitstrings (qubit 0 most significant)."""
    p = np.abs(state(circuit)) ** 2
    return float(p @ np.asarray(table, dtype=float))


def pauli_string(label):
    mats = {"I": I2, "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
    return reduce(np.kron, [np.asarray(mats[c], dtype=complex) for c in label])


def expm_hermitian(h, t):
    """exp(-i t h) via a Taylor series with scaling and squaring (no eigensolver)."""
    a = -1j * t * np.asarray(h, dtype=complex)
    norm = np.linalg.norm(a, 1)
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    a = a / (1 << s)
    out = np.eye(len(a), dtype=complex)
    term = np.eye(len(a), dtype=complex)
    for k in range(1, 30):
        term = term @ a / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out
