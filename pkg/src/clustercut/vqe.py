"""Hardware-efficient ansatz, SPSA, and energies evaluated whole or through cut fragments."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from functools import reduce

import numpy as np

from clustercut import estimator
from clustercut.circuit import (
    PAULI,
    Circuit,
    QCAlgorithm,
    basis_change_gates,
    gate,
    pauli_observable_expectation_post,
    unitary_gate,
)
from clustercut.cutting import plan_cuts
from clustercut.estimator import Estimate
from clustercut.network import statevector
from clustercut.rng import stream


def z_rot(beta: float) -> np.ndarray:
    """exp(-i beta Z)."""
    return np.diag([np.exp(-1j * beta), np.exp(1j * beta)])


def x_rot(beta: float) -> np.ndarray:
    """exp(-i beta X)."""
    c, s = np.cos(beta), np.sin(beta)
    return np.array([[c, -1j * s], [-1j * s, c]])


@dataclass(frozen=True)
class AnsatzSpec:
    """n qubits, D entangling layers; layers listed in ``pruned`` (1-based) use the pruned entangler."""

    n: int
    D: int
    entangler: str = "cz"  # cz chain or cnot ladder
    pruned: frozenset = frozenset()
    partition: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "pruned", frozenset(self.pruned))
        if self.entangler not in ("cz", "cnot"):
            raise ValueError(f"unknown entangler {self.entangler!r}")
        if any(not 1 <= k <= self.D for k in self.pruned):
            raise ValueError("pruned layers must lie in 1..D")

    @property
    def n_params(self) -> int:
        return (3 * self.D + 2) * self.n

    @property
    def halves(self) -> tuple:
        if self.partition is not None:
            return tuple(tuple(p) for p in self.partition)
        h = self.n // 2
        return (tuple(range(h)), tuple(range(h, self.n)))

    def entangler_pairs(self, pruned: bool = False) -> list:
        """Two-qubit gates of one entangling layer in time order."""
        if self.entangler == "cz":
            pairs = [(i, i + 1) for i in range(self.n - 1)]
        else:
            pairs = [(i, j) for i in range(self.n - 1) for j in range(i + 1, self.n)]
        if pruned:
            side = {q: k for k, part in enumerate(self.halves) for q in part}
            pairs = [(i, j) for i, j in pairs if side[i] == side[j]]
        return pairs


def layer_matrices(spec: AnsatzSpec, theta) -> list:
    """Per layer, the 2x2 rotation on each qubit: Z(t1) X(t2) Z(t3), or Z(t1) X(t2) for layer 0."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} parameters, got {theta.shape}")
    out = [[z_rot(theta[2 * j]) @ x_rot(theta[2 * j + 1]) for j in range(spec.n)]]
    base = 2 * spec.n
    for i in range(spec.D):
        layer = []
        for j in range(spec.n):
            t1, t2, t3 = theta[base + 3 * (i * spec.n + j): base + 3 * (i * spec.n + j) + 3]
            layer.append(z_rot(t1) @ x_rot(t2) @ z_rot(t3))
        out.append(layer)
    return out


def build_ansatz(spec: AnsatzSpec, theta) -> Circuit:
    """U_D U_ENT ... U_1 U_ENT U_0 as a gate list (U_0 first)."""
    layers = layer_matrices(spec, theta)
    gates = []
    for i, layer in enumerate(layers):
        if i > 0:
            kind = "cz" if spec.entangler == "cz" else "cnot"
            gates += [gate(kind, a, b) for a, b in spec.entangler_pairs(i in spec.pruned)]
        gates += [unitary_gate(m, j) for j, m in enumerate(layer)]
    return Circuit(spec.n, tuple(gates), f"ansatz-D{spec.D}")


@dataclass(frozen=True)
class PauliSumHamiltonian:
    terms: tuple  # (alpha, pauli string)

    @property
    def n(self) -> int:
        return len(self.terms[0][1]) if self.terms else 0

    def matrix(self) -> np.ndarray:
        dim = 1 << self.n
        out = np.zeros((dim, dim), dtype=complex)
        for alpha, label in self.terms:
            out += alpha * reduce(np.kron, [PAULI[p] for p in label])
        return out

    def ground_energy(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix())[0])

    @classmethod
    def random(cls, n: int, L: int, rng: np.random.Generator) -> "PauliSumHamiltonian":
        alphas = rng.uniform(-1, 1, size=L)
        labels = rng.integers(0, 4, size=(L, n))
        return cls(tuple((float(a), "".join("IXYZ"[k] for k in row)) for a, row in zip(alphas, labels)))

    @classmethod
    def diagonal(cls, values) -> "PauliSumHamiltonian":
        """Diagonal stand-in Hamiltonian with the given spectrum, expanded in Z strings."""
        values = np.asarray(values, dtype=float)
        n = int(round(math.log2(len(values))))
        terms = []
        for mask in range(1 << n):
            label = "".join("Z" if (mask >> (n - 1 - q)) & 1 else "I" for q in range(n))
            signs = np.array([(-1) ** bin(idx & mask).count("1") for idx in range(1 << n)])
            coef = float(values @ signs) / (1 << n)
            if abs(coef) > 1e-14:
                terms.append((coef, label))
        return cls(tuple(terms))


def energy(
    spec: AnsatzSpec,
    theta,
    H: PauliSumHamiltonian,
    mode: str = "full",
    partition=None,
    shots: int | None = None,
    seed: int = 0,
) -> Estimate:
    """<0|U^dag H U|0>; ``cut`` mode evaluates each Pauli term through fragment circuits.

    Cut mode uses exact fragments unless ``shots`` is given, in which case every
    fragment setting is sampled ``shots`` times.
    """
    t0 = time.perf_counter()
    circ = build_ansatz(spec, theta)
    if mode == "full":
        psi = statevector(circ)
        value = float(np.real(np.conj(psi) @ H.matrix() @ psi))
        return Estimate(value, 0.0, "full", 0, 1, (time.perf_counter() - t0) * 1e3)
    if mode != "cut":
        raise ValueError(f"unknown mode {mode!r}")
    partition = partition or spec.halves
    total, runs = 0.0, 0
    for k, (alpha, label) in enumerate(H.terms):
        if set(label) <= {"I"}:
            total += alpha
            continue
        alg = QCAlgorithm(circ.then(*basis_change_gates(label)), pauli_observable_expectation_post(label))
        plan = plan_cuts(alg, partition=partition)
        if shots is None:
            est = estimator.estimate_tensor_contract(plan, exact=True)
        else:
            est = estimator.estimate_tensor_contract(plan, seed=seed + 7919 * k, shots_per_entry=shots)
        total += alpha * est.value
        runs += est.fragments_executed
    return Estimate(total, 0.0, "cut", shots or 0, runs, (time.perf_counter() - t0) * 1e3)


# -- SPSA --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpsaConfig:
    iterations: int = 200
    seed: int = 0
    c0: float = 0.3
    c_power: float = 0.5
    a0: float = 1.0
    a_power: float = 0.3

    def c(self, k: int) -> float:
        return self.c0 / k**self.c_power

    def a(self, k: int) -> float:
        return self.a0 / k**self.a_power


@dataclass(frozen=True)
class SpsaStep:
    k: int
    theta: np.ndarray
    f_plus: float
    f_minus: float
    f_ideal: float


def spsa_minimize(objective, theta0, cfg: SpsaConfig, ideal=None) -> list:
    """theta(k+1) = theta(k) - a_k (F(theta+) - F(theta-)) / (2 c_k r(k)).

    ``ideal`` (default: ``objective``) evaluates F(theta(k)) for the trace.
    """
    ideal = ideal or objective
    theta = np.array(theta0, dtype=float)
    rng = stream(cfg.seed, "spsa-r")
    trace = []
    for k in range(1, cfg.iterations + 1):
        r = rng.choice(np.array([-1.0, 1.0]), size=theta.shape)
        ck = cfg.c(k)
        fp = float(objective(theta + ck * r))
        fm = float(objective(theta - ck * r))
        trace.append(SpsaStep(k, theta.copy(), fp, fm, float(ideal(theta))))
        theta = theta - cfg.a(k) * (fp - fm) / (2 * ck) * r
    return trace


def initial_theta(spec: AnsatzSpec, seed: int) -> np.ndarray:
    return stream(seed, "theta0").uniform(-np.pi, np.pi, size=spec.n_params)


def spsa_vqe(spec, H, cfg: SpsaConfig, mode: str = "full", theta0=None, shots=None):
    theta0 = initial_theta(spec, cfg.seed) if theta0 is None else theta0
    f = lambda th: energy(spec, th, H, mode, shots=shots, seed=cfg.seed).value
    f_ideal = lambda th: energy(spec, th, H, "full").value
    return spsa_minimize(f, theta0, cfg, ideal=f_ideal)


def write_trace_csv(path, trace, v_opt: float) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "F_plus", "F_minus", "F_ideal", "relative_error"])
        for s in trace:
            w.writerow([s.k, s.f_plus, s.f_minus, s.f_ideal, abs((s.f_ideal - v_opt) / v_opt)])


# -- batched simulation for the pruning study ---------------------------------------


def _entangler_action(spec: AnsatzSpec, pruned: bool):
    """('perm', idx) for CNOT ladders or ('phase', signs) for CZ chains, acting on 2^n amplitudes."""
    n = spec.n
    idx = np.arange(1 << n)
    if spec.entangler == "cz":
        signs = np.ones(1 << n)
        for a, b in spec.entangler_pairs(pruned):
            both = ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
            signs *= 1 - 2 * both
        return "phase", signs
    src = idx.copy()  # new[i] = old[src[i]]
    for a, b in spec.entangler_pairs(pruned):
        # composing with the next CNOT: new[i] = prev[i ^ flip(i)]
        flip = ((idx >> (n - 1 - a)) & 1) << (n - 1 - b)
        src = src[idx ^ flip]
    return "perm", src


def batched_states(spec: AnsatzSpec, thetas: np.ndarray) -> np.ndarray:
    """U(theta)|0> for a batch of parameter vectors, shape (B, 2^n)."""
    thetas = np.atleast_2d(thetas)
    B, n = thetas.shape[0], spec.n
    psi = np.zeros((B, 1 << n), dtype=complex)
    psi[:, 0] = 1.0
    actions = {p: _entangler_action(spec, p) for p in (False, True)}

    def rot_layer(mats):  # mats: (B, n, 2, 2)
        nonlocal psi
        for q in range(n):
            v = psi.reshape(B, 1 << q, 2, 1 << (n - 1 - q))
            psi = np.einsum("bij,bajc->baic", mats[:, q], v).reshape(B, -1)

    def zx(t1, t2):
        c, s = np.cos(t2), np.sin(t2)
        e1 = np.exp(-1j * t1)
        m = np.empty(t1.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = e1 * c
        m[..., 0, 1] = -1j * e1 * s
        m[..., 1, 0] = -1j * np.conj(e1) * s
        m[..., 1, 1] = np.conj(e1) * c
        return m

    def zxz(t1, t2, t3):
        m = zx(t1, t2)
        e3 = np.exp(-1j * t3)
        m[..., :, 0] *= e3[..., None]
        m[..., :, 1] *= np.conj(e3)[..., None]
        return m

    th0 = thetas[:, : 2 * n].reshape(B, n, 2)
    rot_layer(zx(th0[..., 0], th0[..., 1]))
    base = 2 * n
    for i in range(1, spec.D + 1):
        kind, data = actions[i in spec.pruned]
        psi = psi * data if kind == "phase" else psi[:, data]
        th = thetas[:, base + 3 * n * (i - 1): base + 3 * n * i].reshape(B, n, 3)
        rot_layer(zxz(th[..., 0], th[..., 1], th[..., 2]))
    return psi


def batched_energies(spec, thetas, h_mats) -> np.ndarray:
    """Energies for paired rows: thetas (B, P) with h_mats (B, dim, dim)."""
    psi = batched_states(spec, thetas)
    return np.real(np.einsum("bi,bij,bj->b", np.conj(psi), h_mats, psi))


PRUNING_GAIN = 0.01

REGIMES = {
    "D9_D1_9": (9, frozenset()),
    "D9_D1_3": (9, frozenset({1, 2, 4, 6, 8, 9})),
    "D3_D1_3": (3, frozenset()),
}


def pruning_experiment(
    n: int = 6,
    regimes=None,
    n_hamiltonians: int = 20,
    iterations: int = 10_000,
    L: int = 50,
    seed: int = 0,
    entangler: str = "cnot",
    a0: float = PRUNING_GAIN,
) -> dict:
    """Mean relative-error traces |(F(theta(k)) - v_opt) / v_opt| per regime.

    Every regime sees the same Hamiltonians; runs are batched across Hamiltonians.
    The learning-rate schedule is a0 * k^-0.3; with a0 = 1 the 174-parameter
    ansatz does not settle, so the study defaults to a smaller a0.
    """
    regimes = regimes or REGIMES
    hams = [PauliSumHamiltonian.random(n, L, stream(seed, "ham", h)) for h in range(n_hamiltonians)]
    mats = np.array([h.matrix() for h in hams])
    v_opt = np.array([np.linalg.eigvalsh(m)[0] for m in mats])
    cfg = SpsaConfig(iterations=iterations, seed=seed, a0=a0)
    out = {"iteration": np.arange(1, iterations + 1)}
    mats3 = np.concatenate([mats, mats, mats])
    for name, (D, pruned) in regimes.items():
        spec = AnsatzSpec(n, D, entangler, pruned)
        P = spec.n_params
        theta = np.stack([initial_theta(spec, seed * 1000 + h) for h in range(n_hamiltonians)])
        rng = stream(seed, "spsa-r", name)
        rel = np.empty((iterations, n_hamiltonians))
        for k in range(1, iterations + 1):
            r = rng.choice(np.array([-1.0, 1.0]), size=theta.shape)
            ck = cfg.c(k)
            batch = np.concatenate([theta + ck * r, theta - ck * r, theta])
            e = batched_energies(spec, batch, mats3)
            fp, fm, f = np.split(e, 3)
            rel[k - 1] = np.abs((f - v_opt) / v_opt)
            theta = theta - cfg.a(k) * ((fp - fm) / (2 * ck))[:, None] * r
        out[name] = rel.mean(axis=1)
        out[name + "_params"] = P
    return out


def final_value(trace: np.ndarray, tail: float = 0.05) -> float:
    """Mean of the last ``tail`` fraction of a trace."""
    k = max(1, int(len(trace) * tail))
    return float(np.mean(trace[-k:]))


def write_pruning_csv(path, result: dict) -> None:
    names = [k for k in result if k != "iteration" and not k.endswith("_params")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration"] + names)
        for i, it in enumerate(result["iteration"]):
            w.writerow([int(it)] + [float(result[nm][i]) for nm in names])
