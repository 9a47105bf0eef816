"""Acceptance criteria 1-9, each checked at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (collected into the
pytest summary). Run directly with ``python3 tests/test_acceptance.py``.
"""

import json
import math
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from helpers import bridged_circuit, random_blocks, random_general
from clustercut import backend, estimator, hamsim, vqe
from clustercut.circuit import Circuit, QCAlgorithm, circuit_from_json, gate, post_from_json
from clustercut.cli import demo_path
from clustercut.contraction import contraction_complexity
from clustercut.cutting import cut_rule_table, decomposable_tables, plan_cuts
from clustercut.network import Clustering
from clustercut.rng import stream


def report(n, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.3g}s, budget {budget:g}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def demo_plan():
    data = json.load(open(demo_path()))
    circ = circuit_from_json(data["circuit"])
    alg = QCAlgorithm(circ, post_from_json(data["post"], circ.n))
    return plan_cuts(alg, Clustering.from_groups(data["clustering"])), circ, alg.post


def random_party_hamiltonian(rng, sizes=(3, 3), inter_terms=2, inter_scale=0.3):
    offsets = np.cumsum((0,) + sizes)
    parties = [tuple(range(offsets[k], offsets[k + 1])) for k in range(len(sizes))]
    terms = []
    for party in parties:
        for _ in range(rng.integers(2, 6)):
            if rng.random() < 0.5:
                q = (int(rng.choice(party)),)
            else:
                q = tuple(int(x) for x in rng.choice(party, size=2, replace=False))
            label = "".join(rng.choice(list("XYZ")) for _ in q)
            terms.append(hamsim.PauliTerm(label, q, float(rng.uniform(-1, 1))))
    for _ in range(inter_terms):
        q = (int(rng.choice(parties[0])), int(rng.choice(parties[1])))
        label = "".join(rng.choice(list("XYZ")) for _ in q)
        terms.append(hamsim.PauliTerm(label, q, float(rng.uniform(-inter_scale, inter_scale))))
    return hamsim.ClusteredHamiltonian(sum(sizes), tuple(parties), tuple(terms))


def dense_hamiltonian(H):
    out = np.zeros((1 << H.n, 1 << H.n), dtype=complex)
    for t in H.terms:
        out += oracles.full_operator(t.coeff * oracles.pauli_string(t.pauli), t.qubits, H.n)
    return out


def trotter_oracle(H, t, m1, m2):
    """The nested product formula built from dense Taylor exponentials."""
    dim = 1 << H.n
    step_a = np.eye(dim, dtype=complex)
    for term in H.intra:
        h = oracles.full_operator(term.coeff * oracles.pauli_string(term.pauli), term.qubits, H.n)
        step_a = oracles.expm_hermitian(h, t / (m1 * m2)) @ step_a
    step_b = np.eye(dim, dtype=complex)
    for term in H.inter:
        h = oracles.full_operator(term.coeff * oracles.pauli_string(term.pauli), term.qubits, H.n)
        step_b = oracles.expm_hermitian(h, t / m1) @ step_b
    step = step_b @ np.linalg.matrix_power(step_a, m2)
    return np.linalg.matrix_power(step, m1)


def test_criterion_1_swap_identity():
    t0 = time.perf_counter()
    err = np.abs(cut_rule_table().swap_sum() - oracles.SWAP).max()
    elapsed = time.perf_counter() - t0
    report(1, err <= 1e-12, f"max |sum - SWAP| = {err:.1e} (tol 1e-12)", elapsed, 1e-3)


def test_criterion_2_exact_reconstruction():
    rng = stream(2, "criterion-2")
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(50):
        K = (1, 2, 3)[i % 3]
        n = int(rng.integers(max(K + 1, 3), 9))
        m = int(rng.integers(K + 2, 25))
        circ, groups, _ = bridged_circuit(rng, n, m, K)
        post = random_general(rng, n)
        plan = plan_cuts(QCAlgorithm(circ, post), Clustering.from_groups(groups))
        assert plan.params.K == K
        value = estimator.estimate_enumerate(plan).value
        worst = max(worst, abs(value - oracles.expectation(circ, post.values())))
    elapsed = time.perf_counter() - t0
    report(2, worst <= 1e-9, f"50 circuits, max error {worst:.1e} (tol 1e-9)", elapsed, 60)


def test_criterion_3_monte_carlo_calibration():
    plan, circ, post = demo_plan()
    ref = oracles.expectation(circ, post.values())
    eps = 0.1
    n = estimator.plan_samples(plan.K, plan.r, 0, eps, "montecarlo").N
    assert plan.K == 1 and n == 6400
    t0 = time.perf_counter()
    hits = sum(
        abs(estimator.estimate_montecarlo(plan, eps, seed=s, n_samples=n).value - ref) <= eps
        for s in range(30)
    )
    elapsed = time.perf_counter() - t0
    report(3, hits >= 20, f"{hits}/30 runs within eps=0.1 with N={n}", elapsed, 300)


def test_criterion_4_perturbation_bound():
    rng = stream(4, "criterion-4")
    delta = 1e-3
    t0 = time.perf_counter()
    worst_ratio = 0.0
    for trial in range(100):
        dp = 1 + trial % 2
        n = int(rng.integers(dp + 1, 6))
        circ, groups, final = bridged_circuit(rng, n, int(rng.integers(dp + 1, 10)), dp)
        post = random_blocks(rng, n, final)
        plan = plan_cuts(QCAlgorithm(circ, post), Clustering.from_groups(groups), mode="tensor")
        assert plan.r == 2 and plan.K == dp
        tables = decomposable_tables(plan)
        exact = estimator.fragment_tensors(
            plan, lambda j, real: backend.run_fragment_exact(real, tables[j])
        )
        noisy = [a + delta * rng.choice([-1.0, 1.0], size=a.shape) for a in exact]
        dev = abs(estimator.contract_plan(plan, noisy) - estimator.contract_plan(plan, exact))
        bound = (math.e - 1) * plan.r * 8**dp * delta
        worst_ratio = max(worst_ratio, dev / bound)
    elapsed = time.perf_counter() - t0
    report(4, worst_ratio <= 1.0, f"100 trials, max deviation/bound {worst_ratio:.3f}", elapsed, 10)


def test_criterion_5_contraction_complexity():
    t0 = time.perf_counter()
    fixed = {
        "triangle": (3, [(0, 1), (1, 2), (0, 2)], 2),
        "path-5": (5, [(0, 1), (1, 2), (2, 3), (3, 4)], 2),
        "edge": (2, [(0, 1)], 1),
    }
    ok = all(contraction_complexity(r, e, "exact")[0] == want for r, e, want in fixed.values())
    rng = stream(5, "criterion-5")
    for _ in range(200):
        r = int(rng.integers(2, 9))
        k = int(rng.integers(1, 13))
        edges = []
        for _ in range(k):
            u, v = rng.choice(r, size=2, replace=False)
            edges.append((int(u), int(v)))
        exact = contraction_complexity(r, edges, "exact")[0]
        greedy = contraction_complexity(r, edges, "greedy")[0]
        ok = ok and exact <= len(edges) and greedy >= exact
    elapsed = time.perf_counter() - t0
    report(5, ok, "fixed graphs 2/2/1; 200 random multigraphs exact <= K and greedy >= exact", elapsed, 30)


def test_criterion_6_trotter_bound():
    rng = stream(6, "criterion-6")
    eps, t = 0.1, 1.0
    t0 = time.perf_counter()
    worst = drift = 0.0
    for _ in range(20):
        H = random_party_hamiltonian(rng)
        steps = hamsim.trotter_steps(H.h_A, H.h_B, H.d_prime, t, eps)
        circ = hamsim.build_trotter_circuit(H, t, steps.m1, steps.m2)
        approx = hamsim.circuit_unitary(circ)
        drift = max(drift, np.abs(approx - trotter_oracle(H, t, steps.m1, steps.m2)).max())
        exact = oracles.expm_hermitian(dense_hamiltonian(H), t)
        worst = max(worst, np.linalg.norm(approx - exact, 2))
    elapsed = time.perf_counter() - t0
    report(
        6, worst <= 4 * eps and drift < 1e-9,
        f"20 Hamiltonians, max ||U~ - U|| = {worst:.2e} (bound 4 eps = 0.4), circuit vs oracle {drift:.0e}",
        elapsed, 120,
    )


def test_criterion_7_end_to_end_correlation():
    terms = []
    for off in (0, 3):
        terms += [hamsim.PauliTerm("ZZ", (off, off + 1), 1.0), hamsim.PauliTerm("ZZ", (off + 1, off + 2), 1.0)]
        terms += [hamsim.PauliTerm("X", (off + k,), 0.5) for k in range(3)]
    terms.append(hamsim.PauliTerm("ZZ", (2, 3), 0.2))
    H = hamsim.ClusteredHamiltonian(6, ((0, 1, 2), (3, 4, 5)), tuple(terms))
    prep = (gate("ry", 0, angle=0.4), gate("h", 2), gate("ry", 3, angle=-0.7), gate("h", 4))
    obs = (hamsim.PartyObservable.pauli("IZZ", (0, 1, 2)), hamsim.PartyObservable.pauli("ZZI", (3, 4, 5)))
    task = hamsim.CorrelationTask(H, prep, obs, t=1.0, eps=0.1)
    assert abs(H.h_B - 0.2) < 1e-12
    psi0 = oracles.state(Circuit(6, prep))
    psi = oracles.expm_hermitian(dense_hamiltonian(H), 1.0) @ psi0
    o = oracles.pauli_string("IZZZZI")
    ref = float(np.real(np.conj(psi) @ o @ psi))
    t0 = time.perf_counter()
    est = estimator.median_of_runs(
        lambda s: hamsim.correlation(task, mode="montecarlo", seed=s, max_width=3), fail_prob=0.05, seed=0
    )
    elapsed = time.perf_counter() - t0
    err = abs(est.value - ref)
    report(
        7, err <= 0.1 and est.meta["fragment_width"] <= 3,
        f"estimate {est.value:.4f} vs exact {ref:.4f}, |err| {err:.3f} (tol 0.1), "
        f"median of {est.meta['repetitions']}, width {est.meta['fragment_width']}",
        elapsed, 600,
    )


def test_criterion_8_vqe_cut_equivalence():
    rng = stream(8, "criterion-8")
    spec = vqe.AnsatzSpec(6, 1, "cz", partition=((0, 1, 2), (3, 4, 5)))
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        theta = rng.uniform(-np.pi, np.pi, size=spec.n_params)
        H = vqe.PauliSumHamiltonian.random(6, 10, rng)
        full = vqe.energy(spec, theta, H, "full").value
        cut = vqe.energy(spec, theta, H, "cut").value
        worst = max(worst, abs(full - cut))
    elapsed = time.perf_counter() - t0
    report(8, worst <= 1e-8 and spec.n_params == 30, f"20 thetas, max |cut - full| {worst:.1e}, {spec.n_params} params", elapsed, 60)


@pytest.mark.slow
def test_criterion_9_pruning_ordering():
    t0 = time.perf_counter()
    result = vqe.pruning_experiment(n=6, n_hamiltonians=20, iterations=10_000, seed=0)
    elapsed = time.perf_counter() - t0
    full, mixed, shallow = (vqe.final_value(result[k]) for k in ("D9_D1_9", "D9_D1_3", "D3_D1_3"))
    gap_mixed, gap_shallow = abs(mixed - full), abs(shallow - full)
    report(
        9, gap_mixed < gap_shallow,
        f"final rel. error D9/9 {full:.4f}, D9/3 {mixed:.4f}, D3/3 {shallow:.4f}; "
        f"|D9/3 - D9/9| {gap_mixed:.4f} < |D3/3 - D9/9| {gap_shallow:.4f}",
        elapsed, 1800,
    )


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
