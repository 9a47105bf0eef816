import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import bridged_circuit, random_blocks, random_general
from clustercut import backend, estimator
from clustercut.circuit import Circuit, General, QCAlgorithm, gate, pauli_observable_expectation_post
from clustercut.cutting import instantiate, plan_cuts
from clustercut.errors import BudgetExceeded, NotDecomposable
from clustercut.network import Clustering


@pytest.mark.parametrize(
    "K,eps,n",
    [(1, 0.1, 6400), (0, 0.1, 400), (0, 0.5, 16), (2, 1.0, 1024)],
)
def test_montecarlo_sample_counts(K, eps, n):
    sp = estimator.plan_samples(K, 2, 0, eps)
    assert sp.a == 4**K and sp.N == n and sp.runs == 2 * n


def test_tensor_sample_counts():
    sp = estimator.plan_samples(0, 2, 1, 0.1, mode="tensor")
    delta = 0.1 / ((math.e - 1) * 16)
    assert sp.D == 16 and sp.delta == pytest.approx(delta)
    assert sp.N_entry == math.ceil(2 * math.log(96) / delta**2)
    assert sp.runs == sp.N_entry * 16


@pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
def test_epsilon_must_be_in_unit_interval(eps):
    with pytest.raises(ValueError):
        estimator.plan_samples(1, 2, 1, eps)


def one_cut(seed, n=4, m=7, decomposable=False):
    rng = np.random.default_rng(seed)
    circ, groups, final = bridged_circuit(rng, n, m, 1)
    post = random_blocks(rng, n, final) if decomposable else random_general(rng, n)
    alg = QCAlgorithm(circ, post)
    return plan_cuts(alg, Clustering.from_groups(groups)), oracles.expectation(circ, post.values())


def two_cuts(seed, decomposable=True):
    rng = np.random.default_rng(seed)
    circ, groups, final = bridged_circuit(rng, 4, 8, 2)
    post = random_blocks(rng, 4, final) if decomposable else random_general(rng, 4)
    alg = QCAlgorithm(circ, post)
    return plan_cuts(alg, Clustering.from_groups(groups)), oracles.expectation(circ, post.values())


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("build", [one_cut, two_cuts], ids=["K1", "K2"])
def test_enumerate_equals_oracle(build, seed):
    plan, want = build(seed)
    est = estimator.estimate_enumerate(plan)
    assert est.value == pytest.approx(want, abs=1e-9)
    assert est.stderr == 0.0


def test_uncut_plan_is_the_oracle():
    rng = np.random.default_rng(0)
    circ, _, _ = bridged_circuit(rng, 3, 5, 1)
    post = random_general(rng, 3)
    plan = plan_cuts(QCAlgorithm(circ, post), Clustering({v: 0 for v in range(3 + 5 + 1)}))
    assert plan.K == 0
    assert estimator.estimate_enumerate(plan).value == pytest.approx(oracles.expectation(circ, post.values()), abs=1e-12)


BELL = Circuit(2, (gate("h", 0), gate("cnot", 0, 1)))


def test_bell_cut_between_h_and_cnot():
    alg = QCAlgorithm(BELL, pauli_observable_expectation_post("ZZ"))
    plan = plan_cuts(alg, Clustering.from_groups([[0, 2], [1, 3, 4]]))
    assert plan.K == 1
    assert estimator.estimate_enumerate(plan).value == pytest.approx(1.0, abs=1e-12)


def test_bell_cnot_gate_cut():
    alg = QCAlgorithm(BELL, pauli_observable_expectation_post("ZZ"))
    plan = plan_cuts(alg, partition=((0,), (1,)))
    assert plan.alphabet() == [6]
    assert estimator.estimate_enumerate(plan).value == pytest.approx(1.0, abs=1e-12)


def test_enumerate_respects_budget():
    plan, _ = two_cuts(0)
    with pytest.raises(BudgetExceeded):
        estimator.estimate_enumerate(plan, budget=63)


@pytest.mark.parametrize("seed", range(3))
def test_uniform_average_is_unbiased(seed):
    plan, want = one_cut(seed)
    terms = []
    for s in itertools.product(range(8)):
        reals, ca = instantiate(plan, s)
        dists = [backend.quasi_distribution(r) for r in reals]
        terms.append(ca.weight * estimator._joint_value(plan, dists))
    assert np.mean(terms) == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("K", [1, 2])
def test_sample_magnitude_bound_for_constant_f(K):
    rng = np.random.default_rng(K)
    circ, groups, _ = bridged_circuit(rng, 4, 8, K)
    plan = plan_cuts(QCAlgorithm(circ, General(4, table=np.ones(16))), Clustering.from_groups(groups))
    for s in itertools.product(*(range(8) for _ in range(K))):
        reals, ca = instantiate(plan, s)
        t = np.prod([backend.run_fragment_exact(r) for r in reals])
        assert abs(ca.weight * t) <= 4**K + 1e-9


def test_montecarlo_within_epsilon_in_most_runs():
    plan, want = one_cut(11)
    hits = sum(abs(estimator.estimate_montecarlo(plan, 0.2, seed=k).value - want) < 0.2 for k in range(30))
    assert hits >= 20


def test_montecarlo_is_deterministic():
    plan, _ = one_cut(2)
    a = estimator.estimate_montecarlo(plan, 0.5, seed=4)
    b = estimator.estimate_montecarlo(plan, 0.5, seed=4)
    assert (a.value, a.stderr, a.samples_used) == (b.value, b.stderr, b.samples_used)


@pytest.mark.parametrize("decomposable", [False, True])
def test_montecarlo_ignores_worker_count(decomposable):
    plan, _ = one_cut(3, decomposable=decomposable)
    one = estimator.estimate_montecarlo(plan, 0.5, seed=1, workers=1).value
    four = estimator.estimate_montecarlo(plan, 0.5, seed=1, workers=4).value
    assert one == four


def test_montecarlo_with_exact_fragments_converges():
    plan, want = two_cuts(1)
    est = estimator.estimate_montecarlo(plan, seed=0, n_samples=200_000, exact_fragments=True)
    assert abs(est.value - want) <= 5 * est.stderr + 1e-3


def test_exact_fragments_need_decomposable_f():
    plan, _ = one_cut(0)
    with pytest.raises(NotDecomposable):
        estimator.estimate_montecarlo(plan, 0.5, exact_fragments=True)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_tensor_exact_entries_equal_enumerate(seed):
    plan, want = one_cut(seed, decomposable=True)
    got = estimator.estimate_tensor_contract(plan, exact=True).value
    assert got == pytest.approx(estimator.estimate_enumerate(plan).value, abs=1e-9)
    assert got == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_tensor_two_cuts_equal_oracle(seed):
    plan, want = two_cuts(seed)
    assert estimator.estimate_tensor_contract(plan, exact=True).value == pytest.approx(want, abs=1e-9)


def test_tensor_mode_needs_decomposable_f():
    plan, _ = one_cut(0)
    with pytest.raises(NotDecomposable):
        estimator.estimate_tensor_contract(plan, exact=True)


def test_tensor_shot_entries_are_close():
    plan, want = one_cut(5, decomposable=True)
    est = estimator.estimate_tensor_contract(plan, seed=0, shots_per_entry=4000)
    # each of the 8 terms carries |c| = 1/2 and an entry error of a few / sqrt(4000)
    assert abs(est.value - want) < 0.15


def test_entry_perturbation_bound():
    plan, _ = one_cut(7, decomposable=True)
    ex = estimator._ExactCache(plan)
    tensors = estimator.fragment_tensors(plan, ex.value)
    base = estimator.contract_plan(plan, tensors)
    delta = 1e-3
    moved = estimator.contract_plan(plan, [t + delta for t in tensors])
    assert plan.r == 2 and max(t.ndim for t in tensors) == 1
    assert abs(moved - base) <= (math.e - 1) * 2 * 8 * delta


def test_entries_are_bounded():
    plan, _ = two_cuts(4)
    ex = estimator._ExactCache(plan)
    for t in estimator.fragment_tensors(plan, ex.value):
        assert np.abs(t).max() <= 1 + 1e-9


def test_estimate_dispatches_by_mode():
    plan, want = one_cut(0, decomposable=True)
    for mode in ("enumerate", "tensor"):
        kw = {"exact": True} if mode == "tensor" else {}
        assert estimator.estimate(plan, mode, **kw).value == pytest.approx(want, abs=1e-9)
    with pytest.raises(ValueError):
        estimator.estimate(plan, "nope")


def test_median_of_runs_picks_the_middle():
    calls = []

    def fake(seed):
        calls.append(seed)
        return estimator.Estimate(float((seed * 5) % 7), 0.0, "montecarlo", 1, 1)

    mid = estimator.median_of_runs(fake, 0.05, seed=10)
    assert calls == list(range(10, 17))
    assert mid.value == 3.0 and mid.meta["repetitions"] == 7


def test_estimate_json_has_required_keys():
    plan, _ = one_cut(0)
    data = estimator.estimate_enumerate(plan).to_json()
    assert {"value", "stderr", "mode", "samples", "fragments", "wallclock_ms"} <= set(data)
