import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import bridged_circuit, random_general, random_unitary
from clustercut import backend, estimator
from clustercut.circuit import NAMED, Circuit, General, QCAlgorithm, unitary_gate
from clustercut.cutting import Fragment, Realization, instantiate, plan_cuts
from clustercut.errors import WidthExceeded
from clustercut.network import Clustering, statevector

H = NAMED["h"]
Z_TABLE = np.array([1.0, -1.0])


def prep_then(label, gates=(), meas=None):
    """One-wire fragment: cut prep, gates, then a terminal Z readout or a cut measurement."""
    ops = [("cut", 0, "in", 0)] + [("gate", (0,), u) for u in gates]
    actions = [("prep", label)]
    terminal = ((0, 0),)
    if meas is not None:
        ops.append(("cut", 1, "out", 0))
        actions.append(("meas", meas))
        terminal = ()
    return Realization(Fragment(0, 1, tuple(ops), terminal), tuple(actions))


@pytest.mark.parametrize(
    "label,gates,meas,want",
    [("0", (), None, 1.0), ("+", (), None, 0.0), ("0", (H,), "X", 1.0), ("1", (), "Z", -1.0), ("-i", (), "Y", -1.0)],
)
def test_exact_engine_examples(label, gates, meas, want):
    real = prep_then(label, gates, meas)
    table = Z_TABLE if meas is None else None
    assert backend.run_fragment_exact(real, table) == pytest.approx(want, abs=1e-12)


def test_exact_engine_refuses_wide_fragments():
    with pytest.raises(WidthExceeded):
        backend.run_fragment_exact(prep_then("0"), Z_TABLE, max_width=0)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_exact_values_are_bounded(seed):
    rng = np.random.default_rng(seed)
    circ, groups, _ = bridged_circuit(rng, 4, 6, 1)
    plan = plan_cuts(QCAlgorithm(circ, random_general(rng, 4)), Clustering.from_groups(groups))
    for t in range(8):
        for real in instantiate(plan, (t,))[0]:
            f = np.ones(1 << len(real.fragment.terminal))
            assert abs(backend.run_fragment_exact(real, f)) <= 1 + 1e-9


def test_shot_on_eigenstate_is_deterministic():
    real = prep_then("0", meas="Z")
    sig = {backend.run_fragment_shot(real, seed=0, shot=k).sigmas for k in range(50)}
    assert sig == {(1,)}


def test_shot_on_plus_state_is_unbiased():
    real = prep_then("+", meas="Z")
    sigmas = [backend.run_fragment_shot(real, seed=7, shot=k).sigmas[0] for k in range(10_000)]
    assert abs(np.mean(sigmas)) <= 0.05


def test_shot_stream_is_reproducible():
    real = prep_then("+", gates=(random_unitary(np.random.default_rng(0), 2),), meas="X")
    a = [backend.run_fragment_shot(real, seed=3, shot=k) for k in range(100)]
    b = [backend.run_fragment_shot(real, seed=3, shot=k) for k in range(100)]
    assert a == b


@pytest.mark.parametrize("seed", range(4))
def test_shot_mean_converges_to_exact(seed):
    rng = np.random.default_rng(seed)
    ops = (
        ("gate", (0, 1), random_unitary(rng, 4)),
        ("cut", 0, "out", 1),
        ("cut", 1, "in", 1),
        ("gate", (1, 0), random_unitary(rng, 4)),
    )
    real = Realization(Fragment(0, 2, ops, ((0, 0), (1, 1))), (("meas", "Y"), ("prep", "+")))
    table = rng.uniform(-1, 1, 4)
    prog = backend.compile_program(real)
    n = 20_000
    idx, sig = backend.sample_program(prog, rng.random((n, prog.n_uniforms)))
    est = float(np.mean(sig * table[idx]))
    assert abs(est - backend.run_fragment_exact(real, table)) <= 4 / np.sqrt(n)


def test_gates_preserve_norm():
    rng = np.random.default_rng(0)
    n = 5
    gates = []
    for _ in range(10_000):
        if rng.random() < 0.5:
            gates.append(unitary_gate(random_unitary(rng, 2), int(rng.integers(n))))
        else:
            a, b = rng.choice(n, 2, replace=False)
            gates.append(unitary_gate(random_unitary(rng, 4), int(a), int(b)))
    assert np.linalg.norm(statevector(Circuit(n, tuple(gates)))) == pytest.approx(1.0, abs=1e-9)


def reentrant_circuit(rng):
    """The middle gate leaves wire 0's cluster and returns, so the plan cuts twice."""
    gates = (
        unitary_gate(random_unitary(rng, 4), 0, 1),
        unitary_gate(random_unitary(rng, 2), 0),
        unitary_gate(random_unitary(rng, 4), 0, 1),
    )
    return QCAlgorithm(Circuit(2, gates), General(2, table=rng.uniform(-1, 1, 4)))


@pytest.mark.parametrize("seed", range(5))
def test_recycled_fragment_matches_oracle(seed):
    alg = reentrant_circuit(np.random.default_rng(seed))
    plan = plan_cuts(alg, Clustering.from_groups([[0, 1, 2, 4], [3]]))
    assert plan.K == 2
    # without recycling the first cluster needs three wires: two qubits plus a fresh prep wire
    assert plan.fragments[0].width == 2
    want = oracles.expectation(alg.circuit, alg.post.values())
    assert estimator.estimate_enumerate(plan).value == pytest.approx(want, abs=1e-12)
