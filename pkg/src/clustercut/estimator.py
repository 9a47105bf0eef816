"""Recombine fragment results into the value of the uncut algorithm.

Three modes share one plan:

* ``enumerate``  explicit sum over every cut assignment with exact fragments
* ``montecarlo`` sample assignments, run each fragment once per sample
* ``tensor``     estimate every fragment tensor entry, then contract the cluster graph
"""

from __future__ import annotations

import itertools
import math
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from clustercut import backend
from clustercut.circuit import General, index_of
from clustercut.contraction import contract_with_order, contraction_complexity
from clustercut.cutting import CutPlan, Realization, decomposable_tables
from clustercut.errors import BudgetExceeded, NotDecomposable, OracleTooLarge
from clustercut.network import oracle_limit
from clustercut.rng import stream

DEFAULT_BUDGET = 2_000_000


@dataclass
class Estimate:
    value: float
    stderr: float
    mode: str
    samples_used: int
    fragments_executed: int
    wallclock_ms: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "mode": self.mode,
            "samples": self.samples_used,
            "fragments": self.fragments_executed,
            "wallclock_ms": self.wallclock_ms,
            **self.meta,
        }


@dataclass(frozen=True)
class SamplePlan:
    mode: str
    epsilon: float
    a: float = 1.0
    N: int = 0
    runs: int = 0
    D: int = 0
    delta: float = 0.0
    N_entry: int = 0


def plan_samples(K: int, r: int, d_prime: int, eps: float, mode: str = "montecarlo", a: float | None = None) -> SamplePlan:
    """Sample counts from the Hoeffding bounds.

    montecarlo: a = 2^(2K) (or the given overhead), N = ceil(4 a^2 / eps^2), N*r runs.
    tensor: D = r 8^d', delta = eps / ((e-1) D), N = ceil(2 ln(6D) / delta^2) per entry.
    """
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if mode == "montecarlo":
        a = float(2 ** (2 * K)) if a is None else float(a)
        n = math.ceil(4 * a * a / (eps * eps) - 1e-9)
        return SamplePlan(mode, eps, a=a, N=n, runs=n * r)
    if mode == "tensor":
        big_d = r * 8**d_prime
        delta = eps / ((math.e - 1) * big_d)
        n = math.ceil(2 * math.log(6 * big_d) / delta**2)
        return SamplePlan(mode, eps, D=big_d, delta=delta, N_entry=n, runs=n * big_d)
    raise ValueError(f"unknown mode {mode!r}")


def _budget_check(plan: CutPlan, budget: int) -> int:
    total = 1
    for size in plan.alphabet():
        total *= size
        if total > budget:
            raise BudgetExceeded(f"{total}+ assignments exceed the budget of {budget}")
    return total


class _ExactCache:
    """Memoized exact fragment evaluations keyed by the fragment's local actions."""

    def __init__(self, plan: CutPlan, max_width=None):
        self.plan = plan
        self.max_width = max_width
        self.tables = decomposable_tables(plan)
        self.cache = {}
        self.calls = 0

    def dist(self, real: Realization) -> np.ndarray:
        key = real.key
        hit = self.cache.get(key)
        if hit is None:
            hit = backend.quasi_distribution(real, self.max_width)
            self.cache[key] = hit
            self.calls += 1
        return hit

    def value(self, j: int, real: Realization) -> float:
        return float(self.dist(real) @ self.tables[j])


def _joint_value(plan: CutPlan, dists) -> float:
    """sum_y f(y) prod_j q_j(y_j) for a post-processing that does not split."""
    n = plan.alg.circuit.n
    if n > oracle_limit():
        raise OracleTooLarge(f"joint recombination over {n} bits exceeds the oracle limit")
    joint = np.ones(1)
    order = []
    for f, q in zip(plan.fragments, dists):
        joint = np.multiply.outer(joint, q).reshape(-1)
        order += list(f.qubits)
    t = joint.reshape((2,) * n) if n else joint
    t = np.transpose(t, np.argsort(order)) if n else t
    return float(t.reshape(-1) @ plan.post.values())


def _fragment_realizations(plan: CutPlan, s):
    return [Realization(f, f.local_key(plan, s)) for f in plan.fragments]


def estimate_enumerate(plan: CutPlan, budget: int = DEFAULT_BUDGET, max_width=None) -> Estimate:
    """Exact sum over all assignments with exact fragment values."""
    t0 = time.perf_counter()
    total = _budget_check(plan, budget)
    ex = _ExactCache(plan, max_width)
    value = 0.0
    for s in itertools.product(*(range(k) for k in plan.alphabet())):
        coef = plan.weight(s)
        reals = _fragment_realizations(plan, s)
        if ex.tables is not None:
            term = 1.0
            for j, real in enumerate(reals):
                term *= ex.value(j, real)
                if term == 0.0:
                    break
        else:
            term = _joint_value(plan, [ex.dist(real) for real in reals])
        value += coef * term
    return Estimate(
        float(value), 0.0, "enumerate", total, ex.calls,
        (time.perf_counter() - t0) * 1e3, _meta(plan),
    )


def _meta(plan: CutPlan) -> dict:
    p = plan.params
    return {"K": p.K, "d": plan.d, "cc_upper": p.cc_upper, "cc_exact": p.cc_exact, "coordinates": plan.K}


def sample_terms(plan: CutPlan, n: int, seed: int) -> tuple:
    """Draw n assignments with P(term) proportional to |coefficient|; returns (terms, weights)."""
    u = stream(seed, "terms").random((n, plan.K)) if plan.K else np.zeros((n, 0))
    terms = np.empty((n, plan.K), dtype=np.int64)
    weights = np.ones(n)
    for k, c in enumerate(plan.coords):
        cdf = np.cumsum(c.probs)
        cdf[-1] = 1.0
        t = np.searchsorted(cdf, u[:, k], side="right")
        terms[:, k] = np.minimum(t, c.size - 1)
        weights *= np.sign(c.coeffs[terms[:, k]]) * c.gamma
    return terms, weights


def overhead(plan: CutPlan) -> float:
    """Bound a on |weight * t| for Monte Carlo samples (2^(2K) for wire cuts)."""
    return float(np.prod([c.gamma for c in plan.coords])) if plan.coords else 1.0


def estimate_montecarlo(
    plan: CutPlan,
    eps: float = 0.1,
    seed: int = 0,
    n_samples: int | None = None,
    exact_fragments: bool = False,
    max_width=None,
    workers: int = 1,
) -> Estimate:
    """Average of weight(s) * prod_j t_j(s) over sampled assignments.

    Each sample runs every fragment once in shot mode (or exactly if asked).
    Fragment settings run on ``workers`` threads; uniforms are drawn up front,
    so the result does not depend on the worker count.
    """
    t0 = time.perf_counter()
    a = overhead(plan)
    n = n_samples or plan_samples(plan.K, plan.r, 0, eps, "montecarlo", a=a).N
    terms, weights = sample_terms(plan, n, seed)
    tables = decomposable_tables(plan)
    general = tables is None
    per_fragment = np.ones((plan.r, n))
    bits = [np.zeros(n, dtype=np.int64) for _ in plan.fragments]
    if exact_fragments and general:
        raise NotDecomposable("exact-fragment Monte Carlo needs a decomposable f")
    items = []
    for j, frag in enumerate(plan.fragments):
        groups = defaultdict(list)
        for row in range(n):
            groups[frag.local_key(plan, terms[row])].append(row)
        n_u = sum(1 for op in frag.cut_ops) + 1
        uniforms = stream(seed, "shots", j).random((n, n_u))
        items += [(j, Realization(frag, key), np.asarray(rows), uniforms) for key, rows in groups.items()]

    def run(item):
        j, real, rows, uniforms = item
        if exact_fragments:
            return backend.quasi_distribution(real, max_width) @ tables[j], None, 1
        prog = backend.compile_program(real, max_width)
        idx, sig = backend.sample_program(prog, uniforms[rows])
        return sig, idx, len(rows)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]
    executed = 0
    for (j, real, rows, _), (sig, idx, count) in zip(items, results):
        executed += count
        if exact_fragments:
            per_fragment[j, rows] = sig
        elif general:
            per_fragment[j, rows] = sig
            bits[j][rows] = idx
        else:
            per_fragment[j, rows] = sig * tables[j][idx]
    vals = weights * per_fragment.prod(axis=0)
    if general:
        vals = vals * _general_f(plan, bits)
    value = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    meta = _meta(plan)
    meta["overhead"] = a
    return Estimate(value, stderr, "montecarlo", n, executed, (time.perf_counter() - t0) * 1e3, meta)


def _general_f(plan: CutPlan, bits) -> np.ndarray:
    nq = plan.alg.circuit.n
    post = plan.post
    pos = np.zeros(len(bits[0]), dtype=np.int64)
    for frag, b in zip(plan.fragments, bits):
        m = len(frag.qubits)
        for k, q in enumerate(frag.qubits):
            pos |= ((b >> (m - 1 - k)) & 1) << (nq - 1 - q)
    if nq <= oracle_limit():
        return post.values()[pos]
    return np.array([post([(int(p) >> (nq - 1 - q)) & 1 for q in range(nq)]) for p in pos])


def fragment_tensors(plan: CutPlan, entry, owner=None):
    """Tensor a(j) for every cluster: axes are its incident coordinates in index order.

    ``entry(j, real)`` returns the fragment value t_j; coefficients are folded
    into the lowest-index cluster touching each coordinate.
    """
    owner = owner or {c.index: min(c.endpoints) for c in plan.coords}
    tensors = []
    for j, frag in enumerate(plan.fragments):
        incident = [c for c in plan.coords if j in c.endpoints]
        shape = tuple(c.size for c in incident)
        t = np.empty(shape)
        s = [0] * plan.K
        for local in itertools.product(*(range(k) for k in shape)):
            coef = 1.0
            for c, term in zip(incident, local):
                s[c.index] = term
                if owner[c.index] == j:
                    coef *= c.coeffs[term]
            real = Realization(frag, frag.local_key(plan, s))
            t[local] = coef * entry(j, real)
        tensors.append(t)
    return tensors


def contract_plan(plan: CutPlan, tensors, order=None) -> float:
    edges = plan.graph()
    if order is None:
        cc_mode = "exact" if plan.r <= 12 else "greedy"
        order = contraction_complexity(plan.r, edges, cc_mode)[1] if edges else []
    return float(contract_with_order(plan.r, edges, tensors, order, dims=plan.alphabet()))


def estimate_tensor_contract(
    plan: CutPlan,
    eps: float = 0.1,
    seed: int = 0,
    exact: bool = False,
    shots_per_entry: int | None = None,
    budget: int = DEFAULT_BUDGET,
    max_width=None,
) -> Estimate:
    """Estimate every entry a(j)_s = c_s t_j(s), then contract the cluster graph."""
    t0 = time.perf_counter()
    tables = decomposable_tables(plan)
    if tables is None:
        raise NotDecomposable("tensor mode needs f to split into per-cluster factors")
    entries = sum(int(np.prod([c.size for c in plan.coords if j in c.endpoints])) for j in range(plan.r))
    if entries > budget:
        raise BudgetExceeded(f"{entries} tensor entries exceed the budget of {budget}")
    degree = max((sum(1 for c in plan.coords if j in c.endpoints) for j in range(plan.r)), default=0)
    sp = plan_samples(plan.K, plan.r, degree, eps, "tensor")
    n_entry = shots_per_entry or sp.N_entry
    ex = _ExactCache(plan, max_width)
    shot_cache = {}
    executed = 0

    def entry(j, real):
        nonlocal executed
        if exact:
            return ex.value(j, real)
        key = real.key
        if key not in shot_cache:
            prog = backend.compile_program(real, max_width)
            u = stream(seed, "entry", j, repr(real.actions)).random((n_entry, prog.n_uniforms))
            idx, sig = backend.sample_program(prog, u)
            shot_cache[key] = float(np.mean(sig * tables[j][idx]))
            executed += n_entry
        return shot_cache[key]

    tensors = fragment_tensors(plan, entry)
    value = contract_plan(plan, tensors)
    meta = _meta(plan)
    meta.update({"entries": entries, "D_bound": sp.D, "delta": sp.delta, "shots_per_entry": 0 if exact else n_entry})
    return Estimate(
        value, 0.0, "tensor", 0 if exact else n_entry, ex.calls if exact else executed,
        (time.perf_counter() - t0) * 1e3, meta,
    )


def estimate(plan: CutPlan, mode: str, eps: float = 0.1, seed: int = 0, **kw) -> Estimate:
    if mode == "enumerate":
        return estimate_enumerate(plan, **kw)
    if mode == "montecarlo":
        return estimate_montecarlo(plan, eps, seed, **kw)
    if mode == "tensor":
        return estimate_tensor_contract(plan, eps, seed, **kw)
    raise ValueError(f"unknown mode {mode!r}")


def median_of_runs(fn, fail_prob: float, seed: int) -> Estimate:
    """Boost the 2/3 confidence: median of 2*ceil(log(1/fail_prob))+1 independent runs."""
    reps = 2 * math.ceil(math.log(1 / fail_prob)) + 1
    runs = [fn(seed + k) for k in range(reps)]
    runs.sort(key=lambda e: e.value)
    mid = runs[reps // 2]
    mid.meta["repetitions"] = reps
    return mid
