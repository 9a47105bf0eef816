"""Compare the compiled statevector kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--width 10] [--shots 2000]
"""

import argparse
import importlib
import time

import numpy as np

from clustercut import _pykernels
from clustercut.circuit import Circuit, gate, unitary_gate
from clustercut.cutting import Fragment, Realization
from clustercut.backend import compile_program


def implementations():
    out = {"numpy": _pykernels}
    try:
        out["cython"] = importlib.import_module("clustercut._kernels")
    except ImportError:
        pass
    return out


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def bench_gates(impl, width, layers, rng):
    psi = np.zeros(1 << width, dtype=complex)
    psi[0] = 1.0
    u1 = random_unitary(rng, 2)
    u2 = random_unitary(rng, 4)
    t0 = time.perf_counter()
    for _ in range(layers):
        for q in range(width):
            impl.apply_1q(psi, width, q, u1)
        for q in range(width - 1):
            impl.apply_2q(psi, width, q, q + 1, u2)
    return time.perf_counter() - t0


def bench_shots(impl, width, shots, rng):
    """Terminal sampling of a compiled gate-only fragment, ``shots`` times."""
    ops = []
    for q in range(width - 1):
        ops.append(("gate", (q, q + 1), random_unitary(rng, 4)))
    frag = Fragment(0, width, tuple(ops), tuple((q, q) for q in range(width)))
    prog = compile_program(Realization(frag, ()), max_width=width)
    psi = np.empty(1 << width, dtype=complex)
    records = np.ones(1, dtype=np.intc)
    u = rng.random((shots, prog.n_uniforms))
    t0 = time.perf_counter()
    for k in range(shots):
        psi[:] = 0
        psi[0] = 1.0
        impl.run_program(psi, width, prog.code, prog.mats, u[k], records)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--width", type=int, default=10)
    ap.add_argument("--layers", type=int, default=50)
    ap.add_argument("--shots", type=int, default=2000)
    args = ap.parse_args()
    for name, impl in implementations().items():
        g = bench_gates(impl, args.width, args.layers, np.random.default_rng(0))
        s = bench_shots(impl, min(args.width, 6), args.shots, np.random.default_rng(0))
        print(f"{name:7s} gates {g * 1e3:8.2f} ms   shots {s * 1e3:8.2f} ms")


if __name__ == "__main__":
    main()
