"""Pure numpy statevector kernels; drop-in twin of the compiled ``_kernels``."""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "numpy"

OP_U1, OP_U2, OP_FULL, OP_MEASZ = 0, 1, 2, 3


def apply_1q(psi: np.ndarray, n: int, q: int, u: np.ndarray) -> None:
    view = psi.reshape(1 << q, 2, 1 << (n - 1 - q))
    view[...] = np.einsum("ij,ajb->aib", u, view)


def apply_2q(psi: np.ndarray, n: int, q0: int, q1: int, u: np.ndarray) -> None:
    t = psi.reshape((2,) * n)
    moved = np.moveaxis(t, (q0, q1), (0, 1)).reshape(4, -1)
    out = (u @ moved).reshape((2, 2) + (2,) * (n - 2))
    psi[:] = np.moveaxis(out, (0, 1), (q0, q1)).reshape(-1)


def measure_z(psi: np.ndarray, n: int, q: int, u: float, reset: bool = False) -> int:
    view = psi.reshape(1 << q, 2, 1 << (n - 1 - q))
    p1 = float(np.vdot(view[:, 1, :], view[:, 1, :]).real)
    outcome = 1 if u < p1 else 0
    p = p1 if outcome else 1.0 - p1
    scale = 1.0 / np.sqrt(p) if p > 0.0 else 0.0
    kept = view[:, outcome, :] * scale
    view[...] = 0
    view[:, 0 if reset else outcome, :] = kept
    return outcome


def run_program(psi, n, code, mats, uniforms, records) -> int:
    k = 0
    for op, a, b, c, off in code:
        if op == OP_U1:
            apply_1q(psi, n, a, mats[off:off + 4].reshape(2, 2))
        elif op == OP_U2:
            apply_2q(psi, n, a, b, mats[off:off + 16].reshape(4, 4))
        elif op == OP_FULL:
            dim = psi.shape[0]
            psi[:] = mats[off:off + dim * dim].reshape(dim, dim) @ psi
        elif op == OP_MEASZ:
            outcome = measure_z(psi, n, a, uniforms[k], bool(c))
            k += 1
            if b >= 0:
                records[b] = 1 - 2 * outcome
    cdf = np.cumsum(np.abs(psi) ** 2)
    idx = int(np.searchsorted(cdf, uniforms[k], side="right"))
    return min(idx, psi.shape[0] - 1)
