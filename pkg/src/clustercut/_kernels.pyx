# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels.

Qubit 0 is the most significant bit of the amplitude index. Every function
here has a numpy twin in ``_pykernels`` with the same signature.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef double complex cplx

# opcodes shared with _pykernels
cdef enum:
    OP_U1 = 0
    OP_U2 = 1
    OP_FULL = 2
    OP_MEASZ = 3

IMPLEMENTATION = "cython"


cdef inline void _u1(cplx* psi, Py_ssize_t dim, Py_ssize_t stride, const cplx* u) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef cplx a, b
    cdef cplx u00 = u[0], u01 = u[1], u10 = u[2], u11 = u[3]
    i = 0
    while i < dim:
        for j in range(i, i + stride):
            a = psi[j]
            b = psi[j + stride]
            psi[j] = u00 * a + u01 * b
            psi[j + stride] = u10 * a + u11 * b
        i += 2 * stride


cdef inline void _u2(cplx* psi, Py_ssize_t dim, Py_ssize_t s0, Py_ssize_t s1, const cplx* u) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef Py_ssize_t idx[4]
    cdef cplx v[4]
    cdef cplx acc
    cdef int r, c
    for i in range(dim):
        if (i & s0) or (i & s1):
            continue
        idx[0] = i
        idx[1] = i + s1
        idx[2] = i + s0
        idx[3] = i + s0 + s1
        for k in range(4):
            v[k] = psi[idx[k]]
        for r in range(4):
            acc = 0
            for c in range(4):
                acc = acc + u[4 * r + c] * v[c]
            psi[idx[r]] = acc


cdef inline void _full(cplx* psi, cplx* tmp, Py_ssize_t dim, const cplx* u) noexcept nogil:
    cdef Py_ssize_t r, c
    cdef cplx acc
    for r in range(dim):
        acc = 0
        for c in range(dim):
            acc = acc + u[r * dim + c] * psi[c]
        tmp[r] = acc
    for r in range(dim):
        psi[r] = tmp[r]


cdef inline int _measz(cplx* psi, Py_ssize_t dim, Py_ssize_t stride, double u, bint reset) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double p1 = 0.0, p, scale
    cdef cplx b
    cdef int outcome
    i = 0
    while i < dim:
        for j in range(i, i + stride):
            b = psi[j + stride]
            p1 += b.real * b.real + b.imag * b.imag
        i += 2 * stride
    outcome = 1 if u < p1 else 0
    p = p1 if outcome else 1.0 - p1
    scale = 1.0 / sqrt(p) if p > 0.0 else 0.0
    i = 0
    while i < dim:
        for j in range(i, i + stride):
            if outcome:
                if reset:
                    psi[j] = psi[j + stride] * scale
                else:
                    psi[j] = 0
                    psi[j + stride] = psi[j + stride] * scale
                    continue
                psi[j + stride] = 0
            else:
                psi[j] = psi[j] * scale
                psi[j + stride] = 0
        i += 2 * stride
    return outcome


def apply_1q(cplx[::1] psi, int n, int q, const cplx[:, ::1] u):
    """Apply a 2x2 unitary to qubit ``q`` in place."""
    cdef cplx m[4]
    m[0] = u[0, 0]; m[1] = u[0, 1]; m[2] = u[1, 0]; m[3] = u[1, 1]
    with nogil:
        _u1(&psi[0], psi.shape[0], (<Py_ssize_t>1) << (n - 1 - q), m)


def apply_2q(cplx[::1] psi, int n, int q0, int q1, const cplx[:, ::1] u):
    """Apply a 4x4 unitary to qubits ``(q0, q1)``; ``q0`` is the high bit of the gate index."""
    cdef cplx m[16]
    cdef int r, c
    for r in range(4):
        for c in range(4):
            m[4 * r + c] = u[r, c]
    with nogil:
        _u2(&psi[0], psi.shape[0], (<Py_ssize_t>1) << (n - 1 - q0),
            (<Py_ssize_t>1) << (n - 1 - q1), m)


def measure_z(cplx[::1] psi, int n, int q, double u, bint reset=False):
    """Projective Z measurement driven by the uniform draw ``u``; returns the bit.

    With ``reset`` the measured qubit is left in |0>.
    """
    return _measz(&psi[0], psi.shape[0], (<Py_ssize_t>1) << (n - 1 - q), u, reset)


def run_program(cplx[::1] psi, int n, const long long[:, ::1] code,
                const cplx[::1] mats, const double[::1] uniforms, int[::1] records):
    """Execute a compiled fragment program on ``psi`` and sample the terminal basis index.

    Each row of ``code`` is ``(opcode, a, b, c, offset)``. ``uniforms`` must hold one
    draw per MEASZ row plus one for the terminal sample.
    """
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t row, nrows = code.shape[0], k = 0, i, hit = dim - 1
    cdef long long op
    cdef int outcome
    cdef double acc, u
    cdef cnp.ndarray tmp_arr = np.empty(dim, dtype=np.complex128)
    cdef cplx* tmp = <cplx*> cnp.PyArray_DATA(tmp_arr)
    cdef cplx* p = &psi[0]
    cdef const cplx* m = &mats[0] if mats.shape[0] > 0 else NULL
    with nogil:
        for row in range(nrows):
            op = code[row, 0]
            if op == OP_U1:
                _u1(p, dim, (<Py_ssize_t>1) << (n - 1 - code[row, 1]), m + code[row, 4])
            elif op == OP_U2:
                _u2(p, dim, (<Py_ssize_t>1) << (n - 1 - code[row, 1]),
                    (<Py_ssize_t>1) << (n - 1 - code[row, 2]), m + code[row, 4])
            elif op == OP_FULL:
                _full(p, tmp, dim, m + code[row, 4])
            elif op == OP_MEASZ:
                outcome = _measz(p, dim, (<Py_ssize_t>1) << (n - 1 - code[row, 1]),
                                 uniforms[k], code[row, 3] != 0)
                k += 1
                if code[row, 2] >= 0:
                    records[code[row, 2]] = 1 - 2 * outcome
        u = uniforms[k]
        acc = 0.0
        for i in range(dim):
            acc += p[i].real * p[i].real + p[i].imag * p[i].imag
            if u < acc:
                hit = i
                break
    return hit
