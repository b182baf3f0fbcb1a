# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: fixed-step RK4 over the Lindblad flow and a cyclic
Jacobi eigensolver for small Hermitian matrices.

Jump operators take the harmonic form ``L_k(t) = A_k + exp(i phi(t)) B_k``
with ``phi(t) = phi0 + phi_rate * t``; the generator ``H`` is constant.
``_kernel_py`` mirrors every function here in numpy.
"""
import numpy as np

from libc.math cimport cos, sin, sqrt, fabs
from libc.string cimport memset

ctypedef double complex cplx

cdef enum:
    MAXD = 6
    MAXM = 36
    MAXK = 4


cdef inline void _jumps(int n, int nk, double phase,
                        const cplx* A, const cplx* B,
                        cplx* L, cplx* LdL) noexcept nogil:
    cdef int k, i, j, m, base
    cdef cplx e = cos(phase) + 1j * sin(phase)
    cdef cplx acc
    cdef int nn = n * n
    for k in range(nk):
        base = k * nn
        for i in range(nn):
            L[base + i] = A[base + i] + e * B[base + i]
        for i in range(n):
            for j in range(n):
                acc = 0
                for m in range(n):
                    acc = acc + L[base + m * n + i].conjugate() * L[base + m * n + j]
                LdL[base + i * n + j] = acc


cdef inline void _rhs(int n, int nk, const double* rates,
                      const cplx* L, const cplx* LdL,
                      const cplx* H, bint has_h,
                      const cplx* rho, cplx* out) noexcept nogil:
    cdef cplx tmp[MAXM]
    cdef cplx acc, g
    cdef int k, i, j, m, base
    cdef int nn = n * n
    for i in range(nn):
        out[i] = 0
    for k in range(nk):
        base = k * nn
        g = rates[k]
        # tmp = L rho
        for i in range(n):
            for j in range(n):
                acc = 0
                for m in range(n):
                    acc = acc + L[base + i * n + m] * rho[m * n + j]
                tmp[i * n + j] = acc
        # out += g (L rho L^dag - (LdL rho + rho LdL) / 2)
        for i in range(n):
            for j in range(n):
                acc = 0
                for m in range(n):
                    acc = acc + tmp[i * n + m] * L[base + j * n + m].conjugate()
                    acc = acc - 0.5 * (LdL[base + i * n + m] * rho[m * n + j]
                                       + rho[i * n + m] * LdL[base + m * n + j])
                out[i * n + j] = out[i * n + j] + g * acc
    if has_h:
        for i in range(n):
            for j in range(n):
                acc = 0
                for m in range(n):
                    acc = acc + H[i * n + m] * rho[m * n + j] - rho[i * n + m] * H[m * n + j]
                out[i * n + j] = out[i * n + j] - 1j * acc


def propagate(rho_in, double t0, double h, long nsteps,
              rates_in, A_in, B_in, double phi0, double phi_rate, H_in=None):
    """Advance ``rho_in`` by ``nsteps`` RK4 steps of size ``h`` from ``t0``.

    Step ``j`` starts at ``t0 + j*h`` (no accumulated time), which keeps
    chunked and unchunked runs bit-identical.
    """
    cdef cplx[:, ::1] rho0 = np.ascontiguousarray(rho_in, dtype=np.complex128)
    cdef double[::1] rates = np.ascontiguousarray(rates_in, dtype=np.float64)
    cdef cplx[:, :, ::1] A = np.ascontiguousarray(A_in, dtype=np.complex128)
    cdef cplx[:, :, ::1] B = np.ascontiguousarray(B_in, dtype=np.complex128)
    cdef int n = rho0.shape[0]
    cdef int nk = A.shape[0]
    if n > MAXD or nk > MAXK:
        raise ValueError("kernel supports dim <= 6 and at most 4 dissipators")
    if A.shape[1] != n or B.shape[1] != n or B.shape[0] != nk or rates.shape[0] != nk:
        raise ValueError("operator shapes do not match the state")
    cdef bint has_h = H_in is not None
    cdef cplx[:, ::1] Hm = np.ascontiguousarray(
        H_in if has_h else np.zeros((n, n)), dtype=np.complex128)

    out_arr = np.array(rho0, dtype=np.complex128, copy=True)
    cdef cplx[:, ::1] out = out_arr

    cdef cplx rho[MAXM]
    cdef cplx y[MAXM]
    cdef cplx k1[MAXM]
    cdef cplx k2[MAXM]
    cdef cplx k3[MAXM]
    cdef cplx k4[MAXM]
    cdef cplx La[MAXK * MAXM]
    cdef cplx LdLa[MAXK * MAXM]
    cdef cplx Lb[MAXK * MAXM]
    cdef cplx LdLb[MAXK * MAXM]
    cdef cplx Lc[MAXK * MAXM]
    cdef cplx LdLc[MAXK * MAXM]
    cdef int nn = n * n
    cdef int i
    cdef long step
    cdef double t, half = 0.5 * h
    cdef const cplx* pA = &A[0, 0, 0] if nk > 0 else NULL
    cdef const cplx* pB = &B[0, 0, 0] if nk > 0 else NULL
    cdef const double* pr = &rates[0] if nk > 0 else NULL
    cdef const cplx* pH = &Hm[0, 0]

    for i in range(nn):
        rho[i] = out[i // n, i % n]

    with nogil:
        for step in range(nsteps):
            t = t0 + step * h
            _jumps(n, nk, phi0 + phi_rate * t, pA, pB, La, LdLa)
            _jumps(n, nk, phi0 + phi_rate * (t + half), pA, pB, Lb, LdLb)
            _jumps(n, nk, phi0 + phi_rate * (t + h), pA, pB, Lc, LdLc)
            _rhs(n, nk, pr, La, LdLa, pH, has_h, rho, k1)
            for i in range(nn):
                y[i] = rho[i] + half * k1[i]
            _rhs(n, nk, pr, Lb, LdLb, pH, has_h, y, k2)
            for i in range(nn):
                y[i] = rho[i] + half * k2[i]
            _rhs(n, nk, pr, Lb, LdLb, pH, has_h, y, k3)
            for i in range(nn):
                y[i] = rho[i] + h * k3[i]
            _rhs(n, nk, pr, Lc, LdLc, pH, has_h, y, k4)
            for i in range(nn):
                rho[i] = rho[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    for i in range(nn):
        out[i // n, i % n] = rho[i]
    return out_arr


def herm_eigvals(a_in, double tol=1e-13, int max_sweeps=64):
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
    ascending. Stops when the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||A||_F)``."""
    cdef cplx[:, ::1] a0 = np.ascontiguousarray(a_in, dtype=np.complex128)
    cdef int n = a0.shape[0]
    if n > MAXD or a0.shape[1] != n:
        raise ValueError("herm_eigvals supports square matrices of dim <= 6")
    cdef cplx a[MAXD][MAXD]
    cdef int i, j, p, q, sweep
    cdef double off, norm2 = 0.0, thresh, absa, tau, t, c, s, app, aqq
    cdef cplx ph, aip, aiq
    for i in range(n):
        for j in range(n):
            a[i][j] = a0[i, j]
            norm2 += a[i][j].real * a[i][j].real + a[i][j].imag * a[i][j].imag
    thresh = tol * (1.0 if norm2 < 1.0 else sqrt(norm2))

    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i][j].real * a[i][j].real + a[i][j].imag * a[i][j].imag
        if sqrt(off) < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                absa = sqrt(a[p][q].real * a[p][q].real + a[p][q].imag * a[p][q].imag)
                if absa == 0.0:
                    continue
                ph = a[p][q] / absa
                app = a[p][p].real
                aqq = a[q][q].real
                tau = (aqq - app) / (2.0 * absa)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # U = diag-phase then real rotation; columns p, q of A U
                for i in range(n):
                    aip = a[i][p]
                    aiq = a[i][q] * ph.conjugate()
                    a[i][p] = c * aip - s * aiq
                    a[i][q] = s * aip + c * aiq
                # rows p, q of U^dag (A U)
                for j in range(n):
                    aip = a[p][j]
                    aiq = a[q][j] * ph
                    a[p][j] = c * aip - s * aiq
                    a[q][j] = s * aip + c * aiq
                a[p][q] = 0
                a[q][p] = 0
                a[p][p] = a[p][p].real
                a[q][q] = a[q][q].real
    else:
        raise ArithmeticError("Jacobi iteration did not converge")

    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = a[i][i].real
    out.sort()
    return out
