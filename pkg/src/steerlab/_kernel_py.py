"""Pure-numpy twin of the compiled ``_kernel`` module.

Same call signatures, same arithmetic order where it matters (time of step
``j`` is ``t0 + j*h``). Used when the extension is not built or when
``STEERLAB_PURE_PYTHON`` is set.
"""
import math

import numpy as np


def _jumps(A, B, phase):
    L = A + np.exp(1j * phase) * B
    LdL = np.conj(np.swapaxes(L, 1, 2)) @ L
    return L, LdL


def _rhs(rates, L, LdL, H, rho):
    Ld = np.conj(np.swapaxes(L, 1, 2))
    out = np.einsum("k,kij->ij", rates, L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
    if H is not None:
        out = out - 1j * (H @ rho - rho @ H)
    return out


def propagate(rho_in, t0, h, nsteps, rates_in, A_in, B_in, phi0, phi_rate, H_in=None):
    rho = np.array(rho_in, dtype=np.complex128, copy=True)
    rates = np.asarray(rates_in, dtype=np.float64)
    A = np.asarray(A_in, dtype=np.complex128)
    B = np.asarray(B_in, dtype=np.complex128)
    n = rho.shape[0]
    if n > 6 or A.shape[0] > 4:
        raise ValueError("kernel supports dim <= 6 and at most 4 dissipators")
    if A.shape[1:] != (n, n) or B.shape != A.shape or rates.shape[0] != A.shape[0]:
        raise ValueError("operator shapes do not match the state")
    H = None if H_in is None else np.asarray(H_in, dtype=np.complex128)
    half = 0.5 * h
    for step in range(int(nsteps)):
        t = t0 + step * h
        La, LdLa = _jumps(A, B, phi0 + phi_rate * t)
        Lb, LdLb = _jumps(A, B, phi0 + phi_rate * (t + half))
        Lc, LdLc = _jumps(A, B, phi0 + phi_rate * (t + h))
        k1 = _rhs(rates, La, LdLa, H, rho)
        k2 = _rhs(rates, Lb, LdLb, H, rho + half * k1)
        k3 = _rhs(rates, Lb, LdLb, H, rho + half * k2)
        k4 = _rhs(rates, Lc, LdLc, H, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return rho


def herm_eigvals(a_in, tol=1e-13, max_sweeps=64):
    a = np.array(a_in, dtype=np.complex128, copy=True)
    n = a.shape[0]
    if n > 6 or a.shape != (n, n):
        raise ValueError("herm_eigvals supports square matrices of dim <= 6")
    thresh = tol * max(1.0, float(np.linalg.norm(a)))
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if math.sqrt(float(np.sum(np.abs(a[off_mask]) ** 2))) < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                absa = abs(a[p, q])
                if absa == 0.0:
                    continue
                ph = a[p, q] / absa
                tau = (a[q, q].real - a[p, p].real) / (2.0 * absa)
                if tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q] * np.conj(ph)
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :] * ph
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    return np.sort(np.diag(a).real)
