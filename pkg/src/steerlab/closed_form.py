"""Analytic predictions for the steered dark-state coherence.

Rates are in units of the bare decay ``gamma``; ``phi_rate`` is the
(constant) rate of the squeezing phase.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from steerlab import densemat
from steerlab.squeeze import LevelBasis, SqueezeDerived, SqueezeParams, dark_state, derive


@dataclass(frozen=True)
class EigenRates:
    lambda_plus: complex
    lambda_minus: complex


@dataclass(frozen=True)
class PhasePrediction:
    phase: float
    visibility: float
    epsilon: float


@dataclass(frozen=True)
class PolarizationState:
    """Photon polarisation over the (R, L) basis.

    Stokes convention: ``S1 = 2 Re(E_R* E_L)``, ``S2 = 2 Im(E_R* E_L)``,
    ``S3 = |E_R|^2 - |E_L|^2``.
    """
    jones: np.ndarray
    stokes: np.ndarray

    @property
    def plane_angle(self) -> float:
        """Orientation of the linear polarisation, half the relative phase."""
        return 0.5 * math.atan2(self.stokes[2], self.stokes[1])


def _coupling(d: SqueezeDerived, phi_rate: float):
    """Entries of ``d/dt (x, y) = [[a, b], [b, e]] (x, y)`` for
    ``x = <-1|rho|a>``, ``y = <1|rho|a>`` in the rotating frame."""
    a = 0.5j * d.alpha * phi_rate
    b = -0.5j * d.beta * phi_rate
    e = -0.5 * (d.gamma_eff + 1j * d.alpha * phi_rate)
    return a, b, e


def eigen_rates(derived: SqueezeDerived, phi_rate: float) -> EigenRates:
    """Roots of the 2x2 coherence flow.

    ``lambda_plus = -G/4 - sqrt(G^2/4 + i alpha G phi_rate - phi_rate^2)/2``
    on the principal branch; ``lambda_minus`` is taken from the root product
    to avoid cancellation when ``phi_rate << G``.
    """
    g = derived.gamma_eff
    disc = complex(g * g / 4 - phi_rate * phi_rate, derived.alpha * g * phi_rate)
    root = math.sqrt(disc.real) if disc.imag == 0 and disc.real >= 0 else cmath.sqrt(disc)
    lam_p = -g / 4 - 0.5 * root
    product = complex(phi_rate * phi_rate / 4, -derived.alpha * g * phi_rate / 4)
    return EigenRates(complex(lam_p), product / lam_p + 0.0)


def exact_coherence(derived: SqueezeDerived, phi_rate: float, coh0: complex,
                    t: float) -> tuple[complex, complex]:
    """``(<-1|rho|a>, <1|rho|a>)`` at time ``t`` in the rotating frame,
    starting from ``(coh0, 0)``; eigen-decomposition of the 2x2 flow."""
    if t == 0:
        return complex(coh0), 0j
    a, b, _ = _coupling(derived, phi_rate)
    lr = eigen_rates(derived, phi_rate)
    lp, lm = lr.lambda_plus, lr.lambda_minus
    ep, em = cmath.exp(lp * t), cmath.exp(lm * t)
    x = coh0 * ((lp - a) * em - (lm - a) * ep) / (lp - lm)
    y = coh0 * b * (ep - em) / (lp - lm)
    return x, y


def adiabatic_epsilon(derived: SqueezeDerived, phi_rate: float) -> float:
    return 0.5 * derived.beta ** 2 * (phi_rate / derived.gamma_eff) ** 2


def adiabatic_coherence(derived: SqueezeDerived, phi_rate: float, coh0: complex,
                        t: float) -> complex:
    """Two-term expansion of the dark coherence valid for ``phi_rate << gamma``."""
    eps = adiabatic_epsilon(derived, phi_rate)
    g = derived.gamma_eff
    half = 0.5 * derived.alpha * phi_rate
    return coh0 * ((1 - eps) * cmath.exp(complex(-eps * g * t, half * t))
                   + eps * cmath.exp(complex(-0.5 * g * (1 - 2 * eps) * t, -half * t)))


def loop_prediction(derived: SqueezeDerived, phi_rate: float) -> PhasePrediction:
    """Lab-frame phase and visibility of ``<psi_DF|rho|a>`` after one cycle."""
    if not phi_rate > 0:
        raise ValueError("phi_rate must be > 0")
    return PhasePrediction(
        phase=berry_phase_closed(derived),
        visibility=math.exp(-loop_loss(derived, phi_rate)),
        epsilon=adiabatic_epsilon(derived, phi_rate),
    )


def loop_loss(derived: SqueezeDerived, phi_rate: float) -> float:
    """``alpha beta^2 pi phi_rate / gamma``: first-order coherence loss per cycle."""
    return derived.alpha * derived.beta ** 2 * math.pi * phi_rate / derived.gamma


def final_mixture(derived: SqueezeDerived, phi_rate: float, phi0: float = 0.0) -> np.ndarray:
    """Predicted state after one cycle from ``(|psi_DF> + |a>)/sqrt(2)``."""
    w = loop_loss(derived, phi_rate)
    if w >= 1:
        raise ValueError(f"loss weight {w:.3g} >= 1: outside the adiabatic regime")
    basis = LevelBasis.THREE_PLUS_ANCILLA
    psi = np.zeros(basis.dim, dtype=np.complex128)
    psi[basis.index("-1")] = derived.c
    psi[basis.index("1")] = -cmath.exp(1j * phi0) * derived.s
    ket = psi * cmath.exp(1j * berry_phase_closed(derived))
    ket[basis.index("a")] = 1.0
    ket /= math.sqrt(2)
    return (1 - w) * densemat.outer(ket) + w * densemat.outer(psi)


def berry_phase_closed(derived: SqueezeDerived) -> float:
    return -math.pi * (1 - derived.alpha)


def berry_phase_numeric(r: float, n_steps: int,
                        gauge_phases: Optional[Sequence[float]] = None) -> float:
    """Discrete loop estimate ``-arg prod_k <psi_k|psi_{k+1}>`` over
    ``n_steps`` equally spaced squeezing phases. Optional ``gauge_phases``
    multiply each sample by ``exp(i theta_k)``; the result does not depend
    on them."""
    if n_steps < 8:
        raise ValueError("n_steps must be >= 8")
    basis = LevelBasis.THREE_PLUS_ANCILLA
    states = [dark_state(basis, 1, SqueezeParams(r, 2 * math.pi * k / n_steps))
              for k in range(n_steps)]
    if gauge_phases is not None:
        if len(gauge_phases) != n_steps:
            raise ValueError("need one gauge phase per sample")
        states = [cmath.exp(1j * th) * s for th, s in zip(gauge_phases, states)]
    prod = 1 + 0j
    for k in range(n_steps):
        prod *= complex(np.vdot(states[k], states[(k + 1) % n_steps]))
    return 0.0 - math.atan2(prod.imag, prod.real)


def five_level_coherence(d1: SqueezeDerived, d2: SqueezeDerived, phi_rate: float,
                         t: float) -> complex:
    """``<psi_1|rho|psi_2>`` at time ``t`` from ``(|psi_1> + |psi_2>)/sqrt(2)``."""
    decay = (d1.beta ** 2 / (2 * d1.gamma_eff) + d2.beta ** 2 / (2 * d2.gamma_eff)) * phi_rate ** 2
    return 0.5 * cmath.exp(complex(-decay, -(d2.alpha - d1.alpha) * phi_rate / 2) * t)


def relative_phase(d1: SqueezeDerived, d2: SqueezeDerived) -> float:
    """Phase of ``<psi_1|rho|psi_2>`` gained over one adiabatic cycle."""
    return math.pi * (d1.alpha - d2.alpha)


def polarization_state(relative_phase: float) -> PolarizationState:
    """Emitted photon ``(|R> + exp(i delta)|L>)/sqrt(2)``; always linear."""
    jones = np.array([1.0, cmath.exp(1j * relative_phase)]) / math.sqrt(2)
    stokes = np.array([1.0, math.cos(relative_phase), math.sin(relative_phase), 0.0])
    return PolarizationState(jones=jones, stokes=stokes)


def derived_for(r: float, gamma: float = 1.0) -> SqueezeDerived:
    return derive(SqueezeParams(r), gamma)
