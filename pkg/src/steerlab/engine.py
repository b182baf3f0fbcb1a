"""Time-dependent Lindblad integration, coherence extraction and loop runs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from steerlab import densemat
from steerlab._backend import kernel
from steerlab.squeeze import (
    Frame,
    LevelBasis,
    ModelSpec,
    SqueezeParams,
    build_five_level_model,
    build_three_level_model,
    dark_state,
)

TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-9
MAX_PHASE_INCREMENT = math.pi / 4

Tracker = Callable[[float, np.ndarray], complex]


class IntegrationError(RuntimeError):
    """A state left the set of valid density matrices during integration."""

    def __init__(self, time: float, invariant: str, magnitude: float):
        self.time = time
        self.invariant = invariant
        self.magnitude = magnitude
        super().__init__(f"{invariant} violated at t={time:.6g} (magnitude {magnitude:.3e})")


@dataclass(frozen=True)
class StepControl:
    """Fixed-step settings. ``h`` and ``n_steps`` are mutually exclusive;
    with neither, the step is ``min(0.02/decay_scale, 0.02/phi_rate)``."""
    h: Optional[float] = None
    n_steps: Optional[int] = None
    record_stride: int = 64
    check_every: int = 64
    keep_states: bool = False

    def __post_init__(self):
        if self.h is not None and self.n_steps is not None:
            raise ValueError("give at most one of h and n_steps")
        if self.h is not None and not self.h > 0:
            raise ValueError("h must be > 0")
        if self.n_steps is not None and self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.record_stride < 1 or self.check_every < 1:
            raise ValueError("record_stride and check_every must be >= 1")


@dataclass
class StateHealth:
    """Worst invariant readings over every checkpoint of a run."""
    max_trace_error: float = 0.0
    max_hermiticity_defect: float = 0.0
    min_eigenvalue: float = math.inf
    checks: int = 0

    def update(self, rho: np.ndarray, t: float) -> None:
        tr_err = abs(np.trace(rho) - 1.0)
        herm = densemat.hermiticity_defect(rho)
        self.checks += 1
        self.max_trace_error = max(self.max_trace_error, tr_err)
        self.max_hermiticity_defect = max(self.max_hermiticity_defect, herm)
        if not np.isfinite(tr_err) or tr_err > TRACE_TOL:
            raise IntegrationError(t, "trace", tr_err)
        if herm >= HERMITIAN_TOL:
            raise IntegrationError(t, "hermiticity", herm)
        lo = float(densemat.herm_eigvals(rho)[0])
        self.min_eigenvalue = min(self.min_eigenvalue, lo)
        if lo < -POSITIVITY_TOL:
            raise IntegrationError(t, "positivity", -lo)

    def merge(self, other: "StateHealth") -> None:
        self.max_trace_error = max(self.max_trace_error, other.max_trace_error)
        self.max_hermiticity_defect = max(self.max_hermiticity_defect, other.max_hermiticity_defect)
        self.min_eigenvalue = min(self.min_eigenvalue, other.min_eigenvalue)
        self.checks += other.checks

    @property
    def ok(self) -> bool:
        return (self.max_trace_error <= TRACE_TOL
                and self.max_hermiticity_defect < HERMITIAN_TOL
                and self.min_eigenvalue >= -POSITIVITY_TOL)


@dataclass
class Trajectory:
    times: np.ndarray
    final_state: np.ndarray
    steps: int
    step_size: float
    health: StateHealth
    states: Optional[np.ndarray] = None
    coherences: Optional[np.ndarray] = None
    phase_track: Optional[np.ndarray] = None


def validate_density(rho) -> np.ndarray:
    rho = densemat.as_matrix(rho)
    StateHealth().update(rho, 0.0)
    return rho


def lindblad_rhs(model: ModelSpec, rho, t: float) -> np.ndarray:
    """``sum_i G_i (R rho R^+ - {R^+ R, rho}/2) - i[G(t), rho]`` from the
    model's time-dependent builders."""
    rho = densemat.as_matrix(rho)
    if rho.shape[0] != model.dim:
        raise ValueError(f"state dimension {rho.shape[0]} != model dimension {model.dim}")
    out = np.zeros_like(rho)
    for d in model.dissipators:
        R = d.jump(t)
        Rd = R.conj().T
        RdR = Rd @ R
        out += d.rate * (R @ rho @ Rd - 0.5 * (RdR @ rho + rho @ RdR))
    if model.generator is not None:
        G = model.generator(t)
        out += -1j * (G @ rho - rho @ G)
    return out


def decay_scale(model: ModelSpec, t: float = 0.0) -> float:
    """Largest ``rate * ||R^+ R||`` over the dissipators (Gamma-tilde for the
    squeezed jump in either frame)."""
    return max(d.rate * float(np.linalg.norm(d.jump(t), 2)) ** 2 for d in model.dissipators)


def default_step(model: ModelSpec) -> float:
    h = 0.02 / decay_scale(model)
    if model.harmonic is not None and model.harmonic.phi_rate != 0:
        h = min(h, 0.02 / abs(model.harmonic.phi_rate))
    return h


def _python_steps(model: ModelSpec, rho: np.ndarray, j0: int, h: float, n: int) -> np.ndarray:
    for j in range(j0, j0 + n):
        t = j * h
        k1 = lindblad_rhs(model, rho, t)
        k2 = lindblad_rhs(model, rho + 0.5 * h * k1, t + 0.5 * h)
        k3 = lindblad_rhs(model, rho + 0.5 * h * k2, t + 0.5 * h)
        k4 = lindblad_rhs(model, rho + h * k3, t + h)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return rho


def _advance(model: ModelSpec, rho: np.ndarray, j0: int, h: float, n: int) -> np.ndarray:
    hf = model.harmonic
    if hf is None:
        return _python_steps(model, rho, j0, h, n)
    return kernel.propagate(rho, j0 * h, h, n, hf.rates, hf.static, hf.modulated,
                            hf.phi0, hf.phi_rate, hf.generator)


def integrate(model: ModelSpec, rho0, t_end: float, step: StepControl = StepControl(),
              tracker: Optional[Tracker] = None) -> Trajectory:
    """Classical RK4 with a fixed step that divides ``t_end`` exactly.

    Invariants are checked every ``check_every`` steps and at every record
    point; ``tracker`` (if given) is evaluated at the same points and its
    argument is unwrapped into ``phase_track``.
    """
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    rho = validate_density(rho0)
    if rho.shape[0] != model.dim:
        raise ValueError(f"state dimension {rho.shape[0]} != model dimension {model.dim}")

    if step.n_steps is not None:
        n_total = step.n_steps
    else:
        h0 = step.h if step.h is not None else default_step(model)
        n_total = max(1, math.ceil(t_end / h0 - 1e-9))
    h = t_end / n_total

    health = StateHealth()
    health.update(rho, 0.0)
    times, states, cohs, phases = [0.0], [rho.copy()], [], []
    if tracker is not None:
        z_prev = tracker(0.0, rho)
        cohs.append(z_prev)
        phase = 0.0 if z_prev == 0 else math.atan2(z_prev.imag, z_prev.real)
        phases.append(phase)

    j = 0
    while j < n_total:
        nxt = min((j // step.check_every + 1) * step.check_every,
                  (j // step.record_stride + 1) * step.record_stride, n_total)
        n = nxt - j
        rho = _advance(model, rho, j, h, n)
        j += n
        t = t_end if j == n_total else j * h
        health.update(rho, t)
        if tracker is not None:
            z = tracker(t, rho)
            if z_prev != 0 and z != 0:
                inc = float(np.angle(z / z_prev))
                if abs(inc) >= MAX_PHASE_INCREMENT:
                    raise IntegrationError(t, "phase increment", abs(inc))
                phase += inc
            z_prev = z
        if j % step.record_stride == 0 or j == n_total:
            times.append(t)
            if step.keep_states:
                states.append(rho.copy())
            if tracker is not None:
                cohs.append(z)
                phases.append(phase)

    return Trajectory(
        times=np.array(times),
        final_state=rho,
        steps=n_total,
        step_size=h,
        health=health,
        states=np.array(states) if step.keep_states else None,
        coherences=np.array(cohs) if tracker is not None else None,
        phase_track=np.array(phases) if tracker is not None else None,
    )


def coherence(rho, bra, ket) -> complex:
    """``<bra| rho |ket>``."""
    rho = densemat.as_matrix(rho)
    bra, ket = densemat.as_vector(bra), densemat.as_vector(ket)
    if bra.shape[0] != rho.shape[0] or ket.shape[0] != rho.shape[0]:
        raise ValueError("dimension mismatch")
    return complex(np.vdot(bra, rho @ ket))


@dataclass(frozen=True)
class LoopSchedule:
    """One cycle of ``phi_t = phi0 + phi_rate * t`` at fixed ``r``."""
    phi0: float
    phi_rate: float
    r: float
    frame: Frame = Frame.LAB

    def __post_init__(self):
        if not (math.isfinite(self.phi_rate) and self.phi_rate > 0):
            raise ValueError(f"phi_rate must be > 0, got {self.phi_rate}")
        SqueezeParams(self.r, self.phi0)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.phi_rate

    def params(self, t: float = 0.0) -> SqueezeParams:
        return SqueezeParams(self.r, self.phi0 + self.phi_rate * t)


@dataclass
class LoopResult:
    initial_coherence: complex
    final_coherence: complex
    phase: float
    visibility: float
    trajectory: Trajectory = field(repr=False)


def interferometric_state(params: SqueezeParams) -> np.ndarray:
    """``(|psi_DF> + |a>)/sqrt(2)`` as a density matrix."""
    basis = LevelBasis.THREE_PLUS_ANCILLA
    psi = dark_state(basis, 1, params)
    psi[basis.index("a")] = 1.0
    return densemat.outer(psi / math.sqrt(2))


def five_level_superposition(params1: SqueezeParams, params2: SqueezeParams) -> np.ndarray:
    """``(|psi_1> + |psi_2>)/sqrt(2)`` as a density matrix."""
    basis = LevelBasis.FIVE_LEVEL
    psi = dark_state(basis, 1, params1) + dark_state(basis, 2, params2)
    return densemat.outer(psi / math.sqrt(2))


def _lab_tracker(model: ModelSpec, bra_at: Callable[[float], np.ndarray],
                 ket_at: Callable[[float], np.ndarray]) -> Tracker:
    def track(t, rho):
        if model.frame_map is not None:
            O = model.frame_map(t)
            rho = O.conj().T @ rho @ O
        return complex(np.vdot(bra_at(t), rho @ ket_at(t)))
    return track


def _run_cycle(model: ModelSpec, rho0_lab: np.ndarray, period: float, tracker: Tracker,
               step: StepControl) -> LoopResult:
    rho0 = rho0_lab
    if model.frame_map is not None:
        O = model.frame_map(0.0)
        rho0 = O @ rho0_lab @ O.conj().T
    traj = integrate(model, rho0, period, step, tracker)
    z0, zT = traj.coherences[0], traj.coherences[-1]
    return LoopResult(
        initial_coherence=z0,
        final_coherence=zT,
        phase=float(traj.phase_track[-1] - traj.phase_track[0]),
        visibility=abs(zT) / abs(z0),
        trajectory=traj,
    )


def _step_for(steps_per_period: Optional[int], step: Optional[StepControl]) -> StepControl:
    step = step or StepControl()
    if steps_per_period is not None:
        step = StepControl(n_steps=steps_per_period, record_stride=step.record_stride,
                           check_every=step.check_every, keep_states=step.keep_states)
    return step


def run_loop(schedule: LoopSchedule, rho0=None, gamma: float = 1.0,
             step: Optional[StepControl] = None,
             steps_per_period: Optional[int] = None) -> LoopResult:
    """Integrate the three-level-plus-ancilla atom over one period.

    The tracked coherence is ``<psi_DF(phi_t)| rho_lab(t) |a>``; the dark
    state is 2*pi periodic, so at ``T`` the bra is the initial one again.
    """
    p0 = schedule.params(0.0)
    model = build_three_level_model(p0, schedule.phi_rate, gamma, schedule.frame)
    basis = model.basis
    if rho0 is None:
        rho0 = interferometric_state(p0)
    ket_a = densemat.basis_vector(basis.dim, basis.index("a"))
    tracker = _lab_tracker(model, lambda t: dark_state(basis, 1, schedule.params(t)),
                           lambda t: ket_a)
    return _run_cycle(model, densemat.as_matrix(rho0), schedule.period, tracker,
                      _step_for(steps_per_period, step))


def run_five_level_loop(r1: float, r2: float, phi_rate: float, gamma1: float = 1.0,
                        gamma2: float = 1.0, phi0: float = 0.0, frame: Frame = Frame.LAB,
                        rho0=None, step: Optional[StepControl] = None,
                        steps_per_period: Optional[int] = None) -> LoopResult:
    """One period of the five-level atom, tracking ``<psi_1(t)| rho |psi_2(t)>``."""
    s1 = LoopSchedule(phi0, phi_rate, r1, frame)
    s2 = LoopSchedule(phi0, phi_rate, r2, frame)
    model = build_five_level_model(s1.params(), s2.params(), phi_rate, gamma1, gamma2, frame)
    basis = model.basis
    if rho0 is None:
        rho0 = five_level_superposition(s1.params(), s2.params())
    tracker = _lab_tracker(model, lambda t: dark_state(basis, 1, s1.params(t)),
                           lambda t: dark_state(basis, 2, s2.params(t)))
    return _run_cycle(model, densemat.as_matrix(rho0), s1.period, tracker,
                      _step_for(steps_per_period, step))

