"""Acceptance criteria: simulation against closed form, plus property checks.

Each criterion returns a :class:`CriterionResult`. Runs shared between
criteria are cached on a :class:`Suite`, which also collects the state
health of every integration for the state-validity criterion.
"""
from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from steerlab import closed_form as cf
from steerlab import densemat
from steerlab.engine import (
    IntegrationError,
    LoopResult,
    LoopSchedule,
    StateHealth,
    StepControl,
    integrate,
    interferometric_state,
    run_five_level_loop,
    run_loop,
)
from steerlab.squeeze import (
    Frame,
    LevelBasis,
    SqueezeParams,
    build_three_level_model,
    dark_state,
    derive,
    frame_unitary,
    jump_operator,
    rot_jump_at_phase,
)

R_MAIN = 0.5
R_FIVE = (0.5, 1.0)
PHASE_TOL = 6e-3
VISIBILITY_TOL = 2e-3
ORDER_BAND = (1.6, 2.4)
RK4_BAND = (12.0, 20.0)


@dataclass
class CriterionResult:
    id: str
    name: str
    measured: float
    target: float
    tolerance: float
    passed: bool
    detail: str = ""
    wall_s: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] {self.id:>3} {self.name}: measured={self.measured:.9g} "
                f"target={self.target:.9g} tol={self.tolerance:.3g} {self.detail}").rstrip()


@dataclass
class Suite:
    """Caches loop runs; ``steps_per_period`` overrides the step for every
    loop integration when set."""
    steps_per_period: Optional[int] = None
    health: StateHealth = field(default_factory=StateHealth)
    _loops: dict = field(default_factory=dict)
    _walls: dict = field(default_factory=dict)

    def _remember(self, key, fn):
        if key not in self._loops:
            t0 = time.perf_counter()
            res = fn()
            self._walls[key] = time.perf_counter() - t0
            self.health.merge(res.trajectory.health)
            self._loops[key] = res
        return self._loops[key]

    def loop(self, r: float, xi: float, frame: Frame = Frame.LAB) -> LoopResult:
        return self._remember(
            ("loop", r, xi, frame),
            lambda: run_loop(LoopSchedule(0.0, xi, r, frame),
                             steps_per_period=self.steps_per_period))

    def five_level(self, r1: float, r2: float, xi: float) -> LoopResult:
        return self._remember(
            ("five", r1, r2, xi),
            lambda: run_five_level_loop(r1, r2, xi, steps_per_period=self.steps_per_period))

    def wall(self, key) -> float:
        return self._walls.get(key, 0.0)


def _fail(cid: str, name: str, target: float, tol: float, err: Exception) -> CriterionResult:
    return CriterionResult(cid, name, math.nan, target, tol, False, f"integration failure: {err}")


def c1_geometric_phase(suite: Suite) -> CriterionResult:
    name = "lab-frame geometric phase (r=0.5, xi=1e-3)"
    target = cf.berry_phase_closed(derive(SqueezeParams(R_MAIN)))
    try:
        res = suite.loop(R_MAIN, 1e-3)
    except IntegrationError as err:
        return _fail("1", name, target, PHASE_TOL, err)
    wall = suite.wall(("loop", R_MAIN, 1e-3, Frame.LAB))
    delta = abs(res.phase - target)
    ok = delta <= PHASE_TOL and wall < 30.0
    return CriterionResult("1", name, res.phase, target, PHASE_TOL, ok,
                           f"delta={delta:.3e}", wall)


def c2_visibility(suite: Suite) -> CriterionResult:
    name = "visibility (r=0.5, xi=1e-2)"
    d = derive(SqueezeParams(R_MAIN))
    target = cf.loop_prediction(d, 1e-2).visibility
    try:
        res = suite.loop(R_MAIN, 1e-2)
    except IntegrationError as err:
        return _fail("2", name, target, VISIBILITY_TOL, err)
    wall = suite.wall(("loop", R_MAIN, 1e-2, Frame.LAB))
    delta = abs(res.visibility - target)
    ok = delta <= VISIBILITY_TOL and wall < 5.0
    return CriterionResult("2", name, res.visibility, target, VISIBILITY_TOL, ok,
                           f"delta={delta:.3e}", wall)


def phase_errors(suite: Suite, xis=(4e-3, 2e-3, 1e-3)) -> list[float]:
    target = cf.berry_phase_closed(derive(SqueezeParams(R_MAIN)))
    return [abs(suite.loop(R_MAIN, xi).phase - target) for xi in xis]


def c3_adiabatic_order(suite: Suite) -> CriterionResult:
    name = "first-order phase convergence in xi (4e-3, 2e-3, 1e-3)"
    lo, hi = ORDER_BAND
    try:
        errs = phase_errors(suite)
    except IntegrationError as err:
        return _fail("3", name, 2.0, 0.4, err)
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    decreasing = all(errs[i] > errs[i + 1] for i in range(len(errs) - 1))
    ok = decreasing and all(lo <= q <= hi for q in ratios)
    worst = max(ratios, key=lambda q: abs(q - 2.0))
    detail = ("errors=" + ",".join(f"{e:.3e}" for e in errs)
              + " ratios=" + ",".join(f"{q:.3f}" for q in ratios))
    return CriterionResult("3", name, worst, 2.0, 0.4, ok, detail)


def c4_dark_state(suite: Suite) -> CriterionResult:
    name = "dark state annihilated and stationary"
    basis = LevelBasis.THREE_PLUS_ANCILLA
    worst = 0.0
    for r in np.linspace(0.0, 2.0, 20):
        for phi in np.arange(20) * (2 * math.pi / 20):
            p = SqueezeParams(float(r), float(phi))
            worst = max(worst, float(np.linalg.norm(jump_operator(basis, 1, p) @ dark_state(basis, 1, p))))
    p0 = SqueezeParams(R_MAIN, 0.3)
    rho0 = densemat.outer(dark_state(basis, 1, p0))
    model = build_three_level_model(p0, 0.0)
    try:
        traj = integrate(model, rho0, 100.0)
    except IntegrationError as err:
        return _fail("4", name, 0.0, 1e-9, err)
    suite.health.merge(traj.health)
    drift = densemat.frobenius_distance(traj.final_state, rho0)
    ok = worst < 1e-12 and drift < 1e-9
    return CriterionResult("4", name, max(worst, drift), 0.0, 1e-9, ok,
                           f"max|R psi|={worst:.2e} (tol 1e-12) drift={drift:.2e} (tol 1e-9)")


def c5_rotating_frame(suite: Suite) -> CriterionResult:
    name = "rotating-frame structure and lab/rotating agreement (xi=1e-2)"
    rng = np.random.default_rng(5)
    diag = np.diag([1, 1, 0, 0]).astype(complex)
    worst = 0.0
    for _ in range(200):
        r, phi = rng.uniform(0, 2), rng.uniform(0, 2 * math.pi)
        Rt = rot_jump_at_phase(LevelBasis.THREE_PLUS_ANCILLA, 1, r, phi)
        worst = max(worst, densemat.frobenius_distance(Rt.conj().T @ Rt, diag))
    try:
        lab = suite.loop(R_MAIN, 1e-2, Frame.LAB)
        rot = suite.loop(R_MAIN, 1e-2, Frame.ROTATING)
    except IntegrationError as err:
        return _fail("5", name, 0.0, 1e-7, err)
    O = frame_unitary(SqueezeParams(R_MAIN, 2 * math.pi))
    dist = densemat.frobenius_distance(O @ lab.trajectory.final_state @ O.conj().T,
                                       rot.trajectory.final_state)
    ok = worst < 1e-12 and dist < 1e-7
    return CriterionResult("5", name, dist, 0.0, 1e-7, ok,
                           f"|Rt+Rt - diag(1,1,0,0)|={worst:.2e} (tol 1e-12)")


def rk4_two_level(derived, phi_rate: float, coh0: complex, t_end: float, n: int):
    """Standalone RK4 of the 2x2 coherence flow; returns samples every step."""
    a = 0.5j * derived.alpha * phi_rate
    b = -0.5j * derived.beta * phi_rate
    e = -0.5 * (derived.gamma_eff + 1j * derived.alpha * phi_rate)
    h = t_end / n
    x, y = complex(coh0), 0j
    out = [(0.0, x, y)]
    for k in range(n):
        k1x, k1y = a * x + b * y, b * x + e * y
        x2, y2 = x + 0.5 * h * k1x, y + 0.5 * h * k1y
        k2x, k2y = a * x2 + b * y2, b * x2 + e * y2
        x3, y3 = x + 0.5 * h * k2x, y + 0.5 * h * k2y
        k3x, k3y = a * x3 + b * y3, b * x3 + e * y3
        x4, y4 = x + h * k3x, y + h * k3y
        k4x, k4y = a * x4 + b * y4, b * x4 + e * y4
        x += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        out.append(((k + 1) * h, x, y))
    return out


def c6_closed_form_coherence(suite: Suite) -> CriterionResult:
    name = "closed-form coherence vs 2x2 RK4, full engine and adiabatic expansion"
    xi = 1e-2
    d = derive(SqueezeParams(R_MAIN))
    T = 2 * math.pi / xi
    coh0 = 0.5
    err_ode = 0.0
    for t, x, y in rk4_two_level(d, xi, coh0, T, 2 ** 16)[::64]:
        ex, ey = cf.exact_coherence(d, xi, coh0, t)
        err_ode = max(err_ode, abs(ex - x), abs(ey - y))

    p0 = SqueezeParams(R_MAIN, 0.0)
    model = build_three_level_model(p0, xi, frame=Frame.ROTATING)
    O0 = frame_unitary(p0)
    rho0 = O0 @ interferometric_state(p0) @ O0.conj().T
    try:
        traj = integrate(model, rho0, T,
                         StepControl(n_steps=suite.steps_per_period, keep_states=True,
                                     record_stride=1024))
    except IntegrationError as err:
        return _fail("6", name, 0.0, 1e-7, err)
    suite.health.merge(traj.health)
    im, ia = 2, 3
    c0 = traj.states[0][im, ia]
    err_engine = max(abs(s[im, ia] - cf.exact_coherence(d, xi, c0, t)[0])
                     for t, s in zip(traj.times, traj.states))

    ratios = []
    for x in (1e-1, 1e-2, 1e-3):
        Tx = 2 * math.pi / x
        ex = cf.exact_coherence(d, x, 1.0, Tx)[0]
        ratios.append(abs(cf.adiabatic_coherence(d, x, 1.0, Tx) - ex) / x ** 2)
    ok = err_ode < 1e-10 and err_engine < 1e-7 and max(ratios) <= 3.0
    return CriterionResult(
        "6", name, err_engine, 0.0, 1e-7, ok,
        f"vs 2x2 RK4={err_ode:.2e} (tol 1e-10) adiabatic/xi^2 max={max(ratios):.3f} (tol 3)")


def c7_eigen_rates(suite: Suite) -> CriterionResult:
    name = "eigenrate sum/product invariants"
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        r = rng.uniform(0, 2)
        xi = rng.uniform(0, 0.1)
        while xi == 0.0:
            xi = rng.uniform(0, 0.1)
        d = derive(SqueezeParams(r))
        lr = cf.eigen_rates(d, xi)
        s = lr.lambda_plus + lr.lambda_minus
        p = lr.lambda_plus * lr.lambda_minus
        worst = max(worst, abs(s + d.gamma_eff / 2),
                    abs(p - (xi ** 2 / 4 - 1j * d.alpha * d.gamma_eff * xi / 4)))
    static_ok = True
    for r in (0.0, 0.5, 1.0, 2.0):
        d = derive(SqueezeParams(r))
        lr = cf.eigen_rates(d, 0.0)
        static_ok &= lr.lambda_minus == 0 and lr.lambda_plus == -d.gamma_eff / 2
    ok = worst < 1e-12 and static_ok
    return CriterionResult("7", name, worst, 0.0, 1e-12, ok,
                           f"static roots exact={static_ok}")


def c8_berry(suite: Suite) -> CriterionResult:
    name = "discrete Berry loop vs closed form (N=1e4)"
    worst = 0.0
    rng = np.random.default_rng(8)
    gauge = 0.0
    for r in (0.25, 0.5, 1.0):
        num = cf.berry_phase_numeric(r, 10_000)
        worst = max(worst, abs(num - cf.berry_phase_closed(derive(SqueezeParams(r)))))
        shifted = cf.berry_phase_numeric(r, 10_000, rng.uniform(-math.pi, math.pi, 10_000))
        gauge = max(gauge, abs(shifted - num))
    zero = cf.berry_phase_numeric(0.0, 10_000)
    ok = worst < 1e-6 and gauge < 1e-10 and zero == 0.0
    return CriterionResult("8", name, worst, 0.0, 1e-6, ok,
                           f"gauge shift={gauge:.2e} (tol 1e-10) r=0 -> {zero!r}")


def c9_five_level(suite: Suite) -> CriterionResult:
    name = "five-level relative phase (r1=0.5, r2=1.0, xi=1e-3)"
    r1, r2 = R_FIVE
    d1, d2 = derive(SqueezeParams(r1)), derive(SqueezeParams(r2))
    target = cf.relative_phase(d1, d2)
    try:
        res = suite.five_level(r1, r2, 1e-3)
    except IntegrationError as err:
        return _fail("9", name, target, PHASE_TOL, err)
    wall = suite.wall(("five", r1, r2, 1e-3))
    T = 2 * math.pi / 1e-3
    formula = cmath.phase(cf.five_level_coherence(d1, d2, 1e-3, T))
    d_formula = abs(res.phase - formula)
    ok = abs(res.phase - target) <= PHASE_TOL and d_formula <= 2e-3 and wall < 60.0
    return CriterionResult("9", name, res.phase, target, PHASE_TOL, ok,
                           f"vs five_level_coherence={d_formula:.2e} (tol 2e-3)", wall)


def c10_polarization(suite: Suite) -> CriterionResult:
    name = "polarization readout is linear with unit Stokes norm"
    deltas = [0.0, math.pi / 2, math.pi]
    try:
        deltas.append(suite.five_level(*R_FIVE, 1e-3).phase)
    except IntegrationError as err:
        return _fail("10", name, 1.0, 0.0, err)
    worst = 0.0
    for dl in deltas:
        st = cf.polarization_state(dl).stokes
        expected = np.array([1.0, math.cos(dl), math.sin(dl), 0.0])
        norm = st[1] ** 2 + st[2] ** 2 + st[3] ** 2
        worst = max(worst, float(np.max(np.abs(st - expected))), abs(norm - 1.0))
    return CriterionResult("10", name, worst, 0.0, 0.0, worst == 0.0,
                           f"deltas={','.join(f'{x:.6f}' for x in deltas)}")


def c11_state_validity(suite: Suite) -> CriterionResult:
    h = suite.health
    return CriterionResult(
        "11", "every checked state is a valid density matrix", h.min_eigenvalue, 0.0, 1e-9,
        h.ok and h.checks > 0,
        f"checks={h.checks} max|tr-1|={h.max_trace_error:.2e} "
        f"max herm={h.max_hermiticity_defect:.2e} min eig={h.min_eigenvalue:.2e}")


def rk4_order_ratio(steps_per_period: Optional[int] = None) -> tuple[float, float, float]:
    """Error ratio under step halving for one xi=0.1 loop, against a
    quarter-step reference. Returns ``(ratio, err_N, err_2N)``."""
    n = steps_per_period or 1024
    sched = LoopSchedule(0.0, 0.1, R_MAIN)
    finals = [run_loop(sched, steps_per_period=k).trajectory.final_state for k in (n, 2 * n, 4 * n)]
    e1 = densemat.frobenius_distance(finals[0], finals[2])
    e2 = densemat.frobenius_distance(finals[1], finals[2])
    return e1 / e2, e1, e2


def e1_rk4_order(suite: Suite) -> CriterionResult:
    name = "RK4 step-halving error ratio"
    lo, hi = RK4_BAND
    try:
        ratio, e1, e2 = rk4_order_ratio(suite.steps_per_period)
    except IntegrationError as err:
        return _fail("E1", name, 16.0, 4.0, err)
    ok = lo <= ratio <= hi
    return CriterionResult("E1", name, ratio, 16.0, 4.0, ok, f"errors={e1:.3e},{e2:.3e}")


CRITERIA: list[Callable[[Suite], CriterionResult]] = [
    c1_geometric_phase, c2_visibility, c3_adiabatic_order, c4_dark_state,
    c5_rotating_frame, c6_closed_form_coherence, c7_eigen_rates, c8_berry,
    c9_five_level, c10_polarization, c11_state_validity, e1_rk4_order,
]


def run_suite(steps_per_period: Optional[int] = None,
              echo: Optional[Callable[[str], None]] = None) -> list[CriterionResult]:
    suite = Suite(steps_per_period=steps_per_period)
    results = []
    for crit in CRITERIA:
        t0 = time.perf_counter()
        res = crit(suite)
        res.wall_s = max(res.wall_s, time.perf_counter() - t0)
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
