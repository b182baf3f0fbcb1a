import dataclasses
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from steerlab import _kernel_py, densemat
from steerlab._backend import kernel
from steerlab.closed_form import derived_for
from steerlab.engine import (
    IntegrationError,
    LoopSchedule,
    StepControl,
    coherence,
    integrate,
    interferometric_state,
    lindblad_rhs,
    run_five_level_loop,
    run_loop,
    validate_density,
)
from steerlab.squeeze import (
    Frame,
    LevelBasis,
    SqueezeParams,
    build_five_level_model,
    build_three_level_model,
    dark_state,
    frame_unitary,
)
from tests.conftest import random_density, random_hermitian

B3 = LevelBasis.THREE_PLUS_ANCILLA
I_P, I_0, I_M, I_A = (B3.index(k) for k in ("1", "0", "-1", "a"))


def test_rhs_dark_state_stationary():
    p = SqueezeParams(0.5, 0.9)
    rho = densemat.outer(dark_state(B3, 1, p))
    m = build_three_level_model(p, 0.0)
    assert np.max(np.abs(lindblad_rhs(m, rho, 0.0))) < 1e-12


@pytest.mark.parametrize("frame", list(Frame))
def test_rhs_traceless_and_hermitian(rng, frame):
    m = build_three_level_model(SqueezeParams(0.8, 0.3), 0.05, frame=frame)
    for _ in range(10):
        rho = random_density(rng, 4)
        d = lindblad_rhs(m, rho, rng.uniform(0, 10))
        assert abs(np.trace(d)) < 1e-12
        assert densemat.hermiticity_defect(d) < 1e-12


def test_rhs_dimension_mismatch():
    m = build_three_level_model(SqueezeParams(0.5), 0.01)
    with pytest.raises(ValueError, match="dimension"):
        lindblad_rhs(m, np.eye(5) / 5, 0.0)


def test_rotating_rhs_matches_coherence_system(rng):
    r, rate = 0.5, 0.01
    d = derived_for(r)
    m = build_three_level_model(SqueezeParams(r), rate, frame=Frame.ROTATING)
    for _ in range(20):
        rho = random_hermitian(rng, 4)
        rho[I_0, I_A] = rho[I_A, I_0] = 0
        x, y = rho[I_M, I_A], rho[I_P, I_A]
        out = lindblad_rhs(m, rho, rng.uniform(0, 100))
        dx = 0.5j * rate * (d.alpha * x - d.beta * y)
        dy = -0.5 * (d.gamma_eff + 1j * d.alpha * rate) * y - 0.5j * rate * d.beta * x
        assert abs(out[I_M, I_A] - dx) < 1e-12
        assert abs(out[I_P, I_A] - dy) < 1e-12


def test_vacuum_cascade_matches_rate_equations():
    m = build_three_level_model(SqueezeParams(0.0), 0.0)
    rho0 = np.diag([1.0, 0, 0, 0]).astype(complex)
    traj = integrate(m, rho0, 10.0, StepControl(h=0.01, record_stride=50, keep_states=True))
    for t, rho in zip(traj.times, traj.states):
        assert abs(np.trace(rho) - 1) < 1e-9
        p = np.exp(-t)
        expected = [p, t * p, 1 - p * (1 + t), 0]
        assert np.max(np.abs(np.diag(rho).real - expected)) < 1e-9
    assert traj.final_state[I_M, I_M].real > 0.999


def test_static_dark_state_is_fixed():
    p = SqueezeParams(0.5, 1.7)
    rho0 = densemat.outer(dark_state(B3, 1, p))
    traj = integrate(build_three_level_model(p, 0.0), rho0, 100.0)
    assert densemat.frobenius_distance(traj.final_state, rho0) < 1e-9


def test_lab_and_rotating_agree_over_loop():
    r, rate = 0.5, 0.1
    p0 = SqueezeParams(r, 0.0)
    T = 2 * math.pi / rate
    rho0 = interferometric_state(p0)
    lab = integrate(build_three_level_model(p0, rate), rho0, T)
    rot_model = build_three_level_model(p0, rate, frame=Frame.ROTATING)
    O0 = frame_unitary(p0)
    rot = integrate(rot_model, O0 @ rho0 @ O0.conj().T, T)
    OT = frame_unitary(SqueezeParams(r, rate * T))
    assert densemat.frobenius_distance(OT @ lab.final_state @ OT.conj().T, rot.final_state) < 1e-7


def test_rk4_fourth_order():
    m = build_three_level_model(SqueezeParams(0.5), 0.2)
    rho0 = interferometric_state(SqueezeParams(0.5))
    final = lambda n: integrate(m, rho0, 10.0, StepControl(n_steps=n)).final_state
    ref = final(1200)
    e1 = densemat.frobenius_distance(final(300), ref)
    e2 = densemat.frobenius_distance(final(600), ref)
    assert 14 < e1 / e2 < 20


def random_harmonic(rng, dim, k):
    rates = rng.uniform(0.5, 2.0, size=k)
    A = 0.5 * (rng.normal(size=(k, dim, dim)) + 1j * rng.normal(size=(k, dim, dim)))
    B = 0.5 * (rng.normal(size=(k, dim, dim)) + 1j * rng.normal(size=(k, dim, dim)))
    return rates, A, B, random_hermitian(rng, dim)


@pytest.mark.parametrize("dim,k", [(2, 1), (4, 1), (5, 2), (6, 4)])
def test_compiled_kernel_matches_python(rng, dim, k):
    rates, A, B, H = random_harmonic(rng, dim, k)
    rho = random_density(rng, dim)
    args = (rho, 0.3, 0.01, 50, rates, A, B, 0.2, 0.7)
    for gen in (None, H):
        got = kernel.propagate(*args, gen)
        ref = _kernel_py.propagate(*args, gen)
        assert np.max(np.abs(got - ref)) < 1e-13


def test_kernel_path_matches_generic_rhs():
    p1, p2 = SqueezeParams(0.5, 0.3), SqueezeParams(1.0, 0.3)
    rho0 = densemat.outer((dark_state(LevelBasis.FIVE_LEVEL, 1, p1)
                           + densemat.basis_vector(5, 1)) / math.sqrt(2))
    for frame in Frame:
        m = build_five_level_model(p1, p2, 0.3, 1.0, 1.5, frame)
        generic = dataclasses.replace(m, harmonic=None)
        a = integrate(m, rho0, 5.0, StepControl(n_steps=200)).final_state
        b = integrate(generic, rho0, 5.0, StepControl(n_steps=200)).final_state
        assert densemat.frobenius_distance(a, b) < 1e-13


def test_pure_python_backend_selectable():
    code = ("import steerlab, numpy as np;"
            "from steerlab.engine import run_loop, LoopSchedule;"
            "res = run_loop(LoopSchedule(0.0, 0.2, 0.5), steps_per_period=400);"
            "print(steerlab.BACKEND, repr(res.phase))")
    env = dict(os.environ, STEERLAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out[0] == "python"
    compiled = run_loop(LoopSchedule(0.0, 0.2, 0.5), steps_per_period=400).phase
    assert abs(float(out[1]) - compiled) < 1e-12


def test_trajectory_recording():
    m = build_three_level_model(SqueezeParams(0.5), 0.1)
    traj = integrate(m, interferometric_state(SqueezeParams(0.5)), 1.0,
                     StepControl(n_steps=100, record_stride=30, keep_states=True))
    assert traj.times[0] == 0.0 and traj.times[-1] == 1.0
    assert np.all(np.diff(traj.times) > 0)
    assert np.allclose(traj.times, [0, 0.3, 0.6, 0.9, 1.0])
    assert len(traj.states) == len(traj.times)
    assert traj.steps == 100 and traj.health.ok


def test_step_divides_interval():
    m = build_three_level_model(SqueezeParams(0.5), 0.1)
    traj = integrate(m, interferometric_state(SqueezeParams(0.5)), 1.0, StepControl(h=0.3))
    assert traj.steps == 4 and traj.step_size == 0.25


@pytest.mark.parametrize("kwargs", [dict(h=0.1, n_steps=3), dict(h=0.0), dict(n_steps=0),
                                    dict(record_stride=0)])
def test_step_control_rejects(kwargs):
    with pytest.raises(ValueError):
        StepControl(**kwargs)


def test_coarse_steps_raise_named_failure():
    with pytest.raises(IntegrationError) as info:
        run_loop(LoopSchedule(0.0, 0.01, 0.5), steps_per_period=10)
    assert info.value.invariant in ("trace", "hermiticity", "positivity", "phase increment")
    assert "violated at t=" in str(info.value)


def test_validate_density_rejects():
    with pytest.raises(IntegrationError, match="trace"):
        validate_density(np.eye(2))
    with pytest.raises(IntegrationError, match="positivity"):
        validate_density(np.diag([1.5, -0.5]))
    with pytest.raises(IntegrationError, match="hermiticity"):
        validate_density([[0.5, 0.1], [0.0, 0.5]])


def test_coherence_examples(rng):
    x = np.array([1, 1j, 0]) / math.sqrt(2)
    y = np.array([0, 0, 1.0])
    assert coherence(np.outer(x, y.conj()), x, y) == pytest.approx(1)
    assert coherence(np.eye(3) / 3, x, y) == 0
    rho = interferometric_state(SqueezeParams(0.5, 0.4))
    psi = dark_state(B3, 1, SqueezeParams(0.5, 0.4))
    assert coherence(rho, psi, densemat.basis_vector(4, I_A)) == pytest.approx(0.5, abs=1e-15)


def test_loop_without_squeezing():
    res = run_loop(LoopSchedule(0.0, 0.1, 0.0))
    assert abs(res.phase) < 1e-9 and abs(res.visibility - 1) < 1e-9


@pytest.mark.parametrize("phi0", [0.0, 1.0, -2.5])
def test_loop_frames_agree(phi0):
    lab = run_loop(LoopSchedule(phi0, 0.05, 0.5))
    rot = run_loop(LoopSchedule(phi0, 0.05, 0.5, Frame.ROTATING))
    assert abs(lab.phase - rot.phase) < 1e-9
    assert abs(lab.visibility - rot.visibility) < 1e-9
    # phase track is continuous at the recording stride
    assert np.max(np.abs(np.diff(lab.trajectory.phase_track))) < math.pi / 4


def test_five_level_frames_agree():
    lab = run_five_level_loop(0.5, 1.0, 0.05)
    rot = run_five_level_loop(0.5, 1.0, 0.05, frame=Frame.ROTATING)
    assert abs(lab.phase - rot.phase) < 1e-9
    assert lab.initial_coherence == pytest.approx(0.5, abs=1e-15)


def test_loop_schedule_validation():
    s = LoopSchedule(0.1, 0.01, 0.5)
    assert abs(s.period * s.phi_rate - 2 * math.pi) < 1e-12
    with pytest.raises(ValueError):
        LoopSchedule(0.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        LoopSchedule(0.0, 0.1, -1.0)
