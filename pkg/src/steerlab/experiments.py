"""Canned experiments. Each returns CSV-ready rows plus per-point failures."""
from __future__ import annotations

import cmath
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from steerlab import closed_form as cf
from steerlab.config import ExperimentConfig
from steerlab.engine import IntegrationError, LoopSchedule, StepControl, run_five_level_loop, run_loop
from steerlab.squeeze import Frame, SqueezeParams, derive

LOOP_COLUMNS = ["r", "xi", "phase_sim", "phase_closed", "phase_delta", "visibility_sim",
                "visibility_closed", "visibility_delta", "steps"]
BERRY_COLUMNS = ["r", "n_steps", "berry_numeric", "berry_closed", "berry_delta"]
FIVE_COLUMNS = ["r1", "r2", "xi", "phase_sim", "phase_closed", "phase_delta", "phase_formula",
                "visibility_sim", "visibility_closed", "visibility_delta", "steps"]
POLARIZATION_COLUMNS = ["r1", "r2", "delta", "jones_r_re", "jones_r_im", "jones_l_re",
                        "jones_l_im", "s0", "s1", "s2", "s3", "plane_angle"]


@dataclass
class Outcome:
    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)
    failures: list[dict[str, Any]] = field(default_factory=list)
    wall_ms: dict[str, float] = field(default_factory=dict)


def worker_count() -> int:
    env = os.environ.get("STEERLAB_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"STEERLAB_WORKERS must be an integer, got {env!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def _loop_point(args) -> tuple[dict[str, Any], float, str]:
    r, xi, phi0, frame, spp, stride = args
    t0 = time.perf_counter()
    nan = math.nan
    d = derive(SqueezeParams(r))
    pred = cf.loop_prediction(d, xi)
    row = {"r": r, "xi": xi, "phase_closed": pred.phase, "visibility_closed": pred.visibility}
    try:
        res = run_loop(LoopSchedule(phi0, xi, r, Frame(frame)),
                       step=StepControl(record_stride=stride), steps_per_period=spp)
    except IntegrationError as err:
        row.update(phase_sim=nan, phase_delta=nan, visibility_sim=nan,
                   visibility_delta=nan, steps=nan)
        return row, (time.perf_counter() - t0) * 1e3, str(err)
    row.update(
        phase_sim=res.phase,
        phase_delta=abs(res.phase - pred.phase),
        visibility_sim=res.visibility,
        visibility_delta=abs(res.visibility - pred.visibility),
        steps=res.trajectory.steps,
    )
    return row, (time.perf_counter() - t0) * 1e3, ""


def loop_sweep(cfg: ExperimentConfig) -> Outcome:
    points = [(r, xi, cfg.phi0, cfg.frame, cfg.steps_per_period, cfg.record_stride)
              for r in cfg.r for xi in cfg.xi]
    n_workers = min(worker_count(), len(points))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_loop_point, points))
    else:
        results = [_loop_point(p) for p in points]
    out = Outcome(LOOP_COLUMNS)
    for row, ms, err in sorted(results, key=lambda x: (x[0]["r"], x[0]["xi"])):
        out.rows.append(row)
        out.wall_ms[f"r={row['r']!r},xi={row['xi']!r}"] = ms
        if err:
            out.failures.append({"r": row["r"], "xi": row["xi"], "error": err})
    return out


def berry(cfg: ExperimentConfig) -> Outcome:
    out = Outcome(BERRY_COLUMNS)
    for r in sorted(cfg.r):
        num = cf.berry_phase_numeric(r, cfg.berry_steps)
        closed = cf.berry_phase_closed(derive(SqueezeParams(r)))
        out.rows.append({"r": r, "n_steps": cfg.berry_steps, "berry_numeric": num,
                         "berry_closed": closed, "berry_delta": abs(num - closed)})
    return out


def five_level(cfg: ExperimentConfig) -> Outcome:
    out = Outcome(FIVE_COLUMNS)
    d1, d2 = derive(SqueezeParams(cfg.r1)), derive(SqueezeParams(cfg.r2))
    closed = cf.relative_phase(d1, d2)
    for xi in sorted(cfg.xi):
        T = 2 * math.pi / xi
        formula = cf.five_level_coherence(d1, d2, xi, T)
        vis_closed = abs(formula) / 0.5
        row = {"r1": cfg.r1, "r2": cfg.r2, "xi": xi, "phase_closed": closed,
               "phase_formula": cmath.phase(formula), "visibility_closed": vis_closed}
        t0 = time.perf_counter()
        try:
            res = run_five_level_loop(cfg.r1, cfg.r2, xi, phi0=cfg.phi0, frame=Frame(cfg.frame),
                                      step=StepControl(record_stride=cfg.record_stride),
                                      steps_per_period=cfg.steps_per_period)
        except IntegrationError as err:
            row.update(phase_sim=math.nan, phase_delta=math.nan, visibility_sim=math.nan,
                       visibility_delta=math.nan, steps=math.nan)
            out.failures.append({"r1": cfg.r1, "r2": cfg.r2, "xi": xi, "error": str(err)})
        else:
            row.update(phase_sim=res.phase, phase_delta=abs(res.phase - closed),
                       visibility_sim=res.visibility,
                       visibility_delta=abs(res.visibility - vis_closed),
                       steps=res.trajectory.steps)
        out.wall_ms[f"xi={xi!r}"] = (time.perf_counter() - t0) * 1e3
        out.rows.append(row)
    return out


def polarization(cfg: ExperimentConfig) -> Outcome:
    out = Outcome(POLARIZATION_COLUMNS)
    delta = cf.relative_phase(derive(SqueezeParams(cfg.r1)), derive(SqueezeParams(cfg.r2)))
    pol = cf.polarization_state(delta)
    jr, jl = pol.jones
    s0, s1, s2, s3 = pol.stokes
    out.rows.append({"r1": cfg.r1, "r2": cfg.r2, "delta": delta,
                     "jones_r_re": jr.real, "jones_r_im": jr.imag,
                     "jones_l_re": jl.real, "jones_l_im": jl.imag,
                     "s0": s0, "s1": s1, "s2": s2, "s3": s3, "plane_angle": pol.plane_angle})
    return out


RUNNERS = {
    "loop": loop_sweep,
    "sweep": loop_sweep,
    "berry": berry,
    "fivelevel": five_level,
    "polarization": polarization,
}
