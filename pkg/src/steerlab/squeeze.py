"""Everything parameterised by the squeezing ``eta = r exp(i phi)``.

Basis orderings are fixed: ``[|1>, |0>, |-1>, |a>]`` for the three-level
atom plus ancilla and ``[|1>, |0>, |-1>, |1'>, |-1'>]`` for the five-level
atom. The ancilla is decoupled from every operator.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Schedule = Callable[[float], "SqueezeParams"]
MatrixAtTime = Callable[[float], np.ndarray]


class LevelBasis(enum.Enum):
    THREE_PLUS_ANCILLA = ("1", "0", "-1", "a")
    FIVE_LEVEL = ("1", "0", "-1", "1'", "-1'")

    @property
    def labels(self) -> tuple[str, ...]:
        return self.value

    @property
    def dim(self) -> int:
        return len(self.value)

    def index(self, label: str) -> int:
        return self.value.index(label)


class Frame(enum.Enum):
    LAB = "lab"
    ROTATING = "rotating"


# (upper, middle, lower) level indices of each ladder
_CHANNEL_LEVELS = {
    (LevelBasis.THREE_PLUS_ANCILLA, 1): (0, 1, 2),
    (LevelBasis.FIVE_LEVEL, 1): (0, 1, 2),
    (LevelBasis.FIVE_LEVEL, 2): (3, 1, 4),
}


def _levels(basis: LevelBasis, channel: int) -> tuple[int, int, int]:
    try:
        return _CHANNEL_LEVELS[(basis, channel)]
    except KeyError:
        raise ValueError(f"channel {channel} is not defined for {basis.name}") from None


@dataclass(frozen=True)
class SqueezeParams:
    r: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"squeezing amplitude r must be finite and >= 0, got {self.r}")
        if not math.isfinite(self.phi):
            raise ValueError(f"squeezing phase must be finite, got {self.phi}")

    @property
    def eta(self) -> complex:
        return self.r * complex(math.cos(self.phi), math.sin(self.phi))


@dataclass(frozen=True)
class SqueezeDerived:
    c: float
    s: float
    alpha: float
    beta: float
    gamma: float
    gamma_eff: float


def derive(params: SqueezeParams, gamma: float = 1.0) -> SqueezeDerived:
    if not gamma > 0:
        raise ValueError(f"decay rate gamma must be > 0, got {gamma}")
    r = params.r
    ch2 = math.cosh(2 * r)
    root = math.sqrt(ch2)
    return SqueezeDerived(
        c=math.cosh(r) / root,
        s=math.sinh(r) / root,
        alpha=1.0 / ch2,
        beta=-math.tanh(2 * r),
        gamma=gamma,
        gamma_eff=gamma * ch2,
    )


def lowering_operator(basis: LevelBasis, channel: int = 1) -> np.ndarray:
    up, mid, low = _levels(basis, channel)
    S = np.zeros((basis.dim, basis.dim), dtype=np.complex128)
    S[low, mid] = 1.0
    S[mid, up] = 1.0
    return S


def jump_operator(basis: LevelBasis, channel: int, params: SqueezeParams) -> np.ndarray:
    """``S cosh r + exp(i phi) S^dagger sinh r`` on the channel's ladder."""
    S = lowering_operator(basis, channel)
    return S * math.cosh(params.r) + np.exp(1j * params.phi) * math.sinh(params.r) * S.conj().T


def dark_state(basis: LevelBasis, channel: int, params: SqueezeParams) -> np.ndarray:
    """Unit vector ``c|low> - exp(i phi) s|up>`` annihilated by the jump operator."""
    up, _, low = _levels(basis, channel)
    d = derive(params)
    psi = np.zeros(basis.dim, dtype=np.complex128)
    psi[low] = d.c
    psi[up] = -np.exp(1j * params.phi) * d.s
    return psi


def _embed(block: np.ndarray, basis: LevelBasis, channel: int, identity: bool) -> np.ndarray:
    # block is written in (up, mid, low) order
    idx = _levels(basis, channel)
    out = np.eye(basis.dim, dtype=np.complex128) if identity else np.zeros(
        (basis.dim, basis.dim), dtype=np.complex128)
    out[np.ix_(idx, idx)] = block
    return out


def frame_unitary(params: SqueezeParams, basis: LevelBasis = LevelBasis.THREE_PLUS_ANCILLA,
                  channel: int = 1) -> np.ndarray:
    """Unitary taking the dark state onto ``|-1>`` (times ``exp(i phi/2)``).

    ``phi`` is used as given; reducing it mod 2*pi would flip the sign of
    the half-angle factors and break the frame-back map after a loop.
    """
    d = derive(params)
    em = np.exp(-0.5j * params.phi)
    ep = np.exp(0.5j * params.phi)
    block = np.array([
        [d.c * em, 0.0, d.s * ep],
        [0.0, 1.0, 0.0],
        [-d.s * em, 0.0, d.c * ep],
    ], dtype=np.complex128)
    return _embed(block, basis, channel, identity=True)


def five_level_frame_unitary(params1: SqueezeParams, params2: SqueezeParams) -> np.ndarray:
    return (frame_unitary(params1, LevelBasis.FIVE_LEVEL, 1)
            @ frame_unitary(params2, LevelBasis.FIVE_LEVEL, 2))


def steering_generator_closed(derived: SqueezeDerived, phi_rate: float,
                              basis: LevelBasis = LevelBasis.THREE_PLUS_ANCILLA,
                              channel: int = 1) -> np.ndarray:
    """``G = i (dO/dt) O^dagger`` for constant r and linearly advancing phase."""
    a, b = derived.alpha, derived.beta
    block = 0.5 * phi_rate * np.array([[a, 0.0, b], [0.0, 0.0, 0.0], [b, 0.0, -a]],
                                      dtype=np.complex128)
    return _embed(block, basis, channel, identity=False)


def steering_generator_numeric(schedule: Schedule, t: float, dt: float,
                               basis: LevelBasis = LevelBasis.THREE_PLUS_ANCILLA,
                               channel: int = 1) -> np.ndarray:
    """Central-difference ``i (dO/dt) O^dagger`` for an arbitrary schedule."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    O = frame_unitary(schedule(t), basis, channel)
    dO = (frame_unitary(schedule(t + dt), basis, channel)
          - frame_unitary(schedule(t - dt), basis, channel)) / (2 * dt)
    G = 1j * dO @ O.conj().T
    return 0.5 * (G + G.conj().T)


def linear_schedule(params0: SqueezeParams, phi_rate: float) -> Schedule:
    return lambda t: SqueezeParams(params0.r, params0.phi + phi_rate * t)


@dataclass(frozen=True)
class Dissipator:
    rate: float
    jump: MatrixAtTime


@dataclass(frozen=True)
class HarmonicForm:
    """Jumps ``static[k] + exp(i (phi0 + phi_rate t)) modulated[k]`` with a
    constant generator; the layout the propagation kernel consumes."""
    rates: np.ndarray
    static: np.ndarray
    modulated: np.ndarray
    phi0: float
    phi_rate: float
    generator: Optional[np.ndarray] = None


@dataclass(frozen=True)
class ModelSpec:
    basis: LevelBasis
    dissipators: tuple[Dissipator, ...]
    generator: Optional[MatrixAtTime] = None
    frame: Frame = Frame.LAB
    # O(t) for rotating-frame models: rho_rot = O rho_lab O^dagger
    frame_map: Optional[MatrixAtTime] = None
    harmonic: Optional[HarmonicForm] = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return self.basis.dim


def _check_gamma(**gammas: float) -> None:
    for name, g in gammas.items():
        if not (math.isfinite(g) and g > 0):
            raise ValueError(f"{name} must be > 0, got {g}")


def _rotated_jump(R: np.ndarray, O: np.ndarray, r: float) -> np.ndarray:
    return O @ R @ O.conj().T / math.sqrt(math.cosh(2 * r))


def rot_jump_at_phase(basis: LevelBasis, channel: int, r: float, phi: float) -> np.ndarray:
    p = SqueezeParams(r, phi)
    return _rotated_jump(jump_operator(basis, channel, p), frame_unitary(p, basis, channel), r)


def build_three_level_model(params0: SqueezeParams, phi_rate: float, gamma: float = 1.0,
                            frame: Frame = Frame.LAB) -> ModelSpec:
    _check_gamma(gamma=gamma)
    basis = LevelBasis.THREE_PLUS_ANCILLA
    sched = linear_schedule(params0, phi_rate)
    S = lowering_operator(basis)
    r = params0.r

    if frame is Frame.LAB:
        harmonic = HarmonicForm(
            rates=np.array([gamma]),
            static=(S * math.cosh(r))[None],
            modulated=(S.conj().T * math.sinh(r))[None],
            phi0=params0.phi, phi_rate=phi_rate,
        )
        return ModelSpec(
            basis=basis,
            dissipators=(Dissipator(gamma, lambda t: jump_operator(basis, 1, sched(t))),),
            frame=frame,
            harmonic=harmonic,
        )

    d = derive(params0, gamma)
    G = steering_generator_closed(d, phi_rate)

    def rot_jump(t):
        p = sched(t)
        return _rotated_jump(jump_operator(basis, 1, p), frame_unitary(p), r)

    # The rotated jump only picks up a global phase exp(i phi/2) as phi
    # advances, which the dissipator ignores, so the phi = 0 value suffices.
    harmonic = HarmonicForm(
        rates=np.array([d.gamma_eff]),
        static=rot_jump_at_phase(basis, 1, r, 0.0)[None],
        modulated=np.zeros((1, basis.dim, basis.dim), dtype=np.complex128),
        phi0=params0.phi, phi_rate=phi_rate, generator=G,
    )
    return ModelSpec(
        basis=basis,
        dissipators=(Dissipator(d.gamma_eff, rot_jump),),
        generator=lambda t: G,
        frame=frame,
        frame_map=lambda t: frame_unitary(sched(t)),
        harmonic=harmonic,
    )


def build_five_level_model(params1: SqueezeParams, params2: SqueezeParams, phi_rate: float,
                           gamma1: float = 1.0, gamma2: float = 1.0,
                           frame: Frame = Frame.LAB) -> ModelSpec:
    """Two squeezed channels sharing ``|0>``; both phases advance at ``phi_rate``."""
    _check_gamma(gamma1=gamma1, gamma2=gamma2)
    basis = LevelBasis.FIVE_LEVEL
    scheds = (linear_schedule(params1, phi_rate), linear_schedule(params2, phi_rate))
    params = (params1, params2)
    gammas = (gamma1, gamma2)

    if frame is Frame.LAB:
        dissipators = tuple(
            Dissipator(g, (lambda t, ch=ch, sc=sc: jump_operator(basis, ch, sc(t))))
            for ch, sc, g in zip((1, 2), scheds, gammas)
        )
        S = [lowering_operator(basis, ch) for ch in (1, 2)]
        # both channels must share phi0 to fit one harmonic phase; otherwise
        # fold the offset of channel 2 into its modulated part
        off = np.exp(1j * (params2.phi - params1.phi))
        harmonic = HarmonicForm(
            rates=np.array(gammas, dtype=float),
            static=np.stack([S[0] * math.cosh(params1.r), S[1] * math.cosh(params2.r)]),
            modulated=np.stack([S[0].conj().T * math.sinh(params1.r),
                                off * S[1].conj().T * math.sinh(params2.r)]),
            phi0=params1.phi, phi_rate=phi_rate,
        )
        return ModelSpec(basis=basis, dissipators=dissipators, frame=frame, harmonic=harmonic)

    ds = [derive(p, g) for p, g in zip(params, gammas)]
    G = (steering_generator_closed(ds[0], phi_rate, basis, 1)
         + steering_generator_closed(ds[1], phi_rate, basis, 2))

    def frame_map(t):
        return five_level_frame_unitary(scheds[0](t), scheds[1](t))

    def make_jump(ch):
        def jump(t):
            p = scheds[ch - 1](t)
            return _rotated_jump(jump_operator(basis, ch, p), frame_map(t), p.r)
        return jump

    harmonic = HarmonicForm(
        rates=np.array([d.gamma_eff for d in ds]),
        static=np.stack([rot_jump_at_phase(basis, ch, p.r, 0.0) for ch, p in zip((1, 2), params)]),
        modulated=np.zeros((2, basis.dim, basis.dim), dtype=np.complex128),
        phi0=params1.phi, phi_rate=phi_rate, generator=G,
    )
    return ModelSpec(
        basis=basis,
        dissipators=tuple(Dissipator(d.gamma_eff, make_jump(ch)) for ch, d in zip((1, 2), ds)),
        generator=lambda t: G,
        frame=frame,
        frame_map=frame_map,
        harmonic=harmonic,
    )
