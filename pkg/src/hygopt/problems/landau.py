"""Damped Landau oscillator feedback-control task.

Two-state nonlinear ODE with a stable unit-circle limit cycle:

    da1/dt = (1 - a1^2 - a2^2) a1 - a2
    da2/dt = (1 - a1^2 - a2^2) a2 + a1 + b(a1, a2)

The cost J = J_a + gamma * J_b combines the time-mean squared distance to
the origin with the time-mean control energy, integrated by fixed-step RK4
and trapezoidal quadrature, averaged over a set of initial conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..lgp import LgpProgram, NUMBA_AVAILABLE, exec_core_jit

if NUMBA_AVAILABLE:
    from numba import njit
else:                                     # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

TWO_PI = 2.0 * math.pi
DIVERGED_COST = 1e30


@dataclass
class LandauConfig:
    """Integration and cost settings for the oscillator task."""

    gamma: float = 0.01                 # actuation-energy weight
    t_end: float = 20.0 * TWO_PI        # 20 fundamental periods
    dt: float = TWO_PI / 200.0
    b_max: float = 25.0                 # actuation clamp
    initial_conditions: tuple = ((1.0, 0.0), (-1.0, 0.0),
                                 (0.0, 1.0), (0.0, -1.0))

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "t_end": self.t_end, "dt": self.dt,
                "b_max": self.b_max,
                "initial_conditions": [list(ic) for ic in
                                       self.initial_conditions]}

    @classmethod
    def from_dict(cls, d: dict) -> "LandauConfig":
        d = dict(d)
        if "initial_conditions" in d:
            d["initial_conditions"] = tuple(tuple(ic) for ic in
                                            d["initial_conditions"])
        return cls(**d)


def simulate_landau(control, config: LandauConfig, ic=(1.0, 0.0)):
    """Integrate one trajectory under an (a1, a2) -> b feedback law.

    Returns (J_a, J_b, trajectory) where trajectory is an (n+1, 3) array of
    (a1, a2, b) at the integration grid points.  A diverged (non-finite)
    state yields J_a = DIVERGED_COST.
    """
    n = config.n_steps
    dt = config.dt
    b_max = config.b_max
    traj = np.empty((n + 1, 3))
    a1, a2 = float(ic[0]), float(ic[1])

    def clamped(b):
        return min(max(float(b), -b_max), b_max)

    def deriv(a1, a2):
        b = clamped(control(a1, a2))
        r2 = a1 * a1 + a2 * a2
        return (1.0 - r2) * a1 - a2, (1.0 - r2) * a2 + a1 + b, b

    sum_a = 0.0
    sum_b = 0.0
    b0 = clamped(control(a1, a2))
    traj[0] = (a1, a2, b0)
    ya_prev = a1 * a1 + a2 * a2
    yb_prev = b0 * b0
    for k in range(n):
        k1a, k1b, _ = deriv(a1, a2)
        k2a, k2b, _ = deriv(a1 + 0.5 * dt * k1a, a2 + 0.5 * dt * k1b)
        k3a, k3b, _ = deriv(a1 + 0.5 * dt * k2a, a2 + 0.5 * dt * k2b)
        k4a, k4b, _ = deriv(a1 + dt * k3a, a2 + dt * k3b)
        a1 += dt * (k1a + 2 * k2a + 2 * k3a + k4a) / 6.0
        a2 += dt * (k1b + 2 * k2b + 2 * k3b + k4b) / 6.0
        if not (math.isfinite(a1) and math.isfinite(a2)):
            traj[k + 1:] = np.nan
            return DIVERGED_COST, DIVERGED_COST, traj
        b = clamped(control(a1, a2))
        traj[k + 1] = (a1, a2, b)
        ya = a1 * a1 + a2 * a2
        yb = b * b
        sum_a += 0.5 * (ya_prev + ya) * dt
        sum_b += 0.5 * (yb_prev + yb) * dt
        ya_prev, yb_prev = ya, yb
    t_total = n * dt
    return sum_a / t_total, sum_b / t_total, traj


def _sim_program(instructions, reg_template, in_off, n, dt, a1, a2, b_max):
    """RK4 trajectory under a program control law; returns (J_a, J_b, ok)."""
    regs = np.empty_like(reg_template)

    sum_a = 0.0
    sum_b = 0.0

    # control law evaluation inlined for speed
    def ctrl(x1, x2):
        for i in range(reg_template.shape[0]):
            regs[i] = reg_template[i]
        regs[in_off] = x1
        regs[in_off + 1] = x2
        exec_core_jit(instructions, regs)
        b = regs[0]
        if b > b_max:
            b = b_max
        elif b < -b_max:
            b = -b_max
        return b

    b0 = ctrl(a1, a2)
    ya_prev = a1 * a1 + a2 * a2
    yb_prev = b0 * b0
    for k in range(n):
        r2 = a1 * a1 + a2 * a2
        k1a = (1.0 - r2) * a1 - a2
        k1b = (1.0 - r2) * a2 + a1 + ctrl(a1, a2)
        x1 = a1 + 0.5 * dt * k1a
        x2 = a2 + 0.5 * dt * k1b
        r2 = x1 * x1 + x2 * x2
        k2a = (1.0 - r2) * x1 - x2
        k2b = (1.0 - r2) * x2 + x1 + ctrl(x1, x2)
        x1 = a1 + 0.5 * dt * k2a
        x2 = a2 + 0.5 * dt * k2b
        r2 = x1 * x1 + x2 * x2
        k3a = (1.0 - r2) * x1 - x2
        k3b = (1.0 - r2) * x2 + x1 + ctrl(x1, x2)
        x1 = a1 + dt * k3a
        x2 = a2 + dt * k3b
        r2 = x1 * x1 + x2 * x2
        k4a = (1.0 - r2) * x1 - x2
        k4b = (1.0 - r2) * x2 + x1 + ctrl(x1, x2)
        a1 = a1 + dt * (k1a + 2 * k2a + 2 * k3a + k4a) / 6.0
        a2 = a2 + dt * (k1b + 2 * k2b + 2 * k3b + k4b) / 6.0
        if not (math.isfinite(a1) and math.isfinite(a2)):
            return DIVERGED_COST, DIVERGED_COST, False
        b = ctrl(a1, a2)
        ya = a1 * a1 + a2 * a2
        yb = b * b
        sum_a += 0.5 * (ya_prev + ya) * dt
        sum_b += 0.5 * (yb_prev + yb) * dt
        ya_prev = ya
        yb_prev = yb
    t_total = n * dt
    return sum_a / t_total, sum_b / t_total, True


_sim_program_jit = njit(cache=True)(_sim_program) if NUMBA_AVAILABLE \
    else _sim_program


def landau_components(program: LgpProgram,
                      config: LandauConfig | None = None):
    """(mean J_a, mean J_b) for a program control law over all ICs."""
    config = config if config is not None else LandauConfig()
    lay = program.layout
    if lay.n_sensor < 2:
        raise ValueError("control program needs two sensor registers")
    template = program.initial_registers()
    ja_total = 0.0
    jb_total = 0.0
    for ic in config.initial_conditions:
        ja, jb, ok = _sim_program_jit(
            program.instructions, template, lay.input_offset,
            config.n_steps, config.dt, float(ic[0]), float(ic[1]),
            config.b_max)
        if not ok:
            return DIVERGED_COST, DIVERGED_COST
        ja_total += ja
        jb_total += jb
    k = len(config.initial_conditions)
    return ja_total / k, jb_total / k


def landau_cost(program: LgpProgram,
                config: LandauConfig | None = None) -> float:
    """Scalarized cost J = J_a + gamma * J_b averaged over the IC set."""
    config = config if config is not None else LandauConfig()
    ja, jb = landau_components(program, config)
    if ja >= DIVERGED_COST:
        return DIVERGED_COST
    return ja + config.gamma * jb


class LandauCostEvaluator:
    """Picklable program -> cost callable (usable in worker pools)."""

    def __init__(self, config: LandauConfig | None = None):
        self.config = config if config is not None else LandauConfig()

    def __call__(self, program: LgpProgram) -> float:
        return landau_cost(program, self.config)


def default_landau_layout():
    """Register bank used for the oscillator control task: one output, one
    memory register, two sensors, two constants."""
    from ..lgp import RegisterLayout
    return RegisterLayout(n_out=1, n_mem=1, n_sensor=2, n_time=0, n_const=2)
