"""Splitting integrators: slow-force kicks interleaved with Verlet sub-stepping of the fast flow."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .problems import PhaseState, Problem
from .schemes import SplittingScheme, require_valid

FORWARD = "forward"
REVERSE = "reverse"


class DivergenceError(FloatingPointError):
    def __init__(self, step: int):
        super().__init__(f"diverged at step {step}")
        self.step = step


@dataclass(frozen=True)
class StepConfig:
    """Outer step ``dt``, target inner Verlet step ``inner_dt`` and execution order.

    ``order="forward"`` runs the pairs i = 1..k, kick before flow.
    ``order="reverse"`` runs the mirrored sequence (the adjoint method).
    """

    dt: float
    inner_dt: float | None = None
    order: str = FORWARD

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.inner_dt is None:
            object.__setattr__(self, "inner_dt", self.dt / 24)
        if not 0 < self.inner_dt <= self.dt:
            raise ValueError("inner_dt must lie in (0, dt]")
        if self.order not in (FORWARD, REVERSE):
            raise ValueError(f"order must be {FORWARD!r} or {REVERSE!r}")


def substeps(tau: float, inner_dt: float) -> int:
    return max(1, round(abs(tau) / inner_dt))


def _kick(x, v, problem, tau):
    return v + tau * problem.slow_force(x)


def _verlet(x, v, force, h, m):
    """m velocity-Verlet steps of size h; force evaluations are shared between substeps."""
    a = force(x)
    for _ in range(m):
        v = v + 0.5 * h * a
        x = x + h * v
        a = force(x)
        v = v + 0.5 * h * a
    return x, v


def _fast_flow(x, v, problem, tau, inner_dt):
    m = substeps(tau, inner_dt)
    scale = problem.fast_scale
    return _verlet(x, v, lambda y: scale * problem.fast_force(y), tau / m, m)


def kick(state: PhaseState, problem: Problem, tau: float) -> PhaseState:
    """Exact flow of the slow force for duration tau: v += tau f(x)."""
    return PhaseState(state.t, state.x, _kick(state.x, state.v, problem, tau))


def fast_flow(state: PhaseState, problem: Problem, tau: float, inner_dt: float) -> PhaseState:
    """Velocity Verlet on x' = v, v' = eps**-2 g(x) over duration tau."""
    if tau == 0:
        raise ValueError("fast_flow needs a nonzero duration")
    x, v = _fast_flow(state.x, state.v, problem, tau, inner_dt)
    return PhaseState(state.t + tau, x, v)


def _operations(scheme: SplittingScheme, config: StepConfig):
    ops = []
    for ci, di in zip(scheme.c, scheme.d):
        if ci != 0:
            ops.append(("kick", float(ci) * config.dt))
        if di != 0:
            ops.append(("flow", float(di) * config.dt))
    if config.order == REVERSE:
        ops.reverse()
    return tuple(ops)


def _step_arrays(x, v, problem, ops, inner_dt):
    for kind, tau in ops:
        if kind == "kick":
            v = _kick(x, v, problem, tau)
        else:
            x, v = _fast_flow(x, v, problem, tau, inner_dt)
    return x, v


def step(state: PhaseState, problem: Problem, scheme: SplittingScheme,
         config: StepConfig) -> PhaseState:
    """One outer step of the splitting method."""
    require_valid(scheme)
    x, v = _step_arrays(state.x, state.v, problem, _operations(scheme, config), config.inner_dt)
    return PhaseState(state.t + config.dt, x, v)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    observed: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> PhaseState:
        return PhaseState(self.t[i], self.x[i], self.v[i])

    @property
    def final(self) -> PhaseState:
        return self.state(-1)

    def energies(self, problem: Problem) -> np.ndarray:
        return np.array([problem.energy(self.state(i)) for i in range(len(self))])


Observer = Callable[[PhaseState], float]


def _run(state, n_steps, advance, dt, sample_every, observers):
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    observers = dict(observers or {})
    x, v = state.x, state.v
    ts, xs, vs = [state.t], [x], [v]
    obs = {name: [fn(state)] for name, fn in observers.items()}
    for i in range(1, n_steps + 1):
        x, v = advance(x, v)
        if i % sample_every == 0 or i == n_steps:
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
                raise DivergenceError(i)
            t = state.t + i * dt
            ts.append(t)
            xs.append(x)
            vs.append(v)
            if observers:
                s = PhaseState(t, x, v)
                for name, fn in observers.items():
                    obs[name].append(fn(s))
    return Trajectory(np.array(ts), np.array(xs), np.array(vs),
                      {k: np.array(val) for k, val in obs.items()})


def integrate(state: PhaseState, problem: Problem, scheme: SplittingScheme, config: StepConfig,
              n_steps: int, observers: Mapping[str, Observer] | None = None,
              sample_every: int = 1) -> Trajectory:
    """Repeated outer steps, sampled every ``sample_every`` steps (and at the end)."""
    require_valid(scheme)
    ops = _operations(scheme, config)

    def advance(x, v):
        return _step_arrays(x, v, problem, ops, config.inner_dt)

    return _run(state, n_steps, advance, config.dt, sample_every, observers)


def reference_verlet(state: PhaseState, problem: Problem, dt_ref: float, n_steps: int,
                     sample_every: int = 1,
                     observers: Mapping[str, Observer] | None = None) -> Trajectory:
    """Velocity Verlet on the full force f + eps**-2 g."""
    if not dt_ref > 0:
        raise ValueError("dt_ref must be positive")
    force = problem.total_force
    h = dt_ref
    cache = {}

    def advance(x, v):
        a = cache.get("a")
        if a is None:
            a = force(x)
        v = v + 0.5 * h * a
        x = x + h * v
        a = force(x)
        cache["a"] = a
        return x, v + 0.5 * h * a

    return _run(state, n_steps, advance, dt_ref, sample_every, observers)
