"""Test problems of the form x' = v, v' = f(x) + eps**-2 g(x) with unit masses."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


class SingularityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PhaseState:
    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, ndmin=1)
        v = np.array(self.v, dtype=float, ndmin=1)
        if x.shape != v.shape:
            raise ValueError(f"x has shape {x.shape} but v has shape {v.shape}")
        x.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v)))


class Problem(ABC):
    """A split second-order system.

    ``fast_force`` returns g(x) *without* the eps**-2 factor; integrators apply it.
    Potentials satisfy f = -grad W and g = -grad V.
    """

    eps: float
    dim: int

    @abstractmethod
    def slow_force(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def fast_force(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def slow_potential(self, x: np.ndarray) -> float: ...

    @abstractmethod
    def fast_potential(self, x: np.ndarray) -> float: ...

    @property
    def fast_scale(self) -> float:
        return self.eps**-2

    def forces(self, x):
        return self.slow_force(x), self.fast_force(x)

    def total_force(self, x: np.ndarray) -> np.ndarray:
        return self.slow_force(x) + self.fast_scale * self.fast_force(x)

    def slow_hamiltonian(self, state: PhaseState) -> float:
        """H2 = W(x)."""
        return self.slow_potential(state.x)

    def fast_hamiltonian(self, state: PhaseState) -> float:
        """H1 = eps**-2 V(x) + |p|^2 / 2."""
        return self.fast_scale * self.fast_potential(state.x) + 0.5 * float(state.v @ state.v)

    def energy(self, state: PhaseState) -> float:
        return self.fast_hamiltonian(state) + self.slow_hamiltonian(state)


class CoupledOscillator(Problem):
    """Planar pair (q, theta) joined by a stiff spring; q sits in a ring potential.

    Layout x = (q1, q2, theta1, theta2).  Potentials:

        V = |theta - q|^2 / 2                       (fast, scaled by eps**-2)
        W = beta |theta - q|^4 / 4 + (|q| - 1)^2 / 2 (slow)
    """

    dim = 4

    def __init__(self, eps: float = 0.1, beta: float = 0.1):
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.eps = float(eps)
        self.beta = float(beta)

    def __repr__(self):
        return f"CoupledOscillator(eps={self.eps}, beta={self.beta})"

    @staticmethod
    def _split(x):
        return x[:2], x[2:]

    def slow_force(self, x):
        q, th = self._split(x)
        r = math.hypot(q[0], q[1])
        if r == 0.0:
            raise SingularityError("slow force is singular at |q| = 0")
        d = th - q
        coupling = self.beta * float(d @ d) * d
        out = np.empty(4)
        out[:2] = (1.0 - r) / r * q + coupling
        out[2:] = -coupling
        return out

    def fast_force(self, x):
        d = x[2:] - x[:2]
        return np.concatenate((d, -d))

    def slow_potential(self, x):
        q, th = self._split(x)
        d = th - q
        r = math.hypot(q[0], q[1])
        return 0.25 * self.beta * float(d @ d) ** 2 + 0.5 * (r - 1.0) ** 2

    def fast_potential(self, x):
        d = x[2:] - x[:2]
        return 0.5 * float(d @ d)


def paper_initial_state() -> PhaseState:
    """q(0) = (1, 0), theta(0) = (1.01, 0), q'(0) = (0, 1), theta'(0) = (0, 0.05)."""
    return PhaseState(0.0, [1.0, 0.0, 1.01, 0.0], [0.0, 1.0, 0.0, 0.05])


def benchmark_oscillator() -> CoupledOscillator:
    return CoupledOscillator(eps=0.1, beta=0.1)


class LinearResonance(Problem):
    """Scalar linear model with forces f = k_slow x and g = k_fast x (eps = 1)."""

    dim = 1

    def __init__(self, k_slow: float = -(math.pi / 5) ** 2, k_fast: float = -math.pi**2,
                 eps: float = 1.0):
        self.k_slow = float(k_slow)
        self.k_fast = float(k_fast)
        self.eps = float(eps)

    def __repr__(self):
        return f"LinearResonance(k_slow={self.k_slow!r}, k_fast={self.k_fast!r}, eps={self.eps})"

    def slow_force(self, x):
        return self.k_slow * np.asarray(x, dtype=float)

    def fast_force(self, x):
        return self.k_fast * np.asarray(x, dtype=float)

    def slow_potential(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * self.k_slow * float(x @ x)

    def fast_potential(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * self.k_fast * float(x @ x)

    @property
    def omega(self) -> float:
        """Angular frequency of the full linear system."""
        return math.sqrt(-(self.k_slow + self.fast_scale * self.k_fast))

    def exact_solution(self, state: PhaseState, t: float) -> PhaseState:
        w = self.omega
        tau = t - state.t
        c, s = math.cos(w * tau), math.sin(w * tau)
        return PhaseState(t, c * state.x + s / w * state.v, -w * s * state.x + c * state.v)


def linear_forces(x, problem: LinearResonance | None = None):
    p = problem or LinearResonance()
    return p.slow_force(x), p.fast_force(x)


def oscillator_forces(x, problem: CoupledOscillator | None = None):
    p = problem or benchmark_oscillator()
    return p.slow_force(np.asarray(x, dtype=float)), p.fast_force(np.asarray(x, dtype=float))


def oscillator_energy(state: PhaseState, problem: CoupledOscillator | None = None) -> float:
    return (problem or benchmark_oscillator()).energy(state)


PROBLEMS = {"oscillator": CoupledOscillator, "linear": LinearResonance}


def make_problem(name: str, eps: float | None = None, beta: float | None = None) -> Problem:
    if name == "oscillator":
        return CoupledOscillator(eps=0.1 if eps is None else eps, beta=0.1 if beta is None else beta)
    if name == "linear":
        if beta is not None:
            raise ValueError("--beta applies to the oscillator only")
        return LinearResonance(eps=1.0 if eps is None else eps)
    raise ValueError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")


def default_initial_state(problem: Problem) -> PhaseState:
    if isinstance(problem, CoupledOscillator):
        return paper_initial_state()
    return PhaseState(0.0, np.ones(problem.dim), np.zeros(problem.dim))
