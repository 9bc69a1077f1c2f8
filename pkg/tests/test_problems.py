import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impulse_mts.problems import (
    CoupledOscillator,
    LinearResonance,
    PhaseState,
    SingularityError,
    default_initial_state,
    make_problem,
    oscillator_energy,
    oscillator_forces,
    paper_initial_state,
    benchmark_oscillator,
)

from conftest import random_oscillator_states


def fd_gradient(fn, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def test_phase_state_is_read_only_and_checked():
    s = PhaseState(0, [1, 2], [3, 4])
    with pytest.raises(ValueError):
        s.x[0] = 5.0
    with pytest.raises(ValueError):
        PhaseState(0, [1, 2], [3])
    assert not PhaseState(0, [math.nan], [0]).finite


def test_initial_forces():
    f, g = oscillator_forces(paper_initial_state().x)
    # |d|^2 d = 1e-6, scaled by beta
    assert f == pytest.approx([1e-7, 0, -1e-7, 0], abs=1e-18)
    assert g == pytest.approx([0.01, 0, -0.01, 0], abs=1e-15)


def test_initial_energy():
    # 1/2 + 1/2 * 0.05^2 + 100 * 0.01^2 / 2 + 0.1 * 0.01^4 / 4
    expected = 0.5 + 0.00125 + 0.005 + 0.1 * 1e-8 / 4
    assert oscillator_energy(paper_initial_state()) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.5062500003, abs=1e-10)


def test_forces_are_negative_gradients():
    p = benchmark_oscillator()
    rng = np.random.default_rng(3)
    for s in random_oscillator_states(rng, 10):
        assert np.allclose(p.slow_force(s.x), -fd_gradient(p.slow_potential, s.x), atol=1e-7)
        assert np.allclose(p.fast_force(s.x), -fd_gradient(p.fast_potential, s.x), atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * math.pi), st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_oscillator_rotation_invariant(angle, coords):
    x = np.array(coords)
    if math.hypot(x[0], x[1]) < 1e-3:
        return
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    big = np.kron(np.eye(2), rot)
    p = benchmark_oscillator()
    assert p.slow_potential(big @ x) == pytest.approx(p.slow_potential(x), rel=1e-9, abs=1e-12)
    assert np.allclose(p.slow_force(big @ x), big @ p.slow_force(x), atol=1e-9)
    assert np.allclose(p.fast_force(big @ x), big @ p.fast_force(x), atol=1e-12)


def test_singular_slow_force():
    with pytest.raises(SingularityError):
        benchmark_oscillator().slow_force(np.array([0.0, 0.0, 1.0, 0.0]))


def test_momentum_balance_of_fast_force():
    rng = np.random.default_rng(4)
    g = benchmark_oscillator().fast_force(rng.normal(size=4))
    assert np.allclose(g[:2] + g[2:], 0)


def test_linear_problem_forces_and_period():
    p = LinearResonance()
    assert p.slow_force(np.array([2.0])) == pytest.approx(-2 * (math.pi / 5) ** 2)
    assert p.fast_force(np.array([2.0])) == pytest.approx(-2 * math.pi**2)
    # the fast flow alone has period 2
    assert 2 * math.pi / math.sqrt(-p.k_fast) == pytest.approx(2.0)


def test_linear_exact_solution_conserves_energy():
    p = LinearResonance()
    s0 = PhaseState(0.0, [0.3], [-1.2])
    for t in (0.1, 1.7, 12.3):
        assert p.energy(p.exact_solution(s0, t)) == pytest.approx(p.energy(s0), rel=1e-13)


def test_make_problem():
    assert isinstance(make_problem("oscillator"), CoupledOscillator)
    assert make_problem("oscillator", eps=0.2).eps == 0.2
    assert make_problem("linear").eps == 1.0
    with pytest.raises(ValueError, match="beta"):
        make_problem("linear", beta=0.3)
    with pytest.raises(ValueError):
        make_problem("pendulum")
    with pytest.raises(ValueError):
        CoupledOscillator(eps=0)


def test_default_initial_states():
    s = default_initial_state(benchmark_oscillator())
    assert list(s.x) == [1.0, 0.0, 1.01, 0.0]
    s = default_initial_state(LinearResonance())
    assert list(s.x) == [1.0] and list(s.v) == [0.0]


def test_reference_energy_drift_small(reference_run, oscillator):
    h = reference_run.energies(oscillator)
    assert np.abs(h - h[0]).max() < 1e-6
