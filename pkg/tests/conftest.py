import numpy as np
import pytest

from impulse_mts.integrators import reference_verlet
from impulse_mts.problems import PhaseState, Problem, paper_initial_state, benchmark_oscillator

BENCH_DT = 0.12
BENCH_INNER_DT = 0.01
BENCH_T = 50.0
BENCH_STEPS = round(BENCH_T / BENCH_DT)


class FreeParticle(Problem):
    """No forces at all; every flow is a pure drift."""

    def __init__(self, dim=3, eps=0.5):
        self.dim = dim
        self.eps = eps

    def slow_force(self, x):
        return np.zeros_like(x)

    def fast_force(self, x):
        return np.zeros_like(x)

    def slow_potential(self, x):
        return 0.0

    def fast_potential(self, x):
        return 0.0


@pytest.fixture
def free_particle():
    return FreeParticle()


@pytest.fixture(scope="session")
def oscillator():
    return benchmark_oscillator()


@pytest.fixture(scope="session")
def reference_run(oscillator):
    """Full-force Verlet at dt_ref = 1e-4, sampled every outer step of 0.12."""
    per = round(BENCH_DT / 1e-4)
    return reference_verlet(paper_initial_state(), oscillator, 1e-4, BENCH_STEPS * per,
                            sample_every=per)


def random_oscillator_states(rng, n):
    states = []
    while len(states) < n:
        x = rng.normal(scale=0.5, size=4) + np.array([1.0, 0.0, 1.0, 0.0])
        if np.hypot(x[0], x[1]) > 0.2:
            states.append(PhaseState(0.0, x, rng.normal(size=4)))
    return states


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"criterion {number:>2} {status}  {title}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
