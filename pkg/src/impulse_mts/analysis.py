"""Diagnostics: energy statistics, shadow Hamiltonian, resonance sweep and convergence order."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .integrators import FORWARD, REVERSE, StepConfig, Trajectory, integrate, reference_verlet, substeps
from .problems import LinearResonance, PhaseState, Problem
from .schemes import SplittingScheme, require_valid

SHADOW_METHODS = ("I", "II")


@dataclass(frozen=True)
class EnergyStats:
    mean: float
    std: float
    max_drift: float


def energy_stats(trajectory: Trajectory | Sequence[float], problem: Problem | None = None) -> EnergyStats:
    """Mean, standard deviation and max |H(t) - H(0)| over outer-step samples."""
    if isinstance(trajectory, Trajectory):
        if problem is None:
            raise ValueError("a problem is needed to evaluate energies")
        h = trajectory.energies(problem)
    else:
        h = np.asarray(trajectory, dtype=float)
    if h.size < 2:
        raise ValueError("energy statistics need at least two samples")
    return EnergyStats(float(h.mean()), float(h.std()), float(np.abs(h - h[0]).max()))


# -- Poisson brackets -------------------------------------------------------
#
# H2 = W(x) (slow), H1 = eps**-2 V(x) + |p|^2 / 2 (fast), unit masses so p = v.
# Single brackets use {F, G} = F_p . G_q - F_q . G_p, which gives
# {H2, H1} = -p . grad W.  Double brackets do not depend on that sign choice.


def _grad_w(problem: Problem, x):
    return -problem.slow_force(x)


def _grad_v(problem: Problem, x):
    return -problem.fast_force(x)


def hessian_quadratic_form(problem: Problem, x, p) -> float:
    """p^T (Hess W) p by a central difference of grad W along p."""
    p = np.asarray(p, dtype=float)
    norm = float(np.linalg.norm(p))
    if norm == 0.0:
        return 0.0
    u = p / norm
    h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
    dg = (_grad_w(problem, x + h * u) - _grad_w(problem, x - h * u)) / (2 * h)
    return norm * float(dg @ p)


def bracket_values(problem: Problem, state: PhaseState) -> dict[str, float]:
    """Closed-form bracket values at ``state``.

    Keys: ``"{H2,H1}"``, ``"{{H2,H1},H1}"`` and ``"{H2,{H2,H1}}"``; the last equals
    ``{{H1,H2},H2}`` by antisymmetry.
    """
    x, p = state.x, state.v
    gw = _grad_w(problem, x)
    gv = _grad_v(problem, x)
    return {
        "{H2,H1}": -float(p @ gw),
        "{{H2,H1},H1}": hessian_quadratic_form(problem, x, p) - problem.fast_scale * float(gw @ gv),
        "{H2,{H2,H1}}": float(gw @ gw),
    }


def shadow_hamiltonian(problem: Problem, state: PhaseState, dt: float, method: str = "I") -> float:
    """Modified energy conserved to higher order by impulse I or impulse II."""
    h = problem.energy(state)
    if dt == 0:
        return h
    b = bracket_values(problem, state)
    if method == "I":
        return h + dt**2 / 12 * b["{{H2,H1},H1}"] - dt**2 / 24 * b["{H2,{H2,H1}}"]
    if method == "II":
        return h + dt**2 / 48 * b["{H2,{H2,H1}}"]
    raise ValueError("shadow form available for impulse I and II only")


def _fd_grad(fn, z, h):
    g = np.empty_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (fn(z + e) - fn(z - e)) / (2 * h)
    return g


def poisson_bracket_fd(F, G, z: np.ndarray, h: float = 1e-4) -> float:
    """{F, G} = F_p . G_q - F_q . G_p at canonical point z = (q, p), by central differences."""
    n = z.size // 2
    gf = _fd_grad(F, z, h)
    gg = _fd_grad(G, z, h)
    return float(gf[n:] @ gg[:n] - gf[:n] @ gg[n:])


@dataclass
class BracketReport:
    max_rel_error: dict[str, float]
    rtol: float
    n_states: int

    @property
    def ok(self) -> bool:
        return all(err < self.rtol for err in self.max_rel_error.values())


def bracket_sign_check(problem: Problem, states: Iterable[PhaseState], rtol: float = 1e-5,
                       h: float = 1e-4) -> BracketReport:
    """Compare the closed-form bracket values with finite-difference Poisson brackets.

    Errors are relative to the sum of magnitudes of the terms making up each value.
    Also checks antisymmetry and {H2,{H2,H1}} = {{H1,H2},H2}.
    """
    n = problem.dim

    def h1(z):
        return problem.fast_scale * problem.fast_potential(z[:n]) + 0.5 * float(z[n:] @ z[n:])

    def h2(z):
        return problem.slow_potential(z[:n])

    def b21(z):
        return poisson_bracket_fd(h2, h1, z, h)

    def b12(z):
        return poisson_bracket_fd(h1, h2, z, h)

    errors = {k: 0.0 for k in ("{H2,H1}", "{{H2,H1},H1}", "{H2,{H2,H1}}", "{{H1,H2},H2}",
                               "antisymmetry")}
    count = 0
    for state in states:
        count += 1
        z = np.concatenate((state.x, state.v))
        x, p = state.x, state.v
        gw, gv = _grad_w(problem, x), _grad_v(problem, x)
        hess = hessian_quadratic_form(problem, x, p)
        cross = problem.fast_scale * float(gw @ gv)
        exact = bracket_values(problem, state)
        scales = {
            "{H2,H1}": float(np.abs(p) @ np.abs(gw)),
            "{{H2,H1},H1}": abs(hess) + abs(cross),
            "{H2,{H2,H1}}": float(gw @ gw),
        }
        fd = {
            "{H2,H1}": b21(z),
            "{{H2,H1},H1}": poisson_bracket_fd(b21, h1, z, h),
            "{H2,{H2,H1}}": poisson_bracket_fd(h2, b21, z, h),
            "{{H1,H2},H2}": poisson_bracket_fd(b12, h2, z, h),
        }
        for key, value in fd.items():
            ref_key = "{H2,{H2,H1}}" if key == "{{H1,H2},H2}" else key
            scale = scales[ref_key]
            err = abs(value - exact[ref_key]) / scale if scale > 0 else abs(value - exact[ref_key])
            errors[key] = max(errors[key], err)
        anti = abs(b12(z) + fd["{H2,H1}"]) / max(scales["{H2,H1}"], 1e-300)
        errors["antisymmetry"] = max(errors["antisymmetry"], anti)
    return BracketReport(errors, rtol, count)


# -- linear stability -------------------------------------------------------


def _kick_matrix(tau, k):
    return np.array([[1.0, 0.0], [tau * k, 1.0]])


def _verlet_matrix(tau, k, inner_dt):
    m = substeps(tau, inner_dt)
    h = tau / m
    half = _kick_matrix(0.5 * h, k)
    sub = half @ np.array([[1.0, h], [0.0, 1.0]]) @ half
    return np.linalg.matrix_power(sub, m)


def propagation_matrix(scheme: SplittingScheme, dt: float, inner_dt: float | None = None,
                       k_f: float = -(math.pi / 5) ** 2, k_g: float = -math.pi**2,
                       eps: float = 1.0, order: str = FORWARD) -> np.ndarray:
    """One-step map of (x, v) for the linear model f = k_f x, g = k_g x.

    Factors are composed in the same order the integrator executes them;
    ``inner_dt=None`` means dt / 24.
    """
    require_valid(scheme)
    if inner_dt is None:
        inner_dt = dt / 24
    k_fast = k_g / eps**2
    ops = []
    for ci, di in zip(scheme.c, scheme.d):
        if ci != 0:
            ops.append(_kick_matrix(float(ci) * dt, k_f))
        if di != 0:
            ops.append(_verlet_matrix(float(di) * dt, k_fast, inner_dt))
    if order == REVERSE:
        ops.reverse()
    out = np.eye(2)
    for op in ops:
        out = op @ out
    return out


def spectral_radius(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


@dataclass
class StabilityReport:
    dts: np.ndarray
    rho: dict[str, np.ndarray]
    trace: dict[str, np.ndarray]
    det: dict[str, np.ndarray]

    def to_csv(self) -> str:
        names = list(self.rho)
        lines = ["dt," + ",".join(f"rho_{n}" for n in names)]
        for i, dt in enumerate(self.dts):
            lines.append(f"{dt:.6g}," + ",".join(f"{self.rho[n][i]:.17g}" for n in names))
        return "\n".join(lines) + "\n"


def stability_sweep(schemes: Sequence[SplittingScheme], dts, inner_dt: float | None = None,
                    k_f: float = -(math.pi / 5) ** 2, k_g: float = -math.pi**2, eps: float = 1.0,
                    order: str = FORWARD) -> StabilityReport:
    dts = np.asarray(dts, dtype=float)
    if dts.size == 0:
        raise ValueError("empty grid")
    if np.any(dts <= 0):
        raise ValueError("grid values must be positive")
    rho, trace, det = {}, {}, {}
    for scheme in schemes:
        name = str(scheme)
        mats = [propagation_matrix(scheme, dt, inner_dt, k_f, k_g, eps, order) for dt in dts]
        rho[name] = np.array([spectral_radius(m) for m in mats])
        trace[name] = np.array([np.trace(m) for m in mats])
        det[name] = np.array([np.linalg.det(m) for m in mats])
    return StabilityReport(dts, rho, trace, det)


# -- convergence ------------------------------------------------------------

COORDINATE_ALIASES = {"q1": ("x", 0), "q2": ("x", 1), "p1": ("v", 0), "p2": ("v", 1)}


def parse_coordinate(name: str) -> tuple[str, int]:
    """``q1``/``p1`` style names or ``x<i>``/``v<i>`` with zero-based index."""
    if name in COORDINATE_ALIASES:
        return COORDINATE_ALIASES[name]
    if len(name) > 1 and name[0] in "xv" and name[1:].isdigit():
        return name[0], int(name[1:])
    raise ValueError(f"unknown coordinate {name!r}")


def _coord(state: PhaseState, coordinate: str) -> float:
    kind, idx = parse_coordinate(coordinate)
    return float((state.x if kind == "x" else state.v)[idx])


@dataclass
class ConvergenceReport:
    dts: np.ndarray
    errors: dict[str, np.ndarray]
    slopes: dict[str, float]
    coordinate: str
    reference: str
    notes: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        names = list(self.errors)
        lines = [f"# {note}" for note in self.notes]
        lines.append("dt," + ",".join(f"err_{n}" for n in names))
        for i, dt in enumerate(self.dts):
            lines.append(f"{dt:.6g}," + ",".join(f"{self.errors[n][i]:.17g}" for n in names))
        lines.append("# slopes: " + ", ".join(f"{n}={self.slopes[n]:.4f}" for n in names))
        return "\n".join(lines) + "\n"


def fit_slope(dts, errors, scale: float = math.inf, saturation: float = 0.1) -> float:
    """Least-squares slope of log(error) against log(dt), skipping saturated points."""
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = (errors > 0) & (errors < saturation * scale)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(dts[keep]), np.log(errors[keep]), 1)[0])


def _end_times(dts, t_final):
    steps = [max(1, round(t_final / dt)) for dt in dts]
    return steps, [n * dt for n, dt in zip(steps, dts)]


def _reference_states(problem, state0, times, dt_ref):
    """Reference Verlet states at each requested time (integrating once, in order)."""
    out = {}
    current = state0
    for t in sorted(set(times)):
        n = round((t - current.t) / dt_ref)
        if abs(current.t + n * dt_ref - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"end time {t} is not a multiple of the reference step {dt_ref}")
        if n > 0:
            current = reference_verlet(current, problem, dt_ref, n, sample_every=n).final
        out[t] = current
    return out


def convergence_study(problem: Problem, schemes: Sequence[SplittingScheme], dts,
                      inner_dt: float | None = None, t_final: float = 50.0,
                      coordinate: str = "q1", state0: PhaseState | None = None,
                      dt_ref: float | None = None, reference: str = "auto",
                      order: str = FORWARD) -> ConvergenceReport:
    """Final-time error in one coordinate against a fine reference, per scheme and dt.

    ``reference`` is ``"verlet"``, ``"analytic"`` (linear model only) or ``"auto"``.
    ``inner_dt=None`` uses dt / 24 for each grid point.
    """
    from .problems import default_initial_state

    dts = np.asarray(sorted(dts, reverse=True), dtype=float)
    if dts.size < 3:
        raise ValueError("grid too coarse for a fit (need at least 3 points)")
    state0 = state0 or default_initial_state(problem)
    notes = []
    if reference == "auto":
        reference = "analytic" if isinstance(problem, LinearResonance) else "verlet"
    steps, ends = _end_times(dts, t_final)
    if reference == "analytic":
        if not isinstance(problem, LinearResonance):
            raise ValueError("analytic reference is available for the linear model only")
        refs = {t: problem.exact_solution(state0, state0.t + t) for t in ends}
        notes.append("reference: analytic solution")
    elif reference == "verlet":
        if dt_ref is None:
            dt_ref = float(dts.min()) / 100
            notes.append(f"reference: velocity Verlet, dt_ref defaulted to min(dt)/100 = {dt_ref:.6g}")
        else:
            if dt_ref > dts.min() / 100 * (1 + 1e-12):
                raise ValueError("dt_ref must not exceed min(dt)/100")
            notes.append(f"reference: velocity Verlet, dt_ref = {dt_ref:.6g}")
        shifted = _reference_states(problem, state0, [state0.t + t for t in ends], dt_ref)
        refs = {t: shifted[state0.t + t] for t in ends}
    else:
        raise ValueError(f"unknown reference {reference!r}")
    notes.append(f"coordinate {coordinate}, t_final ~ {t_final}")

    errors, slopes = {}, {}
    for scheme in schemes:
        errs = []
        for dt, n, t in zip(dts, steps, ends):
            cfg = StepConfig(float(dt), inner_dt if inner_dt is not None else dt / 24, order)
            final = integrate(state0, problem, scheme, cfg, n, sample_every=n).final
            errs.append(abs(_coord(final, coordinate) - _coord(refs[t], coordinate)))
        errs = np.array(errs)
        ref_final = refs[ends[-1]]
        scale = max(abs(_coord(ref_final, coordinate)),
                    float(np.max(np.abs(np.concatenate((ref_final.x, ref_final.v))))))
        errors[str(scheme)] = errs
        slopes[str(scheme)] = fit_slope(dts, errs, scale)
    return ConvergenceReport(dts, errors, slopes, coordinate, reference, notes)
