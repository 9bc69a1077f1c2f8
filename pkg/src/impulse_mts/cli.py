"""Command-line front end: ``impulse-mts {expand,integrate,stability,converge,shadow}``."""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import analysis, operator_algebra as oa
from .integrators import FORWARD, REVERSE, DivergenceError, StepConfig, integrate
from .problems import CoupledOscillator, default_initial_state, make_problem
from .schemes import SchemeError, catalog, impulse_I, impulse_II, parse_scheme, validate

D_ORDERS = {"D21": 0, "D31": -2, "D32": 0, "D41": -4, "D42": -2, "D43": 0}


class CliError(Exception):
    pass


@dataclass
class RunSpec:
    command: str
    scheme: str | None = None
    schemes: list[str] = field(default_factory=list)
    problem: str = "oscillator"
    dt: float | None = None
    ddt: float | None = None
    tfinal: float | None = None
    eps: float | None = None
    beta: float | None = None
    order: int = oa.DEFAULT_ORDER
    out: str | None = None

    def validate(self):
        for name in ("dt", "ddt", "tfinal", "eps"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise CliError(f"--{name} must be positive and finite, got {value}")
        if self.beta is not None and not math.isfinite(self.beta):
            raise CliError("--beta must be finite")
        if not 0 <= self.order <= oa.MAX_ORDER:
            raise CliError(f"--order must lie in [0, {oa.MAX_ORDER}]")


def _fmt(c) -> str:
    if isinstance(c, (Fraction, int)):
        return str(c)
    return f"{c:.17g}"


def _scheme(text):
    try:
        scheme = parse_scheme(text)
    except SchemeError as exc:
        raise CliError(str(exc)) from None
    problems = validate(scheme)
    if problems:
        raise CliError(f"inconsistent scheme {text!r}: " + "; ".join(problems))
    return scheme


def expand_report(scheme, order: int) -> str:
    """Remainder terms grouped by power of dt, with D-basis projections and epsilon orders."""
    r = oa.remainder(scheme, order)
    tol = 0.0 if r.exact else 1e-12
    out = [f"# remainder R - I for {scheme} ({scheme.to_text()}), truncation order {order}",
           "# columns: coeff  epsilon_exp  word   (A = slow kick, B = fast flow)"]
    for n in range(1, order + 1):
        part = r.part(n)
        out.append(f"## dt^{n}")
        text = part.to_text()
        out.append(text if text else "(no terms)")
        if part.is_zero(tol):
            out.append("eps-order: vanishes")
        else:
            e = oa.epsilon_order(part, tol)
            out.append("eps-order: vanishes" if e is None else f"eps-order: {e}")
        if n in oa.D_BY_LENGTH:
            coeffs, resid = oa.project(part, oa.D_BY_LENGTH[n])
            for name, value in coeffs.items():
                out.append(f"{name}: {_fmt(value)}  (O(eps^{D_ORDERS[name]}))")
            out.append(f"residual: {resid:.3g}")
    return "\n".join(out) + "\n"


def trajectory_csv(traj, problem, comments=()) -> str:
    n = problem.dim
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    cols = ["t"] + [f"x_{i}" for i in range(n)] + [f"v_{i}" for i in range(n)] + ["H"]
    buf.write(",".join(cols) + "\n")
    energies = traj.energies(problem)
    for i in range(len(traj)):
        row = [traj.t[i], *traj.x[i], *traj.v[i], energies[i]]
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def _steps(tfinal, dt):
    return max(1, round(tfinal / dt))


def _default_ddt(problem, ddt, dt):
    if ddt is not None:
        return ddt
    return 0.01 if isinstance(problem, CoupledOscillator) else dt / 24


def _problem(spec: RunSpec):
    try:
        return make_problem(spec.problem, spec.eps, spec.beta)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def cmd_expand(spec: RunSpec) -> str:
    return expand_report(_scheme(spec.scheme), spec.order)


def cmd_integrate(spec: RunSpec, sequence: str = FORWARD) -> str:
    scheme = _scheme(spec.scheme)
    problem = _problem(spec)
    dt = spec.dt or 0.12
    ddt = _default_ddt(problem, spec.ddt, dt)
    tfinal = spec.tfinal or 50.0
    cfg = StepConfig(dt, min(ddt, dt), sequence)
    traj = integrate(default_initial_state(problem), problem, scheme, cfg, _steps(tfinal, dt))
    return trajectory_csv(traj, problem, [
        f"problem={problem!r} scheme={scheme} ({scheme.to_text()})",
        f"dt={dt} ddt={cfg.inner_dt} steps={len(traj) - 1} order={sequence}",
    ])


def grid(lo: float, hi: float, step: float) -> np.ndarray:
    if not step > 0:
        raise CliError("grid step must be positive")
    count = math.floor((hi - lo) / step + 1e-9) + 1 if hi >= lo else 0
    if count <= 0:
        raise CliError("empty grid")
    return lo + step * np.arange(count)


def cmd_stability(spec: RunSpec, lo: float, hi: float, step: float, sequence: str = FORWARD) -> str:
    schemes = [_scheme(s) for s in spec.schemes] if spec.schemes else catalog()
    dts = grid(lo, hi, step)
    report = analysis.stability_sweep(schemes, dts, spec.ddt, order=sequence)
    head = "# inner step: " + ("dt/24" if spec.ddt is None else f"{spec.ddt}") + \
        "; model f = -(pi/5)^2 x, g = -pi^2 x\n"
    return head + report.to_csv()


def cmd_converge(spec: RunSpec, dts, coordinate: str, dt_ref: float | None,
                 sequence: str = FORWARD) -> str:
    schemes = [_scheme(s) for s in spec.schemes] if spec.schemes else catalog()
    problem = _problem(spec)
    if len(dts) < 3:
        raise CliError("grid too coarse for a fit (need at least 3 points)")
    ddt = spec.ddt if spec.ddt is not None else (0.01 if isinstance(problem, CoupledOscillator) else None)
    if ddt is not None and ddt > min(dts):
        raise CliError("--ddt must not exceed the smallest --dts value")
    report = analysis.convergence_study(
        problem, schemes, dts, ddt, spec.tfinal or 50.0, coordinate,
        dt_ref=dt_ref, order=sequence)
    report.notes.append("inner step: " + ("dt/24" if ddt is None else f"{ddt}"))
    return report.to_csv()


SHADOW_SCHEMES = {"I": impulse_I, "II": impulse_II}


def cmd_shadow(spec: RunSpec, shadow_dt: float | None = None) -> str:
    scheme = _scheme(spec.scheme)
    method = next((m for m, f in SHADOW_SCHEMES.items()
                   if f().c == scheme.c and f().d == scheme.d), None)
    if method is None:
        raise CliError("shadow form available for impulse I and II only")
    problem = _problem(spec)
    dt = spec.dt or 0.12
    ddt = _default_ddt(problem, spec.ddt, dt)
    hs_dt = dt if shadow_dt is None else shadow_dt
    tfinal = spec.tfinal or 50.0
    traj = integrate(default_initial_state(problem), problem, scheme,
                     StepConfig(dt, min(ddt, dt)), _steps(tfinal, dt))
    h = traj.energies(problem)
    hs = np.array([analysis.shadow_hamiltonian(problem, traj.state(i), hs_dt, method)
                   for i in range(len(traj))])
    buf = io.StringIO()
    buf.write(f"# problem={problem!r} scheme={scheme} dt={dt} ddt={ddt} shadow_dt={hs_dt}\n")
    buf.write("t,H,H_shadow\n")
    for t, a, b in zip(traj.t, h, hs):
        buf.write(f"{t:.17g},{a:.17g},{b:.17g}\n")
    buf.write(f"# std(H)={h.std():.6e} std(H_shadow)={hs.std():.6e}\n")
    return buf.getvalue()


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="impulse-mts", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scheme=True, problem=True):
        if scheme:
            p.add_argument("--scheme", default="impulse1",
                           help="impulse1..impulse4 or 'k;c=c1,..;d=d1,..' (default impulse1)")
        if problem:
            p.add_argument("--problem", default="oscillator", choices=["oscillator", "linear"])
            p.add_argument("--eps", type=float, default=None)
            p.add_argument("--beta", type=float, default=None)
        p.add_argument("--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("expand", help="splitting-error word expansion")
    common(p, problem=False)
    p.add_argument("--order", type=int, default=oa.DEFAULT_ORDER)

    p = sub.add_parser("integrate", help="trajectory CSV with energy column")
    common(p)
    p.add_argument("--dt", type=float, default=0.12)
    p.add_argument("--ddt", type=float, default=None, help="inner step (oscillator 0.01, else dt/24)")
    p.add_argument("--tfinal", type=float, default=50.0)
    p.add_argument("--sequence", choices=[FORWARD, REVERSE], default=FORWARD)

    p = sub.add_parser("stability", help="spectral radius sweep on the linear model")
    p.add_argument("--schemes", default="", help="comma list (default all four)")
    p.add_argument("--dt-min", type=float, default=0.05)
    p.add_argument("--dt-max", type=float, default=3.0)
    p.add_argument("--dt-step", type=float, default=0.001)
    p.add_argument("--ddt", type=float, default=None, help="inner step (default dt/24)")
    p.add_argument("--sequence", choices=[FORWARD, REVERSE], default=FORWARD)
    p.add_argument("--out", default=None)

    p = sub.add_parser("converge", help="final-time error vs dt")
    common(p, scheme=False)
    p.add_argument("--schemes", default="", help="comma list (default all four)")
    p.add_argument("--dts", type=_floats, default=[0.03, 0.06, 0.12])
    p.add_argument("--ddt", type=float, default=None)
    p.add_argument("--tfinal", type=float, default=50.0)
    p.add_argument("--coordinate", default="q1")
    p.add_argument("--dt-ref", type=float, default=None)
    p.add_argument("--sequence", choices=[FORWARD, REVERSE], default=FORWARD)

    p = sub.add_parser("shadow", help="energy and shadow Hamiltonian along a trajectory")
    common(p)
    p.add_argument("--dt", type=float, default=0.12)
    p.add_argument("--ddt", type=float, default=None)
    p.add_argument("--tfinal", type=float, default=50.0)
    p.add_argument("--shadow-dt", type=float, default=None,
                   help="step used in the shadow correction (default --dt)")
    return parser


def _split_schemes(text: str) -> list[str]:
    # inline schemes contain commas, so ';'-bearing entries are taken whole
    if not text:
        return []
    if ";" in text:
        return [s.strip() for s in text.split("|") if s.strip()]
    return [s.strip() for s in text.split(",") if s.strip()]


def run(argv=None) -> tuple[str, str | None]:
    """Parse arguments and produce the report text plus the requested output path."""
    parser = build_parser()
    args = parser.parse_args(argv)
    spec = RunSpec(
        command=args.command,
        scheme=getattr(args, "scheme", None),
        schemes=_split_schemes(getattr(args, "schemes", "")),
        problem=getattr(args, "problem", "oscillator"),
        dt=getattr(args, "dt", None),
        ddt=getattr(args, "ddt", None),
        tfinal=getattr(args, "tfinal", None),
        eps=getattr(args, "eps", None),
        beta=getattr(args, "beta", None),
        order=getattr(args, "order", oa.DEFAULT_ORDER),
        out=args.out,
    )
    try:
        spec.validate()
        if spec.scheme is not None:
            try:
                parse_scheme(spec.scheme)
            except SchemeError as exc:
                parser.error(str(exc))
        if args.command == "expand":
            text = cmd_expand(spec)
        elif args.command == "integrate":
            text = cmd_integrate(spec, args.sequence)
        elif args.command == "stability":
            text = cmd_stability(spec, args.dt_min, args.dt_max, args.dt_step, args.sequence)
        elif args.command == "converge":
            if any(not (math.isfinite(d) and d > 0) for d in args.dts):
                raise CliError("--dts values must be positive")
            text = cmd_converge(spec, args.dts, args.coordinate, args.dt_ref, args.sequence)
        else:
            if args.shadow_dt is not None and not (math.isfinite(args.shadow_dt) and args.shadow_dt >= 0):
                raise CliError("--shadow-dt must be non-negative")
            text = cmd_shadow(spec, args.shadow_dt)
    except (CliError, DivergenceError, ValueError) as exc:
        print(f"impulse-mts {args.command}: error: {exc}", file=sys.stderr)
        raise SystemExit(1) from None
    return text, spec.out


def main(argv=None) -> int:
    text, out = run(argv)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
