"""Splitting-coefficient sets for generalized impulse methods.

A scheme with ``k`` fractional-step pairs approximates one outer step by

    exp(c_1 dt L_slow) exp(d_1 dt L_fast) ... exp(c_k dt L_slow) exp(d_k dt L_fast)

Rational schemes keep their coefficients as :class:`fractions.Fraction` so
the word-series engine can expand them exactly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Sequence

CONSISTENCY_TOL = 1e-14


class SchemeError(ValueError):
    """Raised for malformed or inconsistent splitting schemes."""


def _coerce(value) -> Fraction | float:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, Real):
        return float(value)
    raise SchemeError(f"coefficient {value!r} is not a real number")


@dataclass(frozen=True)
class SplittingScheme:
    c: tuple
    d: tuple
    name: str | None = None

    def __post_init__(self):
        c = tuple(_coerce(x) for x in self.c)
        d = tuple(_coerce(x) for x in self.d)
        if len(c) != len(d):
            raise SchemeError(f"c has {len(c)} entries but d has {len(d)}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def k(self) -> int:
        return len(self.c)

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Fraction) for x in self.c + self.d)

    @property
    def partial_c(self) -> tuple:
        """Partial sums C_i = c_1 + ... + c_i."""
        return tuple(_cumsum(self.c))

    @property
    def partial_d(self) -> tuple:
        return tuple(_cumsum(self.d))

    def as_float(self) -> "SplittingScheme":
        return SplittingScheme(
            tuple(float(x) for x in self.c), tuple(float(x) for x in self.d), self.name
        )

    def interleaved(self) -> tuple:
        """The sequence (c_1, d_1, ..., c_k, d_k) with a trailing zero dropped."""
        seq = [x for pair in zip(self.c, self.d) for x in pair]
        while seq and seq[-1] == 0:
            seq.pop()
        return tuple(seq)

    def is_symmetric(self, tol: float = 1e-14) -> bool:
        seq = self.interleaved()
        return all(abs(a - b) <= tol for a, b in zip(seq, reversed(seq)))

    def to_text(self) -> str:
        return f"{self.k};c={_join(self.c)};d={_join(self.d)}"

    def __str__(self) -> str:
        return self.name or self.to_text()


def _cumsum(values):
    total = 0
    for v in values:
        total = total + v
        yield total


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return f"{x:.17g}"


def _join(values) -> str:
    return ",".join(_fmt(x) for x in values)


def validate(scheme: SplittingScheme, tol: float = CONSISTENCY_TOL) -> list[str]:
    """Return a list of consistency violations; empty means the scheme is usable."""
    problems = []
    if scheme.k < 1:
        problems.append("k = 0 < 1")
        return problems
    for label, values in (("c", scheme.c), ("d", scheme.d)):
        if not all(math.isfinite(float(x)) for x in values):
            problems.append(f"{label} has non-finite entries")
    if problems:
        return problems
    for label, values in (("C_k", scheme.c), ("D_k", scheme.d)):
        total = sum(values, Fraction(0)) if scheme.exact else math.fsum(map(float, values))
        ok = total == 1 if scheme.exact else abs(total - 1.0) <= tol
        if not ok:
            problems.append(f"{label} = {_fmt(total)} ≠ 1")
    return problems


def require_valid(scheme: SplittingScheme) -> SplittingScheme:
    problems = validate(scheme)
    if problems:
        raise SchemeError(f"inconsistent scheme {scheme}: " + "; ".join(problems))
    return scheme


def impulse_I() -> SplittingScheme:
    half = Fraction(1, 2)
    return SplittingScheme((half, half), (Fraction(1), Fraction(0)), "impulse1")


def impulse_II() -> SplittingScheme:
    return SplittingScheme(
        (Fraction(1, 4), Fraction(3, 4)), (Fraction(2, 3), Fraction(1, 3)), "impulse2"
    )


def impulse_III() -> SplittingScheme:
    sixth = Fraction(1, 6)
    half = Fraction(1, 2)
    return SplittingScheme((sixth, Fraction(2, 3), sixth), (half, half, Fraction(0)), "impulse3")


def impulse_IV_c1() -> float:
    return 2 ** (1 / 3) / 6 + 4 ** (1 / 3) / 12 + 1 / 3


def symmetric_k4(c1, d1, name: str | None = None) -> SplittingScheme:
    """Symmetric four-pair pattern c = (c1, 1/2-c1, 1/2-c1, c1), d = (d1, 1-2 d1, d1, 0)."""
    c1, d1 = _coerce(c1), _coerce(d1)
    half = Fraction(1, 2) if isinstance(c1, Fraction) else 0.5
    return SplittingScheme((c1, half - c1, half - c1, c1), (d1, 1 - 2 * d1, d1, 0 * d1), name)


def impulse_IV() -> SplittingScheme:
    c1 = impulse_IV_c1()
    return symmetric_k4(c1, 2 * c1, "impulse4")


def _cubic(z: float) -> float:
    return 6 * z**3 - 12 * z**2 + 6 * z - 1


def solve_k4_equations(tol: float = 1e-15, max_iter: int = 200) -> tuple[float, float]:
    """Solve for (c1, d1) annihilating the D41 and D42 terms of the symmetric k=4 family.

    d1 is the single real root of 6z^3 - 12z^2 + 6z - 1, located by safeguarded
    Newton iteration on the bracket [1, 2]; c1 = d1 / 2.
    """
    lo, hi = 1.0, 2.0
    if not (_cubic(0.0) < 0 and _cubic(1.0) < 0 and _cubic(2.0) > 0):
        raise RuntimeError("cubic root not bracketed on [1, 2]")
    z = 1.5
    for _ in range(max_iter):
        fz = _cubic(z)
        if fz == 0:
            break
        if fz < 0:
            lo = z
        else:
            hi = z
        dfz = 18 * z**2 - 24 * z + 6
        step = fz / dfz if dfz != 0 else math.inf
        candidate = z - step
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if abs(candidate - z) <= tol * max(1.0, abs(z)):
            z = candidate
            break
        z = candidate
    return z / 2, z


NAMED = {
    "impulse1": impulse_I,
    "impulse2": impulse_II,
    "impulse3": impulse_III,
    "impulse4": impulse_IV,
}

_INLINE = re.compile(
    r"^\s*(?P<k>\d+)\s*;\s*c\s*=\s*(?P<c>[^;]+);\s*d\s*=\s*(?P<d>[^;]+?)\s*$"
)


def _parse_number(token: str):
    token = token.strip()
    try:
        return Fraction(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        raise SchemeError(f"bad coefficient {token!r}") from None


def catalog() -> list[SplittingScheme]:
    return [factory() for factory in NAMED.values()]


def parse_scheme(text: str) -> SplittingScheme:
    """Parse a named shortcut (``impulse1`` .. ``impulse4``) or ``k;c=...;d=...``.

    Coefficients written as integers, decimals or ``p/q`` are kept exact, unless
    only the floating-point reading sums to one (long decimal expansions).
    """
    key = text.strip().lower()
    if key in NAMED:
        return NAMED[key]()
    m = _INLINE.match(text)
    if m is None:
        raise SchemeError(
            f"unknown scheme {text!r}; use one of {', '.join(NAMED)} or 'k;c=...;d=...'"
        )
    k = int(m["k"])
    c = [_parse_number(t) for t in m["c"].split(",")]
    d = [_parse_number(t) for t in m["d"].split(",")]
    if len(c) != k or len(d) != k:
        raise SchemeError(f"scheme declares k={k} but has {len(c)} c and {len(d)} d values")
    scheme = SplittingScheme(tuple(c), tuple(d))
    if scheme.exact and validate(scheme) and not validate(scheme.as_float()):
        return scheme.as_float()
    return scheme


def from_sequences(c: Sequence, d: Sequence, name: str | None = None) -> SplittingScheme:
    return SplittingScheme(tuple(c), tuple(d), name)
