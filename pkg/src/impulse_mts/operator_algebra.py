"""Truncated series over words of noncommuting letters.

Two alphabets are supported:

* ``"AB"``: ``A`` is the slow-force kick operator and ``B`` the fast
  operator (drift plus fast force).  The step size is folded into the
  letters, so a word of length j carries dt**j.
* ``"XVF"``: the fast operator split as ``B = X + eps**-2 V`` (``X`` the
  drift, ``V`` the fast force) and ``F = A``.  Every word carries the
  epsilon exponent ``-2 * (number of V letters)``.

Coefficients are either :class:`fractions.Fraction` (exact) or ``float``.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping

from .schemes import SchemeError, SplittingScheme, validate

ALPHABETS = ("AB", "XVF")
DEFAULT_ORDER = 5
MAX_ORDER = 8
IDENTITY_TOKEN = "I"


class WordSeries:
    """An immutable truncated linear combination of words.

    Words are strings over the alphabet; the empty string is the identity.
    Products concatenate words and drop anything longer than ``order``.
    """

    __slots__ = ("alphabet", "order", "_terms")

    def __init__(self, terms: Mapping[str, object] | None = None, alphabet: str = "AB",
                 order: int = DEFAULT_ORDER):
        if alphabet not in ALPHABETS:
            raise ValueError(f"unsupported alphabet {alphabet!r}")
        if order < 0:
            raise ValueError("truncation order must be non-negative")
        clean = {}
        for word, coeff in (terms or {}).items():
            if any(ch not in alphabet for ch in word):
                raise ValueError(f"word {word!r} uses letters outside {alphabet!r}")
            if len(word) > order or coeff == 0:
                continue
            clean[word] = clean.get(word, 0) + coeff
        self.alphabet = alphabet
        self.order = order
        self._terms = MappingProxyType({w: c for w, c in clean.items() if c != 0})

    @classmethod
    def identity(cls, alphabet="AB", order=DEFAULT_ORDER, one=Fraction(1)):
        return cls({"": one}, alphabet, order)

    @classmethod
    def zero(cls, alphabet="AB", order=DEFAULT_ORDER):
        return cls({}, alphabet, order)

    @classmethod
    def letter(cls, letter: str, coeff=Fraction(1), alphabet="AB", order=DEFAULT_ORDER):
        return cls({letter: coeff}, alphabet, order)

    @property
    def terms(self) -> Mapping[str, object]:
        return self._terms

    @property
    def exact(self) -> bool:
        return all(isinstance(c, (Fraction, int)) for c in self._terms.values())

    def coefficient(self, word: str):
        return self._terms.get(word, 0)

    def part(self, length: int) -> "WordSeries":
        """Homogeneous component made of words of exactly ``length`` letters."""
        return self._new({w: c for w, c in self._terms.items() if len(w) == length})

    def truncate(self, order: int) -> "WordSeries":
        return WordSeries(self._terms, self.alphabet, min(order, self.order))

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self._terms.values())

    def max_abs(self) -> float:
        return max((abs(float(c)) for c in self._terms.values()), default=0.0)

    def to_float(self) -> "WordSeries":
        return self._new({w: float(c) for w, c in self._terms.items()})

    def epsilon_exponent(self, word: str) -> int:
        return -2 * word.count("V") if self.alphabet == "XVF" else 0

    def epsilon_part(self, exponent: int) -> "WordSeries":
        return self._new({w: c for w, c in self._terms.items()
                          if self.epsilon_exponent(w) == exponent})

    def _new(self, terms) -> "WordSeries":
        return WordSeries(terms, self.alphabet, self.order)

    def _check(self, other: "WordSeries"):
        if other.alphabet != self.alphabet:
            raise ValueError(f"alphabet mismatch: {self.alphabet} vs {other.alphabet}")

    def __add__(self, other):
        if not isinstance(other, WordSeries):
            return NotImplemented
        self._check(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0) + c
        return WordSeries(out, self.alphabet, min(self.order, other.order))

    def __neg__(self):
        return self._new({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, WordSeries):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, WordSeries):
            self._check(other)
            order = min(self.order, other.order)
            out: dict[str, object] = {}
            for w1, c1 in self._terms.items():
                room = order - len(w1)
                if room < 0:
                    continue
                for w2, c2 in other._terms.items():
                    if len(w2) <= room:
                        w = w1 + w2
                        out[w] = out.get(w, 0) + c1 * c2
            return WordSeries(out, self.alphabet, order)
        return self._new({w: c * other for w, c in self._terms.items()})

    def __rmul__(self, scalar):
        return self._new({w: scalar * c for w, c in self._terms.items()})

    def __truediv__(self, scalar):
        if isinstance(scalar, int):
            scalar = Fraction(scalar)
        return self._new({w: c / scalar for w, c in self._terms.items()})

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers: use inverse()")
        result = WordSeries.identity(self.alphabet, self.order)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, WordSeries):
            return NotImplemented
        return self.alphabet == other.alphabet and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self.alphabet, frozenset(self._terms.items())))

    def inverse(self) -> "WordSeries":
        """Multiplicative inverse of a series with constant term 1."""
        const = self.coefficient("")
        if const != 1:
            raise ValueError("inverse needs a unit constant term")
        nilpotent = self - WordSeries.identity(self.alphabet, self.order)
        result = WordSeries.identity(self.alphabet, self.order)
        power = WordSeries.identity(self.alphabet, self.order)
        for _ in range(self.order):
            power = power * (-nilpotent)
            result = result + power
        return result

    def dot(self, other: "WordSeries"):
        """Euclidean inner product of coefficient vectors."""
        return sum((c * other._terms[w] for w, c in self._terms.items() if w in other._terms), 0)

    def sorted_terms(self) -> list[tuple[str, object]]:
        rank = {ch: i for i, ch in enumerate(self.alphabet)}
        return sorted(self._terms.items(), key=lambda t: (len(t[0]), [rank[ch] for ch in t[0]]))

    def to_text(self) -> str:
        """One ``coeff  epsilon_exp  word`` line per term; ``I`` is the empty word."""
        lines = []
        for word, coeff in self.sorted_terms():
            lines.append(f"{_fmt(coeff)}  {self.epsilon_exponent(word)}  {word or IDENTITY_TOKEN}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str, alphabet: str = "AB", order: int = DEFAULT_ORDER):
        terms: dict[str, object] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 3:
                raise ValueError(f"expected 'coeff eps word', got {raw!r}")
            coeff_s, eps_s, word = fields
            word = "" if word == IDENTITY_TOKEN else word
            coeff = Fraction(coeff_s) if _is_rational_literal(coeff_s) else float(coeff_s)
            series = cls({}, alphabet, max(order, len(word)))
            if int(eps_s) != series.epsilon_exponent(word):
                raise ValueError(f"epsilon exponent {eps_s} inconsistent with word {word!r}")
            terms[word] = terms.get(word, 0) + coeff
        return cls(terms, alphabet, order)

    def __repr__(self):
        body = " + ".join(f"({_fmt(c)}){w or IDENTITY_TOKEN}" for w, c in self.sorted_terms())
        return f"WordSeries[{self.alphabet}, n={self.order}]({body or '0'})"


_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


def _is_rational_literal(s: str) -> bool:
    return bool(_RATIONAL.match(s))


def _fmt(c) -> str:
    if isinstance(c, (Fraction, int)):
        return str(c)
    return f"{c:.17g}"


def words(spec: Mapping[str, object], alphabet="AB", order=DEFAULT_ORDER) -> WordSeries:
    """Shorthand constructor, e.g. ``words({"AB": 1, "BA": -1})``."""
    return WordSeries({w: Fraction(c) if isinstance(c, int) else c for w, c in spec.items()},
                      alphabet, order)


def exp_series(generator: WordSeries, order: int | None = None) -> WordSeries:
    """sum_{j<=n} S**j / j!, truncated at word length n."""
    if generator.coefficient("") != 0:
        raise ValueError("exp_series needs a generator without constant term")
    n = generator.order if order is None else order
    gen = WordSeries(generator.terms, generator.alphabet, n)
    one = Fraction(1) if gen.exact else 1.0
    result = WordSeries.identity(gen.alphabet, n, one)
    power = WordSeries.identity(gen.alphabet, n, one)
    for j in range(1, n + 1):
        power = power * gen
        if power.is_zero():
            break
        result = result + power / math.factorial(j)
    return result


def _check_order(order: int):
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"truncation order must lie in [0, {MAX_ORDER}], got {order}")


def splitting_product(scheme: SplittingScheme, order: int = DEFAULT_ORDER) -> WordSeries:
    """prod_i exp(c_i A) exp(d_i B) as a word series."""
    _check_order(order)
    one = Fraction(1) if scheme.exact else 1.0
    result = WordSeries.identity("AB", order, one)
    for ci, di in zip(scheme.c, scheme.d):
        if ci != 0:
            result = result * exp_series(WordSeries.letter("A", ci, order=order))
        if di != 0:
            result = result * exp_series(WordSeries.letter("B", di, order=order))
    return result


def remainder(scheme: SplittingScheme, order: int = DEFAULT_ORDER) -> WordSeries:
    """The splitting error R - I where prod_i exp(c_i A) exp(d_i B) = R exp(A + B).

    Exact when the scheme's coefficients are rational.
    """
    if order < 2:
        raise ValueError("remainder needs truncation order >= 2")
    problems = validate(scheme)
    if problems:
        raise SchemeError(f"inconsistent scheme {scheme}: " + "; ".join(problems))
    one = Fraction(1) if scheme.exact else 1.0
    total = WordSeries({"A": -one, "B": -one}, "AB", order)
    r = splitting_product(scheme, order) * exp_series(total)
    return r - WordSeries.identity("AB", order, one)


def _d_basis() -> dict[str, WordSeries]:
    # A = slow kick operator, B = fast operator, in the same left-to-right order
    # as the operator products they stand for.
    n = MAX_ORDER
    return {
        "D21": words({"AB": 1, "BA": -1}, order=n),
        "D31": words({"BBA": 1, "BAB": -2, "ABB": 1}, order=n),
        "D32": words({"BAA": 1, "ABA": -2, "AAB": 1}, order=n),
        "D41": words({"BBBA": 1, "ABBB": -1, "BABB": 3, "BBAB": -3}, order=n),
        "D42": words({"AABB": 1, "BBAA": -1, "BABA": 2, "ABAB": -2}, order=n),
        "D43": words({"BAAA": 1, "AAAB": -1, "AABA": 3, "ABAA": -3}, order=n),
    }


D_BASIS: Mapping[str, WordSeries] = MappingProxyType(_d_basis())
D_BY_LENGTH = {2: ("D21",), 3: ("D31", "D32"), 4: ("D41", "D42", "D43")}


def _solve(matrix, rhs):
    """Gaussian elimination with partial pivoting; exact for Fraction input."""
    n = len(rhs)
    a = [list(row) + [b] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[pivot][col] == 0:
            raise ZeroDivisionError("singular Gram matrix")
        a[col], a[pivot] = a[pivot], a[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col] / a[col][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def project(series: WordSeries, basis: Iterable[str]) -> tuple[dict, float]:
    """Least-squares coefficients of ``series`` on named D-operators, plus residual norm."""
    names = list(basis)
    vecs = [D_BASIS[name] for name in names]
    if not series.exact:
        vecs = [v.to_float() for v in vecs]
    gram = [[u.dot(v) for v in vecs] for u in vecs]
    rhs = [series.dot(v) for v in vecs]
    coeffs = _solve(gram, rhs)
    fitted = WordSeries.zero("AB", max(series.order, MAX_ORDER))
    for x, v in zip(coeffs, vecs):
        fitted = fitted + x * v
    resid = WordSeries(series.terms, "AB", MAX_ORDER) - fitted
    return dict(zip(names, coeffs)), math.sqrt(float(resid.dot(resid)))


def _remainder_for(scheme_or_series, order: int) -> WordSeries:
    if isinstance(scheme_or_series, WordSeries):
        return scheme_or_series
    return remainder(scheme_or_series, order)


def order2_coefficient(scheme):
    """Coefficient of D21 in the dt**2 part of the remainder."""
    coeffs, _ = project(_remainder_for(scheme, 2).part(2), D_BY_LENGTH[2])
    return coeffs["D21"]


def order3_coefficients(scheme):
    """(coeff of D31, coeff of D32, residual norm) for the dt**3 part."""
    coeffs, resid = project(_remainder_for(scheme, 3).part(3), D_BY_LENGTH[3])
    return coeffs["D31"], coeffs["D32"], resid


def order4_coefficients(scheme):
    """(D41, D42, D43, residual norm) for the dt**4 part; a nonzero residual is reported, not raised."""
    coeffs, resid = project(_remainder_for(scheme, 4).part(4), D_BY_LENGTH[4])
    return coeffs["D41"], coeffs["D42"], coeffs["D43"], resid


def closed_form_k2(c1, d1):
    """Leading k=2 coefficients (D21, D31, D32) as explicit polynomials in c1, d1."""
    half = Fraction(1, 2) if isinstance(c1, Fraction) and isinstance(d1, Fraction) else 0.5
    o2 = (c1 - 1) * d1 + half
    o31 = d1**2 * (1 - c1) * half - half / 3
    o32 = d1 * (c1**2 - 1) * half + 2 * half / 3
    return o2, o31, o32


def closed_form_k3_symmetric(c1):
    """(D31, D32) coefficients of the symmetric k=3 family with d = (1/2, 1/2, 0)."""
    return c1 / 4 - Fraction(1, 24), c1**2 / 2 - c1 / 2 + Fraction(1, 12)


def closed_form_k4_symmetric(c1, d1):
    """(D31, D32, D41, D42, D43) coefficients of the symmetric k=4 family."""
    f = Fraction
    return (
        c1 * d1 - d1 / 2 - c1 * d1**2 + d1**2 / 2 + f(1, 12),
        d1 / 4 - c1 * d1 + c1**2 * d1 - f(1, 24),
        c1 * d1 / 2 - d1 / 4 - c1 * d1**2 / 2 + d1**2 / 4 + f(1, 24),
        c1 * d1 - f(3, 8) * d1 - c1 * d1**2 / 2 - c1**2 * d1 / 2 + d1**2 / 4 + f(1, 16),
        c1 * d1 / 2 - d1 / 8 - c1**2 * d1 / 2 + f(1, 48),
    )


def graded_expand(series: WordSeries) -> WordSeries:
    """Substitute A -> F and B -> X + eps**-2 V.

    The epsilon weight is implied by the number of V letters in each word.
    """
    if series.alphabet != "AB":
        raise ValueError("graded_expand expects a series over {A, B}")
    out: dict[str, object] = {}
    for word, coeff in series.terms.items():
        expansions = [""]
        for ch in word:
            if ch == "A":
                expansions = [e + "F" for e in expansions]
            else:
                expansions = [e + s for e in expansions for s in ("X", "V")]
        for e in expansions:
            out[e] = out.get(e, 0) + coeff
    return WordSeries(out, "XVF", series.order)


_VF_BLOCK = re.compile(r"[VF]+")


def normal_word(word: str) -> str:
    """Move every V ahead of every F inside each maximal V/F block (FV = VF)."""
    return _VF_BLOCK.sub(lambda m: "V" * m.group().count("V") + "F" * m.group().count("F"), word)


def normalize_commuting(series: WordSeries) -> WordSeries:
    if series.alphabet != "XVF":
        raise ValueError("normalize_commuting expects a series over {X, V, F}")
    out: dict[str, object] = {}
    for word, coeff in series.terms.items():
        w = normal_word(word)
        out[w] = out.get(w, 0) + coeff
    return WordSeries(out, "XVF", series.order)


def epsilon_components(series: WordSeries) -> dict[int, WordSeries]:
    """Normalized graded expansion split by epsilon exponent (zero parts omitted)."""
    normal = normalize_commuting(graded_expand(series))
    exps = sorted({normal.epsilon_exponent(w) for w in normal.terms})
    return {e: normal.epsilon_part(e) for e in exps}


def epsilon_order(series: WordSeries, tol: float = 0.0) -> int | None:
    """Most negative epsilon exponent surviving normalization, or None if the series vanishes.

    ``tol`` treats float coefficients up to that magnitude as zero.
    """
    normal = normalize_commuting(graded_expand(series))
    live = [normal.epsilon_exponent(w) for w, c in normal.terms.items() if abs(c) > tol]
    return min(live) if live else None
