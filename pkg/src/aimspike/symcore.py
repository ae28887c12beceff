"""Sparse symbolic algebra for functions of the form sum_p c_p(E) * r**p.

The iteration engine works with functions of the radial variable r that are
finite sums of rational powers of r, each weighted by a polynomial in the
energy E.  This module provides that representation and the four operations
the recursion needs: addition, multiplication, differentiation in r, and
evaluation at a point r0 (which collapses a SymFunc to a single polynomial
in E).  A sign-scan/bisection root finder for those E-polynomials completes
the toolkit.

Numeric coefficients are arbitrary-precision floats (mpmath) and adopt the
active working precision; exponents are exact rationals so that fractional
singularity powers never accumulate error.  All values are immutable after
construction.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from mpmath import mp, mpf, workdps

from .errors import DomainError, NumericError

__all__ = [
    "BigReal",
    "EPoly",
    "Exponent",
    "PowerCache",
    "SymFunc",
    "epoly_real_roots",
    "precision",
    "sf_add",
    "sf_diff",
    "sf_eval",
    "sf_mul",
    "to_big",
]

BigReal = mpf
Exponent = Fraction

_ZERO = mpf(0)
_MIN_DIGITS = 10


def precision(digits: int):
    """Context manager fixing the working precision in decimal digits.

    One context is meant to wrap one solver run; every value created inside
    shares it.  Rounding is mpmath's default round-to-nearest.
    """
    if digits < _MIN_DIGITS:
        raise ValueError(f"working precision must be at least {_MIN_DIGITS} digits, got {digits}")
    return workdps(digits)


def to_big(x) -> mpf:
    """Convert to an arbitrary-precision float at the active precision.

    Fractions divide exactly here (mpf itself does not accept them).
    """
    if isinstance(x, mpf):
        return x
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


_as_mpf = to_big


class EPoly:
    """Dense polynomial in the energy variable E.

    ``coeffs[k]`` is the coefficient of E**k.  Trailing zero coefficients are
    trimmed on construction, so ``degree`` is canonical (-1 for the zero
    polynomial).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [_as_mpf(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = cs

    @classmethod
    def _raw(cls, cs: list) -> "EPoly":
        # Trusted path: cs already holds mpf values and may be mutated here.
        while cs and cs[-1] == 0:
            cs.pop()
        p = object.__new__(cls)
        p.coeffs = cs
        return p

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "EPoly") -> "EPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, c in enumerate(b):
            out[k] = out[k] + c
        return EPoly._raw(out)

    def __neg__(self) -> "EPoly":
        return EPoly._raw([-c for c in self.coeffs])

    def __sub__(self, other: "EPoly") -> "EPoly":
        return self + (-other)

    def __mul__(self, other: "EPoly") -> "EPoly":
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return EPoly._raw([])
        if len(a) == 1:
            a0 = a[0]
            return EPoly._raw([a0 * c for c in b])
        if len(b) == 1:
            b0 = b[0]
            return EPoly._raw([c * b0 for c in a])
        out = [_ZERO] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] += ai * bj
        return EPoly._raw(out)

    def scaled(self, factor) -> "EPoly":
        f = _as_mpf(factor)
        if f == 0:
            return EPoly._raw([])
        return EPoly._raw([c * f for c in self.coeffs])

    def __call__(self, e) -> mpf:
        acc = _ZERO
        for c in reversed(self.coeffs):
            acc = acc * e + c
        return acc

    def derivative(self) -> "EPoly":
        return EPoly._raw([k * c for k, c in enumerate(self.coeffs)][1:])

    def max_abs(self) -> mpf:
        m = _ZERO
        for c in self.coeffs:
            a = abs(c)
            if a > m:
                m = a
        return m

    def __eq__(self, other) -> bool:
        return isinstance(other, EPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def __repr__(self) -> str:
        if self.is_zero:
            return "EPoly(0)"
        parts = [f"{mp.nstr(c, 8)}*E^{k}" if k else mp.nstr(c, 8) for k, c in enumerate(self.coeffs) if c]
        return "EPoly(" + " + ".join(parts) + ")"


class SymFunc:
    """Finite sum of terms ``c_p(E) * r**p`` with exact rational exponents.

    The term map is canonical: exponents are unique and no term carries an
    identically zero E-polynomial.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        data: dict[Fraction, EPoly] = {}
        for p, c in items:
            p = Fraction(p)
            c = c if isinstance(c, EPoly) else EPoly(c)
            if p in data:
                c = data[p] + c
            if c.is_zero:
                data.pop(p, None)
            else:
                data[p] = c
        self.terms = data

    @classmethod
    def _raw(cls, data: dict) -> "SymFunc":
        f = object.__new__(cls)
        f.terms = data
        return f

    @classmethod
    def constant(cls, coeffs) -> "SymFunc":
        """The r-independent function with the given E-polynomial coefficients."""
        return cls({Fraction(0): EPoly(coeffs) if not isinstance(coeffs, EPoly) else coeffs})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def exponents(self) -> list[Fraction]:
        return sorted(self.terms)

    def max_abs(self) -> mpf:
        m = _ZERO
        for c in self.terms.values():
            a = c.max_abs()
            if a > m:
                m = a
        return m

    def scaled(self, factor) -> "SymFunc":
        f = _as_mpf(factor)
        if f == 0:
            return SymFunc._raw({})
        return SymFunc._raw({p: c.scaled(f) for p, c in self.terms.items()})

    def pruned(self, rel_floor: mpf) -> "SymFunc":
        """Drop terms whose every coefficient is below ``rel_floor * max_abs``.

        The floor guards the root structure: callers use 10**(-2*digits),
        far below anything that could move a root at working precision.
        """
        m = self.max_abs()
        if m == 0:
            return self
        cut = m * rel_floor
        data = {p: c for p, c in self.terms.items() if c.max_abs() >= cut}
        if len(data) == len(self.terms):
            return self
        return SymFunc._raw(data)

    def __add__(self, other: "SymFunc") -> "SymFunc":
        data = dict(self.terms)
        for p, c in other.terms.items():
            prev = data.get(p)
            merged = c if prev is None else prev + c
            if merged.is_zero:
                data.pop(p, None)
            else:
                data[p] = merged
        return SymFunc._raw(data)

    def __neg__(self) -> "SymFunc":
        return SymFunc._raw({p: -c for p, c in self.terms.items()})

    def __sub__(self, other: "SymFunc") -> "SymFunc":
        return self + (-other)

    def __mul__(self, other: "SymFunc") -> "SymFunc":
        data: dict[Fraction, EPoly] = {}
        for pa, ca in self.terms.items():
            for pb, cb in other.terms.items():
                p = pa + pb
                c = ca * cb
                prev = data.get(p)
                if prev is not None:
                    c = prev + c
                if c.is_zero:
                    data.pop(p, None)
                else:
                    data[p] = c
        return SymFunc._raw(data)

    def derivative(self) -> "SymFunc":
        data = {}
        for p, c in self.terms.items():
            if p:
                data[p - 1] = c.scaled(_as_mpf(p))
        return SymFunc._raw(data)

    def eval_at(self, r0, powers: "PowerCache | None" = None) -> EPoly:
        r0 = _as_mpf(r0)
        if r0 <= 0:
            raise DomainError(f"evaluation point must be positive, got {r0}")
        buf: list = []
        for p, c in self.terms.items():
            w = powers(p) if powers is not None else _rpow(r0, p)
            cs = c.coeffs
            if len(buf) < len(cs):
                buf.extend([_ZERO] * (len(cs) - len(buf)))
            for k, ck in enumerate(cs):
                if ck:
                    buf[k] += ck * w
        return EPoly._raw(buf)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymFunc) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        if self.is_zero:
            return "SymFunc(0)"
        bits = [f"({c!r})*r^{p}" for p, c in sorted(self.terms.items())]
        return "SymFunc[" + " + ".join(bits) + "]"


def _rpow(r: mpf, p: Fraction) -> mpf:
    if p.denominator == 1:
        return r ** p.numerator
    return mp.power(r, _as_mpf(p))


class PowerCache:
    """Caches r0**p across the many evaluations a solver run performs."""

    __slots__ = ("r0", "_cache")

    def __init__(self, r0):
        self.r0 = _as_mpf(r0)
        if self.r0 <= 0:
            raise DomainError(f"evaluation point must be positive, got {self.r0}")
        self._cache: dict[Fraction, mpf] = {}

    def __call__(self, p: Fraction) -> mpf:
        w = self._cache.get(p)
        if w is None:
            w = _rpow(self.r0, p)
            self._cache[p] = w
        return w


def sf_add(a: SymFunc, b: SymFunc) -> SymFunc:
    """Sum of two symbolic functions (union of exponents, merged coefficients)."""
    return a + b


def sf_mul(a: SymFunc, b: SymFunc) -> SymFunc:
    """Product of two symbolic functions (exponents add, E-degrees add)."""
    return a * b


def sf_diff(a: SymFunc) -> SymFunc:
    """d/dr applied termwise: c*r**p -> (p*c)*r**(p-1)."""
    return a.derivative()


def sf_eval(a: SymFunc, r0, powers: PowerCache | None = None) -> EPoly:
    """Collapse a SymFunc to a single E-polynomial at the point r0 > 0."""
    return a.eval_at(r0, powers)


def epoly_real_roots(p: EPoly, lo, hi, scan_points: int = 256) -> list[mpf]:
    """Real roots of ``p`` in [lo, hi] by uniform sign scan plus bisection.

    Roots are refined to roughly context precision and returned ascending.
    Multiple roots inside one scan cell can be missed; callers that care
    rescan at higher resolution.
    """
    lo = _as_mpf(lo)
    hi = _as_mpf(hi)
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if scan_points < 2:
        raise ValueError(f"need at least 2 scan points, got {scan_points}")
    for c in p.coeffs:
        if not mp.isfinite(c):
            raise NumericError("polynomial has non-finite coefficients")
    if p.degree < 1:
        return []

    step = (hi - lo) / (scan_points - 1)
    xs = [lo + step * k for k in range(scan_points)]
    vals = [p(x) for x in xs]

    roots: list[mpf] = []
    for k in range(scan_points - 1):
        v0, v1 = vals[k], vals[k + 1]
        if v0 == 0:
            roots.append(xs[k])
            continue
        if v1 == 0:
            continue  # picked up as the left endpoint of the next cell
        if (v0 < 0) != (v1 < 0):
            roots.append(_bisect(p, xs[k], xs[k + 1], v0))
    if vals[-1] == 0:
        roots.append(xs[-1])

    roots.sort()
    eps = mpf(10) ** (-mp.dps + 3)
    out: list[mpf] = []
    for r in roots:
        if not out or r - out[-1] > eps * (1 + abs(r)):
            out.append(r)
    return out


def _bisect(p: EPoly, a: mpf, b: mpf, fa: mpf) -> mpf:
    neg = fa < 0
    # Enough halvings to push the interval below ~10**(-dps+2) relative.
    for _ in range(int(mp.dps * 3.33) + 12):
        mid = (a + b) / 2
        if mid == a or mid == b:
            break
        fm = p(mid)
        if fm == 0:
            return mid
        if (fm < 0) == neg:
            a = mid
        else:
            b = mid
        if b - a <= (1 + abs(mid)) * mpf(10) ** (-mp.dps + 2):
            break
    return (a + b) / 2
