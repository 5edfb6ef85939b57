"""Exact arithmetic for rational phases.

A ``Phase`` is a unit scalar e^{2 pi i r} with r rational, kept modulo 1.
A ``PhaseScalar`` is a finite Q-linear combination of phases, i.e. an element
of the group ring of Q/Z over Q.  Addition and multiplication are exact.
Zero- and equality-testing are done modulo the cyclotomic relations (reduction
mod the n-th cyclotomic polynomial), so two expressions compare equal exactly
when they denote the same complex number.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from typing import Iterable


class Phase:
    """e^{2 pi i angle} with a rational angle stored in [0, 1)."""

    __slots__ = ("angle",)

    def __init__(self, angle) -> None:
        object.__setattr__(self, "angle", Fraction(angle) % 1)

    def __mul__(self, other: "Phase") -> "Phase":
        return Phase(self.angle + other.angle)

    def __pow__(self, n: int) -> "Phase":
        return Phase(self.angle * n)

    def inverse(self) -> "Phase":
        return Phase(-self.angle)

    def conjugate(self) -> "Phase":
        return Phase(-self.angle)

    def __eq__(self, other) -> bool:
        if isinstance(other, Phase):
            return self.angle == other.angle
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Phase", self.angle))

    def __complex__(self) -> complex:
        return cmath.exp(2j * cmath.pi * float(self.angle))

    def __repr__(self) -> str:
        return f"Phase({self.angle})"

    def __setattr__(self, *a):
        raise AttributeError("Phase is immutable")


ONE_PHASE = Phase(0)


def _lcm(a: int, b: int) -> int:
    from math import gcd

    return a // gcd(a, b) * b


# --- polynomial helpers over Fraction, little-endian coefficient lists ---


def _poly_mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _poly_divmod(num: list, den: list) -> tuple[list, list]:
    num = list(num)
    dden = len(den) - 1
    lead = den[-1]
    if dden < 0 or not lead:
        raise ZeroDivisionError("polynomial division by zero")
    quot = [Fraction(0)] * max(len(num) - dden, 1)
    for i in range(len(num) - 1, dden - 1, -1):
        c = num[i] / lead
        if c:
            quot[i - dden] = c
            for j, dj in enumerate(den):
                num[i - dden + j] -= c * dj
    while len(num) > 1 and not num[-1]:
        num.pop()
    return quot, num


_CYCLOTOMIC_CACHE: dict[int, list] = {}


def cyclotomic_poly(n: int) -> list:
    """Coefficients of the n-th cyclotomic polynomial (little-endian)."""
    if n in _CYCLOTOMIC_CACHE:
        return _CYCLOTOMIC_CACHE[n]
    if n == 1:
        poly = [Fraction(-1), Fraction(1)]
    else:
        # x^n - 1 divided by the product of Phi_d over proper divisors d | n
        num = [Fraction(0)] * (n + 1)
        num[0], num[n] = Fraction(-1), Fraction(1)
        den = [Fraction(1)]
        for d in range(1, n):
            if n % d == 0:
                den = _poly_mul(den, cyclotomic_poly(d))
        poly, rem = _poly_divmod(num, den)
        if any(rem[i] for i in range(len(rem))):
            raise ArithmeticError(f"cyclotomic division not exact for n={n}")
    _CYCLOTOMIC_CACHE[n] = poly
    return poly


class PhaseScalar:
    """Exact Q-linear combination of rational phases.

    Terms are stored as a dict angle -> coefficient with angles reduced to
    [0, 1/2); a term c*e^{2 pi i a} with a >= 1/2 is folded to (-c)*e^{2 pi
    i (a - 1/2)}.  This keeps the common coincidences (+-1, +-i) in a single
    canonical slot; full equality goes through cyclotomic reduction.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None) -> None:
        folded: dict[Fraction, Fraction] = {}
        if terms:
            for angle, coeff in terms.items():
                a = Fraction(angle) % 1
                c = Fraction(coeff)
                if not c:
                    continue
                if a >= Fraction(1, 2):
                    a -= Fraction(1, 2)
                    c = -c
                folded[a] = folded.get(a, Fraction(0)) + c
                if not folded[a]:
                    del folded[a]
        self.terms = folded

    # -- constructors --

    @classmethod
    def zero(cls) -> "PhaseScalar":
        return cls()

    @classmethod
    def one(cls) -> "PhaseScalar":
        return cls({Fraction(0): Fraction(1)})

    @classmethod
    def from_rational(cls, r) -> "PhaseScalar":
        return cls({Fraction(0): Fraction(r)})

    @classmethod
    def from_phase(cls, phase: Phase, coeff=1) -> "PhaseScalar":
        return cls({phase.angle: Fraction(coeff)})

    # -- ring operations --

    def __add__(self, other) -> "PhaseScalar":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, Fraction(0)) + c
        return PhaseScalar(out)

    __radd__ = __add__

    def __neg__(self) -> "PhaseScalar":
        return PhaseScalar({a: -c for a, c in self.terms.items()})

    def __sub__(self, other) -> "PhaseScalar":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other) -> "PhaseScalar":
        if isinstance(other, Phase):
            return PhaseScalar(
                {a + other.angle: c for a, c in self.terms.items()}
            )
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Fraction, Fraction] = {}
        for a1, c1 in self.terms.items():
            for a2, c2 in other.terms.items():
                a = a1 + a2
                out[a] = out.get(a, Fraction(0)) + c1 * c2
        return PhaseScalar(out)

    __rmul__ = __mul__

    def conjugate(self) -> "PhaseScalar":
        return PhaseScalar({-a: c for a, c in self.terms.items()})

    def scaled(self, r) -> "PhaseScalar":
        r = Fraction(r)
        return PhaseScalar({a: c * r for a, c in self.terms.items()})

    # -- semantics: reduction to the cyclotomic field --

    def _conductor(self) -> int:
        n = 1
        for a in self.terms:
            n = _lcm(n, a.denominator)
        return n

    def _reduced(self) -> tuple[int, tuple]:
        """Canonical vector in the power basis of Q(zeta_n) mod Phi_n."""
        n = self._conductor()
        # stored angles are exact; the half-turn fold lives in the rational
        # coefficient, so the exponent map below needs no sign correction
        coeffs = [Fraction(0)] * max(n, 1)
        for a, c in self.terms.items():
            coeffs[(a.numerator * n) // a.denominator] += c
        phi = cyclotomic_poly(n)
        _, rem = _poly_divmod(coeffs, phi)
        return n, tuple(rem)

    def is_zero(self) -> bool:
        if not self.terms:
            return True
        if len(self.terms) == 1:
            return False  # single nonzero term: a nonzero complex number
        _, rem = self._reduced()
        return all(not c for c in rem)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # mutable-dict semantics; not hashable

    def is_rational(self) -> bool:
        if all(a == 0 for a in self.terms):
            return True
        _, rem = self._reduced()
        return all(not c for c in rem[1:])

    def as_fraction(self) -> Fraction:
        if all(a == 0 for a in self.terms):
            return self.terms.get(Fraction(0), Fraction(0))
        _, rem = self._reduced()
        if any(rem[1:]):
            raise ValueError(f"not a rational number: {self!r}")
        return rem[0] if rem else Fraction(0)

    def phase_part(self) -> Phase:
        """The phase of a value known to be (positive rational) x (phase).

        Raises ValueError for zero or for values that are not of this form.
        """
        if len(self.terms) == 1:
            (a, c), = self.terms.items()
            return Phase(a) if c > 0 else Phase(a + Fraction(1, 2))
        if self.is_zero():
            raise ValueError("zero has no phase")
        n = _lcm(self._conductor(), 2)
        for k in range(n):
            candidate = self * Phase(Fraction(-k, n))
            if candidate.is_rational() and candidate.as_fraction() > 0:
                return Phase(Fraction(k, n))
        raise ValueError(f"not a positive multiple of a rational phase: {self!r}")

    def __complex__(self) -> complex:
        return sum(
            (float(c) * cmath.exp(2j * cmath.pi * float(a)) for a, c in self.terms.items()),
            0j,
        )

    def __repr__(self) -> str:
        if not self.terms:
            return "PhaseScalar(0)"
        bits = []
        for a in sorted(self.terms):
            c = self.terms[a]
            bits.append(f"{c}" if a == 0 else f"{c}*e({a})")
        return "PhaseScalar(" + " + ".join(bits) + ")"

    # -- serialization --

    def to_json(self) -> dict:
        return {str(a): str(c) for a, c in sorted(self.terms.items())}

    @classmethod
    def from_json(cls, data: dict) -> "PhaseScalar":
        return cls({Fraction(a): Fraction(c) for a, c in data.items()})


def _coerce(x):
    if isinstance(x, PhaseScalar):
        return x
    if isinstance(x, Phase):
        return PhaseScalar.from_phase(x)
    if isinstance(x, (int, Fraction)):
        return PhaseScalar.from_rational(x)
    return NotImplemented


def phase_sum(values: Iterable[PhaseScalar]) -> PhaseScalar:
    out = PhaseScalar.zero()
    for v in values:
        out = out + v
    return out
