"""Characters of the degree-zero subalgebra and the induced partial action.

A character chi_t is determined by the values t_j it assigns to the number
operators N_j = a_j* a_j.  On a normal monomial with p = q the value is the
product of falling factorials t_j (t_j - 1) ... (t_j - p_j + 1), times the
reordering phase that relates the stars-first monomial to the grouped word
prod_j (a_j*)^{p_j} a_j^{p_j} (the phase is trivial when theta = 0 or m = 1).

Positivity is tested by sweeping chi(w* w) >= 0 over normal monomials w up
to a letter-length depth; a negative value is a definitive refutation, a
clean sweep certifies positivity up to that depth only.
"""

from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .algebra import (
    AlgebraElement,
    DegreeError,
    Presentation,
    _key_word,
    _nf,
)
from .phases import Phase, PhaseScalar


class DomainError(ValueError):
    """A character outside the domain of the requested partial action."""


class Character:
    """chi_t: N_j -> t_j with rational t."""

    __slots__ = ("pres", "t")

    def __init__(self, pres: Presentation, t):
        self.pres = pres
        self.t = tuple(Fraction(x) for x in t)
        if len(self.t) != pres.m:
            raise ValueError(f"need {pres.m} coordinates, got {len(self.t)}")

    def is_lattice(self) -> bool:
        return all(x.denominator == 1 and x >= 0 for x in self.t)

    def __eq__(self, other):
        if isinstance(other, Character):
            return self.t == other.t and self.pres.data() == other.pres.data()
        return NotImplemented

    def __hash__(self):
        return hash((self.pres.data(), self.t))

    def __repr__(self):
        return f"Character({tuple(str(x) for x in self.t)})"


# reordering phases for grouped words, memoized per presentation
_CORR: "weakref.WeakKeyDictionary[Presentation, dict]" = weakref.WeakKeyDictionary()


def _grouped_correction(pres: Presentation, p: tuple) -> Phase:
    """Phase relating prod_j (a_j*)^{p_j} a_j^{p_j} to the canonical monomial.

    The grouped word normal-orders to a single monomial (p, p) with a pure
    phase coefficient c; the canonical monomial then evaluates to c^{-1}
    times the product of falling factorials.
    """
    table = _CORR.setdefault(pres, {})
    if p in table:
        return table[p]
    word = []
    for j, pj in enumerate(p):
        word.extend(((j, True),) * pj)
        word.extend(((j, False),) * pj)
    nf = _nf(pres, tuple(word))
    if list(nf.keys()) != [(p, p)]:
        raise AssertionError("grouped word did not normalize to a single monomial")
    corr = nf[(p, p)].phase_part().inverse()
    table[p] = corr
    return corr


def _falling(t: Fraction, p: int) -> Fraction:
    out = Fraction(1)
    for i in range(p):
        out *= t - i
    return out


def evaluate(chi: Character, x: AlgebraElement) -> PhaseScalar:
    """Evaluate a degree-zero element at chi.  Raises DegreeError otherwise."""
    pres = chi.pres
    out = PhaseScalar.zero()
    for (p, q), c in x.terms.items():
        if p != q:
            raise DegreeError(
                f"monomial p={p}, q={q} has degree != 0; characters live on A_0"
            )
        val = Fraction(1)
        for tj, pj in zip(chi.t, p):
            val *= _falling(tj, pj)
        if val:
            out = out + (c * _grouped_correction(pres, p)).scaled(val)
    return out


def evaluate_rational(chi: Character, x: AlgebraElement) -> Fraction:
    v = evaluate(chi, x)
    return v.as_fraction()


@dataclass
class PositivityCertificate:
    positive: bool
    depth: int
    t: tuple
    witness: Optional[tuple] = None          # monomial key (p, q) of w
    witness_value: Optional[Fraction] = None  # chi(w* w) < 0
    checked: int = 0

    def summary(self) -> str:
        if self.positive:
            return f"positive up to depth {self.depth}"
        p, q = self.witness
        return (
            f"refuted at depth {self.depth}: w with p={p}, q={q} "
            f"gives chi(w* w) = {self.witness_value}"
        )


def _monomial_keys(m: int, depth: int):
    """All nonzero (p, q) with total letter length <= depth, shortest first."""
    for total in range(1, depth + 1):
        for pq in itertools.product(range(total + 1), repeat=2 * m):
            if sum(pq) == total:
                yield tuple(pq[:m]), tuple(pq[m:])


def is_positive(chi: Character, depth: int = 16) -> PositivityCertificate:
    """Sweep chi(w* w) >= 0 over normal monomials w of length <= depth."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    pres = chi.pres
    checked = 0
    for p, q in _monomial_keys(pres.m, depth):
        w = pres.monomial(p, q)
        val = evaluate_rational(chi, w.star() * w)
        checked += 1
        if val < 0:
            return PositivityCertificate(
                False, depth, chi.t, witness=(p, q), witness_value=val,
                checked=checked,
            )
    return PositivityCertificate(True, depth, chi.t, checked=checked)


def positive_window(pres: Presentation, axes, depth: int = 16):
    """Certificates for every grid point of a product window.

    ``axes`` is one list of rational grid values per generator; returns a
    list of (t, PositivityCertificate) in lexicographic grid order.
    """
    axes = [[Fraction(v) for v in axis] for axis in axes]
    if len(axes) != pres.m:
        raise ValueError(f"need {pres.m} axes, got {len(axes)}")
    out = []
    for point in itertools.product(*axes):
        chi = Character(pres, point)
        out.append((point, is_positive(chi, depth)))
    return out


# partial action: cached formula ingredients per (presentation, k, generator)
_ACTION: "weakref.WeakKeyDictionary[Presentation, dict]" = weakref.WeakKeyDictionary()


def _action_elements(pres: Presentation, k: tuple):
    table = _ACTION.setdefault(pres, {})
    if k not in table:
        b = pres.canonical_rep(k)
        bstar = b.star()
        bb = bstar * b
        bnbs = [bstar * pres.number_op(j) * b for j in range(pres.m)]
        table[k] = (bb, bnbs)
    return table[k]


def in_domain(k, chi: Character, b: AlgebraElement | None = None) -> bool:
    """True when chi lies in the domain of theta_k, i.e. chi(b* b) != 0."""
    k = tuple(int(x) for x in k)
    if b is None:
        bb, _ = _action_elements(chi.pres, k)
    else:
        bb = b.star() * b
    return evaluate_rational(chi, bb) != 0


def partial_action(k, chi: Character, b: AlgebraElement | None = None) -> Character:
    """theta_k(chi): a -> chi(b* a b) / chi(b* b) read off on the N_j.

    ``b`` defaults to the canonical representative of A_k; any other element
    of A_k with chi(b* b) != 0 gives the same result.
    """
    pres = chi.pres
    k = tuple(int(x) for x in k)
    if b is None:
        bb, bnbs = _action_elements(pres, k)
    else:
        deg = b.homogeneous_degree()
        if deg != k:
            raise DegreeError(f"b has degree {deg}, expected {k}")
        bstar = b.star()
        bb = bstar * b
        bnbs = [bstar * pres.number_op(j) * b for j in range(pres.m)]
    denom = evaluate_rational(chi, bb)
    if denom == 0:
        raise DomainError(f"chi={chi!r} outside the domain of theta_{k}")
    t_new = [evaluate_rational(chi, bnb) / denom for bnb in bnbs]
    return Character(pres, t_new)
