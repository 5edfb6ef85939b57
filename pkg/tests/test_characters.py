"""Lattice characters: evaluation, positivity sweeps, the partial action."""

import random
from fractions import Fraction

import pytest

from fellforge.algebra import DegreeError, Presentation
from fellforge.characters import (
    Character,
    DomainError,
    evaluate,
    evaluate_rational,
    in_domain,
    is_positive,
    partial_action,
    positive_window,
)
from fellforge.operator_lab import matrix_of, weyl_rep
from fellforge.phases import Phase

THETA = ((Fraction(0), Fraction(1, 4)), (Fraction(-1, 4), Fraction(0)))


def test_diagonal_evaluation_frozen():
    pres = Presentation("weyl", 1)
    chi = Character(pres, (3,))
    w = pres.monomial((2,), (2,))       # a*^2 a^2
    assert evaluate_rational(chi, w) == 6          # 3 * 2
    assert evaluate_rational(chi, pres.number_op(0)) == 3
    assert evaluate_rational(chi, pres.one()) == 1


def test_off_diagonal_monomials_rejected():
    pres = Presentation("weyl", 1)
    chi = Character(pres, (2,))
    with pytest.raises(DegreeError):
        evaluate(chi, pres.gen(0))


def test_rep_vector_state_agrees_with_evaluation():
    # chi_t(x) = <delta_t, pi(x) delta_t> on the truncated representation:
    # two entirely different code paths, one exact number
    pres = Presentation("twisted-weyl", 2, THETA)
    rep = weyl_rep((5, 5), theta=THETA)
    rng = random.Random(2)
    for _ in range(25):
        p = tuple(rng.randint(0, 2) for _ in range(2))
        t = (rng.randint(2, 4), rng.randint(2, 4))
        x = pres.monomial(p, p)
        chi = Character(pres, t)
        M = matrix_of(rep, x)
        idx = rep.index[t]
        got = M[idx, idx]
        want = complex(evaluate(chi, x))
        assert abs(got - want) < 1e-9


def test_halves_are_refuted_with_exact_witnesses():
    pres = Presentation("weyl", 1)
    cert = is_positive(Character(pres, (Fraction(1, 2),)), depth=4)
    assert not cert.positive
    assert cert.witness == ((0,), (2,))
    assert cert.witness_value == Fraction(-1, 4)

    cert = is_positive(Character(pres, (Fraction(3, 2),)), depth=6)
    assert not cert.positive
    assert cert.witness_value == Fraction(-3, 8)


def test_integers_pass_the_sweep():
    pres = Presentation("weyl", 1)
    for t in range(5):
        assert is_positive(Character(pres, (t,)), depth=8).positive


def test_positive_window_orders_the_grid():
    pres = Presentation("weyl", 1)
    axis = [Fraction(0), Fraction(1, 2), Fraction(1)]
    out = positive_window(pres, [axis], depth=4)
    assert [t for t, _ in out] == [(Fraction(0),), (Fraction(1, 2),),
                                   (Fraction(1),)]
    verdicts = [c.positive for _, c in out]
    assert verdicts == [True, False, True]


def test_negative_integers_fail():
    pres = Presentation("weyl", 1)
    cert = is_positive(Character(pres, (-1,)), depth=4)
    assert not cert.positive
    assert cert.witness_value < 0


class TestPartialAction:
    def test_translation_on_the_lattice(self):
        pres = Presentation("weyl", 1)
        chi = Character(pres, (5,))
        assert partial_action((2,), chi).t == (Fraction(3),)
        assert partial_action((-3,), chi).t == (Fraction(8),)

    def test_domain_boundary(self):
        pres = Presentation("weyl", 1)
        assert in_domain((3,), Character(pres, (3,)))
        assert not in_domain((3,), Character(pres, (1,)))
        with pytest.raises(DomainError):
            partial_action((3,), Character(pres, (1,)))

    def test_lowering_always_defined(self):
        pres = Presentation("weyl", 1)
        for t in range(4):
            assert in_domain((-2,), Character(pres, (t,)))

    def test_custom_representative_agrees(self):
        # b = a (N + 1) is another degree-1 element with the same domain
        pres = Presentation("weyl", 1)
        b = pres.gen(0) * (pres.number_op(0) + pres.one())
        for t in (1, 2, 5):
            chi = Character(pres, (t,))
            assert partial_action((1,), chi, b=b).t == partial_action(
                (1,), chi).t

    def test_custom_representative_degree_checked(self):
        pres = Presentation("weyl", 1)
        with pytest.raises(DegreeError):
            partial_action((1,), Character(pres, (2,)), b=pres.number_op(0))

    def test_two_component_translation(self):
        pres = Presentation("twisted-weyl", 2, THETA)
        chi = Character(pres, (4, 2))
        out = partial_action((2, -1), chi)
        assert out.t == (Fraction(2), Fraction(3))

    def test_composition_stays_inside(self):
        pres = Presentation("weyl", 1)
        chi = Character(pres, (6,))
        step = partial_action((2,), chi)
        both = partial_action((1,), step)
        assert both.t == partial_action((3,), chi).t


def test_twisted_grouped_words_evaluate_consistently():
    # the mixed monomial (a1 a2)* (a1 a2) evaluates like N1 N2 up to the
    # exact phase bookkeeping, so the result is a plain product of integers
    pres = Presentation("twisted-weyl", 2, THETA)
    w = pres.gen(0) * pres.gen(1)
    x = w.star() * w
    for t in ((1, 1), (2, 3), (0, 4)):
        chi = Character(pres, t)
        assert evaluate_rational(chi, x) == t[0] * t[1]
