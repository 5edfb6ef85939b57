"""Normal forms, star, degrees, and the deformed product."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from fellforge.algebra import (
    DegreeError,
    Presentation,
    PresentationError,
    WordLimitError,
    lambda_cocycle,
    rieffel_product,
    rieffel_star,
)
from fellforge.phases import ONE_PHASE, Phase, PhaseScalar

THETA = ((Fraction(0), Fraction(1, 4)), (Fraction(-1, 4), Fraction(0)))


def weyl(m=1):
    return Presentation("weyl", m)


def twisted():
    return Presentation("twisted-weyl", 2, THETA)


# -- an independent reducer: same relations, random rewrite order ----------
#
# The package reduces at a fixed position; confluence means any order of
# rewrites must land on the same normal form.  This reducer picks violation
# sites at random and never shares code with the package.


def _violation_sites(word):
    sites = []
    for i in range(len(word) - 1):
        (j, js), (k, ks) = word[i], word[i + 1]
        if not js and ks:
            sites.append(i)          # plain before star
        elif js == ks and j > k:
            sites.append(i)          # indices out of order within a block
    return sites


def random_order_reduce(pres, word, rng):
    acc = {tuple(word): PhaseScalar.one()}
    while True:
        pending = [(w, i) for w in acc for i in _violation_sites(w)]
        if not pending:
            break
        w, i = rng.choice(pending)
        coeff = acc.pop(w)
        (j, js), (k, ks) = w[i], w[i + 1]
        swapped = w[:i] + (w[i + 1], w[i]) + w[i + 2:]
        out = []
        if not js and ks and j == k:
            # a a* = a* a + 1
            out.append((swapped, coeff))
            out.append((w[:i] + w[i + 2:], coeff))
        elif not js and ks:
            # a_k a_j* = lam_jk a_j* a_k  (star index first in theta)
            out.append((swapped, coeff * Phase(pres.theta[k][j])))
        else:
            # within a block: a_j a_k = lam_jk a_k a_j, same for stars
            out.append((swapped, coeff * Phase(pres.theta[j][k])))
        for w2, c2 in out:
            acc[w2] = acc.get(w2, PhaseScalar.zero()) + c2
            if acc[w2].is_zero():
                del acc[w2]
    return acc


def _as_key(m, word):
    p, q = [0] * m, [0] * m
    for (j, star) in word:
        if star:
            p[j] += 1
        else:
            q[j] += 1
    return tuple(p), tuple(q)


@pytest.mark.parametrize("pres_fn,m", [(weyl, 1), (twisted, 2)])
def test_normal_form_is_confluent(pres_fn, m):
    pres = pres_fn() if pres_fn is twisted else pres_fn(m)
    rng = random.Random(20260817 + m)
    letters = [(j, s) for j in range(m) for s in (False, True)]
    for _ in range(60):
        word = tuple(rng.choice(letters) for _ in range(rng.randint(0, 6)))
        got = pres.from_word(word).terms
        want = {
            _as_key(m, w): c
            for w, c in random_order_reduce(pres, word, rng).items()
        }
        assert got == want


def test_ccr_wick_two_letters():
    pres = weyl()
    # a^2 a*^2 = a*^2 a^2 + 4 a* a + 2
    lhs = pres.from_word(((0, False), (0, False), (0, True), (0, True)))
    rhs = (pres.monomial((2,), (2,))
           + pres.monomial((1,), (1,), 4)
           + pres.monomial((0,), (0,), 2))
    assert lhs == rhs


def test_ccr_single():
    pres = weyl()
    a, astar = pres.gen(0), pres.gen_star(0)
    assert a * astar == astar * a + pres.one()


def test_twisted_swap_is_the_presentation_row():
    pres = twisted()
    a1, a2 = pres.gen(0), pres.gen(1)
    lam12 = Phase(Fraction(1, 4))
    assert a1 * a2 == (a2 * a1).scaled(lam12)
    # and the mixed relation a1* a2 = lam12^{-1} a2 a1*
    assert pres.gen_star(0) * a2 == (a2 * pres.gen_star(0)).scaled(
        lam12.inverse())


def test_canonical_rep_shape():
    pres = twisted()
    el = pres.canonical_rep((2, -1))
    assert el.homogeneous_degree() == (2, -1)
    assert list(el.terms) == [((0, 1), (2, 0))]


def test_number_op_is_diagonal():
    pres = weyl()
    assert list(pres.number_op(0).terms) == [((1,), (1,))]


def test_homogeneous_degree_errors():
    pres = weyl()
    with pytest.raises(DegreeError):
        (pres.gen(0) + pres.one()).homogeneous_degree()
    with pytest.raises(DegreeError):
        pres.zero().homogeneous_degree()


def test_word_limit_guard():
    pres = Presentation("weyl", 1, word_limit=6)
    with pytest.raises(WordLimitError):
        pres.from_word(((0, False),) * 4 + ((0, True),) * 4)


def test_bad_presentations_rejected():
    with pytest.raises(PresentationError):
        Presentation("cuntz", 1)
    with pytest.raises(PresentationError):
        Presentation("weyl", 1, ((Fraction(1, 4),),))
    with pytest.raises(PresentationError):
        Presentation("twisted-weyl", 2,
                     ((0, Fraction(1, 4)), (Fraction(1, 4), 0)))


# -- degrees and the star --------------------------------------------------


@st.composite
def small_elements(draw, pres):
    n = draw(st.integers(1, 3))
    el = pres.zero()
    for _ in range(n):
        p = tuple(draw(st.integers(0, 2)) for _ in range(pres.m))
        q = tuple(draw(st.integers(0, 2)) for _ in range(pres.m))
        c = draw(st.fractions(min_value=-2, max_value=2, max_denominator=3))
        if c:
            el = el + pres.monomial(p, q, c)
    return el


PRES2 = twisted()


@settings(max_examples=40, deadline=None)
@given(small_elements(PRES2), small_elements(PRES2))
def test_star_is_antimultiplicative(x, y):
    assert (x * y).star() == y.star() * x.star()
    assert x.star().star() == x


@settings(max_examples=25, deadline=None)
@given(small_elements(PRES2), small_elements(PRES2), small_elements(PRES2))
def test_product_associates(x, y, z):
    assert (x * y) * z == x * (y * z)


# -- the deformation -------------------------------------------------------


def test_bicharacter_frozen_values():
    lp = twisted()
    assert lambda_cocycle(lp, (1, 0), (0, 1)) == ONE_PHASE
    assert lambda_cocycle(lp, (0, 1), (1, 0)) == Phase(Fraction(1, 4))


def test_bicharacter_is_biadditive():
    lp = twisted()
    rng = random.Random(7)
    for _ in range(50):
        g, h, k = (tuple(rng.randint(-3, 3) for _ in range(2))
                   for _ in range(3))
        hk = tuple(a + b for a, b in zip(h, k))
        assert (lambda_cocycle(lp, g, hk)
                == lambda_cocycle(lp, g, h) * lambda_cocycle(lp, g, k))
        gh = tuple(a + b for a, b in zip(g, h))
        assert (lambda_cocycle(lp, gh, k)
                == lambda_cocycle(lp, g, k) * lambda_cocycle(lp, h, k))


def test_deformed_product_trivial_when_untwisted():
    pres = weyl(2)
    x = pres.monomial((1, 0), (0, 1))
    y = pres.monomial((0, 1), (1, 1))
    assert rieffel_product(x, y) == x * y


def test_deformed_generators_commute_with_the_inverse_twist():
    # deforming the untwisted algebra by theta turns plain commutation into
    # a1 o a2 = lam12^{-1} (a2 o a1): the twist sits on the other side of
    # the presentation relation
    pres = weyl(2)
    lp = twisted()
    a1, a2 = pres.gen(0), pres.gen(1)
    left = rieffel_product(a1, a2, lp)
    right = rieffel_product(a2, a1, lp)
    assert left == right.scaled(Phase(Fraction(-1, 4)))


def test_deformed_star_reproduces_the_plain_pairing():
    pres = weyl(2)
    lp = twisted()
    rng = random.Random(11)
    for _ in range(30):
        g = tuple(rng.randint(-2, 2) for _ in range(2))
        pair = []
        for _ in range(2):
            p = tuple(max(0, -gj) + rng.randint(0, 1) for gj in g)
            q = tuple(pj + gj for pj, gj in zip(p, g))
            pair.append(pres.monomial(p, q, Fraction(rng.randint(1, 3), 2)))
        a, b = pair
        assert rieffel_product(rieffel_star(a, lp), b, lp) == a.star() * b


def test_deformed_product_associates_on_monomials():
    pres = weyl(2)
    lp = twisted()
    rng = random.Random(13)
    for _ in range(30):
        monos = []
        for _ in range(3):
            p = tuple(rng.randint(0, 2) for _ in range(2))
            q = tuple(rng.randint(0, 2) for _ in range(2))
            monos.append(pres.monomial(p, q, Fraction(rng.randint(1, 3))))
        x, y, z = monos
        assert (rieffel_product(rieffel_product(x, y, lp), z, lp)
                == rieffel_product(x, rieffel_product(y, z, lp), lp))
