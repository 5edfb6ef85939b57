"""End-to-end acceptance gate, one test per criterion.

Each test is independent and prints one pass/fail line under pytest -v.
Tolerances are pinned here on purpose: exact checks assert equality of
Fractions or PhaseScalars, numeric checks carry their bound in the assert.
"""

import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np

from fellforge.algebra import Presentation, lambda_cocycle, rieffel_product, rieffel_star
from fellforge.characters import (
    Character,
    evaluate,
    evaluate_rational,
    in_domain,
    is_positive,
    partial_action,
)
from fellforge.fellbundle import build_fibres, extract_twist
from fellforge.groupoid import (
    OneCochain,
    check_cocycle,
    coboundary,
    matrix_unit_check,
    pair_groupoid,
    pair_isomorphism_check,
    transformation_groupoid,
    trivialize_pair,
)
from fellforge.operator_lab import (
    cayley,
    check_relations,
    graph_norm_directed_check,
    inducibility_character_check,
    inducibility_matrix_check,
    toeplitz_suite,
    uhf_block_check,
    weyl_rep,
)
from fellforge.phases import ONE_PHASE, Phase

THETA = ((Fraction(0), Fraction(1, 4)), (Fraction(-1, 4), Fraction(0)))


def test_01_quarter_grid_keeps_exactly_the_integers():
    pres = Presentation("weyl", 1)
    grid = [Fraction(k, 4) for k in range(41)]
    positive, refuted = [], []
    for t in grid:
        cert = is_positive(Character(pres, (t,)), depth=16)
        if cert.positive:
            positive.append(t)
        else:
            refuted.append((t, cert))
    assert positive == [Fraction(k) for k in range(11)]
    for t, cert in refuted:
        assert cert.witness_value < 0
        p, q = cert.witness
        w = pres.monomial(p, q)
        replay = evaluate_rational(Character(pres, (t,)), w.star() * w)
        assert replay == cert.witness_value


def _domain_predicate(x, k):
    return all(xj >= max(kj, 0) for xj, kj in zip(x, k))


def test_02_partial_action_translates_and_composes():
    # one axis: every k on the full [0, 20] window, both representatives
    pres1 = Presentation("weyl", 1)
    for k in range(-3, 4):
        b2 = pres1.canonical_rep((k,)) * (pres1.number_op(0) + pres1.one())
        for t in range(21):
            chi = Character(pres1, (t,))
            dom = in_domain((k,), chi)
            assert dom == _domain_predicate((t,), (k,))
            if not dom:
                continue
            assert partial_action((k,), chi).t == (Fraction(t - k),)
            assert partial_action((k,), chi, b=b2).t == (Fraction(t - k),)

    # two axes: exhaustive composition over |g|, |h| <= 3 via translation
    # tables; each table entry is the formula output at one window point,
    # and composites reach |g + h| <= 6 so those tables exist too
    pres2 = Presentation("twisted-weyl", 2, THETA)
    pts = list(itertools.product(range(21), repeat=2))
    ks = list(itertools.product(range(-3, 4), repeat=2))
    h2 = pres2.number_op(0) + pres2.one()
    mapped = {}
    for k in itertools.product(range(-6, 7), repeat=2):
        table = {}
        b2 = pres2.canonical_rep(k) * h2 if k in ks else None
        for x in pts:
            chi = Character(pres2, x)
            dom = in_domain(k, chi)
            assert dom == _domain_predicate(x, k)
            if not dom:
                continue
            want = tuple(Fraction(a - b) for a, b in zip(x, k))
            assert partial_action(k, chi).t == want
            # second representative, spot-checked on a diagonal slice
            if b2 is not None and x[0] == x[1]:
                assert partial_action(k, chi, b=b2).t == want
            table[x] = tuple(int(v) for v in want)
        mapped[k] = table

    checked = 0
    for g in ks:
        mg = mapped[g]
        for h in ks:
            gh = tuple(a + b for a, b in zip(g, h))
            mh, mgh = mapped[h], mapped[gh]
            for x, y in mh.items():
                z = mg.get(y)
                if z is None:
                    continue    # image left the tabulated window
                checked += 1
                assert mgh.get(x) == z
    assert checked > 500_000


def test_03_full_bound_groupoid_is_the_pair_groupoid():
    for M in (3, 5):
        T = transformation_groupoid((M,))
        assert T.verify().ok
        ok, why = pair_isomorphism_check(T)
        assert ok, why
        mu_ok, bad = matrix_unit_check(T)
        assert mu_ok, bad
        assert len(T.arrows) == (M + 1) ** 2


def _random_homogeneous(pres, g, rng):
    el = pres.zero()
    for _ in range(rng.randint(1, 2)):
        p = tuple(max(0, -gj) + rng.randint(0, 1) for gj in g)
        q = tuple(pj + gj for pj, gj in zip(p, g))
        coeff = Fraction(rng.randint(1, 4), rng.randint(1, 3))
        ph = Phase(Fraction(rng.randint(0, 7), 8))
        el = el + pres.monomial(p, q, coeff).scaled(ph)
    return el


def test_04_degree_corners_are_rank_one():
    rng = random.Random(404)
    cases = 0
    for pres, bounds in (
        (Presentation("weyl", 1), (5,)),
        (Presentation("twisted-weyl", 2, THETA), (3, 3)),
    ):
        m = pres.m
        degrees = itertools.product(range(-3, 4), repeat=m)
        pts = list(itertools.product(*(range(b + 1) for b in bounds)))
        for g in degrees:
            for x in pts:
                chi = Character(pres, x)
                a = _random_homogeneous(pres, g, rng)
                b = _random_homogeneous(pres, g, rng)
                lhs = evaluate(chi, a.star() * b) * evaluate(chi, b.star() * a)
                rhs = evaluate(chi, a.star() * a) * evaluate(chi, b.star() * b)
                assert lhs == rhs
                cases += 1
    assert cases >= 500


def test_05_untwisted_bundles_extract_no_twist():
    setups = [
        (1, (6,), 3),       # m, window bound per axis, max |degree|
        (2, (3, 3), 2),
        (3, (2, 2, 2), 1),
    ]
    for m, bounds, d in setups:
        pres = Presentation("weyl", m)
        degs = list(itertools.product(range(-d, d + 1), repeat=m))
        B = build_fibres(pres, bounds, degrees=degs)
        G = transformation_groupoid(bounds)
        vals = extract_twist(B, G, degrees=degs)
        assert vals, "no composable pairs in range"
        assert all(v == ONE_PHASE for v in vals.values())


def test_06_pair_cohomology_round_trips():
    rng = random.Random(606)
    runs = 0
    for n in range(2, 9):
        G = pair_groupoid(range(n))
        units = {G.unit(x) for x in G.objects}
        for _ in range(8):
            values = {a: Phase(Fraction(rng.randint(0, 23), 24))
                      for a in G.arrows if a not in units}
            psi = OneCochain(G, values)
            c = coboundary(psi)
            assert check_cocycle(c).ok
            psi2 = trivialize_pair(c)
            assert coboundary(psi2).values == c.values
            runs += 1
    assert runs >= 50

    # the extracted rational twist also trivializes, exactly
    B = build_fibres(Presentation("twisted-weyl", 2, THETA), (2, 2))
    phi = extract_twist(B)
    psi = trivialize_pair(phi)
    assert coboundary(psi).values == phi.values


def test_07_deformation_laws_hold_exactly():
    pres = Presentation("weyl", 2)
    lam_pres = Presentation("twisted-weyl", 2, THETA)
    rng = random.Random(707)

    def vec():
        return tuple(rng.randint(-4, 4) for _ in range(2))

    for _ in range(100):
        g, h, k = vec(), vec(), vec()
        gh = tuple(a + b for a, b in zip(g, h))
        hk = tuple(a + b for a, b in zip(h, k))
        lhs = lambda_cocycle(lam_pres, g, hk) * lambda_cocycle(lam_pres, h, k)
        rhs = lambda_cocycle(lam_pres, gh, k) * lambda_cocycle(lam_pres, g, h)
        assert lhs == rhs

    for _ in range(100):
        monos = [pres.monomial(
            tuple(rng.randint(0, 2) for _ in range(2)),
            tuple(rng.randint(0, 2) for _ in range(2)),
            Fraction(rng.randint(1, 3), rng.randint(1, 2)))
            for _ in range(3)]
        x, y, z = monos
        assert (rieffel_product(rieffel_product(x, y, lam_pres), z, lam_pres)
                == rieffel_product(x, rieffel_product(y, z, lam_pres), lam_pres))

    for _ in range(50):
        g = vec()
        pair = []
        for _ in range(2):
            p = tuple(max(0, -gj) + rng.randint(0, 1) for gj in g)
            q = tuple(pj + gj for pj, gj in zip(p, g))
            pair.append(pres.monomial(p, q, Fraction(rng.randint(1, 3))))
        a, b = pair
        assert rieffel_product(rieffel_star(a, lam_pres), b, lam_pres) \
            == a.star() * b


def test_08_truncated_relations_hold_on_the_interior():
    # exact phases: residual identically zero
    rep1 = weyl_rep((50,))
    out1 = check_relations(rep1)
    assert out1.ok and all(c["residual"] == 0 for c in out1.checks.values())

    rep2 = weyl_rep((10, 10), theta=THETA)
    out2 = check_relations(rep2)
    assert out2.ok and all(c["residual"] == 0 for c in out2.checks.values())

    # float phases: roundoff only
    rep2f = weyl_rep((10, 10), theta=[[0.0, 0.25], [-0.25, 0.0]])
    out2f = check_relations(rep2f, tol=1e-12)
    assert out2f.ok

    # pi(a_j)* pi(a_j) delta_k = k_j delta_k, exactly
    for rep in (rep1, rep2):
        for j in range(rep.m):
            word = ((j, True), (j, False))
            for point in rep.points:
                got = rep.apply_word(word, point)
                if point[j] == 0:
                    assert got is None
                else:
                    assert got == (point, ONE_PHASE, Fraction(point[j]), 1)


def test_09_graph_norm_remains_directed():
    pres = Presentation("weyl", 1)
    rep = weyl_rep((20,))
    N = pres.number_op(0)
    fam = [N, N * N, N + pres.one()]
    out = graph_norm_directed_check(rep, fam, n_samples=1000, seed=909)
    assert out.checks["directed_bound"]["violations"] == 0
    assert out.checks["directed_bound"]["max_ratio"] <= 1.25 + 1e-12


def test_10_shift_identities_at_two_hundred():
    started = time.perf_counter()
    out = toeplitz_suite(200, tol=1e-10)
    elapsed = time.perf_counter() - started
    assert out.ok
    assert out.checks["resolvent_identity"]["residual"] < 1e-10
    assert out.checks["modulus_identity"]["residual"] < 1e-10
    assert out.checks["cayley_equals_shift"]["residual"] < 1e-10
    assert elapsed < 5.0


def test_11_depth_two_blocks_factor_as_tensors():
    out = uhf_block_check((2, 3))
    assert out.ok
    assert out.checks["tensor_factorization"]["residual"] == 0.0


def test_12_gram_families_certify_inducibility():
    rng = np.random.default_rng(1212)
    pyrng = random.Random(1212)
    families = 0
    for pres, bounds in (
        (Presentation("weyl", 1), (6,)),
        (Presentation("twisted-weyl", 2, THETA), (4, 4)),
    ):
        rep = weyl_rep(bounds, theta=pres.theta if pres.m == 2 else None)
        for _ in range(50):
            g = tuple(pyrng.randint(-2, 2) for _ in range(pres.m))
            fam = []
            for _ in range(pyrng.randint(2, 3)):
                p = tuple(max(0, -gj) + pyrng.randint(0, 1) for gj in g)
                q = tuple(pj + gj for pj, gj in zip(p, g))
                xi = rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)
                fam.append((pres.monomial(p, q), xi))
            verdict = inducibility_matrix_check(rep, fam, tol=1e-10)
            assert verdict.positive, verdict.summary()
            families += 1
    assert families >= 100

    pres1 = Presentation("weyl", 1)
    chi = Character(pres1, (Fraction(1, 2),))
    out = inducibility_character_check(chi, [pres1.monomial((0,), (2,))])
    assert not out.positive
    assert out.witness == ((0,), Fraction(-1, 4))
