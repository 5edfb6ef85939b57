"""Graded fibre bundles over finite windows of lattice characters.

Each degree g gets a one-dimensional fibre over every window point where the
canonical degree-g monomial has nonzero squared norm chi(s* s).  On top of
that skeleton this module computes inner products of simple tensors, the
transition phase between two representatives of the same fibre, the twist
2-cocycle living on the translation groupoid of the window, bicharacter
deformations of the whole bundle, and the diagonal inner trivialization
identities of those deformations.

Everything is exact: norms are positive rationals, phases are roots of
unity, and every verification is an equality of exact scalars.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .algebra import AlgebraElement, DegreeError, Presentation, _degree
from .characters import Character, evaluate
from .groupoid import FiniteGroupoid, TwoCocycle, transformation_groupoid
from .phases import ONE_PHASE, Phase, PhaseScalar


class BundleError(ValueError):
    pass


def _bichar(theta, g, h) -> Phase:
    # same double sum as algebra.lambda_cocycle, but off a bare matrix so a
    # bundle can accumulate deformations without inventing presentations
    angle = Fraction(0)
    m = len(theta)
    for j in range(m):
        for k in range(j + 1, m):
            angle += theta[j][k] * g[k] * h[j]
    return Phase(angle)


def _check_theta(theta, m):
    rows = tuple(tuple(Fraction(x) for x in row) for row in theta)
    if len(rows) != m or any(len(r) != m for r in rows):
        raise BundleError(f"theta must be {m}x{m}")
    for j in range(m):
        if rows[j][j] != 0:
            raise BundleError("theta diagonal must vanish")
        for k in range(m):
            if rows[j][k] != -rows[k][j]:
                raise BundleError("theta must be antisymmetric")
    return rows


def _zero_theta(m):
    return tuple((Fraction(0),) * m for _ in range(m))


@dataclass
class FellFibre:
    """One degree's worth of bundle data: a representative and its norms.

    ``support`` maps window points x to the squared norm chi_x(rep* rep),
    always a strictly positive rational.  Points where the norm vanishes are
    absent; a fibre with empty support still exists as an object so sweeps
    over degrees see it.
    """

    degree: tuple
    rep: AlgebraElement
    support: dict

    def norm_sq(self, x) -> Fraction:
        try:
            return self.support[tuple(x)]
        except KeyError:
            raise BundleError(f"point {x!r} outside support of degree {self.degree}") from None

    def to_json(self) -> dict:
        return {
            "degree": list(self.degree),
            "representative": self.rep.to_json(),
            "points": [
                {"point": list(x), "norm_sq": str(self.support[x])}
                for x in sorted(self.support)
            ],
        }


@dataclass
class Section:
    """Coefficients relative to a fibre's representative, per window point."""

    degree: tuple
    coeffs: dict  # point -> PhaseScalar

    def inner(self, other: "Section", fibre: FellFibre) -> dict:
        """Pointwise <self, other> = conj(c1) c2 chi(rep* rep), per point."""
        if self.degree != other.degree or self.degree != fibre.degree:
            raise DegreeError("sections and fibre must share one degree")
        out = {}
        for x in set(self.coeffs) & set(other.coeffs):
            if x not in fibre.support:
                raise BundleError(f"section supported at {x!r} outside the fibre")
            v = self.coeffs[x].conjugate() * other.coeffs[x]
            out[x] = v.scaled(fibre.support[x])
        return out


class FellBundle:
    """Fibres for a set of degrees over one window, plus a deformation state.

    ``deform_theta`` accumulates bicharacter deformations; reps and norms are
    shared with the undeformed bundle because equal-degree inner products are
    unchanged by the deformation (a-dagger * b = a* b).  Only product and
    involution phases pick up Lambda factors.
    """

    def __init__(self, pres: Presentation, bounds, fibres: dict,
                 deform_theta=None):
        self.pres = pres
        self.bounds = tuple(int(b) for b in bounds)
        self.fibres = dict(fibres)
        self.deform_theta = (
            _check_theta(deform_theta, pres.m)
            if deform_theta is not None else _zero_theta(pres.m)
        )

    @property
    def degrees(self):
        return sorted(self.fibres)

    def fibre(self, g) -> FellFibre:
        try:
            return self.fibres[tuple(g)]
        except KeyError:
            raise BundleError(f"no fibre of degree {tuple(g)}") from None

    def is_deformed(self) -> bool:
        return any(any(x != 0 for x in row) for row in self.deform_theta)

    def lam(self, g, h) -> Phase:
        """Deformation phase Lambda(g, h) from the accumulated theta."""
        return _bichar(self.deform_theta, tuple(g), tuple(h))

    def product_rep(self, g, h) -> AlgebraElement:
        """The bundle product of the chosen representatives, degree g + h."""
        w = self.fibre(g).rep * self.fibre(h).rep
        return w.scaled(self.lam(g, h))

    def star_rep(self, g) -> AlgebraElement:
        """The bundle involution of the degree-g representative."""
        neg = tuple(-x for x in g)
        return self.fibre(g).rep.star().scaled(self.lam(neg, g).conjugate())

    def to_json(self) -> dict:
        return {
            "bounds": list(self.bounds),
            "deform_theta": [[str(x) for x in row] for row in self.deform_theta],
            "fibres": [self.fibres[g].to_json() for g in self.degrees],
        }


def window_lattice(bounds):
    return [tuple(p) for p in itertools.product(*(range(b + 1) for b in bounds))]


def build_fibres(pres: Presentation, bounds, degrees=None,
                 section_choice: Optional[Callable] = None) -> FellBundle:
    """Construct the fibres of every requested degree over the window.

    ``degrees`` defaults to the full range prod [-bounds_j, bounds_j], which
    is closed under the compositions the twist extraction needs.  A custom
    ``section_choice(g)`` may replace the canonical representative for g != 0
    with any nonzero homogeneous degree-g element whose squared norm stays a
    positive rational on the window; degree 0 always keeps the identity so
    unit-pair twist values are normalized.
    """
    bounds = tuple(int(b) for b in bounds)
    if len(bounds) != pres.m or any(b < 0 for b in bounds):
        raise BundleError("window bounds must be nonnegative, one per generator")
    if degrees is None:
        degrees = itertools.product(*(range(-b, b + 1) for b in bounds))
    points = window_lattice(bounds)
    chis = {x: Character(pres, x) for x in points}
    fibres = {}
    for g in degrees:
        g = tuple(int(x) for x in g)
        if g == (0,) * pres.m:
            rep = pres.one()
        elif section_choice is not None:
            rep = section_choice(g)
            if not isinstance(rep, AlgebraElement) or rep.is_zero():
                raise BundleError(f"section choice for {g} is not a nonzero element")
            if rep.homogeneous_degree() != g:
                raise BundleError(f"section choice for {g} has the wrong degree")
        else:
            rep = pres.canonical_rep(g)
        gram = rep.star() * rep
        support = {}
        for x in points:
            val = evaluate(chis[x], gram)
            if val.is_zero():
                continue
            if not val.is_rational():
                raise BundleError(
                    f"squared norm at {x} of degree {g} is not rational: {val!r}"
                )
            nsq = val.as_fraction()
            if nsq < 0:
                raise BundleError(
                    f"negative squared norm {nsq} at {x}; character not positive"
                )
            support[x] = nsq
        fibres[g] = FellFibre(g, rep, support)
    return FellBundle(pres, bounds, fibres)


def fibre_inner_product(s1, s2, chi: Character) -> PhaseScalar:
    """<a1 (x) b1, a2 (x) b2> = conj(b1) chi(a1* a2) b2.

    The a_i must be homogeneous; distinct degrees are orthogonal (exact 0).
    """
    a1, b1 = s1
    a2, b2 = s2
    if a1.is_zero() or a2.is_zero():
        return PhaseScalar.zero()
    g1 = a1.homogeneous_degree()
    g2 = a2.homogeneous_degree()
    if g1 != g2:
        return PhaseScalar.zero()
    val = evaluate(chi, a1.star() * a2)
    b1 = b1 if isinstance(b1, PhaseScalar) else _as_scalar(b1)
    b2 = b2 if isinstance(b2, PhaseScalar) else _as_scalar(b2)
    return b1.conjugate() * val * b2


def _as_scalar(c) -> PhaseScalar:
    if isinstance(c, Phase):
        return PhaseScalar.from_phase(c)
    return PhaseScalar.from_rational(Fraction(c))


def transition_phase(g, chi: Character, a: AlgebraElement,
                     b: AlgebraElement) -> Phase:
    """The unit scalar relating two representatives of one fibre line at chi.

    Both elements must be homogeneous of degree g with nonzero squared norm
    at chi; the rank-one identity |chi(a* b)|^2 = chi(a* a) chi(b* b) is
    enforced before the phase of chi(b* a) is returned, so a genuine failure
    of one-dimensionality raises instead of producing a junk phase.
    """
    g = tuple(int(x) for x in g)
    for name, el in (("a", a), ("b", b)):
        if el.is_zero() or el.homogeneous_degree() != g:
            raise DegreeError(f"{name} must be homogeneous of degree {g}")
    na = evaluate(chi, a.star() * a)
    nb = evaluate(chi, b.star() * b)
    if na.is_zero() or nb.is_zero():
        raise BundleError(f"zero-norm representative at {chi!r}")
    cross = evaluate(chi, b.star() * a)
    if cross * cross.conjugate() != na * nb:
        raise BundleError(
            f"rank-one identity fails at {chi!r}: |chi(b*a)|^2 != chi(a*a) chi(b*b)"
        )
    return cross.phase_part()


def extract_twist(bundle: FellBundle, G: FiniteGroupoid | None = None,
                  degrees=None):
    """Read the twist off the chosen representatives, one composable pair at
    a time.

    For arrows (g1, x - g2) o (g2, x) the value is the phase of
    chi_x(s_{g1+g2}* s_{g1} s_{g2}), times the deformation bicharacter
    Lambda(g1, g2) when the bundle has been deformed.  The degree-0 part
    u = s_{g1+g2}* s_{g1} s_{g2} is cached per degree pair and evaluated at
    each source point.

    With ``degrees`` the extraction is restricted to composable pairs whose
    translations g1, g2 and g1 + g2 all lie in that set, and a plain
    pair -> Phase dict comes back; without it every composable pair of G is
    covered and the result is a TwoCocycle.
    """
    if G is None:
        G = transformation_groupoid(bundle.bounds)
    allowed = None if degrees is None else {tuple(g) for g in degrees}
    cache: dict = {}
    values = {}
    for (a, b) in G.composable_pairs():
        g1, _ = a
        g2, x = b
        g12 = tuple(u + v for u, v in zip(g1, g2))
        if allowed is not None and not (
                g1 in allowed and g2 in allowed and g12 in allowed):
            continue
        key = (g1, g2)
        if key not in cache:
            u = bundle.fibre(g12).rep.star() * (
                bundle.fibre(g1).rep * bundle.fibre(g2).rep)
            cache[key] = (u, bundle.lam(g1, g2))
        u, lam = cache[key]
        val = evaluate(Character(bundle.pres, x), u)
        if val.is_zero():
            raise BundleError(
                f"representative product vanishes at {x} for degrees {g1}, {g2}"
            )
        values[(a, b)] = val.phase_part() * lam
    if allowed is not None:
        return values
    return TwoCocycle(G, values)


@dataclass
class BundleReport:
    ok: bool
    product_ok: bool
    involution_ok: bool
    positivity_ok: bool
    counterexample: Optional[tuple] = None
    checked: dict = field(default_factory=dict)

    def summary(self) -> str:
        if self.ok:
            return (
                f"fell axioms hold: {self.checked.get('products', 0)} products, "
                f"{self.checked.get('involutions', 0)} involutions, "
                f"{self.checked.get('norms', 0)} norms"
            )
        return f"fell axioms fail: {self.counterexample!r}"


def check_fell_axioms(bundle: FellBundle, override_products=None) -> BundleReport:
    """Pointwise verification that the fibre family is multiplicative.

    Products of representatives must be homogeneous of the summed degree and
    proportional to the target representative at every window point (rank-one
    cross check, exact); involutions must land in the opposite degree the
    same way; squared norms must be positive.  ``override_products`` maps a
    degree pair (g, h) to a replacement product element and exists so tests
    can feed a corrupted table and watch the report fail.
    """
    override_products = override_products or {}
    points = window_lattice(bundle.bounds)
    chis = {x: Character(bundle.pres, x) for x in points}
    degrees = bundle.degrees
    degree_set = set(degrees)
    counts = {"products": 0, "involutions": 0, "norms": 0}

    def fail(kind, detail):
        return BundleReport(False, kind != "product", kind != "involution",
                            kind != "positivity", counterexample=(kind,) + detail,
                            checked=counts)

    for g in degrees:
        for x, nsq in bundle.fibre(g).support.items():
            counts["norms"] += 1
            if nsq <= 0:
                return fail("positivity", (g, x, nsq))

    for g in degrees:
        star = bundle.star_rep(g)
        neg = tuple(-u for u in g)
        if neg not in degree_set:
            continue
        counts["involutions"] += 1
        if star.is_zero() or star.homogeneous_degree() != neg:
            return fail("involution", (g, "degree", sorted(star.degrees())))
        bad = _line_mismatch(bundle, chis, neg, star)
        if bad is not None:
            return fail("involution", (g, "line", bad))

    for g in degrees:
        for h in degrees:
            gh = tuple(u + v for u, v in zip(g, h))
            if gh not in degree_set:
                continue
            w = override_products.get((g, h))
            if w is None:
                w = bundle.product_rep(g, h)
            counts["products"] += 1
            if w.is_zero():
                continue
            degs = w.degrees()
            if degs != {gh}:
                return fail("product", (g, h, "degree", sorted(degs)))
            bad = _line_mismatch(bundle, chis, gh, w)
            if bad is not None:
                return fail("product", (g, h, "line", bad))
    return BundleReport(True, True, True, True, checked=counts)


def _line_mismatch(bundle, chis, g, w):
    """First window point where w is not in the line of the degree-g rep.

    Where the fibre has support: Cauchy-Schwarz equality
    |chi(s* w)|^2 = chi(s* s) chi(w* w), exact.  Where it has none, the
    fibre is zero-dimensional and w itself must vanish: chi(w* w) = 0.
    """
    s = bundle.fibre(g).rep
    cross_el = s.star() * w
    gram_el = w.star() * w
    for x, chi in chis.items():
        nw = evaluate(chi, gram_el)
        ns = bundle.fibre(g).support.get(x)
        if ns is None:
            if not nw.is_zero():
                return (x, "escapes zero fibre", repr(nw))
            continue
        cross = evaluate(chi, cross_el)
        lhs = cross * cross.conjugate()
        rhs = nw.scaled(ns)
        if lhs != rhs:
            return (x, repr(lhs), repr(rhs))
    return None


def deform_bundle(bundle: FellBundle, theta) -> FellBundle:
    """Add a bicharacter deformation.  Norms and supports are untouched;
    deforming by theta and then -theta is the identity on the nose."""
    rows = _check_theta(theta, bundle.pres.m)
    acc = tuple(
        tuple(a + b for a, b in zip(r1, r2))
        for r1, r2 in zip(bundle.deform_theta, rows)
    )
    return FellBundle(bundle.pres, bundle.bounds, bundle.fibres, acc)


@dataclass
class InnerTrivialization:
    """Diagonal phase family implementing the deformation from inside.

    ``diagonals[k][y]`` is the unit D_k(y) = Lambda(y, k) (or a caller
    supplied diagonal, which the constructor path verifies before
    accepting).  The defining identity, checked exactly over the window, is

        D_k(y) D_l(y + k) = Lambda(k, l) D_{k+l}(y)

    which is the multiplicativity of the fibre maps psi_k written on
    representatives; the maps themselves multiply a section by the
    conjugate diagonal at the target point, so they preserve every norm.
    """

    theta: tuple
    bounds: tuple
    degrees: list
    diagonals: dict

    def lam(self, k, l) -> Phase:
        return _bichar(self.theta, tuple(k), tuple(l))

    def apply(self, k, section: Section) -> Section:
        """psi_k: multiply by the conjugate diagonal at the target point."""
        k = tuple(k)
        diag = self.diagonals[k]
        out = {}
        for x, c in section.coeffs.items():
            tgt = tuple(xi - ki for xi, ki in zip(x, k))
            out[x] = c * diag[tgt].conjugate() if tgt in diag else c
        return Section(k, out)

    def check(self):
        """Exhaustive multiplicativity check; None, or the first failure."""
        in_window = {tuple(y) for y in window_lattice(self.bounds)}
        degree_set = set(self.degrees)
        for k in self.degrees:
            for l in self.degrees:
                kl = tuple(a + b for a, b in zip(k, l))
                if kl not in degree_set:
                    continue
                lam = self.lam(k, l)
                for y in in_window:
                    yk = tuple(a + b for a, b in zip(y, k))
                    if yk not in in_window:
                        continue
                    lhs = self.diagonals[k][y] * self.diagonals[l][yk]
                    rhs = lam * self.diagonals[kl][y]
                    if lhs != rhs:
                        return (k, l, y, lhs, rhs)
        return None


def inner_trivialization(theta, bounds, degrees=None,
                         diagonal: Optional[Callable] = None) -> InnerTrivialization:
    """Build the diagonal family D_k(y) = Lambda(y, k) for the given twist.

    A custom ``diagonal(y, k)`` is accepted only if it satisfies the same
    multiplicativity identity; anything that is not of bicharacter shape
    (for instance a generic 2-cocycle in y) is rejected with the failing
    triple in the message.
    """
    m = len(bounds)
    rows = _check_theta(theta, m)
    bounds = tuple(int(b) for b in bounds)
    if degrees is None:
        degrees = [tuple(g) for g in
                   itertools.product(*(range(-b, b + 1) for b in bounds))]
    else:
        degrees = [tuple(int(x) for x in g) for g in degrees]
    points = window_lattice(bounds)
    diags = {}
    for k in degrees:
        if diagonal is None:
            diags[k] = {y: _bichar(rows, y, k) for y in points}
        else:
            diags[k] = {y: diagonal(y, k) for y in points}
            if any(not isinstance(p, Phase) for p in diags[k].values()):
                raise BundleError("custom diagonal must produce Phase values")
    triv = InnerTrivialization(rows, bounds, degrees, diags)
    bad = triv.check()
    if bad is not None:
        k, l, y, lhs, rhs = bad
        raise BundleError(
            f"diagonal is not multiplicative at k={k}, l={l}, y={y}: "
            f"{lhs!r} != {rhs!r}"
        )
    return triv
