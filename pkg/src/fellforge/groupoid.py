"""Finite groupoids, exact 2-cocycles, trivialization, twisted convolution.

Arrows are opaque hashable labels with source/target maps; composition is a
finite table.  Pair groupoids use arrows (x, y) with target x and source y,
composing as (x, y)(y, z) = (x, z).  Transformation groupoids of the lattice
translation action use arrows (g, x) with source x and target x - g.

Cocycle conventions (multiplicative, values in rational phases):

    identity     c(a, bc) c(b, c) = c(ab, c) c(a, b)
    coboundary   (d psi)(a, b) = psi(b) psi(ab)^{-1} psi(a)
    1-coboundary (d chi)(a) = chi(s(a)) chi(t(a))^{-1}

Pair-groupoid cocycles trivialize exactly: psi(a) = c(base -> t(a), a) with
the lexicographically smallest object as base.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .phases import ONE_PHASE, Phase, PhaseScalar


class GroupoidError(ValueError):
    pass


class FiniteGroupoid:
    """Explicit finite groupoid: objects, arrows, and a composition table."""

    def __init__(self, objects, arrows, source, target, compose, inverse, unit,
                 meta: dict | None = None):
        self.objects = tuple(sorted(objects))
        self.arrows = tuple(arrows)
        self.source = dict(source)
        self.target = dict(target)
        self._comp = dict(compose)
        self._inv = dict(inverse)
        self._unit = dict(unit)
        self.meta = dict(meta or {})
        self._by_ts: dict | None = None

    # -- structure maps --

    def s(self, a):
        return self.source[a]

    def t(self, a):
        return self.target[a]

    def unit(self, x):
        return self._unit[x]

    def inverse(self, a):
        return self._inv[a]

    def is_composable(self, a, b) -> bool:
        return (a, b) in self._comp

    def compose(self, a, b):
        try:
            return self._comp[(a, b)]
        except KeyError:
            raise GroupoidError(f"arrows not composable: {a!r}, {b!r}") from None

    def composable_pairs(self):
        return self._comp.keys()

    def composable_triples(self):
        by_target: dict = {}
        for b in self.arrows:
            by_target.setdefault(self.target[b], []).append(b)
        for a, b in self._comp:
            for c in by_target.get(self.source[b], ()):
                yield a, b, c

    def arrow_by_ts(self, tgt, src):
        """The unique arrow target <- source, for pair-like groupoids."""
        if self._by_ts is None:
            table: dict = {}
            for a in self.arrows:
                table.setdefault((self.target[a], self.source[a]), []).append(a)
            self._by_ts = table
        hits = self._by_ts.get((tgt, src), [])
        if len(hits) != 1:
            raise GroupoidError(
                f"{len(hits)} arrows {tgt!r} <- {src!r}; groupoid is not principal"
            )
        return hits[0]

    # -- axioms --

    def verify(self) -> "GroupoidReport":
        failures = []

        def fail(kind, detail):
            failures.append((kind, detail))

        for x in self.objects:
            u = self._unit.get(x)
            if u is None or self.source[u] != x or self.target[u] != x:
                fail("unit", x)
        for a in self.arrows:
            inv = self._inv.get(a)
            if inv is None:
                fail("inverse-missing", a)
                continue
            if self.source[inv] != self.target[a] or self.target[inv] != self.source[a]:
                fail("inverse-maps", a)
            elif (self._comp.get((a, inv)) != self._unit[self.target[a]]
                  or self._comp.get((inv, a)) != self._unit[self.source[a]]):
                fail("inverse-law", a)
            u_t, u_s = self._unit[self.target[a]], self._unit[self.source[a]]
            if self._comp.get((u_t, a)) != a or self._comp.get((a, u_s)) != a:
                fail("unit-law", a)
        for (a, b), ab in self._comp.items():
            if self.source[a] != self.target[b]:
                fail("composability", (a, b))
            elif self.source[ab] != self.source[b] or self.target[ab] != self.target[a]:
                fail("compose-maps", (a, b))
        for a, b, c in self.composable_triples():
            if self._comp[(self._comp[(a, b)], c)] != self._comp[(a, self._comp[(b, c)])]:
                fail("associativity", (a, b, c))
                break
        return GroupoidReport(not failures, failures[:10], len(self.objects),
                              len(self.arrows), self.meta)

    def is_pair_like(self):
        """Exactly one arrow between every ordered pair of objects."""
        counts: dict = {}
        for a in self.arrows:
            counts[(self.target[a], self.source[a])] = (
                counts.get((self.target[a], self.source[a]), 0) + 1
            )
        for x in self.objects:
            for y in self.objects:
                n = counts.get((x, y), 0)
                if n != 1:
                    return False, f"{n} arrows {x!r} <- {y!r}"
        return True, None


@dataclass
class GroupoidReport:
    ok: bool
    failures: list
    n_objects: int
    n_arrows: int
    meta: dict = field(default_factory=dict)


def pair_groupoid(points) -> FiniteGroupoid:
    pts = sorted(points)
    arrows = [(x, y) for x in pts for y in pts]
    compose = {}
    for x, y in arrows:
        for z in pts:
            compose[((x, y), (y, z))] = (x, z)
    return FiniteGroupoid(
        pts, arrows,
        source={a: a[1] for a in arrows},
        target={a: a[0] for a in arrows},
        compose=compose,
        inverse={(x, y): (y, x) for x, y in arrows},
        unit={x: (x, x) for x in pts},
        meta={"kind": "pair"},
    )


def window_points(bounds) -> list:
    """Lattice points of prod_j {0..bounds_j}, lexicographic."""
    return [tuple(p) for p in itertools.product(*(range(b + 1) for b in bounds))]


def transformation_groupoid(bounds, group_bound=None) -> FiniteGroupoid:
    """Lattice translation groupoid on the window prod {0..bounds_j}.

    Arrows (g, x) have source x and target x - g, both in the window.  The
    default group bound (the window size itself) admits every such arrow.
    A smaller group_bound only seeds the arrow set: a bounded set of
    translations is not closed under composition, so the subgroupoid the
    seeds generate is returned and the overshoot count goes in meta.

    Arrows whose lattice domain condition x >= max(g, 0) holds but whose
    target escapes the window are recorded in meta as dropped; they witness
    that the window restricts the lattice action.
    """
    m = len(bounds)
    if group_bound is None:
        group_bound = tuple(bounds)
    if len(group_bound) != m:
        raise GroupoidError("group_bound must match window dimension")
    pts = window_points(bounds)
    in_window = set(pts)

    # union-find over window points linked by seed translations
    parent = {x: x for x in pts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    dropped = []
    for g in itertools.product(*(range(-gb, gb + 1) for gb in group_bound)):
        for x in pts:
            tgt = tuple(xi - gi for xi, gi in zip(x, g))
            if tgt in in_window:
                rx, rt = find(x), find(tgt)
                if rx != rt:
                    parent[rx] = rt
            elif all(xi >= max(gi, 0) for xi, gi in zip(x, g)):
                dropped.append((g, x))

    arrows = []
    n_seed = 0
    for x in pts:
        for y in pts:
            if find(x) != find(y):
                continue
            g = tuple(xi - yi for xi, yi in zip(x, y))  # arrow x -> y
            arrows.append((g, x))
            if all(abs(gi) <= gb for gi, gb in zip(g, group_bound)):
                n_seed += 1
    by_target: dict = {}
    for (h, x) in arrows:
        tgt = tuple(xi - hi for xi, hi in zip(x, h))
        by_target.setdefault(tgt, []).append((h, x))
    compose = {}
    for (g, y) in arrows:
        for (h, x) in by_target.get(y, ()):
            gh = tuple(gi + hi for gi, hi in zip(g, h))
            compose[((g, y), (h, x))] = (gh, x)
    zero = (0,) * m
    inverse = {}
    for (g, x) in arrows:
        tgt = tuple(xi - gi for xi, gi in zip(x, g))
        inverse[(g, x)] = (tuple(-gi for gi in g), tgt)
    full_bound = all(gb >= b for gb, b in zip(group_bound, bounds))
    return FiniteGroupoid(
        pts, arrows,
        source={a: a[1] for a in arrows},
        target={(g, x): tuple(xi - gi for xi, gi in zip(x, g)) for (g, x) in arrows},
        compose=compose,
        inverse=inverse,
        unit={x: (zero, x) for x in pts},
        meta={
            "kind": "transformation",
            "restriction_dropped_arrows": dropped,
            "full_bound": full_bound,
            "seed_bound": tuple(group_bound),
            "generated_beyond_seed": len(arrows) - n_seed,
        },
    )


def equivalence_groupoid(objects, partition) -> FiniteGroupoid:
    """Disjoint union of pair groupoids over the classes of a partition."""
    objs = sorted(objects)
    seen = set()
    for cls in partition:
        for x in cls:
            if x in seen:
                raise GroupoidError(f"object {x!r} in two classes")
            seen.add(x)
    if seen != set(objs):
        raise GroupoidError("partition does not cover the objects")
    arrows = []
    compose = {}
    for cls in partition:
        cl = sorted(cls)
        arrows.extend((x, y) for x in cl for y in cl)
        for x in cl:
            for y in cl:
                for z in cl:
                    compose[((x, y), (y, z))] = (x, z)
    return FiniteGroupoid(
        objs, arrows,
        source={a: a[1] for a in arrows},
        target={a: a[0] for a in arrows},
        compose=compose,
        inverse={(x, y): (y, x) for (x, y) in arrows},
        unit={x: (x, x) for x in objs},
        meta={"kind": "equivalence", "classes": [sorted(c) for c in partition]},
    )


# -- cocycles and cochains --


class TwoCocycle:
    """Phase-valued function on composable pairs."""

    def __init__(self, G: FiniteGroupoid, values: dict):
        self.G = G
        self.values = dict(values)
        missing = set(G.composable_pairs()) - set(self.values)
        if missing:
            raise GroupoidError(f"{len(missing)} composable pairs without a value")

    @classmethod
    def trivial(cls, G: FiniteGroupoid) -> "TwoCocycle":
        return cls(G, {pair: ONE_PHASE for pair in G.composable_pairs()})

    @classmethod
    def from_function(cls, G: FiniteGroupoid, f: Callable) -> "TwoCocycle":
        return cls(G, {(a, b): f(a, b) for (a, b) in G.composable_pairs()})

    def __call__(self, a, b) -> Phase:
        return self.values[(a, b)]


class OneCochain:
    """Phase-valued function on arrows, equal to 1 on units."""

    def __init__(self, G: FiniteGroupoid, values: dict):
        self.G = G
        self.values = dict(values)
        for x in G.objects:
            u = G.unit(x)
            v = self.values.setdefault(u, ONE_PHASE)
            if v != ONE_PHASE:
                raise GroupoidError(f"cochain not normalized at unit of {x!r}")

    def __call__(self, a) -> Phase:
        return self.values[a]


@dataclass
class CocycleReport:
    ok: bool
    n_triples: int
    failure: Optional[tuple] = None       # (a, b, c, lhs, rhs)
    unit_failure: Optional[tuple] = None  # (pair, value)

    def summary(self) -> str:
        if self.ok:
            return f"cocycle identity holds on {self.n_triples} triples"
        if self.unit_failure:
            return f"not normalized: {self.unit_failure}"
        a, b, c, lhs, rhs = self.failure
        return f"fails at ({a!r}, {b!r}, {c!r}): {lhs!r} != {rhs!r}"


def check_cocycle(c: TwoCocycle) -> CocycleReport:
    """Exhaustive check of normalization and the cocycle identity."""
    G = c.G
    for a in G.arrows:
        for pair in ((G.unit(G.t(a)), a), (a, G.unit(G.s(a)))):
            if c(*pair) != ONE_PHASE:
                return CocycleReport(False, 0, unit_failure=(pair, c(*pair)))
    n = 0
    for a, b, g in G.composable_triples():
        n += 1
        lhs = c(a, G.compose(b, g)) * c(b, g)
        rhs = c(G.compose(a, b), g) * c(a, b)
        if lhs != rhs:
            return CocycleReport(False, n, failure=(a, b, g, lhs, rhs))
    return CocycleReport(True, n)


def coboundary(psi: OneCochain) -> TwoCocycle:
    G = psi.G
    values = {
        (a, b): psi(b) * psi(G.compose(a, b)).inverse() * psi(a)
        for (a, b) in G.composable_pairs()
    }
    return TwoCocycle(G, values)


def trivialize_pair(c: TwoCocycle, base=None) -> OneCochain:
    """Solve d psi = c on a pair-like groupoid, exactly.

    psi(a) := c(base -> t(a), a); base defaults to the smallest object.
    The result is verified before returning.
    """
    G = c.G
    ok, why = G.is_pair_like()
    if not ok:
        raise GroupoidError(f"not a pair groupoid: {why}")
    if base is None:
        base = G.objects[0]
    values = {}
    for a in G.arrows:
        anchor = G.arrow_by_ts(base, G.t(a))
        values[a] = c(anchor, a)
    psi = OneCochain(G, values)
    bad = _coboundary_mismatch(psi, c)
    if bad is not None:
        raise GroupoidError(f"trivialization failed at {bad!r}; input is not a cocycle")
    return psi


def _coboundary_mismatch(psi: OneCochain, c: TwoCocycle):
    G = psi.G
    for (a, b) in G.composable_pairs():
        if psi(b) * psi(G.compose(a, b)).inverse() * psi(a) != c(a, b):
            return (a, b)
    return None


def trivialize_exhaustion(partitions, c: TwoCocycle):
    """Trivialize along a nested filtration of equivalence relations.

    ``partitions`` lists the stages R_0 <= R_1 <= ... (each a partition of the
    same objects, each class of R_d contained in a class of R_{d+1}); ``c``
    is a cocycle on the equivalence groupoid of the last stage.  Returns
    (psi, stages) with d(psi) = c on the deepest stage and psi restricting on
    R_d to the stage-d solution, all exact.
    """
    if not partitions:
        raise GroupoidError("empty filtration")
    objs = c.G.objects
    stage_Gs = [equivalence_groupoid(objs, part) for part in partitions]
    deep_arrows = set(stage_Gs[-1].arrows)
    for d, G_d in enumerate(stage_Gs):
        if not set(G_d.arrows) <= deep_arrows:
            raise GroupoidError(f"stage {d} is not contained in the deepest stage")
    for d in range(len(stage_Gs) - 1):
        cls_of = {}
        for i, cls in enumerate(partitions[d + 1]):
            for x in cls:
                cls_of[x] = i
        for cls in partitions[d]:
            if len({cls_of[x] for x in cls}) != 1:
                raise GroupoidError(f"stage {d} not nested in stage {d + 1}")

    def stage_solution(G_d: FiniteGroupoid) -> OneCochain:
        values = {}
        for cls in G_d.meta["classes"]:
            base = cls[0]
            for x in cls:
                for y in cls:
                    anchor = (base, x)
                    values[(x, y)] = c.values[(anchor, (x, y))]
        return OneCochain(G_d, values)

    psi = stage_solution(stage_Gs[0])
    stages = [psi]
    for d in range(len(stage_Gs) - 1):
        G_next = stage_Gs[d + 1]
        cand = stage_solution(G_next)
        # psi * cand^{-1} is a 1-cocycle on R_d; write it as d(chi)
        chi: dict = {}
        for cls in stage_Gs[d].meta["classes"]:
            base = cls[0]
            for y in cls:
                kappa = psi.values[(base, y)] * cand.values[(base, y)].inverse()
                chi[y] = kappa
        values = {
            (x, y): cand.values[(x, y)] * chi[y] * chi[x].inverse()
            for (x, y) in G_next.arrows
        }
        psi_next = OneCochain(G_next, values)
        for a in stages[-1].G.arrows:
            if psi_next.values[a] != stages[-1].values[a]:
                raise GroupoidError(f"filtration correction failed at {a!r}")
        psi = psi_next
        stages.append(psi)
    restricted = TwoCocycle(
        stage_Gs[-1],
        {pair: c.values[pair] for pair in stage_Gs[-1].composable_pairs()},
    )
    bad = _coboundary_mismatch(psi, restricted)
    if bad is not None:
        raise GroupoidError(f"exhaustion trivialization failed at {bad!r}")
    return psi, stages


# -- twisted convolution --


class ConvolutionElement:
    """Finitely supported PhaseScalar-valued function on arrows."""

    def __init__(self, G: FiniteGroupoid, values: dict | None = None):
        self.G = G
        self.values = {}
        for a, v in (values or {}).items():
            v = v if isinstance(v, PhaseScalar) else PhaseScalar.from_rational(v)
            if v.terms:
                self.values[a] = v

    @classmethod
    def delta(cls, G: FiniteGroupoid, arrow) -> "ConvolutionElement":
        return cls(G, {arrow: PhaseScalar.one()})

    def __add__(self, other):
        out = dict(self.values)
        for a, v in other.values.items():
            out[a] = out.get(a, PhaseScalar.zero()) + v
        return ConvolutionElement(self.G, out)

    def __eq__(self, other):
        if not isinstance(other, ConvolutionElement):
            return NotImplemented
        keys = set(self.values) | set(other.values)
        zero = PhaseScalar.zero()
        return all(
            (self.values.get(k, zero) - other.values.get(k, zero)).is_zero()
            for k in keys
        )

    __hash__ = None

    def __repr__(self):
        return f"ConvolutionElement({self.values!r})"


def convolve(f: ConvolutionElement, g: ConvolutionElement,
             twist: TwoCocycle | None = None) -> ConvolutionElement:
    """(f g)(ab) = sum over s(a) = t(b) of twist(a, b) f(a) g(b)."""
    G = f.G
    out: dict = {}
    by_target: dict = {}
    for b in g.values:
        by_target.setdefault(G.t(b), []).append(b)
    for a, fa in f.values.items():
        for b in by_target.get(G.s(a), ()):
            ab = G.compose(a, b)
            v = fa * g.values[b]
            if twist is not None:
                v = v * twist(a, b)
            out[ab] = out.get(ab, PhaseScalar.zero()) + v
    return ConvolutionElement(G, out)


def conv_star(f: ConvolutionElement,
              twist: TwoCocycle | None = None) -> ConvolutionElement:
    """f*(a) = conj(twist(a, a^{-1})) conj(f(a^{-1}))."""
    G = f.G
    out = {}
    for b, v in f.values.items():
        a = G.inverse(b)
        w = v.conjugate()
        if twist is not None:
            w = w * twist(a, b).conjugate()
        out[a] = w
    return ConvolutionElement(G, out)


def pair_isomorphism_check(G: FiniteGroupoid):
    """Is (target, source) an isomorphism onto the pair groupoid?

    Needs exactly one arrow per ordered object pair and agreement of the
    whole composition table with (x, y)(y, z) = (x, z) under that map.
    Returns (True, None) or (False, reason).
    """
    ok, why = G.is_pair_like()
    if not ok:
        return False, why
    P = pair_groupoid(G.objects)
    label = {a: (G.t(a), G.s(a)) for a in G.arrows}
    if set(label.values()) != set(P.arrows):
        return False, "arrow labels do not cover the pair groupoid"
    expected = set(P.composable_pairs())
    got = {(label[a], label[b]) for (a, b) in G.composable_pairs()}
    if got != expected:
        return False, "composable pairs differ from the pair groupoid"
    for (a, b) in G.composable_pairs():
        if label[G.compose(a, b)] != P.compose(label[a], label[b]):
            return False, f"composition differs at ({a!r}, {b!r})"
    return True, None


def matrix_unit_check(G: FiniteGroupoid):
    """On a pair-like groupoid, delta-arrows multiply like matrix units:
    delta_a delta_b = [s(a) = t(b)] delta_{t(a) <- s(b)}."""
    ok, why = G.is_pair_like()
    if not ok:
        raise GroupoidError(f"not a pair groupoid: {why}")
    for a in G.arrows:
        e1 = ConvolutionElement.delta(G, a)
        for b in G.arrows:
            prod = convolve(e1, ConvolutionElement.delta(G, b))
            if G.s(a) == G.t(b):
                expect = ConvolutionElement.delta(
                    G, G.arrow_by_ts(G.t(a), G.s(b)))
            else:
                expect = ConvolutionElement(G, {})
            if prod != expect:
                return False, (a, b)
    return True, None
