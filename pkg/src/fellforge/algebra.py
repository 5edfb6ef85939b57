"""Twisted Weyl algebras with exact normal forms.

Generators a_0, ..., a_{m-1} satisfy

    a_j a_j* = a_j* a_j + 1
    a_j a_k  = lam(j,k) a_k a_j          (j != k)
    a_j* a_k = lam(j,k)^{-1} a_k a_j*    (j != k)

with lam(j,k) = e^{2 pi i theta[j][k]} and theta rational antisymmetric.
Every element has a unique normal form: a sum of monomials

    (a_0*)^{p_0} ... (a_{m-1}*)^{p_{m-1}} a_0^{q_0} ... a_{m-1}^{q_{m-1}}

written here as a key (p, q) with a PhaseScalar coefficient.  Words are
sequences of letters (j, star); rewriting to normal form is confluent, and
the engine below applies the leftmost reduction with whole-word memoization.
"""

from __future__ import annotations

from fractions import Fraction

from .phases import ONE_PHASE, Phase, PhaseScalar

FAMILIES = ("weyl", "twisted-weyl")


class PresentationError(ValueError):
    pass


class WordLimitError(ValueError):
    pass


class DegreeError(ValueError):
    pass


def _as_exact(entry) -> Fraction:
    if isinstance(entry, float):
        raise PresentationError(
            "float theta entry %r: the exact path needs rationals; "
            "use the operator-lab float mode for irrational twists" % (entry,)
        )
    return Fraction(entry)


class Presentation:
    """A Weyl or twisted-Weyl presentation on m generators."""

    def __init__(self, family: str, m: int, theta=None, word_limit: int = 64):
        if family not in FAMILIES:
            raise PresentationError(
                f"family {family!r} not supported; general presentations are rejected"
            )
        if not isinstance(m, int) or m < 1:
            raise PresentationError(f"m must be a positive integer, got {m!r}")
        if theta is None:
            theta = [[Fraction(0)] * m for _ in range(m)]
        theta = tuple(tuple(_as_exact(x) for x in row) for row in theta)
        if len(theta) != m or any(len(row) != m for row in theta):
            raise PresentationError("theta must be an m x m matrix")
        for j in range(m):
            if theta[j][j] % 1 != 0:
                raise PresentationError("theta must vanish on the diagonal mod 1")
            for k in range(m):
                if (theta[j][k] + theta[k][j]) % 1 != 0:
                    raise PresentationError("theta must be antisymmetric mod 1")
        if family == "weyl" and any(x % 1 != 0 for row in theta for x in row):
            raise PresentationError("family 'weyl' requires theta = 0")
        self.family = family
        self.m = m
        self.theta = theta
        self.word_limit = word_limit
        self._nf_cache: dict[tuple, dict] = {}

    def lam(self, j: int, k: int) -> Phase:
        return Phase(self.theta[j][k])

    def data(self) -> tuple:
        return (self.family, self.m, self.theta)

    # -- element constructors --

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, {})

    def one(self) -> "AlgebraElement":
        return self.monomial((0,) * self.m, (0,) * self.m)

    def gen(self, j: int) -> "AlgebraElement":
        """The generator a_j (indices run 0..m-1)."""
        return self.from_word(((j, False),))

    def gen_star(self, j: int) -> "AlgebraElement":
        return self.from_word(((j, True),))

    def number_op(self, j: int) -> "AlgebraElement":
        """N_j = a_j* a_j."""
        return self.from_word(((j, True), (j, False)))

    def monomial(self, p, q, coeff=1) -> "AlgebraElement":
        p, q = tuple(p), tuple(q)
        self._check_key(p, q)
        c = coeff if isinstance(coeff, PhaseScalar) else _scalar(coeff)
        return AlgebraElement(self, {(p, q): c})

    def from_word(self, word) -> "AlgebraElement":
        return normal_order(self, word)

    def canonical_rep(self, g) -> "AlgebraElement":
        """Canonical degree-g element: prod_j a_j^{g_j+} then prod_j (a_j*)^{g_j-}.

        Unstarred letters first, stars last, ascending index inside each block.
        """
        g = tuple(int(x) for x in g)
        if len(g) != self.m:
            raise DegreeError(f"degree vector must have length {self.m}")
        word = []
        for j, gj in enumerate(g):
            word.extend(((j, False),) * max(gj, 0))
        for j, gj in enumerate(g):
            word.extend(((j, True),) * max(-gj, 0))
        return self.from_word(tuple(word))

    def _check_key(self, p, q):
        if len(p) != self.m or len(q) != self.m:
            raise DegreeError("exponent vectors must have length m")
        if any(x < 0 for x in p) or any(x < 0 for x in q):
            raise DegreeError("exponents must be nonnegative")

    def __repr__(self) -> str:
        return f"Presentation({self.family!r}, m={self.m})"


def _compatible(a: Presentation, b: Presentation) -> bool:
    return a is b or a.data() == b.data()


def _scalar(c) -> PhaseScalar:
    if isinstance(c, PhaseScalar):
        return c
    if isinstance(c, Phase):
        return PhaseScalar.from_phase(c)
    return PhaseScalar.from_rational(c)


def _key_word(p, q) -> tuple:
    word = []
    for j, pj in enumerate(p):
        word.extend(((j, True),) * pj)
    for j, qj in enumerate(q):
        word.extend(((j, False),) * qj)
    return tuple(word)


def _word_key(word) -> tuple:
    m = 1 + max(j for j, _ in word)
    p = [0] * m
    q = [0] * m
    for j, star in word:
        (p if star else q)[j] += 1
    return tuple(p), tuple(q)


def _first_violation(word) -> int | None:
    for i in range(len(word) - 1):
        j, sj = word[i]
        k, sk = word[i + 1]
        if (not sj and sk) or (sj == sk and j > k):
            return i
    return None


def normal_order(pres: Presentation, word, limit: int | None = None) -> "AlgebraElement":
    """Rewrite an arbitrary word of letters (j, star) into normal form."""
    word = tuple((int(j), bool(s)) for j, s in word)
    cap = pres.word_limit if limit is None else limit
    if len(word) > cap:
        raise WordLimitError(f"word of length {len(word)} exceeds limit {cap}")
    for j, _ in word:
        if not 0 <= j < pres.m:
            raise PresentationError(f"letter index {j} out of range for m={pres.m}")
    if not word:
        return pres.one()
    nf = _nf(pres, word)
    return AlgebraElement(pres, dict(nf))


def _rewrite_step(pres: Presentation, word, i):
    """Dependencies of word at violation i: list of (phase_angle|None, word)."""
    j, sj = word[i]
    k, sk = word[i + 1]
    swapped = word[:i] + (word[i + 1], word[i]) + word[i + 2:]
    if not sj and sk:
        if j == k:
            # a_j a_j* -> a_j* a_j + 1
            return [(None, swapped), (None, word[:i] + word[i + 2:])]
        # a_j a_k* = lam(k,j) a_k* a_j
        return [(pres.theta[k][j], swapped)]
    # within a block, j > k: a_j a_k = lam(j,k) a_k a_j (same phase starred)
    return [(pres.theta[j][k], swapped)]


def _nf(pres: Presentation, word) -> dict:
    """Memoized normal form of a word, coefficient 1: dict key -> PhaseScalar."""
    cache = pres._nf_cache
    if word in cache:
        return cache[word]
    stack = [word]
    while stack:
        cur = stack[-1]
        if cur in cache:
            stack.pop()
            continue
        viol = _first_violation(cur)
        if viol is None:
            cache[cur] = {_pad_key(pres.m, cur): PhaseScalar.one()}
            stack.pop()
            continue
        deps = _rewrite_step(pres, cur, viol)
        missing = [w for _, w in deps if w not in cache]
        if missing:
            stack.extend(missing)
            continue
        acc: dict = {}
        for angle, w in deps:
            sub = cache[w]
            ph = None if angle is None else Phase(angle)
            for key, coeff in sub.items():
                add = coeff if ph is None else coeff * ph
                acc[key] = acc.get(key, PhaseScalar.zero()) + add
        cache[cur] = acc
        stack.pop()
    return cache[word]


def _pad_key(m: int, word) -> tuple:
    p = [0] * m
    q = [0] * m
    for j, star in word:
        (p if star else q)[j] += 1
    return tuple(p), tuple(q)


class AlgebraElement:
    """A finite PhaseScalar-combination of normal monomials."""

    __slots__ = ("pres", "terms")

    def __init__(self, pres: Presentation, terms: dict):
        self.pres = pres
        self.terms = {k: c for k, c in terms.items() if c.terms}

    # -- linear structure --

    def __add__(self, other) -> "AlgebraElement":
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, PhaseScalar.zero()) + c
        return AlgebraElement(self.pres, out)

    __radd__ = __add__

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.pres, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "AlgebraElement":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "AlgebraElement":
        return self._coerce(other) - self

    def __mul__(self, other) -> "AlgebraElement":
        if isinstance(other, AlgebraElement):
            if not _compatible(self.pres, other.pres):
                raise PresentationError("elements live in different presentations")
            return _multiply(self, other)
        return self.scaled(other)

    def __rmul__(self, other) -> "AlgebraElement":
        return self.scaled(other)  # scalars commute with everything

    def scaled(self, c) -> "AlgebraElement":
        c = _scalar(c)
        return AlgebraElement(self.pres, {k: v * c for k, v in self.terms.items()})

    # -- *-structure --

    def star(self) -> "AlgebraElement":
        """Involution: reverse each monomial word, star every letter, conjugate."""
        out: dict = {}
        for (p, q), c in self.terms.items():
            word = tuple((j, not s) for j, s in reversed(_key_word(p, q)))
            nf = _nf(self.pres, word)
            cc = c.conjugate()
            for key, coeff in nf.items():
                out[key] = out.get(key, PhaseScalar.zero()) + cc * coeff
        return AlgebraElement(self.pres, out)

    # -- grading --

    def degrees(self) -> set:
        return {_degree(k) for k in self.terms}

    def degree_component(self, g) -> "AlgebraElement":
        g = tuple(int(x) for x in g)
        return AlgebraElement(
            self.pres, {k: c for k, c in self.terms.items() if _degree(k) == g}
        )

    def homogeneous_degree(self):
        """The common degree of all monomials, or raise DegreeError."""
        degs = self.degrees()
        if len(degs) != 1:
            raise DegreeError(f"element is not homogeneous: degrees {sorted(degs)}")
        return next(iter(degs))

    # -- predicates --

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.terms.values())

    def __eq__(self, other) -> bool:
        if isinstance(other, AlgebraElement):
            if not _compatible(self.pres, other.pres):
                return False
            return (self - other).is_zero()
        return NotImplemented

    __hash__ = None

    def __repr__(self) -> str:
        if not self.terms:
            return "AlgebraElement(0)"
        bits = []
        for (p, q) in sorted(self.terms):
            bits.append(f"{self.terms[(p, q)]!r}*[p={p},q={q}]")
        return "AlgebraElement(" + " + ".join(bits) + ")"

    # -- serialization --

    def to_json(self) -> dict:
        return {
            "family": self.pres.family,
            "m": self.pres.m,
            "theta": [[str(x) for x in row] for row in self.pres.theta],
            "terms": [
                {"p": list(p), "q": list(q), "coeff": self.terms[(p, q)].to_json()}
                for (p, q) in sorted(self.terms)
            ],
        }

    @classmethod
    def from_json(cls, data: dict, pres: Presentation | None = None) -> "AlgebraElement":
        if pres is None:
            pres = Presentation(data["family"], data["m"], data["theta"])
        terms = {
            (tuple(t["p"]), tuple(t["q"])): PhaseScalar.from_json(t["coeff"])
            for t in data["terms"]
        }
        return cls(pres, terms)

    def _coerce(self, other) -> "AlgebraElement":
        if isinstance(other, AlgebraElement):
            if not _compatible(self.pres, other.pres):
                raise PresentationError("elements live in different presentations")
            return other
        return self.pres.one().scaled(other)


def _degree(key) -> tuple:
    p, q = key
    return tuple(qj - pj for pj, qj in zip(p, q))


def _multiply(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    pres = x.pres
    out: dict = {}
    for (p1, q1), c1 in x.terms.items():
        w1 = _key_word(p1, q1)
        for (p2, q2), c2 in y.terms.items():
            w = w1 + _key_word(p2, q2)
            if len(w) > pres.word_limit:
                raise WordLimitError(
                    f"product word of length {len(w)} exceeds limit {pres.word_limit}"
                )
            c = c1 * c2
            for key, coeff in _nf(pres, w).items():
                out[key] = out.get(key, PhaseScalar.zero()) + c * coeff
    return AlgebraElement(pres, out)


# -- Rieffel deformation --


def lambda_cocycle(pres: Presentation, g, h) -> Phase:
    """Lambda(g, h) = prod_{j<k} lam(j,k)^{g_k h_j}, a bicharacter 2-cocycle on Z^m."""
    g = tuple(int(x) for x in g)
    h = tuple(int(x) for x in h)
    if len(g) != pres.m or len(h) != pres.m:
        raise DegreeError("degree vectors must have length m")
    angle = Fraction(0)
    for j in range(pres.m):
        for k in range(j + 1, pres.m):
            angle += pres.theta[j][k] * g[k] * h[j]
    return Phase(angle)


def rieffel_product(x: AlgebraElement, y: AlgebraElement,
                    pres_lambda: Presentation | None = None) -> AlgebraElement:
    """Deformed product: on degrees (g, h) multiply by Lambda(g, h).

    ``pres_lambda`` supplies the twist used for Lambda; by default the
    elements' own presentation (deforming an untwisted algebra means passing
    untwisted elements and a twisted ``pres_lambda``).
    """
    if not _compatible(x.pres, y.pres):
        raise PresentationError("elements live in different presentations")
    lp = pres_lambda if pres_lambda is not None else x.pres
    out = x.pres.zero()
    for (p1, q1), c1 in x.terms.items():
        mono1 = AlgebraElement(x.pres, {(p1, q1): c1})
        g = _degree((p1, q1))
        for (p2, q2), c2 in y.terms.items():
            mono2 = AlgebraElement(y.pres, {(p2, q2): c2})
            h = _degree((p2, q2))
            out = out + (mono1 * mono2).scaled(lambda_cocycle(lp, g, h))
    return out


def rieffel_star(x: AlgebraElement,
                 pres_lambda: Presentation | None = None) -> AlgebraElement:
    """Deformed involution: a_g -> conj(Lambda(-g, g)) a_g*."""
    lp = pres_lambda if pres_lambda is not None else x.pres
    out = x.pres.zero()
    for (p, q), c in x.terms.items():
        g = _degree((p, q))
        neg = tuple(-x_ for x_ in g)
        ph = lambda_cocycle(lp, neg, g).conjugate()
        mono = AlgebraElement(x.pres, {(p, q): c})
        out = out + mono.star().scaled(ph)
    return out
