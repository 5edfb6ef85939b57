"""Finite-window operator checks for the twisted Weyl family.

Truncated representations on l^2 of a box window, with two layers kept in
sync: exact symbolic columns (phase, integer radicand, target point) for
identities that must hold on the nose, and scipy.sparse complex matrices for
everything numerical.  On top of the representations: Cayley-transform
regularity verdicts, directed graph-norm bounds, the shift/Toeplitz identity
suite, induced-positivity Gram tests, and the matrix-block factorization of
the depth-filtered pair groupoid.

Boundary convention: raising operators would push the top layer out of the
window, so those columns are zero and the interior mask keeps only basis
points k with k_j < M_j for every j.  Relation checks are restricted to
interior columns, which is why exact phases give exactly zero residuals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .algebra import AlgebraElement, DegreeError, Presentation, _key_word
from .characters import Character, evaluate
from .phases import ONE_PHASE, Phase, PhaseScalar


class OperatorError(ValueError):
    pass


def _sqrt_normal(r: int):
    """sqrt(r) = s * sqrt(d) with d squarefree; r must be a nonneg integer."""
    if r < 0:
        raise ValueError("radicand must be nonnegative")
    if r == 0:
        return 0, 1
    s, d = 1, 1
    for p in range(2, math.isqrt(r) + 1):
        if p * p > r:
            break
        while r % (p * p) == 0:
            s *= p
            r //= p * p
        if r % p == 0:
            d *= p
            r //= p
    return s, d * r


@dataclass
class OperatorReport:
    ok: bool
    checks: dict                    # name -> {"residual", "tol", "pass", ...}
    interior_dim: int | None = None
    meta: dict = field(default_factory=dict)

    def summary(self) -> str:
        verdict = "pass" if self.ok else "FAIL"
        worst = max((c["residual"] for c in self.checks.values()), default=0.0)
        return f"{verdict}: {len(self.checks)} checks, worst residual {worst:.3g}"

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "interior_dim": self.interior_dim,
            "checks": {k: dict(v) for k, v in self.checks.items()},
            "meta": dict(self.meta),
        }


class TruncatedRep:
    """pi(a_j) on the window prod [0, M_j], lexicographic basis order.

    pi(a_j) delta_k = (prod_{l<j} lam_{jl}^{-k_l}) sqrt(k_j) delta_{k - e_j},
    the phase convention under which pi(a_1)pi(a_2) = lam_12 pi(a_2)pi(a_1)
    holds exactly rather than with the inverse twist.
    """

    def __init__(self, bounds, theta, exact: bool):
        self.bounds = tuple(int(b) for b in bounds)
        if any(b < 0 for b in self.bounds):
            raise OperatorError("window is empty")
        self.m = len(self.bounds)
        self.exact = exact
        self.theta = theta
        self.points = [tuple(p) for p in
                       itertools.product(*(range(b + 1) for b in self.bounds))]
        self.index = {p: i for i, p in enumerate(self.points)}
        self.dim = len(self.points)
        self.interior = np.array(
            [all(k < b for k, b in zip(p, self.bounds)) for p in self.points]
        )
        self.pres: Presentation | None = None
        if exact:
            family = "twisted-weyl" if any(
                any(x != 0 for x in row) for row in theta) else "weyl"
            self.pres = Presentation(family, self.m, theta if family != "weyl" else None)
        # symbolic column maps: point -> (target, phase-like, radicand)
        self._gen_map = [self._lower_map(j) for j in range(self.m)]
        self._star_map = [self._raise_map(j) for j in range(self.m)]
        self.mats = {j: self._matrix_from_map(self._gen_map[j])
                     for j in range(self.m)}

    # phase of pi(a_j) at source point k: exact Phase or complex
    def _phase(self, j, k):
        if self.exact:
            angle = -sum(self.theta[j][l] * k[l] for l in range(j))
            return Phase(angle)
        angle = -sum(self.theta[j][l] * k[l] for l in range(j))
        return complex(math.cos(2 * math.pi * angle), math.sin(2 * math.pi * angle))

    def _lower_map(self, j):
        out = {}
        for k in self.points:
            if k[j] == 0:
                continue
            tgt = k[:j] + (k[j] - 1,) + k[j + 1:]
            out[k] = (tgt, self._phase(j, k), k[j])
        return out

    def _raise_map(self, j):
        # adjoint columns; the top layer escapes the window and is zeroed
        out = {}
        for k in self.points:
            if k[j] == self.bounds[j]:
                continue
            src = k[:j] + (k[j] + 1,) + k[j + 1:]
            ph = self._phase(j, src).conjugate()
            out[k] = (src, ph, k[j] + 1)
        return out

    @staticmethod
    def _entry(ph, rad) -> complex:
        c = complex(ph) if isinstance(ph, Phase) else ph
        return c * math.sqrt(rad)

    def _matrix_from_map(self, colmap) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for src, (tgt, ph, rad) in colmap.items():
            rows.append(self.index[tgt])
            cols.append(self.index[src])
            vals.append(self._entry(ph, rad))
        return sp.csr_matrix(
            (vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex
        )

    def mat(self, j) -> sp.csr_matrix:
        return self.mats[j]

    def star_mat(self, j) -> sp.csr_matrix:
        return self.mats[j].conjugate().transpose().tocsr()

    def apply_word(self, word, point):
        """Apply a letter word symbolically, rightmost letter first.

        Returns (target, Phase, s, d) with coefficient phase * s * sqrt(d),
        d squarefree, or None when the vector is annihilated or truncated
        away.  Exact mode only.
        """
        if not self.exact:
            raise OperatorError("symbolic application needs exact phases")
        ph, rad = ONE_PHASE, 1
        pt = point
        for (j, star) in reversed(word):
            step = (self._star_map if star else self._gen_map)[j].get(pt)
            if step is None:
                return None
            pt, p, r = step
            ph = ph * p
            rad *= r
        s, d = _sqrt_normal(rad)
        return pt, ph, Fraction(s), d

    def to_json(self) -> dict:
        mats = {}
        for j, mt in self.mats.items():
            coo = mt.tocoo()
            mats[str(j)] = [
                [int(r), int(c), float(v.real), float(v.imag)]
                for r, c, v in zip(coo.row, coo.col, coo.data)
            ]
        theta = [[str(x) for x in row] for row in self.theta] if self.exact \
            else [[float(x) for x in row] for row in self.theta]
        return {"bounds": list(self.bounds), "exact": self.exact,
                "theta": theta, "matrices": mats}


def weyl_rep(bounds, theta=None) -> TruncatedRep:
    """Truncated representation on the window; exact when theta is rational.

    Any float entry in theta switches the whole rep to tolerance mode; exact
    mode requires entries convertible to Fraction without loss.
    """
    m = len(bounds)
    if theta is None:
        theta = [[0] * m for _ in range(m)]
    rows = list(theta)
    if len(rows) != m or any(len(r) != m for r in rows):
        raise OperatorError(f"theta must be {m}x{m}")
    has_float = any(isinstance(x, float) for row in rows for x in row)
    if has_float:
        t = tuple(tuple(float(x) for x in row) for row in rows)
        for j in range(m):
            if t[j][j] != 0.0 or any(abs(t[j][k] + t[k][j]) > 1e-15 for k in range(m)):
                raise OperatorError("theta must be antisymmetric with zero diagonal")
        return TruncatedRep(bounds, t, exact=False)
    t = tuple(tuple(Fraction(x) for x in row) for row in rows)
    for j in range(m):
        if t[j][j] != 0 or any(t[j][k] != -t[k][j] for k in range(m)):
            raise OperatorError("theta must be antisymmetric with zero diagonal")
    return TruncatedRep(bounds, t, exact=True)


# -- relation verification --


def _sym_accumulate(acc, key, scalar: PhaseScalar):
    acc[key] = acc.get(key, PhaseScalar.zero()) + scalar


def _sym_word(rep, word, point, weight: PhaseScalar, acc):
    hit = rep.apply_word(word, point)
    if hit is None:
        return
    tgt, ph, s, d = hit
    _sym_accumulate(acc, (tgt, d), weight * PhaseScalar.from_phase(ph, s))


def _exact_identity_holds(rep, combos, point) -> bool:
    """combos: list of (word, weight).  Zero iff every (point, d) bucket
    vanishes; distinct squarefree radicands are independent over phases."""
    acc: dict = {}
    for word, weight in combos:
        if word == ():
            _sym_accumulate(acc, (point, 1), weight)
        else:
            _sym_word(rep, word, point, weight, acc)
    return all(v.is_zero() for v in acc.values())


def check_relations(rep: TruncatedRep, tol: float = 1e-12) -> OperatorReport:
    """Verify the defining relations on interior columns.

    Exact mode: symbolic identities (residual exactly 0) plus an entrywise
    audit that the stored matrices are the float image of the symbolic
    columns, so a corrupted matrix entry cannot hide.  Float mode: matrix
    products with the given tolerance.
    """
    checks: dict = {}
    interior_dim = int(rep.interior.sum())
    interior_pts = [p for p in rep.points if rep.interior[rep.index[p]]]

    def record(name, residual, tolerance):
        checks[name] = {
            "residual": float(residual),
            "tol": float(tolerance),
            "pass": bool(residual <= tolerance),
        }

    if rep.exact:
        one = PhaseScalar.one()
        for j in range(rep.m):
            bad = 0
            combos = [
                (((j, False), (j, True)), one),
                (((j, True), (j, False)), -one),
                ((), -one),
            ]
            for p in interior_pts:
                if not _exact_identity_holds(rep, combos, p):
                    bad += 1
            record(f"ccr_{j}", float(bad), 0.0)
        for j in range(rep.m):
            for k in range(rep.m):
                if j == k:
                    continue
                lam = rep.pres.lam(j, k)
                if j < k:
                    combos = [
                        (((j, False), (k, False)), one),
                        (((k, False), (j, False)),
                         -PhaseScalar.from_phase(lam)),
                    ]
                    bad = sum(
                        0 if _exact_identity_holds(rep, combos, p) else 1
                        for p in interior_pts
                    )
                    record(f"swap_{j}{k}", float(bad), 0.0)
                combos = [
                    (((j, True), (k, False)), one),
                    (((k, False), (j, True)),
                     -PhaseScalar.from_phase(lam.inverse())),
                ]
                bad = sum(
                    0 if _exact_identity_holds(rep, combos, p) else 1
                    for p in interior_pts
                )
                record(f"cross_{j}{k}", float(bad), 0.0)
        # matrix audit: stored entries vs the symbolic columns, bit for bit
        worst = 0.0
        for j in range(rep.m):
            expect = rep._matrix_from_map(rep._gen_map[j])
            diff = (rep.mats[j] - expect)
            if diff.nnz:
                worst = max(worst, float(abs(diff).max()))
        record("matrix_formula_agreement", worst, 0.0)
    else:
        I = sp.identity(rep.dim, dtype=complex, format="csr")
        cols = np.flatnonzero(rep.interior)

        def residual(mat):
            sub = mat.tocsc()[:, cols]
            return 0.0 if sub.nnz == 0 else float(abs(sub).max())

        for j in range(rep.m):
            A = rep.mats[j]
            record(f"ccr_{j}", residual(A @ A.conj().T - A.conj().T @ A - I), tol)
        for j in range(rep.m):
            for k in range(rep.m):
                if j == k:
                    continue
                lam = np.exp(2j * np.pi * rep.theta[j][k])
                A, B = rep.mats[j], rep.mats[k]
                if j < k:
                    record(f"swap_{j}{k}", residual(A @ B - lam * (B @ A)), tol)
                record(
                    f"cross_{j}{k}",
                    residual(A.conj().T @ B - (B @ A.conj().T) / lam),
                    tol,
                )
    ok = all(c["pass"] for c in checks.values())
    return OperatorReport(ok, checks, interior_dim=interior_dim,
                          meta={"exact": rep.exact, "bounds": list(rep.bounds)})


def matrix_of(rep: TruncatedRep, x: AlgebraElement) -> np.ndarray:
    """pi(x) as a dense matrix; exact reps only, matching presentations."""
    if not rep.exact:
        raise OperatorError("matrix_of needs an exact representation")
    if x.pres.m != rep.m or tuple(map(tuple, x.pres.theta)) != rep.theta:
        raise OperatorError("element and representation use different twists")
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for (p, q), c in x.terms.items():
        word = _key_word(p, q)
        term = sp.identity(rep.dim, dtype=complex, format="csr")
        for (j, star) in word:     # left-to-right: pi(w1) pi(w2) ...
            term = term @ (rep.star_mat(j) if star else rep.mats[j])
        out += complex(c) * term.toarray()
    return out


# -- Cayley transform --


@dataclass
class CayleyResult:
    transform: np.ndarray
    defect_left: float      # ||c* c - I||_2
    defect_right: float     # ||c c* - I||_2
    hermitian_defect: float
    regular: bool
    tol: float

    def summary(self) -> str:
        verdict = "regular self-adjoint" if self.regular else "not unitary"
        return (f"{verdict}: defects {self.defect_left:.3g}/"
                f"{self.defect_right:.3g}, hermitian defect "
                f"{self.hermitian_defect:.3g}")


def cayley(T: np.ndarray, tol: float = 1e-10) -> CayleyResult:
    """c = (T - i)(T + i)^{-1} with unitarity defects.

    Non-Hermitian input is processed and flagged through the defects rather
    than rejected: symmetric-but-not-self-adjoint models are exactly the
    interesting inputs.  A singular T + i cannot happen for Hermitian T, so
    it raises.
    """
    T = np.asarray(T, dtype=complex)
    n = T.shape[0]
    if T.shape != (n, n):
        raise OperatorError("T must be square")
    I = np.eye(n)
    herm = float(np.linalg.norm(T - T.conj().T, 2)) if n else 0.0
    A = T + 1j * I
    B = T - 1j * I
    try:
        # c A = B  =>  A^T c^T = B^T
        c = np.linalg.solve(A.T, B.T).T
    except np.linalg.LinAlgError:
        raise OperatorError("T + iI is singular; input is far from Hermitian")
    dl = float(np.linalg.norm(c.conj().T @ c - I, 2))
    dr = float(np.linalg.norm(c @ c.conj().T - I, 2))
    return CayleyResult(c, dl, dr, herm, bool(dl <= tol and dr <= tol), tol)


# -- graph norms --


def graph_norm(xi: np.ndarray, a, rep: TruncatedRep) -> float:
    """||xi||_a = (||xi||^2 + ||pi(a) xi||^2)^{1/2}."""
    xi = np.asarray(xi, dtype=complex)
    if isinstance(a, AlgebraElement):
        if a.is_zero():
            return float(np.linalg.norm(xi))
        mat = matrix_of(rep, a)
    else:
        mat = np.asarray(a, dtype=complex)
    return float(math.sqrt(np.linalg.norm(xi) ** 2
                           + np.linalg.norm(mat @ xi) ** 2))


def graph_norm_directed_check(rep: TruncatedRep, a_list, n_samples: int = 200,
                              seed: int = 0) -> OperatorReport:
    """||xi||_{a_i} <= (5/4) ||xi||_b with b-hat = sum_i M_i* M_i.

    The dominating norm is built at the matrix level so the bound is a
    theorem about the truncated operators themselves, not about the window
    limit; the scalar inequality 1 + t <= (25/16)(1 + t^2) does the rest.
    """
    mats = [matrix_of(rep, a) if isinstance(a, AlgebraElement)
            else np.asarray(a, dtype=complex) for a in a_list]
    bhat = sum((M.conj().T @ M for M in mats),
               np.zeros((rep.dim, rep.dim), dtype=complex))
    rng = np.random.default_rng(seed)
    max_ratio = 0.0
    violations = 0
    for _ in range(n_samples):
        xi = rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)
        base = math.sqrt(np.linalg.norm(xi) ** 2
                         + float(np.real(np.vdot(xi, bhat @ (bhat @ xi)))))
        for i, M in enumerate(mats):
            gn = graph_norm(xi, M, rep)
            ratio = gn / base
            max_ratio = max(max_ratio, ratio)
            if ratio > 1.25 + 1e-12:
                violations += 1
    checks = {
        "directed_bound": {
            "residual": max(0.0, max_ratio - 1.25),
            "tol": 1e-12,
            "pass": violations == 0,
            "max_ratio": max_ratio,
            "violations": violations,
        }
    }
    return OperatorReport(violations == 0, checks,
                          meta={"n_samples": n_samples, "seed": seed,
                                "n_operators": len(mats)})


# -- Toeplitz suite --


def toeplitz_suite(N: int, tol: float = 1e-10) -> OperatorReport:
    """Shift-generated identities on the N-dimensional truncation.

    S e_k = e_{k+1}; 1 - S is unipotent lower-triangular, so
    Q := i(1 + S)(1 - S)^{-1} is well defined on the whole truncation.
    The two defining identities hold on span{e_0..e_{N-2}}; truncation
    defects live entirely in the last column, which is reported, as is the
    Cayley transform of Q landing back on S and the isometric-not-unitary
    signature S*S != SS* of the shift itself.
    """
    if N < 3:
        raise OperatorError("need N >= 3")
    I = np.eye(N)
    S = np.zeros((N, N))
    for k in range(N - 1):
        S[k + 1, k] = 1.0
    A = I - S
    Q = 1j * np.linalg.solve(A.T, (I + S).T).T

    checks: dict = {}

    def record(name, mat, boundary_name=None):
        interior = float(np.abs(mat[:, : N - 1]).max())
        checks[name] = {"residual": interior, "tol": tol,
                        "pass": bool(interior <= tol)}
        if boundary_name:
            checks[boundary_name] = {
                "residual": float(np.abs(mat[:, N - 1]).max()),
                "tol": float("inf"),
                "pass": True,
            }

    d1 = (Q + 1j * I) @ (A / 2j) - I
    record("resolvent_identity", d1, "resolvent_boundary_column")
    d2 = (Q.conj().T @ Q + I) @ (A @ A.conj().T / 4) - I
    record("modulus_identity", d2, "modulus_boundary_column")
    cq = cayley(Q, tol=tol)
    record("cayley_equals_shift", cq.transform - S)
    iso = S.conj().T @ S - I
    co = S @ S.conj().T - I
    checks["shift_isometry_defect_columns"] = {
        "residual": float(np.abs(iso).max()),
        "tol": float("inf"),
        "pass": True,
        "nonzero_columns": sorted(set(np.flatnonzero(np.abs(iso).max(axis=0) > 0).tolist())),
        "coisometry_nonzero_columns": sorted(set(np.flatnonzero(np.abs(co).max(axis=0) > 0).tolist())),
    }
    checks["q_not_hermitian"] = {
        "residual": cq.hermitian_defect,
        "tol": float("inf"),
        "pass": True,
    }
    ok = all(c["pass"] for c in checks.values())
    return OperatorReport(ok, checks, interior_dim=N - 1,
                          meta={"N": N, "cayley_unitary_defect": cq.defect_left})


# -- induced positivity --


@dataclass
class PositivityVerdict:
    positive: bool
    n: int
    witness: tuple | None = None     # (index subset, minor value) in exact mode
    eigenvalues: list | None = None  # float mode

    def summary(self) -> str:
        if self.positive:
            return f"positive semidefinite ({self.n} x {self.n})"
        return f"not positive: witness {self.witness or self.eigenvalues}"


def _common_degree(elements):
    degs = {a.homogeneous_degree() for a in elements}
    if len(degs) > 1:
        raise DegreeError(f"family mixes degrees {sorted(degs)}")


def inducibility_matrix_check(rep: TruncatedRep, family,
                              tol: float = 1e-10) -> PositivityVerdict:
    """Gram matrix G[k,l] = <xi_k, pi(a_k* a_l) xi_l> must be PSD.

    a_k* a_l is evaluated in the algebra first and only then represented, so
    positivity is a statement being tested, not a consequence of writing
    G = X* X.
    """
    family = list(family)
    if not family:
        return PositivityVerdict(True, 0)
    _common_degree([a for a, _ in family])
    n = len(family)
    G = np.zeros((n, n), dtype=complex)
    for k, (ak, xk) in enumerate(family):
        for l, (al, xl) in enumerate(family):
            M = matrix_of(rep, ak.star() * al)
            G[k, l] = np.vdot(np.asarray(xk, dtype=complex),
                              M @ np.asarray(xl, dtype=complex))
    eigs = np.linalg.eigvalsh((G + G.conj().T) / 2)
    positive = bool(eigs.min() >= -tol)
    return PositivityVerdict(positive, n, eigenvalues=[float(e) for e in eigs])


def _minor_det(rows, rset, cset):
    if len(rset) == 1:
        return rows[rset[0]][cset[0]]
    total = PhaseScalar.zero()
    top = rset[0]
    for pos, col in enumerate(cset):
        sub_r = rset[1:]
        sub_c = [c for c in cset if c != col]
        term = rows[top][col] * _minor_det(rows, sub_r, sub_c)
        if pos % 2:
            term = -term
        total = total + term
    return total


def inducibility_character_check(chi: Character, elements) -> PositivityVerdict:
    """Exact Gram positivity at one character: G[k,l] = chi(a_k* a_l).

    PSD for a Hermitian matrix == every principal minor is >= 0; the minors
    of this Gram matrix are rational on the nose, so the verdict is exact.
    """
    elements = list(elements)
    if not elements:
        return PositivityVerdict(True, 0)
    _common_degree(elements)
    n = len(elements)
    rows = [[evaluate(chi, ak.star() * al) for al in elements]
            for ak in elements]
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            det = _minor_det(rows, list(subset), list(subset))
            if not det.is_rational():
                raise OperatorError(
                    f"principal minor {subset} is not rational: {det!r}"
                )
            val = det.as_fraction()
            if val < 0:
                return PositivityVerdict(False, n, witness=(subset, val))
    return PositivityVerdict(True, n)


# -- UHF block structure --


def uhf_block_check(sizes=(2, 3)) -> OperatorReport:
    """Depth-two tail filtration factors as a matrix tensor product.

    Points of prod [0, M_k] with the everything-equivalent relation give the
    full pair groupoid; sending the arrow (x, y) to kron(e_{x_1 y_1},
    e_{x_2 y_2}) must turn convolution into matrix multiplication entry for
    entry.  All matrices are 0/1 integers, so the comparison is exact.
    """
    from .groupoid import ConvolutionElement, convolve, pair_groupoid

    if len(sizes) != 2 or any(s < 1 for s in sizes):
        raise OperatorError("need two block sizes >= 1")
    n1, n2 = sizes
    pts = [(i, j) for i in range(n1) for j in range(n2)]
    G = pair_groupoid(pts)

    def unit_mat(n, r, c):
        M = np.zeros((n, n), dtype=int)
        M[r, c] = 1
        return M

    def block(arrow):
        (x1, x2), (y1, y2) = arrow
        return np.kron(unit_mat(n1, x1, y1), unit_mat(n2, x2, y2))

    dim = n1 * n2
    mismatches = 0
    checked = 0
    for a in G.arrows:
        for b in G.arrows:
            checked += 1
            conv = convolve(ConvolutionElement.delta(G, a),
                            ConvolutionElement.delta(G, b))
            prod = block(a) @ block(b)
            expect = np.zeros((dim, dim), dtype=int)
            for arrow, val in conv.values.items():
                if val.is_zero():
                    continue
                if not val.is_rational() or val.as_fraction() != 1:
                    mismatches += 1
                    continue
                expect += block(arrow)
            if not np.array_equal(prod, expect):
                mismatches += 1
    checks = {
        "tensor_factorization": {
            "residual": float(mismatches),
            "tol": 0.0,
            "pass": mismatches == 0,
            "pairs_checked": checked,
        }
    }
    return OperatorReport(mismatches == 0, checks,
                          meta={"sizes": list(sizes), "dim": dim})
