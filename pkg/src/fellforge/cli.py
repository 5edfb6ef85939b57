"""Command line front end: TOML config in, deterministic JSON report out.

Same config and seed give a byte-identical report except for the
wall_time_s field.  Exit status: 0 all checks pass, 1 a verification
failed, 2 the config or invocation is unusable.
"""

from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from .algebra import (
    DegreeError,
    Presentation,
    PresentationError,
    lambda_cocycle,
    rieffel_product,
    rieffel_star,
)
from .characters import Character, evaluate_rational, is_positive
from .config import ConfigError, RunConfig, load_config
from .fellbundle import (
    BundleError,
    build_fibres,
    check_fell_axioms,
    deform_bundle,
    extract_twist,
    inner_trivialization,
)
from .groupoid import (
    GroupoidError,
    check_cocycle,
    matrix_unit_check,
    pair_isomorphism_check,
    transformation_groupoid,
    trivialize_pair,
)
from .operator_lab import OperatorError, toeplitz_suite, weyl_rep
from .operator_lab import check_relations, graph_norm_directed_check
from .phases import ONE_PHASE, Phase

SCHEMA_VERSION = 1

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _plain(obj):
    """Make a report value JSON-safe and stable: rationals become 'p/q'."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, Phase):
        return f"angle {obj.angle}"
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(obj)
    if isinstance(obj, dict):
        return {str(_plain(k)): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        items = list(obj)
        if isinstance(obj, set):
            items = sorted(items, key=repr)
        return [_plain(v) for v in items]
    if hasattr(obj, "item"):  # numpy scalar
        return _plain(obj.item())
    return repr(obj)


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _presentation(cfg: RunConfig) -> Presentation:
    return Presentation(cfg.family, cfg.m, theta=cfg.theta)


def _reproducer(cfg: RunConfig, command: str, detail: dict) -> dict:
    """Smallest config fragment that reproduces a failing verdict."""
    rep = {"command": command, "seed": cfg.seed}
    rep.update(detail)
    return _plain(rep)


# ---------------------------------------------------------------- commands


def cmd_characters(cfg: RunConfig) -> tuple[bool, dict]:
    pres = _presentation(cfg)
    depth = cfg.depth
    points = list(itertools.product(cfg.grid, repeat=cfg.m))
    results: dict = {
        "depth": depth,
        "n_points": len(points),
        "positive": [],
        "refuted": [],
    }
    if not points:
        results["note"] = "empty grid, nothing to classify"
        return True, results

    def classify(t):
        chi = Character(pres, t)
        return t, is_positive(chi, depth=depth)

    ok = True
    for t, cert in _pmap(classify, points, cfg.threads):
        if cert.positive:
            results["positive"].append([str(v) for v in t])
            continue
        p, q = cert.witness
        # replay the witness: the same monomial must reproduce the value
        chi = Character(pres, t)
        w = pres.monomial(p, q)
        replay = evaluate_rational(chi, w.star() * w)
        consistent = replay == cert.witness_value and replay < 0
        entry = {
            "t": [str(v) for v in t],
            "witness_p": list(p),
            "witness_q": list(q),
            "value": str(cert.witness_value),
            "replayed": consistent,
        }
        if not consistent:
            ok = False
            entry["reproducer"] = _reproducer(
                cfg, "characters",
                {"grid": [str(v) for v in t], "depth": depth},
            )
        results["refuted"].append(entry)
    results["all_witnesses_replayed"] = ok
    return ok, results


def cmd_groupoid(cfg: RunConfig) -> tuple[bool, dict]:
    T = transformation_groupoid(cfg.bounds, cfg.group_bound)
    axioms = T.verify()
    iso, why = pair_isomorphism_check(T)
    mu_ok, mu_pair = (True, None)
    if iso:
        mu_ok, mu_pair = matrix_unit_check(T)
    dropped = T.meta["restriction_dropped_arrows"]
    beyond = T.meta["generated_beyond_seed"]
    full_bound = cfg.group_bound is None or tuple(cfg.group_bound) == cfg.bounds
    warnings = []
    if dropped:
        warnings.append(
            f"{len(dropped)} translations act on the lattice but leave the "
            "window; the groupoid is a genuine restriction"
        )
    results = {
        "n_objects": len(T.objects),
        "n_arrows": len(T.arrows),
        "axioms_ok": axioms.ok,
        "pair_isomorphic": iso,
        "matrix_units_ok": mu_ok if iso else None,
        "unit_groupoid": len(T.arrows) == len(T.objects),
        "dropped_arrows": len(dropped),
        "dropped_sample": _plain(dropped[:4]),
        "generated_beyond_seed": beyond,
        "warnings": warnings,
    }
    if not iso and full_bound:
        results["pair_failure"] = why
    if not mu_ok:
        results["matrix_unit_failure"] = _plain(mu_pair)
    ok = axioms.ok and mu_ok and (iso or not full_bound)
    if not ok:
        results["reproducer"] = _reproducer(
            cfg, "groupoid",
            {"bounds": list(cfg.bounds),
             "group_bound": list(cfg.group_bound) if cfg.group_bound else None},
        )
    return ok, results


def cmd_twist(cfg: RunConfig) -> tuple[bool, dict]:
    pres = _presentation(cfg)
    bundle = build_fibres(pres, cfg.bounds)
    G = transformation_groupoid(cfg.bounds)
    phi = extract_twist(bundle, G)
    corrupted_at = None
    if cfg.corrupt_twist:
        # deliberately break one value on a non-unit pair (negative control)
        for pair in sorted(phi.values, key=repr):
            a, b = pair
            if a[0] != (0,) * cfg.m and b[0] != (0,) * cfg.m:
                phi.values[pair] = phi.values[pair] * Phase(Fraction(1, 3))
                corrupted_at = pair
                break

    crep = check_cocycle(phi)
    nontrivial = sum(1 for v in phi.values.values() if v != ONE_PHASE)
    results = {
        "n_composable_pairs": len(phi.values),
        "nontrivial_values": nontrivial,
        "all_trivial": nontrivial == 0,
        "cocycle_ok": crep.ok,
        "corrupted": cfg.corrupt_twist,
    }
    if corrupted_at is not None:
        results["corrupted_at"] = _plain(corrupted_at)
    if not crep.ok:
        fail = crep.failure or crep.unit_failure
        results["cocycle_failure"] = _plain(fail)

    trivialized = False
    if crep.ok:
        try:
            psi = trivialize_pair(phi)
            trivialized = True
            results["trivialization"] = {
                "exact": True,
                "n_arrows": len(psi.values),
            }
        except GroupoidError as exc:
            results["trivialization"] = {"exact": False, "error": str(exc)}

    axioms = check_fell_axioms(bundle)
    results["fell_axioms_ok"] = axioms.ok
    results["fell_axioms_checked"] = axioms.checked
    if not axioms.ok:
        results["fell_axioms_failure"] = _plain(axioms.counterexample)

    ok = crep.ok and trivialized and axioms.ok
    if not ok:
        results["reproducer"] = _reproducer(
            cfg, "twist",
            {"family": cfg.family,
             "theta": [[str(v) for v in row] for row in cfg.theta or []],
             "bounds": list(cfg.bounds),
             "corrupt": cfg.corrupt_twist},
        )
    return ok, results


def cmd_deform(cfg: RunConfig) -> tuple[bool, dict]:
    if cfg.theta is None:
        raise ConfigError("deform needs presentation.theta")
    m = cfg.m
    theta = cfg.theta
    trivial = all(v == 0 for row in theta for v in row)
    pres0 = Presentation("weyl", m)
    lam_pres = Presentation("twisted-weyl" if not trivial else "weyl", m,
                            theta=theta)
    rng = random.Random(cfg.seed)

    def rand_vec():
        return tuple(rng.randint(-3, 3) for _ in range(m))

    cocycle_bad = 0
    n_triples = 100
    for _ in range(n_triples):
        g, h, k = rand_vec(), rand_vec(), rand_vec()
        gh = tuple(a + b for a, b in zip(g, h))
        hk = tuple(a + b for a, b in zip(h, k))
        lhs = lambda_cocycle(lam_pres, g, hk) * lambda_cocycle(lam_pres, h, k)
        rhs = lambda_cocycle(lam_pres, gh, k) * lambda_cocycle(lam_pres, g, h)
        if lhs != rhs:
            cocycle_bad += 1

    def rand_mono():
        p = tuple(rng.randint(0, 2) for _ in range(m))
        q = tuple(rng.randint(0, 2) for _ in range(m))
        coeff = Fraction(rng.randint(1, 3), rng.randint(1, 3))
        ph = Phase(Fraction(rng.randint(0, 7), 8))
        return pres0.monomial(p, q, coeff).scaled(ph)

    assoc_bad = 0
    n_assoc = 40
    for _ in range(n_assoc):
        x, y, z = rand_mono(), rand_mono(), rand_mono()
        left = rieffel_product(rieffel_product(x, y, lam_pres), z, lam_pres)
        right = rieffel_product(x, rieffel_product(y, z, lam_pres), lam_pres)
        if left != right:
            assoc_bad += 1

    star_bad = 0
    n_star = 25
    for _ in range(n_star):
        g = rand_vec()
        mono = []
        for _ in range(2):
            p = tuple(max(0, -gj) + rng.randint(0, 1) for gj in g)
            q = tuple(pj + gj for pj, gj in zip(p, g))
            mono.append(pres0.monomial(p, q, Fraction(rng.randint(1, 3))))
        a, b = mono
        left = rieffel_product(rieffel_star(a, lam_pres), b, lam_pres)
        if left != a.star() * b:
            star_bad += 1

    # bundle deformation on a small window: forward matches the bicharacter,
    # forward then backward restores the untwisted twist
    bb = tuple(min(b, 2) for b in cfg.bounds)
    base = build_fibres(pres0, bb)
    G = transformation_groupoid(bb)
    fwd = deform_bundle(base, theta)
    back = deform_bundle(fwd, tuple(tuple(-v for v in row) for row in theta))
    phi_base = extract_twist(base, G)
    phi_fwd = extract_twist(fwd, G)
    phi_back = extract_twist(back, G)
    match_bichar = all(
        phi_fwd.values[pair]
        == phi_base.values[pair] * lambda_cocycle(lam_pres, a[0], b[0])
        for pair in phi_fwd.values
        for a, b in [pair]
    )
    roundtrip = phi_back.values == phi_base.values

    triv = inner_trivialization(theta, bb)
    triv_bad = triv.check()

    ok = (cocycle_bad == 0 and assoc_bad == 0 and star_bad == 0
          and match_bichar and roundtrip and triv_bad is None)
    results = {
        "trivial_theta": trivial,
        "cocycle_triples": n_triples,
        "cocycle_violations": cocycle_bad,
        "assoc_triples": n_assoc,
        "assoc_violations": assoc_bad,
        "star_pairs": n_star,
        "star_violations": star_bad,
        "bundle_bounds": list(bb),
        "deform_matches_bicharacter": match_bichar,
        "roundtrip_restores": roundtrip,
        "inner_trivialization_exact": triv_bad is None,
    }
    if triv_bad is not None:
        results["inner_trivialization_failure"] = _plain(triv_bad)
    if not ok:
        results["reproducer"] = _reproducer(
            cfg, "deform",
            {"theta": [[str(v) for v in row] for row in theta],
             "bounds": list(bb)},
        )
    return ok, results


def cmd_rep_verify(cfg: RunConfig) -> tuple[bool, dict]:
    theta = cfg.theta
    if cfg.rep_mode == "float":
        rows = theta if theta is not None else [[0] * cfg.m] * cfg.m
        theta = [[float(v) for v in row] for row in rows]
    rep = weyl_rep(cfg.bounds, theta=theta)
    tol = cfg.tolerance
    if tol is None:
        tol = 0.0 if rep.exact else 1e-12
    rel = check_relations(rep, tol=tol)

    # number diagonal: pi(a_j)* pi(a_j) delta_k = k_j delta_k
    diag_bad = []
    if rep.exact:
        for j in range(len(cfg.bounds)):
            word = ((j, True), (j, False))
            for point in rep.points:
                got = rep.apply_word(word, point)
                want_zero = point[j] == 0
                if want_zero:
                    if got is not None:
                        diag_bad.append((j, point))
                elif got != (point, ONE_PHASE, Fraction(point[j]), 1):
                    diag_bad.append((j, point))
    else:
        import numpy as np
        for j in range(len(cfg.bounds)):
            D = (rep.star_mat(j) @ rep.mat(j)).diagonal()
            want = np.array([p[j] for p in rep.points], dtype=float)
            if np.max(np.abs(D - want)) > tol:
                diag_bad.append((j, float(np.max(np.abs(D - want)))))

    # the directed graph-norm bound, seeded
    if rep.exact:
        a_list = [rep.pres.number_op(j) for j in range(rep.m)]
    else:
        a_list = [(rep.star_mat(j) @ rep.mat(j)).toarray()
                  for j in range(rep.m)]
    gn = graph_norm_directed_check(rep, a_list, n_samples=100, seed=cfg.seed)

    ok = rel.ok and not diag_bad and gn.ok
    results = {
        "mode": "exact" if rep.exact else "float",
        "dim": rep.dim,
        "interior_dim": rel.interior_dim,
        "tolerance": tol,
        "relations": _plain(rel.checks),
        "relations_ok": rel.ok,
        "number_diagonal_ok": not diag_bad,
        "graph_norm": _plain(gn.checks),
        "graph_norm_ok": gn.ok,
    }
    if diag_bad:
        results["number_diagonal_failures"] = _plain(diag_bad[:5])
    if not ok:
        results["reproducer"] = _reproducer(
            cfg, "rep-verify",
            {"bounds": list(cfg.bounds),
             "theta": [[str(v) for v in row] for row in cfg.theta or []],
             "mode": cfg.rep_mode,
             "tolerance": tol},
        )
    return ok, results


def cmd_toeplitz(cfg: RunConfig) -> tuple[bool, dict]:
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-10
    rep = toeplitz_suite(cfg.toeplitz_n, tol=tol)
    results = {
        "n": cfg.toeplitz_n,
        "tolerance": tol,
        "checks": _plain(rep.checks),
        "meta": _plain(rep.meta),
    }
    ok = rep.ok
    if not ok:
        results["reproducer"] = _reproducer(
            cfg, "toeplitz", {"n": cfg.toeplitz_n, "tolerance": tol},
        )
    return ok, results


COMMANDS = {
    "characters": cmd_characters,
    "groupoid": cmd_groupoid,
    "twist": cmd_twist,
    "deform": cmd_deform,
    "rep-verify": cmd_rep_verify,
    "toeplitz": cmd_toeplitz,
}


# ---------------------------------------------------------------- plumbing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fellforge",
        description="window-sized checks for twisted Weyl characters, "
                    "groupoid twists and truncated representations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--seed", type=int, help="override report.seed")
        p.add_argument("--tolerance", type=float,
                       help="override report.tolerance")
        p.add_argument("--depth", type=int, help="override characters.depth")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"--seed must be >= 0, got {args.seed}")
        cfg.seed = args.seed
    if args.tolerance is not None:
        if args.tolerance < 0:
            raise ConfigError(f"--tolerance must be >= 0, got {args.tolerance}")
        cfg.tolerance = args.tolerance
    if args.depth is not None:
        if args.depth < 1:
            raise ConfigError(f"--depth must be >= 1, got {args.depth}")
        cfg.depth = args.depth
    if args.out is not None:
        cfg.out = args.out
    return cfg


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize anyway
        return EXIT_USAGE if exc.code else EXIT_PASS

    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = RunConfig()
        cfg = _apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"fellforge: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    started = time.perf_counter()
    try:
        ok, results = COMMANDS[args.command](cfg)
    except (ConfigError, PresentationError, DegreeError, OperatorError,
            BundleError, GroupoidError, ValueError) as exc:
        print(f"fellforge: {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    elapsed = time.perf_counter() - started

    report = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": cfg.as_echo(),
        "seed": cfg.seed,
        "ok": ok,
        "results": results,
        "wall_time_s": round(elapsed, 6),
    }
    try:
        _emit(report, cfg.out)
    except OSError as exc:
        print(f"fellforge: cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
