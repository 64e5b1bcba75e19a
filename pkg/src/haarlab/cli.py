"""Command-line front end: reproducible experiments with JSON/CSV reports
and figures rendered alongside.

Every command is seeded and deterministic: the same flags produce the same
report bytes.  Exit status is 0 exactly when every asserted inequality
held; on a failure the offending witness is dumped as JSON and the status
is 1 (2 for unusable inputs).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import bellman as bl
from . import carleson as cl
from . import counterexample as ce
from . import marttools as mt
from . import outerspace as osp
from . import twoweight as tw
from .errors import HaarLabError, ParseError
from .filtration import Filtration, build_tree, random_tree
from .numutil import parse_number


def worker_count() -> int:
    """Worker cap from the environment; computations stay deterministic
    because results are merged in submission order."""
    raw = os.environ.get("HAARLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map(fn, items):
    n = worker_count()
    if n <= 1:
        return [fn(it) for it in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# -- input loading -----------------------------------------------------------


def _read_json(path: str):
    p = Path(path)
    if not p.exists():
        raise ParseError(f"file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc}") from exc


def _load_tree(args) -> Filtration:
    if getattr(args, "tree", None):
        return build_tree(_read_json(args.tree), backend=args.backend)
    return random_tree(
        seed=args.seed,
        max_depth=getattr(args, "depth", 4),
        max_branching=getattr(args, "branching", 3),
    )


def _load_weight(f: Filtration, args) -> mt.Weight:
    if getattr(args, "weight", None):
        return mt.Weight.from_spec(f, _read_json(args.weight))
    return mt.random_weight(f, seed=args.seed + 1)


def _load_leaf_map(f: Filtration, path: str):
    data = _read_json(path)
    if isinstance(data, dict) and "leaf_weights" in data:
        data = data["leaf_weights"]
    return {k: parse_number(v) for k, v in data.items()}


def _load_sigma(f: Filtration, args) -> dict:
    if getattr(args, "sigma", None):
        return mt.load_sigma(f, _read_json(args.sigma))
    import random as _r

    rng = _r.Random(args.seed + 2)
    return {aid: rng.uniform(-1, 1) for aid in f.atom_ids}


# -- output ------------------------------------------------------------------


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, name: str, payload: dict) -> Path:
    path = _out_dir(args) / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path

def _plot(args) -> bool:
    return not args.no_plot


def _finish(args, name: str, payload: dict, ok: bool) -> int:
    path = _emit(args, name, payload)
    print(f"[{name}] {'PASS' if ok else 'FAIL'} -> {path}")
    if not ok:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if ok else 1


# -- commands ----------------------------------------------------------------


def cmd_a2(args) -> int:
    f = _load_tree(args)
    w = _load_weight(f, args)
    res = mt.a2_characteristic(f, w)
    payload = {"a2": float(res.value), "witness": res.witness, "n_atoms": len(f)}
    return _finish(args, "a2", payload, True)


def cmd_norm(args) -> int:
    f = _load_tree(args)
    w = _load_weight(f, args)
    sigma = _load_sigma(f, args)
    op = mt.multiplier_operator(f, sigma, w)
    a2 = mt.a2_characteristic(f, w)
    norm = op.norm()
    payload = {
        "norm": norm,
        "a2": float(a2.value),
        "ratio": norm / float(a2.value),
        "a2_witness": a2.witness,
    }
    return _finish(args, "norm", payload, True)


def cmd_scan(args) -> int:
    f = _load_tree(args)
    w = _load_weight(f, args)
    rep = mt.multiplier_norm_scan(
        f, w, args.mode, budget=args.budget, seed=args.seed, record_norms=True
    )
    norms = rep.extra.pop("norms", [])
    payload = rep.to_json()
    ok = True
    if args.mode == "random-continuous" or args.mode == "exhaustive-pm":
        # sanity sentinel mirroring the suite: a wildly superlinear ratio
        # would contradict the linear bound
        ok = rep.ratio <= 100.0
        payload["sentinel_ratio_le_100"] = ok
    if _plot(args) and norms:
        from . import plots

        payload["figure"] = plots.scan_figure(
            norms, rep.a2, str(_out_dir(args) / "scan.png")
        )
    return _finish(args, "scan", payload, ok)


def cmd_carleson(args) -> int:
    f = _load_tree(args)
    w = _load_weight(f, args)
    a2 = float(mt.a2_characteristic(f, w).value)
    seqs = {
        "tau": cl.tau_sequence(f, w),
        "rho": cl.rho_sequence(f, w),
        "gamma": cl.gamma_sequence(f, w),
    }
    reports = {
        "tau": cl.packing_constant(f, seqs["tau"]),
        "rho": cl.packing_constant(f, seqs["rho"]),
        "gamma": cl.packing_constant(f, seqs["gamma"], normalizer=w.u),
    }
    b1 = bl.telescoping_check(f, w, "B1", f.roots[0])
    b2 = bl.telescoping_check(f, w, "B2", f.roots[0])
    c_rho = min(bl.REGISTERED_FLOORS["B1"].values())
    c_tau = min(bl.REGISTERED_FLOORS["B2"].values())
    bounds = {
        "rho_packing_le_4Q_over_floor": reports["rho"].constant
        <= 4.0 * a2 / c_rho * (1 + args.tol),
        "tau_packing_le_128Q2_over_floor": reports["tau"].constant
        <= 128.0 * a2 * a2 / c_tau * (1 + args.tol),
        "telescoping_b1": b1.holds,
        "telescoping_b2": b2.holds,
    }
    payload = {
        "a2": a2,
        "packing": {k: r.to_json() for k, r in reports.items()},
        "telescoping": {"B1": b1.to_json(), "B2": b2.to_json()},
        "bounds": bounds,
    }
    if _plot(args):
        from . import plots

        payload["figure"] = plots.packing_figure(
            reports, str(_out_dir(args) / "carleson.png")
        )
    return _finish(args, "carleson", payload, all(bounds.values()))


def cmd_outer(args) -> int:
    import random as _r

    f = _load_tree(args)
    w = _load_weight(f, args)
    rng = _r.Random(args.seed + 3)
    checks = []
    for _ in range(args.budget):
        fn = [rng.uniform(-2, 2) for _ in range(f.n_leaves)]
        gn = [rng.uniform(-2, 2) for _ in range(f.n_leaves)]
        Fn = {aid: rng.uniform(-2, 2) for aid in f.atom_ids}
        Gn = {aid: rng.uniform(-2, 2) for aid in f.atom_ids}
        checks.append(osp.duality_check(f, Fn, Gn))
        checks.append(osp.duality_check(f, Fn, Gn, density=w.w))
        checks.append(
            osp.reciprocal_average_bound(f, [abs(v) + 0.05 for v in fn], f.roots[0])
        )
        checks.append(osp.bilinear_embedding_check(f, w, fn, gn))
        checks.append(osp.averaging_embedding_check(f, w.u, fn))
        checks.append(osp.maximal_bound_check(f, w.w, fn))
    ok = all(c.holds for c in checks)
    payload = {
        "n_checks": len(checks),
        "violations": [c.to_json() for c in checks if not c.holds],
        "worst_slack": min(c.slack for c in checks),
    }
    if _plot(args):
        from . import plots

        payload["figure"] = plots.check_cloud_figure(
            checks, str(_out_dir(args) / "outer.png"), title="outer-norm checks"
        )
    return _finish(args, "outer", payload, ok)


def cmd_bellman(args) -> int:
    config = bl.SamplerConfig(n_samples=args.samples, seed=args.seed)
    certs = []
    ok = True
    for q in args.q_values:
        for kind in args.kinds:
            cert = (
                bl.certify_drop_b1(q, config)
                if kind == "B1"
                else bl.certify_drop_b2(q, config)
            )
            certs.append(cert)
            ok = ok and cert.passed
    payload = {"certificates": [c.to_json() for c in certs]}
    if _plot(args):
        from . import plots

        payload["figure"] = plots.bellman_figure(
            certs, str(_out_dir(args) / "bellman.png")
        )
    return _finish(args, "bellman", payload, ok)


def cmd_t1(args) -> int:
    if args.bundle:
        data = _read_json(args.bundle)
        f = build_tree(data["tree"], backend=args.backend)
        sigma = mt.load_sigma(f, data.get("sigma", {}))
        pair = tw.MeasurePair.build(
            f,
            {k: parse_number(v) for k, v in data["mu1"].items()},
            {k: parse_number(v) for k, v in data["mu2"].items()},
        )
    else:
        f = _load_tree(args)
        sigma = _load_sigma(f, args)
        if args.mu1:
            pair = tw.MeasurePair.build(
                f, _load_leaf_map(f, args.mu1), _load_leaf_map(f, args.mu2)
            )
        else:
            import random as _r

            rng = _r.Random(args.seed + 4)
            if args.backend == "rational":
                draw = lambda: Fraction(rng.randint(0, 64), 32)
            else:
                draw = lambda: rng.uniform(0, 2)
            pair = tw.MeasurePair.build(
                f,
                {l: draw() for l in f.leaf_ids},
                {l: draw() for l in f.leaf_ids},
            )
    chk = tw.t1_bound_check(f, sigma, pair)
    parts = tw.paraproduct_decompose(f, sigma, pair, exact=args.backend == "rational")
    a, _ = tw.testing_constant(f, sigma, pair)
    j, _ = tw.joint_a2(f, pair)
    bounds = {
        "testing_bound": chk.holds,
        "residual_small": float(parts.residual) <= args.tol,
        "pi1_le_2A": parts.pi1_norm <= 2 * a * (1 + args.tol) + 1e-12,
        "diag_le_A_plus_2sqrt": parts.diag_norm
        <= (a + 2 * float(j) ** 0.5) * (1 + args.tol) + 1e-12,
    }
    payload = {
        "bound_check": chk.to_json(),
        "decomposition": parts.to_json(),
        "bounds": bounds,
    }
    return _finish(args, "t1", payload, all(bounds.values()))


def cmd_sigma4(args) -> int:
    import random as _r

    f = _load_tree(args)
    w = _load_weight(f, args)
    rng = _r.Random(args.seed + 5)
    if args.f_values:
        fn = _load_leaf_map(f, args.f_values)
        gn = _load_leaf_map(f, args.g_values) if args.g_values else fn
    else:
        fn = [rng.uniform(-2, 2) for _ in range(f.n_leaves)]
        gn = [rng.uniform(-2, 2) for _ in range(f.n_leaves)]
    rep = tw.bilinear_sigma_decomposition(f, w, fn, gn)
    ok = (
        rep.holds
        and float(rep.vanishing_residual) <= args.tol
        and float(rep.atom_identity_residual) <= args.tol
    )
    return _finish(args, "sigma4", rep.to_json(), ok)


def cmd_counterexample(args) -> int:
    eps = [Fraction(e) for e in args.eps] if args.eps else [
        Fraction(1, 10),
        Fraction(1, 100),
        Fraction(1, 10000),
    ]
    rows = ce.sweep(eps)
    ok = all(r["holds"] for r in rows)
    csv_path = _out_dir(args) / "counterexample.csv"
    csv_path.write_text(ce.sweep_csv(rows), encoding="utf-8")
    payload = {
        "rows": rows,
        "csv": str(csv_path),
        "verify": [ce.verify_instance(ce.build_instance(e)).to_json() for e in eps],
    }
    if _plot(args):
        from . import plots

        payload["figure"] = plots.sweep_figure(
            rows, str(_out_dir(args) / "counterexample.png")
        )
    return _finish(args, "counterexample", payload, ok)


def cmd_suite(args) -> int:
    import random as _r

    summary: dict = {"seed": args.seed, "trees": args.trees}
    failures: list = []

    # counterexample block
    ce_rows = ce.sweep([Fraction(1, 10), Fraction(1, 100), Fraction(1, 10000)])
    summary["counterexample_holds"] = all(r["holds"] for r in ce_rows)
    if not summary["counterexample_holds"]:
        failures.append({"stage": "counterexample", "rows": ce_rows})

    # random-tree battery
    def one_tree(i: int) -> dict:
        seed = args.seed + 1000 * i
        tree = None
        for probe in range(seed, seed + 50):
            cand = random_tree(
                seed=probe, max_depth=args.depth, max_branching=3,
                measure_law=(1e-2, 1e2),
            )
            if cand.splitting_atoms() and cand.n_leaves <= 300:
                tree = cand
                break
        if tree is None:
            return {"skipped": True}
        rng = _r.Random(seed + 1)
        w = mt.random_weight(tree, seed=seed + 2, spread_decades=0.4 + 1.8 * (i % 7) / 6)
        a2 = float(mt.a2_characteristic(tree, w).value)
        out = {"a2": a2, "n_leaves": tree.n_leaves}
        sup, _arg = mt.partial_sum_norm_sup(tree, w)
        out["projection_sup"] = sup
        out["projection_two_sided"] = (
            0.5 * a2 ** 0.5 <= sup * (1 + 1e-8) and sup <= 2 * a2 ** 0.5 * (1 + 1e-8)
        )
        scan = mt.multiplier_norm_scan(
            tree, w, "random-continuous", budget=args.budget, seed=seed + 3
        )
        gen = mt.multiplier_norm_scan(tree, w, "generation", budget=64, seed=seed + 3)
        out["scan_ratio"] = max(scan.ratio, gen.ratio)
        out["scan_sentinel"] = out["scan_ratio"] <= 100.0
        rho = cl.rho_sequence(tree, w)
        tau = cl.tau_sequence(tree, w)
        k_rho = cl.packing_constant(tree, rho).constant
        k_tau = cl.packing_constant(tree, tau).constant
        c1 = min(bl.REGISTERED_FLOORS["B1"].values())
        c2 = min(bl.REGISTERED_FLOORS["B2"].values())
        out["rho_packing_ratio"] = k_rho / a2
        out["tau_packing_ratio"] = k_tau / a2 ** 2
        out["packing_bounds"] = (
            k_rho <= 4 * a2 / c1 * (1 + 1e-9) and k_tau <= 128 * a2 ** 2 / c2 * (1 + 1e-9)
        )
        fn = [rng.uniform(-2, 2) for _ in range(tree.n_leaves)]
        gn = [rng.uniform(-2, 2) for _ in range(tree.n_leaves)]
        out["embedding_checks"] = all(
            c.holds
            for c in (
                osp.duality_check(
                    tree,
                    {a: rng.uniform(-2, 2) for a in tree.atom_ids},
                    {a: rng.uniform(-2, 2) for a in tree.atom_ids},
                ),
                osp.bilinear_embedding_check(tree, w, fn, gn),
                osp.averaging_embedding_check(tree, w.u, fn),
                osp.maximal_bound_check(tree, w.w, fn),
                cl.carleson_embedding_check(
                    tree, w.u, {a: rng.uniform(0, 1) for a in tree.atom_ids}, fn
                ),
            )
        )
        pair = tw.MeasurePair.build(
            tree,
            [rng.uniform(0, 2) for _ in range(tree.n_leaves)],
            [rng.uniform(0, 2) for _ in range(tree.n_leaves)],
        )
        sg = {a: rng.uniform(-1, 1) for a in tree.atom_ids}
        t1 = tw.t1_bound_check(tree, sg, pair)
        out["t1_holds"] = t1.holds
        sig = tw.bilinear_sigma_decomposition(tree, w, fn, gn)
        out["sigma_split_holds"] = bool(
            sig.holds and float(sig.vanishing_residual) < 1e-9
        )
        out["ok"] = all(
            out[k]
            for k in (
                "projection_two_sided",
                "scan_sentinel",
                "packing_bounds",
                "embedding_checks",
                "t1_holds",
                "sigma_split_holds",
            )
        )
        return out

    results = [r for r in _map(one_tree, range(args.trees)) if not r.get("skipped")]
    summary["n_instances"] = len(results)
    summary["max_scan_ratio"] = max(r["scan_ratio"] for r in results)
    summary["max_rho_packing_ratio"] = max(r["rho_packing_ratio"] for r in results)
    summary["max_tau_packing_ratio"] = max(r["tau_packing_ratio"] for r in results)
    summary["a2_range"] = [
        min(r["a2"] for r in results),
        max(r["a2"] for r in results),
    ]
    bad = [r for r in results if not r["ok"]]
    if bad:
        failures.append({"stage": "tree-battery", "instances": bad})

    # certificates at reduced sample count
    config = bl.SamplerConfig(n_samples=args.samples, seed=args.seed)
    certs = [
        bl.certify_drop_b1(1.0, config),
        bl.certify_drop_b2(1.0, config),
        bl.certify_drop_b1(100.0, config),
        bl.certify_drop_b2(100.0, config),
    ]
    summary["bellman_pass"] = all(c.passed for c in certs)
    if not summary["bellman_pass"]:
        failures.append({"stage": "bellman", "certs": [c.to_json() for c in certs]})

    ok = not failures
    payload = {"summary": summary, "failures": failures}
    if _plot(args):
        from . import plots

        pts = [(r["a2"], r["scan_ratio"] * r["a2"]) for r in results]
        payload["figures"] = [
            plots.ratio_cloud_figure(
                pts,
                str(_out_dir(args) / "suite_scan.png"),
                xlabel="A2 characteristic",
                ylabel="max scanned norm",
                guides=[(1.0, "norm = A2"), (100.0, "sentinel 100 A2")],
                title="multiplier norms across the suite",
            ),
            plots.bellman_figure(certs, str(_out_dir(args) / "suite_bellman.png")),
        ]
    # CSV table of per-instance constants
    csv_lines = ["a2,projection_sup,scan_ratio,rho_packing_ratio,tau_packing_ratio"]
    for r in results:
        csv_lines.append(
            ",".join(
                repr(float(r[k]))
                for k in (
                    "a2",
                    "projection_sup",
                    "scan_ratio",
                    "rho_packing_ratio",
                    "tau_packing_ratio",
                )
            )
        )
    (_out_dir(args) / "suite.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    return _finish(args, "suite", payload, ok)


# -- parser ------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tree", help="tree spec JSON file")
    p.add_argument("--weight", help="weight JSON file (leaf_weights map)")
    p.add_argument("--sigma", help="multiplier coefficients JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--backend", choices=("rational", "float"), default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default="reports", help="output directory")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--depth", type=int, default=4, help="random tree depth when no --tree")
    p.add_argument("--branching", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haarlab",
        description="exact finite computations for weighted martingale multipliers",
    )
    parser.add_argument("--version", action="version", version=f"haarlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    handlers = {}

    def add(name, fn, configure=None, help=""):
        p = sub.add_parser(name, help=help)
        _add_common(p)
        if configure:
            configure(p)
        handlers[name] = fn
        return p

    add("a2", cmd_a2, help="characteristic of a weight over the tree atoms")
    add("norm", cmd_norm, help="weighted operator norm of one multiplier")
    add(
        "scan",
        cmd_scan,
        configure=lambda p: p.add_argument(
            "--mode", choices=mt.SCAN_MODES, default="random-continuous"
        ),
        help="multiplier norm scans",
    )
    add("carleson", cmd_carleson, help="packing constants and telescoping bounds")
    add("outer", cmd_outer, help="outer-norm inequality checks on random draws")
    add(
        "bellman",
        cmd_bellman,
        configure=lambda p: (
            p.add_argument("--kinds", nargs="+", choices=("B1", "B2"), default=["B1", "B2"]),
            p.add_argument("--q-values", nargs="+", type=float, default=[1.0, 4.0, 100.0]),
            p.add_argument("--samples", type=int, default=100000),
        ),
        help="tangent-drop certificates",
    )
    add(
        "t1",
        cmd_t1,
        configure=lambda p: (
            p.add_argument("--bundle", help="instance bundle JSON {tree, sigma, mu1, mu2}"),
            p.add_argument("--mu1", help="leaf density JSON file"),
            p.add_argument("--mu2", help="leaf density JSON file"),
        ),
        help="two-measure testing bound and paraproduct split",
    )
    add(
        "sigma4",
        cmd_sigma4,
        configure=lambda p: (
            p.add_argument("--f-values", help="leaf function JSON file"),
            p.add_argument("--g-values", help="leaf function JSON file"),
        ),
        help="four-part bilinear decomposition",
    )
    add(
        "counterexample",
        cmd_counterexample,
        configure=lambda p: p.add_argument("--eps", nargs="*", help="epsilon values (fractions ok)"),
        help="unbounded-transform family",
    )
    add(
        "suite",
        cmd_suite,
        configure=lambda p: (
            p.add_argument("--trees", type=int, default=25),
            p.add_argument("--samples", type=int, default=50000),
        ),
        help="full randomized battery with summary constants",
    )
    parser._haarlab_handlers = handlers  # type: ignore[attr-defined]
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = parser._haarlab_handlers[args.command]  # type: ignore[attr-defined]
    try:
        return handler(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HaarLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
