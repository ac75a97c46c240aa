"""The ``augstab`` command.

Subcommands
-----------
``verify``
    run a randomized inequality campaign (``--lemma``, ``--trials``,
    ``--seed``, ``--tol``) or a campaign spec file given with ``--path``;
``limit``
    classify a sampled path of configurations (``--path``);
``chart``
    chart coordinates of a line (``--path``) on a tree (``--chart-tree``);
``points-model``
    points-model campaigns (``--lemma roundtrip|triangle|reconstruct``) or
    a points-model request file (``--path``);
``p1``
    the Bessel coordinate and boundary diagnostics at ``--tau``, or the
    boundary limit of a path of ``tau`` values (``--path``);
``export``
    plot data: the fundamental strip grid as CSV, a tree as DOT, or the
    diagnostics of a path as CSV.

Exit codes: 0 success, 1 an inequality violation or failed
classification, 2 unparsable input, 3 internal error.  All output is
deterministic for fixed arguments; ``MSL_THREADS`` sets the number of
worker processes for campaigns.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .campaigns import LEMMAS, CampaignSpec, run_campaign
from .level_tree import MarkedLevelTree
from .moduli import ChartError, LimitOptions, classify_limit, to_blowup, to_chart
from .multiscale_line import MultiscaleLine
from .models import p1 as p1m
from .models import points as pts

EXIT_OK, EXIT_VIOLATION, EXIT_PARSE, EXIT_INTERNAL = 0, 1, 2, 3
POINTS_LEMMAS = ("roundtrip", "triangle", "reconstruct")


class InputError(Exception):
    """Unparsable or schema-violating input (exit code 2)."""


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _dump(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _path_samples(data):
    if isinstance(data, dict):
        for key in ("samples", "path"):
            if key in data:
                return data[key]
        raise InputError("path file needs a 'samples' list")
    if isinstance(data, list):
        return data
    raise InputError("path file must hold a list of samples")


def _limit_options(data, tol: float | None) -> LimitOptions:
    """``LimitOptions`` from an optional ``"options"`` object of a path file; ``--tol`` wins."""
    raw = dict(data.get("options", {})) if isinstance(data, dict) else {}
    unknown = set(raw) - {"tail", "tol", "rho", "eta"}
    if unknown:
        raise InputError(f"unknown limit options {sorted(unknown)}")
    if tol is not None:
        raw["tol"] = tol
    return LimitOptions(**{k: (int(v) if k == "tail" else float(v)) for k, v in raw.items()})


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------
def cmd_verify(args) -> int:
    if args.path:
        data = _load_json(args.path)
        try:
            spec = CampaignSpec.from_json(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad campaign spec: {exc}") from exc
    else:
        if args.lemma is None:
            raise InputError("verify needs --lemma or --path")
        try:
            spec = CampaignSpec(args.lemma, args.trials, args.seed, {})
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    if args.tol is not None:
        spec = CampaignSpec(spec.lemma, spec.trials, spec.seed, {**spec.params, "tol": args.tol})
    report = run_campaign(spec)
    text = report.to_csv() if args.format == "csv" else report.dumps()
    _emit(text, args.out)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_limit(args) -> int:
    if not args.path:
        raise InputError("limit needs --path")
    data = _load_json(args.path)
    samples = _path_samples(data)
    try:
        opts = _limit_options(data, args.tol)
        res = classify_limit(samples, opts)
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise InputError(f"bad path: {exc}") from exc
    dot = res.tree.to_dot("limit") if res.tree is not None else "digraph limit {\n}\n"
    if args.format == "dot":
        text = dot
    elif args.format == "csv":
        text = res.diagnostics_csv()
    elif args.format == "json":
        text = _dump(res.to_json())
    else:
        text = dot + _dump(res.to_json())
    _emit(text, args.out)
    return EXIT_OK if res.verdict == "converges" else EXIT_VIOLATION


def cmd_chart(args) -> int:
    if not (args.path and args.chart_tree):
        raise InputError("chart needs --path (line) and --chart-tree (tree)")
    try:
        line = MultiscaleLine.from_json(_load_json(args.path))
        tree = MarkedLevelTree.from_json(_load_json(args.chart_tree), stable=True)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad input: {exc}") from exc
    try:
        if line.scale_mode == "complex_projective":
            out = to_chart(line, tree).to_json()
        else:
            out = to_blowup(line, tree).to_json()
    except ChartError as exc:
        _emit(_dump({"error": str(exc)}), args.out)
        return EXIT_VIOLATION
    _emit(_dump(out), args.out)
    return EXIT_OK


def _points_campaign(lemma: str, trials: int, seed: int, tol: float) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    bad: list[dict] = []
    worst = 0.0
    for trial in range(trials):
        if lemma == "roundtrip":
            s = pts.random_points_aug_stab(rng)
            s2 = pts.from_marked_line(pts.points_ell(s))
            if not s.identical(s2):
                bad.append({"trial": trial, "sigma": s.to_json()})
        elif lemma == "triangle":
            s = pts.random_points_aug_stab(rng)
            t = pts.random_coarsening(rng, s)
            u = pts.random_coarsening(rng, t)
            gap = pts.directed_distance(s, u) - pts.directed_distance(s, t) - pts.directed_distance(t, u)
            worst = max(worst, gap)
            if gap > tol:
                bad.append({"trial": trial, "excess": gap})
        else:
            seq, target = pts.synthetic_family(rng)
            try:
                got = pts.reconstruct_limit(seq)
            except pts.PointsError as exc:
                bad.append({"trial": trial, "error": str(exc)})
                continue
            err = max(abs(got.charge[p] - target.charge[p]) for p in range(1, target.n + 1))
            worst = max(worst, err)
            same = got.partition() == target.partition() and got.line.tree == target.line.tree
            if not same or err > tol:
                bad.append({"trial": trial, "charge_error": err, "same_tree": same})
    return {"lemma": lemma, "trials": trials, "seed": seed, "violations": bad, "worst": worst}


def cmd_points(args) -> int:
    if args.path:
        data = _load_json(args.path)
        try:
            return _points_request(data, args)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, pts.PointsError) and "coarsen" in str(exc):
                _emit(_dump({"error": str(exc)}), args.out)
                return EXIT_VIOLATION
            raise InputError(f"bad points-model request: {exc}") from exc
    if args.lemma not in POINTS_LEMMAS:
        raise InputError(f"points-model needs --path or --lemma in {POINTS_LEMMAS}")
    tol = args.tol if args.tol is not None else (1e-9 if args.lemma == "triangle" else 1e-6)
    rep = _points_campaign(args.lemma, args.trials, args.seed, tol)
    _emit(_dump(rep), args.out)
    return EXIT_OK if not rep["violations"] else EXIT_VIOLATION


def _interior_seq(data) -> list[pts.PointsAugStab]:
    return [pts.PointsAugStab.interior([complex(*c) if isinstance(c, list) else complex(c) for c in row])
            for row in data]


def _points_request(data: dict, args) -> int:
    """Requests: ``{"op": "ell" | "filtration" | "distance" | "convergence" | "reconstruct", ...}``."""
    op = data["op"]
    if op == "ell":
        sigma = pts.PointsAugStab.from_json(data["sigma"])
        out = pts.points_ell(sigma).to_json()
    elif op == "filtration":
        sigma = pts.PointsAugStab.from_json(data["sigma"])
        E = pts.PointsObject.of(tuple(s) for s in data["object"])
        t = float(data.get("t", 0.0))
        f = pts.scale_filtration(sigma, E, t)
        out = {"steps": [[v, o.to_json()] for v, o in f.steps], "t": t,
               "well_placed": f.well_placed, "dominant": f.dominant}
    elif op == "distance":
        sigma = pts.PointsAugStab.from_json(data["sigma"])
        tau = pts.PointsAugStab.from_json(data["tau"])
        out = {"distance": pts.directed_distance(sigma, tau)}
    elif op == "convergence":
        seq = _interior_seq(data["sequence"])
        target = pts.PointsAugStab.from_json(data["target"])
        rep = pts.check_convergence(seq, target)
        out = {"verdict": rep.verdict, "checks": rep.checks, "messages": rep.messages}
        _emit(_dump(out), args.out)
        return EXIT_OK if rep.converges else EXIT_VIOLATION
    elif op == "reconstruct":
        seq = _interior_seq(data["sequence"])
        try:
            out = pts.reconstruct_limit(seq).to_json()
        except pts.PointsError as exc:
            _emit(_dump({"error": str(exc)}), args.out)
            return EXIT_VIOLATION
    else:
        raise InputError(f"unknown op {op!r}")
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_p1(args) -> int:
    if args.path:
        raw = _load_json(args.path)
        try:
            taus = [p1m.parse_tau(x) if isinstance(x, str) else complex(x[0], x[1]) for x in _path_samples(raw)]
            res = p1m.p1_boundary_limit(taus)
        except (TypeError, ValueError, IndexError) as exc:
            raise InputError(f"bad tau path: {exc}") from exc
        _emit(_dump(res.to_json()), args.out)
        return EXIT_OK if res.verdict != "undecided" else EXIT_VIOLATION
    if args.tau is None:
        raise InputError("p1 needs --tau or --path")
    try:
        tau = p1m.parse_tau(args.tau)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    try:
        out = p1m.diagnostics(tau)
    except ValueError as exc:
        _emit(_dump({"error": str(exc)}), args.out)
        return EXIT_VIOLATION
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_export(args) -> int:
    if args.chart_tree:
        try:
            tree = MarkedLevelTree.from_json(_load_json(args.chart_tree))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad tree: {exc}") from exc
        _emit(tree.to_dot(), args.out)
        return EXIT_OK
    if args.path:
        try:
            data = _load_json(args.path)
            res = classify_limit(_path_samples(data), _limit_options(data, args.tol))
        except (TypeError, ValueError, KeyError, IndexError) as exc:
            raise InputError(f"bad path: {exc}") from exc
        _emit(res.diagnostics_csv(), args.out)
        return EXIT_OK
    xs = np.linspace(-4.0, 6.0, 41)
    thetas = np.linspace(0.0, 0.95, 20)
    _emit(p1m.strip_csv(xs, thetas), args.out)
    return EXIT_OK


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="augstab", description="Augmented stability conditions toolkit.")
    p.add_argument("--version", action="version", version=f"augstab {__version__}")
    p.add_argument("command", choices=["limit", "verify", "chart", "points-model", "p1", "export"])
    p.add_argument("--lemma", help=f"campaign: {sorted(LEMMAS)} or points-model {list(POINTS_LEMMAS)}")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float)
    p.add_argument("--path")
    p.add_argument("--chart-tree", dest="chart_tree")
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv", "dot"])
    p.add_argument("--tau")
    return p


COMMANDS = {
    "verify": cmd_verify,
    "limit": cmd_limit,
    "chart": cmd_chart,
    "points-model": cmd_points,
    "p1": cmd_p1,
    "export": cmd_export,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.trials <= 0:
        sys.stderr.write("augstab: --trials must be positive\n")
        return EXIT_PARSE
    if not 0 <= args.seed < 2 ** 64:
        sys.stderr.write("augstab: --seed must be a 64-bit unsigned integer\n")
        return EXIT_PARSE
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        sys.stderr.write(f"augstab: {exc}\n")
        return EXIT_PARSE
    except Exception as exc:  # noqa: BLE001 - any other failure is an internal error
        sys.stderr.write(f"augstab: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
