"""Batch command-line front end: files in, tables out.

Subcommands:

- ``fuse``: combine mass-function JSON files (conjunctive, disjunctive,
  or overlapping-frame rule) and print a mass/bel/pl/BetP table.
- ``cluster``: score partitions of a set of sources by within-group
  conflict and suggest how many events they describe.
- ``classify-train`` / ``classify-predict``: fit the partially-supervised
  classifier from a CSV learning set and classify a CSV test set.
- ``ir``: degree-of-support ranking of a citation graph.
- ``experiment``: run one of the five synthetic benchmark studies.

Everything is deterministic: stochastic commands derive their randomness
from ``--seed`` (default 0).  Output is CSV by default (values printed
with 6 significant digits); ``--format pretty`` aligns columns for
reading.  Exit status: 0 on success, 1 on a module error (one-line
diagnostic on stderr), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from tbmkit.core import (
    BeliefError,
    Frame,
    MassFunction,
    combine_conjunctive,
    combine_disjunctive,
    mass_to_dict,
    read_bba,
)
from tbmkit import classifier as clf
from tbmkit import clustering
from tbmkit import experiments
from tbmkit import pas
from tbmkit.overlap import OverlapProblem, fuse_overlapping

DEFAULT_SEED = 0


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _emit(rows, header, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "csv":
        writer = csv.writer(out)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
        return
    cells = [list(header)] + [[_fmt(x) for x in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for r in cells:
        print("  ".join(x.ljust(w) for x, w in zip(r, widths)).rstrip(), file=out)


def _subset_rows(m: MassFunction):
    """Rows of (set, mass, bel, pl, BetP) for the fuse table.

    All nonempty subsets are listed for frames of up to 8 labels; larger
    frames list focal sets and singletons only.  The BetP column is
    filled on singleton rows.
    """
    frame = m.frame
    try:
        betp = m.pignistic()
    except BeliefError:
        betp = None  # flat contradiction: no pignistic column
    if len(frame) <= 8:
        subsets = range(1, frame.full + 1)
    else:
        subsets = sorted({*m.focal_sets(), *(1 << i for i in range(len(frame)))}
                         - {0})
    rows = []
    if m.conflict() > 0.0:
        rows.append(("{}", m.conflict(), "", "", ""))
    for mask in subsets:
        labels = "|".join(frame.members(mask))
        bp = ""
        if betp is not None and mask.bit_count() == 1:
            bp = betp[frame.members(mask)[0]]
        rows.append((labels, m.mass(mask), m.bel(mask), m.pl(mask), bp))
    return rows


def _cmd_fuse(args) -> int:
    masses = [read_bba(path) for path in args.inputs]
    if len(masses) < 2:
        raise ValueError("fuse needs at least two input files")
    if args.rule == "conjunctive":
        fused = combine_conjunctive(*masses, normalize=args.normalize)
    elif args.rule == "disjunctive":
        fused = combine_disjunctive(*masses)
    else:  # overlap; several sources fold pairwise left to right
        fused = masses[0]
        for m in masses[1:]:
            fusion = fuse_overlapping(OverlapProblem(fused, m))
            for transfer in fusion.orphan_transfers:
                print(f"note: orphaned mass {_fmt(transfer.mass)} on "
                      f"{{{','.join(transfer.shared_subset)}}} moved to "
                      f"{{{','.join(transfer.target)}}}", file=sys.stderr)
            fused = fusion.mass
        if args.normalize:
            fused = combine_conjunctive(fused, normalize=True)
    if args.out_bba:
        with open(args.out_bba, "w", encoding="utf-8") as fh:
            json.dump(mass_to_dict(fused), fh, indent=2)
            fh.write("\n")
    _emit(_subset_rows(fused), ("set", "mass", "bel", "pl", "betp"), args.format)
    return 0


def _cmd_cluster(args) -> int:
    pool = clustering.EvidencePool([read_bba(path) for path in args.inputs])
    rows = []
    if args.groups is not None:
        best = clustering.best_partition(pool, args.groups, seed=args.seed)
        if best.method == "exhaustive":
            for part in clustering.partitions_into(len(pool), args.groups):
                report = clustering.total_conflict(pool, part)
                rows.append(("partition", part.describe(),
                             ";".join(_fmt(c) for c in report.group_conflicts),
                             report.total))
        rows.append(("best", best.partition.describe(),
                     ";".join(_fmt(c) for c in best.group_conflicts),
                     best.total))
    k, report = clustering.suggest_source_count(
        pool, k_max=args.k_max, threshold=args.tau, seed=args.seed)
    rows.append((f"suggested k={k}", report.partition.describe(),
                 ";".join(_fmt(c) for c in report.group_conflicts),
                 report.total))
    _emit(rows, ("kind", "partition", "group_conflicts", "total"), args.format)
    return 0


def _config_from_args(args, a: float) -> clf.ClassifierConfig:
    return clf.ClassifierConfig(a=a, k_cov=args.k_cov, ridge=args.ridge,
                                normalize_combination=args.normalize)


def _cmd_classify_train(args) -> int:
    frame, cases = clf.read_cases_csv(args.train)
    ls = clf.fit_rescaler(frame, cases)
    if args.a is not None:
        a = args.a
    else:
        grid = [float(x) for x in args.grid.split(",")]
        a = clf.tune_a(ls, grid, _config_from_args(args, 1.0))
    model = {
        "frame": list(frame.labels),
        "config": {"a": a, "k_cov": args.k_cov, "ridge": args.ridge,
                   "normalize": args.normalize},
        "cases": [{"features": [float(x) for x in c.features],
                   "pkc": list(frame.members(c.pkc))} for c in cases],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(model, fh, indent=2)
        fh.write("\n")
    _emit([("cases", len(cases)), ("features", ls.n_features), ("a", a)],
          ("key", "value"), args.format)
    return 0


def _load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        model = json.load(fh)
    frame = Frame(model["frame"])
    cases = [clf.LabeledCase(np.array(entry["features"], dtype=float),
                             frame.subset(entry["pkc"]))
             for entry in model["cases"]]
    cfg = clf.ClassifierConfig(
        a=model["config"]["a"], k_cov=model["config"]["k_cov"],
        ridge=model["config"]["ridge"],
        normalize_combination=model["config"]["normalize"])
    return clf.fit_rescaler(frame, cases), cfg


def _cmd_classify_predict(args) -> int:
    ls, cfg = _load_model(args.model)
    frame, test_cases = clf.read_cases_csv(args.test, frame=ls.frame)
    queries = np.vstack([c.features for c in test_cases])
    results = clf.predict_batch(ls, queries, cfg)
    header = ("case", "predicted") + tuple(f"betp_{lab}" for lab in frame.labels)
    rows = []
    for i, result in enumerate(results):
        rows.append((i, result.label) + tuple(result.betp.probabilities))
    _emit(rows, header, args.format)
    truth = [frame.members(c.pkc) for c in test_cases]
    if all(len(t) == 1 for t in truth):
        correct = sum(r.label == t[0] for r, t in zip(results, truth))
        print(f"pcc: {_fmt(100.0 * correct / len(results))}", file=sys.stderr)
    return 0


def _cmd_ir(args) -> int:
    graph = pas.read_graph(args.graph, link_probability=args.lam,
                           logit_slope=args.logit_a,
                           logit_intercept=args.logit_b)
    if args.target is not None:
        expr = pas.enumerate_arguments(graph, args.target,
                                       max_paths=args.max_paths)
        support = pas.support_value(expr, mc_samples=args.mc_samples,
                                    seed=args.seed)
        if args.format == "pretty":
            print(f"support({args.target}) = {expr.describe()}")
        rows = [(args.target, graph.docs[args.target] or "",
                 graph.alpha(args.target), support)]
    else:
        rows = [(r.doc, r.rank if r.rank is not None else "", r.alpha, r.support)
                for r in pas.rank_documents(graph, max_paths=args.max_paths,
                                            mc_samples=args.mc_samples,
                                            seed=args.seed)]
    _emit(rows, ("id", "rank", "alpha", "support"), args.format)
    return 0


def _cmd_experiment(args) -> int:
    result = experiments.run_case_study(
        args.case, args.reps, seed=args.seed, sigma2=args.sigma2,
        variant=args.variant)
    rows = [(r.replication, r.tbm_pcc, r.baseline_pcc) for r in result.rows]
    rows.append(("mean", result.mean("tbm_pcc"), result.mean("baseline_pcc")))
    _emit(rows, ("rep", "tbm_pcc", "baseline_pcc"), args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbmkit",
        description="Belief-function toolkit: fusion, clustering, "
                    "classification, citation support, benchmarks.")
    parser.add_argument("--format", choices=("csv", "pretty"), default="csv",
                        help="output format (default csv)")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="seed for all stochastic commands (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="combine mass-function JSON files")
    p.add_argument("--rule", choices=("conjunctive", "disjunctive", "overlap"),
                   default="conjunctive")
    p.add_argument("--normalize", action="store_true",
                   help="divide out the conflict mass")
    p.add_argument("--out-bba", metavar="PATH",
                   help="also write the fused mass function as JSON")
    p.add_argument("inputs", nargs="+", metavar="BBA_JSON")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("cluster", help="group sources by within-group conflict")
    p.add_argument("--groups", type=int, metavar="K",
                   help="score partitions into exactly K groups")
    p.add_argument("--k-max", type=int, default=None,
                   help="largest group count to consider when suggesting")
    p.add_argument("--tau", type=float, default=0.05,
                   help="tolerable total conflict (default 0.05)")
    p.add_argument("inputs", nargs="+", metavar="BBA_JSON")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("classify-train",
                       help="fit the classifier from a learning-set CSV")
    p.add_argument("--train", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="MODEL_JSON")
    p.add_argument("--a", type=float, default=None,
                   help="discount slope (omit to tune by leave-one-out)")
    p.add_argument("--grid", default="0.1,0.2,0.5,1,2,5",
                   help="comma-separated slopes for tuning")
    p.add_argument("--k-cov", type=int, default=None)
    p.add_argument("--ridge", type=float, default=clf.RIDGE_DEFAULT)
    p.add_argument("--normalize", action="store_true",
                   help="normalize the pooled combination")
    p.set_defaults(func=_cmd_classify_train)

    p = sub.add_parser("classify-predict",
                       help="classify a test CSV with a fitted model")
    p.add_argument("--model", required=True, metavar="MODEL_JSON")
    p.add_argument("--test", required=True, metavar="CSV")
    p.set_defaults(func=_cmd_classify_predict)

    p = sub.add_parser("ir", help="citation-graph degree-of-support ranking")
    p.add_argument("graph", metavar="GRAPH_JSON")
    p.add_argument("--lambda", dest="lam", type=float,
                   default=pas.DEFAULT_LINK_PROBABILITY,
                   help="link-assumption probability")
    p.add_argument("--logit-a", type=float, default=pas.DEFAULT_LOGIT_SLOPE,
                   help="slope of the rank logit")
    p.add_argument("--logit-b", type=float, default=pas.DEFAULT_LOGIT_INTERCEPT,
                   help="intercept of the rank logit")
    p.add_argument("--target", default=None,
                   help="report a single document (pretty format also "
                        "prints its symbolic support)")
    p.add_argument("--mc-samples", type=int, default=None,
                   help="Monte Carlo fallback sample count for wide "
                        "support expressions")
    p.add_argument("--max-paths", type=int, default=100_000,
                   help="abort enumeration beyond this many paths")
    p.set_defaults(func=_cmd_ir)

    p = sub.add_parser("experiment", help="run a synthetic benchmark study")
    p.add_argument("--case", type=int, required=True, choices=(1, 2, 3, 4, 5))
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--sigma2", type=float, default=10.0,
                   help="variance level for study 4")
    p.add_argument("--variant", choices=("equal", "unequal"),
                   default="unequal", help="covariance variant for study 5")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BeliefError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
