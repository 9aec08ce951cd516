"""``canrev`` command line: decode, train, eval, synth."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .baselines import BASELINES, run_baseline
from .dbcio import DbcError, messages_by_id, read_dbc, write_dbc
from .evalkit import REGIMES, EvalTable, boundary_metrics, mean_l1_error
from .ingest import (
    CandumpError,
    DidFormatError,
    default_did_rules,
    extract_did_traces,
    load_did_csv,
    load_did_rules,
    parse_candump,
    partition_traces,
    serialize_candump,
    strip_diagnostics,
    write_did_csv,
)
from .pipeline import PipelineConfig, decode_log, decode_trace, make_classifier, render_report, run_header

ALGORITHMS = ("can-d",) + BASELINES


class UsageError(Exception):
    """Bad input files or arguments; exit code 2."""


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _load_log(path: str, strict: bool = False):
    try:
        return parse_candump(_read(path), source_name=path, strict=strict)
    except CandumpError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _config(args) -> PipelineConfig:
    try:
        return PipelineConfig(args.alpha1, args.alpha2, args.beta, args.gamma, args.delta, args.hold)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _classifier(choice: str, cfg: PipelineConfig):
    try:
        return make_classifier(choice, cfg)
    except OSError as exc:
        raise UsageError(f"cannot read model {choice.split(':', 1)[-1]}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _did_rules(args):
    if args.did_rules in (None, "default"):
        return default_did_rules()
    try:
        return load_did_rules(_read(args.did_rules))
    except DidFormatError as exc:
        raise UsageError(f"{args.did_rules}: {exc}") from exc


def cmd_decode(args) -> int:
    cfg = _config(args)
    clf = _classifier(args.classifier, cfg)
    log = _load_log(args.log)
    dids = []
    if args.did_csv:
        try:
            dids += load_did_csv(_read(args.did_csv))
        except DidFormatError as exc:
            raise UsageError(f"{args.did_csv}: {exc}") from exc
    if args.did_rules or args.strip_diagnostics:
        rules = _did_rules(args)
        if args.did_rules:
            dids += extract_did_traces(log, rules)
        if args.strip_diagnostics:
            log, _ = strip_diagnostics(log, rules)
    result = decode_log(log, clf, cfg, dids, jobs=args.jobs, classifier_name=args.classifier)
    header = run_header(result, args.seed)
    out = Path(args.out)
    _write(out, write_dbc(result.messages(), header))
    _write(out.with_name(out.name + ".report.txt"), render_report(result, args.seed))
    n = sum(len(r.signals) for r in result.results)
    print(f"wrote {out} ({len(result.results)} ids, {n} signals)")
    return 0


def _pairs(args):
    pairs = []
    for log_path, dbc_path in args.pair:
        log = _load_log(log_path)
        try:
            truth = messages_by_id(read_dbc(_read(dbc_path)))
        except DbcError as exc:
            raise UsageError(f"{dbc_path}: {exc}") from exc
        traces = partition_traces(log)
        missing = sorted(set(truth) - set(traces))
        if missing:
            raise UsageError(f"{dbc_path} defines ids absent from {log_path}: {', '.join(f'0x{i:X}' for i in missing)}")
        pairs.append((log_path, traces, truth))
    return pairs


def _labelled(pairs):
    return [(tr, truth[i]) for _, traces, truth in pairs for i, tr in traces.items() if i in truth]


def cmd_train(args) -> int:
    from .boundary import ForestClassifier, train_boundary_forest
    from .forest import ForestParams

    params = ForestParams(n_trees=args.trees, max_depth=args.depth, seed=args.seed)
    pairs = _pairs(args)
    model = train_boundary_forest(_labelled(pairs), params)
    out = Path(args.out)
    _write(out, model.dumps())
    print(f"wrote {out} digest={model.digest()[:16]}")
    if len(pairs) < 2:
        print("LOOCV skipped: needs at least two labelled logs")
        return 0
    cfg = PipelineConfig()
    table = EvalTable()
    lines = [f"# canrev {__version__} seed={args.seed} loocv folds={len(pairs)}", "fold,regime,precision,recall,f_score"]
    for k, (name, traces, truth) in enumerate(pairs):
        rest = [p for j, p in enumerate(pairs) if j != k]
        clf = ForestClassifier(train_boundary_forest(_labelled(rest), params))
        fold = EvalTable()
        for ident, tr in traces.items():
            if ident not in truth or len(tr) < 2:
                continue
            pred = decode_trace(tr, clf, cfg).all_specs_message()
            for reg in REGIMES:
                s = boundary_metrics(pred, truth[ident], tr, reg)
                fold.add(name, reg, s)
                table.add("forest", reg, s)
        for (_, reg), s in fold.boundary.items():
            lines.append(f"{k},{reg},{s.precision:.4f},{s.recall:.4f},{s.f_score:.4f}")
    _write(out.with_name(out.name + ".loocv.csv"), "\n".join(lines) + "\n")
    print(table.text(), end="")
    return 0


def cmd_eval(args) -> int:
    algs = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    bad = [a for a in algs if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"unknown algorithm(s) {', '.join(bad)}; valid: {', '.join(ALGORITHMS)}")
    sets = [s.strip() for s in args.sets.split(",") if s.strip()]
    bad = [s for s in sets if s not in REGIMES]
    if bad:
        raise UsageError(f"unknown set(s) {', '.join(bad)}; valid: {', '.join(REGIMES)}")
    cfg = _config(args)
    log = _load_log(args.log)
    try:
        truth = messages_by_id(read_dbc(_read(args.truth)))
    except DbcError as exc:
        raise UsageError(f"{args.truth}: {exc}") from exc
    traces = partition_traces(log)
    table = EvalTable()
    preds = {}
    if "can-d" in algs:
        res = decode_log(log, _classifier(args.classifier, cfg), cfg, jobs=args.jobs)
        preds["can-d"] = {r.arbitration_id: (r.all_specs_message(), r.message()) for r in res.results}
    for a in algs:
        if a == "can-d":
            continue
        preds[a] = {}
        for i, tr in traces.items():
            m = run_baseline(a, tr).to_message(i)
            preds[a][i] = (m, m)
    for a in algs:
        for i in sorted(truth):
            tr = traces.get(i)
            if tr is None:
                continue
            full, dbc = preds[a].get(i, (None, None))
            for reg in sets:
                table.add(a, reg, boundary_metrics(full, truth[i], tr, reg))
            table.add_l1(a, mean_l1_error(truth[i], dbc, tr))
    header = f"# canrev {__version__} seed={args.seed} {cfg.describe()}\n"
    if args.out:
        out = Path(args.out)
        _write(out.with_name(out.name + ".boundary.csv"), header + table.boundary_csv())
        _write(out.with_name(out.name + ".l1.csv"), header + table.l1_csv())
        _write(out.with_name(out.name + ".txt"), header + table.text())
    print(table.text(), end="")
    return 0


def cmd_synth(args) -> int:
    from .synth import GeneratorRangeError, RecipeError, default_recipe_text, parse_recipe, synthesize

    text = default_recipe_text() if args.recipe in (None, "default") else _read(args.recipe)
    try:
        corpus = synthesize(parse_recipe(text), seed=args.seed)
    except RecipeError as exc:
        raise UsageError(f"{args.recipe or 'default recipe'}: {exc}") from exc
    except GeneratorRangeError as exc:
        raise UsageError(str(exc)) from exc
    header = f"canrev {__version__} synth seed={args.seed}"
    out = Path(args.out)
    _write(out.with_name(out.name + ".log"), serialize_candump(corpus.log, header))
    _write(out.with_name(out.name + ".dbc"), write_dbc(corpus.messages, f"canrev {__version__} synth truth"))
    if corpus.dids:
        _write(out.with_name(out.name + ".did.csv"), write_did_csv(corpus.dids, header))
    print(f"wrote {out}.log ({len(corpus.log)} frames), {out}.dbc" + (f", {out}.did.csv" if corpus.dids else ""))
    return 0


def _add_thresholds(p):
    p.add_argument("--classifier", default="heuristic", help="heuristic or forest:<model-file>")
    p.add_argument("--alpha1", type=float, default=0.01)
    p.add_argument("--alpha2", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.6)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--delta", type=float, default=0.5, help="R^2 threshold for DID matches (0.4 is the other common choice)")
    p.add_argument("--hold", action="store_true", help="zero-order hold instead of linear interpolation")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for per-ID decoding")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="canrev", description=__doc__)
    ap.add_argument("--version", action="version", version=f"canrev {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="reverse engineer a candump log into a DBC")
    p.add_argument("log")
    p.add_argument("--out", required=True, help="DBC path; the report goes to <out>.report.txt")
    p.add_argument("--did-csv", help="labelled DID traces (timestamp,label,unit,value)")
    p.add_argument("--did-rules", help="decode DID responses found in the log ('default' for the built-in PIDs)")
    p.add_argument("--strip-diagnostics", action="store_true", help="drop diagnostic responses before decoding")
    _add_thresholds(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("train", help="train a boundary forest on labelled logs")
    p.add_argument("--pair", nargs=2, action="append", metavar=("LOG", "DBC"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=200)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score boundary algorithms against a truth DBC")
    p.add_argument("log")
    p.add_argument("truth")
    p.add_argument("--algorithms", default=",".join(ALGORITHMS), help=f"comma list from {', '.join(ALGORITHMS)}")
    p.add_argument("--sets", default=",".join(REGIMES), help="comma list of regimes: c, f-, f+")
    p.add_argument("--out", help="prefix for .boundary.csv, .l1.csv and .txt outputs")
    _add_thresholds(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic corpus from a recipe")
    p.add_argument("recipe", nargs="?", help="recipe file (default: the built-in corpus)")
    p.add_argument("--out", required=True, help="prefix for .log, .dbc and .did.csv")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"canrev: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pipeline failure
        print(f"canrev: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
