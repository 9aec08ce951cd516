"""Train a boundary forest on synthetic corpora and compare it with the heuristic.

Trains on seeds --train, scores both classifiers on seeds --test.

    python scripts/train_forest_on_synth.py --train 10 11 12 13 --test 0 1 --out results/synth.forest
"""
import argparse
from pathlib import Path

from canrev.boundary import ForestClassifier, HeuristicClassifier, train_boundary_forest
from canrev.dbcio import messages_by_id
from canrev.evalkit import REGIMES, EvalTable, boundary_metrics
from canrev.forest import ForestParams
from canrev.ingest import partition_traces
from canrev.pipeline import PipelineConfig, decode_trace
from canrev.synth import synthesize


def labelled(seed):
    c = synthesize(seed=seed)
    truth = messages_by_id(c.messages)
    return [(tr, truth[i]) for i, tr in partition_traces(c.log).items()]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", type=int, nargs="+", default=[10, 11, 12, 13])
    ap.add_argument("--test", type=int, nargs="+", default=[0, 1])
    ap.add_argument("--trees", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="where to write the model")
    args = ap.parse_args()

    pairs = [p for s in args.train for p in labelled(s)]
    model = train_boundary_forest(pairs, ForestParams(n_trees=args.trees, seed=args.seed))
    print(f"trained on {model.metadata.get('rows')} rows, digest {model.digest()[:16]}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(model.dumps())

    cfg = PipelineConfig()
    table = EvalTable()
    for name, clf in (("heuristic", HeuristicClassifier()), ("forest", ForestClassifier(model))):
        for s in args.test:
            for tr, truth in labelled(s):
                pred = decode_trace(tr, clf, cfg).all_specs_message()
                for reg in REGIMES:
                    table.add(name, reg, boundary_metrics(pred, truth, tr, reg))
    print(table.text(), end="")


if __name__ == "__main__":
    main()
