"""fpvg-adapter: feature-store construction and manifest-driven model runs."""

from __future__ import annotations

import argparse
import json
import sys

from .apply import POLICIES
from .feature_store import FeatureStore, StoreError, build_store_from_detections
from .runner import ExportError, run_and_export
from .toy_model import DEFAULT_VOCAB_SIZE, ToyLinearSoftmaxModel


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpvg-adapter",
        description="Bridge between object-index manifests and a feature-backed model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-store", help="synthesize a feature store for a detections file")
    p.add_argument("--detections", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=5)

    p = sub.add_parser("run", help="run the toy model over manifests and export predictions")
    p.add_argument("--manifests", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--policy", choices=POLICIES, default="zero_pad")
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "make-store":
            store = build_store_from_detections(
                args.detections, args.out_dir, dim=args.dim, seed=args.seed
            )
            print(json.dumps({"store": args.out_dir, "images": len(store.index)}))
            return 0
        store = FeatureStore.open(args.store)
        dims = {entry["dim"] for entry in store.index.values()}
        if len(dims) != 1:
            raise StoreError(f"store mixes feature dims: {sorted(dims)}")
        model = ToyLinearSoftmaxModel(
            feature_dim=dims.pop(), vocab_size=args.vocab_size, seed=args.seed
        )
        written = run_and_export(
            model,
            args.manifests,
            args.questions,
            store,
            args.out_dir,
            policy=args.policy,
            metadata={
                "model": "toy-linear-softmax",
                "seed": args.seed,
                "vocab_size": args.vocab_size,
            },
        )
        print(json.dumps({cond: str(path) for cond, path in sorted(written.items())}))
        return 0
    except (StoreError, ExportError, IndexError, ValueError) as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
