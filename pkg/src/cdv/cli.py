"""Command-line interface.

    cdv train-embeddings --config run.json
    cdv train-entity     --config run.json
    cdv train-aspect     --config run.json
    cdv train-cdv        --config run.json
    cdv index            --config run.json
    cdv evaluate         --config run.json [--model cdv|bm25|tfidf]
    cdv query            --config run.json --aspect symptoms --entity-id E3
    cdv serve            --config run.json
    cdv make-synthetic   --out data/synth [--docs 40 ...]

Common flags: --config <file>, --seed <int>, --out <dir> (both override
the config file).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import Config, load_config
from .errors import CdvError


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the artifact directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdv", description="discourse-vector passage retrieval")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("train-embeddings", "train-entity", "train-aspect", "train-cdv", "index"):
        _add_common(sub.add_parser(name))

    p_eval = sub.add_parser("evaluate")
    _add_common(p_eval)
    p_eval.add_argument("--model", action="append", choices=["cdv", "bm25", "tfidf"],
                        help="repeatable; defaults to the config's model list")

    p_query = sub.add_parser("query")
    _add_common(p_query)
    p_query.add_argument("--entity-id", default="")
    p_query.add_argument("--mention", default="")
    p_query.add_argument("--aspect", required=True)
    p_query.add_argument("--top-k", type=int, default=10)

    p_serve = sub.add_parser("serve")
    _add_common(p_serve)
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)

    p_synth = sub.add_parser("make-synthetic")
    p_synth.add_argument("--out", required=True, help="directory for corpus/kb/query files")
    p_synth.add_argument("--docs", type=int, default=40)
    p_synth.add_argument("--sections", type=int, default=5)
    p_synth.add_argument("--entities", type=int, default=8)
    p_synth.add_argument("--aspects", type=int, default=6)
    p_synth.add_argument("--seed", type=int, default=0)
    return parser


def _config(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.paths.out = args.out
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    from . import pipeline

    try:
        if args.command == "train-embeddings":
            pipeline.cmd_train_embeddings(_config(args))
        elif args.command == "train-entity":
            pipeline.cmd_train_entity(_config(args))
        elif args.command == "train-aspect":
            pipeline.cmd_train_aspect(_config(args))
        elif args.command == "train-cdv":
            pipeline.cmd_train_cdv(_config(args))
        elif args.command == "index":
            pipeline.cmd_index(_config(args))
        elif args.command == "evaluate":
            reports = pipeline.cmd_evaluate(_config(args), args.model)
            print("model\tdataset\tR@1\tR@10\tMAP\tn_queries")
            for report in reports:
                print(report.summary_row())
        elif args.command == "query":
            results = pipeline.cmd_query(
                _config(args), args.entity_id, args.mention, args.aspect, args.top_k
            )
            for rank, sp in enumerate(results, start=1):
                print(f"{rank}\t{sp.passage_id}\t{sp.score:.4f}\t{sp.doc_id}\t{sp.heading}")
        elif args.command == "serve":
            from .service import run_service

            cfg = _config(args)
            if args.host:
                cfg.service.host = args.host
            if args.port:
                cfg.service.port = args.port
            run_service(cfg)
        elif args.command == "make-synthetic":
            from .synthetic import SyntheticSpec, generate

            spec = SyntheticSpec(
                n_docs=args.docs,
                sections_per_doc=args.sections,
                n_entities=args.entities,
                n_aspects=args.aspects,
                seed=args.seed,
            )
            paths = generate(spec).write(args.out)
            print(json.dumps(paths, indent=2))
    except CdvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
