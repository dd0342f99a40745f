"""Command-line pipeline driver.

Subcommands mirror the pipeline stages (ingest, sample-situations,
gen-context, gen-queries, gen-qa, stats), plus dataset downsampling,
evaluation, a projector demo, fixture generation, and the review service.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config
from .pipeline import Pipeline, StageDependencyError, read_jsonl, write_jsonl
from .qa import QAItem, downsample_dataset


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="INI config file")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = PipelineConfig(
            data_root=cfg.data_root,
            out_dir=overrides.get("out_dir", cfg.out_dir),
            seed=overrides.get("seed", cfg.seed),
            geometry=cfg.geometry,
            sampler=cfg.sampler,
            queries=cfg.queries,
            qa=cfg.qa,
            gateway=cfg.gateway,
        )
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="situchange")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load and validate scan pairs")
    _add_common(p)
    p.add_argument("pairs", help="split manifest (JSONL) or directory of *.pair.json")

    for name, help_text in (
        ("sample-situations", "sample sitting/standing/interacting situations"),
        ("gen-context", "build per-situation change context payloads"),
        ("gen-queries", "resolve distinctive features and render queries"),
        ("gen-qa", "generate and verify QA items"),
        ("stats", "dataset statistics report"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    p = sub.add_parser("run", help="run multiple stages in order")
    _add_common(p)
    p.add_argument("--stages", default="ingest,situations,context,queries,qa,stats")
    p.add_argument("--pairs", default=None)

    p = sub.add_parser("downsample", help="downsample the QA dataset along one axis")
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--axis", required=True, choices=("sample", "situation", "scan_pair"))
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", dest="downsample_seed", type=int, default=0, help="sampling seed")
    p.add_argument("--downsample-seed", dest="downsample_seed", type=int, help=argparse.SUPPRESS)
    p.add_argument("--output", default=None, help="output JSONL (default qa_downsampled.jsonl)")

    p = sub.add_parser("evaluate", help="score a prediction file against the dataset")
    _add_common(p)
    p.add_argument("--predictions", required=True, help="JSONL of {item_id, response}")
    p.add_argument("--longform", default=None, help="JSONL of long-form reference items")
    p.add_argument("--human-scores", default=None, help="JSON of item_id -> 1..5")
    p.add_argument("--judge", action="store_true", help="rate with the configured LLM judge instead of exact match")

    p = sub.add_parser("projector-demo", help="run the comparison projector and its gradient check")
    p.add_argument("--demo-seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--state", type=int, default=4)
    p.add_argument("--tokens", type=int, default=8)

    p = sub.add_parser("make-fixtures", help="write synthetic scan pairs and a split manifest")
    p.add_argument("--output", required=True)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--fixture-seed", type=int, default=0)

    p = sub.add_parser("serve-review", help="serve the feature-review HTTP API")
    _add_common(p)
    p.add_argument("--bind", default="127.0.0.1:8321")

    args = parser.parse_args(argv)

    try:
        return _dispatch(args)
    except StageDependencyError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    command = args.command

    if command == "projector-demo":
        return _projector_demo(args)

    if command == "make-fixtures":
        return _make_fixtures(args)

    cfg = _config(args)
    pipe = Pipeline(cfg)

    if command == "ingest":
        n = pipe.ingest(args.pairs)
        print(f"ingested {n} scan pairs -> {pipe.artifact('ingest')}")
    elif command == "sample-situations":
        n = pipe.sample_situations()
        print(f"sampled {n} situations -> {pipe.artifact('situations')}")
    elif command == "gen-context":
        n = pipe.build_contexts()
        print(f"built {n} context records -> {pipe.artifact('context')}")
    elif command == "gen-queries":
        n_queries, n_tasks = pipe.gen_queries()
        print(f"rendered {n_queries} queries over {n_tasks} review tasks")
    elif command == "gen-qa":
        n = pipe.gen_qa()
        print(f"generated {n} verified QA items -> {pipe.artifact('qa')}")
    elif command == "stats":
        stats = pipe.compute_stats()
        print((Path(cfg.out_dir) / "stats.txt").read_text("utf-8"))
        print(f"group shares: {stats['group_shares']}")
    elif command == "run":
        stages = [s.strip() for s in args.stages.split(",") if s.strip()]
        stage_map = {"sample-situations": "situations", "gen-context": "context",
                     "gen-queries": "queries", "gen-qa": "qa"}
        stages = [stage_map.get(s, s) for s in stages]
        results = pipe.run(stages, pairs_source=args.pairs)
        for stage, value in results.items():
            print(f"{stage}: done")
    elif command == "downsample":
        items = pipe.load_qa()
        kept = downsample_dataset(items, args.axis, args.fraction, args.downsample_seed)
        out = Path(args.output) if args.output else Path(cfg.out_dir) / "qa_downsampled.jsonl"
        write_jsonl(out, "qa", pipe.fingerprint, (i.to_dict() for i in kept))
        print(f"kept {len(kept)}/{len(items)} items -> {out}")
    elif command == "evaluate":
        rater = None
        if args.judge:
            from .evaluate import JudgeRater
            from .gateway import ChatGateway

            rater = JudgeRater(ChatGateway(cfg.gateway, Path(cfg.out_dir) / cfg.gateway.cache_dir))
        report = pipe.evaluate(
            args.predictions,
            rater=rater,
            longform_path=args.longform,
            human_scores_path=args.human_scores,
        )
        print(report.to_text())
    elif command == "serve-review":
        from .service import serve_review

        serve_review(cfg, args.bind)
    else:
        raise ValueError(f"unknown command {command}")
    return 0


def _projector_demo(args) -> int:
    from .projector import forward, grad_check, init_params

    rng = np.random.default_rng(args.demo_seed)
    prev = rng.normal(size=(args.tokens, args.dim))
    curr = rng.normal(size=(args.tokens, args.dim))
    print(f"tokens {args.tokens} x dim {args.dim}, state {args.state}")
    for mode_select in ("linear", "scan"):
        for mode_fuse in ("add", "star"):
            params = init_params(
                args.dim, args.state, mode_select, mode_fuse, seed=args.demo_seed
            )
            out = forward(prev, curr, params)
            err = grad_check(params, prev, curr)
            print(
                f"{mode_select}+{mode_fuse}: output {out.shape[0]}x{out.shape[1]} "
                f"(current-scene budget), max grad rel err {err:.3e}"
            )
    return 0


def _make_fixtures(args) -> int:
    from .scene.fixtures import make_fixture_batch
    from .scene.io import dump_scan_pair

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    pairs = make_fixture_batch(args.pairs, seed=args.fixture_seed)
    lines = []
    for pair in pairs:
        manifest = dump_scan_pair(pair, out)
        lines.append(json.dumps(manifest.name))
    (out / "split.jsonl").write_text("\n".join(lines) + "\n", "utf-8")
    print(f"wrote {len(pairs)} fixture pairs under {out} (split.jsonl)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
