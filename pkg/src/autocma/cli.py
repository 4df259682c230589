"""Command-line interface for the configuration pipeline.

Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import AutocmaError, ParameterError
from .pipeline import (
    PipelineConfig,
    predict_from_doe_csv,
    stage_evaluate,
    stage_generate,
    stage_label,
    stage_train,
)
from .stats import read_report_csv

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autocma",
        description="Landscape-aware automated configuration of modular CMA-ES",
    )
    parser.add_argument("--config", type=Path, help="pipeline config JSON")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--out", type=Path, help="override the output directory")
    parser.add_argument("--jobs", type=int, help="parallel workers for per-function stages")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", help="write the training function pool")
    sub.add_parser("label", help="tune every pool function and screen the results")
    sub.add_parser("train", help="grid-search and train the prediction model")
    sub.add_parser("evaluate", help="predict, run baselines, and write the report")
    p = sub.add_parser("predict", help="predict a configuration from a DoE sample CSV")
    p.add_argument("doe_csv", type=Path, help="CSV with columns x0..x{d-1},y")
    sub.add_parser("report", help="print the comparison report")
    return parser


def _load_config(args) -> PipelineConfig:
    if args.config is not None:
        doc = json.loads(Path(args.config).read_text())
        cfg = PipelineConfig.from_doc(doc)
    else:
        if args.out is None or args.seed is None:
            raise ParameterError("--config or both --out and --seed are required")
        cfg = PipelineConfig.desk_scale(output_dir=args.out, master_seed=args.seed)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.out is not None:
        cfg.output_dir = Path(args.out)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    return cfg.validate()


def _cmd_report(cfg: PipelineConfig) -> int:
    rows = read_report_csv(cfg.output_dir / "eval" / "report.csv")
    wins = {"default": 0, "sbs": 0}
    sig = {"default": 0, "sbs": 0}
    print(f"{'function':>9} {'baseline':>9} {'ours':>10} {'base':>10} {'p':>10} sig")
    for fid, baseline, ours, base, p, significant in rows:
        print(
            f"{fid:>9} {baseline:>9} {float(ours):10.4f} {float(base):10.4f} "
            f"{float(p):10.4f} {'*' if significant == '1' else ''}"
        )
        if float(ours) <= float(base):
            wins[baseline] += 1
        if significant == "1":
            sig[baseline] += 1
    n = len(rows) // 2 if rows else 0
    for baseline in ("default", "sbs"):
        print(
            f"vs {baseline}: median AUC at least as good on {wins[baseline]}/{n}, "
            f"significant (p<0.05) on {sig[baseline]}/{n}"
        )
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "generate":
            doc = stage_generate(cfg)
            print(f"pool of {doc['n']} functions at {cfg.output_dir / 'pool'}")
        elif args.command == "label":
            out = stage_label(cfg)
            print(f"labeled {out['labeled']}, accepted {out['accepted']}")
        elif args.command == "train":
            out = stage_train(cfg)
            if out.get("skipped"):
                print("model already trained")
            else:
                print(
                    f"trained on {out['n_train']} functions, "
                    f"kept {out['kept_features']} features, "
                    f"architecture {out['architecture']}"
                )
        elif args.command == "evaluate":
            out = stage_evaluate(cfg)
            print(f"evaluated {out['functions']} functions -> {out['report']}")
        elif args.command == "predict":
            cfg_pred = predict_from_doe_csv(cfg, args.doe_csv)
            print(cfg_pred.to_json())
        elif args.command == "report":
            return _cmd_report(cfg)
        return EXIT_OK
    except (AutocmaError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
