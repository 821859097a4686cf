# app.py  –  Command-line entry point
#
#   python app.py simplify  --task 1.1 --corpus c.jsonl --model gpt-4.1 --out runs.jsonl
#   python app.py evaluate  --task 1.1 --corpus c.jsonl --runs runs.jsonl --format md
#   python app.py report    --corpus c.jsonl --runs gpt-4.1=a.jsonl gpt-4.1-mini=b.jsonl
#   python app.py baselines --corpus c.jsonl
#   python app.py ft-build  --task 1.1 --pairs train.jsonl --model gpt-4.1-mini --out ft/
#
# Data goes to files or stdout; logs and diagnostics go to stderr.

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from charts import IMAGE_SUFFIXES, create_readability_chart, create_score_chart, save_figure
from config import APP_NAME, APP_TAGLINE, TASK_LABELS, Settings, load_abbreviations, load_settings
from errors import SimplifyError
from ft_builder import (
    CostModel,
    build_job_spec,
    build_jsonl,
    dataset_tokens,
    load_pairs,
    write_job_spec,
)
from harness import (
    DOCUMENT_PAIRS,
    REPORT_FORMATS,
    SENTENCE_PAIRS,
    ReportRow,
    baseline_rows,
    build_report,
    evaluate_run,
    grade_target_note,
    load_corpus,
    render_report,
)
from llm_client import ChatClient, ModelConfig, resolve_model
from pipeline import read_runs, run_corpus, write_runs
from prompts import SENTENCE_TASK, TASK_CODES, load_bundle

logger = logging.getLogger(APP_NAME)

SUBCOMMANDS = ("simplify", "evaluate", "ft-build", "report", "baselines")

TRAIN_FILE = "train.jsonl"
VALIDATION_FILE = "validation.jsonl"
JOB_SPEC_FILE = "job_spec.json"


class UsageError(Exception):
    """Raised by the parser instead of exiting; carries the exit code."""

    def __init__(self, code: int):
        self.code = code
        super().__init__(code)


class CliParser(argparse.ArgumentParser):
    """argparse, but validation failures exit 1 and never call sys.exit."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(1)

    def exit(self, status: int = 0, message: Optional[str] = None):
        if message:
            sys.stderr.write(message)
        raise UsageError(status)


def make_client(config: ModelConfig) -> ChatClient:
    return ChatClient(config)


# ─────────────────────────────────────────────
#  Parser
# ─────────────────────────────────────────────

def _common_options() -> argparse.ArgumentParser:
    common = CliParser(add_help=False)
    common.add_argument("--task", choices=sorted(TASK_CODES), default="1.1", help="1.1 sentence-level, 1.2 document-level")
    common.add_argument("--config", help="YAML settings file")
    common.add_argument("--abbrev-file", help="abbreviations that never end a sentence, one per line")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    return common


def _report_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=sorted(REPORT_FORMATS), default=None, help="report format (default markdown)")
    parser.add_argument("--out", help="report file (default stdout)")


def build_parser() -> CliParser:
    parser = CliParser(prog=APP_NAME, description=APP_TAGLINE)
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}")
    sub.required = True
    common = _common_options()
    parser.commands = sub.choices

    p = sub.add_parser("simplify", parents=[common], help="run a model over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, help="registry name or fine-tuned model id")
    p.add_argument("--out", required=True, help="run artifact (JSONL)")
    p.add_argument("--base-url")
    p.add_argument("--api-key-env", help="environment variable holding the API key")
    p.add_argument("--label", help="row label for later reports")
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--concurrency", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--with-guidelines", action="store_true", help="append the plain-language guidelines")
    p.add_argument("--finetune-prompts", action="store_true", help="use the prompts the fine-tuned models were trained with")

    p = sub.add_parser("evaluate", parents=[common], help="score one run artifact")
    p.add_argument("--corpus", required=True)
    p.add_argument("--runs", required=True, help="run artifact (JSONL)")
    p.add_argument("--label", help="row label (default: the model in the artifact)")
    _report_options(p)

    p = sub.add_parser("report", parents=[common], help="baselines plus one row per run")
    p.add_argument("--corpus", required=True)
    p.add_argument("--runs", required=True, nargs="+", metavar="LABEL=PATH")
    p.add_argument("--chart", help="also write score charts (.html, .png, .svg)")
    _report_options(p)

    p = sub.add_parser("baselines", parents=[common], help="Source and Reference rows")
    p.add_argument("--corpus", required=True)
    _report_options(p)

    p = sub.add_parser("ft-build", parents=[common], help="write a fine-tuning dataset and job spec")
    p.add_argument("--pairs", required=True, help="training pairs (JSONL)")
    p.add_argument("--validation-pairs", help="validation pairs (JSONL)")
    p.add_argument("--model", required=True, help="base model to fine-tune")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _parse_runs(parser: argparse.ArgumentParser, specs: Sequence[str]) -> List[Tuple[Optional[str], str]]:
    runs = []
    for spec in specs:
        label, sep, path = spec.partition("=")
        if not sep:
            label, path = "", spec
        if not path:
            parser.error(f"--runs expects LABEL=PATH, got {spec!r}")
        runs.append((label or None, path))
    labels = [label for label, _ in runs if label]
    if len(labels) != len(set(labels)):
        parser.error("--runs labels must be unique")
    return runs


def _validate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    for flag in ("max_attempts", "concurrency"):
        value = getattr(args, flag, None)
        if value is not None and value < 1:
            parser.error(f"--{flag.replace('_', '-')} must be >= 1")
    if getattr(args, "temperature", None) is not None and args.temperature < 0:
        parser.error("--temperature must be >= 0")
    chart = getattr(args, "chart", None)
    if chart and Path(chart).suffix.lower() not in IMAGE_SUFFIXES | {".html", ".htm"}:
        parser.error(f"--chart must end in .html or an image suffix, got {chart!r}")


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


# ─────────────────────────────────────────────
#  Subcommands
# ─────────────────────────────────────────────

def _settings(args: argparse.Namespace) -> Settings:
    settings = load_settings(args.config)
    if args.abbrev_file:
        settings = settings.with_abbreviations(load_abbreviations(args.abbrev_file))
    return settings


def _layout(args: argparse.Namespace) -> str:
    return SENTENCE_PAIRS if TASK_CODES[args.task] == SENTENCE_TASK else DOCUMENT_PAIRS


def _emit(rows: List[ReportRow], args: argparse.Namespace, settings: Settings) -> None:
    fmt = args.format or settings.defaults.get("format", "markdown")
    text = render_report(rows, fmt)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        logger.info("Wrote %s report to %s", fmt, args.out)
    else:
        sys.stdout.write(text)


def cmd_simplify(args: argparse.Namespace, settings: Settings) -> int:
    corpus, _ = load_corpus(args.corpus, _layout(args), settings.abbreviations)
    bundle = load_bundle(args.task, finetune=args.finetune_prompts, with_guidelines=args.with_guidelines)
    config = resolve_model(
        args.model,
        settings,
        base_url=args.base_url,
        api_key_env=args.api_key_env,
        temperature=args.temperature,
        seed=args.seed,
        label=args.label,
    )
    logger.info("%s on %s: %s", TASK_LABELS[args.task], args.corpus, config.describe())

    client = make_client(config)
    client.check_credentials()
    records = run_corpus(
        corpus,
        bundle,
        client,
        max_attempts=args.max_attempts or settings.defaults["max_attempts"],
        concurrency_limit=args.concurrency or settings.defaults["concurrency"],
    )
    write_runs(records, args.out)
    failed = sum(1 for r in records if not r.ok)
    if failed:
        logger.warning("%d of %d documents failed; see %s", failed, len(records), args.out)
    return 0


def cmd_evaluate(args: argparse.Namespace, settings: Settings) -> int:
    corpus, _ = load_corpus(args.corpus, _layout(args), settings.abbreviations)
    row = evaluate_run(read_runs(args.runs), corpus, args.label, settings.abbreviations)
    logger.info(grade_target_note(row))
    _emit([row], args, settings)
    return 0


def cmd_report(args: argparse.Namespace, settings: Settings, runs: List[Tuple[Optional[str], str]]) -> int:
    corpus, _ = load_corpus(args.corpus, _layout(args), settings.abbreviations)
    runs_by_label: Dict[str, list] = {}
    for label, path in runs:
        records = read_runs(path)
        label = label or (records[0].model_id if records else Path(path).stem)
        if label in runs_by_label:
            raise SimplifyError(f"two runs share the label {label!r}")
        runs_by_label[label] = records

    rows = build_report(corpus, runs_by_label, settings.abbreviations)
    for row in rows:
        logger.info(grade_target_note(row))
    _emit(rows, args, settings)

    if args.chart:
        chart = Path(args.chart)
        save_figure(create_score_chart(rows), chart)
        save_figure(create_readability_chart(rows), chart.with_name(f"{chart.stem}-fkgl{chart.suffix}"))
    return 0


def cmd_baselines(args: argparse.Namespace, settings: Settings) -> int:
    corpus, _ = load_corpus(args.corpus, _layout(args), settings.abbreviations)
    _emit(baseline_rows(corpus, settings.abbreviations), args, settings)
    return 0


def cmd_ft_build(args: argparse.Namespace, settings: Settings) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    system_text = load_bundle(args.task, finetune=True).system_text

    pairs = load_pairs(args.pairs, args.task)
    train_path = out_dir / TRAIN_FILE
    build_jsonl(pairs, system_text, train_path, args.task)
    tokens = dataset_tokens(pairs, system_text)

    validation_path = None
    if args.validation_pairs:
        validation = load_pairs(args.validation_pairs, args.task)
        validation_path = out_dir / VALIDATION_FILE
        build_jsonl(validation, system_text, validation_path, args.task)
        tokens += dataset_tokens(validation, system_text)

    spec = build_job_spec(
        train_path,
        args.model,
        tokens,
        CostModel(dict(settings.prices)),
        settings.finetune,
        validation_path,
    )
    write_job_spec(spec, out_dir / JOB_SPEC_FILE)
    logger.info(
        "%s: ~%d training tokens, estimated USD %s",
        args.model, spec.estimated_tokens,
        "unknown" if spec.estimated_cost_usd is None else f"{spec.estimated_cost_usd:.2f}",
    )
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        subparser = parser.commands[args.command]
        _validate(subparser, args)
        runs = _parse_runs(subparser, args.runs) if args.command == "report" else []
    except UsageError as exc:
        return exc.code

    _configure_logging(args)
    try:
        settings = _settings(args)
        if args.command == "simplify":
            return cmd_simplify(args, settings)
        if args.command == "evaluate":
            return cmd_evaluate(args, settings)
        if args.command == "report":
            return cmd_report(args, settings, runs)
        if args.command == "baselines":
            return cmd_baselines(args, settings)
        return cmd_ft_build(args, settings)
    except (SimplifyError, OSError, ValueError) as exc:
        logger.debug("Command failed", exc_info=True)
        sys.stderr.write(f"{APP_NAME}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
