"""``udreorder`` command line: estimate, derive, reorder, ensemble, compare, report.

Exit codes: 0 success (warnings allowed), 1 usage error, 2 data error.
Option values resolve as command-line flag, then ``--config`` JSON file, then
built-in default; the effective values are echoed in every run report.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from contextlib import ExitStack
from pathlib import Path
from typing import Sequence

from . import __version__
from .conllu import Sentence, build_tree, parse_conllu, serialize_conllu
from .constraints import ConstraintSet, constraints_from_dict, derive_constraints, save_constraints
from .errors import DuplicateSentId, UDReorderError
from .pods import (
    Granularity,
    empty_table,
    estimate_pods,
    load_pods,
    merge,
    pod_distance,
    pod_distance_by_parent,
    save_pods,
    table_from_dict,
)
from .reorder import LockedSpan, iter_reorder
from .report import RunReport, file_digest

log = logging.getLogger("udreorder")

DEFAULTS = {
    "granularity": Granularity.UNIVERSAL.value,
    "margin": 0.0,
    "min_count": 0,
    "lenient": False,
    "skip_empty_nodes": False,
    "language": None,
}


class UsageError(Exception):
    pass


def _open_text(path: str | Path):
    return open(path, encoding="utf-8", newline="")


def _check_margin(margin: float) -> None:
    if not 0 <= margin < 0.5:
        raise UsageError(f"--margin must lie in [0, 0.5), got {margin}")


def _check_min_count(min_count: int) -> None:
    if min_count < 0:
        raise UsageError(f"--min-count must be non-negative, got {min_count}")


def _default_report_path(output: str | Path) -> Path:
    return Path(f"{output}.report.json")


def _guess_language(path: str | Path) -> str:
    # UD file names look like "ga_idt-ud-train.conllu"
    stem = Path(path).name
    return stem.split("_", 1)[0] if "_" in stem else "und"


def _treebank_name(path: str | Path) -> str:
    return Path(path).name.split(".", 1)[0]


def cmd_estimate(
    treebanks: Sequence[str | Path],
    output: str | Path,
    *,
    granularity: str = "universal",
    language: str | None = None,
    lenient: bool = False,
    report_path: str | Path | None = None,
) -> RunReport:
    started = time.perf_counter()
    language = language or (_guess_language(treebanks[0]) if treebanks else "und")
    report = RunReport("estimate", parameters={
        "granularity": granularity, "language": language, "lenient": lenient,
    })
    table = empty_table(language, granularity)
    for path in treebanks:
        report.add_input(path)
        with _open_text(path) as f:
            sentences = parse_conllu(f, lenient=lenient, on_error=lambda e, p=path: report.add_error(f"{p}: {e}"))
            part = estimate_pods(_trees(sentences, report, lenient, path), granularity,
                                 language=language, treebank=_treebank_name(path))
        table = merge(table, part)
    report.sentences = table.provenance.sentences
    if report.sentences == 0:
        log.warning("no sentences read; writing an empty POD table")
        report.warnings += 1
    save_pods(table, output)
    report.add_output(output)
    report.result = {"triples": len(table.counts)}
    report.duration = time.perf_counter() - started
    report.write(report_path or _default_report_path(output))
    return report


def _trees(sentences, report: RunReport, lenient: bool, path):
    for sentence in sentences:
        try:
            yield build_tree(sentence)
        except UDReorderError as exc:
            if not lenient:
                raise
            report.add_error(f"{path}: sentence {sentence.sent_id}: {type(exc).__name__}: {exc}")


def cmd_derive(
    pod_file: str | Path,
    output: str | Path,
    *,
    margin: float = 0.0,
    min_count: int = 0,
    report_path: str | Path | None = None,
) -> RunReport:
    _check_margin(margin)
    _check_min_count(min_count)
    started = time.perf_counter()
    report = RunReport("derive", parameters={"margin": margin, "min_count": min_count})
    report.add_input(pod_file)
    cs = derive_constraints(load_pods(pod_file), min_count=min_count, margin=margin)
    save_constraints(cs, output)
    report.add_output(output)
    report.result = {"constraints": len(cs)}
    report.duration = time.perf_counter() - started
    report.write(report_path or _default_report_path(output))
    return report


def load_rules(path: str | Path, margin: float = 0.0, min_count: int = 0) -> ConstraintSet:
    """Read a constraint file, or a POD file and derive constraints from it."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UDReorderError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(doc, dict) and "triples" in doc:
        return derive_constraints(table_from_dict(doc), min_count=min_count, margin=margin)
    return constraints_from_dict(doc)


def load_spans(path: str | Path) -> dict[str, list[LockedSpan]]:
    """Read a JSON Lines spans sidecar: ``{"sent_id": ..., "spans": [{start, end, reason}]}``."""
    out: dict[str, list[LockedSpan]] = {}
    with _open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                spans = [LockedSpan(int(s["start"]), int(s["end"]), s.get("reason", "user")) for s in rec["spans"]]
                out.setdefault(str(rec["sent_id"]), []).extend(spans)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise UDReorderError(f"{path}: line {lineno}: bad span record ({exc})") from None
    return out


def cmd_reorder(
    source: str | Path,
    rules: str | Path,
    output: str | Path,
    *,
    margin: float = 0.0,
    min_count: int = 0,
    spans_path: str | Path | None = None,
    text_path: str | Path | None = None,
    align_path: str | Path | None = None,
    lenient: bool = False,
    skip_empty_nodes: bool = False,
    report_path: str | Path | None = None,
) -> RunReport:
    _check_margin(margin)
    _check_min_count(min_count)
    started = time.perf_counter()
    report = RunReport("reorder", parameters={
        "margin": margin, "min_count": min_count, "lenient": lenient,
        "skip_empty_nodes": skip_empty_nodes,
        "spans": spans_path is not None, "text": text_path is not None, "align": align_path is not None,
    })
    report.add_input(source)
    report.add_input(rules)
    constraints = load_rules(rules, margin, min_count)
    report.parameters["rules_granularity"] = constraints.granularity.value
    spans = None
    if spans_path is not None:
        report.add_input(spans_path)
        spans = load_spans(spans_path)

    outputs = [p for p in (output, text_path, align_path) if p is not None]
    with ExitStack() as stack:
        src = stack.enter_context(_open_text(source))
        out = stack.enter_context(open(output, "w", encoding="utf-8", newline=""))
        text_out = stack.enter_context(open(text_path, "w", encoding="utf-8", newline="")) if text_path else None
        align_out = stack.enter_context(open(align_path, "w", encoding="utf-8", newline="")) if align_path else None
        sentences = parse_conllu(src, lenient=lenient, on_error=lambda e: report.add_error(f"{source}: {e}"))
        for key, result in iter_reorder(sentences, constraints, report, spans,
                                        lenient=lenient, skip_empty_nodes=skip_empty_nodes):
            out.write(serialize_conllu(result.sentence))
            if text_out:
                text_out.write(" ".join(t.form for t in result.sentence.tokens) + "\n")
            if align_out:
                align_out.write(json.dumps({"sent_id": key, "alignment": list(result.alignment)},
                                           ensure_ascii=False) + "\n")
    for p in outputs:
        report.add_output(p)
    report.duration = time.perf_counter() - started
    report.write(report_path or _default_report_path(output))
    return report


def _with_suffix_id(sentence: Sentence, index: int, suffix: str) -> Sentence:
    prefix = "# sent_id ="
    comments = list(sentence.comments)
    for i, line in enumerate(comments):
        if line.startswith(prefix):
            comments[i] = f"# sent_id = {line[len(prefix):].strip()}-{suffix}"
            break
    else:
        comments.insert(0, f"# sent_id = {index}-{suffix}")
    return Sentence(sentence.tokens, tuple(comments), sentence.mwt_ranges, sentence.empty_nodes)


def cmd_ensemble(
    vanilla: str | Path,
    reordered: str | Path,
    output: str | Path,
    *,
    report_path: str | Path | None = None,
) -> RunReport:
    """Concatenate the vanilla treebank and its reordered copy, vanilla first.

    Sent_ids gain ``-orig`` / ``-reord`` suffixes; sentences without one get
    their 1-based position within their input file.
    """
    started = time.perf_counter()
    report = RunReport("ensemble", parameters={"suffixes": ["orig", "reord"]})
    seen: set[str] = set()
    with open(output, "w", encoding="utf-8", newline="") as out:
        for path, suffix in ((vanilla, "orig"), (reordered, "reord")):
            report.add_input(path)
            with _open_text(path) as f:
                for index, sentence in enumerate(parse_conllu(f), 1):
                    sentence = _with_suffix_id(sentence, index, suffix)
                    sid = sentence.sent_id
                    if sid in seen:
                        raise DuplicateSentId(f"sent_id {sid!r} occurs twice in {path}")
                    seen.add(sid)
                    out.write(serialize_conllu(sentence))
                    report.sentences += 1
    report.add_output(output)
    report.duration = time.perf_counter() - started
    report.write(report_path or _default_report_path(output))
    return report


def cmd_compare(
    pod_a: str | Path,
    pod_b: str | Path,
    *,
    report_path: str | Path | None = None,
) -> dict:
    started = time.perf_counter()
    report = RunReport("compare")
    report.add_input(pod_a)
    report.add_input(pod_b)
    a, b = load_pods(pod_a), load_pods(pod_b)
    distance = pod_distance(a, b)
    result = {
        "distance": "undefined" if distance is None else distance,
        "by_parent": pod_distance_by_parent(a, b),
    }
    report.result = result
    report.duration = time.perf_counter() - started
    if report_path is not None:
        report.write(report_path)
    else:
        sys.stderr.write(json.dumps(report.to_dict(), ensure_ascii=False) + "\n")
    return result


def cmd_report(path: str | Path, *, verify: bool = False) -> int:
    """Print a saved run report; with ``verify`` recheck every recorded digest."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    report = RunReport.from_dict(doc)
    print(f"command:   {report.command}")
    print(f"sentences: {report.sentences}")
    print(f"errors:    {report.errors}")
    print(f"duration:  {report.duration:.3f}s")
    for k, v in report.totals.as_dict().items():
        print(f"  {k}: {v}")
    status = 0
    if verify:
        for rec in report.inputs + report.outputs:
            p = Path(rec["path"])
            ok = p.exists() and file_digest(p) == rec["sha256"]
            print(f"{'ok  ' if ok else 'FAIL'} {p}")
            if not ok:
                status = 2
    return status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="udreorder", description="Learn UD word-order statistics and reorder treebanks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file of option defaults (flags take precedence)")
    parser.add_argument("--seed-irrelevant", action="store_true",
                        help="rejected: reordering is deterministic and uses no random seed")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_policy(p):
        p.add_argument("--lenient", action="store_true", default=None,
                       help="skip malformed sentences and count them instead of aborting")

    def add_thresholds(p):
        p.add_argument("--margin", type=float, default=None, help="require p > 0.5 + margin (default 0)")
        p.add_argument("--min-count", type=int, default=None, help="ignore label pairs seen fewer times")

    p = sub.add_parser("estimate", help="count pairwise orderings in treebanks")
    p.add_argument("treebanks", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--granularity", choices=[g.value for g in Granularity], default=None)
    p.add_argument("--language", default=None, help="language code (default: from the first file name)")
    p.add_argument("--report")
    add_policy(p)

    p = sub.add_parser("derive", help="threshold a POD file into a constraint file")
    p.add_argument("pods")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--report")
    add_thresholds(p)

    p = sub.add_parser("reorder", help="reorder a treebank under constraints")
    p.add_argument("source")
    p.add_argument("rules", help="constraint file, or POD file to derive constraints from")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--spans", help="JSON Lines locked-span sidecar")
    p.add_argument("--text", help="also write one space-joined sentence per line")
    p.add_argument("--align", help="also write the JSON Lines alignment sidecar")
    p.add_argument("--skip-empty-nodes", action="store_true", default=None,
                   help="skip sentences with empty nodes instead of dropping the nodes")
    p.add_argument("--report")
    add_thresholds(p)
    add_policy(p)

    p = sub.add_parser("ensemble", help="concatenate vanilla and reordered treebanks")
    p.add_argument("vanilla")
    p.add_argument("reordered")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--report")

    p = sub.add_parser("compare", help="word-order distance between two POD files")
    p.add_argument("pods_a")
    p.add_argument("pods_b")
    p.add_argument("--report")

    p = sub.add_parser("report", help="show a run report")
    p.add_argument("path")
    p.add_argument("--verify", action="store_true", help="recheck input and output digests")
    return parser


def _resolve(args: argparse.Namespace, config: dict) -> dict:
    out = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else config.get(key, default)
    return out


def _setup_logging() -> None:
    level = os.environ.get("UDREORDER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed_irrelevant:
        parser.error("--seed-irrelevant: udreorder has no randomness; outputs depend only on inputs and flags")
    try:
        config = {}
        if args.config:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
            config = {k.replace("-", "_"): v for k, v in config.items()}
        opts = _resolve(args, config)

        if args.command == "estimate":
            cmd_estimate(args.treebanks, args.output, granularity=opts["granularity"],
                         language=opts["language"], lenient=opts["lenient"], report_path=args.report)
        elif args.command == "derive":
            cmd_derive(args.pods, args.output, margin=opts["margin"], min_count=opts["min_count"],
                       report_path=args.report)
        elif args.command == "reorder":
            cmd_reorder(args.source, args.rules, args.output, margin=opts["margin"],
                        min_count=opts["min_count"], spans_path=args.spans, text_path=args.text,
                        align_path=args.align, lenient=opts["lenient"],
                        skip_empty_nodes=opts["skip_empty_nodes"], report_path=args.report)
        elif args.command == "ensemble":
            cmd_ensemble(args.vanilla, args.reordered, args.output, report_path=args.report)
        elif args.command == "compare":
            print(json.dumps(cmd_compare(args.pods_a, args.pods_b, report_path=args.report), indent=1))
        elif args.command == "report":
            return cmd_report(args.path, verify=args.verify)
    except UsageError as exc:
        parser.error(str(exc))
    except (UDReorderError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
