"""Command line entry point: ``kundoku <subcommand> ...``.

Exit codes: 0 success, 1 I/O or format error, 2 rejected annotation or
inexpressible order, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Optional

from . import __version__
from .align import KanaDictionary, align, classify_kana
from .automaton import run
from .combinatorics import BRUTE_FORCE_MAX_N, count_result, enumerate_expressible
from .corpus import (FORMATS, LABEL_FIELDS, apply_mappings, corpus_stats, format_sentence, infer_format,
                     iter_corpus, label_counts, load_corpus, reduce_labels, save_corpus, split_corpus)
from .errors import InexpressibleError, InvalidAnnotationError, KundokuError
from .markgen import generate_marks, is_expressible
from .metrics import EvalPair, MetricOptions, evaluate
from .model import Permutation, parse_annotated, render_annotated, sentence_from_record, split_glyphs

EXIT_OK, EXIT_IO, EXIT_REJECT, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit_json(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False, indent=None))


def _open_lines(path: str) -> Iterable[str]:
    if path == "-":
        return sys.stdin
    return open(path, encoding="utf-8")


def _read_sentences(args, default_format: str = "mark"):
    """Sentences from ``--text`` values or the ``--in`` file, streamed."""
    if getattr(args, "text", None):
        for k, t in enumerate(args.text, 1):
            yield parse_annotated(t, id=f"T{k}")
        return
    fmt = args.format or (infer_format(args.input) if args.input != "-" else default_format)
    errors: list = []
    fh = _open_lines(args.input)
    try:
        yield from iter_corpus(fh, fmt, args.lenient, errors)
    finally:
        if fh is not sys.stdin:
            fh.close()
        for e in errors:
            print(f"skipped: {e}", file=sys.stderr)


def _map(func, items, jobs: int):
    """Order-preserving map, in worker processes when ``jobs > 1``."""
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(func, items, chunksize=16)
    else:
        yield from map(func, items)


# --- validate / transduce ---------------------------------------------------

def _run_one(job):
    s, strict, with_trace, modernize = job
    result = run(s, strict=strict, modernize=modernize)
    rec = {"id": s.id, "accepted": result.accepted}
    if result.accepted:
        rec["order"] = list(result.permutation.order)
        rec["reading"] = result.ordered.reading
        rec["rendered"] = result.ordered.rendered
    else:
        rec["reason"] = result.failure_reason
    if strict:
        rec["ambiguous"] = result.ambiguous
    if with_trace and result.trace is not None:
        rec["trace"] = result.trace.to_dict()
    return rec


def cmd_validate(args) -> int:
    jobs = ((s, args.strict, args.trace, True) for s in _read_sentences(args))
    results = []
    for rec in _map(_run_one, jobs, args.jobs):
        results.append(rec)
        if not args.json:
            line = f"{rec['id']}\t{'ACCEPT' if rec['accepted'] else 'REJECT'}"
            if not rec["accepted"]:
                line += f"\t{rec['reason']}"
            if rec.get("ambiguous"):
                line += "\tambiguous"
            print(line)
            if args.trace:
                _emit_json(rec["trace"])
    if not results:
        raise UsageError("no sentences in input")
    accepted = sum(r["accepted"] for r in results)
    rate = 100 * accepted / len(results)
    if args.json:
        _emit_json({"results": results, "accepted": accepted, "total": len(results), "pass_rate": rate})
    else:
        print(f"pass rate: {rate:.2f}% ({accepted}/{len(results)})")
    return EXIT_OK if accepted == len(results) else EXIT_REJECT


def cmd_transduce(args) -> int:
    jobs = ((s, args.strict, args.trace, not args.keep_variants) for s in _read_sentences(args))
    status = EXIT_OK
    results = []
    for rec in _map(_run_one, jobs, args.jobs):
        if not rec["accepted"]:
            print(f"{rec['id']}: rejected: {rec['reason']}", file=sys.stderr)
            status = EXIT_REJECT
        if args.json:
            results.append(rec)
            continue
        if rec["accepted"]:
            line = " ".join(split_glyphs(rec["reading"]))
            if args.render:
                line += "\t" + rec["rendered"]
            print(line)
        if args.trace:
            _emit_json(rec["trace"])
    if args.json:
        _emit_json(results)
    return status


# --- annotate / align / expressible -----------------------------------------

def _load_pos(path: Optional[str]) -> dict:
    if not path:
        return {}
    spans = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                rec = json.loads(line)
                spans[str(rec.get("id", f"L{lineno}"))] = rec["spans"]
    return spans


def annotate_sentence(source: str, translation: str, dictionary=None, pos_spans=None, id: str = ""):
    """Align, generate marks for the aligned order, then attach kana; the ``annotate`` pipeline."""
    glyphs = split_glyphs(source)
    alignment = align(glyphs, translation, dictionary)
    marks = generate_marks(len(glyphs), alignment.permutation(), silent=alignment.unread)
    kana = classify_kana(translation, alignment, pos_spans)
    return marks.sentence(glyphs, alignment.unread, id=id, translation=translation,
                          okurigana=list(kana.okurigana), particle=list(kana.particle))


def cmd_annotate(args) -> int:
    dictionary = KanaDictionary.load(args.dict) if args.dict else None
    pos = _load_pos(args.pos)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    status = EXIT_OK
    try:
        for s in _read_sentences(args, default_format="tsv"):
            try:
                annotated = annotate_sentence(s.source_text, s.translation or "", dictionary, pos.get(s.id), s.id)
            except InexpressibleError as e:
                print(f"{s.id}: {e}", file=sys.stderr)
                status = EXIT_REJECT
                continue
            out.write(format_sentence(annotated, "jsonl") + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return status


def cmd_align(args) -> int:
    dictionary = KanaDictionary.load(args.dict) if args.dict else None
    src = split_glyphs(args.source)
    a = align(src, args.translation, dictionary, allow_unread=not args.no_unread)
    order = a.permutation().order
    if args.json:
        _emit_json({"mapping": [list(m) for m in a.mapping], "unread": list(a.unread),
                    "restored": [[list(span), g] for span, g in a.restored], "order": list(order)})
    else:
        print("order:\t" + "".join(src[i] for i in order))
        print("indices:\t" + ",".join(map(str, order)))
        if a.unread:
            print("unread:\t" + "".join(src[i] for i in a.unread))
    return EXIT_OK


def _parse_perm(text: str) -> tuple:
    try:
        perm = tuple(int(x) for x in text.replace(" ", "").split(",") if x != "")
    except ValueError:
        raise UsageError(f"not a comma-separated index list: {text!r}") from None
    if sorted(perm) != list(range(len(perm))):
        raise UsageError(f"not a permutation of 0..{len(perm) - 1}: {text!r}")
    return perm


def _placeholder_glyphs(n: int) -> list[str]:
    if n <= 26:
        return [chr(ord("A") + i) for i in range(n)]
    return [chr(0x4E00 + i) for i in range(n)]


def cmd_expressible(args) -> int:
    status = EXIT_OK
    results = []
    for text in args.perm:
        perm = _parse_perm(text)
        ok = is_expressible(perm, allow_groups=not args.no_groups)
        rec = {"perm": list(perm), "expressible": ok}
        if ok and not args.no_groups:
            marks = generate_marks(len(perm), perm)
            rec["annotation"] = render_annotated(marks.sentence(_placeholder_glyphs(len(perm))))
        elif not ok:
            status = EXIT_REJECT
            if not args.no_groups:
                try:
                    generate_marks(len(perm), perm)
                except InexpressibleError as e:
                    rec["pattern"] = list(e.pattern)
        results.append(rec)
        if not args.json:
            line = f"{','.join(map(str, perm))}\t{'expressible' if ok else 'inexpressible'}"
            if "annotation" in rec:
                line += "\t" + rec["annotation"]
            if "pattern" in rec:
                line += "\tpattern " + ",".join(map(str, rec["pattern"]))
            print(line)
    if args.json:
        _emit_json(results)
    return status


# --- combinatorics ----------------------------------------------------------

COUNT_COLUMNS = ("n", "catalan", "stack_of_queues_closed", "stack_of_queues_series", "brute_force",
                 "brute_force_stack", "factorial")


def cmd_count(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.n + 2 > args.series_order:
        args.series_order = args.n + 2
    ns = range(1, args.n + 1) if args.table else [args.n]
    rows = [count_result(n, brute_threshold=args.brute_max, series_order=args.series_order).as_dict() for n in ns]
    if args.json:
        _emit_json(rows if args.table else rows[0])
        return EXIT_OK
    header = ["n", "catalan", "stack-of-queues", "series", "brute", "brute-stack", "factorial"]
    cells = [[("-" if r[c] is None else str(r[c])) for c in COUNT_COLUMNS] for r in rows]
    widths = [max(len(h), *(len(row[k]) for row in cells)) for k, h in enumerate(header)]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    for row in cells:
        print("  ".join(v.rjust(w) for v, w in zip(row, widths)))
    return EXIT_OK


def cmd_enumerate(args) -> int:
    perms = enumerate_expressible(args.n, args.groups)
    if args.json:
        _emit_json([list(p.order) for p in perms])
    else:
        for p in perms:
            print(",".join(map(str, p.order)))
    return EXIT_OK


# --- evaluate ---------------------------------------------------------------

def _eval_records(path: str, as_orders: bool, as_marks: bool) -> list[dict]:
    """Records with optional ``id``, ``text``, ``order``, ``annotation``, ``bertscore``."""
    records = []
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\r\n") for line in fh]
    jsonl = path.endswith((".jsonl", ".json", ".ndjson")) or (lines and lines[0].lstrip().startswith("{"))
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if jsonl:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise KundokuError(f"{path}:{lineno}: invalid JSON: {e.msg}") from None
            out = {"id": str(rec.get("id", f"L{lineno}"))}
            if "source" in rec:  # corpus record: the translation is the text, the marks give the order
                s = sentence_from_record(rec)
                out["text"] = rec.get("translation")
                out["sentence"] = s
            else:
                out["text"] = rec.get("text", rec.get("prediction", rec.get("translation")))
                if rec.get("order") is not None:
                    out["order"] = tuple(rec["order"])
                if "marks" in rec and isinstance(rec["marks"], str):
                    out["sentence"] = parse_annotated(rec["marks"], id=out["id"])
            if rec.get("bertscore") is not None:
                out["bertscore"] = float(rec["bertscore"])
        elif as_marks:
            notation, _, text = line.partition("\t")
            out = {"id": f"L{lineno}", "sentence": parse_annotated(notation, id=f"L{lineno}"),
                   "text": text or None}
        elif as_orders:
            out = {"id": f"L{lineno}", "order": _parse_perm(line)}
        else:
            out = {"id": f"L{lineno}", "text": line}
        records.append(out)
    return records


def _order_of(rec: dict) -> Optional[tuple]:
    """The explicit order, else the automaton's reading of the annotation (None if rejected)."""
    if rec.get("order") is not None:
        return rec["order"]
    s = rec.get("sentence")
    if s is not None:
        result = run(s)
        if result.accepted:
            return result.permutation.order
    return None


def cmd_evaluate(args) -> int:
    preds = _eval_records(args.pred, args.orders, args.marks)
    golds = _eval_records(args.gold, args.orders, False)
    if len(preds) != len(golds):
        by_id = {g["id"]: g for g in golds}
        if not all(p["id"] in by_id for p in preds):
            raise KundokuError(f"{len(preds)} predictions for {len(golds)} references and ids do not match")
        golds = [by_id[p["id"]] for p in preds]
    pairs = []
    for p, g in zip(preds, golds):
        pred_order, gold_order = _order_of(p), _order_of(g)
        comparable = pred_order is not None and gold_order is not None and sorted(pred_order) == sorted(gold_order)
        has_text = p.get("text") is not None and g.get("text") is not None
        pairs.append(EvalPair(
            id=p["id"],
            prediction=p["text"] if has_text else None,
            reference=g["text"] if has_text else None,
            # a rejected annotation has no order; it counts against the pass rate only
            pred_order=Permutation(pred_order) if comparable else None,
            gold_order=Permutation(gold_order) if comparable else None,
            annotation=p.get("sentence") if args.marks else None,
            bertscore=p.get("bertscore"),
        ))
    options = MetricOptions(bleu_max_n=args.bleu_n, chrf_order=args.chrf_n, chrf_beta=args.chrf_beta,
                            ribes_alpha=args.ribes_alpha, ribes_beta=args.ribes_beta,
                            keep_punct=args.keep_punct, tau_normalized=args.tau_normalized)
    report = evaluate(pairs, options)
    if args.json:
        out = report.as_dict()
        out["sentences"] = len(pairs)
        _emit_json(out)
    else:
        print(report.table())
        if report.short_orders:
            print(f"note: {report.short_orders} order(s) shorter than 2 scored as tau = 1", file=sys.stderr)
    return EXIT_OK


# --- corpus -----------------------------------------------------------------

def cmd_stats(args) -> int:
    corpus = load_corpus(args.input, args.format, args.lenient)
    report = corpus_stats(corpus)
    if args.json:
        _emit_json(report.as_dict())
    else:
        print(f"sentences\t{report.sentences}")
        print(f"characters\t{report.characters}")
        for name, count in report.buckets.items():
            print(f"length {name}\t{count}")
        for name, size in report.label_space.items():
            print(f"{name} labels\t{size}")
    return EXIT_OK


def _parse_ratios(text: str) -> tuple:
    try:
        ratios = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"bad --ratios {text!r}") from None
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise UsageError(f"--ratios needs three positive numbers summing to 1, got {text!r}")
    return ratios


def cmd_split(args) -> int:
    ratios = _parse_ratios(args.ratios)
    corpus = load_corpus(args.input, args.format, args.lenient)
    parts = split_corpus(corpus, ratios, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name, part in zip(("train", "val", "test"), parts):
        path = out_dir / f"{name}.jsonl"
        save_corpus(part, path)
        summary[name] = {"path": str(path), "sentences": len(part)}
    if args.json:
        _emit_json(summary)
    else:
        for name, info in summary.items():
            print(f"{name}\t{info['sentences']}\t{info['path']}")
    return EXIT_OK


def cmd_reduce_labels(args) -> int:
    corpus = load_corpus(args.input, args.format, args.lenient)
    stats = label_counts(corpus)
    fields = LABEL_FIELDS if args.field == "all" else (args.field,)
    mappings = {}
    for name in fields:
        if stats[name]:
            mappings[name] = reduce_labels(stats[name], args.threshold)
    result = {name: m.as_dict() for name, m in mappings.items()}
    for name, m in mappings.items():
        result[name]["labels_before"] = len(stats[name])
        result[name]["labels_after"] = len({m.apply(lab) for lab in stats[name]})
    _emit_json(result)
    if args.apply:
        save_corpus(apply_mappings(corpus, mappings), args.apply)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, metavar="N", help="worker processes")
    common.add_argument("--lenient", action="store_true", default=argparse.SUPPRESS,
                        help="skip malformed input lines instead of failing")

    parser = _Parser(prog="kundoku", description="Kaeriten annotation tools for Kanbun reading.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    parser.add_argument("--lenient", action="store_true", help="skip malformed input lines instead of failing")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, func, help):
        p = sub.add_parser(name, help=help, description=help, parents=[common])
        p.set_defaults(func=func)
        return p

    def add_input(p, formats=FORMATS):
        p.add_argument("--in", dest="input", default="-", help="input file (default stdin)")
        p.add_argument("--format", choices=formats, help="input format (default from extension)")

    p = add("validate", cmd_validate, "check annotations with the automaton and report the pass rate")
    add_input(p)
    p.add_argument("--text", action="append", help="annotated sentence given inline (repeatable)")
    p.add_argument("--strict", action="store_true", help="search every branch and flag ambiguous outputs")
    p.add_argument("--trace", action="store_true", help="emit the transition trace as JSON")

    p = add("transduce", cmd_transduce, "print each sentence in Japanese reading order")
    add_input(p)
    p.add_argument("--text", action="append", help="annotated sentence given inline (repeatable)")
    p.add_argument("--render", action="store_true", help="also print the rendering with okurigana and particles")
    p.add_argument("--keep-variants", action="store_true", help="render traditional glyph forms unchanged")
    p.add_argument("--strict", action="store_true", help="search every branch and flag ambiguous outputs")
    p.add_argument("--trace", action="store_true", help="emit the transition trace as JSON")

    p = add("annotate", cmd_annotate, "generate marks from source/translation pairs (TSV in, JSONL out)")
    add_input(p)
    p.add_argument("--dict", help="kana dictionary JSON")
    p.add_argument("--pos", help="JSONL of {id, spans: [[start, end, tag], ...]}")
    p.add_argument("--out", help="output JSONL (default stdout)")

    p = add("align", cmd_align, "align one source sentence with its translation")
    p.add_argument("--source", required=True)
    p.add_argument("--translation", required=True)
    p.add_argument("--dict", help="kana dictionary JSON")
    p.add_argument("--no-unread", action="store_true", help="fail if a source glyph has no match")

    p = add("expressible", cmd_expressible, "test whether reading orders can be written with Kaeriten")
    p.add_argument("perm", nargs="+", help="comma-separated source indices in reading order, e.g. 2,0,1")
    p.add_argument("--no-groups", action="store_true", help="disallow bonded groups (plain stack)")

    p = add("count", cmd_count, "count expressible reading orders of n characters")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--table", action="store_true", help="one row for every length 1..n")
    p.add_argument("--series-order", type=int, default=64, help="power series terms")
    p.add_argument("--brute-max", type=int, default=BRUTE_FORCE_MAX_N, help="largest n to brute-force")

    p = add("enumerate", cmd_enumerate, "list every expressible reading order of n characters")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--groups", action="store_true", help="allow bonded groups")

    p = add("evaluate", cmd_evaluate, "score predictions against references")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--orders", action="store_true", help="plain-text lines are comma-separated orders")
    p.add_argument("--marks", action="store_true", help="predictions are annotations; adds the pass rate")
    p.add_argument("--keep-punct", action="store_true", help="keep punctuation in string metrics")
    p.add_argument("--tau-normalized", action="store_true", help="report (tau + 1) / 2 instead of raw tau")
    p.add_argument("--bleu-n", type=int, default=4)
    p.add_argument("--chrf-n", type=int, default=6)
    p.add_argument("--chrf-beta", type=float, default=2.0)
    p.add_argument("--ribes-alpha", type=float, default=0.25)
    p.add_argument("--ribes-beta", type=float, default=0.10)

    p = add("stats", cmd_stats, "sentence, character and label counts of a corpus")
    add_input(p)

    p = add("split", cmd_split, "shuffle a corpus into train/val/test JSONL files")
    add_input(p)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)

    p = add("reduce-labels", cmd_reduce_labels, "map rare labels to the nearest frequent one (JSON out)")
    add_input(p)
    p.add_argument("--threshold", type=int, default=10)
    p.add_argument("--field", choices=LABEL_FIELDS + ("all",), default="all")
    p.add_argument("--apply", metavar="OUT", help="also write the relabelled corpus as JSONL")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"kundoku: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidAnnotationError, InexpressibleError) as e:
        print(f"kundoku: {e}", file=sys.stderr)
        return EXIT_REJECT
    except BrokenPipeError:
        return EXIT_OK
    except (KundokuError, OSError, ValueError, UnicodeDecodeError) as e:
        print(f"kundoku: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
