"""Align extractor output with gold annotations and compute the report tables.

Alignment is greedy best-first on a token-overlap score, so a sub-paragraph
gold span still matches the whole-paragraph candidate that contains it and a
truncated candidate still matches the span it came from. Unmatched
candidates are triaged into text that exists in the source but is not a
principle (Not-PoL) versus text absent from the source (Hallucination).

Metrics come in two modes. Standard mode uses the conventional definitions.
Paper mode reproduces the historical result tables this harness is checked
against, whose formulas have precision and recall swapped relative to
standard usage; it is the default for reproduction runs.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Mapping, Sequence

from .corpus import Document
from .errors import DocMismatch, GoldMismatch
from .extractor import PoLCandidate, PoLType
from .goldstore import GoldAnnotation, GoldSet
from .textnorm import (
    containment,
    normalize_text,
    overlap_coefficient,
    raw_token_counts,
    token_counts,
    token_edit_ratio,
    tokens,
)

FULL_COVERAGE = 0.95
WORD_EXCHANGE_MAX_EDIT_RATIO = 0.1
WORD_EXCHANGE_MAX_LENGTH_DELTA = 0.1
SUMMARY_MAX_LENGTH_RATIO = 0.7
ELLIPSIS_SUFFIXES = ("...", "…", "(...)", "(…)")

NOTE_ERROR_SPLIT = (
    "Error columns follow the per-tool tally convention (chat baseline: "
    "Not-PoL=16, Hallucination=29); some published cross-method summaries "
    "swap these two columns."
)


class Completeness(str, Enum):
    FULL = "Full"
    PARTIAL = "Partial"
    PARTIAL_ELLIPSIS = "PartialEllipsis"


class SimilarityClass(str, Enum):
    SAME_TEXT = "SameText"
    SUMMARY = "Summary"
    WORD_EXCHANGE = "WordExchange"
    DIVERGENT = "Divergent"


class FpKind(str, Enum):
    NOT_POL = "NotPoL"
    HALLUCINATION = "Hallucination"


class MetricsMode(str, Enum):
    PAPER = "paper"
    STANDARD = "standard"


@dataclass(frozen=True)
class MatchRecord:
    gold: GoldAnnotation
    candidate: PoLCandidate
    completeness: Completeness
    similarity: SimilarityClass
    score: float


@dataclass(frozen=True)
class AlignmentResult:
    doc_id: str
    matches: tuple[MatchRecord, ...]
    false_positives: tuple[tuple[PoLCandidate, FpKind], ...]
    false_negatives: tuple[GoldAnnotation, ...]
    page_count: int | None = None
    note: str = ""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def merge_counts(counts: Sequence[ConfusionCounts]) -> ConfusionCounts:
    total = ConfusionCounts()
    for c in counts:
        total = total + c
    return total


def _round_to(value: float, digits: int, rounding: str) -> float:
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(q, rounding=rounding))


def round_half_up(value: float, digits: int = 3) -> float:
    return _round_to(value, digits, ROUND_HALF_UP)


def round_down(value: float, digits: int = 3) -> float:
    return _round_to(value, digits, ROUND_DOWN)


@dataclass(frozen=True)
class MetricsReport:
    mode: MetricsMode
    precision: float
    recall: float
    accuracy: float
    f1: float

    def presentation(self) -> dict[str, float]:
        """Values rounded to 3 decimals for display.

        In paper mode the recall column truncates instead of rounding: the
        published tables this harness reproduces were visibly truncated in
        that column (161/206 -> 0.781, 365/452 -> 0.807) while the other
        columns round half-up.
        """
        recall_round = round_down if self.mode is MetricsMode.PAPER else round_half_up
        return {
            "precision": round_half_up(self.precision),
            "recall": recall_round(self.recall),
            "accuracy": round_half_up(self.accuracy),
            "f1": round_half_up(self.f1),
        }


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics(counts: ConfusionCounts, mode: MetricsMode = MetricsMode.PAPER) -> MetricsReport:
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    if mode is MetricsMode.PAPER:
        precision = _ratio(tp, tp + fn)
        recall = _ratio(tp, tp + fp)
    else:
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
    accuracy = _ratio(tp, tp + fp + fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricsReport(mode=mode, precision=precision, recall=recall, accuracy=accuracy, f1=f1)


def _ends_with_ellipsis(text: str) -> bool:
    t = text.rstrip()
    return t.endswith(ELLIPSIS_SUFFIXES)


def _classify_match(
    gold: GoldAnnotation,
    candidate: PoLCandidate,
    gold_counter: Counter,
    cand_counter: Counter,
    overlap_threshold: float,
    score: float,
) -> MatchRecord:
    coverage = containment(gold_counter, cand_counter)
    if coverage >= FULL_COVERAGE:
        completeness = Completeness.FULL
    elif _ends_with_ellipsis(candidate.text):
        completeness = Completeness.PARTIAL_ELLIPSIS
    else:
        completeness = Completeness.PARTIAL

    if normalize_text(candidate.text) == normalize_text(gold.span_text):
        similarity = SimilarityClass.SAME_TEXT
    else:
        gold_tokens = tokens(gold.span_text)
        cand_tokens = tokens(candidate.text)
        edit = token_edit_ratio(cand_tokens, gold_tokens)
        length_delta = abs(len(cand_tokens) - len(gold_tokens))
        if (
            edit <= WORD_EXCHANGE_MAX_EDIT_RATIO
            and length_delta <= WORD_EXCHANGE_MAX_LENGTH_DELTA * max(len(gold_tokens), 1)
        ):
            similarity = SimilarityClass.WORD_EXCHANGE
        elif (
            len(cand_tokens) <= SUMMARY_MAX_LENGTH_RATIO * len(gold_tokens)
            and containment(cand_counter, gold_counter) >= overlap_threshold
        ):
            similarity = SimilarityClass.SUMMARY
        else:
            similarity = SimilarityClass.DIVERGENT
    return MatchRecord(
        gold=gold, candidate=candidate, completeness=completeness,
        similarity=similarity, score=score,
    )


def align(
    candidates: Sequence[PoLCandidate],
    gold: Sequence[GoldAnnotation],
    document: Document,
    overlap_threshold: float = 0.8,
    hallucination_threshold: float = 0.6,
) -> AlignmentResult:
    """Greedy best-first 1:1 matching of candidates against gold spans.

    Pairs scoring at least ``overlap_threshold`` (multiset token overlap)
    match, highest score first; ties break on lowest gold paragraph index,
    then lowest candidate paragraph index. Every unmatched candidate is
    scored against every source paragraph: below
    ``hallucination_threshold`` it is a Hallucination, otherwise a Not-PoL.
    """
    for value, name in ((overlap_threshold, "overlap_threshold"),
                        (hallucination_threshold, "hallucination_threshold")):
        if not 0 < value <= 1:
            raise ValueError(f"{name} must be in (0, 1], got {value}")
    doc_ids = {document.doc_id} | {c.doc_id for c in candidates} | {a.doc_id for a in gold}
    if len(doc_ids) > 1:
        raise DocMismatch(f"mixed doc_ids in one alignment: {sorted(doc_ids)}")

    gold_counters = [token_counts(a.span_text) for a in gold]
    cand_counters = [token_counts(c.text) for c in candidates]

    scored = []
    for gi, ann in enumerate(gold):
        for ci, cand in enumerate(candidates):
            score = overlap_coefficient(gold_counters[gi], cand_counters[ci])
            if score >= overlap_threshold:
                scored.append((score, ann.paragraph_index, cand.paragraph_index, gi, ci))
    scored.sort(key=lambda item: (-item[0], item[1], item[2], item[3], item[4]))

    matched_gold: set[int] = set()
    matched_cand: set[int] = set()
    matches: list[tuple[int, MatchRecord]] = []
    for score, _, _, gi, ci in scored:
        if gi in matched_gold or ci in matched_cand:
            continue
        matched_gold.add(gi)
        matched_cand.add(ci)
        matches.append(
            (gi, _classify_match(gold[gi], candidates[ci], gold_counters[gi],
                                 cand_counters[ci], overlap_threshold, score))
        )
    matches.sort(key=lambda item: item[0])

    # triage compares text as written: a candidate that is nothing but a
    # citation tail still exists in the source and must not read as fabricated
    para_counters = [raw_token_counts(p.text) for p in document.paragraphs]
    false_positives: list[tuple[PoLCandidate, FpKind]] = []
    for ci, cand in enumerate(candidates):
        if ci in matched_cand:
            continue
        raw_counter = raw_token_counts(cand.text)
        best = max(
            (overlap_coefficient(raw_counter, pc) for pc in para_counters),
            default=0.0,
        )
        kind = FpKind.HALLUCINATION if best < hallucination_threshold else FpKind.NOT_POL
        false_positives.append((cand, kind))

    false_negatives = tuple(ann for gi, ann in enumerate(gold) if gi not in matched_gold)
    return AlignmentResult(
        doc_id=document.doc_id,
        matches=tuple(m for _, m in matches),
        false_positives=tuple(false_positives),
        false_negatives=false_negatives,
        page_count=document.page_count,
    )


def confusion(alignment: AlignmentResult) -> ConfusionCounts:
    return ConfusionCounts(
        tp=len(alignment.matches),
        fp=len(alignment.false_positives),
        fn=len(alignment.false_negatives),
    )


@dataclass
class Table:
    title: str
    columns: list[str]
    rows: list[list[object]]
    footnotes: list[str] = field(default_factory=list)

    def to_records(self) -> list[dict]:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buf.getvalue()

    def to_markdown(self) -> str:
        cells = [self.columns] + [[_fmt_cell(v) for v in row] for row in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.columns))]
        lines = []
        if self.title:
            lines.append(f"### {self.title}")
            lines.append("")
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(cells[0], widths)) + " |")
        lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
        for row in cells[1:]:
            lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
        for note in self.footnotes:
            lines.append("")
            lines.append(f"_{note}_")
        return "\n".join(lines) + "\n"


def _fmt_cell(value: object) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return "" if value is None else str(value)


def _type_counts(annotations: Sequence[GoldAnnotation]) -> dict[PoLType, int]:
    counts = Counter(a.pol_type for a in annotations)
    return {t: counts.get(t, 0) for t in PoLType}


TRACKING_COLUMNS = [
    "Judgment",
    "ANN", "ANN Implicit", "ANN Ex. Direct", "ANN Ex. Indirect",
    "Tool (full)", "Tool (partial)", "Tool (partial ...)",
    "Tool Implicit", "Tool Ex. Direct", "Tool Ex. Indirect",
    "Same Text", "Summary", "Word Exchange", "Divergent",
    "Hallucination", "Not-PoL", "Note", "Pag.",
]


def tracking_table(alignments: Sequence[AlignmentResult]) -> Table:
    """Per-judgment tracking rows plus a TOTAL row.

    Matched principles are typed by their gold annotation; completeness and
    similarity tallies cover matches only, error columns cover the
    unmatched candidates.
    """
    rows: list[list[object]] = []
    for a in alignments:
        gold_all = [m.gold for m in a.matches] + list(a.false_negatives)
        ann_types = _type_counts(gold_all)
        tool_types = _type_counts([m.gold for m in a.matches])
        comp = Counter(m.completeness for m in a.matches)
        sim = Counter(m.similarity for m in a.matches)
        fp_kinds = Counter(kind for _, kind in a.false_positives)
        rows.append([
            a.doc_id,
            len(gold_all),
            ann_types[PoLType.IMPLICIT],
            ann_types[PoLType.EXPLICIT_DIRECT],
            ann_types[PoLType.EXPLICIT_INDIRECT],
            comp.get(Completeness.FULL, 0),
            comp.get(Completeness.PARTIAL, 0),
            comp.get(Completeness.PARTIAL_ELLIPSIS, 0),
            tool_types[PoLType.IMPLICIT],
            tool_types[PoLType.EXPLICIT_DIRECT],
            tool_types[PoLType.EXPLICIT_INDIRECT],
            sim.get(SimilarityClass.SAME_TEXT, 0),
            sim.get(SimilarityClass.SUMMARY, 0),
            sim.get(SimilarityClass.WORD_EXCHANGE, 0),
            sim.get(SimilarityClass.DIVERGENT, 0),
            fp_kinds.get(FpKind.HALLUCINATION, 0),
            fp_kinds.get(FpKind.NOT_POL, 0),
            a.note,
            a.page_count if a.page_count is not None else "",
        ])
    total = ["TOTAL"]
    for col in range(1, len(TRACKING_COLUMNS) - 2):
        total.append(sum(row[col] for row in rows))
    total.extend(["", ""])
    rows.append(total)
    return Table(title="Extraction tracking", columns=TRACKING_COLUMNS, rows=rows)


def percent(count: int, whole: int, digits: int = 1) -> float:
    return round_half_up(_ratio(count, whole) * 100, digits)


@dataclass
class ComparisonReport:
    comparison: Table
    error_share: Table

    def to_records(self) -> dict:
        return {
            "comparison": self.comparison.to_records(),
            "error_share": self.error_share.to_records(),
            "footnotes": self.comparison.footnotes + self.error_share.footnotes,
        }


def _gold_keys(alignments: Sequence[AlignmentResult]) -> set:
    keys = set()
    for a in alignments:
        for m in a.matches:
            keys.add(m.gold.key())
        for ann in a.false_negatives:
            keys.add(ann.key())
    return keys


def comparison_table(
    gold: GoldSet,
    methods: Mapping[str, Sequence[AlignmentResult]],
) -> ComparisonReport:
    """Cross-method comparison against the whole gold set, plus error shares.

    Each method must align exactly the annotations in ``gold``; percentages
    are computed against the whole-gold counts and rounded half-up to one
    decimal.
    """
    if len(methods) < 2:
        raise ValueError("need at least two methods to compare")
    gold_keys = {a.key() for a in gold.annotations}
    for name, alignments in methods.items():
        if _gold_keys(alignments) != gold_keys:
            raise GoldMismatch(f"method {name!r} is not aligned against the given gold set")

    whole = len(gold)
    whole_types = gold.counts_by_type
    columns = [
        "Method", "PoLs", "PoLs %",
        "Implicit", "Implicit %",
        "Ex. Direct", "Ex. Direct %",
        "Ex. Indirect", "Ex. Indirect %",
    ]
    rows: list[list[object]] = [[
        "Whole PoLs", whole, "",
        whole_types[PoLType.IMPLICIT], "",
        whole_types[PoLType.EXPLICIT_DIRECT], "",
        whole_types[PoLType.EXPLICIT_INDIRECT], "",
    ]]
    err_columns = [
        "Method", "Total found", "Errors", "Errors %",
        "Not-PoL", "Not-PoL %", "Hallucination", "Hallucination %",
    ]
    err_rows: list[list[object]] = []
    for name, alignments in methods.items():
        found = [m.gold for a in alignments for m in a.matches]
        found_types = _type_counts(found)
        tp = len(found)
        fp_kinds = Counter(kind for a in alignments for _, kind in a.false_positives)
        fp = sum(fp_kinds.values())
        rows.append([
            name, tp, percent(tp, whole),
            found_types[PoLType.IMPLICIT],
            percent(found_types[PoLType.IMPLICIT], whole_types[PoLType.IMPLICIT]),
            found_types[PoLType.EXPLICIT_DIRECT],
            percent(found_types[PoLType.EXPLICIT_DIRECT], whole_types[PoLType.EXPLICIT_DIRECT]),
            found_types[PoLType.EXPLICIT_INDIRECT],
            percent(found_types[PoLType.EXPLICIT_INDIRECT], whole_types[PoLType.EXPLICIT_INDIRECT]),
        ])
        total_found = tp + fp
        err_rows.append([
            name, total_found, fp, percent(fp, total_found),
            fp_kinds.get(FpKind.NOT_POL, 0),
            percent(fp_kinds.get(FpKind.NOT_POL, 0), total_found),
            fp_kinds.get(FpKind.HALLUCINATION, 0),
            percent(fp_kinds.get(FpKind.HALLUCINATION, 0), total_found),
        ])
    return ComparisonReport(
        comparison=Table(title="Methods vs whole gold", columns=columns, rows=rows),
        error_share=Table(
            title="Error shares",
            columns=err_columns,
            rows=err_rows,
            footnotes=[NOTE_ERROR_SPLIT],
        ),
    )


def summarize(alignments: Sequence[AlignmentResult]) -> dict:
    """Corpus-level counts, both metric modes, and per-document rows."""
    per_doc = {a.doc_id: confusion(a) for a in alignments}
    total = merge_counts(list(per_doc.values()))
    paper = metrics(total, MetricsMode.PAPER)
    standard = metrics(total, MetricsMode.STANDARD)
    return {
        "confusion": {"tp": total.tp, "fp": total.fp, "fn": total.fn},
        "metrics": {
            "paper": paper.presentation(),
            "standard": standard.presentation(),
            "full_precision": {
                "paper": {"precision": paper.precision, "recall": paper.recall,
                          "accuracy": paper.accuracy, "f1": paper.f1},
                "standard": {"precision": standard.precision, "recall": standard.recall,
                             "accuracy": standard.accuracy, "f1": standard.f1},
            },
        },
        "per_document": [
            {"doc_id": doc_id, "tp": c.tp, "fp": c.fp, "fn": c.fn}
            for doc_id, c in per_doc.items()
        ],
    }
