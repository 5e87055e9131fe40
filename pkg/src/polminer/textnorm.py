"""Text normalization and token-overlap scoring used to align spans of unequal granularity.

Gold annotations are sub-paragraph highlight runs while rule candidates are
whole paragraphs; comparisons therefore run on normalized token multisets
rather than raw strings.
"""

from __future__ import annotations

import re
from collections import Counter

# Curly/angle/straight quotation marks plus apostrophes, stripped from span edges.
_EDGE_QUOTE_CHARS = "“”‘’«»\"'`"

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def strip_trailing_citations(text: str) -> str:
    """Drop trailing parenthesized groups that contain a digit (citation tails)."""
    t = text.rstrip()
    while t.endswith(")"):
        i = t.rfind("(")
        if i < 0:
            break
        inner = t[i + 1 : -1]
        if not any(ch.isdecimal() for ch in inner):
            break
        t = t[:i].rstrip()
    return t


def normalize_text(text: str) -> str:
    """Case-fold, strip outer quotation marks and trailing citations, collapse whitespace."""
    t = strip_trailing_citations(text)
    t = t.strip().strip(_EDGE_QUOTE_CHARS).strip()
    t = " ".join(t.split())
    return t.casefold()


def tokens(text: str) -> list[str]:
    """Word tokens (alphanumeric runs) of the normalized text."""
    return _TOKEN_RE.findall(normalize_text(text))


def token_counts(text: str) -> Counter[str]:
    return Counter(tokens(text))


def raw_token_counts(text: str) -> Counter[str]:
    """Token multiset of the text as written (case-folded, nothing stripped).

    Used when the question is "does this text exist in the source", where
    quotation marks and citation tails are evidence rather than noise.
    """
    return Counter(token.casefold() for token in _TOKEN_RE.findall(text))


def overlap_coefficient(a: Counter[str], b: Counter[str]) -> float:
    """Multiset overlap |a & b| / min(|a|, |b|); 0.0 when either side is empty."""
    ta, tb = sum(a.values()), sum(b.values())
    if ta == 0 or tb == 0:
        return 0.0
    shared = sum((a & b).values())
    return shared / min(ta, tb)


def containment(a: Counter[str], b: Counter[str]) -> float:
    """Fraction of a's tokens present in b; 0.0 when a is empty."""
    ta = sum(a.values())
    if ta == 0:
        return 0.0
    return sum((a & b).values()) / ta


def token_edit_ratio(a: list[str], b: list[str]) -> float:
    """Levenshtein distance over token sequences, scaled by the longer length."""
    if not a and not b:
        return 0.0
    if not a or not b:
        return 1.0
    prev = list(range(len(b) + 1))
    for i, ta in enumerate(a, start=1):
        cur = [i]
        for j, tb in enumerate(b, start=1):
            cost = 0 if ta == tb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1] / max(len(a), len(b))
