"""Quote, keyword, and end-citation detectors under pinned rule profiles.

The ``v1_broad`` and ``v2_refined`` profiles replicate the original generated
patterns bit for bit, quirks included:

* any opening quote mark may pair with any closing mark (the character class
  cannot tell styles apart), and a match never crosses a newline;
* ``CASS.`` / ``TRIB.`` only count as keywords when the trailing period is
  directly followed by a word character, because a word boundary after a
  period needs one (so ``"Cass. n. 123"`` is NOT a keyword hit);
* the end-citation test accepts a final newline after the closing
  parenthesis but nothing else.

The ``extended`` profile fixes exactly those three sharp edges and nothing
else, so the effect of each fix is measurable against the baseline.

The detectors are implemented as character scanners rather than compiled
regexes; the test suite replays the original regex patterns as an
independent oracle and checks 100% agreement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from ..errors import SchemaError

# Opening and closing character classes of the original quote pattern.
PUBLISHED_QUOTE_OPEN = frozenset("“\"«‘")  # “ " « ‘
PUBLISHED_QUOTE_CLOSE = frozenset("”\"»’")  # ” " » ’

# Style-matched pairs used by the extended profile.
QUOTE_PAIRS = {
    "“": "”",
    '"': '"',
    "«": "»",
    "‘": "’",
}

# Keyword lexicon in original alternation order; order matters for
# same-position matches ("CASS." is tried before "CASSAZIONE").
PUBLISHED_KEYWORDS = (
    "CORTE",
    "TRIBUNALE",
    "TRIB.",
    "GIURISPRUDENZA",
    "COLLEGIO",
    "CONSESSO",
    "CASS.",
    "CASSAZIONE",
)


@dataclass(frozen=True)
class RuleProfile:
    """A pinned set of matching semantics for the three detectors.

    ``conjunctive`` selects the extraction combination logic: quote AND
    keyword, else end-citation (refined script) versus quote OR citation OR
    keyword (first script).
    """

    name: str
    quote_open_set: frozenset[str] = PUBLISHED_QUOTE_OPEN
    quote_close_set: frozenset[str] = PUBLISHED_QUOTE_CLOSE
    keyword_lexicon: tuple[str, ...] = PUBLISHED_KEYWORDS
    citation_anchored: bool = True
    fix_abbrev_boundaries: bool = False
    allow_trailing_punct_after_citation: bool = False
    match_quote_styles: bool = False
    conjunctive: bool = True

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "quote_open_set": sorted(self.quote_open_set),
            "quote_close_set": sorted(self.quote_close_set),
            "keyword_lexicon": list(self.keyword_lexicon),
            "citation_anchored": self.citation_anchored,
            "fix_abbrev_boundaries": self.fix_abbrev_boundaries,
            "allow_trailing_punct_after_citation": self.allow_trailing_punct_after_citation,
            "match_quote_styles": self.match_quote_styles,
            "conjunctive": self.conjunctive,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RuleProfile":
        try:
            return cls(
                name=str(data["name"]),
                quote_open_set=frozenset(data["quote_open_set"]),
                quote_close_set=frozenset(data["quote_close_set"]),
                keyword_lexicon=tuple(data["keyword_lexicon"]),
                citation_anchored=bool(data["citation_anchored"]),
                fix_abbrev_boundaries=bool(data["fix_abbrev_boundaries"]),
                allow_trailing_punct_after_citation=bool(
                    data["allow_trailing_punct_after_citation"]
                ),
                match_quote_styles=bool(data.get("match_quote_styles", False)),
                conjunctive=bool(data.get("conjunctive", True)),
            )
        except KeyError as exc:
            raise SchemaError(f"/{exc.args[0]}", "missing profile field") from exc


V1_BROAD = RuleProfile(name="v1_broad", citation_anchored=False, conjunctive=False)
V2_REFINED = RuleProfile(name="v2_refined")
EXTENDED = replace(
    V2_REFINED,
    name="extended",
    fix_abbrev_boundaries=True,
    allow_trailing_punct_after_citation=True,
    match_quote_styles=True,
)

PROFILES = {p.name: p for p in (V1_BROAD, V2_REFINED, EXTENDED)}


def get_profile(name: str) -> RuleProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}") from None


def save_profile(profile: RuleProfile, path: str | Path) -> Path:
    p = Path(path)
    p.write_text(json.dumps(profile.to_dict(), ensure_ascii=False, indent=2) + "\n", "utf-8")
    return p


def load_profile(path: str | Path) -> RuleProfile:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("/", "profile file must hold a JSON object")
    return RuleProfile.from_dict(data)


@dataclass(frozen=True)
class QuoteSpan:
    start: int
    end: int  # exclusive
    text: str
    open_char: str
    close_char: str


def find_quotes(paragraph_text: str, profile: RuleProfile) -> list[QuoteSpan]:
    """Leftmost, shortest, non-overlapping quote spans within one paragraph.

    Published profiles pair any opener with any closer; the extended profile
    requires the style-matched closer. A span never crosses a newline.
    """
    spans: list[QuoteSpan] = []
    text = paragraph_text
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if ch in profile.quote_open_set:
            if profile.match_quote_styles:
                closers: frozenset[str] = frozenset((QUOTE_PAIRS[ch],))
            else:
                closers = profile.quote_close_set
            close_at = None
            j = i + 1
            while j < n and text[j] != "\n":
                if text[j] in closers:
                    close_at = j
                    break
                j += 1
            if close_at is not None:
                spans.append(
                    QuoteSpan(
                        start=i,
                        end=close_at + 1,
                        text=text[i : close_at + 1],
                        open_char=ch,
                        close_char=text[close_at],
                    )
                )
                i = close_at + 1
                continue
            # no closer before the newline: no match can start here
        i += 1
    return spans


def _is_word_char(ch: str) -> bool:
    # single-character equivalent of regex \w in Unicode mode
    return ch == "_" or ch.isalnum()


def match_keywords(paragraph_text: str, profile: RuleProfile) -> list[tuple[str, int]]:
    """Case-insensitive, non-overlapping keyword hits as (lexicon token, offset).

    Lexicon tokens ending in a period keep the original boundary behavior
    (next character must be a word character) unless the profile sets
    ``fix_abbrev_boundaries``, in which case the trailing period alone ends
    the hit.
    """
    text = paragraph_text
    n = len(text)
    hits: list[tuple[str, int]] = []
    i = 0
    while i < n:
        if _is_word_char(text[i]) and (i == 0 or not _is_word_char(text[i - 1])):
            matched_end = None
            for token in profile.keyword_lexicon:
                end = i + len(token)
                if end > n or text[i:end].casefold() != token.casefold():
                    continue
                nxt = text[end] if end < n else None
                if token.endswith("."):
                    ok = profile.fix_abbrev_boundaries or (
                        nxt is not None and _is_word_char(nxt)
                    )
                else:
                    ok = nxt is None or not _is_word_char(nxt)
                if ok:
                    hits.append((token, i))
                    matched_end = end
                    break
            if matched_end is not None:
                i = matched_end
                continue
        i += 1
    return hits


def _is_digit(ch: str) -> bool:
    # single-character equivalent of regex \d
    return ch.isdecimal()


def citation_at_end(paragraph_text: str, profile: RuleProfile) -> str | None:
    """Matched citation substring, or None.

    ``citation_anchored`` profiles require the closing parenthesis at the end
    of the paragraph (a single trailing newline is tolerated, mirroring the
    original anchor); unanchored profiles accept it anywhere. The extended
    profile additionally ignores trailing periods, semicolons, and
    whitespace after the closing parenthesis.
    """
    text = paragraph_text
    if not profile.citation_anchored:
        return _search_citation(text)
    if profile.allow_trailing_punct_after_citation:
        end = len(text)
        while end > 0 and (text[end - 1] in ".;" or text[end - 1].isspace()):
            end -= 1
        return _anchored_citation(text[:end])
    return _anchored_citation(text)


def _anchored_citation(text: str) -> str | None:
    n = len(text)
    end = n - 1 if n and text[n - 1] == "\n" else n
    # need "(" + filler + "dddd)" with ")" at end-1
    if end < 6 or text[end - 1] != ")":
        return None
    if not all(_is_digit(text[k]) for k in range(end - 5, end - 1)):
        return None
    filler_stop = end - 5
    for i in range(0, filler_stop):
        if text[i] == "(" and "\n" not in text[i + 1 : filler_stop]:
            return text[i:end]
    return None


def _search_citation(text: str) -> str | None:
    n = len(text)
    for i in range(n):
        if text[i] != "(":
            continue
        nl = text.find("\n", i + 1)
        # filler may not contain a newline, so the digit run must start at
        # or before the newline position
        max_end = n if nl < 0 else min(n, nl + 5)
        for end in range(i + 6, max_end + 1):
            if (
                text[end - 1] == ")"
                and all(_is_digit(text[k]) for k in range(end - 5, end - 1))
                and (nl < 0 or end - 5 <= nl)
            ):
                return text[i:end]
    return None
