"""Exact-match quote verification with tolerant normalization.

LLM-proposed quotes are accepted only when they occur verbatim in the source
chapter, after two cosmetic normalizations: runs of whitespace collapse to a
single space (Gutenberg texts hard-wrap lines) and curly quote marks unify
with their straight forms. The returned text is always the chapter's original
spelling, so a UI highlight matches the displayed text exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

_QUOTE_MARKS = {
    "‘": "'",  # left single
    "’": "'",  # right single
    "‚": "'",
    "‛": "'",
    "“": '"',  # left double
    "”": '"',  # right double
    "„": '"',
    "‟": '"',
}


def normalize(text: str) -> str:
    """Collapse whitespace runs to single spaces and unify quote marks."""
    out: list[str] = []
    in_space = False
    for ch in text.strip():
        if ch.isspace():
            in_space = True
            continue
        if in_space and out:
            out.append(" ")
        in_space = False
        out.append(_QUOTE_MARKS.get(ch, ch))
    return "".join(out)


@dataclass
class NormalizedText:
    """A chapter normalized once, with a map back to original offsets."""

    original: str
    normalized: str
    # starts[i] / ends[i]: original [start, end) span that produced
    # normalized character i.
    starts: list[int]
    ends: list[int]

    def find_original(self, candidate: str) -> str | None:
        """Original-spelling span matching `candidate`, or None if absent."""
        needle = normalize(candidate)
        if not needle:
            return None
        idx = self.normalized.find(needle)
        if idx < 0:
            return None
        start = self.starts[idx]
        end = self.ends[idx + len(needle) - 1]
        return self.original[start:end]


def index_text(original: str) -> NormalizedText:
    """Build the normalized view of a chapter for repeated quote lookups."""
    norm: list[str] = []
    starts: list[int] = []
    ends: list[int] = []
    pending_space_at: int | None = None
    for pos, ch in enumerate(original):
        if ch.isspace():
            if pending_space_at is None:
                pending_space_at = pos
            continue
        if pending_space_at is not None and norm:
            norm.append(" ")
            starts.append(pending_space_at)
            ends.append(pos)
        pending_space_at = None
        norm.append(_QUOTE_MARKS.get(ch, ch))
        starts.append(pos)
        ends.append(pos + 1)
    return NormalizedText(original, "".join(norm), starts, ends)


def verify_candidate(candidate: str, indexed: NormalizedText) -> str | None:
    """Return the chapter's original spelling for a candidate quote, or None.

    None means the candidate fails the exact-match check (a hallucinated or
    rewritten quote) and must fall back to explanation evidence.
    """
    return indexed.find_original(candidate)
