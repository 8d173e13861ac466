"""Alternative spellings for biasing words, and the list-file parsers.

Short words gain a character split ("gpu" -> "g p u"); longer compounds are
split against a rank-cost dictionary ("hyperscale" -> "hyper scale").  Both
help when the model heard the word as pieces.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .core import Vocabulary
from .errors import InvalidValueError, UnsegmentableError
from .graph import BiasingEntry, tokenize

logger = logging.getLogger(__name__)

ABBREVIATION_MAX_LEN = 4  # at most this many chars reads as a spelled-out abbreviation
COMPOUND_MIN_LEN = 3


@dataclass(frozen=True)
class WordCostDictionary:
    """Ranked word list with Zipf-style costs: cost = ln((rank+1) * ln(N)).

    Rank is the 0-based position in the list (most frequent first); unknown
    words cost +inf.  Needs at least two words or every cost degenerates.
    """

    words: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        if len(self.words) < 2:
            raise InvalidValueError("cost dictionary needs at least two words")
        if len(set(self.words)) != len(self.words):
            raise InvalidValueError("cost dictionary has duplicate words")

    @cached_property
    def _ranks(self) -> dict[str, int]:
        return {w: r for r, w in enumerate(self.words)}

    @cached_property
    def _log_size(self) -> float:
        return math.log(len(self.words))

    def cost(self, word: str) -> float:
        rank = self._ranks.get(word)
        if rank is None:
            return math.inf
        return math.log((rank + 1) * self._log_size)

    def __contains__(self, word: str) -> bool:
        return word in self._ranks


def load_wordlist(path: str) -> WordCostDictionary:
    """Read a frequency-ranked word list (one word per line, best first)."""
    words: list[str] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if not word or word in seen:
                continue
            seen.add(word)
            words.append(word)
    return WordCostDictionary(words=tuple(words))


def abbreviation_variant(word: str) -> str | None:
    """Character split for short alphabetic words ("rtx" -> "r t x")."""
    if not word.isalpha() or len(word) > ABBREVIATION_MAX_LEN:
        return None
    return " ".join(word)


def compound_split(word: str, dictionary: WordCostDictionary) -> str | None:
    """Cheapest split of a compound into >= 2 dictionary words of >= 2 chars.

    Returns the space-joined pieces only when their total cost beats the
    word's own cost (unknown words cost +inf, so any finite split wins);
    otherwise None.  Cost ties keep the longest trailing piece.
    """
    n = len(word)
    if n < COMPOUND_MIN_LEN or not word.isalpha():
        return None
    best = [math.inf] * (n + 1)
    back = [0] * (n + 1)
    best[0] = 0.0
    for i in range(2, n + 1):
        for j in range(0, i - 1):
            if j == 0 and i == n:
                continue  # the whole word is not a split
            c = dictionary.cost(word[j:i])
            if best[j] + c < best[i]:
                best[i] = best[j] + c
                back[i] = j
    if not best[n] < dictionary.cost(word):
        return None
    pieces = []
    i = n
    while i > 0:
        pieces.append(word[back[i]:i])
        i = back[i]
    return " ".join(reversed(pieces))


def expand_entries(
    words: Iterable[str],
    vocab: Vocabulary,
    dictionary: WordCostDictionary | None = None,
    manual_alts: Mapping[str, Sequence[str]] | None = None,
    auto_alts: bool = True,
) -> list[BiasingEntry]:
    """Build biasing entries with every usable transcription variant.

    Variants per word, in order: the word itself, its abbreviation split,
    its compound split (when a dictionary is given), then manual spellings.
    Variants that fail to tokenize are skipped with a warning; a word whose
    primary spelling fails drops the whole entry.  Duplicate words and
    duplicate token sequences are dropped, first occurrence wins.
    """
    manual = manual_alts or {}
    entries: list[BiasingEntry] = []
    done: set[str] = set()
    for raw in words:
        word = raw.strip().lower()
        if not word or word in done:
            continue
        done.add(word)
        variants = [word]
        if auto_alts:
            abbr = abbreviation_variant(word)
            if abbr is not None:
                variants.append(abbr)
            if dictionary is not None:
                comp = compound_split(word, dictionary)
                if comp is not None:
                    variants.append(comp)
        variants.extend(alt.strip().lower() for alt in manual.get(word, ()))

        transcriptions: list[tuple[int, ...]] = []
        seen: set[tuple[int, ...]] = set()
        dropped = False
        for k, variant in enumerate(variants):
            if not variant:
                continue
            try:
                seq = tuple(tokenize(variant, vocab))
            except UnsegmentableError as exc:
                if k == 0:
                    logger.warning("dropping entry %r: %s", word, exc)
                    dropped = True
                    break
                logger.warning("skipping variant %r of %r: %s", variant, word, exc)
                continue
            if seq not in seen:
                seen.add(seq)
                transcriptions.append(seq)
        if dropped or not transcriptions:
            continue
        entries.append(BiasingEntry(canonical=word, transcriptions=tuple(transcriptions)))
    return entries


def load_context_list(path: str) -> list[tuple[str, tuple[str, ...]]]:
    """Read a context list: one entry per line, canonical[TAB alt_spelling]*.

    Lines starting with '#' and blank lines are skipped.  Everything is
    lowercased and trimmed.
    """
    rows: list[tuple[str, tuple[str, ...]]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = [p.strip().lower() for p in line.split("\t")]
            canonical = parts[0]
            if not canonical:
                continue
            rows.append((canonical, tuple(p for p in parts[1:] if p)))
    return rows


def load_manual_alts(path: str) -> dict[str, tuple[str, ...]]:
    """Read manual alternative spellings: word[TAB alt]+ per line."""
    alts: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = [p.strip().lower() for p in line.split("\t")]
            word = parts[0]
            spellings = [p for p in parts[1:] if p]
            if not word or not spellings:
                continue
            alts.setdefault(word, []).extend(spellings)
    return {w: tuple(s) for w, s in alts.items()}
