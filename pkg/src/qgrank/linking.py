"""Focus-node linking: entity, implicit type, time and ordinal mentions."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Union

from qgrank import textio
from qgrank.errors import DataError
from qgrank.kb import KnowledgeBase, NameResolver

_TOKEN_RE = re.compile(r"\w+(?:[-'.]\w+)*|[^\w\s]")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class LinkKind(str, Enum):
    ENTITY = "Entity"
    TYPE = "Type"
    TIME = "Time"
    ORDINAL = "Ordinal"


TIME_COMPARATORS = ("before", "after", "in")
ORDINAL_DIRECTIONS = ("max", "min")


@dataclass(frozen=True)
class TimeValue:
    year: int
    comparator: str = "in"

    def __post_init__(self):
        if self.comparator not in TIME_COMPARATORS:
            raise ValueError(f"bad comparator {self.comparator!r}")
        if not 100 <= self.year <= 9999:
            raise ValueError(f"year must have 3-4 digits, got {self.year}")


@dataclass(frozen=True)
class OrdinalValue:
    rank: int
    direction: str

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("ordinal rank must be >= 1")
        if self.direction not in ORDINAL_DIRECTIONS:
            raise ValueError(f"bad direction {self.direction!r}")


Target = Union[str, TimeValue, OrdinalValue]


@dataclass(frozen=True)
class LinkResult:
    span: tuple[int, int]  # [start, end) token indices
    kind: LinkKind
    target: Target
    score: float

    def __post_init__(self):
        start, end = self.span
        if not 0 <= start < end:
            raise ValueError(f"empty or negative span {self.span}")

    def mention(self, tokens: list[str]) -> str:
        return " ".join(tokens[self.span[0]:self.span[1]])


@dataclass
class FocusLinks:
    entities: list[LinkResult] = field(default_factory=list)
    types: list[LinkResult] = field(default_factory=list)
    times: list[LinkResult] = field(default_factory=list)
    ordinals: list[LinkResult] = field(default_factory=list)

    def all(self) -> list[LinkResult]:
        return self.entities + self.types + self.times + self.ordinals

    def is_empty(self) -> bool:
        return not self.all()


# --- lexicon -----------------------------------------------------------------

Lexicon = dict  # mention (lowercase) -> list[(entity-id, prior)] sorted by prior desc


def make_lexicon(entries: Iterable[tuple[str, str, float]]) -> Lexicon:
    lex: dict[str, list] = {}
    for mention, entity, prior in entries:
        key = " ".join(tokenize(mention))
        if not key:
            continue
        bucket = lex.setdefault(key, [])
        if entity not in [e for e, _ in bucket]:
            bucket.append((entity, float(prior)))
    for bucket in lex.values():
        bucket.sort(key=lambda ep: (-ep[1], ep[0]))
    return lex


def load_lexicon(path) -> Lexicon:
    path = Path(path)
    entries = []
    try:
        lines = textio.lines(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read lexicon: {exc}", path=path) from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError("expected mention<TAB>entity<TAB>prior", lineno, path)
        try:
            prior = float(parts[2])
        except ValueError:
            raise DataError(f"bad prior {parts[2]!r}", lineno, path) from None
        if not 0.0 <= prior <= 1.0:
            raise DataError(f"prior {prior} outside [0, 1]", lineno, path)
        entries.append((parts[0], parts[1], prior))
    return make_lexicon(entries)


def dump_lexicon(lexicon: Lexicon, path) -> None:
    lines = [f"{m}\t{e}\t{p!r}" for m in sorted(lexicon) for e, p in lexicon[m]]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _lexicon_matches(tokens: list[str], lexicon: Lexicon, max_len: int) -> list[tuple[int, int]]:
    found = []
    for i in range(len(tokens)):
        for j in range(i + 1, min(len(tokens), i + max_len) + 1):
            if " ".join(tokens[i:j]) in lexicon:
                found.append((i, j))
    return found


def link_entities(question: list[str], lexicon: Lexicon) -> list[LinkResult]:
    """Longest-match, non-overlapping lexicon linking.

    Matches are claimed longest first, leftmost on ties. Each span links to
    its highest-prior entity; other entities for the same mention are added
    later by enrichment.
    """
    if not question or not lexicon:
        return []
    max_len = max(len(k.split()) for k in lexicon)
    matches = _lexicon_matches(question, lexicon, max_len)
    matches.sort(key=lambda sp: (-(sp[1] - sp[0]), sp[0]))
    taken = [False] * len(question)
    chosen = []
    for i, j in matches:
        if any(taken[i:j]):
            continue
        for k in range(i, j):
            taken[k] = True
        chosen.append((i, j))
    results = []
    for i, j in sorted(chosen):
        entity, prior = lexicon[" ".join(question[i:j])][0]
        results.append(LinkResult((i, j), LinkKind.ENTITY, entity, prior))
    return results


def enrich_entities(question: list[str], links: list[LinkResult], lexicon: Lexicon) -> list[LinkResult]:
    """Add every lexicon alias of an already-linked span as an extra candidate."""
    out = []
    seen = set()
    for link in links:
        for entity, prior in lexicon.get(link.mention(question), [(link.target, link.score)]):
            if (link.span, entity) in seen:
                continue
            seen.add((link.span, entity))
            out.append(LinkResult(link.span, LinkKind.ENTITY, entity, prior))
    return out


# --- types -------------------------------------------------------------------

@lru_cache(maxsize=1 << 16)
def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def edit_similarity(a: str, b: str) -> float:
    """1 - normalized edit distance; 1.0 for identical strings."""
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


Similarity = Callable[[str, str], float]


def link_types(
    question: list[str],
    kb: KnowledgeBase,
    similarity: Similarity = edit_similarity,
    top_k: int = 10,
    max_ngram: int = 3,
    names: NameResolver | None = None,
) -> list[LinkResult]:
    """Score every 1-3 word n-gram against every type word and keep the top pairs.

    Ordering: score descending, then type id, then span start, then span end.
    """
    if not kb.type_vocab or not question:
        return []
    names = names or NameResolver(kb)
    words = {t: names.type(t) for t in kb.type_vocab}
    scored = []
    for i in range(len(question)):
        for n in range(1, max_ngram + 1):
            j = i + n
            if j > len(question):
                break
            gram = " ".join(question[i:j])
            for t, word in words.items():
                scored.append((similarity(gram, word), t, i, j))
    scored.sort(key=lambda r: (-r[0], r[1], r[2], r[3]))
    return [LinkResult((i, j), LinkKind.TYPE, t, float(s)) for s, t, i, j in scored[:top_k]]


# --- time ----------------------------------------------------------------------

_YEAR_TOKEN = re.compile(r"^[1-9]\d{2,3}$")
TIME_KEYWORDS = {"before": "before", "after": "after", "since": "after", "in": "in", "during": "in"}


def link_time(question: list[str]) -> list[LinkResult]:
    out = []
    for i, tok in enumerate(question):
        if not _YEAR_TOKEN.match(tok):
            continue
        comparator = TIME_KEYWORDS.get(question[i - 1], "in") if i > 0 else "in"
        out.append(LinkResult((i, i + 1), LinkKind.TIME, TimeValue(int(tok), comparator), 1.0))
    return out


# --- ordinals -------------------------------------------------------------------

ORDINAL_WORDS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
}
_NUMERIC_ORDINAL = re.compile(r"^([1-9]\d*)(?:st|nd|rd|th)$")


def load_superlatives(path=None) -> dict[str, str]:
    if path is None:
        text = resources.files("qgrank.data").joinpath("superlatives.tsv").read_text(encoding="utf-8")
        path = "superlatives.tsv"
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read superlative vocabulary: {exc}", path=path) from exc
    vocab = {}
    for lineno, line in enumerate(textio.lines(text), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1] not in ORDINAL_DIRECTIONS:
            raise DataError("expected word<TAB>max|min", lineno, path)
        vocab[parts[0].lower()] = parts[1]
    return vocab


def _ordinal_rank(tok: str) -> int | None:
    if tok in ORDINAL_WORDS:
        return ORDINAL_WORDS[tok]
    m = _NUMERIC_ORDINAL.match(tok)
    return int(m.group(1)) if m else None


def link_ordinals(question: list[str], superlative_vocab: dict[str, str] | None = None) -> list[LinkResult]:
    vocab = load_superlatives() if superlative_vocab is None else superlative_vocab
    out = []
    for i, tok in enumerate(question):
        direction = vocab.get(tok)
        if direction is None:
            continue
        rank = _ordinal_rank(question[i - 1]) if i > 0 else None
        if rank is None:
            out.append(LinkResult((i, i + 1), LinkKind.ORDINAL, OrdinalValue(1, direction), 1.0))
        else:
            out.append(LinkResult((i - 1, i + 1), LinkKind.ORDINAL, OrdinalValue(rank, direction), 1.0))
    return out


# --- aggregate ---------------------------------------------------------------------

@dataclass
class LinkerConfig:
    similarity: Similarity = edit_similarity
    top_types: int = 10
    max_ngram: int = 3
    superlatives: dict = field(default_factory=load_superlatives)
    enrich: bool = True


def link_focus_nodes(
    question: list[str],
    kb: KnowledgeBase,
    lexicon: Lexicon,
    config: LinkerConfig | None = None,
) -> FocusLinks:
    config = config or LinkerConfig()
    if not question:
        return FocusLinks()
    entities = link_entities(question, lexicon)
    if config.enrich:
        entities = enrich_entities(question, entities, lexicon)
    return FocusLinks(
        entities=entities,
        types=link_types(question, kb, config.similarity, config.top_types, config.max_ngram),
        times=link_time(question),
        ordinals=link_ordinals(question, config.superlatives),
    )
