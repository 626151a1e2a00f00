"""Speaker-role tagged transcripts: data model, parser, manifests and chunking.

A tagged transcript is a flat token stream in which the literals ``ATCOTAG``
and ``PILOTTAG`` open a speaker turn::

    ATCOTAG lufthansa one two contact tower PILOTTAG contact tower lufthansa one two

Words are lowercased on the way in. Tag literals must already be uppercase; a
differently cased tag (``Atcotag``) is rejected rather than silently treated as
a word.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    EmptyInput,
    EmptyTurn,
    MalformedTag,
    ManifestError,
    MissingTimestamps,
    WordsBeforeFirstTag,
)

__all__ = [
    "SpeakerRole",
    "TAG_LITERALS",
    "Turn",
    "TaggedTranscript",
    "ManifestEntry",
    "CorpusManifest",
    "is_tag",
    "parse_tagged",
    "serialize",
    "to_token_stream",
    "strip_tags",
    "word_roles",
    "swap_roles",
    "chunk_corpus",
    "read_manifest",
    "write_manifest",
    "read_transcripts",
    "write_transcripts",
    "manifest_summary",
]


class SpeakerRole(enum.Enum):
    ATCO = "ATCOTAG"
    PILOT = "PILOTTAG"

    @property
    def tag(self) -> str:
        return self.value

    @property
    def other(self) -> "SpeakerRole":
        return SpeakerRole.PILOT if self is SpeakerRole.ATCO else SpeakerRole.ATCO

    @classmethod
    def from_tag(cls, tag: str) -> "SpeakerRole":
        return cls(tag)

    @classmethod
    def from_name(cls, name: str) -> "SpeakerRole":
        """Accept ``"ATCO"``/``"PILOT"`` (any case) or the tag literal."""
        key = name.strip().upper()
        if key in TAG_LITERALS:
            return cls(key)
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown speaker role {name!r}") from None


TAG_LITERALS = frozenset(r.value for r in SpeakerRole)


def is_tag(token: str) -> bool:
    return token in TAG_LITERALS


def _check_word(word: str) -> str:
    if not word or any(c.isspace() for c in word):
        raise ValueError(f"invalid word token {word!r}")
    if word.upper() in TAG_LITERALS:
        raise MalformedTag(f"tag literal {word!r} used as a word")
    return word.lower()


@dataclass(frozen=True)
class Turn:
    role: SpeakerRole
    words: tuple[str, ...]
    start_s: float | None = None
    end_s: float | None = None

    def __post_init__(self):
        words = tuple(_check_word(w) for w in self.words)
        if not words:
            raise EmptyTurn(f"{self.role.tag} turn has no words")
        object.__setattr__(self, "words", words)
        if (self.start_s is None) != (self.end_s is None):
            raise ValueError("start_s and end_s must be given together")
        if self.start_s is not None:
            if not 0 <= self.start_s < self.end_s:
                raise ValueError(
                    f"invalid turn span [{self.start_s}, {self.end_s}]"
                )

    @property
    def has_timestamps(self) -> bool:
        return self.start_s is not None

    @property
    def duration(self) -> float:
        if not self.has_timestamps:
            raise MissingTimestamps("turn carries no timestamps")
        return self.end_s - self.start_s


@dataclass(frozen=True)
class TaggedTranscript:
    turns: tuple[Turn, ...]

    def __post_init__(self):
        turns = tuple(self.turns)
        if not turns:
            raise EmptyInput("a transcript needs at least one turn")
        object.__setattr__(self, "turns", turns)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[SpeakerRole, Sequence[str]]]):
        return cls(tuple(Turn(role, tuple(words)) for role, words in pairs))

    @property
    def roles(self) -> frozenset[SpeakerRole]:
        return frozenset(t.role for t in self.turns)

    def __str__(self) -> str:
        return serialize(self)


def parse_tagged(text: str) -> TaggedTranscript:
    """Parse a whitespace-separated tagged token stream.

    A repeated tag of the same role opens a new turn; turns are never merged.

    Raises:
        EmptyInput: no tokens at all.
        WordsBeforeFirstTag: the stream does not start with a tag.
        EmptyTurn: a tag is directly followed by another tag or the end.
        MalformedTag: a tag literal in the wrong case.
    """
    tokens = text.split()
    if not tokens:
        raise EmptyInput("empty transcript")
    turns: list[Turn] = []
    role: SpeakerRole | None = None
    words: list[str] = []
    for tok in tokens:
        if tok in TAG_LITERALS:
            if role is not None:
                if not words:
                    raise EmptyTurn(f"{role.tag} is followed by {tok}")
                turns.append(Turn(role, tuple(words)))
            role = SpeakerRole(tok)
            words = []
        else:
            if tok.upper() in TAG_LITERALS:
                raise MalformedTag(f"tag literal must be uppercase: {tok!r}")
            if role is None:
                raise WordsBeforeFirstTag(f"word {tok!r} precedes the first tag")
            words.append(tok.lower())
    if not words:
        raise EmptyTurn(f"{role.tag} at end of input has no words")
    turns.append(Turn(role, tuple(words)))
    return TaggedTranscript(tuple(turns))


def to_token_stream(t: TaggedTranscript) -> list[str]:
    out: list[str] = []
    for turn in t.turns:
        out.append(turn.role.tag)
        out.extend(turn.words)
    return out


def serialize(t: TaggedTranscript) -> str:
    return " ".join(to_token_stream(t))


def strip_tags(t: TaggedTranscript) -> list[str]:
    return [w for turn in t.turns for w in turn.words]


def word_roles(t: TaggedTranscript) -> list[SpeakerRole]:
    return [turn.role for turn in t.turns for _ in turn.words]


def swap_roles(t: TaggedTranscript) -> TaggedTranscript:
    """Exchange ATCO and PILOT on every turn."""
    return TaggedTranscript(
        tuple(
            Turn(turn.role.other, turn.words, turn.start_s, turn.end_s)
            for turn in t.turns
        )
    )


# --------------------------------------------------------------------------
# corpus manifests


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    turns: tuple[Turn, ...]
    audio_path: str | None = None
    offset_s: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if not self.id:
            raise ManifestError("manifest entry without id")

    @property
    def transcript(self) -> TaggedTranscript:
        return TaggedTranscript(
            tuple(Turn(t.role, t.words) for t in self.turns)
        )

    @property
    def span(self) -> float:
        return self.turns[-1].end_s - self.turns[0].start_s

    def to_json(self) -> dict:
        d = {"id": self.id}
        if self.audio_path is not None:
            d["audio_path"] = self.audio_path
        if self.offset_s is not None:
            d["offset_s"] = self.offset_s
        d["turns"] = [
            {
                "role": t.role.name,
                "words": list(t.words),
                **(
                    {"start_s": t.start_s, "end_s": t.end_s}
                    if t.has_timestamps
                    else {}
                ),
            }
            for t in self.turns
        ]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ManifestEntry":
        try:
            turns = []
            for td in d["turns"]:
                words = td["words"]
                if isinstance(words, str):
                    words = words.split()
                turns.append(
                    Turn(
                        SpeakerRole.from_name(td["role"]),
                        tuple(words),
                        td.get("start_s"),
                        td.get("end_s"),
                    )
                )
            return cls(
                id=str(d["id"]),
                turns=tuple(turns),
                audio_path=d.get("audio_path"),
                offset_s=d.get("offset_s"),
            )
        except KeyError as e:
            raise ManifestError(f"manifest entry missing field {e}") from None


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        entries = tuple(self.entries)
        seen = set()
        for e in entries:
            if e.id in seen:
                raise ManifestError(f"duplicate manifest id {e.id!r}")
            seen.add(e.id)
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def read_manifest(path) -> CorpusManifest:
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"{path}:{lineno}: {e}") from None
            entries.append(ManifestEntry.from_json(d))
    return CorpusManifest(tuple(entries))


def write_manifest(m: CorpusManifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in m.entries:
            f.write(json.dumps(e.to_json(), ensure_ascii=False) + "\n")


def read_transcripts(path) -> list[TaggedTranscript]:
    """Read one tagged transcript per non-empty line (strict)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [parse_tagged(line) for line in lines if line.strip()]


def write_transcripts(transcripts: Iterable[TaggedTranscript], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for t in transcripts:
            f.write(serialize(t) + "\n")


# --------------------------------------------------------------------------
# chunking


def _emit(entry: ManifestEntry, k: int, turns: list[Turn]) -> ManifestEntry:
    t0 = turns[0].start_s
    rebased = tuple(
        Turn(t.role, t.words, round(t.start_s - t0, 6), round(t.end_s - t0, 6))
        for t in turns
    )
    offset = t0 if entry.offset_s is None else entry.offset_s + t0
    return ManifestEntry(
        id=f"{entry.id}-{k:03d}",
        turns=rebased,
        audio_path=entry.audio_path,
        offset_s=round(offset, 6),
    )


def chunk_corpus(
    m: CorpusManifest, min_s: float = 2.0, max_s: float = 19.0
) -> CorpusManifest:
    """Split manifest entries into chunks of whole turns.

    Turns are packed greedily left to right: a turn joins the open chunk while
    the chunk span (last end minus first start) stays within ``max_s``. Chunks
    whose span falls outside ``[min_s, max_s]`` or that do not contain both
    speaker roles are dropped. Chunk timestamps are re-based to the chunk
    start; ``offset_s`` records where the chunk begins in the source audio.
    """
    if not 0 <= min_s <= max_s:
        raise ValueError("need 0 <= min_s <= max_s")
    out: list[ManifestEntry] = []
    both = frozenset(SpeakerRole)
    for entry in m.entries:
        if not all(t.has_timestamps for t in entry.turns):
            raise MissingTimestamps(f"entry {entry.id!r} has untimed turns")
        for prev, cur in zip(entry.turns, entry.turns[1:]):
            if cur.start_s < prev.end_s:
                raise ManifestError(
                    f"entry {entry.id!r}: overlapping or unordered turns"
                )
        groups: list[list[Turn]] = []
        for turn in entry.turns:
            if groups and turn.end_s - groups[-1][0].start_s <= max_s:
                groups[-1].append(turn)
            else:
                groups.append([turn])
        for k, group in enumerate(groups):
            span = group[-1].end_s - group[0].start_s
            if not min_s <= span <= max_s:
                continue
            if frozenset(t.role for t in group) != both:
                continue
            out.append(_emit(entry, k, group))
    return CorpusManifest(tuple(out))


def manifest_summary(m: CorpusManifest) -> dict:
    """Entry count, mean turns per entry and mean span in seconds."""
    n = len(m.entries)
    if not n:
        return {"entries": 0, "mean_turns": None, "mean_duration_s": None}
    turns = sum(len(e.turns) for e in m.entries) / n
    timed = [e for e in m.entries if all(t.has_timestamps for t in e.turns)]
    dur = sum(e.span for e in timed) / len(timed) if timed else None
    return {
        "entries": n,
        "mean_turns": round(turns, 6),
        "mean_duration_s": None if dur is None else round(dur, 6),
    }
