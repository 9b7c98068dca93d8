"""Load timestamped posts and partition them into monthly time slices.

Three file formats are supported: JSONL (one object per line), CSV with a
header row, and the Posts.xml schema of the public Stack Exchange archive
dumps. Malformed records are collected into a report, never silently
dropped.
"""

from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError

FORMATS = ("jsonl", "csv", "stackexchange_xml")


@dataclass(frozen=True)
class Post:
    """One Q&A document with engagement metadata."""

    id: str
    created_at: datetime
    title: str
    body: str
    votes: int
    views: int
    tags: tuple[str, ...] = ()

    @property
    def text(self) -> str:
        """Title and body joined by a single space."""
        if self.title and self.body:
            return self.title + " " + self.body
        return self.title or self.body


@dataclass(frozen=True)
class RecordError:
    where: str
    reason: str


@dataclass
class LoadResult:
    posts: list[Post]
    errors: list[RecordError] = field(default_factory=list)


@dataclass(frozen=True)
class TimeSlice:
    """Ordered batch of post ids for one calendar month."""

    index: int
    period_label: str
    post_ids: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.post_ids)


@dataclass
class Timeline:
    slices: list[TimeSlice]
    excluded_count: int


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339-ish timestamp; naive values are taken as UTC."""
    text = str(value).strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _build_post(raw: dict, where: str, seen_ids: set[str],
                posts: list[Post], errors: list[RecordError]) -> None:
    if raw.get("id") in (None, ""):
        errors.append(RecordError(where, "missing id"))
        return
    post_id = str(raw["id"])
    if post_id in seen_ids:
        errors.append(RecordError(where, f"duplicate id {post_id!r}"))
        return
    if raw.get("created_at") in (None, ""):
        errors.append(RecordError(where, "missing created_at"))
        return
    try:
        created = parse_timestamp(raw["created_at"])
    except ValueError:
        errors.append(RecordError(where, f"unparseable created_at {raw['created_at']!r}"))
        return
    try:
        votes = int(raw.get("votes") or 0)
        views = int(raw.get("views") or 0)
    except (TypeError, ValueError):
        errors.append(RecordError(where, "votes/views not integers"))
        return
    tags = raw.get("tags") or ()
    if isinstance(tags, str):
        tags = tuple(t for t in tags.split("|") if t)
    else:
        tags = tuple(str(t) for t in tags)
    seen_ids.add(post_id)
    posts.append(Post(
        id=post_id,
        created_at=created,
        title=str(raw.get("title") or ""),
        body=str(raw.get("body") or ""),
        votes=votes,
        views=views,
        tags=tags,
    ))


def load_posts(path: str | Path, format: str = "jsonl") -> LoadResult:
    """Load all parseable posts from `path`; record-level failures go to
    the result's error list."""
    if format not in FORMATS:
        raise ConfigError(f"unknown input format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    loader = {"jsonl": _load_jsonl, "csv": _load_csv,
              "stackexchange_xml": _load_stackexchange_xml}[format]
    return loader(path)


def _load_jsonl(path: Path) -> LoadResult:
    posts: list[Post] = []
    errors: list[RecordError] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"line {lineno}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError:
                errors.append(RecordError(where, "invalid JSON"))
                continue
            if not isinstance(raw, dict):
                errors.append(RecordError(where, "record is not an object"))
                continue
            _build_post(raw, where, seen, posts, errors)
    return LoadResult(posts, errors)


def _load_csv(path: Path) -> LoadResult:
    posts: list[Post] = []
    errors: list[RecordError] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8", newline="") as fh:
        for rowno, row in enumerate(csv.DictReader(fh), start=2):
            _build_post(dict(row), f"row {rowno}", seen, posts, errors)
    return LoadResult(posts, errors)


def _load_stackexchange_xml(path: Path) -> LoadResult:
    """Read the Posts.xml dump schema; only questions (PostTypeId=1) are kept."""
    posts: list[Post] = []
    errors: list[RecordError] = []
    seen: set[str] = set()
    for _, elem in ET.iterparse(str(path), events=("end",)):
        if elem.tag != "row":
            continue
        attrs = elem.attrib
        if attrs.get("PostTypeId") != "1":
            elem.clear()
            continue
        raw = {
            "id": attrs.get("Id"),
            "created_at": attrs.get("CreationDate"),
            "title": attrs.get("Title", ""),
            "body": attrs.get("Body", ""),
            "votes": attrs.get("Score", 0),
            "views": attrs.get("ViewCount", 0),
            "tags": _parse_se_tags(attrs.get("Tags", "")),
        }
        _build_post(raw, f"row Id={attrs.get('Id')}", seen, posts, errors)
        elem.clear()
    return LoadResult(posts, errors)


def _parse_se_tags(raw: str) -> tuple[str, ...]:
    if not raw:
        return ()
    if raw.startswith("<"):
        return tuple(t for t in raw.strip("<>").split("><") if t)
    return tuple(t for t in raw.split("|") if t)


def save_posts_jsonl(posts: list[Post], path: str | Path) -> None:
    """Serialize posts so that a reload yields an identical list."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for p in posts:
            fh.write(json.dumps({
                "id": p.id,
                "created_at": format_timestamp(p.created_at),
                "title": p.title,
                "body": p.body,
                "votes": p.votes,
                "views": p.views,
                "tags": list(p.tags),
            }, ensure_ascii=False) + "\n")


def parse_period(label: str) -> int:
    """'YYYY-MM' -> month index (year*12 + month-1)."""
    try:
        year_s, month_s = str(label).split("-")
        year, month = int(year_s), int(month_s)
        if not 1 <= month <= 12:
            raise ValueError
    except ValueError:
        raise ConfigError(f"invalid period {label!r}; expected YYYY-MM") from None
    return year * 12 + (month - 1)


def period_label(index: int) -> str:
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


def post_period_index(post: Post) -> int:
    dt = post.created_at.astimezone(timezone.utc)
    return dt.year * 12 + (dt.month - 1)


def slice_by_period(posts: list[Post], granularity: str = "month",
                    start: str | None = None, end: str | None = None) -> Timeline:
    """Partition posts into contiguous monthly slices from `start` to `end`
    inclusive. Out-of-range posts are excluded and counted; gap months
    yield empty slices so slice indices stay aligned with the calendar.
    """
    if granularity != "month":
        raise ConfigError(f"unsupported granularity {granularity!r}; only 'month'")
    if not posts and (start is None or end is None):
        return Timeline(slices=[], excluded_count=0)
    lo = parse_period(start) if start else min(post_period_index(p) for p in posts)
    hi = parse_period(end) if end else max(post_period_index(p) for p in posts)
    if lo > hi:
        raise ConfigError(f"date range start {period_label(lo)} is after end {period_label(hi)}")

    buckets: dict[int, list[Post]] = {i: [] for i in range(lo, hi + 1)}
    excluded = 0
    for post in posts:
        idx = post_period_index(post)
        if lo <= idx <= hi:
            buckets[idx].append(post)
        else:
            excluded += 1

    slices = []
    for t, idx in enumerate(range(lo, hi + 1)):
        ordered = sorted(buckets[idx], key=lambda p: (p.created_at, p.id))
        slices.append(TimeSlice(index=t, period_label=period_label(idx),
                                post_ids=tuple(p.id for p in ordered)))
    return Timeline(slices=slices, excluded_count=excluded)
