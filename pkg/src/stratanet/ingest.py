"""Reading events and rosters, filtering, and building account/collapsed graphs.

File formats
------------
events (csv or jsonl)
    ``account_id,target_account_id,timestamp,kind,text``; ``kind`` is one of
    tweet, retweet, reply, quote. Timestamps are ISO-8601; naive values are
    taken as UTC.
roster.csv
    ``account_id,organization_id,level,sector,org_type`` with level in
    {org_main, org_side, ind_main, ind_side}.
keywords.txt
    One case-insensitive substring per line; ``#`` starts a comment.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .model import (
    CollapsedGraph,
    Event,
    EventKind,
    InputError,
    Level,
    OrgType,
    Roster,
    RosterEntry,
    Sector,
    WeightedDigraph,
)

__all__ = [
    "EVENT_FIELDS",
    "ROSTER_FIELDS",
    "FilterSpec",
    "build_account_graph",
    "build_level_graphs",
    "collapse",
    "filter_events",
    "parse_events",
    "parse_roster",
    "read_event_files",
    "read_keywords",
    "write_events",
    "write_roster",
]

EVENT_FIELDS = ("account_id", "target_account_id", "timestamp", "kind", "text")
ROSTER_FIELDS = ("account_id", "organization_id", "level", "sector", "org_type")


def parse_timestamp(value: str) -> datetime:
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_kind(value: str) -> EventKind:
    key = (value or "").strip().lower()
    for kind in EventKind:
        if key == kind.value:
            return kind
    raise InputError(f"unknown kind {value!r}")


def _event_from_record(rec: dict, line: int) -> Event:
    try:
        account = (rec.get("account_id") or "").strip()
        if not account:
            raise InputError("empty account_id")
        target = (rec.get("target_account_id") or "").strip() or None
        raw_ts = rec.get("timestamp")
        if not raw_ts:
            raise InputError("missing timestamp")
        try:
            ts = parse_timestamp(str(raw_ts))
        except ValueError:
            raise InputError(f"bad timestamp {raw_ts!r}") from None
        kind = _parse_kind(rec.get("kind", ""))
        text = rec.get("text")
        return Event(account, target, ts, kind, text if text != "" else None)
    except InputError as exc:
        raise InputError(f"line {line}: {exc}") from None


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def parse_events(source, format: str = "csv") -> list[Event]:
    """Parse an event stream (path or text file object) in file order.

    Raises :class:`InputError` naming the offending line for malformed rows
    and unknown kinds.
    """
    fmt = format.lower()
    if fmt not in ("csv", "jsonl"):
        raise InputError(f"unsupported event format {format!r}")
    fh, owned = _open_text(source)
    try:
        events = []
        if fmt == "csv":
            reader = csv.DictReader(fh)
            missing = [f for f in EVENT_FIELDS[:4] if f not in (reader.fieldnames or ())]
            if missing:
                raise InputError(f"line 1: missing columns {missing}")
            for rec in reader:
                if None in rec:
                    raise InputError(f"line {reader.line_num}: too many fields")
                events.append(_event_from_record(rec, reader.line_num))
        else:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise InputError(f"line {lineno}: invalid JSON ({exc.msg})") from None
                if not isinstance(rec, dict):
                    raise InputError(f"line {lineno}: expected a JSON object")
                events.append(_event_from_record(rec, lineno))
        return events
    finally:
        if owned:
            fh.close()


def read_event_files(paths: Sequence) -> list[Event]:
    """Concatenate several event files, ordered by (timestamp, file order)."""
    tagged = []
    for file_no, path in enumerate(paths):
        fmt = "jsonl" if str(path).endswith((".jsonl", ".ndjson")) else "csv"
        for line_no, ev in enumerate(parse_events(path, fmt)):
            tagged.append((ev.timestamp, file_no, line_no, ev))
    tagged.sort(key=lambda t: t[:3])
    return [t[3] for t in tagged]


def write_events(events: Iterable[Event], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_FIELDS)
        for ev in events:
            w.writerow([ev.account_id, ev.target_account_id or "", format_timestamp(ev.timestamp),
                        ev.kind.value, ev.text or ""])


def parse_roster(source) -> Roster:
    fh, owned = _open_text(source)
    try:
        reader = csv.DictReader(fh)
        missing = [f for f in ROSTER_FIELDS if f not in (reader.fieldnames or ())]
        if missing:
            raise InputError(f"roster line 1: missing columns {missing}")
        entries = []
        for rec in reader:
            try:
                entries.append(RosterEntry(
                    account_id=rec["account_id"].strip(),
                    organization_id=rec["organization_id"].strip(),
                    level=Level.parse(rec["level"]),
                    sector=Sector.parse(rec["sector"]),
                    org_type=OrgType.parse(rec["org_type"]),
                ))
            except (InputError, AttributeError) as exc:
                raise InputError(f"roster line {reader.line_num}: {exc}") from None
        return Roster(entries)
    finally:
        if owned:
            fh.close()


def write_roster(roster: Roster, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROSTER_FIELDS)
        for e in roster.entries:
            w.writerow([e.account_id, e.organization_id, e.level.value, e.sector.value,
                        e.org_type.value])


def read_keywords(source) -> list[str]:
    if isinstance(source, (str, os.PathLike)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        text = source.read()
    else:
        return [str(k) for k in source]
    keywords = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            keywords.append(line)
    return keywords


@dataclass(frozen=True)
class FilterSpec:
    """Which events enter the network.

    An empty keyword list disables the text filter. The window is half-open,
    ``start <= t < end``.
    """

    keywords: tuple[str, ...] = ()
    window: tuple[datetime, datetime] | None = None
    kinds: frozenset[EventKind] = field(default_factory=lambda: frozenset({EventKind.Retweet}))
    roster_only: bool = True

    def __post_init__(self):
        object.__setattr__(self, "keywords", tuple(self.keywords))
        object.__setattr__(self, "kinds", frozenset(EventKind.parse(k) for k in self.kinds))
        if self.window is not None:
            start, end = self.window
            if not start < end:
                raise InputError("filter window must satisfy start < end")

    def _lowered(self):
        return tuple(k.lower() for k in self.keywords)


def filter_events(events: Iterable[Event], spec: FilterSpec, roster: Roster | None = None) -> list[Event]:
    keys = spec._lowered()
    if spec.roster_only and roster is None:
        raise InputError("roster_only filtering needs a roster")
    out = []
    for ev in events:
        if ev.kind not in spec.kinds:
            continue
        if spec.window is not None and not (spec.window[0] <= ev.timestamp < spec.window[1]):
            continue
        if keys:
            text = (ev.text or "").lower()
            if not any(k in text for k in keys):
                continue
        if spec.roster_only:
            if ev.account_id not in roster:
                continue
            if ev.target_account_id is not None and ev.target_account_id not in roster:
                continue
        out.append(ev)
    return out


def build_account_graph(events: Iterable[Event], roster: Roster, level: Level | None = None,
                        roster_only: bool = True, metadata=None) -> WeightedDigraph:
    """Retweet graph: edge retweeter -> original author, weight = retweet count.

    With ``level`` set, vertices are that level's roster accounts and only
    retweets between two of them are counted. Non-retweet events are ignored.
    Self-retweets are dropped, so the total weight equals the number of
    retweets between distinct accounts.
    """
    if level is not None:
        vertices = roster.accounts(level)
        allowed = set(vertices)
    else:
        vertices = roster.accounts()
        allowed = None
    counts: Counter = Counter()
    extra: dict[str, None] = {}
    for ev in events:
        if ev.kind is not EventKind.Retweet:
            continue
        src, dst = ev.account_id, ev.target_account_id
        if roster_only:
            for acc in (src, dst):
                if acc not in roster:
                    raise InputError(f"retweet endpoint {acc!r} is not in the roster")
        if allowed is not None:
            if src not in allowed or dst not in allowed:
                continue
        elif not roster_only:
            for acc in (src, dst):
                if acc not in roster:
                    extra.setdefault(acc)
        counts[(src, dst)] += 1
    meta = {"level": level.value if level else "all", **(metadata or {})}
    return WeightedDigraph(list(vertices) + list(extra),
                           ((s, d, w) for (s, d), w in counts.items()), meta)


def build_level_graphs(events: Iterable[Event], roster: Roster, metadata=None) -> dict[Level, WeightedDigraph]:
    events = list(events)
    return {lvl: build_account_graph(events, roster, lvl, metadata=metadata) for lvl in Level}


def collapse(backbone: WeightedDigraph, roster: Roster) -> CollapsedGraph:
    """Organization graph: two organizations are joined iff a surviving
    account edge runs between their accounts. Every roster organization is a
    vertex, active or not."""
    pairs = []
    org_of = []
    for acc in backbone.vertices:
        org_of.append(roster[acc].organization_id)
    for i, j in zip(backbone.src, backbone.dst):
        a, b = org_of[i], org_of[j]
        if a != b:
            pairs.append((a, b))
    meta = {**backbone.metadata, "collapsed": True}
    return CollapsedGraph(roster.organizations, pairs, meta)
