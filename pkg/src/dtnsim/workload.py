"""Unicast message workloads: the workload table format and seeded random
workload generation."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

WORKLOAD_HEADER = "created_at,source,destination,size_bytes"


class WorkloadFormatError(ValueError):
    """Malformed workload input; carries the offending 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class WorkloadEntry(NamedTuple):
    created_at: float
    source: int
    destination: int
    size: int


@dataclass(frozen=True)
class Message:
    """A unicast payload replicated across nodes while it lives."""

    id: str
    source: int
    destination: int
    created_at: float
    ttl: float
    size: int

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError("message source and destination must differ")
        if self.size <= 0:
            raise ValueError("message size must be > 0")
        if self.ttl <= 0:
            raise ValueError("message ttl must be > 0")

    @property
    def expires_at(self) -> float:
        return self.created_at + self.ttl


def parse_workload(text: str | bytes) -> list[WorkloadEntry]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    entries: list[WorkloadEntry] = []
    header_seen = False
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if not header_seen:
            if stripped.lower() != WORKLOAD_HEADER:
                raise WorkloadFormatError(line_no, f"expected header {WORKLOAD_HEADER!r}")
            header_seen = True
            continue
        fields = [f.strip() for f in stripped.split(",")]
        if len(fields) != 4:
            raise WorkloadFormatError(line_no, f"expected 4 fields, got {len(fields)}")
        try:
            entry = WorkloadEntry(float(fields[0]), int(fields[1]), int(fields[2]), int(fields[3]))
        except ValueError as exc:
            raise WorkloadFormatError(line_no, f"non-numeric field: {exc}") from None
        if entry.source == entry.destination:
            raise WorkloadFormatError(line_no, f"source equals destination ({entry.source})")
        if entry.size <= 0:
            raise WorkloadFormatError(line_no, f"size must be > 0, got {entry.size}")
        if entry.created_at < 0:
            raise WorkloadFormatError(line_no, f"created_at must be >= 0, got {entry.created_at}")
        entries.append(entry)
    return entries


def serialize_workload(entries: Sequence[WorkloadEntry]) -> str:
    lines = [WORKLOAD_HEADER]
    lines.extend(f"{e.created_at!r},{e.source},{e.destination},{e.size}" for e in entries)
    return "\n".join(lines) + "\n"


def load_workload(path: str | Path) -> list[WorkloadEntry]:
    return parse_workload(Path(path).read_text())


def generate_workload(
    count: int,
    node_count: int,
    window: tuple[float, float],
    seed: int,
    size_range: tuple[int, int] = (1000, 100000),
) -> list[WorkloadEntry]:
    """Random workload: uniform creation times in [window), uniform distinct
    source/destination pairs, sizes uniform over size_range (bytes, inclusive).
    Deterministic for a fixed seed; entries come back sorted by creation time.
    """
    if node_count < 2:
        raise ValueError("need at least 2 nodes for unicast traffic")
    lo, hi = window
    if not lo <= hi:
        raise ValueError("window start must be <= window end")
    if size_range[0] <= 0 or size_range[0] > size_range[1]:
        raise ValueError("invalid size range")
    rng = random.Random(seed)
    entries = []
    for _ in range(count):
        created = rng.uniform(lo, hi)
        src = rng.randrange(node_count)
        dst = rng.randrange(node_count - 1)
        if dst >= src:
            dst += 1
        size = rng.randint(size_range[0], size_range[1])
        entries.append(WorkloadEntry(created, src, dst, size))
    entries.sort()
    return entries


def messages_from_workload(entries: Sequence[WorkloadEntry], ttl: float) -> tuple[Message, ...]:
    """Assign stable ids by row order and attach the configured TTL."""
    return tuple(
        Message(
            id=f"m{i:05d}",
            source=e.source,
            destination=e.destination,
            created_at=e.created_at,
            ttl=ttl,
            size=e.size,
        )
        for i, e in enumerate(entries)
    )
