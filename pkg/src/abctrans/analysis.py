"""Trace analytics: OHRF segmentation, policy cycles, entropy series, exports.

Segmentation is rule based. Source fixations mark orientation, pauses mark
hesitation, deletions and retypes mark revision, and uninterrupted typing is
flow; target fixations side with an adjacent revision, with a long
inter-keystroke gap, or otherwise with flow. Adjacent same-state runs merge.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from . import environment as env
from .trace import ProcessEvent, Trace

O, H, R, F = "O", "H", "R", "F"

TSV_COLUMNS = (
    "time_ms",
    "event_kind",
    "chunk_or_slot",
    "ohrf_state",
    "cycle_index",
    "entropy_bits",
    "gamma",
)

_STATE_COLORS = {O: "#7db8e8", H: "#e8c57d", R: "#e87d7d", F: "#8fd18f"}


class AnalysisError(ValueError):
    """Trace analytics applied to unsupported input."""


class IngestError(AnalysisError):
    """Malformed external log; carries the offending row number."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class Segment:
    state: str
    t_start: float
    t_end: float
    events: tuple[int, ...]

    def __post_init__(self):
        if self.state not in (O, H, R, F):
            raise AnalysisError(f"state {self.state!r} outside the OHRF alphabet")


@dataclass(frozen=True)
class PolicyCycle:
    label: str
    segments: tuple[int, ...]
    implicit_orientation: bool = False


@dataclass(frozen=True)
class SegmentThresholds:
    theta_pause_ms: float = 1000.0


def _base_label(event: ProcessEvent, deleted_slots: set[int]) -> str | None:
    if event.kind in (env.FIXATE_SOURCE, env.CONSULT):
        return O
    if event.kind == env.PAUSE:
        return H
    if event.kind == env.DELETE:
        if event.slot is not None:
            deleted_slots.add(event.slot)
        return R
    if event.kind == env.TYPE:
        if event.slot in deleted_slots:
            deleted_slots.discard(event.slot)
            return R
        return F
    if event.kind == env.FIXATE_TARGET:
        return None  # resolved against context below
    raise AnalysisError(f"unknown event kind {event.kind!r}")


def _resolve_target_fixations(
    events: tuple[ProcessEvent, ...], labels: list[str | None], theta_pause: float
) -> None:
    n = len(events)
    for i, lab in enumerate(labels):
        if lab is not None:
            continue
        prev_idx = next((j for j in range(i - 1, -1, -1) if labels[j] is not None), None)
        next_idx = next((j for j in range(i + 1, n) if labels[j] is not None), None)
        neighbors = [labels[j] for j in (prev_idx, next_idx) if j is not None]
        if R in neighbors:
            labels[i] = R
            continue
        if H in neighbors:
            labels[i] = H
            continue
        gap_start = events[prev_idx].t_end if prev_idx is not None else events[i].t_start
        gap_end = events[next_idx].t_start if next_idx is not None else events[i].t_end
        labels[i] = H if gap_end - gap_start > theta_pause else F


def segment_ohrf(
    trace: Trace | tuple[ProcessEvent, ...],
    thresholds: SegmentThresholds | None = None,
) -> list[Segment]:
    """Partition the trace's events into maximal same-state OHRF runs."""
    events = trace.events if isinstance(trace, Trace) else tuple(trace)
    if not events:
        return []
    thresholds = thresholds or SegmentThresholds()
    deleted: set[int] = set()
    labels: list[str | None] = [_base_label(e, deleted) for e in events]
    _resolve_target_fixations(events, labels, thresholds.theta_pause_ms)

    # A typing run broken by a long silent gap resumes as hesitation-adjacent
    # flow; the gap itself carries no events, so only flanking target
    # fixations (already handled) can surface it. Merge adjacent same labels.
    segments: list[Segment] = []
    run_start = 0
    for i in range(1, len(events) + 1):
        if i == len(events) or labels[i] != labels[run_start]:
            segments.append(
                Segment(
                    state=labels[run_start],
                    t_start=events[run_start].t_start,
                    t_end=events[i - 1].t_end,
                    events=tuple(range(run_start, i)),
                )
            )
            run_start = i
    return segments


def group_policies(segments: list[Segment]) -> list[PolicyCycle]:
    """Cut the segment sequence before every orientation and label each cycle.

    A cycle label records its segments' state letters in order, collapsing
    only immediately adjacent duplicates. Traces that do not open with an
    orientation get an implicit zero-length one, flagged on the first cycle.
    """
    if not segments:
        return []
    cycles: list[PolicyCycle] = []
    bounds: list[int] = [i for i, seg in enumerate(segments) if seg.state == O]
    implicit_first = not bounds or bounds[0] != 0
    if implicit_first:
        bounds = [0] + bounds
    for k, start in enumerate(bounds):
        end = bounds[k + 1] if k + 1 < len(bounds) else len(segments)
        members = tuple(range(start, end))
        letters: list[str] = []
        if k == 0 and implicit_first:
            letters.append(O)
        for i in members:
            if not letters or letters[-1] != segments[i].state:
                letters.append(segments[i].state)
        cycles.append(
            PolicyCycle(
                label="".join(letters),
                segments=members,
                implicit_orientation=(k == 0 and implicit_first),
            )
        )
    return cycles


def entropy_trajectory(trace: Trace) -> list[tuple[float, float]]:
    """Belief entropy sampled at event boundaries, starting from the prior."""
    if not trace.has_belief_fields:
        raise AnalysisError("trace carries no belief entropies (ingested log?)")
    series: list[tuple[float, float]] = []
    if trace.prior_entropy is not None:
        t0 = trace.events[0].t_start if trace.events else 0.0
        series.append((t0, trace.prior_entropy))
    for e in trace.events:
        series.append((e.t_end, e.belief_entropy))
    return series


def largest_drop(trace: Trace) -> tuple[ProcessEvent, float] | None:
    """The event with the single largest belief-entropy decrease."""
    if not trace.has_belief_fields or not trace.events:
        return None
    prev = trace.prior_entropy if trace.prior_entropy is not None else trace.events[0].belief_entropy
    best: tuple[ProcessEvent, float] | None = None
    for e in trace.events:
        drop = prev - e.belief_entropy
        if best is None or drop > best[1]:
            best = (e, drop)
        prev = e.belief_entropy
    return best


def typing_drops(trace: Trace) -> list[tuple[int, float]]:
    """(chunk id, entropy drop) for every typed placement, in order."""
    if not trace.has_belief_fields:
        raise AnalysisError("trace carries no belief entropies (ingested log?)")
    out: list[tuple[int, float]] = []
    prev = trace.prior_entropy if trace.prior_entropy is not None else 0.0
    for e in trace.events:
        if e.kind == env.TYPE:
            out.append((e.chunk_id, prev - e.belief_entropy))
        prev = e.belief_entropy
    return out


@dataclass(frozen=True)
class TraceSummary:
    first_keystroke_latency_ms: float
    initial_orientation_ms: float
    state_counts: tuple[tuple[str, int], ...]
    cycle_labels: tuple[str, ...]
    total_time_ms: float
    revision_count: int
    hesitation_count: int
    final_target: str
    complete: bool

    def count(self, state: str) -> int:
        return dict(self.state_counts)[state]


def summarize(trace: Trace, segments: list[Segment], cycles: list[PolicyCycle]) -> TraceSummary:
    """Key process metrics for one trace; an empty trace yields the zero record."""
    first_type = next((e for e in trace.events if e.kind == env.TYPE), None)
    t0 = trace.events[0].t_start if trace.events else 0.0
    initial_o = 0.0
    if segments and segments[0].state == O:
        initial_o = segments[0].t_end - segments[0].t_start
    counts = {s: 0 for s in (O, H, R, F)}
    for seg in segments:
        counts[seg.state] += 1
    return TraceSummary(
        first_keystroke_latency_ms=(first_type.t_start - t0) if first_type else 0.0,
        initial_orientation_ms=initial_o,
        state_counts=tuple(sorted(counts.items())),
        cycle_labels=tuple(c.label for c in cycles),
        total_time_ms=trace.total_time_ms,
        revision_count=sum(1 for e in trace.events if e.kind == env.DELETE),
        hesitation_count=counts[H],
        final_target=trace.final_target,
        complete=trace.complete,
    )


def _target_field(e: ProcessEvent) -> str:
    if e.kind == env.TYPE:
        return f"{e.chunk_id}@{e.slot}"
    if e.kind == env.FIXATE_SOURCE:
        return f"{e.chunk_id}" if e.chunk_id is not None else ""
    if e.kind in (env.FIXATE_TARGET, env.DELETE):
        return f"@{e.slot}" if e.slot is not None else ""
    return ""


def _cycle_of_event(idx: int, segments: list[Segment], cycles: list[PolicyCycle]) -> int:
    for seg_idx, seg in enumerate(segments):
        if idx in seg.events:
            for c_idx, cyc in enumerate(cycles):
                if seg_idx in cyc.segments:
                    return c_idx
    return -1


def export_progression(
    trace: Trace,
    segments: list[Segment],
    cycles: list[PolicyCycle],
    fmt: str = "tsv",
) -> bytes:
    """Serialize the analyzed trace, either as a flat TSV or as an SVG timeline."""
    if fmt == "tsv":
        return _export_tsv(trace, segments, cycles)
    if fmt == "svg":
        return _export_svg(trace, segments, cycles)
    raise AnalysisError(f"unknown export format {fmt!r}")


def _export_tsv(trace: Trace, segments: list[Segment], cycles: list[PolicyCycle]) -> bytes:
    out = io.StringIO()
    out.write("\t".join(TSV_COLUMNS) + "\n")
    state_of = {}
    for seg in segments:
        for i in seg.events:
            state_of[i] = seg.state
    for i, e in enumerate(trace.events):
        entropy = f"{e.belief_entropy:.9f}" if e.belief_entropy is not None else ""
        gamma = f"{e.gamma:.9f}" if e.gamma is not None else ""
        row = (
            f"{e.t_start:.3f}",
            e.kind,
            _target_field(e),
            state_of.get(i, ""),
            str(_cycle_of_event(i, segments, cycles)),
            entropy,
            gamma,
        )
        out.write("\t".join(row) + "\n")
    return out.getvalue().encode("utf-8")


def _export_svg(trace: Trace, segments: list[Segment], cycles: list[PolicyCycle]) -> bytes:
    width, height = 960.0, 320.0
    pad = 40.0
    t0 = trace.events[0].t_start if trace.events else 0.0
    t1 = trace.events[-1].t_end if trace.events else 1.0
    span = max(t1 - t0, 1.0)

    def x(t: float) -> float:
        return pad + (t - t0) / span * (width - 2 * pad)

    chunk_rows: dict[int, float] = {}
    if trace.events:
        seen = sorted({e.chunk_id for e in trace.events if e.chunk_id is not None})
        for k, cid in enumerate(seen):
            chunk_rows[cid] = pad + 30.0 + 28.0 * k

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:.0f}" height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>',
    ]
    band_y, band_h = height - pad - 50.0, 26.0
    for seg in segments:
        parts.append(
            f'<rect class="segment" x="{x(seg.t_start):.2f}" y="{band_y:.2f}" '
            f'width="{max(x(seg.t_end) - x(seg.t_start), 1.0):.2f}" height="{band_h:.2f}" '
            f'fill="{_STATE_COLORS[seg.state]}" stroke="black" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{x(seg.t_start) + 2:.2f}" y="{band_y + band_h - 8:.2f}" '
            f'font-size="11">{seg.state}</text>'
        )
    cycle_y = band_y + band_h + 6.0
    for cyc in cycles:
        segs = [segments[i] for i in cyc.segments]
        parts.append(
            f'<rect class="cycle" x="{x(segs[0].t_start):.2f}" y="{cycle_y:.2f}" '
            f'width="{max(x(segs[-1].t_end) - x(segs[0].t_start), 1.0):.2f}" height="14" '
            f'fill="none" stroke="#555" stroke-dasharray="4 2"/>'
        )
        parts.append(
            f'<text x="{x(segs[0].t_start) + 2:.2f}" y="{cycle_y + 11:.2f}" '
            f'font-size="10">{cyc.label}</text>'
        )
    for e in trace.events:
        if e.kind == env.FIXATE_SOURCE and e.chunk_id in chunk_rows:
            parts.append(
                f'<circle cx="{x(e.t_start):.2f}" cy="{chunk_rows[e.chunk_id]:.2f}" '
                f'r="4" fill="#2b6cb0"/>'
            )
        elif e.kind == env.FIXATE_TARGET:
            parts.append(
                f'<circle cx="{x(e.t_start):.2f}" cy="{band_y - 12:.2f}" r="4" fill="#2f855a"/>'
            )
        elif e.kind == env.TYPE and e.chunk_id in chunk_rows:
            parts.append(
                f'<text x="{x(e.t_start):.2f}" y="{chunk_rows[e.chunk_id] + 4:.2f}" '
                f'font-size="12" fill="#1a202c">+{e.chunk_id}@{e.slot}</text>'
            )
        elif e.kind == env.DELETE:
            parts.append(
                f'<text x="{x(e.t_start):.2f}" y="{band_y - 18:.2f}" '
                f'font-size="12" fill="#c53030">x@{e.slot}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts).encode("utf-8")


DEFAULT_COLUMN_MAP = {"time": "time_ms", "kind": "event_kind", "target": "chunk_or_slot"}

_KNOWN_KINDS = (
    env.FIXATE_SOURCE,
    env.FIXATE_TARGET,
    env.TYPE,
    env.DELETE,
    env.PAUSE,
    env.CONSULT,
)


def _parse_target(value: str, kind: str, row: int) -> tuple[int | None, int | None]:
    value = value.strip()
    if not value:
        return None, None
    try:
        if "@" in value:
            chunk_part, slot_part = value.split("@", 1)
            chunk = int(chunk_part) if chunk_part else None
            slot = int(slot_part) if slot_part else None
            return chunk, slot
        return int(value), None
    except ValueError:
        raise IngestError(row, f"cannot parse target field {value!r} for {kind}")


def ingest_tsv(data: bytes, column_map: dict[str, str] | None = None) -> Trace:
    """Normalize an external tabular log into a trace without belief fields.

    The column map names the header columns holding event time (ms), event
    kind, and the chunk/slot target. Event end times are reconstructed from
    the next event's start.
    """
    column_map = dict(DEFAULT_COLUMN_MAP, **(column_map or {}))
    for key in ("time", "kind", "target"):
        if key not in column_map:
            raise IngestError(0, f"column map must name a {key!r} column")
    text = data.decode("utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise IngestError(0, "empty file: no header row")
    header = lines[0].rstrip("\n").split("\t")
    idx = {}
    for key in ("time", "kind", "target"):
        name = column_map[key]
        if name not in header:
            raise IngestError(1, f"missing column {name!r} in header {header}")
        idx[key] = header.index(name)

    raw: list[tuple[float, str, int | None, int | None]] = []
    for row_no, line in enumerate(lines[1:], start=2):
        cells = line.rstrip("\n").split("\t")
        if len(cells) <= max(idx.values()):
            raise IngestError(row_no, f"expected at least {max(idx.values()) + 1} columns")
        try:
            t = float(cells[idx["time"]])
        except ValueError:
            raise IngestError(row_no, f"unparseable time {cells[idx['time']]!r}")
        kind = cells[idx["kind"]].strip()
        if kind not in _KNOWN_KINDS:
            raise IngestError(row_no, f"unknown event kind {kind!r}")
        chunk, slot = _parse_target(cells[idx["target"]], kind, row_no)
        if kind in (env.FIXATE_TARGET, env.DELETE) and chunk is not None and slot is None:
            chunk, slot = None, chunk  # bare number names a slot for these kinds
        raw.append((t, kind, chunk, slot))

    events = []
    for i, (t, kind, chunk, slot) in enumerate(raw):
        t_end = raw[i + 1][0] if i + 1 < len(raw) else t
        if t_end < t:
            raise IngestError(i + 2, "event times must be non-decreasing")
        events.append(
            ProcessEvent(t_start=t, t_end=t_end, kind=kind, chunk_id=chunk, slot=slot)
        )
    return Trace(events=tuple(events), complete=True, strategy="ingested")
