"""Event windows around high-PM2.5 days and dependency-free SVG time-series plots."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import Optional, Sequence

from .core import DEFAULT_THRESHOLD, HOURS_PER_DAY, MEASURED, PERSISTENCE, DayWindow, date_range
from .ingest import format_time, parse_time

PLOT_COLUMNS = ("timestamp", "source", "pm25")

WIDTH, HEIGHT = 960, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 170, 40, 60

MEASURED_STYLE = ("#e66101", "")
PERSISTENCE_STYLE = ("#000000", "6,4")
MODEL_STYLES = [
    ("#56b4e9", "2,3"),
    ("#cc79a7", "8,3,2,3"),
    ("#0072b2", "4,2,1,2"),
    ("#009e73", "8,3,2,3,2,3"),
    ("#d55e00", "1,2"),
    ("#7f7f7f", "10,4"),
]


@dataclass(frozen=True)
class EventWindow:
    city_id: str
    start: date
    end: date
    included_days: tuple[date, ...]
    high_days: tuple[date, ...] = ()


def detect_event_windows(
    bundles: Sequence,
    pad_days: int = 2,
    bounds: Optional[tuple[date, date]] = None,
) -> list[EventWindow]:
    """Group high days into windows for one city.

    Each high day is widened by ``pad_days`` per side; widened spans that
    overlap or touch merge into one window, clipped to ``bounds`` (the span of
    ``bundles`` by default).
    """
    if not bundles:
        return []
    city = bundles[0].city_id
    dates = sorted(b.label_date for b in bundles)
    lo, hi = bounds if bounds is not None else (dates[0], dates[-1])
    high = sorted(b.label_date for b in bundles if b.high_day)
    runs: list[list[date]] = []
    for d in high:
        if runs and (d - runs[-1][-1]).days <= 2 * pad_days + 1:
            runs[-1].append(d)
        else:
            runs.append([d])
    have = set(dates)
    out = []
    for run in runs:
        start = max(lo, run[0] - timedelta(days=pad_days))
        end = min(hi, run[-1] + timedelta(days=pad_days))
        included = tuple(d for d in date_range(start, end) if d in have)
        out.append(EventWindow(city, start, end, included, tuple(run)))
    return out


def plot_series(window: EventWindow, bundles: Sequence, models: Sequence[str]):
    """``{source: [(instant, value-or-None), ...]}`` covering every hour of the window."""
    by_date = {b.label_date: b for b in bundles if b.city_id == window.city_id}
    sources = [MEASURED, PERSISTENCE, *[m for m in models if m != PERSISTENCE]]
    out = {s: [] for s in sources}
    for d in date_range(window.start, window.end):
        hours = DayWindow(d).hours
        b = by_date.get(d)
        for s in sources:
            if b is None:
                series = None
            elif s == MEASURED:
                series = b.measured
            else:
                series = b.series_for(s)
            for k, t in enumerate(hours):
                out[s].append((t, None if series is None else series.values[k]))
    return out


def plot_csv(series: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_COLUMNS)
    for source, points in series.items():
        for t, v in points:
            w.writerow([format_time(t), source, "" if v is None else repr(v)])
    return buf.getvalue()


def read_plot_csv(text: str) -> dict:
    out: dict = {}
    for row in csv.DictReader(io.StringIO(text)):
        v = row["pm25"]
        out.setdefault(row["source"], []).append((parse_time(row["timestamp"]), float(v) if v else None))
    return out


def _segments(points):
    seg = []
    for p in points:
        if p[1] is None:
            if seg:
                yield seg
            seg = []
        else:
            seg.append(p)
    if seg:
        yield seg


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def render_svg(series: dict, threshold: float = DEFAULT_THRESHOLD, title: str = "") -> str:
    """Line plot with one ``<g>`` per source; gaps split a source into several polylines."""
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    instants = sorted({t for pts in series.values() for t, _ in pts})
    if not instants:
        raise ValueError("nothing to plot")
    t0, t1 = instants[0], instants[-1]
    span = max((t1 - t0).total_seconds(), 3600.0)
    values = [v for pts in series.values() for _, v in pts if v is not None]
    y_max = max([threshold * 1.2, *(v * 1.1 for v in values)])
    y_min = min([0.0, *values])

    def x(t: datetime) -> float:
        return MARGIN_LEFT + plot_w * (t - t0).total_seconds() / span

    def y(v: float) -> float:
        return MARGIN_TOP + plot_h * (y_max - v) / (y_max - y_min)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.3f}" y="24.000" text-anchor="middle" font-size="16" font-family="sans-serif">{_esc(title)}</text>')
    # axes
    x_end, y_end = MARGIN_LEFT + plot_w, MARGIN_TOP + plot_h
    out.append(f'<line x1="{MARGIN_LEFT:.3f}" y1="{y_end:.3f}" x2="{x_end:.3f}" y2="{y_end:.3f}" stroke="#000000"/>')
    out.append(f'<line x1="{MARGIN_LEFT:.3f}" y1="{MARGIN_TOP:.3f}" x2="{MARGIN_LEFT:.3f}" y2="{y_end:.3f}" stroke="#000000"/>')
    for i in range(6):
        v = y_min + (y_max - y_min) * i / 5
        out.append(
            f'<text x="{MARGIN_LEFT - 6:.3f}" y="{y(v) + 4:.3f}" text-anchor="end" font-size="11" font-family="sans-serif">{v:.1f}</text>'
        )
    t = t0
    while t <= t1:  # one tick per window start
        out.append(f'<line x1="{x(t):.3f}" y1="{y_end:.3f}" x2="{x(t):.3f}" y2="{y_end + 5:.3f}" stroke="#000000"/>')
        out.append(
            f'<text x="{x(t):.3f}" y="{y_end + 18:.3f}" text-anchor="middle" font-size="11" font-family="sans-serif">{t:%m-%d %H}h</text>'
        )
        t += timedelta(hours=HOURS_PER_DAY)
    out.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.3f}" y="{HEIGHT - 12:.3f}" text-anchor="middle" font-size="12" font-family="sans-serif">Time (UTC)</text>'
    )
    out.append(
        f'<text x="16.000" y="{MARGIN_TOP + plot_h / 2:.3f}" text-anchor="middle" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 16.000 {MARGIN_TOP + plot_h / 2:.3f})">PM2.5 (µg/m³)</text>'
    )
    # threshold rule
    out.append(
        f'<line class="threshold" x1="{MARGIN_LEFT:.3f}" y1="{y(threshold):.3f}" x2="{x_end:.3f}" y2="{y(threshold):.3f}" '
        'stroke="#999999" stroke-dasharray="3,3"/>'
    )
    out.append(
        f'<text x="{x_end - 4:.3f}" y="{y(threshold) - 4:.3f}" text-anchor="end" font-size="10" font-family="sans-serif">{threshold:g} µg/m³</text>'
    )

    styles = {}
    model_i = 0
    for source in series:
        if source == MEASURED:
            styles[source] = MEASURED_STYLE
        elif source == PERSISTENCE:
            styles[source] = PERSISTENCE_STYLE
        else:
            styles[source] = MODEL_STYLES[model_i % len(MODEL_STYLES)]
            model_i += 1

    for source, pts in series.items():
        color, dash = styles[source]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<g class="series" data-source="{_esc(source)}">')
        for seg in _segments(pts):
            coords = " ".join(f"{x(t):.3f},{y(v):.3f}" for t, v in seg)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{coords}"/>')
        out.append("</g>")

    # legend
    lx, ly = x_end + 16, MARGIN_TOP + 10
    for i, source in enumerate(series):
        color, dash = styles[source]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        yy = ly + 18 * i
        out.append(f'<line x1="{lx:.3f}" y1="{yy:.3f}" x2="{lx + 28:.3f}" y2="{yy:.3f}" stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{lx + 34:.3f}" y="{yy + 4:.3f}" font-size="11" font-family="sans-serif">{_esc(source)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_event_plot(window: EventWindow, bundles: Sequence, models: Sequence[str], threshold: float = DEFAULT_THRESHOLD):
    """Return ``(plot_csv_text, svg_text)`` for one event window."""
    if not window.included_days and window.start > window.end:
        raise ValueError("empty event window")
    series = plot_series(window, bundles, models)
    title = f"{window.city_id} {window.start.isoformat()} to {window.end.isoformat()}"
    return plot_csv(series), render_svg(series, threshold, title)
