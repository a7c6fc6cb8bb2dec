"""Baseline-relative tables in CSV (machine) and HTML (shaded) form."""
from __future__ import annotations

import csv
import html
import io
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .core import PERSISTENCE, SmokebenchError
from .metrics import AggregateReport, CityReport, ConfusionCounts, ModelScores, skill

DASH = "--"
BETTER, WORSE, EQUAL = "better", "worse", "equal"
HIGHER, LOWER = "higher-is-better", "lower-is-better"

ORIENTATION = {
    "tp": HIGHER,
    "tn": HIGHER,
    "fp": LOWER,
    "fn": LOWER,
    "mee": LOWER,
    "rmse": LOWER,
    "precision": HIGHER,
    "recall": HIGHER,
}
# fixed palette; pale fills keep the numbers legible
SHADE_COLORS = {BETTER: "#c7e9c0", WORSE: "#fcbba1", EQUAL: ""}

COUNT_FIELDS = ("tp", "fp", "fn", "tn")
CITY_COLUMNS = ("model", "tp", "fp", "fn", "tn", "mee", "tp_shade", "fp_shade", "fn_shade", "tn_shade", "mee_shade")
AGGREGATE_COLUMNS = CITY_COLUMNS + ("days",)
METRIC_COLUMNS = ("city_id", "model", "metric", "dayset", "value", "days")


class ReportError(SmokebenchError):
    pass


def format_value(value, decimals: int = 0) -> str:
    if value is None:
        return DASH
    if decimals == 0 and float(value).is_integer():
        return str(int(value))
    return f"{value:.{decimals}f}"


def format_score(value: Optional[float]) -> str:
    """Two-decimal precision/recall, or a dash when undefined."""
    return DASH if value is None else f"{value:.2f}"


def format_count_pct(n: int, total: int) -> str:
    """``n (p%)`` with the percentage rounded to two decimals, e.g. ``2 (1.31%)``."""
    if not total:
        return f"{n} ({DASH})"
    return f"{n} ({round(100.0 * n / total, 2)}%)"


@dataclass(frozen=True)
class ShadedCell:
    display: str
    shade: str


def shade(value, baseline, orientation: str, decimals: int = 0) -> ShadedCell:
    """Compare ``value`` with the baseline value of the same column.

    Values that agree after display rounding count as equal; otherwise the
    full-precision values decide. Undefined values are never shaded.
    """
    display = format_value(value, decimals)
    if value is None or baseline is None:
        return ShadedCell(display, EQUAL)
    if display == format_value(baseline, decimals) or value == baseline:
        return ShadedCell(display, EQUAL)
    if orientation not in (HIGHER, LOWER):
        raise ValueError(f"unknown orientation {orientation!r}")
    better = value > baseline if orientation == HIGHER else value < baseline
    return ShadedCell(display, BETTER if better else WORSE)


@dataclass(frozen=True)
class TableDocument:
    columns: tuple[str, ...]
    rows: tuple[dict, ...]
    html: str

    @property
    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(self.columns), lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow(row)
        return buf.getvalue()


def _row_values(scores: Optional[ModelScores], dayset: str) -> dict:
    if scores is None:
        return {k: None for k in (*COUNT_FIELDS, "mee")}
    c = scores.counts
    mee = scores.mee.get(dayset)
    return {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn, "mee": None if mee is None else mee.value}


def _shaded_rows(models: Mapping[str, ModelScores], order: Sequence[str], dayset: str, mee_decimals: int):
    if PERSISTENCE not in models:
        raise ReportError("persistence baseline missing from report")
    base = _row_values(models[PERSISTENCE], dayset)
    out = []
    for m in [*order, PERSISTENCE]:
        vals = _row_values(models.get(m), dayset)
        cells = {}
        for key in (*COUNT_FIELDS, "mee"):
            if m == PERSISTENCE:
                cells[key] = ShadedCell(format_value(vals[key], mee_decimals if key == "mee" else 0), EQUAL)
            else:
                cells[key] = shade(vals[key], base[key], ORIENTATION[key], mee_decimals if key == "mee" else 0)
        out.append((m, cells))
    return out


def _html_table(title: str, header: Sequence[str], body: Sequence[Sequence[tuple[str, str]]]) -> str:
    lines = [
        "<!DOCTYPE html>",
        '<html><head><meta charset="utf-8"><title>' + html.escape(title) + "</title></head><body>",
        "<table>",
        "<caption>" + html.escape(title) + "</caption>",
        "<tr>" + "".join(f"<th>{html.escape(h)}</th>" for h in header) + "</tr>",
    ]
    for row in body:
        cells = []
        for text, sh in row:
            color = SHADE_COLORS.get(sh, "")
            style = f' style="background:{color}"' if color else ""
            cls = f' class="{sh}"' if sh else ""
            cells.append(f"<td{cls}{style}>{html.escape(text)}</td>")
        lines.append("<tr>" + "".join(cells) + "</tr>")
    lines += ["</table>", "</body></html>", ""]
    return "\n".join(lines)


def _model_order(models: Mapping[str, ModelScores], order: Optional[Sequence[str]]) -> list[str]:
    if order is None:
        order = [m for m in models if m != PERSISTENCE]
    return [m for m in order if m != PERSISTENCE]


def render_city_table(
    report: CityReport, models: Optional[Sequence[str]] = None, dayset: str = "smoke", mee_decimals: int = 1
) -> TableDocument:
    """Forecast rows then persistence; counts over the season, MEE over ``dayset``.

    Models named in ``models`` but absent from the report render as dashes.
    """
    order = _model_order(report.models, models)
    rows, body = [], []
    for m, cells in _shaded_rows(report.models, order, dayset, mee_decimals):
        row = {"model": m}
        row.update({k: c.display for k, c in cells.items()})
        row.update({f"{k}_shade": c.shade for k, c in cells.items()})
        rows.append(row)
        body.append([(m, "")] + [(cells[k].display, cells[k].shade) for k in (*COUNT_FIELDS, "mee")])
    title = f"{report.name or report.city_id}: exceedance confusion matrix and MEE ({dayset} days)"
    doc_html = _html_table(title, ["Model", "TP", "FP", "FN", "TN", "MEE"], body)
    return TableDocument(CITY_COLUMNS, tuple(rows), doc_html)


def render_aggregate_table(
    report: AggregateReport, models: Optional[Sequence[str]] = None, dayset: str = "smoke", mee_decimals: int = 2
) -> TableDocument:
    """Pooled confusion counts (with row percentages in HTML) and pooled MEE."""
    order = _model_order(report.models, models)
    rows, body = [], []
    for m, cells in _shaded_rows(report.models, order, dayset, mee_decimals):
        scores = report.models.get(m)
        row = {"model": m}
        row.update({k: c.display for k, c in cells.items()})
        row.update({f"{k}_shade": c.shade for k, c in cells.items()})
        row["days"] = scores.mee[dayset].days if scores is not None else 0
        rows.append(row)
        total = scores.counts.total if scores is not None else 0
        html_cells = [(m, "")]
        for k in COUNT_FIELDS:
            n = getattr(scores.counts, k) if scores is not None else None
            text = DASH if n is None else format_count_pct(n, total)
            html_cells.append((text, cells[k].shade))
        html_cells.append((cells["mee"].display, cells["mee"].shade))
        body.append(html_cells)
    title = f"Aggregated confusion matrix and MEE over {len(report.cities)} cities ({dayset} days)"
    header = ["Model", "True Positive", "False Positive", "False Negative", "True Negative", "MEE"]
    return TableDocument(AGGREGATE_COLUMNS, tuple(rows), _html_table(title, header, body))


def check_aggregate(report: AggregateReport, cities: Sequence[CityReport]) -> None:
    """Pooled counts must equal the component-wise sum of the city counts."""
    for m, scores in report.models.items():
        total = ConfusionCounts()
        for r in cities:
            if m in r.models:
                total = total + r.models[m].counts
        if total != scores.counts:
            raise ReportError(f"aggregate counts for {m} {scores.counts.as_tuple()} != city sum {total.as_tuple()}")


def render_skill_table(report: CityReport, models: Optional[Sequence[str]] = None) -> TableDocument:
    """Counts with row percentages plus precision and recall, shaded against persistence."""
    order = _model_order(report.models, models)
    if PERSISTENCE not in report.models:
        raise ReportError("persistence baseline missing from report")
    base = skill(report.models[PERSISTENCE].counts)
    columns = ("model", "tp", "fp", "fn", "tn", "precision", "recall", "precision_shade", "recall_shade")
    rows, body = [], []
    for m in [*order, PERSISTENCE]:
        scores = report.models.get(m)
        counts = scores.counts if scores is not None else ConfusionCounts()
        s = skill(counts)
        cells = {}
        for key, v, b in (("precision", s.precision, base.precision), ("recall", s.recall, base.recall)):
            if m == PERSISTENCE or v is None or b is None or format_score(v) == format_score(b):
                cells[key] = ShadedCell(format_score(v), EQUAL)
            else:
                cells[key] = ShadedCell(format_score(v), BETTER if v > b else WORSE)
        row = {"model": m, **dict(zip(COUNT_FIELDS, counts.as_tuple()))}
        row.update({k: c.display for k, c in cells.items()})
        row.update({f"{k}_shade": c.shade for k, c in cells.items()})
        rows.append(row)
        total = counts.total
        body.append(
            [(m, "")]
            + [(format_count_pct(n, total), "") for n in counts.as_tuple()]
            + [(cells["precision"].display, cells["precision"].shade), (cells["recall"].display, cells["recall"].shade)]
        )
    header = ["Model", "True Positive", "False Positive", "False Negative", "True Negative", "Precision", "Recall"]
    title = f"Confusion matrix for {report.name or report.city_id}"
    return TableDocument(columns, tuple(rows), _html_table(title, header, body))


def render_metric_tables(
    reports: Sequence[CityReport], models: Sequence[str], decimals: int = 1
) -> tuple[str, str]:
    """Per-city MEE and RMSE over smoke days and all days.

    Returns ``(csv_text, html_text)``; the CSV carries full-precision values.
    """
    order = _model_order({}, models)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for r in sorted(reports, key=lambda r: r.city_id):
        for m in [*order, PERSISTENCE]:
            scores = r.models.get(m)
            if scores is None:
                continue
            for metric, table in (("mee", scores.mee), ("rmse", scores.rmse)):
                for ds in ("smoke", "all"):
                    if ds in table:
                        mv = table[ds]
                        w.writerow([r.city_id, m, metric, ds, DASH if mv.value is None else repr(mv.value), mv.days])

    sections = []
    for metric, label in (("mee", "Mean excess exposure"), ("rmse", "RMSE")):
        for ds, ds_label in (("smoke", "smoke days"), ("all", "all days")):
            body = []
            for r in sorted(reports, key=lambda r: r.city_id):
                base_scores = r.models.get(PERSISTENCE)
                base = getattr(base_scores, metric).get(ds) if base_scores is not None else None
                if base is None or not base.days:
                    continue
                row = [(r.name or r.city_id, "")]
                for m in order:
                    s = r.models.get(m)
                    mv = getattr(s, metric).get(ds) if s is not None else None
                    c = shade(None if mv is None else mv.value, base.value, ORIENTATION[metric], decimals)
                    row.append((c.display, c.shade))
                row.append((format_value(base.value, decimals), ""))
                row.append((str(base.days), ""))
                body.append(row)
            header = ["Location", *order, "Persistence", "Days"]
            table_html = _html_table(f"{label} across {ds_label}", header, body)
            start = table_html.index("<table>")
            end = table_html.index("</table>") + len("</table>")
            sections.append(table_html[start:end])
    page = (
        '<!DOCTYPE html>\n<html><head><meta charset="utf-8"><title>Metric tables</title></head><body>\n'
        + "\n".join(sections)
        + "\n</body></html>\n"
    )
    return buf.getvalue(), page
