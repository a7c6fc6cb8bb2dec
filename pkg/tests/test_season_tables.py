"""Rendering checks against the 2023 season tables stored in tests/data."""
import csv
import io
import re

import pytest

from smokebench.metrics import CityReport, ConfusionCounts, MetricValue, ModelScores, skill
from smokebench.report import format_count_pct, format_score, render_metric_tables, render_skill_table

MODELS = ["hrrr", "geoscf", "cams", "naqfc"]
ALL = [*MODELS, "persistence"]


def counts_report(city, rows):
    return CityReport(city, {m: ModelScores(ConfusionCounts(*r["counts"]), {}, {}) for m, r in rows.items()})


def zero_smoke_cities(season_tables):
    return {c for c, rows in season_tables["confusion"].items() if rows["persistence"]["counts"][0] + rows["persistence"]["counts"][2] == 0}


def test_table_inventory(season_tables):
    assert len(season_tables["confusion"]) == 29
    everyone = set(season_tables["confusion"]) | set(season_tables["reconstructed_confusion"])
    assert len(everyone) == 30
    assert set(season_tables["mee_all"]) == set(season_tables["rmse_all"]) == everyone
    # cities without a smoke day have no row in the smoke-day tables
    assert zero_smoke_cities(season_tables) == {"Nashville-Davidson, TN"}
    assert set(season_tables["mee_smoke"]) == set(season_tables["rmse_smoke"]) == everyone - zero_smoke_cities(season_tables)
    for rows in season_tables["confusion"].values():
        assert set(rows) == set(ALL)
        assert len({sum(r["counts"]) for r in rows.values()}) == 1  # one day count per city


def test_count_cells(season_tables):
    for rows in season_tables["confusion"].values():
        for r in rows.values():
            total = sum(r["counts"])
            assert [format_count_pct(n, total) for n in r["counts"]] == r["cells"]


def rendered_skill(city, rows):
    doc = render_skill_table(counts_report(city, rows), MODELS)
    return {row["model"]: row for row in csv.DictReader(io.StringIO(doc.csv))}


def test_skill_strings(season_tables):
    for city, rows in season_tables["confusion"].items():
        got = rendered_skill(city, rows)
        for m, r in rows.items():
            assert (got[m]["precision"], got[m]["recall"]) == (r["precision"], r["recall"]), (city, m)


def test_skill_shading_where_display_differs(season_tables):
    checked = 0
    for city, rows in season_tables["confusion"].items():
        got = rendered_skill(city, rows)
        for m in MODELS:
            for k in ("precision", "recall"):
                if rows[m][k] != rows["persistence"][k]:
                    assert got[m][f"{k}_shade"] == rows[m][f"{k}_shade"], (city, m, k)
                    checked += 1
    assert checked > 150


def test_skill_ties_render_equal(season_tables):
    # the source tables colour a tied precision or recall as better; ties here stay unshaded
    ties = 0
    for city, rows in season_tables["confusion"].items():
        got = rendered_skill(city, rows)
        for m in MODELS:
            for k in ("precision", "recall"):
                if rows[m][k] == rows["persistence"][k] and rows[m][k] != "--":
                    assert got[m][f"{k}_shade"] == "equal"
                    assert rows[m][f"{k}_shade"] == "better"
                    ties += 1
    assert ties == 43


def test_skill_strings_from_plain_ratios(season_tables):
    # independent route: ratio and two-decimal format without the skill helper
    for rows in season_tables["confusion"].values():
        for r in rows.values():
            tp, fp, fn, _ = r["counts"]
            s = skill(ConfusionCounts(*r["counts"]))
            assert format_score(s.precision) == ("--" if tp + fp == 0 else "%.2f" % (tp / (tp + fp)))
            assert format_score(s.recall) == ("--" if tp + fn == 0 else "%.2f" % (tp / (tp + fn)))


def test_city_days_agree_across_tables(season_tables):
    for city, rows in season_tables["confusion"].items():
        assert season_tables["mee_all"][city]["days"] == sum(rows["persistence"]["counts"])
        assert season_tables["rmse_all"][city]["days"] == sum(rows["persistence"]["counts"])
        tp, _, fn, _ = rows["persistence"]["counts"]
        smoke = season_tables["mee_smoke"].get(city)
        assert (smoke["days"] if smoke else 0) == tp + fn


CELL = re.compile(r'<td(?: class="(\w+)"[^>]*)?>([^<]*)</td>')


@pytest.mark.parametrize("table,metric,dayset", [("mee_smoke", "mee", "smoke"), ("mee_all", "mee", "all"), ("rmse_smoke", "rmse", "smoke"), ("rmse_all", "rmse", "all")])
def test_metric_tables_reproduce(season_tables, table, metric, dayset):
    src = season_tables[table]
    reports = []
    for i, (city, row) in enumerate(sorted(src.items())):
        models = {}
        for m in ALL:
            mv = {dayset: MetricValue(row[m], row["days"])}
            models[m] = ModelScores(ConfusionCounts(), mv if metric == "mee" else {}, mv if metric == "rmse" else {})
        reports.append(CityReport(f"u{i:02d}", models, city))
    _, html = render_metric_tables(reports, MODELS)
    caption = {"mee": "Mean excess exposure", "rmse": "RMSE"}[metric] + f" across {dayset} days"
    section = html.split(f"<caption>{caption}</caption>")[1].split("</table>")[0]
    lines = [ln for ln in section.splitlines() if ln.startswith("<tr><td>")]
    assert len(lines) == len(src)
    for ln in lines:
        cells = CELL.findall(ln)
        city = cells[0][1]
        row = src[city]
        base = row["persistence"]
        assert [c[1] for c in cells[1:]] == [f"{row[m]:.1f}" for m in ALL] + [str(row["days"])]
        for (cls, _), m in zip(cells[1:5], MODELS):
            want = "equal" if row[m] == base else ("better" if row[m] < base else "worse")
            assert (cls or "equal") == want, (city, m)
