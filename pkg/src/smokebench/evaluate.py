"""End-to-end evaluation: load inputs, build bundles, score, write result files."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .align import BundleResult, Stores, build_bundles, write_exclusions
from .config import RunConfig
from .core import PERSISTENCE, SmokebenchError
from .ingest import ForecastStore, load_forecast_samples, load_monitors, load_readings
from .metrics import (
    CityReport,
    ConfusionCounts,
    MetricValue,
    ModelScores,
    aggregate,
    city_report,
    day_outcomes,
)

log = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
CONFUSION_FILE = "confusion.csv"
OUTCOMES_FILE = "outcomes.csv"
EXCLUSIONS_FILE = "exclusions.csv"
DAYSET_CHOICES = {"smoke": ("smoke",), "all": ("all",), "both": ("smoke", "all")}


class NoResultsError(SmokebenchError):
    pass


def load_inputs(config: RunConfig) -> Stores:
    if config.monitors_path is None or config.readings_path is None:
        raise SmokebenchError("config inputs need 'monitors' and 'readings'")
    stations = load_monitors(config.monitors_path)
    readings = load_readings(config.readings_path, stations)
    forecasts = ForecastStore()
    for model in config.models:
        path = config.forecast_paths.get(model)
        if path is None:
            log.warning("no forecast file configured for %s", model)
            continue
        load_forecast_samples(path, model, store=forecasts)
    return Stores(stations, readings, forecasts)


@dataclass
class Evaluation:
    config: RunConfig
    bundles: BundleResult
    outcomes: dict  # (city_id, model) -> list[DayOutcome]
    reports: list

    @property
    def skipped_units(self):
        return self.bundles.skipped_units(self.config.models, [c.id for c in self.config.cities])

    def aggregate(self):
        return aggregate(self.reports, self.config.rmse_mode)


def evaluate(config: RunConfig, stores: Stores, jobs: int = 1) -> Evaluation:
    bundles = build_bundles(config, stores, jobs=jobs)
    by_city: dict = {}
    for b in bundles.bundles:
        by_city.setdefault(b.city_id, []).append(b)
    models = [*config.models, PERSISTENCE]
    units = [(c, m) for c in sorted(by_city) for m in models]

    def score(unit):
        c, m = unit
        return day_outcomes(by_city[c], m, config.exceedance_threshold, config.forecast_rule)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(score, units))
    else:
        results = [score(u) for u in units]
    outcomes = {u: r for u, r in zip(units, results) if r}

    names = {c.id: c.name for c in config.cities}
    reports = []
    for c in sorted(by_city):
        per_model = {m: outcomes[(c, m)] for m in models if (c, m) in outcomes}
        reports.append(city_report(c, per_model, config.rmse_mode, names.get(c, "")))
    return Evaluation(config, bundles, outcomes, reports)


def _num(v) -> str:
    return "--" if v is None else repr(float(v))


def write_evaluation(ev: Evaluation, out_dir, dayset: str = "both") -> list[Path]:
    """Write metric, confusion, outcome and exclusion CSVs; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    daysets = DAYSET_CHOICES[dayset]
    models = [*ev.config.models, PERSISTENCE]

    metrics_path = out_dir / METRICS_FILE
    with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("city_id", "model", "metric", "dayset", "value", "days"))
        for r in ev.reports:
            for m in models:
                s = r.models.get(m)
                if s is None:
                    continue
                for metric, table in (("mee", s.mee), ("rmse", s.rmse)):
                    for ds in daysets:
                        w.writerow([r.city_id, m, metric, ds, _num(table[ds].value), table[ds].days])

    confusion_path = out_dir / CONFUSION_FILE
    with open(confusion_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("city_id", "name", "model", "tp", "fp", "fn", "tn"))
        for r in ev.reports:
            for m in models:
                s = r.models.get(m)
                if s is not None:
                    w.writerow([r.city_id, r.name, m, *s.counts.as_tuple()])

    outcomes_path = out_dir / OUTCOMES_FILE
    with open(outcomes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("city_id", "date", "model", "predicted", "truth", "excess_exposure", "chosen_hour", "squared_error_sum"))
        for (c, m) in sorted(ev.outcomes, key=lambda u: (u[0], models.index(u[1]))):
            for o in ev.outcomes[(c, m)]:
                w.writerow(
                    [c, o.date.isoformat(), m, int(o.predicted_positive), int(o.truth_positive),
                     _num(o.excess_exposure), o.chosen_hour, _num(o.squared_error_sum)]
                )

    exclusions_path = out_dir / EXCLUSIONS_FILE
    write_exclusions(ev.bundles.exclusions, exclusions_path)
    return [metrics_path, confusion_path, outcomes_path, exclusions_path]


def read_reports(out_dir) -> list[CityReport]:
    """Rebuild city reports from ``confusion.csv`` and ``metrics.csv``."""
    out_dir = Path(out_dir)
    confusion_path, metrics_path = out_dir / CONFUSION_FILE, out_dir / METRICS_FILE
    if not confusion_path.exists() or not metrics_path.exists():
        raise NoResultsError(f"no evaluation results found in {out_dir}")
    counts, names, order = {}, {}, []
    with open(confusion_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["city_id"], row["model"])
            counts[key] = ConfusionCounts(*(int(row[k]) for k in ("tp", "fp", "fn", "tn")))
            names[row["city_id"]] = row.get("name", "")
            if row["city_id"] not in order:
                order.append(row["city_id"])
    values: dict = {}
    with open(metrics_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            v = None if row["value"] == "--" else float(row["value"])
            values.setdefault((row["city_id"], row["model"]), {}).setdefault(row["metric"], {})[row["dayset"]] = MetricValue(
                v, int(row["days"])
            )
    reports = []
    for c in order:
        models = {}
        for (city, m), cc in counts.items():
            if city != c:
                continue
            mv = values.get((c, m), {})
            models[m] = ModelScores(cc, mv.get("mee", {}), mv.get("rmse", {}))
        reports.append(CityReport(c, models, names.get(c, "")))
    return reports

