"""``smokebench`` command line: fetch, validate, evaluate, report, synth.

Exit codes: 0 success, 1 usage or config error, 2 data or validation error,
3 partial success (at least one city/model unit evaluated, at least one skipped).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .align import build_bundles
from .config import load_config
from .core import PERSISTENCE, SmokebenchError
from .evaluate import DAYSET_CHOICES, evaluate, load_inputs, read_reports, write_evaluation
from .fixtures import default_scenario, generate, load_spec
from .ingest import ConfigError, fetch_archives
from .metrics import aggregate
from .plots import detect_event_windows, render_event_plot
from .report import (
    check_aggregate,
    render_aggregate_table,
    render_city_table,
    render_metric_tables,
    render_skill_table,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3

log = logging.getLogger("smokebench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _jobs(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("--jobs must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="smokebench", description="Decision-oriented verification of PM2.5 forecasts.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-q", "--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    default_jobs = os.cpu_count() or 1

    f = sub.add_parser("fetch", help="download forecast archives named by the config's URL templates")
    f.add_argument("--config", required=True)
    f.add_argument("--force", action="store_true", help="re-download files that already exist")
    f.add_argument("--jobs", type=_jobs, default=4)

    v = sub.add_parser("validate", help="load every input and print diagnostics; writes nothing")
    v.add_argument("--config", required=True)

    e = sub.add_parser("evaluate", help="score every configured model and write metric CSVs")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--dayset", choices=sorted(DAYSET_CHOICES), default="both")
    e.add_argument("--jobs", type=_jobs, default=default_jobs)

    r = sub.add_parser("report", help="render shaded tables (and event plots) from evaluate output")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--dayset", choices=("smoke", "all"), default="smoke", help="day set for the MEE column")
    r.add_argument("--plots", action="store_true")
    r.add_argument("--jobs", type=_jobs, default=default_jobs)

    s = sub.add_parser("synth", help="generate a synthetic scenario")
    s.add_argument("--spec", help="scenario JSON; the built-in scenario is used when omitted")
    s.add_argument("--seed", type=int, default=1, help="seed for the built-in scenario")
    s.add_argument("--out", required=True)
    return p


def _partial_status(skipped, n_units) -> int:
    if not skipped:
        return EXIT_OK
    return EXIT_PARTIAL if len(skipped) < n_units else EXIT_DATA


def cmd_fetch(args) -> int:
    config = load_config(args.config)
    if not config.url_templates:
        raise ConfigError("config has no fetch.url_templates")
    dest = config.archive_dir or Path(args.config).parent / "archives"
    results = []
    for model, template in sorted(config.url_templates.items()):
        results += fetch_archives(template, model, config.date_range, dest, force=args.force, workers=args.jobs)
    failed = [r for r in results if r.status == "failed"]
    for r in results:
        log.info("%s %s (%d bytes)", r.status, r.path.name, r.bytes)
    if failed:
        log.error("%d of %d downloads failed", len(failed), len(results))
        return EXIT_PARTIAL if len(failed) < len(results) else EXIT_DATA
    return EXIT_OK


def cmd_validate(args) -> int:
    config = load_config(args.config)
    stores = load_inputs(config)
    result = build_bundles(config, stores)
    print(f"cities: {len(config.cities)}")
    print(f"monitors: {len(stores.stations)}")
    print(f"readings: {len(stores.readings)} ({stores.readings.duplicates} duplicates, {stores.readings.negatives} negative)")
    for model in config.models:
        print(f"forecast samples [{model}]: {sum(1 for s in stores.forecasts.samples() if s.model == model)}")
    for cid, sel in sorted(result.selections.items()):
        print(f"city {cid}: {len(sel.monitor_ids)} monitors within {sel.radius_used_km:g} km")
    print(f"bundles: {len(result.bundles)}")
    print(f"exclusions: {len(result.exclusions)}")
    for x in result.exclusions:
        print(f"  {x.city_id} {x.date} {x.model}: {x.reason}")
    skipped = result.skipped_units(config.models, [c.id for c in config.cities])
    for c, m in skipped:
        log.warning("no evaluable days for %s / %s", c, m)
    return _partial_status(skipped, len(config.cities) * (len(config.models) + 1))


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    stores = load_inputs(config)
    ev = evaluate(config, stores, jobs=args.jobs)
    paths = write_evaluation(ev, args.out, args.dayset)
    for p in paths:
        log.info("wrote %s", p)
    skipped = ev.skipped_units
    for c, m in skipped:
        log.warning("skipped %s / %s: no evaluable days", c, m)
    return _partial_status(skipped, len(config.cities) * (len(config.models) + 1))


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def cmd_report(args) -> int:
    config = load_config(args.config)
    out = Path(args.out)
    reports = read_reports(out)
    models = list(config.models)
    dest = out / "report"
    dest.mkdir(parents=True, exist_ok=True)
    for r in reports:
        if PERSISTENCE not in r.models:
            log.warning("skipping tables for %s: no persistence baseline", r.city_id)
            continue
        table = render_city_table(r, models, args.dayset)
        _write(dest / f"city_{r.city_id}.csv", table.csv)
        _write(dest / f"city_{r.city_id}.html", table.html)
        skill_table = render_skill_table(r, models)
        _write(dest / f"skill_{r.city_id}.csv", skill_table.csv)
        _write(dest / f"skill_{r.city_id}.html", skill_table.html)
    agg = aggregate(reports, config.rmse_mode)
    check_aggregate(agg, reports)
    table = render_aggregate_table(agg, models, args.dayset)
    _write(dest / "aggregate.csv", table.csv)
    _write(dest / "aggregate.html", table.html)
    metric_csv, metric_html = render_metric_tables(reports, models)
    _write(dest / "metric_tables.csv", metric_csv)
    _write(dest / "metric_tables.html", metric_html)

    if args.plots:
        stores = load_inputs(config)
        result = build_bundles(config, stores, jobs=args.jobs)
        plot_dir = dest / "plots"
        plot_dir.mkdir(exist_ok=True)
        for city in sorted(config.cities, key=lambda c: c.id):
            bundles = [b for b in result.bundles if b.city_id == city.id]
            for w in detect_event_windows(bundles, config.plot_pad_days, config.date_range):
                csv_text, svg = render_event_plot(w, bundles, models, config.exceedance_threshold)
                stem = f"{city.id}_{w.start.isoformat()}_{w.end.isoformat()}"
                _write(plot_dir / f"{stem}.csv", csv_text)
                _write(plot_dir / f"{stem}.svg", svg)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = load_spec(args.spec) if args.spec else default_scenario(args.seed)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario spec: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for p in generate(spec, args.out):
        log.info("wrote %s", p)
    return EXIT_OK


COMMANDS = {
    "fetch": cmd_fetch,
    "validate": cmd_validate,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "synth": cmd_synth,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (SmokebenchError, ValueError, KeyError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
