"""Command-line surface: run campaigns, compare, triage, plot, simulate.

Exit codes: 0 success, 1 validation error (bad flags, missing or malformed
config), 2 runtime failure. Diagnostics are one line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import campaign as cp
from .core.targets import versioned_targets
from .dedup import dedup_report, dedup_table_csv, stack_hash, triage_versions, coverage_unique_online
from .errors import FuzzEvalError, ConfigError
from .report import PlotSeries, PlotSpec, emit_comparison_table, emit_svg_plot
from .stats import CrashTimeSeries, aggregate_band

_DEDUP_TO_METRIC = {
    "raw": "raw",
    "coverage": "cov-unique",
    "stackhash": "stackhash",
    "groundtruth": "ground-truth-bugs",
}

_SERIES_COLORS = ("#1f77b4", "#d62728")


class _CliParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliParseError(message)


def _parse_checkpoints(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"bad --checkpoints value: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuzzeval", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, *, config=False, out=False):
        if config:
            p.add_argument("--config", required=True, help="campaign config JSON")
        if out:
            p.add_argument("--out", required=True, help="results directory")

    p_run = sub.add_parser("run", help="run a campaign and persist trial JSONs")
    common(p_run, config=True, out=True)
    p_run.add_argument("--trials", type=int, help="override trials per cell")
    p_run.add_argument("--timeout", type=float, help="override per-trial deadline (seconds)")
    p_run.add_argument("--jobs", type=int, help="override worker count")
    p_run.add_argument("--rng-seed", type=int, help="override master rng seed")
    p_run.add_argument("--checkpoints", help="override checkpoints (comma-separated seconds)")
    p_run.set_defaults(func=_cmd_run, simulated_only=False)

    p_sim = sub.add_parser("simulate", help="run a simulated-fuzzer campaign")
    common(p_sim, config=True, out=True)
    for flag, typ in (("--trials", int), ("--timeout", float), ("--jobs", int),
                      ("--rng-seed", int)):
        p_sim.add_argument(flag, type=typ)
    p_sim.add_argument("--checkpoints")
    p_sim.set_defaults(func=_cmd_run, simulated_only=True)

    p_cmp = sub.add_parser("compare", help="compare fuzzer A vs B from trial JSONs")
    common(p_cmp, out=True)
    p_cmp.add_argument("--dedup", choices=sorted(_DEDUP_TO_METRIC), default="raw",
                       help="crash counting metric")
    p_cmp.add_argument("--frames", type=int, default=3, help="stack hash depth")
    p_cmp.add_argument("--checkpoints", help="comparison times (default: campaign checkpoints)")
    p_cmp.add_argument("--level", type=float, default=0.95, help="median CI level")
    p_cmp.set_defaults(func=_cmd_compare)

    p_tri = sub.add_parser("triage", help="de-duplicate the crash corpus")
    common(p_tri, out=True)
    p_tri.add_argument("--dedup", choices=sorted(_DEDUP_TO_METRIC), required=True)
    p_tri.add_argument("--frames", type=int, default=3)
    p_tri.set_defaults(func=_cmd_triage)

    p_rep = sub.add_parser("report", help="write SVG band plots from trial JSONs")
    common(p_rep, out=True)
    p_rep.add_argument("--level", type=float, default=0.95)
    p_rep.set_defaults(func=_cmd_report)

    return parser


def _load_config(args) -> cp.CampaignConfig:
    text = Path(args.config).read_text()
    config = cp.config_from_jsonable(json.loads(text))
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.timeout is not None:
        overrides["deadline"] = args.timeout
        overrides["checkpoints"] = ()
    if args.jobs is not None:
        overrides["workers"] = args.jobs
    if args.rng_seed is not None:
        overrides["master_rng_seed"] = args.rng_seed
    if args.checkpoints is not None:
        overrides["checkpoints"] = _parse_checkpoints(args.checkpoints)
    return replace(config, **overrides) if overrides else config


def _cmd_run(args) -> int:
    config = _load_config(args)
    if args.simulated_only:
        for fuzzer in (config.fuzzer_a, config.fuzzer_b):
            if not isinstance(fuzzer, cp.SimulatedFuzzer):
                raise ConfigError(
                    f"simulate requires stochastic profiles; {fuzzer.fuzzer_id!r} is not one")
    result = cp.run_campaign(config, out_dir=args.out)
    print(f"wrote {len(result.records)} trials to {args.out}")
    return 0


def _cmd_compare(args) -> int:
    result = cp.load_campaign(args.out)
    config = result.config
    times = (_parse_checkpoints(args.checkpoints) if args.checkpoints is not None
             else config.checkpoints)
    metric = _DEDUP_TO_METRIC[args.dedup]
    rows = []
    for target in config.targets:
        for seed in config.seed_configs:
            trials_a = result.cell(config.fuzzer_a.fuzzer_id, target.target_id, seed.id)
            trials_b = result.cell(config.fuzzer_b.fuzzer_id, target.target_id, seed.id)
            for t in times:
                res = cp.compare(trials_a, trials_b, t, metric=metric,
                                 level=args.level, frames=args.frames)
                rows.append((target.target_id, seed.id, res))
    sys.stdout.write(emit_comparison_table(rows))
    return 0


def _crash_corpus(result: cp.CampaignResult):
    """All crash events, with the trial they came from, in stable order."""
    for key in sorted(result.records, key=lambda k: (k.fuzzer_id, k.target_id,
                                                     k.seed_config_id, k.trial_index)):
        trial = result.records[key]
        for ev in trial.crashes:
            yield key, trial, ev


def _cmd_triage(args) -> int:
    result = cp.load_campaign(args.out)
    out = sys.stdout
    if args.dedup == "groundtruth":
        families = {t.family for t in result.config.targets}
        if families != {"versioned-family"}:
            raise ConfigError("groundtruth triage needs versioned-family targets")
        inputs = sorted({ev.input for _, _, ev in _crash_corpus(result)})
        labels = triage_versions(inputs, versioned_targets())
        hashes = {data: stack_hash_for(result, data, args.frames) for data in inputs}
        out.write(dedup_table_csv(dedup_report(labels, hashes)))
        return 0
    if args.dedup == "stackhash":
        clusters: dict[str, int] = {}
        for _, _, ev in _crash_corpus(result):
            h = stack_hash(ev.trace, args.frames)
            clusters[h] = clusters.get(h, 0) + 1
        _write_clusters(out, sorted(clusters.items()))
        return 0
    if args.dedup == "coverage":
        rows = []
        for key in sorted(result.records, key=lambda k: (k.fuzzer_id, k.target_id,
                                                         k.seed_config_id, k.trial_index)):
            trial = result.records[key]
            flags = coverage_unique_online(trial.crashes) if trial.crashes else []
            for i, flag in enumerate(flags):
                if flag:
                    rows.append((f"{trial.fuzzer_id}/{trial.trial_index}#{i}", 1))
        _write_clusters(out, rows)
        return 0
    rows = [(f"input-{i}", 1)
            for i, _ in enumerate(_crash_corpus(result))]
    _write_clusters(out, rows)
    return 0


def stack_hash_for(result: cp.CampaignResult, data: bytes, frames: int) -> str:
    for _, _, ev in _crash_corpus(result):
        if ev.input == data:
            return stack_hash(ev.trace, frames)
    raise ValueError(f"input {data!r} not found in the crash corpus")


def _write_clusters(out, rows) -> None:
    out.write("cluster,size\n")
    for name, size in rows:
        out.write(f"{name},{size}\n")


def _cmd_report(args) -> int:
    result = cp.load_campaign(args.out)
    config = result.config
    grid = [config.deadline * i / 100 for i in range(101)]
    written = 0
    for target in config.targets:
        for seed in config.seed_configs:
            series = []
            for fuzzer, color in zip((config.fuzzer_a, config.fuzzer_b), _SERIES_COLORS):
                trials = result.cell(fuzzer.fuzzer_id, target.target_id, seed.id)
                if not trials:
                    continue
                bands = aggregate_band(
                    [CrashTimeSeries.from_event_times([ev.at for ev in tr.crashes])
                     for tr in trials],
                    grid, level=args.level)
                series.append(PlotSeries(label=fuzzer.fuzzer_id, band=bands, color=color))
            if not series:
                continue
            spec = PlotSpec(title=f"{target.target_id} / {seed.id}",
                            series=tuple(series))
            name = f"plot__{cp._safe(target.target_id)}__{cp._safe(seed.id)}.svg"
            (Path(args.out) / name).write_text(emit_svg_plot(spec))
            written += 1
    print(f"wrote {written} plots to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _CliParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version paths
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FuzzEvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
