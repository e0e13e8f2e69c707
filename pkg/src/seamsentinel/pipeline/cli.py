"""Command line entry point: ``seamsentinel <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from seamsentinel import cwt as cwt_mod
from seamsentinel.pipeline import commands as cmd
from seamsentinel.pipeline.config import ConfigError, PipelineConfig, load_config
from seamsentinel.sim import SpecError

log = logging.getLogger("seamsentinel")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_config_args(p: argparse.ArgumentParser, scenario_required: bool = False) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="key=value config file")
    g.add_argument("--scenario", help="wear | blade_defect | stability | belt")
    g.add_argument("--seed", type=int)
    g.add_argument("--axis", help="X, Y or Z")
    g.add_argument("--scheme", help="WpdRms or Statistical")
    g.add_argument("--window-seconds", type=float, dest="window_seconds")
    g.add_argument("--validation-ratio", type=float, dest="validation_ratio")
    g.add_argument("--classifiers", help="comma list out of svm,forest")
    g.add_argument("--durations", help="per-class recording durations in seconds, comma list")
    g.add_argument("--force", action="store_true", help="ignore config hash mismatches")


def _config(args, fallback_scenario=None) -> PipelineConfig:
    flags = {k: getattr(args, k, None) for k in
             ("seed", "axis", "scheme", "window_seconds", "validation_ratio",
              "classifiers", "durations")}
    if args.config is not None:
        cfg = load_config(args.config)
        if args.scenario:
            cfg = cfg.updated({"scenario": args.scenario})
    else:
        scenario = args.scenario or fallback_scenario
        if scenario is None:
            raise ConfigError("--scenario or --config is required")
        try:
            cfg = PipelineConfig.for_scenario(scenario)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg.updated(flags)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seamsentinel",
                     description="Vibration-based condition monitoring for round-seam milling.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate synthetic labeled recordings")
    _add_config_args(p)
    p.add_argument("--out", type=Path, default=Path("recordings"))

    p = sub.add_parser("featurize", help="window recordings and extract features")
    _add_config_args(p)
    p.add_argument("recordings", nargs="*", type=Path)
    p.add_argument("--out", type=Path, default=Path("dataset.csv"))
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("train", help="train classifiers on a dataset CSV")
    _add_config_args(p)
    p.add_argument("dataset", type=Path)
    p.add_argument("--out", type=Path, default=Path("models"))
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("evaluate", help="evaluate a model file on a dataset CSV")
    p.add_argument("model", type=Path)
    p.add_argument("dataset", type=Path)
    p.add_argument("--split", choices=("all", "validation"), default="all")
    p.add_argument("--json", action="store_true")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("importance", help="rank features of a forest model")
    p.add_argument("model", type=Path)

    p = sub.add_parser("scalogram", help="export a CWT scalogram of a recording")
    p.add_argument("recording", type=Path)
    p.add_argument("--wavelet", default="morlet",
                   help="gaussian[:order] | morlet[:fc] | shannon[:fb:fc]")
    p.add_argument("--scales", default="5:60:0.5", help="start:stop:step or comma list")
    p.add_argument("--axis", default="Y")
    p.add_argument("--start", type=float, default=0.0, help="segment start (s)")
    p.add_argument("--duration", type=float, default=2.0, help="segment length (s)")
    p.add_argument("--format", choices=("csv", "pgm"), default="csv")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("predict", help="classify every window of a recording")
    _add_config_args(p)
    p.add_argument("model", type=Path)
    p.add_argument("recording", type=Path)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"seamsentinel: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except (ConfigError, SpecError, UsageError) as exc:
        print(f"seamsentinel: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"seamsentinel: failed: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    c = args.command
    if c == "simulate":
        cfg = _config(args)
        for path in cmd.cmd_simulate(cfg, args.out):
            print(path)
    elif c == "featurize":
        if not args.recordings:
            raise cmd.PipelineError("no recordings given")
        cfg = _config(args, _scenario_of_recordings(args.recordings))
        ds = cmd.cmd_featurize(cfg, args.recordings, args.out, args.jobs, args.force)
        print(f"{args.out}: {len(ds)} rows x {len(ds.names)} features")
    elif c == "train":
        cfg = _config(args, cmd.load_dataset(args.dataset).dataset.scenario)
        reports = cmd.cmd_train(cfg, args.dataset, args.out, args.jobs, args.force)
        for name, rep in reports.items():
            print(f"{name}: validation accuracy {rep.validation_accuracy:.4f}")
    elif c == "evaluate":
        rep = cmd.cmd_evaluate(args.model, args.dataset, args.split, args.force)
        print(rep.to_json() if args.json else rep.to_text())
    elif c == "importance":
        for rank, (name, value) in enumerate(cmd.cmd_importance(args.model), 1):
            print(f"{rank:>3d}  {name:<28s} {value:.6f}")
    elif c == "scalogram":
        wavelet = cwt_mod.WaveletSpec.parse(args.wavelet)
        scales = cwt_mod.parse_scales(args.scales)
        sc = cmd.cmd_scalogram(args.recording, wavelet, scales, args.out, args.axis,
                               args.start, args.duration, args.format)
        print(f"{args.out}: {sc.magnitudes.shape[0]} scales x {sc.magnitudes.shape[1]} samples")
    elif c == "predict":
        from seamsentinel.classify import load_model
        model = load_model(args.model)
        cfg = _config(args, model.scenario)
        rows, modal = cmd.cmd_predict(args.model, args.recording, cfg, args.force)
        for offset, label in rows:
            print(f"{offset:10.3f}  {label}")
        print(f"modal: {modal}")
    return 0


def _scenario_of_recordings(paths):
    from seamsentinel.signal import load_recording
    rec = load_recording(paths[0])
    if rec.condition is not None:
        return rec.condition.scenario
    return rec.extra.get("scenario")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
