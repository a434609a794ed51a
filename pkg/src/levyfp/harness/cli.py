"""Command line: ``levyfp <pipeline> [--config FILE] [--scenario NAME] [--seed N] [--out DIR] [--format csv|json]``.

Exit status: 0 when every tolerance holds, 1 when a tolerance fails, 2 on
any error (invalid config, inadmissible parameters, unstable step, ...).
"""

import argparse
import json
import sys

from ..errors import LevyFPError
from .config import PIPELINES, ExperimentConfig
from .runner import run
from .scenarios import SCENARIOS

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def build_parser():
    ap = argparse.ArgumentParser(prog="levyfp", description="Stable-noise Fokker-Planck laboratory")
    ap.add_argument("pipeline", choices=PIPELINES + ("scenarios",),
                    help="pipeline to run, or 'scenarios' to list the built-in scenarios")
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--scenario", choices=sorted(SCENARIOS), help="built-in scenario to start from")
    ap.add_argument("--seed", type=int, help="Monte Carlo seed (overrides mc.seed)")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--format", choices=("csv", "json"), help="report format (overrides output.format)")
    return ap


def load_config(args):
    """Merge scenario, config file and command-line overrides into a validated config."""
    d = {}
    if args.config:
        with open(args.config) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as e:
                raise LevyFPError(f"cannot parse {args.config}: {e}") from e
    if args.scenario:
        d.setdefault("scenario", args.scenario)
        if d["scenario"] != args.scenario:
            raise LevyFPError(f"--scenario {args.scenario} conflicts with scenario {d['scenario']!r} in the config")
    d["pipeline"] = args.pipeline
    if args.format:
        d.setdefault("output", {})["format"] = args.format
    return ExperimentConfig.from_dict(d)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.pipeline == "scenarios":
        for name, fn in sorted(SCENARIOS.items()):
            doc = (fn.__doc__ or "").strip().splitlines()[0]
            print(f"{name:22s} {fn()['pipeline']:10s} {doc}")
        return EXIT_PASS
    try:
        cfg = load_config(args)
        rep = run(cfg, out_dir=args.out, seed=args.seed)
    except (LevyFPError, OSError) as e:
        print(f"levyfp: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    status = "PASS" if rep.passed else "FAIL"
    print(f"{status} {rep.scenario}/{rep.pipeline} -> {cfg['output']['dir'] if args.out is None else args.out}")
    for k, v in sorted(rep.to_dict()["metrics"].items()):
        print(f"  {k} = {v!r}")
    for f in rep.flags:
        print(f"  flag: {f}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
