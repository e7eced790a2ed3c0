"""Command-line entry points.

    prsynth synth    --scenario <path|benchmark|planar-test> --family RUS
                     --seed 1 --out results/ [--generations N] [--particles N]
                     [--jobs N]
    prsynth eval     --params design.yaml --scenario <...> [--archive a.csv]
                     [--out results/]
    prsynth validate --scenario <path>

The default output directory can also be set via the PRSYNTH_OUT
environment variable.  Exit codes: 0 success, 2 validation failure,
3 no feasible solution.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np
import yaml

from .families import FAMILIES, get_family
from .kinematics import solve_ik
from .model import RobotModel
from .objectives import OBJECTIVE_UNITS
from .optimizer import (FitnessEvaluator, SynthesisConfig, run_synthesis)
from .reporting import (PROJECTION_PAIRS, front_svg, radar_normalization,
                        radar_svg, read_archive_csv, sketch_json, sketch_svg,
                        write_archive_csv)
from .scenario import ScenarioFormatError, resolve_scenario

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_SOLUTION = 3


def _out_dir(args) -> str:
    out = args.out or os.environ.get("PRSYNTH_OUT", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _slug(name: str) -> str:
    return name.replace("/", "-")


def cmd_synth(args) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
    except (ScenarioFormatError, OSError) as err:
        print(f"scenario error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    out = _out_dir(args)
    total_entries = 0
    for fam_name in args.family:
        family = get_family(fam_name)
        slug = _slug(family.name)
        config = SynthesisConfig(
            particles=args.particles, generations=args.generations,
            seed=args.seed, jobs=args.jobs,
            checkpoint_path=os.path.join(out, f"checkpoint_{slug}.json"))
        log.info("synthesizing %s (%d particles, %d generations, seed %d)",
                 family.name, args.particles, args.generations, args.seed)
        result = run_synthesis(scenario, family, config)
        records = result.archive.records
        total_entries += len(records)
        write_archive_csv(records, family.name,
                          os.path.join(out, f"archive_{slug}.csv"))
        for pair in PROJECTION_PAIRS:
            svg = front_svg(records, pair)
            path = os.path.join(out, f"front_{slug}_{pair[0]}_{pair[1]}.svg")
            with open(path, "w") as fh:
                fh.write(svg)
        with open(os.path.join(out, f"report_{slug}.txt"), "w") as fh:
            fh.write(result.report.as_text())
        print(result.report.as_text())
    return EXIT_OK if total_entries > 0 else EXIT_NO_SOLUTION


def _load_params_file(path: str) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict) or "family" not in data or "p" not in data:
        raise ScenarioFormatError(
            "params file needs at least 'family' and 'p' entries")
    return data


def cmd_eval(args) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
        spec = _load_params_file(args.params)
    except (ScenarioFormatError, OSError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    family = get_family(spec["family"])
    p = np.asarray(spec["p"], dtype=float)
    pattern = spec.get("mode_pattern", "out")

    config = SynthesisConfig(particles=2, generations=1)
    evaluator = FitnessEvaluator(scenario, family, config)
    patterns = config.mode_patterns
    selector = (patterns.index(pattern) + 0.5) / len(patterns)
    report = evaluator.evaluate(np.append(p, selector))

    out = _out_dir(args)
    slug = _slug(family.name)
    summary = {
        "family": family.name,
        "mode_pattern": pattern,
        "feasible": report.feasible,
        "stage_failed": report.stage_failed,
        "stages_run": report.stages_run,
        "detail": report.detail,
    }
    if report.feasible:
        o = report.objectives
        summary["objectives"] = {k: getattr(o, k)
                                 for k in ("f1", "f2", "f3", "f4", "f5", "f6")}
        summary["aux"] = {"position_error": o.position_error,
                          "condition": o.condition,
                          "stress_utilization": o.stress_utilization}
        summary["soft_violations"] = {k: bool(v) for k, v in o.soft_flags.items()}
        summary["design_section"] = list(report.design_section)

        if args.archive:
            reference = read_archive_csv(args.archive)
            if reference:
                norm = radar_normalization(reference)
                svg = radar_svg([("candidate", o)], norm)
                with open(os.path.join(out, f"radar_{slug}.svg"), "w") as fh:
                    fh.write(svg)

        model = RobotModel(family, p,
                           platform_extra_mass=scenario.platform_extra_mass)
        if report.design_section:
            model = model.with_section(*report.design_section)
        state = solve_ik(model, scenario.reference_points[0], pattern)
        with open(os.path.join(out, f"sketch_{slug}.svg"), "w") as fh:
            fh.write(sketch_svg(model, state))
        with open(os.path.join(out, f"sketch_{slug}.json"), "w") as fh:
            fh.write(sketch_json(model, state))

    with open(os.path.join(out, f"eval_{slug}.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    print(json.dumps(summary, indent=1, sort_keys=True))
    return EXIT_OK if report.feasible else EXIT_NO_SOLUTION


def cmd_validate(args) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
    except ScenarioFormatError as err:
        print(f"invalid scenario: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as err:
        print(f"cannot read scenario: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"scenario '{scenario.name}' is valid: dof={scenario.dof}, "
          f"{scenario.reference_points.shape[0]} reference points, "
          f"{len(scenario.trajectory)} trajectory samples")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prsynth",
        description="Dimensional synthesis of fully parallel robots with "
                    "collaboration-safety and drive-load objectives.")
    parser.add_argument("--verbose", action="store_true",
                        help="enable info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="run a synthesis")
    p_synth.add_argument("--scenario", required=True,
                         help="scenario file or builtin name "
                              "(benchmark, planar-test)")
    p_synth.add_argument("--family", action="append", required=True,
                         choices=sorted(FAMILIES),
                         help="leg-chain family (repeatable)")
    p_synth.add_argument("--seed", type=int, required=True,
                         help="random seed (mandatory for reproducibility)")
    p_synth.add_argument("--out", default=None, help="output directory")
    p_synth.add_argument("--generations", type=int, default=100)
    p_synth.add_argument("--particles", type=int, default=100)
    p_synth.add_argument("--jobs", type=int, default=1,
                         help="parallel fitness evaluations")
    p_synth.set_defaults(func=cmd_synth)

    p_eval = sub.add_parser("eval", help="evaluate one parameter vector")
    p_eval.add_argument("--params", required=True,
                        help="YAML file with family, p, mode_pattern")
    p_eval.add_argument("--scenario", required=True)
    p_eval.add_argument("--archive", default=None,
                        help="archive CSV for radar normalization")
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("--scenario", required=True)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
