"""
Field Theory Toolkit
Command-line entry point: transport, holonomy, evaluate, verify, classify, glue
"""

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from bordism import covering_degree, glue_family
from bundle import check_compatibility, holonomy, parallel_transport
from classifier import FieldTheoryClassifier, FieldTheoryOracle
from field_theory import FieldTheoryEvaluator
from geometry import settings
from geometry.errors import FieldTheoryError
from geometry.schemas import Command, ResidualReport, RunConfig
from input_parser import ParsedInput, parse_input
from reports import Report, format_number
from sample_data import random_bordisms
from verification import AcceptanceSuite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

CRITERIA_LABELS = {
    "criterion": "#",
    "name": "Critère",
    "cases": "Cas",
    "max_residual": "Résidu max",
    "tolerance": "Tolérance",
    "passed": "Verdict",
    "detail": "Détail",
}


class InputError(Exception):
    """Input files could not be read or violate an invariant"""


def _load(config: RunConfig) -> List[ParsedInput]:
    if not config.inputs and config.command != Command.verify:
        raise InputError(f"`{config.command.value}` needs at least one --input file")
    parsed = []
    for path in config.inputs:
        try:
            parsed.append(parse_input(path, config.grid if config.command == Command.evaluate else None))
        except OSError as e:
            raise InputError(f"cannot read {path}: {e.strerror}") from e
        except FieldTheoryError as e:
            raise InputError(f"{path}: {e}") from e
    return parsed


def _require(parsed: ParsedInput, what: str):
    value = getattr(parsed, what)
    if value is None:
        raise InputError(f"{parsed.source} has no [{what}] section")
    return value


# Commands

def run_transport(config: RunConfig, inputs: List[ParsedInput], report: Report) -> bool:
    for parsed in inputs:
        bundle, path = _require(parsed, "bundle"), _require(parsed, "path")
        a, b = parsed.interval
        P = parallel_transport(bundle, path, a, b)
        report.add_matrix(f"{parsed.source}: P(gamma; {format_number(a)}, {format_number(b)})", P)
        report.set(f"{parsed.source}.det", float(np.linalg.det(P)))
        print(f"✅ transport over [{a:.6g}, {b:.6g}] in {parsed.source}")
    return True


def run_holonomy(config: RunConfig, inputs: List[ParsedInput], report: Report) -> bool:
    for parsed in inputs:
        bundle, loop = _require(parsed, "bundle"), _require(parsed, "path")
        if loop.period is None:
            raise InputError(f"{parsed.source}: holonomy needs `period` in [path]")
        H = holonomy(bundle, loop)
        report.add_matrix(f"{parsed.source}: holonomy", H)
        report.set(f"{parsed.source}.trace", float(np.trace(H)))
        print(f"✅ holonomy trace {np.trace(H):.12g} ({parsed.source})")
    return True


def run_evaluate(config: RunConfig, inputs: List[ParsedInput], report: Report) -> bool:
    for parsed in inputs:
        tft = parsed.tft(config.oriented)
        evaluator = FieldTheoryEvaluator(tft)
        bordism = parsed.bordism()
        result, smoothness = evaluator.evaluate_family(bordism)
        report.add_evaluation(f"{parsed.source}: Z(bordism)", result)
        report.set(f"{parsed.source}.fibers", len(result.fibers))
        report.set(f"{parsed.source}.incoming", covering_degree(bordism, 0))
        report.set(f"{parsed.source}.outgoing", covering_degree(bordism, bordism.level))
        if len(result.fibers) > 2:
            report.set(f"{parsed.source}.smoothness", smoothness)
        if result.is_scalar:
            report.set(f"{parsed.source}.value", result.scalar)
        print(f"✅ evaluated {len(parsed.components)} component(s) from {parsed.source}")
    return True


def _input_checks(parsed: ParsedInput) -> List[ResidualReport]:
    """Per-file checks run by `verify` next to the acceptance suite"""
    checks = []
    bundle = parsed.bundle
    if bundle is None:
        return checks
    if bundle.compatible:
        compatibility = check_compatibility(bundle)
        checks.append(ResidualReport(name=f"{parsed.source}: compatibility", residual=compatibility.max_residual,
                                     tolerance=compatibility.tolerance, passed=compatibility.passed))
        evaluator = FieldTheoryEvaluator(parsed.tft())
        if parsed.path is not None and parsed.path.period is None:
            a, b = parsed.interval
            residual = evaluator.snake_check(parsed.path, a, b)
            checks.append(ResidualReport(name=f"{parsed.source}: snake identity", residual=residual,
                                         tolerance=evaluator.SNAKE_TOL, passed=residual <= evaluator.SNAKE_TOL))
        if parsed.path is not None and parsed.path.period is not None:
            residual = evaluator.reversal_residual(parsed.path)
            checks.append(ResidualReport(name=f"{parsed.source}: circle reversal", residual=residual,
                                         tolerance=evaluator.SNAKE_TOL, passed=residual <= evaluator.SNAKE_TOL))
    return checks


def run_verify(config: RunConfig, inputs: List[ParsedInput], report: Report) -> bool:
    print("🚀 Running the acceptance suite...")
    results = AcceptanceSuite(config.seed).run()
    report.add_table("acceptance criteria", results,
                     columns=["criterion", "name", "cases", "max_residual", "tolerance", "passed", "detail"],
                     labels=CRITERIA_LABELS)
    for result in results:
        report.set(f"criterion.{result.criterion:02d}.passed", result.passed)
        report.set(f"criterion.{result.criterion:02d}.max_residual", result.max_residual)
        print(f"{'✅' if result.passed else '❌'} {result.criterion:2d}. {result.name} ({result.seconds:.1f}s)")

    checks = [check for parsed in inputs for check in _input_checks(parsed)]
    if checks:
        report.add_table("input checks", checks, columns=["name", "residual", "tolerance", "passed"])
    failed = [f"criterion {r.criterion} ({r.name})" for r in results if not r.passed]
    failed += [c.name for c in checks if not c.passed]
    report.set("verify.passed", not failed)
    if failed:
        report.set("verify.first_failure", failed[0])
        print(f"❌ first failing item: {failed[0]}")
    return not failed


def run_classify(config: RunConfig, inputs: List[ParsedInput], report: Report) -> bool:
    passed = True
    for parsed in inputs:
        bundle = _require(parsed, "bundle")
        options = parsed.classify
        oriented = bool(options.get("oriented", config.oriented))
        seed = int(options.get("seed", config.seed))
        per_axis = config.grid or int(options.get("per_axis", 3))
        classifier = FieldTheoryClassifier(seed)

        oracle = FieldTheoryOracle(bundle, oriented=oriented)
        preflight = classifier.preflight(oracle)
        report.add_table(f"{parsed.source}: preflight", preflight.checks,
                         columns=["name", "residual", "tolerance", "passed"])
        if not preflight.passed:
            print(f"❌ preflight failed: {', '.join(preflight.violations)}")
            passed = False
            continue

        rng = np.random.default_rng(seed)
        samples = random_bordisms(rng, bundle.domain, int(options.get("samples", 20)), oriented=oriented)
        result = classifier.roundtrip(oracle, samples, per_axis=per_axis, nodes=options.get("nodes"))
        report.add_table(f"{parsed.source}: round trip", [
            {"sample": k, "kind": kind, "deviation": deviation}
            for k, (kind, deviation) in enumerate(zip(result.sample_kinds, result.deviations))
        ])
        if result.beta is not None:
            report.add_matrix(f"{parsed.source}: beta at {result.grid[0]}", result.beta[0])
        for mu, omega in enumerate(result.omega[0]):
            report.add_matrix(f"{parsed.source}: omega_{mu + 1} at {result.grid[0]}", omega)
        report.add_table(f"{parsed.source}: finite-difference orders", [
            {"point": k, "coarse": pair[0], "fine": pair[1], "order": order}
            for k, (pair, order) in enumerate(zip(result.residual_pairs, result.order_estimates))
        ])
        prefix = parsed.source
        report.set(f"{prefix}.max_deviation", result.max_deviation)
        report.set(f"{prefix}.passed", result.passed)
        report.set(f"{prefix}.fd_step", result.fd_step)
        if result.signature is not None:
            report.set(f"{prefix}.signature", " ".join(f"{v:+d}" for v in result.signature))
        if result.compatibility_residual is not None:
            report.set(f"{prefix}.compatibility_residual", result.compatibility_residual)
        report.add_text(f"{prefix}: note", [result.note])
        print(f"{'✅' if result.passed else '❌'} round trip deviation {result.max_deviation:.3e} ({prefix})")
        passed = passed and result.passed
    return passed


def run_glue(config: RunConfig, inputs: List[ParsedInput], report: Report) -> bool:
    passed = True
    for parsed in inputs:
        gluing = _require(parsed, "glue")
        evaluator = FieldTheoryEvaluator(parsed.tft(config.oriented))
        glued = glue_family(gluing.first, gluing.second, gluing.overlap, gluing.partition)
        result = evaluator.compare_gluing(gluing.first, gluing.second, glued)
        report.add_evaluation(f"{parsed.source}: glued family", evaluator.evaluate(glued))
        report.set(f"{parsed.source}.max_deviation", result.max_deviation)
        report.set(f"{parsed.source}.partition_error", result.partition_error)
        report.set(f"{parsed.source}.passed", result.passed)
        print(f"{'✅' if result.passed else '❌'} glued family deviation {result.max_deviation:.3e} ({parsed.source})")
        passed = passed and result.passed
    return passed


COMMANDS = {
    Command.transport: run_transport,
    Command.holonomy: run_holonomy,
    Command.evaluate: run_evaluate,
    Command.verify: run_verify,
    Command.classify: run_classify,
    Command.glue: run_glue,
}


def run(config: RunConfig) -> int:
    """
    Dispatch one command and write its report

    Exit status: 0 pass, 1 verification failure, 2 input error,
    3 numerical failure.
    """
    if config.tol is not None:
        settings.RTOL = config.tol
    report = Report(f"{config.command.value} (seed {config.seed})")
    try:
        inputs = _load(config)
        passed = COMMANDS[config.command](config, inputs, report)
    except InputError as e:
        print(f"❌ input error: {e}")
        return EXIT_INPUT
    except FieldTheoryError as e:
        print(f"❌ numerical failure: {e}")
        logger.debug("numerical failure", exc_info=True)
        return EXIT_NUMERICAL

    report.set("command", config.command.value)
    report.set("passed", passed)
    for key, value in settings.get_settings().items():
        report.set(f"settings.{key}", value)
    text = report.write(config.report)
    if not config.report:
        print(text)
    else:
        print(f"📊 report written to {config.report}")
    return EXIT_OK if passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Numerical one-dimensional field theories over a box in R^m")
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--input", dest="inputs", action="append", default=[], metavar="PATH",
                        help="description file (repeatable)")
    parser.add_argument("--tol", type=float, help="integrator relative tolerance")
    parser.add_argument("--grid", type=int, help="family grid size (evaluate) or points per axis (classify)")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.add_argument("--report", help="write the report to this path instead of stdout")
    parser.add_argument("--oriented", action="store_true", help="use the oriented functor")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(**vars(args))
    except ValueError as e:
        print(f"❌ invalid options: {e}")
        return EXIT_INPUT
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
