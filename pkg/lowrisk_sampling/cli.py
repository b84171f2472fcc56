"""Operator command line: pathway state commands, simulations and sweeps.

State commands (``init``, ``record``, ``recommend``, ``status``, ``compare``)
work on the JSON state file; ``simulate`` and ``sweep`` run spec files and
emit CSV or JSON. Errors map to exit codes through ``SamplingError.exit_code``
(2 validation, 3 not low risk or red status, 4 no solution).

Updates: v0.1.0 - 2026-10-16 - Added subcommands, output rendering and exit codes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Mapping, Sequence
from dataclasses import replace
from pathlib import Path
from typing import Any

from .config import (
    DEFAULT_CHANGE_LEVEL,
    DEFAULT_CREDIBLE_LEVEL,
    DEFAULT_SEED,
    DEFAULT_TARGET,
    DEFAULT_T_RISK,
    DEFAULT_WINDOW_LEN,
    DEFAULT_WORKERS,
    resolve_state_path,
)
from .errors import SamplingError, ValidationError
from .main import APP_METADATA, run_diagnostics
from .models import ColourStatus, Method, SizingMode
from .reporting import render_csv, render_json, write_run
from .scenarios import (
    ScenarioSpec,
    SizingSweepSpec,
    Spec,
    StatusSweepSpec,
    load_spec,
    run_spec,
)
from .simulator import SimulationConfig, compare_methods
from .state_store import (
    PathwayConfig,
    PathwayState,
    audit_state,
    init_state,
    load_state,
    recommendation_for,
    record_batch,
    save_state,
    state_lock,
)
from .utils import atomic_write_text, config_hash, format_probability

logger = logging.getLogger(__name__)

MAX_ERROR_LENGTH = 400
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(message)s"

Handler = Callable[[argparse.Namespace], int]


def configure_logging(verbosity: int) -> None:
    """Configure the root logger once: WARNING, INFO with -v, DEBUG with -vv."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt="%H:%M:%S")


def render_error(error: BaseException) -> str:
    """Return a bounded one-line message for ``error``."""
    message = " ".join(str(error).split()) or type(error).__name__
    if len(message) > MAX_ERROR_LENGTH:
        message = message[: MAX_ERROR_LENGTH - 3] + "..."
    return f"error: {message}"


# --- argument helpers --------------------------------------------------------


def parse_count_pair(text: str) -> tuple[int, int]:
    """Parse an ``N:Y`` prior batch."""
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected N:Y, got {text!r}")
    try:
        n, y = (int(part) for part in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers in N:Y, got {text!r}") from exc
    if n < 0 or y < 0 or y > n:
        raise argparse.ArgumentTypeError(f"need 0 <= Y <= N, got {text!r}")
    return n, y


def parse_meta(text: str) -> tuple[str, str]:
    """Parse a ``key=value`` metadata item."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def _add_global_options(parser: argparse.ArgumentParser, *, suppress: bool) -> None:
    # Subparsers repeat the globals with SUPPRESS so they may follow the command.
    default: Any = argparse.SUPPRESS if suppress else None
    parser.add_argument("--state", default=default, help="pathway state file")
    parser.add_argument("--seed", type=int, default=default, help="random seed")
    parser.add_argument(
        "--mode",
        choices=[mode.value for mode in SizingMode],
        default=default,
        help="binomial evaluation mode for sizing",
    )
    parser.add_argument("--out", type=Path, default=default, help="output path")
    parser.add_argument(
        "--format", choices=("csv", "json"), default=default, help="output format"
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=argparse.SUPPRESS if suppress else 0,
        help="increase log verbosity (-v info, -vv debug)",
    )


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser for every subcommand."""
    parser = argparse.ArgumentParser(
        prog="lowrisk-sampling", description=APP_METADATA.description
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"{APP_METADATA.name} {APP_METADATA.version}",
    )
    _add_global_options(parser, suppress=False)
    subparsers = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        _add_global_options(sub, suppress=True)
        sub.set_defaults(handler=handler)
        return sub

    init = command("init", cmd_init, "create a pathway state from prior batches")
    init.add_argument("--t-risk", type=float, default=DEFAULT_T_RISK)
    init.add_argument("--credible-level", type=float, default=DEFAULT_CREDIBLE_LEVEL)
    init.add_argument("--change-level", type=float, default=DEFAULT_CHANGE_LEVEL)
    init.add_argument(
        "--window-len",
        type=int,
        default=DEFAULT_WINDOW_LEN,
        help="batches kept in the evidence window (0 keeps every batch)",
    )
    init.add_argument("--target", type=float, default=DEFAULT_TARGET)
    init.add_argument(
        "--prior",
        type=parse_count_pair,
        action="append",
        default=[],
        metavar="N:Y",
        help="prior batch counts, oldest first (repeatable)",
    )
    init.add_argument("--force", action="store_true", help="overwrite existing state")

    command("recommend", cmd_recommend, "print the next-period sample size")

    record = command("record", cmd_record, "record one period's inspection counts")
    record.add_argument("n", type=int, help="units inspected")
    record.add_argument("y", type=int, help="units found contaminated")
    record.add_argument(
        "--meta",
        type=parse_meta,
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="opaque metadata stored on the batch (repeatable)",
    )

    status = command("status", cmd_status, "print the current pathway status")
    status.add_argument(
        "--audit", action="store_true", help="verify the cache by replaying history"
    )

    simulate = command("simulate", cmd_simulate, "run a scenario spec")
    simulate.add_argument("--spec", required=True, help="bundled spec name or path")
    simulate.add_argument(
        "--method",
        choices=[*(method.value for method in Method), "all"],
        default=None,
    )
    simulate.add_argument("--replicates", type=int, default=None)
    simulate.add_argument("--workers", type=int, default=DEFAULT_WORKERS)

    sweep = command("sweep", cmd_sweep, "run a status or sizing sweep spec")
    sweep.add_argument("--spec", required=True, help="bundled spec name or path")
    sweep.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
    sweep.add_argument("--iterations", type=int, default=None)

    command("compare", cmd_compare, "compare next-period sizes of every method")
    command("check", cmd_check, "print a readiness report")
    return parser


# --- output ------------------------------------------------------------------


def _scalar(value: Any) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return format_probability(value)
    return str(value)


def _text_lines(payload: Mapping[str, Any], prefix: str = "") -> list[str]:
    lines: list[str] = []
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            lines.extend(_text_lines(value, prefix=f"{name}."))
        elif isinstance(value, list) and value and isinstance(value[0], Mapping):
            for index, item in enumerate(value):
                lines.extend(_text_lines(item, prefix=f"{name}[{index}]."))
        else:
            lines.append(f"{name}: {_scalar(value)}")
    return lines


def emit(args: argparse.Namespace, payload: Mapping[str, Any]) -> None:
    """Print or write ``payload`` as JSON (``--format json``) or ``key: value`` text."""
    if args.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = "\n".join(_text_lines(payload)) + "\n"
    if args.out is not None:
        atomic_write_text(args.out, text)
        logger.info("Wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _seed(args: argparse.Namespace) -> int:
    return DEFAULT_SEED if args.seed is None else args.seed


def _state_path(args: argparse.Namespace) -> Path:
    return resolve_state_path(args.state)


def _state_summary(state: PathwayState, args: argparse.Namespace) -> dict[str, Any]:
    derived = state.derived
    recommendation = derived.last_recommendation
    return {
        "status": derived.last_status.value,
        "belief": derived.belief.as_dict(),
        "t_change": derived.t_change,
        "t_risk": state.config.t_risk,
        "prior_low_risk": derived.prior_low_risk,
        "window": [
            {
                "period_id": batch.period_id,
                "n_inspected": batch.n_inspected,
                "n_contaminated": batch.n_contaminated,
            }
            for batch in derived.window.batches
        ],
        "next_period": state.next_period,
        "recommendation": recommendation.as_dict() if recommendation else None,
        "recommendation_error": derived.recommendation_error,
        "config_hash": state.config.digest,
        "seed": _seed(args),
    }


# --- handlers ----------------------------------------------------------------


def cmd_init(args: argparse.Namespace) -> int:
    """Create the state file from ``--prior`` batches."""
    path = _state_path(args)
    if args.window_len < 0:
        raise ValidationError(f"window_len must be >= 0, got {args.window_len}")
    config = PathwayConfig.from_settings(
        {
            "t_risk": args.t_risk,
            "credible_level": args.credible_level,
            "change_level": args.change_level,
            "window_len": args.window_len or None,
            "mode": args.mode,
            "target": args.target,
        }
    )
    with state_lock(path):
        if path.exists() and not args.force:
            raise ValidationError(
                f"state already exists at {path}; pass --force to replace it"
            )
        state = init_state(config, args.prior)
        save_state(state, path)
    emit(args, {"state": str(path), **_state_summary(state, args)})
    return 0


def cmd_recommend(args: argparse.Namespace) -> int:
    """Print the next-period recommendation."""
    state = load_state(_state_path(args))
    result = recommendation_for(state, args.mode)
    emit(
        args,
        {
            "period": state.next_period,
            **result.as_dict(),
            "config_hash": state.config.digest,
            "seed": _seed(args),
        },
    )
    return 0


def cmd_record(args: argparse.Namespace) -> int:
    """Record one period's counts and print the resulting status."""
    path = _state_path(args)
    with state_lock(path):
        state = load_state(path)
        period = state.next_period
        state = record_batch(state, args.n, args.y, dict(args.meta))
        save_state(state, path)
    payload = {"recorded_period": period, **_state_summary(state, args)}
    emit(args, payload)
    if state.derived.last_status is ColourStatus.RED:
        sys.stderr.write(
            "warning: pathway status is RED; no sample size is recommended until "
            "high-risk subpathways are removed\n"
        )
    return 0


def cmd_status(args: argparse.Namespace) -> int:
    """Print the current status, optionally auditing the cache by replay."""
    state = load_state(_state_path(args))
    payload = _state_summary(state, args)
    payload["history_length"] = len(state.history)
    if args.audit:
        matches = audit_state(state)
        payload["audit"] = "ok" if matches else "mismatch"
        emit(args, payload)
        if not matches:
            raise ValidationError(
                "stored derived state does not match a replay of the history"
            )
        return 0
    emit(args, payload)
    return 0


def _with_mode(spec: Spec, mode: str | None) -> Spec:
    if mode is None:
        return spec
    parsed = SizingMode.parse(mode)
    if isinstance(spec, SizingSweepSpec):
        return replace(spec, base=replace(spec.base, mode=parsed))
    return replace(spec, config=replace(spec.config, mode=parsed))


def _emit_run(args: argparse.Namespace, run: Any) -> None:
    if args.out is not None:
        for path in write_run(run, args.out, args.format):
            logger.info("Wrote %s", path)
        return
    if args.format == "json":
        sys.stdout.write(render_json(run))
    else:
        sys.stdout.write(render_csv(run))


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run a scenario spec and emit its traces."""
    spec = _with_mode(load_spec(args.spec), args.mode)
    if not isinstance(spec, ScenarioSpec):
        raise ValidationError(
            f"spec {args.spec!r} is a sweep; use the `sweep` command instead"
        )
    methods = None
    if args.method and args.method != "all":
        methods = [Method.parse(args.method)]
    run = run_spec(
        spec,
        seed=args.seed,
        workers=args.workers,
        methods=methods,
        replicates=args.replicates,
    )
    _emit_run(args, run)
    halted = sum(1 for trace in run.traces if trace.halted)
    logger.info(
        "Simulated %s traces (%s halted), config_hash=%s",
        len(run.traces),
        halted,
        config_hash(run.config),
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run a status or sizing sweep spec and emit its cells."""
    spec = _with_mode(load_spec(args.spec), args.mode)
    if not isinstance(spec, (StatusSweepSpec, SizingSweepSpec)):
        raise ValidationError(
            f"spec {args.spec!r} is a scenario; use the `simulate` command instead"
        )
    run = run_spec(spec, seed=args.seed, workers=args.workers, iterations=args.iterations)
    _emit_run(args, run)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    """Print every method's next-period size for the current window."""
    state = load_state(_state_path(args))
    pathway = state.config
    window = state.derived.window
    simulation = SimulationConfig(
        t_risk=pathway.t_risk,
        change_level=pathway.change_level,
        credible_level=pathway.credible_level,
        window_len=pathway.window_len,
        mode=SizingMode.parse(args.mode) if args.mode else pathway.mode,
        target=pathway.target,
        prior_batches=tuple(
            (batch.n_inspected, batch.n_contaminated) for batch in window.batches
        ),
        cap=pathway.search_cap,
        scan_depth=pathway.scan_depth,
    )
    rows = [
        {
            "method": item.method.value,
            "n": item.n,
            "y_crit": item.sizing.y_crit if item.sizing else None,
            "detail": item.detail,
        }
        for item in compare_methods(window, simulation)
    ]
    emit(
        args,
        {
            "period": state.next_period,
            "methods": rows,
            "config_hash": config_hash(simulation.as_dict()),
            "seed": _seed(args),
        },
    )
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    """Print the readiness report."""
    return run_diagnostics(_state_path(args))


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, dispatch the subcommand and map errors to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    handler: Handler = args.handler
    try:
        return handler(args)
    except SamplingError as exc:
        logger.debug("Command %s failed", args.command, exc_info=True)
        print(render_error(exc), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(render_error(exc), file=sys.stderr)
        return 1


__all__ = [
    "build_parser",
    "configure_logging",
    "emit",
    "parse_count_pair",
    "parse_meta",
    "render_error",
    "run",
]
