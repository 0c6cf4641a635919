"""Batch experiment runner.

Reads a flat key = value configuration, then for each selected test case
runs the pipeline: reference solve -> dataset sampling -> training ->
error metrics, writing every artifact (reference and network fields,
dataset, training history, checkpoint, error table, profile CSVs, and
rendered figures) into a per-test directory named from the test id and
seed.

Config grammar: one `key = value` per line, `#` starts a comment, blank
lines ignored, unknown keys rejected.  Recognized keys and defaults:

    tests           = test1a,test1b,test2a,test2b,test3
    out_dir         = runs
    seed            = 0
    max_epochs      = 300000
    log_every       = 100
    learning_rate   = 0.001
    hidden_layers   = 3
    hidden_width    = 64
    nx              = 201
    nt              = 0          (0 = derive from nx and the time horizon)
    w_d             = 10.0
    w_r             = 1.0
    w_b             = 10.0
    checkpoint_every= 0          (0 = final checkpoint only)
    emit_fields     = true
    emit_history    = true
    emit_errors     = true
    emit_checkpoints= true
    emit_figures    = true
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import traceback
from dataclasses import dataclass, fields as dataclass_fields, replace
from pathlib import Path

from . import __version__
from .loss import LossWeights
from .metrics import error_report, write_error_table
from .network import NetworkConfig, save_checkpoint
from .problems import PROBLEM_IDS, make_problem
from .reference import Grid, gradient_method
from .report import render_figures, write_cost_history_csv, write_final_profiles_csv
from .sampling import sample_dataset, write_dataset_csv
from .train import TrainConfig, train, write_history_csv

__all__ = ["RunConfig", "parse_config", "run", "main"]


@dataclass(frozen=True)
class RunConfig:
    tests: tuple[str, ...] = PROBLEM_IDS
    out_dir: str = "runs"
    seed: int = 0
    max_epochs: int = 300_000
    log_every: int = 100
    learning_rate: float = 1e-3
    hidden_layers: int = 3
    hidden_width: int = 64
    nx: int = 201
    nt: int = 0
    w_d: float = 10.0
    w_r: float = 1.0
    w_b: float = 10.0
    checkpoint_every: int = 0
    emit_fields: bool = True
    emit_history: bool = True
    emit_errors: bool = True
    emit_checkpoints: bool = True
    emit_figures: bool = True


class ConfigError(ValueError):
    pass


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def parse_config(path) -> RunConfig:
    """Parse the flat key = value file; unknown keys are rejected."""
    known = {f.name: f.type for f in dataclass_fields(RunConfig)}
    values = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key == "tests":
            values[key] = tuple(s.strip() for s in raw.split(",") if s.strip())
        elif known[key] in ("bool", bool):
            values[key] = _parse_bool(raw)
        elif known[key] in ("int", int):
            values[key] = int(raw)
        elif known[key] in ("float", float):
            values[key] = float(raw)
        else:
            values[key] = raw
    return RunConfig(**values)


def _config_echo(config: RunConfig) -> str:
    lines = []
    for f in dataclass_fields(RunConfig):
        v = getattr(config, f.name)
        if f.name == "tests":
            v = ",".join(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines)


def _run_one(test_id: str, config: RunConfig, verbosity: int) -> "tuple":
    spec = make_problem(test_id)
    out = Path(config.out_dir) / f"{test_id}_seed{config.seed}"
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()

    def say(msg: str) -> None:
        if verbosity > 0:
            print(f"[{test_id}] {msg}", flush=True)

    grid = Grid.from_domain(spec.domain, nx=config.nx, nt=config.nt or None)
    say(f"reference solve on {grid.nx}x{grid.nt} grid")
    reference = gradient_method(spec, grid)
    say(f"reference done: {len(reference.J_history) - 1} iterations, J = {reference.J_history[-1]:.6g}")

    dataset = sample_dataset(reference, spec, seed=config.seed)

    train_config = TrainConfig(
        learning_rate=config.learning_rate,
        epsilon_tol=spec.eps_tol,
        max_epochs=config.max_epochs,
        log_every=config.log_every,
        seed=config.seed,
    )
    net_config = NetworkConfig(
        hidden_layers=config.hidden_layers,
        hidden_width=config.hidden_width,
        output_dim=spec.output_dim,
        seed=config.seed,
    )
    weights = LossWeights(w_d=config.w_d, w_r=config.w_r, w_b=config.w_b)

    checkpoint_cb = None
    if config.emit_checkpoints and config.checkpoint_every > 0:

        def checkpoint_cb(entry, cb_params, cb_model):
            if entry.epoch % config.checkpoint_every == 0:
                save_checkpoint(out / f"checkpoint_epoch{entry.epoch}.txt", cb_params, cb_model, entry.epoch)
                if verbosity > 1:
                    print(f"[{test_id}] epoch {entry.epoch}: loss {entry.breakdown.total:.3e}")

    say(f"training (cap {train_config.max_epochs} epochs, tol {spec.eps_tol:g})")
    params, model, history = train(
        spec, dataset, net_config, train_config, weights=weights, log_callback=checkpoint_cb
    )
    say(f"training stopped ({history.stop_reason}) after {history.epochs} epochs; nu = {model.nu:.5g}")

    report, fields = error_report(spec, reference, params, model, grid, epochs=history.epochs)
    say(f"errors: E1={report.E1:.4g} E2={report.E2:.4g} E3={report.E3:.4g} E4={report.E4:.4g}")

    if config.emit_fields:
        reference.y_star.write_csv(out / "reference_y_star.csv")
        reference.u_star.write_csv(out / "reference_u_star.csv")
        reference.p_star.write_csv(out / "reference_p_star.csv")
        reference.y_uncontrolled.write_csv(out / "reference_y_uncontrolled.csv")
        fields["y"].write_csv(out / "pinn_y.csv")
        fields["u"].write_csv(out / "pinn_u.csv")
        if "p" in fields:
            fields["p"].write_csv(out / "pinn_p.csv")
        if "y_unc" in fields:
            fields["y_unc"].write_csv(out / "pinn_y_uncontrolled.csv")
        fields["y_replay"].write_csv(out / "plugin_y.csv")
        write_final_profiles_csv(out / "final_profiles.csv", spec, reference, fields)
        write_cost_history_csv(out / "reference_cost_history.csv", reference)
    write_dataset_csv(out / "dataset.csv", dataset)
    if config.emit_history:
        write_history_csv(out / "history.csv", history)
    if config.emit_checkpoints:
        save_checkpoint(out / "checkpoint.txt", params, model, history.epochs)
    if config.emit_errors:
        write_error_table(out / "errors.csv", [report])
    if config.emit_figures:
        render_figures(out / "figures", spec, reference, fields, history, report)

    manifest = out / "run_manifest.txt"
    manifest.write_text(
        f"pinn-control {__version__}\n"
        f"timestamp: {time.strftime('%Y-%m-%dT%H:%M:%S', time.gmtime())}Z\n"
        f"test: {test_id}\n"
        f"runtime_seconds: {time.time() - started:.1f}\n"
        f"stop_reason: {history.stop_reason}\n"
        f"epochs: {history.epochs}\n"
        f"nu_learned: {model.nu!r}\n"
        "-- config echo --\n" + _config_echo(config) + "\n"
    )
    return report


def run(
    config_path=None,
    tests: tuple[str, ...] | None = None,
    out_dir: str | None = None,
    seed: int | None = None,
    verbosity: int = 0,
) -> int:
    """Execute the configured experiments; returns a process exit status."""
    try:
        config = parse_config(config_path) if config_path is not None else RunConfig()
    except (OSError, ConfigError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    if tests is not None:
        config = replace(config, tests=tuple(tests))
    if out_dir is not None:
        config = replace(config, out_dir=out_dir)
    if seed is not None:
        config = replace(config, seed=seed)

    unknown = [t for t in config.tests if t not in PROBLEM_IDS]
    if unknown:
        print(
            json.dumps({"error": "config", "message": f"unknown test ids: {unknown}"}),
            file=sys.stderr,
        )
        return 2

    reports, failures = [], []
    for test_id in config.tests:
        try:
            reports.append(_run_one(test_id, config, verbosity))
        except Exception as exc:  # error is recorded; remaining tests still run
            failures.append(test_id)
            out = Path(config.out_dir) / f"{test_id}_seed{config.seed}"
            out.mkdir(parents=True, exist_ok=True)
            marker = {
                "error": type(exc).__name__,
                "test": test_id,
                "message": str(exc),
            }
            (out / "FAILED.json").write_text(json.dumps(marker, indent=2) + "\n")
            print(json.dumps(marker), file=sys.stderr)
            if verbosity > 1:
                traceback.print_exc()

    if reports:
        Path(config.out_dir).mkdir(parents=True, exist_ok=True)
        write_error_table(Path(config.out_dir) / "error_table.csv", reports)
        if verbosity >= 0:
            for r in reports:
                print(
                    f"{r.test_id}: nu={r.nu_learned:.5g} (true {r.nu_true:g}) "
                    f"E1={r.E1:.4g} E2={r.E2:.4g} E3={r.E3:.4g} E4={r.E4:.4g} "
                    f"epochs={r.epochs}"
                )
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pinn-control",
        description="Run PDE control experiments: reference solve, network training, error report.",
    )
    parser.add_argument("--config", help="path to a key = value run configuration")
    parser.add_argument("--tests", help="comma-separated test ids (subset filter)")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="increase verbosity")
    args = parser.parse_args(argv)

    tests = tuple(s.strip() for s in args.tests.split(",")) if args.tests else None
    status = run(
        config_path=args.config,
        tests=tests,
        out_dir=args.out,
        seed=args.seed,
        verbosity=args.verbose,
    )
    return status


if __name__ == "__main__":
    sys.exit(main())
