"""Command-line front end: ``run``, ``resume`` and ``verify``.

Exit codes: 0 on completion, 2 when the run completed but the blow-up
monitor tripped, 1 on an aborted run, bad input or an I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, TextIO

from .checkpoint import CheckpointError, checkpoint_restore, checkpoint_save
from .config import ConfigError, RunConfig, parse_config
from .diagnostics import DiagnosticsRecord, SerrinMonitor, energy_record
from .grid import write_snapshot
from .initial import build_initial
from .model import AdvanceAborted, FluidState, ModelError, advance

EXIT_OK, EXIT_FAIL, EXIT_BLOWUP = 0, 1, 2


class _Interrupted(Exception):
    pass


def format_row(record: DiagnosticsRecord) -> str:
    cells = []
    for value in record.row():
        cells.append(str(value) if isinstance(value, int) else "%.17g" % value)
    return ",".join(cells) + "\n"


def csv_header() -> str:
    return ",".join(DiagnosticsRecord.columns()) + "\n"


def write_state_snapshot(path: str, state: FluidState) -> None:
    g = state.grid
    with open(path, "wb") as fh:
        write_snapshot(fh, g, "center", state.rho.data, state.t)
        write_snapshot(fh, g, "xface", state.u.u1, state.t)
        write_snapshot(fh, g, "yface", state.u.u2, state.t)
        write_snapshot(fh, g, "center", state.pi.data, state.t)


def _prepare_outputs(cfg: RunConfig) -> None:
    for path in (cfg.csv_path, cfg.checkpoint_path if cfg.checkpoint_every else None):
        if path:
            d = os.path.dirname(os.path.abspath(path))
            if not os.path.isdir(d):
                raise OSError(f"output directory {d} does not exist")
    if cfg.snapshot_every:
        os.makedirs(cfg.snapshot_dir, exist_ok=True)


def _truncate_csv(path: str, last_step: int) -> None:
    """Keep the header and the rows up to ``last_step``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    if not lines or lines[0] != csv_header():
        raise OSError(f"{path}: CSV header does not match this version")
    step_col = DiagnosticsRecord.columns().index("step")
    kept = [lines[0]] + [ln for ln in lines[1:] if int(ln.split(",")[step_col]) <= last_step]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.writelines(kept)


def _integrate(cfg: RunConfig, state: FluidState, monitor: SerrinMonitor, csv: TextIO, config_text: str,
               log: TextIO, stop_after: Optional[int] = None) -> int:
    params = cfg.params

    def on_step(new: FluidState, record: DiagnosticsRecord) -> None:
        csv.write(format_row(record))
        if cfg.snapshot_every and new.step % cfg.snapshot_every == 0:
            write_state_snapshot(os.path.join(cfg.snapshot_dir, f"snap_{new.step:06d}.mcf"), new)
        if cfg.checkpoint_every and new.step % cfg.checkpoint_every == 0:
            csv.flush()
            checkpoint_save(new, monitor, cfg.checkpoint_path, config_hash=cfg.hash(), config_text=config_text)
        if stop_after is not None and new.step >= stop_after:
            raise _Interrupted(new.step)

    final = state
    if cfg.t_end > state.t:
        try:
            final = advance(state, cfg.t_end, cfg.controls, params, None, monitor=monitor, on_step=on_step)
        except AdvanceAborted as exc:
            print(f"run aborted: {exc}", file=log)
            return EXIT_FAIL
        except _Interrupted as exc:
            print(f"run abandoned after step {exc}", file=log)
            return EXIT_FAIL
    status = monitor.status(final.grid.bc_regime)
    if status.tripped:
        print(f"completed at t={final.t:.17g}; blow-up monitor tripped: {status.which} accumulator "
              f"{status.value:.6g} >= {status.threshold:.6g}", file=log)
        return EXIT_BLOWUP
    print(f"completed at t={final.t:.17g} after {final.step} steps", file=log)
    return EXIT_OK


def run(cfg: RunConfig, config_text: Optional[str] = None, *, log: Optional[TextIO] = None,
        stop_after: Optional[int] = None) -> int:
    """Execute a validated configuration; returns the exit status.

    ``stop_after`` abandons the run once that step is written, leaving the
    outputs as a crash would (used to exercise ``resume``).
    """
    log = log or sys.stderr
    config_text = cfg.canonical() if config_text is None else config_text
    try:
        _prepare_outputs(cfg)
        state = build_initial(cfg.grid, cfg.initial, cfg.params)
        monitor = SerrinMonitor(cfg.serrin_r, cfg.serrin_s, cfg.serrin_threshold)
        with open(cfg.csv_path, "w", encoding="utf-8", newline="") as csv:
            csv.write(csv_header())
            csv.write(format_row(energy_record(state, None, 0.0, cfg.params, monitor=monitor)))
            if cfg.snapshot_every:
                write_state_snapshot(os.path.join(cfg.snapshot_dir, f"snap_{0:06d}.mcf"), state)
            if cfg.checkpoint_every:
                checkpoint_save(state, monitor, cfg.checkpoint_path, config_hash=cfg.hash(), config_text=config_text)
            return _integrate(cfg, state, monitor, csv, config_text, log, stop_after)
    except (OSError, ModelError) as exc:
        print(f"run failed: {exc}", file=log)
        return EXIT_FAIL


def resume(checkpoint_path: str, config_path: Optional[str] = None, *, log: Optional[TextIO] = None) -> int:
    """Continue a run from a checkpoint, appending to its CSV."""
    log = log or sys.stderr
    try:
        expect = None
        if config_path is not None:
            with open(config_path, encoding="utf-8") as fh:
                text = fh.read()
            cfg = parse_config(text)
            expect = cfg.hash()
        ck = checkpoint_restore(checkpoint_path, expect_hash=expect)
        if config_path is None:
            text = ck.config_text
            cfg = parse_config(text)
            if cfg.hash() != ck.config_hash:
                raise CheckpointError("embedded configuration does not match the stored hash")
        ck = checkpoint_restore(checkpoint_path, cfg.params, expect_hash=cfg.hash())
        _prepare_outputs(cfg)
        if os.path.exists(cfg.csv_path):
            _truncate_csv(cfg.csv_path, ck.state.step)
            mode = "a"
        else:
            mode = "w"
        with open(cfg.csv_path, mode, encoding="utf-8", newline="") as csv:
            if mode == "w":
                csv.write(csv_header())
            return _integrate(cfg, ck.state, ck.monitor, csv, text, log)
    except (OSError, ModelError, ConfigError, CheckpointError) as exc:
        print(f"resume failed: {exc}", file=log)
        return EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="machcombust", description="Low-Mach combustion model simulator.")
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="run a configuration file")
    p_run.add_argument("config", help="path to a section.key = value configuration")
    p_res = sub.add_parser("resume", help="continue from a checkpoint")
    p_res.add_argument("checkpoint")
    p_res.add_argument("--config", default=None, help="configuration to check against the checkpoint hash")
    p_ver = sub.add_parser("verify", help="run an acceptance suite")
    from .verify import SUITES

    p_ver.add_argument("suite", choices=sorted(SUITES))
    p_ver.add_argument("--csv", default=None, help="where the mms suite writes its rate tables")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "run":
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
            cfg = parse_config(text)
        except (OSError, ConfigError) as exc:
            print(f"run failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
        return run(cfg, text)
    if args.verb == "resume":
        return resume(args.checkpoint, args.config)
    from .verify import run_suite

    return run_suite(args.suite, csv_path=args.csv)


if __name__ == "__main__":
    sys.exit(main())
