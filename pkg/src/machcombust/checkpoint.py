"""Bit-exact checkpoints.

Layout: the line ``MCCKPT1``, an 8-byte little-endian length, a UTF-8 JSON
header, then one snapshot record (see :func:`machcombust.grid.write_snapshot`)
per stored field in the order listed by the header.  Floats in the header are
written with ``float.hex`` so nothing is lost in the round trip.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from typing import Optional

from .diagnostics import SerrinMonitor
from .grid import NeumannZero, ScalarField, VectorField, make_grid, read_snapshot, write_snapshot
from .model import FluidState, ModelParams, density_bc, velocity_bc

MAGIC = b"MCCKPT1\n"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config_hash: str
    config_text: str
    state: FluidState
    monitor: SerrinMonitor


def _fields(state: FluidState):
    out = [("rho", "center", state.rho.data), ("pi", "center", state.pi.data),
           ("u1", "xface", state.u.u1), ("u2", "yface", state.u.u2)]
    if state.pi1 is not None:
        out.append(("pi1", "center", state.pi1.data))
    if state.v is not None:
        out += [("v1", "xface", state.v.u1), ("v2", "yface", state.v.u2)]
    if state.Q is not None:
        out += [("Q1", "xface", state.Q.u1), ("Q2", "yface", state.Q.u2)]
    return out


def checkpoint_save(state: FluidState, monitor: SerrinMonitor, path: str | os.PathLike, *,
                    config_hash: str = "", config_text: str = "") -> None:
    """Write ``state`` and the Serrin accumulators to ``path`` (atomically)."""
    g = state.grid
    fields_ = _fields(state)
    mon = monitor.to_dict()
    header = {
        "version": VERSION,
        "config_hash": config_hash,
        "config_text": config_text,
        "grid": {"nx": g.nx, "ny": g.ny, "lx": float(g.lx).hex(), "ly": float(g.ly).hex(), "regime": g.bc_regime},
        "t": float(state.t).hex(),
        "step": int(state.step),
        "fields": [[name, loc] for name, loc, _ in fields_],
        "serrin": {"r": float(mon["r"]).hex(), "s": float(mon["s"]).hex(),
                   "threshold": float(mon["threshold"]).hex(),
                   "totals": {k: float(v).hex() for k, v in mon["totals"].items()}},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, loc, data in fields_:
            write_snapshot(fh, g, loc, data, state.t)
    os.replace(tmp, path)


def checkpoint_restore(path: str | os.PathLike, params: Optional[ModelParams] = None, *,
                       expect_hash: Optional[str] = None) -> Checkpoint:
    """Read a checkpoint written by :func:`checkpoint_save`.

    Raises
    ------
    CheckpointError
        On a bad magic, an unknown version, a truncated file, or when
        ``expect_hash`` is given and differs from the stored config hash.
    """
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        raw = fh.read(8)
        if len(raw) != 8:
            raise CheckpointError(f"{path}: truncated header")
        (n,) = struct.unpack("<Q", raw)
        try:
            header = json.loads(fh.read(n).decode("utf-8"))
        except ValueError as exc:
            raise CheckpointError(f"{path}: corrupt header ({exc})") from None
        if header.get("version") != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {header.get('version')!r}")
        if expect_hash is not None and header["config_hash"] != expect_hash:
            raise CheckpointError(f"{path}: configuration hash mismatch "
                                  f"(checkpoint {header['config_hash'][:12]}, config {expect_hash[:12]})")
        gh = header["grid"]
        grid = make_grid(gh["nx"], gh["ny"], float.fromhex(gh["lx"]), float.fromhex(gh["ly"]), gh["regime"])
        arrays = {}
        for name, loc in header["fields"]:
            try:
                nx, ny, rloc, _, data = read_snapshot(fh)
            except (EOFError, ValueError) as exc:
                raise CheckpointError(f"{path}: field {name}: {exc}") from None
            if (nx, ny, rloc) != (grid.nx, grid.ny, loc):
                raise CheckpointError(f"{path}: field {name} does not match the grid")
            arrays[name] = data
    dens_bc = density_bc(grid, params) if params is not None else None
    vel_bc = velocity_bc(grid, params) if params is not None else None
    rho = ScalarField(grid, "center", arrays["rho"], dens_bc)
    pi = ScalarField(grid, "center", arrays["pi"], NeumannZero())
    u = VectorField(grid, arrays["u1"], arrays["u2"], vel_bc)
    pi1 = ScalarField(grid, "center", arrays["pi1"], NeumannZero()) if "pi1" in arrays else None
    v = VectorField(grid, arrays["v1"], arrays["v2"]) if "v1" in arrays else None
    Q = VectorField(grid, arrays["Q1"], arrays["Q2"]) if "Q1" in arrays else None
    state = FluidState(float.fromhex(header["t"]), rho, u, pi, pi1=pi1, v=v, Q=Q, step=int(header["step"]))
    sh = header["serrin"]
    monitor = SerrinMonitor.from_dict({"r": float.fromhex(sh["r"]), "s": float.fromhex(sh["s"]),
                                       "threshold": float.fromhex(sh["threshold"]),
                                       "totals": {k: float.fromhex(v) for k, v in sh["totals"].items()}})
    return Checkpoint(header["config_hash"], header["config_text"], state, monitor)
