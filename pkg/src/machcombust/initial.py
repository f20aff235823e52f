"""Initial-condition families used by the batch runner and the test suites.

Each family builds a density that satisfies the regime's density condition
and adds a swirl ``perp_grad(s)`` with ``s = swirl * sin^2(pi x/lx) sin^2(pi y/ly)``,
which vanishes with its normal derivative on every wall.  The velocity is
``q(rho) + perp_grad(s)``, so the divergence constraint holds discretely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, perp_gradient, sample_scalar, zeros_vector
from .model import FluidState, ModelError, ModelParams, constraint_part, make_state

KINDS = ("rest", "bump")


@dataclass(frozen=True)
class InitialSpec:
    """Selector for :func:`build_initial`.

    ``level`` defaults to ``rho_tilde``.  For ``bump`` the density is
    ``level + amplitude * X(x) Y(y)`` with cosines of the given mode numbers
    (regimes A/C, zero normal derivative) or sines (regime B, equal to
    ``rho_tilde`` on the walls).  A zero mode number drops that factor
    (cosine families only).
    """

    kind: str = "rest"
    level: float | None = None
    amplitude: float = 0.0
    swirl: float = 0.0
    mode_x: int = 1
    mode_y: int = 1

    def problems(self, regime: str, params: ModelParams) -> list[str]:
        out = []
        if self.kind not in KINDS:
            out.append(f"initial.kind: unknown kind {self.kind!r} (known: {', '.join(KINDS)})")
            return out
        level = params.rho_tilde if self.level is None else self.level
        if regime == "B" and abs(level - params.rho_tilde) > 1e-14 * abs(params.rho_tilde):
            out.append("initial.level: regime B pins the wall density to model.rho_tilde")
        if self.mode_x < 0 or self.mode_y < 0:
            out.append("initial.mode_x/mode_y: mode numbers must be non-negative")
        if regime == "B" and self.kind == "bump" and (self.mode_x == 0 or self.mode_y == 0):
            out.append("initial.mode_x/mode_y: regime B needs positive mode numbers")
        amp = abs(self.amplitude) if self.kind == "bump" else 0.0
        if level - amp < params.alpha or level + amp > params.beta:
            out.append(f"initial.amplitude: density range [{level - amp:.6g}, {level + amp:.6g}] "
                       f"leaves [model.alpha, model.beta]")
        return out


def _factor(kind: str, m: int, s, length: float):
    if m == 0:
        return np.ones_like(s)
    k = m * math.pi / length
    return np.sin(k * s) if kind == "sin" else np.cos(k * s)


def initial_density(grid: Grid, spec: InitialSpec, params: ModelParams):
    level = params.rho_tilde if spec.level is None else spec.level
    if spec.kind == "rest":
        return sample_scalar(grid, lambda x, y: np.full_like(x, level))
    trig = "sin" if grid.bc_regime == "B" else "cos"
    return sample_scalar(grid, lambda x, y: level + spec.amplitude * _factor(trig, spec.mode_x, x, grid.lx)
                         * _factor(trig, spec.mode_y, y, grid.ly))


def swirl_velocity(grid: Grid, swirl: float):
    if swirl == 0.0:
        return zeros_vector(grid)
    kx, ky = math.pi / grid.lx, math.pi / grid.ly
    s = sample_scalar(grid, lambda x, y: swirl * np.sin(kx * x) ** 2 * np.sin(ky * y) ** 2, "corner")
    return perp_gradient(s)


def build_initial(grid: Grid, spec: InitialSpec, params: ModelParams) -> FluidState:
    """Compatible initial state for ``spec`` on ``grid``.

    Raises
    ------
    ModelError
        If ``spec`` is inconsistent with the regime or the density bounds.
    """
    problems = spec.problems(grid.bc_regime, params)
    if problems:
        raise ModelError("; ".join(problems))
    rho = initial_density(grid, spec, params)
    u = constraint_part(rho, params) + swirl_velocity(grid, spec.swirl)
    return make_state(rho, u, params)
