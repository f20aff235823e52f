"""Per-step diagnostics: norms, energy functionals, boundary terms, Serrin
accumulators and discrete Gronwall ledgers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from .grid import (
    DirichletConst,
    NeumannZero,
    VectorField,
    apply_bc,
    curl2d,
    gradient,
    h1_seminorm,
    laplacian,
    lp_norm,
    mean,
    vector_laplacian,
)
from .model import (
    FluidState,
    ModelParams,
    compute_v,
    density_bc,
    inverse_density,
    residual_divergence_constraint,
    solenoidal_residual,
)


# -- records ------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    step: int
    dt: float
    rho_l2: float
    grad_rho_l2: float
    lap_rho_l2: float
    grad_rho_l4: float
    rho_t_l2: float
    u_l2: float
    v_l2: float
    grad_v_l2: float
    sqrt_rho_v_l2: float
    F_t: float
    G_t: float
    M1: float
    M2: float
    div_residual: float
    min_rho: float
    max_rho: float
    mean_rho: float
    picard_iterations: int
    solenoidal_residual: float = 0.0
    rho_dev_l2: float = 0.0
    v_l4: float = 0.0
    lap_v_l2: float = 0.0
    v_t_l2: float = 0.0
    grad_lap_rho_l2: float = 0.0
    grad_rho_t_l2: float = 0.0
    grad_u_l2: float = 0.0
    lap_u_l2: float = 0.0
    u_t_l2: float = 0.0
    mu_curl_v_sq: float = 0.0
    picard_last_delta: float = 0.0
    serrin_grad_rho: float = 0.0
    serrin_velocity: float = 0.0
    serrin_v: float = 0.0
    blowup_value: float = 0.0
    blowup_tripped: int = 0

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, c) for c in self.columns()]


def _density_bc_homogeneous(state: FluidState):
    return DirichletConst(0.0) if state.regime == "B" else NeumannZero()


def _sqrt_rho_v(state: FluidState, v: VectorField) -> float:
    rho_f = apply_bc(state.rho, state.rho.bc or NeumannZero())
    d = rho_f.data
    g = state.grid
    r1 = 0.5 * (d[1:, 1:-1] + d[:-1, 1:-1])
    r2 = 0.5 * (d[1:-1, 1:] + d[1:-1, :-1])
    s = np.sum(g.weights("xface") * r1 * v.i1**2) + np.sum(g.weights("yface") * r2 * v.i2**2)
    return math.sqrt(float(s))


def _mu_curl_sq(state: FluidState, v: VectorField, params: ModelParams) -> float:
    g = state.grid
    w = curl2d(v).data
    mu = params.mu_law(state.rho.data)
    mk = 0.25 * (mu[:-1, :-1] + mu[1:, :-1] + mu[:-1, 1:] + mu[1:, 1:])
    return float(np.sum(g.weights("corner") * mk * w * w))


def energy_record(state: FluidState, state_prev: Optional[FluidState], dt: float, params: ModelParams,
                  *, picard=None, monitor=None) -> DiagnosticsRecord:
    """All tracked norms and functionals for ``state``.

    Time derivatives are backward differences against ``state_prev``; with no
    previous state they are zero.  Gradients of center fields use the regime's
    density condition; ``grad lap rho`` uses mirrored ghosts (interior faces
    only carry information).
    """
    g = state.grid
    if state_prev is not None and state_prev.grid != g:
        raise ValueError("states live on different grids")
    rho = apply_bc(state.rho, density_bc(g, params))
    grad_rho = gradient(rho)
    lap_rho = laplacian(rho, rho.bc)
    v = state.v if state.v is not None else compute_v(state, params)
    grad_v = h1_seminorm(v)
    lap_v = vector_laplacian(v)
    lap_u = vector_laplacian(state.u)
    hom = _density_bc_homogeneous(state)
    if state_prev is not None and dt > 0:
        rho_t = apply_bc(rho.with_interior((rho.interior - state_prev.rho.interior) / dt), hom)
        v_prev = state_prev.v if state_prev.v is not None else compute_v(state_prev, params)
        v_t = (v - v_prev) * (1.0 / dt)
        u_t = (state.u - state_prev.u) * (1.0 / dt)
    else:
        rho_t = apply_bc(rho.with_interior(np.zeros((g.nx, g.ny))), hom)
        v_t = v * 0.0
        u_t = v * 0.0
    rho_t_l2 = lp_norm(rho_t, 2)
    lap_rho_l2 = lp_norm(lap_rho, 2)
    grad_lap = lp_norm(gradient(apply_bc(lap_rho, NeumannZero())), 2)
    grad_rho_t = lp_norm(gradient(rho_t), 2)
    lap_v_l2 = lp_norm(lap_v, 2)
    v_t_l2 = lp_norm(v_t, 2)
    F_t = grad_v**2 + lap_rho_l2**2 + rho_t_l2**2
    G_t = lap_v_l2**2 + v_t_l2**2 + grad_lap**2 + grad_rho_t**2
    M1, M2 = boundary_functionals(state, params, v=v)
    level = params.rho_tilde if state.regime == "B" else mean(state.rho)
    serr = {}
    status = None
    if monitor is not None:
        serr = {k: a.value for k, a in monitor.accumulators.items()}
        status = monitor.status(state.regime)
    deltas = getattr(picard, "deltas", None) or [0.0]
    return DiagnosticsRecord(
        t=float(state.t),
        step=int(state.step),
        dt=float(dt),
        rho_l2=lp_norm(state.rho, 2),
        grad_rho_l2=lp_norm(grad_rho, 2),
        lap_rho_l2=lap_rho_l2,
        grad_rho_l4=lp_norm(grad_rho, 4),
        rho_t_l2=rho_t_l2,
        u_l2=lp_norm(state.u, 2),
        v_l2=lp_norm(v, 2),
        grad_v_l2=grad_v,
        sqrt_rho_v_l2=_sqrt_rho_v(state, v),
        F_t=F_t,
        G_t=G_t,
        M1=M1,
        M2=M2,
        div_residual=residual_divergence_constraint(state, params),
        min_rho=float(np.min(state.rho.interior)),
        max_rho=float(np.max(state.rho.interior)),
        mean_rho=mean(state.rho),
        picard_iterations=int(getattr(picard, "iterations", 0)),
        solenoidal_residual=solenoidal_residual(state, params),
        rho_dev_l2=lp_norm(state.rho - level, 2),
        v_l4=lp_norm(v, 4),
        lap_v_l2=lap_v_l2,
        v_t_l2=v_t_l2,
        grad_lap_rho_l2=grad_lap,
        grad_rho_t_l2=grad_rho_t,
        grad_u_l2=h1_seminorm(state.u),
        lap_u_l2=lp_norm(lap_u, 2),
        u_t_l2=lp_norm(u_t, 2),
        mu_curl_v_sq=_mu_curl_sq(state, v, params),
        picard_last_delta=float(deltas[-1]),
        serrin_grad_rho=float(serr.get("grad_rho", 0.0)),
        serrin_velocity=float(serr.get("velocity", 0.0)),
        serrin_v=float(serr.get("v", 0.0)),
        blowup_value=float(status.value) if status else 0.0,
        blowup_tripped=int(status.tripped) if status else 0,
    )


# -- boundary functionals -----------------------------------------------------------------


def _wall_friction(params: ModelParams, x, y) -> np.ndarray:
    b = params.friction
    out = np.asarray(b(x, y), dtype=float) * np.ones_like(x) if callable(b) else np.full_like(x, float(b))
    return out


def boundary_functionals(state: FluidState, params: ModelParams, *, v: Optional[VectorField] = None):
    """``M1 = int_wall b mu (v.t)^2`` and ``M2 = int c0 mu d_n(v.t) b d_t(1/rho)``.

    Only regime A carries friction; other regimes return zeros.  Wall traces
    of ``v`` average the first interior face with its ghost.  In ``M2`` the
    friction, normal and tangent are taken from the nearest wall.
    """
    if state.regime != "A":
        return 0.0, 0.0
    g = state.grid
    v = v if v is not None else compute_v(state, params)
    mu_c = params.mu_law(apply_bc(state.rho, NeumannZero()).data)  # padded
    nx, ny, hx, hy = g.nx, g.ny, g.hx, g.hy
    xs = np.arange(nx + 1) * hx
    ys = np.arange(ny + 1) * hy
    wx = np.full(nx + 1, hx)
    wx[[0, -1]] *= 0.5
    wy = np.full(ny + 1, hy)
    wy[[0, -1]] *= 0.5
    M1 = 0.0
    # bottom / top: tangential component u1 at nodes x_i
    for row_in, row_gh, yv, mrow in ((1, 0, 0.0, 1), (-2, -1, g.ly, -2)):
        vt = 0.5 * (v.u1[:, row_in] + v.u1[:, row_gh])
        mu_w = 0.5 * (mu_c[:-1, mrow] + mu_c[1:, mrow])
        b = _wall_friction(params, xs, np.full_like(xs, yv))
        M1 += float(np.sum(wx * b * mu_w * vt**2))
    for col_in, col_gh, xv, mcol in ((1, 0, 0.0, 1), (-2, -1, g.lx, -2)):
        vt = 0.5 * (v.u2[col_in, :] + v.u2[col_gh, :])
        mu_w = 0.5 * (mu_c[mcol, :-1] + mu_c[mcol, 1:])
        b = _wall_friction(params, np.full_like(ys, xv), ys)
        M1 += float(np.sum(wy * b * mu_w * vt**2))
    # M2 at cell centers
    psi = inverse_density(state.rho, params).data
    X, Y = g.coords("center")
    X, Y = X[1:-1, 1:-1], Y[1:-1, 1:-1]
    d1psi = (psi[2:, 1:-1] - psi[:-2, 1:-1]) / (2 * hx)
    d2psi = (psi[1:-1, 2:] - psi[1:-1, :-2]) / (2 * hy)
    k21 = (v.u1[:, 1:] - v.u1[:, :-1]) / hy  # d2 v1 at corners
    k12 = (v.u2[1:, :] - v.u2[:-1, :]) / hx  # d1 v2 at corners
    c21 = 0.25 * (k21[:-1, :-1] + k21[1:, :-1] + k21[:-1, 1:] + k21[1:, 1:])
    c12 = 0.25 * (k12[:-1, :-1] + k12[1:, :-1] + k12[:-1, 1:] + k12[1:, 1:])
    dist = np.stack([Y, g.ly - Y, X, g.lx - X])
    wall = np.argmin(dist, axis=0)
    proj_x = np.choose(wall, [X, X, np.zeros_like(X), np.full_like(X, g.lx)])
    proj_y = np.choose(wall, [np.zeros_like(Y), np.full_like(Y, g.ly), Y, Y])
    b = _wall_friction(params, proj_x, proj_y)
    # d_n(v.t) * d_t(psi) for each wall orientation (t = n_perp)
    prod = np.choose(wall, [-c21 * d1psi, c21 * d1psi, -c12 * d2psi, c12 * d2psi])
    M2 = float(np.sum(g.weights("center") * params.c0 * mu_c[1:-1, 1:-1] * b * prod))
    return M1, M2


# -- Serrin accumulators -----------------------------------------------------------------------

SERRIN_TARGETS = ("grad_rho", "velocity", "v")


class ExponentError(ValueError):
    pass


def validate_exponents(r: float, s: float) -> None:
    """Admissible pairs satisfy ``2/s + 2/r <= 1`` with ``2 < r <= inf``."""
    if not (r > 2):
        raise ExponentError(f"r = {r} violates 2 < r <= inf")
    if not (s >= 1):
        raise ExponentError(f"s = {s} must be at least 1")
    lhs = 2.0 / s + 2.0 / r
    if lhs > 1.0 + 1e-14:
        raise ExponentError(f"(r, s) = ({r}, {s}) violates 2/s + 2/r <= 1 (got {lhs:.6g})")


@dataclass(frozen=True)
class SerrinAccumulator:
    r: float
    s: float
    target: str
    total: float = 0.0

    def __post_init__(self):
        validate_exponents(self.r, self.s)
        if self.target not in SERRIN_TARGETS:
            raise ExponentError(f"unknown Serrin target {self.target!r}")

    @property
    def value(self) -> float:
        """``||f||_{L^s(0,t;L^r)}``: ``total^(1/s)`` or the running sup."""
        return self.total if math.isinf(self.s) else self.total ** (1.0 / self.s)


def serrin_target(state: FluidState, target: str, params: ModelParams):
    if target == "grad_rho":
        return gradient(apply_bc(state.rho, density_bc(state.grid, params)))
    if target == "velocity":
        return state.u
    return state.v if state.v is not None else compute_v(state, params)


def serrin_accumulate(acc: SerrinAccumulator, state: FluidState, dt: float, params: ModelParams) -> SerrinAccumulator:
    """Left-endpoint update: add ``||f(t_k)||_r^s dt`` (or take the sup)."""
    if dt < 0:
        raise ValueError("negative time increment")
    nrm = lp_norm(serrin_target(state, acc.target, params), acc.r)
    if math.isinf(acc.s):
        return replace(acc, total=max(acc.total, nrm))
    return replace(acc, total=acc.total + nrm**acc.s * dt)


@dataclass(frozen=True)
class BlowupStatus:
    value: float
    threshold: float
    tripped: bool
    which: str


def blowup_monitor(acc: SerrinAccumulator, threshold: float) -> BlowupStatus:
    v = acc.value
    return BlowupStatus(v, threshold, bool(v >= threshold), acc.target)


@dataclass
class SerrinMonitor:
    """Accumulators for every target plus the trip threshold."""

    r: float = 4.0
    s: float = 4.0
    threshold: float = 1e6
    accumulators: dict = field(default_factory=dict)

    def __post_init__(self):
        validate_exponents(self.r, self.s)
        if not self.accumulators:
            self.accumulators = {t: SerrinAccumulator(self.r, self.s, t) for t in SERRIN_TARGETS}

    @classmethod
    def default(cls) -> "SerrinMonitor":
        return cls()

    def accumulate(self, state: FluidState, params: ModelParams, dt: float) -> None:
        self.accumulators = {k: serrin_accumulate(a, state, dt, params) for k, a in self.accumulators.items()}

    def status(self, regime: str) -> BlowupStatus:
        which = "velocity" if regime == "C" else "grad_rho"
        return blowup_monitor(self.accumulators[which], self.threshold)

    def to_dict(self) -> dict:
        return {"r": self.r, "s": self.s, "threshold": self.threshold,
                "totals": {k: a.total for k, a in self.accumulators.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "SerrinMonitor":
        m = cls(float(d["r"]), float(d["s"]), float(d["threshold"]))
        m.accumulators = {k: SerrinAccumulator(m.r, m.s, k, float(v)) for k, v in d["totals"].items()}
        return m


# -- Gronwall ledger ----------------------------------------------------------------------------


@dataclass
class InequalityReport:
    name: str
    nu: float
    C: float
    C_lsq: float
    min_slack: float
    violations: list


@dataclass
class LedgerReport:
    inequalities: dict

    @property
    def violations(self) -> list:
        return [(k, i) for k, rep in self.inequalities.items() for i in rep.violations]


def _inequality(name, X, Y, D, t, nu, tol, C_max):
    """Slack of ``dX/dt + nu Y <= C D`` at each step after the first.

    ``C`` is the smallest nonnegative constant making every step with a
    nonzero driving term hold (capped at ``C_max``); the least-squares
    constant is reported alongside.
    """
    dt = np.diff(t)
    ok = dt > 0
    lhs = np.diff(X)[ok] / dt[ok] + nu * Y[1:][ok]
    drive = D[1:][ok]
    pos = drive > 1e-300
    C_env = float(np.max(lhs[pos] / drive[pos])) if np.any(pos) else 0.0
    C = min(max(C_env, 0.0), C_max)
    C_lsq = float(np.dot(lhs, drive) / np.dot(drive, drive)) if np.any(pos) else 0.0
    slack = C * drive - lhs
    steps = np.nonzero(ok)[0] + 1
    viol = [int(steps[i]) for i in np.nonzero(slack < -10 * tol)[0]]
    return InequalityReport(name, nu, C, C_lsq, float(np.min(slack)) if slack.size else 0.0, viol)


def estimate_ledger(records: Sequence[DiagnosticsRecord], params: ModelParams, *, tol: float = 1e-7,
                    C_max: float = math.inf) -> LedgerReport:
    """Discrete Gronwall inequalities along a trajectory.

    * ``grad_rho``: ``d/dt |grad rho|^2 + (c0/beta) |lap rho|^2
      <= C (|grad rho|^2 |lap rho|^2 + |v|_4^4 |grad rho|^2)``
    * ``kinetic``: ``d/dt |sqrt(rho) v|^2 + mu_min |grad v|^2
      <= C (|grad rho|_4^4 + |lap rho|^2)(1 + |sqrt(rho) v|^2)``
    * ``higher``: ``d/dt F + nu G <= C (|grad u|^4 + |lap rho|^4 + |lap rho|^2) F``
      with ``F = |grad u|^2 + |rho_t|^2 + |lap rho|^2``,
      ``G = |u_t|^2 + |lap u|^2 + |grad lap rho|^2 + |grad rho_t|^2`` and
      ``nu = min(mu_min, c0/beta) / 10``.

    Dissipation rates are fixed from the parameters; ``C`` is fitted.
    Steps whose slack falls below ``-10 tol`` are listed as violations.
    """
    if len(records) < 2:
        return LedgerReport({})
    col = lambda name: np.array([getattr(r, name) for r in records], dtype=float)  # noqa: E731
    t = col("t")
    gr, lr, gr4, v4 = col("grad_rho_l2"), col("lap_rho_l2"), col("grad_rho_l4"), col("v_l4")
    kin, gv = col("sqrt_rho_v_l2") ** 2, col("grad_v_l2")
    gu, rt, ut, lu = col("grad_u_l2"), col("rho_t_l2"), col("u_t_l2"), col("lap_u_l2")
    gl, grt = col("grad_lap_rho_l2"), col("grad_rho_t_l2")
    mu_min = params.mu_min()
    nu1 = params.c0 / params.beta
    out = {
        "grad_rho": _inequality("grad_rho", gr**2, lr**2, gr**2 * lr**2 + v4**4 * gr**2, t, nu1, tol, C_max),
        "kinetic": _inequality("kinetic", kin, gv**2, (gr4**4 + lr**2) * (1 + kin), t, mu_min, tol, C_max),
    }
    F = gu**2 + rt**2 + lr**2
    G = ut**2 + lu**2 + gl**2 + grt**2
    out["higher"] = _inequality("higher", F, G, (gu**4 + lr**4 + lr**2) * F, t, 0.1 * min(mu_min, nu1), tol, C_max)
    return LedgerReport(out)
