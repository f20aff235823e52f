"""Low-Mach combustion model: state, linearized sub-steps and time stepping.

The unknowns are the density ``rho`` (cell centers), the velocity ``u``
(faces) and the pressure ``pi`` (cell centers) subject to

    rho_t + div(rho u) = 0
    rho u_t + rho u.grad u - div(2 mu(rho) D u) + grad pi = 0
    div u = c0 lap(1/rho)

Each time step is backward Euler, and the nonlinear system at the new level
is solved by Picard iteration: density and velocity from the previous
iterate freeze the advector and the diffusivity of the mass equation, and
the advection term of the momentum equation.

The momentum solve works on the divergence-free part.  With
``psi = 1/rho`` and ``q = c0 grad psi`` (regimes A and B) or
``q = bogovskii(c0 lap psi)`` (regime C), the velocity is ``u = r + q`` where
``r`` (``v`` or ``w``) is solenoidal and carries the wall condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq

from . import elliptic
from .elliptic import IncompatibleDataError, SolverSettings, VelocitySystem
from .grid import (
    DirichletConst,
    Grid,
    NeumannZero,
    NoSlip,
    ScalarField,
    SlipFriction,
    VectorField,
    VelocityProfile,
    apply_bc,
    divergence,
    face_average,
    gradient,
    h1_norm,
    laplacian,
    lp_norm,
    zeros_scalar,
    zeros_vector,
)


class ModelError(ValueError):
    pass


class StepRejected(RuntimeError):
    """A linearized step produced an inadmissible iterate."""


class PicardDivergence(StepRejected):
    def __init__(self, message: str, report: "PicardReport"):
        super().__init__(message)
        self.report = report


class AdvanceAborted(RuntimeError):
    def __init__(self, message: str, state: "FluidState"):
        super().__init__(message)
        self.state = state


# -- parameters ------------------------------------------------------------------


@dataclass(frozen=True)
class MuLaw:
    """Viscosity as a function of density: ``constant``, ``affine`` or ``exp``."""

    kind: str = "constant"
    mu0: float = 1.0
    mu1: float = 0.0
    k: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "affine", "exp"):
            raise ModelError(f"unknown viscosity law {self.kind!r}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self.mu0)
        if self.kind == "affine":
            return self.mu0 + self.mu1 * s
        return self.mu0 * np.exp(self.k * s)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(s)
        if self.kind == "affine":
            return np.full_like(s, self.mu1)
        return self.k * self.mu0 * np.exp(self.k * s)


@dataclass(frozen=True)
class ModelParams:
    c0: float
    mu_law: MuLaw = MuLaw()
    alpha: float = 0.5
    beta: float = 2.0
    rho_tilde: float = 1.0
    friction: Union[float, Callable] = 0.0

    def __post_init__(self):
        problems = []
        if not self.c0 > 0:
            problems.append(f"c0 must be positive (got {self.c0})")
        if not 0 < self.alpha <= self.beta:
            problems.append(f"need 0 < alpha <= beta (alpha={self.alpha}, beta={self.beta})")
        elif not self.alpha <= self.rho_tilde <= self.beta:
            problems.append(f"rho_tilde={self.rho_tilde} outside [alpha, beta]")
        else:
            s = np.linspace(self.alpha, self.beta, 65)
            if np.any(self.mu_law(s) <= 0):
                problems.append("viscosity law is not positive on [alpha, beta]")
        if not callable(self.friction) and self.friction < 0:
            problems.append(f"friction must be nonnegative (got {self.friction})")
        if problems:
            raise ModelError("; ".join(problems))

    def mu_min(self) -> float:
        return float(np.min(self.mu_law(np.linspace(self.alpha, self.beta, 65))))


@dataclass(frozen=True)
class StepControls:
    dt: float
    pic_tol: float = 1e-9
    pic_max: int = 50
    constraint_tol: float = 1e-7
    solver: SolverSettings = SolverSettings(rel_tol=1e-12, abs_tol=1e-14)
    max_halvings: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ModelError(f"time step must be positive (got {self.dt})")
        if self.pic_max < 1 or not self.pic_tol > 0:
            raise ModelError("pic_max >= 1 and pic_tol > 0 required")


@dataclass(frozen=True, eq=False)
class FluidState:
    t: float
    rho: ScalarField
    u: VectorField
    pi: ScalarField
    pi1: Optional[ScalarField] = None
    v: Optional[VectorField] = None
    Q: Optional[VectorField] = None
    step: int = 0

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    @property
    def regime(self) -> str:
        return self.rho.grid.bc_regime


@dataclass
class PicardReport:
    iterations: int = 0
    deltas: list = field(default_factory=list)
    converged: bool = False
    constraint_residual: float = 0.0
    solenoidal_residual: float = 0.0


# -- regime helpers -----------------------------------------------------------------


def density_bc(grid: Grid, params: ModelParams):
    return DirichletConst(params.rho_tilde) if grid.bc_regime == "B" else NeumannZero()


def psi_bc(grid: Grid, params: ModelParams):
    """Condition on ``1/rho``.  In regime B the wall-normal difference of
    ``1/rho`` is the normal velocity trace, so it is extrapolated to second
    order."""
    return DirichletConst(1.0 / params.rho_tilde, 2) if grid.bc_regime == "B" else NeumannZero()


def remainder_bc(grid: Grid, params: ModelParams):
    """Wall condition carried by the solenoidal part (v or w)."""
    return SlipFriction(params.friction) if grid.bc_regime == "A" else NoSlip()


def velocity_bc(grid: Grid, params: ModelParams):
    if grid.bc_regime == "A":
        return SlipFriction(params.friction)
    if grid.bc_regime == "B":
        return VelocityProfile(None)
    return NoSlip()


def inverse_density(rho: ScalarField, params: ModelParams) -> ScalarField:
    r = rho.interior
    if np.min(r) < 0.5 * params.alpha:
        raise ModelError(f"density floor breached: min rho = {np.min(r):.6g}")
    return apply_bc(rho.with_interior(1.0 / r), psi_bc(rho.grid, params))


def viscosity(rho: ScalarField, params: ModelParams) -> ScalarField:
    """``mu(rho)`` including ghosts, evaluated on the density's ghost values."""
    rho = apply_bc(rho, density_bc(rho.grid, params))
    return ScalarField(rho.grid, "center", params.mu_law(rho.data), rho.bc)


def constraint_part(rho: ScalarField, params: ModelParams, settings: Optional[SolverSettings] = None) -> VectorField:
    """The field ``q`` carrying the divergence ``c0 lap(1/rho)``."""
    psi = inverse_density(rho, params)
    if rho.grid.bc_regime == "C":
        Q, _ = _bogovskii_cached(params.c0 * laplacian(psi, psi.bc), settings)
        return Q
    return gradient(psi) * params.c0


def _bogovskii_cached(f: ScalarField, settings: Optional[SolverSettings]):
    settings = settings or SolverSettings(rel_tol=1e-12, abs_tol=1e-14)
    grid = f.grid
    total = grid.cell_area * float(np.sum(f.interior))
    scale = grid.cell_area * float(np.sum(np.abs(f.interior)))
    if abs(total) > max(settings.abs_tol, 1e-12 * scale):
        raise IncompatibleDataError(f"Bogovskii data has nonzero integral {total:.3e}")
    system = _unit_stokes_system(grid)
    ones = ScalarField(grid, "center", np.ones(grid.shape("center")))
    Q, _, report = elliptic.solve_stokes(ones, zeros_vector(grid), f, NoSlip(), settings, system=system)
    return Q, report


_UNIT_SYSTEMS: dict = {}


def _unit_stokes_system(grid: Grid) -> VelocitySystem:
    # The factorization depends only on the grid; keep a few around.
    sys_ = _UNIT_SYSTEMS.get(grid)
    if sys_ is None:
        if len(_UNIT_SYSTEMS) > 8:
            _UNIT_SYSTEMS.clear()
        ones = ScalarField(grid, "center", np.ones(grid.shape("center")))
        sys_ = _UNIT_SYSTEMS[grid] = VelocitySystem(ones, NoSlip())
    return sys_


def compute_v(state: FluidState, params: ModelParams) -> VectorField:
    """``v = u - c0 grad(1/rho)``."""
    psi = inverse_density(state.rho, params)
    return state.u - gradient(psi) * params.c0


def compute_Q(state: FluidState, params: ModelParams, settings: Optional[SolverSettings] = None) -> VectorField:
    psi = apply_bc(inverse_density(state.rho, params), NeumannZero())
    f = laplacian(psi, NeumannZero()) * params.c0
    Q, _ = _bogovskii_cached(f, settings)
    return Q


def residual_divergence_constraint(state: FluidState, params: ModelParams) -> float:
    psi = inverse_density(state.rho, params)
    r = divergence(state.u) - laplacian(psi, psi.bc) * params.c0
    return lp_norm(r, 2)


def solenoidal_residual(state: FluidState, params: ModelParams) -> float:
    """``||div v||`` in regimes A/B, ``||div w||`` with ``w = u - Q`` in C."""
    if state.regime == "C":
        Q = state.Q if state.Q is not None else compute_Q(state, params)
        return lp_norm(divergence(state.u - Q), 2)
    v = state.v if state.v is not None else compute_v(state, params)
    return lp_norm(divergence(v), 2)


# -- initialization -----------------------------------------------------------------


def init_from_velocity(u0: VectorField, params: ModelParams, level: float,
                       settings: Optional[SolverSettings] = None, *, t0: float = 0.0,
                       trace_tol: float = 1e-2) -> FluidState:
    """Build a compatible state from an initial velocity.

    Solves ``c0 lap(sigma) = div u0`` for ``sigma = 1/rho0``.  In regimes A/C
    the Neumann solution is shifted so that ``mean(rho0) == level``; in regime
    B ``sigma = 1/rho_tilde`` is imposed on the walls (``level`` must equal
    ``rho_tilde``).

    Parameters
    ----------
    trace_tol : float
        Regime B only: allowed relative mismatch between the wall-normal
        trace of ``u0`` and ``c0 d_n sigma``.
    """
    grid = u0.grid
    settings = settings or SolverSettings(rel_tol=1e-13, abs_tol=1e-15)
    regime = grid.bc_regime
    scale = max(float(np.max(np.abs(u0.u1[:, 1:-1]))), float(np.max(np.abs(u0.u2[1:-1, :]))), 1e-300)
    div_u = divergence(u0)
    if regime in ("A", "C"):
        normal = max(float(np.max(np.abs(u0.u1[[0, -1], 1:-1]))), float(np.max(np.abs(u0.u2[1:-1, [0, -1]]))))
        if normal > 1e-12 * max(scale, 1.0):
            raise IncompatibleDataError(f"initial velocity has wall-normal component {normal:.3e}")
        sigma, _ = elliptic.solve_poisson(div_u * (1.0 / params.c0), NeumannZero(), settings)
        s_in = sigma.interior
        if not level > 0:
            raise ModelError("mean density must be positive")
        w = grid.weights("center")
        target = level

        def mismatch(shift):
            return float(np.sum(w / (s_in + shift)) / np.sum(w)) - target

        lo = -float(np.min(s_in)) + 1e-14 * (1 + abs(float(np.min(s_in))))
        hi = lo + 1.0
        while mismatch(hi) > 0:
            hi = lo + 2 * (hi - lo)
            if hi - lo > 1e12:
                raise ModelError("cannot match the prescribed mean density")
        shift = brentq(mismatch, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        rho_in = 1.0 / (s_in + shift)
    else:
        if abs(level - params.rho_tilde) > 1e-14 * level:
            raise ModelError("regime B initial density is pinned by rho_tilde")
        sigma, _ = elliptic.solve_poisson(div_u * (1.0 / params.c0), psi_bc(grid, params), settings)
        trace = gradient(sigma) * params.c0
        gap = max(float(np.max(np.abs(u0.u1[[0, -1], 1:-1] - trace.u1[[0, -1], 1:-1]))),
                  float(np.max(np.abs(u0.u2[1:-1, [0, -1]] - trace.u2[1:-1, [0, -1]]))))
        if gap > trace_tol * max(scale, 1e-12):
            raise IncompatibleDataError(f"initial velocity trace is inconsistent with case B (gap {gap:.3e})")
        rho_in = 1.0 / sigma.interior
    if not np.all(np.isfinite(rho_in)) or np.min(rho_in) <= 0:
        raise ModelError("initial velocity implies a non-positive density")
    lo_b, hi_b = float(np.min(rho_in)), float(np.max(rho_in))
    if lo_b < params.alpha or hi_b > params.beta:
        raise ModelError(f"initial density range [{lo_b:.6g}, {hi_b:.6g}] leaves [alpha, beta]")
    rho = apply_bc(zeros_scalar(grid).with_interior(rho_in), density_bc(grid, params))
    return make_state(rho, u0, params, t=t0)


def make_state(rho: ScalarField, u: VectorField, params: ModelParams, *, t: float = 0.0,
               pi: Optional[ScalarField] = None, settings: Optional[SolverSettings] = None) -> FluidState:
    """Package ``(rho, u)`` as a state with ghosts filled and ``v``/``Q`` cached."""
    grid = rho.grid
    rho = apply_bc(rho, density_bc(grid, params))
    bc = velocity_bc(grid, params)
    u = apply_bc(u, bc)
    pi = pi if pi is not None else zeros_scalar(grid)
    state = FluidState(t, rho, u, pi, pi1=pi)
    v = compute_v(state, params)
    Q = compute_Q(state, params, settings) if grid.bc_regime == "C" else None
    return replace(state, v=v, Q=Q)




# -- linearized sub-steps -------------------------------------------------------------


@dataclass(frozen=True)
class Forcing:
    """Manufactured sources evaluated at a time level.

    ``mass(grid, t)`` returns interior center values; ``momentum(grid, t)``
    returns a VectorField (interior faces are used).
    """

    mass: Callable
    momentum: Callable


def _hybrid_weights(F: np.ndarray, D: np.ndarray, h: float):
    """Face interpolation weights (left, right): centered when the cell
    Peclet number ``|F| h / D`` is at most 2, upwind otherwise."""
    central = np.abs(F) * h <= 2.0 * D
    wl = np.where(central, 0.5, np.where(F > 0, 1.0, 0.0))
    return wl, 1.0 - wl


def mass_step_linearized(rho_old: ScalarField, Phi: VectorField, phi: ScalarField, dt: float,
                         params: ModelParams, *, source: Optional[np.ndarray] = None,
                         bound_tol: float = 1e-9) -> ScalarField:
    """One backward-Euler step of ``rho_t + Phi.grad rho - c0 div(phi^-1 grad rho) = source``.

    Regimes A/C use the conservative flux form with zero wall flux; regime B
    advances ``log rho`` with ``log rho_tilde`` on the walls.  Advection is
    centered where the cell Peclet number allows and upwinded elsewhere, so
    the matrix is an M-matrix and the discrete maximum principle holds.

    Raises
    ------
    StepRejected
        If the new density leaves ``[alpha, beta]`` by more than ``10*bound_tol``.
    """
    grid = rho_old.grid
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    n = nx * ny
    ids = np.arange(n).reshape(nx, ny)
    phi_in = phi.interior
    if np.min(phi_in) <= 0:
        raise StepRejected("frozen density is not positive")
    c0 = params.c0
    log_form = grid.bc_regime == "B"
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    diag = np.full((nx, ny), 1.0 / dt)
    x_old = rho_old.interior.copy()
    if log_form:
        x_old = np.log(x_old)
    # solve for the increment; the residual is built in difference form so a
    # constant density at rest gives exactly zero
    res = np.zeros((nx, ny))
    if source is not None:
        res += source / phi_in if log_form else source
    inv_phi = 1.0 / phi_in
    faces = (
        (Phi.u1[1:-1, 1:-1], ids[:-1, :], ids[1:, :], hx, (slice(0, -1), slice(None)), (slice(1, None), slice(None))),
        (Phi.u2[1:-1, 1:-1], ids[:, :-1], ids[:, 1:], hy, (slice(None), slice(0, -1)), (slice(None), slice(1, None))),
    )
    for F, left, right, h, sl_l, sl_r in faces:
        h2 = h * h
        xl, xr = x_old[sl_l], x_old[sl_r]
        if log_form:
            DL, DR = c0 * inv_phi[sl_l], c0 * inv_phi[sl_r]
            wl, wr = _hybrid_weights(F, np.minimum(DL, DR), h)
            # row of the left cell (outward flux +F): F (L_f - L_left) / h
            add(left, right, F * wr / h - DL / h2)
            diag[sl_l] += -F * wr / h + DL / h2
            # row of the right cell (outward flux -F)
            add(right, left, -F * wl / h - DR / h2)
            diag[sl_r] += F * wl / h + DR / h2
            res[sl_l] -= F * wr * (xr - xl) / h + DL * (xl - xr) / h2
            res[sl_r] -= F * wl * (xr - xl) / h + DR * (xr - xl) / h2
        else:
            D = 0.5 * c0 * (inv_phi[sl_l] + inv_phi[sl_r])
            wl, wr = _hybrid_weights(F, D, h)
            add(left, right, F * wr / h - D / h2)
            diag[sl_l] += F * wl / h + D / h2
            add(right, left, -F * wl / h - D / h2)
            diag[sl_r] += -F * wr / h + D / h2
            flux = F * (wl * xl + wr * xr) / h
            res[sl_l] -= flux + D * (xl - xr) / h2
            res[sl_r] -= -flux + D * (xr - xl) / h2
    if log_form:
        # quadratic ghost 8g/3 - 2 L_1 + L_2/3 (linear 2g - L_1 on one-cell-wide grids)
        g = math.log(params.rho_tilde)
        Dc = c0 * inv_phi
        walls = (((0, slice(None)), (1, slice(None)), hx, nx), ((-1, slice(None)), (-2, slice(None)), hx, nx),
                 ((slice(None), 0), (slice(None), 1), hy, ny), ((slice(None), -1), (slice(None), -2), hy, ny))
        for sl, inner, h, m in walls:
            if m >= 2:
                diag[sl] += 3.0 * Dc[sl] / h**2
                add(ids[sl], ids[inner], -Dc[sl] / (3.0 * h**2))
                res[sl] -= Dc[sl] * (3.0 * (x_old[sl] - g) - (x_old[inner] - g) / 3.0) / h**2
            else:
                diag[sl] += 2.0 * Dc[sl] / h**2
                res[sl] -= 2.0 * Dc[sl] * (x_old[sl] - g) / h**2
    add(ids, ids, diag)
    M = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    sol = x_old + spla.splu(M).solve(res.ravel()).reshape(nx, ny)
    if log_form:
        sol = np.exp(sol)
    if not np.all(np.isfinite(sol)):
        raise StepRejected("mass step produced non-finite density")
    slack = 10.0 * bound_tol
    lo, hi = float(np.min(sol)), float(np.max(sol))
    if lo < params.alpha - slack or hi > params.beta + slack:
        raise StepRejected(f"density range [{lo:.12g}, {hi:.12g}] escapes [alpha, beta]")
    return apply_bc(rho_old.with_interior(sol), density_bc(grid, params))


def advection(a: VectorField, u: VectorField) -> VectorField:
    """Centered ``(a.grad) u`` on interior faces; ghosts of ``u`` are used."""
    g = a.grid
    out = zeros_vector(g)
    u1, u2 = u.u1, u.u2
    a1x = a.u1[1:-1, 1:-1]
    a2x = 0.25 * (a.u2[1:-2, :-1] + a.u2[2:-1, :-1] + a.u2[1:-2, 1:] + a.u2[2:-1, 1:])
    d1 = (u1[2:, 1:-1] - u1[:-2, 1:-1]) / (2 * g.hx)
    d2 = (u1[1:-1, 2:] - u1[1:-1, :-2]) / (2 * g.hy)
    out.u1[1:-1, 1:-1] = a1x * d1 + a2x * d2
    a2y = a.u2[1:-1, 1:-1]
    a1y = 0.25 * (a.u1[:-1, 1:-2] + a.u1[1:, 1:-2] + a.u1[:-1, 2:-1] + a.u1[1:, 2:-1])
    d1 = (u2[2:, 1:-1] - u2[:-2, 1:-1]) / (2 * g.hx)
    d2 = (u2[1:-1, 2:] - u2[1:-1, :-2]) / (2 * g.hy)
    out.u2[1:-1, 1:-1] = a1y * d1 + a2y * d2
    return out


def momentum_step_linearized(state_old: FluidState, rho_new: ScalarField, advector: VectorField,
                             dt: float, params: ModelParams, settings: Optional[SolverSettings] = None,
                             *, lagged: Optional[VectorField] = None, q: Optional[VectorField] = None,
                             source: Optional[VectorField] = None):
    """Backward-Euler momentum solve at the new density.

    Solves for the solenoidal remainder ``r`` in
    ``rho (r + q - u_old)/dt + rho (advector.grad) lagged - div(2 mu D(r + q)) + grad pi = source``
    with ``div r = 0`` and the regime's wall condition on ``r``, then returns
    ``u = r + q`` (ghosts filled) and ``pi`` (zero mean).  ``lagged`` defaults
    to ``advector``; ``q`` defaults to :func:`constraint_part` of ``rho_new``.
    """
    settings = settings or SolverSettings(rel_tol=1e-12, abs_tol=1e-14)
    grid = rho_new.grid
    if q is None:
        q = constraint_part(rho_new, params, settings)
    lagged = advector if lagged is None else lagged
    rho_f = face_average(rho_new, density_bc(grid, params))
    mu = viscosity(rho_new, params)
    mass = rho_f * (1.0 / dt)
    system = VelocitySystem(mu, remainder_bc(grid, params), mass)
    lay = system.layout
    adv = advection(advector, lagged)
    f = lay.pack(mass) * lay.pack(state_old.u) - lay.pack(rho_f) * lay.pack(adv)
    if source is not None:
        f = f + lay.pack(source)
    # q enters with its wall values and ghosts, which r (zero on the walls) lacks
    q_full = apply_bc(q, velocity_bc(grid, params))
    f = f - system.viscous_padded @ lay.padded(q_full) - system.mass * lay.pack(q_full)
    rhs = lay.unpad(np.zeros(lay.npad))
    rhs.u1[1:-1, 1:-1] = f[: lay.N1].reshape(grid.nx - 1, grid.ny)
    rhs.u2[1:-1, 1:-1] = f[lay.N1:].reshape(grid.nx, grid.ny - 1)
    zero = zeros_scalar(grid)
    r, pi, report = elliptic.solve_stokes(mu, rhs, zero, remainder_bc(grid, params), settings, system=system)
    u = zeros_vector(grid)
    u.u1[:, :] = q.u1
    u.u2[:, :] = q.u2
    u.u1[1:-1, 1:-1] += r.u1[1:-1, 1:-1]
    u.u2[1:-1, 1:-1] += r.u2[1:-1, 1:-1]
    u = apply_bc(u, velocity_bc(grid, params))
    return u, pi


def modified_pressure(pi: ScalarField, rho_old: ScalarField, rho_new: ScalarField, dt: float,
                      params: ModelParams) -> ScalarField:
    """``pi1 = pi - c0 (log rho_new - log rho_old)/dt``."""
    d = (np.log(rho_new.interior) - np.log(rho_old.interior)) / dt
    return apply_bc(pi.with_interior(pi.interior - params.c0 * d), NeumannZero())


# -- Picard iteration and time loop ----------------------------------------------------


def _delta(rho_a: ScalarField, rho_b: ScalarField, u_a: VectorField, u_b: VectorField, params) -> float:
    d_rho = apply_bc(rho_a - rho_b, NeumannZero() if rho_a.grid.bc_regime != "B" else DirichletConst(0.0))
    return h1_norm(d_rho) + lp_norm(u_a - u_b, 2)


def picard_step(state: FluidState, controls: StepControls, params: ModelParams, *,
                dt: Optional[float] = None, forcing: Optional[Forcing] = None):
    """Advance one backward-Euler step by Picard iteration.

    Returns ``(new_state, PicardReport)``.

    Raises
    ------
    PicardDivergence
        No convergence within ``pic_max`` iterations or blow-up of the deltas.
    StepRejected
        The density left ``[alpha, beta]`` or the constraint residual exceeds
        ``constraint_tol``.
    """
    dt = controls.dt if dt is None else dt
    grid = state.grid
    settings = controls.solver
    t_new = state.t + dt
    src_mass = forcing.mass(grid, t_new) if forcing else None
    src_mom = forcing.momentum(grid, t_new) if forcing else None
    report = PicardReport()
    rho_k, u_k = state.rho, state.u
    v_k = state.v if state.v is not None else compute_v(state, params)
    pi_k = state.pi
    q_k = None
    for k in range(1, controls.pic_max + 1):
        rho_next = mass_step_linearized(state.rho, v_k, rho_k, dt, params,
                                        source=src_mass, bound_tol=controls.pic_tol)
        q_next = constraint_part(rho_next, params, settings)
        try:
            u_next, pi_next = momentum_step_linearized(
                state, rho_next, u_k, dt, params, settings, q=q_next, source=src_mom)
        except elliptic.ConvergenceError as exc:
            raise PicardDivergence(f"linear solve failed in Picard iteration {k}: {exc}", report) from exc
        delta = _delta(rho_next, rho_k, u_next, u_k, params)
        report.deltas.append(delta)
        report.iterations = k
        rho_k, u_k, pi_k, q_k = rho_next, u_next, pi_next, q_next
        if not math.isfinite(delta) or (k > 3 and delta > 1e3 * max(report.deltas[0], 1e-300)):
            raise PicardDivergence(f"Picard deltas diverge (delta_{k} = {delta:.3e})", report)
        if delta <= controls.pic_tol:
            report.converged = True
            break
        psi = inverse_density(rho_k, params)
        v_k = u_k - gradient(psi) * params.c0
    if not report.converged:
        raise PicardDivergence(
            f"Picard iteration did not converge in {controls.pic_max} iterations "
            f"(last delta {report.deltas[-1]:.3e})", report)
    psi = inverse_density(rho_k, params)
    v = u_k - gradient(psi) * params.c0
    new = FluidState(
        t_new, rho_k, u_k, pi_k,
        pi1=modified_pressure(pi_k, state.rho, rho_k, dt, params),
        v=v, Q=q_k if grid.bc_regime == "C" else None, step=state.step + 1,
    )
    report.constraint_residual = residual_divergence_constraint(new, params)
    report.solenoidal_residual = solenoidal_residual(new, params)
    worst = max(report.constraint_residual, report.solenoidal_residual)
    if worst > controls.constraint_tol:
        raise StepRejected(f"divergence constraint residual {worst:.3e} above tolerance")
    return new, report


def advance(state0: FluidState, t_end: float, controls: StepControls, params: ModelParams,
            diag_sink: Optional[Callable] = None, *, forcing: Optional[Forcing] = None,
            monitor=None, on_step: Optional[Callable] = None,
            report_sink: Optional[Callable] = None) -> FluidState:
    """Integrate from ``state0.t`` to ``t_end``.

    Each accepted step produces a diagnostics record (see
    :mod:`machcombust.diagnostics`) passed to ``diag_sink``.  ``monitor`` is a
    :class:`~machcombust.diagnostics.SerrinMonitor`; one is created if omitted
    and is reachable afterwards as ``advance.last_monitor``.  A rejected step is
    retried with half the time step, at most ``controls.max_halvings`` times.
    ``report_sink`` receives the :class:`PicardReport` of each accepted step.

    Raises
    ------
    AdvanceAborted
        Carries the last accepted state when a step cannot be completed.
    """
    from .diagnostics import SerrinMonitor, energy_record

    if not t_end > state0.t:
        raise ModelError(f"t_end={t_end} must exceed the initial time {state0.t}")
    monitor = monitor if monitor is not None else SerrinMonitor.default()
    advance.last_monitor = monitor
    state = state0
    eps = 1e-12 * max(1.0, abs(t_end))
    while t_end - state.t > eps:
        dt = min(controls.dt, t_end - state.t)
        for attempt in range(controls.max_halvings + 1):
            try:
                new, report = picard_step(state, controls, params, dt=dt, forcing=forcing)
                break
            except StepRejected as exc:
                reason = str(exc)
                dt *= 0.5
        else:
            raise AdvanceAborted(f"step from t={state.t:.6g} rejected after halving: {reason}", state)
        if t_end - new.t <= eps:
            new = replace(new, t=t_end)
        monitor.accumulate(state, params, new.t - state.t)
        record = energy_record(new, state, new.t - state.t, params, picard=report, monitor=monitor)
        if diag_sink is not None:
            diag_sink(record)
        if report_sink is not None:
            report_sink(report)
        if on_step is not None:
            on_step(new, record)
        state = new
    return state


advance.last_monitor = None
