"""Manufactured solutions, forced stepping and convergence-rate fits.

Every catalog case satisfies ``div u = c0 lap(1/rho)`` and its regime's wall
conditions exactly.  Sources are hand-derived closed forms.

Derivation for the gradient-flow cases (``u = c0 grad psi``, ``psi = 1/rho``)
--------------------------------------------------------------------------------
With subscripts denoting partial derivatives and summation over repeated
indices::

    psi_i   = -rho_i / rho^2
    psi_ij  = 2 rho_i rho_j / rho^3 - rho_ij / rho^2
    psi_ijk = -6 rho_i rho_j rho_k / rho^4
              + 2 (rho_ik rho_j + rho_i rho_jk + rho_ij rho_k) / rho^3
              - rho_ijk / rho^2
    psi_t   = -rho_t / rho^2,   psi_ti = 2 rho_t rho_i / rho^3 - rho_ti / rho^2

Mass source ``rho_t + div(rho u) = rho_t + c0 (rho_i psi_i + rho psi_jj)``.
Because ``D(u) = c0 Hess(psi)``,
``div(2 mu D u)_i = 2 c0 (mu'(rho) rho_j psi_ij + mu psi_ijj)``, so the
momentum source is::

    f_i = rho (c0 psi_ti + c0^2 psi_j psi_ij) - 2 c0 (mu' rho_j psi_ij + mu psi_ijj) + pi_i

Taylor-Green case (``rho = 1``)
-------------------------------
``u = A(t) (sin k1 x cos k2 y, -(k1/k2) cos k1 x sin k2 y)`` with
``A = exp(-t)`` is solenoidal and ``u.grad u = -grad P`` for
``P = (A^2/4)(cos 2 k1 x + (k1/k2)^2 cos 2 k2 y)``.  Taking ``pi = P`` and
``mu = mu0`` leaves ``f = (-1 + mu0 (k1^2 + k2^2)) u``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .elliptic import solve_poisson
from .grid import (
    Grid,
    NeumannZero,
    VectorField,
    apply_bc,
    divergence,
    face_average,
    gradient,
    lp_norm,
    make_grid,
    mean,
    sample_scalar,
    sample_vector,
)
from .elliptic import stress_divergence
from .model import (
    Forcing,
    ModelParams,
    MuLaw,
    StepControls,
    advance,
    advection,
    constraint_part,
    density_bc,
    make_state,
    velocity_bc,
    viscosity,
)


class StudyError(ValueError):
    pass


def _trig(kind: str, k: float, s, order: int):
    """``d^order/ds^order`` of ``sin(k s)`` or ``cos(k s)``."""
    phase = {"sin": 0, "cos": 1}[kind] + order
    base = np.sin(k * s) if phase % 2 == 0 else np.cos(k * s)
    sign = (1, 1, -1, -1)[phase % 4]
    return sign * k**order * base


@dataclass(frozen=True)
class SeparableDensity:
    """``rho = rho0 + a exp(-lam t) X(k1 x) Y(k2 y)`` with X, Y in {sin, cos}."""

    rho0: float
    a: float
    lam: float
    kx: str
    ky: str
    k1: float
    k2: float

    def derivs(self, x, y, t) -> dict:
        E = self.a * math.exp(-self.lam * t)
        X = [_trig(self.kx, self.k1, x, n) for n in range(4)]
        Y = [_trig(self.ky, self.k2, y, n) for n in range(4)]
        d = {}
        for nx_ in range(4):
            for ny_ in range(4 - nx_):
                d[(nx_, ny_)] = E * X[nx_] * Y[ny_]
        d[(0, 0)] = self.rho0 + d[(0, 0)]
        d["t"] = -self.lam * (d[(0, 0)] - self.rho0)
        d["tx"] = -self.lam * d[(1, 0)]
        d["ty"] = -self.lam * d[(0, 1)]
        return d


def _gradient_flow_fields(dens: SeparableDensity, c0: float, mu_law: MuLaw, p_amp: float, lam_p: float,
                          lx: float, ly: float):
    def parts(x, y, t):
        d = dens.derivs(x, y, t)
        r = d[(0, 0)]
        g = [d[(1, 0)], d[(0, 1)]]
        H = [[d[(2, 0)], d[(1, 1)]], [d[(1, 1)], d[(0, 2)]]]

        def third(i, j, k):
            n1 = (i == 0) + (j == 0) + (k == 0)
            return d[(n1, 3 - n1)]

        psi1 = [-g[i] / r**2 for i in range(2)]
        psi2 = [[2 * g[i] * g[j] / r**3 - H[i][j] / r**2 for j in range(2)] for i in range(2)]

        def psi3(i, j, k):
            return (-6 * g[i] * g[j] * g[k] / r**4
                    + 2 * (H[i][k] * g[j] + g[i] * H[j][k] + H[i][j] * g[k]) / r**3
                    - third(i, j, k) / r**2)

        rt = d["t"]
        rti = [d["tx"], d["ty"]]
        psit = [2 * rt * g[i] / r**3 - rti[i] / r**2 for i in range(2)]
        return d, r, g, psi1, psi2, psi3, psit

    def rho(x, y, t):
        return dens.derivs(x, y, t)[(0, 0)]

    def u(x, y, t):
        _, r, g, psi1, *_ = parts(x, y, t)
        return c0 * psi1[0], c0 * psi1[1]

    E2 = lambda t: p_amp * math.exp(-lam_p * t)  # noqa: E731
    K1, K2 = 2 * math.pi / lx, 2 * math.pi / ly

    def pi(x, y, t):
        return E2(t) * np.cos(K1 * x) * np.cos(K2 * y)

    def grad_pi(x, y, t):
        return -E2(t) * K1 * np.sin(K1 * x) * np.cos(K2 * y), -E2(t) * K2 * np.cos(K1 * x) * np.sin(K2 * y)

    def f_mass(x, y, t):
        d, r, g, psi1, psi2, *_ = parts(x, y, t)
        return d["t"] + c0 * (g[0] * psi1[0] + g[1] * psi1[1] + r * (psi2[0][0] + psi2[1][1]))

    def f_mom(x, y, t):
        d, r, g, psi1, psi2, psi3, psit = parts(x, y, t)
        mu = mu_law(r)
        dmu = mu_law.derivative(r)
        gp = grad_pi(x, y, t)
        out = []
        for i in range(2):
            inertia = r * (c0 * psit[i] + c0**2 * (psi1[0] * psi2[0][i] + psi1[1] * psi2[1][i]))
            visc = 2 * c0 * (dmu * (g[0] * psi2[0][i] + g[1] * psi2[1][i]) + mu * (psi3(i, 0, 0) + psi3(i, 1, 1)))
            out.append(inertia - visc + gp[i])
        return out[0], out[1]

    def rho_t(x, y, t):
        return dens.derivs(x, y, t)["t"]

    def u_t(x, y, t):
        *_, psit = parts(x, y, t)
        return c0 * psit[0], c0 * psit[1]

    return rho, u, pi, f_mass, f_mom, rho_t, u_t


@dataclass(frozen=True)
class ManufacturedCase:
    id: str
    regime: str
    params: ModelParams
    lx: float
    ly: float
    rho: Callable
    u: Callable
    pi: Callable
    f_mass: Callable
    f_mom: Callable
    rho_t: Callable
    u_t: Callable
    solenoidal: Optional[Callable] = None
    t_window: float = 1.0
    notes: str = ""

    def grid(self, n: int, ny: Optional[int] = None) -> Grid:
        return make_grid(n, ny or n, self.lx, self.ly, self.regime)

    def forcing(self) -> Forcing:
        def mass(grid, t):
            X, Y = grid.coords("center")
            return np.asarray(self.f_mass(X[1:-1, 1:-1], Y[1:-1, 1:-1], t)) * np.ones((grid.nx, grid.ny))

        def momentum(grid, t):
            return sample_vector(grid, lambda x, y: self.f_mom(x, y, t))

        return Forcing(mass, momentum)


CATALOG = ("const_density_taylor_green", "diffusing_bump_neumann", "dirichlet_relax")


def manufactured_case(case_id: str) -> ManufacturedCase:
    """Catalog entry by id (see module docstring for the derivations)."""
    if case_id == "const_density_taylor_green":
        lx = ly = 1.0
        k1, k2 = math.pi / lx, math.pi / ly
        mu0 = 0.1
        params = ModelParams(c0=0.1, mu_law=MuLaw("constant", mu0), alpha=0.5, beta=2.0, rho_tilde=1.0)
        lam = -1.0 + mu0 * (k1**2 + k2**2)

        def u(x, y, t):
            A = math.exp(-t)
            return A * np.sin(k1 * x) * np.cos(k2 * y), -A * (k1 / k2) * np.cos(k1 * x) * np.sin(k2 * y)

        def pi(x, y, t):
            A = math.exp(-t)
            return (A * A / 4) * (np.cos(2 * k1 * x) + (k1 / k2) ** 2 * np.cos(2 * k2 * y))

        def f_mom(x, y, t):
            a, b = u(x, y, t)
            return lam * a, lam * b

        def u_t(x, y, t):
            a, b = u(x, y, t)
            return -a, -b

        one = lambda x, y, t: np.ones_like(np.asarray(x, dtype=float))  # noqa: E731
        zero = lambda x, y, t: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
        return ManufacturedCase(case_id, "A", params, lx, ly, one, u, pi, zero, f_mom, zero, u_t,
                                solenoidal=u, notes="rho = 1, slip walls with b = 0")
    if case_id == "diffusing_bump_neumann":
        lx, ly = 1.0, 1.0
        c0 = 0.1
        mu_law = MuLaw("affine", 0.5, 0.25)
        params = ModelParams(c0=c0, mu_law=mu_law, alpha=0.5, beta=2.0, rho_tilde=1.0)
        dens = SeparableDensity(1.0, 0.2, 1.0, "cos", "cos", math.pi / lx, math.pi / ly)
        fields_ = _gradient_flow_fields(dens, c0, mu_law, 0.05, 1.0, lx, ly)
        return ManufacturedCase(case_id, "A", params, lx, ly, *fields_,
                                notes="cosine density bump, u = c0 grad(1/rho), slip walls with b = 0")
    if case_id == "dirichlet_relax":
        lx, ly = 1.0, 1.0
        c0 = 0.1
        mu_law = MuLaw("affine", 0.5, 0.25)
        params = ModelParams(c0=c0, mu_law=mu_law, alpha=0.5, beta=2.0, rho_tilde=1.0)
        dens = SeparableDensity(1.0, 0.2, 1.0, "sin", "sin", math.pi / lx, math.pi / ly)
        fields_ = _gradient_flow_fields(dens, c0, mu_law, 0.05, 1.0, lx, ly)
        return ManufacturedCase(case_id, "B", params, lx, ly, *fields_,
                                notes="sine density relaxing to rho_tilde, u = c0 grad(1/rho)")
    raise StudyError(f"unknown manufactured case {case_id!r}; known: {', '.join(CATALOG)}")


# -- discrete checks ------------------------------------------------------------------------


def discrete_residuals(case: ManufacturedCase, grid: Grid, t: float):
    """Exact fields pushed through the spatial operators, minus the sources.

    Time derivatives are taken exactly; returns ``(mass, momentum)`` residual
    fields (interior cells and interior faces).
    """
    params = case.params
    rho = apply_bc(sample_scalar(grid, lambda x, y: case.rho(x, y, t)), density_bc(grid, params))
    u = sample_vector(grid, lambda x, y: case.u(x, y, t))
    ut = sample_vector(grid, lambda x, y: case.u_t(x, y, t))
    pi = sample_scalar(grid, lambda x, y: case.pi(x, y, t))
    rho_f = face_average(rho)
    flux = VectorField(grid, rho_f.u1 * u.u1, rho_f.u2 * u.u2)
    X, Y = grid.coords("center")
    mass = case.rho_t(X, Y, t) + divergence(flux).data - case.f_mass(X, Y, t)
    mass_f = rho.with_interior(mass[1:-1, 1:-1])
    inertia = ut + advection(u, u)
    mom = VectorField(grid, rho_f.u1 * inertia.u1, rho_f.u2 * inertia.u2) + stress_divergence(u, viscosity(rho, params)) \
        + gradient(pi) - sample_vector(grid, lambda x, y: case.f_mom(x, y, t))
    mom.u1[[0, -1], :] = 0.0
    mom.u2[:, [0, -1]] = 0.0
    return mass_f, mom


def exact_state(case: ManufacturedCase, grid: Grid, t: float = 0.0):
    """Discrete state at time ``t`` built from the exact density.

    The velocity is the discrete constraint part of ``rho*`` plus the
    discretely projected solenoidal part of the exact velocity (if any).
    """
    params = case.params
    rho = sample_scalar(grid, lambda x, y: case.rho(x, y, t))
    rho = apply_bc(rho, density_bc(grid, params))
    u = constraint_part(rho, params)
    if case.solenoidal is not None:
        w = sample_vector(grid, lambda x, y: case.solenoidal(x, y, t))
        w = apply_bc(w, velocity_bc(grid, params))
        phi, _ = solve_poisson(divergence(w), NeumannZero())
        w = w - gradient(phi)
        u = u + w
    return make_state(rho, u, params, t=t)


@dataclass
class Trajectory:
    states: list
    records: list

    @property
    def final(self):
        return self.states[-1]


def forced_advance(case: ManufacturedCase, grid: Grid, controls: StepControls, t_end: float,
                   params: Optional[ModelParams] = None, *, state0=None, keep_states: bool = False) -> Trajectory:
    """Run :func:`machcombust.model.advance` with the case sources switched on."""
    if grid.bc_regime != case.regime:
        raise StudyError(f"case {case.id} needs regime {case.regime}, grid has {grid.bc_regime}")
    params = params or case.params
    state0 = state0 or exact_state(case, grid, 0.0)
    states = [state0]
    records: list = []

    def keep(state, record):
        if keep_states:
            states.append(state)

    final = advance(state0, t_end, controls, params, records.append, forcing=case.forcing(), on_step=keep)
    if not keep_states:
        states.append(final)
    return Trajectory(states, records)


def solution_errors(case: ManufacturedCase, state) -> dict:
    g = state.grid
    t = state.t
    rho = sample_scalar(g, lambda x, y: case.rho(x, y, t))
    u = sample_vector(g, lambda x, y: case.u(x, y, t))
    pi = sample_scalar(g, lambda x, y: case.pi(x, y, t))
    dp = state.pi - pi
    dp = dp - mean(dp)
    return {"rho": lp_norm(state.rho - rho, 2), "u": lp_norm(state.u - u, 2), "pi": lp_norm(dp, 2)}


# -- rate tables -------------------------------------------------------------------------------


def fit_order(hs: Sequence[float], errs: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of ``log err`` against ``log h`` and its residual."""
    lh = np.log(np.asarray(hs, dtype=float))
    le = np.log(np.maximum(np.asarray(errs, dtype=float), 1e-300))
    A = np.vstack([lh, np.ones_like(lh)]).T
    coef, res, *_ = np.linalg.lstsq(A, le, rcond=None)
    resid = float(np.sqrt(res[0] / len(lh))) if res.size else 0.0
    return float(coef[0]), resid


@dataclass
class RateTable:
    case: str
    kind: str  # "space" or "time"
    sizes: list
    dts: list
    errors: dict
    orders: dict
    fit_residuals: dict
    flags: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["case", "kind", "n", "dt", "err_rho", "err_u", "err_pi"])
        for k, (n, dt) in enumerate(zip(self.sizes, self.dts)):
            w.writerow([self.case, self.kind, n, "%.17g" % dt] + ["%.17g" % self.errors[v][k] for v in ("rho", "u", "pi")])
        for v in ("rho", "u", "pi"):
            w.writerow([self.case, self.kind, "order_" + v, "", "%.6g" % self.orders[v], "fit_residual", "%.3g" % self.fit_residuals[v]])
        return buf.getvalue()


def _table(case, kind, sizes, dts, scale, errs) -> RateTable:
    orders, resid, flags = {}, {}, []
    for v in ("rho", "u", "pi"):
        e = [er[v] for er in errs]
        orders[v], resid[v] = fit_order(scale, e)
        if any(e[i + 1] >= e[i] for i in range(len(e) - 1)):
            flags.append(f"non-monotone {v} errors")
    return RateTable(case.id, kind, list(sizes), list(dts),
                     {v: [er[v] for er in errs] for v in ("rho", "u", "pi")}, orders, resid, flags)


def convergence_study(case: ManufacturedCase, grids: Sequence[int], *, dt_coarse: Optional[float] = None,
                      t_end: Optional[float] = None, pic_tol: float = 1e-10) -> RateTable:
    """Spatial study with ``dt`` proportional to ``h^2``.

    ``dt_coarse`` is the step on the coarsest grid (default ``h^2``) and
    ``t_end`` defaults to two coarse steps.
    """
    grids = sorted(int(n) for n in grids)
    if len(grids) < 3:
        raise StudyError("a convergence study needs at least three grids")
    h0 = case.lx / grids[0]
    dt0 = dt_coarse if dt_coarse is not None else h0 * h0
    t_end = t_end if t_end is not None else 2 * dt0
    errs, dts, hs = [], [], []
    for n in grids:
        g = case.grid(n)
        dt = dt0 * (g.hx / h0) ** 2
        tr = forced_advance(case, g, StepControls(dt=dt, pic_tol=pic_tol), t_end)
        errs.append(solution_errors(case, tr.final))
        dts.append(dt)
        hs.append(g.hx)
    return _table(case, "space", grids, dts, hs, errs)


def _state_difference(a, b) -> dict:
    dp = a.pi - b.pi
    dp = dp - mean(dp)
    return {"rho": lp_norm(a.rho - b.rho, 2), "u": lp_norm(a.u - b.u, 2), "pi": lp_norm(dp, 2)}


def temporal_study(case: ManufacturedCase, n: int, dts: Sequence[float], t_end: float,
                   pic_tol: float = 1e-10, *, reference: str = "exact") -> RateTable:
    """Errors at ``t_end`` on one grid for a sequence of time steps.

    With ``reference="exact"`` errors are measured against the closed form,
    so the spatial error of the grid sets a floor.  ``reference="successive"``
    uses differences between runs with consecutive steps instead; the common
    spatial error cancels and the table has one row fewer than ``dts``.
    """
    dts = sorted((float(d) for d in dts), reverse=True)
    if reference not in ("exact", "successive"):
        raise StudyError(f"unknown reference {reference!r}")
    need = 3 if reference == "exact" else 4
    if len(dts) < need:
        raise StudyError(f"a temporal study with reference={reference!r} needs at least {need} time steps")
    g = case.grid(n)
    finals = [forced_advance(case, g, StepControls(dt=dt, pic_tol=pic_tol), t_end).final for dt in dts]
    if reference == "exact":
        errs = [solution_errors(case, s) for s in finals]
        return _table(case, "time", [n] * len(dts), dts, dts, errs)
    errs = [_state_difference(a, b) for a, b in zip(finals[:-1], finals[1:])]
    return _table(case, "time", [n] * len(errs), dts[:-1], dts[:-1], errs)
