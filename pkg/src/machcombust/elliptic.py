"""Poisson, variable-viscosity Stokes, Bogovskii and boundary-lift solvers.

Operators are assembled as sparse matrices acting on the physical unknowns
(interior cells for scalars, interior faces for velocities).  Ghost values are
eliminated through an affine map ``padded = P @ unknowns + g`` built from the
same ghost rules that :func:`machcombust.grid.apply_bc` uses, so a matrix
product and a ghost-filled stencil evaluation agree to round-off.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.fft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

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
    fill_velocity_ghosts,
    tangential_ghost_rule,
    zeros_vector,
)


class IncompatibleDataError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SolverSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_iter: Optional[int] = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("solver tolerances must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def iterations_for(self, grid: Grid) -> int:
        return self.max_iter if self.max_iter is not None else 10 * grid.nx * grid.ny


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool
    initial_residual: float = 0.0
    momentum_residual: float = 0.0
    history: list = field(default_factory=list, repr=False)


def fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("MACHCOMBUST_THREADS", "1")))
    except ValueError:
        return 1


# -- index bookkeeping -------------------------------------------------------------


def _ids(shape) -> np.ndarray:
    return np.arange(shape[0] * shape[1]).reshape(shape)


class _Builder:
    """Accumulates COO triplets."""

    def __init__(self, shape):
        self.shape = shape
        self.r, self.c, self.v = [], [], []

    def add(self, rows, cols, vals):
        rows = np.asarray(rows)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        rows = rows.ravel()
        cols = np.asarray(cols).ravel()
        self.r.append(rows)
        self.c.append(cols)
        self.v.append(vals)
        return self

    def tocsr(self) -> sp.csr_matrix:
        if not self.r:
            return sp.csr_matrix(self.shape)
        return sp.csr_matrix(
            (np.concatenate(self.v), (np.concatenate(self.r), np.concatenate(self.c))), shape=self.shape
        )


# -- scalar Laplacian ------------------------------------------------------------------


def scalar_laplacian_matrix(grid: Grid, bc) -> tuple[sp.csr_matrix, np.ndarray]:
    """Return ``(L, b)`` with ``laplacian(f, bc).interior.ravel() == L @ f + b``."""
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    n = nx * ny
    ids = _ids((nx, ny))
    bld = _Builder((n, n))
    b = np.zeros((nx, ny))
    order = 1
    if isinstance(bc, NeumannZero):
        dirichlet, value = False, 0.0
    elif isinstance(bc, DirichletConst):
        dirichlet, value, order = True, float(bc.value), bc.order
    else:
        raise IncompatibleDataError(f"{type(bc).__name__} is not a scalar condition")
    diag = np.zeros((nx, ny))
    # x-direction couplings
    for h2, axis, m in ((hx * hx, 0, nx), (hy * hy, 1, ny)):
        lo = [slice(None), slice(None)]
        hi = [slice(None), slice(None)]
        lo[axis], hi[axis] = slice(0, m - 1), slice(1, m)
        a, c = ids[tuple(lo)], ids[tuple(hi)]
        bld.add(a, c, 1.0 / h2).add(c, a, 1.0 / h2)
        diag[tuple(lo)] -= 1.0 / h2
        diag[tuple(hi)] -= 1.0 / h2
        if dirichlet:
            for edge, inner in ((0, 1), (m - 1, m - 2)):
                sl = [slice(None), slice(None)]
                sl[axis] = edge
                nb = [slice(None), slice(None)]
                nb[axis] = inner
                if order == 1:
                    diag[tuple(sl)] -= 2.0 / h2
                    b[tuple(sl)] += 2.0 * value / h2
                else:
                    # ghost = 8g/3 - 2 f_edge + f_inner/3
                    diag[tuple(sl)] -= 3.0 / h2
                    bld.add(ids[tuple(sl)], ids[tuple(nb)], 1.0 / (3.0 * h2))
                    b[tuple(sl)] += 8.0 * value / (3.0 * h2)
    bld.add(ids, ids, diag)
    return bld.tocsr(), b.ravel()


def neumann_laplacian_eigenvalues(grid: Grid) -> np.ndarray:
    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny)
    lx = (2.0 - 2.0 * np.cos(np.pi * kx / grid.nx)) / grid.hx**2
    ly = (2.0 - 2.0 * np.cos(np.pi * ky / grid.ny)) / grid.hy**2
    return lx[:, None] + ly[None, :]


def neumann_poisson_fft(grid: Grid, r: np.ndarray) -> np.ndarray:
    """Zero-mean ``x`` with ``-L_N x = r - mean(r)`` via the cosine transform."""
    lam = neumann_laplacian_eigenvalues(grid)
    rh = scipy.fft.dctn(r, type=2, norm="ortho", workers=fft_workers())
    rh[0, 0] = 0.0
    lam[0, 0] = 1.0
    return scipy.fft.idctn(rh / lam, type=2, norm="ortho", workers=fft_workers())


def _l2(grid: Grid, r: np.ndarray) -> float:
    return math.sqrt(grid.cell_area * float(np.dot(r, r)))


def pcg(apply_A, b, precond, *, tol_abs, max_iter, project=None, x0=None, norm=None, stall=50):
    """Preconditioned conjugate gradients for SPD ``apply_A``.

    ``project`` (optional) removes a nullspace component from residuals and
    preconditioned residuals.  The loop stops early when the residual has not
    halved over ``stall`` iterations.  Returns ``(x, iterations, residual_norms)``.
    """
    norm = norm or (lambda r: float(np.linalg.norm(r)))
    proj = project or (lambda r: r)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = proj(b - apply_A(x))
    hist = [norm(r)]
    if hist[-1] <= tol_abs:
        return x, 0, hist
    z = proj(precond(r))
    p = z.copy()
    rz = float(np.dot(r, z))
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        pAp = float(np.dot(p, Ap))
        if pAp <= 0 or not math.isfinite(pAp):
            break
        alpha = rz / pAp
        x += alpha * p
        r = proj(r - alpha * Ap)
        hist.append(norm(r))
        if hist[-1] <= tol_abs:
            return x, it, hist
        if it > stall and hist[-1] >= 0.5 * min(hist[: -stall]):
            break  # stagnation at the round-off floor
        z = proj(precond(r))
        rz_new = float(np.dot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, len(hist) - 1, hist


def solve_poisson(rhs: ScalarField, bc, settings: Optional[SolverSettings] = None, *, x0: Optional[ScalarField] = None):
    """Solve ``laplacian(sol, bc) = rhs`` by Jacobi-preconditioned CG.

    Neumann problems require a zero-mean right-hand side and return the
    zero-mean solution.
    """
    settings = settings or SolverSettings()
    grid = rhs.grid
    if rhs.loc != "center":
        raise IncompatibleDataError("Poisson right-hand side must live at cell centers")
    L, b0 = scalar_laplacian_matrix(grid, bc)
    f = rhs.interior.ravel().copy()
    neumann = isinstance(bc, NeumannZero)
    project = None
    if neumann:
        total = grid.cell_area * float(np.sum(f))
        scale = grid.cell_area * float(np.sum(np.abs(f)))
        if abs(total) > max(settings.abs_tol, 1e-12 * scale):
            raise IncompatibleDataError(f"Neumann data has nonzero integral {total:.3e}")
        f -= f.mean()
        project = lambda r: r - r.mean()  # noqa: E731
    # Quadratic wall extrapolation breaks symmetry only in the boundary rows;
    # weighting those rows by 3/4 per wall restores it.
    w = np.ones(grid.nx * grid.ny)
    if isinstance(bc, DirichletConst) and bc.order == 2:
        wx = np.ones(grid.nx)
        wy = np.ones(grid.ny)
        wx[[0, -1]] = wy[[0, -1]] = 0.75
        w = np.outer(wx, wy).ravel()
    A = (sp.diags(w) @ (-L)).tocsr()
    b = -w * (f - b0)
    inv_diag = 1.0 / A.diagonal()
    start = np.zeros_like(b) if x0 is None else x0.interior.ravel().copy()
    if neumann:
        start -= start.mean()
    norm = lambda r: _l2(grid, r / w)  # noqa: E731
    res = b - A @ start
    r0 = norm(project(res) if project else res)
    tol = max(settings.rel_tol * r0, settings.abs_tol)
    x, its, hist = pcg(
        lambda v: A @ v, b, lambda r: inv_diag * r,
        tol_abs=tol, max_iter=settings.iterations_for(grid), project=project, x0=start, norm=norm,
        stall=max(50, 4 * max(grid.nx, grid.ny)),
    )
    if neumann:
        x -= x.mean()
    res = b - A @ x
    final = norm(project(res) if project else res)
    # a residual at the level of the rounding in A x is as good as it gets
    floor = 100.0 * np.finfo(float).eps * norm(abs(A) @ np.abs(x) + np.abs(b))
    report = SolveReport(its, final, final <= max(tol, floor) * (1 + 1e-6), r0, history=hist)
    out = ScalarField(grid, "center", np.zeros(grid.shape("center")))
    out.data[1:-1, 1:-1] = x.reshape(grid.nx, grid.ny)
    out = apply_bc(out, bc)
    if not report.converged:
        raise ConvergenceError(f"Poisson solve stalled at residual {final:.3e} after {its} iterations", report)
    return out, report


# -- velocity operators ------------------------------------------------------------


class VelocityLayout:
    """Index maps between face unknowns, padded face arrays and centers/corners."""

    def __init__(self, grid: Grid):
        self.grid = grid
        nx, ny = grid.nx, grid.ny
        self.s1, self.s2 = grid.shape("xface"), grid.shape("yface")
        self.n1p = self.s1[0] * self.s1[1]
        self.n2p = self.s2[0] * self.s2[1]
        self.id1 = _ids(self.s1)
        self.id2 = _ids(self.s2) + self.n1p
        self.unk1 = self.id1[1:-1, 1:-1]  # interior x-faces
        self.unk2 = self.id2[1:-1, 1:-1]
        self.N1 = self.unk1.size
        self.N2 = self.unk2.size
        self.N = self.N1 + self.N2
        self.unknown_padded = np.concatenate([self.unk1.ravel(), self.unk2.ravel()])
        self.npad = self.n1p + self.n2p
        self.nc = nx * ny
        self.nk = (nx + 1) * (ny + 1)

    def pack(self, F: VectorField) -> np.ndarray:
        return np.concatenate([F.u1[1:-1, 1:-1].ravel(), F.u2[1:-1, 1:-1].ravel()])

    def padded(self, F: VectorField) -> np.ndarray:
        return np.concatenate([F.u1.ravel(), F.u2.ravel()])

    def unpad(self, w: np.ndarray) -> VectorField:
        return VectorField(self.grid, w[: self.n1p].reshape(self.s1).copy(), w[self.n1p :].reshape(self.s2).copy())

    def selection(self) -> sp.csr_matrix:
        """``S @ padded`` picks the unknowns."""
        return sp.csr_matrix(
            (np.ones(self.N), (np.arange(self.N), self.unknown_padded)), shape=(self.N, self.npad)
        )

    def difference_matrices(self):
        """Sparse maps from padded faces to d1u1, d2u2 (centers) and d2u1, d1u2 (corners)."""
        g = self.grid
        nx, ny = g.nx, g.ny
        cid = _ids((nx, ny))
        kid = _ids((nx + 1, ny + 1))
        d1u1 = _Builder((self.nc, self.npad))
        d1u1.add(cid, self.id1[1:, 1:-1], 1 / g.hx).add(cid, self.id1[:-1, 1:-1], -1 / g.hx)
        d2u2 = _Builder((self.nc, self.npad))
        d2u2.add(cid, self.id2[1:-1, 1:], 1 / g.hy).add(cid, self.id2[1:-1, :-1], -1 / g.hy)
        d2u1 = _Builder((self.nk, self.npad))
        d2u1.add(kid, self.id1[:, 1:], 1 / g.hy).add(kid, self.id1[:, :-1], -1 / g.hy)
        d1u2 = _Builder((self.nk, self.npad))
        d1u2.add(kid, self.id2[1:, :], 1 / g.hx).add(kid, self.id2[:-1, :], -1 / g.hx)
        return d1u1.tocsr(), d2u2.tocsr(), d2u1.tocsr(), d1u2.tocsr()


def _normal_data(grid: Grid, bc, boundary_field: Optional[VectorField]) -> VectorField:
    """Padded arrays holding only boundary data: wall-normal values and the
    affine part of the tangential ghost rule (unknowns set to zero)."""
    base = zeros_vector(grid)
    u1, u2 = base.u1, base.u2
    if isinstance(bc, VelocityProfile) and bc.profile is None and boundary_field is not None:
        u1[[0, -1], :] = boundary_field.u1[[0, -1], :]
        u2[:, [0, -1]] = boundary_field.u2[:, [0, -1]]
    fill_velocity_ghosts(grid, u1, u2, bc)
    return VectorField(grid, u1, u2)


def ghost_prolongation(layout: VelocityLayout, bc) -> sp.csr_matrix:
    """Linear part ``P`` of ``padded = P @ unknowns + g``."""
    grid = layout.grid
    rule = tangential_ghost_rule(grid, bc)
    N = layout.N
    k1 = np.arange(layout.N1).reshape(layout.unk1.shape)
    k2 = layout.N1 + np.arange(layout.N2).reshape(layout.unk2.shape)
    bld = _Builder((layout.npad, N))
    bld.add(layout.unk1, k1, 1.0).add(layout.unk2, k2, 1.0)
    c = rule["bottom"][0][1:-1]
    bld.add(layout.id1[1:-1, 0], k1[:, 0], c)
    c = rule["top"][0][1:-1]
    bld.add(layout.id1[1:-1, -1], k1[:, -1], c)
    c = rule["left"][0][1:-1]
    bld.add(layout.id2[0, 1:-1], k2[0, :], c)
    c = rule["right"][0][1:-1]
    bld.add(layout.id2[-1, 1:-1], k2[-1, :], c)
    return bld.tocsr()


def _viscosity_ghosts(mu: ScalarField) -> ScalarField:
    """Keep ghosts the caller already filled (``mu.bc`` set), else mirror."""
    return mu if mu.bc is not None else apply_bc(mu, NeumannZero())


class VelocitySystem:
    """Assembled ``mass + (-div 2 mu D)`` operator and the discrete divergence
    on face unknowns for one boundary condition and viscosity field."""

    def __init__(self, mu: ScalarField, bc, mass: Optional[VectorField] = None,
                 boundary_field: Optional[VectorField] = None):
        grid = mu.grid
        if not np.all(np.isfinite(mu.interior)) or np.min(mu.interior) <= 0:
            raise IncompatibleDataError("viscosity must be finite and positive everywhere")
        self.grid, self.bc = grid, bc
        lay = self.layout = VelocityLayout(grid)
        mu_p = _viscosity_ghosts(mu)
        mu_c = mu_p.data[1:-1, 1:-1].ravel()
        d = mu_p.data
        mu_k = (0.25 * (d[:-1, :-1] + d[1:, :-1] + d[:-1, 1:] + d[1:, 1:])).ravel()
        self.mu_center = mu_c
        D11, D22, D21, D12 = lay.difference_matrices()
        S = lay.selection()
        P = ghost_prolongation(lay, bc)
        gdata = _normal_data(grid, bc, boundary_field)
        g = lay.padded(gdata)
        Mc = sp.diags(2.0 * mu_c)
        Mk = sp.diags(mu_k)
        E12 = D21 + D12
        # stress divergence restricted to unknown rows, acting on padded faces
        T = (D11.T @ Mc @ D11 + D22.T @ Mc @ D22 + E12.T @ Mk @ E12)
        ST = (S @ T).tocsr()
        self.viscous = (ST @ P).tocsr()
        self.viscous_data = ST @ g
        self.viscous_padded = ST
        Dv = (D11 + D22).tocsr()
        self.div = (Dv @ P).tocsr()
        self.div_data = Dv @ g
        self.data_field = gdata
        self.P, self.g = P, g
        if mass is None:
            self.mass = np.zeros(lay.N)
        elif isinstance(mass, VectorField):
            self.mass = lay.pack(mass)
        else:
            self.mass = np.full(lay.N, float(mass))
        self.K = (self.viscous + sp.diags(self.mass)).tocsc()
        self.rho_bar = float(np.mean(self.mass)) if self.mass.size else 0.0
        self._lu = None

    def boundary_flux(self) -> float:
        g = self.grid
        u1, u2 = self.data_field.u1, self.data_field.u2
        return float(np.sum(u1[-1, 1:-1] - u1[0, 1:-1]) * g.hy + np.sum(u2[1:-1, -1] - u2[1:-1, 0]) * g.hx)

    def solve_velocity(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is None:
            self._lu = spla.splu(self.K)
        return self._lu.solve(rhs)

    def assemble(self, x: np.ndarray) -> VectorField:
        F = self.layout.unpad(self.P @ x + self.g)
        return F

    def apply(self, F: VectorField) -> np.ndarray:
        """Operator (viscous plus mass) evaluated on a ghost-filled field."""
        w = self.layout.padded(F)
        return self.viscous_padded @ w + self.mass * self.layout.pack(F)


def stress_divergence(F: VectorField, mu: ScalarField) -> VectorField:
    """``-div(2 mu D(F))`` on interior faces, using the ghosts stored in ``F``."""
    grid = F.grid
    d = _viscosity_ghosts(mu).data
    mc = d[1:-1, 1:-1]
    mk = 0.25 * (d[:-1, :-1] + d[1:, :-1] + d[:-1, 1:] + d[1:, 1:])
    d1u1 = (F.u1[1:, 1:-1] - F.u1[:-1, 1:-1]) / grid.hx
    d2u2 = (F.u2[1:-1, 1:] - F.u2[1:-1, :-1]) / grid.hy
    s12 = mk * ((F.u1[:, 1:] - F.u1[:, :-1]) / grid.hy + (F.u2[1:, :] - F.u2[:-1, :]) / grid.hx)
    s11 = 2 * mc * d1u1
    s22 = 2 * mc * d2u2
    out = zeros_vector(grid)
    out.u1[1:-1, 1:-1] = -((s11[1:, :] - s11[:-1, :]) / grid.hx + (s12[1:-1, 1:] - s12[1:-1, :-1]) / grid.hy)
    out.u2[1:-1, 1:-1] = -((s12[1:, 1:-1] - s12[:-1, 1:-1]) / grid.hx + (s22[:, 1:] - s22[:, :-1]) / grid.hy)
    return out


# -- Stokes ----------------------------------------------------------------------------


def _pressure_field(grid: Grid, p: np.ndarray) -> ScalarField:
    out = ScalarField(grid, "center", np.zeros(grid.shape("center")))
    out.data[1:-1, 1:-1] = (p - p.mean()).reshape(grid.nx, grid.ny)
    return apply_bc(out, NeumannZero())


def solve_stokes(mu: ScalarField, rhs: VectorField, div_target: ScalarField, vel_bc,
                 settings: Optional[SolverSettings] = None, *, mass=None,
                 boundary_field: Optional[VectorField] = None,
                 system: Optional[VelocitySystem] = None):
    """Solve ``mass*u - div(2 mu D u) + grad p = rhs``, ``div u = div_target``.

    Uzawa iteration accelerated by conjugate gradients on the pressure Schur
    complement.  The pressure step is preconditioned by
    ``2 mu r + (rho/dt) (-L_N)^{-1} r`` and every velocity solve is exact (one
    sparse factorization reused across the outer iterations).  The pressure is
    returned with zero mean.

    Parameters
    ----------
    mass : VectorField or float, optional
        Zeroth-order coefficient on faces, e.g. ``rho / dt`` for a time step.
    boundary_field : VectorField, optional
        Supplies the wall-normal trace for ``VelocityProfile(None)``.
    system : VelocitySystem, optional
        Pre-assembled operator to reuse (must match ``mu``, ``vel_bc``, ``mass``).
    """
    settings = settings or SolverSettings()
    grid = mu.grid
    if not isinstance(vel_bc, (NoSlip, SlipFriction, VelocityProfile)):
        raise IncompatibleDataError(f"{type(vel_bc).__name__} is not a velocity condition")
    sys_ = system or VelocitySystem(mu, vel_bc, mass, boundary_field)
    lay = sys_.layout
    f = lay.pack(rhs) - sys_.viscous_data
    t = div_target.interior.ravel() - sys_.div_data
    area = grid.cell_area
    mismatch = area * float(np.sum(t))
    scale = area * float(np.sum(np.abs(div_target.interior))) + abs(sys_.boundary_flux())
    if abs(mismatch) > max(settings.abs_tol, 1e-10 * scale):
        raise IncompatibleDataError(
            f"divergence target and boundary flux disagree by {mismatch:.3e}"
        )
    t = t - t.mean()
    Dv = sys_.div
    DvT = Dv.T.tocsr()
    u0 = sys_.solve_velocity(f)
    norm = lambda r: _l2(grid, r)  # noqa: E731
    # Schur complement S p = Dv K^{-1} Dv^T p ; solve S p = t - Dv K^{-1} f
    b = t - Dv @ u0
    b -= b.mean()
    mu2 = 2.0 * sys_.mu_center
    rho_dt = sys_.rho_bar

    def apply_S(p):
        return Dv @ sys_.solve_velocity(DvT @ p)

    def precond(r):
        z = mu2 * r
        if rho_dt > 0:
            z = z + rho_dt * neumann_poisson_fft(grid, r.reshape(grid.nx, grid.ny)).ravel()
        return z

    r0 = norm(b)
    # relative to the divergence data as well, so that a nearly solenoidal
    # start does not demand a residual below round-off
    ref = max(r0, norm(t), norm(Dv @ u0))
    floor = 1e3 * np.finfo(float).eps * norm(abs(Dv) @ np.abs(u0))
    tol = max(settings.rel_tol * ref, settings.abs_tol, floor)
    project = lambda r: r - r.mean()  # noqa: E731
    q, its, hist = pcg(apply_S, b, precond, tol_abs=tol, max_iter=settings.iterations_for(grid),
                       project=project, norm=norm)
    # momentum: K u - Dv^T q = f  (pressure gradient is -Dv^T)
    x = sys_.solve_velocity(f + DvT @ q)
    div_res = norm(Dv @ x - t)
    mom_res = norm(sys_.K @ x - DvT @ q - f)
    vel = sys_.assemble(x)
    vel = VectorField(grid, vel.u1, vel.u2, vel_bc)
    pressure = _pressure_field(grid, q)
    report = SolveReport(its, div_res, div_res <= tol * (1 + 1e-6) + 1e-300, r0, mom_res, hist)
    if not report.converged:
        raise ConvergenceError(f"Stokes solve stalled at residual {div_res:.3e}", report)
    return vel, pressure, report


def bogovskii(f: ScalarField, settings: Optional[SolverSettings] = None):
    """Velocity with ``div Q = f`` and zero trace (unit-viscosity Stokes solve)."""
    settings = settings or SolverSettings()
    grid = f.grid
    total = grid.cell_area * float(np.sum(f.interior))
    scale = grid.cell_area * float(np.sum(np.abs(f.interior)))
    if abs(total) > max(settings.abs_tol, 1e-12 * scale):
        raise IncompatibleDataError(f"Bogovskii data has nonzero integral {total:.3e}")
    ones = ScalarField(grid, "center", np.ones(grid.shape("center")))
    Q, _, report = solve_stokes(ones, zeros_vector(grid), f, NoSlip(), settings)
    return Q, report


def lift_boundary(profile: Callable, grid: Grid, settings: Optional[SolverSettings] = None):
    """Divergence-free field matching the velocity trace ``profile(x, y)``."""
    settings = settings or SolverSettings()
    bc = VelocityProfile(profile)
    ones = ScalarField(grid, "center", np.ones(grid.shape("center")))
    zero = ScalarField(grid, "center", np.zeros(grid.shape("center")))
    R, _, report = solve_stokes(ones, zeros_vector(grid), zero, bc, settings)
    return R, report
