"""Acceptance checks grouped into suites for ``machcombust verify``.

Each ``check_*`` function returns a :class:`CheckResult`.  The suites are

* ``operators``: stencil identities and orders (1)
* ``elliptic``: Poisson, Stokes and Bogovskii contracts (2), initialization round trip (7)
* ``invariants``: maximum principle (3), conservation/decay (4), constraint
  residuals (5), constant-density oracle (6), Picard contraction (9),
  Serrin accumulators (11), determinism and checkpoints (12)
* ``mms``: manufactured-solution convergence (8)
* ``ledger``: Gronwall ledgers and the small/large data comparison (10)
"""

from __future__ import annotations

import functools
import io
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .diagnostics import (
    ExponentError,
    SerrinAccumulator,
    energy_record,
    estimate_ledger,
    serrin_accumulate,
    validate_exponents,
)
from .elliptic import SolverSettings, bogovskii, solve_poisson, solve_stokes
from .grid import (
    DirichletConst,
    NeumannZero,
    NoSlip,
    apply_bc,
    center_to_corner,
    curl2d,
    divergence,
    gradient,
    h1_norm,
    inner,
    laplacian,
    lp_norm,
    make_grid,
    mean,
    perp_gradient,
    sample_scalar,
    sample_vector,
    zeros_scalar,
)
from .initial import InitialSpec, build_initial
from .mms import CATALOG, convergence_study, fit_order, manufactured_case, temporal_study
from .model import (
    ModelParams,
    MuLaw,
    StepControls,
    advance,
    init_from_velocity,
    picard_step,
)
from .reference import ReferenceStepper

PI = math.pi


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    details: list = field(default_factory=list)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.criterion:2d} {self.name}"


def _result(criterion: int, name: str, items: list) -> CheckResult:
    """``items`` are ``(label, ok, text)`` triples."""
    return CheckResult(criterion, name, all(ok for _, ok, _ in items),
                       [f"{'ok ' if ok else 'BAD'} {label}: {text}" for label, ok, text in items])


def _l2(err: np.ndarray, h2: float) -> float:
    return math.sqrt(h2 * float(np.sum(err * err)))


def _order(errs, sizes=(16, 32, 64)) -> float:
    return fit_order([1.0 / n for n in sizes], errs)[0]


# -- criterion 1 ---------------------------------------------------------------------------


def _stencil_errors(n: int) -> dict:
    g = make_grid(n, n, 1.0, 1.0)
    h2 = g.hx * g.hy
    f = lambda x, y: np.cos(PI * x) * np.cos(2 * PI * y)  # noqa: E731
    fx = lambda x, y: -PI * np.sin(PI * x) * np.cos(2 * PI * y)  # noqa: E731
    fy = lambda x, y: -2 * PI * np.cos(PI * x) * np.sin(2 * PI * y)  # noqa: E731
    lap = lambda x, y: -5 * PI**2 * f(x, y)  # noqa: E731
    s = lambda x, y: np.exp(0.5 * x) * np.sin(2 * y + 0.3)  # noqa: E731
    lap_s = lambda x, y: (0.25 - 4.0) * s(x, y)  # noqa: E731
    F1 = lambda x, y: np.sin(PI * x) * np.cos(PI * y)  # noqa: E731
    F2 = lambda x, y: np.cos(2 * PI * x) * np.sin(PI * y)  # noqa: E731
    divF = lambda x, y: PI * np.cos(PI * x) * np.cos(PI * y) + PI * np.cos(2 * PI * x) * np.cos(PI * y)  # noqa: E731
    curlF = lambda x, y: -2 * PI * np.sin(2 * PI * x) * np.sin(PI * y) + PI * np.sin(PI * x) * np.sin(PI * y)  # noqa: E731
    out = {}
    fc = apply_bc(sample_scalar(g, f), NeumannZero())
    gr = gradient(fc)
    ex = sample_vector(g, lambda x, y: (fx(x, y), fy(x, y)))
    out["gradient"] = math.hypot(_l2(gr.i1 - ex.i1, h2), _l2(gr.i2 - ex.i2, h2))
    F = sample_vector(g, lambda x, y: (F1(x, y), F2(x, y)))
    X, Y = g.coords("center")
    out["divergence"] = _l2(divergence(F).interior - divF(X, Y)[1:-1, 1:-1], h2)
    out["laplacian_neumann"] = _l2(laplacian(fc, NeumannZero()).interior - lap(X, Y)[1:-1, 1:-1], h2)
    # generic field, ghosts sampled from the closed form: the bare five-point stencil
    sc = sample_scalar(g, s)
    out["laplacian"] = _l2(laplacian(sc).interior - lap_s(X, Y)[1:-1, 1:-1], h2)
    Xc, Yc = g.coords("corner")
    cu = curl2d(F).data
    out["curl"] = _l2((cu - curlF(Xc, Yc))[1:-1, 1:-1], h2)
    sp_ = perp_gradient(sample_scalar(g, s, "corner"))
    exp_ = sample_vector(g, lambda x, y: (2 * np.exp(0.5 * x) * np.cos(2 * y + 0.3), -0.5 * s(x, y)))
    out["perp_gradient"] = math.hypot(_l2(sp_.i1[1:-1, :] - exp_.i1[1:-1, :], h2), _l2(sp_.i2[:, 1:-1] - exp_.i2[:, 1:-1], h2))
    cc = center_to_corner(fc).data
    out["center_to_corner"] = _l2((cc - f(Xc, Yc))[1:-1, 1:-1], h2)
    return out


def check_operators() -> CheckResult:
    items = []
    rng = np.random.default_rng(20240601)
    for nx, ny in ((16, 16), (33, 17)):
        g = make_grid(nx, ny, 1.0, 0.7)
        p = apply_bc(zeros_scalar(g).with_interior(rng.standard_normal((nx, ny))), NeumannZero())
        q = apply_bc(zeros_scalar(g).with_interior(rng.standard_normal((nx, ny))), NeumannZero())
        F = sample_vector(g, lambda x, y: (np.zeros_like(x), np.zeros_like(x)))
        F.u1[1:-1, 1:-1] = rng.standard_normal((nx - 1, ny))
        F.u2[1:-1, 1:-1] = rng.standard_normal((nx, ny - 1))
        gp = gradient(p)
        a, b = inner(gp, F), -inner(p, divergence(F))
        ok = abs(a - b) <= 1e-12 * max(abs(a), 1.0) * nx
        items.append((f"<grad p, F> = -<p, div F> on {nx}x{ny}", ok, f"gap {abs(a - b):.2e}"))
        la, lb = inner(laplacian(p, NeumannZero()), q), inner(p, laplacian(q, NeumannZero()))
        ok = abs(la - lb) <= 1e-12 * max(abs(la), 1.0) * nx * nx
        items.append((f"Neumann Laplacian symmetric on {nx}x{ny}", ok, f"gap {abs(la - lb):.2e}"))
        cg = curl2d(gp).data[1:-1, 1:-1]
        scale = float(np.max(np.abs(gp.u1))) / min(g.hx, g.hy)
        v = float(np.max(np.abs(cg))) / scale
        items.append((f"curl(grad) = 0 on {nx}x{ny}", v <= 1e-13, f"relative max {v:.2e}"))
        s = zeros_scalar(g, "corner")
        s.data[1:-1, 1:-1] = rng.standard_normal((nx - 1, ny - 1))
        dp = divergence(perp_gradient(s)).interior
        v = float(np.max(np.abs(dp))) * min(g.hx, g.hy) ** 2 / float(np.max(np.abs(s.data)))
        items.append((f"div(perp_grad) = 0 on {nx}x{ny}", v <= 1e-13, f"relative max {v:.2e}"))
    errs = [_stencil_errors(n) for n in (16, 32, 64)]
    for name in errs[0]:
        order = _order([e[name] for e in errs])
        items.append((f"{name} order", order >= 1.9, f"{order:.3f}"))
    return _result(1, "operator identities and stencil orders", items)


# -- criterion 2 ---------------------------------------------------------------------------


def _S(s, d):
    """``d``-th derivative of ``sin^2(pi s)``."""
    return (np.sin(PI * s) ** 2, PI * np.sin(2 * PI * s), 2 * PI**2 * np.cos(2 * PI * s),
            -4 * PI**3 * np.sin(2 * PI * s))[d]


def stokes_mms_fields():
    """Velocity ``perp_grad(sin^2 pi x sin^2 pi y)``, ``p = cos 2pi x cos 2pi y``,
    ``mu = 2 + sin 2pi x`` and the matching body force.

    For solenoidal ``u`` and ``mu = mu(x)``,
    ``div(2 mu D u) = mu lap u + 2 mu_x (D_11, D_21)``.
    """
    def u(x, y):
        return _S(x, 0) * _S(y, 1), -_S(x, 1) * _S(y, 0)

    def p(x, y):
        return np.cos(2 * PI * x) * np.cos(2 * PI * y)

    def mu(x, y):
        return 2.0 + np.sin(2 * PI * x)

    def force(x, y):
        m, mx = mu(x, y), 2 * PI * np.cos(2 * PI * x)
        lap1 = _S(x, 2) * _S(y, 1) + _S(x, 0) * _S(y, 3)
        lap2 = -_S(x, 3) * _S(y, 0) - _S(x, 1) * _S(y, 2)
        d11 = _S(x, 1) * _S(y, 1)
        d21 = 0.5 * (_S(x, 0) * _S(y, 2) - _S(x, 2) * _S(y, 0))
        px = -2 * PI * np.sin(2 * PI * x) * np.cos(2 * PI * y)
        py = -2 * PI * np.cos(2 * PI * x) * np.sin(2 * PI * y)
        return -m * lap1 - 2 * mx * d11 + px, -m * lap2 - 2 * mx * d21 + py

    return u, p, mu, force


def check_elliptic() -> CheckResult:
    items = []
    settings = SolverSettings(rel_tol=1e-12, abs_tol=1e-14)
    sizes = (16, 32, 64)
    # Poisson
    f_n = lambda x, y: np.cos(PI * x) * np.cos(2 * PI * y)  # noqa: E731
    s_d = lambda x, y: np.sin(PI * x) * np.sin(2 * PI * y) + 1.0  # noqa: E731
    for label, exact, bc in (("Neumann", f_n, NeumannZero()), ("Dirichlet", s_d, DirichletConst(1.0)),
                             ("Dirichlet (quadratic ghost)", s_d, DirichletConst(1.0, 2))):
        errs = []
        for n in sizes:
            g = make_grid(n, n, 1.0, 1.0)
            ex = sample_scalar(g, exact)
            rhs = sample_scalar(g, lambda x, y: -5 * PI**2 * (exact(x, y) - (0.0 if label == "Neumann" else 1.0)))
            phi, _ = solve_poisson(rhs, bc, settings)
            d = phi.interior - ex.interior
            if label == "Neumann":
                d = d - np.mean(d)
            errs.append(_l2(d, g.hx * g.hy))
        order = _order(errs, sizes)
        items.append((f"Poisson {label} order", order >= 1.9, f"{order:.3f}"))
    # Stokes with variable viscosity
    u_ex, p_ex, mu_ex, force = stokes_mms_fields()
    eu, ep = [], []
    for n in sizes:
        g = make_grid(n, n, 1.0, 1.0)
        vel, p, _ = solve_stokes(sample_scalar(g, mu_ex), sample_vector(g, force), zeros_scalar(g), NoSlip(), settings)
        eu.append(lp_norm(vel - sample_vector(g, u_ex), 2))
        dp = p - sample_scalar(g, p_ex)
        ep.append(lp_norm(dp - mean(dp), 2))
    ou, op = _order(eu, sizes), _order(ep, sizes)
    items.append(("Stokes velocity order", ou >= 1.9, f"{ou:.3f}"))
    items.append(("Stokes pressure order", op >= 0.9, f"{op:.3f}"))
    # Bogovskii
    ratios = []
    for n in sizes:
        g = make_grid(n, n, 1.0, 1.0)
        f = sample_scalar(g, lambda x, y: np.cos(PI * x) * np.cos(PI * y) + 0.5 * np.cos(3 * PI * x))
        f = f.with_interior(f.interior - np.mean(f.interior))
        Q, _ = bogovskii(f, settings)
        res = _l2(divergence(Q).interior - f.interior, g.hx * g.hy)
        trace = max(float(np.max(np.abs(Q.u1[[0, -1], :]))), float(np.max(np.abs(Q.u2[:, [0, -1]]))),
                    float(np.max(np.abs(Q.u1[:, 0] + Q.u1[:, 1]))), float(np.max(np.abs(Q.u1[:, -1] + Q.u1[:, -2]))),
                    float(np.max(np.abs(Q.u2[0, :] + Q.u2[1, :]))), float(np.max(np.abs(Q.u2[-1, :] + Q.u2[-2, :]))))
        items.append((f"Bogovskii residual n={n}", res <= 1e-8, f"{res:.2e}"))
        items.append((f"Bogovskii zero trace n={n}", trace == 0.0, f"max trace {trace:.1e}"))
        ratios.append(h1_norm(Q) / _l2(f.interior, g.hx * g.hy))
    spread = (max(ratios) - min(ratios)) / min(ratios)
    items.append(("Bogovskii stability constant spread", spread <= 0.2,
                  ", ".join(f"{r:.4f}" for r in ratios) + f" (spread {spread:.1%})"))
    return _result(2, "elliptic solver contracts", items)


# -- criterion 7 ---------------------------------------------------------------------------


def check_round_trip() -> CheckResult:
    items = []
    c0 = 0.1
    for regime in ("A", "B", "C"):
        params = ModelParams(c0=c0, mu_law=MuLaw("constant", 1.0))
        trig = np.sin if regime == "B" else np.cos
        d = (lambda s: PI * np.cos(PI * s)) if regime == "B" else (lambda s: -PI * np.sin(PI * s))

        def rho(x, y):
            return 1.0 + 0.2 * trig(PI * x) * trig(PI * y)

        def u0(x, y):
            r = rho(x, y)
            gx, gy = 0.2 * d(x) * trig(PI * y), 0.2 * trig(PI * x) * d(y)
            sx, sy = _S(x, 0) * _S(y, 1), -_S(x, 1) * _S(y, 0)
            return -c0 * gx / r**2 + 0.05 * sx, -c0 * gy / r**2 + 0.05 * sy

        # the quadratic wall ghost leaves an h^3 term that partly cancels the h^2 one
        # on coarse grids, so regime B is measured once the ratios have settled
        ns = (128, 256, 512) if regime == "B" else (16, 32, 64)
        errs = []
        for n in ns:
            g = make_grid(n, n, 1.0, 1.0, regime)
            ex = sample_scalar(g, rho)
            level = 1.0 if regime == "B" else mean(ex)
            st = init_from_velocity(sample_vector(g, u0), params, level)
            errs.append(lp_norm(st.rho - ex, 2))
        order = _order(errs, ns)
        items.append((f"regime {regime} rho order", order >= 1.9,
                      f"{order:.3f} on n={ns} (errors " + ", ".join(f"{e:.2e}" for e in errs) + ")"))
    return _result(7, "initialization round trip", items)


# -- standard runs (shared by the invariant checks) ---------------------------------------------


def standard_params(regime: str) -> ModelParams:
    return ModelParams(c0=0.1, mu_law=MuLaw("affine", 0.5, 0.2), friction=0.5 if regime == "A" else 0.0)


STANDARD_INITIAL = InitialSpec("bump", amplitude=0.1, swirl=0.02)


@dataclass
class RunTrace:
    state0: object
    final: object
    records: list
    reports: list
    monitor: object


def traced_run(state0, t_end, controls, params) -> RunTrace:
    """``advance`` with the initial record and every Picard report kept."""
    reports = []
    records = [energy_record(state0, None, 0.0, params)]
    final = advance(state0, t_end, controls, params, records.append, report_sink=reports.append)
    return RunTrace(state0, final, records, reports, advance.last_monitor)


@functools.lru_cache(maxsize=None)
def standard_run(regime: str, n: int = 32, steps: int = 50, dt: float = 1e-3) -> RunTrace:
    """The standard small-data case: a 10% density bump with a weak swirl."""
    g = make_grid(n, n, 1.0, 1.0, regime)
    params = standard_params(regime)
    s0 = build_initial(g, STANDARD_INITIAL, params)
    return traced_run(s0, steps * dt, StepControls(dt=dt), params)


# -- criteria 3, 4, 5 ----------------------------------------------------------------------------


def random_small_data(regime: str, seed: int):
    """Randomized small-data parameters with [alpha, beta] hugging the initial range."""
    rng = np.random.default_rng(seed)
    amp = float(rng.uniform(0.05, 0.3))
    law = ("constant", "affine", "exp")[int(rng.integers(3))]
    mu_law = MuLaw(law, float(rng.uniform(0.2, 1.0)), float(rng.uniform(0.0, 0.3)), float(rng.uniform(-0.5, 0.5)))
    params = ModelParams(c0=float(rng.uniform(0.05, 0.2)), mu_law=mu_law, alpha=1.0 - amp, beta=1.0 + amp,
                         rho_tilde=1.0, friction=float(rng.uniform(0.0, 1.0)) if regime == "A" else 0.0)
    spec = InitialSpec("bump", amplitude=amp, swirl=float(rng.uniform(0.0, 0.05)),
                       mode_x=int(rng.integers(1, 3)), mode_y=int(rng.integers(1, 3)))
    return params, spec


def check_maximum_principle(runs: int = 20, n: int = 16, steps: int = 8, dt: float = 2e-3) -> CheckResult:
    items = []
    for regime in ("A", "B", "C"):
        worst = 0.0
        for k in range(runs):
            params, spec = random_small_data(regime, 1000 * ord(regime) + k)
            s0 = build_initial(make_grid(n, n, 1.0, 1.0, regime), spec, params)
            records = []
            advance(s0, steps * dt, StepControls(dt=dt), params, records.append)
            for r in records:
                worst = max(worst, params.alpha - r.min_rho, r.max_rho - params.beta)
        items.append((f"regime {regime}: {runs} runs", worst <= 1e-8, f"worst excursion {worst:.2e}"))
    return _result(3, "maximum principle", items)


def check_conservation() -> CheckResult:
    items = []
    for regime in ("A", "C"):
        tr = standard_run(regime)
        m0 = tr.records[0].mean_rho
        rate = max(abs(r.mean_rho - m0) / r.t for r in tr.records[1:])
        items.append((f"regime {regime} mean drift per unit time", rate <= 1e-10, f"{rate:.2e}"))
    tr = standard_run("B")
    dev = [r.rho_dev_l2 for r in tr.records]
    worst = max(b - a for a, b in zip(dev[:-1], dev[1:]))
    items.append(("regime B |rho - rho_tilde| non-increasing", worst <= 1e-8, f"largest increase {worst:.2e}"))
    return _result(4, "conservation and decay", items)


def check_constraints(constraint_tol: float = 1e-7) -> CheckResult:
    items = []
    for regime in ("A", "B", "C"):
        tr = standard_run(regime)
        d = max(r.div_residual for r in tr.records)
        s = max(r.solenoidal_residual for r in tr.records)
        items.append((f"regime {regime} |div u - c0 lap(1/rho)|", d <= constraint_tol, f"{d:.2e}"))
        items.append((f"regime {regime} |div {'w' if regime == 'C' else 'v'}|", s <= constraint_tol, f"{s:.2e}"))
    return _result(5, "constraint residuals", items)


# -- criterion 6 ---------------------------------------------------------------------------------


def check_constant_density(n: int = 16, steps: int = 100, dt: float = 1e-2, mu: float = 0.05) -> CheckResult:
    items = []
    g = make_grid(n, n, 1.0, 1.0, "C")
    params = ModelParams(c0=0.1, mu_law=MuLaw("constant", mu))
    state = build_initial(g, InitialSpec("rest", swirl=0.5), params)
    ref = ReferenceStepper(n, n, 1.0, 1.0, mu, dt)
    a1, a2 = state.u.i1[1:-1, :].copy(), state.u.i2[:, 1:-1].copy()
    controls = StepControls(dt=dt, pic_tol=1e-12)
    worst = 0.0
    for _ in range(steps):
        state, _ = picard_step(state, controls, params)
        a1, a2, _, _ = ref.step(a1, a2)
        d = math.sqrt(g.hx * g.hy * (float(np.sum((state.u.i1[1:-1, :] - a1) ** 2))
                                     + float(np.sum((state.u.i2[:, 1:-1] - a2) ** 2))))
        worst = max(worst, d)
    items.append((f"{steps} steps on {n}x{n}", worst <= 1e-9, f"max per-step L2 difference {worst:.2e}"))
    rho_dev = float(np.max(np.abs(state.rho.interior - 1.0)))
    items.append(("density stays 1", rho_dev <= 1e-12, f"{rho_dev:.1e}"))
    return _result(6, "constant-density reduction", items)


# -- criterion 9 ---------------------------------------------------------------------------------


def contraction_ratios(reports, floor: float = 1e-13) -> list:
    """``delta_{k+1}/delta_k`` for ``k >= 2`` (1-based), skipping pairs at round-off."""
    out = []
    for rep in reports:
        d = rep.deltas
        for k in range(1, len(d) - 1):
            if d[k] > floor:
                out.append(d[k + 1] / d[k])
    return out


def check_contraction() -> CheckResult:
    items = []
    for regime in ("A", "B", "C"):
        ratios = contraction_ratios(standard_run(regime).reports)
        worst = max(ratios) if ratios else 0.0
        items.append((f"regime {regime}", worst <= 0.6, f"max ratio {worst:.2e} over {len(ratios)} pairs"))
    return _result(9, "Picard contraction", items)


# -- criterion 10 -------------------------------------------------------------------------------


LARGE_DATA = dict(n=32, c0=0.002, mu=0.01, amplitude=0.3, swirl=0.5, dt=0.01, t_end=1.0)


@functools.lru_cache(maxsize=None)
def large_data_run() -> RunTrace:
    p = LARGE_DATA
    g = make_grid(p["n"], p["n"], 1.0, 1.0, "A")
    params = ModelParams(c0=p["c0"], mu_law=MuLaw("constant", p["mu"]))
    s0 = build_initial(g, InitialSpec("bump", amplitude=p["amplitude"], swirl=p["swirl"], mode_x=1, mode_y=0), params)
    return traced_run(s0, p["t_end"], StepControls(dt=p["dt"]), params)


def check_ledger() -> CheckResult:
    items = []
    for regime in ("A", "B", "C"):
        tr = standard_run(regime)
        rep = estimate_ledger(tr.records, standard_params(regime), tol=1e-7)
        consts = ", ".join(f"{k} C={v.C:.3g}" for k, v in rep.inequalities.items())
        finite = all(math.isfinite(v.C) for v in rep.inequalities.values())
        items.append((f"regime {regime} ledger", not rep.violations and finite,
                      f"{len(rep.violations)} violations; {consts}"))
    small = standard_run("A")
    g0 = small.records[0].grad_rho_l2
    ratio = max(r.grad_rho_l2 for r in small.records) / g0
    items.append(("small data sup |grad rho| / initial <= 1.05", ratio <= 1.05, f"{ratio:.4f}"))
    large = large_data_run()
    g0 = large.records[0].grad_rho_l2
    ratio = max(r.grad_rho_l2 for r in large.records) / g0
    items.append(("large data sup |grad rho| / initial > 2", ratio > 2.0, f"{ratio:.4f}"))
    return _result(10, "Gronwall ledger and data-size comparison", items)


# -- criterion 11 -------------------------------------------------------------------------------


def check_serrin() -> CheckResult:
    items = []
    for regime in ("A", "B", "C"):
        tr = standard_run(regime)
        worst = 0.0
        for name in ("serrin_grad_rho", "serrin_velocity", "serrin_v"):
            vals = [getattr(r, name) for r in tr.records[1:]]
            worst = min(worst, min(b - a for a, b in zip(vals[:-1], vals[1:])))
        items.append((f"regime {regime} accumulators non-decreasing", worst >= 0.0, f"smallest increment {worst:.2e}"))
    tr = standard_run("A")
    params = standard_params("A")
    for target in ("grad_rho", "velocity", "v"):
        acc = SerrinAccumulator(4.0, 4.0, target)
        one = serrin_accumulate(acc, tr.final, 0.125, params).total
        for _ in range(8):
            acc = serrin_accumulate(acc, tr.final, 0.125, params)
        gap = abs(acc.total - 8 * one)
        items.append((f"frozen {target} accumulates linearly", gap <= 1e-14 * 8 * one, f"gap {gap:.1e}"))
    for r, s, ok in ((4, 4, True), (math.inf, 2, True), (3, 6, True), (2, math.inf, False),
                     (1.5, 10, False), (3, 4, False), (4, 3, False)):
        try:
            validate_exponents(r, s)
            accepted = True
        except ExponentError:
            accepted = False
        items.append((f"(r, s) = ({r}, {s}) {'accepted' if ok else 'rejected'}", accepted == ok, ""))
    return _result(11, "Serrin accumulators", items)


# -- criterion 12 -------------------------------------------------------------------------------


DETERMINISM_CONFIG = """\
grid.nx = 16
grid.regime = {regime}
model.c0 = 0.1
model.mu_law = affine
model.mu0 = 0.5
model.mu1 = 0.2
initial.kind = bump
initial.amplitude = 0.1
initial.swirl = 0.02
time.t_end = {t_end}
time.dt = 0.002
output.csv = {csv}
output.checkpoint_every = {ckpt_every}
output.checkpoint_path = {ckpt}
"""


def check_determinism() -> CheckResult:
    from .checkpoint import checkpoint_restore, checkpoint_save
    from .cli import run
    from .config import parse_config

    items = []
    log = io.StringIO()
    with tempfile.TemporaryDirectory() as tmp:
        for regime in ("A", "B", "C"):
            blobs = []
            for k in range(2):
                csv = os.path.join(tmp, f"{regime}{k}.csv")
                cfg = parse_config(DETERMINISM_CONFIG.format(regime=regime, t_end=0.02, csv=csv, ckpt_every=0,
                                                              ckpt=os.path.join(tmp, "x.ckpt")))
                code = run(cfg, log=log)
                with open(csv, "rb") as fh:
                    blobs.append((code, fh.read()))
            same = blobs[0] == blobs[1] and blobs[0][0] == 0
            items.append((f"regime {regime} repeated runs byte-identical", same, f"{len(blobs[0][1])} bytes"))
            # save, restore, then ten steps on both branches
            params = standard_params(regime)
            g = make_grid(16, 16, 1.0, 1.0, regime)
            state = build_initial(g, STANDARD_INITIAL, params)
            controls = StepControls(dt=2e-3)
            for _ in range(3):
                state, _ = picard_step(state, controls, params)
            path = os.path.join(tmp, f"{regime}.ckpt")
            from .diagnostics import SerrinMonitor

            checkpoint_save(state, SerrinMonitor(), path, config_hash="h")
            restored = checkpoint_restore(path, params, expect_hash="h").state
            a, b = state, restored
            exact = True
            for _ in range(10):
                a, _ = picard_step(a, controls, params)
                b, _ = picard_step(b, controls, params)
                exact &= (a.t == b.t and np.array_equal(a.rho.data, b.rho.data)
                          and np.array_equal(a.u.u1, b.u.u1) and np.array_equal(a.u.u2, b.u.u2)
                          and np.array_equal(a.pi.data, b.pi.data))
            items.append((f"regime {regime} checkpoint round trip, next 10 steps bit-identical", exact, ""))
        # resume through the CLI reproduces the uninterrupted CSV
        from .cli import resume

        full_csv = os.path.join(tmp, "full.csv")
        cut_csv = os.path.join(tmp, "cut.csv")
        ckpt = os.path.join(tmp, "cut.ckpt")
        cfg_full = parse_config(DETERMINISM_CONFIG.format(regime="C", t_end=0.04, csv=full_csv, ckpt_every=0, ckpt=ckpt))
        run(cfg_full, log=log)
        text = DETERMINISM_CONFIG.format(regime="C", t_end=0.04, csv=cut_csv, ckpt_every=10, ckpt=ckpt)
        # the run dies after step 13: rows past the step-10 checkpoint must be replaced
        run(parse_config(text), text, log=log, stop_after=13)
        with open(full_csv) as fh:
            full_rows = fh.readlines()
        code = resume(ckpt, log=log)
        with open(cut_csv) as fh:
            resumed = fh.readlines()
        items.append(("resume from checkpoint matches the uninterrupted CSV (after the checkpoint row)",
                      code == 0 and resumed[1:] == full_rows[1:] and len(resumed) == len(full_rows),
                      f"{len(resumed)} rows"))
    return _result(12, "determinism and checkpointing", items)


# -- criterion 8 -------------------------------------------------------------------------------


EXACT_FLOOR = 1e-12


def mms_tables():
    tables = []
    for cid in CATALOG:
        case = manufactured_case(cid)
        tables.append(convergence_study(case, [16, 32, 64]))
        tables.append(temporal_study(case, 16, [0.04, 0.02, 0.01, 0.005], 0.2, reference="successive"))
    return tables


def check_mms(csv_path: Optional[str] = None) -> CheckResult:
    items = []
    tables = mms_tables()
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            for k, t in enumerate(tables):
                text = t.to_csv()
                fh.write(text if k == 0 else text.split("\n", 1)[1])
    for t in tables:
        need = 1.9 if t.kind == "space" else 0.9
        for v in ("rho", "u"):
            errs = t.errors[v]
            if max(errs) <= EXACT_FLOOR:
                items.append((f"{t.case} {t.kind} {v}", True, f"exact to round-off (max error {max(errs):.1e})"))
            else:
                items.append((f"{t.case} {t.kind} {v} order", t.orders[v] >= need, f"{t.orders[v]:.3f}"))
        items.append((f"{t.case} {t.kind} pi order (reported)", True, f"{t.orders['pi']:.3f}"))
    return _result(8, "manufactured-solution convergence", items)


# -- suites ------------------------------------------------------------------------------------

SUITES: dict[str, list[Callable[[], CheckResult]]] = {
    "operators": [check_operators],
    "elliptic": [check_elliptic, check_round_trip],
    "invariants": [check_maximum_principle, check_conservation, check_constraints, check_constant_density,
                   check_contraction, check_serrin, check_determinism],
    "mms": [check_mms],
    "ledger": [check_ledger],
}


def run_suite(name: str, *, csv_path: Optional[str] = None, out=None) -> int:
    """Run a suite, print one line per criterion (plus details); 0 iff all pass."""
    out = out or sys.stdout
    if name not in SUITES:
        print(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}", file=out)
        return 2
    ok = True
    for check in SUITES[name]:
        t0 = time.perf_counter()
        res = check(csv_path) if check is check_mms else check()
        print(f"{res.line()} ({time.perf_counter() - t0:.1f}s)", file=out)
        for d in res.details:
            print(f"    {d}", file=out)
        ok &= res.passed
    return 0 if ok else 1
