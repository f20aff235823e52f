"""Uniform staggered (MAC) grid, fields with ghost layers and difference operators.

Layout on the rectangle [0, lx] x [0, ly] with ``nx`` by ``ny`` cells:

* ``center``  -- cell centers, stored padded as ``(nx + 2, ny + 2)``; index
  ``[i + 1, j + 1]`` is the cell ``(i, j)`` at ``((i + 1/2) hx, (j + 1/2) hy)``.
* ``xface``   -- first velocity component, ``(nx + 1, ny + 2)``; index
  ``[i, j + 1]`` sits at ``(i hx, (j + 1/2) hy)``.  Rows ``0`` and ``ny + 1``
  are the tangential ghost layers; columns ``i = 0, nx`` lie on the walls.
* ``yface``   -- second velocity component, ``(nx + 2, ny + 1)``, transposed.
* ``corner``  -- cell corners ``(nx + 1, ny + 1)``, no ghosts.

All arrays are indexed ``[x, y]``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import BinaryIO, Callable, Optional, Union

import numpy as np

REGIMES = ("A", "B", "C")
LOCATIONS = ("center", "corner", "xface", "yface")


class GridError(ValueError):
    pass


class LocationError(ValueError):
    pass


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float
    ly: float
    bc_regime: str = "C"

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise GridError(f"grid undersized: nx={self.nx}, ny={self.ny} (need >= 4)")
        if not (math.isfinite(self.lx) and math.isfinite(self.ly)) or self.lx <= 0 or self.ly <= 0:
            raise GridError(f"extents must be finite and positive: lx={self.lx}, ly={self.ly}")
        if self.bc_regime not in REGIMES:
            raise GridError(f"unknown boundary regime {self.bc_regime!r}")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def shape(self, loc: str) -> tuple[int, int]:
        nx, ny = self.nx, self.ny
        return {
            "center": (nx + 2, ny + 2),
            "corner": (nx + 1, ny + 1),
            "xface": (nx + 1, ny + 2),
            "yface": (nx + 2, ny + 1),
        }[loc]

    def coords(self, loc: str) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates of every stored sample (ghosts included)."""
        hx, hy = self.hx, self.hy
        if loc == "center":
            x = (np.arange(self.nx + 2) - 0.5) * hx
            y = (np.arange(self.ny + 2) - 0.5) * hy
        elif loc == "corner":
            x = np.arange(self.nx + 1) * hx
            y = np.arange(self.ny + 1) * hy
        elif loc == "xface":
            x = np.arange(self.nx + 1) * hx
            y = (np.arange(self.ny + 2) - 0.5) * hy
        elif loc == "yface":
            x = (np.arange(self.nx + 2) - 0.5) * hx
            y = np.arange(self.ny + 1) * hy
        else:
            raise LocationError(loc)
        return np.meshgrid(x, y, indexing="ij")

    def interior(self, loc: str) -> tuple[slice, slice]:
        """Slices selecting the physical (non-ghost) samples."""
        return {
            "center": (slice(1, -1), slice(1, -1)),
            "corner": (slice(None), slice(None)),
            "xface": (slice(None), slice(1, -1)),
            "yface": (slice(1, -1), slice(None)),
        }[loc]

    def weights(self, loc: str) -> np.ndarray:
        """Quadrature weights on the physical samples.

        Midpoint rule for centers; samples lying on a wall get half weight.
        """
        hx, hy = self.hx, self.hy
        if loc == "center":
            return np.full((self.nx, self.ny), hx * hy)
        wx_node = np.full(self.nx + 1, hx)
        wx_node[[0, -1]] *= 0.5
        wy_node = np.full(self.ny + 1, hy)
        wy_node[[0, -1]] *= 0.5
        if loc == "corner":
            return np.outer(wx_node, wy_node)
        if loc == "xface":
            return np.outer(wx_node, np.full(self.ny, hy))
        if loc == "yface":
            return np.outer(np.full(self.nx, hx), wy_node)
        raise LocationError(loc)


def make_grid(nx: int, ny: int, lx: float, ly: float, regime: str = "C") -> Grid:
    return Grid(int(nx), int(ny), float(lx), float(ly), regime)


# -- boundary specifications -------------------------------------------------


@dataclass(frozen=True)
class NeumannZero:
    pass


@dataclass(frozen=True)
class DirichletConst:
    """Constant wall value.  ``order=1`` places the ghost on the line through
    the wall value and the adjacent center; ``order=2`` uses the parabola
    through the wall value and the two nearest centers, which makes the
    wall-normal difference second-order accurate."""

    value: float
    order: int = 1

    def __post_init__(self):
        if self.order not in (1, 2):
            raise BoundaryError("Dirichlet extrapolation order must be 1 or 2")


@dataclass(frozen=True)
class NoSlip:
    pass


@dataclass(frozen=True)
class SlipFriction:
    """``u.n = 0`` and the Navier friction law on the tangential component.

    ``b`` is a constant or a callable ``b(x, y)`` evaluated on the wall; it is
    the tangential entry of the friction matrix and must be nonnegative.
    """

    b: Union[float, Callable] = 0.0

    def values(self, x, y) -> np.ndarray:
        if callable(self.b):
            out = np.asarray(self.b(x, y), dtype=float) * np.ones_like(x, dtype=float)
        else:
            out = np.full_like(np.asarray(x, dtype=float), float(self.b))
        if np.any(out < 0) or not np.all(np.isfinite(out)):
            raise BoundaryError("friction coefficient must be finite and nonnegative")
        return out


@dataclass(frozen=True)
class VelocityProfile:
    """Prescribed velocity trace.

    ``profile(x, y) -> (u1, u2)`` is sampled on the walls.  With
    ``profile=None`` the normal wall values already stored in the field are
    kept as the trace and the tangential trace is zero.
    """

    profile: Optional[Callable] = None


BoundarySpec = Union[NeumannZero, DirichletConst, NoSlip, SlipFriction, VelocityProfile]
SCALAR_BCS = (NeumannZero, DirichletConst)
VELOCITY_BCS = (NoSlip, SlipFriction, VelocityProfile)


# -- fields --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    loc: str
    data: np.ndarray
    bc: Optional[BoundarySpec] = None

    def __post_init__(self):
        if self.loc not in ("center", "corner"):
            raise LocationError(f"scalar fields live at centers or corners, not {self.loc!r}")
        if self.data.shape != self.grid.shape(self.loc):
            raise LocationError(f"shape {self.data.shape} does not match {self.loc} layout")

    @property
    def interior(self) -> np.ndarray:
        return self.data[self.grid.interior(self.loc)]

    def with_interior(self, values: np.ndarray) -> "ScalarField":
        data = np.zeros(self.grid.shape(self.loc))
        data[self.grid.interior(self.loc)] = values
        return ScalarField(self.grid, self.loc, data)

    def __add__(self, other):
        return _scalar_binop(self, other, np.add)

    def __sub__(self, other):
        return _scalar_binop(self, other, np.subtract)

    def __mul__(self, k: float):
        return ScalarField(self.grid, self.loc, self.data * k, None)

    __rmul__ = __mul__


def _scalar_binop(a: ScalarField, b, op) -> ScalarField:
    if isinstance(b, ScalarField):
        if b.loc != a.loc or b.grid != a.grid:
            raise LocationError("field location or grid mismatch")
        return ScalarField(a.grid, a.loc, op(a.data, b.data), a.bc if a.bc == b.bc else None)
    return ScalarField(a.grid, a.loc, op(a.data, b), None)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    u1: np.ndarray  # xface layout
    u2: np.ndarray  # yface layout
    bc: Optional[BoundarySpec] = None

    def __post_init__(self):
        if self.u1.shape != self.grid.shape("xface") or self.u2.shape != self.grid.shape("yface"):
            raise LocationError("vector components do not match the face layout")

    @property
    def i1(self) -> np.ndarray:
        return self.u1[:, 1:-1]

    @property
    def i2(self) -> np.ndarray:
        return self.u2[1:-1, :]

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same(self, other)
        return VectorField(self.grid, self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same(self, other)
        return VectorField(self.grid, self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, k: float) -> "VectorField":
        return VectorField(self.grid, self.u1 * k, self.u2 * k)

    __rmul__ = __mul__


def _check_same(a, b):
    if a.grid != b.grid:
        raise LocationError("grid mismatch")


def zeros_scalar(grid: Grid, loc: str = "center") -> ScalarField:
    return ScalarField(grid, loc, np.zeros(grid.shape(loc)))


def zeros_vector(grid: Grid) -> VectorField:
    return VectorField(grid, np.zeros(grid.shape("xface")), np.zeros(grid.shape("yface")))


def sample_scalar(grid: Grid, func: Callable, loc: str = "center") -> ScalarField:
    X, Y = grid.coords(loc)
    return ScalarField(grid, loc, np.asarray(func(X, Y), dtype=float) * np.ones_like(X))


def sample_vector(grid: Grid, func: Callable) -> VectorField:
    """Sample ``func(x, y) -> (u1, u2)`` on every face, ghost rows included."""
    X1, Y1 = grid.coords("xface")
    X2, Y2 = grid.coords("yface")
    u1 = np.asarray(func(X1, Y1)[0], dtype=float) * np.ones_like(X1)
    u2 = np.asarray(func(X2, Y2)[1], dtype=float) * np.ones_like(X2)
    return VectorField(grid, u1, u2)


# -- ghost filling ---------------------------------------------------------------


def apply_bc(f, bc: BoundarySpec):
    """Return a copy of ``f`` whose ghost layer realizes ``bc``."""
    if isinstance(f, ScalarField):
        if f.loc != "center" or not isinstance(bc, SCALAR_BCS):
            raise BoundaryError(f"{type(bc).__name__} cannot be applied to a {f.loc} scalar")
        d = f.data.copy()
        if isinstance(bc, NeumannZero):
            d[0, :], d[-1, :] = d[1, :], d[-2, :]
            d[:, 0], d[:, -1] = d[:, 1], d[:, -2]
        elif bc.order == 1:
            g = 2.0 * bc.value
            d[0, 1:-1], d[-1, 1:-1] = g - d[1, 1:-1], g - d[-2, 1:-1]
            d[:, 0], d[:, -1] = g - d[:, 1], g - d[:, -2]
        else:
            # (8g - 6 s1 + s2)/3 in difference form, exact for constants
            g = bc.value

            def ghost(s1, s2):
                return s1 + (8.0 * (g - s1) + (s2 - s1)) / 3.0

            d[0, 1:-1], d[-1, 1:-1] = ghost(d[1, 1:-1], d[2, 1:-1]), ghost(d[-2, 1:-1], d[-3, 1:-1])
            d[:, 0], d[:, -1] = ghost(d[:, 1], d[:, 2]), ghost(d[:, -2], d[:, -3])
        return ScalarField(f.grid, f.loc, d, bc)
    if isinstance(f, VectorField):
        if not isinstance(bc, VELOCITY_BCS):
            raise BoundaryError(f"{type(bc).__name__} cannot be applied to a velocity field")
        u1, u2 = f.u1.copy(), f.u2.copy()
        fill_velocity_ghosts(f.grid, u1, u2, bc)
        return VectorField(f.grid, u1, u2, bc)
    raise BoundaryError(f"cannot apply boundary conditions to {type(f).__name__}")


def tangential_ghost_rule(grid: Grid, bc: BoundarySpec):
    """Ghost values as ``ghost = c * adjacent + d`` on each wall.

    Returns a dict keyed by wall name with ``(c, d)`` arrays aligned with the
    tangential samples of that wall (x-faces for bottom/top, y-faces for
    left/right, domain-corner samples included).
    """
    X1, _ = grid.coords("xface")
    _, Y2 = grid.coords("yface")
    xs = X1[:, 0]  # tangential sample positions on bottom/top walls
    ys = Y2[0, :]
    hx, hy = grid.hx, grid.hy
    walls = {
        "bottom": (xs, np.zeros_like(xs), hy),
        "top": (xs, np.full_like(xs, grid.ly), hy),
        "left": (np.zeros_like(ys), ys, hx),
        "right": (np.full_like(ys, grid.lx), ys, hx),
    }
    rule = {}
    for name, (x, y, h) in walls.items():
        if isinstance(bc, NoSlip):
            c, d = -np.ones_like(x), np.zeros_like(x)
        elif isinstance(bc, SlipFriction):
            # Standard vorticity on the wall equals b times the tangential
            # component along n_perp = (n2, -n1); this reduces, on every wall,
            # to d(u_t)/dn = -b u_t with u_t the wall-parallel component.
            bh = bc.values(x, y) * h
            c, d = (1.0 - 0.5 * bh) / (1.0 + 0.5 * bh), np.zeros_like(x)
        elif isinstance(bc, VelocityProfile):
            c = -np.ones_like(x)
            if bc.profile is None:
                d = np.zeros_like(x)
            else:
                comp = 0 if name in ("bottom", "top") else 1
                d = 2.0 * np.asarray(bc.profile(x, y)[comp], dtype=float) * np.ones_like(x)
        else:
            raise BoundaryError(f"{type(bc).__name__} is not a velocity condition")
        rule[name] = (c, d)
    return rule


def set_normal_faces(grid: Grid, u1: np.ndarray, u2: np.ndarray, bc: BoundarySpec) -> None:
    if isinstance(bc, VelocityProfile):
        if bc.profile is None:
            return
        X1, Y1 = grid.coords("xface")
        X2, Y2 = grid.coords("yface")
        for idx in (0, -1):
            u1[idx, :] = np.asarray(bc.profile(X1[idx, :], Y1[idx, :])[0]) * np.ones(u1.shape[1])
            u2[:, idx] = np.asarray(bc.profile(X2[:, idx], Y2[:, idx])[1]) * np.ones(u2.shape[0])
    else:
        u1[0, :] = u1[-1, :] = 0.0
        u2[:, 0] = u2[:, -1] = 0.0


def fill_velocity_ghosts(grid: Grid, u1: np.ndarray, u2: np.ndarray, bc: BoundarySpec) -> None:
    set_normal_faces(grid, u1, u2, bc)
    rule = tangential_ghost_rule(grid, bc)
    c, d = rule["bottom"]
    u1[:, 0] = c * u1[:, 1] + d
    c, d = rule["top"]
    u1[:, -1] = c * u1[:, -2] + d
    c, d = rule["left"]
    u2[0, :] = c * u2[1, :] + d
    c, d = rule["right"]
    u2[-1, :] = c * u2[-2, :] + d


# -- difference operators -------------------------------------------------------


def _require(f, loc):
    if not isinstance(f, ScalarField) or f.loc != loc:
        raise LocationError(f"expected a {loc} scalar field")


def gradient(f: ScalarField, bc: Optional[BoundarySpec] = None) -> VectorField:
    """Face-centered differences of a center field (ghost rows included)."""
    _require(f, "center")
    if bc is not None:
        f = apply_bc(f, bc)
    d = f.data
    g1 = (d[1:, :] - d[:-1, :]) / f.grid.hx
    g2 = (d[:, 1:] - d[:, :-1]) / f.grid.hy
    return VectorField(f.grid, g1, g2)


def divergence(F: VectorField, bc: Optional[BoundarySpec] = None) -> ScalarField:
    if not isinstance(F, VectorField):
        raise LocationError("divergence expects a face vector field")
    if bc is not None:
        F = apply_bc(F, bc)
    g = F.grid
    out = np.zeros(g.shape("center"))
    out[1:-1, 1:-1] = (F.u1[1:, 1:-1] - F.u1[:-1, 1:-1]) / g.hx + (F.u2[1:-1, 1:] - F.u2[1:-1, :-1]) / g.hy
    return ScalarField(g, "center", out)


def laplacian(f: ScalarField, bc: Optional[BoundarySpec] = None) -> ScalarField:
    """Five-point Laplacian at interior cells; ``bc=None`` uses the stored ghosts."""
    return divergence(gradient(f, bc))


def center_to_corner(f: ScalarField) -> ScalarField:
    _require(f, "center")
    d = f.data
    return ScalarField(f.grid, "corner", 0.25 * (d[:-1, :-1] + d[1:, :-1] + d[:-1, 1:] + d[1:, 1:]))


def perp_gradient(f: ScalarField, bc: Optional[BoundarySpec] = None) -> VectorField:
    """``(d2 f, -d1 f)``; center input is first averaged onto corners."""
    if isinstance(f, ScalarField) and f.loc == "center":
        f = center_to_corner(apply_bc(f, bc) if bc is not None else f)
    _require(f, "corner")
    g = f.grid
    u1 = np.zeros(g.shape("xface"))
    u2 = np.zeros(g.shape("yface"))
    u1[:, 1:-1] = (f.data[:, 1:] - f.data[:, :-1]) / g.hy
    u2[1:-1, :] = -(f.data[1:, :] - f.data[:-1, :]) / g.hx
    return VectorField(g, u1, u2)


def curl2d(F: VectorField) -> ScalarField:
    """Corner-centered ``d1 u2 - d2 u1``; uses the tangential ghost layers."""
    if not isinstance(F, VectorField):
        raise LocationError("curl2d expects a face vector field")
    g = F.grid
    w = (F.u2[1:, :] - F.u2[:-1, :]) / g.hx - (F.u1[:, 1:] - F.u1[:, :-1]) / g.hy
    return ScalarField(g, "corner", w)


def vector_gradient_parts(F: VectorField):
    """The four first differences of a face field: d1u1, d2u2 at centers and
    d2u1, d1u2 at corners (wall corners use the ghost layer)."""
    g = F.grid
    d1u1 = (F.u1[1:, 1:-1] - F.u1[:-1, 1:-1]) / g.hx
    d2u2 = (F.u2[1:-1, 1:] - F.u2[1:-1, :-1]) / g.hy
    d2u1 = (F.u1[:, 1:] - F.u1[:, :-1]) / g.hy
    d1u2 = (F.u2[1:, :] - F.u2[:-1, :]) / g.hx
    return d1u1, d2u2, d2u1, d1u2


def vector_laplacian(F: VectorField) -> VectorField:
    """Componentwise 5-point Laplacian on interior faces (walls left at zero)."""
    g = F.grid
    hx2, hy2 = g.hx**2, g.hy**2
    l1 = np.zeros_like(F.u1)
    l2 = np.zeros_like(F.u2)
    a = F.u1
    l1[1:-1, 1:-1] = (a[2:, 1:-1] - 2 * a[1:-1, 1:-1] + a[:-2, 1:-1]) / hx2 + (
        a[1:-1, 2:] - 2 * a[1:-1, 1:-1] + a[1:-1, :-2]
    ) / hy2
    b = F.u2
    l2[1:-1, 1:-1] = (b[2:, 1:-1] - 2 * b[1:-1, 1:-1] + b[:-2, 1:-1]) / hx2 + (
        b[1:-1, 2:] - 2 * b[1:-1, 1:-1] + b[1:-1, :-2]
    ) / hy2
    return VectorField(g, l1, l2)


# -- inner products and norms ----------------------------------------------------


def inner(a, b) -> float:
    """Quadrature inner product over physical samples."""
    if isinstance(a, ScalarField):
        w = a.grid.weights(a.loc)
        return float(np.sum(w * a.interior * b.interior))
    if isinstance(a, VectorField):
        g = a.grid
        return float(np.sum(g.weights("xface") * a.i1 * b.i1) + np.sum(g.weights("yface") * a.i2 * b.i2))
    raise TypeError(type(a).__name__)


def lp_norm(f, p: float = 2.0) -> float:
    """Quadrature L^p norm.  Vector fields use the componentwise sum
    ``(||u1||_p^p + ||u2||_p^p)^(1/p)``, which is exact for p = 2."""
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    if isinstance(f, ScalarField):
        parts = [(f.interior, f.grid.weights(f.loc))]
    elif isinstance(f, VectorField):
        g = f.grid
        parts = [(f.i1, g.weights("xface")), (f.i2, g.weights("yface"))]
    elif isinstance(f, tuple):  # (values, weights) pair
        parts = [f]
    else:
        raise TypeError(type(f).__name__)
    if math.isinf(p):
        return float(max(np.max(np.abs(v)) if v.size else 0.0 for v, _ in parts))
    total = sum(float(np.sum(w * np.abs(v) ** p)) for v, w in parts)
    return total ** (1.0 / p)


def mean(f: ScalarField) -> float:
    w = f.grid.weights(f.loc)
    return float(np.sum(w * f.interior) / np.sum(w))


# -- binary snapshots --------------------------------------------------------------

MAGIC = b"MCF1"
_HEADER = struct.Struct("<4sIIId8x")
_LOC_TAGS = {loc: k for k, loc in enumerate(LOCATIONS)}


def write_snapshot(stream: BinaryIO, grid: Grid, loc: str, data: np.ndarray, t: float) -> None:
    """One record: 32-byte header then the padded array as little-endian float64."""
    if data.shape != grid.shape(loc):
        raise LocationError("snapshot data shape does not match its location")
    stream.write(_HEADER.pack(MAGIC, grid.nx, grid.ny, _LOC_TAGS[loc], float(t)))
    stream.write(np.ascontiguousarray(data, dtype="<f8").tobytes(order="C"))


def read_snapshot(stream: BinaryIO) -> tuple[int, int, str, float, np.ndarray]:
    raw = stream.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise EOFError("truncated snapshot header")
    magic, nx, ny, tag, t = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    loc = LOCATIONS[tag]
    shape = Grid(nx, ny, 1.0, 1.0).shape(loc)
    n = shape[0] * shape[1]
    buf = stream.read(8 * n)
    if len(buf) != 8 * n:
        raise EOFError("truncated snapshot payload")
    data = np.frombuffer(buf, dtype="<f8").reshape(shape).astype(float)
    return nx, ny, loc, t, data


# -- derived helpers -------------------------------------------------------------


def face_average(f: ScalarField, bc: Optional[BoundarySpec] = None) -> VectorField:
    """Arithmetic mean of the two centers adjacent to every face."""
    _require(f, "center")
    if bc is not None:
        f = apply_bc(f, bc)
    d = f.data
    return VectorField(f.grid, 0.5 * (d[1:, :] + d[:-1, :]), 0.5 * (d[:, 1:] + d[:, :-1]))


def h1_seminorm(F: VectorField) -> float:
    """Discrete ||grad F||_2 built from the four first differences."""
    g = F.grid
    d1u1, d2u2, d2u1, d1u2 = vector_gradient_parts(F)
    wc, wk = g.weights("center"), g.weights("corner")
    return math.sqrt(float(np.sum(wc * (d1u1**2 + d2u2**2)) + np.sum(wk * (d2u1**2 + d1u2**2))))


def h1_norm(F) -> float:
    """Discrete H^1 norm of a face vector field or a center scalar field."""
    if isinstance(F, ScalarField):
        return math.hypot(lp_norm(F, 2), lp_norm(gradient(F), 2))
    return math.hypot(lp_norm(F, 2), h1_seminorm(F))
