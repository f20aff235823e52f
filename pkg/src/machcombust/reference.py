"""Independent constant-density incompressible stepper used as an oracle.

Written from scratch with index loops: no-slip walls, MAC unknowns,
backward Euler with centered advection, and each step solved as one
monolithic saddle-point system per Oseen (frozen-advector) iteration.
The pressure mean is fixed by a Lagrange multiplier.  Nothing from
:mod:`machcombust.grid` or :mod:`machcombust.elliptic` is used, so agreement
with the main stepper at ``rho = 1`` is a genuine cross-check.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class _Triplets:
    """``A[r, c] += v`` collector (duplicates are summed on conversion)."""

    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def __getitem__(self, key):
        return 0.0

    def __setitem__(self, key, value):
        self.rows.append(key[0])
        self.cols.append(key[1])
        self.vals.append(value)

    def tocsc(self, shape):
        return sp.csc_matrix((self.vals, (self.rows, self.cols)), shape=shape)


class ReferenceStepper:
    """``u_t + (u.grad) u - mu lap u + grad p = 0``, ``div u = 0`` on a box.

    Velocities are passed as interior arrays: ``u1`` of shape ``(nx-1, ny)``
    (x-faces ``i = 1..nx-1``) and ``u2`` of shape ``(nx, ny-1)``.
    """

    def __init__(self, nx: int, ny: int, lx: float, ly: float, mu: float, dt: float):
        self.nx, self.ny = nx, ny
        self.hx, self.hy = lx / nx, ly / ny
        self.mu, self.dt = mu, dt
        self.n1 = (nx - 1) * ny
        self.n2 = nx * (ny - 1)
        self.nc = nx * ny

    def _iu(self, i, j):
        return (i - 1) * self.ny + j

    def _iv(self, i, j):
        return self.n1 + i * (self.ny - 1) + (j - 1)

    def _ip(self, i, j):
        return self.n1 + self.n2 + i * self.ny + j

    def _u(self, u1, i, j):
        """x-face value with wall and ghost rules (i in 0..nx, j in -1..ny)."""
        if i == 0 or i == self.nx:
            return 0.0
        if j == -1:
            return -u1[i - 1, 0]
        if j == self.ny:
            return -u1[i - 1, self.ny - 1]
        return u1[i - 1, j]

    def _v(self, u2, i, j):
        if j == 0 or j == self.ny:
            return 0.0
        if i == -1:
            return -u2[0, j - 1]
        if i == self.nx:
            return -u2[self.nx - 1, j - 1]
        return u2[i, j - 1]

    def _matrix(self, a1, a2):
        nx, ny, hx, hy, mu = self.nx, self.ny, self.hx, self.hy, self.mu
        N = self.n1 + self.n2 + self.nc + 1
        A = _Triplets()
        lam = N - 1

        def add_u(row, i, j, c):
            if i == 0 or i == nx:
                return
            if j == -1:
                A[row, self._iu(i, 0)] -= c
            elif j == ny:
                A[row, self._iu(i, ny - 1)] -= c
            else:
                A[row, self._iu(i, j)] += c

        def add_v(row, i, j, c):
            if j == 0 or j == ny:
                return
            if i == -1:
                A[row, self._iv(0, j)] -= c
            elif i == nx:
                A[row, self._iv(nx - 1, j)] -= c
            else:
                A[row, self._iv(i, j)] += c

        for i in range(1, nx):
            for j in range(ny):
                row = self._iu(i, j)
                b1 = self._u(a1, i, j)
                b2 = 0.25 * (self._v(a2, i - 1, j) + self._v(a2, i, j) + self._v(a2, i - 1, j + 1) + self._v(a2, i, j + 1))
                add_u(row, i, j, 1.0 / self.dt + 2 * mu / hx**2 + 2 * mu / hy**2)
                add_u(row, i + 1, j, b1 / (2 * hx) - mu / hx**2)
                add_u(row, i - 1, j, -b1 / (2 * hx) - mu / hx**2)
                add_u(row, i, j + 1, b2 / (2 * hy) - mu / hy**2)
                add_u(row, i, j - 1, -b2 / (2 * hy) - mu / hy**2)
                A[row, self._ip(i, j)] += 1.0 / hx
                A[row, self._ip(i - 1, j)] -= 1.0 / hx
        for i in range(nx):
            for j in range(1, ny):
                row = self._iv(i, j)
                b2 = self._v(a2, i, j)
                b1 = 0.25 * (self._u(a1, i, j - 1) + self._u(a1, i + 1, j - 1) + self._u(a1, i, j) + self._u(a1, i + 1, j))
                add_v(row, i, j, 1.0 / self.dt + 2 * mu / hx**2 + 2 * mu / hy**2)
                add_v(row, i + 1, j, b1 / (2 * hx) - mu / hx**2)
                add_v(row, i - 1, j, -b1 / (2 * hx) - mu / hx**2)
                add_v(row, i, j + 1, b2 / (2 * hy) - mu / hy**2)
                add_v(row, i, j - 1, -b2 / (2 * hy) - mu / hy**2)
                A[row, self._ip(i, j)] += 1.0 / hy
                A[row, self._ip(i, j - 1)] -= 1.0 / hy
        for i in range(nx):
            for j in range(ny):
                row = self._ip(i, j)
                add_u(row, i + 1, j, 1.0 / hx)
                add_u(row, i, j, -1.0 / hx)
                add_v(row, i, j + 1, 1.0 / hy)
                add_v(row, i, j, -1.0 / hy)
                A[row, lam] = 1.0
                A[lam, row] = 1.0
        return A.tocsc((N, N))

    def step(self, u1: np.ndarray, u2: np.ndarray, *, tol: float = 1e-14, max_iter: int = 200):
        """One backward-Euler step; returns ``(u1, u2, p, iterations)``."""
        rhs = np.zeros(self.n1 + self.n2 + self.nc + 1)
        rhs[: self.n1] = u1.ravel() / self.dt
        rhs[self.n1 : self.n1 + self.n2] = u2.ravel() / self.dt
        a1, a2 = u1, u2
        scale = max(float(np.max(np.abs(u1), initial=0.0)), float(np.max(np.abs(u2), initial=0.0)), 1e-300)
        for k in range(1, max_iter + 1):
            x = spla.spsolve(self._matrix(a1, a2), rhs)
            n1 = x[: self.n1].reshape(self.nx - 1, self.ny)
            n2 = x[self.n1 : self.n1 + self.n2].reshape(self.nx, self.ny - 1)
            change = max(float(np.max(np.abs(n1 - a1))), float(np.max(np.abs(n2 - a2))))
            a1, a2 = n1, n2
            if change <= tol * scale:
                break
        else:
            raise RuntimeError("reference Oseen iteration did not converge")
        p = x[self.n1 + self.n2 : -1].reshape(self.nx, self.ny)
        return a1, a2, p, k
