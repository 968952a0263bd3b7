"""Graded one-dimensional meshes with finite-difference and quadrature rules.

All radial operators in this package are assembled in the compressed
variable t = r**beta.  Profiles of interest are even in t, so derivative
stencils near the origin see the even extension through t = 0 and the
resulting matrices are valid only when applied to even profiles.
"""

from __future__ import annotations

import numpy as np

from .errors import MfelabError


def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights at point ``z`` for derivatives 0..m.

    Fornberg's recursion on arbitrary distinct nodes ``x``.  Returns an
    array of shape ``(m + 1, len(x))``; row ``d`` holds the weights of the
    d-th derivative, exact on polynomials of degree ``len(x) - 1``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n == 0:
        raise MfelabError("fd_weights needs at least one node")
    if m < 0 or m >= n:
        raise MfelabError(f"cannot form derivative {m} from {n} nodes")
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _interval_weights(nodes: np.ndarray, a: float, b: float) -> np.ndarray:
    """Weights integrating the interpolating polynomial over [a, b].

    Monomial moments about the interval midpoint keep the small Vandermonde
    solve well conditioned on graded meshes.
    """
    nodes = np.asarray(nodes, dtype=float)
    p = nodes.size
    c = 0.5 * (a + b)
    powers = np.arange(p)
    V = (nodes - c)[None, :] ** powers[:, None]
    mom = ((b - c) ** (powers + 1) - (a - c) ** (powers + 1)) / (powers + 1)
    return np.linalg.solve(V, mom)


def quad_weights(t: np.ndarray, t_end: float | None = None, points: int = 6) -> np.ndarray:
    """Composite interpolatory weights for integrals over [0, t_end].

    ``t`` must be strictly increasing with t[0] > 0.  Each cell between
    consecutive nodes integrates the degree-(points-1) interpolant through
    the ``points`` nearest nodes (design order 6 by default); the leading
    cell [0, t[0]] uses one-sided extrapolation, so no parity of the
    integrand is assumed.  ``t_end`` defaults to t[-1] and may land
    strictly inside a cell.
    """
    t = np.asarray(t, dtype=float)
    n = t.size
    if points < 2:
        raise MfelabError("cell stencils need at least 2 points")
    if n < points:
        raise MfelabError(f"quadrature needs at least {points} nodes")
    if t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
        raise MfelabError("nodes must be strictly increasing and positive")
    if t_end is None:
        t_end = float(t[-1])
    if not 0.0 < t_end <= t[-1] * (1.0 + 1e-12):
        raise MfelabError(f"t_end={t_end!r} outside (0, {t[-1]!r}]")
    t_end = min(t_end, float(t[-1]))

    q = np.zeros(n)
    back = (points - 2) // 2
    lead = min(t_end, float(t[0]))
    q[:points] += _interval_weights(t[:points], 0.0, lead)
    if t_end <= t[0]:
        return q
    for j in range(n - 1):
        if t[j] >= t_end:
            break
        hi = min(float(t[j + 1]), t_end)
        k0 = min(max(j - back, 0), n - points)
        q[k0 : k0 + points] += _interval_weights(t[k0 : k0 + points], float(t[j]), hi)
    return q


def to_banded(A: np.ndarray, lower: int, upper: int) -> np.ndarray:
    """Pack a banded dense matrix into LAPACK diagonal-ordered form."""
    n = A.shape[0]
    ab = np.zeros((lower + upper + 1, n))
    for k in range(-lower, upper + 1):
        d = np.diagonal(A, offset=k)
        if k >= 0:
            ab[upper - k, k:] = d
        else:
            ab[upper - k, : n + k] = d
    return ab


class RadialMesh:
    """Nodes, derivative matrices and quadrature on (0, t_max].

    The origin is not a node.  Stencils whose window would cross t = 0 are
    folded back onto the positive axis (even extension), and the last rows
    use left-shifted windows, so both derivative matrices have bandwidth at
    most ``2 * halfwidth``.  The final node carries a stencil row like any
    other; boundary conditions are imposed by whoever assembles the system.
    """

    def __init__(self, t: np.ndarray, beta: float, halfwidth: int = 3):
        t = np.array(t, dtype=float)
        if t.ndim != 1 or t.size < 2 * halfwidth + 2:
            raise MfelabError("mesh needs at least 2*halfwidth + 2 nodes")
        if t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
            raise MfelabError("nodes must be strictly increasing and positive")
        if not beta > 0.0:
            raise MfelabError("beta must be positive")
        self.t = t
        self.beta = float(beta)
        self.r = t ** (1.0 / beta)
        self.n = t.size
        self.halfwidth = int(halfwidth)
        self.bandwidth = 2 * self.halfwidth
        self.D1, self.D2 = self._derivative_matrices()
        self.quad = quad_weights(t)
        for arr in (self.t, self.r, self.D1, self.D2, self.quad):
            arr.setflags(write=False)

    @classmethod
    def graded(
        cls,
        n: int,
        beta: float,
        strength: float,
        t_max: float = 1.0,
        halfwidth: int = 3,
    ) -> "RadialMesh":
        """Sinh-graded mesh with ``n`` nodes, clustered toward the origin.

        ``strength`` = 0 gives the uniform mesh; larger values push nodes
        toward t = 0 roughly like exp(-strength) for the first node.
        """
        i = np.arange(1, n + 1, dtype=float)
        if strength < 0.0:
            raise MfelabError("grading strength must be nonnegative")
        if strength < 1e-12:
            t = t_max * i / n
        else:
            t = t_max * np.sinh(strength * i / n) / np.sinh(strength)
        return cls(t, beta, halfwidth)

    def _window(self, i: int):
        """Stencil columns and (possibly reflected) node abscissae for row i."""
        w = self.halfwidth
        n = self.n
        if i < w:
            neg = np.arange(w - i - 1, -1, -1)
            cols = np.concatenate([neg, np.arange(0, i + w + 1)])
            nodes = np.concatenate([-self.t[neg], self.t[: i + w + 1]])
        elif i >= n - w:
            cols = np.arange(n - 2 * w - 1, n)
            nodes = self.t[cols]
        else:
            cols = np.arange(i - w, i + w + 1)
            nodes = self.t[cols]
        return cols, nodes

    def _derivative_matrices(self):
        n = self.n
        D1 = np.zeros((n, n))
        D2 = np.zeros((n, n))
        for i in range(n):
            cols, nodes = self._window(i)
            c = fd_weights(float(self.t[i]), nodes, 2)
            np.add.at(D1[i], cols, c[1])
            np.add.at(D2[i], cols, c[2])
        return D1, D2

    def point_rows(self, t_star: float, m: int = 0) -> np.ndarray:
        """Rows evaluating derivatives 0..m at an arbitrary point.

        Returns shape ``(m + 1, n)``; valid for even profiles, including
        t_star = 0 and points between nodes.
        """
        if not 0.0 <= t_star <= self.t[-1] * (1.0 + 1e-12):
            raise MfelabError(f"point {t_star!r} outside [0, {self.t[-1]!r}]")
        i = int(np.argmin(np.abs(self.t - t_star)))
        cols, nodes = self._window(i)
        c = fd_weights(float(t_star), nodes, m)
        rows = np.zeros((m + 1, self.n))
        for d in range(m + 1):
            np.add.at(rows[d], cols, c[d])
        return rows

    def quad_to(self, t_end: float) -> np.ndarray:
        """Weights for the partial integral over [0, t_end]."""
        return quad_weights(self.t, t_end)

    def lap_rows(self, coef: np.ndarray | float) -> np.ndarray:
        """Dense rows of g -> g'' + (coef / t) g' on the even extension."""
        c = np.broadcast_to(np.asarray(coef, dtype=float), (self.n,))
        return self.D2 + (c / self.t)[:, None] * self.D1
