"""Green function of the unit disk, singular weights, and rate coefficients.

The domain is fixed: the unit disk with the singular point at the center.
Both Green function and regular part are exact (method of images), which is
what makes every downstream identity testable against closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError, WeightSpecError
from .liouville import validate_alpha

TWO_PI = 2.0 * np.pi


def _point(x) -> np.ndarray:
    p = np.asarray(x, dtype=float).reshape(-1)
    if p.size != 2 or not np.all(np.isfinite(p)):
        raise ParameterDomainError(f"expected a finite planar point, got {x!r}")
    return p


def green_disk(x, y) -> float:
    """G(x, y) for the unit disk: (1/2 pi) log(|y| |x - y*| / |x - y|)
    with the image point y* = y/|y|^2; -(1/2 pi) log|x| when y = 0."""
    xp, yp = _point(x), _point(y)
    ax, ay = np.hypot(*xp), np.hypot(*yp)
    if ax > 1.0 + 1e-14:
        raise ParameterDomainError(f"|x| = {ax} lies outside the closed disk")
    if ay >= 1.0:
        raise ParameterDomainError(f"|y| = {ay} must be interior")
    if ay == 0.0:
        if ax == 0.0:
            raise ParameterDomainError("Green function is singular at x = y")
        return -np.log(ax) / TWO_PI
    d = np.hypot(*(xp - yp))
    if d == 0.0:
        raise ParameterDomainError("Green function is singular at x = y")
    image = yp / ay**2
    return float(np.log(ay * np.hypot(*(xp - image)) / d) / TWO_PI)


def regular_part(x, y) -> float:
    """R(x, y) = G(x, y) + (1/2 pi) log|x - y|.

    The log singularities cancel analytically, so the diagonal is evaluated
    directly: R(x, y) = (1/2 pi) log(|y| |x - y*|), R(y, y) =
    (1/2 pi) log(1 - |y|^2), and R(x, 0) = 0 identically on the disk.
    """
    xp, yp = _point(x), _point(y)
    ax, ay = np.hypot(*xp), np.hypot(*yp)
    if ax > 1.0 + 1e-14:
        raise ParameterDomainError(f"|x| = {ax} lies outside the closed disk")
    if ay >= 1.0:
        raise ParameterDomainError(f"|y| = {ay} must be interior")
    if ay == 0.0:
        return 0.0
    image = yp / ay**2
    return float(np.log(ay * np.hypot(*(xp - image))) / TWO_PI)


_KINDS = ("constant", "gaussian", "poly")


@dataclass(frozen=True)
class WeightSpec:
    """Weight h(x) = hstar(x) |x|^(2 alpha) with a radial smooth factor.

    kind "constant": hstar = coef (> 0).
    kind "gaussian": hstar = exp(coef |x|^2), either sign of coef.
    kind "poly":     hstar = sum coeffs[j] |x|^(2j), positive on the disk.

    On the unit disk exp(-4 pi alpha G(x, 0)) = |x|^(2 alpha) exactly, so
    this h agrees with the desingularized form with hbar1 = hstar.
    """

    alpha: float
    kind: str = "constant"
    coef: float = 1.0
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        validate_alpha(self.alpha)
        if self.kind not in _KINDS:
            raise WeightSpecError(f"unknown hstar kind {self.kind!r}")
        if self.kind == "constant" and not self.coef > 0.0:
            raise WeightSpecError("constant hstar must be positive")
        if self.kind == "poly":
            if not self.coeffs:
                raise WeightSpecError("poly hstar needs coefficients")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
            if not self.coeffs[0] > 0.0:
                raise WeightSpecError("poly hstar must be positive at the origin")
            # scale-free coefficients make constant rescalings of hstar cancel
            # exactly in log_hstar_centered, not just to rounding
            object.__setattr__(
                self, "_unit", tuple(c / self.coeffs[0] for c in self.coeffs)
            )
            s = np.linspace(0.0, 1.0, 1000) ** 2
            if np.any(self._poly(s) <= 0.0):
                raise WeightSpecError("poly hstar must be positive on the disk")

    def _poly(self, s, unit: bool = False):
        coeffs = self._unit if unit else self.coeffs
        out = np.zeros_like(np.asarray(s, dtype=float))
        for c in reversed(coeffs):
            out = out * s + c
        return out

    def _poly_deriv(self, s):
        out = np.zeros_like(np.asarray(s, dtype=float))
        for j in range(len(self.coeffs) - 1, 0, -1):
            out = out * s + j * self._unit[j]
        return out

    # radial evaluations -------------------------------------------------

    def hstar(self, r):
        """The smooth factor at radius r."""
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            out = np.full_like(r, self.coef)
        elif self.kind == "gaussian":
            out = np.exp(self.coef * r**2)
        else:
            out = self._poly(r**2)
        return out if out.ndim else float(out)

    def log_hstar_centered(self, r):
        """log hstar(r) - log hstar(0), computed per kind so that constant
        offsets cancel exactly rather than to rounding."""
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            out = np.zeros_like(r)
        elif self.kind == "gaussian":
            out = self.coef * r**2
        else:
            out = np.log(self._poly(r**2, unit=True))
        return out if out.ndim else float(out)

    def dlog_hstar(self, r):
        """Radial derivative of log hstar."""
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            out = np.zeros_like(r)
        elif self.kind == "gaussian":
            out = 2.0 * self.coef * r
        else:
            s = r**2
            out = 2.0 * r * self._poly_deriv(s) / self._poly(s, unit=True)
        return out if out.ndim else float(out)

    def lap_log_hstar0(self) -> float:
        """Laplacian of log hstar at the origin, analytic per kind."""
        if self.kind == "constant":
            return 0.0
        if self.kind == "gaussian":
            return 4.0 * self.coef
        return 4.0 * self._unit[1] if len(self.coeffs) > 1 else 0.0

    # point evaluations ---------------------------------------------------

    def weight(self, x) -> float:
        """h(x) = hstar(x) |x|^(2 alpha); vanishes at the singular point."""
        p = _point(x)
        r = float(np.hypot(*p))
        if r == 0.0:
            return 0.0
        return float(self.hstar(r)) * r ** (2.0 * self.alpha)

    def hbar1(self, x) -> float:
        """The desingularized factor h(x)/|x|^(2 alpha), exact on the disk."""
        return float(self.hstar(float(np.hypot(*_point(x)))))

    def hamiltonian_Hp(self, x) -> float:
        """8 pi (1+alpha)(R(x,0) - R(0,0)) + log hbar1(x) - log hbar1(0).

        Both regular-part terms vanish on the disk with the singularity at
        the center; they are still evaluated so the formula stays general.
        """
        p = _point(x)
        if np.hypot(*p) >= 1.0:
            raise ParameterDomainError("Hamiltonian is defined for interior points")
        r_terms = regular_part(p, (0.0, 0.0)) - regular_part((0.0, 0.0), (0.0, 0.0))
        return 8.0 * np.pi * (1.0 + self.alpha) * r_terms + float(
            self.log_hstar_centered(float(np.hypot(*p)))
        )


def ell_coefficient(alpha: float, hbar1_at_p: float, lap_log_hstar_at_p: float) -> float:
    """Leading rate coefficient

        ell = 2 pi^2 / ((1+a) sin(pi/(1+a))) * ((1+a)/(pi hbar1))^(1/(1+a))
              * lap_log_hstar.
    """
    a = validate_alpha(alpha)
    if not hbar1_at_p > 0.0:
        raise ParameterDomainError("hbar1 at the blow-up point must be positive")
    beta = 1.0 + a
    front = 2.0 * np.pi**2 / (beta * np.sin(np.pi / beta))
    scale = (beta / (np.pi * hbar1_at_p)) ** (1.0 / beta)
    return float(front * scale * lap_log_hstar_at_p)


def epsilon0(alpha: float) -> float:
    """Correction exponent 2 - 2(1-alpha)^+: equals 2 alpha below 1, else 2."""
    a = validate_alpha(alpha)
    return 2.0 * a if a < 1.0 else 2.0
