"""Quantitative checks along blow-up branches.

Every formula the solver family is supposed to obey is probed here as a
number: the rate law rho - 8 pi beta ~ -ell e^(-lambda/beta), the matching
identity tying the peak height to the Green function, the outer profile
u ~ rho G away from the peak, and the boundary-bulk (Pohozaev) identity
for pairs of solutions and for linearized fields.  All checks reduce to
one-dimensional quadratures in the radial variable t = r^beta; tests carry
a two-dimensional tensor-product cross-check of the reduction.

Fits are unweighted least squares on log|value| against lambda, over a
lambda window that defaults to [8, 14]: below that the subleading terms
bend the line, above it round-off eats the signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError
from .greens import ell_coefficient, green_disk, regular_part
from .linearization import b0_projection, kernel_candidate
from .radial_solver import (
    EIGHT_PI,
    Branch,
    MeshPolicy,
    SolutionPoint,
    find_fold_pair,
)

__all__ = [
    "FitResult",
    "MonotonicityVerdict",
    "DiagnosticsReport",
    "rate_law_fit",
    "local_rate_law_fit",
    "matching_residual",
    "outer_profile_residual",
    "pohozaev_residual",
    "pohozaev_residual_linearized",
    "psi1_gradient_check",
    "uniqueness_probe",
    "build_report",
]

R2_FLOOR = 0.99
_WINDOW_SLACK = 1e-6  # branch targets land on window edges up to solver tol


@dataclass(frozen=True)
class FitResult:
    """Log-linear fit log|value| = slope * lambda + intercept.

    Unpacks as (slope, intercept, r_squared); window and count record the
    lambda range and the number of points actually used.
    """

    slope: float
    intercept: float
    r_squared: float
    window: tuple
    count: int

    def __iter__(self):
        return iter((self.slope, self.intercept, self.r_squared))

    @property
    def ok(self) -> bool:
        return self.r_squared >= R2_FLOOR

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "count": self.count,
            "r2_ok": self.ok,
        }


def _log_linear_fit(lams, values, window) -> FitResult:
    lams = np.asarray(lams, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ParameterDomainError(f"empty fit window [{lo}, {hi}]")
    keep = (lams >= lo - _WINDOW_SLACK) & (lams <= hi + _WINDOW_SLACK)
    keep &= values != 0.0
    if int(keep.sum()) < 5:
        raise ParameterDomainError(
            f"only {int(keep.sum())} usable points in the window [{lo}, {hi}]; "
            "a fit needs at least 5"
        )
    x = lams[keep]
    y = np.log(np.abs(values[keep]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = y - y.mean()
    ss_tot = float(total @ total)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    return FitResult(float(slope), float(intercept), r2, (lo, hi), int(keep.sum()))


def rate_law_fit(branch: Branch, window=(8.0, 14.0)) -> FitResult:
    """Fit log|rho - 8 pi beta| against lambda over the window.

    The predicted slope is -1/beta where the gradient coefficient ell is
    nonzero; when ell vanishes the universal e^(-lambda) correction takes
    over and the slope steepens to -1.
    """
    beta = 1.0 + branch.spec.alpha
    return _log_linear_fit(branch.lambdas, branch.rhos - EIGHT_PI * beta, window)


def local_rate_law_fit(branch: Branch, r0: float, window=(8.0, 14.0)) -> FitResult:
    """Same fit on the local mass over B(0, r0) instead of the full rho.

    The outer tail rho - rho_1 is itself of order e^(-lambda) with an
    r0-dependent constant, so the local fit only reproduces the global law
    once lambda is large enough for the gradient term to dominate it.
    """
    vals = [pt.local_mass(r0) for pt in branch.points]
    beta = 1.0 + branch.spec.alpha
    return _log_linear_fit(branch.lambdas, np.asarray(vals) - EIGHT_PI * beta, window)


def matching_residual(point: SolutionPoint) -> float:
    """Peak-height matching: lambda - log mass + 2 log gamma + 8 pi beta R(p, p).

    log mass is read off the boundary value of the normalized profile
    (u - log mass vanishes at r = 1 only in the Dirichlet gauge), which
    makes the residual invariant under u -> u + const.  On the exact disk
    family the residual equals 2 log(m / (1 + m)) identically; along
    generic branches it decays at least like sigma.
    """
    spec = point.spec
    beta = 1.0 + spec.alpha
    r_pp = regular_part((0.0, 0.0), (0.0, 0.0))
    return float(
        point.lam
        + point.u_tilde[-1]
        + 2.0 * np.log(point.gamma)
        + EIGHT_PI * beta * r_pp
    )


def _du_dr(point: SolutionPoint):
    """du/dr at the mesh nodes; du/dr = beta t^(1 - 1/beta) du/dt."""
    mesh = point.mesh
    beta = 1.0 + point.spec.alpha
    dudt = mesh.D1 @ point.u
    r = mesh.t ** (1.0 / beta)
    with np.errstate(divide="ignore"):
        fac = beta * np.where(mesh.t > 0.0, mesh.t ** (1.0 - 1.0 / beta), 0.0)
    return r, fac * dudt


def outer_profile_residual(point: SolutionPoint, r0: float, gradient: bool = False) -> float:
    """sup over mesh radii r >= r0 of |u - rho G(., 0)| (or radial gradients).

    The comparison field is the full-mass multiple of the Green function,
    which shares the Dirichlet boundary values, so the residual vanishes
    at r = 1 and measures how fast the bubble's influence dies off.
    """
    if not 0.0 < r0 < 1.0:
        raise ParameterDomainError(f"r0 = {r0} must lie in (0, 1)")
    mesh = point.mesh
    beta = 1.0 + point.spec.alpha
    r = mesh.t ** (1.0 / beta)
    keep = r >= r0
    if not np.any(keep):
        raise ParameterDomainError(f"no mesh nodes at radius >= {r0}")
    rk = r[keep]
    if not gradient:
        vals = []
        for ri, ui in zip(rk, point.u[keep]):
            g = green_disk((ri, 0.0), (0.0, 0.0)) + regular_part((ri, 0.0), (0.0, 0.0))
            vals.append(ui - point.rho * g)
        return float(np.max(np.abs(vals)))
    _, dur = _du_dr(point)
    durk = dur[keep]
    h = 1e-6
    vals = []
    for ri, di in zip(rk, durk):
        # one-sided clamp keeps the stencil inside the closed disk
        rp = min(ri + h, 1.0)
        rm = rp - 2.0 * h
        dr_reg = (regular_part((rp, 0.0), (0.0, 0.0)) - regular_part((rm, 0.0), (0.0, 0.0))) / (2.0 * h)
        dg = -1.0 / (2.0 * np.pi * ri) + dr_reg
        vals.append(di - point.rho * dg)
    return float(np.max(np.abs(vals)))


def _phi_field(point: SolutionPoint):
    """rho (R(x, p) - R(p, p)) sampled on the mesh; identically 0 on the disk.

    Kept as an explicit field so the identity code reads like the general
    pairwise form rather than a disk-only simplification.
    """
    mesh = point.mesh
    beta = 1.0 + point.spec.alpha
    r = mesh.t ** (1.0 / beta)
    r00 = regular_part((0.0, 0.0), (0.0, 0.0))
    vals = np.array([regular_part((ri, 0.0), (0.0, 0.0)) - r00 for ri in r])
    return point.rho * vals


def _identity_residual(point: SolutionPoint, w, xi, f, r: float) -> float:
    """Reduced boundary-bulk identity LHS - RHS at radius r.

    w is the sum field whose radial derivative enters the boundary energy,
    xi the test field, f the difference-quotient field multiplying rho h.
    All three live on the t-mesh; the circle integrals collapse to 2 pi
    times the radial values and s^(2 alpha) s ds = (1/beta) t dt.
    """
    spec = point.spec
    mesh = point.mesh
    beta = 1.0 + spec.alpha
    rho = point.rho
    tr = r**beta
    rows = mesh.point_rows(tr, 1)
    lhs = -np.pi * beta**2 * tr**2 * float(rows[1] @ w) * float(rows[1] @ xi)
    bnd = 2.0 * np.pi * rho * spec.hstar(r) * tr**2 * float(rows[0] @ f)
    rp = mesh.t ** (1.0 / beta)
    phi = _phi_field(point)
    fac = 2.0 + 2.0 * spec.alpha + rp * spec.dlog_hstar(rp) + beta * mesh.t * (mesh.D1 @ phi)
    hs = spec.hstar(rp)
    bulk = -(2.0 * np.pi / beta) * float(mesh.quad_to(tr) @ (rho * hs * f * fac * mesh.t))
    return lhs - (bnd + bulk)


def pohozaev_residual(point_a: SolutionPoint, point_b: SolutionPoint, r: float) -> float:
    """Boundary-bulk identity defect for two solutions at the same rho.

    The two profiles are normalized, shifted by the regular-part field and
    differenced; the difference quotient is scaled by its sup norm, which
    is how the identity is applied to fold pairs.  For actual solutions
    the residual sits at quadrature round-off; fields that merely differ
    by a constant are not solutions of the same problem and produce an
    order-one residual.
    """
    if not 0.0 < r < 1.0:
        raise ParameterDomainError(f"identity radius r = {r} must lie in (0, 1)")
    if point_a.spec != point_b.spec:
        raise ParameterDomainError("the two points must share one weight")
    if not np.array_equal(point_a.mesh.t, point_b.mesh.t):
        raise ParameterDomainError("the two points must share one mesh")
    scale = max(1.0, abs(point_a.rho))
    if abs(point_a.rho - point_b.rho) > 1e-10 * scale:
        raise ParameterDomainError(
            f"rho mismatch {point_a.rho - point_b.rho:.3e}; the identity needs a "
            "matched pair (rho equal to 1e-10)"
        )
    phi = _phi_field(point_a)
    v1 = point_a.u_tilde - phi
    v2 = point_b.u_tilde - phi
    diff = v1 - v2
    nrm = float(np.max(np.abs(diff)))
    if nrm == 0.0:
        raise ParameterDomainError("the two profiles coincide; nothing to compare")
    xi = diff / nrm
    f = (np.exp(v1 + phi) - np.exp(v2 + phi)) / nrm
    w = v1 + v2
    return _identity_residual(point_a, w, xi, f, r)


def pohozaev_residual_linearized(point: SolutionPoint, xi, r: float) -> float:
    """Boundary-bulk identity defect for a linearized field xi.

    The difference quotient degenerates to c xi with c = e^(u - log mass),
    and the sum field to twice the solution.  A field solving the local
    mode-0 linearized equation (kernel_candidate provides one) drives the
    residual to quadrature round-off; any other smooth field gives a
    computable nonzero value, which is itself useful as a scale reference.
    """
    if not 0.0 < r < 1.0:
        raise ParameterDomainError(f"identity radius r = {r} must lie in (0, 1)")
    xi = np.asarray(xi, dtype=float)
    if xi.shape != point.u.shape:
        raise ParameterDomainError(
            f"xi has shape {xi.shape}, expected {point.u.shape}"
        )
    if not np.all(np.isfinite(xi)):
        raise ParameterDomainError("xi carries non-finite entries")
    phi = _phi_field(point)
    v = point.u_tilde - phi
    f = np.exp(v + phi) * xi
    return _identity_residual(point, 2.0 * v, xi, f, r)


def psi1_gradient_check(point: SolutionPoint, at=(0.0, 0.0), step: float = 1e-5) -> float:
    """|grad log(hbar1 e^(R1 + psi))| at a point, by central differences.

    R1(x) = rho_1 R(x, p) with rho_1 the mass inside B(p, 1/2), and the
    harmonic correction psi vanishes identically for radial data, so the
    gradient at the origin is a direct stationarity check on the peak
    location.  Radial weights give 0 at the origin to round-off.
    """
    spec = point.spec
    ax = float(np.hypot(at[0], at[1]))
    if ax + 2.0 * step >= 1.0:
        raise ParameterDomainError(f"evaluation point |x| = {ax} too close to the boundary")
    rho1 = point.local_mass(0.5)

    def field(x, y):
        hb = spec.hbar1((x, y))
        if hb <= 0.0:
            raise ParameterDomainError("hbar1 must be positive at the evaluation point")
        return float(np.log(hb) + rho1 * regular_part((x, y), (0.0, 0.0)))

    x0, y0 = float(at[0]), float(at[1])
    gx = (field(x0 + step, y0) - field(x0 - step, y0)) / (2.0 * step)
    gy = (field(x0, y0 + step) - field(x0, y0 - step)) / (2.0 * step)
    return float(np.hypot(gx, gy))


@dataclass(frozen=True)
class MonotonicityVerdict:
    """Sign pattern of drho/dlambda over a window, against the predicted one.

    expected_sign is -sign(ell) when the gradient coefficient is nonzero;
    with ell = 0 the e^(-lambda) law takes over and rho climbs toward the
    limit, so the expectation flips to +1.
    """

    monotone: bool
    sign: int
    expected_sign: int
    lambdas: tuple
    derivatives: tuple
    window: tuple

    @property
    def ok(self) -> bool:
        return self.monotone and self.sign == self.expected_sign

    def to_dict(self) -> dict:
        return {
            "monotone": self.monotone,
            "sign": self.sign,
            "expected_sign": self.expected_sign,
            "lambdas": list(self.lambdas),
            "derivatives": list(self.derivatives),
            "window": list(self.window),
        }


def uniqueness_probe(branch: Branch, window=(8.0, 14.0)) -> MonotonicityVerdict:
    """Finite-difference drho/dlambda table and its sign verdict.

    A branch that stays monotone in the window cannot carry two solutions
    at one rho there; the expected sign comes from the rate law.
    """
    lams = branch.lambdas
    rhos = branch.rhos
    lo, hi = float(window[0]), float(window[1])
    keep = (lams >= lo - _WINDOW_SLACK) & (lams <= hi + _WINDOW_SLACK)
    if int(keep.sum()) < 4:
        raise ParameterDomainError(
            f"only {int(keep.sum())} branch points in [{lo}, {hi}]; "
            "the derivative table needs at least 4"
        )
    lk = lams[keep]
    rk = rhos[keep]
    order = np.argsort(lk)
    lk, rk = lk[order], rk[order]
    der = np.diff(rk) / np.diff(lk)
    mid = 0.5 * (lk[1:] + lk[:-1])
    signs = np.sign(der)
    monotone = bool(np.all(signs == signs[0]) and signs[0] != 0.0)
    spec = branch.spec
    ell = ell_coefficient(spec.alpha, spec.hbar1((0.0, 0.0)), spec.lap_log_hstar0())
    expected = -int(np.sign(ell)) if ell != 0.0 else 1
    return MonotonicityVerdict(
        monotone=monotone,
        sign=int(signs[0]) if monotone else 0,
        expected_sign=expected,
        lambdas=tuple(float(v) for v in mid),
        derivatives=tuple(float(v) for v in der),
        window=(lo, hi),
    )


@dataclass(frozen=True)
class DiagnosticsReport:
    """Bundle of branch diagnostics with a stable JSON shape."""

    rate_fit: FitResult
    local_rate_fit: FitResult
    matching: tuple
    outer: tuple
    pohozaev: tuple
    pohozaev_kind: str
    pohozaev_radius: float
    b0: tuple
    window: tuple
    r0: float
    config_hash: str

    def to_dict(self) -> dict:
        local = self.local_rate_fit.to_dict()
        local["r0"] = self.r0
        return {
            "rate_fit": self.rate_fit.to_dict(),
            "local_rate_fit": local,
            "matching": list(self.matching),
            "outer": list(self.outer),
            "pohozaev": {
                "kind": self.pohozaev_kind,
                "radius": self.pohozaev_radius,
                "values": list(self.pohozaev),
            },
            "b0": list(self.b0),
            "window": list(self.window),
            "config_hash": self.config_hash,
        }


def build_report(
    branch: Branch,
    window=(8.0, 14.0),
    r0: float = 0.25,
    outer_radius: float = 0.5,
    pohozaev_radius: float = 0.25,
    config_hash: str = "",
) -> DiagnosticsReport:
    """Run the full diagnostic battery on one branch.

    Fold-flagged branches get pairwise identity residuals and b0 estimates
    from the fold differences; branches without folds get the linearized
    identity on the local kernel candidate at every point.
    """
    rate = rate_law_fit(branch, window)
    local = local_rate_law_fit(branch, r0, window)
    matching = tuple(matching_residual(pt) for pt in branch.points)
    outer = tuple(outer_profile_residual(pt, outer_radius) for pt in branch.points)
    if branch.fold_flags:
        policy = MeshPolicy(n=branch.points[0].mesh.t.size)
        poh = []
        b0s = []
        for which in range(len(branch.fold_flags)):
            lo_pt, hi_pt = find_fold_pair(branch, policy, which=which)
            poh.append(pohozaev_residual(lo_pt, hi_pt, pohozaev_radius))
            diff = hi_pt.u_tilde - lo_pt.u_tilde
            b0s.append(b0_projection(diff / np.max(np.abs(diff)), hi_pt))
        kind = "pair"
        b0 = tuple(b0s)
    else:
        poh = [
            pohozaev_residual_linearized(pt, kernel_candidate(pt), pohozaev_radius)
            for pt in branch.points
        ]
        kind = "eigenfield"
        b0 = ()
    return DiagnosticsReport(
        rate_fit=rate,
        local_rate_fit=local,
        matching=matching,
        outer=outer,
        pohozaev=tuple(float(v) for v in poh),
        pohozaev_kind=kind,
        pohozaev_radius=float(pohozaev_radius),
        b0=b0,
        window=(float(window[0]), float(window[1])),
        r0=float(r0),
        config_hash=config_hash,
    )
