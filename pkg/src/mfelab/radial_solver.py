"""Radial solver and continuation for the nonlocal mean field equation.

The problem is -Delta u = rho h e^u / int_D h e^u with u = 0 on the unit
circle and h = hstar(x) |x|^(2 alpha).  In the compressed variable
t = r^(1+alpha) the singular weight disappears:

    u_tt + u_t/t + (rho / beta^2) hstar(t^(1/beta)) e^u / M = 0,

with beta = 1 + alpha and M the total mass integral.  Newton iterations
carry the exact rank-one Jacobian of the nonlocal term, so convergence
stays quadratic arbitrarily close to blow up.  The continuation parameter
is lambda = max of the normalized solution, which stays monotone through
folds in rho.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .errors import (
    MfelabError,
    NotApplicableError,
    ParameterDomainError,
    SolverError,
)
from .greens import WeightSpec
from .meshing import RadialMesh, to_banded

EIGHT_PI = 8.0 * np.pi

#: continuation sub-step floor; below this a failing step aborts the branch
MIN_STEP = 1e-3


@dataclass(frozen=True)
class MeshPolicy:
    """How solver meshes are built.

    "auto" grading ties the sinh strength to the current blow-up height so
    that the node cluster tracks the shrinking inner scale; "fixed" uses
    ``strength`` as given.  Solver meshes never go below 64 nodes.
    """

    n: int = 512
    grading: str = "auto"
    strength: float = 6.0
    offset: float = 2.0

    def __post_init__(self):
        if self.n < 64:
            raise ParameterDomainError("solver meshes need at least 64 nodes")
        if self.grading not in ("auto", "fixed"):
            raise ParameterDomainError(f"unknown grading {self.grading!r}")

    def build(self, beta: float, lam: float) -> RadialMesh:
        if self.grading == "fixed":
            a = self.strength
        else:
            # grading must keep the first node below the bubble core scale
            # (which shrinks like e^(-lam/2) in t) without starving the
            # mid-range where curvature actually lives
            a = max(2.0, lam / 2.0 + self.offset)
        return RadialMesh.graded(self.n, beta, a)


def mass_integral(u: np.ndarray, spec: WeightSpec, mesh: RadialMesh):
    """log and value of M = int_D h e^u, evaluated in scaled-exponential
    form so large peaks never overflow."""
    beta = 1.0 + spec.alpha
    logs = np.log(2.0 * np.pi / beta * mesh.t * spec.hstar(mesh.r)) + u
    top = float(np.max(logs))
    s = float(mesh.quad @ np.exp(logs - top))
    if not s > 0.0:
        raise SolverError("mass integral lost positivity")
    log_mass = top + np.log(s)
    return log_mass, np.exp(log_mass)


class SolutionPoint:
    """One converged radial solution with its derived scalars.

    Immutable once constructed; field arrays are write-locked so points can
    be shared freely between threads and diagnostics.
    """

    def __init__(
        self,
        spec: WeightSpec,
        mesh: RadialMesh,
        u: np.ndarray,
        rho: float,
        res_norm: float,
        newton_iters: int,
    ):
        self.spec = spec
        self.mesh = mesh
        self.u = np.array(u, dtype=float)
        self.u.setflags(write=False)
        self.rho = float(rho)
        self.res_norm = float(res_norm)
        self.newton_iters = int(newton_iters)
        self.log_mass, self.mass_total = mass_integral(self.u, spec, mesh)

    @cached_property
    def u_tilde(self) -> np.ndarray:
        v = self.u - self.log_mass
        v.setflags(write=False)
        return v

    @cached_property
    def lam(self) -> float:
        u0 = float(self.mesh.point_rows(0.0, 0)[0] @ self.u)
        return u0 - self.log_mass

    @cached_property
    def gamma(self) -> float:
        beta = 1.0 + self.spec.alpha
        return self.rho * self.spec.hstar(0.0) / (8.0 * beta * beta)

    @cached_property
    def sigma(self) -> float:
        return float(np.exp(-self.lam / (2.0 * (1.0 + self.spec.alpha))))

    def local_mass(self, r0: float) -> float:
        """rho times the mass fraction of B(0, r0): rho int_{B_r0} h e^(u~)."""
        beta = 1.0 + self.spec.alpha
        if not 0.0 < r0 <= 1.0:
            raise ParameterDomainError("r0 must lie in (0, 1]")
        q = self.mesh.quad_to(r0**beta)
        logs = np.log(2.0 * np.pi / beta * self.mesh.t * self.spec.hstar(self.mesh.r))
        return self.rho * float(q @ np.exp(logs + self.u - self.log_mass))


def normalize(point: SolutionPoint):
    """(u~, lambda, gamma, sigma) of a converged point."""
    return point.u_tilde, point.lam, point.gamma, point.sigma


@dataclass(frozen=True)
class Branch:
    """Ordered lambda-increasing family of solutions of one configuration."""

    spec: WeightSpec
    points: tuple[SolutionPoint, ...]
    fold_flags: tuple[int, ...] = ()
    failure: dict | None = None

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def rhos(self) -> np.ndarray:
        return np.array([p.rho for p in self.points])


# assembly ----------------------------------------------------------------


def _scaled_parts(u, rho, spec, mesh, lap, hstar):
    """Residual of the t-form equation, its row scales, and Jacobian data."""
    beta = 1.0 + spec.alpha
    log_mass, _ = mass_integral(u, spec, mesh)
    d = (rho / beta**2) * hstar * np.exp(u - log_mass)
    G = lap @ u + d
    scale = np.abs(lap) @ np.abs(u) + np.abs(d) + 1e-30
    # mass-derivative weights: dM/du_j scaled by 1/M; they sum to 1
    mw = mesh.quad * np.exp(
        np.log(2.0 * np.pi / beta * mesh.t * hstar) + u - log_mass
    )
    return G, d, mw, scale, log_mass


def residual(u, rho, spec: WeightSpec, mesh: RadialMesh) -> np.ndarray:
    """Pointwise residual Delta u + rho h e^u / M in the plane variables."""
    u = np.asarray(u, dtype=float)
    if u.shape != mesh.t.shape:
        raise ParameterDomainError("field and mesh sizes differ")
    if abs(float(u[-1])) > 1e-9:
        raise ParameterDomainError("field must vanish at r = 1")
    beta = 1.0 + spec.alpha
    lap = mesh.lap_rows(1.0)
    if rho == 0.0:
        return (beta**2 * mesh.t ** (2.0 - 2.0 / beta)) * (lap @ u)
    hstar = np.asarray(spec.hstar(mesh.r))
    G, _, _, _, _ = _scaled_parts(u, rho, spec, mesh, lap, hstar)
    return (beta**2 * mesh.t ** (2.0 - 2.0 / beta)) * G


def _norm_rows(G, scale, u_last):
    return max(float(np.max(np.abs(G[:-1]) / scale[:-1])), abs(float(u_last)))


def _banded_solve(A, rhs_cols, bw):
    s = np.max(np.abs(A), axis=1)
    ab = to_banded(A / s[:, None], bw, bw)
    return scipy.linalg.solve_banded((bw, bw), ab, rhs_cols / s[:, None])


def newton_solve(
    spec: WeightSpec,
    mesh: RadialMesh,
    *,
    rho: float | None = None,
    lam: float | None = None,
    initial: np.ndarray | None = None,
    tol: float = 1e-11,
    max_iter: int = 50,
) -> SolutionPoint:
    """Solve the discrete problem at fixed rho, or at fixed lambda with rho
    as the extra unknown closed by u~(0) = lambda (fold-robust mode).

    Residuals are measured componentwise against the row magnitude, so the
    convergence criterion is a backward-relative one; convergence also
    requires the final Newton update to be sqrt(tol)-small, which guards
    the ill-conditioned fixed-rho solves near the mass asymptote.  Raw
    residual fields are available through ``residual``.
    """
    if (rho is None) == (lam is None):
        raise ParameterDomainError("fix exactly one of rho or lam")
    beta = 1.0 + spec.alpha
    hstar = np.asarray(spec.hstar(mesh.r))
    lap = mesh.lap_rows(1.0)
    bw = mesh.bandwidth
    n = mesh.n

    if rho is not None and rho == 0.0:
        return SolutionPoint(spec, mesh, np.zeros(n), 0.0, 0.0, 0)

    if initial is None:
        if lam is not None:
            u = blowup_initial_guess(lam, spec, mesh)
        else:
            u = np.zeros(n)
    else:
        u = np.array(initial, dtype=float)
        if u.shape != (n,) or not np.all(np.isfinite(u)):
            raise ParameterDomainError("initial guess must be finite on the mesh")
    u[-1] = 0.0
    rho_cur = float(rho) if rho is not None else EIGHT_PI * beta

    e0 = mesh.point_rows(0.0, 0)[0] if lam is not None else None

    def full_residual(u_, rho_):
        G, d, mw, scale, log_mass = _scaled_parts(u_, rho_, spec, mesh, lap, hstar)
        rn = _norm_rows(G, scale, u_[-1])
        if lam is not None:
            C = float(e0 @ u_) - log_mass - lam
            rn = max(rn, abs(C) / (1.0 + abs(lam)))
        else:
            C = 0.0
        return G, d, mw, rn, C

    G, d, mw, rn, C = full_residual(u, rho_cur)
    trace = [rn]
    iters = 0
    # a small residual alone is not enough near the mass asymptote: the
    # fixed-rho Jacobian is nearly singular along the family direction and
    # hides O(sqrt(tol)) errors behind an O(tol) residual, so convergence
    # also requires the last Newton update to be small
    step_norm = np.inf
    for _ in range(max_iter):
        if rn <= tol and step_norm <= np.sqrt(tol) * (1.0 + np.max(np.abs(u))):
            break
        A = lap + np.diag(d)
        A[-1] = 0.0
        A[-1, -1] = 1.0
        dcol = d.copy()
        dcol[-1] = 0.0
        rhs = -G
        rhs[-1] = -u[-1]
        if lam is None:
            sol = _banded_solve(A, np.column_stack([rhs, dcol]), bw)
            x, y = sol[:, 0], sol[:, 1]
            denom = 1.0 - float(mw @ y)
            if abs(denom) < 1e-12 or not np.all(np.isfinite(sol)):
                raise SolverError(
                    "Jacobian is singular at fixed rho (possible fold); "
                    "use the lambda-parameterized solve instead",
                    trace,
                )
            du = x + y * (float(mw @ x) / denom)
            drho = 0.0
        else:
            b = d / rho_cur
            b[-1] = 0.0
            sol = _banded_solve(A, np.column_stack([rhs, b, dcol]), bw)
            xg, xb, y = sol[:, 0], sol[:, 1], sol[:, 2]
            denom = 1.0 - float(mw @ y)
            if abs(denom) < 1e-12 or not np.all(np.isfinite(sol)):
                raise SolverError("singular Jacobian in lambda mode", trace)
            x1 = xg + y * (float(mw @ xg) / denom)
            x2 = xb + y * (float(mw @ xb) / denom)
            c = e0 - mw
            c_x2 = float(c @ x2)
            if c_x2 == 0.0:
                raise SolverError("degenerate lambda constraint", trace)
            drho = (C + float(c @ x1)) / c_x2
            du = x1 - drho * x2

        step = 1.0
        accepted = False
        for _ in range(40):
            u_try = u + step * du
            rho_try = rho_cur + step * drho
            if rho_try > 0.0 and np.all(np.isfinite(u_try)):
                try:
                    G_t, d_t, mw_t, rn_t, C_t = full_residual(u_try, rho_try)
                except (SolverError, FloatingPointError):
                    rn_t = np.inf
                if rn_t <= tol or rn_t <= (1.0 - 0.25 * step) * rn:
                    u, rho_cur = u_try, rho_try
                    G, d, mw, rn, C = G_t, d_t, mw_t, rn_t, C_t
                    step_norm = step * max(float(np.max(np.abs(du))), abs(drho))
                    accepted = True
                    break
            step *= 0.5
        iters += 1
        trace.append(rn)
        if not accepted:
            raise SolverError(
                f"line search stalled at residual {rn:.3e}"
                + (" (possible fold); use the lambda-parameterized solve" if lam is None else ""),
                trace,
            )
    else:
        raise SolverError(f"no convergence in {max_iter} iterations", trace)

    return SolutionPoint(spec, mesh, u, rho_cur, rn, iters)


# closed-form family and initial data --------------------------------------


def exact_disk_family(
    alpha: float,
    m: float,
    mesh: RadialMesh | None = None,
    spec: WeightSpec | None = None,
) -> SolutionPoint:
    """The analytic branch for constant hstar:

        u(r) = 2 log((1+m)/(1+m r^(2 beta))),
        rho(m) = 8 pi beta m/(1+m),  lambda(m) = log(beta (1+m)/pi).

    Exact for any positive constant factor (it cancels in the mass ratio).
    """
    if spec is None:
        spec = WeightSpec(alpha=alpha)
    if spec.kind != "constant":
        raise NotApplicableError("the closed-form family needs constant hstar")
    if spec.alpha != alpha:
        raise ParameterDomainError("spec.alpha disagrees with alpha")
    if not m > 0.0:
        raise ParameterDomainError("the family parameter m must be positive")
    beta = 1.0 + alpha
    lam = np.log(beta * (1.0 + m) / np.pi)
    if mesh is None:
        mesh = MeshPolicy().build(beta, lam)
    u = 2.0 * (np.log1p(m) - np.log1p(m * mesh.t**2))
    rho = EIGHT_PI * beta * m / (1.0 + m)
    lap = mesh.lap_rows(1.0)
    hstar = np.asarray(spec.hstar(mesh.r))
    G, _, _, scale, _ = _scaled_parts(u, rho, spec, mesh, lap, hstar)
    return SolutionPoint(spec, mesh, u, rho, _norm_rows(G, scale, u[-1]), 0)


def approximate_profile(lam: float, spec: WeightSpec, r):
    """The inner bubble ansatz at height lambda on the normalized scale:

        U(r) = lambda - 2 log(1 + gamma e^lambda r^(2 beta)),

    with gamma evaluated at the limit mass rho = 8 pi beta.  U(0) = lambda
    and U decreases strictly in r.
    """
    beta = 1.0 + spec.alpha
    gamma = np.pi * float(spec.hstar(0.0)) / beta
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.log(gamma) + lam + 2.0 * beta * np.log(r)
    out = lam - 2.0 * np.logaddexp(0.0, x)
    return out if out.ndim else float(out)


def blowup_initial_guess(
    lam: float, spec: WeightSpec, mesh: RadialMesh, blend_radius: float = 0.25
) -> np.ndarray:
    """Newton initial data: the bubble ansatz raised to the raw scale and
    blended into the Green-function far field over [r0, 2 r0]."""
    beta = 1.0 + spec.alpha
    gamma = np.pi * float(spec.hstar(0.0)) / beta
    r = mesh.r
    inner = approximate_profile(lam, spec, r) + lam + 2.0 * np.log(gamma)
    outer = -4.0 * beta * np.log(r)
    s = np.clip((r - blend_radius) / blend_radius, 0.0, 1.0)
    w = 1.0 - s * s * (3.0 - 2.0 * s)
    u = w * inner + (1.0 - w) * outer
    u[-1] = 0.0
    return u


# continuation --------------------------------------------------------------


def _warm_guess(prev: SolutionPoint | None, lam: float, spec, mesh) -> np.ndarray:
    if prev is None or lam >= 4.0:
        return blowup_initial_guess(lam, spec, mesh)
    u = np.interp(mesh.t, prev.mesh.t, prev.u)
    u[-1] = 0.0
    return u


def continue_branch(
    lambda_start: float,
    lambda_end: float,
    steps: int,
    spec: WeightSpec,
    mesh_policy: MeshPolicy = MeshPolicy(),
) -> Branch:
    """March the branch over a uniform lambda grid (inclusive endpoints).

    Failing targets are bridged by bisecting sub-steps down to MIN_STEP;
    if that floor is hit, the partial branch is returned with failure
    diagnostics instead of raising.
    """
    if steps < 1:
        raise ParameterDomainError("steps must be at least 1")
    if lambda_end < lambda_start:
        raise ParameterDomainError("lambda_end must not precede lambda_start")
    beta = 1.0 + spec.alpha
    if lambda_end == lambda_start:
        targets = np.array([lambda_start])
    else:
        targets = np.linspace(lambda_start, lambda_end, steps)

    points: list[SolutionPoint] = []
    failure = None
    state: SolutionPoint | None = None
    for target in targets:
        try:
            state = _advance(state, float(target), spec, mesh_policy, beta)
        except SolverError as err:
            failure = {
                "lambda_target": float(target),
                "reason": str(err),
                "trace": list(getattr(err, "trace", [])),
            }
            break
        points.append(state)

    rhos = np.array([p.rho for p in points])
    signs = np.sign(np.diff(rhos))
    flips = [i for i in range(1, len(signs)) if signs[i] != 0 and signs[i - 1] != 0 and signs[i] != signs[i - 1]]
    return Branch(spec, tuple(points), tuple(flips), failure)


def _advance(state, target, spec, policy, beta) -> SolutionPoint:
    pending = [target]
    current = state
    while pending:
        lam_next = pending[-1]
        mesh = policy.build(beta, lam_next)
        try:
            pt = newton_solve(
                spec, mesh, lam=lam_next, initial=_warm_guess(current, lam_next, spec, mesh)
            )
        except SolverError:
            base = current.lam if current is not None else lam_next - 1.0
            if lam_next - base <= MIN_STEP:
                raise
            pending.append(0.5 * (base + lam_next))
            continue
        pending.pop()
        current = pt
    return current


def find_fold_pair(
    branch: Branch,
    mesh_policy: MeshPolicy = MeshPolicy(),
    which: int = 0,
):
    """Two solutions sharing one rho across a fold, on a common mesh.

    Root-finds rho(lambda) = rho_target on both sides of the flagged fold;
    the returned pair matches in rho to ~1e-12 relative, which is what the
    pairwise boundary-bulk identity checks require.
    """
    if not branch.fold_flags:
        raise NotApplicableError("branch carries no fold flags")
    k = branch.fold_flags[which]
    spec = branch.spec
    beta = 1.0 + spec.alpha
    lams, rhos = branch.lambdas, branch.rhos
    if not 0 < k < len(lams) - 1:
        raise NotApplicableError("fold flag sits at the branch edge")
    # one shared mesh, resolved for the larger lambda side
    mesh = mesh_policy.build(beta, float(lams[k + 1]))
    rho_target = 0.5 * (float(rhos[k]) + max(float(rhos[k - 1]), float(rhos[k + 1])))

    cache: dict[float, SolutionPoint] = {}

    def rho_at(lam: float) -> float:
        pt = newton_solve(spec, mesh, lam=lam)
        cache[lam] = pt
        return pt.rho - rho_target

    la = brentq(rho_at, float(lams[k - 1]), float(lams[k]), xtol=1e-13)
    lb = brentq(rho_at, float(lams[k]), float(lams[k + 1]), xtol=1e-13)
    pa = cache.get(la) or newton_solve(spec, mesh, lam=la)
    pb = cache.get(lb) or newton_solve(spec, mesh, lam=lb)
    if abs(pa.rho - pb.rho) > 1e-9 * abs(rho_target):
        raise SolverError(
            f"fold pair rho mismatch {abs(pa.rho - pb.rho):.3e}"
        )
    return pa, pb
