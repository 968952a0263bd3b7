"""Solver tests: the closed-form disk family is the oracle throughout."""

import numpy as np
import pytest

from mfelab.errors import NotApplicableError, ParameterDomainError
from mfelab.greens import WeightSpec, ell_coefficient
from mfelab.meshing import RadialMesh
from mfelab.radial_solver import (
    EIGHT_PI,
    Branch,
    MeshPolicy,
    approximate_profile,
    continue_branch,
    exact_disk_family,
    find_fold_pair,
    newton_solve,
    normalize,
    residual,
)

ALPHA = 0.5
BETA = 1.5
CONST = WeightSpec(alpha=ALPHA)
LIMIT = EIGHT_PI * BETA


def family_field(m, t):
    return 2.0 * (np.log1p(m) - np.log1p(m * t**2))


@pytest.fixture(scope="module")
def gauss_branch():
    spec = WeightSpec(alpha=ALPHA, kind="gaussian", coef=0.25)
    return continue_branch(2.0, 12.0, 26, spec)


# residual ------------------------------------------------------------------


def test_residual_zero_field_zero_rho():
    mesh = RadialMesh.graded(128, BETA, 3.0)
    out = residual(np.zeros(128), 0.0, CONST, mesh)
    assert np.all(out == 0.0)


def test_residual_exact_family_is_truncation_sized():
    pt = exact_disk_family(ALPHA, 10.0)
    raw = residual(pt.u, pt.rho, CONST, pt.mesh)
    assert pt.mesh.n == 512
    assert np.max(np.abs(raw)) <= 1e-8


def test_residual_uniform_field_quadrature_oracle():
    # u = 0, rho = 1: residual is h/int h = |x|^(2a) * (2a+2)/(2 pi),
    # i.e. 3 r / (2 pi) at alpha = 1/2
    mesh = RadialMesh.graded(256, BETA, 2.0)
    out = residual(np.zeros(256), 1.0, CONST, mesh)
    oracle = 3.0 * mesh.r / (2.0 * np.pi)
    assert np.max(np.abs(out - oracle) / oracle) <= 1e-10


def test_residual_rejects_nonvanishing_boundary():
    mesh = RadialMesh.graded(128, BETA, 3.0)
    with pytest.raises(ParameterDomainError):
        residual(np.ones(128), 1.0, CONST, mesh)


# exact family ---------------------------------------------------------------


def test_exact_family_scalar_values():
    pt = exact_disk_family(ALPHA, 1.0)
    assert pt.rho == pytest.approx(6.0 * np.pi, rel=1e-14)
    assert pt.lam == pytest.approx(np.log(3.0 / np.pi), abs=1e-9)
    u0 = float(pt.mesh.point_rows(0.0)[0] @ pt.u)
    assert u0 == pytest.approx(2.0 * np.log(2.0), abs=1e-10)

    pt = exact_disk_family(ALPHA, 100.0)
    assert pt.rho == pytest.approx(12.0 * np.pi * 100.0 / 101.0, rel=1e-14)
    assert pt.lam == pytest.approx(np.log(151.5 / np.pi), abs=1e-9)


def test_exact_family_large_m_limit():
    pt = exact_disk_family(ALPHA, 1e8)
    assert abs(pt.rho - LIMIT) <= LIMIT * 1.1e-8


def test_exact_family_needs_constant_weight():
    spec = WeightSpec(alpha=ALPHA, kind="gaussian", coef=0.1)
    with pytest.raises(NotApplicableError):
        exact_disk_family(ALPHA, 1.0, spec=spec)
    with pytest.raises(ParameterDomainError):
        exact_disk_family(ALPHA, 0.0)
    with pytest.raises(ParameterDomainError):
        exact_disk_family(ALPHA, 1.0, spec=WeightSpec(alpha=0.25))


# newton ---------------------------------------------------------------------


def test_newton_accepts_exact_initial():
    pt = exact_disk_family(ALPHA, 10.0)
    sol = newton_solve(CONST, pt.mesh, rho=pt.rho, initial=pt.u)
    assert sol.newton_iters <= 2
    assert np.max(np.abs(sol.u - pt.u)) <= 1e-9


@pytest.mark.parametrize("m", [10.0, 1e4])
def test_newton_cold_start_recovers_family(m):
    ex = exact_disk_family(ALPHA, m)
    lam = float(np.log(BETA * (1.0 + m) / np.pi))
    sol = newton_solve(CONST, ex.mesh, lam=lam)
    assert np.max(np.abs(sol.u - ex.u)) <= 1e-8
    assert abs(sol.rho - ex.rho) <= 1e-10 * ex.rho


def test_newton_small_solution_from_zero():
    mesh = MeshPolicy().build(BETA, 0.0)
    pt = newton_solve(CONST, mesh, rho=1.0)
    assert pt.lam < 1.0
    assert pt.newton_iters <= 10
    assert np.all(pt.u[:-1] > 0.0)
    assert pt.u[-1] == 0.0


def test_newton_gaussian_blowup_matches_rate_law():
    spec = WeightSpec(alpha=ALPHA, kind="gaussian", coef=0.25)
    mesh = MeshPolicy().build(BETA, 8.0)
    pt = newton_solve(spec, mesh, lam=8.0)
    ell = ell_coefficient(ALPHA, spec.hbar1((0.0, 0.0)), spec.lap_log_hstar0())
    predicted = LIMIT + ell * np.exp(-8.0 / BETA)
    assert abs(pt.rho - predicted) <= 0.01 * predicted


def test_newton_parameter_validation():
    mesh = RadialMesh.graded(64, BETA, 2.0)
    with pytest.raises(ParameterDomainError):
        newton_solve(CONST, mesh)
    with pytest.raises(ParameterDomainError):
        newton_solve(CONST, mesh, rho=1.0, lam=1.0)
    with pytest.raises(ParameterDomainError):
        newton_solve(CONST, mesh, rho=1.0, initial=np.full(64, np.nan))


def test_newton_zero_rho_shortcut():
    mesh = RadialMesh.graded(64, BETA, 2.0)
    pt = newton_solve(CONST, mesh, rho=0.0)
    assert np.all(pt.u == 0.0)
    assert pt.rho == 0.0


# mass bookkeeping -----------------------------------------------------------


def test_mass_quadrature_identity():
    pt = exact_disk_family(ALPHA, 100.0)
    # rho h e^(u~) integrates to rho
    assert pt.local_mass(1.0) == pytest.approx(pt.rho, rel=1e-9)
    # closed-form mass fraction of B(0, r0): T^2 (1+m)/(1+m T^2), T = r0^beta
    T2 = 0.5 ** (2.0 * BETA)
    frac = T2 * 101.0 / (1.0 + 100.0 * T2)
    assert pt.local_mass(0.5) == pytest.approx(pt.rho * frac, rel=1e-9)
    with pytest.raises(ParameterDomainError):
        pt.local_mass(0.0)


def test_normalize_constant_shift_invariance():
    from mfelab.radial_solver import SolutionPoint

    pt = exact_disk_family(ALPHA, 10.0)
    shifted = SolutionPoint(CONST, pt.mesh, pt.u + 3.7, pt.rho, pt.res_norm, 0)
    ut_a, lam_a, _, _ = normalize(pt)
    ut_b, lam_b, _, _ = normalize(shifted)
    assert np.max(np.abs(ut_a - ut_b)) <= 1e-12
    assert abs(lam_a - lam_b) <= 1e-12


def test_normalize_sigma_lambda_relation():
    mesh = MeshPolicy().build(BETA, 3.0)
    pt = newton_solve(CONST, mesh, lam=3.0)
    _, lam, gamma, sigma = normalize(pt)
    assert lam == pytest.approx(3.0, abs=1e-10)
    assert sigma == pytest.approx(np.exp(-1.0), rel=1e-10)
    assert gamma == pytest.approx(pt.rho / (8.0 * BETA**2), rel=1e-14)


# mesh convergence -----------------------------------------------------------


def test_solve_error_decays_at_design_order():
    m = 1000.0
    rho = LIMIT * m / (1.0 + m)
    ns = [96, 144, 216, 324]
    errs = []
    for n in ns:
        mesh = RadialMesh.graded(n, BETA, 5.0)
        exact = family_field(m, mesh.t)
        sol = newton_solve(CONST, mesh, rho=rho, initial=exact, tol=1e-14)
        err = sol.u - exact
        errs.append(float(np.sqrt(mesh.quad @ err**2)))
    slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert 5.5 <= slope <= 6.5


# profile and continuation ----------------------------------------------------


def test_approximate_profile_shape():
    r = np.linspace(0.01, 1.0, 200)
    U = approximate_profile(5.0, CONST, r)
    assert approximate_profile(5.0, CONST, 0.0) == pytest.approx(5.0)
    assert np.all(np.diff(U) < 0.0)


def test_approximate_profile_tracks_normalized_family():
    pt = exact_disk_family(ALPHA, 100.0)
    ut, lam, _, _ = normalize(pt)
    sel = pt.mesh.r < 0.25
    U = approximate_profile(lam, CONST, pt.mesh.r[sel])
    assert np.max(np.abs(ut[sel] - U)) <= 3.0


def test_branch_constant_weight_matches_family_law():
    br = continue_branch(0.0, 6.0, 60, CONST)
    assert br.failure is None
    assert len(br.points) == 60
    assert np.all(np.diff(br.rhos) > 0.0)
    assert br.fold_flags == ()
    for p in br.points:
        m = np.pi * np.exp(p.lam) / BETA - 1.0
        assert abs(p.rho - LIMIT * m / (1.0 + m)) <= 1e-6
        assert p.res_norm <= 1e-10


def test_branch_single_point():
    br = continue_branch(2.0, 2.0, 5, CONST)
    assert len(br.points) == 1
    assert br.points[0].lam == pytest.approx(2.0, abs=1e-10)


def test_branch_range_validation():
    with pytest.raises(ParameterDomainError):
        continue_branch(3.0, 2.0, 5, CONST)
    with pytest.raises(ParameterDomainError):
        continue_branch(0.0, 1.0, 0, CONST)


def test_branch_positive_ell_crosses_limit_and_folds(gauss_branch):
    br = gauss_branch
    assert br.failure is None
    assert len(br.points) == 26
    assert br.fold_flags != ()
    assert np.max(br.rhos) > LIMIT
    tail = br.lambdas >= 8.0
    assert np.all(br.rhos[tail] > LIMIT)
    assert np.all(np.diff(br.rhos)[tail[1:]] < 0.0)


def test_branch_negative_ell_stays_below_limit():
    spec = WeightSpec(alpha=ALPHA, kind="gaussian", coef=-0.25)
    br = continue_branch(6.0, 12.0, 13, spec)
    assert br.failure is None
    tail = br.lambdas >= 8.0
    assert np.all(br.rhos[tail] < LIMIT)
    assert np.all(np.diff(br.rhos)[tail[1:]] > 0.0)


def test_fold_pair_shares_rho(gauss_branch):
    pa, pb = find_fold_pair(gauss_branch)
    assert pa.lam < pb.lam
    assert abs(pa.rho - pb.rho) <= 1e-10 * pa.rho
    assert pa.mesh is pb.mesh
    no_fold = Branch(CONST, gauss_branch.points, ())
    with pytest.raises(NotApplicableError):
        find_fold_pair(no_fold)


def test_mesh_policy_validation():
    with pytest.raises(ParameterDomainError):
        MeshPolicy(n=32)
    with pytest.raises(ParameterDomainError):
        MeshPolicy(grading="spline")
    mesh = MeshPolicy(n=64, grading="fixed", strength=3.0).build(BETA, 10.0)
    assert mesh.n == 64
