import numpy as np
import pytest

from groundflow import (
    AdmissibilityError,
    BlowdownError,
    ExtremaCoeffs,
    ScalarField,
    check_admissible,
    classify_fixed_points,
    critical_root_y3,
    curvature_problem_inputs,
    decay_rate_mu,
    extrema_coeffs,
    make_circle_grid,
    make_profile,
    phi,
    phi_prime,
    phi_roots,
    profile_from_coeffs,
    scalar_flow,
)

from oracles import quartic_positive_roots, scalar_ode_reference

# frozen from the bracketed-bisection quartic oracle at lambda0=0.1, A=B=1
Y1_REF = 2.978755335069904
Y2_REF = 1.061610405842267
Y3_REF = 1.5544125858650473
PHI_PRIME_Y1_REF = -0.17459666924148337


def fig3_profile():
    return make_profile(0.1, 1.0, 1.0)


# ---------------------------------------------------------------- extrema


def test_extrema_constants():
    g = make_circle_grid(1.0, 16)
    ones = ScalarField.constant(g, 1.0)
    c = extrema_coeffs(ones, ones, ones)
    assert c == ExtremaCoeffs(1.0, 1.0, 1.0, 1.0)


def test_extrema_of_sine_band():
    g = make_circle_grid(2 * np.pi, 128)
    psi1 = ScalarField.from_function(g, lambda x: 2.0 + np.sin(x))
    psi2 = ScalarField.constant(g, 0.0)
    e0 = ScalarField.constant(g, 1.0)
    c = extrema_coeffs(psi1, psi2, e0)
    # grid contains the exact extrema of sin on a 2pi circle with N % 4 == 0
    assert abs(c.psi1_plus - 3.0) < 1e-12
    assert abs(c.psi1_minus - 1.0) < 1e-12
    assert c.psi2_plus == 0.0 and c.psi2_minus == 0.0


def test_extrema_homogeneity_in_e0():
    rng = np.random.RandomState(11)
    g = make_circle_grid(2 * np.pi, 64)
    psi1 = ScalarField(g, 1.0 + rng.uniform(0.1, 1.0, g.total_points))
    psi2 = ScalarField(g, rng.uniform(0.0, 1.0, g.total_points))
    e0 = ScalarField(g, rng.uniform(0.5, 2.0, g.total_points))
    base = extrema_coeffs(psi1, psi2, e0)
    scaled = extrema_coeffs(psi1, psi2, ScalarField(g, 2.0 * e0.values))
    assert np.isclose(scaled.psi1_plus, base.psi1_plus / 4.0, rtol=1e-13)
    assert np.isclose(scaled.psi1_minus, base.psi1_minus / 4.0, rtol=1e-13)
    assert np.isclose(scaled.psi2_plus, base.psi2_plus / 16.0, rtol=1e-13)
    assert np.isclose(scaled.psi2_minus, base.psi2_minus / 16.0, rtol=1e-13)


def test_extrema_rejects_bad_signs():
    g = make_circle_grid(1.0, 8)
    good = ScalarField.constant(g, 1.0)
    bad = ScalarField.constant(g, 0.0)
    with pytest.raises(ValueError):
        extrema_coeffs(bad, good, good)
    with pytest.raises(ValueError):
        extrema_coeffs(good, good, bad)


# ---------------------------------------------------------------- profile


def test_phi_direct_substitution():
    p = fig3_profile()
    assert abs(phi(1.0, p) - (-0.1)) < 1e-15
    assert abs(phi(2.0, p) - 0.175) < 1e-15  # -0.2 + 0.5 - 0.125
    assert abs(phi(p.y1, p)) < 1e-14
    assert abs(phi(p.y2, p)) < 1e-14
    with pytest.raises(ValueError):
        phi(0.0, p)


def test_fig3_roots_match_oracle():
    roots = quartic_positive_roots(0.1, 1.0, 1.0)
    assert len(roots) == 2
    y1, y2 = phi_roots(0.1, 1.0, 1.0)
    assert abs(y1 - roots[1]) <= 1e-12 * roots[1]
    assert abs(y2 - roots[0]) <= 1e-12 * roots[0]
    assert abs(y1 - Y1_REF) <= 1e-12 * Y1_REF
    assert abs(y2 - Y2_REF) <= 1e-12 * Y2_REF


def test_monotone_case_root():
    y1, y2 = phi_roots(1.0, 4.0, 0.0)
    assert y1 == 2.0
    assert y2 is None
    p = make_profile(1.0, 4.0, 0.0)
    assert abs(phi(2.0, p)) < 1e-15
    assert p.y3 is None and p.y4 is None


def test_discriminant_boundary_rejected():
    with pytest.raises(AdmissibilityError) as err:
        phi_roots(0.25, 1.0, 1.0)
    assert err.value.margin == 0.0


def test_near_degenerate_roots_stay_accurate():
    # discriminant ~ 1e-10 * A^2 exercises the bisection polish
    lam, A = 0.1, 1.0
    B = (A * A - 1e-10 * A * A) / (4.0 * lam)
    y1, y2 = phi_roots(lam, A, B)
    roots = quartic_positive_roots(lam, A, B)
    assert abs(y1 - roots[1]) <= 1e-10 * roots[1]
    assert abs(y2 - roots[0]) <= 1e-10 * roots[0]


def test_random_admissible_roots_against_oracle():
    rng = np.random.RandomState(12)
    for _ in range(25):
        lam = rng.uniform(0.02, 2.0)
        A = rng.uniform(0.2, 5.0)
        B = rng.uniform(0.0, 0.9) * A * A / (4.0 * lam)
        if B == 0.0:
            continue
        y1, y2 = phi_roots(lam, A, B)
        lo, hi = quartic_positive_roots(lam, A, B)
        assert abs(y1 - hi) <= 1e-12 * hi
        assert abs(y2 - lo) <= 1e-12 * max(lo, 1e-30)


def test_critical_root():
    y3 = critical_root_y3(0.1, 1.0, 1.0)
    assert abs(y3 - Y3_REF) <= 1e-12 * Y3_REF
    p = fig3_profile()
    assert abs(phi_prime(y3, p)) < 1e-10
    assert p.y2 < y3 < p.y1
    assert p.y4 == np.sqrt(6.0)
    assert y3 < p.y4
    assert critical_root_y3(1.0, 4.0, 0.0) is None


def test_profile_ordering_random():
    rng = np.random.RandomState(13)
    for _ in range(40):
        lam = rng.uniform(0.02, 1.5)
        A = rng.uniform(0.2, 5.0)
        B = rng.uniform(0.05, 0.9) * A * A / (4.0 * lam)
        p = make_profile(lam, A, B)
        assert 0.0 < p.y2 < p.y3 < p.y1
        assert p.y3 < p.y4


def test_side_profiles_and_monotonicity():
    coeffs = ExtremaCoeffs(
        psi1_plus=1.3, psi1_minus=0.7, psi2_plus=1.1, psi2_minus=0.9
    )
    lam = 0.05
    minus = profile_from_coeffs(lam, coeffs, "minus")
    plus = profile_from_coeffs(lam, coeffs, "plus")
    assert (minus.A, minus.B) == (0.7, 1.1)
    assert (plus.A, plus.B) == (1.3, 0.9)
    ys = np.geomspace(0.05, 50.0, 4000)
    assert np.all(phi(ys, minus) <= phi(ys, plus) + 1e-14)
    assert minus.y1 <= plus.y1
    with pytest.raises(ValueError):
        profile_from_coeffs(lam, coeffs, "upper")


def test_phi_minus_shape():
    p = fig3_profile()
    ys = np.linspace(1e-3, 4 * p.y1, 30_000)
    vals = phi(ys, p)
    rising = ys <= p.y3 - 1e-9
    falling = ys >= p.y3 + 1e-9
    assert np.all(np.diff(vals[rising]) > 0.0)
    assert np.all(np.diff(vals[falling]) < 0.0)
    inside = (ys > p.y2 + 1e-9) & (ys < p.y1 - 1e-9)
    outside = (ys < p.y2 - 1e-9) | (ys > p.y1 + 1e-9)
    assert np.all(vals[inside] > 0.0)
    assert np.all(vals[outside] < 0.0)


# ---------------------------------------------------------------- decay rate


def test_decay_rate_fig3():
    p = fig3_profile()
    assert abs(phi_prime(p.y1, p) - PHI_PRIME_Y1_REF) < 1e-12
    assert decay_rate_mu(0.0, p) == 0.1


def test_decay_rate_decreases_to_zero():
    p = fig3_profile()
    width = p.y1 - p.y3
    sigmas = np.linspace(0.0, width * (1 - 1e-6), 40)
    mus = [decay_rate_mu(s, p) for s in sigmas]
    assert all(m > 0.0 for m in mus)
    assert all(a >= b - 1e-12 for a, b in zip(mus, mus[1:]))
    assert mus[-1] < 1e-4


def test_decay_rate_monotone_case():
    p = make_profile(1.0, 4.0, 0.0)
    assert abs(phi_prime(2.0, p) - (-2.0)) < 1e-15
    assert decay_rate_mu(0.0, p) == 1.0


def test_decay_rate_sigma_range():
    p = fig3_profile()
    with pytest.raises(ValueError):
        decay_rate_mu(p.y1 - p.y3, p)
    with pytest.raises(ValueError):
        decay_rate_mu(-0.1, p)


# ---------------------------------------------------------------- admissibility


def test_admissibility_fig3():
    c = ExtremaCoeffs(1.0, 1.0, 1.0, 1.0)
    a = check_admissible(0.1, c)
    assert a.admissible and abs(a.margin - 0.6) < 1e-15
    b = check_admissible(0.25, c)
    assert not b.admissible and b.margin == 0.0
    assert not check_admissible(0.0, c).admissible
    assert not check_admissible(-1.0, c).admissible


def test_admissibility_vanishing_psi2():
    c = ExtremaCoeffs(2.0, 1.0, 0.0, 0.0)
    assert check_admissible(5.0, c).admissible
    assert not check_admissible(0.0, c).admissible


# ---------------------------------------------------------------- scalar flow


def test_flow_converges_from_inside():
    p = fig3_profile()
    traj = scalar_flow(2.0, p, T=200.0, record_every=20)
    assert np.all(np.diff(traj.values) > -1e-13)
    assert abs(traj.terminal - p.y1) < 1e-8


def test_flow_stationary_at_y1():
    p = fig3_profile()
    traj = scalar_flow(p.y1, p, T=10.0)
    assert np.max(np.abs(traj.values - p.y1)) < 1e-12


def test_flow_decreasing_from_above_with_bound():
    p = fig3_profile()
    y0 = p.y1 + 0.5
    traj = scalar_flow(y0, p, T=120.0, record_every=10)
    assert np.all(np.diff(traj.values) < 1e-13)
    mu = decay_rate_mu(0.0, p)
    bound = abs(y0 - p.y1) * np.exp(-mu * traj.times)
    assert np.all(np.abs(traj.values - p.y1) <= bound * (1.0 + 1e-9) + 1e-14)


def test_flow_matches_adaptive_reference():
    p = fig3_profile()
    traj = scalar_flow(2.0, p, T=50.0, dt=0.01, record_every=100)
    ref = scalar_ode_reference(0.1, 1.0, 1.0, 2.0, traj.times)
    assert np.max(np.abs(traj.values - ref)) < 1e-9


def test_flow_rejects_inner_start():
    p = fig3_profile()
    with pytest.raises(BlowdownError):
        scalar_flow(p.y2, p, T=1.0)
    with pytest.raises(BlowdownError):
        scalar_flow(0.5 * p.y2, p, T=1.0)


def test_flow_batch_monotone_convergence():
    # random starts above y2 all reach y1 by T = 50/mu(0)
    rng = np.random.RandomState(14)
    p = fig3_profile()
    mu = decay_rate_mu(0.0, p)
    y0 = rng.uniform(p.y2 + 1e-3, p.y1 + 3.0, size=200)
    traj = scalar_flow(y0, p, T=50.0 / mu, dt=0.01, record_every=200)
    assert np.max(np.abs(traj.terminal - p.y1)) < 1e-6
    below = y0 < p.y1
    diffs = np.diff(traj.values, axis=0)
    assert np.all(diffs[:, below] > -1e-12)
    assert np.all(diffs[:, ~below] < 1e-12)


def test_flow_contraction_bound_on_shrunken_basin():
    p = fig3_profile()
    eps = 0.5 * (p.y1 - p.y3)
    mu = decay_rate_mu(eps, p)
    rng = np.random.RandomState(15)
    y0 = rng.uniform(p.y1 - eps, p.y1 + 2.0, size=50)
    traj = scalar_flow(y0, p, T=80.0, dt=0.01, record_every=25)
    bound = np.abs(y0 - p.y1)[None, :] * np.exp(-mu * traj.times)[:, None]
    assert np.all(np.abs(traj.values - p.y1) <= bound * (1.0 + 1e-9) + 1e-13)


# ---------------------------------------------------------------- fixed points


def test_classification_two_roots():
    pts = classify_fixed_points(-1.0, 2.0, 0.75)
    assert len(pts) == 2
    (r1, s1), (r2, s2) = pts
    assert abs(r1 - np.sqrt(1.5)) < 1e-12
    assert abs(r2 - np.sqrt(0.5)) < 1e-12
    assert s1 == "stable" and s2 == "unstable"


def test_classification_positive_beta():
    pts = classify_fixed_points(1.0, 1.0, 1.0)
    assert len(pts) == 1
    root, stab = pts[0]
    assert abs(root - np.sqrt((-1.0 + np.sqrt(5.0)) / 2.0)) < 1e-12
    assert stab == "unstable"


def test_classification_monotone_case():
    pts = classify_fixed_points(-1.0, 4.0, 0.0)
    assert pts[0][0] == 2.0 and pts[0][1] == "stable"
    assert len(pts) == 1


def test_classification_no_roots():
    assert classify_fixed_points(-1.0, 2.0, 4.0) == []  # 4|b|psi2 > psi1^2
    assert classify_fixed_points(1.0, 1.0, 0.0) == []


# ------------------------------------------------------- geometric reduction


def test_geometric_reduction_identity_and_psi2():
    g = make_circle_grid(1.0, 16)
    h_sq = ScalarField.constant(g, 2.0)
    t_sq = ScalarField.constant(g, 0.0)
    beta_top = ScalarField.from_function(g, lambda x: np.sin(2 * np.pi * x))
    beta, shift, psi1, psi2 = curvature_problem_inputs(h_sq, t_sq, beta_top, 0.0, 2)
    assert np.array_equal(beta.values, beta_top.values)
    assert shift == 0.0
    assert np.all(psi2.values == 0.0)
    assert np.allclose(psi1.values, 1.0)


def test_geometric_reduction_margin_chain():
    # unit-volume circle so the constant ground state is exactly 1
    g = make_circle_grid(1.0, 16)
    n = 2
    c = -0.3  # constant base potential, lambda0_top = 0.3
    lam_top = 0.3
    phi_const = n * lam_top - 0.2 * n
    beta, shift, psi1, psi2 = curvature_problem_inputs(
        ScalarField.constant(g, 2.0),
        ScalarField.constant(g, 2.0),
        ScalarField.constant(g, c),
        phi_const,
        n,
    )
    lam = lam_top + shift
    assert abs(lam - 0.2) < 1e-15
    e0 = ScalarField.constant(g, 1.0)
    coeffs = extrema_coeffs(psi1, psi2, e0)
    result = check_admissible(lam, coeffs)
    assert result.admissible
    assert abs(result.margin - 0.2) < 1e-14


def test_geometric_reduction_rejects_degenerate_h():
    g = make_circle_grid(1.0, 8)
    hsq = ScalarField(g, np.array([1.0] * 7 + [0.0]))
    ok = ScalarField.constant(g, 1.0)
    with pytest.raises(ValueError):
        curvature_problem_inputs(hsq, ok, ok, 0.0, 1)
