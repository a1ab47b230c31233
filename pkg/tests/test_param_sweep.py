import numpy as np
import pytest

from groundflow import (
    AdmissibilityError,
    ConvergenceError,
    ParamFamily,
    ScalarField,
    make_circle_grid,
    smoothness_diagnostic,
    spectrum_oracle,
    sweep_attractor,
    sweep_ground_state,
    sweep_to_csv,
)
from groundflow.heatflow import build_problem, evolve_to_attractor


def cosine_family(n=64, q_start=0.0, q_stop=2.0, count=21):
    g = make_circle_grid(2 * np.pi, n)
    return ParamFamily(
        grid=g,
        q_axes=(np.linspace(q_start, q_stop, count),),
        beta_of_q=lambda q: ScalarField.from_function(g, lambda x: q * np.cos(x)),
        psi1_of_q=lambda q: ScalarField.constant(g, 1.0),
        psi2_of_q=lambda q: ScalarField.constant(g, 0.0),
    )


def corollary_family(n=64, count=11, q_stop=0.5):
    g = make_circle_grid(2 * np.pi, n)
    return ParamFamily(
        grid=g,
        q_axes=(np.linspace(0.0, q_stop, count),),
        beta_of_q=lambda q: ScalarField.constant(g, -1.0),
        psi1_of_q=lambda q: ScalarField.from_function(
            g, lambda x: 2.0 + q * np.sin(x)
        ),
        psi2_of_q=lambda q: ScalarField.constant(g, 0.0),
    )


def test_family_validation():
    g = make_circle_grid(1.0, 8)
    const = lambda q: ScalarField.constant(g, 1.0)
    with pytest.raises(ValueError):
        ParamFamily(g, (np.array([0.0, 0.1, 0.3]),), const, const, const)
    with pytest.raises(ValueError):
        ParamFamily(g, (np.array([0.3, 0.2, 0.1]),), const, const, const)
    with pytest.raises(ValueError):
        ParamFamily(
            g,
            (np.linspace(0, 1, 3),) * 3,
            const,
            const,
            const,
        )


def test_constant_potential_family_is_linear_in_q():
    g = make_circle_grid(2 * np.pi, 32)
    fam = ParamFamily(
        grid=g,
        q_axes=(np.linspace(-1.0, 1.0, 9),),
        beta_of_q=lambda q: ScalarField.constant(g, q),
        psi1_of_q=lambda q: ScalarField.constant(g, 1.0),
        psi2_of_q=lambda q: ScalarField.constant(g, 0.0),
    )
    res = sweep_ground_state(fam)
    assert np.max(np.abs(res.lambda0 + res.q_points[:, 0])) < 1e-12
    e0_stack = np.stack([f.values for f in res.e0])
    assert np.max(np.abs(e0_stack - e0_stack[0])) < 1e-12
    assert np.max(np.abs(res.first_differences[0] + 1.0)) < 1e-10
    assert np.max(np.abs(res.second_differences[0])) < 1e-8
    rep = smoothness_diagnostic(res, order=2)
    assert rep.passed
    assert rep.axes[0].ratio is None  # exactly linear: degenerate quotients


def test_cosine_family_matches_dense_oracle_per_q():
    fam = cosine_family(n=64, count=9)
    res = sweep_ground_state(fam)
    for i, q in enumerate(res.q_points[:, 0]):
        beta = fam.beta_of_q(q)
        dense = spectrum_oracle(fam.grid, beta, 2)
        assert abs(res.lambda0[i] - dense[0]) < 1e-10
        assert abs(res.gap[i] - (dense[1] - dense[0])) < 1e-7
    assert abs(res.lambda0[0]) < 1e-12
    assert np.all(res.lambda0 <= 1e-12)
    assert res.gap.min() > 0.5
    # enclosure band holds uniformly in q: beta ranges over [-q, q]
    qs = res.q_points[:, 0]
    assert np.all(res.lambda0 >= -qs - 1e-9)
    assert np.all(res.lambda0 <= qs + 1e-9)


def test_cosine_family_smoothness():
    res = sweep_ground_state(cosine_family(n=64, count=41))
    rep2 = smoothness_diagnostic(res, order=2)
    assert rep2.passed
    assert 3.2 <= rep2.axes[0].ratio <= 4.8
    rep1 = smoothness_diagnostic(res, order=1)
    assert rep1.passed
    assert rep1.e0_lipschitz[0] < 1.0


def test_e0_lipschitz_stable_under_refinement():
    coarse = sweep_ground_state(cosine_family(n=64, count=21))
    fine = sweep_ground_state(cosine_family(n=64, count=41))
    lip_c = smoothness_diagnostic(coarse, order=1).e0_lipschitz[0]
    lip_f = smoothness_diagnostic(fine, order=1).e0_lipschitz[0]
    assert lip_f < 2.0 * lip_c + 1e-9


def test_smoothness_needs_enough_points():
    res = sweep_ground_state(cosine_family(n=32, count=5))
    with pytest.raises(ValueError):
        smoothness_diagnostic(res, order=2)


def test_two_axis_family():
    g = make_circle_grid(2 * np.pi, 32)
    fam = ParamFamily(
        grid=g,
        q_axes=(np.linspace(0.0, 1.0, 17), np.linspace(0.0, 0.5, 17)),
        beta_of_q=lambda q: ScalarField.from_function(
            g, lambda x: q[0] * np.cos(x) + q[1] * np.sin(x)
        ),
        psi1_of_q=lambda q: ScalarField.constant(g, 1.0),
        psi2_of_q=lambda q: ScalarField.constant(g, 0.0),
    )
    res = sweep_ground_state(fam)
    assert res.q_points.shape == (289, 2)
    rep = smoothness_diagnostic(res, order=2)
    assert rep.passed and len(rep.axes) == 2


def test_attractor_sweep_constant_family_q_independent():
    g = make_circle_grid(2 * np.pi, 48)
    fam = ParamFamily(
        grid=g,
        q_axes=(np.linspace(0.0, 1.0, 5),),
        beta_of_q=lambda q: ScalarField.constant(g, -0.1),
        psi1_of_q=lambda q: ScalarField.constant(g, 1.0),
        psi2_of_q=lambda q: ScalarField.constant(g, 1.0),
    )
    res = sweep_attractor(fam, tol=1e-9)
    stack = np.stack([f.values for f in res.u_star])
    assert np.max(np.abs(stack - stack[0])) < 1e-8
    assert res.lipschitz[0] < 1e-7


def test_attractor_sweep_corollary_family_sandwich_per_q():
    fam = corollary_family(n=64, count=11)
    res = sweep_attractor(fam, tol=1e-9)
    for i, q in enumerate(res.q_points[:, 0]):
        vals = res.u_star[i].values
        assert vals.min() >= np.sqrt(2.0 - q) - 1e-6
        assert vals.max() <= np.sqrt(2.0 + q) + 1e-6
    assert res.lipschitz[0] < 1.0


def test_attractor_sweep_lipschitz_converges():
    coarse = sweep_attractor(corollary_family(n=48, count=6), tol=1e-9)
    fine = sweep_attractor(corollary_family(n=48, count=11), tol=1e-9)
    assert fine.lipschitz[0] < 1.5 * coarse.lipschitz[0] + 1e-9


def test_warm_start_equals_cold_start():
    fam = corollary_family(n=48, count=6)
    tol = 1e-9
    res = sweep_attractor(fam, tol=tol)
    # cold-start the final parameter point independently
    q_last = res.q_points[-1][0]
    p = build_problem(
        fam.grid,
        fam.beta_of_q(q_last),
        fam.psi1_of_q(q_last),
        fam.psi2_of_q(q_last),
        tol=tol,
    )
    mid = 0.5 * (p.profile_minus.y1 + p.profile_plus.y1)
    cold0 = ScalarField(fam.grid, mid * p.e0.values)
    cold, _ = evolve_to_attractor(cold0, p, tol=tol)
    assert np.max(np.abs(cold.values - res.u_star[-1].values)) <= 10.0 * tol


def test_admissibility_failure_reports_first_q():
    g = make_circle_grid(1.0, 16)
    fam = ParamFamily(
        grid=g,
        q_axes=(np.linspace(0.1, 0.5, 5),),
        beta_of_q=lambda q: ScalarField.constant(g, -q),
        psi1_of_q=lambda q: ScalarField.constant(g, 1.0),
        psi2_of_q=lambda q: ScalarField.constant(g, 1.0),
    )
    # admissible needs q < 0.25: first offending point is q = 0.3
    with pytest.raises(AdmissibilityError) as err:
        sweep_attractor(fam)
    assert "0.3" in str(err.value)


def test_gap_floor_aborts_sweep():
    g = make_circle_grid(10_000.0, 8)
    fam = ParamFamily(
        grid=g,
        q_axes=(np.linspace(0.0, 1.0, 3),),
        beta_of_q=lambda q: ScalarField.constant(g, q),
        psi1_of_q=lambda q: ScalarField.constant(g, 1.0),
        psi2_of_q=lambda q: ScalarField.constant(g, 0.0),
    )
    with pytest.raises(ConvergenceError) as err:
        sweep_ground_state(fam)
    assert "gap" in str(err.value)


def test_sweep_csv(tmp_path):
    res = sweep_attractor(corollary_family(n=32, count=5), tol=1e-8)
    path = tmp_path / "sweep.csv"
    sweep_to_csv(res, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "q1,lambda0,gap,min_ratio,max_ratio"
    assert len(lines) == 6
    row = lines[1].split(",")
    assert len(row) == 5
    assert float(row[1]) == pytest.approx(1.0, abs=1e-10)

    gs_only = sweep_ground_state(corollary_family(n=32, count=5))
    with pytest.raises(ValueError):
        sweep_to_csv(gs_only, tmp_path / "nope.csv")
