"""Ito formula: symbolic synthesis, residual decay, MOI cross-checks."""

import numpy as np
import pytest

from nctrace import ContractionModel, parse
from nctrace.evaluator import EvalContext, eval_multilinear
from nctrace.ito import (
    convergence_study,
    functional_ito_residual,
    ito_residual,
    ito_residual_path,
    ito_rhs_symbolic,
)
from nctrace.matrix_alg import ScalarFunctionSpec, moi
from nctrace.process_sim import (
    RngStream,
    TimeGrid,
    make_fv,
    simulate_hbm,
    simulate_hbm_ensemble,
)
from nctrace.trace_poly import TracePolynomial, derive_k

MATRIX8 = ContractionModel.matrix(8)


def test_rhs_symbolic_square():
    dP, corr = ito_rhs_symbolic(parse("x1^2"), MATRIX8)
    assert dP == parse("y1 x1 + x1 y1")
    assert corr == TracePolynomial.constant(1)


def test_rhs_symbolic_trace_square():
    dP, corr = ito_rhs_symbolic(parse("tr(x1^2)"), MATRIX8)
    assert dP == parse("2 tr(x1 y1)")
    # both slots sit in one trace word, so the split rule gives
    # tr(1) tr(1) = 1 and the correction is exactly 1: d tr_n(X^2) has
    # drift dt
    assert corr == TracePolynomial.constant(1)


def test_rhs_symbolic_constant_and_errors():
    dP, corr = ito_rhs_symbolic(parse("5"), MATRIX8)
    assert dP.is_zero() and corr.is_zero()
    with pytest.raises(ValueError):
        ito_rhs_symbolic(parse("y1"), MATRIX8)
    with pytest.raises(ValueError):
        ito_rhs_symbolic(parse("x1 x2"), MATRIX8)


def test_affine_polynomial_residual_is_zero():
    grid = TimeGrid.uniform(1.0, 64)
    path = simulate_hbm(6, grid, RngStream(51, 0))
    for text in ("x1", "3 x1 + 2", "i x1"):
        rep = ito_residual(parse(text), path, ContractionModel.matrix(6))
        assert rep["sup_norm"] <= 1e-12


def test_residual_square_decreases_with_mesh():
    n = 8
    sups = []
    for steps in (32, 64, 128, 256):
        grid = TimeGrid.uniform(1.0, steps)
        ens = simulate_hbm_ensemble(n, grid, 30, seed=600 + steps)
        rep = ito_residual(parse("x1^2"), ens, ContractionModel.matrix(n))
        sups.append(rep["sup_norm"])
    for a, b in zip(sups, sups[1:]):
        assert b < a
    assert sups[0] / sups[-1] > 2.0


def test_fv_driver_quadratic_mode_hits_noise_floor():
    # a smooth driver obeys the classical chain rule: with the pathwise
    # quadratic second-order term the residual is third order per step
    grid = TimeGrid.from_mesh(1.0, 1e-4)
    n = 4
    A = make_fv(grid, n, generator=lambda t: np.diag(
        [np.sin(t + k) for k in range(n)]).astype(complex))
    res = ito_residual_path(parse("x1^3"), A.values, grid,
                            ContractionModel.matrix(n),
                            second_order="quadratic")
    per = np.max(np.abs(res))
    assert per <= 1e-8


def test_quadratic_vs_contracted_agree_in_the_limit():
    n = 6
    grid = TimeGrid.uniform(1.0, 256)
    ens = simulate_hbm_ensemble(n, grid, 20, seed=71)
    r_q = ito_residual(parse("x1^2"), ens, ContractionModel.matrix(n),
                       second_order="quadratic")
    r_c = ito_residual(parse("x1^2"), ens, ContractionModel.matrix(n),
                       second_order="contracted")
    assert r_q["sup_norm"] < 0.5
    assert r_c["sup_norm"] < 0.5


def test_moi_route_matches_trace_poly_route_per_step():
    # for p = l^3 the MOI first/second terms equal the derivative symbols
    n = 6
    rng = np.random.default_rng(3)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a = (g + g.conj().T) / 2
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    d = 0.1 * (g + g.conj().T) / 2
    p_sym = parse("x1^3")
    f = ScalarFunctionSpec.polynomial([0, 0, 0, 1])
    ctx = EvalContext(n, {1: a})
    first_tp = eval_multilinear(derive_k(p_sym, 1), ctx, [d])
    first_moi = moi(f, 1, (a, a), (d,))
    scale = max(1.0, float(np.max(np.abs(first_tp))))
    assert np.max(np.abs(first_tp - first_moi)) < 1e-10 * scale
    second_tp = 0.5 * eval_multilinear(derive_k(p_sym, 2), ctx, [d, d])
    second_moi = moi(f, 2, (a, a, a), (d, d))
    assert np.max(np.abs(second_tp - second_moi)) < 1e-10 * scale


def test_functional_residual_linear_function_is_zero():
    grid = TimeGrid.uniform(1.0, 32)
    path = simulate_hbm(5, grid, RngStream(81, 0))
    f = ScalarFunctionSpec.polynomial([2.0, 1.0])
    rep = functional_ito_residual(f, path)
    assert rep["sup_norm"] <= 1e-10


def test_functional_residual_cube_matches_trace_poly_route():
    grid = TimeGrid.uniform(1.0, 32)
    path = simulate_hbm(5, grid, RngStream(83, 0))
    f = ScalarFunctionSpec.polynomial([0, 0, 0, 1])
    rep_f = functional_ito_residual(f, path)
    res_tp = ito_residual_path(parse("x1^3"), path.values, path.grid,
                               ContractionModel.matrix(5),
                               second_order="quadratic")
    per_tp = np.array([
        np.sum(np.linalg.svd(res_tp[i], compute_uv=False)) / 5
        for i in range(len(path.grid.times))
    ])
    assert np.max(np.abs(rep_f["per_time"] - per_tp)) < 1e-9


def test_functional_residual_exp_decreases_with_mesh():
    f = ScalarFunctionSpec.exp_sum([(1.0, 1.0)])
    sups = []
    for steps in (16, 32, 64, 128):
        grid = TimeGrid.uniform(1.0, steps)
        path = simulate_hbm(8, grid, RngStream(400 + steps, 0))
        sups.append(functional_ito_residual(f, path)["sup_norm"])
    assert sups[-1] < sups[0]


def test_convergence_study_reports_slope():
    rep = convergence_study(
        "ito_residual", [0.04, 0.02, 0.01],
        {"n": 6, "paths": 20, "seed": 5, "poly": parse("x1^2"),
         "model": ContractionModel.matrix(6)},
    )
    assert rep["check"] == "convergence:ito_residual"
    assert rep["slope"] > 0.2
    assert rep["residuals"][-1] < rep["residuals"][0]
    with pytest.raises(ValueError):
        convergence_study("nope", [0.1, 0.05, 0.025], {})
    with pytest.raises(ValueError):
        convergence_study("ito_residual", [0.1], {})
