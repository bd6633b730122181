"""Process simulation: normalization, law agreement, stopping, file IO."""

import math

import numpy as np
import pytest

from nctrace.matrix_alg import adjoint, trace_n
from nctrace.process_sim import (
    Ensemble,
    ProcessPath,
    RngStream,
    TimeGrid,
    kappa_estimate,
    load_ncp1,
    make_fv,
    save_ncp1,
    simulate_hbm,
    simulate_hbm_ensemble,
    stop,
    variation,
)


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.2, 0.2]))
    g = TimeGrid.uniform(1.0, 4)
    assert g.mesh == pytest.approx(0.25)
    assert g.steps == 4
    assert g.index_of(0.5) == 2
    with pytest.raises(ValueError):
        g.index_of(0.3)


def test_hbm_starts_at_zero_and_is_hermitian():
    grid = TimeGrid.uniform(1.0, 16)
    path = simulate_hbm(4, grid, RngStream(3, 0))
    assert np.all(path.values[0] == 0)
    assert np.max(np.abs(path.values - adjoint(path.values))) < 1e-12
    assert path.role == "martingale"


def test_hbm_reproducible_and_streams_independent():
    grid = TimeGrid.uniform(1.0, 8)
    a = simulate_hbm(3, grid, RngStream(11, 5))
    b = simulate_hbm(3, grid, RngStream(11, 5))
    c = simulate_hbm(3, grid, RngStream(11, 6))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_hbm_increment_normalization():
    # E tr_n((X(1) - X(0))^2) = 1, the basis-sum construction oracle
    grid = TimeGrid.uniform(1.0, 2)
    ens = simulate_hbm_ensemble(8, grid, 4000, seed=5)
    est, se = kappa_estimate(ens, 0.0, 1.0)
    assert abs(est - 1.0) <= 3 * se
    est_half, se_half = kappa_estimate(ens, 0.5, 1.0)
    assert abs(est_half - 0.5) <= 3 * se_half


def test_hbm_methods_agree_in_law():
    # two-sample moment test on tr_n(X(1)^2) and tr_n(X(1)^4)
    grid = TimeGrid.uniform(1.0, 1)
    n, paths = 6, 3000
    ens_b = simulate_hbm_ensemble(n, grid, paths, seed=21, method="basis")
    ens_e = simulate_hbm_ensemble(n, grid, paths, seed=22, method="entrywise")
    for power in (2, 4):
        def stat(ens):
            x = ens.values[:, -1]
            m = x
            for _ in range(power - 1):
                m = m @ x
            vals = np.einsum("pii->p", m).real / n
            return np.mean(vals), np.std(vals, ddof=1) / math.sqrt(paths)
        mb, sb = stat(ens_b)
        me, se = stat(ens_e)
        assert abs(mb - me) <= 3 * math.hypot(sb, se)


def test_entrywise_variances():
    # diag and offdiag entries both have variance t/n
    grid = TimeGrid.uniform(1.0, 1)
    ens = simulate_hbm_ensemble(4, grid, 4000, seed=9, method="entrywise")
    x1 = ens.values[:, -1]
    vd = np.var(x1[:, 0, 0].real)
    vo = np.var(x1[:, 0, 1].real) + np.var(x1[:, 0, 1].imag)
    assert vd == pytest.approx(0.25, rel=0.15)
    assert vo == pytest.approx(0.25, rel=0.15)


def test_make_fv_scalar_and_variation():
    grid = TimeGrid.uniform(1.0, 100)
    path = make_fv(grid, 3, g=lambda t: t)
    assert np.allclose(path.values[-1], np.eye(3))
    assert variation(path) == pytest.approx(1.0)
    const = make_fv(grid, 3, g=lambda t: 2.0)
    assert variation(const) == pytest.approx(0.0)


def test_variation_of_sine():
    grid = TimeGrid.uniform(math.pi, 10000)
    path = make_fv(grid, 2, g=math.sin)
    assert variation(path) == pytest.approx(2.0, abs=1e-3)


def test_stop_freezes_path():
    grid = TimeGrid.uniform(1.0, 10)
    path = simulate_hbm(3, grid, RngStream(2, 0))
    stopped = stop(path, 0.5)
    assert stopped.role == "martingale"
    i = grid.index_of(0.5)
    assert np.array_equal(stopped.values[: i + 1], path.values[: i + 1])
    for j in range(i, len(grid.times)):
        assert np.array_equal(stopped.values[j], path.values[i])
    assert np.array_equal(stop(path, 2.0).values, path.values)


def test_stopped_kappa():
    grid = TimeGrid.uniform(1.0, 4)
    ens = simulate_hbm_ensemble(6, grid, 3000, seed=13)
    stopped = Ensemble(
        grid,
        np.stack([stop(ens.path(i), 0.5).values for i in range(ens.n_paths)]),
        "martingale",
    )
    est, se = kappa_estimate(stopped, 0.0, 0.75)
    assert abs(est - 0.5) <= 3 * se


def test_martingale_pythagoras():
    grid = TimeGrid.uniform(1.0, 8)
    ens = simulate_hbm_ensemble(5, grid, 3000, seed=31)
    rng = np.random.default_rng(7)
    times = grid.times
    for _ in range(10):
        i, j = sorted(rng.choice(len(times) - 1, size=2, replace=False) + 1)
        s, t = times[i], times[j]
        full, se_full = kappa_estimate(ens, 0.0, t)
        head, se_head = kappa_estimate(ens, 0.0, s)
        tail, se_tail = kappa_estimate(ens, s, t)
        se = math.sqrt(se_full**2 + se_head**2 + se_tail**2)
        assert abs(full - head - tail) <= 3 * se


def test_kappa_errors():
    grid = TimeGrid.uniform(1.0, 2)
    ens = simulate_hbm_ensemble(2, grid, 10, seed=1)
    with pytest.raises(ValueError):
        kappa_estimate(ens, 0.5, 0.5)


def test_ncp1_round_trip(tmp_path):
    grid = TimeGrid.uniform(1.0, 7)
    path = simulate_hbm(3, grid, RngStream(4, 2))
    f = tmp_path / "path.ncp1"
    save_ncp1(path, str(f))
    back = load_ncp1(str(f))
    assert back.role == "martingale"
    assert np.array_equal(back.grid.times, path.grid.times)
    assert back.values.tobytes() == path.values.tobytes()
    # writing the loaded path again is byte-identical
    f2 = tmp_path / "path2.ncp1"
    save_ncp1(back, str(f2))
    assert f.read_bytes() == f2.read_bytes()


def test_ncp1_decomposable_round_trip(tmp_path):
    grid = TimeGrid.uniform(1.0, 5)
    mart = simulate_hbm(2, grid, RngStream(8, 0)).values
    fv = make_fv(grid, 2, g=lambda t: t).values
    fv = fv - fv[0]
    path = ProcessPath(grid, mart + fv, "decomposable",
                       mart_part=mart, fv_part=fv)
    f = tmp_path / "decomp.ncp1"
    save_ncp1(path, str(f))
    back = load_ncp1(str(f))
    assert back.role == "decomposable"
    assert np.array_equal(back.mart_part, mart)
    assert np.array_equal(back.fv_part, fv)


def test_ncp1_rejects_garbage(tmp_path):
    f = tmp_path / "bad.ncp1"
    f.write_bytes(b"XXXX" + b"\0" * 16)
    with pytest.raises(ValueError):
        load_ncp1(str(f))
