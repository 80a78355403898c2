import math

import numpy as np
import pytest

from cdfkw.ensemble import (
    EmpiricalCDF,
    EmptyEnsembleError,
    UnsupportedEstimatorError,
    convergence_rate,
    convergence_table,
    empirical_cdf_from_samples,
    estimate_cdf_mc,
    estimate_cdf_weighted,
    mse_error,
    quadrature_weights,
    read_cdf_csv,
    relative_error,
    rms_error,
    sampling_oracle,
    write_cdf_csv,
    write_convergence_csv,
)
from cdfkw.randfield import ScalarDistSpec

Z = ScalarDistSpec(0.0, 0.1)
S = math.sin(math.pi * 1.2)  # query (x=0.2, t=1) of the stochastic test
K = np.linspace(8.0, 26.0, 181)


def exact_k(z):
    return (np.asarray(z) * S + 5.0) ** 2


def analytic_cdf(Kg):
    # k <= K  <=>  z >= (5 - sqrt K) / |S|  (S < 0 and z S + 5 > 0 on this grid)
    return 1.0 - Z.cdf((5.0 - np.sqrt(Kg)) / abs(S))


def pi_rows(z):
    return (K[None, :] >= exact_k(z)[:, None]).astype(float)


def test_mc_identical_rows():
    row = (K >= 15.0).astype(float)
    F = estimate_cdf_mc(np.tile(row, (7, 1)), K)
    assert np.array_equal(F.F_values, row)


def test_mc_direct_average():
    F = estimate_cdf_mc([[0, 1, 1], [0, 0, 1]], [1.0, 2.0, 3.0])
    assert list(F.F_values) == [0.0, 0.5, 1.0]


def test_mc_empty():
    with pytest.raises(EmptyEnsembleError):
        estimate_cdf_mc(np.empty((0, 3)), [1.0, 2.0, 3.0])


def test_weighted_single_realization():
    row = (K >= 17.0).astype(float)
    F = estimate_cdf_weighted([1.2], Z.cdf, row[None, :], K)
    assert np.array_equal(F.F_values, row)


@pytest.mark.parametrize("M", [1, 2, 7, 100, 1000])
def test_weights_sum_to_one(M):
    z = np.random.default_rng(M).lognormal(0, math.sqrt(0.1), M)
    _, w = quadrature_weights(z, Z.cdf)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(w >= 0)


def test_weighted_rejects_multidimensional_input():
    with pytest.raises(UnsupportedEstimatorError, match="estimate_cdf_mc"):
        estimate_cdf_weighted(np.ones((3, 2)), Z.cdf, np.ones((3, 4)), [1.0, 2.0, 3.0, 4.0])


def test_weighted_beats_mc_median_over_seeds():
    for M in (10, 25, 50, 100, 200, 500):
        ew, em = [], []
        for seed in range(20):
            z = np.random.default_rng(1000 + seed).lognormal(0, Z.sigma, M)
            P = pi_rows(z)
            ref = analytic_cdf(K)
            ew.append(relative_error(estimate_cdf_weighted(z, Z.cdf, P, K).F_values, ref))
            em.append(relative_error(estimate_cdf_mc(P, K).F_values, ref))
        assert np.median(ew) <= np.median(em), M


def test_large_ensemble_converges_to_oracle():
    oracle = sampling_oracle(lambda rng, n: exact_k(rng.lognormal(0, Z.sigma, n)), K, 10**6, seed=5)
    z = np.random.default_rng(77).lognormal(0, Z.sigma, 10**4)
    P = pi_rows(z)
    assert relative_error(estimate_cdf_mc(P, K), oracle) < 1e-3
    assert relative_error(estimate_cdf_weighted(z, Z.cdf, P, K), oracle) < 1e-3


def test_sampling_oracle_against_analytic_cdf():
    oracle = sampling_oracle(lambda rng, n: exact_k(rng.lognormal(0, Z.sigma, n)), K, 10**6, seed=1)
    assert np.max(np.abs(oracle.F_values - analytic_cdf(K))) < 3e-3


def test_empirical_cdf_counts_equality():
    assert list(empirical_cdf_from_samples([0.5], [0.4, 0.5, 0.6]).F_values) == [0.0, 1.0, 1.0]
    g = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(empirical_cdf_from_samples(g, g).F_values, [0.25, 0.5, 0.75, 1.0])


def test_relative_error_values():
    F = EmpiricalCDF(K, analytic_cdf(K))
    assert relative_error(F, F) == 0.0
    ones = np.ones(50)
    assert relative_error(0.9 * ones, ones) == pytest.approx(0.01)


def test_relative_error_grid_mismatch():
    a = EmpiricalCDF([1.0, 2.0], [0.0, 1.0])
    b = EmpiricalCDF([1.0, 3.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        relative_error(a, b)
    with pytest.raises(ValueError):
        relative_error([0.0, 1.0], [0.0, 0.5, 1.0])


def test_mse_and_rms():
    a = np.array([1.0, 2.0, 3.0])
    assert mse_error(a, a) == 0.0
    assert mse_error(a, a + 0.1) == pytest.approx(0.01)
    assert rms_error(a, a + 0.1) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        mse_error(a, a[:2])


def test_convergence_rates():
    assert convergence_rate(8.95e-3, 1.11e-3) == pytest.approx(3.01, abs=0.01)
    assert convergence_rate(2.22e-5, 1.02e-6) == pytest.approx(4.44, abs=0.01)
    assert convergence_rate(1e-3, 1e-3) == 0.0
    with pytest.raises(ValueError):
        convergence_rate(0.0, 1.0)


def test_convergence_table_and_csv(tmp_path):
    rows = convergence_table([0.1, 0.05], [8e-3, 1e-3])
    assert rows[0].rate is None and rows[1].rate == pytest.approx(3.0)
    write_convergence_csv(tmp_path / "c.csv", rows)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "param,eps,rate"
    assert lines[1].endswith(",")


def test_cdf_csv_round_trip(tmp_path):
    write_cdf_csv(tmp_path / "cdf.csv", [1.0, 2.0], {"F_cdf": [0.2, 0.9], "F_mcs": [0.1, 1.0]})
    Kr, cols = read_cdf_csv(tmp_path / "cdf.csv")
    assert (tmp_path / "cdf.csv").read_text().splitlines()[0] == "K,F_cdf,F_mcs"
    assert list(Kr) == [1.0, 2.0] and list(cols["F_mcs"]) == [0.1, 1.0]


def test_empirical_cdf_type_checks():
    with pytest.raises(ValueError):
        EmpiricalCDF([2.0, 1.0], [0.0, 1.0])
    assert not EmpiricalCDF([1.0, 2.0], [0.6, 0.4]).is_valid()
