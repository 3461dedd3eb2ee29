"""Product and canonical measures against independently computed values.

The frozen constants below were produced by a standalone script using 40-digit
mpmath arithmetic (series summation, exact Fraction enumeration for the small
canonical cases) before this module existed; they are pasted verbatim.
"""
import math

import numpy as np
import pytest

from zrp.configuration import Configuration
from zrp.errors import CertificationError
from zrp.measures import (
    canonical_torus_measure,
    compositions,
    density,
    fugacity_identity,
    fugacity_measure,
    partition_function,
    restrict_measure,
    sample_box_config,
    sample_marginal,
    torus_sites,
)
from zrp.rates import exp_rate, power_rate, table_rate

# frozen: z(1) for g(k) = k^2 equals I_0(2); series and besseli agree to 20 digits
Z_SQUARES_PHI1 = 2.2795853023360672674
LOG_Z_SQUARES_PHI1 = 0.82399354148295628293
# frozen: density R(1) = I_1(2)/I_0(2)
R_SQUARES_PHI1 = 0.69777465796400798201
# frozen: E[min(N, 10)] for N ~ Poisson(1)
E_MIN_POIS1_10 = 0.99999998905218541819


def test_partition_function_squares():
    log_z, K, tail = partition_function(power_rate(2.0), 1.0)
    assert log_z == pytest.approx(LOG_Z_SQUARES_PHI1, abs=1e-12)
    assert tail <= 1e-12
    assert K >= 5


def test_measure_normalization_squares():
    m = fugacity_measure(power_rate(2.0), 1.0)
    assert math.exp(m.log_z) == pytest.approx(Z_SQUARES_PHI1, rel=1e-12)
    assert m.pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert density(m) == pytest.approx(R_SQUARES_PHI1, abs=1e-12)


def test_fugacity_identity_is_phi():
    for rate, phi in ((power_rate(2.0), 1.0), (power_rate(1.0), 3.0),
                      (exp_rate(1.0, 0.4), 2.0)):
        m = fugacity_measure(rate, phi)
        assert fugacity_identity(m) == pytest.approx(phi, rel=1e-10)


def test_linear_rate_is_poisson():
    phi = 1.0
    m = fugacity_measure(power_rate(1.0), phi, tol=1e-30)
    for k in range(15):
        assert m.pmf[k] == pytest.approx(math.exp(-phi) * phi ** k / math.factorial(k),
                                         rel=1e-12)
    # frozen: Poisson(1) cdf at 0..3
    assert m.cdf[:4] == pytest.approx(
        [0.367879441171, 0.735758882343, 0.919698602929, 0.981011843124], abs=1e-12)
    assert density(m) == pytest.approx(phi, rel=1e-12)


def test_linear_rate_density_equals_phi():
    m = fugacity_measure(power_rate(1.0), 2.0, tol=1e-30)
    assert density(m) == pytest.approx(2.0, rel=1e-12)


def test_capped_mean_against_frozen_value():
    m = fugacity_measure(power_rate(1.0), 1.0, tol=1e-30)
    capped = float(np.dot(np.minimum(np.arange(m.K + 1), 10), m.pmf))
    assert capped == pytest.approx(E_MIN_POIS1_10, abs=1e-14)


def test_sample_marginal_is_quantile_transform():
    m = fugacity_measure(power_rate(1.0), 1.0)
    assert sample_marginal(m, 0.0) == 0
    assert sample_marginal(m, 0.5) == 1    # cdf(0) = e^-1 < 0.5 < cdf(1)
    assert sample_marginal(m, 0.9) == 2    # frozen quantile
    assert sample_marginal(m, 1.0 - 1e-15) <= m.K


def test_sample_marginal_statistics():
    m = fugacity_measure(power_rate(2.0), 1.0)
    rng = np.random.default_rng(11)
    draws = np.array([sample_marginal(m, float(u)) for u in rng.random(40_000)])
    sd = math.sqrt(float(np.dot((np.arange(m.K + 1) - density(m)) ** 2, m.pmf)))
    assert abs(draws.mean() - density(m)) < 4 * sd / math.sqrt(draws.size)


def test_divergent_fugacity_rejected():
    # bounded rate, phi above the ceiling: the weight series cannot converge
    from zrp.rates import custom_rate
    bounded = custom_rate(lambda k: 1.0 if k else 0.0, "bounded")
    with pytest.raises(CertificationError):
        fugacity_measure(bounded, 1.5)
    # finite table: the tail is undefined rather than divergent, same verdict
    with pytest.raises(CertificationError):
        fugacity_measure(table_rate([0, 1, 1, 1]), 1.5)


def test_zero_rate_above_zero_rejected():
    with pytest.raises(CertificationError):
        fugacity_measure(table_rate([0, 0, 1]), 0.5)


def test_sample_box_config_shape_and_determinism():
    m = fugacity_measure(power_rate(2.0), 1.0)
    c1 = sample_box_config(m, 2, 1, 123)
    c2 = sample_box_config(m, 2, 1, 123)
    assert c1 == c2
    assert all(-2 <= x <= 2 for x in c1.occ)
    c3 = sample_box_config(m, 1, 2, 7)
    assert c3.d == 2
    assert all(max(abs(u) for u in x) <= 1 for x in c3.occ)


def test_compositions_enumerates_simplex():
    combos = list(compositions(3, 2))
    assert sorted(combos) == [(0, 3), (1, 2), (2, 1), (3, 0)]
    assert len(list(compositions(5, 3))) == 21  # C(7, 2)


def test_torus_sites_shapes():
    assert set(torus_sites(3, 1)) == {-1, 0, 1}
    assert len(torus_sites(4, 1)) == 4
    assert len(torus_sites(3, 2)) == 9


def test_canonical_two_sites_exact():
    # frozen: exact Fractions for 2 sites, N=2, g = k^2:
    # weights w(2,0) = w(0,2) = 1/4, w(1,1) = 1 -> probs 1/6, 2/3, 1/6
    m = canonical_torus_measure(power_rate(2.0), 2, 1, 2)
    probs = {s: p for s, p in zip(m.states, m.probs)}
    assert probs[(2, 0)] == pytest.approx(1.0 / 6.0, abs=1e-15)
    assert probs[(1, 1)] == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert probs[(0, 2)] == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_canonical_marginal_sums_to_one_and_counts_particles():
    m = canonical_torus_measure(power_rate(2.0), 3, 1, 4)
    for s in m.states:
        assert sum(s) == 4
    marg = m.marginal(0)
    assert marg.sum() == pytest.approx(1.0, abs=1e-12)
    # exchangeability: every site has the same marginal
    assert m.marginal(1) == pytest.approx(marg)


def test_canonical_sample_respects_count():
    m = canonical_torus_measure(power_rate(2.0), 3, 1, 5)
    rng = np.random.default_rng(3)
    for _ in range(50):
        cfg = m.sample(rng)
        assert cfg.total() == 5
        assert all(-1 <= x <= 1 for x in cfg.occ)


def test_restrict_measure_truncates_support():
    m = fugacity_measure(power_rate(2.0), 1.0)
    sampler = restrict_measure(lambda rng: sample_box_config(m, 5, 1, rng), 2)
    cfg = sampler(np.random.default_rng(5))
    assert all(-2 <= x <= 2 for x in cfg.occ)


def test_measure_json_and_csv_forms():
    m = fugacity_measure(power_rate(2.0), 1.0)
    obj = m.to_json()
    assert obj["phi"] == 1.0
    assert obj["rate"]["family"] == "power"
    lines = m.pmf_csv().strip().splitlines()
    assert lines[0] == "k,p_k"
    assert len(lines) == m.K + 2
