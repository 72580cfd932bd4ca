import math

import numpy as np
import pytest

from constants import Q32_POINTS, Q64_POINTS
from cosetldpc.gf import GaloisField
from cosetldpc.messages import check_symmetry, f_of, prob_of, llr_of
from cosetldpc.modulation import (
    AWGN,
    DMC,
    Mapping,
    app_vector,
    check_nondegenerate,
    delta_param,
    equiprobable_capacity,
    equivalent_channel_distribution,
    equivalent_channel_residuals,
    equivalent_channel_sample,
    nonuniform_constellation,
    pam_constellation,
    quantization_mapping,
    snr_for_capacity,
    unconstrained_limit,
)

# 3-input, 4-output channel with dyadic rational entries
SMALL_DMC = DMC(np.array([[4, 2, 1, 1], [1, 4, 2, 1], [2, 1, 1, 4]]) / 8)


def test_quantization_mapping_counts():
    m = quantization_mapping(8, [("a", 3), ("b", 3), ("c", 2)])
    assert m.preimage_counts() == {"a": 3, "b": 3, "c": 2}
    assert list(m.table) == ["a"] * 3 + ["b"] * 3 + ["c"] * 2
    assert check_nondegenerate(quantization_mapping(4, [4])).mapping_degenerate
    assert list(quantization_mapping(4, [1, 1, 1, 1]).table) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        quantization_mapping(4, [2, 1])


def test_nonuniform_constellations_match_published_tables():
    m32 = nonuniform_constellation(32)
    assert np.max(np.abs(m32.table - Q32_POINTS)) < 1e-3
    m64 = nonuniform_constellation(64)
    assert np.max(np.abs(m64.table - Q64_POINTS)) < 5e-3


@pytest.mark.parametrize("q", [2, 5, 8, 32, 64])
def test_constellations_unit_energy_and_symmetric(q):
    for m in (nonuniform_constellation(q), pam_constellation(q)):
        assert m.energy == pytest.approx(1, abs=1e-9)
        assert np.all(np.diff(m.table) > 0)
        assert np.allclose(m.table, -m.table[::-1])


def test_pam_examples():
    assert np.allclose(pam_constellation(2).table, [-1, 1])
    assert np.allclose(pam_constellation(4).table, np.array([-3, -1, 1, 3]) / math.sqrt(5))


def test_delta_examples():
    sigma = 0.8
    bpsk = pam_constellation(2)
    assert delta_param(AWGN(sigma), bpsk) == pytest.approx(math.exp(-1 / (2 * sigma**2)))
    assert delta_param(AWGN(sigma), Mapping(np.zeros(4))) == pytest.approx(1)
    disjoint = DMC(np.array([[0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5]]))
    assert delta_param(disjoint, Mapping(np.array([0, 1]))) == 0
    # general form agrees with the closed AWGN form via a fine Riemann sum
    m = nonuniform_constellation(8)
    y = np.linspace(-12, 12, 200_001)
    dens = np.exp(-(y[:, None] - m.table) ** 2 / (2 * sigma**2)) / math.sqrt(2 * math.pi * sigma**2)
    B = np.sqrt(dens).T @ np.sqrt(dens) * (y[1] - y[0])
    assert delta_param(AWGN(sigma), m) == pytest.approx((B.sum() - np.trace(B)) / 56, rel=1e-6)


def test_delta_and_capacity_monotone_in_noise():
    m = nonuniform_constellation(8)
    sigmas = np.linspace(0.1, 2.0, 12)
    d = [delta_param(AWGN(s), m) for s in sigmas]
    c = [equiprobable_capacity(AWGN(s), m) for s in sigmas]
    assert np.all(np.diff(d) > 0)
    assert np.all(np.diff(c) <= 1e-9)
    assert all(0 < x < 1 for x in d)


def test_capacity_examples():
    assert equiprobable_capacity(DMC(np.eye(8)), Mapping(np.arange(8))) == pytest.approx(3)
    assert equiprobable_capacity(AWGN.from_snr_db(5.12), pam_constellation(4)) == pytest.approx(1, abs=0.01)
    m32 = Mapping(np.array(Q32_POINTS))
    assert equiprobable_capacity(AWGN.from_snr_db(18.25, m32.energy), m32) == pytest.approx(3, abs=0.01)


def test_capacity_matches_monte_carlo_on_a_dmc():
    m = quantization_mapping(4, [2, 1, 1])
    rng = np.random.default_rng(0)
    x = rng.integers(0, 4, size=100_000)
    y = equivalent_channel_sample(SMALL_DMC, m, x, rng)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.sum(np.where(y > 0, y * np.log2(y), 0), axis=-1)
    est = 2 - h
    cap = equiprobable_capacity(SMALL_DMC, m)
    assert abs(est.mean() - cap) < 3 * est.std(ddof=1) / math.sqrt(est.size)


@pytest.mark.parametrize("q,snr", [(8, 8.0), (4, 3.0)])
def test_capacity_matches_monte_carlo_on_awgn(q, snr):
    m = nonuniform_constellation(q)
    ch = AWGN.from_snr_db(snr)
    rng = np.random.default_rng(q)
    y = equivalent_channel_sample(ch, m, rng.integers(0, q, size=100_000), rng)
    with np.errstate(divide="ignore", invalid="ignore"):
        est = math.log2(q) + np.sum(np.where(y > 0, y * np.log2(y), 0), axis=-1)
    cap = equiprobable_capacity(ch, m)
    assert abs(est.mean() - cap) < 3 * est.std(ddof=1) / math.sqrt(est.size)


@pytest.mark.slow
def test_snr_limits():
    m32 = Mapping(np.array(Q32_POINTS))
    assert snr_for_capacity(m32, 3) == pytest.approx(18.25, abs=0.05)
    assert snr_for_capacity(pam_constellation(32), 3) == pytest.approx(19.11, abs=0.05)
    assert snr_for_capacity(nonuniform_constellation(64), 4) == pytest.approx(24.34, abs=0.05)
    assert snr_for_capacity(pam_constellation(8), 2.5) == pytest.approx(16.14, abs=0.05)
    with pytest.raises(ValueError):
        snr_for_capacity(pam_constellation(4), 2.5)


def test_unconstrained_limit():
    assert unconstrained_limit(3) == pytest.approx(17.99, abs=0.01)
    assert unconstrained_limit(4) == pytest.approx(24.06, abs=0.01)
    assert unconstrained_limit(0.5) == pytest.approx(0, abs=1e-12)


def test_nondegeneracy_report():
    assert check_nondegenerate(quantization_mapping(4, [2, 2])).mapping_divisor == 2
    assert not check_nondegenerate(pam_constellation(8), AWGN(1)).degenerate
    twin = DMC(np.array([[0.5, 0.5], [0.5, 0.5], [0.9, 0.1]]))
    rep = check_nondegenerate(Mapping(np.array([0, 1, 2, 2])), twin)
    assert rep.channel_degenerate and rep.identical_inputs == [(0, 1)]


def test_equivalent_channel_noiseless():
    rng = np.random.default_rng(1)
    x = np.arange(8)
    y = equivalent_channel_sample(DMC(np.eye(8)), Mapping(np.arange(8)), x, rng)
    assert np.array_equal(y, np.eye(8))


def test_equivalent_channel_exact_symmetry():
    m = quantization_mapping(4, [2, 1, 1])
    res = equivalent_channel_residuals(SMALL_DMC, m)
    assert res["app"] <= 1e-12 and res["factorization"] <= 1e-12
    atoms, probs = equivalent_channel_distribution(SMALL_DMC, m, 0)
    assert abs(probs.sum() - 1) < 1e-12
    assert check_symmetry(atoms, probs, GaloisField(4)) <= 1e-12


def test_symmetry_fails_without_the_coset():
    """With the coset fixed at zero the same channel is not symmetric."""
    m = quantization_mapping(4, [2, 1, 1])
    atoms = [app_vector(SMALL_DMC, m, np.array(y), 0) for y in range(4)]
    probs = SMALL_DMC.P[m.table[0]]
    assert check_symmetry(atoms, probs, GaloisField(4)) > 1e-3


def test_app_fixed_point_on_random_draws():
    """Posterior of the input given the output vector is the vector itself."""
    m = quantization_mapping(4, [2, 1, 1])
    rng = np.random.default_rng(2)
    tables = [equivalent_channel_distribution(SMALL_DMC, m, i) for i in range(4)]
    draws = equivalent_channel_sample(SMALL_DMC, m, rng.integers(0, 4, size=1000), rng)
    worst = 0.0
    for y in draws:
        like = np.array([probs[np.all(np.abs(atoms - y) <= 1e-12, axis=1)].sum() for atoms, probs in tables])
        worst = max(worst, np.max(np.abs(like / like.sum() - y)))
    assert worst <= 1e-12


def test_d_of_initial_message_equals_delta_exactly_on_dmc():
    m = quantization_mapping(4, [2, 1, 1])
    atoms, probs = equivalent_channel_distribution(SMALL_DMC, m, 0)
    assert probs @ f_of(atoms) == pytest.approx(delta_param(SMALL_DMC, m), abs=1e-12)


def test_mapping_json_round_trip():
    m = nonuniform_constellation(16)
    assert np.array_equal(Mapping.from_json(m.to_json()).table, m.table)


def test_awgn_app_llr_is_affine_in_noise():
    """LLR of the AWGN initial message equals alpha(v) + beta(v) z."""
    q, sigma = 8, 0.6
    F = GaloisField(q)
    m = nonuniform_constellation(q)
    d = m.table
    rng = np.random.default_rng(3)
    for _ in range(1000):
        v, z = rng.integers(q), rng.normal(0, sigma)
        y = d[v] + z
        w = llr_of(app_vector(AWGN(sigma), m, np.array(y), v), floor=False)
        dv, dvi = d[v], d[F.add_table[v, np.arange(1, q)]]
        alpha = (dv - dvi) ** 2 / (2 * sigma**2)
        beta = (dv - dvi) / sigma**2
        assert np.allclose(w, alpha + beta * z, rtol=1e-10, atol=1e-9)
