import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cosetldpc.decoder as decoder_mod
from cosetldpc.decoder import (
    BPDecoder,
    check_update,
    check_update_bruteforce,
    decide,
    gf_convolve,
    initial_message,
    mdft,
    midft,
    run_bp,
    var_update,
)
from cosetldpc.ensemble import CosetCode, DegreeDist, Encoder, sample_coset, sample_graph, sample_labels
from cosetldpc.gf import GaloisField
from cosetldpc.messages import llr_of, prob_of, shift_prob
from cosetldpc.modulation import (
    AWGN,
    DMC,
    Mapping,
    equivalent_channel_distribution,
    nonuniform_constellation,
    quantization_mapping,
)

SMALL_DMC = DMC(np.array([[4, 2, 1, 1], [1, 4, 2, 1], [2, 1, 1, 4]]) / 8)


def make_code(q, dd, E, seed, mapping=None):
    rng = np.random.default_rng(seed)
    g = sample_labels(sample_graph(dd, E, rng, q=q), rng)
    return CosetCode(g, sample_coset(g.N, q, rng), mapping or nonuniform_constellation(q))


def test_mdft_examples():
    assert np.allclose(mdft(np.eye(8)[0], 2, 3), 1)
    assert np.allclose(mdft([0.9, 0.1], 2, 1), [1.0, 0.8])
    assert np.allclose(mdft(np.eye(9)[0], 3, 2), 1)
    rng = np.random.default_rng(0)
    for p, m in [(2, 3), (3, 2), (5, 1), (2, 5), (7, 2)]:
        x = rng.random((4, p**m))
        assert np.max(np.abs(midft(mdft(x, p, m), p, m) - x)) < 1e-12
    with pytest.raises(ValueError):
        mdft(np.ones(5), 2, 2)


def test_mdft_matches_definition():
    """Compare against the explicit sum over digit vectors."""
    rng = np.random.default_rng(1)
    for q in (4, 8, 9, 25):
        F = GaloisField(q)
        x = rng.random(q)
        dig = F.digits(np.arange(q))
        kernel = np.exp(2j * np.pi / F.p * (dig @ dig.T))
        assert np.allclose(mdft(x, F.p, F.m), kernel @ x)


def test_binary_transform_is_real(monkeypatch):
    def no_complex(*a, **k):
        raise AssertionError("complex DFT used for p = 2")

    monkeypatch.setattr(decoder_mod, "_dft_matrix", no_complex)
    x = np.random.default_rng(2).random((10, 32))
    d = mdft(x, 2, 5)
    assert d.dtype == np.float64
    assert midft(d, 2, 5).dtype == np.float64
    out = check_update(x[:3, None, :].repeat(3, axis=1)[:, :3], np.ones((3, 3), int), np.ones(3, int), GaloisField(32))
    assert out.dtype == np.float64


def test_gf_convolve_examples():
    F = GaloisField(3)
    x = np.array([0.5, 0.3, 0.2])
    assert np.allclose(gf_convolve([1, 0, 0], x, F), x)
    assert np.allclose(gf_convolve(np.full(3, 1 / 3), x, F), 1 / 3)
    assert gf_convolve(x, [0.6, 0.3, 0.1], F)[0] == pytest.approx(0.39)


@pytest.mark.parametrize("q", [3, 4, 8])
def test_gf_convolve_commutative_associative(q):
    F = GaloisField(q)
    a, b, c = np.random.default_rng(q).dirichlet(np.ones(q), size=3)
    assert np.allclose(gf_convolve(a, b, F), gf_convolve(b, a, F))
    assert np.allclose(gf_convolve(gf_convolve(a, b, F), c, F), gf_convolve(a, gf_convolve(b, c, F), F))


def test_check_update_examples():
    F = GaloisField(2)
    out = check_update([[0.9, 0.1], [0.8, 0.2]], [1, 1], 1, F)
    assert np.allclose(out, [0.74, 0.26])
    assert np.allclose(check_update([[0.9, 0.1]], [1], 1, F), [0.9, 0.1])
    F = GaloisField(8)
    rng = np.random.default_rng(3)
    msgs = rng.dirichlet(np.ones(8), size=3)
    msgs[1] = 1 / 8
    assert np.allclose(check_update(msgs, [3, 5, 7], 2, F), 1 / 8)
    with pytest.raises(ValueError):
        check_update(msgs, [0, 1, 2], 1, F)


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9, 16])
def test_dft_matches_naive(q):
    F = GaloisField(q)
    rng = np.random.default_rng(q)
    worst = 0.0
    for d in range(2, 9):
        msgs = rng.dirichlet(np.full(q, 0.5), size=(1000, d - 1))
        labels = rng.integers(1, q, size=(1000, d - 1))
        out_label = rng.integers(1, q, size=1000)
        a = check_update(msgs, labels, out_label, F, "dft")
        b = check_update(msgs, labels, out_label, F, "naive")
        worst = max(worst, np.max(np.abs(a - b)))
    assert worst < 1e-10


@pytest.mark.parametrize("q,d", [(2, 4), (3, 3), (4, 4), (5, 3), (8, 3)])
def test_naive_matches_literal_enumeration(q, d):
    F = GaloisField(q)
    rng = np.random.default_rng(10 * q + d)
    for _ in range(5):
        msgs = rng.dirichlet(np.ones(q), size=d - 1)
        labels = rng.integers(1, q, size=d - 1)
        g = int(rng.integers(1, q))
        assert np.allclose(check_update(msgs, labels, g, F, "naive"),
                           check_update_bruteforce(msgs, labels, g, F), atol=1e-14)


def test_decoder_check_phase_dft_matches_naive():
    code = make_code(9, DegreeDist({2: 0.3, 3: 0.7}, {4: 0.5, 6: 0.5}), 600, 0)
    rng = np.random.default_rng(0)
    r = rng.dirichlet(np.ones(9), size=code.graph.E)
    a = BPDecoder(code, AWGN(1), check="dft")._check_phase(r)
    b = BPDecoder(code, AWGN(1), check="naive")._check_phase(r)
    assert np.max(np.abs(a - b)) < 1e-10


def _best_of(f, arg, n=3):
    ts = []
    for _ in range(n):
        t = time.perf_counter()
        f(arg)
        ts.append(time.perf_counter() - t)
    return min(ts)


def test_dft_check_phase_beats_pairwise_convolution():
    # regression guard; the direct-enumeration comparison lives in the acceptance suite
    code = make_code(32, DegreeDist.regular(3, 7), 7 * 300, 1)
    r = np.random.default_rng(1).dirichlet(np.ones(32), size=code.graph.E)
    fast = BPDecoder(code, AWGN(1), check="dft")
    slow = BPDecoder(code, AWGN(1), check="naive")
    assert _best_of(slow._check_phase, r) >= 3 * _best_of(fast._check_phase, r)


def test_var_update_examples():
    r0 = np.array([0.9, 0.1])
    assert np.allclose(var_update(r0, np.empty((0, 2))), r0)
    assert np.allclose(var_update(r0, [[0.5, 0.5]]), r0)
    assert np.allclose(var_update(r0, [[0.8, 0.2]]), [36 / 37, 1 / 37])
    w = llr_of(r0)
    assert np.allclose(prob_of(var_update(w, llr_of([[0.8, 0.2]]), llr=True)), [36 / 37, 1 / 37])


def test_decide():
    assert decide([0.5, 0.25, 0.25]) == 0
    assert decide(np.eye(4)[2]) == 2
    rng = np.random.default_rng(4)
    picks = decide(np.full((10_000, 4), 0.25), rng)
    counts = np.bincount(picks, minlength=4)
    assert np.all(np.abs(counts - 2500) < 3 * np.sqrt(10_000 * 0.25 * 0.75))


def test_initial_message_forms():
    m = nonuniform_constellation(8)
    ch = AWGN(0.5)
    rng = np.random.default_rng(5)
    y = rng.normal(size=50)
    v = rng.integers(0, 8, size=50)
    r = initial_message(y, v, m, ch)
    w = initial_message(y, v, m, ch, llr=True)
    assert np.max(np.abs(prob_of(w) - r)) < 1e-10
    one_hot = initial_message(np.array([2]), np.array([1]), Mapping(np.arange(4)), DMC(np.eye(4)))
    F = GaloisField(4)
    assert np.array_equal(one_hot[0], np.eye(4)[F.sub_table[2, 1]])


def test_noiseless_all_zero_decodes_at_iteration_zero():
    code = make_code(4, DegreeDist.regular(3, 6), 300, 2, Mapping(np.arange(4)))
    res = run_bp(code, code.coset, DMC(np.eye(4)), max_iters=5, early_stop=True,
                 reference=np.zeros(code.graph.N, int))
    assert res.iterations == 0 and res.syndrome_zero
    assert res.symbol_errors == [0]
    assert np.all(res.decisions == 0)


def test_dimension_mismatch():
    code = make_code(4, DegreeDist.regular(3, 6), 300, 2)
    with pytest.raises(ValueError):
        run_bp(code, np.zeros(5), AWGN(1))


def _transmit(code, codeword, channel, rng):
    sym = code.transmit_symbols(codeword)
    return channel.sample(code.mapping.table[sym], rng)


def test_coset_shift_gives_identical_error_events():
    q = 8
    code = make_code(q, DegreeDist.regular(3, 6), 1200, 3)
    F = GaloisField(q)
    rng = np.random.default_rng(6)
    c = Encoder(code.graph).random_codeword(rng)
    ch = AWGN.from_snr_db(9.0)
    y = _transmit(code, c, ch, rng)
    shifted = CosetCode(code.graph, F.add_table[code.coset, c], code.mapping)
    a = run_bp(code, y, ch, max_iters=15, reference=c, rng=np.random.default_rng(0))
    b = run_bp(shifted, y, ch, max_iters=15, reference=np.zeros(code.graph.N, int), rng=np.random.default_rng(0))
    assert a.symbol_errors == b.symbol_errors
    assert np.array_equal(F.sub_table[a.decisions, c], b.decisions)
    assert max(a.symbol_errors) > 0  # the comparison is not vacuous


def test_initial_message_shift_identity():
    """Replacing coset v by v + c shifts the initial message by c."""
    q = 8
    F = GaloisField(q)
    m = nonuniform_constellation(q)
    rng = np.random.default_rng(7)
    y = rng.normal(size=200)
    v = rng.integers(0, q, size=200)
    c = rng.integers(0, q, size=200)
    a = initial_message(y, F.add_table[v, c], m, AWGN(0.4))
    b = shift_prob(initial_message(y, v, m, AWGN(0.4)), c, F)
    assert np.max(np.abs(a - b)) <= 1e-12


def test_single_variable_message_law_shift():
    """For one variable node, the law given symbol k is the +k shift of the law given 0."""
    m = quantization_mapping(4, [2, 1, 1])
    F = GaloisField(4)
    base_atoms, base_probs = equivalent_channel_distribution(SMALL_DMC, m, 0)
    for k in range(4):
        atoms, probs = equivalent_channel_distribution(SMALL_DMC, m, k)
        moved = shift_prob(atoms, k, F)
        for a, p in zip(moved, probs):
            same = np.all(np.abs(base_atoms - a) <= 1e-12, axis=1)
            tot_here = probs[np.all(np.abs(moved - a) <= 1e-12, axis=1)].sum()
            assert abs(base_probs[same].sum() - tot_here) <= 1e-12


def test_probability_and_llr_decoders_agree():
    q = 4
    code = make_code(q, DegreeDist({2: 0.3, 3: 0.7}, {5: 1.0}), 500, 8)
    ch = AWGN.from_snr_db(6.0)
    rng = np.random.default_rng(8)
    d1 = BPDecoder(code, ch, "prob")
    d2 = BPDecoder(code, ch, "llr")
    differ = 0
    for t in range(100):
        y = _transmit(code, np.zeros(code.graph.N, int), ch, rng)
        a = d1.decode(y, max_iters=10, rng=np.random.default_rng(t))
        b = d2.decode(y, max_iters=10, rng=np.random.default_rng(t))
        differ += int(not np.array_equal(a.decisions, b.decisions))
    assert differ == 0


def _exit_threshold_db(mapping, dd, lo, hi):
    """Smallest SNR (to 0.05 dB) where the method-2 tunnel opens."""
    from cosetldpc.exit import CurveSet, ExitContext, fit_J, tunnel_open

    J, _ = fit_J(mapping.q, 60, 20_000, 0)

    def is_open(snr):
        ctx = ExitContext.build(mapping, AWGN.from_snr_db(snr).sigma, 2, J=J, n_grid=60, n_samples=20_000, rng=1)
        return tunnel_open(dd, CurveSet(ctx, list(dd.lam), list(dd.rho), 41, 5000, 2))[0]

    assert is_open(hi) and not is_open(lo)
    while hi - lo > 0.05:
        mid = (lo + hi) / 2
        lo, hi = (lo, mid) if is_open(mid) else (mid, hi)
    return hi


@pytest.mark.slow
def test_gf8_code_decodes_above_the_exit_threshold():
    q, dd = 8, DegreeDist.regular(3, 6)
    mapping = nonuniform_constellation(q)
    snr = _exit_threshold_db(mapping, dd, 8.0, 13.0) + 1.5
    ch = AWGN.from_snr_db(snr)
    rng = np.random.default_rng(21)
    graph = sample_graph(dd, 3 * 2000, rng, q=q)
    errors = 0
    for _ in range(20):
        g = sample_labels(graph, rng)
        code = CosetCode(g, sample_coset(g.N, q, rng), mapping)
        zero = np.zeros(g.N, dtype=np.int64)
        res = run_bp(code, _transmit(code, zero, ch, rng), ch, max_iters=200, early_stop=True,
                     reference=zero, rng=rng)
        errors += res.symbol_errors[-1]
    assert errors == 0



@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 4, 5, 8, 9]), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_dft_matches_naive_property(q, d, seed):
    F = GaloisField(q)
    rng = np.random.default_rng(seed)
    msgs = rng.dirichlet(np.full(q, rng.uniform(0.05, 2)), size=(4, d - 1))
    labels = rng.integers(1, q, size=(4, d - 1))
    out_label = rng.integers(1, q, size=4)
    a = check_update(msgs, labels, out_label, F, "dft")
    assert np.max(np.abs(a - check_update(msgs, labels, out_label, F, "naive"))) < 1e-10
    assert np.allclose(a.sum(axis=1), 1) and np.all(a >= -1e-15)
