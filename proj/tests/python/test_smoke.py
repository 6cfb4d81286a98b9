import json
import math
import random

import pytest

import mixq


def test_uniform_fake_quant_error_is_half_a_step():
    rng = random.Random(3)
    x = [rng.uniform(-2.0, 5.0) for _ in range(2000)]
    for bits in (2, 4, 8):
        scale, _ = mixq.calibrate_uniform(x, bits)
        y = mixq.fake_quant_uniform(x, bits)
        assert max(abs(a - b) for a, b in zip(x, y)) <= scale / 2 + 1e-9


def test_per_channel_matches_per_tensor_for_identical_rows():
    row = [0.5, -1.0, 2.0, 0.25]
    per_channel = mixq.fake_quant_uniform(row * 3, 4, per_channel=True, channels=3)
    assert per_channel == mixq.fake_quant_uniform(row, 4) * 3


def test_log_quantizer_reproduces_codebook():
    for base in (2.0, math.sqrt(2.0)):
        book = [base ** -k for k in range(15)]
        assert mixq.fake_quant_log(book, base, 1.0, 4) == pytest.approx(book, rel=1e-15, abs=0.0)
    base, scale = mixq.search_log_base([1.0, 0.5, 0.25, 0.125], 2)
    assert (base, scale) == (2.0, 1.0)


def test_kl_and_synergy_values():
    assert mixq.kl_divergence([0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.13081203594113697, abs=1e-12)
    assert mixq.pair_synergy(0.3, 0.3) == pytest.approx(1e6)
    assert mixq.normalize_scores([1.0, 3.0]) == [0.25, 0.75]
    with pytest.raises(ValueError):
        mixq.kl_divergence([0.5, 0.5], [1.0])


def two_layer(lam):
    p = mixq.AllocationProblem()
    p.layer_ids = [1, 2]
    p.bit_set = [4, 8]
    p.omega = [0.8, 0.2]
    p.s_hat = [1.0]
    p.w_count = [100, 100]
    p.macs = [100, 100]
    p.size_budget = 1200
    p.bitops_budget = 8000
    p.lambda_ = lam
    return p


@pytest.mark.parametrize("lam, bits, phi", [(0.0, [8, 4], 7.2), (1.0, [4, 4], 4.0)])
def test_two_layer_allocation(lam, bits, phi):
    p = two_layer(lam)
    for solver in (mixq.solve_bnb, mixq.solve_bruteforce):
        a = solver(p)
        assert a.feasible
        assert a.bits == bits
        assert a.objective == pytest.approx(phi, abs=1e-12)
    assert mixq.objective(p, bits) == pytest.approx(phi, abs=1e-12)


def test_lp_export_names_every_choice():
    text = mixq.export_lp(two_layer(0.5))
    assert "Maximize" in text and "Subject To" in text
    for name in ("a_0_0", "a_0_1", "a_1_0", "a_1_1", "dp_0", "dm_0"):
        assert name in text


def test_profile_and_allocate_round_trip():
    spec_json = mixq.default_spec_json()
    profile = json.loads(mixq.profile(11, images=4, spec_json=spec_json))
    assert profile["format_version"]
    assert sum(profile["importance"]["omega"]) == pytest.approx(1.0, abs=1e-9)

    alloc = json.loads(mixq.allocate(json.dumps(profile), target_bits=6, mode="importance-only"))
    bits = alloc["bits"]
    uniform = [6] * len(bits)
    assert mixq.model_size_bits(bits, spec_json) <= mixq.model_size_bits(uniform, spec_json)
    assert mixq.bitops(bits, spec_json) <= mixq.bitops(uniform, spec_json)
