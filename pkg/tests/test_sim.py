import math
from dataclasses import replace

import numpy as np
import pytest

from latticebp.realmap import real_model
from latticebp.sim import (
    CSV_COLUMNS,
    TX_SCALE,
    Interleaver,
    SimConfig,
    _block_channels,
    block_deinterleave,
    block_interleave,
    detect,
    ebno_to_n0,
    fer_sweep,
    gen_channel,
    run_fast_iterative,
    run_interference_free,
    run_quasistatic,
)
from latticebp.socode import SuperCode


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(scenario="slow")
    with pytest.raises(ValueError):
        SimConfig(survivors=0)
    with pytest.raises(ValueError):
        SimConfig(packets=0)
    with pytest.raises(ValueError):
        SimConfig(init_scheme="random")
    assert SimConfig().full_scale.packets == 2000


def test_ebno_conversion():
    assert ebno_to_n0(0.0) == pytest.approx(0.4)
    assert ebno_to_n0(10.0) == pytest.approx(0.04)


def test_gen_channel_properties():
    a = gen_channel("fast", 1000, np.random.default_rng(1))
    b = gen_channel("fast", 1000, np.random.default_rng(1))
    assert np.array_equal(a, b) and a.shape == (2000, 2, 2)
    big = gen_channel("fast", 12_500, np.random.default_rng(2))
    assert np.mean(np.abs(big) ** 2) == pytest.approx(1.0, rel=0.02)
    q = gen_channel("quasistatic", 50, np.random.default_rng(3))
    assert np.array_equal(q[0::2], q[1::2])
    assert not np.allclose(q[0], q[2])
    with pytest.raises(ValueError):
        gen_channel("slow", 1, np.random.default_rng(0))


def test_interleaver_examples():
    assert np.array_equal(block_interleave(np.arange(6), Interleaver(1, 6)), np.arange(6))
    assert np.array_equal(block_interleave(np.arange(6), Interleaver(2, 6)), [0, 3, 1, 4, 2, 5])
    il = Interleaver(8, 4000)
    v = np.random.default_rng(0).standard_normal(4000)
    assert np.array_equal(block_deinterleave(block_interleave(v, il), il), v)
    assert sorted(il.permutation) == list(range(4000))
    with pytest.raises(ValueError):
        Interleaver(8, 12)
    with pytest.raises(ValueError):
        block_interleave(np.arange(5), Interleaver(1, 6))


def test_block_channel_matches_real_model():
    rng = np.random.default_rng(4)
    H = gen_channel("quasistatic", 5, rng)
    blocks = _block_channels(H)
    for n in range(5):
        assert np.allclose(blocks[n], real_model(H[2 * n], 2).H)


def test_energy_bookkeeping():
    code = SuperCode()
    S = np.stack([code.matrix(i) / math.sqrt(2) for i in range(len(code))])
    assert np.mean(np.sum(np.abs(S) ** 2, axis=(1, 2)) / 2) <= 2 * 1.01
    # the 1/2 receive scaling is sqrt(1/Nt) times the codebook normalization
    assert TX_SCALE == pytest.approx(0.5)


def test_noiseless_zero_fer():
    cfg = SimConfig(ebno_db_list=(60.0,), packets=2)
    assert all(r.frame_errors == 0 for r in run_quasistatic(cfg))
    fast = replace(cfg, scenario="fast", outer_iters=2)
    assert all(r.frame_errors == 0 for r in run_fast_iterative(fast))
    assert run_interference_free(fast)[0].frame_errors == 0


def test_records_and_agreement():
    recs = run_quasistatic(SimConfig(ebno_db_list=(6.0,), packets=1, codewords_per_packet=300))
    bp_rec, ml_rec = recs
    assert (bp_rec.detector, ml_rec.detector) == ("bp", "ml")
    assert bp_rec.fer == bp_rec.frame_errors / bp_rec.frames
    assert 0 <= bp_rec.agreement <= 300


def test_fer_decreases_with_snr():
    recs = run_quasistatic(SimConfig(ebno_db_list=(0.0, 3.0, 6.0, 9.0), packets=4), with_ml=False)
    for a, b in zip(recs, recs[1:]):
        sd = math.sqrt(a.fer * (1 - a.fer) / a.frames + b.fer * (1 - b.fer) / b.frames)
        assert b.fer <= a.fer + 2 * sd


def test_fast_single_iteration_is_baseline():
    cfg = SimConfig(scenario="fast", ebno_db_list=(6.0,), packets=1, codewords_per_packet=200, outer_iters=3)
    one = run_fast_iterative(replace(cfg, outer_iters=1))
    three = run_fast_iterative(cfg)
    assert one[0].frame_errors == three[0].frame_errors
    assert [r.iterations for r in three] == [1, 2, 3]


def test_csv_schema_and_determinism(tmp_path):
    cfg = SimConfig(scenario="fast", ebno_db_list=(4.0, 8.0), packets=2, codewords_per_packet=80, outer_iters=2, seed=11)
    text = fer_sweep(cfg, path=tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text() == text
    lines = text.splitlines()
    assert lines[0].startswith("# N0 = 1 / (2.5")
    assert lines[1] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2 + 4
    assert fer_sweep(cfg) == text
    assert fer_sweep(replace(cfg, workers=2)) == text
    assert fer_sweep(replace(cfg, seed=12)) != text


def test_empty_sweep_has_header_only():
    text = fer_sweep(SimConfig(ebno_db_list=()))
    assert text.splitlines()[1:] == [",".join(CSV_COLUMNS)]


def test_detect_single_instance():
    rng = np.random.default_rng(5)
    code = SuperCode()
    Hbar = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    H = TX_SCALE * real_model(Hbar, 2).H
    for i in (0, 9, 20, 31):
        res = detect(H @ code.codebook[i], Hbar, 1e-4)
        assert res.codeword == i
        assert res.hypothesis == code.hypothesis[i]
        for k in range(2):
            assert res.label_probs[k].sum() == pytest.approx(1)
            for t in res.coord_extrinsic[k]:
                assert t.sum() == pytest.approx(1)
    with pytest.raises(ValueError):
        detect(np.zeros(4), Hbar, 0.1)
