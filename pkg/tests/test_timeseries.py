import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nystrom_ts.errors import DataError, DegenerateInputError, InvalidArgumentError
from nystrom_ts.timeseries import (GeneratedSeries, NoiseSpec, Series, acf, embed, gen_m1, gen_m2,
                                   gen_nar, read_dataset_csv, read_series_csv, register_map,
                                   sample_noise, write_dataset_csv, write_series_csv)

ZERO = NoiseSpec.zero()


def test_m1_deterministic_cases():
    np.testing.assert_array_equal(gen_m1(50, ZERO, 0.0).values, 0.0)
    assert gen_m1(1, ZERO, 1.0).values[0] == pytest.approx(0.5 * math.sin(1.0), abs=1e-15)
    assert gen_m1(1, ZERO, 1.0).values[0] == pytest.approx(0.42074, abs=5e-6)


def test_m1_stationary_mean():
    g = gen_m1(100_000, NoiseSpec.uniform(-0.7, 0.7), 0.3, seed=1)
    assert abs(g.values.mean()) < 0.02


def test_m2_forced_and_halving():
    g = gen_m2(3, 0.0, eps=[1, 0, 1])
    np.testing.assert_allclose(g.values, [0.5, 0.25, 0.625])
    np.testing.assert_allclose(g.innovation, [0.5, 0.0, 0.5])
    np.testing.assert_array_equal(g.noise, [1, 0, 1])
    h = gen_m2(30, 1.0, eps=np.zeros(30))
    np.testing.assert_array_equal(h.values, 2.0 ** -np.arange(1, 31))


def test_m2_invariant_interval():
    x = gen_m2(100_000, 0.5, seed=2).values
    assert x.min() >= 0 and x.max() <= 1
    with pytest.raises(InvalidArgumentError):
        gen_m2(5, 1.5)


def test_gen_nar_consistency():
    noise = NoiseSpec.uniform(-0.7, 0.7)
    a = gen_nar("m1", 1, noise, 200, [0.2], seed=5)
    b = gen_m1(200, noise, 0.2, seed=5)
    np.testing.assert_array_equal(a.values, b.values)
    z = gen_nar("zero", 3, noise, 100, [1, 2, 3], seed=6)
    np.testing.assert_array_equal(z.values, z.noise)
    lin = gen_nar("linear", 1, ZERO, 25, [1.0])
    np.testing.assert_allclose(lin.values, 0.9 ** np.arange(1, 26), rtol=1e-13)


def test_innovation_is_noise_for_additive_maps():
    g = gen_m1(100, NoiseSpec.gaussian(0, 0.1), 0.0, seed=3)
    np.testing.assert_array_equal(g.innovation, g.noise)
    data = embed(g, 1)
    # denoised target is the noiseless one-step image of the input
    np.testing.assert_allclose(data.denoised_targets, 0.5 * np.sin(data.inputs[:, 0]), atol=1e-15)


def test_burn_in_and_forced_eps_length():
    g = gen_m1(10, NoiseSpec.uniform(-0.7, 0.7), 0.0, seed=1, burn_in=5)
    full = gen_m1(15, NoiseSpec.uniform(-0.7, 0.7), 0.0, seed=1)
    np.testing.assert_array_equal(g.values, full.values[5:])
    with pytest.raises(InvalidArgumentError):
        gen_m1(10, ZERO, 0.0, eps=np.zeros(3))


def test_exogenous_and_custom_map():
    exo = np.arange(20, dtype=float)
    g = gen_nar("arx_sin", 1, ZERO, 20, [0.0], exo=Series(exo), exo_lags=1)
    # t = 0 sees (xi_0, xi_{-1} = 0)
    assert g.values[0] == pytest.approx(0.0)
    assert g.values[1] == pytest.approx(0.5 * math.sin(g.values[0]) + 0.3 * (1 + 0))
    register_map("test_ar2", lambda lags, exo: 0.5 * lags[0] - 0.25 * lags[1])
    h = gen_nar("test_ar2", 2, ZERO, 2, [1.0, 2.0])
    np.testing.assert_allclose(h.values, [0.0, -0.25])
    with pytest.raises(InvalidArgumentError):
        gen_nar("nope", 1, ZERO, 3, [0.0])


def test_diverging_map_is_data_error():
    register_map("test_blowup", lambda lags, exo: 1e200 * lags[0])
    with pytest.raises(DataError):
        gen_nar("test_blowup", 1, ZERO, 5, [1.0])


def test_embed_cases(rng):
    d = embed([1, 2, 3, 4], 2)
    np.testing.assert_array_equal(d.inputs, [[2, 1], [3, 2]])
    np.testing.assert_array_equal(d.targets, [3, 4])
    assert len(embed(np.arange(6.0), 5)) == 1
    x = rng.normal(size=40)
    e = embed(x, 1)
    assert len(e) == 39
    for t in range(39):
        assert e.inputs[t, 0] == x[t] and e.targets[t] == x[t + 1]
    with pytest.raises(InvalidArgumentError):
        embed([1.0, 2.0], 2)


def test_noise_moments():
    assert np.all(sample_noise(NoiseSpec.bernoulli(1.0), 100, 0) == 1)
    u = sample_noise(NoiseSpec.uniform(-0.2, 0.2), 1_000_000, 1)
    assert u.var() == pytest.approx(0.04 / 3, rel=0.05)
    g = sample_noise(NoiseSpec.gaussian(0, 0.1), 1_000_000, 2)
    assert g.std() == pytest.approx(0.1, rel=0.02)
    assert NoiseSpec.uniform(-0.2, 0.2).variance == pytest.approx(0.04 / 3)
    with pytest.raises(InvalidArgumentError):
        NoiseSpec.uniform(1.0, -1.0)


def test_acf_cases(rng):
    assert acf(rng.normal(size=50), 5)[0] == 1.0
    w = acf(rng.normal(size=10_000), 20)
    assert np.sum(np.abs(w[1:]) <= 3 / math.sqrt(10_000)) >= 18
    r1 = [acf(np.tile([1.0, -1.0], n // 2), 1)[1] for n in (10, 100, 1000)]
    assert r1[0] > r1[1] > r1[2] and r1[2] == pytest.approx(-1, abs=2e-3)
    with pytest.raises(DegenerateInputError):
        acf(np.ones(10), 2)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=60), st.integers(0, 2))
def test_acf_bounds(xs, lag):
    x = np.array(xs)
    if x.std() < 1e-6 * max(1.0, np.abs(x).max()):
        return
    r = acf(x, lag)
    assert r[0] == 1.0
    assert np.all(np.abs(r) <= 1 + 1e-12)


def test_series_csv_round_trip(tmp_path):
    g = gen_m2(20, 0.3, seed=9)
    p = tmp_path / "s.csv"
    write_series_csv(p, g)
    assert p.read_text().splitlines()[0] == "t,value,noise,innovation"
    back = read_series_csv(p)
    np.testing.assert_array_equal(back.values, g.values)
    np.testing.assert_array_equal(back.innovation, g.innovation)
    g1 = gen_m1(10, NoiseSpec.uniform(-0.7, 0.7), 0.0, seed=1)
    write_series_csv(p, g1)
    assert p.read_text().splitlines()[0] == "t,value,noise"
    write_series_csv(p, Series(np.arange(3.0)))
    assert isinstance(read_series_csv(p), Series)


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,value\n0,1\n1,oops\n")
    with pytest.raises(DataError, match="line 3"):
        read_series_csv(p)
    p.write_text("a,b\n")
    with pytest.raises(DataError):
        read_series_csv(p)
    p.write_text("x1,y\n1,2,3\n")
    with pytest.raises(DataError, match="line 2"):
        read_dataset_csv(p)


def test_dataset_csv_round_trip(tmp_path):
    d = embed(gen_m1(30, NoiseSpec.uniform(-0.7, 0.7), 0.0, seed=4), 3)
    p = tmp_path / "d.csv"
    write_dataset_csv(p, d)
    back = read_dataset_csv(p)
    np.testing.assert_array_equal(back.inputs, d.inputs)
    np.testing.assert_array_equal(back.targets, d.targets)


def test_seeded_generation_bit_identical():
    for spec in (NoiseSpec.uniform(-0.7, 0.7), NoiseSpec.gaussian(0, 0.1), NoiseSpec.bernoulli(0.5)):
        a = gen_m1(500, spec, 0.1, seed=77)
        b = gen_m1(500, spec, 0.1, seed=77)
        assert a.values.tobytes() == b.values.tobytes()
    assert isinstance(gen_m2(3, 0.0, seed=1), GeneratedSeries)
