import numpy as np
import pytest

from taplasso.dictionary import (
    CorrelatorConfig,
    GridConfig,
    build_dictionary,
    build_replica_bank,
    build_signal_grid,
    de_interleave_columns,
    decimate_dictionary,
    export_dictionary_csv,
    fine_delays,
    ideal_dictionary,
    load_dictionary_csv,
    make_dictionary,
    nearest_grid_index,
    re_interleave_columns,
    unit_triangle,
)

# Short span keeps the sampled-code tests fast; geometry is unaffected.
FAST = dict(fs=25e6, T=1e-3, prn=1)


@pytest.fixture(scope="module")
def config():
    return CorrelatorConfig(delta_el=1.0, d=0.1, **FAST)


@pytest.fixture(scope="module")
def dict_fp1(config):
    return make_dictionary(config, GridConfig(1))


@pytest.fixture(scope="module")
def dict_fp5(config):
    return make_dictionary(config, GridConfig(5))


def test_tap_count_and_delays(config):
    assert config.n == 11
    assert np.allclose(config.tap_delays, np.arange(-0.5, 0.51, 0.1))


def test_wide_correlator_tap_count():
    cfg = CorrelatorConfig(delta_el=1.6, d=0.1, **FAST)
    assert cfg.n == 17


@pytest.mark.parametrize(
    "delta_el,d",
    [(1.0, 0.3), (0.95, 0.1), (1.0, -0.1), (0.05, 0.1)],
)
def test_bad_geometry_rejected(delta_el, d):
    with pytest.raises(ValueError):
        CorrelatorConfig(delta_el=delta_el, d=d, **FAST)


def test_fine_delays_fp5(config):
    gammas = fine_delays(config, GridConfig(5))
    assert gammas.size == 55
    assert gammas[0] == pytest.approx(-0.54)
    assert gammas[-1] == pytest.approx(0.54)
    assert np.allclose(np.diff(gammas), 0.02)


def test_fp1_grid_equals_tap_grid(config):
    assert np.allclose(fine_delays(config, GridConfig(1)), config.tap_delays)


def test_replica_bank_self_correlation(config):
    bank = build_replica_bank(config)
    assert bank.shape == (11, config.n_samples)
    for row in bank[::5]:
        assert float(row @ row) == config.n_samples


def test_signal_grid_fp1_matches_bank(config):
    bank = build_replica_bank(config)
    grid = build_signal_grid(config, GridConfig(1))
    assert np.array_equal(grid.T, bank)


def test_build_dictionary_matches_streaming(config):
    C = build_replica_bank(config)
    S = build_signal_grid(config, GridConfig(1))
    built = build_dictionary(C, S, config, GridConfig(1))
    assert np.allclose(built.M, make_dictionary(config, GridConfig(1)).M, atol=1e-12)


def test_build_dictionary_dimension_mismatch(config):
    C = build_replica_bank(config)
    with pytest.raises(ValueError):
        build_dictionary(C, np.ones((17, 11)), config, GridConfig(1))


def test_dictionary_shapes(dict_fp1, dict_fp5):
    assert dict_fp1.M.shape == (11, 11)
    assert dict_fp5.M.shape == (11, 55)


@pytest.mark.parametrize("fp", [1, 5])
def test_triangle_fidelity(config, fp):
    grid = GridConfig(fp)
    real = make_dictionary(config, grid)
    ideal = ideal_dictionary(config, grid)
    assert np.max(np.abs(real.M - ideal.M)) <= 0.07


def test_diagonal_and_column_peaks(dict_fp1, dict_fp5):
    assert np.all(np.diag(dict_fp1.M) >= 0.93)
    for d in (dict_fp1, dict_fp5):
        peaks = d.M.max(axis=0)
        assert np.all(peaks >= 0.93) and np.all(peaks <= 1.0)


def test_fp1_triangle_band_structure(dict_fp1):
    n = dict_fp1.n
    for i in range(n):
        for j in range(n):
            expect = unit_triangle(0.1 * abs(i - j))
            assert abs(dict_fp1.M[i, j] - expect) <= 0.07


@pytest.mark.parametrize("fp", [1, 5])
def test_symmetry_under_delay_negation(config, fp):
    M = make_dictionary(config, GridConfig(fp)).M
    assert np.max(np.abs(M - M[::-1, ::-1])) <= 0.07


def test_decimation_column_selection(dict_fp5):
    subs = decimate_dictionary(dict_fp5)
    assert len(subs) == 5
    # 1-based: M_1 takes columns 1, 6, 11, ...; M_2 takes 2, 7, 12, ...
    assert np.array_equal(subs[0].M, dict_fp5.M[:, 0::5])
    assert np.array_equal(subs[1].M, dict_fp5.M[:, 1::5])
    assert all(s.M.shape == (11, 11) for s in subs)


def test_decimation_identity_for_fp1(dict_fp1):
    subs = decimate_dictionary(dict_fp1)
    assert len(subs) == 1
    assert np.array_equal(subs[0].M, dict_fp1.M)


def test_reinterleave_roundtrip_exact(dict_fp5):
    blocks = de_interleave_columns(dict_fp5.M, 5)
    assert np.array_equal(re_interleave_columns(blocks), dict_fp5.M)


def test_deinterleave_bad_fp(dict_fp5):
    with pytest.raises(ValueError):
        de_interleave_columns(dict_fp5.M, 7)


def test_subdictionary_delay_offsets(config, dict_fp5):
    subs = decimate_dictionary(dict_fp5)
    d_p = config.d / 5
    for k, sub in enumerate(subs, start=1):
        offset = (k - 1 - 2) * d_p
        assert np.allclose(sub.column_delays, config.tap_delays + offset, atol=1e-12)


def test_nearest_grid_index_rounding(config):
    taps = config.tap_delays
    assert taps[nearest_grid_index(0.34, taps)] == pytest.approx(0.3)
    # Exact midpoint rounds toward zero, both signs.
    assert taps[nearest_grid_index(0.35, taps)] == pytest.approx(0.3)
    assert taps[nearest_grid_index(-0.35, taps)] == pytest.approx(-0.3)
    # Out-of-span clips to the edge tap.
    assert taps[nearest_grid_index(0.9, taps)] == pytest.approx(0.5)
    assert taps[nearest_grid_index(-2.0, taps)] == pytest.approx(-0.5)


def test_csv_roundtrip_exact(tmp_path, dict_fp5):
    path = tmp_path / "dict.csv"
    export_dictionary_csv(dict_fp5, path)
    loaded = load_dictionary_csv(path)
    assert np.array_equal(loaded.M, dict_fp5.M)
    assert loaded.config == dict_fp5.config
    assert loaded.grid == dict_fp5.grid


def test_csv_rejects_wrong_row_count(tmp_path, dict_fp1):
    path = tmp_path / "dict.csv"
    export_dictionary_csv(dict_fp1, path)
    lines = path.read_text().strip().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValueError):
        load_dictionary_csv(path)
