import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boolperc.analytic import truncation_intensity
from boolperc.radius_laws import Dirac, ExpTail, PowerLawC1, TruncatedAt
from boolperc.sampler import (GHOST, HallSaturationError, ModelSpec, at_intensity, coupled_configs, from_jsonl,
                              index_coordinates, resample_cell, restrict_to, sample_cells, sample_config, to_jsonl,
                              truncation_radius)

DIRAC = ModelSpec(2, 0.3, Dirac(1.0))
C1 = ModelSpec(2, 0.2, PowerLawC1(1.0, 2))


def test_zero_intensity_is_empty():
    assert len(sample_config(DIRAC.with_lam(0), 5.0, 1)) == 0
    assert len(sample_cells(DIRAC.with_lam(0), 8.0, 4.0, 1)) == 0


def test_window_invariant():
    for seed in range(20):
        cfg = sample_config(C1, 6.0, seed)
        norm = np.linalg.norm(cfg.centers, axis=1)
        assert np.all(norm <= 6.0 + cfg.radii)
        assert np.all(cfg.radii < cfg.n_max)


def test_same_seed_bit_identical():
    a, b = sample_config(C1, 6.0, 42), sample_config(C1, 6.0, 42)
    assert a.same_balls(b) and a.centers.tobytes() == b.centers.tobytes()
    assert not a.same_balls(sample_config(C1, 6.0, 43))


def test_mean_ball_count_dirac():
    model = ModelSpec(2, 2.0, Dirac(1.0))
    n = 10 ** 4
    counts = np.array([len(sample_config(model, 5.0, s)) for s in range(n)])
    mean = 2 * math.pi * 36
    assert mean == pytest.approx(226.19, abs=0.01)
    assert abs(counts.mean() - mean) <= 4 * math.sqrt(mean / n)


def test_band_counts_match_intensity():
    # per band n, E[count] = lam int_[n-1,n) v_d (w + rho)^d dmu(rho)
    model = ModelSpec(2, 0.5, ExpTail(0.7))
    w, reps = 3.0, 4000
    N = truncation_radius(model, w)
    rad = [sample_config(model, w, s).radii for s in range(reps)]
    for band in range(1, min(N, 6) + 1):
        obs = np.array([np.count_nonzero((r >= band - 1) & (r < band)) for r in rad])
        # expected count from the difference of truncation intensities (exact integral)
        exp = (truncation_intensity(model.law, model.lam, 2, w, band - 1.0)
               - truncation_intensity(model.law, model.lam, 2, w, float(band)))
        assert abs(obs.mean() - exp) <= 4 * math.sqrt(max(exp, 1e-12) / reps) + 1e-9, band
    total = np.array([len(r) for r in rad])
    exp_total = truncation_intensity(model.law, model.lam, 2, w, 0.0)
    assert abs(total.mean() - exp_total) <= 4 * math.sqrt(exp_total / reps)


def test_truncation_honesty():
    for model, w in [(C1, 10.0), (ModelSpec(3, 0.1, PowerLawC1(0.5, 3)), 4.0)]:
        cfg = sample_config(model, w, 0)
        assert truncation_intensity(model.law, model.lam, model.d, w, cfg.n_max) <= model.eps_trunc


def test_hall_saturation_refused():
    model = ModelSpec(3, 0.1, PowerLawC1(0.5, 2))  # exponent 2.5 < d = 3
    with pytest.raises(HallSaturationError, match="Hall saturation"):
        sample_config(model, 3.0, 0)


def test_coupled_configs_nested():
    top = ModelSpec(2, 1.0, ExpTail(1.0))
    cfgs = coupled_configs(top, [0.2, 0.5, 1.0], 5.0, 3)
    sizes = [len(c) for c in cfgs]
    assert sizes == sorted(sizes)
    for small, big in zip(cfgs, cfgs[1:]):
        rows = {tuple(r) for r in np.column_stack([big.centers, big.radii])}
        assert all(tuple(r) in rows for r in np.column_stack([small.centers, small.radii]))
    with pytest.raises(ValueError):
        coupled_configs(top, [2.0], 5.0, 3)


def test_thinned_config_has_right_intensity():
    top = ModelSpec(2, 1.0, Dirac(1.0))
    reps = 3000
    counts = np.array([len(at_intensity(sample_config(top, 3.0, s, births=True), 0.4)) for s in range(reps)])
    mean = 0.4 * math.pi * 16
    assert abs(counts.mean() - mean) <= 4 * math.sqrt(mean / reps)


def test_cell_coordinates_invariant():
    for seed in range(10):
        cells = sample_cells(C1, 8.0, 4.0, seed)
        tagged = cells.bands > 0
        x = cells.cells[tagged]
        assert np.all(cells.centers[tagged] >= x - 0.5) and np.all(cells.centers[tagged] < x + 0.5)
        n = cells.bands[tagged]
        assert np.all(cells.radii[tagged] >= n - 1) and np.all(cells.radii[tagged] < n)
        assert np.all(np.linalg.norm(x, axis=1) <= 8.0) and np.all(n <= 8)
        g = ~tagged
        assert np.all(np.linalg.norm(cells.centers[g], axis=1) <= 4.0 + cells.radii[g])


def test_cells_require_large_L():
    with pytest.raises(ValueError):
        sample_cells(C1, 7.0, 4.0, 0)


def test_cells_match_window_sampler_in_distribution():
    # balls meeting B_r: the product-space sample restricted to B_r vs the window sampler
    reps, r = 1500, 3.0
    a = [sample_cells(C1, 6.0, r, s) for s in range(reps)]
    na = np.array([np.count_nonzero(np.linalg.norm(c.centers, axis=1) <= r + c.radii) for c in a])
    nb = np.array([len(sample_config(C1, r, 10 ** 6 + s)) for s in range(reps)])
    se = math.sqrt(na.var(ddof=1) / reps + nb.var(ddof=1) / reps)
    assert abs(na.mean() - nb.mean()) <= 4 * se


def test_resample_round_trip_and_locality():
    cells = sample_cells(C1, 8.0, 4.0, 9)
    coord = ((1, -2), 1)
    alt = resample_cell(cells, coord, 77)
    changed = (cells.bands == 1) & np.all(cells.cells == [1, -2], axis=1)
    changed_alt = (alt.bands == 1) & np.all(alt.cells == [1, -2], axis=1)
    assert np.array_equal(cells.centers[~changed], alt.centers[~changed_alt])
    assert resample_cell(alt, coord, cells.seed).same_balls(cells)
    assert resample_cell(resample_cell(cells, GHOST, 5), GHOST, cells.seed).same_balls(cells)


def test_resample_empty_band_is_identity():
    model = ModelSpec(2, 0.5, Dirac(1.0))  # all mass in band 2 ([1, 2))
    cells = sample_cells(model, 8.0, 4.0, 1)
    assert resample_cell(cells, ((0, 0), 1), 123).same_balls(cells)
    assert resample_cell(cells, ((3, 1), 5), 123).same_balls(cells)


def test_resample_rejects_unknown_coordinates():
    cells = sample_cells(C1, 8.0, 4.0, 1)
    for bad in ("h", ((9, 0), 1), ((0, 0), 9), ((0, 0, 0), 1)):
        with pytest.raises(ValueError):
            resample_cell(cells, bad, 1)
    with pytest.raises(ValueError):
        resample_cell(sample_config(C1, 4.0, 1), ((0, 0), 1), 1)


def test_resampled_coordinate_has_fresh_distribution():
    reps = 4000
    model = ModelSpec(2, 1.5, ExpTail(1.0))
    coord = ((0, 0), 1)
    base = sample_cells(model, 4.0, 2.0, 1)
    cnt = []
    for s in range(reps):
        alt = resample_cell(base, coord, s)
        cnt.append(np.count_nonzero((alt.bands == 1) & np.all(alt.cells == 0, axis=1)))
    mean = 1.5 * float(model.law.band_mass(0.0, 1.0))
    assert abs(np.mean(cnt) - mean) <= 4 * math.sqrt(mean / reps)


def test_index_order():
    coords = index_coordinates(C1, 3.0)
    keys = [(n, x) for x, n in coords]
    assert keys == sorted(keys)
    # 29 points of Z^2 in the closed disc of radius 3; band 1 ([0, 1)) carries no mass for this law
    assert len(coords) == 2 * 29
    assert len(index_coordinates(C1, 3.0, nonempty=False)) == 3 * 29


def test_restrict_to():
    cfg = sample_config(C1, 6.0, 2)
    assert restrict_to(cfg, [0, 0], 6.0 + cfg.n_max + 1).same_balls(cfg)
    sub = restrict_to(cfg, [1.0, -0.5], 4.0)
    keep = [i for i in range(len(cfg)) if math.dist(cfg.centers[i], (1.0, -0.5)) + cfg.radii[i] <= 4.0]
    assert np.array_equal(sub.radii, cfg.radii[keep])
    single = cfg.subset(np.arange(len(cfg)) == 0)
    single.centers = np.array([[0.0, 0.0]])
    single.radii = np.array([3.0])
    assert len(restrict_to(single, [0, 0], 2.9)) == 0


def test_jsonl_round_trip():
    cells = sample_cells(C1, 8.0, 4.0, 3)
    text = to_jsonl(cells)
    back = from_jsonl(text, 2, cells.window_radius)
    assert np.array_equal(back.centers, cells.centers) and np.array_equal(back.radii, cells.radii)
    assert np.array_equal(back.bands, cells.bands)
    assert np.array_equal(back.cells[cells.bands > 0], cells.cells[cells.bands > 0])


def test_truncated_law_samples_identically():
    a = sample_config(ModelSpec(2, 0.4, Dirac(1.0)), 6.0, 8)
    b = sample_config(ModelSpec(2, 0.4, TruncatedAt(Dirac(1.0), 3.0)), 6.0, 8)
    assert a.same_balls(b)


@given(st.integers(0, 2 ** 32), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_birth_marks_monotone(seed, a, b):
    cfg = sample_config(ModelSpec(2, 1.0, ExpTail(1.0)), 3.0, seed, births=True)
    lo, hi = min(a, b), max(a, b)
    assert len(at_intensity(cfg, lo)) <= len(at_intensity(cfg, hi))
    assert np.all(cfg.births >= 0) and np.all(cfg.births <= 1.0)
