import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbcmo.datagen import (
    DISTRIBUTIONS,
    BimodalWeights,
    GeneratorError,
    MvoGenConfig,
    ScaleGenConfig,
    generate_mvo_dataset,
    generate_scale_dataset,
    sample_ball,
)
from dbcmo.fileio import write_dataset
from dbcmo.layouts import LAYOUT_NAMES, LayoutError, builtin_layout


def small_config(seed=0, **kw):
    rng = np.random.default_rng(99)
    pts = np.vstack([rng.normal(0, 1, (15, 2)), rng.normal(10, 1, (15, 2))])
    labels = ["a"] * 15 + ["b"] * 15
    return MvoGenConfig(pts, labels, seed=seed, **kw)


class TestSampleBall:
    @pytest.mark.parametrize("kind", DISTRIBUTIONS)
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_inside_unit_ball(self, kind, d):
        pts = sample_ball(np.random.default_rng(1), kind, 2000, d)
        assert pts.shape == (2000, d)
        assert np.linalg.norm(pts, axis=1).max() <= 1.0 + 1e-12

    def test_uniform_half_radius_fraction(self):
        pts = sample_ball(np.random.default_rng(2), "uniform", 10_000, 2)
        frac = np.mean(np.linalg.norm(pts, axis=1) <= 0.5)
        assert frac == pytest.approx(0.25, abs=0.02)

    def test_shapes_differ(self):
        rng = np.random.default_rng(3)
        r = {k: np.linalg.norm(sample_ball(rng, k, 5000, 2), axis=1).mean() for k in DISTRIBUTIONS}
        assert r["gaussian"] < r["uniform"] < r["inverse_gaussian"]

    def test_unknown(self):
        with pytest.raises(GeneratorError):
            sample_ball(np.random.default_rng(0), "cauchy", 5, 2)


class TestBimodalWeights:
    def test_normalized_positive(self):
        w = BimodalWeights().draw(np.random.default_rng(0), 50)
        assert math.fsum(w) == pytest.approx(1.0, abs=1e-12)
        assert np.all(w > 0)

    def test_bad_mix(self):
        with pytest.raises(GeneratorError):
            BimodalWeights(mix=(0.5, 0.6))


class TestMvoGenerator:
    def test_counts_and_weights(self):
        ds, truth = generate_mvo_dataset(small_config())
        assert len(ds) == 30 and len(truth) == 30
        for obj in ds:
            assert 30 <= len(obj) <= 100
            assert math.fsum(obj.weights) == pytest.approx(1.0, abs=1e-9)

    def test_domain(self):
        ds, _ = generate_mvo_dataset(small_config(domain=(0.0, 1000.0)))
        allpts = np.concatenate([o.coords for o in ds])
        assert allpts.min() >= 0.0 and allpts.max() <= 1000.0
        assert allpts.max() == pytest.approx(1000.0)

    def test_deterministic(self, tmp_path):
        a, ta = generate_mvo_dataset(small_config(seed=5))
        b, tb = generate_mvo_dataset(small_config(seed=5))
        write_dataset(a, tmp_path / "a.jsonl", ta)
        write_dataset(b, tmp_path / "b.jsonl", tb)
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        c, _ = generate_mvo_dataset(small_config(seed=6))
        assert a != c

    def test_too_few_seeds(self):
        cfg = MvoGenConfig(np.zeros((5, 2)), ["a"] * 5)
        with pytest.raises(GeneratorError):
            generate_mvo_dataset(cfg)

    def test_config_validation(self):
        with pytest.raises(GeneratorError):
            MvoGenConfig(np.zeros((10, 2)), ["a"] * 9)
        with pytest.raises(GeneratorError):
            MvoGenConfig(np.zeros((10, 2)), ["a"] * 10, k_range=(5, 3))
        with pytest.raises(GeneratorError):
            MvoGenConfig(np.zeros((10, 2)), ["a"] * 10, distributions={"a": "cauchy"})

    def test_distribution_cycle(self):
        cfg = MvoGenConfig(np.zeros((10, 2)), ["2", "0", "1", "3", "4", "-1", "0", "0", "0", "0"])
        dist = cfg.distribution_of()
        assert [dist[x] for x in "01234"] == list(DISTRIBUTIONS) + [DISTRIBUTIONS[0]]
        assert dist["-1"] == "uniform"

    def test_layout_aggregation(self):
        pts, labels = builtin_layout("aggregation")
        ds, truth = generate_mvo_dataset(MvoGenConfig(pts, labels, seed=1))
        assert len(ds) == 788
        assert len(set(truth.values())) == 7


class TestScaleGenerator:
    def test_even_split(self):
        ds, truth = generate_scale_dataset(ScaleGenConfig(n_objects=2000, max_instances=5, seed=1))
        assert len(ds) == 2000
        counts = np.unique(list(truth.values()), return_counts=True)[1]
        np.testing.assert_array_equal(counts, [500] * 4)

    def test_high_dim_cells(self):
        ds, truth = generate_scale_dataset(ScaleGenConfig(n_objects=200, max_instances=10, dims=10, seed=2))
        assert ds.dimensionality == 10
        for obj in ds:
            cell = int(truth[obj.id])
            origin = np.array([(cell % 2) * 500.0, (cell // 2) * 500.0])
            # instances stay within one object radius of their cell
            assert np.all(obj.coords[:, :2] >= origin - 10.0)
            assert np.all(obj.coords[:, :2] <= origin + 510.0)

    def test_deterministic(self, tmp_path):
        cfg = ScaleGenConfig(n_objects=300, max_instances=100, seed=1)
        write_dataset(generate_scale_dataset(cfg)[0], tmp_path / "a.jsonl")
        write_dataset(generate_scale_dataset(cfg)[0], tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_instance_cap(self):
        ds, _ = generate_scale_dataset(ScaleGenConfig(n_objects=100, max_instances=7, seed=3))
        assert max(len(o) for o in ds) <= 7

    def test_validation(self):
        with pytest.raises(GeneratorError):
            ScaleGenConfig(n_objects=3)
        with pytest.raises(GeneratorError):
            ScaleGenConfig(max_instances=0)
        with pytest.raises(GeneratorError):
            ScaleGenConfig(dims=1)


class TestLayouts:
    @pytest.mark.parametrize(
        "name,count,clusters",
        [("aggregation", 788, 7), ("compound", 399, 6), ("jain", 373, 2), ("twocircles", 500, 4)],
    )
    def test_sizes(self, name, count, clusters):
        pts, labels = builtin_layout(name)
        assert pts.shape == (count, 2)
        assert len(set(labels) - {"-1"}) == clusters

    def test_stable(self):
        for name in LAYOUT_NAMES:
            np.testing.assert_array_equal(builtin_layout(name)[0], builtin_layout(name)[0])

    def test_unknown(self):
        with pytest.raises(LayoutError):
            builtin_layout("spiral")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_generator_determinism_property(seed):
    a, ta = generate_mvo_dataset(small_config(seed=seed, instance_range=(2, 6)))
    b, tb = generate_mvo_dataset(small_config(seed=seed, instance_range=(2, 6)))
    assert a == b and ta == tb
