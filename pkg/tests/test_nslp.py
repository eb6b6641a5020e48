import numpy as np
import pytest

import credalcast as cc


def rain_conditionals(outcomes, space):
    """Empirical P(rain=1 | feature) per feature value."""
    feature = space.feature_array[outcomes]
    label = space.binary_labels()[outcomes]
    return [label[feature == x].mean() for x in range(space.n_features)]


class TestSampling:
    def test_seed_determinism(self, lifted_data):
        spec = cc.NSLPSpec(lifted_data, n=5000, seed=99, selection="cyclic")
        a = cc.sample_nslp(spec)
        b = cc.sample_nslp(spec)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])

    def test_different_seeds_differ(self, lifted_data):
        a = cc.sample_nslp(cc.NSLPSpec(lifted_data, n=5000, seed=1))
        b = cc.sample_nslp(cc.NSLPSpec(lifted_data, n=5000, seed=2))
        assert not np.array_equal(a[0], b[0])

    def test_singleton_iid_frequencies_within_clt_band(self):
        space = cc.binary_space()
        p = 0.37
        data = cc.singleton(space, [1 - p, p])
        spec = cc.NSLPSpec(data, n=100_000, seed=4, selection="iid_uniform")
        outcomes, groups = cc.sample_nslp(spec)
        assert np.all(groups == 0)
        freq = outcomes.mean()
        sigma = np.sqrt(p * (1 - p) / spec.n)
        assert abs(freq - p) <= 3 * sigma

    def test_fixed_sequence_single_vertex(self, lifted_data, lifted_P1):
        n = 50_000
        spec = cc.NSLPSpec(lifted_data, n=n, seed=5, selection="fixed_sequence",
                           sequence=tuple([0] * n))
        outcomes, groups = cc.sample_nslp(spec)
        assert np.all(groups == 0)
        freq = np.bincount(outcomes, minlength=4) / n
        assert np.max(np.abs(freq - np.asarray(lifted_P1))) < 0.01

    def test_cyclic_lifted_example_conditionals(self, lifted_data, lifted_space):
        spec = cc.NSLPSpec(lifted_data, n=200_000, seed=6, selection="cyclic")
        outcomes, groups = cc.sample_nslp(spec)
        for group, expected in ((0, (0.95, 0.05)), (1, (0.85, 0.15))):
            rows = groups == group
            conditionals = rain_conditionals(outcomes[rows], lifted_space)
            assert abs(conditionals[0] - expected[0]) < 0.01
            assert abs(conditionals[1] - expected[1]) < 0.01

    def test_group_tags_partition_cycle(self, lifted_data):
        spec = cc.NSLPSpec(lifted_data, n=11, seed=7, selection="cyclic")
        _, groups = cc.sample_nslp(spec)
        assert np.array_equal(groups, np.arange(11) % 2)

    def test_spec_validation(self, lifted_data):
        with pytest.raises(cc.InvalidInputError):
            cc.NSLPSpec(lifted_data, n=0, seed=1)
        with pytest.raises(cc.InvalidInputError):
            cc.NSLPSpec(lifted_data, n=3, seed=1, selection="fixed_sequence",
                        sequence=(0, 1))
        with pytest.raises(cc.InvalidInputError):
            cc.NSLPSpec(lifted_data, n=2, seed=1, selection="fixed_sequence",
                        sequence=(0, 5))

    def test_metadata_names_rng(self, lifted_data):
        spec = cc.NSLPSpec(lifted_data, n=10, seed=1)
        assert spec.metadata()["rng"] == "philox4x64-10"


class TestEmpiricalCredal:
    def test_point_mass_groups(self, lifted_space):
        outcomes = np.array([1, 1, 1, 2, 2])
        groups = np.array([0, 0, 0, 1, 1])
        ds = cc.dataset_from_outcomes(outcomes, groups, lifted_space)
        credal = cc.empirical_group_credal(ds, lifted_space)
        assert np.allclose(credal.matrix[0], [0, 1, 0, 0])
        assert np.allclose(credal.matrix[1], [0, 0, 1, 0])

    def test_cyclic_sample_recovers_vertices(self, lifted_data, lifted_space):
        spec = cc.NSLPSpec(lifted_data, n=200_000, seed=8, selection="cyclic")
        outcomes, groups = cc.sample_nslp(spec)
        ds = cc.dataset_from_outcomes(outcomes, groups, lifted_space)
        credal = cc.empirical_group_credal(ds, lifted_space)
        assert np.max(np.abs(credal.matrix - lifted_data.matrix)) < 0.01

    def test_single_group(self, lifted_space):
        ds = cc.dataset_from_outcomes(
            np.array([0, 1, 2, 3]), np.zeros(4, dtype=int), lifted_space)
        credal = cc.empirical_group_credal(ds, lifted_space)
        assert credal.n_vertices == 1
        assert np.allclose(credal.matrix[0], 0.25)

    def test_empty_group_rejected(self, lifted_space):
        ds = cc.dataset_from_outcomes(
            np.array([0, 1]), np.array([0, 2]), lifted_space)
        with pytest.raises(cc.InvalidInputError, match="group 1"):
            cc.empirical_group_credal(ds, lifted_space)

    def test_needs_outcome_indices(self):
        ds = cc.GroupedDataset(
            np.random.rand(5, 2), np.zeros(5, dtype=int),
            np.zeros(5, dtype=int), ("a", "b"))
        with pytest.raises(cc.InvalidInputError, match="outcome"):
            cc.empirical_group_credal(ds, cc.binary_space())


def test_dataset_from_outcomes_one_hot(lifted_space):
    outcomes = np.array([0, 1, 2, 3])
    ds = cc.dataset_from_outcomes(outcomes, np.zeros(4, dtype=int), lifted_space)
    assert np.array_equal(ds.features, [[1, 0], [1, 0], [0, 1], [0, 1]])
    assert np.array_equal(ds.labels, [0, 1, 0, 1])
    assert ds.feature_names == ("x0", "x1")
    assert np.array_equal(ds.outcome_index, outcomes)
