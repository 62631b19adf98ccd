"""
Unit Tests for datasets, partitioning and the file connectors
"""

import os
import struct
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

# Add project root to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../')))

from core.exceptions import DimensionError, FormatError, ParameterError, StateError
from core.rng import StreamFactory
from data.connectors.csv_connector import dump_dataset_csv, load_dataset_csv
from data.connectors.idx_connector import IMAGE_MAGIC, LABEL_MAGIC, load_idx, write_idx
from data.datasets import Dataset, sample_minibatch, synthetic_two_gaussians
from data.partition import (PartitionSpec, class_histogram, dirichlet_class_mixtures, partition_dataset,
                            zipf_sizes)


def balanced_dataset(num_classes=10, per_class=30, dim=4, seed=0):
    gen = np.random.default_rng(seed)
    labels = np.repeat(np.arange(num_classes), per_class)
    return Dataset(gen.random((labels.size, dim)), labels, num_classes=num_classes)


class TestDataset(unittest.TestCase):
    """Test the dataset value type and minibatch sampling."""

    def setUp(self):
        self.streams = StreamFactory(1)
        self.ds = balanced_dataset(num_classes=3, per_class=5)

    def test_validation(self):
        with self.assertRaises(DimensionError):
            Dataset(np.zeros((3, 2)), np.zeros(2, dtype=int), num_classes=2)
        with self.assertRaises(ParameterError):
            Dataset(np.zeros((2, 2)), np.array([0, 2]), num_classes=2)

    def test_class_indices(self):
        assert_array_equal(self.ds.class_indices(1), np.arange(5, 10))

    def test_minibatch_draws_from_shard(self):
        shard = np.array([2, 7, 11])
        batch = sample_minibatch(self.ds, shard, 50, self.streams.stream("local_steps"))
        self.assertEqual(len(batch), 50)
        allowed = {tuple(self.ds.features[i]) for i in shard}
        self.assertTrue(all(tuple(row) in allowed for row in batch.features))

    def test_minibatch_reproducible(self):
        shard = np.arange(15)
        a = sample_minibatch(self.ds, shard, 8, self.streams.stream("local_steps", client=1))
        b = sample_minibatch(self.ds, shard, 8, self.streams.stream("local_steps", client=1))
        assert_array_equal(a.features, b.features)

    def test_minibatch_empty_shard(self):
        with self.assertRaises(StateError):
            sample_minibatch(self.ds, np.array([], dtype=int), 4, self.streams.stream("local_steps"))

    def test_synthetic_two_gaussians(self):
        ds = synthetic_two_gaussians(200, 3, 4.0, self.streams.stream("dataset"))
        self.assertEqual(len(ds), 400)
        self.assertEqual(ds.num_classes, 2)
        self.assertAlmostEqual(ds.features[:200, 0].mean(), -2.0, delta=0.3)
        self.assertAlmostEqual(ds.features[200:, 0].mean(), 2.0, delta=0.3)


class TestPartition(unittest.TestCase):
    """Test Zipf sizes, Dirichlet mixtures and the shard split."""

    def setUp(self):
        self.streams = StreamFactory(9)
        self.ds = balanced_dataset()

    def test_zipf_equal_sizes(self):
        self.assertEqual(zipf_sizes(300, 30, 0.0), [10] * 30)

    def test_zipf_skewed(self):
        sizes = zipf_sizes(1000, 10, 1.2)
        self.assertEqual(sum(sizes), 1000)
        self.assertEqual(sizes, sorted(sizes, reverse=True))
        self.assertGreater(sizes[0], sizes[-1])

    def test_zipf_too_few_samples(self):
        with self.assertRaises(ParameterError):
            zipf_sizes(5, 10, 0.0)

    def test_mixtures_are_distributions(self):
        mixtures = dirichlet_class_mixtures(30, 10, 0.1, self.streams.stream("mixtures"))
        self.assertEqual(mixtures.shape, (30, 10))
        assert_allclose(mixtures.sum(axis=1), np.ones(30), atol=1e-12)
        self.assertTrue(np.all(mixtures >= 0))

    def test_small_alpha_concentrates(self):
        mixtures = dirichlet_class_mixtures(50, 10, 0.01, self.streams.stream("mixtures"))
        self.assertGreater(np.median(mixtures.max(axis=1)), 0.9)

    def test_partition_is_disjoint_cover(self):
        spec = PartitionSpec(sigma=0.0, alpha=0.1, num_clients=30)
        partition = partition_dataset(self.ds, spec, self.streams.stream("partition"))
        self.assertEqual(partition.sizes(), [10] * 30)
        joined = np.concatenate([partition[i] for i in range(30)])
        self.assertEqual(joined.size, len(self.ds))
        self.assertEqual(np.unique(joined).size, len(self.ds))

    def test_partition_subset_total(self):
        spec = PartitionSpec(sigma=0.5, alpha=1.0, num_clients=5, total_samples=100)
        partition = partition_dataset(self.ds, spec, self.streams.stream("partition"))
        self.assertEqual(partition.sizes(), zipf_sizes(100, 5, 0.5))

    def test_partition_reproducible(self):
        spec = PartitionSpec(sigma=0.0, alpha=0.1, num_clients=10)
        a = partition_dataset(self.ds, spec, self.streams.stream("partition"))
        b = partition_dataset(self.ds, spec, self.streams.stream("partition"))
        for i in range(10):
            assert_array_equal(a[i], b[i])

    def test_large_alpha_is_near_iid(self):
        spec = PartitionSpec(sigma=0.0, alpha=1000.0, num_clients=10)
        partition = partition_dataset(self.ds, spec, self.streams.stream("partition"))
        for i in range(10):
            self.assertGreaterEqual(int((class_histogram(self.ds, partition[i]) > 0).sum()), 8)

    def test_demand_exceeds_dataset(self):
        spec = PartitionSpec(sigma=0.0, alpha=0.1, num_clients=3, total_samples=1000)
        with self.assertRaises(ParameterError):
            partition_dataset(self.ds, spec, self.streams.stream("partition"))

    def test_invalid_spec(self):
        with self.assertRaises(ParameterError):
            PartitionSpec(sigma=-1.0, alpha=0.1, num_clients=3)
        with self.assertRaises(ParameterError):
            PartitionSpec(sigma=0.0, alpha=0.0, num_clients=3)


class TestIdxConnector(unittest.TestCase):
    """Test the IDX reader and writer."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write_pair(self, count=6, rows=2, cols=3):
        gen = np.random.default_rng(4)
        pixels = gen.integers(0, 256, size=(count, rows * cols))
        ds = Dataset(pixels / 255.0, gen.integers(0, 10, size=count), num_classes=10, image_shape=(rows, cols))
        images, labels = self.dir / "images.idx", self.dir / "labels.idx"
        write_idx(ds, images, labels)
        return ds, images, labels

    def test_round_trip(self):
        ds, images, labels = self._write_pair()
        loaded = load_idx(images, labels)
        assert_array_equal(loaded.features, ds.features)
        assert_array_equal(loaded.labels, ds.labels)
        self.assertEqual(loaded.image_shape, (2, 3))
        self.assertTrue(0.0 <= loaded.features.min() and loaded.features.max() <= 1.0)

    def test_header_layout(self):
        _, images, labels = self._write_pair(count=4)
        self.assertEqual(struct.unpack(">4I", images.read_bytes()[:16]), (IMAGE_MAGIC, 4, 2, 3))
        self.assertEqual(struct.unpack(">2I", labels.read_bytes()[:8]), (LABEL_MAGIC, 4))

    def test_bad_magic(self):
        _, images, labels = self._write_pair()
        data = bytearray(images.read_bytes())
        data[3] = 0x01
        images.write_bytes(bytes(data))
        with self.assertRaises(FormatError) as ctx:
            load_idx(images, labels)
        self.assertEqual(ctx.exception.offset, 0)

    def test_truncated(self):
        _, images, labels = self._write_pair()
        images.write_bytes(images.read_bytes()[:-5])
        with self.assertRaises(FormatError):
            load_idx(images, labels)

    def test_count_mismatch(self):
        _, images, _ = self._write_pair(count=6)
        other = Dataset(np.zeros((5, 6)), np.zeros(5, dtype=int), num_classes=10)
        write_idx(other, self.dir / "x.idx", self.dir / "short_labels.idx", image_shape=(2, 3))
        with self.assertRaises(FormatError):
            load_idx(images, self.dir / "short_labels.idx")


class TestCsvConnector(unittest.TestCase):
    """Test the synthetic CSV dump."""

    def test_round_trip(self):
        ds = synthetic_two_gaussians(10, 3, 2.0, StreamFactory(0).stream("dataset"))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "synthetic.csv"
            dump_dataset_csv(ds, path)
            self.assertTrue(path.read_text().startswith("label,f0,f1,f2\n"))
            loaded = load_dataset_csv(path)
        assert_array_equal(loaded.features, ds.features)
        assert_array_equal(loaded.labels, ds.labels)

    def test_missing_label_column(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.csv"
            path.write_text("f0,f1\n1,2\n")
            with self.assertRaises(FormatError):
                load_dataset_csv(path)


if __name__ == "__main__":
    unittest.main()
