#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_metrics
----------------------------------

Tests for `gtbench.metrics` module.
"""

import unittest
from itertools import combinations

import numpy as np
from hypothesis import assume
from hypothesis import given
from hypothesis import strategies as st

from gtbench import metrics
from gtbench.exceptions import InvalidInputError
from gtbench.exceptions import UndefinedMetricError


def brute_force_ap(scores, labels):
    order = np.argsort(-scores, kind='stable')
    hits = labels[order]
    precisions = [np.mean(hits[:k + 1]) for k in range(hits.size)
                  if hits[k] == 1]
    return float(np.mean(precisions))


def brute_force_auc(scores, labels):
    wins = 0.0
    pairs = 0
    for i, j in combinations(range(scores.size), 2):
        if labels[i] == labels[j]:
            continue
        pos, neg = (i, j) if labels[i] == 1 else (j, i)
        pairs += 1
        if scores[pos] > scores[neg]:
            wins += 1.0
        elif scores[pos] == scores[neg]:
            wins += 0.5
    return wins / pairs


class TestMetrics(unittest.TestCase):

    def setUp(self):
        self._rng = np.random.default_rng(83)

    def tearDown(self):
        pass

    def test_losses(self):
        self.assertAlmostEqual(0.5, float(metrics.loss(metrics.MAE,
                                                       np.array([1.0, 2.0]),
                                                       [1.0, 3.0])))
        self.assertAlmostEqual(np.log(2.0),
                               float(metrics.loss(metrics.BCE,
                                                  np.zeros(3), [1, 0, 1])))
        self.assertAlmostEqual(np.log(4.0),
                               float(metrics.loss(metrics.CROSS_ENTROPY,
                                                  np.zeros((2, 4)), [0, 3])))

    def test_loss_skips_padding(self):
        res = metrics.loss(metrics.MAE, np.array([1.0, 100.0]), [0.0, 0.0],
                           pad_mask=[False, True])
        self.assertAlmostEqual(1.0, float(res))

    def test_unknown_loss(self):
        try:
            metrics.loss('hinge', np.zeros(2), np.zeros(2))
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Unknown loss: hinge', str(e))

    def test_mae(self):
        self.assertAlmostEqual(0.5, metrics.metric(metrics.MAE, [1.0, 2.0],
                                                   [1.0, 3.0]))
        self.assertRaises(InvalidInputError, metrics.metric, metrics.MAE,
                          [1.0, 2.0], [1.0])

    def test_roc_auc_example(self):
        self.assertAlmostEqual(0.5, metrics.roc_auc([0.9, 0.8, 0.3],
                                                    [1, 0, 1]))
        self.assertEqual(1.0, metrics.roc_auc([0.9, 0.8, 0.3, 0.1],
                                              [1, 1, 0, 0]))
        self.assertEqual(0.5, metrics.roc_auc([0.5, 0.5], [1, 0]))

    def test_roc_auc_single_class(self):
        try:
            metrics.roc_auc([0.1, 0.2], [1, 1])
            self.fail('Expected UndefinedMetricError')
        except UndefinedMetricError as e:
            self.assertEqual('ROC-AUC is undefined when only one class is '
                             'present', str(e))

    def test_binary_labels_required(self):
        try:
            metrics.roc_auc([0.1, 0.2], [0, 2])
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Binary metrics need 0/1 labels', str(e))

    def test_roc_auc_matches_pair_count(self):
        for _ in range(20):
            n = int(self._rng.integers(2, 15))
            scores = np.round(self._rng.random(n), 1)
            labels = np.arange(n) % 2
            labels = labels[self._rng.permutation(n)]
            self.assertAlmostEqual(brute_force_auc(scores, labels),
                                   metrics.roc_auc(scores, labels))

    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 1)),
                    min_size=2, max_size=20))
    def test_roc_auc_label_flip(self, pairs):
        scores = np.array([float(s) for s, _ in pairs])
        labels = np.array([y for _, y in pairs])
        assume(0 < np.sum(labels) < labels.size)
        auc = metrics.roc_auc(scores, labels)
        self.assertTrue(0.0 <= auc <= 1.0)
        self.assertAlmostEqual(1.0 - auc, metrics.roc_auc(scores, 1 - labels))

    def test_ap_example(self):
        self.assertAlmostEqual((1.0 + 2.0 / 3.0) / 2.0,
                               metrics.average_precision([0.9, 0.8, 0.3],
                                                         [1, 0, 1]))

    def test_ap_matches_brute_force(self):
        for _ in range(20):
            n = int(self._rng.integers(2, 15))
            scores = self._rng.random(n)
            labels = np.arange(n) % 2
            labels = labels[self._rng.permutation(n)]
            self.assertAlmostEqual(brute_force_ap(scores, labels),
                                   metrics.average_precision(scores, labels))

    def test_ranking_metrics_ignore_monotone_transforms(self):
        scores = self._rng.normal(size=30)
        labels = (self._rng.random(30) > 0.5).astype(int)
        labels[:2] = [0, 1]
        for kind in (metrics.ROC_AUC, metrics.AP):
            self.assertAlmostEqual(metrics.metric(kind, scores, labels),
                                   metrics.metric(kind, np.exp(scores) + 3.0,
                                                  labels))

    def test_ap_single_class(self):
        self.assertRaises(UndefinedMetricError, metrics.average_precision,
                          [0.1, 0.2], [0, 0])

    def test_accuracy(self):
        self.assertAlmostEqual(2.0 / 3.0, metrics.accuracy([0, 1, 1],
                                                           [0, 1, 0]))
        logits = np.array([[2.0, 1.0], [0.0, 3.0], [1.0, 0.0]])
        self.assertAlmostEqual(2.0 / 3.0, metrics.metric(metrics.ACCURACY,
                                                         logits, [0, 1, 1]))
        self.assertRaises(UndefinedMetricError, metrics.accuracy, [], [])

    def test_accuracy_shape_mismatch(self):
        try:
            metrics.accuracy([0, 1], [0, 1, 1])
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Prediction shape (2,) does not match labels '
                             '(3,)', str(e))

    def test_multilabel_skips_single_class_columns(self):
        scores = np.array([[0.9, 0.1], [0.2, 0.3], [0.8, 0.4]])
        labels = np.array([[0, 1], [0, 1], [1, 1]])
        self.assertAlmostEqual(0.5, metrics.metric(metrics.ROC_AUC, scores,
                                                   labels))
        try:
            metrics.metric(metrics.AP, scores, np.ones((3, 2)))
            self.fail('Expected UndefinedMetricError')
        except UndefinedMetricError as e:
            self.assertEqual('No label column has both classes', str(e))

    def test_unknown_metric(self):
        try:
            metrics.metric('f1', [1], [1])
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Unknown metric: f1', str(e))

    def test_higher_is_better(self):
        self.assertFalse(metrics.HIGHER_IS_BETTER[metrics.MAE])
        self.assertTrue(metrics.HIGHER_IS_BETTER[metrics.AP])


if __name__ == '__main__':
    unittest.main()
