#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_tasks
----------------------------------

Tests for `gtbench.tasks` module.
"""

import unittest

import numpy as np

from gtbench import tasks
from gtbench import graphkit
from gtbench.exceptions import InvalidInputError
from tests import helpers


class TestTasks(unittest.TestCase):

    def setUp(self):
        pass

    def tearDown(self):
        pass

    def test_get_task(self):
        spec = tasks.get_task(tasks.COMMUNITY_CLS)
        self.assertEqual('node', spec.level)
        self.assertEqual(3, spec.out_dim)
        self.assertFalse(spec.is_regression())
        self.assertTrue(tasks.get_task(tasks.TRIANGLE_COUNT_REG)
                        .is_regression())

    def test_get_task_unknown(self):
        try:
            tasks.get_task('foo')
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Unknown task: foo. Known tasks: bipartite-cls, '
                             'community-cls, connectivity-cls, '
                             'node-degree-reg, spd-to-anchor-reg, '
                             'substructure-ml, triangle-count-reg', str(e))

    def test_node_degrees(self):
        res = tasks.compute_targets(tasks.NODE_DEGREE_REG,
                                    helpers.path_graph(3))
        self.assertTrue(np.array_equal([1.0, 2.0, 1.0], res))

    def test_triangle_count(self):
        self.assertEqual(4, tasks.triangle_count(helpers.complete_graph(4)))
        self.assertEqual(0, tasks.triangle_count(helpers.path_graph(5)))
        self.assertEqual(1, tasks.triangle_count(helpers.cycle_graph(3)))

    def test_disjoint_edges(self):
        graph = graphkit.graph_from_edges(4, [[0, 1], [2, 3]])
        self.assertEqual(0, tasks.triangle_count(graph))
        self.assertFalse(tasks.is_connected(graph))
        self.assertTrue(tasks.is_bipartite(graph))
        self.assertFalse(tasks.has_isolated_node(graph))
        self.assertTrue(np.array_equal(
            [0, 0, 1, 0], tasks.compute_targets(tasks.SUBSTRUCTURE_ML, graph)))
        self.assertEqual(0, tasks.compute_targets(tasks.CONNECTIVITY_CLS,
                                                  graph))

    def test_bipartite(self):
        self.assertTrue(tasks.is_bipartite(helpers.cycle_graph(4)))
        self.assertFalse(tasks.is_bipartite(helpers.cycle_graph(5)))
        self.assertEqual(1, tasks.compute_targets(tasks.BIPARTITE_CLS,
                                                  helpers.path_graph(4)))

    def test_bipartite_over_components(self):
        n = 1200
        edges = [[i, i + 1] for i in range(n - 4)]
        self.assertTrue(tasks.is_bipartite(
            graphkit.graph_from_edges(n, edges)))
        edges += [[n - 3, n - 2], [n - 2, n - 1], [n - 1, n - 3]]
        self.assertFalse(tasks.is_bipartite(
            graphkit.graph_from_edges(n, edges)))

    def test_isolated_node(self):
        graph = graphkit.graph_from_edges(3, [[0, 1]])
        self.assertTrue(tasks.has_isolated_node(graph))
        self.assertTrue(tasks.is_connected(graphkit.graph_from_edges(1, [])))

    def test_spd_to_anchor(self):
        feats = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
        graph = graphkit.graph_from_edges(4, [[0, 1], [1, 2], [2, 3]],
                                          node_features=feats)
        self.assertEqual(1, tasks.anchor_of(graph))
        self.assertAlmostEqual(4.0 / 3.0, tasks.compute_targets(
            tasks.SPD_TO_ANCHOR_REG, graph))

    def test_spd_to_anchor_unreachable(self):
        feats = np.array([[1.0, 1.0], [1.0, 0.0]])
        graph = graphkit.graph_from_edges(2, [], node_features=feats)
        self.assertEqual(0.0, tasks.mean_anchor_spd(graph, 0))

    def test_spd_to_anchor_needs_flag(self):
        feats = np.ones((3, 2)) * [1.0, 0.0]
        graph = graphkit.graph_from_edges(3, [[0, 1]], node_features=feats)
        try:
            tasks.compute_targets(tasks.SPD_TO_ANCHOR_REG, graph)
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('spd-to-anchor-reg needs a flagged anchor node',
                             str(e))

    def test_gen_task_is_deterministic(self):
        first = tasks.gen_task(tasks.TRIANGLE_COUNT_REG, 5,
                               np.random.default_rng(9))
        second = tasks.gen_task(tasks.TRIANGLE_COUNT_REG, 5,
                                np.random.default_rng(9))
        for a, b in zip(first, second):
            self.assertTrue(np.array_equal(a.get_adjacency(),
                                           b.get_adjacency()))
            self.assertEqual(a.get_graph_label(), b.get_graph_label())

    def test_gen_task_graphs(self):
        rng = np.random.default_rng(4)
        for graph in tasks.gen_task(tasks.TRIANGLE_COUNT_REG, 10, rng):
            n = graph.get_num_nodes()
            self.assertTrue(tasks.MIN_NODES <= n <= tasks.MAX_NODES)
            self.assertEqual((n, 2), graph.get_node_features().shape)
            self.assertEqual(float(tasks.triangle_count(graph)),
                             float(graph.get_graph_label()))
            for vec in (graph.get_edge_features() or {}).values():
                self.assertEqual(1.0, vec[0])
                self.assertTrue(0.0 <= vec[1] < 1.0)

    def test_gen_task_anchor_flag(self):
        rng = np.random.default_rng(5)
        for graph in tasks.gen_task(tasks.SPD_TO_ANCHOR_REG, 10, rng):
            self.assertEqual(1.0, np.sum(graph.get_node_features()[:, 1]))

    def test_gen_task_node_labels(self):
        rng = np.random.default_rng(6)
        for graph in tasks.gen_task(tasks.NODE_DEGREE_REG, 5, rng):
            self.assertTrue(np.array_equal(
                np.sum(graph.get_adjacency(), axis=1),
                graph.get_node_labels()))

    def test_gen_task_communities(self):
        rng = np.random.default_rng(7)
        for graph in tasks.gen_task(tasks.COMMUNITY_CLS, 5, rng):
            labels = graph.get_node_labels()
            flags = graph.get_node_features()[:, 1]
            self.assertEqual({0, 1, 2}, set(labels.tolist()))
            for c in range(tasks.COMMUNITIES):
                flagged = np.flatnonzero(flags == c + 1)
                self.assertEqual(1, flagged.size)
                self.assertEqual(c, labels[flagged[0]])

    def test_split_of(self):
        self.assertEqual(tasks.split_of(17), tasks.split_of(17))
        counts = {split: 0 for split in tasks.SPLITS}
        for index in range(1000):
            counts[tasks.split_of(index)] += 1
        self.assertTrue(740 <= counts[tasks.TRAIN] <= 860)
        self.assertTrue(60 <= counts[tasks.VALID] <= 140)
        self.assertTrue(60 <= counts[tasks.TEST] <= 140)


if __name__ == '__main__':
    unittest.main()
