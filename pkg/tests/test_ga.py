#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_ga
----------------------------------

Tests for `gtbench.ga` module.
"""

import unittest
from collections import OrderedDict

import numpy as np

from gtbench import ga
from gtbench import tape
from gtbench import txcore
from gtbench.graphkit import StructCache
from gtbench.exceptions import InvalidInputError
from tests import helpers


def tiny_config():
    return txcore.ModelConfig(2, 8, 8, 2, 4)


def zeroed(p):
    return p.with_values({k: np.zeros_like(v) for k, v in p.values.items()})


class TestGa(unittest.TestCase):

    def setUp(self):
        self._rng = np.random.default_rng(53)

    def tearDown(self):
        pass

    def test_graph_operators_gcn_adjacency(self):
        ops = ga.GraphOperators.from_cache(StructCache(helpers.path_graph(3)))
        self.assertAlmostEqual(1.0 / np.sqrt(6.0), ops.a_hat[0, 1])
        self.assertAlmostEqual(1.0 / 3.0, ops.a_hat[1, 1])
        self.assertEqual(0.0, ops.a_hat[0, 2])
        self.assertTrue(ops.keep[1, 1])
        self.assertFalse(ops.keep[0, 2])

    def test_params_validation(self):
        try:
            ga.GAParams('serial', ga.GCN)
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Unknown GA pattern: serial', str(e))
        try:
            ga.GAParams(ga.BEFORE, 'sage')
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Unknown GNN kind: sage', str(e))
        self.assertRaises(InvalidInputError, ga.GAParams, ga.BEFORE, ga.GCN,
                          n_gnn_layers=0)
        self.assertRaises(InvalidInputError, ga.GAParams, ga.BEFORE, ga.GCN,
                          activation='swish')

    def test_init_param_names(self):
        p = ga.init_ga_params(ga.BEFORE, ga.GCN, 8, 3, self._rng,
                              n_gnn_layers=2)
        self.assertEqual(['gnn0.w', 'gnn1.w'], sorted(p.values.keys()))
        p = ga.init_ga_params(ga.ALTERNATE, ga.GIN, 8, 3, self._rng)
        self.assertEqual(15, len(p.values))
        self.assertEqual(['b1', 'b2', 'eps', 'w1', 'w2'],
                         sorted(p.layer_values(2).keys()))
        p = ga.init_ga_params(ga.PARALLEL, ga.GCN, 8, 3, self._rng)
        self.assertEqual(['w_r0', 'w_r1', 'w_r2'], sorted(p.values.keys()))

    def test_gcn_layer(self):
        sc = StructCache(helpers.path_graph(4))
        ops = ga.GraphOperators.from_cache(sc)
        x = self._rng.normal(size=(4, 8))
        w = self._rng.normal(size=(8, 8))
        res = ga.gnn_layer(ops, x, {'w': w}, ga.GCN)
        expected = np.maximum(sc.get_gcn_adjacency() @ x @ w, 0.0)
        self.assertTrue(np.allclose(expected, res))

    def test_gin_layer(self):
        graph = helpers.cycle_graph(5)
        ops = ga.GraphOperators.from_cache(StructCache(graph))
        x = self._rng.normal(size=(5, 8))
        values = ga.init_gnn_layer(ga.GIN, 8, self._rng)
        values['eps'] = np.array([0.5])
        res = ga.gnn_layer(ops, x, values, ga.GIN, activation='gelu')
        agg = 1.5 * x + graph.get_adjacency() @ x
        hidden = np.maximum(agg @ values['w1'] + values['b1'], 0.0)
        expected = tape.gelu(hidden @ values['w2'] + values['b2'])
        self.assertTrue(np.allclose(expected, res))

    def test_gat_lite_attends_to_neighbors_and_self(self):
        graph = helpers.path_graph(3)
        ops = ga.GraphOperators.from_cache(StructCache(graph))
        x = self._rng.normal(size=(3, 8))
        values = ga.init_gnn_layer(ga.GAT_LITE, 8, self._rng)
        res = ga.gnn_layer(ops, x, values, ga.GAT_LITE, activation='gelu')
        h = x @ values['w']
        src = (h @ values['a_src'])[:, 0]
        dst = (h @ values['a_dst'])[:, 0]
        for i, support in ((0, [0, 1]), (1, [0, 1, 2]), (2, [1, 2])):
            scores = src[i] + dst[support]
            scores = np.where(scores > 0, scores, ga.GAT_SLOPE * scores)
            alpha = np.exp(scores - np.max(scores))
            alpha = alpha / np.sum(alpha)
            expected = tape.gelu(alpha @ h[support])
            self.assertTrue(np.allclose(expected, res[i]))

    def test_gnn_layer_node_count_mismatch(self):
        ops = ga.GraphOperators.from_cache(StructCache(helpers.path_graph(3)))
        try:
            ga.gnn_layer(ops, np.zeros((4, 8)), {'w': np.zeros((8, 8))},
                         ga.GCN)
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('Node count 4 does not match graph size 3',
                             str(e))

    def test_zero_gnn_weights_reduce_to_vanilla(self):
        cfg = tiny_config()
        graph = helpers.random_graph(self._rng, 6, feature_dim=8)
        ops = ga.GraphOperators.from_cache(StructCache(graph))
        x = graph.get_node_features()
        layers = [txcore.init_layer_params(cfg, self._rng)
                  for _ in range(cfg.layers)]
        vanilla = txcore.model_forward(x, layers, cfg)
        for kind in ga.GNN_KINDS:
            before = zeroed(ga.init_ga_params(ga.BEFORE, kind, 8, 2,
                                              self._rng))
            res = ga.compose_before(ops, x, before, layers, cfg)
            self.assertTrue(np.allclose(vanilla, res, atol=1e-12))
            alternate = zeroed(ga.init_ga_params(ga.ALTERNATE, kind, 8, 2,
                                                 self._rng))
            res = ga.compose_alternate(ops, x, alternate, layers, cfg)
            self.assertTrue(np.allclose(vanilla, res, atol=1e-12))
        parallel = zeroed(ga.init_ga_params(ga.PARALLEL, ga.GCN, 8, 2,
                                            self._rng))
        res = ga.compose_parallel(ops, x, self._rng.normal(size=(6, 8)),
                                  parallel, layers, cfg)
        self.assertTrue(np.allclose(vanilla, res, atol=1e-12))

    def test_compose_dispatches_on_pattern(self):
        cfg = tiny_config()
        graph = helpers.connected_random_graph(self._rng, 5, feature_dim=8)
        ops = ga.GraphOperators.from_cache(StructCache(graph))
        x = graph.get_node_features()
        x_proj = self._rng.normal(size=(5, 8))
        layers = [txcore.init_layer_params(cfg, self._rng)
                  for _ in range(cfg.layers)]
        before = ga.init_ga_params(ga.BEFORE, ga.GIN, 8, 2, self._rng)
        self.assertTrue(np.allclose(
            ga.compose_before(ops, x, before, layers, cfg),
            ga.compose(ops, x, before, layers, cfg, x_proj=x_proj)))
        alternate = ga.init_ga_params(ga.ALTERNATE, ga.GCN, 8, 2, self._rng)
        self.assertTrue(np.allclose(
            ga.compose_alternate(ops, x, alternate, layers, cfg),
            ga.compose(ops, x, alternate, layers, cfg)))
        parallel = ga.init_ga_params(ga.PARALLEL, ga.GCN, 8, 2, self._rng)
        self.assertTrue(np.allclose(
            ga.compose_parallel(ops, x, x_proj, parallel, layers, cfg),
            ga.compose(ops, x, parallel, layers, cfg, x_proj=x_proj)))
        self.assertTrue(np.allclose(
            ga.compose_parallel(ops, x, x, parallel, layers, cfg),
            ga.compose(ops, x, parallel, layers, cfg)))

    def test_compose_pattern_checks(self):
        cfg = tiny_config()
        ops = ga.GraphOperators.from_cache(StructCache(helpers.path_graph(3)))
        p = ga.init_ga_params(ga.ALTERNATE, ga.GCN, 8, 2, self._rng)
        try:
            ga.compose_before(ops, np.zeros((3, 8)), p, [], cfg)
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('compose_before needs the before pattern', str(e))
        parallel = ga.init_ga_params(ga.PARALLEL, ga.GCN, 8, 2, self._rng)
        try:
            ga.block_branches(ops, parallel, 2)
            self.fail('Expected InvalidInputError')
        except InvalidInputError as e:
            self.assertEqual('parallel pattern needs projected raw features',
                             str(e))
        self.assertEqual([None, None],
                         ga.block_branches(ops, ga.init_ga_params(
                             ga.BEFORE, ga.GCN, 8, 2, self._rng), 2))

    def test_alternate_gat_lite_gradients(self):
        cfg = tiny_config()
        rng = self._rng
        graph = helpers.connected_random_graph(rng, 5, feature_dim=8)
        ops = ga.GraphOperators.from_cache(StructCache(graph))
        p = ga.init_ga_params(ga.ALTERNATE, ga.GAT_LITE, 8, 2, rng,
                              activation='gelu')
        params = OrderedDict()
        for l in range(cfg.layers):
            params.update(txcore.init_layer_params(cfg, rng)
                          .as_dict(prefix='layer' + str(l) + '.'))
        params.update(p.values)
        params['x'] = graph.get_node_features().copy()
        weights = rng.normal(size=8)

        def func(v):
            layers = [txcore.LayerParams.from_dict(v, prefix='layer' +
                                                   str(l) + '.')
                      for l in range(cfg.layers)]
            gp = p.with_values({k: v[k] for k in p.values})
            out = ga.compose_alternate(ops, v['x'], gp, layers, cfg,
                                       readout_tag=txcore.MEAN_READOUT)
            return tape.sum_all(tape.mul(out, weights))

        self.assertLess(helpers.gradient_check(func, params, rng, entries=3),
                        1e-4)


if __name__ == '__main__':
    unittest.main()
