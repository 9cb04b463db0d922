# -*- coding: utf-8 -*-

"""
Shared fixtures for the test suite
"""

import os
from collections import OrderedDict

import numpy as np

from gtbench import tape
from gtbench import graphkit


def get_data_dir():
    return os.path.join(os.path.dirname(__file__), 'data')


def path_graph(n):
    edges = [[i, i + 1] for i in range(n - 1)]
    return graphkit.graph_from_edges(n, edges)


def cycle_graph(n):
    edges = [[i, (i + 1) % n] for i in range(n)]
    return graphkit.graph_from_edges(n, edges)


def complete_graph(n):
    edges = [[i, j] for i in range(n) for j in range(i + 1, n)]
    return graphkit.graph_from_edges(n, edges)


def random_graph(rng, n, p=0.4, feature_dim=3, edge_dim=0):
    """
    Undirected random graph with normal node features and, when
    `edge_dim` is positive, uniform edge features
    """
    upper = np.triu(rng.random((n, n)) < p, k=1)
    rows, cols = np.nonzero(upper)
    edges = []
    for i, j in zip(rows, cols):
        if edge_dim > 0:
            edges.append([int(i), int(j), list(rng.random(edge_dim))])
        else:
            edges.append([int(i), int(j)])
    feats = rng.normal(size=(n, feature_dim))
    return graphkit.graph_from_edges(n, edges, node_features=feats)


def connected_random_graph(rng, n, p=0.4, feature_dim=3, edge_dim=0):
    """
    :py:func:`random_graph` plus a spanning path so every node is
    reachable
    """
    graph = random_graph(rng, n, p=p, feature_dim=feature_dim,
                         edge_dim=edge_dim)
    adj = graph.get_adjacency().copy()
    feats = dict(graph.get_edge_features() or {})
    for i in range(n - 1):
        if adj[i, i + 1] == 0:
            adj[i, i + 1] = adj[i + 1, i] = 1
            if edge_dim > 0:
                vec = rng.random(edge_dim)
                feats[(i, i + 1)] = vec
                feats[(i + 1, i)] = vec
    return graphkit.Graph(adj, node_features=graph.get_node_features(),
                          edge_features=feats if edge_dim > 0 else None)


def gradient_check(func, params, rng, eps=1e-6, entries=4):
    """
    Compares tape gradients of scalar valued ``func(values)`` against
    central differences on up to `entries` random elements of every
    parameter

    :param func: maps name => value (array or Var) to a scalar
    :param params: name => array
    :return: largest relative error over the checked elements
    :rtype: float
    """
    tp = tape.Tape()
    variables = OrderedDict((k, tp.variable(v, name=k))
                            for k, v in params.items())
    out = func(variables)
    grads = tape.named_gradients(tape.backward(tp, out), variables)
    worst = 0.0
    for name, value in params.items():
        flat = np.arange(value.size)
        if value.size > entries:
            flat = rng.choice(value.size, size=entries, replace=False)
        for idx in flat:
            pos = np.unravel_index(idx, value.shape)
            plus = OrderedDict((k, v.copy()) for k, v in params.items())
            minus = OrderedDict((k, v.copy()) for k, v in params.items())
            plus[name][pos] += eps
            minus[name][pos] -= eps
            numeric = (float(func(plus)) - float(func(minus))) / (2 * eps)
            analytic = float(grads[name][pos])
            scale = max(abs(numeric), abs(analytic), 1e-4)
            worst = max(worst, abs(numeric - analytic) / scale)
    return worst
