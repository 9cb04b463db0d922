# -*- coding: utf-8 -*-

"""
Synthetic benchmark tasks on random graphs with exact targets
"""

import logging
import hashlib
from collections import deque

import numpy as np

from gtbench import graphkit
from gtbench import metrics
from gtbench.graphkit import Graph
from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

NODE_DEGREE_REG = 'node-degree-reg'
SPD_TO_ANCHOR_REG = 'spd-to-anchor-reg'
TRIANGLE_COUNT_REG = 'triangle-count-reg'
CONNECTIVITY_CLS = 'connectivity-cls'
BIPARTITE_CLS = 'bipartite-cls'
SUBSTRUCTURE_ML = 'substructure-ml'
COMMUNITY_CLS = 'community-cls'

MIN_NODES = 6
MAX_NODES = 20
MIN_EDGE_PROB = 0.15
MAX_EDGE_PROB = 0.5

COMMUNITIES = 3
COMMUNITY_P_IN = 0.5
COMMUNITY_P_OUT = 0.05

SUBSTRUCTURE_LABELS = ('has-triangle', 'connected', 'bipartite',
                       'has-isolated-node')

TRAIN = 'train'
VALID = 'valid'
TEST = 'test'

SPLITS = (TRAIN, VALID, TEST)


class TaskSpec(object):
    """
    Static description of a task

    :param name: task name
    :type name: str
    :param level: ``graph`` or ``node``
    :type level: str
    :param metric: metric name from :py:mod:`gtbench.metrics`
    :type metric: str
    :param loss: loss name from :py:mod:`gtbench.metrics`
    :type loss: str
    :param out_dim: model output width
    :type out_dim: int
    :param target_scale: regression targets are divided by this
    :type target_scale: float
    """
    def __init__(self, name, level, metric, loss, out_dim,
                 target_scale=1.0):
        """
        Constructor
        """
        self.name = name
        self.level = level
        self.metric = metric
        self.loss = loss
        self.out_dim = out_dim
        self.target_scale = target_scale

    def is_regression(self):
        return self.loss == metrics.MAE

    def __repr__(self):
        return 'TaskSpec(' + self.name + ')'


TASKS = {
    NODE_DEGREE_REG: TaskSpec(NODE_DEGREE_REG, 'node', metrics.MAE,
                              metrics.MAE, 1, target_scale=19.0),
    SPD_TO_ANCHOR_REG: TaskSpec(SPD_TO_ANCHOR_REG, 'graph', metrics.MAE,
                                metrics.MAE, 1, target_scale=5.0),
    TRIANGLE_COUNT_REG: TaskSpec(TRIANGLE_COUNT_REG, 'graph', metrics.MAE,
                                 metrics.MAE, 1, target_scale=50.0),
    CONNECTIVITY_CLS: TaskSpec(CONNECTIVITY_CLS, 'graph', metrics.ROC_AUC,
                               metrics.BCE, 1),
    BIPARTITE_CLS: TaskSpec(BIPARTITE_CLS, 'graph', metrics.ROC_AUC,
                            metrics.BCE, 1),
    SUBSTRUCTURE_ML: TaskSpec(SUBSTRUCTURE_ML, 'graph', metrics.AP,
                              metrics.BCE, len(SUBSTRUCTURE_LABELS)),
    COMMUNITY_CLS: TaskSpec(COMMUNITY_CLS, 'node', metrics.ACCURACY,
                            metrics.CROSS_ENTROPY, COMMUNITIES)}
"""
Task name => :py:class:`TaskSpec`
"""


def get_task(name):
    """
    :raises InvalidInputError: If `name` is not a known task
    :rtype: :py:class:`TaskSpec`
    """
    if name not in TASKS:
        raise InvalidInputError('Unknown task: ' + str(name) +
                                '. Known tasks: ' + ', '.join(sorted(TASKS)))
    return TASKS[name]


def triangle_count(graph):
    """
    ``trace(A^3) / 6`` for an undirected graph
    """
    adj = graph.get_adjacency()
    return int(round(np.trace(np.matmul(np.matmul(adj, adj), adj)) / 6.0))


def is_connected(graph):
    n = graph.get_num_nodes()
    if n <= 1:
        return True
    spd = graphkit.spd_matrix(graph)
    return bool(np.all(spd[0] >= 0))


def is_bipartite(graph):
    """
    Two coloring by breadth first search over every component
    """
    n = graph.get_num_nodes()
    color = np.full(n, -1, dtype=np.int64)
    for start in range(n):
        if color[start] >= 0:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in graph.get_neighbors(u):
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    queue.append(w)
                elif color[w] == color[u]:
                    return False
    return True


def has_isolated_node(graph):
    indeg, outdeg = graphkit.degrees(graph)
    return bool(np.any((indeg + outdeg) == 0))


def anchor_of(graph):
    """
    Node whose second feature is set, ``None`` when no node is flagged
    """
    flags = np.flatnonzero(graph.get_node_features()[:, 1] > 0)
    if flags.size == 0:
        return None
    return int(flags[0])


def mean_anchor_spd(graph, anchor):
    """
    Mean shortest path distance from `anchor` to the other nodes it can
    reach, 0 when it reaches none
    """
    dist = graphkit.spd_matrix(graph)[anchor]
    reach = dist[(dist > 0)]
    if reach.size == 0:
        return 0.0
    return float(np.mean(reach))


def compute_targets(name, graph):
    """
    Exact targets of task `name` on `graph`.

    Node level tasks return one value per node, graph level regression
    and binary tasks return a scalar and ``substructure-ml`` returns one
    0/1 value per entry of :py:const:`SUBSTRUCTURE_LABELS`

    :raises InvalidInputError: If `name` is unknown or the graph lacks
                               the anchor flag needed by
                               ``spd-to-anchor-reg``
    """
    get_task(name)
    if name == NODE_DEGREE_REG:
        return graphkit.degrees(graph)[1].astype(np.float64)
    if name == SPD_TO_ANCHOR_REG:
        anchor = anchor_of(graph)
        if anchor is None:
            raise InvalidInputError('spd-to-anchor-reg needs a flagged '
                                    'anchor node')
        return mean_anchor_spd(graph, anchor)
    if name == TRIANGLE_COUNT_REG:
        return float(triangle_count(graph))
    if name == CONNECTIVITY_CLS:
        return int(is_connected(graph))
    if name == BIPARTITE_CLS:
        return int(is_bipartite(graph))
    if name == SUBSTRUCTURE_ML:
        return np.array([int(triangle_count(graph) > 0),
                         int(is_connected(graph)),
                         int(is_bipartite(graph)),
                         int(has_isolated_node(graph))])
    labels = graph.get_node_labels()
    if labels is None:
        raise InvalidInputError('community-cls labels come from the '
                                'generator')
    return labels


def _edge_records(upper, rng):
    """
    ``[i, j, [1.0, u]]`` records for the set entries of `upper`
    """
    rows, cols = np.nonzero(upper)
    weights = rng.random(rows.shape[0])
    return [[int(i), int(j), [1.0, float(u)]]
            for i, j, u in zip(rows, cols, weights)]


def erdos_renyi(rng, min_nodes=MIN_NODES, max_nodes=MAX_NODES,
                min_p=MIN_EDGE_PROB, max_p=MAX_EDGE_PROB):
    """
    Edge records of a random graph with ``n`` uniform in
    ``[min_nodes, max_nodes]`` and edge probability uniform in
    ``[min_p, max_p]``

    :return: ``(n, edge records)``
    """
    n = int(rng.integers(min_nodes, max_nodes + 1))
    p = rng.uniform(min_p, max_p)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return n, _edge_records(upper, rng)


def planted_partition(rng, min_nodes=MIN_NODES, max_nodes=MAX_NODES):
    """
    Random graph with :py:const:`COMMUNITIES` groups. One node per
    group carries the group number (1-based) as its second feature

    :return: ``(n, edge records, labels, flags)``
    """
    n = int(rng.integers(min_nodes, max_nodes + 1))
    labels = np.arange(n) % COMMUNITIES
    labels = labels[rng.permutation(n)]
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, COMMUNITY_P_IN, COMMUNITY_P_OUT)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    flags = np.zeros(n)
    for c in range(COMMUNITIES):
        members = np.flatnonzero(labels == c)
        flags[members[0]] = c + 1
    return n, _edge_records(upper, rng), labels, flags


def _make_graph(name, rng):
    if name == COMMUNITY_CLS:
        n, edges, labels, flags = planted_partition(rng)
        feats = np.stack([np.ones(n), flags], axis=1)
        return graphkit.graph_from_edges(n, edges, node_features=feats,
                                         node_labels=labels)
    n, edges = erdos_renyi(rng)
    flags = np.zeros(n)
    if name == SPD_TO_ANCHOR_REG:
        flags[int(rng.integers(0, n))] = 1.0
    feats = np.stack([np.ones(n), flags], axis=1)
    graph = graphkit.graph_from_edges(n, edges, node_features=feats)
    targets = compute_targets(name, graph)
    if get_task(name).level == 'node':
        return _with_labels(graph, node_labels=targets)
    return _with_labels(graph, graph_label=targets)


def _with_labels(graph, node_labels=None, graph_label=None):
    return Graph(graph.get_adjacency(),
                 node_features=graph.get_node_features(),
                 edge_features=graph.get_edge_features(),
                 directed=graph.is_directed(), node_labels=node_labels,
                 graph_label=graph_label)


def gen_task(name, n_instances, rng):
    """
    Generates `n_instances` labeled graphs for task `name`.

    Graph level targets are stored as the graph label and node level
    targets as node labels, both unscaled. Every node has features
    ``[1.0, flag]`` and every edge ``[1.0, u]`` with ``u`` uniform in
    ``[0, 1)``

    :param name: key of :py:const:`TASKS`
    :type name: str
    :param n_instances: number of graphs
    :type n_instances: int
    :param rng: random generator
    :type rng: :py:class:`numpy.random.Generator`
    :raises InvalidInputError: If `name` is unknown
    :return: graphs
    :rtype: list
    """
    get_task(name)
    graphs = [_make_graph(name, rng) for _ in range(n_instances)]
    LOGGER.debug('Generated ' + str(len(graphs)) + ' graphs for ' + name)
    return graphs


def split_of(index):
    """
    ``train``, ``valid`` or ``test`` from the SHA-256 of `index`, in
    80/10/10 proportion
    """
    digest = hashlib.sha256(str(int(index)).encode('utf-8')).hexdigest()
    bucket = int(digest, 16) % 10
    if bucket < 8:
        return TRAIN
    if bucket == 8:
        return VALID
    return TEST
