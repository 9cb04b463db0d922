# -*- coding: utf-8 -*-

import os
import json
import logging
from collections import deque
from collections import namedtuple
from json.decoder import JSONDecodeError

import numpy as np

from gtbench import numkit
from gtbench.exceptions import InvalidInputError
from gtbench.exceptions import GraphParseError
from gtbench.exceptions import MalformedRecordError
from gtbench.exceptions import UnknownNodeError
from gtbench.exceptions import AsymmetricAdjacencyError

LOGGER = logging.getLogger(__name__)

JSON_FORMAT = 'json'
"""
Format tag for the JSON dataset document
"""

CX2_FORMAT = 'cx2'
"""
Format tag for a single CX2 network document
"""

P_STEP_RW_KERNEL = 'p-step-rw'

DIFFUSION_KERNEL = 'diffusion'

RANDOM_WALK_GAMMA = 0.5
"""
Step size in ``I - gamma L`` for the p-step random walk kernel
"""

NONTRIVIAL_EIGENVALUE = 1e-8
"""
Laplacian eigenvalues at or below this are treated as trivial
"""

Subgraph = namedtuple('Subgraph', ['nodes', 'graph', 'target_index'])
Subgraph.__doc__ = """
Induced subgraph around a sampled root. ``nodes`` lists the original
node ids in ascending order, ``graph`` is the induced :py:class:`Graph`
and ``target_index`` is the position of the root within ``nodes``
"""


class Graph(object):
    """
    Immutable graph with dense 0/1 adjacency, raw node features and
    optional edge features.

    Self-loops are never stored. For undirected graphs the adjacency is
    symmetric and every edge feature is reachable under both ``(i, j)``
    and ``(j, i)``

    :param adjacency: n x n matrix of 0/1 values
    :type adjacency: :py:class:`numpy.ndarray`
    :param node_features: n x d_in matrix, defaults to a column of ones
    :type node_features: :py:class:`numpy.ndarray`
    :param edge_features: ``(i, j) => vector`` for every edge or ``None``
    :type edge_features: dict
    :param directed: ``True`` if edges are directed
    :type directed: bool
    :param node_labels: optional per node labels
    :param graph_label: optional graph label (scalar or vector)
    :raises InvalidInputError: If shapes are inconsistent
    :raises AsymmetricAdjacencyError: If `directed` is ``False`` and
                                      `adjacency` is not symmetric
    """
    def __init__(self, adjacency, node_features=None, edge_features=None,
                 directed=False, node_labels=None, graph_label=None):
        """
        Constructor
        """
        adj = numkit.as_matrix(adjacency, name='adjacency')
        n = adj.shape[0]
        if adj.shape[1] != n:
            raise InvalidInputError('adjacency must be square, got ' +
                                    str(adj.shape))
        if not np.all((adj == 0.0) | (adj == 1.0)):
            raise InvalidInputError('adjacency must hold only 0 and 1')
        if n > 0 and np.any(np.diag(adj) != 0.0):
            raise InvalidInputError('adjacency must not hold self-loops')
        if not directed and not np.array_equal(adj, adj.T):
            raise AsymmetricAdjacencyError('Undirected graph has an '
                                           'asymmetric adjacency')
        if node_features is None:
            node_features = np.ones((n, 1))
        feats = numkit.as_matrix(node_features, name='node_features')
        if feats.shape[0] != n:
            raise InvalidInputError('Expected ' + str(n) +
                                    ' node feature rows, got ' +
                                    str(feats.shape[0]))
        self._n = n
        self._directed = bool(directed)
        self._adjacency = adj
        self._adjacency.setflags(write=False)
        self._node_features = feats
        self._node_features.setflags(write=False)
        self._edge_features = None
        if edge_features is not None:
            self._edge_features = self._check_edge_features(edge_features)
        self._node_labels = None
        if node_labels is not None:
            self._node_labels = np.asarray(node_labels)
            if self._node_labels.shape[0] != n:
                raise InvalidInputError('Expected ' + str(n) +
                                        ' node labels, got ' +
                                        str(self._node_labels.shape[0]))
        self._graph_label = None
        if graph_label is not None:
            self._graph_label = np.asarray(graph_label)

    def _check_edge_features(self, edge_features):
        feats = dict()
        dim = None
        for (i, j), vec in edge_features.items():
            vec = np.array(vec, dtype=np.float64).reshape(-1)
            numkit.check_finite(vec, name='edge feature')
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise InvalidInputError('Edge feature vectors must share '
                                        'one length')
            feats[(int(i), int(j))] = vec
        if not self._directed:
            for (i, j) in list(feats.keys()):
                other = feats.get((j, i))
                if other is None:
                    feats[(j, i)] = feats[(i, j)]
                elif not np.array_equal(other, feats[(i, j)]):
                    raise AsymmetricAdjacencyError(
                        'Edge ' + str((i, j)) + ' has different features '
                        'in each direction')
        keys = set(feats.keys())
        edges = set(zip(*[idx.tolist() for idx in
                          np.nonzero(self._adjacency)]))
        if keys != edges:
            raise InvalidInputError('Edge feature keys must equal the '
                                    'edge set')
        return feats

    def get_num_nodes(self):
        return self._n

    def is_directed(self):
        return self._directed

    def get_adjacency(self):
        """
        Gets read-only adjacency matrix

        :return: n x n 0/1 matrix
        :rtype: :py:class:`numpy.ndarray`
        """
        return self._adjacency

    def get_node_features(self):
        return self._node_features

    def get_node_feature_dim(self):
        return self._node_features.shape[1]

    def has_edge_features(self):
        return self._edge_features is not None

    def get_edge_feature_dim(self):
        """
        Gets length of edge feature vectors

        :return: length or 0 when graph has no edge features
        :rtype: int
        """
        if not self._edge_features:
            return 0
        return len(next(iter(self._edge_features.values())))

    def get_edge_features(self):
        return self._edge_features

    def get_edge_feature(self, i, j):
        if self._edge_features is None:
            return None
        return self._edge_features.get((i, j))

    def get_node_labels(self):
        return self._node_labels

    def get_graph_label(self):
        return self._graph_label

    def get_edges(self):
        """
        Gets edges as sorted list of ``(src, dst)`` tuples. Undirected
        edges are listed once with ``src < dst``

        :rtype: list
        """
        rows, cols = np.nonzero(self._adjacency)
        edges = []
        for i, j in zip(rows.tolist(), cols.tolist()):
            if self._directed or i < j:
                edges.append((i, j))
        return edges

    def get_out_neighbors(self, i):
        return np.flatnonzero(self._adjacency[i]).tolist()

    def get_neighbors(self, i):
        """
        Gets ascending ids of nodes linked to `i` in either direction
        """
        linked = (self._adjacency[i] + self._adjacency[:, i]) > 0
        return np.flatnonzero(linked).tolist()

    def permute(self, perm):
        """
        Relabels nodes so new node ``k`` is old node ``perm[k]``

        :param perm: permutation of ``range(n)``
        :return: relabeled graph
        :rtype: :py:class:`Graph`
        """
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self._n)):
            raise InvalidInputError('Not a permutation of ' + str(self._n) +
                                    ' nodes')
        inv = np.argsort(perm)
        edge_features = None
        if self._edge_features is not None:
            edge_features = {(int(inv[i]), int(inv[j])): vec
                             for (i, j), vec in self._edge_features.items()}
        node_labels = None
        if self._node_labels is not None:
            node_labels = self._node_labels[perm]
        return Graph(self._adjacency[np.ix_(perm, perm)],
                     node_features=self._node_features[perm],
                     edge_features=edge_features,
                     directed=self._directed,
                     node_labels=node_labels,
                     graph_label=self._graph_label)

    def induced_subgraph(self, nodes):
        """
        Graph induced by `nodes`, kept in the order given

        :param nodes: original node ids
        :type nodes: list
        :rtype: :py:class:`Graph`
        """
        nodes = list(nodes)
        pos = {v: k for k, v in enumerate(nodes)}
        edge_features = None
        if self._edge_features is not None:
            edge_features = dict()
            for (i, j), vec in self._edge_features.items():
                if i in pos and j in pos:
                    edge_features[(pos[i], pos[j])] = vec
        node_labels = None
        if self._node_labels is not None:
            node_labels = self._node_labels[nodes]
        return Graph(self._adjacency[np.ix_(nodes, nodes)],
                     node_features=self._node_features[nodes],
                     edge_features=edge_features,
                     directed=self._directed,
                     node_labels=node_labels,
                     graph_label=self._graph_label)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self._directed != other._directed or self._n != other._n:
            return False
        if not np.array_equal(self._adjacency, other._adjacency):
            return False
        if not np.array_equal(self._node_features, other._node_features):
            return False
        if (self._edge_features is None) != (other._edge_features is None):
            return False
        if self._edge_features is not None:
            if set(self._edge_features) != set(other._edge_features):
                return False
            for key, vec in self._edge_features.items():
                if not np.array_equal(vec, other._edge_features[key]):
                    return False
        for mine, theirs in ((self._node_labels, other._node_labels),
                             (self._graph_label, other._graph_label)):
            if (mine is None) != (theirs is None):
                return False
            if mine is not None and not np.array_equal(mine, theirs):
                return False
        return True

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    def __repr__(self):
        return 'Graph(n=' + str(self._n) + ', edges=' +\
               str(len(self.get_edges())) + ', directed=' +\
               str(self._directed) + ')'


def graph_from_edges(num_nodes, edges, directed=False, node_features=None,
                     node_labels=None, graph_label=None):
    """
    Builds a :py:class:`Graph` from an edge list. Each edge is
    ``[src, dst]`` or ``[src, dst, feature_vector]``. Undirected edges
    may be listed once or in both directions

    :param num_nodes: node count
    :type num_nodes: int
    :param edges: edge records
    :type edges: list
    :param directed: ``True`` for directed graphs
    :type directed: bool
    :raises UnknownNodeError: If an edge references a missing node
    :raises MalformedRecordError: For self-loops, records of the wrong
                                  length or features on only some edges
    :raises AsymmetricAdjacencyError: If both directions of an
                                      undirected edge carry different
                                      features
    :return: graph
    :rtype: :py:class:`Graph`
    """
    try:
        n = int(num_nodes)
    except (TypeError, ValueError):
        raise MalformedRecordError('num_nodes must be an integer, got ' +
                                   str(num_nodes))
    if n < 0:
        raise MalformedRecordError('num_nodes must be nonnegative')
    adj = np.zeros((n, n))
    edge_features = dict()
    with_features = None
    for rec in edges:
        if not isinstance(rec, (list, tuple)) or len(rec) not in (2, 3):
            raise MalformedRecordError('Edge record must be [src, dst] or '
                                       '[src, dst, features]: ' + str(rec))
        try:
            src = int(rec[0])
            dst = int(rec[1])
        except (TypeError, ValueError):
            raise MalformedRecordError('Edge endpoints must be integers: ' +
                                       str(rec))
        for node in (src, dst):
            if node < 0 or node >= n:
                raise UnknownNodeError('Edge ' + str([src, dst]) +
                                       ' references unknown node ' +
                                       str(node) + ' in graph with ' +
                                       str(n) + ' nodes')
        if src == dst:
            raise MalformedRecordError('Self-loop on node ' + str(src) +
                                       ' is not allowed')
        has_feats = len(rec) == 3
        if with_features is None:
            with_features = has_feats
        elif with_features != has_feats:
            raise MalformedRecordError('Either every edge or no edge must '
                                       'carry features')
        adj[src, dst] = 1.0
        if not directed:
            adj[dst, src] = 1.0
        if has_feats:
            try:
                vec = np.array(rec[2], dtype=np.float64).reshape(-1)
            except (TypeError, ValueError):
                raise MalformedRecordError('Edge features must be numeric: '
                                           + str(rec))
            key = (src, dst)
            if key in edge_features and\
                    not np.array_equal(edge_features[key], vec):
                raise MalformedRecordError('Edge ' + str([src, dst]) +
                                           ' listed twice with different '
                                           'features')
            edge_features[key] = vec
            if not directed:
                rev = (dst, src)
                if rev in edge_features and\
                        not np.array_equal(edge_features[rev], vec):
                    raise AsymmetricAdjacencyError(
                        'Edge ' + str([src, dst]) + ' has different '
                        'features in each direction')
    if not with_features:
        edge_features = None
    elif not directed:
        for (src, dst) in list(edge_features.keys()):
            edge_features[(dst, src)] = edge_features[(src, dst)]
    try:
        return Graph(adj, node_features=node_features,
                     edge_features=edge_features, directed=directed,
                     node_labels=node_labels, graph_label=graph_label)
    except InvalidInputError as e:
        raise MalformedRecordError(str(e))


def _parse_graph_record(record, directed, index):
    if not isinstance(record, dict):
        raise MalformedRecordError('Graph ' + str(index) +
                                   ' is not an object')
    for field in ('num_nodes', 'edges', 'node_features'):
        if field not in record:
            raise MalformedRecordError('Graph ' + str(index) +
                                       ' is missing field ' + field)
    try:
        feats = np.array(record['node_features'], dtype=np.float64)
    except (TypeError, ValueError):
        raise MalformedRecordError('Graph ' + str(index) +
                                   ' has non-numeric node_features')
    if feats.ndim == 1 and feats.shape[0] == 0:
        feats = feats.reshape(0, 1)
    if feats.ndim != 2:
        raise MalformedRecordError('Graph ' + str(index) +
                                   ' node_features must be a list of '
                                   'equal length vectors')
    try:
        return graph_from_edges(record['num_nodes'], record['edges'],
                                directed=directed,
                                node_features=feats,
                                node_labels=record.get('node_labels'),
                                graph_label=record.get('graph_label'))
    except GraphParseError as e:
        raise type(e)('Graph ' + str(index) + ': ' + str(e))
    except InvalidInputError as e:
        raise MalformedRecordError('Graph ' + str(index) + ': ' + str(e))


def _load_json(path):
    with open(path, 'r') as f:
        try:
            doc = json.load(f)
        except JSONDecodeError as e:
            raise MalformedRecordError('Unable to parse ' + str(path) +
                                       ': ' + str(e))
    if not isinstance(doc, dict) or 'graphs' not in doc:
        raise MalformedRecordError('Expected object with graphs field '
                                   'in ' + str(path))
    directed = doc.get('directed', False)
    if not isinstance(directed, bool):
        raise MalformedRecordError('directed must be true or false')
    if not isinstance(doc['graphs'], list):
        raise MalformedRecordError('graphs must be a list')
    graphs = []
    for index, record in enumerate(doc['graphs']):
        graphs.append(_parse_graph_record(record, directed, index))
    LOGGER.debug('Loaded ' + str(len(graphs)) + ' graphs from ' + str(path))
    return graphs


def _numeric_attributes(values):
    """
    Names of attributes in `values` that hold numbers, booleans excluded
    """
    names = set()
    for name, val in values.items():
        if isinstance(val, bool):
            continue
        if isinstance(val, (int, float)):
            names.add(name)
    return names


def _load_cx2(path, directed):
    # ndex2 is only needed for this format
    from ndex2 import constants
    from ndex2.cx2 import RawCX2NetworkFactory

    factory = RawCX2NetworkFactory()
    try:
        net_cx = factory.get_cx2network(path)
    except (JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise MalformedRecordError('Unable to parse CX2 file ' + str(path) +
                                   ': ' + str(e))
    node_ids = list(net_cx.get_nodes().keys())
    pos = {node_id: k for k, node_id in enumerate(node_ids)}
    node_values = [net_cx.get_nodes()[node_id].get(constants.ASPECT_VALUES,
                                                    {})
                   for node_id in node_ids]
    node_attrs = set()
    for values in node_values:
        node_attrs.update(_numeric_attributes(values))
    node_attrs = sorted(node_attrs)
    if node_attrs:
        feats = [[float(values.get(name, 0.0)) for name in node_attrs]
                 for values in node_values]
    else:
        feats = np.ones((len(node_ids), 1))
    edge_objs = list(net_cx.get_edges().values())
    edge_attrs = set()
    for edge_obj in edge_objs:
        edge_attrs.update(_numeric_attributes(
            edge_obj.get(constants.ASPECT_VALUES, {})))
    edge_attrs = sorted(edge_attrs)
    edges = []
    for edge_obj in edge_objs:
        src = edge_obj['s']
        dst = edge_obj['t']
        for node_id in (src, dst):
            if node_id not in pos:
                raise UnknownNodeError('Edge ' + str([src, dst]) +
                                       ' references unknown node ' +
                                       str(node_id))
        rec = [pos[src], pos[dst]]
        if edge_attrs:
            values = edge_obj.get(constants.ASPECT_VALUES, {})
            rec.append([float(values.get(name, 0.0)) for name in edge_attrs])
        edges.append(rec)
    return [graph_from_edges(len(node_ids), edges, directed=directed,
                             node_features=feats)]


def load_graph(path, format_tag=JSON_FORMAT, directed=False):
    """
    Reads graphs from `path`.

    For :py:const:`JSON_FORMAT` the document holds ``directed`` and a
    ``graphs`` list, each graph with ``num_nodes``, ``edges``,
    ``node_features`` and optional ``node_labels`` and ``graph_label``.

    For :py:const:`CX2_FORMAT` the file is a CX2 network read with
    :py:class:`ndex2.cx2.RawCX2NetworkFactory`. Numeric node attributes,
    sorted by name, become node features (a constant column of ones when
    there are none) and numeric edge attributes become edge features

    :param path: Path to file
    :type path: str
    :param format_tag: :py:const:`JSON_FORMAT` or :py:const:`CX2_FORMAT`
    :type format_tag: str
    :param directed: Only used for :py:const:`CX2_FORMAT`
    :type directed: bool
    :raises GraphParseError: or one of its subclasses if the file
                             cannot be interpreted
    :raises InvalidInputError: If `format_tag` is unknown
    :return: graphs in file order
    :rtype: list
    """
    if not os.path.isfile(path):
        raise GraphParseError(str(path) + ' is not a file')
    if format_tag == JSON_FORMAT:
        return _load_json(path)
    if format_tag == CX2_FORMAT:
        return _load_cx2(path, directed)
    raise InvalidInputError('Unknown graph format: ' + str(format_tag))


def graph_to_record(graph):
    """
    JSON ready dict for `graph` in the dataset format

    :param graph: graph to convert
    :type graph: :py:class:`Graph`
    :rtype: dict
    """
    edges = []
    for (i, j) in graph.get_edges():
        rec = [i, j]
        if graph.has_edge_features():
            rec.append(graph.get_edge_feature(i, j).tolist())
        edges.append(rec)
    record = {'num_nodes': graph.get_num_nodes(),
              'edges': edges,
              'node_features': graph.get_node_features().tolist()}
    if graph.get_node_labels() is not None:
        record['node_labels'] = graph.get_node_labels().tolist()
    if graph.get_graph_label() is not None:
        record['graph_label'] = graph.get_graph_label().tolist()
    return record


def save_graphs(path, graphs, directed=False):
    """
    Writes `graphs` to `path` in the JSON dataset format. Floats are
    written by :py:mod:`json`, which emits the shortest repr that reads
    back to the same value

    :param path: destination file
    :type path: str
    :param graphs: graphs to write, all with directedness `directed`
    :type graphs: list
    :param directed: directed flag stored in document
    :type directed: bool
    :raises InvalidInputError: If a graph's directedness differs
    """
    for graph in graphs:
        if graph.is_directed() != directed:
            raise InvalidInputError('All graphs must have directed=' +
                                    str(directed))
    doc = {'directed': directed,
           'graphs': [graph_to_record(g) for g in graphs]}
    with open(path, 'w') as f:
        json.dump(doc, f)


def degrees(graph):
    """
    In and out degree of every node. For undirected graphs both equal
    the row sums of the adjacency

    :param graph:
    :type graph: :py:class:`Graph`
    :return: ``(indegree, outdegree)`` integer vectors
    :rtype: tuple
    """
    adj = graph.get_adjacency()
    indeg = np.sum(adj, axis=0).astype(np.int64)
    outdeg = np.sum(adj, axis=1).astype(np.int64)
    return indeg, outdeg


def _require_undirected(graph, what):
    if graph.is_directed():
        raise InvalidInputError(what + ' requires an undirected graph')


def normalized_laplacian(graph):
    """
    ``I - D^-1/2 A D^-1/2``. Isolated nodes get 1 on the diagonal
    and 0 elsewhere in their row and column

    :raises InvalidInputError: If `graph` is directed
    :rtype: :py:class:`numpy.ndarray`
    """
    _require_undirected(graph, 'normalized_laplacian')
    adj = graph.get_adjacency()
    deg = np.sum(adj, axis=1)
    inv_sqrt = np.zeros_like(deg)
    nonzero = deg > 0
    inv_sqrt[nonzero] = 1.0 / np.sqrt(deg[nonzero])
    lap = np.eye(adj.shape[0]) - inv_sqrt[:, None] * adj * inv_sqrt[None, :]
    return 0.5 * (lap + lap.T)


def spd_matrix(graph):
    """
    Breadth first search distances from every source along out-edges.
    Diagonal is 0 and unreachable pairs are -1

    :rtype: :py:class:`numpy.ndarray` of int64
    """
    n = graph.get_num_nodes()
    spd = np.full((n, n), -1, dtype=np.int64)
    neighbors = [graph.get_out_neighbors(i) for i in range(n)]
    for src in range(n):
        spd[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in neighbors[u]:
                if spd[src, w] < 0:
                    spd[src, w] = spd[src, u] + 1
                    queue.append(w)
    return spd


def hop_mask(graph, h, spd=None):
    """
    0/1 matrix with entry ``(i, j)`` set when ``0 <= spd(i, j) <= h``

    :param h: hop count, at least 1
    :type h: int
    :param spd: precomputed :py:func:`spd_matrix` output
    :raises InvalidInputError: If `h` is below 1
    :rtype: :py:class:`numpy.ndarray`
    """
    if h < 1:
        raise InvalidInputError('hop count must be at least 1, got ' +
                                str(h))
    if spd is None:
        spd = spd_matrix(graph)
    return ((spd >= 0) & (spd <= h)).astype(np.float64)


def graph_kernel(graph, kind, param, laplacian=None, eig=None):
    """
    Graph kernel on the normalized Laplacian ``L``.

    ``p-step-rw``: ``(I - 0.5 L)^p`` for integer ``p >= 0``.
    ``diffusion``: ``U exp(-beta Lambda) U^T`` from the spectrum of ``L``.
    Pairs in different connected components are exactly 0 in both.

    :param kind: :py:const:`P_STEP_RW_KERNEL` or
                 :py:const:`DIFFUSION_KERNEL`
    :type kind: str
    :param param: ``p`` or ``beta``
    :raises InvalidInputError: For directed graphs, unknown `kind`,
                               negative or non integer `param`
    :return: symmetric positive semidefinite kernel
    :rtype: :py:class:`numpy.ndarray`
    """
    _require_undirected(graph, 'graph_kernel')
    if param is None or float(param) < 0:
        raise InvalidInputError('Kernel parameter must be nonnegative, '
                                'got ' + str(param))
    if laplacian is None:
        laplacian = normalized_laplacian(graph)
    n = laplacian.shape[0]
    if kind == P_STEP_RW_KERNEL:
        if not float(param).is_integer():
            raise InvalidInputError('p-step-rw kernel needs an integer '
                                    'step count, got ' + str(param))
        step = np.eye(n) - RANDOM_WALK_GAMMA * laplacian
        kernel = np.eye(n)
        for _ in range(int(param)):
            kernel = numkit.matmul(kernel, step)
    elif kind == DIFFUSION_KERNEL:
        if eig is None:
            eig = numkit.sym_eig(laplacian)
        u = eig.eigenvectors
        kernel = numkit.matmul(u * np.exp(-float(param) * eig.eigenvalues),
                               u.T)
        kernel[spd_matrix(graph) < 0] = 0.0
    else:
        raise InvalidInputError('Unknown kernel kind: ' + str(kind))
    return 0.5 * (kernel + kernel.T)


def shortest_path_edges(graph, i, j):
    """
    One shortest path from `i` to `j` found by breadth first search
    that expands neighbors in ascending id order

    :return: ordered ``(u, w)`` edges, empty when ``i == j`` and
             ``None`` when `j` is unreachable
    :rtype: list
    """
    n = graph.get_num_nodes()
    for node in (i, j):
        if node < 0 or node >= n:
            raise InvalidInputError('Node ' + str(node) + ' out of range')
    if i == j:
        return []
    parent = {i: None}
    queue = deque([i])
    while queue:
        u = queue.popleft()
        for w in graph.get_out_neighbors(u):
            if w in parent:
                continue
            parent[w] = u
            if w == j:
                path = []
                node = j
                while parent[node] is not None:
                    path.append((parent[node], node))
                    node = parent[node]
                path.reverse()
                return path
            queue.append(w)
    return None


def shadow_khop_sample(graph, v, max_hop, max_nbrs, rng):
    """
    Bounded breadth first expansion around `v` returning the induced
    subgraph.

    Frontier nodes are expanded in ascending id order. For each, the
    neighbors (either direction) not yet visited are collected and, if
    there are more than `max_nbrs`, `max_nbrs` of them are drawn
    uniformly without replacement from `rng`

    :param graph: graph to sample
    :type graph: :py:class:`Graph`
    :param v: root node
    :type v: int
    :param max_hop: expansion depth
    :type max_hop: int
    :param max_nbrs: cap on newly added neighbors per expanded node
    :type max_nbrs: int
    :param rng: random generator
    :type rng: :py:class:`numpy.random.Generator`
    :raises InvalidInputError: If `v` is not a node
    :rtype: :py:class:`Subgraph`
    """
    if v < 0 or v >= graph.get_num_nodes():
        raise InvalidInputError('Node ' + str(v) + ' out of range')
    seen = {v}
    frontier = [v]
    for _ in range(max_hop):
        nxt = []
        for u in sorted(frontier):
            new = [w for w in graph.get_neighbors(u) if w not in seen]
            if len(new) > max_nbrs:
                picked = rng.choice(len(new), size=max_nbrs, replace=False)
                new = [new[k] for k in sorted(picked.tolist())]
            for w in new:
                seen.add(w)
                nxt.append(w)
        if not nxt:
            break
        frontier = nxt
    nodes = sorted(seen)
    return Subgraph(nodes, graph.induced_subgraph(nodes), nodes.index(v))


class StructCache(object):
    """
    Lazily computed structure of one :py:class:`Graph`. Each quantity is
    computed on first request and reused afterwards

    :param graph: graph to describe
    :type graph: :py:class:`Graph`
    """
    def __init__(self, graph):
        """
        Constructor
        """
        self._graph = graph
        self._store = dict()

    def _cached(self, key, func):
        if key not in self._store:
            self._store[key] = func()
        return self._store[key]

    def get_graph(self):
        return self._graph

    def get_degrees(self):
        return self._cached('degrees', lambda: degrees(self._graph))

    def get_degree_matrix(self):
        """
        Diagonal matrix of out degrees (degrees when undirected)
        """
        return self._cached('degree_matrix',
                            lambda: np.diag(self.get_degrees()[1]
                                            .astype(np.float64)))

    def get_laplacian(self):
        return self._cached('laplacian',
                            lambda: normalized_laplacian(self._graph))

    def get_laplacian_eig(self):
        return self._cached('laplacian_eig',
                            lambda: numkit.sym_eig(self.get_laplacian()))

    def get_spd(self):
        return self._cached('spd', lambda: spd_matrix(self._graph))

    def get_hop_mask(self, h):
        return self._cached(('hop_mask', h),
                            lambda: hop_mask(self._graph, h,
                                             spd=self.get_spd()))

    def get_kernel(self, kind, param):
        def build():
            eig = None
            if kind == DIFFUSION_KERNEL:
                eig = self.get_laplacian_eig()
            return graph_kernel(self._graph, kind, param,
                                laplacian=self.get_laplacian(), eig=eig)
        return self._cached(('kernel', kind, param), build)

    def get_row_normalized_adjacency(self):
        """
        ``D^-1 A`` with zero rows for nodes without out-edges
        """
        def build():
            adj = self._graph.get_adjacency()
            deg = np.sum(adj, axis=1, keepdims=True)
            return np.divide(adj, deg, out=np.zeros_like(adj),
                             where=deg > 0)
        return self._cached('row_norm_adj', build)

    def get_gcn_adjacency(self):
        """
        ``D~^-1/2 (A + I) D~^-1/2`` with ``D~`` the degrees of ``A + I``.
        Directed graphs are symmetrized first
        """
        def build():
            adj = self._graph.get_adjacency()
            if self._graph.is_directed():
                adj = np.maximum(adj, adj.T)
            a_tilde = adj + np.eye(adj.shape[0])
            inv_sqrt = 1.0 / np.sqrt(np.sum(a_tilde, axis=1))
            return inv_sqrt[:, None] * a_tilde * inv_sqrt[None, :]
        return self._cached('gcn_adj', build)

    def get_path_edges(self, i, j):
        return self._cached(('path', i, j),
                            lambda: shortest_path_edges(self._graph, i, j))
