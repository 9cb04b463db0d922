# -*- coding: utf-8 -*-

"""
Builders for graph aware attention modifiers. Each builder has a
structural half (plain arrays computed once per graph) and a parameter
half (tape primitives, so the same code serves one graph ``(n, n)`` or a
padded batch ``(B, n, n)``).
"""

import logging

import numpy as np

from gtbench import tape
from gtbench import graphkit
from gtbench import txcore
from gtbench.batching import pad_self_support
from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

MASK_1 = 'mask-1'
MASK_N = 'mask-n'
SPATIAL_BIAS = 'spb'
PMA = 'pma'
KERNEL = 'kernel'
EDGE_MASK = 'edge-mask'
EDGE_BIAS = 'edge-bias'

AT_KINDS = (MASK_1, MASK_N, SPATIAL_BIAS, PMA, KERNEL, EDGE_MASK, EDGE_BIAS)

MAX_SPD = 16

DEFAULT_HOPS = 2

DEFAULT_VIEWS = 3

MAX_PATH_EDGES = 20

DEFAULT_KERNEL = (graphkit.DIFFUSION_KERNEL, 1.0)

DEFAULT_P_STEPS = 3


class ATParams(object):
    """
    Attention modifier settings and weights

    :param kind: one of :py:const:`AT_KINDS`
    :type kind: str
    :param heads: attention head count
    :type heads: int
    :param values: parameter name => array or
                   :py:class:`gtbench.tape.Var`: ``spb`` table
                   ``(max_spd + 2, H)``, ``pma`` table ``(M, H)``,
                   ``edge_w`` path embeddings ``(N_max, d_e)`` and
                   ``w_e`` ``(d_e, d)``
    :type values: dict
    """
    def __init__(self, kind, heads, values=None, max_spd=MAX_SPD,
                 views=DEFAULT_VIEWS, max_path=MAX_PATH_EDGES,
                 n_hops=DEFAULT_HOPS, kernel_kind=DEFAULT_KERNEL[0],
                 kernel_param=DEFAULT_KERNEL[1]):
        """
        Constructor
        """
        if kind not in AT_KINDS:
            raise InvalidInputError('Unknown attention modifier: ' +
                                    str(kind))
        if max_spd < 1:
            raise InvalidInputError('max_spd must be at least 1')
        if views < 1:
            raise InvalidInputError('PMA view count must be at least 1')
        if n_hops < 1:
            raise InvalidInputError('n_hops must be at least 1')
        self.kind = kind
        self.heads = heads
        self.values = values if values is not None else dict()
        self.max_spd = max_spd
        self.views = views
        self.max_path = max_path
        self.n_hops = n_hops
        self.kernel_kind = kernel_kind
        self.kernel_param = kernel_param

    def get(self, name):
        return self.values[name]

    def with_values(self, values):
        return self._copy(self.kind, values)

    def with_kind(self, kind):
        """
        Same settings and weights read as a modifier of `kind`
        """
        return self._copy(kind, self.values)

    def _copy(self, kind, values):
        return ATParams(kind, self.heads, values=values,
                        max_spd=self.max_spd, views=self.views,
                        max_path=self.max_path, n_hops=self.n_hops,
                        kernel_kind=self.kernel_kind,
                        kernel_param=self.kernel_param)


def init_at_params(kind, heads, hidden, rng, edge_dim=0, **kwargs):
    """
    Fresh :py:class:`ATParams`. Keyword arguments go to the constructor

    :raises InvalidInputError: If an edge based kind is asked for
                               without edge features
    """
    p = ATParams(kind, heads, **kwargs)
    values = dict()
    if kind in (SPATIAL_BIAS, EDGE_BIAS):
        values['spb'] = rng.normal(0.0, 0.02, size=(p.max_spd + 2, heads))
    if kind == PMA:
        values['pma'] = rng.normal(0.0, 0.02, size=(p.views, heads))
    if kind in (EDGE_BIAS, EDGE_MASK) and edge_dim < 1:
        raise InvalidInputError(kind + ' needs edge features')
    if kind == EDGE_BIAS:
        values['edge_w'] = rng.normal(0.0, 0.02,
                                      size=(p.max_path, edge_dim))
    if kind == EDGE_MASK:
        values['w_e'] = txcore.uniform_init(rng, edge_dim,
                                            (edge_dim, hidden))
    return p.with_values(values)


def _to_heads_first(x):
    """
    ``(..., n, n, H)`` => ``(..., H, n, n)``
    """
    nd = tape.value_of(x).ndim
    axes = list(range(nd - 3)) + [nd - 1, nd - 3, nd - 2]
    return tape.transpose(x, axes)


def mask1_tensor(sc):
    """
    ``(1, n, n)`` adjacency plus self-loops
    """
    return sc.get_hop_mask(1)[None, :, :]


def maskn_tensor(sc, heads, n_hops):
    """
    ``(H, n, n)``, head ``h`` holds the ``(h mod n_hops) + 1`` hop mask
    """
    return np.stack([sc.get_hop_mask((h % n_hops) + 1)
                     for h in range(heads)])


def mask1_modifier(sc, heads):
    """
    Every head may attend only to neighbors and itself

    :param sc: structure of the graph
    :type sc: :py:class:`gtbench.graphkit.StructCache`
    :param heads: head count
    :type heads: int
    :rtype: :py:class:`gtbench.txcore.MaskModifier`
    """
    return build_modifier(sc.get_graph(), sc, ATParams(MASK_1, heads))


def maskn_modifier(sc, heads, n_hops=DEFAULT_HOPS):
    """
    Head ``h`` may attend within ``(h mod n_hops) + 1`` hops

    :raises InvalidInputError: If `n_hops` is below 1
    """
    return build_modifier(sc.get_graph(), sc,
                          ATParams(MASK_N, heads, n_hops=n_hops))


def spd_onehot(spd, max_spd=MAX_SPD):
    """
    ``(n, n, max_spd + 2)`` bucket indicators. Reachable pairs use
    ``min(spd, max_spd)``, unreachable pairs bucket ``max_spd + 1``
    """
    spd = np.asarray(spd, dtype=np.int64)
    idx = np.where(spd < 0, max_spd + 1, np.minimum(spd, max_spd))
    onehot = np.zeros(spd.shape + (max_spd + 2,))
    np.put_along_axis(onehot, idx[..., None], 1.0, axis=-1)
    return onehot


def lookup_bias(indicators, table):
    """
    ``(..., n, n, T) @ (T, H)`` moved to ``(..., H, n, n)``
    """
    return _to_heads_first(tape.matmul(indicators, table))


def spatial_bias(sc, p):
    """
    Learnable scalar per SPD bucket and head, the same table at every
    layer

    :param sc: structure of the graph
    :type sc: :py:class:`gtbench.graphkit.StructCache`
    :param p: parameters holding ``spb``
    :type p: :py:class:`ATParams`
    :rtype: :py:class:`gtbench.txcore.AdditiveBiasModifier`
    """
    return build_modifier(sc.get_graph(), sc, p.with_kind(SPATIAL_BIAS))


def pma_views(sc, views):
    """
    ``(n, n, M)`` with view ``m`` the ``m``-th power of ``D^-1 A``
    """
    n = sc.get_graph().get_num_nodes()
    step = sc.get_row_normalized_adjacency()
    out = np.zeros((n, n, views))
    power = np.eye(n)
    for m in range(views):
        out[:, :, m] = power
        power = np.matmul(power, step)
    return out


def pma_modifier(sc, p):
    """
    ``bias_ij = sum_m phi_ij[m] b[m]`` per head, with ``phi_ij[m]`` the
    ``(i, j)`` entry of the ``m``-th power of the row normalized
    adjacency

    :rtype: :py:class:`gtbench.txcore.AdditiveBiasModifier`
    """
    return build_modifier(sc.get_graph(), sc, p.with_kind(PMA))


def path_feature_tensor(graph, sc, max_path=MAX_PATH_EDGES, edge_dim=None):
    """
    ``(n, n, max_path * d_e)``. Slot ``k`` of pair ``(i, j)`` holds the
    features of the ``k``-th edge on the shortest path from ``i`` to
    ``j`` divided by the path length. Diagonal and unreachable pairs
    are zero

    :raises InvalidInputError: If `graph` has no edge features (and
                               `edge_dim` is not given) or a path is
                               longer than `max_path`
    """
    if not graph.has_edge_features() and edge_dim is None:
        raise InvalidInputError('Edge path bias needs edge features')
    n = graph.get_num_nodes()
    d_e = edge_dim if edge_dim is not None else\
        graph.get_edge_feature_dim()
    out = np.zeros((n, n, max_path, d_e))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            path = sc.get_path_edges(i, j)
            if not path:
                continue
            if len(path) > max_path:
                raise InvalidInputError('Shortest path from ' + str(i) +
                                        ' to ' + str(j) + ' has ' +
                                        str(len(path)) + ' edges, more '
                                        'than ' + str(max_path) +
                                        ' path embeddings')
            for k, (u, w) in enumerate(path):
                out[i, j, k] = graph.get_edge_feature(u, w) / len(path)
    return out.reshape(n, n, max_path * d_e)


def path_bias(paths, edge_w):
    """
    ``(..., n, n, L) @ vec(edge_w)`` moved to ``(..., 1, n, n)``
    """
    flat = tape.reshape(edge_w, (-1, 1))
    return _to_heads_first(tape.matmul(paths, flat))


def edge_path_bias(graph, sc, p):
    """
    ``B_ij`` is the mean over the shortest path edges ``e_k`` of
    ``<x_ek, w_k>``, shared by all heads

    :raises InvalidInputError: If `graph` lacks edge features or a path
                               is too long
    :rtype: :py:class:`gtbench.txcore.AdditiveBiasModifier`
    """
    return txcore.AdditiveBiasModifier(
        path_bias(path_feature_tensor(graph, sc, p.max_path),
                  p.get('edge_w')))


def edge_spatial_bias(graph, sc, p):
    """
    Spatial bias plus edge path bias
    """
    return build_modifier(graph, sc, p.with_kind(EDGE_BIAS))


def pair_edge_features(graph, edge_dim=None):
    """
    ``(n, n, d_e)`` edge features per ordered pair. A node's own pair
    holds the mean of its incident edge features, zero when isolated.
    Pass `edge_dim` for graphs that may have no edges at all

    :raises InvalidInputError: If `graph` has no edge features and
                               `edge_dim` is not given
    """
    if not graph.has_edge_features() and edge_dim is None:
        raise InvalidInputError('Edge masked attention needs edge '
                                'features')
    n = graph.get_num_nodes()
    d_e = edge_dim if edge_dim is not None else\
        graph.get_edge_feature_dim()
    out = np.zeros((n, n, d_e))
    counts = np.zeros(n)
    for (i, j), vec in (graph.get_edge_features() or {}).items():
        out[i, j] = vec
        out[i, i] += vec
        counts[i] += 1
    for i in range(n):
        if counts[i] > 0:
            out[i, i] = out[i, i] / counts[i]
    return out


def edge_mask_weight(pair_feats, w_e):
    """
    ``mean_k (e_ij w_e)_k`` moved to ``(..., 1, n, n)``
    """
    hidden = tape.value_of(w_e).shape[1]
    mapped = tape.matmul(pair_feats, w_e)
    reduced = tape.matmul(mapped, np.full((hidden, 1), 1.0 / hidden))
    return _to_heads_first(reduced)


def edge_mask_modifier(graph, sc, w_e):
    """
    Adjacency plus self-loop mask whose permitted scores are scaled by
    the edge weight from :py:func:`edge_mask_weight`

    :param w_e: ``(d_e, d)`` weights
    :raises InvalidInputError: If `graph` has no edge features
    :rtype: :py:class:`gtbench.txcore.MaskModifier`
    """
    return build_modifier(graph, sc, ATParams(EDGE_MASK, 1,
                                              values={'w_e': w_e}))


def kernel_modifier(sc, p):
    """
    Shared query/key scores multiplied by the graph kernel, with
    ``D^-1/2`` applied to the attention output before the residual

    :rtype: :py:class:`gtbench.txcore.KernelHadamardModifier`
    """
    return build_modifier(sc.get_graph(), sc, p.with_kind(KERNEL))


def structure_arrays(graph, sc, p, edge_dim=None):
    """
    Structural half of a modifier of kind ``p.kind``, computed once per
    graph. Pair arrays are ``(n, n, C)`` so
    :py:func:`gtbench.batching.collate` can pad the node axes

    :param graph: graph the arrays describe
    :type graph: :py:class:`gtbench.graphkit.Graph`
    :param sc: structure of `graph`
    :type sc: :py:class:`gtbench.graphkit.StructCache`
    :param p: modifier settings, weights are not read
    :type p: :py:class:`ATParams`
    :param edge_dim: edge feature width for graphs that may have no
                     edges, ``None`` to require edge features
    :raises InvalidInputError: If an edge based kind lacks edge features
    :return: ``(node, pair)`` name => array dicts
    :rtype: tuple
    """
    node = dict()
    pair = dict()
    if p.kind == MASK_1:
        pair['keep'] = np.moveaxis(mask1_tensor(sc), 0, -1)
    elif p.kind == MASK_N:
        pair['keep'] = np.moveaxis(maskn_tensor(sc, p.heads, p.n_hops),
                                   0, -1)
    elif p.kind in (SPATIAL_BIAS, EDGE_BIAS):
        pair['spd'] = spd_onehot(sc.get_spd(), p.max_spd)
        if p.kind == EDGE_BIAS:
            pair['paths'] = path_feature_tensor(graph, sc, p.max_path,
                                                edge_dim=edge_dim)
    elif p.kind == PMA:
        pair['views'] = pma_views(sc, p.views)
    elif p.kind == KERNEL:
        kernel = sc.get_kernel(p.kernel_kind, p.kernel_param)
        pair['kernel'] = kernel[:, :, None]
        node['inv_sqrt_deg'] = txcore.inv_sqrt_degree(sc.get_degrees()[1])
    else:
        pair['keep'] = np.moveaxis(mask1_tensor(sc), 0, -1)
        pair['edge_pairs'] = pair_edge_features(graph, edge_dim=edge_dim)
    return node, pair


def modifier_from_arrays(p, pair, node, pad_mask=None):
    """
    Parameter half of a modifier of kind ``p.kind``. Works on the arrays
    of :py:func:`structure_arrays` for one graph or on their padded
    ``(B, ...)`` batch

    :param p: modifier settings and weights
    :type p: :py:class:`ATParams`
    :param pair: pair arrays ``(..., n, n, C)``
    :type pair: dict
    :param node: node arrays ``(..., n)``
    :type node: dict
    :param pad_mask: boolean ``(B, n)`` for a batch, pad rows of masks
                     get their self pair
    :rtype: :py:class:`gtbench.txcore.AttnModifier`
    """
    if p.kind in (MASK_1, MASK_N, EDGE_MASK):
        keep = pair['keep']
        if pad_mask is not None:
            keep = pad_self_support(keep, pad_mask)
        weight = None
        if p.kind == EDGE_MASK:
            weight = edge_mask_weight(pair['edge_pairs'], p.get('w_e'))
        return txcore.MaskModifier(np.moveaxis(keep, -1, -3), weight=weight)
    if p.kind == SPATIAL_BIAS:
        return txcore.AdditiveBiasModifier(lookup_bias(pair['spd'],
                                                       p.get('spb')))
    if p.kind == EDGE_BIAS:
        return txcore.AdditiveBiasModifier(tape.add(
            lookup_bias(pair['spd'], p.get('spb')),
            path_bias(pair['paths'], p.get('edge_w'))))
    if p.kind == PMA:
        return txcore.AdditiveBiasModifier(lookup_bias(pair['views'],
                                                       p.get('pma')))
    return txcore.KernelHadamardModifier(
        np.moveaxis(pair['kernel'], -1, -3), shared_qk=True,
        inv_sqrt_degree=node['inv_sqrt_deg'])


def build_modifier(graph, sc, p, edge_dim=None):
    """
    Modifier of kind ``p.kind`` for one graph
    """
    node, pair = structure_arrays(graph, sc, p, edge_dim=edge_dim)
    return modifier_from_arrays(p, pair, node)
