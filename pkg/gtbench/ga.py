# -*- coding: utf-8 -*-

import logging

import numpy as np

from gtbench import tape
from gtbench import txcore
from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

BEFORE = 'before'
ALTERNATE = 'alternate'
PARALLEL = 'parallel'

GA_PATTERNS = (BEFORE, ALTERNATE, PARALLEL)

GCN = 'gcn'
GAT_LITE = 'gat-lite'
GIN = 'gin'

GNN_KINDS = (GCN, GAT_LITE, GIN)

DEFAULT_GNN_LAYERS = 2

GAT_SLOPE = 0.2


class GraphOperators(object):
    """
    Graph matrices consumed by GNN layers, for one graph ``(n, n)`` or a
    padded batch ``(B, n, n)``

    :param a_hat: symmetric normalized adjacency with self-loops
    :param adjacency: plain adjacency
    :param keep: boolean neighbors-plus-self support used by attention
    """
    def __init__(self, a_hat, adjacency, keep):
        """
        Constructor
        """
        self.a_hat = np.asarray(a_hat, dtype=np.float64)
        self.adjacency = np.asarray(adjacency, dtype=np.float64)
        self.keep = np.asarray(keep, dtype=bool)

    @staticmethod
    def from_cache(sc):
        """
        Operators for one graph

        :param sc: structure of the graph
        :type sc: :py:class:`gtbench.graphkit.StructCache`
        :rtype: :py:class:`GraphOperators`
        """
        adj = sc.get_graph().get_adjacency()
        return GraphOperators(sc.get_gcn_adjacency(), adj,
                              (adj + np.eye(adj.shape[0])) > 0)


class GAParams(object):
    """
    GNN auxiliary module settings and weights

    :param pattern: one of :py:const:`GA_PATTERNS`
    :type pattern: str
    :param gnn_kind: one of :py:const:`GNN_KINDS`
    :type gnn_kind: str
    :param values: parameter name => array or
                   :py:class:`gtbench.tape.Var`. GNN layer ``l`` uses
                   ``gnn<l>.<name>`` and the parallel pattern uses
                   ``w_r<l>``
    :type values: dict
    :param n_gnn_layers: stacked GNN layers (before pattern) or one per
                         block (other patterns)
    :type n_gnn_layers: int
    :param activation: GNN output activation
    :type activation: str
    """
    def __init__(self, pattern, gnn_kind, values=None,
                 n_gnn_layers=DEFAULT_GNN_LAYERS, activation='relu'):
        """
        Constructor
        """
        if pattern not in GA_PATTERNS:
            raise InvalidInputError('Unknown GA pattern: ' + str(pattern))
        if gnn_kind not in GNN_KINDS:
            raise InvalidInputError('Unknown GNN kind: ' + str(gnn_kind))
        if n_gnn_layers < 1:
            raise InvalidInputError('n_gnn_layers must be at least 1')
        tape.activation(activation)
        self.pattern = pattern
        self.gnn_kind = gnn_kind
        self.values = values if values is not None else dict()
        self.n_gnn_layers = n_gnn_layers
        self.activation = activation

    def get(self, name):
        return self.values[name]

    def layer_values(self, layer):
        prefix = 'gnn' + str(layer) + '.'
        return {k[len(prefix):]: v for k, v in self.values.items()
                if k.startswith(prefix)}

    def with_values(self, values):
        return GAParams(self.pattern, self.gnn_kind, values=values,
                        n_gnn_layers=self.n_gnn_layers,
                        activation=self.activation)


def init_gnn_layer(gnn_kind, hidden, rng):
    """
    Weights of one GNN layer as ``name => array``
    """
    if gnn_kind == GCN:
        return {'w': txcore.uniform_init(rng, hidden, (hidden, hidden))}
    if gnn_kind == GIN:
        return {'eps': np.zeros(1),
                'w1': txcore.uniform_init(rng, hidden, (hidden, hidden)),
                'b1': txcore.uniform_init(rng, hidden, (hidden,)),
                'w2': txcore.uniform_init(rng, hidden, (hidden, hidden)),
                'b2': txcore.uniform_init(rng, hidden, (hidden,))}
    if gnn_kind == GAT_LITE:
        return {'w': txcore.uniform_init(rng, hidden, (hidden, hidden)),
                'a_src': txcore.uniform_init(rng, hidden, (hidden, 1)),
                'a_dst': txcore.uniform_init(rng, hidden, (hidden, 1))}
    raise InvalidInputError('Unknown GNN kind: ' + str(gnn_kind))


def init_ga_params(pattern, gnn_kind, hidden, layers, rng,
                   n_gnn_layers=DEFAULT_GNN_LAYERS, activation='relu'):
    """
    Fresh :py:class:`GAParams`

    :param layers: Transformer block count
    :type layers: int
    """
    p = GAParams(pattern, gnn_kind, n_gnn_layers=n_gnn_layers,
                 activation=activation)
    values = dict()
    if pattern == BEFORE:
        count = n_gnn_layers
    else:
        count = layers
    if pattern == PARALLEL:
        for l in range(count):
            values['w_r' + str(l)] = txcore.uniform_init(rng, hidden,
                                                         (hidden, hidden))
    else:
        for l in range(count):
            for name, val in init_gnn_layer(gnn_kind, hidden, rng).items():
                values['gnn' + str(l) + '.' + name] = val
    return p.with_values(values)


def _gat_lite(ops, x, lp):
    h = tape.matmul(x, lp['w'])
    src = tape.matmul(h, lp['a_src'])
    dst = tape.matmul(h, lp['a_dst'])
    nd = tape.value_of(dst).ndim
    dst_row = tape.transpose(dst, list(range(nd - 2)) + [nd - 1, nd - 2])
    scores = tape.leaky_relu(tape.add(src, dst_row), GAT_SLOPE)
    if not np.all(ops.keep):
        scores = tape.masked_fill(scores, ~ops.keep, -np.inf)
    return tape.matmul(tape.row_softmax(scores), h)


def gnn_layer(ops, x, layer_values, gnn_kind, activation='relu'):
    """
    One message passing layer.

    ``gcn``: ``act(A_hat x w)``.
    ``gin``: ``act(mlp((1 + eps) x + A x))`` with a two layer ReLU MLP.
    ``gat-lite``: ``act(sum_j alpha_ij x_j w)`` where ``alpha`` is a
    softmax over neighbors and self of
    ``leaky_relu(a_src . x_i w + a_dst . x_j w)``

    :param ops: graph operators
    :type ops: :py:class:`GraphOperators`
    :param x: node states ``(..., n, d)``
    :param layer_values: weights from :py:func:`init_gnn_layer`
    :type layer_values: dict
    :param gnn_kind: one of :py:const:`GNN_KINDS`
    :type gnn_kind: str
    :param activation: name in :py:const:`gtbench.tape.ACTIVATIONS`
    :type activation: str
    :raises InvalidInputError: On unknown kind or shape mismatch
    """
    act = tape.activation(activation)
    xv = tape.value_of(x)
    if xv.shape[-2] != ops.a_hat.shape[-1]:
        raise InvalidInputError('Node count ' + str(xv.shape[-2]) +
                                ' does not match graph size ' +
                                str(ops.a_hat.shape[-1]))
    if gnn_kind == GCN:
        return act(tape.matmul(tape.matmul(ops.a_hat, x), layer_values['w']))
    if gnn_kind == GIN:
        eps = layer_values['eps']
        self_term = tape.add(x, tape.mul(x, eps))
        agg = tape.add(self_term, tape.matmul(ops.adjacency, x))
        hidden = tape.relu(tape.add(tape.matmul(agg, layer_values['w1']),
                                    layer_values['b1']))
        return act(tape.add(tape.matmul(hidden, layer_values['w2']),
                            layer_values['b2']))
    if gnn_kind == GAT_LITE:
        return act(_gat_lite(ops, x, layer_values))
    raise InvalidInputError('Unknown GNN kind: ' + str(gnn_kind))


def gnn_stack(ops, x, p):
    """
    ``x + gnn(x)`` repeated ``p.n_gnn_layers`` times
    """
    for l in range(p.n_gnn_layers):
        x = tape.add(x, gnn_layer(ops, x, p.layer_values(l), p.gnn_kind,
                                  p.activation))
    return x


def block_branches(ops, p, layers, x_proj=None):
    """
    Per block callables added to the attention output before the FFN.
    ``alternate`` returns ``gnn(m)``, ``parallel`` returns
    ``A_hat x_proj w_r`` and ``before`` has none

    :param x_proj: input projected raw features, needed by ``parallel``
    :rtype: list
    """
    if p.pattern == BEFORE:
        return [None] * layers
    branches = []
    for l in range(layers):
        if p.pattern == ALTERNATE:
            branches.append(_alternate_branch(ops, p, l))
        else:
            if x_proj is None:
                raise InvalidInputError('parallel pattern needs projected '
                                        'raw features')
            branches.append(_parallel_branch(ops, x_proj, p.get('w_r' +
                                                                str(l))))
    return branches


def _alternate_branch(ops, p, layer):
    values = p.layer_values(layer)

    def branch(m):
        return gnn_layer(ops, m, values, p.gnn_kind, p.activation)
    return branch


def _parallel_branch(ops, x_proj, w_r):
    def branch(m):
        return tape.matmul(tape.matmul(ops.a_hat, x_proj), w_r)
    return branch


def compose_before(ops, x, p, layer_params, cfg, mods=None, **kwargs):
    """
    GNN stack then the Transformer stack

    :param layer_params: one :py:class:`gtbench.txcore.LayerParams` per
                         block
    :param cfg: model shape
    :type cfg: :py:class:`gtbench.txcore.ModelConfig`
    :param kwargs: passed to :py:func:`gtbench.txcore.model_forward`
    """
    if p.pattern != BEFORE:
        raise InvalidInputError('compose_before needs the before pattern')
    return txcore.model_forward(gnn_stack(ops, x, p), layer_params, cfg,
                                mods=mods, **kwargs)


def compose_alternate(ops, x, p, layer_params, cfg, mods=None, **kwargs):
    """
    Every block computes ``M' = M + gnn(M)`` between attention and FFN
    """
    if p.pattern != ALTERNATE:
        raise InvalidInputError('compose_alternate needs the alternate '
                                'pattern')
    return txcore.model_forward(x, layer_params, cfg, mods=mods,
                                branches=block_branches(ops, p, cfg.layers),
                                **kwargs)


def compose_parallel(ops, x, x_proj, p, layer_params, cfg, mods=None,
                     **kwargs):
    """
    Every block computes ``M' = M + A_hat x_proj w_r`` between
    attention and FFN, `x_proj` being the input projected raw features
    """
    if p.pattern != PARALLEL:
        raise InvalidInputError('compose_parallel needs the parallel '
                                'pattern')
    return txcore.model_forward(x, layer_params, cfg, mods=mods,
                                branches=block_branches(ops, p, cfg.layers,
                                                        x_proj=x_proj),
                                **kwargs)


def compose(ops, x, p, layer_params, cfg, x_proj=None, mods=None,
            **kwargs):
    """
    GNN module and Transformer stack wired by ``p.pattern``, see
    :py:func:`compose_before`, :py:func:`compose_alternate` and
    :py:func:`compose_parallel`

    :param x_proj: input projected raw features, defaults to `x`
    """
    if p.pattern == BEFORE:
        return compose_before(ops, x, p, layer_params, cfg, mods=mods,
                              **kwargs)
    if p.pattern == ALTERNATE:
        return compose_alternate(ops, x, p, layer_params, cfg, mods=mods,
                                 **kwargs)
    if x_proj is None:
        x_proj = x
    return compose_parallel(ops, x, x_proj, p, layer_params, cfg, mods=mods,
                            **kwargs)
