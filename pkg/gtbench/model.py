# -*- coding: utf-8 -*-

"""
Variant descriptors and the assembled graph Transformer.

A variant descriptor is ``vanilla`` or ``<family>:<kind>[:<option>...]``:

* ``ga:<before|alternate|parallel>[:<gcn|gat-lite|gin>]``
* ``pe:degree``, ``pe:eig[:<k>]``, ``pe:svd[:<r>]``
* ``at:mask-1``, ``at:mask-n[:<hops>]``, ``at:spb``, ``at:pma[:<M>]``,
  ``at:kernel[:diffusion:<beta>|:p-step-rw:<p>]``, ``at:edge-mask``,
  ``at:edge-bias``
"""

import logging
from collections import OrderedDict

import numpy as np

from gtbench import tape
from gtbench import txcore
from gtbench import graphkit
from gtbench import pe
from gtbench import at
from gtbench import ga
from gtbench.batching import PreparedInstance
from gtbench.batching import pad_self_support
from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

VANILLA = 'vanilla'
GA_FAMILY = 'ga'
PE_FAMILY = 'pe'
AT_FAMILY = 'at'

GRAPH_LEVEL = 'graph'
NODE_LEVEL = 'node'

VARIANTS = ('vanilla',
            'ga:before', 'ga:alternate', 'ga:parallel',
            'pe:degree', 'pe:eig', 'pe:svd',
            'at:mask-1', 'at:mask-n', 'at:spb', 'at:pma', 'at:kernel')
"""
The eleven variants compared by the benchmark
"""


def _parse_int(text, what):
    try:
        return int(text)
    except ValueError:
        raise InvalidInputError(what + ' must be an integer, got ' +
                                str(text))


def _parse_ga(parts):
    if len(parts) not in (1, 2):
        raise InvalidInputError('ga descriptor is ga:<pattern>[:<gnn>]')
    gnn_kind = parts[1] if len(parts) == 2 else ga.GCN
    if parts[0] not in ga.GA_PATTERNS:
        raise InvalidInputError('Unknown GA pattern: ' + parts[0])
    if gnn_kind not in ga.GNN_KINDS:
        raise InvalidInputError('Unknown GNN kind: ' + gnn_kind)
    return {'kind': parts[0], 'gnn_kind': gnn_kind}


def _parse_pe(parts):
    kind = parts[0]
    if kind == pe.DEGREE_PE:
        if len(parts) != 1:
            raise InvalidInputError('pe:degree takes no size')
        return {'kind': kind}
    if kind not in (pe.LAPLACIAN_PE, pe.SVD_PE):
        raise InvalidInputError('Unknown positional encoding: ' + kind)
    if len(parts) > 2:
        raise InvalidInputError('pe descriptor is pe:<kind>[:<size>]')
    size = pe.DEFAULT_PE_SIZE
    if len(parts) == 2:
        size = _parse_int(parts[1], 'PE size')
    if size not in pe.PE_SIZES:
        raise InvalidInputError('PE size must be one of ' +
                                str(list(pe.PE_SIZES)) + ', got ' +
                                str(size))
    return {'kind': kind, 'pe_size': size}


def _parse_at(parts):
    kind = parts[0]
    if kind not in at.AT_KINDS:
        raise InvalidInputError('Unknown attention modifier: ' + kind)
    opts = parts[1:]
    result = {'kind': kind}
    if kind == at.MASK_N and opts:
        if len(opts) != 1:
            raise InvalidInputError('at:mask-n takes one hop count')
        result['n_hops'] = _parse_int(opts[0], 'hop count')
        if result['n_hops'] < 1:
            raise InvalidInputError('hop count must be at least 1')
    elif kind == at.PMA and opts:
        if len(opts) != 1:
            raise InvalidInputError('at:pma takes one view count')
        result['views'] = _parse_int(opts[0], 'view count')
        if result['views'] < 1:
            raise InvalidInputError('view count must be at least 1')
    elif kind == at.KERNEL and opts:
        if len(opts) not in (1, 2):
            raise InvalidInputError('kernel descriptor is '
                                    'at:kernel[:<kind>[:<param>]]')
        kernel_kind = opts[0]
        if kernel_kind == graphkit.DIFFUSION_KERNEL:
            param = at.DEFAULT_KERNEL[1]
            if len(opts) == 2:
                try:
                    param = float(opts[1])
                except ValueError:
                    raise InvalidInputError('diffusion beta must be a '
                                            'number, got ' + opts[1])
        elif kernel_kind == graphkit.P_STEP_RW_KERNEL:
            param = at.DEFAULT_P_STEPS
            if len(opts) == 2:
                param = _parse_int(opts[1], 'step count')
        else:
            raise InvalidInputError('Unknown kernel: ' + kernel_kind)
        if param < 0:
            raise InvalidInputError('Kernel parameter must be '
                                    'nonnegative')
        result['kernel_kind'] = kernel_kind
        result['kernel_param'] = param
    elif opts:
        raise InvalidInputError('at:' + kind + ' takes no options')
    return result


def parse_variant(variant):
    """
    Splits a variant descriptor into its settings

    :param variant: descriptor, see module documentation
    :type variant: str
    :raises InvalidInputError: If `variant` is not understood
    :return: ``family`` plus family specific settings
    :rtype: dict
    """
    if not isinstance(variant, str) or not variant:
        raise InvalidInputError('Variant must be a non-empty string')
    if variant == VANILLA:
        return {'family': VANILLA, 'kind': None}
    parts = variant.split(':')
    family = parts[0]
    if len(parts) < 2:
        raise InvalidInputError('Unknown variant: ' + variant)
    if family == GA_FAMILY:
        settings = _parse_ga(parts[1:])
    elif family == PE_FAMILY:
        settings = _parse_pe(parts[1:])
    elif family == AT_FAMILY:
        settings = _parse_at(parts[1:])
    else:
        raise InvalidInputError('Unknown variant family: ' + family)
    settings['family'] = family
    return settings


class ModelSpec(object):
    """
    Transformer shape plus exactly one graph injection variant

    :param cfg: Transformer shape
    :type cfg: :py:class:`gtbench.txcore.ModelConfig`
    :param variant: variant descriptor
    :type variant: str
    :raises InvalidInputError: If `variant` is not understood
    """
    def __init__(self, cfg, variant=VANILLA):
        """
        Constructor
        """
        self.cfg = cfg
        self.variant = variant
        settings = parse_variant(variant)
        self.family = settings['family']
        self.kind = settings.get('kind')
        self.gnn_kind = settings.get('gnn_kind', ga.GCN)
        self.pe_size = settings.get('pe_size', pe.DEFAULT_PE_SIZE)
        self.n_hops = settings.get('n_hops', at.DEFAULT_HOPS)
        self.views = settings.get('views', at.DEFAULT_VIEWS)
        self.kernel_kind = settings.get('kernel_kind', at.DEFAULT_KERNEL[0])
        self.kernel_param = settings.get('kernel_param',
                                         at.DEFAULT_KERNEL[1])

    def uses_edge_features(self):
        return self.family == AT_FAMILY and\
            self.kind in (at.EDGE_MASK, at.EDGE_BIAS)

    def __repr__(self):
        return 'ModelSpec(variant=' + self.variant + ', cfg=' +\
               repr(self.cfg) + ')'


def _strip(values, prefix):
    return {k[len(prefix):]: v for k, v in values.items()
            if k.startswith(prefix)}


class GraphTransformer(object):
    """
    Input projection, optional graph injection, block stack, readout and
    a linear output head.

    Parameters live outside the object as ``name => array`` maps so the
    same model can run on plain arrays or on :py:class:`gtbench.tape.Var`
    leaves

    :param spec: shape and variant
    :type spec: :py:class:`ModelSpec`
    :param in_dim: raw node feature width
    :type in_dim: int
    :param out_dim: output width
    :type out_dim: int
    :param edge_dim: edge feature width, 0 when graphs have none
    :type edge_dim: int
    :param directed: whether graphs are directed
    :type directed: bool
    :param level: :py:const:`GRAPH_LEVEL` (mean readout) or
                  :py:const:`NODE_LEVEL` (target node readout)
    :type level: str
    """
    def __init__(self, spec, in_dim, out_dim, edge_dim=0, directed=False,
                 level=GRAPH_LEVEL):
        """
        Constructor
        """
        if level not in (GRAPH_LEVEL, NODE_LEVEL):
            raise InvalidInputError('Unknown task level: ' + str(level))
        if spec.uses_edge_features() and edge_dim < 1:
            raise InvalidInputError('Variant ' + spec.variant +
                                    ' needs edge features')
        if spec.family == PE_FAMILY and spec.kind == pe.LAPLACIAN_PE and\
                directed:
            raise InvalidInputError('Laplacian encodings need undirected '
                                    'graphs')
        self._spec = spec
        self._cfg = spec.cfg
        self._in_dim = in_dim
        self._out_dim = out_dim
        self._edge_dim = edge_dim
        self._directed = directed
        self._level = level

    def get_spec(self):
        return self._spec

    def get_readout(self):
        if self._level == NODE_LEVEL:
            return txcore.TARGET_READOUT
        return txcore.MEAN_READOUT

    def init_params(self, rng):
        """
        Fresh parameters in a fixed order

        :param rng: random generator
        :type rng: :py:class:`numpy.random.Generator`
        :return: name => array
        :rtype: :py:class:`collections.OrderedDict`
        """
        cfg = self._cfg
        spec = self._spec
        d = cfg.hidden
        params = OrderedDict()
        params['embed.w'] = txcore.uniform_init(rng, self._in_dim,
                                                (self._in_dim, d))
        params['embed.b'] = txcore.uniform_init(rng, self._in_dim, (d,))
        for l in range(cfg.layers):
            layer = txcore.init_layer_params(cfg, rng)
            params.update(layer.as_dict(prefix='layer' + str(l) + '.'))
        if spec.family == PE_FAMILY:
            p = pe.init_pe_params(spec.kind, d, rng, size=spec.pe_size,
                                  directed=self._directed)
            for name, val in p.values.items():
                params['pe.' + name] = val
        elif spec.family == AT_FAMILY:
            p = at.init_at_params(spec.kind, cfg.heads, d, rng,
                                  edge_dim=self._edge_dim,
                                  views=spec.views, n_hops=spec.n_hops)
            for name, val in p.values.items():
                params['at.' + name] = val
        elif spec.family == GA_FAMILY:
            p = ga.init_ga_params(spec.kind, spec.gnn_kind, d, cfg.layers,
                                  rng)
            for name, val in p.values.items():
                params['ga.' + name] = val
        params['head.w'] = txcore.uniform_init(rng, d, (d, self._out_dim))
        params['head.b'] = txcore.uniform_init(rng, d, (self._out_dim,))
        if LOGGER.isEnabledFor(logging.DEBUG):
            count = sum(v.size for v in params.values())
            LOGGER.debug('Initialized ' + spec.variant + ' with ' +
                         str(count) + ' parameters')
        return params

    def prepare(self, graph, target=None, target_index=0):
        """
        Precomputes every structural array the variant needs

        :param graph: graph to encode
        :type graph: :py:class:`gtbench.graphkit.Graph`
        :param target: training target
        :param target_index: node read out for node level tasks
        :rtype: :py:class:`gtbench.batching.PreparedInstance`
        """
        if graph.get_node_feature_dim() != self._in_dim:
            raise InvalidInputError('Graph has ' +
                                    str(graph.get_node_feature_dim()) +
                                    ' node features, model expects ' +
                                    str(self._in_dim))
        sc = graphkit.StructCache(graph)
        spec = self._spec
        node = dict()
        pair = dict()
        if spec.family == PE_FAMILY:
            if spec.kind == pe.DEGREE_PE:
                indeg, outdeg = sc.get_degrees()
                node['deg_in'] = pe.degree_onehot(indeg)
                node['deg_out'] = pe.degree_onehot(outdeg)
            elif spec.kind == pe.LAPLACIAN_PE:
                node['pe'] = pe.laplacian_pe(graph, spec.pe_size, sc=sc)
            else:
                node['pe'] = pe.padded_svd_pe(graph, spec.pe_size)
        elif spec.family == AT_FAMILY:
            self._prepare_at(graph, sc, node, pair)
        elif spec.family == GA_FAMILY:
            ops = ga.GraphOperators.from_cache(sc)
            pair['a_hat'] = ops.a_hat
            pair['adj'] = ops.adjacency
            pair['gat_keep'] = ops.keep.astype(np.float64)
        return PreparedInstance(graph, sc, node_arrays=node,
                                pair_arrays=pair, target=target,
                                target_index=target_index)

    def _at_params(self, values=None):
        spec = self._spec
        return at.ATParams(spec.kind, self._cfg.heads, values=values,
                           views=spec.views, n_hops=spec.n_hops,
                           kernel_kind=spec.kernel_kind,
                           kernel_param=spec.kernel_param)

    def _prepare_at(self, graph, sc, node, pair):
        at_node, at_pair = at.structure_arrays(graph, sc, self._at_params(),
                                               edge_dim=self._edge_dim)
        node.update(at_node)
        pair.update(at_pair)

    def _modifier(self, batch, values):
        return at.modifier_from_arrays(self._at_params(values), batch.pair,
                                       batch.node, pad_mask=batch.pad_mask)

    def _apply_pe(self, x, batch, values, training, rng):
        spec = self._spec
        if spec.kind == pe.DEGREE_PE:
            p = pe.PEParams(pe.DEGREE_PE, values, identity_map=True)
            return tape.add(x, pe.degree_lookup(batch.node['deg_in'],
                                                batch.node['deg_out'], p))
        raw = batch.node['pe']
        if training:
            signs = pe.random_signs(rng, len(batch) * spec.pe_size)
            raw = pe.flip_signs(raw, spec.kind,
                                signs.reshape(len(batch), spec.pe_size))
        p = pe.PEParams(spec.kind, values, size=spec.pe_size)
        return pe.apply_pe(x, raw, p)

    def forward(self, batch, values, training=False, rng=None):
        """
        Runs the model on `batch`

        :param batch: padded inputs from
                      :py:func:`gtbench.batching.collate`
        :type batch: :py:class:`gtbench.batching.Batch`
        :param values: parameter name => array or
                       :py:class:`gtbench.tape.Var`
        :type values: dict
        :param training: enables dropout and sign flip augmentation
        :type training: bool
        :param rng: random generator, needed when `training`
        :return: ``(B, out_dim)`` predictions
        """
        cfg = self._cfg
        spec = self._spec
        if training and rng is None:
            raise InvalidInputError('Training mode forward needs an rng')
        x_proj = tape.add(tape.matmul(batch.tokens, values['embed.w']),
                          values['embed.b'])
        h = x_proj
        mods = None
        layer_params = [txcore.LayerParams.from_dict(
            values, prefix='layer' + str(l) + '.')
            for l in range(cfg.layers)]
        run = dict(readout_tag=self.get_readout(), pad_mask=batch.pad_mask,
                   target_index=batch.target_index, training=training,
                   rng=rng)
        if spec.family == PE_FAMILY:
            h = self._apply_pe(h, batch, _strip(values, 'pe.'), training,
                               rng)
        elif spec.family == AT_FAMILY:
            mods = [self._modifier(batch, _strip(values, 'at.'))] *\
                cfg.layers
        if spec.family == GA_FAMILY:
            keep = pad_self_support(batch.pair['gat_keep'], batch.pad_mask)
            ops = ga.GraphOperators(batch.pair['a_hat'], batch.pair['adj'],
                                    keep > 0)
            p = ga.GAParams(spec.kind, spec.gnn_kind,
                            values=_strip(values, 'ga.'))
            out = ga.compose(ops, h, p, layer_params, cfg, x_proj=x_proj,
                             **run)
        else:
            out = txcore.model_forward(h, layer_params, cfg, mods=mods,
                                       **run)
        return tape.add(tape.matmul(out, values['head.w']),
                        values['head.b'])

    def predict(self, batch, params):
        """
        Eval mode forward on plain arrays

        :rtype: :py:class:`numpy.ndarray`
        """
        return tape.value_of(self.forward(batch, params, training=False))
