# -*- coding: utf-8 -*-

import logging

import numpy as np

from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)


class PreparedInstance(object):
    """
    One model input: a graph with its precomputed structural arrays.

    Node arrays have the node axis first, pair arrays have both node
    axes first, so padding only ever grows the leading axes

    :param graph: graph (a sampled subgraph for node level tasks)
    :type graph: :py:class:`gtbench.graphkit.Graph`
    :param sc: structure of `graph`
    :type sc: :py:class:`gtbench.graphkit.StructCache`
    :param node_arrays: name => ``(n, ...)`` array
    :type node_arrays: dict
    :param pair_arrays: name => ``(n, n, ...)`` array
    :type pair_arrays: dict
    :param target: regression values or class label(s)
    :param target_index: node whose representation is read out
    :type target_index: int
    """
    def __init__(self, graph, sc, node_arrays=None, pair_arrays=None,
                 target=None, target_index=0):
        """
        Constructor
        """
        self.graph = graph
        self.sc = sc
        self.node_arrays = node_arrays if node_arrays is not None else {}
        self.pair_arrays = pair_arrays if pair_arrays is not None else {}
        self.target = target
        self.target_index = int(target_index)
        n = graph.get_num_nodes()
        for name, arr in self.node_arrays.items():
            if arr.shape[0] != n:
                raise InvalidInputError('Node array ' + name + ' has ' +
                                        str(arr.shape[0]) + ' rows, '
                                        'expected ' + str(n))
        for name, arr in self.pair_arrays.items():
            if arr.shape[:2] != (n, n):
                raise InvalidInputError('Pair array ' + name +
                                        ' has leading shape ' +
                                        str(arr.shape[:2]))

    def get_num_nodes(self):
        return self.graph.get_num_nodes()

    def with_target(self, target, target_index=None):
        """
        Shallow copy holding a different target
        """
        if target_index is None:
            target_index = self.target_index
        return PreparedInstance(self.graph, self.sc,
                                node_arrays=self.node_arrays,
                                pair_arrays=self.pair_arrays,
                                target=target, target_index=target_index)


class Batch(object):
    """
    Padded group of :py:class:`PreparedInstance`

    :ivar tokens: ``(B, N, d_in)`` raw node features, zero on pads
    :ivar pad_mask: ``(B, N)`` boolean, ``True`` on pads
    :ivar node: name => ``(B, N, ...)``
    :ivar pair: name => ``(B, N, N, ...)``
    :ivar targets: stacked targets
    :ivar target_index: ``(B,)`` integer array
    :ivar graphs: graphs in batch order
    :ivar caches: their structure caches
    """
    def __init__(self, tokens, pad_mask, node, pair, targets, target_index,
                 graphs, caches):
        """
        Constructor
        """
        self.tokens = tokens
        self.pad_mask = pad_mask
        self.node = node
        self.pair = pair
        self.targets = targets
        self.target_index = target_index
        self.graphs = graphs
        self.caches = caches

    def __len__(self):
        return self.tokens.shape[0]

    def get_num_tokens(self):
        return self.tokens.shape[1]


def _pad_leading(arr, size, axes):
    widths = [(0, 0)] * arr.ndim
    for axis in range(axes):
        widths[axis] = (0, size - arr.shape[axis])
    return np.pad(arr, widths)


def _stack_targets(targets):
    if any(t is None for t in targets):
        return None
    return np.stack([np.asarray(t) for t in targets])


def collate(instances, pad_to=None):
    """
    Pads `instances` to a common token count and stacks them

    :param instances: instances to group, all prepared by one model
    :type instances: list
    :param pad_to: token count, defaults to the largest graph
    :type pad_to: int
    :raises InvalidInputError: If `instances` is empty, `pad_to` is too
                               small or the instances carry different
                               arrays
    :rtype: :py:class:`Batch`
    """
    if not instances:
        raise InvalidInputError('Cannot collate an empty batch')
    largest = max(inst.get_num_nodes() for inst in instances)
    size = largest if pad_to is None else int(pad_to)
    if size < largest:
        raise InvalidInputError('pad_to ' + str(size) + ' is smaller than '
                                'the largest graph (' + str(largest) + ')')
    node_names = sorted(instances[0].node_arrays)
    pair_names = sorted(instances[0].pair_arrays)
    for inst in instances:
        if sorted(inst.node_arrays) != node_names or\
                sorted(inst.pair_arrays) != pair_names:
            raise InvalidInputError('Instances in a batch must carry the '
                                    'same structural arrays')
    tokens = np.stack([_pad_leading(inst.graph.get_node_features(), size, 1)
                       for inst in instances])
    pad_mask = np.ones((len(instances), size), dtype=bool)
    for b, inst in enumerate(instances):
        pad_mask[b, :inst.get_num_nodes()] = False
    node = {name: np.stack([_pad_leading(inst.node_arrays[name], size, 1)
                            for inst in instances])
            for name in node_names}
    pair = {name: np.stack([_pad_leading(inst.pair_arrays[name], size, 2)
                            for inst in instances])
            for name in pair_names}
    if LOGGER.isEnabledFor(logging.DEBUG):
        LOGGER.debug('Collated ' + str(len(instances)) +
                     ' instances padded to ' + str(size) + ' tokens')
    return Batch(tokens, pad_mask, node, pair,
                 _stack_targets([inst.target for inst in instances]),
                 np.array([inst.target_index for inst in instances],
                          dtype=np.int64),
                 [inst.graph for inst in instances],
                 [inst.sc for inst in instances])


def pad_self_support(support, pad_mask):
    """
    Sets the diagonal entry of every pad row in a ``(B, N, N, ...)``
    support array so each row keeps at least one permitted pair
    """
    support = np.array(support, copy=True)
    b_idx, n_idx = np.nonzero(pad_mask)
    support[b_idx, n_idx, n_idx] = 1
    return support


def iterate_batches(instances, batch_size, rng=None):
    """
    Splits `instances` into consecutive groups of `batch_size`, after a
    shuffle when `rng` is given

    :return: generator of lists
    """
    order = np.arange(len(instances))
    if rng is not None:
        order = rng.permutation(len(instances))
    for start in range(0, len(order), batch_size):
        yield [instances[i] for i in order[start:start + batch_size]]
