# -*- coding: utf-8 -*-

import logging

import numpy as np

from gtbench import tape
from gtbench import numkit
from gtbench import graphkit
from gtbench import txcore
from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

DEGREE_PE = 'degree'
LAPLACIAN_PE = 'eig'
SVD_PE = 'svd'

PE_KINDS = (DEGREE_PE, LAPLACIAN_PE, SVD_PE)

PE_SIZES = (3, 4, 5)
"""
Permitted eigenvector count ``k`` and singular triple count ``r``
"""

DEFAULT_PE_SIZE = 4

MAX_DEGREE = 64
"""
Degrees above this share the last row of the degree tables
"""


class PEParams(object):
    """
    Positional encoding settings and weights

    :param kind: one of :py:const:`PE_KINDS`
    :type kind: str
    :param size: ``k`` for eigenvectors, ``r`` for singular triples,
                 unused for degree
    :type size: int
    :param values: parameter name => array or
                   :py:class:`gtbench.tape.Var`. Degree encodings use
                   ``z`` (undirected) or ``z_in`` and ``z_out``
                   (directed), the others use ``w_map`` and ``b_map``
    :type values: dict
    :param max_degree: last row index of degree tables
    :type max_degree: int
    :param identity_map: add the encoding to tokens as is
    :type identity_map: bool
    """
    def __init__(self, kind, values, size=None, max_degree=MAX_DEGREE,
                 identity_map=False):
        """
        Constructor
        """
        if kind not in PE_KINDS:
            raise InvalidInputError('Unknown positional encoding: ' +
                                    str(kind))
        self.kind = kind
        self.size = size
        self.values = values
        self.max_degree = max_degree
        self.identity_map = identity_map

    def get(self, name):
        return self.values[name]

    def with_values(self, values):
        """
        Copy of these settings holding `values` instead
        """
        return PEParams(self.kind, values, size=self.size,
                        max_degree=self.max_degree,
                        identity_map=self.identity_map)


def pe_width(kind, size):
    """
    Column count of the raw encoding before mapping
    """
    if kind == LAPLACIAN_PE:
        return size
    if kind == SVD_PE:
        return 2 * size
    raise InvalidInputError('Degree encodings have model width')


def init_pe_params(kind, hidden, rng, size=DEFAULT_PE_SIZE, directed=False,
                   max_degree=MAX_DEGREE):
    """
    Fresh :py:class:`PEParams`

    :param hidden: model width ``d``
    :type hidden: int
    :param rng: random generator
    :type rng: :py:class:`numpy.random.Generator`
    """
    rows = max_degree + 1
    if kind == DEGREE_PE:
        if directed:
            values = {'z_in': rng.normal(0.0, 0.02, size=(rows, hidden)),
                      'z_out': rng.normal(0.0, 0.02, size=(rows, hidden))}
        else:
            values = {'z': rng.normal(0.0, 0.02, size=(rows, hidden))}
        return PEParams(kind, values, max_degree=max_degree,
                        identity_map=True)
    width = pe_width(kind, size)
    values = {'w_map': txcore.uniform_init(rng, width, (width, hidden)),
              'b_map': txcore.uniform_init(rng, width, (hidden,))}
    return PEParams(kind, values, size=size, max_degree=max_degree)


def degree_onehot(degree, max_degree=MAX_DEGREE):
    """
    ``(n, max_degree + 1)`` one-hot rows of clipped degrees
    """
    idx = np.minimum(np.asarray(degree, dtype=np.int64), max_degree)
    onehot = np.zeros((idx.shape[0], max_degree + 1))
    onehot[np.arange(idx.shape[0]), idx] = 1.0
    return onehot


def degree_lookup(in_onehot, out_onehot, p):
    """
    Table lookups from one-hot degree rows (any leading shape). An
    undirected encoding passes the same rows twice and only ``z`` is read
    """
    if 'z' in p.values:
        return tape.matmul(in_onehot, p.get('z'))
    return tape.add(tape.matmul(in_onehot, p.get('z_in')),
                    tape.matmul(out_onehot, p.get('z_out')))


def degree_pe(graph, p, sc=None):
    """
    Row ``i`` is ``z_in[indeg(i)] + z_out[outdeg(i)]``, or ``z[deg(i)]``
    for undirected graphs, with degrees clipped at ``p.max_degree``

    :param graph: graph to encode
    :type graph: :py:class:`gtbench.graphkit.Graph`
    :param p: degree encoding
    :type p: :py:class:`PEParams`
    :param sc: optional cache for `graph`
    :type sc: :py:class:`gtbench.graphkit.StructCache`
    :return: ``(n, d)`` encoding
    """
    if p.kind != DEGREE_PE:
        raise InvalidInputError('degree_pe needs degree parameters, got ' +
                                str(p.kind))
    if sc is None:
        sc = graphkit.StructCache(graph)
    indeg, outdeg = sc.get_degrees()
    return degree_lookup(degree_onehot(indeg, p.max_degree),
                         degree_onehot(outdeg, p.max_degree), p)


def random_signs(rng, count):
    """
    ``count`` independent signs, each -1 with probability one half
    """
    return np.where(rng.random(count) < 0.5, -1.0, 1.0)


def laplacian_pe(graph, k, rng=None, training=False, sc=None):
    """
    Eigenvectors of the normalized Laplacian for the `k` smallest
    eigenvalues above :py:const:`gtbench.graphkit.NONTRIVIAL_EIGENVALUE`.
    Missing columns are zero. During training each column is negated
    with probability one half

    :param graph: undirected graph
    :type graph: :py:class:`gtbench.graphkit.Graph`
    :param k: column count
    :type k: int
    :param rng: random generator, needed when `training`
    :param training: apply random sign flips
    :type training: bool
    :raises InvalidInputError: If `graph` is directed
    :return: ``(n, k)`` matrix
    :rtype: :py:class:`numpy.ndarray`
    """
    if graph.is_directed():
        raise InvalidInputError('laplacian_pe requires an undirected graph')
    if sc is None:
        sc = graphkit.StructCache(graph)
    eig = sc.get_laplacian_eig()
    keep = np.flatnonzero(eig.eigenvalues > graphkit.NONTRIVIAL_EIGENVALUE)
    keep = keep[:k]
    out = np.zeros((graph.get_num_nodes(), k))
    out[:, :keep.shape[0]] = eig.eigenvectors[:, keep]
    if training:
        out = out * random_signs(rng, k)
    return out


def svd_pe(graph, r, rng=None, training=False):
    """
    ``U sqrt(S) || V sqrt(S)`` from the top `r` singular triples of the
    adjacency. During training each pair of matching left and right
    columns is negated together with probability one half

    :param graph: graph to encode
    :type graph: :py:class:`gtbench.graphkit.Graph`
    :param r: triple count, at least 1 and at most n
    :type r: int
    :raises InvalidInputError: If `r` is out of range
    :return: ``(n, 2r)`` matrix
    :rtype: :py:class:`numpy.ndarray`
    """
    n = graph.get_num_nodes()
    if r < 1 or r > n:
        raise InvalidInputError('svd_pe rank ' + str(r) +
                                ' must be in [1, ' + str(n) + ']')
    res = numkit.truncated_svd(graph.get_adjacency(), r)
    root = np.sqrt(res.s)
    left = res.u * root
    right = res.v * root
    if training:
        signs = random_signs(rng, r)
        left = left * signs
        right = right * signs
    return np.concatenate([left, right], axis=1)


def padded_svd_pe(graph, r):
    """
    :py:func:`svd_pe` in eval mode with rank ``min(r, n)`` and zero
    columns filling each half out to `r`
    """
    n = graph.get_num_nodes()
    out = np.zeros((n, 2 * r))
    rank = min(r, n)
    if rank == 0:
        return out
    raw = svd_pe(graph, rank)
    out[:, :rank] = raw[:, :rank]
    out[:, r:r + rank] = raw[:, rank:]
    return out


def flip_signs(pe, kind, signs):
    """
    Applies per column (eigenvector) or per pair (singular) `signs` to
    a raw encoding of any leading shape
    """
    if kind == SVD_PE:
        signs = np.concatenate([signs, signs], axis=-1)
    return pe * signs[..., None, :]


def apply_pe(x, pe, p):
    """
    ``x + pe w_map + b_map``, or ``x + pe`` when `p` is flagged as an
    identity map

    :param x: tokens ``(..., n, d)``
    :param pe: encoding ``(..., n, width)``
    :param p: encoding parameters
    :type p: :py:class:`PEParams`
    :raises InvalidInputError: If the widths do not line up
    """
    xv = tape.value_of(x)
    pv = tape.value_of(pe)
    if xv.shape[:-1] != pv.shape[:-1]:
        raise InvalidInputError('Token rows ' + str(xv.shape[:-1]) +
                                ' do not match encoding rows ' +
                                str(pv.shape[:-1]))
    if p.identity_map:
        if pv.shape[-1] != xv.shape[-1]:
            raise InvalidInputError('Encoding width ' + str(pv.shape[-1]) +
                                    ' needs a map to reach width ' +
                                    str(xv.shape[-1]))
        return tape.add(x, pe)
    w_map = p.get('w_map')
    if tape.value_of(w_map).shape[0] != pv.shape[-1]:
        raise InvalidInputError('Encoding width ' + str(pv.shape[-1]) +
                                ' does not match map input width ' +
                                str(tape.value_of(w_map).shape[0]))
    return tape.add(x, tape.add(tape.matmul(pe, w_map), p.get('b_map')))
