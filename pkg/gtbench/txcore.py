# -*- coding: utf-8 -*-

"""
Post-norm Transformer encoder written against :py:mod:`gtbench.tape`
primitives. Token tensors are ``(..., n, d)``; a single graph is
``(n, d)`` and a padded batch is ``(B, n, d)``.
"""

import logging

import numpy as np

from gtbench import tape
from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

SMALL = 'small'
MIDDLE = 'middle'
LARGE = 'large'

MODEL_SIZES = {SMALL: {'layers': 6, 'hidden': 80, 'ffn_hidden': 80,
                       'heads': 8, 'head_dim': 10},
               MIDDLE: {'layers': 12, 'hidden': 80, 'ffn_hidden': 80,
                        'heads': 8, 'head_dim': 10},
               LARGE: {'layers': 12, 'hidden': 512, 'ffn_hidden': 512,
                       'heads': 32, 'head_dim': 16}}
"""
Model sizes by tag: layers, hidden dimension, FFN inner dimension,
head count and per-head dimension
"""

CUSTOM = 'custom'

NODE_READOUT = 'node'
MEAN_READOUT = 'mean'
TARGET_READOUT = 'target'

READOUTS = (NODE_READOUT, MEAN_READOUT, TARGET_READOUT)

LAYER_PARAM_NAMES = ('q', 'k', 'v', 'o', 'w1', 'b1', 'w2', 'b2',
                     'ln1_gain', 'ln1_bias', 'ln2_gain', 'ln2_bias')


class ModelConfig(object):
    """
    Transformer shape and regularization settings

    :param layers: number of blocks
    :type layers: int
    :param hidden: model width ``d``
    :type hidden: int
    :param ffn_hidden: inner FFN width
    :type ffn_hidden: int
    :param heads: number of attention heads
    :type heads: int
    :param head_dim: width of each head, ``heads * head_dim == hidden``
    :type head_dim: int
    :param activation: FFN activation, one of
                       :py:const:`gtbench.tape.ACTIVATIONS`
    :type activation: str
    :param attn_dropout: dropout rate on attention weights
    :type attn_dropout: float
    :param ffn_dropout: dropout rate on FFN hidden activations
    :type ffn_dropout: float
    :param size_tag: ``small``, ``middle``, ``large`` or ``custom``
    :type size_tag: str
    :raises InvalidInputError: If the values are inconsistent
    """
    def __init__(self, layers, hidden, ffn_hidden, heads, head_dim,
                 activation='gelu', attn_dropout=0.0, ffn_dropout=0.0,
                 size_tag=CUSTOM):
        """
        Constructor
        """
        self.layers = int(layers)
        self.hidden = int(hidden)
        self.ffn_hidden = int(ffn_hidden)
        self.heads = int(heads)
        self.head_dim = int(head_dim)
        self.activation = activation
        self.attn_dropout = float(attn_dropout)
        self.ffn_dropout = float(ffn_dropout)
        self.size_tag = size_tag
        self._validate()

    def _validate(self):
        if self.layers < 0:
            raise InvalidInputError('layers must be nonnegative')
        for name in ('hidden', 'ffn_hidden', 'heads', 'head_dim'):
            if getattr(self, name) < 1:
                raise InvalidInputError(name + ' must be positive')
        if self.heads * self.head_dim != self.hidden:
            raise InvalidInputError('heads * head_dim (' +
                                    str(self.heads * self.head_dim) +
                                    ') must equal hidden (' +
                                    str(self.hidden) + ')')
        tape.activation(self.activation)
        for name in ('attn_dropout', 'ffn_dropout'):
            rate = getattr(self, name)
            if rate < 0.0 or rate >= 1.0:
                raise InvalidInputError(name + ' must be in [0, 1)')
        if self.size_tag in MODEL_SIZES:
            expected = MODEL_SIZES[self.size_tag]
            for key, val in expected.items():
                if getattr(self, key) != val:
                    raise InvalidInputError('size ' + self.size_tag +
                                            ' requires ' + key + '=' +
                                            str(val))
        elif self.size_tag != CUSTOM:
            raise InvalidInputError('Unknown size tag: ' +
                                    str(self.size_tag))

    def as_dict(self):
        return {'layers': self.layers, 'hidden': self.hidden,
                'ffn_hidden': self.ffn_hidden, 'heads': self.heads,
                'head_dim': self.head_dim, 'activation': self.activation,
                'attn_dropout': self.attn_dropout,
                'ffn_dropout': self.ffn_dropout, 'size_tag': self.size_tag}

    def __eq__(self, other):
        if not isinstance(other, ModelConfig):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    __hash__ = None

    def __repr__(self):
        return 'ModelConfig(' + str(self.as_dict()) + ')'


def model_config(size_tag, activation='gelu', attn_dropout=0.0,
                 ffn_dropout=0.0):
    """
    :py:class:`ModelConfig` for one of the tags in
    :py:const:`MODEL_SIZES`

    :raises InvalidInputError: If `size_tag` is unknown
    """
    if size_tag not in MODEL_SIZES:
        raise InvalidInputError('Unknown size tag: ' + str(size_tag))
    return ModelConfig(activation=activation, attn_dropout=attn_dropout,
                       ffn_dropout=ffn_dropout, size_tag=size_tag,
                       **MODEL_SIZES[size_tag])


class LayerParams(object):
    """
    Weights of one block. Attributes are named after
    :py:const:`LAYER_PARAM_NAMES` and hold either
    :py:class:`numpy.ndarray` or :py:class:`gtbench.tape.Var` values
    """
    def __init__(self, **kwargs):
        """
        Constructor
        """
        missing = [n for n in LAYER_PARAM_NAMES if n not in kwargs]
        if missing:
            raise InvalidInputError('Missing layer parameters: ' +
                                    ', '.join(missing))
        for name in LAYER_PARAM_NAMES:
            setattr(self, name, kwargs[name])

    @staticmethod
    def from_dict(values, prefix=''):
        """
        Picks ``<prefix><name>`` entries out of `values`
        """
        return LayerParams(**{name: values[prefix + name]
                              for name in LAYER_PARAM_NAMES})

    def as_dict(self, prefix=''):
        return {prefix + name: getattr(self, name)
                for name in LAYER_PARAM_NAMES}


def uniform_init(rng, fan_in, shape):
    """
    Uniform draw in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``
    """
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_layer_params(cfg, rng):
    """
    Fresh weights for one block

    :param cfg: shape settings
    :type cfg: :py:class:`ModelConfig`
    :param rng: random generator
    :type rng: :py:class:`numpy.random.Generator`
    :rtype: :py:class:`LayerParams`
    """
    d = cfg.hidden
    d_f = cfg.ffn_hidden
    return LayerParams(q=uniform_init(rng, d, (d, d)),
                       k=uniform_init(rng, d, (d, d)),
                       v=uniform_init(rng, d, (d, d)),
                       o=uniform_init(rng, d, (d, d)),
                       w1=uniform_init(rng, d, (d, d_f)),
                       b1=uniform_init(rng, d, (d_f,)),
                       w2=uniform_init(rng, d_f, (d_f, d)),
                       b2=uniform_init(rng, d_f, (d,)),
                       ln1_gain=np.ones(d), ln1_bias=np.zeros(d),
                       ln2_gain=np.ones(d), ln2_bias=np.zeros(d))


class AttnModifier(object):
    """
    Base class for changes to the attention scores of one layer.
    Subclasses override :py:meth:`transform` to rewrite scores and
    :py:meth:`get_keep` to exclude pairs
    """
    shared_qk = False
    degree_residual = False

    def transform(self, scores):
        """
        Rewrites ``(..., H, n, n)`` `scores` before softmax
        """
        return scores

    def get_keep(self):
        """
        Boolean array broadcastable to the scores marking pairs that
        may receive weight, or ``None`` when every pair may
        """
        return None

    def get_inv_sqrt_degree(self):
        return None


class NoModifier(AttnModifier):
    """
    Plain attention
    """
    pass


class MaskModifier(AttnModifier):
    """
    Pairs where `mask` is 0 are excluded. When `weight` is given the
    permitted scores are multiplied by it first

    :param mask: 0/1 array ``(..., H or 1, n, n)``
    :param weight: optional multiplicative weights, same shape rules
    :raises InvalidInputError: If a row of `mask` is entirely 0
    """
    def __init__(self, mask, weight=None):
        """
        Constructor
        """
        mask = np.asarray(mask)
        self._keep = mask > 0
        if self._keep.ndim < 2:
            raise InvalidInputError('mask must be at least 2-D')
        if np.any(~np.any(self._keep, axis=-1)):
            raise InvalidInputError('mask has a row with no permitted '
                                    'entry')
        self._weight = weight

    def get_mask(self):
        return self._keep.astype(np.float64)

    def get_weight(self):
        return self._weight

    def transform(self, scores):
        if self._weight is None:
            return scores
        return tape.mul(scores, self._weight)

    def get_keep(self):
        return self._keep


class AdditiveBiasModifier(AttnModifier):
    """
    Adds `bias` (``(..., H or 1, n, n)``, may be a tape variable) to
    the scores
    """
    def __init__(self, bias):
        """
        Constructor
        """
        self._bias = bias

    def get_bias(self):
        return self._bias

    def transform(self, scores):
        return tape.add(scores, self._bias)


class KernelHadamardModifier(AttnModifier):
    """
    Multiplies scores elementwise by a graph kernel. Pairs where the
    kernel is exactly 0 are outside its support and get no weight

    :param kernel: ``(..., 1, n, n)`` kernel values
    :param shared_qk: compute scores with the query weights for keys too
    :type shared_qk: bool
    :param inv_sqrt_degree: ``(..., n)`` factors applied to the
                            attention output before the residual add,
                            or ``None`` to skip degree normalization
    """
    def __init__(self, kernel, shared_qk=True, inv_sqrt_degree=None):
        """
        Constructor
        """
        self._kernel = np.asarray(kernel, dtype=np.float64)
        self._keep = self._kernel != 0.0
        self.shared_qk = bool(shared_qk)
        self.degree_residual = inv_sqrt_degree is not None
        self._inv_sqrt_degree = inv_sqrt_degree

    def get_kernel(self):
        return self._kernel

    def transform(self, scores):
        return tape.mul(scores, self._kernel)

    def get_keep(self):
        if np.all(self._keep):
            return None
        return self._keep

    def get_inv_sqrt_degree(self):
        return self._inv_sqrt_degree


def inv_sqrt_degree(degree):
    """
    ``1/sqrt(deg)`` with 0 for zero degree
    """
    degree = np.asarray(degree, dtype=np.float64)
    out = np.zeros_like(degree)
    nonzero = degree > 0
    out[nonzero] = 1.0 / np.sqrt(degree[nonzero])
    return out


def dropout(x, rate, rng, training):
    """
    Inverted dropout. Identity outside training or when `rate` is 0
    """
    if not training or rate <= 0.0:
        return x
    if rng is None:
        raise InvalidInputError('Training mode dropout needs an rng')
    keep = rng.random(tape.value_of(x).shape) >= rate
    return tape.mul(x, keep / (1.0 - rate))


def attention_scores(qh, kh, scale_dim):
    """
    ``qh kh^T / sqrt(scale_dim)`` over the last two axes of projected
    queries and keys

    :raises InvalidInputError: On dimension mismatch
    """
    return tape.scale(tape.matmul(qh, kh, transpose_b=True),
                      1.0 / np.sqrt(scale_dim))


def _split_heads(x, heads):
    shape = tape.value_of(x).shape
    x = tape.reshape(x, shape[:-1] + (heads, shape[-1] // heads))
    nd = len(shape) + 1
    axes = list(range(nd - 3)) + [nd - 2, nd - 3, nd - 1]
    return tape.transpose(x, axes)


def _merge_heads(x):
    shape = tape.value_of(x).shape
    nd = len(shape)
    axes = list(range(nd - 3)) + [nd - 2, nd - 3, nd - 1]
    x = tape.transpose(x, axes)
    return tape.reshape(x, shape[:-3] + (shape[-2], shape[-3] * shape[-1]))


def _padding_keep(pad_mask, n):
    """
    Real query rows may see real keys only, pad rows see only themselves
    """
    real = ~np.asarray(pad_mask, dtype=bool)
    eye = np.eye(n, dtype=bool)
    keep = real[..., :, None] & real[..., None, :]
    keep = keep | (eye & ~real[..., :, None])
    return keep[..., None, :, :]


def attention_weights(x, p, cfg, mod=None, pad_mask=None):
    """
    Per head attention weights ``(..., H, n, n)`` of one layer after
    the modifier, padding rule and softmax are applied

    :param x: tokens ``(..., n, d)``
    :param p: layer weights
    :type p: :py:class:`LayerParams`
    :param cfg: model shape
    :type cfg: :py:class:`ModelConfig`
    :param mod: attention modifier
    :type mod: :py:class:`AttnModifier`
    :param pad_mask: boolean ``(..., n)``, ``True`` on pad tokens
    :raises DegenerateMaskError: If a row ends up entirely excluded
    """
    if mod is None:
        mod = NoModifier()
    n = tape.value_of(x).shape[-2]
    qh = _split_heads(tape.matmul(x, p.q), cfg.heads)
    key_w = p.q if mod.shared_qk else p.k
    kh = _split_heads(tape.matmul(x, key_w), cfg.heads)
    scores = attention_scores(qh, kh, cfg.hidden)
    scores = mod.transform(scores)
    keep = mod.get_keep()
    if pad_mask is not None and np.any(pad_mask):
        pad_keep = _padding_keep(pad_mask, n)
        if keep is None:
            keep = pad_keep
        else:
            real_row = ~np.asarray(pad_mask, dtype=bool)[..., None, :, None]
            keep = np.where(real_row, keep & pad_keep, pad_keep)
    if keep is not None and not np.all(keep):
        scores = tape.masked_fill(scores, ~keep, -np.inf)
    return tape.row_softmax(scores)


def mhsa_forward(x, p, cfg, mod=None, pad_mask=None, training=False,
                 rng=None):
    """
    Multi-head self-attention sublayer with residual add and layer
    normalization.

    Heads are computed from ``x q`` and ``x k`` split into
    ``cfg.heads`` slices of ``cfg.head_dim`` columns; scores are scaled
    by ``1/sqrt(cfg.hidden)``. Head outputs are concatenated and
    projected by ``p.o``. When the modifier asks for degree
    normalization the projected output is scaled row-wise by
    ``D^-1/2`` before the residual add

    :param x: tokens ``(..., n, d)``
    :param p: layer weights
    :type p: :py:class:`LayerParams`
    :param cfg: model shape
    :type cfg: :py:class:`ModelConfig`
    :param mod: attention modifier, ``None`` for plain attention
    :type mod: :py:class:`AttnModifier`
    :param pad_mask: boolean ``(..., n)``, ``True`` on pad tokens
    :param training: enables attention dropout
    :type training: bool
    :param rng: random generator used for dropout
    :raises DegenerateMaskError: If a row ends up entirely excluded
    :return: ``layer_norm(x + attention(x))``
    """
    if mod is None:
        mod = NoModifier()
    weights = attention_weights(x, p, cfg, mod=mod, pad_mask=pad_mask)
    weights = dropout(weights, cfg.attn_dropout, rng, training)
    vh = _split_heads(tape.matmul(x, p.v), cfg.heads)
    mixed = _merge_heads(tape.matmul(weights, vh))
    out = tape.matmul(mixed, p.o)
    scale = mod.get_inv_sqrt_degree()
    if mod.degree_residual and scale is not None:
        out = tape.mul(out, np.asarray(scale)[..., None])
    return tape.layer_norm(tape.add(x, out), p.ln1_gain, p.ln1_bias)


def ffn_forward(m, p, cfg, training=False, rng=None):
    """
    ``layer_norm(m + act(m w1 + b1) w2 + b2)`` with dropout on the
    hidden activation during training
    """
    act = tape.activation(cfg.activation)
    hidden = act(tape.add(tape.matmul(m, p.w1), p.b1))
    hidden = dropout(hidden, cfg.ffn_dropout, rng, training)
    out = tape.add(tape.matmul(hidden, p.w2), p.b2)
    return tape.layer_norm(tape.add(m, out), p.ln2_gain, p.ln2_bias)


def transformer_block(x, p, cfg, mod=None, pad_mask=None, training=False,
                      rng=None, branch=None):
    """
    One block. `branch`, when given, is called with the attention output
    and its result is added before the FFN
    """
    m = mhsa_forward(x, p, cfg, mod=mod, pad_mask=pad_mask,
                     training=training, rng=rng)
    if branch is not None:
        m = tape.add(m, branch(m))
    return ffn_forward(m, p, cfg, training=training, rng=rng)


def readout(h, tag, pad_mask=None, target_index=None):
    """
    Reduces token representations

    :param h: tokens ``(..., n, d)``
    :param tag: :py:const:`NODE_READOUT` returns `h`,
                :py:const:`MEAN_READOUT` averages non-pad tokens and
                :py:const:`TARGET_READOUT` picks ``target_index``
    :param pad_mask: boolean ``(..., n)``
    :param target_index: int or ``(...,)`` integer array
    :return: ``h`` or ``(..., d)``
    """
    value = tape.value_of(h)
    n = value.shape[-2]
    lead = value.shape[:-2]
    if tag == NODE_READOUT:
        return h
    if tag == MEAN_READOUT:
        if pad_mask is None:
            real = np.ones(lead + (n,))
        else:
            real = (~np.asarray(pad_mask, dtype=bool)).astype(np.float64)
        counts = np.sum(real, axis=-1, keepdims=True)
        if np.any(counts == 0):
            raise InvalidInputError('Mean readout over zero real tokens')
        pick = (real / counts)[..., None, :]
    elif tag == TARGET_READOUT:
        if target_index is None:
            raise InvalidInputError('Target readout needs target_index')
        idx = np.broadcast_to(np.asarray(target_index, dtype=np.int64),
                              lead)
        pick = np.zeros(lead + (1, n))
        np.put_along_axis(pick, idx[..., None, None], 1.0, axis=-1)
    else:
        raise InvalidInputError('Unknown readout: ' + str(tag))
    pooled = tape.matmul(pick, h)
    return tape.reshape(pooled, lead + (value.shape[-1],))


def model_forward(tokens, params, cfg, mods=None, readout_tag=NODE_READOUT,
                  pad_mask=None, target_index=None, training=False, rng=None,
                  branches=None):
    """
    Runs the block stack and the readout

    :param tokens: input tokens ``(..., n, d)``
    :param params: one :py:class:`LayerParams` per layer
    :type params: list
    :param cfg: model shape
    :type cfg: :py:class:`ModelConfig`
    :param mods: one modifier per layer, ``None`` for plain attention
    :type mods: list
    :param readout_tag: see :py:func:`readout`
    :param branches: one callable or ``None`` per layer, see
                     :py:func:`transformer_block`
    :raises InvalidInputError: If list lengths disagree with
                               ``cfg.layers``
    """
    if len(params) != cfg.layers:
        raise InvalidInputError('Expected ' + str(cfg.layers) +
                                ' layer parameter sets, got ' +
                                str(len(params)))
    if mods is None:
        mods = [None] * cfg.layers
    if branches is None:
        branches = [None] * cfg.layers
    if len(mods) != cfg.layers or len(branches) != cfg.layers:
        raise InvalidInputError('Modifier and branch lists must have ' +
                                str(cfg.layers) + ' entries')
    width = tape.value_of(tokens).shape[-1]
    if width != cfg.hidden:
        raise InvalidInputError('Token width ' + str(width) +
                                ' does not match hidden ' + str(cfg.hidden))
    h = tokens
    for p, mod, branch in zip(params, mods, branches):
        h = transformer_block(h, p, cfg, mod=mod, pad_mask=pad_mask,
                              training=training, rng=rng, branch=branch)
    return readout(h, readout_tag, pad_mask=pad_mask,
                   target_index=target_index)
