# -*- coding: utf-8 -*-

"""
Minimal reverse-mode automatic differentiation.

Every primitive below accepts :py:class:`Var` objects or plain
:py:class:`numpy.ndarray` values. When no argument is a :py:class:`Var`
the primitive just computes and returns an array, so model code written
against these primitives also runs as a plain numeric forward pass.
When an argument is a :py:class:`Var` the result is recorded on its
:py:class:`Tape` and :py:func:`backward` can later walk the tape in
reverse to produce gradients for every leaf.
"""

import logging
from collections import namedtuple

import numpy as np

from gtbench import numkit
from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

TapeEntry = namedtuple('TapeEntry', ['op', 'inputs', 'output', 'saved'])
TapeEntry.__doc__ = """
One recorded primitive: op kind, input node ids, output node id and
any values needed by the backward rule
"""

_VJPS = {}


def _defvjp(op):
    """
    Registers the vector-Jacobian product rule for primitive `op`
    """
    def register(func):
        _VJPS[op] = func
        return func
    return register


class Var(object):
    """
    Node on a :py:class:`Tape` holding its forward value

    :param tape: Tape this node lives on
    :type tape: :py:class:`Tape`
    :param node_id: Id of node within `tape`
    :type node_id: int
    :param value: forward value
    :type value: :py:class:`numpy.ndarray`
    """
    __slots__ = ('tape', 'node_id', 'value')

    def __init__(self, tape, node_id, value):
        self.tape = tape
        self.node_id = node_id
        self.value = value

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __rsub__(self, other):
        return add(other, scale(self, -1.0))

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return mul(self, other)

    def __rmul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return mul(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __repr__(self):
        return 'Var(id=' + str(self.node_id) + ', shape=' +\
               str(self.value.shape) + ')'


class Tape(object):
    """
    Ordered record of primitive operations. Entries are appended as
    primitives run, so inputs of an entry always precede it
    """
    def __init__(self):
        """
        Constructor
        """
        self._entries = []
        self._values = []
        self._requires_grad = set()
        self._leaves = {}

    def __len__(self):
        return len(self._entries)

    @property
    def entries(self):
        return self._entries

    def _new_node(self, value):
        self._values.append(value)
        return len(self._values) - 1

    def variable(self, value, name=None):
        """
        Adds a leaf whose gradient :py:func:`backward` will report

        :param value: initial value
        :param name: Optional label kept for debugging
        :type name: str
        :return: leaf node
        :rtype: :py:class:`Var`
        """
        value = np.array(value, dtype=np.float64)
        node_id = self._new_node(value)
        self._requires_grad.add(node_id)
        self._leaves[node_id] = name
        return Var(self, node_id, value)

    def constant(self, value):
        """
        Adds a leaf that does not need a gradient

        :param value: value of constant
        :return: leaf node
        :rtype: :py:class:`Var`
        """
        value = np.asarray(value)
        if value.dtype != bool:
            value = value.astype(np.float64, copy=False)
        return Var(self, self._new_node(value), value)

    def value_of(self, node_id):
        return self._values[node_id]

    def requires_grad(self, node_id):
        return node_id in self._requires_grad

    def leaf_ids(self):
        return list(self._leaves.keys())

    def record(self, op, inputs, value, saved=None):
        """
        Appends an entry for primitive `op` and returns its output node

        :param op: primitive name, must have a registered backward rule
        :type op: str
        :param inputs: operands, :py:class:`Var` or array like
        :type inputs: tuple
        :param value: forward result
        :type value: :py:class:`numpy.ndarray`
        :param saved: extra values needed by the backward rule
        :type saved: dict
        :return: output node
        :rtype: :py:class:`Var`
        """
        ids = []
        needs_grad = False
        for x in inputs:
            if isinstance(x, Var):
                if x.tape is not self:
                    raise InvalidInputError('Operands live on '
                                            'different tapes')
                ids.append(x.node_id)
                needs_grad = needs_grad or x.node_id in self._requires_grad
            else:
                ids.append(self.constant(x).node_id)
        out_id = self._new_node(value)
        if needs_grad:
            self._requires_grad.add(out_id)
        self._entries.append(TapeEntry(op, tuple(ids), out_id,
                                       saved or {}))
        return Var(self, out_id, value)


def value_of(x):
    """
    Forward value of `x` whether it is a :py:class:`Var` or array like
    """
    if isinstance(x, Var):
        return x.value
    return np.asarray(x, dtype=np.float64)


def _tape_of(*xs):
    tape = None
    for x in xs:
        if isinstance(x, Var):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise InvalidInputError('Operands live on different tapes')
    return tape


def _unbroadcast(grad, shape):
    """
    Sums `grad` down to `shape`, undoing numpy broadcasting
    """
    if grad.shape == tuple(shape):
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def backward(tape, seed):
    """
    Single reverse pass over `tape` starting from scalar node `seed`

    :param tape: tape holding the computation
    :type tape: :py:class:`Tape`
    :param seed: scalar-valued output node
    :type seed: :py:class:`Var`
    :raises InvalidInputError: If `seed` is not scalar-valued
    :return: gradient for every leaf created via
             :py:meth:`Tape.variable`, keyed by node id. Leaves the seed
             does not depend on get zeros
    :rtype: dict
    """
    seed_value = tape.value_of(seed.node_id)
    if seed_value.size != 1:
        raise InvalidInputError('Seed must be scalar-valued, got shape ' +
                                str(seed_value.shape))
    grads = {seed.node_id: np.ones_like(seed_value)}
    for entry in reversed(tape.entries):
        g = grads.get(entry.output)
        if g is None:
            continue
        if entry.output != seed.node_id:
            del grads[entry.output]
        values = [tape.value_of(i) for i in entry.inputs]
        wanted = [tape.requires_grad(i) for i in entry.inputs]
        in_grads = _VJPS[entry.op](g, tape.value_of(entry.output),
                                   values, entry.saved, wanted)
        for node_id, flag, ig in zip(entry.inputs, wanted, in_grads):
            if not flag or ig is None:
                continue
            if node_id in grads:
                grads[node_id] = grads[node_id] + ig
            else:
                grads[node_id] = ig
    result = dict()
    for node_id in tape.leaf_ids():
        if node_id in grads:
            result[node_id] = grads[node_id]
        else:
            result[node_id] = np.zeros_like(tape.value_of(node_id))
    return result


def named_gradients(grad_map, variables):
    """
    Re-keys the output of :py:func:`backward` by parameter name

    :param grad_map: node id => gradient
    :type grad_map: dict
    :param variables: name => :py:class:`Var`
    :type variables: dict
    :return: name => gradient
    :rtype: dict
    """
    return {name: grad_map[var.node_id] for name, var in variables.items()}


def matmul(a, b, transpose_b=False):
    """
    ``a @ b`` or, with `transpose_b`, ``a @ swapaxes(b, -1, -2)``
    """
    tape = _tape_of(a, b)
    bv = value_of(b)
    if transpose_b:
        bv = np.swapaxes(bv, -1, -2)
    out = numkit.matmul(value_of(a), bv)
    if tape is None:
        return out
    return tape.record('matmul', (a, b), out, {'transpose_b': transpose_b})


@_defvjp('matmul')
def _matmul_vjp(g, out, values, saved, wanted):
    a, b = values
    ga = gb = None
    if saved['transpose_b']:
        if wanted[0]:
            ga = _unbroadcast(np.matmul(g, b), a.shape)
        if wanted[1]:
            gb = _unbroadcast(np.matmul(np.swapaxes(g, -1, -2), a), b.shape)
    else:
        if wanted[0]:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b, -1, -2)), a.shape)
        if wanted[1]:
            gb = _unbroadcast(np.matmul(np.swapaxes(a, -1, -2), g), b.shape)
    return ga, gb


def add(a, b):
    tape = _tape_of(a, b)
    out = value_of(a) + value_of(b)
    if tape is None:
        return out
    return tape.record('add', (a, b), out)


@_defvjp('add')
def _add_vjp(g, out, values, saved, wanted):
    return _unbroadcast(g, values[0].shape), _unbroadcast(g, values[1].shape)


def mul(a, b):
    """
    Elementwise product with broadcasting
    """
    tape = _tape_of(a, b)
    out = value_of(a) * value_of(b)
    if tape is None:
        return out
    return tape.record('mul', (a, b), out)


@_defvjp('mul')
def _mul_vjp(g, out, values, saved, wanted):
    a, b = values
    return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)


def scale(a, c):
    """
    Multiplies `a` by the python scalar `c`
    """
    tape = _tape_of(a)
    out = value_of(a) * float(c)
    if tape is None:
        return out
    return tape.record('scale', (a,), out, {'c': float(c)})


@_defvjp('scale')
def _scale_vjp(g, out, values, saved, wanted):
    return (g * saved['c'],)


def row_softmax(a):
    """
    Softmax over the last axis, see :py:func:`gtbench.numkit.row_softmax`
    """
    tape = _tape_of(a)
    out = numkit.row_softmax(value_of(a))
    if tape is None:
        return out
    return tape.record('row_softmax', (a,), out)


@_defvjp('row_softmax')
def _row_softmax_vjp(g, out, values, saved, wanted):
    return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)


def layer_norm(x, gain, bias, eps=1e-5):
    """
    Layer normalization over the last axis, see
    :py:func:`gtbench.numkit.layer_norm`
    """
    tape = _tape_of(x, gain, bias)
    out = numkit.layer_norm(value_of(x), value_of(gain), value_of(bias),
                            eps=eps)
    if tape is None:
        return out
    return tape.record('layer_norm', (x, gain, bias), out, {'eps': eps})


@_defvjp('layer_norm')
def _layer_norm_vjp(g, out, values, saved, wanted):
    x, gain, bias = values
    mean = np.mean(x, axis=-1, keepdims=True)
    var = np.mean((x - mean) ** 2, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + saved['eps'])
    xhat = (x - mean) * inv_std
    dxhat = g * gain.reshape(-1)
    dx = inv_std * (dxhat - np.mean(dxhat, axis=-1, keepdims=True) -
                    xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True))
    dgain = _unbroadcast(g * xhat, (x.shape[-1],)).reshape(gain.shape)
    dbias = _unbroadcast(g, (x.shape[-1],)).reshape(bias.shape)
    return dx, dgain, dbias


def relu(a):
    tape = _tape_of(a)
    out = np.maximum(value_of(a), 0.0)
    if tape is None:
        return out
    return tape.record('relu', (a,), out)


@_defvjp('relu')
def _relu_vjp(g, out, values, saved, wanted):
    return (g * (values[0] > 0),)


def leaky_relu(a, slope=0.2):
    tape = _tape_of(a)
    av = value_of(a)
    out = np.where(av > 0, av, slope * av)
    if tape is None:
        return out
    return tape.record('leaky_relu', (a,), out, {'slope': slope})


@_defvjp('leaky_relu')
def _leaky_relu_vjp(g, out, values, saved, wanted):
    return (g * np.where(values[0] > 0, 1.0, saved['slope']),)


def gelu(a):
    tape = _tape_of(a)
    out = numkit.gelu(value_of(a))
    if tape is None:
        return out
    return tape.record('gelu', (a,), out)


@_defvjp('gelu')
def _gelu_vjp(g, out, values, saved, wanted):
    return (g * numkit.gelu_derivative(values[0]),)


def identity(a):
    return a


ACTIVATIONS = {'relu': relu,
               'gelu': gelu,
               'identity': identity}
"""
Activation name => primitive
"""


def activation(name):
    """
    Looks up activation primitive by `name`

    :raises InvalidInputError: If `name` is unknown
    """
    if name not in ACTIVATIONS:
        raise InvalidInputError('Unknown activation: ' + str(name))
    return ACTIVATIONS[name]


def sum_all(a):
    tape = _tape_of(a)
    out = np.array(np.sum(value_of(a)))
    if tape is None:
        return out
    return tape.record('sum_all', (a,), out)


@_defvjp('sum_all')
def _sum_all_vjp(g, out, values, saved, wanted):
    return (np.broadcast_to(g, values[0].shape).copy(),)


def mean_all(a):
    tape = _tape_of(a)
    out = np.array(np.mean(value_of(a)))
    if tape is None:
        return out
    return tape.record('mean_all', (a,), out)


@_defvjp('mean_all')
def _mean_all_vjp(g, out, values, saved, wanted):
    return (np.broadcast_to(g / values[0].size, values[0].shape).copy(),)


def slice_last(a, start, stop):
    """
    ``a[..., start:stop]``
    """
    tape = _tape_of(a)
    out = value_of(a)[..., start:stop].copy()
    if tape is None:
        return out
    return tape.record('slice_last', (a,), out,
                       {'start': start, 'stop': stop})


@_defvjp('slice_last')
def _slice_last_vjp(g, out, values, saved, wanted):
    grad = np.zeros_like(values[0])
    grad[..., saved['start']:saved['stop']] = g
    return (grad,)


def concat_last(parts):
    """
    Concatenates `parts` along the last axis
    """
    parts = list(parts)
    tape = _tape_of(*parts)
    out = np.concatenate([value_of(p) for p in parts], axis=-1)
    if tape is None:
        return out
    widths = [value_of(p).shape[-1] for p in parts]
    return tape.record('concat_last', tuple(parts), out, {'widths': widths})


@_defvjp('concat_last')
def _concat_last_vjp(g, out, values, saved, wanted):
    grads = []
    start = 0
    for width in saved['widths']:
        grads.append(g[..., start:start + width])
        start += width
    return grads


def masked_fill(a, mask, fill):
    """
    Entries of `a` where boolean `mask` is ``True`` are replaced
    with `fill`. `mask` is a constant and broadcasts against `a`
    """
    tape = _tape_of(a)
    mask = np.asarray(mask, dtype=bool)
    out = np.where(mask, fill, value_of(a))
    if tape is None:
        return out
    return tape.record('masked_fill', (a,), out, {'mask': mask})


@_defvjp('masked_fill')
def _masked_fill_vjp(g, out, values, saved, wanted):
    return (_unbroadcast(np.where(saved['mask'], 0.0, g), values[0].shape),)


def reshape(a, shape):
    tape = _tape_of(a)
    out = np.reshape(value_of(a), shape)
    if tape is None:
        return out
    return tape.record('reshape', (a,), out)


@_defvjp('reshape')
def _reshape_vjp(g, out, values, saved, wanted):
    return (np.reshape(g, values[0].shape),)


def transpose(a, axes):
    tape = _tape_of(a)
    out = np.transpose(value_of(a), axes)
    if tape is None:
        return out
    return tape.record('transpose', (a,), out, {'axes': tuple(axes)})


@_defvjp('transpose')
def _transpose_vjp(g, out, values, saved, wanted):
    return (np.transpose(g, np.argsort(saved['axes'])),)


def _loss_weights(weight, shape):
    if weight is None:
        w = np.ones(shape)
    else:
        w = np.broadcast_to(np.asarray(weight, dtype=np.float64),
                            shape).copy()
    total = np.sum(w)
    if total <= 0:
        raise InvalidInputError('Loss weights sum to zero')
    return w, total


def mae_loss(pred, target, weight=None):
    """
    Weighted mean absolute error, ``sum(w |pred - target|) / sum(w)``
    """
    tape = _tape_of(pred)
    p = value_of(pred)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise InvalidInputError('Prediction shape ' + str(p.shape) +
                                ' does not match target ' + str(t.shape))
    w, total = _loss_weights(weight, p.shape)
    out = np.array(np.sum(w * np.abs(p - t)) / total)
    if tape is None:
        return out
    return tape.record('mae_loss', (pred,), out,
                       {'target': t, 'weight': w, 'total': total})


@_defvjp('mae_loss')
def _mae_loss_vjp(g, out, values, saved, wanted):
    diff = values[0] - saved['target']
    return (g * saved['weight'] * np.sign(diff) / saved['total'],)


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def bce_with_logits(logits, target, weight=None):
    """
    Weighted binary cross entropy on raw logits, computed as
    ``max(z, 0) - z y + log(1 + exp(-|z|))``
    """
    tape = _tape_of(logits)
    z = value_of(logits)
    y = np.asarray(target, dtype=np.float64)
    if z.shape != y.shape:
        raise InvalidInputError('Logit shape ' + str(z.shape) +
                                ' does not match target ' + str(y.shape))
    w, total = _loss_weights(weight, z.shape)
    elem = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    out = np.array(np.sum(w * elem) / total)
    if tape is None:
        return out
    return tape.record('bce_with_logits', (logits,), out,
                       {'target': y, 'weight': w, 'total': total})


@_defvjp('bce_with_logits')
def _bce_vjp(g, out, values, saved, wanted):
    z = values[0]
    return (g * saved['weight'] * (_sigmoid(z) - saved['target']) /
            saved['total'],)


def cross_entropy(logits, labels, weight=None):
    """
    Weighted softmax cross entropy. `logits` is ``(..., C)``, `labels`
    holds integer classes with the leading shape of `logits`
    """
    tape = _tape_of(logits)
    z = value_of(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != z.shape[:-1]:
        raise InvalidInputError('Label shape ' + str(labels.shape) +
                                ' does not match logits ' + str(z.shape))
    if np.any(labels < 0) or np.any(labels >= z.shape[-1]):
        raise InvalidInputError('Class label out of range')
    w, total = _loss_weights(weight, labels.shape)
    shifted = z - np.max(z, axis=-1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(shifted), axis=-1))
    picked = np.take_along_axis(shifted, labels[..., None], axis=-1)[..., 0]
    out = np.array(np.sum(w * (log_norm - picked)) / total)
    if tape is None:
        return out
    return tape.record('cross_entropy', (logits,), out,
                       {'labels': labels, 'weight': w, 'total': total})


@_defvjp('cross_entropy')
def _cross_entropy_vjp(g, out, values, saved, wanted):
    z = values[0]
    probs = numkit.row_softmax(z)
    onehot = np.zeros_like(z)
    np.put_along_axis(onehot, saved['labels'][..., None], 1.0, axis=-1)
    return (g * saved['weight'][..., None] * (probs - onehot) /
            saved['total'],)
