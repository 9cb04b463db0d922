# -*- coding: utf-8 -*-

import logging

import numpy as np

from gtbench.exceptions import InvalidInputError

LOGGER = logging.getLogger(__name__)

LINEAR_DECAY = 'linear'
NO_DECAY = 'none'

LR_DECAYS = (LINEAR_DECAY, NO_DECAY)


class TrainState(object):
    """
    Adam bookkeeping

    :param step: updates applied so far
    :type step: int
    :param m: parameter name => first moment
    :type m: dict
    :param v: parameter name => second moment
    :type v: dict
    :param lr: learning rate used by the latest update
    :type lr: float
    """
    def __init__(self, step=0, m=None, v=None, lr=0.0):
        """
        Constructor
        """
        self.step = step
        self.m = m if m is not None else dict()
        self.v = v if v is not None else dict()
        self.lr = lr

    @staticmethod
    def for_params(params):
        """
        Zero moments shaped like `params`
        """
        return TrainState(m={k: np.zeros_like(v) for k, v in params.items()},
                          v={k: np.zeros_like(v) for k, v in params.items()})


def lr_at(step, cfg):
    """
    Linear warm-up from 0 to ``cfg.peak_lr`` over ``cfg.warmup_steps``,
    then linear decay reaching 0 at ``cfg.max_steps`` (or constant when
    ``cfg.lr_decay`` is ``none``)

    :param step: update count, at least 0
    :type step: int
    :param cfg: object with ``peak_lr``, ``warmup_steps``, ``max_steps``
                and ``lr_decay``
    :raises InvalidInputError: If `step` is negative
    :rtype: float
    """
    if step < 0:
        raise InvalidInputError('step must be nonnegative, got ' +
                                str(step))
    peak = float(cfg.peak_lr)
    warmup = int(cfg.warmup_steps)
    if step < warmup:
        return peak * step / warmup
    if cfg.lr_decay == NO_DECAY:
        return peak
    span = int(cfg.max_steps) - warmup
    if span <= 0:
        return 0.0
    return peak * max(0.0, (int(cfg.max_steps) - step) / span)


def global_norm(grads):
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_gradients(grads, clip_norm):
    """
    Scales all gradients together so their global norm is at most
    `clip_norm`

    :return: ``(clipped gradients, norm before clipping)``
    """
    norm = global_norm(grads)
    if clip_norm is None or clip_norm <= 0 or norm <= clip_norm:
        return grads, norm
    factor = clip_norm / norm
    return {k: g * factor for k, g in grads.items()}, norm


def adam_step(state, params, grads, cfg):
    """
    One Adam update with global norm clipping and decoupled weight
    decay. The learning rate is ``lr_at(state.step + 1, cfg)``

    :param state: moments and step count, not modified
    :type state: :py:class:`TrainState`
    :param params: name => array, not modified
    :type params: dict
    :param grads: name => gradient with the shape of the parameter
    :type grads: dict
    :param cfg: object with ``clip_norm``, ``weight_decay``,
                ``adam_eps``, ``adam_beta1``, ``adam_beta2`` and the
                fields read by :py:func:`lr_at`
    :raises InvalidInputError: If names or shapes do not line up
    :return: ``(new params, new state)``
    :rtype: tuple
    """
    if set(params) != set(grads):
        raise InvalidInputError('Gradients and parameters have different '
                                'names')
    for name, val in params.items():
        if np.shape(grads[name]) != np.shape(val):
            raise InvalidInputError('Gradient shape ' +
                                    str(np.shape(grads[name])) +
                                    ' does not match parameter ' + name +
                                    ' ' + str(np.shape(val)))
    grads, norm = clip_gradients(grads, cfg.clip_norm)
    step = state.step + 1
    lr = lr_at(step, cfg)
    b1 = cfg.adam_beta1
    b2 = cfg.adam_beta2
    new_params = type(params)()
    new_m = dict()
    new_v = dict()
    for name, p in params.items():
        g = grads[name]
        m = state.m.get(name, np.zeros_like(p))
        v = state.v.get(name, np.zeros_like(p))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** step)
        v_hat = v / (1.0 - b2 ** step)
        update = m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        new_params[name] = p - lr * update - lr * cfg.weight_decay * p
        new_m[name] = m
        new_v[name] = v
    if LOGGER.isEnabledFor(logging.DEBUG):
        LOGGER.debug('adam step ' + str(step) + ' lr ' + str(lr) +
                     ' grad norm ' + str(norm))
    return new_params, TrainState(step=step, m=new_m, v=new_v, lr=lr)
