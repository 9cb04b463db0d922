# -*- coding: utf-8 -*-

import logging

import numpy as np

from gtbench import tape
from gtbench.exceptions import InvalidInputError
from gtbench.exceptions import UndefinedMetricError

LOGGER = logging.getLogger(__name__)

MAE = 'mae'
BCE = 'bce-with-logits'
CROSS_ENTROPY = 'cross-entropy'

LOSS_KINDS = (MAE, BCE, CROSS_ENTROPY)

ROC_AUC = 'roc_auc'
AP = 'ap'
ACCURACY = 'accuracy'

METRIC_KINDS = (MAE, ROC_AUC, AP, ACCURACY)

HIGHER_IS_BETTER = {MAE: False, ROC_AUC: True, AP: True, ACCURACY: True}


def loss(kind, pred, target, pad_mask=None):
    """
    Mean loss over the non-pad elements of `pred`

    :param kind: one of :py:const:`LOSS_KINDS`
    :type kind: str
    :param pred: predictions or logits, array or
                 :py:class:`gtbench.tape.Var`. For
                 :py:const:`CROSS_ENTROPY` the last axis holds classes
    :param target: values, 0/1 labels or integer classes
    :param pad_mask: boolean, ``True`` where elements are padding. Same
                     shape as `target`
    :raises InvalidInputError: On unknown kind or shape mismatch
    :return: scalar loss
    """
    weight = None
    if pad_mask is not None:
        weight = (~np.asarray(pad_mask, dtype=bool)).astype(np.float64)
    if kind == MAE:
        return tape.mae_loss(pred, target, weight)
    if kind == BCE:
        return tape.bce_with_logits(pred, target, weight)
    if kind == CROSS_ENTROPY:
        return tape.cross_entropy(pred, target, weight)
    raise InvalidInputError('Unknown loss: ' + str(kind))


def _binary_labels(labels):
    labels = np.asarray(labels).reshape(-1)
    if not np.all((labels == 0) | (labels == 1)):
        raise InvalidInputError('Binary metrics need 0/1 labels')
    return labels.astype(np.int64)


def roc_auc(scores, labels):
    """
    Probability that a random positive scores above a random negative,
    ties counting one half

    :raises UndefinedMetricError: If only one class is present
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = _binary_labels(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        raise UndefinedMetricError('ROC-AUC is undefined when only one '
                                   'class is present')
    greater = np.sum(pos[:, None] > neg[None, :])
    ties = np.sum(pos[:, None] == neg[None, :])
    return float((greater + 0.5 * ties) / (pos.size * neg.size))


def average_precision(scores, labels):
    """
    ``sum_k (R_k - R_k-1) P_k`` over the ranking by descending score,
    equal scores ordered by ascending index

    :raises UndefinedMetricError: If only one class is present
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = _binary_labels(labels)
    total_pos = int(np.sum(labels))
    if total_pos == 0 or total_pos == labels.size:
        raise UndefinedMetricError('AP is undefined when only one class '
                                   'is present')
    order = np.lexsort((np.arange(scores.size), -scores))
    hits = labels[order]
    true_pos = np.cumsum(hits)
    precision = true_pos / np.arange(1, hits.size + 1)
    return float(np.sum(precision * hits) / total_pos)


def accuracy(scores, labels):
    """
    Fraction of correct predictions. Scores with a class axis are
    reduced by argmax, otherwise compared directly
    """
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    if scores.ndim == labels.ndim + 1:
        scores = np.argmax(scores, axis=-1)
    if scores.shape != labels.shape:
        raise InvalidInputError('Prediction shape ' + str(scores.shape) +
                                ' does not match labels ' +
                                str(labels.shape))
    if labels.size == 0:
        raise UndefinedMetricError('Accuracy of zero predictions')
    return float(np.mean(scores == labels))


def mean_absolute_error(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape:
        raise InvalidInputError('Prediction shape ' + str(scores.shape) +
                                ' does not match labels ' +
                                str(labels.shape))
    return float(np.mean(np.abs(scores - labels)))


def _multilabel(func, scores, labels):
    """
    Mean of `func` over label columns where it is defined
    """
    values = []
    for col in range(labels.shape[1]):
        try:
            values.append(func(scores[:, col], labels[:, col]))
        except UndefinedMetricError:
            LOGGER.debug('Skipping label column ' + str(col) +
                         ' with a single class')
    if not values:
        raise UndefinedMetricError('No label column has both classes')
    return float(np.mean(values))


def metric(kind, scores, labels):
    """
    Evaluates one metric

    :param kind: one of :py:const:`METRIC_KINDS`
    :type kind: str
    :param scores: predictions. For :py:const:`ROC_AUC` and
                   :py:const:`AP` a 2-D array is read as one column per
                   binary label and the mean over columns with both
                   classes is returned
    :param labels: ground truth
    :raises InvalidInputError: On unknown kind or shape mismatch
    :raises UndefinedMetricError: If the metric is undefined for
                                  `labels`
    :rtype: float
    """
    if kind == MAE:
        return mean_absolute_error(scores, labels)
    if kind == ACCURACY:
        return accuracy(scores, labels)
    if kind in (ROC_AUC, AP):
        func = roc_auc if kind == ROC_AUC else average_precision
        scores = np.asarray(scores, dtype=np.float64)
        labels = np.asarray(labels)
        if scores.ndim == 2 and scores.shape[1] > 1:
            if labels.shape != scores.shape:
                raise InvalidInputError('Prediction shape ' +
                                        str(scores.shape) +
                                        ' does not match labels ' +
                                        str(labels.shape))
            return _multilabel(func, scores, labels)
        return func(scores, labels)
    raise InvalidInputError('Unknown metric: ' + str(kind))
