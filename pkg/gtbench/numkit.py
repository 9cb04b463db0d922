# -*- coding: utf-8 -*-

import logging
from collections import namedtuple

import numpy as np

from gtbench.exceptions import InvalidInputError
from gtbench.exceptions import NumericError
from gtbench.exceptions import DegenerateMaskError

LOGGER = logging.getLogger(__name__)

NEG_INF = -np.inf
"""
Sentinel written into attention scores that must receive zero weight
"""

JACOBI_TOLERANCE = 1e-12
"""
Off-diagonal Frobenius mass below which a Jacobi sweep is converged
"""

JACOBI_MAX_SWEEPS = 100

SYMMETRY_TOLERANCE = 1e-10

SVD_ZERO_TOLERANCE = 1e-10
"""
Singular values below this fraction of the largest are treated as zero
"""

EigResult = namedtuple('EigResult', ['eigenvalues', 'eigenvectors'])
EigResult.__doc__ = """
Symmetric eigendecomposition. ``eigenvalues`` ascending, ``eigenvectors``
holds the matching orthonormal vectors as columns
"""

SvdResult = namedtuple('SvdResult', ['u', 's', 'v'])
SvdResult.__doc__ = """
Thin singular value decomposition ``a = u @ diag(s) @ v.T`` with
``s`` descending and nonnegative
"""


def as_matrix(values, name='matrix', allow_neg_inf=False):
    """
    Converts `values` into a 2-D 64-bit float :py:class:`numpy.ndarray`
    rejecting anything that is not finite

    :param values: Nested lists or array like
    :param name: Name used in error messages
    :type name: str
    :param allow_neg_inf: If ``True`` entries equal to ``-inf`` are
                          permitted (masked attention scores)
    :type allow_neg_inf: bool
    :raises InvalidInputError: If result is not 2-D
    :raises NumericError: If any entry is NaN or infinite
    :return: copy of `values` as float64 matrix
    :rtype: :py:class:`numpy.ndarray`
    """
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(name + ' must be 2-D, got shape ' +
                                str(arr.shape))
    check_finite(arr, name=name, allow_neg_inf=allow_neg_inf)
    return arr


def check_finite(arr, name='array', allow_neg_inf=False):
    """
    Raises :py:class:`~gtbench.exceptions.NumericError` if `arr` holds
    NaN or infinite entries

    :param arr: values to check
    :type arr: :py:class:`numpy.ndarray`
    :param name: Name used in error message
    :type name: str
    :param allow_neg_inf: If ``True`` ``-inf`` entries are accepted
    :type allow_neg_inf: bool
    """
    if allow_neg_inf:
        bad = np.isnan(arr) | np.isposinf(arr)
    else:
        bad = ~np.isfinite(arr)
    if np.any(bad):
        raise NumericError(name + ' contains non-finite values')


def matmul(a, b):
    """
    Matrix product of `a` and `b`. Leading dimensions broadcast
    the way :py:func:`numpy.matmul` broadcasts them

    :param a: left operand
    :type a: :py:class:`numpy.ndarray`
    :param b: right operand
    :type b: :py:class:`numpy.ndarray`
    :raises InvalidInputError: If inner dimensions do not agree
    :return: product
    :rtype: :py:class:`numpy.ndarray`
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise InvalidInputError('Dimension mismatch: cannot multiply ' +
                                str(a.shape) + ' by ' + str(b.shape))
    return np.matmul(a, b)


def row_softmax(a):
    """
    Softmax over the last axis. The row maximum is subtracted before
    exponentiation and entries equal to ``-inf`` get exactly zero weight

    :param a: scores, may contain ``-inf``
    :type a: :py:class:`numpy.ndarray`
    :raises DegenerateMaskError: If any row is entirely ``-inf``
    :raises NumericError: If `a` holds NaN or ``+inf``
    :return: row stochastic array with the shape of `a`
    :rtype: :py:class:`numpy.ndarray`
    """
    a = np.asarray(a, dtype=np.float64)
    check_finite(a, name='softmax input', allow_neg_inf=True)
    masked = np.isneginf(a)
    if np.any(np.all(masked, axis=-1)):
        raise DegenerateMaskError('Attention row is entirely masked')
    shifted = a - np.max(a, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def layer_norm(x, gain, bias, eps=1e-5):
    """
    Normalizes each row of `x` by its mean and population variance then
    applies the elementwise affine map ``gain``, ``bias``

    :param x: input with features along the last axis
    :type x: :py:class:`numpy.ndarray`
    :param gain: scale, length equal to last dimension of `x`
    :param bias: shift, length equal to last dimension of `x`
    :param eps: added to variance
    :type eps: float
    :raises InvalidInputError: If `gain` or `bias` length does not match
    :return: normalized array
    :rtype: :py:class:`numpy.ndarray`
    """
    x = np.asarray(x, dtype=np.float64)
    gain = np.asarray(gain, dtype=np.float64).reshape(-1)
    bias = np.asarray(bias, dtype=np.float64).reshape(-1)
    if gain.shape[0] != x.shape[-1] or bias.shape[0] != x.shape[-1]:
        raise InvalidInputError('layer_norm gain/bias length must be ' +
                                str(x.shape[-1]))
    mean = np.mean(x, axis=-1, keepdims=True)
    var = np.mean((x - mean) ** 2, axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * gain + bias


GELU_COEF = np.sqrt(2.0 / np.pi)


def gelu(x):
    """
    Tanh approximation of the Gaussian error linear unit
    """
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + np.tanh(GELU_COEF * (x + 0.044715 * x ** 3)))


def gelu_derivative(x):
    inner = GELU_COEF * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)
    d_inner = GELU_COEF * (1.0 + 3.0 * 0.044715 * x ** 2)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner


def canonical_signs(vectors):
    """
    Sign of each column that makes its entry of largest magnitude
    positive. Ties in magnitude go to the lowest row index

    :param vectors: column vectors
    :type vectors: :py:class:`numpy.ndarray`
    :return: array of +1/-1, one per column
    :rtype: :py:class:`numpy.ndarray`
    """
    if vectors.shape[1] == 0:
        return np.ones(0)
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def _off_diagonal_norm(a):
    off = a - np.diag(np.diag(a))
    return np.sqrt(np.sum(off * off))


def sym_eig(s):
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Sweeps stop once the off-diagonal Frobenius mass drops below
    :py:const:`JACOBI_TOLERANCE` (scaled by the norm of `s` when that
    exceeds one) or after :py:const:`JACOBI_MAX_SWEEPS` sweeps. Eigenvalues
    are returned ascending and every eigenvector is sign canonicalized
    via :py:func:`canonical_signs`

    :param s: square symmetric matrix
    :type s: :py:class:`numpy.ndarray`
    :raises InvalidInputError: If `s` is not square or not symmetric
                               within :py:const:`SYMMETRY_TOLERANCE`
    :raises NumericError: If sweeps do not converge
    :return: eigenvalues and eigenvectors
    :rtype: :py:class:`EigResult`
    """
    a = as_matrix(s, name='sym_eig input')
    n = a.shape[0]
    if a.shape[1] != n:
        raise InvalidInputError('sym_eig requires a square matrix, got ' +
                                str(a.shape))
    if n > 0 and np.max(np.abs(a - a.T)) > SYMMETRY_TOLERANCE:
        raise InvalidInputError('sym_eig requires a symmetric matrix')
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    tol = JACOBI_TOLERANCE * max(1.0, np.sqrt(np.sum(a * a)))
    sweeps = 0
    while _off_diagonal_norm(a) >= tol:
        if sweeps >= JACOBI_MAX_SWEEPS:
            raise NumericError('Jacobi eigen solver did not converge in ' +
                               str(JACOBI_MAX_SWEEPS) + ' sweeps')
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - sn * col_q
                a[:, q] = sn * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - sn * row_q
                a[q, :] = sn * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq

    if LOGGER.isEnabledFor(logging.DEBUG):
        LOGGER.debug('Jacobi converged after ' + str(sweeps) +
                     ' sweeps for ' + str(n) + 'x' + str(n) + ' matrix')
    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind='stable')
    eigenvalues = eigenvalues[order]
    v = v[:, order]
    v = v * canonical_signs(v)
    return EigResult(eigenvalues, v)


def _complete_orthonormal(columns, count, dim):
    """
    Appends standard basis vectors, orthogonalized against `columns`,
    until `count` orthonormal columns are collected
    """
    basis = [c for c in columns]
    added = []
    for k in range(dim):
        if len(added) == count:
            break
        cand = np.zeros(dim)
        cand[k] = 1.0
        # two passes of Gram-Schmidt
        for _ in range(2):
            for b in basis:
                cand = cand - np.dot(b, cand) * b
        norm = np.sqrt(np.dot(cand, cand))
        if norm > 1e-6:
            cand = cand / norm
            basis.append(cand)
            added.append(cand)
    return added


def _svd_tall(a):
    m, n = a.shape
    eig = sym_eig(np.matmul(a.T, a))
    v = eig.eigenvectors[:, ::-1]
    b = np.matmul(a, v)
    s = np.sqrt(np.sum(b * b, axis=0))
    order = np.argsort(-s, kind='stable')
    s = s[order]
    v = v[:, order]
    b = b[:, order]

    smax = s[0] if n > 0 else 0.0
    nonzero = s > SVD_ZERO_TOLERANCE * smax
    if smax == 0.0:
        nonzero = np.zeros(n, dtype=bool)
    u = np.zeros((m, n))
    u[:, nonzero] = b[:, nonzero] / s[nonzero]
    s = np.where(nonzero, s, 0.0)
    missing = np.flatnonzero(~nonzero)
    if missing.size > 0:
        kept = [u[:, i] for i in np.flatnonzero(nonzero)]
        extra = _complete_orthonormal(kept, missing.size, m)
        for col, vec in zip(missing, extra):
            u[:, col] = vec
    return u, s, v


def svd(a):
    """
    Thin singular value decomposition built on :py:func:`sym_eig` of
    ``a.T @ a``. Left vectors are recovered as ``a @ v / s``; columns for
    zero singular values are completed by orthonormalization. Each pair
    ``(u_i, v_i)`` is flipped jointly so the largest magnitude entry of
    ``u_i`` is positive

    :param a: any real matrix
    :type a: :py:class:`numpy.ndarray`
    :return: ``u`` (m x k), ``s`` (k,), ``v`` (n x k) with k = min(m, n)
    :rtype: :py:class:`SvdResult`
    """
    a = as_matrix(a, name='svd input')
    if a.shape[0] >= a.shape[1]:
        u, s, v = _svd_tall(a)
    else:
        v, s, u = _svd_tall(a.T)
    signs = canonical_signs(u)
    return SvdResult(u * signs, s, v * signs)


def truncated_svd(a, r):
    """
    Top `r` singular triples of `a`

    :param a: matrix to factor
    :param r: number of triples to keep, at most min(a.shape)
    :type r: int
    :raises InvalidInputError: If `r` is out of range
    :return: truncated decomposition
    :rtype: :py:class:`SvdResult`
    """
    res = svd(a)
    if r < 0 or r > res.s.shape[0]:
        raise InvalidInputError('Truncation rank ' + str(r) +
                                ' outside [0, ' + str(res.s.shape[0]) + ']')
    return SvdResult(res.u[:, :r], res.s[:r], res.v[:, :r])
