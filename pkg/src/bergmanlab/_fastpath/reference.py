"""Pure-NumPy implementations of the numerical hot paths.

The compiled extension ``bergmanlab._fastpath._speedups`` mirrors every
function in this module; whichever is importable gets selected at package
import time (see ``bergmanlab._fastpath``).  Both backends reduce with the
same fold-halving pairwise tree, so a result never depends on chunk sizes,
and two runs of the same build are bit-identical.
"""

import numpy as np


def _fold(a):
    # fold-halving tree on the last axis; length must be a power of two
    while a.shape[-1] > 1:
        m = a.shape[-1] // 2
        a = a[..., :m] + a[..., m:]
    return a[..., 0]


def _pad_pow2(a):
    n = a.shape[-1]
    if n == 0:
        return np.zeros(a.shape[:-1] + (1,), dtype=a.dtype)
    full = 1 << (n - 1).bit_length()
    if full == n:
        return a
    out = np.zeros(a.shape[:-1] + (full,), dtype=a.dtype)
    out[..., :n] = a
    return out


def pairwise_sum(values):
    """Deterministic pairwise sum (zero-padded fold-halving tree)."""
    a = np.ascontiguousarray(values).ravel()
    return _fold(_pad_pow2(a))


def pairwise_sum_axis(values, axis=-1):
    """Pairwise sum along one axis, same tree as :func:`pairwise_sum`."""
    a = np.moveaxis(np.ascontiguousarray(values), axis, -1)
    return _fold(_pad_pow2(a))


def kernel_weighted_sums(nodes, weights, zs, c, use_abs, chunk=512):
    """Weighted kernel-power reductions over a node set.

    For each ``z`` in ``zs`` returns the pairwise-tree sum of

        weights[i] * (1 - z*conj(nodes[i]))**(-c)         (use_abs=False)
        weights[i] * |1 - z*conj(nodes[i])|**(-c)         (use_abs=True)

    This is the inner loop of every ball quadrature against a Bergman-type
    kernel; ``nodes`` are quadrature nodes, ``weights`` carry the quadrature
    weights times any z-independent factors.
    """
    nodes = np.ascontiguousarray(nodes, dtype=np.complex128)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    zs = np.ascontiguousarray(zs, dtype=np.complex128)
    nconj = np.conj(nodes)[None, :]
    out = np.empty(zs.shape, dtype=np.complex128)
    for lo in range(0, zs.size, chunk):
        zblk = zs[lo:lo + chunk, None]
        base = 1.0 - zblk * nconj
        if use_abs:
            g = np.abs(base) ** (-c) * weights
            g = g.astype(np.complex128)
        else:
            g = base ** (-c) * weights
        out[lo:lo + chunk] = _fold(_pad_pow2(g))
    return out


def pseudo_distances(center, points):
    """Pseudo-hyperbolic distances |a - z| / |1 - conj(a) z| on the disk.

    Evaluated as sqrt of a ratio of squared moduli (one square root, no
    hypot), with the same operation order as the compiled backend so the
    two agree bit for bit.
    """
    points = np.asarray(points, dtype=np.complex128)
    # real-component arithmetic: NumPy's vectorized complex multiply may
    # contract with FMA, which would break bit-agreement with the compiled
    # backend's scalar operations
    ar, ai = complex(center).real, complex(center).imag
    zr, zi = points.real, points.imag
    dr, di = ar - zr, ai - zi
    er = 1.0 - (ar * zr + ai * zi)
    ei = -(ar * zi - ai * zr)
    return np.sqrt((dr * dr + di * di) / (er * er + ei * ei))


def greedy_farthest(candidates, rho):
    """Farthest-point selection in the pseudo-hyperbolic metric.

    Starts from ``candidates[0]`` and repeatedly adds the candidate farthest
    from the chosen set, stopping once every remaining candidate is strictly
    closer than ``rho`` (= tanh of the target Bergman radius) to some chosen
    point.  Returns the chosen indices in selection order.
    """
    cands = np.ascontiguousarray(candidates, dtype=np.complex128)
    n = cands.size
    chosen = [0]
    mind = pseudo_distances(cands[0], cands)
    while True:
        k = int(np.argmax(mind))
        if mind[k] < rho:
            break
        chosen.append(k)
        np.minimum(mind, pseudo_distances(cands[k], cands), out=mind)
    return np.asarray(chosen, dtype=np.int64)
