"""Probability-vector and LLR-vector messages and the operators acting on them.

A probability vector is an array whose last axis has length q. An LLR vector
has last axis q - 1 and holds ``w_i = log(x_0 / x_i)`` for ``i = 1..q-1``;
the implicit ``w_0`` is zero. Every function broadcasts over leading axes,
so a batch of messages is just a 2-D array.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .gf import GaloisField

PROB_FLOOR = 1e-300
ORBIT_TOL = 1e-12


class DegenerateMessageError(ValueError):
    """A probability vector assigns zero probability to the zero symbol."""


def llr_of(x, floor: bool = True) -> np.ndarray:
    """LLR representation of probability vectors.

    With ``floor=True`` (the default) entries are clipped to
    :data:`PROB_FLOOR` first, so the result is always finite. With
    ``floor=False`` zero entries map to ``+inf`` and a zero ``x_0`` raises
    :class:`DegenerateMessageError`.
    """
    x = np.asarray(x, dtype=float)
    if floor:
        x = np.maximum(x, PROB_FLOOR)
    elif np.any(x[..., 0] <= 0):
        raise DegenerateMessageError("x_0 = 0 has no LLR representation")
    with np.errstate(divide="ignore"):
        return np.log(x[..., :1]) - np.log(x[..., 1:])


def prob_of(w) -> np.ndarray:
    """Probability vectors from LLR vectors (``+inf`` entries become 0)."""
    w = np.asarray(w, dtype=float)
    full = np.concatenate([np.zeros(w.shape[:-1] + (1,)), w], axis=-1)
    # shift so the largest exponent is exactly zero
    z = np.exp(-(full - full.min(axis=-1, keepdims=True)))
    return z / z.sum(axis=-1, keepdims=True)


def _full_llr(w):
    w = np.asarray(w, dtype=float)
    return np.concatenate([np.zeros(w.shape[:-1] + (1,)), w], axis=-1)


def _gather(x, idx):
    """``out[..., i] = x[..., idx[..., i]]`` with broadcasting of ``idx``."""
    x = np.asarray(x)
    idx = np.broadcast_to(idx, x.shape[:-1] + idx.shape[-1:])
    return np.take_along_axis(x, idx, axis=-1)


def shift_prob(x, g, F: GaloisField) -> np.ndarray:
    """``x^{+g}``: component i becomes ``x_{i+g}``. ``g`` may be an array
    with the leading shape of ``x``."""
    g = np.asarray(g)
    return _gather(x, F.add_table[g])


def shift_llr(w, g, F: GaloisField) -> np.ndarray:
    """LLR form of the +g operator, ``w_i -> w_{i+g} - w_g``."""
    g = np.asarray(g)
    full = _full_llr(w)
    out = _gather(full, F.add_table[g])
    return out[..., 1:] - out[..., :1]


def scale(x, g, F: GaloisField, llr: bool = False) -> np.ndarray:
    """``x^{xg}``: component i becomes ``x_{i*g}``.

    Works on probability vectors, or on LLR vectors when ``llr=True``.
    ``g`` must be nonzero and may be an array matching the leading shape.
    """
    g = np.asarray(g)
    if np.any(g == 0):
        raise ValueError("scale by the zero element is undefined")
    idx = F.mul_table[g]
    if llr:
        return _gather(_full_llr(x), idx)[..., 1:]
    return _gather(x, idx)


def random_permute(x, F: GaloisField, rng: np.random.Generator, llr: bool = False):
    """Scale each message by an independent uniform nonzero field element."""
    x = np.asarray(x)
    g = rng.integers(1, F.q, size=x.shape[:-1])
    return scale(x, g, F, llr=llr)


def orbit(x, F: GaloisField, tol: float = ORBIT_TOL) -> list[np.ndarray]:
    """Distinct members of ``{x^{+g}}`` in order of first appearance."""
    out: list[np.ndarray] = []
    for g in range(F.q):
        y = shift_prob(x, g, F)
        if not any(np.max(np.abs(y - z)) <= tol for z in out):
            out.append(y)
    return out


def multiplicity(x, F: GaloisField, tol: float = ORBIT_TOL) -> int:
    """Number of g with ``x^{+g} == x``."""
    x = np.asarray(x, dtype=float)
    shifted = shift_prob(np.broadcast_to(x, (F.q, F.q)), np.arange(F.q), F)
    return int(np.sum(np.max(np.abs(shifted - x), axis=-1) <= tol))


def pe_of(x) -> np.ndarray:
    """Decision error probability of a message when 0 was sent.

    Ties for the maximum are broken uniformly, so a tie of size k that
    includes index 0 contributes ``(k-1)/k``.
    """
    x = np.asarray(x, dtype=float)
    mx = x.max(axis=-1, keepdims=True)
    at_max = x == mx
    k = at_max.sum(axis=-1)
    return np.where(at_max[..., 0], (k - 1) / k, 1.0)


def pe_mean(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample set")
    return float(np.mean(pe_of(samples)))


def f_of(x) -> np.ndarray:
    """``(1/(q-1)) * sum_{i != j} sqrt(x_i x_j)``, a value in [0, 1]."""
    x = np.asarray(x, dtype=float)
    q = x.shape[-1]
    s = np.sqrt(np.maximum(x, 0.0))
    # pairwise sum via running prefix sums; avoids cancellation near one-hot
    before = np.zeros_like(s)
    before[..., 1:] = np.cumsum(s[..., :-1], axis=-1)
    return 2 * np.sum(s * before, axis=-1) / (q - 1)


def epsilon_of(x) -> np.ndarray:
    """``1 - max_i x_i``, computed as the mass off the argmax."""
    x = np.asarray(x, dtype=float)
    off = x.copy()
    np.put_along_axis(off, np.argmax(x, axis=-1)[..., None], 0.0, axis=-1)
    return off.sum(axis=-1)


def d_estimate(samples, rng: np.random.Generator | None = None, F: GaloisField | None = None,
               raw: bool = False):
    """Estimate D(X) from samples of a symmetric message.

    By default this is the sample mean of :func:`f_of`. With ``raw=True`` it
    is the direct estimator: randomly permute each sample (``rng`` and ``F``
    required) and average ``sqrt(x_1 / x_0)``.

    Returns
    -------
    mean, stderr : float
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample set")
    if raw:
        if rng is None or F is None:
            raise ValueError("the raw estimator needs a field and an rng")
        y = np.maximum(random_permute(samples, F, rng), PROB_FLOOR)
        vals = np.sqrt(y[..., 1] / y[..., 0])
    else:
        vals = f_of(samples)
    vals = vals.ravel()
    se = vals.std(ddof=1) / np.sqrt(vals.size) if vals.size > 1 else 0.0
    return float(vals.mean()), float(se)


def check_symmetry(atoms, probs, F: GaloisField, tol: float = ORBIT_TOL) -> float:
    """Largest violation of ``Pr[X = x | X in x*] = x_0 n(x)``.

    Parameters
    ----------
    atoms : array_like, shape (n, q)
        Support points of a finite distribution over probability vectors.
        Duplicates (within ``tol``) are merged.
    probs : array_like, shape (n,)
        Their probabilities.
    """
    atoms = np.asarray(atoms, dtype=float)
    probs = np.asarray(probs, dtype=float)
    pts: list[np.ndarray] = []
    mass: list[float] = []
    for a, p in zip(atoms, probs):
        for k, z in enumerate(pts):
            if np.max(np.abs(a - z)) <= tol:
                mass[k] += p
                break
        else:
            pts.append(a)
            mass.append(float(p))

    def lookup(y):
        for z, m in zip(pts, mass):
            if np.max(np.abs(y - z)) <= tol:
                return m
        return 0.0

    worst = 0.0
    for x, m in zip(pts, mass):
        if m <= 0:
            continue
        members = orbit(x, F, tol)
        orbit_mass = sum(lookup(y) for y in members)
        n = multiplicity(x, F, tol)
        for y in members:
            worst = max(worst, abs(lookup(y) / orbit_mass - y[0] * n))
    return worst


def mi_terms(w, q: int | None = None) -> np.ndarray:
    """Per-sample ``1 - log_q(1 + sum_i exp(-w_i))`` for LLR vectors ``w``.

    ``+inf`` components contribute nothing to the sum. ``q`` defaults to
    ``w.shape[-1] + 1``.
    """
    w = np.asarray(w, dtype=float)
    q = w.shape[-1] + 1 if q is None else q
    # sorting first makes the result independent of component order, bit for bit
    full = np.concatenate([np.zeros(w.shape[:-1] + (1,)), np.sort(-w, axis=-1)], axis=-1)
    return 1.0 - logsumexp(full, axis=-1) / np.log(q)


def mi_estimate(w) -> float:
    """Mutual information between the code symbol and an LLR message,
    estimated from samples conditioned on the zero symbol; clipped to [0, 1]."""
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        raise ValueError("empty sample set")
    return float(np.clip(np.mean(mi_terms(w)), 0.0, 1.0))
