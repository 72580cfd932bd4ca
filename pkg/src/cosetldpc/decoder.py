"""Belief-propagation decoding of coset GF(q) LDPC codes.

Two message representations are supported: probability vectors (``"prob"``)
and LLR vectors (``"llr"``). Check nodes always work on probability vectors,
either through the multidimensional DFT over the digit lattice of GF(p^m)
(``"dft"``) or by direct GF(q) convolution (``"naive"``).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

from .ensemble import CosetCode, syndrome
from .gf import GaloisField
from .gf import field as default_field
from .messages import PROB_FLOOR, llr_of, prob_of
from .modulation import app_vector

log = logging.getLogger(__name__)


# --- transforms ------------------------------------------------------------

def _dft_matrix(p: int, inverse: bool) -> np.ndarray:
    a = np.arange(p)
    sign = -1 if inverse else 1
    return np.exp(sign * 2j * np.pi * np.outer(a, a) / p)


def _transform_qn(y: np.ndarray, p: int, m: int, inverse: bool) -> np.ndarray:
    """Transform the columns of a (q, n) array. For p = 2 this works in place."""
    q, n = y.shape
    if p == 2:
        # Hadamard butterflies: additions and subtractions on real data only
        for k in range(m):
            lo = 1 << k
            v = y.reshape(q // (2 * lo), 2, lo, n)
            a = v[:, 0].copy()
            v[:, 0] += v[:, 1]
            np.subtract(a, v[:, 1], out=v[:, 1])
    else:
        W = _dft_matrix(p, inverse)
        for k in range(m):
            lo = p**k
            v = y.reshape(q // (p * lo), p, lo, n)
            y = np.einsum("ab,hbln->haln", W, v).reshape(q, n)
    if inverse:
        y /= q
    return y


def _transform(x, p: int, m: int, inverse: bool) -> np.ndarray:
    x = np.asarray(x)
    q = p**m
    if x.shape[-1] != q:
        raise ValueError(f"last axis has length {x.shape[-1]}, expected {q}")
    dtype = np.result_type(x.dtype, np.float64) if p == 2 else complex
    # a (q, n) layout lets every butterfly run over the long batch axis
    y = np.array(x.reshape(-1, q).T, dtype=dtype, order="C")
    return _transform_qn(y, p, m, inverse).T.reshape(x.shape)


def mdft(x, p: int, m: int) -> np.ndarray:
    """m-dimensional DFT of vectors indexed by GF(p^m) digit vectors.

    Applies a length-p DFT along each digit axis in turn. For ``p == 2`` the
    result stays real and only additions and subtractions are used.
    """
    return _transform(x, p, m, inverse=False)


def midft(d, p: int, m: int) -> np.ndarray:
    """Inverse of :func:`mdft` (includes the ``1/q`` factor)."""
    return _transform(d, p, m, inverse=True)


# --- elementary node operations ---------------------------------------------

def gf_convolve(a, b, F: GaloisField) -> np.ndarray:
    """``c_k = sum_a a_a b_{k-a}`` over GF(q); broadcasts over leading axes."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.einsum("...a,...ka->...k", a, b[..., F.sub_table])


def _normalize(x, floor: float = PROB_FLOOR) -> np.ndarray:
    x = np.maximum(x, floor)
    return x / x.sum(axis=-1, keepdims=True)


def var_update(r0, incoming, llr: bool = False) -> np.ndarray:
    """Rightbound message from the initial message and ``d - 1`` leftbound ones.

    ``incoming`` has shape ``(..., d - 1, K)`` where ``K`` is q (probability
    vectors) or q - 1 (LLR vectors when ``llr=True``).
    """
    r0 = np.asarray(r0, dtype=float)
    incoming = np.asarray(incoming, dtype=float)
    if llr:
        return r0 + incoming.sum(axis=-2)
    out = r0.copy()
    for k in range(incoming.shape[-2]):
        out = out * incoming[..., k, :]
        out = out / np.maximum(out.max(axis=-1, keepdims=True), PROB_FLOOR)
    return _normalize(out)


def _labelled_inputs(incoming, labels, F: GaloisField) -> np.ndarray:
    """``r^{x g^{-1}}`` for each incoming message."""
    idx = F.mul_table[F.inv_table[np.asarray(labels)]]
    return np.take_along_axis(np.asarray(incoming, dtype=float), idx, axis=-1)


def _relabel_output(lbar, out_label, F: GaloisField) -> np.ndarray:
    idx = F.mul_table[F.neg_table[np.asarray(out_label)]]
    return np.take_along_axis(lbar, idx, axis=-1)


def check_update(incoming, labels, out_label, F: GaloisField, method: str = "dft") -> np.ndarray:
    """Leftbound message from ``d - 1`` rightbound probability vectors.

    Parameters
    ----------
    incoming : array_like, shape (..., d - 1, q)
    labels : array_like of int, shape (..., d - 1)
        Labels on the incoming edges (nonzero).
    out_label : array_like of int, shape (...)
        Label on the outgoing edge (nonzero).
    method : {"dft", "naive"}
    """
    labels = np.asarray(labels)
    out_label = np.asarray(out_label)
    if np.any(labels == 0) or np.any(out_label == 0):
        raise ValueError("edge labels must be nonzero")
    rbar = _labelled_inputs(incoming, labels, F)
    if method == "dft":
        spec = mdft(rbar, F.p, F.m)
        prod = np.prod(spec, axis=-2)
        lbar = midft(prod, F.p, F.m).real
    elif method == "naive":
        lbar = rbar[..., 0, :]
        for k in range(1, rbar.shape[-2]):
            lbar = gf_convolve(lbar, rbar[..., k, :], F)
    else:
        raise ValueError(f"unknown check-node method {method!r}")
    return _relabel_output(_normalize(lbar), out_label, F)


def _partial_sums(msgs, labels, F: GaloisField):
    """All symbol tuples of a message subset: check-sum contribution and weight."""
    idx = np.zeros(1, dtype=np.int64)
    w = np.ones(1)
    for x, g in zip(msgs, labels):
        contrib = F.mul_table[g]  # g * a for every symbol a
        idx = F.add_table[idx[:, None], contrib[None, :]].ravel()
        w = (w[:, None] * x[None, :]).ravel()
    return idx, w


def check_update_bruteforce(incoming, labels, out_label, F: GaloisField, chunk: int = 1 << 22) -> np.ndarray:
    """Literal sum over every assignment of the other ``d - 1`` symbols.

    Each of the ``q**(d-1)`` terms is formed explicitly; the tuples are split
    in two halves only so the enumeration fits in memory. Meant as a test
    oracle and as the reference point for timing the DFT check node.
    """
    incoming = np.asarray(incoming, dtype=float)
    labels = [int(g) for g in labels]
    h = len(labels) // 2
    i1, w1 = _partial_sums(incoming[:h], labels[:h], F)
    i2, w2 = _partial_sums(incoming[h:], labels[h:], F)
    sums = np.zeros(F.q)
    rows = max(1, chunk // i2.size)
    for s in range(0, i1.size, rows):
        idx = F.add_table[i1[s:s + rows, None], i2[None, :]]
        sums += np.bincount(idx.ravel(), (w1[s:s + rows, None] * w2[None, :]).ravel(), minlength=F.q)
    # out_label * c = -s, so P(c = k) = sums[-(out_label * k)]
    out = sums[F.neg_table[F.mul_table[int(out_label)]]]
    return out / out.sum()


def decide(x, rng: np.random.Generator | None = None) -> np.ndarray:
    """Index of the largest component; exact ties are broken uniformly with ``rng``."""
    x = np.asarray(x)
    best = np.argmax(x, axis=-1)
    at_max = x == np.take_along_axis(x, best[..., None], axis=-1)
    tied = at_max.sum(axis=-1) > 1
    if np.any(tied):
        if rng is None:
            rng = np.random.default_rng()
        rows = np.nonzero(tied.ravel())[0]
        flat = at_max.reshape(-1, x.shape[-1])
        out = best.ravel().copy()
        for r in rows:
            out[r] = rng.choice(np.nonzero(flat[r])[0])
        best = out.reshape(best.shape)
    return best


def initial_message(y, v, mapping, channel, llr: bool = False) -> np.ndarray:
    """``r_k`` proportional to ``Pr[y | delta(k + v)]``, or its LLR form."""
    r = app_vector(channel, mapping, y, v)
    return llr_of(r) if llr else r


# --- full-graph decoder -----------------------------------------------------

def _degree_groups(node_of_edge: np.ndarray, n_nodes: int):
    """Sort edges so nodes of equal degree sit in contiguous blocks.

    Returns the edge order and a list of ``(start, n, d)`` blocks: within a
    block, edges ``order[start : start + n*d]`` reshape to ``(d, n)`` with
    one column per node, so each socket position is a contiguous slab.
    """
    by_node = np.argsort(node_of_edge, kind="stable")
    deg = np.bincount(node_of_edge, minlength=n_nodes)
    first = np.concatenate([[0], np.cumsum(deg)[:-1]])
    order, blocks, start = [], [], 0
    for d in np.unique(deg[deg > 0]):
        nodes = np.nonzero(deg == d)[0]
        order.append(by_node[first[nodes][None, :] + np.arange(d)[:, None]].ravel())
        blocks.append((start, nodes.size, int(d)))
        start += nodes.size * d
    return np.concatenate(order), blocks


def _exclusive_products(G: np.ndarray, axis: int = 0, renorm: bool = False) -> np.ndarray:
    """Products over all slabs but one along ``axis`` (0 or 1).

    With ``renorm`` each partial product is rescaled to unit maximum along
    the last axis, which keeps long products of probability vectors from
    underflowing.
    """
    if axis == 1:
        return _exclusive_products(G.transpose(1, 0, 2), 0, renorm).transpose(1, 0, 2)
    d = G.shape[0]
    pre = np.empty_like(G)
    suf = np.empty_like(G)
    pre[0] = 1
    suf[d - 1] = 1
    for k in range(1, d):
        np.multiply(pre[k - 1], G[k - 1], out=pre[k])
        np.multiply(suf[d - k], G[d - k], out=suf[d - 1 - k])
        if renorm:
            pre[k] /= np.maximum(pre[k].max(axis=-1, keepdims=True), PROB_FLOOR)
            suf[d - 1 - k] /= np.maximum(suf[d - 1 - k].max(axis=-1, keepdims=True), PROB_FLOOR)
    pre *= suf
    return pre


@dataclass
class DecodeResult:
    decisions: np.ndarray
    iterations: int
    symbol_errors: list = dc_field(default_factory=list)
    syndrome_zero: bool = False

    @property
    def ser(self) -> float:
        """Symbol error rate at the final iteration (needs a reference word)."""
        return self.symbol_errors[-1] / self.decisions.size if self.symbol_errors else float("nan")


class BPDecoder:
    """Flooding-schedule belief propagation on a fixed coset code.

    Parameters
    ----------
    code : CosetCode
    channel : AWGN or DMC
    algorithm : {"prob", "llr"}
        Message representation at the variable nodes.
    check : {"dft", "naive"}
        Check-node implementation.
    """

    def __init__(self, code: CosetCode, channel, algorithm: str = "prob", check: str = "dft"):
        if algorithm not in ("prob", "llr"):
            raise ValueError(f"unknown algorithm {algorithm!r}")
        if check not in ("dft", "naive"):
            raise ValueError(f"unknown check-node method {check!r}")
        self.code = code
        self.channel = channel
        self.algorithm = algorithm
        self.check = check
        g = code.graph
        F = default_field(g.q)
        self.F = F
        E, q = g.E, g.q
        in_idx = F.mul_table[F.inv_table[g.labels]]
        out_idx = F.mul_table[F.neg_table[g.labels]]
        # check side: one gather scales by g^-1 and sorts edges into degree blocks,
        # another scales by -g and restores edge order
        corder, self._chk_blocks = _degree_groups(g.chk, g.M)
        cpos = np.empty(E, dtype=np.intp)
        cpos[corder] = np.arange(E)
        # messages are laid out as (q, E) on the check side
        self._cin = (corder[None, :] * q + in_idx[corder].T).ravel()
        self._cout = (out_idx * E + cpos[:, None]).ravel()
        self._vorder, self._var_blocks = _degree_groups(g.var, g.N)
        self._vpos = np.empty(E, dtype=np.intp)
        self._vpos[self._vorder] = np.arange(E)
        self._vnodes = g.var[self._vorder]
        self.degenerate_events = 0

    # phases

    def _check_phase(self, r: np.ndarray) -> np.ndarray:
        """Rightbound probability vectors (E, q) -> leftbound ones."""
        F = self.F
        E, q = r.shape
        rbar = np.take(r, self._cin).reshape(q, E)
        if self.check == "dft":
            spec = _transform_qn(rbar if F.p == 2 else rbar.astype(complex), F.p, F.m, False)
            lbar = np.empty_like(spec)
            for start, n, d in self._chk_blocks:
                sl = slice(start, start + n * d)
                lbar[:, sl] = _exclusive_products(spec[:, sl].reshape(q, d, n), axis=1).reshape(q, n * d)
            lbar = _transform_qn(lbar, F.p, F.m, True).real
        else:
            lbar = np.empty_like(rbar)
            for start, n, d in self._chk_blocks:
                sl = slice(start, start + n * d)
                G = rbar[:, sl].reshape(q, d, n).transpose(1, 2, 0)
                for k in range(d):
                    others = [j for j in range(d) if j != k]
                    acc = G[others[0]]
                    for j in others[1:]:
                        acc = gf_convolve(acc, G[j], F)
                    lbar[:, start + k * n:start + (k + 1) * n] = acc.T
        lbar = np.maximum(lbar, PROB_FLOOR)
        lbar /= lbar.sum(axis=0)
        return np.take(lbar, self._cout).reshape(E, q)

    def _var_phase(self, r0: np.ndarray, l: np.ndarray):
        """Leftbound messages -> (rightbound messages, final per-node beliefs)."""
        E, K = l.shape
        ls = l[self._vorder]
        rs = np.empty_like(ls)
        app = np.empty_like(r0)
        llr = self.algorithm == "llr"
        for start, n, d in self._var_blocks:
            sl = slice(start, start + n * d)
            G = ls[sl].reshape(d, n, K)
            nodes = self._vnodes[start:start + n]
            if llr:
                total = r0[nodes] + G.sum(axis=0)
                rs[sl] = (total[None] - G).reshape(n * d, K)
                app[nodes] = total
            else:
                out = r0[nodes][None] * _exclusive_products(G, renorm=True)
                rs[sl] = out.reshape(n * d, K)
                app[nodes] = out[0] * G[0]
        r = rs[self._vpos]
        if llr:
            return r, app
        bad = r.max(axis=-1) <= 0
        if np.any(bad):
            self.degenerate_events += int(bad.sum())
            log.debug("%d variable-node products underflowed", int(bad.sum()))
        return _normalize(r), _normalize(app)

    def _to_prob(self, w):
        return prob_of(w) if self.algorithm == "llr" else w

    def decode(self, y, max_iters: int = 50, early_stop: bool = False, reference=None,
               rng: np.random.Generator | None = None) -> DecodeResult:
        """Decode one received word.

        ``reference`` is the transmitted codeword (before the coset); when
        given, symbol errors are recorded after every iteration, starting
        with the decision from the channel alone (iteration 0).
        """
        code = self.code
        g = code.graph
        y = np.asarray(y)
        if y.shape[0] != g.N:
            raise ValueError(f"received word has length {y.shape[0]}, expected {g.N}")
        rng = rng if rng is not None else np.random.default_rng()
        llr = self.algorithm == "llr"
        r0 = initial_message(y, code.coset, code.mapping, self.channel, llr=llr)
        r = r0[g.var]
        beliefs = r0
        errors = []

        def record(b):
            dec = decide(self._to_prob(b), rng)
            if reference is not None:
                errors.append(int(np.count_nonzero(dec != reference)))
            return dec

        dec = record(beliefs)
        it = 0
        zero = not syndrome(g, dec).any()
        while it < max_iters and not (early_stop and zero):
            l = self._check_phase(self._to_prob(r))
            if llr:
                l = llr_of(l)
            r, beliefs = self._var_phase(r0, l)
            it += 1
            dec = record(beliefs)
            zero = not syndrome(g, dec).any()
        return DecodeResult(dec, it, errors, zero)


def run_bp(code: CosetCode, y, channel, max_iters: int = 50, early_stop: bool = False,
           rng: np.random.Generator | None = None, reference=None, algorithm: str = "prob",
           check: str = "dft") -> DecodeResult:
    """Convenience wrapper around :class:`BPDecoder`."""
    return BPDecoder(code, channel, algorithm, check).decode(y, max_iters, early_stop, reference, rng)
