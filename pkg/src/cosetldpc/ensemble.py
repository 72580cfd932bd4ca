"""LDPC ensembles: degree distributions, Tanner graphs, cosets and encoding."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from .gf import GaloisField
from .gf import field as default_field

GRAPH_FORMAT_VERSION = 1


class GraphConstructionError(ValueError):
    """Socket counts cannot be made consistent."""


@dataclass(frozen=True)
class DegreeDist:
    """Edge-perspective degree distributions.

    Parameters
    ----------
    lam, rho : dict
        Map degree -> fraction of edges. Degrees are at least 2 and each
        dictionary sums to one.
    """

    lam: dict
    rho: dict

    def __post_init__(self):
        for name, d in (("lambda", self.lam), ("rho", self.rho)):
            if not d:
                raise ValueError(f"{name} is empty")
            if any(int(k) < 2 for k in d):
                raise ValueError(f"{name} has a degree below 2")
            if any(v < -1e-9 for v in d.values()):
                raise ValueError(f"{name} has a negative fraction")
            if abs(sum(d.values()) - 1) > 1e-9:
                raise ValueError(f"{name} fractions sum to {sum(d.values())}, not 1")
        # normalise keys to int and drop zero entries
        object.__setattr__(self, "lam", {int(k): float(v) for k, v in sorted(self.lam.items(), key=lambda t: int(t[0])) if v > 0})
        object.__setattr__(self, "rho", {int(k): float(v) for k, v in sorted(self.rho.items(), key=lambda t: int(t[0])) if v > 0})

    @property
    def lambda2(self) -> float:
        """``lambda'(0)``."""
        return self.lam.get(2, 0.0)

    @property
    def rho_prime_1(self) -> float:
        """``rho'(1) = sum_j (j-1) rho_j``."""
        return sum((j - 1) * r for j, r in self.rho.items())

    @property
    def int_lambda(self) -> float:
        """``sum_i lambda_i / i``: variable nodes per edge."""
        return sum(v / i for i, v in self.lam.items())

    @property
    def int_rho(self) -> float:
        return sum(v / j for j, v in self.rho.items())

    @property
    def design_rate(self) -> float:
        return 1.0 - self.int_rho / self.int_lambda

    def to_dict(self) -> dict:
        return {"lambda": {str(k): v for k, v in self.lam.items()},
                "rho": {str(k): v for k, v in self.rho.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "DegreeDist":
        return cls({int(k): v for k, v in d["lambda"].items()},
                   {int(k): v for k, v in d["rho"].items()})

    @classmethod
    def normalized(cls, lam: dict, rho: dict) -> "DegreeDist":
        """Build from fractions rounded for printing, rescaling each to sum to one."""
        sl, sr = sum(lam.values()), sum(rho.values())
        return cls({k: v / sl for k, v in lam.items()}, {k: v / sr for k, v in rho.items()})

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDist":
        return cls({dv: 1.0}, {dc: 1.0})


def design_rate(dd: DegreeDist) -> float:
    """``1 - (sum rho_j / j) / (sum lambda_i / i)``, a lower bound on the rate."""
    return dd.design_rate


@dataclass
class TannerGraph:
    """A labelled bipartite graph with edges listed in left-socket order.

    Attributes
    ----------
    var, chk, labels : ndarray of int, shape (E,)
        Variable node, check node and nonzero field label of each edge.
    """

    q: int
    N: int
    M: int
    var: np.ndarray
    chk: np.ndarray
    labels: np.ndarray

    @property
    def E(self) -> int:
        return int(self.var.size)

    @property
    def var_degrees(self) -> np.ndarray:
        return np.bincount(self.var, minlength=self.N)

    @property
    def chk_degrees(self) -> np.ndarray:
        return np.bincount(self.chk, minlength=self.M)

    @property
    def field(self) -> GaloisField:
        return default_field(self.q)

    def with_labels(self, labels) -> "TannerGraph":
        return TannerGraph(self.q, self.N, self.M, self.var, self.chk, np.asarray(labels, dtype=np.int64))


def _largest_remainder(targets: dict[int, float], total: int) -> dict[int, int]:
    base = {k: int(np.floor(v)) for k, v in targets.items()}
    short = total - sum(base.values())
    order = sorted(targets, key=lambda k: (-(targets[k] - base[k]), k))
    for k in order[:max(short, 0)]:
        base[k] += 1
    return base


def _reachable_totals(counts: dict[int, int], max_ops: int) -> dict[int, tuple[int, dict]]:
    """Socket totals reachable by at most ``max_ops`` unit edits.

    An edit adds a node, removes a node, or changes one node's degree, all
    within the support of ``counts``. Returns total -> (cost, new counts).
    """
    degs = sorted(counts)

    def sockets(c):
        return sum(d * n for d, n in c.items())

    start = dict(counts)
    best = {sockets(start): (0, start)}
    frontier = [(0, 0, start)]
    tie = 0
    while frontier:
        cost, _, c = heapq.heappop(frontier)
        if cost >= max_ops:
            continue
        moves = []
        for d in degs:
            moves.append({d: +1})
            if c[d] > 0:
                moves.append({d: -1})
                for d2 in degs:
                    if d2 != d:
                        moves.append({d: -1, d2: +1})
        for mv in moves:
            nc = dict(c)
            for d, k in mv.items():
                nc[d] += k
            if sum(nc.values()) == 0:
                continue
            s = sockets(nc)
            if s not in best or best[s][0] > cost + 1:
                best[s] = (cost + 1, nc)
                tie += 1
                heapq.heappush(frontier, (cost + 1, tie, nc))
    return best


def integerize(dd: DegreeDist, E: int, max_ops: int = 3) -> tuple[dict[int, int], dict[int, int]]:
    """Node counts per degree whose left and right socket totals agree.

    Counts start from largest-remainder rounding of ``E lambda_i / i`` and
    ``E rho_j / j``. If the two socket totals differ, up to ``max_ops``
    single-node edits per side are applied; among balancing edit sets the
    one whose total is closest to ``E`` wins, then the one with fewest edits.
    """
    left = _largest_remainder({i: E * v / i for i, v in dd.lam.items()}, round(E * dd.int_lambda))
    right = _largest_remainder({j: E * v / j for j, v in dd.rho.items()}, round(E * dd.int_rho))
    L = _reachable_totals(left, max_ops)
    R = _reachable_totals(right, max_ops)
    common = set(L) & set(R)
    if not common:
        raise GraphConstructionError(f"cannot balance socket counts for E={E}")
    tot = min(common, key=lambda s: (abs(s - E), L[s][0] + R[s][0], s))
    return L[tot][1], R[tot][1]


def sample_graph(dd: DegreeDist, E: int, rng: np.random.Generator, q: int = 2) -> TannerGraph:
    """Sample a Tanner graph by a uniformly random socket permutation.

    Labels are all one; call :func:`sample_labels` to draw random labels.
    Multiple edges between a node pair are allowed.
    """
    left, right = integerize(dd, E)
    vdeg = np.concatenate([np.full(n, d) for d, n in left.items()]).astype(np.int64)
    cdeg = np.concatenate([np.full(n, d) for d, n in right.items()]).astype(np.int64)
    lsock = np.repeat(np.arange(vdeg.size), vdeg)
    rsock = np.repeat(np.arange(cdeg.size), cdeg)
    assert lsock.size == rsock.size
    perm = rng.permutation(rsock.size)
    return TannerGraph(q, int(vdeg.size), int(cdeg.size), lsock, rsock[perm],
                       np.ones(lsock.size, dtype=np.int64))


def sample_labels(graph: TannerGraph, rng: np.random.Generator) -> TannerGraph:
    """Return a copy with i.i.d. uniform nonzero labels."""
    return graph.with_labels(rng.integers(1, graph.q, size=graph.E))


def sample_coset(N: int, q: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, q, size=N)


def syndrome(graph: TannerGraph, word) -> np.ndarray:
    """Per-check value ``sum_e label_e * word[var_e]`` in GF(q)."""
    word = np.asarray(word, dtype=np.int64)
    if word.shape != (graph.N,):
        raise ValueError(f"word has shape {word.shape}, expected ({graph.N},)")
    F = graph.field
    terms = F.mul_table[graph.labels, word[graph.var]]
    if F.p == 2:
        out = np.zeros(graph.M, dtype=np.int64)
        np.bitwise_xor.at(out, graph.chk, terms)
        return out
    acc = np.zeros((graph.M, F.m), dtype=np.int64)
    np.add.at(acc, graph.chk, F.digits(terms))
    return F.index(acc % F.p)


def parity_check_matrix(graph: TannerGraph) -> np.ndarray:
    """Dense ``M x N`` matrix; parallel edges add their labels."""
    F = graph.field
    H = np.zeros((graph.M, graph.N), dtype=np.int64)
    for v, c, g in zip(graph.var, graph.chk, graph.labels):
        H[c, v] = F.add_table[H[c, v], g]
    return H


class Encoder:
    """Systematic encoder from Gaussian elimination of the parity-check matrix.

    Intended for test-scale graphs. Pivots are taken at the first column
    holding a nonzero entry, so the result is deterministic. Message symbols
    occupy the non-pivot (free) columns.
    """

    def __init__(self, graph: TannerGraph):
        F = graph.field
        A, Mt, inv = F.add_table, F.mul_table, F.inv_table
        H = parity_check_matrix(graph)
        rows, cols = H.shape
        pivots: list[int] = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.nonzero(H[r:, c])[0]
            if nz.size == 0:
                continue
            k = r + nz[0]
            H[[r, k]] = H[[k, r]]
            H[r] = Mt[inv[H[r, c]], H[r]]
            others = np.nonzero(H[:, c])[0]
            others = others[others != r]
            if others.size:
                # row_i <- row_i - H[i, c] * row_r
                f = Mt[H[others, c][:, None], H[r][None, :]]
                H[others] = F.sub_table[H[others], f]
            pivots.append(c)
            r += 1
        if not pivots:
            raise ValueError("parity-check matrix has rank zero")
        self.graph = graph
        self.rank = len(pivots)
        self.pivots = np.array(pivots)
        self.free = np.setdiff1d(np.arange(cols), self.pivots)
        self._R = H[: self.rank][:, self.free]
        self.k = self.free.size

    @property
    def rate(self) -> float:
        return self.k / self.graph.N

    def encode(self, message) -> np.ndarray:
        F = self.graph.field
        message = np.asarray(message, dtype=np.int64)
        if message.shape != (self.k,):
            raise ValueError(f"message must have length {self.k}")
        c = np.zeros(self.graph.N, dtype=np.int64)
        c[self.free] = message
        prods = F.mul_table[self._R, message[None, :]]
        if F.p == 2:
            acc = np.bitwise_xor.reduce(prods, axis=1) if self.k else np.zeros(self.rank, dtype=np.int64)
        else:
            acc = F.index(F.digits(prods).sum(axis=1) % F.p)
        c[self.pivots] = F.neg_table[acc]
        return c

    def random_codeword(self, rng: np.random.Generator) -> np.ndarray:
        return self.encode(rng.integers(0, self.graph.q, size=self.k))


def encode_small(graph: TannerGraph, message=None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Encode ``message`` (or a random one drawn from ``rng``) into a codeword."""
    enc = Encoder(graph)
    if message is None:
        if rng is None:
            raise ValueError("either a message or an rng is required")
        return enc.random_codeword(rng)
    return enc.encode(message)


@dataclass
class CosetCode:
    """A Tanner graph, a coset vector and the mapping applied after the coset."""

    graph: TannerGraph
    coset: np.ndarray
    mapping: Any = dc_field(default=None)

    def __post_init__(self):
        self.coset = np.asarray(self.coset, dtype=np.int64)
        if self.coset.shape != (self.graph.N,):
            raise ValueError("coset length must equal N")
        if self.coset.size and (self.coset.min() < 0 or self.coset.max() >= self.graph.q):
            raise ValueError("coset components must lie in [0, q)")

    def transmit_symbols(self, codeword) -> np.ndarray:
        """``codeword + coset`` over GF(q)."""
        return self.graph.field.add_table[np.asarray(codeword), self.coset]

    def to_json(self) -> str:
        g = self.graph
        edges = np.stack([g.var, g.chk, g.labels], axis=1).tolist()
        return json.dumps({"version": GRAPH_FORMAT_VERSION, "q": g.q, "N": g.N, "M": g.M,
                           "edges": edges, "coset": self.coset.tolist()})

    @classmethod
    def from_json(cls, text: str, mapping=None) -> "CosetCode":
        d = json.loads(text)
        if d.get("version") != GRAPH_FORMAT_VERSION:
            raise ValueError(f"unsupported graph format version {d.get('version')}")
        e = np.asarray(d["edges"], dtype=np.int64).reshape(-1, 3)
        g = TannerGraph(int(d["q"]), int(d["N"]), int(d["M"]), e[:, 0], e[:, 1], e[:, 2])
        return cls(g, np.asarray(d["coset"], dtype=np.int64), mapping)
