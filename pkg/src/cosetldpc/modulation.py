"""Mappings from GF(q) to channel inputs, channel models, and capacity tools."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from functools import reduce

import numpy as np
from scipy.special import logsumexp, ndtri

from .errors import DegenerateObservationError, NumericalError
from .gf import field as default_field
from .messages import shift_prob


@dataclass(frozen=True)
class Mapping:
    """The table ``delta(i)`` for ``i`` in ``[0, q)``.

    For AWGN channels entries are real amplitudes; for a DMC they are input
    symbol indices. ``kind`` is one of ``quantization``, ``nonuniform``,
    ``pam`` or ``explicit``.
    """

    table: np.ndarray
    kind: str = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "table", np.asarray(self.table))

    @property
    def q(self) -> int:
        return int(self.table.size)

    @property
    def energy(self) -> float:
        return float(np.mean(self.table.astype(float) ** 2))

    def preimage_counts(self) -> dict:
        vals, counts = np.unique(self.table, return_counts=True)
        return {v.item(): int(c) for v, c in zip(vals, counts)}

    def to_json(self) -> str:
        return json.dumps(self.table.tolist())

    @classmethod
    def from_json(cls, text: str, kind: str = "explicit") -> "Mapping":
        return cls(np.asarray(json.loads(text)), kind)


def quantization_mapping(q: int, counts) -> Mapping:
    """Many-to-one mapping hitting symbol ``a`` exactly ``counts[a]`` times.

    ``counts`` is either a list of integers (symbols ``0, 1, ...``) or a list
    of ``(symbol, count)`` pairs. Field indices are assigned to symbols in
    ascending blocks.
    """
    pairs = [(a, n) for a, n in counts] if counts and isinstance(counts[0], (tuple, list)) \
        else list(enumerate(counts))
    if any(int(n) < 1 for _, n in pairs):
        raise ValueError("every target symbol needs at least one preimage")
    if sum(int(n) for _, n in pairs) != q:
        raise ValueError(f"counts sum to {sum(n for _, n in pairs)}, expected {q}")
    table = np.concatenate([np.full(int(n), a) for a, n in pairs])
    return Mapping(table, "quantization")


def _unit_energy(x: np.ndarray) -> np.ndarray:
    return x / np.sqrt(np.mean(x**2))


def nonuniform_constellation(q: int) -> Mapping:
    """Points splitting N(0, 1) into ``q + 1`` equiprobable cells, then
    scaled to unit average energy."""
    pts = ndtri(np.arange(1, q + 1) / (q + 1))
    return Mapping(_unit_energy(pts), "nonuniform")


def pam_constellation(q: int) -> Mapping:
    return Mapping(_unit_energy(np.arange(q) * 2.0 - (q - 1)), "pam")


@dataclass(frozen=True)
class AWGN:
    """Real additive white Gaussian noise with standard deviation ``sigma``."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def from_snr_db(cls, snr_db: float, energy: float = 1.0) -> "AWGN":
        return cls(math.sqrt(energy / 10 ** (snr_db / 10)))

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x + self.sigma * rng.standard_normal(x.shape)

    def log_likelihood(self, y, points) -> np.ndarray:
        """``log Pr[y | point]`` up to a term independent of the point,
        shape ``y.shape + points.shape``."""
        y = np.asarray(y, dtype=float)[..., None]
        return -((y - np.asarray(points, dtype=float)) ** 2) / (2 * self.sigma**2)


@dataclass(frozen=True)
class DMC:
    """Discrete memoryless channel; ``P[a, y] = Pr[y | a]``."""

    P: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2 or np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
            raise ValueError("rows of a DMC transition matrix must be distributions")
        object.__setattr__(self, "P", P)

    def sample(self, a, rng: np.random.Generator) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        cdf = np.cumsum(self.P, axis=1)
        u = rng.random(a.shape)
        y = (u[..., None] > cdf[a]).sum(axis=-1)
        return np.minimum(y, self.P.shape[1] - 1)

    def log_likelihood(self, y, points) -> np.ndarray:
        y = np.asarray(y, dtype=np.int64)
        with np.errstate(divide="ignore"):
            return np.moveaxis(np.log(self.P[np.asarray(points, dtype=np.int64)][:, y]), 0, -1)


def symbol_likelihoods(channel, mapping: Mapping, y) -> np.ndarray:
    """Normalized ``Pr[y | delta(k)]`` over ``k``, shape ``y.shape + (q,)``."""
    ll = channel.log_likelihood(y, mapping.table)
    mx = ll.max(axis=-1, keepdims=True)
    if np.any(~np.isfinite(mx)):
        raise DegenerateObservationError("channel output impossible under every input")
    p = np.exp(ll - mx)
    return p / p.sum(axis=-1, keepdims=True)


def app_vector(channel, mapping: Mapping, y, v) -> np.ndarray:
    """``r_k`` proportional to ``Pr[y | delta(k + v)]``."""
    F = default_field(mapping.q)
    return shift_prob(symbol_likelihoods(channel, mapping, y), np.asarray(v), F)


def delta_param(channel, mapping: Mapping) -> float:
    """Average Bhattacharyya overlap between distinct field symbols."""
    q = mapping.q
    if isinstance(channel, AWGN):
        d = mapping.table.astype(float)
        diff = (d[:, None] - d[None, :]) / 2
        B = np.exp(-(diff**2) / (2 * channel.sigma**2))
    else:
        rows = channel.P[mapping.table.astype(np.int64)]
        s = np.sqrt(rows)
        B = s @ s.T
    return float((B.sum() - np.trace(B)) / (q * (q - 1)))


def _gl_panels(lo: float, hi: float, panels: int, order: int = 20):
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return (mid + half * t).ravel(), (half * w).ravel()


def _awgn_capacity(points: np.ndarray, sigma: float, panels: int) -> float:
    q = points.size
    t, w = _gl_panels(-8.0, 8.0, panels)
    phi = np.exp(-t**2 / 2) / math.sqrt(2 * math.pi)
    # y = points[i] + sigma t, for every i and quadrature node
    y = points[:, None] + sigma * t[None, :]
    expo = -((y[..., None] - points[None, None, :]) ** 2 - (sigma * t[None, :, None]) ** 2) / (2 * sigma**2)
    log_ratio = -(logsumexp(expo, axis=-1) - math.log(q)) / math.log(2)
    return float(np.mean((log_ratio * phi) @ w))


def equiprobable_capacity(channel, mapping: Mapping, tol: float = 1e-9, max_panels: int = 4096) -> float:
    """``I(U; Y)`` in bits for ``U`` uniform on GF(q) and input ``delta(U)``.

    AWGN uses composite Gauss-Legendre quadrature over +-8 sigma around each
    point, doubling the panel count until successive values agree to
    ``tol``. A DMC is summed exactly.
    """
    if isinstance(channel, DMC):
        rows = channel.P[mapping.table.astype(np.int64)]
        py = rows.mean(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(rows > 0, rows * np.log2(rows / py), 0.0)
        return float(terms.sum() / mapping.q)
    points = mapping.table.astype(float)
    panels = 8
    prev = _awgn_capacity(points, channel.sigma, panels)
    while panels < max_panels:
        panels *= 2
        cur = _awgn_capacity(points, channel.sigma, panels)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise NumericalError("capacity quadrature did not converge")


def snr_for_capacity(mapping: Mapping, target: float, lo: float = -20.0, hi: float = 60.0,
                     tol_db: float = 1e-3) -> float:
    """SNR in dB (``E_s / sigma^2``) at which the AWGN capacity equals ``target`` bits."""
    es = mapping.energy

    def cap(snr):
        return equiprobable_capacity(AWGN.from_snr_db(snr, es), mapping)

    if target >= cap(hi) or target <= 0:
        raise ValueError(f"target {target} bits is not reachable with this mapping")
    while hi - lo > tol_db:
        mid = (lo + hi) / 2
        if cap(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def unconstrained_limit(bits_per_dim: float) -> float:
    """Gaussian-input SNR limit in dB for ``bits_per_dim`` bits per real dimension."""
    if bits_per_dim <= 0:
        raise ValueError("rate must be positive")
    return 10 * math.log10(2 ** (2 * bits_per_dim) - 1)


@dataclass
class DegeneracyReport:
    mapping_divisor: int
    identical_inputs: list

    @property
    def mapping_degenerate(self) -> bool:
        return self.mapping_divisor > 1

    @property
    def channel_degenerate(self) -> bool:
        return bool(self.identical_inputs)

    @property
    def degenerate(self) -> bool:
        return self.mapping_degenerate or self.channel_degenerate


def check_nondegenerate(mapping: Mapping, channel=None) -> DegeneracyReport:
    """Flag preimage counts sharing a divisor and channel inputs with equal conditionals."""
    n = reduce(math.gcd, mapping.preimage_counts().values())
    same = []
    if isinstance(channel, DMC):
        P = channel.P
        for a in range(P.shape[0]):
            for b in range(a + 1, P.shape[0]):
                if np.array_equal(P[a], P[b]):
                    same.append((a, b))
    return DegeneracyReport(n, same)


def equivalent_channel_sample(channel, mapping: Mapping, x, rng: np.random.Generator) -> np.ndarray:
    """Pass ``x`` through a random coset, the mapping and the channel, and
    return the APP vectors seen by the decoder."""
    x = np.asarray(x, dtype=np.int64)
    F = default_field(mapping.q)
    v = rng.integers(0, mapping.q, size=x.shape)
    y = channel.sample(mapping.table[F.add_table[x, v]], rng)
    return app_vector(channel, mapping, y, v)


def equivalent_channel_distribution(channel: DMC, mapping: Mapping, x: int):
    """Exact output law of :func:`equivalent_channel_sample` for a DMC.

    Returns
    -------
    atoms : ndarray, shape (n, q)
    probs : ndarray, shape (n,)
        One atom per reachable ``(v, y)`` pair; atoms may repeat.
    """
    F = default_field(mapping.q)
    q, ny = mapping.q, channel.P.shape[1]
    atoms, probs = [], []
    for v in range(q):
        a = int(mapping.table[F.add_table[x, v]])
        for y in range(ny):
            p = channel.P[a, y] / q
            if p > 0:
                atoms.append(app_vector(channel, mapping, np.array(y), v))
                probs.append(p)
    return np.array(atoms), np.array(probs)


def equivalent_channel_residuals(channel: DMC, mapping: Mapping, tol: float = 1e-12) -> dict:
    """Exact checks on the equivalent channel of a small DMC.

    Enumerates the output law for every input symbol and returns the largest
    violations of

    ``app``
        the fixed-point property: the posterior of the input given an
        output vector equals that vector;
    ``factorization``
        ``Pr[y | i] = y_i n(y) Q(y*)`` with one ``Q`` value per orbit.
    """
    from .messages import multiplicity, orbit

    F = default_field(mapping.q)
    q = mapping.q
    pts: list[np.ndarray] = []
    law: list[np.ndarray] = []  # law[k][i] = Pr[output k | input i]

    def find(vec):
        for k, z in enumerate(pts):
            if np.max(np.abs(vec - z)) <= tol:
                return k
        pts.append(vec)
        law.append(np.zeros(q))
        return len(pts) - 1

    for i in range(q):
        atoms, probs = equivalent_channel_distribution(channel, mapping, i)
        for a, p in zip(atoms, probs):
            law[find(a)][i] += p
    # close every orbit so absent members are checked as zero-probability
    for k in range(len(pts)):
        for y in orbit(pts[k], F, tol):
            find(y)

    app = 0.0
    for y, pr in zip(pts, law):
        tot = pr.sum()
        if tot > 0:
            app = max(app, float(np.max(np.abs(pr / tot - y))))

    fact = 0.0
    done = set()
    for k, y in enumerate(pts):
        if k in done:
            continue
        members = [find(z) for z in orbit(y, F, tol)]
        done.update(members)
        n = multiplicity(y, F, tol)
        ratios = [law[j][i] / (pts[j][i] * n) for j in members for i in range(q) if pts[j][i] > tol]
        Q = float(np.mean(ratios)) if ratios else 0.0
        for j in members:
            fact = max(fact, float(np.max(np.abs(law[j] - pts[j] * n * Q))))
    return {"app": app, "factorization": fact}
