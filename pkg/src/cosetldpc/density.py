"""Monte-Carlo density evolution and the stability margin.

Message laws are represented by populations of LLR-vector samples drawn
under the all-zero codeword. Each half-iteration rebuilds the population
from independent draws of the previous one, which is what the
tree-like-neighbourhood assumption prescribes.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .decoder import check_update
from .ensemble import DegreeDist
from .gf import GaloisField, field
from .messages import f_of, llr_of, mi_terms, pe_of, prob_of
from .modulation import Mapping, equivalent_channel_sample


@dataclass
class DeTrace:
    """Per-iteration estimates; index 0 is the initial message law."""

    pe: np.ndarray
    pe_stderr: np.ndarray
    D: np.ndarray
    D_stderr: np.ndarray
    I: np.ndarray
    I_stderr: np.ndarray
    n_samples: int
    seed: int | None = None
    workers: int = 1

    @property
    def iterations(self) -> int:
        return len(self.pe) - 1

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {header}\n")
        buf.write("iteration,Pe,Pe_stderr,D,I\n")
        for t in range(len(self.pe)):
            buf.write(f"{t},{self.pe[t]:.10g},{self.pe_stderr[t]:.10g},{self.D[t]:.10g},{self.I[t]:.10g}\n")
        return buf.getvalue()


def _draw_degrees(weights: dict, n: int, rng: np.random.Generator) -> np.ndarray:
    degs = np.array(sorted(weights))
    p = np.array([weights[d] for d in degs], dtype=float)
    return degs[rng.choice(degs.size, size=n, p=p / p.sum())]


@dataclass
class MonteCarloDE:
    """Sampling operators for one ensemble on one channel.

    Populations are arrays of shape ``(n, q - 1)`` holding LLR vectors.
    """

    dd: DegreeDist
    mapping: Mapping
    channel: object
    F: GaloisField = dc_field(default=None)

    def __post_init__(self):
        if self.F is None:
            self.F = field(self.mapping.q)

    @property
    def q(self) -> int:
        return self.F.q

    def initial(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Initial messages: zero symbol sent through a uniform random coset."""
        x = equivalent_channel_sample(self.channel, self.mapping, np.zeros(n, dtype=np.int64), rng)
        return llr_of(x)

    def leftbound(self, R: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        """Check-node outputs fed by independent draws from population ``R``."""
        out = np.empty((n, self.q - 1))
        degs = _draw_degrees(self.dd.rho, n, rng)
        for d in np.unique(degs):
            rows = np.nonzero(degs == d)[0]
            idx = rng.integers(0, len(R), size=(rows.size, d - 1))
            labels = rng.integers(1, self.q, size=(rows.size, d - 1))
            out_label = rng.integers(1, self.q, size=rows.size)
            msgs = prob_of(R[idx])
            out[rows] = llr_of(check_update(msgs, labels, out_label, self.F))
        return out

    def rightbound(self, L: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        """Variable-node outputs: a fresh initial message plus ``i - 1`` leftbound draws."""
        out = self.initial(n, rng)
        degs = _draw_degrees(self.dd.lam, n, rng)
        for d in np.unique(degs):
            rows = np.nonzero(degs == d)[0]
            idx = rng.integers(0, len(L), size=(rows.size, d - 1))
            out[rows] += L[idx].sum(axis=1)
        return out

    def run(self, n: int, iters: int, rng: np.random.Generator, observer=None) -> list[np.ndarray]:
        """Evolve a population for ``iters`` rounds.

        ``observer(t, R, L)`` is called after every round (``L`` is None at
        ``t = 0``). Returns the list of rightbound populations.
        """
        R = self.initial(n, rng)
        if observer is not None:
            observer(0, R, None)
        history = [R]
        for t in range(1, iters + 1):
            L = self.leftbound(R, n, rng)
            R = self.rightbound(L, n, rng)
            if observer is not None:
                observer(t, R, L)
            history.append(R)
        return history


def _batch_stats(R: np.ndarray, n_batches: int) -> np.ndarray:
    """Batch sums of (Pe, f, I) terms, shape (n_batches, 3), plus counts."""
    x = prob_of(R)
    terms = np.stack([pe_of(x), f_of(x), mi_terms(R)], axis=-1)
    parts = np.array_split(terms, n_batches)
    return np.array([p.sum(axis=0) for p in parts]), np.array([len(p) for p in parts])


def _worker(args):
    de, n, iters, seed_seq, n_batches = args
    rng = np.random.default_rng(seed_seq)
    sums, counts = [], None

    def observe(t, R, L):
        nonlocal counts
        s, counts = _batch_stats(R, n_batches)
        sums.append(s)

    de.run(n, iters, rng, observer=observe)
    return np.array(sums), counts


def mc_density_evolution(dd: DegreeDist, mapping: Mapping, channel, n_samples: int = 100_000,
                         iters: int = 50, rng=None, workers: int = 1, batches: int = 20) -> DeTrace:
    """Monte-Carlo density evolution under the all-zero codeword.

    Parameters
    ----------
    n_samples : int
        Total population size, at least 1000. It is split evenly across
        ``workers``, each evolving its own sub-population on an independent
        RNG substream.
    rng : int, numpy.random.Generator or None
        Seed material. Results depend only on the seed and ``workers``.
    batches : int
        Total number of batches used for batch-means standard errors.

    Returns
    -------
    DeTrace
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if workers < 1:
        raise ValueError("workers must be positive")
    if isinstance(rng, np.random.Generator):
        seed = int(rng.integers(2**63))
    else:
        seed = rng
    children = np.random.SeedSequence(seed).spawn(workers)
    sizes = [len(a) for a in np.array_split(np.arange(n_samples), workers)]
    per = max(1, batches // workers)
    de = MonteCarloDE(dd, mapping, channel)
    jobs = [(de, n, iters, ss, per) for n, ss in zip(sizes, children)]
    if workers == 1:
        results = [_worker(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, jobs))
    sums = np.concatenate([r[0] for r in results], axis=1)  # (iters+1, B, 3)
    counts = np.concatenate([r[1] for r in results])
    means = sums / counts[None, :, None]
    total = sums.sum(axis=1) / counts.sum()
    B = counts.size
    se = means.std(axis=1, ddof=1) / np.sqrt(B) if B > 1 else np.zeros_like(total)
    return DeTrace(
        pe=total[:, 0], pe_stderr=se[:, 0],
        D=total[:, 1], D_stderr=se[:, 1],
        I=np.clip(total[:, 2], 0.0, 1.0), I_stderr=se[:, 2],
        n_samples=n_samples, seed=seed, workers=workers,
    )


def stability_margin(dd: DegreeDist, delta: float) -> float:
    """``lambda'(0) * rho'(1) * Delta``; below one the zero-error fixed point
    is stable, above one it is not."""
    if not 0 < delta <= 1:
        raise ValueError("Delta must lie in (0, 1]")
    return dd.lambda2 * dd.rho_prime_1 * delta
