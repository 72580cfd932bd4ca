"""EXIT-chart machinery for coset GF(q) LDPC codes on the AWGN channel.

LLR messages are modelled by the one-parameter symmetric, permutation-
invariant Gaussian law: mean ``sigma**2 / 2`` in every component, variance
``sigma**2`` on the diagonal and ``sigma**2 / 2`` off it. Transfer curves are
tabulated by Monte Carlo on a grid and then replaced by monotone polynomial
fits, whose inverses are taken by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.interpolate import BPoly, PchipInterpolator
from scipy.optimize import isotonic_regression, nnls
from scipy.stats import binom

from .decoder import check_update
from .ensemble import DegreeDist
from .errors import ConfigError, InfeasibleError, NumericalError
from .gf import field
from .messages import llr_of, mi_estimate, mi_terms, prob_of
from .modulation import AWGN, Mapping, equiprobable_capacity
from .simplex import simplex_solve

SIGMA_MAX = 10.0
DEGREES = (9, 12, 15, 18, 21, 24)

__all__ = [
    "SIGMA_MAX", "DomainError", "GaussianSpec", "FitPoly", "fit_monotone", "sample_gauss_sym",
    "gauss_sym_from_normals", "mi_estimate", "sample_initial", "fit_J", "fit_JR", "ExitContext",
    "ExitCurve", "vnd_value", "cnd_value", "cnd_method2_table", "mix_curves", "tunnel_open",
    "default_epsilon", "design_lambda", "design_rho",
]


class DomainError(ValueError):
    """A transfer function was queried outside the interval where it is defined."""


# --- Gaussian messages -------------------------------------------------------

@dataclass(frozen=True)
class GaussianSpec:
    """Symmetric permutation-invariant Gaussian LLR law on GF(q)."""

    sigma: float
    q: int

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.q < 2:
            raise ValueError("q must be at least 2")
        if self.sigma > 0 and np.linalg.eigvalsh(self.cov).min() <= 0:
            raise NumericalError("covariance is not positive definite")

    @property
    def mean(self) -> np.ndarray:
        return np.full(self.q - 1, self.sigma**2 / 2)

    @property
    def cov(self) -> np.ndarray:
        k = self.q - 1
        return self.sigma**2 / 2 * (np.eye(k) + np.ones((k, k)))


def gauss_sym_from_normals(sigma: float, z: np.ndarray, z0: np.ndarray) -> np.ndarray:
    """Map standard normals to the Gaussian LLR law.

    ``z`` has shape ``(n, q - 1)`` and ``z0`` shape ``(n,)``. The covariance
    ``sigma**2/2 * (I + 11^T)`` factors as ``A A^T`` with ``A = sigma/sqrt(2) [I | 1]``,
    so one shared normal per sample supplies the off-diagonal part.
    """
    return sigma**2 / 2 + sigma / np.sqrt(2) * (z + z0[:, None])


def sample_gauss_sym(sigma: float, n: int, rng: np.random.Generator, q: int) -> np.ndarray:
    """``n`` draws of the Gaussian LLR law with parameter ``sigma``, shape ``(n, q - 1)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    GaussianSpec(sigma, q)
    return gauss_sym_from_normals(sigma, rng.standard_normal((n, q - 1)), rng.standard_normal(n))


def sample_initial(sigma_z: float, mapping: Mapping, n: int, rng: np.random.Generator, return_inputs=False):
    """Initial LLR messages of an AWGN channel under the all-zero codeword.

    With coset symbol ``v`` uniform and noise ``z``, component ``i`` is
    ``(d_i**2 / 2 + d_i * z) / sigma_z**2`` where ``d_i = delta(v) - delta(v + i)``.
    With ``return_inputs`` the drawn ``(v, z)`` are returned too.
    """
    if sigma_z <= 0:
        raise ValueError("sigma_z must be positive")
    F = field(mapping.q)
    table = mapping.table.astype(float)
    v = rng.integers(0, mapping.q, size=n)
    z = rng.normal(0.0, sigma_z, size=n)
    d = table[v][:, None] - table[F.add_table[v][:, 1:]]
    w = (d**2 / 2 + d * z[:, None]) / sigma_z**2
    return (w, v, z) if return_inputs else w


# --- monotone fits -----------------------------------------------------------

@dataclass
class FitPoly:
    """Nondecreasing fitted function on ``[lo, hi]``.

    ``kind`` is ``"bernstein"`` (one polynomial, ``coeffs`` are its Bernstein
    coefficients) or ``"pchip"`` (monotone piecewise cubic through
    ``(knots, coeffs)``).
    """

    coeffs: np.ndarray
    lo: float
    hi: float
    monotone: bool = True
    kind: str = "bernstein"
    knots: np.ndarray | None = None
    _poly: object = dc_field(init=False, repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.kind == "bernstein":
            self._poly = BPoly(self.coeffs[:, None], [self.lo, self.hi])
        elif self.kind == "pchip":
            self.knots = np.asarray(self.knots, dtype=float)
            self._poly = PchipInterpolator(self.knots, self.coeffs)
        else:
            raise ValueError(f"unknown fit kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo - 1e-12) or np.any(x > self.hi + 1e-12):
            raise DomainError(f"argument outside [{self.lo}, {self.hi}]")
        return self._poly(np.clip(x, self.lo, self.hi))

    @property
    def range(self) -> tuple[float, float]:
        return float(self._poly(self.lo)), float(self._poly(self.hi))

    def inverse(self, y, tol: float = 1e-12):
        """Bisection inverse; ``y`` must lie in :attr:`range`."""
        y = np.asarray(y, dtype=float)
        a, b = self.range
        if np.any(y < a - 1e-12) or np.any(y > b + 1e-12):
            raise DomainError(f"value outside the fitted range [{a}, {b}]")
        lo = np.full(y.shape, self.lo)
        hi = np.full(y.shape, self.hi)
        while np.max(hi - lo, initial=0.0) > tol * max(1.0, self.hi - self.lo):
            mid = (lo + hi) / 2
            below = self._poly(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return (lo + hi) / 2

    def to_dict(self) -> dict:
        d = {"basis": self.kind, "coeffs": self.coeffs.tolist(), "domain": [self.lo, self.hi],
             "monotone": self.monotone}
        if self.knots is not None:
            d["knots"] = self.knots.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitPoly":
        return cls(np.array(d["coeffs"]), *d["domain"], monotone=d.get("monotone", True),
                   kind=d.get("basis", "bernstein"), knots=d.get("knots"))


def _fit_bernstein(x, y, lo, hi, degree, anchor):
    t = (x - lo) / (hi - lo)
    B = binom.pmf(np.arange(degree + 1)[None, :], degree, t[:, None])
    tail = np.cumsum(B[:, ::-1], axis=1)[:, ::-1][:, 1:]  # column k: sum of basis k..degree
    if anchor is None:
        A = np.hstack([np.ones((len(x), 1)), -np.ones((len(x), 1)), tail])
        sol, _ = nnls(A, y, maxiter=50 * A.shape[1])
        c0, steps = sol[0] - sol[1], sol[2:]
    else:
        steps, _ = nnls(tail, y - anchor, maxiter=50 * tail.shape[1])
        c0 = anchor
    return FitPoly(c0 + np.concatenate([[0.0], np.cumsum(steps)]), lo, hi)


def fit_monotone(x, y, lo: float, hi: float, degree=DEGREES, anchor: float | None = None,
                 tol: float = 1e-3, upper: float | None = None) -> FitPoly:
    """Nondecreasing fit of tabulated points.

    Tries least-squares Bernstein polynomials of each degree in ``degree``
    in turn. Coefficients are written as ``c0 + cumsum(steps)`` with
    ``steps >= 0``, which makes the polynomial nondecreasing, and solved by
    NNLS; ``anchor`` pins the value at ``lo``. The first degree whose
    largest residual is within ``tol`` wins. If none does, the points are
    made monotone by isotonic regression and joined by a monotone cubic
    interpolant; if even that moves a point by more than ``tol``,
    :class:`NumericalError` is raised. ``upper`` caps the fitted values.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for deg in np.atleast_1d(degree):
        fit = _fit_bernstein(x, y, lo, hi, int(deg), anchor)
        if upper is not None:
            # clipping nondecreasing Bernstein coefficients keeps the fit monotone and below the cap
            fit = FitPoly(np.minimum(fit.coeffs, upper), lo, hi)
        if np.max(np.abs(fit(x) - y)) <= tol:
            return fit
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    if anchor is not None:
        ys = ys.copy()
        ys[xs == lo] = anchor
    iso = isotonic_regression(ys).x
    if upper is not None:
        iso = np.minimum(iso, upper)
    resid = np.max(np.abs(iso - ys))
    if resid > tol:
        raise NumericalError(f"tabulated curve departs from monotone by {resid:.3g} (> {tol:.3g})")
    if xs[0] > lo or xs[-1] < hi:
        raise ValueError("tabulation must cover the whole domain")
    return FitPoly(iso, lo, hi, kind="pchip", knots=xs)


def _sigma_grid(n_grid: int, sigma_max: float) -> np.ndarray:
    return np.geomspace(0.01, sigma_max, n_grid)


def fit_J(q: int, n_grid: int = 200, n_samples: int = 200_000, rng=None, degree=DEGREES,
          sigma_max: float = SIGMA_MAX):
    """Tabulate and fit ``J(sigma)`` for GF(q).

    The same standard normals are reused at every grid point, which keeps
    the tabulated curve smooth in ``sigma``.

    Returns
    -------
    J : FitPoly
    table : ndarray, shape (n_grid, 2)
        The Monte-Carlo points ``(sigma, J)``.
    """
    rng = np.random.default_rng(rng)
    z = rng.standard_normal((n_samples, q - 1))
    z0 = rng.standard_normal(n_samples)
    sig = _sigma_grid(n_grid, sigma_max)
    vals = np.array([mi_estimate(gauss_sym_from_normals(s, z, z0)) for s in sig])
    J = fit_monotone(np.r_[0.0, sig], np.r_[0.0, vals], 0.0, sigma_max, degree, anchor=0.0, upper=1.0)
    return J, np.column_stack([sig, vals])


def fit_JR(sigma_z: float, mapping: Mapping, n_grid: int = 200, n_samples: int = 200_000, rng=None,
           degree=DEGREES, sigma_max: float = SIGMA_MAX):
    """Tabulate and fit ``J_R(sigma; sigma_z, delta)``.

    Returns ``(JR, I0, table)`` where ``I0 = J_R(0)`` is the information
    carried by the initial message alone.
    """
    rng = np.random.default_rng(rng)
    q = mapping.q
    w0 = sample_initial(sigma_z, mapping, n_samples, rng)
    z = rng.standard_normal((n_samples, q - 1))
    z0 = rng.standard_normal(n_samples)
    I0 = mi_estimate(w0)
    sig = _sigma_grid(n_grid, sigma_max)
    vals = np.array([mi_estimate(w0 + gauss_sym_from_normals(s, z, z0)) for s in sig])
    JR = fit_monotone(np.r_[0.0, sig], np.r_[I0, vals], 0.0, sigma_max, degree, anchor=I0, upper=1.0)
    return JR, I0, np.column_stack([sig, vals])


# --- curves ------------------------------------------------------------------

@dataclass
class ExitContext:
    """Everything the transfer curves depend on for one channel and mapping."""

    J: FitPoly
    q: int
    method: int = 2
    I0: float = 0.0
    JR: FitPoly | None = None
    sigma_z: float | None = None
    mapping: Mapping | None = None

    @classmethod
    def build(cls, mapping: Mapping, sigma_z: float, method: int = 2, J: FitPoly | None = None,
              n_grid: int = 200, n_samples: int = 200_000, rng=None,
              sigma_max: float = SIGMA_MAX) -> "ExitContext":
        """Fit what the chosen method needs. A supplied ``J`` fixes ``sigma_max``."""
        if method not in (1, 2):
            raise ConfigError("method must be 1 or 2")
        rng = np.random.default_rng(rng)
        if J is None:
            J, _ = fit_J(mapping.q, n_grid, n_samples, rng, sigma_max=sigma_max)
        if method == 1:
            # the initial-message information equals the equiprobable capacity
            I0 = equiprobable_capacity(AWGN(sigma_z), mapping) / np.log2(mapping.q)
            return cls(J, mapping.q, 1, I0, None, sigma_z, mapping)
        JR, I0, _ = fit_JR(sigma_z, mapping, n_grid, n_samples, rng, sigma_max=J.hi)
        return cls(J, mapping.q, 2, I0, JR, sigma_z, mapping)

    @property
    def sigma_max(self) -> float:
        return self.J.hi

    def Jinv(self, I):
        """``J^{-1}``, saturating at the top of the fitted range."""
        return self.J.inverse(np.minimum(I, self.J.range[1]))

    @property
    def I_low(self) -> float:
        return 0.0 if self.method == 1 else self.I0

    @property
    def I_high(self) -> float:
        """Largest rightbound information the model can represent."""
        return self.J.range[1] if self.method == 1 else self.JR.range[1]


def vnd_value(ctx: ExitContext, I_A, i: int):
    """Variable-node transfer value for left degree ``i``."""
    I_A = np.asarray(I_A, dtype=float)
    if np.any(I_A < 0) or np.any(I_A > 1):
        raise DomainError("I_A must lie in [0, 1]")
    s2 = (i - 1) * ctx.Jinv(I_A) ** 2
    if ctx.method == 1:
        return ctx.J(np.minimum(np.sqrt(s2 + ctx.Jinv(ctx.I0) ** 2), ctx.sigma_max))
    return ctx.JR(np.minimum(np.sqrt(s2), ctx.sigma_max))


def cnd_value(ctx: ExitContext, I_A, j: int):
    """Method-1 check-node transfer value for right degree ``j``."""
    if ctx.method != 1:
        raise ValueError("method-2 check curves are tabulated, see cnd_method2_table")
    I_A = np.asarray(I_A, dtype=float)
    if np.any(I_A < 0) or np.any(I_A > 1):
        raise DomainError("I_A must lie in [0, 1]")
    return 1 - ctx.J(np.minimum(np.sqrt(j - 1) * ctx.Jinv(1 - I_A), ctx.sigma_max))


class _CheckDraws:
    """Random inputs for the method-2 check node, reused across sigma values."""

    def __init__(self, ctx: ExitContext, j: int, n_samples: int, rng: np.random.Generator):
        q = ctx.q
        n_in = n_samples * (j - 1)
        self.shape = (n_samples, j - 1, q)
        self.w0 = sample_initial(ctx.sigma_z, ctx.mapping, n_in, rng)
        self.z = rng.standard_normal((n_in, q - 1))
        self.z0 = rng.standard_normal(n_in)
        self.labels = rng.integers(1, q, size=(n_samples, j - 1))
        self.out_label = rng.integers(1, q, size=n_samples)
        self.F = field(q)

    def info(self, sigma: float, barred: bool = True) -> float:
        w = self.w0 + gauss_sym_from_normals(sigma, self.z, self.z0) if sigma > 0 else self.w0
        out = np.ones_like(self.out_label) if barred else self.out_label
        msgs = prob_of(w).reshape(self.shape)
        return mi_estimate(llr_of(check_update(msgs, self.labels, out, self.F)))


def cnd_method2_point(ctx: ExitContext, I_A: float, j: int, n_samples: int, rng: np.random.Generator,
                      barred: bool = True) -> float:
    """Empirical method-2 check-node value at one ``I_A``.

    Rightbound LLR samples are the initial message plus a Gaussian of
    parameter ``J_R^{-1}(I_A)``. With ``barred`` the output-label scaling is
    skipped, which leaves the information unchanged.
    """
    if ctx.method != 2:
        raise ValueError("context is not a method-2 context")
    lo, hi = ctx.JR.range
    if I_A < lo - 1e-12 or I_A > hi + 1e-12:
        raise DomainError(f"I_A={I_A} outside [{lo}, {hi}]")
    sigma = float(ctx.JR.inverse(np.clip(I_A, lo, hi)))
    return _CheckDraws(ctx, j, n_samples, rng).info(sigma, barred)


@dataclass
class CheckCurve:
    """Method-2 check curve: a fit in ``sigma`` composed with ``J_R^{-1}``."""

    ctx: ExitContext
    fit: FitPoly
    table: np.ndarray

    @property
    def domain(self) -> tuple[float, float]:
        return self.ctx.JR.range

    def __call__(self, I_A):
        I_A = np.asarray(I_A, dtype=float)
        lo, hi = self.domain
        if np.any(I_A < lo - 1e-12) or np.any(I_A > hi + 1e-12):
            raise DomainError(f"I_A outside [{lo}, {hi}]")
        return self.fit(self.ctx.JR.inverse(np.clip(I_A, lo, hi)))


def cnd_method2_table(ctx: ExitContext, j: int, n_points: int = 41, n_samples: int = 20_000, rng=None,
                      degree=DEGREES) -> CheckCurve:
    """Tabulate the method-2 check curve of right degree ``j`` over
    ``sigma`` in ``[0, 6.5]`` and fit it as a monotone function of ``sigma``."""
    if ctx.method != 2:
        raise ValueError("context is not a method-2 context")
    draws = _CheckDraws(ctx, j, n_samples, np.random.default_rng(rng))
    sig = np.linspace(0.0, ctx.sigma_max, n_points)
    vals = np.array([draws.info(s) for s in sig])
    fit = fit_monotone(sig, vals, 0.0, ctx.sigma_max, degree, upper=1.0)
    return CheckCurve(ctx, fit, np.column_stack([sig, ctx.JR(sig), vals]))


@dataclass
class ExitCurve:
    """Per-degree transfer curves and their weighted mixture on a grid."""

    grid: np.ndarray
    per_degree: dict
    mixed: np.ndarray
    method: int
    kind: str

    def to_csv(self, header: str | None = None) -> str:
        degs = sorted(self.per_degree)
        lines = [f"# {header}"] if header else []
        lines.append(",".join(["I_A"] + [f"I_E_{self.kind}{d}" for d in degs] + ["I_E_mixed"]))
        for k, g in enumerate(self.grid):
            row = [g] + [self.per_degree[d][k] for d in degs] + [self.mixed[k]]
            lines.append(",".join(f"{v:.10g}" for v in row))
        return "\n".join(lines) + "\n"


def mix_curves(per_degree: dict, weights: dict, grid, method: int = 2, kind: str = "deg") -> ExitCurve:
    """Edge-perspective weighted average of per-degree curve values."""
    missing = [d for d in weights if d not in per_degree]
    if missing:
        raise KeyError(f"no curve for degree(s) {missing}")
    mixed = sum(w * np.asarray(per_degree[d], dtype=float) for d, w in weights.items())
    return ExitCurve(np.asarray(grid, dtype=float), {d: np.asarray(per_degree[d]) for d in weights},
                     mixed, method, kind)


class CurveSet:
    """Callable per-degree VND and CND curves for one context."""

    def __init__(self, ctx: ExitContext, left_degrees, right_degrees, n_points: int = 41,
                 n_samples: int = 20_000, rng=None):
        self.ctx = ctx
        rng = np.random.default_rng(rng)
        self.cnd_fits = {}
        if ctx.method == 2:
            for j in sorted(right_degrees):
                self.cnd_fits[j] = cnd_method2_table(ctx, j, n_points, n_samples, rng)
        self.left = sorted(left_degrees)
        self.right = sorted(right_degrees)

    def vnd(self, I_A, i):
        return vnd_value(self.ctx, I_A, i)

    def cnd(self, I_A, j):
        if self.ctx.method == 1:
            return cnd_value(self.ctx, I_A, j)
        return self.cnd_fits[j](I_A)

    @property
    def cnd_domain(self) -> tuple[float, float]:
        return (0.0, 1.0) if self.ctx.method == 1 else self.ctx.JR.range

    def mixed_vnd(self, I, lam: dict):
        return sum(w * self.vnd(I, i) for i, w in lam.items())

    def mixed_cnd(self, I, rho: dict):
        return sum(w * self.cnd(I, j) for j, w in rho.items())


def _bisect_inverse(f, y, lo: float, hi: float, tol: float = 1e-10):
    """Inverse of a nondecreasing vectorized ``f`` on ``[lo, hi]``; NaN outside its range."""
    y = np.asarray(y, dtype=float)
    flo, fhi = f(np.array(lo)), f(np.array(hi))
    a = np.full(y.shape, lo)
    b = np.full(y.shape, hi)
    while np.max(b - a, initial=0.0) > tol:
        mid = (a + b) / 2
        below = f(mid) < y
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    x = (a + b) / 2
    return np.where((y < flo) | (y > fhi), np.nan, x)


def design_grid(lo: float = 0.0, step: float = 1e-3) -> np.ndarray:
    """``{lo + step, lo + 2 step, ...} < 1``."""
    n = int(np.floor((1 - lo) / step - 1e-9))
    return lo + step * np.arange(1, n + 1)


def tunnel_open(dd: DegreeDist, curves: CurveSet, step: float = 1e-3):
    """Check that the VND curve lies strictly above the reversed CND curve.

    The comparison runs on leftbound-information grid points where the
    reversed CND curve is defined. Returns ``(is_open, min_gap, argmin)``.
    """
    lo, hi = curves.cnd_domain
    grid = design_grid(0.0, step)
    cnd_inv = _bisect_inverse(lambda x: curves.mixed_cnd(x, dd.rho), grid, lo, hi)
    ok = ~np.isnan(cnd_inv)
    if not ok.any():
        raise NumericalError("reversed check curve undefined on the whole grid")
    gap = curves.mixed_vnd(grid[ok], dd.lam) - cnd_inv[ok]
    k = int(np.argmin(gap))
    return bool(gap[k] > 0), float(gap[k]), float(grid[ok][k])


# --- linear-programming design -----------------------------------------------

def default_epsilon(I):
    """Margin profile: 5e-3 below 0.5, 4e-3 on [0.5, 0.6), zero above."""
    I = np.asarray(I, dtype=float)
    return np.where(I < 0.5, 5e-3, np.where(I < 0.6, 4e-3, 0.0))


EPS_MIN = 1e-6


def design_lambda(rho: dict, curves: CurveSet, left_degrees, epsilon=default_epsilon, step: float = 1e-3):
    """Choose ``lambda`` maximizing ``sum lambda_i / i`` under the tunnel constraint.

    Each grid point where the reversed CND curve is defined gives one linear
    constraint ``sum_i lambda_i VND_i(I) >= CND^{-1}(I) + eps(I) + EPS_MIN``.
    """
    left_degrees = sorted(left_degrees)
    lo, hi = curves.cnd_domain
    grid = design_grid(0.0, step)
    cnd_inv = _bisect_inverse(lambda x: curves.mixed_cnd(x, rho), grid, lo, hi)
    ok = ~np.isnan(cnd_inv)
    grid, rhs = grid[ok], cnd_inv[ok] + _eps(epsilon, grid[ok]) + EPS_MIN
    V = np.column_stack([curves.vnd(grid, i) for i in left_degrees])
    c = np.array([1.0 / i for i in left_degrees])
    sol = simplex_solve(c, np.vstack([-V, np.ones((1, len(c)))]), np.r_[-rhs, 1.0],
                        ["<="] * len(grid) + ["=="], maximize=True)
    _raise_if_infeasible(sol, V, rhs, grid)
    return {d: float(w) for d, w in zip(left_degrees, sol.x) if w > 1e-12}


def design_rho(lam: dict, curves: CurveSet, right_degrees, epsilon=default_epsilon, step: float = 1e-3):
    """Choose ``rho`` minimizing ``sum rho_j / j`` under the mirrored constraint
    ``sum_j rho_j CND_j(I) >= VND^{-1}(I) + eps(I) + EPS_MIN``."""
    right_degrees = sorted(right_degrees)
    lo, hi = curves.cnd_domain
    grid = design_grid(lo, step)
    grid = grid[grid <= hi]
    vnd_inv = _bisect_inverse(lambda x: curves.mixed_vnd(x, lam), grid, 0.0, 1.0)
    ok = ~np.isnan(vnd_inv)
    grid, rhs = grid[ok], vnd_inv[ok] + _eps(epsilon, grid[ok]) + EPS_MIN
    C = np.column_stack([curves.cnd(grid, j) for j in right_degrees])
    c = np.array([1.0 / j for j in right_degrees])
    sol = simplex_solve(c, np.vstack([-C, np.ones((1, len(c)))]), np.r_[-rhs, 1.0],
                        ["<="] * len(grid) + ["=="], maximize=False)
    _raise_if_infeasible(sol, C, rhs, grid)
    return {d: float(w) for d, w in zip(right_degrees, sol.x) if w > 1e-12}


def _eps(epsilon, grid):
    return epsilon(grid) if callable(epsilon) else np.full(grid.shape, float(epsilon))


def _raise_if_infeasible(sol, M, rhs, grid):
    if sol.status == "optimal":
        return
    if sol.status == "infeasible":
        # the best any single degree can do shows where the constraints bite
        k = int(np.argmax(rhs - M.max(axis=1)))
        raise InfeasibleError(f"design LP infeasible; most violated grid point I={grid[k]:.4f}")
    raise NumericalError(f"design LP ended with status {sol.status}")
