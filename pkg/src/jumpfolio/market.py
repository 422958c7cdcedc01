"""Exact pathwise construction of money account, stock and wealth processes.

All dynamics are piecewise closed-form: between event times the state
variables are exponentials of linear drifts, and each event multiplies
them by a jump factor.  Nothing is Euler-discretised; the reporting grid
only chooses where the closed forms are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .distributions import JumpDistribution
from .errors import BankruptcyError, ConfigError, RuinError
from .frictions import ConstraintSet, Frictionless, MarginModel
from .mpp import GeneratorMatrix, MarkedPointPath

DEFAULT_GRID_POINTS = 256


def jump_transform(transform: str) -> Callable:
    """Map name -> f(y); stock jump factor is 1 + f(y)."""
    if transform == "exponential":
        return lambda y: np.expm1(y)
    if transform == "identity":
        return lambda y: np.asarray(y, dtype=float)
    raise ConfigError(f"unknown jump transform {transform!r}", field="transform")


def transform_range(dist: JumpDistribution, transform: str):
    """Range of f over the essential support of the mark law."""
    f = jump_transform(transform)
    y_lo, y_hi = dist.support()
    lo = -1.0 if (transform == "exponential" and math.isinf(y_lo)) else float(f(y_lo))
    hi = math.inf if math.isinf(y_hi) else float(f(y_hi))
    return lo, hi


@dataclass(frozen=True)
class RegimeMarketParams:
    """Single-regime market coefficients: rates, drift, event law, frictions."""

    r: float
    mu: float
    lam: float
    dist: JumpDistribution
    transform: str = "exponential"
    margin: MarginModel = field(default_factory=Frictionless)

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("event intensity must be nonnegative", field="lam")
        lo, _ = transform_range(self.dist, self.transform)
        if lo <= -1.0 and self.transform == "identity":
            raise ConfigError(
                "identity transform requires marks > -1 on the support",
                field="transform",
            )

    @property
    def f(self):
        return jump_transform(self.transform)


@dataclass(frozen=True)
class MarketModel:
    """Two-regime market: chain generator plus per-regime coefficients."""

    gen: GeneratorMatrix
    regimes: tuple  # (RegimeMarketParams, RegimeMarketParams)
    constraint: ConstraintSet = field(default_factory=ConstraintSet)

    def __post_init__(self):
        if len(self.regimes) != 2:
            raise ConfigError("exactly two regimes are supported")
        t0 = self.regimes[0].transform
        if self.regimes[1].transform != t0:
            raise ConfigError("both regimes must share the jump transform")
        # events are the chain's own jumps, so the per-regime event
        # intensity must equal the chain's exit rate from that regime
        for i, rate in enumerate((self.gen.lambda0, self.gen.lambda1)):
            if self.regimes[i].lam != rate:
                raise ConfigError(
                    f"regime {i} event intensity {self.regimes[i].lam} does not "
                    f"match the chain rate {rate}",
                    field=f"regimes[{i}].lam",
                )

    @property
    def dists(self):
        return (self.regimes[0].dist, self.regimes[1].dist)

    @property
    def transform(self):
        return self.regimes[0].transform

    @property
    def f(self):
        return jump_transform(self.transform)


# ---------------------------------------------------------------------------
# portfolio representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerRegimePortfolio:
    """Constant weight per regime."""

    pi: tuple

    def weight(self, t, regime):
        return self.pi[regime]

    def extra_times(self):
        return ()


@dataclass(frozen=True)
class TimeStepPortfolio:
    """Left-continuous step function of time: values[k] on (times[k-1], times[k]]."""

    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.times) + 1:
            raise ConfigError("need one more value than step times")
        if any(t2 <= t1 for t1, t2 in zip(self.times, self.times[1:])):
            raise ConfigError("step times must be strictly increasing")

    def weight(self, t, regime):
        k = int(np.searchsorted(self.times, t, side="left"))
        return self.values[k]

    def extra_times(self):
        return self.times


def as_portfolio(pi):
    if isinstance(pi, (PerRegimePortfolio, TimeStepPortfolio)):
        return pi
    if np.isscalar(pi):
        return PerRegimePortfolio((float(pi), float(pi)))
    return PerRegimePortfolio(tuple(float(p) for p in pi))


# ---------------------------------------------------------------------------
# consumption rules
# ---------------------------------------------------------------------------


class ConsumptionRule:
    """Consumption rate process c_t; subclasses expose the deflated integral
    xi_t = x - int_0^t c_s / V_s^{1,pi,0} ds in closed form where possible."""


@dataclass(frozen=True)
class ZeroConsumption(ConsumptionRule):
    def rate(self, t, v_gross):
        return 0.0


@dataclass(frozen=True)
class ProportionalConsumption(ConsumptionRule):
    """c_t = scale * V_t^{1,pi,0}; the log-optimal rule is scale = x/(T+1)."""

    scale: float

    def rate(self, t, v_gross):
        return self.scale * v_gross


@dataclass(frozen=True)
class DeterministicConsumption(ConsumptionRule):
    """c_t = rate_fn(t), a nonnegative deterministic rate."""

    rate_fn: Callable

    def rate(self, t, v_gross):
        return self.rate_fn(t)


def log_optimal_consumption(x: float, T: float) -> ProportionalConsumption:
    return ProportionalConsumption(scale=x / (T + 1.0))


# ---------------------------------------------------------------------------
# path machinery
# ---------------------------------------------------------------------------


def _report_grid(path: MarkedPointPath, extra=(), n_grid=DEFAULT_GRID_POINTS):
    T = path.horizon
    base = np.linspace(0.0, T, n_grid + 1)
    return np.union1d(np.union1d(base, path.jump_times), np.asarray(extra, dtype=float))


def _segment_data(market, portfolio, path):
    """Per-segment drift exponents and per-jump log factors.

    Segment k runs from bounds[k] to bounds[k+1]; the regime there is
    (i0 + k) % 2 and the portfolio weight is evaluated at the segment's
    midpoint (the weight is constant on segments by construction).
    Returns (bounds, drift_rates, pis, jump_logs, jump_states).
    """
    T = path.horizon
    taus = path.jump_times
    bounds = np.concatenate([[0.0], taus, [T]]) if taus.size == 0 or taus[-1] < T else np.concatenate([[0.0], taus])
    step_times = np.asarray(portfolio.extra_times(), dtype=float)
    if step_times.size:
        inner = step_times[(step_times > 0) & (step_times < T)]
        bounds = np.union1d(bounds, inner)
    i0 = path.regime.initial_state
    f = market.f

    n_seg = len(bounds) - 1
    drift = np.empty(n_seg)
    pis = np.empty(n_seg)
    # regime on a segment = i0 + number of jumps strictly before its start
    jumps_before = np.searchsorted(taus, bounds[:-1], side="right")
    # a segment starting exactly at a jump time lies after that jump
    for k in range(n_seg):
        regime = (i0 + jumps_before[k]) % 2
        mid = 0.5 * (bounds[k] + bounds[k + 1])
        p = market.regimes[regime]
        pi_k = portfolio.weight(mid, regime)
        drift[k] = p.r + p.margin.g(pi_k) + pi_k * (p.mu - p.r)
        pis[k] = pi_k

    states = path.pre_jump_states
    jump_logs = np.empty(taus.size)
    for n, (tau, y, st) in enumerate(zip(taus, path.marks, states)):
        pi_n = portfolio.weight(tau, st)
        factor = 1.0 + pi_n * float(f(y))
        if factor <= 0.0:
            raise BankruptcyError(
                f"jump at t={tau:.6g} with mark {y:.6g} makes 1 + pi*f = {factor:.6g} <= 0",
                jump_time=tau,
                mark=y,
            )
        jump_logs[n] = math.log(factor)
    return bounds, drift, pis, jump_logs


def _log_gross_at(times, path, bounds, drift, jump_logs):
    """log V^{1,pi,0} (right-continuous) at the requested times."""
    taus = path.jump_times
    # cumulative drift integral at segment boundaries
    cum_drift = np.concatenate([[0.0], np.cumsum(drift * np.diff(bounds))])
    seg_idx = np.clip(np.searchsorted(bounds, times, side="right") - 1, 0, len(drift) - 1)
    drift_at = cum_drift[seg_idx] + drift[seg_idx] * (times - bounds[seg_idx])
    cum_jump = np.concatenate([[0.0], np.cumsum(jump_logs)])
    jumps_at = cum_jump[np.searchsorted(taus, times, side="right")]
    return drift_at + jumps_at


def stock_path(market: MarketModel, path: MarkedPointPath, s0: float, n_grid=DEFAULT_GRID_POINTS):
    """Stock price at the reporting grid: exact piecewise exponential times jump factors.

    Returns (t, S) arrays.
    """
    if s0 <= 0:
        raise ConfigError("initial price must be positive", field="s0")
    full_stock = PerRegimePortfolio((1.0, 1.0))
    times = _report_grid(path, n_grid=n_grid)
    # pi = 1 with zero rates/margins reduces the wealth recursion to the stock itself
    stripped = MarketModel(
        gen=market.gen,
        regimes=tuple(
            RegimeMarketParams(r=0.0, mu=p.mu, lam=p.lam, dist=p.dist, transform=p.transform)
            for p in market.regimes
        ),
        constraint=market.constraint,
    )
    bounds, drift, _, jump_logs = _segment_data(stripped, full_stock, path)
    return times, s0 * np.exp(_log_gross_at(times, path, bounds, drift, jump_logs))


def gross_wealth_path(market: MarketModel, pi, path: MarkedPointPath, n_grid=DEFAULT_GRID_POINTS):
    """V^{1,pi,0} at the reporting grid; exact between jumps.

    Returns (t, V) arrays.
    """
    portfolio = as_portfolio(pi)
    times = _report_grid(path, extra=portfolio.extra_times(), n_grid=n_grid)
    bounds, drift, _, jump_logs = _segment_data(market, portfolio, path)
    return times, np.exp(_log_gross_at(times, path, bounds, drift, jump_logs))


@dataclass(frozen=True)
class WealthPath:
    """Wealth trajectory and its consumption factorisation V = xi * V^{1,pi,0}."""

    t: np.ndarray
    regime: np.ndarray
    v_gross: np.ndarray  # V^{1,pi,0}
    xi: np.ndarray
    V: np.ndarray

    def to_csv_rows(self, stock=None):
        header = ["t", "regime", "S", "V1pi0", "xi", "V"]
        s = stock if stock is not None else np.full_like(self.t, np.nan)
        rows = np.column_stack([self.t, self.regime, s, self.v_gross, self.xi, self.V])
        return header, rows


def wealth_path(
    x: float,
    market: MarketModel,
    pi,
    consumption: ConsumptionRule,
    path: MarkedPointPath,
    n_grid=DEFAULT_GRID_POINTS,
) -> WealthPath:
    """Wealth under (pi, c) via the factorisation V_t = xi_t * V_t^{1,pi,0}.

    Raises RuinError with the crossing time if consumption exhausts
    wealth strictly before the horizon.
    """
    if x <= 0:
        raise ConfigError("initial wealth must be positive", field="x")
    portfolio = as_portfolio(pi)
    times = _report_grid(path, extra=portfolio.extra_times(), n_grid=n_grid)
    bounds, drift, _, jump_logs = _segment_data(market, portfolio, path)
    log_v = _log_gross_at(times, path, bounds, drift, jump_logs)
    v_gross = np.exp(log_v)

    if isinstance(consumption, ZeroConsumption):
        xi = np.full_like(times, x)
    elif isinstance(consumption, ProportionalConsumption):
        xi = x - consumption.scale * times
        if xi[-1] < 0:
            t_ruin = x / consumption.scale
            raise RuinError(
                f"proportional consumption ruins the path at t={t_ruin:.6g}",
                ruin_time=t_ruin,
            )
    elif isinstance(consumption, DeterministicConsumption):
        xi = _xi_deterministic(x, consumption.rate_fn, times, path, bounds, drift, jump_logs)
    else:
        raise ConfigError(f"unsupported consumption rule {type(consumption).__name__}")

    if np.any(xi < -1e-12):
        first = times[np.argmax(xi < -1e-12)]
        raise RuinError(f"consumption ruins the path before t={first:.6g}", ruin_time=first)

    regime = path.regime.state_at(times)
    return WealthPath(t=times, regime=regime, v_gross=v_gross, xi=xi, V=xi * v_gross)


def _xi_deterministic(x, rate_fn, times, path, bounds, drift, jump_logs):
    """xi_t for a deterministic consumption rate, by per-segment quadrature.

    On a segment V^{1,pi,0}(s) = V_k * exp(a_k (s - b_k)), so the deflator
    integral is a 1-d quadrature of c(s) * exp(-a_k (s - b_k)) / V_k.
    """
    log_v_bounds = _log_gross_at(bounds, path, bounds, drift, jump_logs)
    # value entering segment k includes the jump at its left boundary
    cum = np.zeros(len(bounds))
    for k in range(len(bounds) - 1):
        a, b = bounds[k], bounds[k + 1]
        v0 = math.exp(log_v_bounds[k])
        ak = drift[k]
        val, _ = integrate.quad(
            lambda s: rate_fn(s) * math.exp(-ak * (s - a)) / v0, a, b, epsabs=1e-10
        )
        cum[k + 1] = cum[k] + val
    # within-segment partial integrals for grid points strictly inside a segment
    seg_idx = np.clip(np.searchsorted(bounds, times, side="right") - 1, 0, len(drift) - 1)
    out = np.empty_like(times)
    for i, t in enumerate(times):
        k = seg_idx[i]
        a = bounds[k]
        if t == a:
            out[i] = cum[k]
            continue
        v0 = math.exp(log_v_bounds[k])
        ak = drift[k]
        val, _ = integrate.quad(
            lambda s: rate_fn(s) * math.exp(-ak * (s - a)) / v0, a, t, epsabs=1e-10
        )
        out[i] = cum[k] + val
    return x - out


def export_path_csv(path_obj: WealthPath, stock, fh, comment_lines=()):
    """Write columns t, regime, S, V1pi0, xi, V with 17-significant-digit formatting."""
    header, rows = path_obj.to_csv_rows(stock)
    for line in comment_lines:
        fh.write(f"# {line}\n")
    fh.write(",".join(header) + "\n")
    for row in rows:
        fields = [f"{row[0]:.17g}", str(int(row[1]))] + [f"{v:.17g}" for v in row[2:]]
        fh.write(",".join(fields) + "\n")
