"""Markov-modulated marked point process.

A two-state continuous-time Markov chain generates the event times; the
mark of each event is drawn from the distribution attached to the
pre-jump state.  Besides the single-path simulators there is a padded
ensemble simulator used by the Monte Carlo verification layer: it keeps
the per-path jump data in rectangular arrays so path functionals can be
evaluated with vectorised column sweeps.

Random-number contract: every simulator takes an integer seed and is
bit-reproducible.  Streams are split with ``numpy.random.SeedSequence``
so chain and mark draws never interleave, and ensembles spawn one child
stream per purpose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import JumpDistribution
from .errors import ConfigError


def seed_sequence(seed) -> np.random.SeedSequence:
    """Wrap an integer seed, passing SeedSequence children through untouched."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


@dataclass(frozen=True)
class GeneratorMatrix:
    """Intensity matrix of the two-state chain, parameterised by its off-diagonal rates."""

    lambda0: float
    lambda1: float

    def __post_init__(self):
        if self.lambda0 < 0 or self.lambda1 < 0:
            raise ConfigError("chain rates must be nonnegative")

    @property
    def rates(self):
        return np.array([self.lambda0, self.lambda1])

    @property
    def matrix(self):
        return np.array(
            [[-self.lambda0, self.lambda0], [self.lambda1, -self.lambda1]]
        )

    @property
    def lambda_bar(self):
        # half the total switching rate; the chain mixes at rate 2*lambda_bar
        return 0.5 * (self.lambda0 + self.lambda1)


@dataclass(frozen=True)
class RegimePath:
    """Realised chain trajectory on [0, T]: initial state plus sorted jump times."""

    initial_state: int
    jump_times: np.ndarray
    horizon: float

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=float)
        object.__setattr__(self, "jump_times", times)
        if self.initial_state not in (0, 1):
            raise ConfigError("initial_state must be 0 or 1")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if times.size:
            if times[0] <= 0 or times[-1] > self.horizon:
                raise ConfigError("jump times must lie in (0, T]")
            if np.any(np.diff(times) <= 0):
                raise ConfigError("jump times must be strictly increasing")

    @property
    def n_jumps(self):
        return int(self.jump_times.size)

    @property
    def pre_jump_states(self):
        """State right before each jump; alternates from the initial state."""
        n = self.n_jumps
        return (self.initial_state + np.arange(n)) % 2

    def state_at(self, t):
        """Right-continuous state at time t (scalar or array)."""
        n_before = np.searchsorted(self.jump_times, t, side="right")
        return (self.initial_state + n_before) % 2


@dataclass(frozen=True)
class MarkedPointPath:
    """Chain trajectory together with the mark realised at each jump."""

    regime: RegimePath
    marks: np.ndarray

    def __post_init__(self):
        marks = np.asarray(self.marks, dtype=float)
        object.__setattr__(self, "marks", marks)
        if marks.size != self.regime.n_jumps:
            raise ConfigError("need exactly one mark per jump time")

    @property
    def jump_times(self):
        return self.regime.jump_times

    @property
    def n_jumps(self):
        return self.regime.n_jumps

    @property
    def horizon(self):
        return self.regime.horizon

    @property
    def pre_jump_states(self):
        return self.regime.pre_jump_states


def simulate_regime_chain(gen: GeneratorMatrix, i0: int, T: float, seed) -> RegimePath:
    """Simulate the two-state chain on [0, T].

    Holding times in state i are Exponential(lambda_i); a zero rate makes
    the state absorbing.
    """
    if T <= 0:
        raise ConfigError("horizon T must be positive")
    if i0 not in (0, 1):
        raise ConfigError("initial state must be 0 or 1")
    rng = np.random.default_rng(seed_sequence(seed))
    rates = gen.rates
    times = []
    t = 0.0
    state = i0
    while True:
        rate = rates[state]
        if rate == 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t > T:
            break
        times.append(t)
        state = 1 - state
    return RegimePath(initial_state=i0, jump_times=np.array(times), horizon=T)


def simulate_marks(path: RegimePath, dists, seed) -> MarkedPointPath:
    """Attach marks to a chain path; mark n is drawn from the pre-jump state's law."""
    rng = np.random.default_rng(seed_sequence(seed))
    states = path.pre_jump_states
    marks = np.empty(path.n_jumps)
    for i in (0, 1):
        sel = states == i
        n = int(sel.sum())
        if n:
            marks[sel] = dists[i].sample(n, rng)
    return MarkedPointPath(regime=path, marks=marks)


def simulate_path(gen, i0, T, dists, seed) -> MarkedPointPath:
    """Chain and marks in one call, on independent sub-streams of seed."""
    chain_seed, mark_seed = seed_sequence(seed).spawn(2)
    path = simulate_regime_chain(gen, i0, T, chain_seed)
    return simulate_marks(path, dists, mark_seed)


@dataclass
class PathEnsemble:
    """N marked point paths in padded rectangular arrays.

    ``times[p, j]`` is the j-th jump time of path p (+inf past the last
    jump), ``marks[p, j]`` the matching mark (0 padding), ``counts[p]``
    the number of jumps.  The pre-jump state of column j is
    ``(initial_state + j) % 2`` for every path, because the two-state
    chain alternates deterministically.
    """

    initial_state: int
    horizon: float
    times: np.ndarray
    marks: np.ndarray
    counts: np.ndarray
    seed: object = None

    @property
    def n_paths(self):
        return self.times.shape[0]

    @property
    def max_jumps(self):
        return self.times.shape[1]

    def column_state(self, j):
        """Pre-jump state of jump column j (= regime on segment j)."""
        return (self.initial_state + j) % 2

    def path(self, p) -> MarkedPointPath:
        """Extract path p as a MarkedPointPath."""
        c = int(self.counts[p])
        regime = RegimePath(
            initial_state=self.initial_state,
            jump_times=self.times[p, :c].copy(),
            horizon=self.horizon,
        )
        return MarkedPointPath(regime=regime, marks=self.marks[p, :c].copy())


def simulate_ensemble(
    gen: GeneratorMatrix, i0: int, T: float, dists, n_paths: int, seed
) -> PathEnsemble:
    """Simulate n_paths marked point paths into padded arrays.

    Column j of the holding-time matrix is Exponential with the rate of
    the alternating state (i0 + j) % 2.  The padding width doubles until
    every path is fully resolved inside [0, T].
    """
    if T <= 0:
        raise ConfigError("horizon T must be positive")
    root = seed_sequence(seed)
    chain_ss, mark_ss = root.spawn(2)
    rates = gen.rates

    width = 16
    while True:
        rng = np.random.default_rng(chain_ss)
        col_rates = rates[(i0 + np.arange(width)) % 2]
        with np.errstate(divide="ignore"):
            scales = np.where(col_rates > 0, 1.0 / col_rates, np.inf)
        hold = rng.exponential(size=(n_paths, width))
        hold = np.where(col_rates > 0, hold * scales, np.inf)
        times = np.cumsum(hold, axis=1)
        if np.all(times[:, -1] > T) or np.all(np.isinf(times[:, -1])):
            break
        width *= 2
        if width > 1 << 20:
            raise RuntimeError("ensemble jump count exploded; check chain rates")

    in_horizon = times <= T
    counts = in_horizon.sum(axis=1)
    times = np.where(in_horizon, times, np.inf)

    mark_rng = np.random.default_rng(mark_ss)
    marks = np.zeros_like(times)
    for j in range(width):
        state = (i0 + j) % 2
        col = dists[state].sample(n_paths, mark_rng)
        marks[:, j] = np.where(in_horizon[:, j], col, 0.0)

    return PathEnsemble(
        initial_state=i0,
        horizon=T,
        times=times,
        marks=marks,
        counts=counts,
        seed=seed,
    )
