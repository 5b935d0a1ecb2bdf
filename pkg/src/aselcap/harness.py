"""
Seeded Monte Carlo engine for the capacity experiments.

Every trial ``t`` draws its randomness from a substream keyed by (seed, t), so
results are a deterministic function of the seed and the experiment spec,
whatever the number of worker threads.  Trials are processed in fixed-size
chunks; each chunk yields a :class:`TrialStatistics` per estimator and chunks
are merged in index order.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import math
from statistics import NormalDist
import warnings

import numpy as np

from . import asymptotics, capacity
from .channel import (FadingParams, SystemConfig, compose_channel, draw_fading,
                      large_scale_gains, trial_rng)
from .errors import CapExceededError, DomainError

__all__ = ['TrialStatistics', 'ExperimentSpec', 'SweepRow', 'ESTIMATORS',
           'run_trials', 'sweep', 'preset', 'scenario_labels']

ESTIMATORS = ('full', 'exhaustive', 'greedy', 'norm', 'upper_bound',
              'approx', 'approx_abs', 'deterministic_equivalent')
# Estimators that depend on the large-scale gains only.
_ANALYTIC = frozenset({'approx', 'approx_abs', 'deterministic_equivalent'})

CHUNK_SIZE = 64

# Substream keys: (0,) fixed placement, (1, t, scenario) fading, (2, t) placement per trial.
_KEY_FIXED_PLACEMENT = 0
_KEY_FADING = 1
_KEY_PLACEMENT = 2


@dataclass
class TrialStatistics:
    """Streaming count / mean / sum of squared deviations (Welford, Chan merge)."""
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_values(cls, values):
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            return cls()
        # shift by the first value: exact for constant samples, and better conditioned
        dev = x - x[0]
        shift = float(np.mean(dev))
        return cls(int(x.size), float(x[0]) + shift, float(np.sum((dev - shift) ** 2)))

    def push(self, x):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def merge(self, other):
        """Combined statistics of both samples (neither operand is modified)."""
        if other.count == 0:
            return TrialStatistics(self.count, self.mean, self.m2)
        if self.count == 0:
            return TrialStatistics(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return TrialStatistics(n, mean, m2)

    @property
    def variance(self):
        """Unbiased sample variance (0 for fewer than two samples)."""
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def scv(self):
        """Squared coefficient of variation, variance / mean^2."""
        if self.mean == 0:
            raise ZeroDivisionError("SCV is undefined for a zero mean")
        return self.variance / self.mean ** 2

    @property
    def stderr(self):
        return math.sqrt(self.variance / self.count) if self.count else math.nan

    def confidence_interval(self, level=0.95):
        z = NormalDist().inv_cdf(0.5 + level / 2.0)
        half = z * self.stderr
        return self.mean - half, self.mean + half


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One Monte Carlo experiment, optionally swept along one axis.

    ``m`` gives per-user Nakagami shapes (scalar broadcast).  ``l_grid`` and
    ``m_grid`` add scenario variants evaluated on the same realizations (an
    empty grid means "use the base value").  ``es_max_n`` silently drops the
    exhaustive estimator at points with more antennas; ``placement`` is
    ``'resample'`` (new user drop every trial) or ``'fixed'`` (one drop for
    the whole experiment, so conditional on beta).
    """
    config: SystemConfig = field(default_factory=SystemConfig)
    m: tuple = (1.0,)
    axis: str = 'none'
    values: tuple = ()
    estimators: tuple = ('upper_bound',)
    trials: int = 10_000
    placement: str = 'resample'
    l_grid: tuple = ()
    m_grid: tuple = ()
    es_max_n: int = None
    es_cap: int = capacity.DEFAULT_ES_CAP

    def __post_init__(self):
        object.__setattr__(self, 'm', tuple(float(v) for v in np.atleast_1d(self.m)))
        object.__setattr__(self, 'values', tuple(self.values))
        object.__setattr__(self, 'estimators', tuple(self.estimators))
        object.__setattr__(self, 'l_grid', tuple(int(v) for v in self.l_grid))
        object.__setattr__(self, 'm_grid', tuple(float(v) for v in self.m_grid))
        if self.trials < 1:
            raise DomainError("trial count must be at least 1")
        if self.axis not in ('none', 'power', 'antennas'):
            raise DomainError(f"unknown sweep axis {self.axis!r}")
        if self.axis == 'none' and self.values:
            raise DomainError("axis 'none' takes no sweep values")
        if self.axis != 'none' and not self.values:
            raise DomainError(f"axis {self.axis!r} needs at least one value")
        if any(b <= a for a, b in zip(self.values[:-1], self.values[1:])):
            raise DomainError("sweep values must be strictly increasing")
        if self.placement not in ('resample', 'fixed'):
            raise DomainError(f"unknown placement policy {self.placement!r}")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise DomainError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
        FadingParams.broadcast(self.m, self.config.k)
        for m in self.m_grid:
            FadingParams.broadcast(m, self.config.k)
        for l in self.l_grid:
            replace(self.config, l=l)


@dataclass(frozen=True)
class SweepRow:
    axis: float
    estimator: str
    mean: float
    variance: float
    scv: float
    stderr: float
    trials: int
    seed: int


def _scenarios(spec):
    ls = spec.l_grid or (spec.config.l,)
    ms = spec.m_grid or (None,)
    return [(l, m) for m in ms for l in ls]


def scenario_labels(spec, estimator):
    """Output labels for ``estimator``; variants get an ``@L=..,m=..`` suffix."""
    labels = []
    for l, m in _scenarios(spec):
        parts = []
        if len(spec.l_grid) > 1:
            parts.append(f"L={l}")
        if len(spec.m_grid) > 1:
            parts.append(f"m={m:g}")
        labels.append(estimator + ('@' + ','.join(parts) if parts else ''))
    return labels


def _active_estimators(spec, config):
    names = list(spec.estimators)
    if 'exhaustive' in names:
        if spec.es_max_n is not None and config.n > spec.es_max_n:
            names.remove('exhaustive')
        else:
            for l, _ in _scenarios(spec):
                if math.comb(config.n, l) > spec.es_cap:
                    raise CapExceededError(
                        f"exhaustive search over binomial({config.n}, {l}) subsets exceeds "
                        f"the cap of {spec.es_cap}; use the greedy estimator")
    return names


def _analytic_value(name, m_vec, beta, rho, l, n):
    if name == 'deterministic_equivalent':
        return asymptotics.deterministic_equivalent(m_vec, beta, rho, l, n)
    moments = [asymptotics.trimmed_moments(mk, l, n) for mk in m_vec]
    if name == 'approx':
        return asymptotics.approx_mean_rate(moments, beta, rho)
    return asymptotics.approx_mean_rate_abs(moments, beta, rho)


class _Runner:
    def __init__(self, spec, config):
        self.spec = spec
        self.config = config
        self.names = _active_estimators(spec, config)
        self.scenarios = _scenarios(spec)
        self.labels = {name: scenario_labels(spec, name) for name in self.names}
        self.m_vectors = [FadingParams.broadcast(spec.m if m is None else m, config.k).as_array()
                          for _, m in self.scenarios]
        self.fixed_beta = None
        self.analytic_cache = {}
        if spec.placement == 'fixed':
            rng = trial_rng(config.seed, _KEY_FIXED_PLACEMENT)
            self.fixed_beta = large_scale_gains(config, rng).beta

    def _analytic(self, name, i, beta):
        l = self.scenarios[i][0]
        if self.fixed_beta is None:
            return _analytic_value(name, self.m_vectors[i], beta, self.config.rho, l, self.config.n)
        key = (name, i)
        if key not in self.analytic_cache:
            self.analytic_cache[key] = _analytic_value(
                name, self.m_vectors[i], beta, self.config.rho, l, self.config.n)
        return self.analytic_cache[key]

    def trial(self, t):
        """Estimator values for trial ``t``: {label: value}."""
        cfg = self.config
        rho = cfg.rho
        if self.fixed_beta is not None:
            beta = self.fixed_beta
        else:
            beta = large_scale_gains(cfg, trial_rng(cfg.seed, _KEY_PLACEMENT, t)).beta
        out = {}
        m_seen = {}
        for i, (l, m) in enumerate(self.scenarios):
            m_key = m
            if m_key not in m_seen:
                rng = trial_rng(cfg.seed, _KEY_FADING, t, len(m_seen))
                h = draw_fading(cfg.n, cfg.k, self.m_vectors[i], rng)
                m_seen[m_key] = (h, compose_channel(h, beta), {})
            h, g, shared = m_seen[m_key]
            for name in self.names:
                label = self.labels[name][i]
                if name in _ANALYTIC:
                    out[label] = self._analytic(name, i, beta)
                elif name == 'full':
                    if 'full' not in shared:
                        shared['full'] = capacity.full_rate(g, rho)
                    out[label] = shared['full']
                elif name == 'upper_bound':
                    out[label] = capacity.upper_bound_rate(h, beta, l, rho)
                elif name == 'exhaustive':
                    out[label] = capacity.select_exhaustive(g, l, rho, cap=self.spec.es_cap).rate
                elif name == 'greedy':
                    out[label] = capacity.select_greedy(g, l, rho).rate
                elif name == 'norm':
                    out[label] = capacity.select_by_norm(g, l, rho).rate
        return out

    def chunk(self, start, stop):
        values = {label: np.empty(stop - start) for labels in self.labels.values()
                  for label in labels}
        for j, t in enumerate(range(start, stop)):
            for label, v in self.trial(t).items():
                values[label][j] = v
        return values

    def ordered_labels(self):
        return [label for name in self.names for label in self.labels[name]]


@dataclass
class RunResult:
    """Per-label statistics, plus raw per-trial values when requested."""
    stats: dict
    samples: dict = None


def _run(spec, config, threads, keep_samples):
    runner = _Runner(spec, config)
    bounds = [(s, min(s + CHUNK_SIZE, spec.trials)) for s in range(0, spec.trials, CHUNK_SIZE)]
    threads = max(1, int(threads or 1))
    if threads == 1:
        chunks = [runner.chunk(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda ab: runner.chunk(*ab), bounds))
    stats = {}
    for label in runner.ordered_labels():
        acc = TrialStatistics()
        for ch in chunks:
            acc = acc.merge(TrialStatistics.from_values(ch[label]))
        stats[label] = acc
    samples = None
    if keep_samples:
        samples = {label: np.concatenate([ch[label] for ch in chunks]) for label in stats}
    return RunResult(stats, samples)


def run_trials(spec, threads=1, keep_samples=False):
    """
    Run ``spec.trials`` Monte Carlo trials at the base configuration.

    Every estimator sees the same channel realization within a trial.

    Parameters
    ----------
    spec : ExperimentSpec
        The sweep axis is ignored here; see :func:`sweep`.
    threads : int
        Worker threads; the output does not depend on it.
    keep_samples : bool
        Also return the per-trial values (in trial order).

    Returns
    -------
    RunResult
    """
    return _run(spec, spec.config, threads, keep_samples)


def _point_config(spec, value):
    if spec.axis == 'power':
        return replace(spec.config, pu_dbm=float(value))
    if spec.axis == 'antennas':
        if int(value) != value:
            raise DomainError(f"antenna count must be an integer, got {value!r}")
        cfg = replace(spec.config, n=int(value))
        for l in spec.l_grid:
            replace(cfg, l=l)
        return cfg
    return spec.config


def sweep(spec, threads=1):
    """
    Evaluate ``spec`` at every axis value.

    Returns
    -------
    list of SweepRow
        One row per (axis value, estimator label), estimators in spec order.
        On the antenna axis the deterministic equivalent is always included.
    """
    if spec.axis == 'antennas' and 'deterministic_equivalent' not in spec.estimators:
        spec = replace(spec, estimators=spec.estimators + ('deterministic_equivalent',))
    values = spec.values if spec.axis != 'none' else (math.nan,)
    rows = []
    for value in values:
        config = _point_config(spec, value)
        result = _run(spec, config, threads, keep_samples=False)
        for label, st in result.stats.items():
            scv = st.scv if st.mean != 0 else math.nan
            rows.append(SweepRow(value, label, st.mean, st.variance, scv, st.stderr,
                                 st.count, config.seed))
    return rows


_PAPER_TRIALS = 500_000
_DESK_TRIALS = 10_000


def preset(name, scale='desk', seed=1):
    """
    Experiment presets mirroring the three capacity figures.

    ``fig1a``: power sweep at N=128, K=8, L in {8, 16}.
    ``fig1b``: antenna sweep at K=4, L=8.
    ``fig1c``: SCV of the bound vs N at K=4, L=8, p_u=10 dBm for m in {0.5, 1, 2}.

    Desk scale runs 10^4 trials and only allows exhaustive search up to N=20;
    paper scale runs 5 x 10^5 trials.  Exact (exhaustive) selection at N=128
    is out of reach either way, so greedy selection stands in for it.
    """
    if scale not in ('desk', 'paper'):
        raise DomainError(f"unknown scale {scale!r}")
    trials = _DESK_TRIALS if scale == 'desk' else _PAPER_TRIALS
    es_max_n = 20 if scale == 'desk' else None
    if name == 'fig1a':
        spec = ExperimentSpec(
            config=SystemConfig(n=128, k=8, l=8, pu_dbm=0.0, seed=seed),
            m=(1.0,), axis='power', values=(0.0, 5.0, 10.0, 15.0, 20.0),
            estimators=('greedy', 'upper_bound', 'approx'), trials=trials,
            placement='fixed', l_grid=(8, 16), es_max_n=es_max_n)
    elif name == 'fig1b':
        spec = ExperimentSpec(
            config=SystemConfig(n=128, k=4, l=8, pu_dbm=10.0, seed=seed),
            m=(1.0,), axis='antennas', values=(128, 256, 512, 1024, 2048),
            estimators=('greedy', 'upper_bound', 'deterministic_equivalent'),
            trials=trials, placement='fixed', es_max_n=es_max_n)
    elif name == 'fig1c':
        spec = ExperimentSpec(
            config=SystemConfig(n=128, k=4, l=8, pu_dbm=10.0, seed=seed),
            m=(1.0,), axis='antennas', values=(128, 256, 512, 1024),
            estimators=('upper_bound',), trials=trials, placement='fixed',
            m_grid=(0.5, 1.0, 2.0), es_max_n=es_max_n)
    else:
        raise DomainError(f"unknown preset {name!r}; choose fig1a, fig1b or fig1c")
    if scale == 'paper':
        warnings.warn("exhaustive search at N=128 is infeasible; greedy selection "
                      "is substituted for the exact capacity", RuntimeWarning, stacklevel=2)
    return spec
