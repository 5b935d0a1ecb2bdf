"""
Command-line front end.

Subcommands::

    capacity    one channel realization, every estimator's rate
    sweep       Monte Carlo sweep over transmit power or antenna count
    approx      threshold, Gaussian moments, approximations and the
                deterministic equivalent
    experiment  run a figure preset (fig1a, fig1b, fig1c)
    selftest    quick oracle checks of the numerical core

Settings resolve as defaults < ``--config`` file < command-line flags.  The
config file is flat ``key = value`` text with keys named like the flags
(``n``, ``pu_dbm``, ``m`` ...).  Exit status: 0 success, 1 configuration
error, 2 numerical failure.
"""

import argparse
import csv
import io
import math
import os
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import asymptotics, capacity, harness
from .channel import FadingParams, SystemConfig, large_scale_gains, trial_rng, draw_channel
from .errors import CapExceededError, ConvergenceError, DomainError, NumericalError

__all__ = ['main', 'parse_and_run', 'read_config_file', 'format_csv', 'CSV_COLUMNS']

CSV_COLUMNS = ('axis', 'estimator', 'mean_bps_hz', 'variance', 'scv', 'stderr',
               'trials', 'seed')

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

# key -> (type, default)
_KEYS = {
    'n': (int, 128),
    'k': (int, 4),
    'l': (int, 8),
    'pu_dbm': (float, 10.0),
    'sigma2_dbm': (float, -100.0),
    'm': (str, '1'),
    'cell_radius_m': (float, 1000.0),
    'f0_ghz': (float, 4.0),
    'min_distance_m': (float, 0.0),
    'trials': (int, 10_000),
    'seed': (int, 1),
    'threads': (int, 1),
    'es_cap': (int, capacity.DEFAULT_ES_CAP),
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}\n{self.format_usage()}")


def read_config_file(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    with open(path, encoding='utf-8') as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split('=', 1))
            key = key.replace('-', '_')
            if key not in _KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _convert(key, value):
    kind = _KEYS[key][0]
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {value!r}") from None


def resolve_settings(args):
    """Merge defaults, config file and flags into one dict of typed values."""
    settings = {key: default for key, (_, default) in _KEYS.items()}
    env_threads = os.environ.get('ASELCAP_THREADS')
    if env_threads:
        settings['threads'] = _convert('threads', env_threads)
    if getattr(args, 'config', None):
        try:
            file_values = read_config_file(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        for key, value in file_values.items():
            settings[key] = _convert(key, value)
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = _convert(key, value)
    return settings


def _parse_floats(text):
    try:
        return tuple(float(v) for v in str(text).split(',') if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _system_config(settings):
    return SystemConfig(
        n=settings['n'], k=settings['k'], l=settings['l'],
        pu_dbm=settings['pu_dbm'], sigma2_dbm=settings['sigma2_dbm'],
        seed=settings['seed'], cell_radius_m=settings['cell_radius_m'],
        f0_ghz=settings['f0_ghz'], min_distance_m=settings['min_distance_m'])


def _fmt(x):
    return format(x, '.9g')


def format_csv(rows):
    """Render sweep rows as CSV text (LF line endings, 9 significant digits)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        axis = '' if isinstance(r.axis, float) and math.isnan(r.axis) else _fmt(r.axis)
        writer.writerow([axis, r.estimator, _fmt(r.mean), _fmt(r.variance), _fmt(r.scv),
                         _fmt(r.stderr), r.trials, r.seed])
    return buf.getvalue()


def _emit(text, output):
    if output in (None, '-'):
        sys.stdout.write(text)
    else:
        with open(output, 'w', encoding='utf-8', newline='\n') as fh:
            fh.write(text)


def _summary(rows, err):
    parts = [f"{r.estimator}@{'' if math.isnan(r.axis) else _fmt(r.axis)}={_fmt(r.mean)}"
             for r in rows]
    print(f"summary: rows={len(rows)} " + ' '.join(parts), file=err)


def _add_common(p):
    p.add_argument('--config', help='flat key = value settings file')
    p.add_argument('--n', help='BS antennas N')
    p.add_argument('--k', help='users K')
    p.add_argument('--l', help='selected antennas L')
    p.add_argument('--pu-dbm', dest='pu_dbm', help='per-user transmit power (dBm)')
    p.add_argument('--sigma2-dbm', dest='sigma2_dbm', help='noise power (dBm)')
    p.add_argument('--m', help='Nakagami shape, scalar or comma list per user')
    p.add_argument('--cell-radius-m', dest='cell_radius_m')
    p.add_argument('--f0-ghz', dest='f0_ghz')
    p.add_argument('--min-distance-m', dest='min_distance_m')
    p.add_argument('--trials')
    p.add_argument('--seed', help='unsigned 64-bit seed (default 1)')
    p.add_argument('--threads', help='worker threads (fallback: ASELCAP_THREADS)')
    p.add_argument('--es-cap', dest='es_cap', help='exhaustive-search subset cap')
    p.add_argument('--output', help='output path (default stdout)')


def build_parser():
    parser = _Parser(prog='aselcap', description=__doc__.split('\n\n')[0])
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    p = sub.add_parser('capacity', help='rates of one channel realization')
    _add_common(p)
    p.add_argument('--gains', help='inject |g|^2 values, N*K numbers row-major (beta = 1)')
    p.add_argument('--rho', type=float, help='linear SNR, overrides pu/sigma2')

    p = sub.add_parser('sweep', help='Monte Carlo sweep')
    _add_common(p)
    p.add_argument('--axis', choices=('power', 'antennas', 'none'), default='power')
    p.add_argument('--values', help='comma-separated, strictly increasing')
    p.add_argument('--estimators', default='greedy,upper_bound,approx')
    p.add_argument('--placement', choices=('resample', 'fixed'), default='resample')

    p = sub.add_parser('approx', help='asymptotic moments and rate approximations')
    _add_common(p)

    p = sub.add_parser('experiment', help='run a figure preset')
    _add_common(p)
    p.add_argument('--preset', required=True, choices=('fig1a', 'fig1b', 'fig1c'))
    p.add_argument('--scale', choices=('desk', 'paper'), default='desk')

    p = sub.add_parser('selftest', help='oracle checks of the numerical core')
    return parser


def _cmd_capacity(args, settings, out):
    if args.gains is not None:
        gains = np.asarray(_parse_floats(args.gains))
        n, k = settings['n'], settings['k']
        if gains.size != n * k or np.any(gains < 0):
            raise ConfigError(f"--gains needs {n * k} non-negative values")
        h = np.sqrt(gains).reshape(n, k).astype(complex)
        beta = np.ones(k)
        config = SystemConfig(n=n, k=k, l=settings['l'])
    else:
        config = _system_config(settings)
        m = _parse_floats(settings['m'])
        inst = draw_channel(config, m, trial_rng(config.seed, 0))
        h, beta = inst.h, inst.beta
    rho = args.rho if args.rho is not None else config.rho
    g = h * np.sqrt(beta)
    l = config.l
    print(f"N={config.n} K={config.k} L={l} rho={_fmt(rho)}", file=out)
    print(f"full: rate={_fmt(capacity.full_rate(g, rho))}", file=out)
    selections = []
    try:
        selections.append(('exhaustive', capacity.select_exhaustive(g, l, rho, cap=settings['es_cap'])))
    except CapExceededError as exc:
        print(f"exhaustive: skipped ({exc})", file=out)
    selections.append(('greedy', capacity.select_greedy(g, l, rho)))
    selections.append(('norm', capacity.select_by_norm(g, l, rho)))
    for name, res in selections:
        antennas = ','.join(str(i + 1) for i in res.indices)
        print(f"{name}: antennas={antennas} rate={_fmt(res.rate)}", file=out)
    print(f"upper_bound: rate={_fmt(capacity.upper_bound_rate(h, beta, l, rho))}", file=out)
    return EXIT_OK


def _cmd_sweep(args, settings, out):
    config = _system_config(settings)
    values = _parse_floats(args.values) if args.values else ()
    spec = harness.ExperimentSpec(
        config=config, m=_parse_floats(settings['m']), axis=args.axis, values=values,
        estimators=tuple(e.strip() for e in args.estimators.split(',') if e.strip()),
        trials=settings['trials'], placement=args.placement, es_cap=settings['es_cap'])
    rows = harness.sweep(spec, threads=settings['threads'])
    _emit(format_csv(rows), args.output)
    _summary(rows, sys.stderr)
    return EXIT_OK


def _cmd_approx(args, settings, out):
    config = _system_config(settings)
    m = FadingParams.broadcast(_parse_floats(settings['m']), config.k).as_array()
    beta = large_scale_gains(config, trial_rng(config.seed, 0)).beta
    rho = config.rho
    moments = [asymptotics.trimmed_moments(mk, config.l, config.n) for mk in m]
    print(f"N={config.n} K={config.k} L={config.l} rho={_fmt(rho)}", file=out)
    for k, (mo, b) in enumerate(zip(moments, beta), 1):
        print(f"user {k}: m={mo.m:g} beta={_fmt(b)} threshold={mo.threshold:.10g} "
              f"mean={mo.mean:.10g} core_variance={mo.core_variance:.10g} "
              f"variance={mo.variance:.10g} "
              f"negative_mass={_fmt(asymptotics.negative_mass(mo.mean, mo.std))}", file=out)
    print(f"approx_mean_rate={_fmt(asymptotics.approx_mean_rate(moments, beta, rho))}", file=out)
    print(f"approx_mean_rate_abs={_fmt(asymptotics.approx_mean_rate_abs(moments, beta, rho))}",
          file=out)
    de = asymptotics.deterministic_equivalent(m, beta, rho, config.l, config.n)
    print(f"deterministic_equivalent={_fmt(de)}", file=out)
    return EXIT_OK


def _cmd_experiment(args, settings, out):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always')
        spec = harness.preset(args.preset, args.scale, seed=settings['seed'])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.trials is not None or (args.config and 'trials' in read_config_file(args.config)):
        spec = replace(spec, trials=settings['trials'])
    rows = harness.sweep(spec, threads=settings['threads'])
    _emit(format_csv(rows), args.output)
    _summary(rows, sys.stderr)
    return EXIT_OK


def _cmd_selftest(args, settings, out):
    from .selftest import run_selftest
    ok = run_selftest(out)
    return EXIT_OK if ok else EXIT_NUMERIC


_COMMANDS = {
    'capacity': _cmd_capacity,
    'sweep': _cmd_sweep,
    'approx': _cmd_approx,
    'experiment': _cmd_experiment,
    'selftest': _cmd_selftest,
}


def parse_and_run(argv=None, out=None):
    """Run the CLI on ``argv`` and return the exit code."""
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        settings = resolve_settings(args)
        return _COMMANDS[args.command](args, settings, out)
    except (ConfigError, DomainError, CapExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    return parse_and_run(argv)
