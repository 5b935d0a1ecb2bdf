"""Quick oracle checks of the numerical core, runnable without pytest."""

import itertools
import math

import numpy as np
from scipy import integrate

from . import asymptotics, capacity, special_fn
from .channel import trial_rng


def _gamma_tail_quad(s, x):
    val, _ = integrate.quad(lambda t: t ** (s - 1) * math.exp(-t), x, math.inf,
                            epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def _brute_force_best(g, l, rho):
    best = None
    for idx in itertools.combinations(range(g.shape[0]), l):
        sub = g[list(idx)]
        lam = np.linalg.eigvalsh(np.eye(l) + rho * sub @ sub.conj().T)
        rate = float(np.sum(np.log2(lam)))
        if best is None or rate > best[1] + 1e-12 * max(1.0, abs(best[1])):
            best = (idx, rate)
    return best


def _checks():
    worst = max(abs(special_fn.upper_incomplete_gamma(s, x) / _gamma_tail_quad(s, x) - 1)
                for s in (0.5, 1.0, 2.0, 3.7) for x in (0.1, 1.0, 5.0, 20.0))
    yield 'incomplete gamma vs quadrature', worst < 1e-8, worst

    worst = max(abs(special_fn.reg_upper_gamma(s, special_fn.inv_reg_upper_gamma(s, q)) - q)
                for s in np.linspace(0.5, 8, 16) for q in np.logspace(-6, 0, 13))
    yield 'inverse round trip', worst < 1e-10, worst

    mo = asymptotics.trimmed_moments(1.0, 8, 128)
    v = math.log(16)
    err = max(abs(mo.threshold - v), abs(mo.mean - 8 * (1 + v)),
              abs(mo.core_variance - 1), abs(mo.variance - 15.5))
    yield 'exponential closed forms', err < 1e-9, err

    rng = trial_rng(2024, 0)
    mismatches = 0
    for _ in range(20):
        n, k = int(rng.integers(3, 8)), int(rng.integers(1, 3))
        l = int(rng.integers(k, min(3, n) + 1))
        g = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / math.sqrt(2)
        res = capacity.select_exhaustive(g, l, 2.0)
        idx, rate = _brute_force_best(g, l, 2.0)
        if res.indices != idx or abs(res.rate - rate) > 1e-9:
            mismatches += 1
    yield 'exhaustive search vs enumeration', mismatches == 0, mismatches


def run_selftest(out):
    """Print one line per check; return True when all pass."""
    ok = True
    for name, passed, detail in _checks():
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'}  {name}  ({detail:.3g})", file=out)
    return ok
