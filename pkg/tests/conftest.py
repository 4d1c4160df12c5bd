"""Shared numerical oracles for the test suite."""
import numpy as np
import pytest


def circ_diff(a, b, periodic):
    """Componentwise difference; periodic components measured on the circle."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = a - b
    per = np.asarray(periodic, dtype=bool)
    d[per] = (d[per] + 0.5) % 1.0 - 0.5
    return d


def fd_jacobian(phi, x, periodic_out, h=1e-5):
    """Central finite differences of a chart map; wrap-aware in the outputs."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    cols = []
    for j in range(m):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        fp = np.array([float(v) for v in phi(list(xp))])
        fm = np.array([float(v) for v in phi(list(xm))])
        cols.append(circ_diff(fp, fm, periodic_out) / (2.0 * h))
    return np.stack(cols, axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
