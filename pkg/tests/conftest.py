import numpy as np
import pytest

from timerelax.spectral import GridSpec, SpectralField, forward_transform, leray_project

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_field(grid, rng, components=1):
    """Random real zero-mean field, transformed from physical samples."""
    return forward_transform(rng.standard_normal((components,) + grid.shape), grid)


def random_solenoidal(grid, rng, dealiased=True):
    u = leray_project(random_field(grid, rng, grid.dim))
    if dealiased:
        u = u.with_coeffs(u.coeffs * grid.dealias_mask)
    return u


def single_mode(grid, m, amplitude=1.0, components=1):
    """cos(k.x) in every component: coefficients amplitude/2 at +m and -m."""
    c = np.zeros((components,) + grid.shape, dtype=complex)
    idx = tuple(mi % grid.n for mi in m)
    neg = tuple((-mi) % grid.n for mi in m)
    c[(slice(None),) + idx] += amplitude / 2
    c[(slice(None),) + neg] += amplitude / 2
    return SpectralField(grid, c)


@pytest.fixture
def criterion():
    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def grid2():
    return GridSpec(2, 16)


@pytest.fixture
def grid3():
    return GridSpec(3, 8)
