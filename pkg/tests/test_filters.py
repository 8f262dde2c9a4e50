import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_field, single_mode
from timerelax.errors import InvalidInputError
from timerelax.filters import (
    FilterParams,
    apply_d0,
    apply_filter,
    apply_hn,
    apply_inverse_filter,
    consistency_error_estimate,
    d0_hat,
    deconvolve,
    dn_hat,
    fluctuation,
    g_hat,
    h_hat,
    transfer_table,
)
from timerelax.spectral import GridSpec, SpectralField, forward_transform, inner, inverse_transform


def mode_gain(out: SpectralField, inp: SpectralField, m):
    idx = (0,) + tuple(mi % inp.grid.n for mi in m)
    return (out.coeffs[idx] / inp.coeffs[idx]).real


def dense_laplacian(grid):
    """Spectral Laplacian as a dense matrix on a small grid (independent of the package)."""
    npts = grid.n**grid.dim
    eye = np.eye(npts).reshape((npts,) + grid.shape)
    m = np.fft.fftfreq(grid.n, 1 / grid.n)
    ks = np.meshgrid(*([grid.dk * m] * grid.dim), indexing="ij")
    k2 = sum(k**2 for k in ks)
    axes = tuple(range(1, grid.dim + 1))
    cols = np.fft.ifftn(-k2 * np.fft.fftn(eye, axes=axes), axes=axes).real
    return cols.reshape(npts, npts).T


class TestFilterParams:
    @pytest.mark.parametrize("kw", [dict(delta=-1, alpha=0.5), dict(delta=1, alpha=1.5), dict(delta=1, alpha=0.5, N=-1), dict(delta=1, alpha=0.5, N=1.5)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidInputError):
            FilterParams(**kw)


class TestFilter:
    def test_half_amplitude_at_unit_scale(self):
        g = GridSpec(2, 16)
        u = single_mode(g, (3, 0))
        p = FilterParams(delta=1 / 3, alpha=0.5)
        assert mode_gain(apply_filter(u, p), u, (3, 0)) == pytest.approx(0.5, abs=1e-15)

    def test_zero_delta_identity(self, rng):
        u = random_field(GridSpec(3, 8), rng, 3)
        p = FilterParams(0.0, 0.5, 2)
        np.testing.assert_array_equal(apply_filter(u, p).coeffs, u.coeffs)
        np.testing.assert_array_equal(apply_inverse_filter(u, p).coeffs, u.coeffs)

    def test_zero_field(self):
        z = SpectralField.zeros(GridSpec(2, 8), 2)
        assert not np.any(apply_filter(z, FilterParams(0.3, 0.5)).coeffs)

    def test_solves_helmholtz(self, rng):
        g = GridSpec(2, 16, L=1.7)
        p = FilterParams(0.2, 0.5)
        u = random_field(g, rng)
        ubar = inverse_transform(apply_filter(u, p))[0]
        lap = dense_laplacian(g) @ ubar.ravel()
        residual = -(p.delta**2) * lap + ubar.ravel() - inverse_transform(u)[0].ravel()
        assert np.max(np.abs(residual)) < 1e-12

    def test_inverse_composition(self, rng):
        u = random_field(GridSpec(3, 8), rng, 3)
        p = FilterParams(0.4, 0.5)
        back = apply_inverse_filter(apply_filter(u, p), p)
        assert np.abs(back.coeffs - u.coeffs).max() < 1e-12 * np.abs(u.coeffs).max()

    def test_inverse_amplification(self):
        g = GridSpec(2, 16)
        p = FilterParams(0.25, 0.5)
        white = SpectralField(g, np.ones((1,) + g.shape, dtype=complex))
        out = apply_inverse_filter(white, p).coeffs[0].real
        np.testing.assert_allclose(out, 1 + (0.25 * g.kmag) ** 2, rtol=1e-15)


class TestD0:
    def test_alpha_one_identity(self, rng):
        u = random_field(GridSpec(2, 16), rng)
        np.testing.assert_allclose(apply_d0(u, FilterParams(0.3, 1.0)).coeffs, u.coeffs, rtol=1e-15)

    def test_four_thirds(self):
        g = GridSpec(2, 16)
        u = single_mode(g, (2, 0))
        assert mode_gain(apply_d0(u, FilterParams(0.5, 0.5)), u, (2, 0)) == pytest.approx(4 / 3, rel=1e-15)

    def test_alpha_zero_warns(self, rng):
        u = random_field(GridSpec(2, 8), rng)
        with pytest.warns(RuntimeWarning, match="regularization disabled"):
            apply_d0(u, FilterParams(0.3, 0.0))

    def test_is_inverse_of_regularized_operator(self, rng):
        g = GridSpec(2, 8)
        p = FilterParams(0.3, 0.4)
        npts = g.n**2
        G = np.linalg.inv(np.eye(npts) - p.delta**2 * dense_laplacian(g))
        M = (1 - p.alpha) * G + p.alpha * np.eye(npts)
        u = random_field(g, rng)
        out = inverse_transform(apply_d0(u, p))[0].ravel()
        oracle = np.linalg.solve(M, inverse_transform(u)[0].ravel())
        np.testing.assert_allclose(out, oracle, atol=1e-12)


class TestDeconvolve:
    @pytest.mark.parametrize("N", [0, 1, 3])
    def test_dense_fixed_point_oracle(self, N, rng):
        # the recursion carried out with dense matrices in physical space
        g = GridSpec(2, 8, L=1.0)
        p = FilterParams(0.05, 0.3, N)
        npts = g.n**2
        G = np.linalg.inv(np.eye(npts) - p.delta**2 * dense_laplacian(g))
        M = (1 - p.alpha) * G + p.alpha * np.eye(npts)
        ubar_field = random_field(g, rng)
        ubar = inverse_transform(ubar_field)[0].ravel()
        un = np.linalg.solve(M, ubar)
        for _ in range(N):
            un = un + np.linalg.solve(M, ubar - G @ un)
        out = inverse_transform(deconvolve(ubar_field, p))[0].ravel()
        np.testing.assert_allclose(out, un, atol=1e-11)

    def test_n0_equals_d0(self, rng):
        u = random_field(GridSpec(3, 8), rng, 3)
        p = FilterParams(0.3, 0.6, 0)
        np.testing.assert_allclose(deconvolve(u, p).coeffs, apply_d0(u, p).coeffs, rtol=1e-15, atol=0)

    def test_alpha_one_n0_no_deconvolution(self, rng):
        u = random_field(GridSpec(2, 16), rng)
        np.testing.assert_allclose(deconvolve(u, FilterParams(0.3, 1.0, 0)).coeffs, u.coeffs, rtol=1e-15)

    @pytest.mark.parametrize("N", range(11))
    def test_recursion_matches_closed_form(self, N):
        g = GridSpec(2, 32)
        p = FilterParams(0.15, 0.5, N)
        white = SpectralField(g, np.ones((1,) + g.shape, dtype=complex))
        out = deconvolve(white, p).coeffs[0].real
        np.testing.assert_allclose(out, dn_hat(g.kmag, p), rtol=1e-12)

    @pytest.mark.parametrize("N", [0, 1, 4])
    def test_single_mode_consistency(self, N):
        g = GridSpec(3, 8)
        m = (1, 2, 0)
        p = FilterParams(0.3, 0.5, N)
        u = single_mode(g, m)
        r = deconvolve(apply_filter(u, p), p)
        k = g.dk * np.sqrt(5)
        x = p.alpha * (p.delta * k) ** 2
        expected = (x / (1 + x)) ** (N + 1)
        assert 1 - mode_gain(r, u, m) == pytest.approx(expected, rel=1e-10)


class TestHN:
    def test_origin_multiplier(self):
        p = FilterParams(0.3, 0.5, 4)
        assert h_hat(0.0, p) == 1.0
        assert np.all(h_hat(np.linspace(0, 50, 7), FilterParams(0.0, 0.5, 3)) == 1.0)

    @pytest.mark.parametrize("N,expected", [(0, 0.5), (1, 0.75)])
    def test_unit_z(self, N, expected):
        # z = sqrt(alpha) delta k = 1
        p = FilterParams(delta=2.0, alpha=0.25, N=N)
        assert h_hat(1.0, p) == pytest.approx(expected, rel=1e-15)

    def test_geometric_series_sum(self):
        z = np.linspace(0, 5, 41)
        for N in (0, 2, 7):
            series = sum((1 - 1 / (1 + z**2)) ** j for j in range(N + 1)) / (1 + z**2)
            np.testing.assert_allclose(h_hat(z, FilterParams(1.0, 1.0, N)), series, rtol=1e-13)

    def test_equals_deconvolve_of_filter(self, rng):
        u = random_field(GridSpec(3, 8), rng, 3)
        p = FilterParams(0.4, 0.3, 3)
        a = apply_hn(u, p).coeffs
        b = deconvolve(apply_filter(u, p), p).coeffs
        assert np.abs(a - b).max() < 1e-12 * np.abs(u.coeffs).max()

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 10), st.floats(0.05, 1.0))
    def test_quadratic_form_bounds(self, seed, N, alpha):
        rng = np.random.default_rng(seed)
        g = GridSpec(2, 16)
        u = random_field(g, rng, 2)
        p = FilterParams(0.5, alpha, N)
        uu = inner(u, u)
        hu = inner(apply_hn(u, p), u)
        fu = inner(fluctuation(u, p), u)
        assert -1e-12 * uu <= hu <= uu * (1 + 1e-12)
        assert -1e-12 * uu <= fu <= uu * (1 + 1e-12)

    def test_self_adjoint(self, rng):
        g = GridSpec(3, 8)
        p = FilterParams(0.5, 0.4, 2)
        for _ in range(10):
            u, v = random_field(g, rng, 3), random_field(g, rng, 3)
            d = inner(apply_hn(u, p), v) - inner(u, apply_hn(v, p))
            assert abs(d) <= 1e-12 * np.sqrt(inner(u, u) * inner(v, v))

    def test_monotone_in_k_and_n(self):
        z = np.linspace(0, 30, 3001)
        prev = None
        for N in range(12):
            h = h_hat(z, FilterParams(1.0, 1.0, N))
            assert np.all(np.diff(h) <= 0)
            assert np.all((h >= 0) & (h <= 1))
            if prev is not None:
                assert np.all(h >= prev)
            prev = h


class TestTransferTable:
    def test_origin_row(self):
        t = transfer_table(FilterParams(0.3, 0.5, 5), [0.0])
        assert next(t.rows()) == (0.0, 1.0, 1.0, 1.0)

    def test_monotone_in_n_and_decays(self):
        k = np.linspace(0, 400, 801)
        h = [transfer_table(FilterParams(1.0, 0.5, N), k).h_hat for N in (5, 10, 100)]
        assert np.all(h[0] <= h[1]) and np.all(h[1] <= h[2])
        for row in h:
            assert np.all(np.diff(row) <= 0)
        assert h[0][-1] < 1e-3

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            transfer_table(FilterParams(0.3, 0.5), [1.0, -1.0])
        with pytest.raises(InvalidInputError):
            transfer_table(FilterParams(0.3, 0.5), [])

    def test_csv_round_trip(self):
        k = [0.0, 0.1, 3.7]
        t = transfer_table(FilterParams(0.3, 0.5, 2), k)
        lines = t.to_csv().splitlines()
        assert lines[0] == "k,g_hat,d0_hat,h_hat"
        vals = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        np.testing.assert_array_equal(vals[:, 3], t.h_hat)


class TestConsistencyEstimate:
    def test_direct_value(self):
        assert consistency_error_estimate(FilterParams(1.0, 1.0, 0), 1.0) == pytest.approx(0.5)

    @pytest.mark.parametrize("N", [0, 1, 2, 5])
    def test_delta_slope(self, N):
        d = np.array([1e-3, 2e-3])
        e = [consistency_error_estimate(FilterParams(di, 0.5, N), 1.0) for di in d]
        slope = np.diff(np.log(e)) / np.diff(np.log(d))
        assert slope[0] == pytest.approx(2 * N + 2, abs=0.05)

    @pytest.mark.parametrize("N", [0, 1, 2, 5])
    def test_alpha_slope(self, N):
        a = np.array([1e-4, 2e-4])
        e = [consistency_error_estimate(FilterParams(0.1, ai, N), 1.0) for ai in a]
        slope = np.diff(np.log(e)) / np.diff(np.log(a))
        assert slope[0] == pytest.approx(N + 1, abs=0.05)

    def test_nonpositive_k(self):
        with pytest.raises(InvalidInputError):
            consistency_error_estimate(FilterParams(0.1, 0.5), 0.0)
