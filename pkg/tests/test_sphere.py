"""Spherical-harmonic transforms, quadrature, and gradient bilinears."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphere_sapt.sphere import (
    SphereSymbol,
    angular_square,
    gradient_bilinears,
    integrate,
    make_grid,
    synthesize_at,
    vector_symbol_coeffs,
    ylm_at,
)


def _random_symbol(L, rng, fast=()):
    c = rng.normal(size=(L + 1, 2 * L + 1) + fast) + 1j * rng.normal(
        size=(L + 1, 2 * L + 1) + fast
    )
    for l in range(L + 1):
        c[l, : L - l] = 0
        c[l, L + l + 1 :] = 0
    return SphereSymbol(c)


@settings(max_examples=20, deadline=None)
@given(L=st.integers(0, 8), seed=st.integers(0, 10**6))
def test_analyze_synthesize_roundtrip(L, seed):
    rng = np.random.default_rng(seed)
    sym = _random_symbol(L, rng)
    grid = make_grid(2 * L)
    back = grid.analyze(grid.synthesize(sym), L)
    assert np.max(np.abs(back.coeffs - sym.coeffs)) < 1e-12


def test_matrix_valued_roundtrip():
    rng = np.random.default_rng(3)
    sym = _random_symbol(4, rng, fast=(2, 2))
    grid = make_grid(8)
    back = grid.analyze(grid.synthesize(sym), 4)
    assert np.max(np.abs(back.coeffs - sym.coeffs)) < 1e-12


def test_quadrature_exactness():
    # the grid integrates Y_lm exactly: only Y_00 has nonzero mean
    grid = make_grid(12)
    for l, m in [(0, 0), (1, 0), (2, 1), (5, -3), (6, 6)]:
        c = np.zeros((l + 1, 2 * l + 1), dtype=complex)
        c[l, l + m] = 1.0
        val = integrate(SphereSymbol(c), grid)
        want = np.sqrt(4 * np.pi) if l == 0 else 0.0
        assert abs(val - want) < 1e-13


def test_constant_symbol():
    grid = make_grid(4)
    samples = grid.synthesize(SphereSymbol.constant(2.5))
    assert np.max(np.abs(samples - 2.5)) < 1e-13


def test_vector_symbols_are_unit_normals():
    grid = make_grid(8)
    n = np.stack([grid.synthesize(s).real for s in vector_symbol_coeffs()])
    assert np.max(np.abs(n - grid.nvec)) < 1e-13


def test_angular_square_eigenvalues():
    # the spherical Laplacian acts as -l(l+1) on degree-l harmonics
    for l, m in [(1, 0), (2, -2), (4, 3)]:
        c = np.zeros((l + 1, 2 * l + 1), dtype=complex)
        c[l, l + m] = 1.0
        sym = SphereSymbol(c)
        lap = angular_square(sym)
        assert np.max(np.abs(lap.coeffs + l * (l + 1) * sym.coeffs)) < 1e-13


def test_gradient_bilinears_height_function():
    # grad n3 . grad n3 = sin^2(theta) = 1 - n3^2
    n1, n2, n3 = vector_symbol_coeffs()
    grid = make_grid(16)
    dot, cross = gradient_bilinears(n3, n3)
    got = grid.synthesize(dot).real
    ct = np.cos(grid.theta)[:, None]
    assert np.max(np.abs(got - (1 - ct**2))) < 1e-12
    assert np.max(np.abs(cross.coeffs)) < 1e-13


def test_poisson_structure_of_coordinates():
    # n . (grad n_a x grad n_b) = eps_abc n_c
    syms = vector_symbol_coeffs()
    grid = make_grid(16)
    for a, b, c, sign in [(0, 1, 2, 1), (1, 2, 0, 1), (2, 0, 1, 1), (1, 0, 2, -1)]:
        _, cross = gradient_bilinears(syms[a], syms[b])
        got = grid.synthesize(cross).real
        want = sign * grid.synthesize(syms[c]).real
        assert np.max(np.abs(got - want)) < 1e-12


def test_synthesize_at_matches_grid():
    rng = np.random.default_rng(7)
    sym = _random_symbol(6, rng)
    grid = make_grid(12)
    on_grid = grid.synthesize(sym)
    th, ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    off = synthesize_at(sym, th.ravel(), ph.ravel()).reshape(th.shape)
    assert np.max(np.abs(off - on_grid)) < 1e-12


def test_synthesize_at_poles():
    # only m=0 harmonics contribute at the poles
    sym = vector_symbol_coeffs()[2]  # n3
    v = synthesize_at(sym, np.array([0.0, np.pi]), np.array([0.3, 1.1]))
    assert np.max(np.abs(v - np.array([1.0, -1.0]))) < 1e-13


def test_ylm_at_against_closed_forms():
    th, ph = 0.7, 2.1
    Y = ylm_at(2, th, ph)
    y00 = 1 / np.sqrt(4 * np.pi)
    y10 = np.sqrt(3 / (4 * np.pi)) * np.cos(th)
    y11 = -np.sqrt(3 / (8 * np.pi)) * np.sin(th) * np.exp(1j * ph)
    y22 = 0.25 * np.sqrt(15 / (2 * np.pi)) * np.sin(th) ** 2 * np.exp(2j * ph)
    assert abs(Y[0, 2] - y00) < 1e-13
    assert abs(Y[1, 2] - y10) < 1e-13
    assert abs(Y[1, 3] - y11) < 1e-13
    assert abs(Y[2, 4] - y22) < 1e-13


def test_truncated_pad_and_crop():
    rng = np.random.default_rng(1)
    sym = _random_symbol(3, rng)
    up = sym.truncated(6)
    assert up.L == 6
    back = up.truncated(3)
    assert np.max(np.abs(back.coeffs - sym.coeffs)) == 0.0
