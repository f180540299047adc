"""Operator-kernel quantization on the sphere.

The kernel Delta(n) = sqrt(4 pi / d) sum_{l <= 2j, |m| <= l} conj(Y_lm(n)) T_lm
turns band-limited functions into operators and back.  In coefficient space
both maps are diagonal in the tensor-operator basis:

    quantize:    A = sqrt(d / 4 pi) sum b_lm T_lm
    dequantize:  b_lm = sqrt(4 pi / d) tr(T_lm^dagger A)

which makes the round trips exact.  Matrix-valued (fast-sector) symbols
quantize entrywise: the result acts on H_slow (x) H_fast as kron(T, b).
Coherent-state lower symbols are a further diagonal rescaling by the
Clebsch-Gordan factor <j j; l 0 | j j>.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import pi, sqrt

import numpy as np

from .spin import SpinIrrep, clebsch_gordan, make_irrep, tensor_basis
from .sphere import Grid, SphereSymbol, ylm_at

__all__ = [
    "SWKernel",
    "build_kernel",
    "quantize",
    "dequantize",
    "lower_symbol",
    "kernel_property_residuals",
]


@dataclass(frozen=True)
class SWKernel:
    """Quantization kernel for one spin irrep."""

    irrep: SpinIrrep

    @property
    def two_j(self) -> int:
        return self.irrep.two_j

    @property
    def d(self) -> int:
        return self.irrep.d

    def at(self, theta: float, phi: float) -> np.ndarray:
        """Dense kernel matrix Delta(n) at a single point."""
        L = self.two_j
        Y = ylm_at(L, theta, phi)
        basis = tensor_basis(L)
        d = self.d
        out = np.zeros((d, d), dtype=complex)
        for l in range(L + 1):
            for m in range(-l, l + 1):
                out += np.diag(Y[l, L + m].conj() * basis.diag[(l, m)], k=m)
        return sqrt(4 * pi / d) * out

    def samples(self, grid: Grid) -> np.ndarray:
        """Kernel at every grid node, shape (n_theta, n_phi, d, d)."""
        d = self.d
        delta = SphereSymbol(np.zeros((self.two_j + 1, 2 * self.two_j + 1, d, d), complex))
        L = self.two_j
        basis = tensor_basis(L)
        c = delta.coeffs
        for l in range(L + 1):
            for m in range(-l, l + 1):
                # conj(Y_lm) = (-1)^m Y_{l,-m}
                c[l, L - m] += (-1) ** m * sqrt(4 * pi / d) * np.diag(basis.diag[(l, m)], k=m)
        return grid.synthesize(delta)


def build_kernel(irrep: SpinIrrep) -> SWKernel:
    return SWKernel(irrep)


def quantize(sym: SphereSymbol, kernel: SWKernel) -> np.ndarray:
    """Operator of a symbol; components with l > 2j are projected out.

    Scalar symbols give a d x d matrix; k x k matrix-valued symbols give a
    (d k) x (d k) matrix on H_slow (x) H_fast.
    """
    L = min(sym.L, kernel.two_j)
    d = kernel.d
    basis = tensor_basis(kernel.two_j)
    fast = sym.fast_shape
    k = fast[0] if fast else 1
    A = np.zeros((d, k, d, k), dtype=complex)
    Loff = sym.L
    pref = sqrt(d / (4 * pi))
    rows = np.arange(d)
    for l in range(L + 1):
        for m in range(-l, l + 1):
            b = sym.coeffs[l, Loff + m]
            if not np.any(b):
                continue
            band = basis.diag[(l, m)]
            r = rows[: d - abs(m)] + max(0, -m)
            cidx = r + m
            if fast:
                A[r, :, cidx, :] += pref * band[:, None, None] * b[None, :, :]
            else:
                A[r, 0, cidx, 0] += pref * band * b
    out = A.reshape(d * k, d * k)
    return out if fast else out.reshape(d, d)


def dequantize(A: np.ndarray, kernel: SWKernel, fast_dim: int | None = None) -> SphereSymbol:
    """Symbol of an operator; inverse of quantize on band limit 2j.

    If fast_dim is given, A acts on H_slow (x) H_fast and the symbol is
    fast_dim x fast_dim matrix-valued (partial trace over the slow sector
    against the kernel).
    """
    d = kernel.d
    k = fast_dim or 1
    A4 = np.asarray(A, dtype=complex).reshape(d, k, d, k)
    L = kernel.two_j
    basis = tensor_basis(L)
    shape = (L + 1, 2 * L + 1) + ((k, k) if fast_dim else ())
    coeffs = np.zeros(shape, dtype=complex)
    pref = sqrt(4 * pi / d)
    rows = np.arange(d)
    for m in range(-L, L + 1):
        r = rows[: d - abs(m)] + max(0, -m)
        Dm = A4[r, :, r + m, :]  # (d-|m|, k, k)
        for l in range(abs(m), L + 1):
            val = pref * np.tensordot(basis.diag[(l, m)].conj(), Dm, axes=([0], [0]))
            coeffs[l, L + m] = val if fast_dim else val[0, 0]
    return SphereSymbol(coeffs)


@lru_cache(maxsize=None)
def _lower_scale(two_j: int) -> np.ndarray:
    """r_l = <j j; l 0 | j j>, the lower-symbol shrink factor per l."""
    j = two_j / 2
    return np.array([clebsch_gordan(j, j, l, 0, j, j) for l in range(two_j + 1)])


def lower_symbol(A: np.ndarray, irrep: SpinIrrep, fast_dim: int | None = None) -> SphereSymbol:
    """Coherent-state diagonal expectation n -> <zeta_n| A |zeta_n>."""
    kernel = SWKernel(irrep)
    sym = dequantize(A, kernel, fast_dim=fast_dim)
    r = _lower_scale(irrep.two_j)
    shape = (irrep.two_j + 1, 1) + (1,) * (sym.coeffs.ndim - 2)
    return SphereSymbol(sym.coeffs * r.reshape(shape))


def raise_lower_symbol(sym: SphereSymbol, irrep: SpinIrrep) -> np.ndarray:
    """Unique operator with the given lower symbol (inverse of lower_symbol).

    Requires the symbol to be in the range of the lower-symbol map
    (band limit <= 2j).
    """
    if sym.L > irrep.two_j:
        if np.max(np.abs(sym.coeffs[irrep.two_j + 1 :])) > 1e-12:
            raise ValueError("symbol has components with l > 2j; not a lower symbol")
        sym = sym.truncated(irrep.two_j)
    sym = sym.truncated(irrep.two_j)
    r = _lower_scale(irrep.two_j)
    shape = (irrep.two_j + 1, 1) + (1,) * (sym.coeffs.ndim - 2)
    scaled = SphereSymbol(sym.coeffs / r.reshape(shape))
    return quantize(scaled, SWKernel(irrep))


def kernel_property_residuals(kernel: SWKernel, grid: Grid, n_group: int = 20, seed: int = 7):
    """Numerical residuals of the five defining kernel properties.

    Returns a dict with keys 'hermitian', 'normalized', 'reproducing',
    'trace_duality', 'covariant'.
    """
    from .spin import rotation_from_zyz, wigner_zyz

    d = kernel.d
    rng = np.random.default_rng(seed)
    samp = kernel.samples(grid)
    res = {}
    res["hermitian"] = float(np.max(np.abs(samp - samp.conj().swapaxes(-1, -2))))
    mean = (d / (4 * pi)) * grid.integrate_samples(samp)
    res["normalized"] = float(np.max(np.abs(mean - np.eye(d))))

    # reproducing property at a few nodes
    worst = 0.0
    wt = grid.w_theta
    for it, ip in [(0, 0), (grid.n_theta // 2, grid.n_phi // 3), (grid.n_theta - 1, 1)]:
        target = samp[it, ip]
        overlap = np.einsum("tpab,ba->tp", samp, target)  # tr(Delta(m) Delta(n))
        rec = (d / (4 * pi)) * np.einsum("tp,t,tpab->ab", overlap, wt, samp)
        worst = max(worst, float(np.max(np.abs(rec - target))))
    res["reproducing"] = worst

    # trace duality on random hermitian pairs
    worst = 0.0
    for _ in range(20):
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        B = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        A = A + A.conj().T
        B = B + B.conj().T
        fa = np.einsum("tpab,ba->tp", samp, A)
        fb = np.einsum("tpab,ba->tp", samp, B)
        lhs = np.trace(A @ B)
        rhs = (d / (4 * pi)) * grid.integrate_samples(fa * fb)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    res["trace_duality"] = float(worst)

    # covariance over random group elements
    worst = 0.0
    theta0, phi0 = 1.1, 0.4
    delta0 = kernel.at(theta0, phi0)
    n0 = np.array(
        [np.sin(theta0) * np.cos(phi0), np.sin(theta0) * np.sin(phi0), np.cos(theta0)]
    )
    for _ in range(n_group):
        ang = rng.uniform(0, 2 * pi, size=3)
        U = wigner_zyz(kernel.irrep, *ang)
        R = rotation_from_zyz(*ang)
        n1 = R @ n0
        th1 = np.arccos(np.clip(n1[2], -1, 1))
        ph1 = np.arctan2(n1[1], n1[0])
        worst = max(
            worst,
            float(np.max(np.abs(U @ delta0 @ U.conj().T - kernel.at(th1, ph1)))),
        )
    res["covariant"] = worst
    return res
