"""Band-limited calculus on the two-sphere.

Gauss-Legendre x uniform-phi quadrature grids, complex orthonormal
spherical harmonics with Condon-Shortley phase (orthonormal for the
un-normalized measure, total mass 4 pi), analysis/synthesis, tangential
gradients from analytic theta/phi derivatives, and the rotation-invariant
differential operators used by the star-product expansions.

Scalar symbols carry coefficient arrays of shape (L+1, 2L+1); matrix
valued symbols append trailing (k, k) axes.  Coefficient a[l, m+L]
multiplies Y_lm; entries with |m| > l are zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import pi, sqrt

import numpy as np

__all__ = [
    "Grid",
    "SphereSymbol",
    "make_grid",
    "angular_square",
    "gradient_bilinears",
    "integrate",
    "vector_symbol_coeffs",
    "ylm_at",
]


@dataclass(frozen=True)
class SphereSymbol:
    """Band-limited function on S^2 in spherical-harmonic coefficients."""

    coeffs: np.ndarray

    @property
    def L(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def fast_shape(self) -> tuple:
        return self.coeffs.shape[2:]

    @property
    def is_scalar(self) -> bool:
        return self.coeffs.ndim == 2

    def truncated(self, L: int) -> "SphereSymbol":
        """Drop (or zero-pad) to band limit L."""
        old = self.L
        if L == old:
            return self
        shape = (L + 1, 2 * L + 1) + self.fast_shape
        out = np.zeros(shape, dtype=complex)
        lc = min(L, old)
        out[: lc + 1, L - lc : L + lc + 1] = self.coeffs[: lc + 1, old - lc : old + lc + 1]
        return SphereSymbol(out)

    def hermiticity_residual(self) -> float:
        """Max deviation from a_{l,-m} = (-1)^m conj-transpose(a_{lm})."""
        L = self.L
        res = 0.0
        for m in range(-L, L + 1):
            a = self.coeffs[:, L + m]
            b = self.coeffs[:, L - m]
            sign = (-1) ** m
            if self.is_scalar:
                res = max(res, float(np.max(np.abs(b - sign * a.conj()))))
            else:
                res = max(res, float(np.max(np.abs(b - sign * a.conj().swapaxes(-1, -2)))))
        return res

    @staticmethod
    def constant(value, L: int = 0) -> "SphereSymbol":
        """Constant symbol; value may be a scalar or a k x k matrix."""
        value = np.asarray(value, dtype=complex)
        shape = (L + 1, 2 * L + 1) + value.shape
        c = np.zeros(shape, dtype=complex)
        c[0, L] = value * sqrt(4 * pi)
        return SphereSymbol(c)


def _legendre_tables(L: int, x: np.ndarray):
    """Fully normalized associated Legendre P_lm(x) and d/dtheta tables.

    Returns (P, dP), each of shape (L+1, L+1, len(x)) indexed [l, m] for
    m >= 0.  Normalization: int P_lm(x)^2 dx dphi-factor = orthonormal
    spherical harmonics, i.e. Y_lm(theta, phi) = P_lm(cos theta) e^{i m phi}.
    """
    nx = len(x)
    sx = np.sqrt(np.clip(1.0 - x * x, 0.0, None))  # sin(theta) > 0 off poles
    P = np.zeros((L + 1, L + 1, nx))
    P[0, 0] = 1.0 / sqrt(4 * pi)
    for m in range(1, L + 1):
        P[m, m] = -sqrt((2 * m + 1) / (2 * m)) * sx * P[m - 1, m - 1]
    for m in range(0, L):
        P[m + 1, m] = sqrt(2 * m + 3) * x * P[m, m]
    for m in range(0, L + 1):
        for l in range(m + 2, L + 1):
            a = sqrt((4 * l * l - 1) / (l * l - m * m))
            b = sqrt((2 * l + 1) / (2 * l - 3) * ((l - 1) ** 2 - m * m) / (l * l - m * m))
            P[l, m] = a * x * P[l - 1, m] - b * P[l - 2, m]
    # d/dtheta P_lm = m cot(theta) P_lm + sqrt((l-m)(l+m+1)) P_{l,m+1}
    # pole nodes only ever consume P (quadrature grids exclude the poles),
    # so a finite stand-in for cot there keeps dP free of nans
    cot = np.divide(x, sx, out=np.zeros_like(x), where=sx > 0)
    dP = np.zeros_like(P)
    for m in range(0, L + 1):
        for l in range(m, L + 1):
            dP[l, m] = m * cot * P[l, m]
            if m + 1 <= l:
                dP[l, m] += sqrt((l - m) * (l + m + 1)) * P[l, m + 1]
    return P, dP


class Grid:
    """Quadrature grid exact for spherical-harmonic products up to L_exact.

    Gauss-Legendre nodes in cos(theta) (never at the poles), uniform phi,
    weights summing to 4 pi.
    """

    def __init__(self, L_exact: int):
        self.L_exact = int(L_exact)
        n_theta = self.L_exact // 2 + 1
        x, wx = np.polynomial.legendre.leggauss(n_theta)
        order = np.argsort(-x)  # theta ascending
        self.x = x[order]
        self.theta = np.arccos(self.x)
        n_phi = self.L_exact + 1
        self.phi = 2 * pi * np.arange(n_phi) / n_phi
        self.w_theta = wx[order] * (2 * pi / n_phi)  # per-node weight, any phi
        self.n_theta = n_theta
        self.n_phi = n_phi
        self._tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._phases: dict[int, np.ndarray] = {}

    # -- cached tables ------------------------------------------------------

    def _tab(self, L: int):
        for Lt, tab in self._tables.items():
            if Lt >= L:
                return tab
        tab = _legendre_tables(L, self.x)
        self._tables = {L: tab}
        return tab

    def _phase(self, L: int) -> np.ndarray:
        ph = self._phases.get(L)
        if ph is None:
            m = np.arange(-L, L + 1)
            ph = np.exp(1j * np.outer(m, self.phi))
            self._phases[L] = ph
        return ph

    def _fold(self, L: int, deriv: bool = False) -> np.ndarray:
        """Table Y[l, m+L, itheta] of P_l|m| with the sign for negative m."""
        P, dP = self._tab(L)
        T = dP if deriv else P
        out = np.zeros((L + 1, 2 * L + 1, self.n_theta))
        for m in range(-L, L + 1):
            am = abs(m)
            sign = (-1) ** m if m < 0 else 1
            out[am:, m + L] = sign * T[am:, am, :][: L + 1 - am]
        return out

    @property
    def nvec(self) -> np.ndarray:
        """Unit normals at the nodes, shape (3, n_theta, n_phi)."""
        st = np.sin(self.theta)[:, None]
        return np.stack(
            [
                st * np.cos(self.phi)[None, :],
                st * np.sin(self.phi)[None, :],
                np.broadcast_to(self.x[:, None], (self.n_theta, self.n_phi)).copy(),
            ]
        )

    # -- transforms ---------------------------------------------------------

    def synthesize(self, sym: SphereSymbol) -> np.ndarray:
        """Sample a symbol on the grid; output (n_theta, n_phi, *fast)."""
        return self._synth(sym.coeffs, deriv=False)

    def _synth(self, coeffs: np.ndarray, deriv: bool) -> np.ndarray:
        L = coeffs.shape[0] - 1
        Y = self._fold(L, deriv=deriv)
        fm = np.einsum("lmt,lm...->mt...", Y, coeffs)
        return np.einsum("mt...,mp->tp...", fm, self._phase(L))

    def synthesize_gradient(self, sym: SphereSymbol):
        """Tangential gradient samples (f_theta, f_phi_over_sin)."""
        L = sym.L
        f_th = self._synth(sym.coeffs, deriv=True)
        m = np.arange(-L, L + 1)
        shape = (1, 2 * L + 1) + (1,) * len(sym.fast_shape)
        c_phi = sym.coeffs * (1j * m).reshape(shape)
        f_ph = self._synth(c_phi, deriv=False)
        f_ph /= np.sin(self.theta).reshape((-1, 1) + (1,) * len(sym.fast_shape))
        return f_th, f_ph

    def analyze(self, samples: np.ndarray, L: int) -> SphereSymbol:
        """Project grid samples onto Y_lm for l <= L."""
        samples = np.asarray(samples, dtype=complex)
        gm = np.einsum("tp...,mp->mt...", samples, self._phase(L).conj())
        wt = self.w_theta.reshape((1, -1) + (1,) * (samples.ndim - 2))
        Y = self._fold(L)
        coeffs = np.einsum("lmt,mt...->lm...", Y, gm * wt)
        return SphereSymbol(coeffs)

    def integrate_samples(self, samples: np.ndarray):
        """Integral over S^2 with the total-mass-4pi measure."""
        wt = self.w_theta.reshape((-1, 1) + (1,) * (np.ndim(samples) - 2))
        return np.sum(samples * wt, axis=(0, 1))


@lru_cache(maxsize=None)
def make_grid(L_exact: int) -> Grid:
    return Grid(L_exact)


def integrate(sym: SphereSymbol, grid: Grid):
    """Integral of a symbol; for band-limited input only the l=0 term counts."""
    return sym.coeffs[0, sym.L] * sqrt(4 * pi)


def angular_square(sym: SphereSymbol) -> SphereSymbol:
    """Apply (n x grad)^2, i.e. multiply each l-sector by -l(l+1)."""
    L = sym.L
    lv = np.arange(L + 1, dtype=float)
    shape = (L + 1, 1) + (1,) * len(sym.fast_shape)
    return SphereSymbol(sym.coeffs * (-lv * (lv + 1)).reshape(shape))


def _pointwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise product, matrix multiplication on trailing axes if present."""
    if a.ndim == 2 and b.ndim == 2:
        return a * b
    if a.ndim == 2:
        return a[..., None, None] * b
    if b.ndim == 2:
        return a * b[..., None, None]
    return a @ b


def gradient_bilinears(f: SphereSymbol, g: SphereSymbol, grid: Grid | None = None):
    """(grad f . grad g, n . (grad f x grad g)) as symbols at L_f + L_g.

    Factor order is preserved for matrix-valued symbols.
    """
    L_out = f.L + g.L
    if grid is None:
        grid = make_grid(2 * L_out)
    f_th, f_ph = grid.synthesize_gradient(f)
    g_th, g_ph = grid.synthesize_gradient(g)
    dot = _pointwise(f_th, g_th) + _pointwise(f_ph, g_ph)
    cross = _pointwise(f_th, g_ph) - _pointwise(f_ph, g_th)
    return grid.analyze(dot, L_out), grid.analyze(cross, L_out)


def vector_symbol_coeffs(L: int = 1) -> list[SphereSymbol]:
    """The scalar symbols n_1, n_2, n_3 (unit-vector components)."""
    r = sqrt(2 * pi / 3)
    out = []
    for comp in range(3):
        c = np.zeros((L + 1, 2 * L + 1), dtype=complex)
        if comp == 0:
            c[1, L - 1] = r
            c[1, L + 1] = -r
        elif comp == 1:
            c[1, L - 1] = 1j * r
            c[1, L + 1] = 1j * r
        else:
            c[1, L] = sqrt(4 * pi / 3)
        out.append(SphereSymbol(c))
    return out


def synthesize_at(sym: SphereSymbol, theta, phi):
    """Evaluate a symbol at arbitrary points (vectorized, off-grid)."""
    theta = np.asarray(theta, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float).ravel()
    L = sym.L
    P, _ = _legendre_tables(L, np.cos(theta))
    out = 0
    for m in range(-L, L + 1):
        am = abs(m)
        sign = (-1) ** m if m < 0 else 1
        Ym = sign * P[am:, am, :][: L + 1 - am] * np.exp(1j * m * phi)[None, :]
        c = sym.coeffs[am:, m + L]
        out = out + np.einsum("lx,l...->x...", Ym, c)
    return out


def ylm_at(L: int, theta: float, phi: float) -> np.ndarray:
    """Dense Y_lm values at a single point, shape (L+1, 2L+1)."""
    x = np.array([np.cos(theta)])
    P, _ = _legendre_tables(L, x)
    out = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    for m in range(-L, L + 1):
        am = abs(m)
        sign = (-1) ** m if m < 0 else 1
        out[am:, m + L] = sign * P[am:, am, 0][: L + 1 - am] * np.exp(1j * m * phi)
    return out
