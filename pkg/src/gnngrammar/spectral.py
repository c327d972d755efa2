"""Laplacians, a cyclic Jacobi eigensolver, spectral responses and polynomial filter fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from . import matlang as ml
from .graph import Graph
from .matlang import A, I, Expr, pointwise

SYMMETRY_TOL = 1e-9
JACOBI_TOL = 1e-12
MAX_SWEEPS = 100


class ConvergenceError(RuntimeError):
    pass


# Laplacians as MATLANG expressions -------------------------------------------

DEGREE_MATRIX = (A @ A) * I
LAPLACIAN = DEGREE_MATRIX - A
# recip_sqrt maps the zero off-diagonal (and isolated-node) entries to 0
D_INV_SQRT = pointwise("recip_sqrt", DEGREE_MATRIX)
NORMALIZED_LAPLACIAN = I - D_INV_SQRT @ A @ D_INV_SQRT


def laplacian_expr(normalized: bool) -> Expr:
    return NORMALIZED_LAPLACIAN if normalized else LAPLACIAN


def laplacian(g: Graph, normalized: bool = False) -> np.ndarray:
    """``D - A`` or ``I - D^-1/2 A D^-1/2``; isolated nodes get ``D^-1/2 = 0``."""
    return np.array(ml.evaluate(laplacian_expr(normalized), g).matrix())


def chebyshev_expr(base: Expr, coefficients) -> Expr:
    """``sum_k a_k T_k(base - I)``: Chebyshev series on the spectrum interval [0, 2].

    Built by the three-term recurrence ``T_{k+1} = 2 X T_k - T_{k-1}`` with ``X = base - I``,
    which stays accurate where expanding into powers of ``base`` would cancel badly.
    """
    coefficients = [float(c) for c in coefficients]
    X = base - I
    terms = [I, X]
    while len(terms) < len(coefficients):
        terms.append(2.0 * (X @ terms[-1]) - terms[-2])
    out = 0.0 * I
    for a, t in zip(coefficients, terms):
        out = out + a * t
    return out


def polynomial_expr(base: Expr, coefficients) -> Expr:
    """Horner form of ``sum_k c_k base^k`` (base^0 = I)."""
    coefficients = [float(c) for c in coefficients]
    if not coefficients:
        return 0.0 * I
    out = coefficients[-1] * I
    for c in reversed(coefficients[:-1]):
        out = out @ base + c * I
    return out


# eigendecomposition -------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDecomp:
    lambdas: np.ndarray  # ascending
    U: np.ndarray  # columns are eigenvectors, in the order of ``lambdas``
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.lambdas) @ self.U.T


@numba.njit(cache=True)
def _jacobi_sweep(M, V, skip):
    """One cyclic sweep of Jacobi rotations over the upper triangle, in place."""
    n = M.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = M[p, q]
            if abs(apq) <= skip:
                continue
            theta = (M[q, q] - M[p, p]) / (2.0 * apq)
            at = abs(theta)
            if at > 1e150:  # theta**2 would overflow
                t = 0.5 / theta
            else:
                t = 1.0 / (at + np.sqrt(at * at + 1.0))
                if theta < 0:
                    t = -t
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            for k in range(n):
                mkp = M[k, p]
                mkq = M[k, q]
                M[k, p] = c * mkp - s * mkq
                M[k, q] = s * mkp + c * mkq
            for k in range(n):
                mpk = M[p, k]
                mqk = M[q, k]
                M[p, k] = c * mpk - s * mqk
                M[q, k] = s * mpk + c * mqk
            M[p, q] = 0.0
            M[q, p] = 0.0
            for k in range(n):
                vkp = V[k, p]
                vkq = V[k, q]
                V[k, p] = c * vkp - s * vkq
                V[k, q] = s * vkp + c * vkq


def _off_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M - np.diag(np.diag(M))))


def eig_sym(M, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> SpectralDecomp:
    """Cyclic Jacobi: sweep until the off-diagonal Frobenius norm is below ``tol * max(1, ||M||_F)``."""
    M = np.array(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym >= SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max |M - M^T| = {asym:.3g})")
    M = 0.5 * (M + M.T)
    n = M.shape[0]
    V = np.eye(n)
    bound = tol * max(1.0, float(np.linalg.norm(M)))
    # rotations on entries this small cannot move the off-norm above the bound
    skip = bound / max(n, 1)
    sweeps = 0
    while _off_norm(M) > bound:
        if sweeps >= max_sweeps:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
        _jacobi_sweep(M, V, skip)
        sweeps += 1
    lam = np.diag(M).copy()
    order = np.argsort(lam, kind="stable")
    return SpectralDecomp(lam[order], V[:, order], sweeps)


def decompose_laplacian(g: Graph, normalized: bool = True) -> SpectralDecomp:
    return eig_sym(laplacian(g, normalized))


def spectral_response(C, d: SpectralDecomp) -> np.ndarray:
    """phi_k = (U^T C U)_kk for each eigenvector, in ascending eigenvalue order."""
    C = np.asarray(C, dtype=np.float64)
    n = d.U.shape[0]
    if C.shape != (n, n):
        raise ValueError(f"matrix shape {C.shape} does not match decomposition size {n}")
    return np.einsum("ij,ij->j", d.U, C @ d.U)


# filters -------------------------------------------------------------------------


@dataclass(frozen=True)
class FilterSpec:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, lam):
        return np.asarray(self.fn(np.asarray(lam, dtype=np.float64)), dtype=np.float64)

    @classmethod
    def tabulated(cls, lambdas, values, name: str = "custom") -> FilterSpec:
        """Piecewise-linear filter through ``(lambda, value)`` samples, held flat outside them."""
        x = np.asarray(lambdas, dtype=np.float64)
        y = np.asarray(values, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1 or x.size == 0:
            raise ValueError("tabulated filter needs equal-length non-empty 1-D samples")
        order = np.argsort(x)
        x, y = x[order], y[order]
        return cls(name, lambda lam: np.interp(lam, x, y))


FILTERS = {
    "lowpass": FilterSpec("lowpass", lambda x: np.exp(-5.0 * x**2)),
    "highpass": FilterSpec("highpass", lambda x: 1.0 - np.exp(-5.0 * x**2)),
    "bandpass": FilterSpec("bandpass", lambda x: np.exp(-50.0 * (x - 1.0) ** 2)),
}


def get_filter(name: str) -> FilterSpec:
    if name not in FILTERS:
        raise ValueError(f"unknown filter {name!r}; choose from {sorted(FILTERS)}")
    return FILTERS[name]


# fitting -------------------------------------------------------------------------


def r_squared(target: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(np.sum((target - fitted) ** 2))
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else -math.inf
    return 1.0 - ss_res / ss_tot


def distinct_count(values: np.ndarray, tol: float = 1e-9) -> int:
    v = np.sort(values)
    return int(1 + np.count_nonzero(np.diff(v) > tol)) if v.size else 0


@dataclass
class FilterFit:
    filter: str
    degree: int
    coefficients: np.ndarray  # c_0 .. c_degree in powers of the Laplacian
    chebyshev: np.ndarray  # the same polynomial in Chebyshev form on [0, 2]
    matrix: np.ndarray  # sum_k c_k L_n^k
    r2: float
    rank_deficient: bool
    lambdas: np.ndarray
    target: np.ndarray
    response: np.ndarray

    def to_dict(self) -> dict:
        return {
            "filter": self.filter,
            "degree": self.degree,
            "coefficients": self.coefficients.tolist(),
            "r2": self.r2,
            "rank_deficient": self.rank_deficient,
        }

    def table(self) -> np.ndarray:
        """Rows of (lambda, target, response) for plotting elsewhere."""
        return np.column_stack([self.lambdas, self.target, self.response])


def fit_filter(g: Graph, spec: FilterSpec | str, degree: int, decomp: SpectralDecomp | None = None) -> FilterFit:
    """Least-squares polynomial in the normalized Laplacian approximating ``spec`` on its spectrum.

    ``r2`` is scored end to end: the polynomial matrix is assembled, its spectral
    response taken in the eigenbasis, and compared with the filter there.
    """
    if isinstance(spec, str):
        spec = get_filter(spec)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if decomp is None:
        decomp = decompose_laplacian(g, normalized=True)
    lam = decomp.lambdas
    if lam.shape[0] != g.n:
        raise ValueError("decomposition size does not match the graph")
    target = spec(lam)
    # least squares in the Chebyshev basis; the monomial Vandermonde is too ill-conditioned
    basis = np.polynomial.chebyshev.chebvander(lam - 1.0, degree)
    cheb = np.linalg.lstsq(basis, target, rcond=None)[0]
    coeffs = np.polynomial.Chebyshev(cheb, domain=[0.0, 2.0]).convert(kind=np.polynomial.Polynomial).coef
    coeffs = np.pad(coeffs, (0, degree + 1 - coeffs.size))
    rank_deficient = degree >= distinct_count(lam)
    matrix = np.array(ml.evaluate(chebyshev_expr(NORMALIZED_LAPLACIAN, cheb), g).matrix())
    response = spectral_response(matrix, decomp)
    r2 = r_squared(target, response)
    return FilterFit(spec.name, degree, coeffs, cheb, matrix, r2, rank_deficient, lam, target, response)
