"""Classical and quantum Fisher information and their upper bounds.

All quantum quantities are evaluated in the eigenbasis of the state. Eigenvalues
below ``tol`` (default :data:`SPECTRAL_TOL`) are treated as exact zeros, so the
SLD, the square-root Sylvester solution and the inverse are all restricted to
the numerical support of the state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ArgumentError,
    IncompatibleNSLDError,
    NotHermitianError,
    SingularDistributionError,
    UnboundedError,
)
from .qcore import (
    Measurement,
    check_density_matrix,
    check_hermitian,
    check_square,
    matrix_sqrt,
    spectral_decompose,
)

SPECTRAL_TOL = 1e-12
PROB_FLOOR = 1e-14
DPROB_FLOOR = 1e-12
DERIVATIVE_HERMITIAN_ATOL = 1e-8
NSLD_RESIDUAL_ATOL = 1e-6
LEAK_ATOL = 1e-8


@dataclass(frozen=True)
class ProbabilityVector:
    """Outcome probabilities and their parameter derivatives."""

    probs: np.ndarray
    dprobs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).ravel()
        dp = np.asarray(self.dprobs, dtype=float).ravel()
        if p.shape != dp.shape:
            raise ArgumentError(f"probs and dprobs differ in length ({p.size} vs {dp.size})")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(dp))):
            raise ArgumentError("probabilities must be finite")
        if np.any(p < 0):
            raise ArgumentError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ArgumentError(f"probabilities sum to {float(p.sum()):.12g}")
        # derivative sums carry finite-difference noise proportional to their size
        if abs(dp.sum()) > 1e-10 * max(1.0, float(np.abs(dp).sum())):
            raise ArgumentError(f"probability derivatives sum to {float(dp.sum()):.3g}")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "dprobs", dp)


def classical_fisher(pv: ProbabilityVector) -> float:
    """sum_i (dp_i)^2 / p_i over a discrete outcome set.

    Outcomes with p_i < 1e-14 are skipped if their derivative is also
    negligible; otherwise the information diverges and
    :class:`SingularDistributionError` is raised.
    """
    p, dp = pv.probs, pv.dprobs
    null = p < PROB_FLOOR
    if np.any(null & (np.abs(dp) >= DPROB_FLOOR)):
        raise SingularDistributionError("vanishing outcome probability with non-zero derivative")
    keep = ~null
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def check_derivative(drho, dim: int) -> np.ndarray:
    d = check_square(drho, "state derivative")
    if d.shape[0] != dim:
        raise ArgumentError(f"derivative has dimension {d.shape[0]}, state has {dim}")
    scale = max(1.0, float(np.max(np.abs(d))))
    if np.max(np.abs(d - d.conj().T)) > DERIVATIVE_HERMITIAN_ATOL * scale:
        raise NotHermitianError("state derivative is not Hermitian")
    return 0.5 * (d + d.conj().T)


def _eigenframe(rho, drho, tol):
    """Spectrum (with sub-``tol`` values zeroed) and drho in the eigenbasis."""
    rho = check_density_matrix(rho)
    d = check_derivative(drho, rho.shape[0])
    w, v = spectral_decompose(rho)
    tol = SPECTRAL_TOL if tol is None else tol
    if tol < 0:
        raise ArgumentError("tol must be non-negative")
    w = np.where(w < tol, 0.0, w)
    return w, v, v.conj().T @ d @ v


def solve_sld(rho, drho, tol: float | None = None) -> np.ndarray:
    """Symmetric logarithmic derivative L with d rho = (L rho + rho L) / 2.

    Blocks where both eigenvalues vanish get the minimal-norm choice L_mn = 0.
    """
    w, v, d = _eigenframe(rho, drho, tol)
    denom = w[:, None] + w[None, :]
    mask = denom > 0
    l_eig = np.zeros_like(d)
    l_eig[mask] = 2 * d[mask] / denom[mask]
    l_op = v @ l_eig @ v.conj().T
    return 0.5 * (l_op + l_op.conj().T)


def qfi(rho, drho, tol: float | None = None) -> float:
    """Quantum Fisher information Tr[rho L^2]."""
    w, _, d = _eigenframe(rho, drho, tol)
    denom = w[:, None] + w[None, :]
    mask = denom > 0
    return float(np.sum(2 * np.abs(d[mask]) ** 2 / denom[mask]))


def outcome_distribution(rho, drho, measurement) -> ProbabilityVector:
    rho = check_density_matrix(rho)
    d = check_derivative(drho, rho.shape[0])
    if not isinstance(measurement, Measurement):
        measurement = Measurement(tuple(measurement))
    p = np.array([np.trace(e @ rho).real for e in measurement.elements])
    dp = np.array([np.trace(e @ d).real for e in measurement.elements])
    # Born probabilities can come out as -1e-17
    p = np.where((p < 0) & (p > -1e-12), 0.0, p)
    return ProbabilityVector(p, dp)


def cfi_of_measurement(rho, drho, measurement) -> float:
    """Classical Fisher information of the outcome statistics of a POVM."""
    return classical_fisher(outcome_distribution(rho, drho, measurement))


def nsld_residual(rho, nsld, drho) -> float:
    """max |(L rho + rho L^dagger)/2 - drho|."""
    rho = check_density_matrix(rho)
    l_op = check_square(nsld, "nSLD")
    d = check_derivative(drho, rho.shape[0])
    r = 0.5 * (l_op @ rho + rho @ l_op.conj().T) - d
    return float(np.max(np.abs(r)))


def extended_qfi(rho, nsld, drho) -> float:
    """Tr[L rho L^dagger] for a (possibly non-Hermitian) SLD compatible with ``drho``."""
    rho = check_density_matrix(rho)
    l_op = check_square(nsld, "nSLD")
    if l_op.shape != rho.shape:
        raise ArgumentError("nSLD and state dimensions differ")
    res = nsld_residual(rho, l_op, drho)
    scale = max(1.0, float(np.max(np.abs(np.asarray(drho)))))
    if res > NSLD_RESIDUAL_ATOL * scale:
        raise IncompatibleNSLDError(f"nSLD relation residual {res:.3g} exceeds tolerance")
    return float(np.trace(l_op @ rho @ l_op.conj().T).real)


@dataclass(frozen=True)
class Purification:
    """rho = w w^dagger with w = sqrt(rho) U."""

    w: np.ndarray
    gauge: np.ndarray


def purify(rho, gauge=None) -> Purification:
    rho = check_density_matrix(rho)
    u = np.eye(rho.shape[0], dtype=complex) if gauge is None else check_square(gauge, "gauge")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
        raise ArgumentError("gauge must be unitary")
    return Purification(matrix_sqrt(rho) @ u, u)


def sqrt_derivative(rho, drho, tol: float | None = None) -> np.ndarray:
    """d sqrt(rho)/dx from sqrt(rho) S + S sqrt(rho) = d rho, solved in the eigenbasis."""
    w, v, d = _eigenframe(rho, drho, tol)
    s = np.sqrt(w)
    denom = s[:, None] + s[None, :]
    mask = denom > 0
    s_eig = np.zeros_like(d)
    s_eig[mask] = d[mask] / denom[mask]
    out = v @ s_eig @ v.conj().T
    return 0.5 * (out + out.conj().T)


def uhlmann_ext_qfi(rho, drho, tol: float | None = None) -> float:
    """4 Tr[(d sqrt(rho))^2], the extended QFI of the fixed-gauge purification."""
    w, _, d = _eigenframe(rho, drho, tol)
    s = np.sqrt(w)
    denom = s[:, None] + s[None, :]
    mask = denom > 0
    return float(4 * np.sum(np.abs(d[mask]) ** 2 / denom[mask] ** 2))


def skew_info_bound(rho, hamiltonian, tau: float) -> float:
    """-4 tau^2 Tr[[H, sqrt(rho)]^2], i.e. 8 tau^2 times the Wigner-Yanase skew information."""
    rho = check_density_matrix(rho)
    h = check_hermitian(hamiltonian, "Hamiltonian")
    s = matrix_sqrt(rho)
    c = h @ s - s @ h
    return float(max(0.0, -4 * tau ** 2 * np.trace(c @ c).real))


def inverse_quadratic_bound(rho, drho, tol: float | None = None) -> float:
    """Tr[rho^{-1} (d rho)^2] with the inverse taken on the support of rho.

    Raises :class:`UnboundedError` when ``drho`` has weight outside the support.
    """
    w, _, d = _eigenframe(rho, drho, tol)
    kernel = w == 0
    scale = max(1.0, float(np.max(np.abs(d))))
    if np.any(kernel) and np.max(np.abs(d[kernel, :])) > LEAK_ATOL * scale:
        raise UnboundedError("derivative leaves the support of the state; the bound diverges")
    support = ~kernel
    return float(np.sum(np.abs(d[support, :]) ** 2 / w[support, None]))


def sld_measurement(rho, drho, tol: float | None = None) -> Measurement:
    """Projective measurement onto the eigenvectors of the SLD."""
    _, vecs = np.linalg.eigh(solve_sld(rho, drho, tol))
    return Measurement.from_basis(vecs)


__all__ = [
    "ProbabilityVector", "Purification", "classical_fisher", "solve_sld", "qfi",
    "outcome_distribution", "cfi_of_measurement", "nsld_residual", "extended_qfi",
    "purify", "sqrt_derivative", "uhlmann_ext_qfi", "skew_info_bound",
    "inverse_quadratic_bound", "sld_measurement", "check_derivative", "SPECTRAL_TOL",
]

