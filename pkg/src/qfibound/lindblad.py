"""Markovian (GKLS) dynamics and closed-form extended-QFI bounds for its rates.

The generator is

    d rho / d tau = -i x0 [H, rho] + sum_a x_a (G_a rho G_a^dag - {G_a^dag G_a, rho} / 2).

When H and every jump operator commute, the derivatives of rho(tau) with
respect to x0 and to each rate x_a have closed forms, and so do the nSLDs
-2i tau (H - <H>) and tau (G rho G^dag rho^{-1} - G^dag G).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .exceptions import (
    ArgumentError,
    InstabilityError,
    PreconditionError,
    SingularStateError,
)
from .fisher import SPECTRAL_TOL, extended_qfi
from .qcore import check_density_matrix, check_hermitian, check_square, support_project

COMMUTE_ATOL = 1e-10
STEPS_PER_UNIT_TIME = 1000
MIN_STEPS = 1000
INSTABILITY_ATOL = 1e-6
LEAK_ATOL = 1e-8
NSLD_RESIDUAL_ATOL = 1e-7


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian ``H`` with rate ``x0``, jumps ``(G_a, x_a)`` and evolution time ``tau``."""

    hamiltonian: np.ndarray
    x0: float = 0.0
    jumps: tuple = ()
    tau: float = 0.0

    def __post_init__(self):
        h = check_hermitian(self.hamiltonian, "Hamiltonian")
        jumps = []
        for i, (g, rate) in enumerate(self.jumps):
            g = check_square(g, f"jump operator {i}")
            if g.shape != h.shape:
                raise ArgumentError(f"jump operator {i} has shape {g.shape}, Hamiltonian {h.shape}")
            rate = float(rate)
            if not math.isfinite(rate) or rate < 0:
                raise ArgumentError(f"jump rate {i} must be finite and non-negative")
            jumps.append((g, rate))
        if not math.isfinite(self.x0):
            raise ArgumentError("x0 must be finite")
        if not math.isfinite(self.tau) or self.tau < 0:
            raise ArgumentError("tau must be finite and non-negative")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(jumps))
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def operators(self) -> list[np.ndarray]:
        return [self.hamiltonian] + [g for g, _ in self.jumps]

    def with_rate(self, a: int, rate: float) -> "LindbladModel":
        jumps = list(self.jumps)
        jumps[a] = (jumps[a][0], rate)
        return replace(self, jumps=tuple(jumps))

    def with_rates(self, rate: float) -> "LindbladModel":
        return replace(self, jumps=tuple((g, rate) for g, _ in self.jumps))


def _dissipator(g: np.ndarray, rho: np.ndarray) -> np.ndarray:
    k = g.conj().T @ g
    return g @ rho @ g.conj().T - 0.5 * (k @ rho + rho @ k)


def _rhs(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    h = model.hamiltonian
    out = -1j * model.x0 * (h @ rho - rho @ h)
    for g, rate in model.jumps:
        if rate:
            out = out + rate * _dissipator(g, rho)
    return out


def lindblad_generate(model: LindbladModel, rho) -> np.ndarray:
    """Right-hand side of the master equation at ``rho``."""
    rho = check_density_matrix(rho)
    out = _rhs(model, rho)
    return 0.5 * (out + out.conj().T)


def time_nsld(model: LindbladModel, rho) -> np.ndarray:
    """-2i x0 H - sum_a x_a (G^dag G - G rho G^dag rho^{-1}), an nSLD for tau.

    Needs ``rho`` invertible on a support that holds every G rho G^dag.
    """
    rho = check_density_matrix(rho)
    pinv = _checked_pinv(rho, [g @ rho @ g.conj().T for g, _ in model.jumps])
    out = -2j * model.x0 * model.hamiltonian
    for g, rate in model.jumps:
        out = out - rate * (g.conj().T @ g - g @ rho @ g.conj().T @ pinv)
    return out


@dataclass(frozen=True)
class CommutationReport:
    """Frobenius norms of the pairwise commutators of ``[H, G_1, ..., G_k]``."""

    pairwise_norms: np.ndarray

    @property
    def is_commuting(self) -> bool:
        return bool(np.all(self.pairwise_norms <= COMMUTE_ATOL))

    def commutes_with_rest(self, index: int) -> bool:
        return bool(np.all(self.pairwise_norms[index] <= COMMUTE_ATOL))


def commutation_report(model: LindbladModel) -> CommutationReport:
    ops = model.operators
    n = len(ops)
    norms = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            c = ops[i] @ ops[j] - ops[j] @ ops[i]
            norms[i, j] = norms[j, i] = np.linalg.norm(c)
    return CommutationReport(norms)


def _joint_eigenbasis(ops: Sequence[np.ndarray]):
    """Unitary diagonalizing every operator in ``ops``, or None if there is none.

    A generic real combination of the Hermitian and anti-Hermitian parts of
    commuting normal operators has exactly their joint eigenspaces.
    """
    coeffs = np.random.default_rng(20140101).uniform(0.5, 1.5, size=(len(ops), 2))
    m = sum(c1 * (o + o.conj().T) / 2 + c2 * (o - o.conj().T) / 2j for (c1, c2), o in zip(coeffs, ops))
    _, v = np.linalg.eigh(m)
    diags = []
    for o in ops:
        t = v.conj().T @ o @ v
        off = t - np.diag(np.diag(t))
        if np.max(np.abs(off), initial=0.0) > 1e-10 * max(1.0, float(np.max(np.abs(o)))):
            return None
        diags.append(np.diag(t))
    return v, diags


def _evolve_diagonal(model: LindbladModel, rho0: np.ndarray, v, diags) -> np.ndarray:
    h = diags[0]
    exponent = -1j * model.x0 * (h[:, None] - h[None, :])
    for (_, rate), g in zip(model.jumps, diags[1:]):
        a = np.abs(g) ** 2
        exponent = exponent + rate * (g[:, None] * g.conj()[None, :] - 0.5 * (a[:, None] + a[None, :]))
    r = v.conj().T @ rho0 @ v
    return v @ (r * np.exp(model.tau * exponent)) @ v.conj().T


def _evolve_rk4(model: LindbladModel, rho0: np.ndarray) -> np.ndarray:
    steps = max(MIN_STEPS, math.ceil(STEPS_PER_UNIT_TIME * model.tau))
    dt = model.tau / steps
    rho = rho0.astype(complex)
    for _ in range(steps):
        k1 = _rhs(model, rho)
        k2 = _rhs(model, rho + 0.5 * dt * k1)
        k3 = _rhs(model, rho + 0.5 * dt * k2)
        k4 = _rhs(model, rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def evolve(model: LindbladModel, rho0) -> np.ndarray:
    """State at time ``model.tau``.

    Fully commuting models with normal operators use the exact elementwise
    solution in the joint eigenbasis; everything else uses fixed-step RK4
    with at least 1000 steps per unit time.
    """
    rho0 = check_density_matrix(rho0)
    if model.tau == 0:
        return rho0.copy()
    basis = _joint_eigenbasis(model.operators) if commutation_report(model).is_commuting else None
    if basis is not None:
        rho = _evolve_diagonal(model, rho0, *basis)
    else:
        rho = _evolve_rk4(model, rho0)
    rho = 0.5 * (rho + rho.conj().T)
    lam_min = float(np.linalg.eigvalsh(rho)[0])
    if lam_min < -INSTABILITY_ATOL or not np.all(np.isfinite(rho)):
        raise InstabilityError(f"evolution produced eigenvalue {lam_min:.3g}")
    return rho


def _require_commuting(model: LindbladModel, index: int | None = None) -> None:
    report = commutation_report(model)
    ok = report.is_commuting if index is None else report.commutes_with_rest(index)
    if not ok:
        raise PreconditionError("closed forms need commuting Hamiltonian and jump operators")


def _expect(op: np.ndarray, rho: np.ndarray) -> complex:
    return np.trace(op @ rho)


def drho_x0(model: LindbladModel, rho) -> np.ndarray:
    """-i tau [H - <H>, rho], the x0-derivative of rho(tau) for commuting models."""
    _require_commuting(model)
    rho = check_density_matrix(rho)
    h = model.hamiltonian
    out = -1j * model.tau * (h @ rho - rho @ h)
    return 0.5 * (out + out.conj().T)


def nsld_x0(model: LindbladModel, rho) -> np.ndarray:
    """-2i tau (H - <H>)."""
    _require_commuting(model)
    rho = check_density_matrix(rho)
    h = model.hamiltonian
    mean = _expect(h, rho).real
    return -2j * model.tau * (h - mean * np.eye(model.dim))


def ext_qfi_x0(model: LindbladModel, rho) -> float:
    """4 tau^2 Var_rho(H)."""
    _require_commuting(model)
    rho = check_density_matrix(rho)
    h = model.hamiltonian
    mean = _expect(h, rho).real
    return float(4 * model.tau ** 2 * (_expect(h @ h, rho).real - mean ** 2))


def _jump(model: LindbladModel, a: int) -> np.ndarray:
    if not 0 <= a < len(model.jumps):
        raise ArgumentError(f"jump index {a} out of range for {len(model.jumps)} jumps")
    _require_commuting(model, a + 1)
    return model.jumps[a][0]


def drho_xa(model: LindbladModel, rho, a: int) -> np.ndarray:
    """tau (G rho G^dag - {G^dag G, rho}/2), the x_a-derivative of rho(tau)."""
    g = _jump(model, a)
    rho = check_density_matrix(rho)
    out = model.tau * _dissipator(g, rho)
    return 0.5 * (out + out.conj().T)


def _checked_pinv(rho: np.ndarray, must_fit: Sequence[np.ndarray]) -> np.ndarray:
    sp = support_project(rho, SPECTRAL_TOL)
    proj = sp.pinv @ rho
    for m in must_fit:
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - proj @ m)) > LEAK_ATOL * scale:
            raise SingularStateError("operator leaves the support of the state; rho^{-1} is undefined there")
    return sp.pinv


def nsld_xa(model: LindbladModel, rho, a: int) -> np.ndarray:
    """tau (G rho G^dag rho^{-1} - G^dag G) with the inverse taken on the support."""
    g = _jump(model, a)
    rho = check_density_matrix(rho)
    x = g @ rho @ g.conj().T
    pinv = _checked_pinv(rho, [x, drho_xa(model, rho, a)])
    l_op = model.tau * (x @ pinv - g.conj().T @ g)
    residual = 0.5 * (l_op @ rho + rho @ l_op.conj().T) - drho_xa(model, rho, a)
    if np.max(np.abs(residual)) > NSLD_RESIDUAL_ATOL * max(1.0, model.tau):
        raise SingularStateError("jump nSLD does not reproduce the rate derivative on this state")
    return l_op


def ext_qfi_xa(model: LindbladModel, rho, a: int) -> float:
    """tau^2 (<(G^dag G)^2> - 2 <G^dag^2 G^2> + Tr[rho^{-1} (G rho G^dag)^2])."""
    g = _jump(model, a)
    rho = check_density_matrix(rho)
    x = g @ rho @ g.conj().T
    pinv = _checked_pinv(rho, [x, drho_xa(model, rho, a)])
    k = g.conj().T @ g
    gd = g.conj().T
    val = _expect(k @ k, rho) - 2 * _expect(gd @ gd @ g @ g, rho) + np.trace(pinv @ x @ x)
    return float(model.tau ** 2 * val.real)


def drho_shared_rate(model: LindbladModel, rho, indices: Sequence[int]) -> np.ndarray:
    """Derivative with respect to one rate shared by the jumps in ``indices``."""
    return sum(drho_xa(model, rho, a) for a in indices)


def ext_qfi_shared_rate(model: LindbladModel, rho, indices: Sequence[int]) -> float:
    """Extended QFI of the summed jump nSLDs for a rate shared by several jumps."""
    indices = list(indices)
    if not indices:
        raise ArgumentError("need at least one jump index")
    l_op = sum(nsld_xa(model, rho, a) for a in indices)
    return extended_qfi(rho, l_op, drho_shared_rate(model, rho, indices))


__all__ = [
    "LindbladModel", "CommutationReport", "lindblad_generate", "time_nsld", "evolve",
    "commutation_report", "drho_x0", "nsld_x0", "ext_qfi_x0", "drho_xa", "nsld_xa",
    "ext_qfi_xa", "drho_shared_rate", "ext_qfi_shared_rate",
]
