"""Extended-convexity bound for ensembles and its Kraus-channel form.

For a mixture rho = sum_a p_a rho_a the QFI is bounded by

    F_conv = sum_a p_a F_Q(rho_a) + F_C({p_a})

(a "quantum" average plus the "classical" Fisher information of the weights).
For a channel with Kraus operators A_a the branch nSLDs 2 dA_a A_a^{-1} + i eta
turn this into a closed quadratic in a single real eta, minimized at
eta* = 2 <H2> with H1 = sum dA^dag dA and H2 = i sum A^dag dA.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .exceptions import ArgumentError, InconsistentDerivativeError
from .fisher import ProbabilityVector, classical_fisher, qfi
from .qcore import (
    DEFAULT_FD_STEP,
    KrausChannel,
    Spectral,
    check_density_matrix,
    check_hermitian,
    unitary_evolution,
)

BRANCH_FLOOR = 1e-14
COMPLETENESS_DERIVATIVE_ATOL = 1e-6
DEGENERACY_ATOL = 1e-10


class EnsemblePoint(NamedTuple):
    weights: np.ndarray
    states: list
    dweights: np.ndarray
    dstates: list


@dataclass(frozen=True)
class Ensemble:
    """Parameter-dependent mixture ``x -> ({p_a(x)}, {rho_a(x)})``.

    Missing derivative callables fall back to central differences with
    ``fd_step``.
    """

    weights: Callable[[float], Sequence[float]]
    states: Callable[[float], Sequence[np.ndarray]]
    weight_derivatives: Callable[[float], Sequence[float]] | None = None
    state_derivatives: Callable[[float], Sequence[np.ndarray]] | None = None
    fd_step: float = DEFAULT_FD_STEP

    def at(self, x: float) -> EnsemblePoint:
        p = np.asarray(self.weights(x), dtype=float).ravel()
        states = [np.asarray(r, dtype=complex) for r in self.states(x)]
        if len(states) != p.size:
            raise ArgumentError(f"{p.size} weights but {len(states)} states")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ArgumentError("ensemble weights must be non-negative and sum to one")
        h = self.fd_step
        if self.weight_derivatives is not None:
            dp = np.asarray(self.weight_derivatives(x), dtype=float).ravel()
        else:
            dp = (np.asarray(self.weights(x + h), float) - np.asarray(self.weights(x - h), float)) / (2 * h)
        if self.state_derivatives is not None:
            ds = [np.asarray(d, dtype=complex) for d in self.state_derivatives(x)]
        else:
            plus, minus = self.states(x + h), self.states(x - h)
            ds = [(np.asarray(a, complex) - np.asarray(b, complex)) / (2 * h) for a, b in zip(plus, minus)]
        ds = [0.5 * (d + d.conj().T) for d in ds]
        states = [s if w < BRANCH_FLOOR else check_density_matrix(s) for s, w in zip(states, p)]
        return EnsemblePoint(p, states, dp, ds)

    def mixture(self, x: float) -> np.ndarray:
        pt = self.at(x)
        return check_density_matrix(sum(w * s for w, s in zip(pt.weights, pt.states)))

    def mixture_derivative(self, x: float) -> np.ndarray:
        pt = self.at(x)
        return sum(dw * s + w * d for w, dw, s, d in zip(pt.weights, pt.dweights, pt.states, pt.dstates))


class ConvBound(NamedTuple):
    classical: float
    quantum: float

    @property
    def total(self) -> float:
        return self.classical + self.quantum


def split_f_conv(ens: Ensemble, x: float, tol: float | None = None) -> ConvBound:
    """Classical (weight) and quantum (average branch QFI) parts of the bound."""
    pt = ens.at(x)
    classical = classical_fisher(ProbabilityVector(pt.weights, pt.dweights))
    quantum = 0.0
    for w, s, d in zip(pt.weights, pt.states, pt.dstates):
        if w >= BRANCH_FLOOR:
            quantum += w * qfi(s, d, tol)
    return ConvBound(classical, quantum)


def f_conv(ens: Ensemble, x: float, tol: float | None = None) -> float:
    """Extended-convexity upper bound on the QFI of the mixture."""
    return split_f_conv(ens, x, tol).total


def channel_ensemble(ch: KrausChannel, rho0, x: float) -> Ensemble:
    """Branch ensemble p_a = Tr[A_a rho0 A_a^dag], rho_a = A_a rho0 A_a^dag / p_a.

    Branches with p_a < 1e-14 at ``x`` are dropped; the kept index set is then
    fixed for evaluations at nearby parameter values.
    """
    rho0 = check_density_matrix(rho0)
    ops = ch.operators(x)
    kept = [i for i, a in enumerate(ops)
            if np.trace(a @ rho0 @ a.conj().T).real >= BRANCH_FLOOR]

    def branches(y):
        a_all = ch.operators(y)
        sig = [a_all[i] @ rho0 @ a_all[i].conj().T for i in kept]
        p = np.array([np.trace(s).real for s in sig])
        return a_all, sig, p

    def weights(y):
        return branches(y)[2]

    def states(y):
        _, sig, p = branches(y)
        return [s / w for s, w in zip(sig, p)]

    def _derivs(y):
        a_all, sig, p = branches(y)
        da_all = ch.derivatives(y)
        dsig = []
        for i in kept:
            t = da_all[i] @ rho0 @ a_all[i].conj().T
            dsig.append(t + t.conj().T)
        dp = np.array([np.trace(t).real for t in dsig])
        return sig, p, dsig, dp

    def weight_derivatives(y):
        return _derivs(y)[3]

    def state_derivatives(y):
        sig, p, dsig, dp = _derivs(y)
        return [(ds - dw * s / w) / w for s, w, ds, dw in zip(sig, p, dsig, dp)]

    return Ensemble(weights, states, weight_derivatives, state_derivatives, ch.fd_step)


@dataclass(frozen=True)
class ChannelBoundTerms:
    """<H1>, <H2> in the input state and the minimizing eta."""

    h1: float
    h2: float
    eta_star: float

    @property
    def bound(self) -> float:
        return 4 * (self.h1 - self.h2 ** 2)


def _channel_moments(ch: KrausChannel, rho0, x: float):
    rho0 = check_density_matrix(rho0)
    ops = ch.operators(x)
    dops = ch.derivatives(x)
    if len(dops) != len(ops):
        raise ArgumentError("Kraus derivative count differs from Kraus count")
    defect = sum(da.conj().T @ a + a.conj().T @ da for a, da in zip(ops, dops))
    if np.linalg.norm(defect) > COMPLETENESS_DERIVATIVE_ATOL:
        raise InconsistentDerivativeError(
            f"Kraus derivatives break trace preservation (defect {np.linalg.norm(defect):.3g})")
    h1 = sum(np.trace(da.conj().T @ da @ rho0) for da in dops)
    g = sum(np.trace(a.conj().T @ da @ rho0) for a, da in zip(ops, dops))
    return complex(h1), complex(g)


def channel_bound_eta(ch: KrausChannel, rho0, x: float, eta):
    """sum_a 4(<dA^dag dA> - i eta <A^dag dA>) + eta^2 for a scalar or array ``eta``."""
    h1, g = _channel_moments(ch, rho0, x)
    eta = np.asarray(eta, dtype=float)
    val = 4 * (h1 - 1j * eta * g) + eta ** 2
    if np.max(np.abs(np.imag(val))) > 1e-10 * max(1.0, float(np.max(np.abs(val)))):
        raise InconsistentDerivativeError("channel bound has a non-negligible imaginary part")
    val = np.real(val)
    return float(val) if val.ndim == 0 else val


def channel_bound_terms(ch: KrausChannel, rho0, x: float) -> ChannelBoundTerms:
    h1, g = _channel_moments(ch, rho0, x)
    h2 = (1j * g).real
    return ChannelBoundTerms(h1.real, h2, 2 * h2)


def channel_bound_min(ch: KrausChannel, rho0, x: float) -> tuple[ChannelBoundTerms, float]:
    """Minimum over eta of :func:`channel_bound_eta`: 4(<H1> - <H2>^2)."""
    terms = channel_bound_terms(ch, rho0, x)
    return terms, terms.bound


def _rotate_degenerate_blocks(spec: Spectral, h: np.ndarray) -> np.ndarray:
    """Eigenvectors with H diagonalized inside each degenerate eigenspace."""
    w, v = spec.eigenvalues, spec.eigenvectors.copy()
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and abs(w[stop] - w[start]) <= DEGENERACY_ATOL:
            stop += 1
        if stop - start > 1:
            block = v[:, start:stop]
            _, u = np.linalg.eigh(block.conj().T @ h @ block)
            v[:, start:stop] = block @ u
        start = stop
    return v


def unitary_fconv(spec: Spectral, hamiltonian, tau: float) -> float:
    """4 tau^2 sum_a lambda_a Var_a(H) over the spectral decomposition of rho0.

    Inside a degenerate eigenspace the basis diagonalizing H is used, which
    gives the smallest value among the spectral decompositions.
    """
    h = check_hermitian(hamiltonian, "Hamiltonian")
    v = _rotate_degenerate_blocks(spec, h)
    total = 0.0
    for lam, vec in zip(spec.eigenvalues, v.T):
        if lam <= BRANCH_FLOOR:
            continue
        hv = h @ vec
        mean = np.vdot(vec, hv).real
        total += lam * (np.vdot(hv, hv).real - mean ** 2)
    return 4 * tau ** 2 * total


def unitary_ensemble(spec: Spectral, hamiltonian, tau: float) -> Ensemble:
    """Spectral ensemble of rho0 carried along by exp(-i x tau H)."""
    h = check_hermitian(hamiltonian, "Hamiltonian")
    v = _rotate_degenerate_blocks(spec, h)
    keep = spec.eigenvalues > BRANCH_FLOOR
    lam = spec.eigenvalues[keep] / spec.eigenvalues[keep].sum()
    projectors = [np.outer(c, c.conj()) for c in v[:, keep].T]

    def states(x):
        u = unitary_evolution(h, x * tau)
        return [u @ p @ u.conj().T for p in projectors]

    def state_derivatives(x):
        return [-1j * tau * (h @ s - s @ h) for s in states(x)]

    return Ensemble(lambda x: lam, states, lambda x: np.zeros_like(lam), state_derivatives)


__all__ = [
    "Ensemble", "EnsemblePoint", "ConvBound", "ChannelBoundTerms", "f_conv", "split_f_conv",
    "channel_ensemble", "channel_bound_eta", "channel_bound_terms", "channel_bound_min",
    "unitary_fconv", "unitary_ensemble",
]
