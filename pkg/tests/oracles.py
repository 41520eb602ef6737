"""Independent reference computations and random generators for the tests.

Nothing here calls into the eigenbasis code paths of the package: the SLD is
obtained from a vectorized linear solve and pure-state quantities from
state-vector formulas.
"""
from __future__ import annotations

import numpy as np

PLUS = np.full((2, 2), 0.5, dtype=complex)


def phase_drho(rho: np.ndarray, h: np.ndarray, tau: float) -> np.ndarray:
    """Derivative of exp(-i x tau H) rho exp(i x tau H) at x = 0."""
    return -1j * tau * (h @ rho - rho @ h)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (z + z.conj().T) / 2


def random_state(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_ket(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def sld_lyapunov(rho: np.ndarray, drho: np.ndarray) -> np.ndarray:
    """Solve rho L + L rho = 2 drho as a d^2 linear system (full-rank rho)."""
    d = rho.shape[0]
    eye = np.eye(d)
    op = np.kron(rho, eye) + np.kron(eye, rho.T)
    vec = np.linalg.solve(op, 2 * drho.reshape(-1))
    return vec.reshape(d, d)


def qfi_lyapunov(rho: np.ndarray, drho: np.ndarray) -> float:
    l_op = sld_lyapunov(rho, drho)
    return float(np.trace(rho @ l_op @ l_op).real)


def qfi_pure(psi: np.ndarray, dpsi: np.ndarray) -> float:
    """4(<dpsi|dpsi> - |<psi|dpsi>|^2)."""
    return float(4 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi, dpsi)) ** 2))


def variance(h: np.ndarray, psi: np.ndarray) -> float:
    hv = h @ psi
    return float(np.vdot(hv, hv).real - np.vdot(psi, hv).real ** 2)


def expm_taylor(a: np.ndarray, terms: int = 60) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a Taylor series."""
    norm = max(1.0, float(np.linalg.norm(a, 1)))
    k = int(np.ceil(np.log2(norm))) + 1
    b = a / 2 ** k
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for j in range(1, terms):
        term = term @ b / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def random_smooth_ensemble(rng: np.random.Generator, d: int, k: int):
    """Softmax weights and unitarily rotated random states, with exact derivatives.

    Returns (weights, states, dweights, dstates) as callables of x.
    """
    from qfibound.qcore import unitary_evolution

    a, b = rng.normal(size=k), rng.normal(size=k)
    bases = [random_state(rng, d, rank=int(rng.integers(1, d + 1))) for _ in range(k)]
    hams = [random_hermitian(rng, d) for _ in range(k)]

    def weights(x):
        z = np.exp(a + b * x - np.max(a + b * x))
        return z / z.sum()

    def dweights(x):
        p = weights(x)
        return p * (b - np.dot(p, b))

    def states(x):
        out = []
        for s, h in zip(bases, hams):
            u = unitary_evolution(h, x)
            out.append(u @ s @ u.conj().T)
        return out

    def dstates(x):
        return [-1j * (h @ s - s @ h) for s, h in zip(states(x), hams)]

    return weights, states, dweights, dstates
