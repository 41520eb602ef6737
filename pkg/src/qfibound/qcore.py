"""Dense complex-matrix foundation: states, channels, spectra and derivatives.

Everything here works on plain ``numpy`` arrays. The small wrapper types
(:class:`DensityMatrix`, :class:`ParamFamily`, :class:`KrausChannel`,
:class:`Measurement`) validate on construction and are otherwise inert, so
functions accept either the wrapper or a raw array.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .exceptions import (
    ArgumentError,
    InvalidChannelError,
    InvalidMeasurementError,
    MalformedInputError,
    NonFiniteError,
    NonSquareError,
    NotHermitianError,
    NotPSDError,
    TraceViolationError,
    ZeroRankError,
)

HERMITIAN_RTOL = 1e-12
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10
COMPLETENESS_ATOL = 1e-8
DEFAULT_FD_STEP = 1e-5

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def check_square(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite square complex array or raise."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise NonSquareError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return arr


def hermitian_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(a, name: str = "operator", rtol: float = HERMITIAN_RTOL,
                    atol: float = 0.0) -> np.ndarray:
    """Validate Hermiticity to ``rtol * max|a| + atol`` and return the symmetrized array."""
    arr = check_square(a, name)
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    if hermitian_defect(arr) > rtol * scale + atol:
        raise NotHermitianError(f"{name} is not Hermitian (defect {hermitian_defect(arr):.3g})")
    return 0.5 * (arr + arr.conj().T)


def check_density_matrix(rho) -> np.ndarray:
    """Validate a state and return it as a Hermitian complex ndarray."""
    if isinstance(rho, DensityMatrix):
        return rho.data
    arr = check_square(rho, "state")
    scale = float(np.max(np.abs(arr)))
    if hermitian_defect(arr) > HERMITIAN_RTOL * scale:
        raise NotHermitianError(f"state is not Hermitian (defect {hermitian_defect(arr):.3g})")
    arr = 0.5 * (arr + arr.conj().T)
    tr = np.trace(arr).real
    if abs(tr - 1.0) > TRACE_ATOL:
        raise TraceViolationError(f"state trace is {float(tr):.12g}, expected 1")
    lam_min = float(np.linalg.eigvalsh(arr)[0])
    if lam_min < -PSD_ATOL:
        raise NotPSDError(f"state has negative eigenvalue {lam_min:.3g}")
    return arr


@dataclass(frozen=True)
class DensityMatrix:
    """Positive semidefinite unit-trace Hermitian matrix."""

    data: np.ndarray

    def __post_init__(self):
        arr = check_density_matrix(np.array(self.data, dtype=complex))
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


# ---------------------------------------------------------------------------
# spectral machinery
# ---------------------------------------------------------------------------

class Spectral(NamedTuple):
    """Eigenvalues in descending order and matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _eigh_descending(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(a)
    return w[::-1].copy(), v[:, ::-1].copy()


def spectral_decompose(rho) -> Spectral:
    """Eigendecomposition of a state, eigenvalues descending.

    Eigenvalues within ``PSD_ATOL`` below zero are clipped to zero and the
    spectrum is clipped to at most one.
    """
    arr = check_density_matrix(rho)
    w, v = _eigh_descending(arr)
    w = np.clip(w, 0.0, 1.0)
    return Spectral(w, v)


def matrix_sqrt(rho) -> np.ndarray:
    """Positive square root of a state."""
    w, v = spectral_decompose(rho)
    return (v * np.sqrt(w)) @ v.conj().T


class SupportProjection(NamedTuple):
    projected: np.ndarray
    rank: int
    pinv: np.ndarray


def default_support_tol(eigenvalues: np.ndarray) -> float:
    d = len(eigenvalues)
    return d * np.finfo(float).eps * float(np.max(eigenvalues))


def support_project(rho, tol: float | None = None) -> SupportProjection:
    """Restrict a state to the span of its eigenvalues ``>= tol``.

    Returns the renormalized restricted state, the rank and the Moore-Penrose
    inverse on that support.
    """
    w, v = spectral_decompose(rho)
    if tol is None:
        tol = default_support_tol(w)
    if tol < 0:
        raise ArgumentError("tol must be non-negative")
    keep = w >= tol if tol > 0 else w > 0
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        raise ZeroRankError("every eigenvalue is below the support tolerance")
    vs, ws = v[:, keep], w[keep]
    projected = (vs * (ws / ws.sum())) @ vs.conj().T
    pinv = (vs / ws) @ vs.conj().T
    return SupportProjection(projected, rank, pinv)


def tensor_product(ops: Sequence) -> np.ndarray:
    """Kronecker product of a non-empty sequence of matrices or vectors."""
    ops = list(ops)
    if not ops:
        raise ArgumentError("tensor_product needs at least one factor")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def unitary_evolution(hamiltonian, t: float) -> np.ndarray:
    """exp(-i t H) for Hermitian H."""
    h = check_hermitian(hamiltonian, "Hamiltonian")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def ghz_ket(n: int) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return psi


def plus_ket() -> np.ndarray:
    return np.array([1, 1], dtype=complex) / math.sqrt(2)


# ---------------------------------------------------------------------------
# parameter families and derivatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamFamily:
    """A map ``x -> rho(x)`` with an optional analytic derivative."""

    evaluate: Callable[[float], np.ndarray]
    derivative: Callable[[float], np.ndarray] | None = None
    fd_step: float = DEFAULT_FD_STEP

    def __call__(self, x: float) -> np.ndarray:
        return check_density_matrix(self.evaluate(x))


def central_difference(f: Callable[[float], np.ndarray], x: float,
                       h: float = DEFAULT_FD_STEP) -> np.ndarray:
    return (np.asarray(f(x + h), dtype=complex) - np.asarray(f(x - h), dtype=complex)) / (2 * h)


def param_derivative(family: ParamFamily, x: float) -> np.ndarray:
    """d rho / dx, analytic when available, else a central difference.

    The result is Hermitian-symmetrized.
    """
    if family.derivative is not None:
        d = np.asarray(family.derivative(x), dtype=complex)
    else:
        if family.fd_step <= 0:
            raise ArgumentError("fd_step must be positive")
        d = central_difference(family.evaluate, x, family.fd_step)
    return 0.5 * (d + d.conj().T)


# ---------------------------------------------------------------------------
# channels and measurements
# ---------------------------------------------------------------------------

def completeness_defect(kraus: Sequence[np.ndarray]) -> float:
    d = kraus[0].shape[1]
    s = sum(a.conj().T @ a for a in kraus)
    return float(np.max(np.abs(s - np.eye(d))))


@dataclass(frozen=True)
class KrausChannel:
    """Parameter-dependent channel ``x -> [A_1(x), ..., A_k(x)]``."""

    kraus: Callable[[float], Sequence[np.ndarray]]
    kraus_derivative: Callable[[float], Sequence[np.ndarray]] | None = None
    fd_step: float = DEFAULT_FD_STEP

    def operators(self, x: float) -> list[np.ndarray]:
        ops = [np.asarray(a, dtype=complex) for a in self.kraus(x)]
        if not ops:
            raise InvalidChannelError("channel has no Kraus operators")
        defect = completeness_defect(ops)
        if defect > COMPLETENESS_ATOL:
            raise InvalidChannelError(f"Kraus completeness violated by {defect:.3g}")
        return ops

    def derivatives(self, x: float) -> list[np.ndarray]:
        if self.kraus_derivative is not None:
            return [np.asarray(a, dtype=complex) for a in self.kraus_derivative(x)]
        h = self.fd_step
        plus = [np.asarray(a, dtype=complex) for a in self.kraus(x + h)]
        minus = [np.asarray(a, dtype=complex) for a in self.kraus(x - h)]
        return [(p - m) / (2 * h) for p, m in zip(plus, minus)]

    def count(self, x: float = 0.0) -> int:
        return len(self.operators(x))

    @classmethod
    def constant(cls, kraus: Sequence) -> "KrausChannel":
        ops = [np.asarray(a, dtype=complex) for a in kraus]
        zeros = [np.zeros_like(a) for a in ops]
        return cls(lambda x: ops, lambda x: zeros)


def channel_tensor_power(channel: KrausChannel, n: int) -> KrausChannel:
    """n independent copies of a channel; Kraus derivatives by the product rule."""
    if n < 1:
        raise ArgumentError("n must be at least 1")

    def kraus(x):
        ops = channel.operators(x)
        return [tensor_product(c) for c in itertools.product(ops, repeat=n)]

    def kraus_derivative(x):
        ops, dops = channel.operators(x), channel.derivatives(x)
        out = []
        for idx in itertools.product(range(len(ops)), repeat=n):
            terms = [
                tensor_product([dops[i] if j == slot else ops[i] for j, i in enumerate(idx)])
                for slot in range(n)
            ]
            out.append(sum(terms))
        return out

    return KrausChannel(kraus, kraus_derivative, channel.fd_step)


def apply_channel(channel: KrausChannel, rho0, x: float) -> np.ndarray:
    """sum_a A_a(x) rho0 A_a(x)^dagger."""
    rho0 = check_density_matrix(rho0)
    out = sum(a @ rho0 @ a.conj().T for a in channel.operators(x))
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True)
class Measurement:
    """Discrete POVM: positive elements summing to the identity."""

    elements: tuple

    def __post_init__(self):
        els = []
        for i, e in enumerate(self.elements):
            e = check_hermitian(e, f"POVM element {i}", atol=1e-12)
            if np.linalg.eigvalsh(e)[0] < -PSD_ATOL:
                raise InvalidMeasurementError(f"POVM element {i} is not positive")
            e.setflags(write=False)
            els.append(e)
        if not els:
            raise InvalidMeasurementError("measurement has no elements")
        total = sum(els)
        if np.max(np.abs(total - np.eye(total.shape[0]))) > PSD_ATOL:
            raise InvalidMeasurementError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", tuple(els))

    @classmethod
    def from_basis(cls, vectors: np.ndarray) -> "Measurement":
        """Projective measurement onto the columns of a unitary."""
        return cls(tuple(np.outer(v, v.conj()) for v in np.asarray(vectors).T))


# ---------------------------------------------------------------------------
# matrix file format
# ---------------------------------------------------------------------------

def matrix_to_json(a) -> dict:
    """``{"dim": d, "data": [[[re, im], ...], ...]}`` row-major."""
    arr = check_square(a)
    return {
        "dim": int(arr.shape[0]),
        "data": [[[float(z.real), float(z.imag)] for z in row] for row in arr],
    }


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "data" not in obj:
        raise MalformedInputError("matrix object needs a 'data' field")
    rows = obj["data"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise MalformedInputError("'data' must be a list of rows")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise NonSquareError(f"matrix data is not square ({n} rows, row lengths {sorted({len(r) for r in rows})})")
    if "dim" in obj and obj["dim"] != n:
        raise NonSquareError(f"declared dim {obj['dim']} does not match {n} rows")
    try:
        arr = np.array([[complex(float(e[0]), float(e[1])) for e in r] for r in rows])
    except (TypeError, ValueError, IndexError) as exc:
        raise MalformedInputError(f"entries must be [re, im] pairs: {exc}") from None
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("matrix has non-finite entries")
    return arr


def dump_matrix(a, path) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_json(a), fh)


def load_matrix(path) -> np.ndarray:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: {exc}") from None
    return matrix_from_json(obj)


__all__ = [
    "DensityMatrix", "Spectral", "SupportProjection", "ParamFamily", "KrausChannel",
    "Measurement", "check_square", "check_hermitian", "check_density_matrix",
    "spectral_decompose", "matrix_sqrt", "support_project", "tensor_product",
    "param_derivative", "apply_channel", "channel_tensor_power", "matrix_to_json", "matrix_from_json",
    "dump_matrix", "load_matrix", "unitary_evolution", "ket_to_dm", "ghz_ket", "plus_ket",
    "SIGMA_X", "SIGMA_Y", "SIGMA_Z", "I2",
]
