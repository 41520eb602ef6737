"""Worked examples: a GHZ probe under a lossy phase channel, and dephasing-rate estimation.

The lossy phase channel uses the single-qubit Kraus pair

    A1 = (sqrt(q) cos(a x) + i sqrt(1-q) sin(a x) Z) exp(i x tau Z / 2)
    A2 = (i sqrt(q) sin(a x) + sqrt(1-q) cos(a x) Z) exp(i x tau Z / 2)

on each of N probes prepared in a GHZ state. Both operators are diagonal with
|A_a|^2 proportional to the identity, which gives two exact reductions used
here and checked against dense 2^N-dimensional computations in the tests:

* the 2^N branches of the extended-convexity bound collapse to N + 1 binomial
  classes (number of A2 applications), each holding a balanced GHZ-like pure
  state whose QFI is the squared derivative of its relative phase;
* the output state lives in span{|0...0>, |1...1>}, so the exact QFI is that
  of a 2x2 family.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from typing import IO, Iterable, Literal, NamedTuple

import numpy as np

from .exceptions import (
    ArgumentError,
    DivergentBoundError,
    DivergentThresholdError,
    SingularDistributionError,
)
from .fisher import qfi
from .lindblad import LindbladModel
from .qcore import (
    I2,
    SIGMA_Z,
    KrausChannel,
    ghz_ket,
    ket_to_dm,
    plus_ket,
    tensor_product,
)


# ---------------------------------------------------------------------------
# GHZ probes under the lossy phase channel
# ---------------------------------------------------------------------------

def _check_q(q: float) -> None:
    if not 0.0 <= q <= 1.0:
        raise ArgumentError(f"q must lie in [0, 1], got {q}")


def example1_kraus_diagonals(q: float, alpha: float, tau: float, x: float):
    """Diagonals of A1, A2 and of their x-derivatives, shape (2, 2) each."""
    _check_q(q)
    sq, sr = math.sqrt(q), math.sqrt(1 - q)
    c, s = math.cos(alpha * x), math.sin(alpha * x)
    z = np.array([1.0, -1.0])
    phase = np.exp(1j * x * tau * z / 2)
    dphase = 1j * tau * z / 2 * phase
    pre1 = sq * c + 1j * sr * s * z
    pre2 = 1j * sq * s + sr * c * z
    dpre1 = alpha * (-sq * s + 1j * sr * c * z)
    dpre2 = alpha * (1j * sq * c - sr * s * z)
    ops = np.array([pre1 * phase, pre2 * phase])
    dops = np.array([dpre1 * phase + pre1 * dphase, dpre2 * phase + pre2 * dphase])
    return ops, dops


def example1_channel(q: float, alpha: float, tau: float) -> KrausChannel:
    """Single-qubit lossy phase channel with analytic derivatives."""
    _check_q(q)

    def kraus(x):
        return [np.diag(d) for d in example1_kraus_diagonals(q, alpha, tau, x)[0]]

    def kraus_derivative(x):
        return [np.diag(d) for d in example1_kraus_diagonals(q, alpha, tau, x)[1]]

    return KrausChannel(kraus, kraus_derivative)


class Coefficients(NamedTuple):
    c1: float
    c2: float


def example1_coeffs(alpha: float, q: float, tau: float) -> Coefficients:
    """F_conv = c1 N + c2 N^2 with

    c1 = 4 a^2 (1 - 4q(1-q)),  c2 = tau^2 + 8 tau a sqrt(q(1-q)) + 16 a^2 q(1-q).

    c1 is never negative; c2 = (tau + 4 a sqrt(q(1-q)))^2 is also non-negative.
    """
    _check_q(q)
    s = q * (1 - q)
    c1 = 4 * alpha ** 2 * (1 - 4 * s)
    c2 = tau ** 2 + 8 * tau * alpha * math.sqrt(s) + 16 * alpha ** 2 * s
    return Coefficients(c1, c2)


def example1_alpha_opt(n: int, q: float, tau: float) -> float:
    """alpha minimizing c1 N + c2 N^2: -N sqrt(q(1-q)) tau / (1 + 4q(1-q)(N-1))."""
    _check_q(q)
    if n < 1:
        raise ArgumentError("n must be at least 1")
    s = q * (1 - q)
    return -(n * math.sqrt(s) * tau) / (1 + 4 * s * (n - 1))


def example1_threshold(q: float) -> float:
    """Probe number N* = (1 - 2q)^2 / (4 q (1 - q)) where the two parts cross."""
    _check_q(q)
    if q in (0.0, 1.0):
        raise DivergentThresholdError("threshold diverges for q = 0 or q = 1")
    return (1 - 2 * q) ** 2 / (4 * q * (1 - q))


@dataclass(frozen=True)
class Example1Config:
    q: float
    tau: float
    x: float
    n: int
    alpha: float | Literal["optimal"] = "optimal"

    def __post_init__(self):
        _check_q(self.q)
        if self.tau < 0:
            raise ArgumentError("tau must be non-negative")
        if int(self.n) != self.n or self.n < 1:
            raise ArgumentError("n must be a positive integer")
        if self.alpha != "optimal" and not math.isfinite(float(self.alpha)):
            raise ArgumentError("alpha must be finite or 'optimal'")

    def resolved_alpha(self) -> float:
        if self.alpha == "optimal":
            return example1_alpha_opt(self.n, self.q, self.tau)
        return float(self.alpha)

    def with_n(self, n: int) -> "Example1Config":
        return Example1Config(self.q, self.tau, self.x, n, self.alpha)


class Example1Bound(NamedTuple):
    f_conv: float
    f_classical: float
    f_quantum: float


def _log_binomial_pmf(n: int, k: np.ndarray, logp1: float, logp2: float) -> np.ndarray:
    lg = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in k])
    return lg + (n - k) * logp1 + k * logp2


def example1_fconv(cfg: Example1Config) -> Example1Bound:
    """Extended-convexity bound for the N-probe GHZ state, via the binomial reduction."""
    alpha = cfg.resolved_alpha()
    ops, dops = example1_kraus_diagonals(cfg.q, alpha, cfg.tau, cfg.x)
    p = np.abs(ops[:, 0]) ** 2
    if np.max(np.abs(np.abs(ops[:, 0]) - np.abs(ops[:, 1]))) > 1e-12:
        raise ArgumentError("binomial reduction needs |A_a|^2 proportional to the identity")
    dp = 2 * np.real(np.conj(ops[:, 0]) * dops[:, 0])
    n = cfg.n
    k = np.arange(n + 1)
    live = p > 0
    # relative-phase velocity of |0...0> against |1...1> contributed by one A_a
    dphase = np.zeros(2)
    dphase[live] = np.imag(dops[live, 0] / ops[live, 0]) - np.imag(dops[live, 1] / ops[live, 1])
    score_unit = np.zeros(2)
    score_unit[live] = dp[live] / p[live]
    for idx in (0, 1):
        if not live[idx] and abs(dp[idx]) > 1e-12:
            raise SingularDistributionError("vanishing branch probability with non-zero derivative")
    if not live[1]:
        k = k[:1]
        weights = np.ones(1)
    elif not live[0]:
        k = k[-1:]
        weights = np.ones(1)
    else:
        weights = np.exp(_log_binomial_pmf(n, k, math.log(p[0]), math.log(p[1])))
    score = (n - k) * score_unit[0] + k * score_unit[1]
    phase_rate = (n - k) * dphase[0] + k * dphase[1]
    classical = float(np.sum(weights * score ** 2))
    quantum = float(np.sum(weights * phase_rate ** 2))
    return Example1Bound(classical + quantum, classical, quantum)


def example1_reduced_family(cfg: Example1Config):
    """2x2 state and derivative on span{|0...0>, |1...1>}."""
    alpha = cfg.resolved_alpha()
    ops, dops = example1_kraus_diagonals(cfg.q, alpha, cfg.tau, cfg.x)
    kappa = np.sum(ops[:, 0] * np.conj(ops[:, 1]))
    dkappa = np.sum(dops[:, 0] * np.conj(ops[:, 1]) + ops[:, 0] * np.conj(dops[:, 1]))
    n = cfg.n
    coh = 0.5 * kappa ** n
    dcoh = 0.5 * n * kappa ** (n - 1) * dkappa
    rho = np.array([[0.5, coh], [np.conj(coh), 0.5]], dtype=complex)
    drho = np.array([[0.0, dcoh], [np.conj(dcoh), 0.0]], dtype=complex)
    return rho, drho


def example1_exact_qfi(cfg: Example1Config) -> float:
    """Exact QFI of the GHZ output state from the 2x2 reduction."""
    return qfi(*example1_reduced_family(cfg))


def example1_ghz_state(n: int) -> np.ndarray:
    return ket_to_dm(ghz_ket(n))


# ---------------------------------------------------------------------------
# probe-number sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    n: int
    f_conv: float
    f_classical: float
    f_quantum: float
    f_exact: float
    err_bound: float
    err_exact: float
    asymp_small_n: float
    asymp_large_n: float


CSV_HEADER = [f.name for f in fields(SweepRow)]


def _inv_sqrt(v: float) -> float:
    return 1 / math.sqrt(v) if v > 0 else math.inf


def sweep_row(cfg: Example1Config) -> SweepRow:
    alpha = cfg.resolved_alpha()
    bound = example1_fconv(cfg)
    exact = example1_exact_qfi(cfg)
    c1, c2 = example1_coeffs(alpha, cfg.q, cfg.tau)
    return SweepRow(
        n=cfg.n,
        f_conv=bound.f_conv,
        f_classical=bound.f_classical,
        f_quantum=bound.f_quantum,
        f_exact=exact,
        err_bound=_inv_sqrt(bound.f_conv),
        err_exact=_inv_sqrt(exact),
        asymp_small_n=_inv_sqrt(c2) / cfg.n,
        asymp_large_n=_inv_sqrt(c1) / math.sqrt(cfg.n),
    )


def sweep_example1(template: Example1Config, n_min: int, n_max: int) -> list[SweepRow]:
    """One row per probe number; an ``"optimal"`` alpha is re-optimized for every N."""
    if not 1 <= n_min <= n_max:
        raise ArgumentError("need 1 <= n_min <= n_max")
    return [sweep_row(template.with_n(n)) for n in range(n_min, n_max + 1)]


def write_sweep_csv(rows: Iterable[SweepRow], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r.n] + [f"{getattr(r, name):.12g}" for name in CSV_HEADER[1:]])


# ---------------------------------------------------------------------------
# dephasing-rate estimation
# ---------------------------------------------------------------------------

class Example2Result(NamedTuple):
    bound: float
    exact: float


def example2_ext_qfi(n: int, tau: float, x: float,
                     state: Literal["product", "ghz"] = "product") -> Example2Result:
    """Closed-form jump-rate bound and the reference value it is compared with.

    With m = 1 for product probes and m = N for GHZ probes, and y = 2 m tau x:
    bound = (N m) tau^2 e^{-y} / (1 - e^{-y}) and exact = (N m) tau^2 e^{-y}.
    """
    if n < 1:
        raise ArgumentError("n must be at least 1")
    if tau <= 0:
        raise ArgumentError("tau must be positive")
    if x < 0:
        raise ArgumentError("the dephasing rate must be non-negative")
    if x == 0:
        raise DivergentBoundError("bound diverges at zero dephasing rate")
    if state == "product":
        m = 1
    elif state == "ghz":
        m = n
    else:
        raise ArgumentError(f"state must be 'product' or 'ghz', got {state!r}")
    y = 2 * m * tau * x
    decay = math.exp(-y)
    exact = n * m * tau ** 2 * decay
    return Example2Result(exact / -math.expm1(-y), exact)


def example2_model(n: int, x: float, tau: float) -> LindbladModel:
    """Independent dephasing Z_k / sqrt(2) at rate x on each of n qubits."""
    jumps = []
    for k in range(n):
        factors = [I2] * n
        factors[k] = SIGMA_Z
        jumps.append((tensor_product(factors) / math.sqrt(2), x))
    return LindbladModel(np.zeros((2 ** n, 2 ** n), dtype=complex), 0.0, tuple(jumps), tau)


def example2_initial_state(n: int, state: Literal["product", "ghz"]) -> np.ndarray:
    if state == "product":
        return tensor_product([ket_to_dm(plus_ket())] * n)
    if state == "ghz":
        return ket_to_dm(ghz_ket(n))
    raise ArgumentError(f"state must be 'product' or 'ghz', got {state!r}")


__all__ = [
    "Coefficients", "Example1Config", "Example1Bound", "SweepRow", "Example2Result",
    "CSV_HEADER", "example1_kraus_diagonals", "example1_channel", "example1_coeffs",
    "example1_alpha_opt", "example1_threshold", "example1_fconv", "example1_reduced_family",
    "example1_exact_qfi", "example1_ghz_state", "sweep_row", "sweep_example1",
    "write_sweep_csv", "example2_ext_qfi", "example2_model", "example2_initial_state",
]
