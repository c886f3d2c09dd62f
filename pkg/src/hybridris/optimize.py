"""Joint BS precoder and RIS coefficient design for each operating mode.

The RIS phases are optimized by coordinate ascent over a ``Q``-point phase
grid, alternating with a precoder update. Only improving steps are accepted,
so the sum-SE trace of every run is nondecreasing.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numba
import numpy as np

from .channel import ChannelSet
from .signal import (LinkBudget, Precoder, RisMode, RisState, effective_channels,
                     evaluate_se, power_account)

__all__ = [
    "PrecoderKind",
    "OptimizerOptions",
    "Solution",
    "SplitChoice",
    "phase_grid",
    "precoder",
    "active_gain",
    "amplifier_output_power",
    "solve_fixed",
    "optimize_passive",
    "optimize_active",
    "split_search",
]

# Relative margin a candidate must beat the incumbent by to be accepted;
# keeps round-off from cycling the coordinate ascent.
ACCEPT_RTOL = 1e-12
MAX_POLISH_SWEEPS = 200
GAIN_FIXED_POINT_ITERS = 100
GAIN_RTOL = 1e-12


class PrecoderKind(str, enum.Enum):
    MRT = "MRT"
    RZF = "RZF"


@dataclass(frozen=True)
class OptimizerOptions:
    max_outer_iters: int = 20
    phase_grid_size: int = 64
    tolerance: float = 1e-4
    precoder_kind: PrecoderKind = PrecoderKind.RZF
    power_split: float = 0.5
    split_grid: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    search_split: bool = False
    phase_range: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "precoder_kind", PrecoderKind(self.precoder_kind))
        object.__setattr__(self, "split_grid", tuple(float(x) for x in self.split_grid))
        if self.phase_grid_size < 2:
            raise ValueError("phase_grid_size must be >= 2")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        for eta in (self.power_split, *self.split_grid):
            if not 0.0 <= eta < 1.0:
                raise ValueError(f"power split must lie in [0, 1), got {eta}")
        if self.phase_range is not None and not self.phase_range > 0:
            raise ValueError("phase_range must be positive")


@dataclass(eq=False)
class Solution:
    """Result of one joint design.

    ``trace`` holds the sum SE after the initial point and after every
    precoder update and phase sweep of each outer iteration.
    """

    ris: RisState
    precoder: Precoder
    se: float
    budget: LinkBudget
    trace: list[float] = field(default_factory=list)
    iterations: int = 0


class SplitChoice(NamedTuple):
    eta: float
    se: float
    solution: Solution


def phase_grid(q: int, phase_range: Optional[float] = None) -> np.ndarray:
    """``q`` candidate phases: the full circle from 0, or ``[-b, b]``."""
    if phase_range is None:
        return 2.0 * np.pi * np.arange(q) / q
    return np.linspace(-phase_range, phase_range, q)


def precoder(V: np.ndarray, bs_power: float, kind=PrecoderKind.RZF,
             sigma2_rx: float = 0.0) -> Precoder:
    """MRT or regularized zero-forcing precoder on the effective channels.

    ``V`` holds the effective channels as rows (K x M). The returned
    precoder radiates exactly ``bs_power``.
    """
    kind = PrecoderKind(kind)
    if not bs_power > 0:
        raise ValueError("bs_power must be positive")
    V = np.asarray(V, dtype=complex)
    if not np.any(V):
        raise ValueError("cannot precode an all-zero channel matrix")
    K = V.shape[0]
    H = V.T  # columns are v_k
    if kind is PrecoderKind.MRT:
        norms = np.linalg.norm(H, axis=0)
        W = np.divide(H, norms, out=np.zeros_like(H), where=norms > 0)
    else:
        alpha = K * sigma2_rx / bs_power
        W = H @ np.linalg.inv(H.conj().T @ H + alpha * np.eye(K))
    W = W * math.sqrt(bs_power / np.sum(np.abs(W) ** 2))
    return Precoder(W, bs_power)


def active_gain(phases, G: np.ndarray, W, sigma2_ris: float, amp_power: float) -> float:
    """Uniform amplification gain that spends exactly ``amp_power``.

    With unit-modulus phase shifts the output power
    ``E||P Phi^H (G W s + n)||^2`` does not depend on ``phases``.
    """
    if amp_power < 0:
        raise ValueError("amp_power must be >= 0")
    if amp_power == 0:
        return 0.0
    cols = W.columns if isinstance(W, Precoder) else np.asarray(W)
    G = np.asarray(G)
    incident = float(np.sum(np.abs(G @ cols) ** 2)) + G.shape[0] * sigma2_ris
    return math.sqrt(amp_power / incident)


def amplifier_output_power(ris: RisState, G: np.ndarray, W, sigma2_ris: float) -> float:
    """Mean power radiated by the RIS amplifiers, signal plus amplified noise."""
    if ris.mode is not RisMode.ACTIVE:
        return 0.0
    cols = W.columns if isinstance(W, Precoder) else np.asarray(W)
    coeff = ris.gain * np.exp(-1j * ris.phases)
    out = coeff[:, None] * (np.asarray(G) @ cols)
    return float(np.sum(np.abs(out) ** 2) + np.sum(np.abs(coeff) ** 2) * sigma2_ris)


def solve_fixed(ch: ChannelSet, ris: RisState, bs_power: float, opts: OptimizerOptions,
                sigma2_rx: float, sigma2_ris: float = 0.0,
                static_power: float = 0.0) -> Solution:
    """Precoder-only design for a RIS whose coefficients are held fixed."""
    W = precoder(effective_channels(ch, ris), bs_power, opts.precoder_kind, sigma2_rx)
    se = evaluate_se(ch, ris, W, sigma2_ris, sigma2_rx)
    budget = power_account(ris.mode, bs_power, 0.0, static_power)
    return Solution(ris, W, se, budget, [se], 0)


@numba.njit(cache=True)
def _rate_product(S, noise):
    """prod_k (1 + SINR_k); its log2 is the sum SE."""
    K = S.shape[0]
    prod = 1.0
    for k in range(K):
        total = 0.0
        sig = 0.0
        for j in range(K):
            a = S[k, j].real * S[k, j].real + S[k, j].imag * S[k, j].imag
            total += a
            if j == k:
                sig = a
        prod *= 1.0 + sig / (total - sig + noise[k])
    return prod


@numba.njit(cache=True)
def _sweep_kernel(S, B, coeff, phases, grid, grid_coeff, gain, noise, max_sweeps, rtol):
    """Coordinate ascent over element phases; ``S[k, j] = v_k^H w_j`` is updated
    in place under single-element changes. Returns the number of accepted moves."""
    N = B.shape[0]
    K = S.shape[0]
    Q = grid.shape[0]
    cand = np.empty_like(S)
    current = math.log2(_rate_product(S, noise))
    changes = 0
    for _ in range(max_sweeps):
        changed = False
        for n in range(N):
            best_val = -1.0
            best_q = -1
            for q in range(Q):
                d = np.conj(grid_coeff[q] - coeff[n]) * gain
                for k in range(K):
                    for j in range(K):
                        cand[k, j] = S[k, j] + d * B[n, k, j]
                val = _rate_product(cand, noise)
                if val > best_val:
                    best_val = val
                    best_q = q
            best_val = math.log2(best_val)
            if best_val > current + rtol * max(1.0, abs(current)):
                d = np.conj(grid_coeff[best_q] - coeff[n]) * gain
                for k in range(K):
                    for j in range(K):
                        S[k, j] += d * B[n, k, j]
                current = best_val
                phases[n] = grid[best_q]
                coeff[n] = grid_coeff[best_q]
                changed = True
                changes += 1
        if not changed:
            break
    return changes


def _sweep(ch: ChannelSet, phases: np.ndarray, W: np.ndarray, gain: float,
           noise: np.ndarray, grid: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, int]:
    """Coordinate ascent over RIS phases for a fixed precoder ``W``.

    ``noise`` is the per-user noise floor (receiver plus amplified RIS noise).
    Runs up to ``max_sweeps`` full passes, stopping early once no element changes.
    """
    phases = phases.copy()
    coeff = np.exp(1j * phases)
    Gc = ch.bs_ris.conj()
    V = ch.direct + gain * (ch.ris_user * coeff) @ Gc
    S = np.ascontiguousarray(V.conj() @ W)
    # B[n, k, j]: change of v_k^H w_j per unit change of element n's coefficient
    B = np.ascontiguousarray(
        np.einsum("kn,nm,mj->nkj", ch.ris_user.conj(), ch.bs_ris, W))
    changes = _sweep_kernel(S, B, coeff, phases, grid, np.exp(1j * grid), float(gain),
                            np.asarray(noise, dtype=float), max_sweeps, ACCEPT_RTOL)
    return phases, changes


def _alternate(ch: ChannelSet, opts: OptimizerOptions, make_state, active: bool,
               bs_power: float, sigma2_rx: float, sigma2_ris: float = 0.0,
               amp_power: float = 0.0):
    """Shared alternating loop; ``make_state(phases, gain)`` builds a RisState."""
    grid = phase_grid(opts.phase_grid_size, opts.phase_range)
    user_norms = np.sum(np.abs(ch.ris_user) ** 2, axis=1)

    def design(phases, gain):
        # the precoder depends on the gain through the effective channel and the
        # gain on the precoder through the amplifier budget: iterate to a fixed point
        for _ in range(GAIN_FIXED_POINT_ITERS):
            W = precoder(effective_channels(ch, make_state(phases, gain)), bs_power,
                         opts.precoder_kind, sigma2_rx)
            if not active:
                break
            new_gain = active_gain(phases, ch.bs_ris, W, sigma2_ris, amp_power)
            settled = abs(new_gain - gain) <= GAIN_RTOL * new_gain
            gain = new_gain
            if settled:
                break
        state = make_state(phases, gain)
        return state, W, evaluate_se(ch, state, W, sigma2_ris, sigma2_rx)

    def ascend(state, W, se, max_sweeps):
        noise = sigma2_rx + (state.gain ** 2 * sigma2_ris * user_norms if active else 0.0)
        new_phases, changes = _sweep(ch, state.phases, W.columns, state.gain,
                                     noise * np.ones(ch.num_users), grid, max_sweeps)
        if changes:
            cand_state = make_state(new_phases, state.gain)
            cand_se = evaluate_se(ch, cand_state, W, sigma2_ris, sigma2_rx)
            if cand_se >= se:
                return cand_state, cand_se, changes
        return state, se, 0

    phases = np.zeros(ch.num_ris_elements)
    gain = 1.0
    if active:
        direct_only = precoder(ch.direct, bs_power, opts.precoder_kind, sigma2_rx)
        gain = active_gain(phases, ch.bs_ris, direct_only, sigma2_ris, amp_power)
    state, W, se = design(phases, gain)
    trace = [se]
    iterations = 0
    for it in range(opts.max_outer_iters):
        iterations = it + 1
        start = se
        if it > 0:
            cand_state, cand_W, cand_se = design(state.phases, state.gain)
            if cand_se > se:
                state, W, se = cand_state, cand_W, cand_se
            trace.append(se)
        state, se, changes = ascend(state, W, se, 1)
        trace.append(se)
        if changes == 0 or se - start <= opts.tolerance * abs(start):
            break
    if changes:
        # finish the element passes so the returned phases are grid-locally optimal
        state, se, _ = ascend(state, W, se, MAX_POLISH_SWEEPS)
        trace.append(se)
    return state, W, se, trace, iterations


def optimize_passive(ch: ChannelSet, bs_power: float, opts: OptimizerOptions = OptimizerOptions(),
                     *, sigma2_rx: float, static_power: float = 0.0) -> Solution:
    """Alternating precoder / phase design for a passive (unit-modulus) RIS."""

    def make_state(phases, gain):
        return RisState.passive(phases, opts.phase_range)

    state, W, se, trace, iters = _alternate(ch, opts, make_state, False, bs_power, sigma2_rx)
    budget = power_account(RisMode.PASSIVE, bs_power, 0.0, static_power)
    return Solution(state, W, se, budget, trace, iters)


def optimize_active(ch: ChannelSet, total_power: float, opts: OptimizerOptions = OptimizerOptions(),
                    *, sigma2_rx: float, sigma2_ris: float, eta: Optional[float] = None) -> Solution:
    """Joint design for an active RIS sharing ``total_power`` with the BS.

    A fraction ``eta`` (default ``opts.power_split``) of the budget feeds
    the amplifiers, the rest the BS.
    """
    if not total_power > 0:
        raise ValueError("total_power must be positive")
    eta = opts.power_split if eta is None else float(eta)
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"power split must lie in [0, 1), got {eta}")
    amp_power = eta * total_power
    bs_power = total_power - amp_power

    def make_state(phases, gain):
        return RisState.active(phases, gain, opts.phase_range)

    state, W, se, trace, iters = _alternate(ch, opts, make_state, True, bs_power, sigma2_rx,
                                            sigma2_ris, amp_power)
    budget = power_account(RisMode.ACTIVE, bs_power, amp_power, 0.0)
    return Solution(state, W, se, budget, trace, iters)


def split_search(ch: ChannelSet, total_power: float, opts: OptimizerOptions = OptimizerOptions(),
                 *, sigma2_rx: float, sigma2_ris: float) -> SplitChoice:
    """Best power split over ``opts.split_grid``; ties go to the smaller split."""
    if not opts.split_grid:
        raise ValueError("split_grid is empty")
    best = None
    for eta in sorted(set(opts.split_grid)):
        sol = optimize_active(ch, total_power, opts, sigma2_rx=sigma2_rx,
                              sigma2_ris=sigma2_ris, eta=eta)
        if best is None or sol.se > best.se:
            best = SplitChoice(eta, sol.se, sol)
    return best
