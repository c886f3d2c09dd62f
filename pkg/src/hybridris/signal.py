"""Received-signal statistics: effective channels, SINR, spectral efficiency
and total power accounting for each RIS operating mode.

Everything is evaluated in closed form from a channel realization; no
sample-level waveforms are generated.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelSet, watts_to_dbm

__all__ = [
    "RisMode",
    "RisState",
    "Precoder",
    "LinkBudget",
    "reflection_coefficients",
    "effective_channel",
    "effective_channels",
    "sinr",
    "sum_se",
    "evaluate_se",
    "power_account",
]

POWER_RTOL = 1e-9


class RisMode(str, enum.Enum):
    NO_RIS = "NoRis"
    DORMANT = "Dormant"
    PASSIVE = "Passive"
    ACTIVE = "Active"


@dataclass(frozen=True, eq=False)
class RisState:
    """Operating mode, per-element phase shifts (radians) and uniform gain."""

    mode: RisMode
    phases: np.ndarray
    gain: float = 1.0
    phase_range: Optional[float] = None

    def __post_init__(self):
        mode = RisMode(self.mode)
        object.__setattr__(self, "mode", mode)
        phases = np.asarray(self.phases, dtype=float)
        object.__setattr__(self, "phases", phases)
        if phases.ndim != 1:
            raise ValueError("phases must be a vector")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        if not (math.isfinite(self.gain) and self.gain >= 0):
            raise ValueError(f"gain must be finite and >= 0, got {self.gain}")
        if mode in (RisMode.PASSIVE, RisMode.DORMANT) and self.gain != 1.0:
            raise ValueError(f"{mode.value} RIS requires unit gain")
        if mode is RisMode.DORMANT and np.any(phases != 0):
            raise ValueError("dormant RIS has all-zero phases")
        if self.phase_range is not None:
            if not self.phase_range > 0:
                raise ValueError("phase_range must be positive")
            if np.any(np.abs(phases) > self.phase_range * (1 + 1e-12)):
                raise ValueError("phase outside the allowed range")

    @property
    def num_elements(self) -> int:
        return self.phases.shape[0]

    @classmethod
    def no_ris(cls, n: int) -> "RisState":
        return cls(RisMode.NO_RIS, np.zeros(n), 1.0)

    @classmethod
    def dormant(cls, n: int) -> "RisState":
        return cls(RisMode.DORMANT, np.zeros(n), 1.0)

    @classmethod
    def passive(cls, phases, phase_range=None) -> "RisState":
        return cls(RisMode.PASSIVE, phases, 1.0, phase_range)

    @classmethod
    def active(cls, phases, gain: float, phase_range=None) -> "RisState":
        return cls(RisMode.ACTIVE, phases, gain, phase_range)


@dataclass(frozen=True, eq=False)
class Precoder:
    """BS precoder; column ``k`` of ``columns`` (M x K) is ``w_k``."""

    columns: np.ndarray
    bs_power: float

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=complex)
        object.__setattr__(self, "columns", cols)
        if cols.ndim != 2:
            raise ValueError("precoder columns must form an M x K matrix")
        if self.bs_power < 0:
            raise ValueError("bs_power must be >= 0")
        used = self.radiated_power
        if used > self.bs_power * (1 + POWER_RTOL):
            raise ValueError(f"precoder uses {used} W over its budget {self.bs_power} W")

    @property
    def radiated_power(self) -> float:
        return float(np.sum(np.abs(self.columns) ** 2))


@dataclass(frozen=True)
class LinkBudget:
    """Power consumption in watts and the resulting total in dBm."""

    total_power: float
    bs_power: float
    amp_power: float
    static_power: float

    @property
    def total_watts(self) -> float:
        return self.bs_power + self.amp_power + self.static_power


def reflection_coefficients(ris: RisState) -> np.ndarray:
    """Diagonal of ``P Phi`` (zeros when the RIS is absent)."""
    if ris.mode is RisMode.NO_RIS:
        return np.zeros(ris.num_elements, dtype=complex)
    return ris.gain * np.exp(1j * ris.phases)


def effective_channel(h: np.ndarray, f: np.ndarray, G: np.ndarray, ris: RisState) -> np.ndarray:
    """Return ``v`` with ``v^H = h^H + p f^H Phi^H G``."""
    h = np.asarray(h)
    f = np.asarray(f)
    G = np.asarray(G)
    if G.shape != (f.shape[0], h.shape[0]) or ris.num_elements != f.shape[0]:
        raise ValueError(f"dimension mismatch: h {h.shape}, f {f.shape}, G {G.shape}, "
                         f"RIS with {ris.num_elements} elements")
    if ris.mode is RisMode.NO_RIS:
        return h.astype(complex, copy=True)
    return h + G.conj().T @ (reflection_coefficients(ris) * f)


def effective_channels(ch: ChannelSet, ris: RisState) -> np.ndarray:
    """Effective channels of all users as the rows of a K x M array."""
    if ris.num_elements != ch.num_ris_elements:
        raise ValueError("RIS state and channel set disagree on the element count")
    if ris.mode is RisMode.NO_RIS:
        return ch.direct.astype(complex, copy=True)
    return ch.direct + (ch.ris_user * reflection_coefficients(ris)) @ ch.bs_ris.conj()


def _columns(W) -> np.ndarray:
    return W.columns if isinstance(W, Precoder) else np.asarray(W)


def ris_noise(ris: RisState, F: np.ndarray, sigma2_ris: float) -> np.ndarray:
    """Amplified RIS thermal noise reaching each user (zero unless active)."""
    F = np.asarray(F)
    if ris.mode is not RisMode.ACTIVE:
        return np.zeros(F.shape[0])
    return ris.gain ** 2 * sigma2_ris * np.sum(np.abs(F) ** 2, axis=1)


def sinr(V, W, ris: RisState, F, sigma2_ris: float, sigma2_rx: float) -> np.ndarray:
    """Per-user SINR.

    Parameters
    ----------
    V : array, shape (K, M)
        Effective channels ``v_k`` as rows.
    W : Precoder or array, shape (M, K)
    ris : RisState
    F : array, shape (K, N)
        RIS to user channels; only used for the active-RIS noise term.
    sigma2_ris, sigma2_rx : float
        RIS element and receiver noise powers in watts.
    """
    V = np.asarray(V)
    cols = _columns(W)
    gains = np.abs(V.conj() @ cols) ** 2
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (interference + ris_noise(ris, F, sigma2_ris) + sigma2_rx)


def sum_se(sinrs) -> float:
    """Sum spectral efficiency in bits/s/Hz."""
    sinrs = np.asarray(sinrs, dtype=float)
    if np.any(sinrs < 0):
        raise ValueError("SINR must be non-negative")
    return float(np.sum(np.log2(1.0 + sinrs)))


def evaluate_se(ch: ChannelSet, ris: RisState, W, sigma2_ris: float, sigma2_rx: float) -> float:
    """Sum SE of a full configuration on one channel realization."""
    V = effective_channels(ch, ris)
    return sum_se(sinr(V, W, ris, ch.ris_user, sigma2_ris, sigma2_rx))


def power_account(mode, bs_power: float, amp_power: float = 0.0,
                  static_power: float = 0.0) -> LinkBudget:
    """Total power consumption; only an active RIS is charged for amplification."""
    mode = RisMode(mode)
    if min(bs_power, amp_power, static_power) < 0:
        raise ValueError("powers must be non-negative")
    if mode is not RisMode.ACTIVE:
        amp_power = 0.0
    total = bs_power + amp_power + static_power
    return LinkBudget(float(watts_to_dbm(total)), float(bs_power), float(amp_power),
                      float(static_power))
