"""Hybrid RIS mode controller.

Each operating point is classified from the BS transmit power into a weak,
strong or high measurement-report class, and the class together with the
estimated SE gains picks the Active, Passive or Dormant RIS mode.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .channel import ChannelSet
from .optimize import (OptimizerOptions, optimize_active, optimize_passive, solve_fixed,
                       split_search)
from .signal import RisMode, RisState

__all__ = [
    "ReportClass",
    "ControllerThresholds",
    "MeasurementReport",
    "TauEstimate",
    "gain_db",
    "classify_report",
    "select_mode",
    "estimate_tau",
    "tau_from_se",
    "controller_trace",
]


class ReportClass(str, enum.Enum):
    WEAK = "Weak"
    STRONG = "Strong"
    HIGH = "High"


@dataclass(frozen=True)
class ControllerThresholds:
    """Class boundaries in dBm and the minimum worthwhile SE gain ``rho`` in dB."""

    weak_below: float = 40.0
    high_above: float = 60.0
    rho: float = 0.0

    def __post_init__(self):
        for name in ("weak_below", "high_above", "rho"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.weak_below < self.high_above:
            raise ValueError("weak_below must be below high_above")


@dataclass(frozen=True)
class MeasurementReport:
    """Transmit-power class of an operating point plus the SE-gain estimates (dB).

    ``tau`` is the active-over-passive gain and ``passive_gain`` the
    passive-over-no-RIS gain.
    """

    tx_power: float
    cls: ReportClass
    tau: float = 0.0
    passive_gain: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cls", ReportClass(self.cls))

    @classmethod
    def from_power(cls, tx_power: float, th: ControllerThresholds, tau: float = 0.0,
                   passive_gain: float = 0.0) -> "MeasurementReport":
        return cls(tx_power, classify_report(tx_power, th), tau, passive_gain)


class TauEstimate(NamedTuple):
    tau: float
    passive_gain: float
    se_active: float
    se_passive: float
    se_noris: float


def gain_db(numerator: float, denominator: float) -> float:
    """``10 log10(numerator / denominator)``, 0 dB for equal values."""
    if numerator == denominator:
        return 0.0
    if denominator <= 0:
        return math.inf
    if numerator <= 0:
        return -math.inf
    return 10.0 * math.log10(numerator / denominator)


def classify_report(tx_power: float, th: ControllerThresholds = ControllerThresholds()) -> ReportClass:
    """Weak below ``weak_below``, High above ``high_above``, Strong otherwise.

    Both boundaries are strict, so a power exactly on a boundary is Strong.
    """
    if not math.isfinite(tx_power):
        raise ValueError("transmit power must be finite")
    if tx_power < th.weak_below:
        return ReportClass.WEAK
    if tx_power > th.high_above:
        return ReportClass.HIGH
    return ReportClass.STRONG


def select_mode(report: MeasurementReport,
                th: ControllerThresholds = ControllerThresholds()) -> RisMode:
    if report.cls is ReportClass.WEAK:
        return RisMode.ACTIVE if report.tau > th.rho else RisMode.PASSIVE
    if report.cls is ReportClass.STRONG:
        return RisMode.ACTIVE if report.tau > report.passive_gain else RisMode.PASSIVE
    # high transmit power: the amplifiers stay off
    return RisMode.PASSIVE if report.passive_gain > th.rho else RisMode.DORMANT


def estimate_tau(ch: ChannelSet, total_power: float, opts: OptimizerOptions = OptimizerOptions(),
                 *, sigma2_rx: float, sigma2_ris: float, eta=None,
                 passive_static_power: float = 0.0) -> TauEstimate:
    """Realized SE gains at one operating point from the three designs.

    The passive design gets what is left of ``total_power`` after its static
    power, the no-RIS baseline spends all of it at the BS and the active
    design shares it with the amplifiers.
    """
    bs_power = total_power - passive_static_power
    if opts.search_split and eta is None:
        active = split_search(ch, total_power, opts, sigma2_rx=sigma2_rx,
                              sigma2_ris=sigma2_ris).solution
    else:
        active = optimize_active(ch, total_power, opts, sigma2_rx=sigma2_rx,
                                 sigma2_ris=sigma2_ris, eta=eta)
    passive = optimize_passive(ch, bs_power, opts, sigma2_rx=sigma2_rx,
                               static_power=passive_static_power)
    noris = solve_fixed(ch, RisState.no_ris(ch.num_ris_elements), total_power, opts, sigma2_rx)
    return tau_from_se(active.se, passive.se, noris.se)


def tau_from_se(se_active: float, se_passive: float, se_noris: float) -> TauEstimate:
    return TauEstimate(gain_db(se_active, se_passive), gain_db(se_passive, se_noris),
                       se_active, se_passive, se_noris)


def controller_trace(reports: Iterable[MeasurementReport],
                     th: ControllerThresholds = ControllerThresholds()) -> list[RisMode]:
    return [select_mode(r, th) for r in reports]
