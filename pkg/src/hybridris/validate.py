"""Fast self-checks of the model invariants, run by ``hybridris validate``."""
from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Callable, NamedTuple

import numpy as np

from .channel import SceneConfig, realize_channels
from .optimize import (OptimizerOptions, active_gain, amplifier_output_power, optimize_active,
                       optimize_passive, phase_grid, precoder)
from .signal import RisState, effective_channels, evaluate_se, sinr

__all__ = ["Check", "run_checks"]


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def _oracle(seeds=20) -> Check:
    scene = SceneConfig(num_users=1, num_bs_antennas=1, num_ris_elements=2)
    opts = OptimizerOptions(phase_grid_size=8, tolerance=1e-13, max_outer_iters=500)
    worst = 0.0
    for seed in range(seeds):
        ch = realize_channels(scene, seed)
        got = optimize_passive(ch, 1.0, opts, sigma2_rx=scene.sigma2_rx).se
        best = -np.inf
        for combo in itertools.product(phase_grid(8), repeat=2):
            ris = RisState.passive(np.array(combo))
            W = precoder(effective_channels(ch, ris), 1.0, opts.precoder_kind, scene.sigma2_rx)
            best = max(best, evaluate_se(ch, ris, W, 0.0, scene.sigma2_rx))
        worst = max(worst, abs(got - best) / best)
    return Check("exhaustive-search oracle", worst <= 1e-9, f"max rel gap {worst:.2e}")


def _reductions() -> Check:
    scene = SceneConfig(num_ris_elements=16)
    ch = realize_channels(scene, 1)
    phases = np.random.default_rng(1).uniform(0, 2 * np.pi, 16)
    p, a = RisState.passive(phases), RisState.active(phases, 1.0)
    W = precoder(effective_channels(ch, p), 1.0)
    sp = sinr(effective_channels(ch, p), W, p, ch.ris_user, 0.0, scene.sigma2_rx)
    sa = sinr(effective_channels(ch, a), W, a, ch.ris_user, 1e-30, scene.sigma2_rx)
    rel = float(np.max(np.abs(sa - sp) / sp))
    zero = RisState.passive(np.zeros(16))
    dorm = RisState.dormant(16)
    same = evaluate_se(ch, zero, W, 0.0, scene.sigma2_rx) == evaluate_se(ch, dorm, W, 0.0,
                                                                          scene.sigma2_rx)
    return Check("mode reductions", rel <= 1e-9 and same,
                 f"active/passive SINR gap {rel:.2e}, zero-phase == dormant: {same}")


def _amplifier_budget() -> Check:
    scene = SceneConfig(num_ris_elements=32)
    worst = 0.0
    for seed in range(5):
        ch = realize_channels(scene, seed)
        sol = optimize_active(ch, 10.0, sigma2_rx=scene.sigma2_rx, sigma2_ris=scene.sigma2_ris)
        out = amplifier_output_power(sol.ris, ch.bs_ris, sol.precoder, scene.sigma2_ris)
        worst = max(worst, abs(out - sol.budget.amp_power) / sol.budget.amp_power)
    return Check("amplifier power budget", worst <= 1e-9, f"max rel error {worst:.2e}")


def _monotone() -> Check:
    scene = SceneConfig(num_ris_elements=32)
    bad = 0
    for seed in range(5):
        ch = realize_channels(scene, seed)
        for sol in (optimize_passive(ch, 1.0, sigma2_rx=scene.sigma2_rx),
                    optimize_active(ch, 2.0, sigma2_rx=scene.sigma2_rx,
                                    sigma2_ris=scene.sigma2_ris)):
            bad += int(np.sum(np.diff(sol.trace) < -1e-12 * max(sol.trace)))
    return Check("optimizer monotonicity", bad == 0, f"{bad} decreasing steps")


CHECKS: list[Callable[[], Check]] = [_oracle, _reductions, _amplifier_budget, _monotone]


def run_checks() -> list[Check]:
    return [check() for check in CHECKS]
