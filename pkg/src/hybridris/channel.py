"""Large-scale path loss, Rician small-scale fading and channel realizations.

Channel convention: for user ``k`` the direct channel ``h_k`` (length M), the
BS to RIS matrix ``G`` (N x M) and the RIS to user channel ``f_k`` (length N)
combine into the effective downlink channel
``v_k^H = h_k^H + p f_k^H Phi^H G``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Scenario",
    "SceneConfig",
    "PathLossModel",
    "LOS_MODEL",
    "NLOS_MODEL",
    "ChannelSet",
    "distance",
    "path_loss",
    "sample_rician",
    "drop_positions",
    "realize_channels",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
]

MIN_DISTANCE = 1.0


def dbm_to_watts(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0) / 1000.0


def watts_to_dbm(watts):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(watts, dtype=float) * 1000.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


class Scenario(str, enum.Enum):
    STRONG_DIRECT = "StrongDirect"
    WEAK_DIRECT = "WeakDirect"


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss ``intercept + slope * log10(d)`` in dB."""

    intercept: float
    slope: float

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError(f"path loss slope must be positive, got {self.slope}")


# Low-loss model used for line-of-sight links (strong direct link, both RIS hops)
LOS_MODEL = PathLossModel(37.3, 22.0)
# High-loss model used for the obstructed direct link of the weak scenario
NLOS_MODEL = PathLossModel(13.54, 39.08)


@dataclass(frozen=True)
class SceneConfig:
    """Deployment geometry, array sizes and noise/fading parameters.

    Powers are in dBm, K-factors in dB, positions and lengths in metres.
    """

    bs_position: tuple[float, float] = (0.0, -45.0)
    ris_position: tuple[float, float] = (180.0, 20.0)
    user_center: tuple[float, float] = (200.0, 0.0)
    user_radius: float = 6.0
    num_users: int = 5
    num_bs_antennas: int = 5
    num_ris_elements: int = 400
    noise_power_receiver: float = -65.0
    noise_power_ris_element: float = -80.0
    rician_k_direct: float = 3.0
    rician_k_ris: float = 10.0
    scenario: Scenario = Scenario.STRONG_DIRECT

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "bs_position", _point(self.bs_position, "bs_position"))
        object.__setattr__(self, "ris_position", _point(self.ris_position, "ris_position"))
        object.__setattr__(self, "user_center", _point(self.user_center, "user_center"))
        for name in ("num_users", "num_bs_antennas", "num_ris_elements"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not (math.isfinite(self.user_radius) and self.user_radius > 0):
            raise ValueError(f"user_radius must be positive, got {self.user_radius!r}")
        for name in ("noise_power_receiver", "noise_power_ris_element",
                     "rician_k_direct", "rician_k_ris"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def sigma2_rx(self) -> float:
        """Receiver noise power in watts."""
        return float(dbm_to_watts(self.noise_power_receiver))

    @property
    def sigma2_ris(self) -> float:
        """Per-element RIS amplifier noise power in watts."""
        return float(dbm_to_watts(self.noise_power_ris_element))

    @property
    def direct_model(self) -> PathLossModel:
        return LOS_MODEL if self.scenario is Scenario.STRONG_DIRECT else NLOS_MODEL

    @property
    def ris_model(self) -> PathLossModel:
        return LOS_MODEL


def _point(value, name):
    x, y = (float(c) for c in value)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"{name} must have finite coordinates")
    return (x, y)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One realization of all channels in the scene.

    Attributes
    ----------
    direct : ndarray, shape (K, M)
        Row ``k`` is ``h_k``.
    bs_ris : ndarray, shape (N, M)
        ``G``.
    ris_user : ndarray, shape (K, N)
        Row ``k`` is ``f_k``.
    seed : int
    user_positions : ndarray, shape (K, 2)
    """

    direct: np.ndarray
    bs_ris: np.ndarray
    ris_user: np.ndarray
    seed: int = 0
    user_positions: np.ndarray = field(default=None, repr=False)

    @property
    def num_users(self) -> int:
        return self.direct.shape[0]

    @property
    def num_bs_antennas(self) -> int:
        return self.direct.shape[1]

    @property
    def num_ris_elements(self) -> int:
        return self.bs_ris.shape[0]

    def without_ris(self) -> "ChannelSet":
        """Same realization with the RIS to user links removed."""
        return ChannelSet(self.direct, self.bs_ris, np.zeros_like(self.ris_user),
                          self.seed, self.user_positions)

    def same_as(self, other: "ChannelSet") -> bool:
        return (np.array_equal(self.direct, other.direct)
                and np.array_equal(self.bs_ris, other.bs_ris)
                and np.array_equal(self.ris_user, other.ris_user))


def distance(a, b) -> float:
    """Euclidean distance between two 2-D points."""
    return math.hypot(float(b[0]) - float(a[0]), float(b[1]) - float(a[1]))


def path_loss(model: PathLossModel, d) -> float:
    """Path loss in dB at distance ``d`` metres (``d >= 1``)."""
    d = np.asarray(d, dtype=float)
    if np.any(d < MIN_DISTANCE) or not np.all(np.isfinite(d)):
        raise ValueError(f"path loss is undefined below {MIN_DISTANCE} m (got {d})")
    loss = model.intercept + model.slope * np.log10(d)
    return float(loss) if loss.ndim == 0 else loss


def sample_rician(pl_db: float, k_factor_db: float, size, rng: np.random.Generator) -> np.ndarray:
    """Draw Rician-faded complex gains with mean power ``10**(-pl_db/10)``.

    The line-of-sight component carries one uniformly drawn phase shared by
    every entry of the call. ``k_factor_db`` may be ``inf`` (pure LoS) or
    ``-inf`` (Rayleigh).
    """
    gain = math.sqrt(10.0 ** (-pl_db / 10.0))
    if k_factor_db == math.inf:
        los_w, nlos_w = 1.0, 0.0
    else:
        kappa = 10.0 ** (k_factor_db / 10.0)
        los_w = math.sqrt(kappa / (kappa + 1.0))
        nlos_w = math.sqrt(1.0 / (kappa + 1.0))
    theta = rng.uniform(0.0, 2.0 * np.pi)
    scatter = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)
    return gain * (los_w * np.exp(1j * theta) + nlos_w * scatter)


def drop_positions(scene: SceneConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform user positions in the disk around ``scene.user_center``."""
    r = scene.user_radius * np.sqrt(rng.uniform(size=scene.num_users))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=scene.num_users)
    cx, cy = scene.user_center
    return np.column_stack([cx + r * np.cos(phi), cy + r * np.sin(phi)])


def realize_channels(scene: SceneConfig, seed: int) -> ChannelSet:
    """Draw user positions and every channel of the scene from ``seed``."""
    rng = np.random.default_rng(seed)
    K, M, N = scene.num_users, scene.num_bs_antennas, scene.num_ris_elements
    users = drop_positions(scene, rng)

    def loss(model, a, b):
        return path_loss(model, max(distance(a, b), MIN_DISTANCE))

    direct = np.empty((K, M), dtype=complex)
    ris_user = np.empty((K, N), dtype=complex)
    for k in range(K):
        direct[k] = sample_rician(loss(scene.direct_model, scene.bs_position, users[k]),
                                  scene.rician_k_direct, M, rng)
    bs_ris = sample_rician(loss(scene.ris_model, scene.bs_position, scene.ris_position),
                           scene.rician_k_ris, (N, M), rng)
    for k in range(K):
        ris_user[k] = sample_rician(loss(scene.ris_model, scene.ris_position, users[k]),
                                    scene.rician_k_ris, N, rng)
    return ChannelSet(direct, bs_ris, ris_user, int(seed), users)
