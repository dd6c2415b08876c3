"""Disturbance and demand profiles: CSV ingestion and seeded synthesis.

All profiles live on one strictly increasing time grid and are linearly
interpolated between samples at run time.  Synthetic wind is the one
exception to pure linearity: it is spline-smoothed at generation time
(shape-preserving cubic through the jittered samples) and then sampled
onto the grid.

Random draws are consumed in a documented, fixed order so profiles are
reproducible across implementations: wind uses ``default_rng(seed)`` and
draws all 10-minute block offsets first (block order), then the
per-sample jitters (time order); demand uses ``default_rng(seed + 1)``
and draws its anchor jitters in time order.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

PROFILE_COLUMNS = ("t_s", "wind_ms", "dni_wm2", "dhi_wm2", "tair_c", "demand_kw")

WIND_BLOCK_S = 600.0
WIND_SAMPLE_S = 60.0
GRID_STEP_S = 10.0


@dataclass(frozen=True)
class DisturbanceProfile:
    """Weather and demand signals on a shared time grid."""

    t: np.ndarray
    wind_ms: np.ndarray
    dni_wm2: np.ndarray
    dhi_wm2: np.ndarray
    tair_c: np.ndarray
    demand_kw: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        if t.size < 1 or (t.size > 1 and np.any(np.diff(t) <= 0)):
            raise ValueError("time grid must be non-empty and strictly increasing")
        for name in ("wind_ms", "dni_wm2", "dhi_wm2", "tair_c", "demand_kw"):
            if np.asarray(getattr(self, name)).shape != t.shape:
                raise ValueError(f"{name} must match the time grid shape")

    def sample(self, t: float) -> tuple[float, float, float, float, float]:
        """Linear interpolation, held constant beyond the grid ends."""
        return (
            float(np.interp(t, self.t, self.wind_ms)),
            float(np.interp(t, self.t, self.dni_wm2)),
            float(np.interp(t, self.t, self.dhi_wm2)),
            float(np.interp(t, self.t, self.tair_c)),
            float(np.interp(t, self.t, self.demand_kw)),
        )


def default_grid(horizon_s: float, step_s: float = GRID_STEP_S) -> np.ndarray:
    n = max(1, int(np.ceil(horizon_s / step_s)) + 1)
    return np.arange(n) * step_s


def synth_wind_profile(
    mean_ms: float, horizon_s: float, seed: int, grid: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Blocky-mean wind speed with jittered samples and spline smoothing.

    Ten-minute block means are ``mean + U(-2, 2)``; samples every minute
    within a block are the block mean times ``1 + U(-0.05, 0.05)``; a
    shape-preserving cubic through the samples is then evaluated on the
    grid, which keeps every value inside the two uniform envelopes.
    """
    if mean_ms <= 0:
        raise ValueError("mean wind speed must be > 0")
    rng = np.random.default_rng(seed)
    if grid is None:
        grid = default_grid(horizon_s)
    t_samples = np.arange(0.0, horizon_s + WIND_SAMPLE_S, WIND_SAMPLE_S)
    n_blocks = int(np.floor(t_samples[-1] / WIND_BLOCK_S)) + 1
    block_means = mean_ms + rng.uniform(-2.0, 2.0, size=n_blocks)
    jitter = rng.uniform(-0.05, 0.05, size=t_samples.size)
    block_of = np.minimum((t_samples // WIND_BLOCK_S).astype(int), n_blocks - 1)
    samples = block_means[block_of] * (1.0 + jitter)
    if t_samples.size >= 2:
        smooth = PchipInterpolator(t_samples, samples)
        values = np.maximum(smooth(np.clip(grid, t_samples[0], t_samples[-1])), 0.0)
    else:
        values = np.full(grid.shape, samples[0])
    return grid, values


def synth_demand_profile(
    base_kw: float,
    variation_kw: float,
    period_s: float,
    seed: int,
    horizon_s: float,
    grid: np.ndarray | None = None,
    jitter_frac: float = 0.2,
) -> tuple[np.ndarray, np.ndarray]:
    """Regulation-like demand: sinusoid plus seeded anchor jitter.

    Anchors every ``period_s / 8`` carry ``base + variation sin(2 pi t /
    period) + U(-jitter_frac, jitter_frac) variation``; a
    shape-preserving cubic through them is sampled onto the grid.
    """
    if base_kw < 0 or variation_kw < 0 or period_s <= 0:
        raise ValueError("demand synthesis needs base, variation >= 0 and period > 0")
    rng = np.random.default_rng(seed + 1)
    if grid is None:
        grid = default_grid(horizon_s)
    anchor_dt = period_s / 8.0
    t_anchor = np.arange(0.0, horizon_s + anchor_dt, anchor_dt)
    wobble = rng.uniform(-jitter_frac, jitter_frac, size=t_anchor.size) * variation_kw
    anchors = base_kw + variation_kw * np.sin(2.0 * np.pi * t_anchor / period_s) + wobble
    if t_anchor.size >= 2:
        smooth = PchipInterpolator(t_anchor, anchors)
        values = np.maximum(smooth(np.clip(grid, t_anchor[0], t_anchor[-1])), 0.0)
    else:
        values = np.full(grid.shape, max(anchors[0], 0.0))
    return grid, values


def ramp(start: float, end: float, horizon_s: float, grid: np.ndarray) -> np.ndarray:
    if horizon_s <= 0:
        return np.full(grid.shape, start)
    return start + (end - start) * np.clip(grid / horizon_s, 0.0, 1.0)


def read_profile_csv(path) -> dict[str, np.ndarray]:
    """Read profile columns from CSV; only ``t_s`` is mandatory."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty profile file")
        unknown = set(reader.fieldnames) - set(PROFILE_COLUMNS)
        if unknown:
            raise ValueError(f"{path}: unknown profile columns {sorted(unknown)}")
        if "t_s" not in reader.fieldnames:
            raise ValueError(f"{path}: profile file needs a t_s column")
        rows = list(reader)
    columns: dict[str, np.ndarray] = {}
    for name in reader.fieldnames:
        values = [row[name] for row in rows]
        if any(v in (None, "") for v in values):
            raise ValueError(f"{path}: column {name} has missing entries")
        columns[name] = np.array([float(v) for v in values])
    return columns
