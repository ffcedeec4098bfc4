"""Synthetic injection-molding-like plant.

Maps normalized machine parameters to cavity-pressure-shaped curves through a
closed-form rise / hold / decay family, with small cycle-to-cycle noise, and
builds the factorial DOE datasets used for training and evaluation.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

N_SAMPLES = 500
T_END = 10.0
TIME_GRID = np.linspace(0.0, T_END, N_SAMPLES)

CORE_PARAMS = ("holding_pressure", "injection_speed", "mold_temperature")
EXTRA_PARAMS = ("hot_runner_temperature", "dosing_speed", "holding_time")


@dataclass(frozen=True)
class MachineParams:
    """Normalized control-parameter vector in [0, 1] per component."""

    values: np.ndarray
    param_names: tuple[str, ...] = CORE_PARAMS

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.shape != (len(self.param_names),):
            raise ValueError(f"expected {len(self.param_names)} components, got {self.values.shape}")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0):
            raise ValueError(f"components must lie in [0, 1]: {self.values}")

    @property
    def n_params(self) -> int:
        return len(self.param_names)


@dataclass(frozen=True)
class CurveModelConfig:
    """Constants of the piecewise curve family. Chosen so that at every grid
    setting the rise, hold and decay phases all fit inside the 10 s window."""

    rise_base: float = 1.5
    rise_gain: float = 0.8       # t_r = rise_base - rise_gain * u_is
    peak_base: float = 0.5
    peak_gain: float = 0.4       # P = peak_base + peak_gain * u_hp
    hold_time: float = 2.0
    tau_base: float = 1.5
    tau_gain: float = 1.5        # tau = tau_base + tau_gain * u_mt
    amp_noise_std: float = 0.01
    sample_noise_std: float = 0.005
    is_peak_coupling: float = 0.0  # mixes u_is into the peak, [0, 0.2]

    def with_noise_disabled(self) -> "CurveModelConfig":
        from dataclasses import replace
        return replace(self, amp_noise_std=0.0, sample_noise_std=0.0)


# the "second product": same family, different fixed constants
D2_CONFIG = CurveModelConfig(rise_base=1.2, rise_gain=0.6, peak_base=0.55,
                             peak_gain=0.35, hold_time=2.5, tau_base=1.2,
                             tau_gain=1.8)

DEFAULT_CONFIGS = {"d1": CurveModelConfig(), "d2": D2_CONFIG, "d3": CurveModelConfig()}


def simulate_curve(p: MachineParams, noise_seed: int, raw: bool = False,
                   config: CurveModelConfig | None = None) -> np.ndarray:
    """One production cycle at setting p, deterministic for fixed (p, seed).

    Returns the 500-sample normalized curve; with raw=True values are in
    un-normalized units (x1000) for exercising the preprocessing path.
    """
    cfg = config or CurveModelConfig()
    u_hp, u_is, u_mt = p.values[0], p.values[1], p.values[2]
    t_r = cfg.rise_base - cfg.rise_gain * u_is
    peak = cfg.peak_base + cfg.peak_gain * u_hp + cfg.is_peak_coupling * u_is
    tau = cfg.tau_base + cfg.tau_gain * u_mt
    if p.n_params > 3:
        # extra parameters nudge the phase constants by <= 5% of their ranges
        u4, u5, u6 = p.values[3], p.values[4], p.values[5]
        peak += 0.05 * cfg.peak_gain * (2.0 * u4 - 1.0)
        t_r += 0.05 * cfg.rise_gain * (2.0 * u5 - 1.0)
        tau += 0.05 * cfg.tau_gain * (2.0 * u6 - 1.0)

    t = TIME_GRID
    s = np.clip(t / t_r, 0.0, 1.0)
    ramp = s * s * (3.0 - 2.0 * s)  # smoothstep
    curve = peak * ramp
    t_decay_start = t_r + cfg.hold_time
    decay = t > t_decay_start
    curve[decay] = peak * np.exp(-(t[decay] - t_decay_start) / tau)

    if cfg.amp_noise_std > 0.0 or cfg.sample_noise_std > 0.0:
        rng = np.random.default_rng(np.random.SeedSequence(noise_seed))
        amp = 1.0 + rng.normal(0.0, cfg.amp_noise_std)
        curve = curve * amp + rng.normal(0.0, cfg.sample_noise_std, size=N_SAMPLES)
    return curve * 1000.0 if raw else curve


def _curve_seed(dataset_seed: int, setting_index: int, cycle_index: int) -> int:
    """Counter-based per-curve seed; independent of generation order."""
    ss = np.random.SeedSequence(entropy=dataset_seed,
                                spawn_key=(setting_index, cycle_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class DoeDataset:
    """A DOE sweep: settings x cycles of simulated curves."""

    kind: str
    seed: int
    settings: list[MachineParams]
    cycles_per_setting: int
    curves: np.ndarray = field(repr=False)  # (n_settings, cycles, 500)
    config: CurveModelConfig = field(default_factory=CurveModelConfig, repr=False)

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.settings[0].param_names

    @property
    def n_curves(self) -> int:
        return len(self.settings) * self.cycles_per_setting

    def curve(self, setting_index: int, cycle_index: int) -> np.ndarray:
        return self.curves[setting_index, cycle_index]


GRID_LEVELS = (0.0, 0.5, 1.0)


def build_doe_dataset(kind: str, seed: int,
                      config: CurveModelConfig | None = None) -> DoeDataset:
    """d1/d2: full 3-level factorial over the core parameters, 27 x 10 curves.
    d3: 23 non-systematic 6-parameter settings, 20 cycles each (460 curves)."""
    kind = kind.lower()
    if kind not in ("d1", "d2", "d3"):
        raise ValueError(f"unknown dataset kind {kind!r}")
    cfg = config or DEFAULT_CONFIGS[kind]

    if kind in ("d1", "d2"):
        settings = [MachineParams(np.array(combo), CORE_PARAMS)
                    for combo in itertools.product(GRID_LEVELS, repeat=3)]
        cycles = 10
    else:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xD3,)))
        names = CORE_PARAMS + EXTRA_PARAMS
        settings = [MachineParams(rng.uniform(0.0, 1.0, size=6), names)
                    for _ in range(23)]
        cycles = 20

    curves = np.empty((len(settings), cycles, N_SAMPLES))
    for si, p in enumerate(settings):
        for ci in range(cycles):
            curves[si, ci] = simulate_curve(p, _curve_seed(seed, si, ci), config=cfg)
    return DoeDataset(kind=kind, seed=seed, settings=settings,
                      cycles_per_setting=cycles, curves=curves, config=cfg)


def preprocess(raw_times, raw_values) -> np.ndarray:
    """Resample onto the uniform 500-point grid over [0, 10] s and divide by
    1000. Values outside the recorded span clamp to the nearest endpoint."""
    raw_times = np.asarray(raw_times, dtype=np.float64)
    raw_values = np.asarray(raw_values, dtype=np.float64)
    if raw_times.shape != raw_values.shape or raw_times.ndim != 1:
        raise ValueError("raw_times and raw_values must be 1D and equal length")
    if raw_times.size < 2:
        raise ValueError("need at least 2 input points")
    if np.any(np.diff(raw_times) <= 0.0):
        raise ValueError("raw_times must be strictly increasing")
    return np.interp(TIME_GRID, raw_times, raw_values) / 1000.0


def _require_core_grid(dataset: DoeDataset) -> None:
    if dataset.settings[0].n_params != 3:
        raise ValueError(f"operation requires a d1/d2-style dataset, got {dataset.kind!r}")


def corner_settings(dataset: DoeDataset) -> list[int]:
    """Indices of the 8 cube-corner settings (all core levels in {0, 1})."""
    _require_core_grid(dataset)
    return [i for i, p in enumerate(dataset.settings)
            if np.all(np.isin(p.values, (0.0, 1.0)))]


def axis_settings(dataset: DoeDataset) -> list[int]:
    """Indices of the origin and its three directly connected corners."""
    _require_core_grid(dataset)
    targets = [np.zeros(3), np.eye(3)[0], np.eye(3)[1], np.eye(3)[2]]
    out = []
    for tgt in targets:
        for i, p in enumerate(dataset.settings):
            if np.array_equal(p.values, tgt):
                out.append(i)
                break
    if len(out) != 4:
        raise ValueError("dataset does not contain the full axis settings")
    return out


# ---------------------------------------------------------------------------
# JSON-lines dataset files


def save_dataset(dataset: DoeDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"kind": dataset.kind, "seed": dataset.seed,
                  "param_names": list(dataset.param_names)}
        fh.write(json.dumps(header) + "\n")
        for si, p in enumerate(dataset.settings):
            for ci in range(dataset.cycles_per_setting):
                rec = {"setting": [float(v) for v in p.values], "cycle": ci,
                       "samples": [float(v) for v in dataset.curves[si, ci]]}
                fh.write(json.dumps(rec) + "\n")


def load_dataset(path) -> DoeDataset:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        names = tuple(header["param_names"])
        settings: list[MachineParams] = []
        keys: list[tuple] = []
        rows: dict[tuple, list[tuple[int, np.ndarray]]] = {}
        for line in fh:
            rec = json.loads(line)
            key = tuple(rec["setting"])
            if key not in rows:
                rows[key] = []
                keys.append(key)
                settings.append(MachineParams(np.array(key), names))
            rows[key].append((rec["cycle"], np.asarray(rec["samples"], dtype=np.float64)))
    cycles = len(rows[keys[0]])
    curves = np.empty((len(keys), cycles, N_SAMPLES))
    for si, key in enumerate(keys):
        for ci, samples in rows[key]:
            curves[si, ci] = samples
    return DoeDataset(kind=header["kind"], seed=header["seed"], settings=settings,
                      cycles_per_setting=cycles, curves=curves,
                      config=DEFAULT_CONFIGS.get(header["kind"], CurveModelConfig()))
