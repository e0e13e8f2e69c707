"""Synthetic triaxial vibration for a round-seam milling machine.

The signal model is deliberately simple:

* every blade-pass produces an exponentially decaying burst with a carrier
  between 2.0 and 2.4 kHz, strongest on Y;
* cutting amplitude drifts slowly (material variation) and the cutting
  process adds a broadband background whose level also drifts;
* scenario specific terms: linear wear growth, a few blades with a larger
  amplitude, a 600-1000 Hz disturbance for an unstable mount, and a Z-axis
  belt tone whose continuity depends on belt tension (idle runs only);
* white noise on all axes.

The 2.0-2.4 kHz carrier band is a modelling choice, not a physical claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from seamsentinel.classify.rng import derive_rng
from seamsentinel.signal import (
    AccelerationRecording,
    ConditionLabel,
    MachineSettings,
    Scenario,
    save_recording,
)

SAMPLE_RATE_HZ = 6400
AXIS_GAINS = (0.35, 1.0, 0.2)  # X, Y, Z share of the cutting bursts


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ToolGeometry:
    blade_angles_rad: tuple[float, ...]
    per_blade_wear: tuple[float, ...]

    def __post_init__(self):
        angles = tuple(float(a) for a in self.blade_angles_rad)
        wear = tuple(float(w) for w in self.per_blade_wear)
        if not angles:
            raise SpecError("at least one blade required")
        if len(wear) != len(angles):
            raise SpecError("per_blade_wear needs one entry per blade")
        if any(w < 1 for w in wear):
            raise SpecError("per-blade wear factors must be >= 1")
        if any(not 0 <= a < 2 * math.pi for a in angles):
            raise SpecError("blade angles must lie in [0, 2pi)")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise SpecError("blade angles must be strictly increasing")
        object.__setattr__(self, "blade_angles_rad", angles)
        object.__setattr__(self, "per_blade_wear", wear)

    @property
    def blade_count(self) -> int:
        return len(self.blade_angles_rad)

    @classmethod
    def generate(cls, blade_count: int = 32, jitter: float = 0.3,
                 seed: int = 0) -> "ToolGeometry":
        """Equal pitch plus uniform jitter of at most ``jitter`` pitches.

        Blade ``i`` sits near ``(i + 1/2) * pitch``, so with ``jitter < 0.5``
        the angles stay ordered and inside ``[0, 2pi)``.
        """
        if blade_count < 1:
            raise SpecError("blade_count must be >= 1")
        if not 0 <= jitter <= 0.3:
            raise SpecError("pitch jitter is limited to 30% of the nominal pitch")
        pitch = 2 * math.pi / blade_count
        u = derive_rng(seed, "sim.geometry").uniform(-1.0, 1.0, blade_count)
        angles = (np.arange(blade_count) + 0.5 + jitter * u) * pitch
        return cls(tuple(angles.tolist()), (1.0,) * blade_count)


def blade_pass_times(geom: ToolGeometry, rpm: float,
                     duration_s: float) -> tuple[np.ndarray, np.ndarray]:
    """Impact times and blade indices for ``t < duration_s``, time-sorted.

    Blade ``i`` strikes in revolution ``r`` at ``(r + theta_i / 2pi) * 60 / rpm``.
    """
    if not rpm > 0:
        raise SpecError("rpm must be positive")
    period = 60.0 / rpm
    frac = np.asarray(geom.blade_angles_rad) / (2 * math.pi)
    n_rev = int(math.ceil(duration_s / period)) + 1
    times = ((np.arange(n_rev)[:, None] + frac[None, :]) * period).ravel()
    blades = np.tile(np.arange(geom.blade_count), n_rev)
    keep = times < duration_s
    times, blades = times[keep], blades[keep]
    order = np.argsort(times, kind="stable")
    return times[order], blades[order]


def evenly_spaced_blades(count: int, blade_count: int) -> tuple[int, ...]:
    return tuple(int(round(k * blade_count / count)) % blade_count for k in range(count))


_WORN_COUNT = {0: 0, 1: 2, 2: 6}

_DEFAULT_MACHINE = {
    Scenario.WEAR: MachineSettings(rpm=41.0, feed_mm_per_min=340.0, cut_depth_mm=15.0),
    Scenario.BLADE_DEFECT: MachineSettings(rpm=101.0, feed_mm_per_min=500.0, cut_depth_mm=14.0),
    Scenario.STABILITY: MachineSettings(rpm=101.0, feed_mm_per_min=500.0, cut_depth_mm=19.0),
    Scenario.BELT: MachineSettings(rpm=101.0, idle=True),
}

#: per-class recording length (s); Wear is one trial labeled by time spans
DEFAULT_DURATIONS = {
    Scenario.WEAR: (1488.0,),
    Scenario.BLADE_DEFECT: (120.0, 120.0, 120.0),
    Scenario.STABILITY: (60.0, 60.0),
    Scenario.BELT: (15.0, 15.0, 15.0),
}


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything :func:`simulate` needs besides the tool geometry."""

    label: ConditionLabel
    machine: MachineSettings
    duration_s: float
    seed: int = 0
    noise_floor_rms: float = 0.05
    # cutting bursts
    burst_amplitude: float = 2.0
    burst_decay_s: float = 0.005
    burst_band_hz: tuple[float, float] = (2000.0, 2400.0)
    burst_jitter: float = 0.15
    force_modulation_sigma: float = 0.08
    force_modulation_period_s: float = 8.0
    background_rms: float = 0.45
    background_modulation_sigma: float = 0.35
    background_modulation_period_s: float = 6.0
    amplitude_dip: float = 0.0  # optional mid-trial dip hook, off by default
    # Wear
    wear_growth_factor: float = 1.0
    # BladeDefect
    worn_blades: tuple[int, ...] = ()
    worn_multiplier: float = 3.0
    # Stability
    instability_band_hz: tuple[float, float] = (600.0, 1000.0)
    instability_rms: float = 0.0
    instability_modulation_depth: float = 0.6
    # Belt
    belt_tone_hz: float = 290.0
    belt_amplitude: float = 0.0
    belt_regime: str = "fixed"  # fixed | dropout | erratic

    def __post_init__(self):
        if not self.duration_s >= 2.0:
            raise SpecError("duration_s must be at least 2 s")
        if not self.noise_floor_rms > 0:
            raise SpecError("noise_floor_rms must be positive")
        sc = self.label.scenario
        if sc is Scenario.BELT and not self.machine.idle:
            raise SpecError("Belt scenario requires idle=true")
        if sc is not Scenario.BELT and self.belt_amplitude > 0 and not self.machine.idle:
            raise SpecError("belt tone is only simulated in idle runs")
        if self.belt_regime not in ("fixed", "dropout", "erratic"):
            raise SpecError(f"unknown belt regime {self.belt_regime!r}")
        if sc is Scenario.BLADE_DEFECT:
            want = _WORN_COUNT[self.label.class_id]
            if len(self.worn_blades) != want:
                raise SpecError(f"BladeDefect class {self.label.class_id} needs exactly "
                                f"{want} worn blades, got {len(self.worn_blades)}")
        if self.wear_growth_factor < 1:
            raise SpecError("wear_growth_factor must be >= 1")
        lo, hi = self.burst_band_hz
        if not 0 < lo <= hi < SAMPLE_RATE_HZ / 2:
            raise SpecError("burst band must lie below Nyquist")

    @classmethod
    def default(cls, scenario: Scenario | str, class_id: int = 0, seed: int = 0,
                duration_s: float | None = None, blade_count: int = 32,
                **overrides) -> "ScenarioSpec":
        """Default parameters for one class of one scenario."""
        scenario = Scenario.parse(scenario)
        label = ConditionLabel(scenario, class_id)
        machine = replace(_DEFAULT_MACHINE[scenario], blade_count=blade_count)
        if duration_s is None:
            duration_s = DEFAULT_DURATIONS[scenario][min(class_id, len(DEFAULT_DURATIONS[scenario]) - 1)]
        params: dict = {}
        if scenario is Scenario.WEAR:
            params["wear_growth_factor"] = 2.5
        elif scenario is Scenario.BLADE_DEFECT:
            params["worn_blades"] = evenly_spaced_blades(_WORN_COUNT[class_id], blade_count)
        elif scenario is Scenario.STABILITY:
            params["instability_rms"] = 1.6 if class_id == 1 else 0.0
        else:
            params["belt_amplitude"] = (0.3, 0.3, 0.3)[class_id]
            params["belt_regime"] = ("fixed", "dropout", "erratic")[class_id]
        params.update(overrides)
        return cls(label, machine, float(duration_s), int(seed), **params)

    def with_overrides(self, values: Mapping[str, str]) -> "ScenarioSpec":
        """Apply textual ``key=value`` overrides (as read from a config file)."""
        known = {f.name: f for f in fields(self)}
        machine_keys = {f.name for f in fields(MachineSettings)}
        changes, machine_changes = {}, {}
        for key, raw in values.items():
            if key in machine_keys:
                ftype = type(getattr(self.machine, key))
                machine_changes[key] = (raw.strip() in ("1", "true", "True")) if ftype is bool else ftype(raw)
                continue
            if key not in known or key in ("label", "machine"):
                raise SpecError(f"unknown scenario parameter {key!r}")
            current = getattr(self, key)
            if isinstance(current, tuple):
                items = [p for p in raw.replace(" ", "").split(",") if p]
                conv = int if key == "worn_blades" else float
                changes[key] = tuple(conv(p) for p in items)
            elif isinstance(current, str):
                changes[key] = raw.strip()
            else:
                changes[key] = type(current)(raw)
        if machine_changes:
            changes["machine"] = replace(self.machine, **machine_changes)
        return replace(self, **changes)


def read_key_values(path: str | Path) -> dict[str, str]:
    """Plain ``key=value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SpecError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def load_scenario_spec(path: str | Path) -> ScenarioSpec:
    """Build a spec from a config file with at least ``scenario`` and
    ``class_id``; remaining keys override the scenario defaults."""
    values = read_key_values(path)
    try:
        scenario = values.pop("scenario")
    except KeyError:
        raise SpecError(f"{path}: missing 'scenario'") from None
    class_id = int(values.pop("class_id", "0"))
    seed = int(values.pop("seed", "0"))
    duration = values.pop("duration_s", None)
    spec = ScenarioSpec.default(scenario, class_id, seed,
                                float(duration) if duration is not None else None)
    return spec.with_overrides(values)


# ---------------------------------------------------------------------------
# random building blocks

def _smooth_process(rng: np.random.Generator, t: np.ndarray, period_s: float,
                    duration_s: float) -> np.ndarray:
    """Unit-scale random curve: Gaussian knots every ``period_s`` seconds,
    linearly interpolated at ``t``."""
    n_knots = int(math.ceil(duration_s / period_s)) + 2
    knots = rng.standard_normal(n_knots)
    return np.interp(t, np.arange(n_knots) * period_s, knots)


def _band_noise(rng: np.random.Generator, n: int, band: tuple[float, float],
                fs: float) -> np.ndarray:
    """White noise restricted to ``band`` by FFT masking; unit RMS."""
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    spec[(freqs < band[0]) | (freqs > band[1])] = 0.0
    out = np.fft.irfft(spec, n)
    rms = np.sqrt(np.mean(out * out))
    return out / rms if rms > 0 else out


@dataclass(frozen=True, eq=False)
class BurstSchedule:
    times: np.ndarray
    blades: np.ndarray
    amplitudes: np.ndarray
    carriers_hz: np.ndarray


def burst_schedule(spec: ScenarioSpec, geom: ToolGeometry) -> BurstSchedule:
    """Time, blade, Y-axis peak amplitude and carrier of every cutting burst."""
    if spec.machine.idle or spec.machine.rpm <= 0:
        empty = np.zeros(0)
        return BurstSchedule(empty, empty.astype(np.int64), empty, empty)
    if geom.blade_count != spec.machine.blade_count:
        raise SpecError("geometry blade count differs from machine settings")
    times, blades = blade_pass_times(geom, spec.machine.rpm, spec.duration_s)
    n = len(times)
    cls = spec.label.class_id
    rng = derive_rng(spec.seed, f"sim.{spec.label.scenario.value}.bursts", cls)
    jitter = rng.uniform(1.0 - spec.burst_jitter, 1.0 + spec.burst_jitter, n)
    carriers = rng.uniform(spec.burst_band_hz[0], spec.burst_band_hz[1], n)
    blade_factor = np.asarray(geom.per_blade_wear, dtype=np.float64).copy()
    for b in spec.worn_blades:
        blade_factor[b] *= spec.worn_multiplier
    growth = 1.0 + (spec.wear_growth_factor - 1.0) * times / spec.duration_s
    mod_rng = derive_rng(spec.seed, f"sim.{spec.label.scenario.value}.force", cls)
    force = np.exp(spec.force_modulation_sigma
                   * _smooth_process(mod_rng, times, spec.force_modulation_period_s,
                                     spec.duration_s))
    dip = 1.0 - spec.amplitude_dip * np.exp(-0.5 * ((times / spec.duration_s - 0.5) / 0.08) ** 2)
    amps = spec.burst_amplitude * blade_factor[blades] * growth * force * jitter * dip
    return BurstSchedule(times, blades, amps, carriers)


def _render_bursts(sched: BurstSchedule, n: int, fs: float, decay_s: float) -> np.ndarray:
    out = np.zeros(n)
    length = int(math.ceil(8 * decay_s * fs))
    rel = np.arange(length) / fs
    for t0, a, fc in zip(sched.times.tolist(), sched.amplitudes.tolist(),
                         sched.carriers_hz.tolist()):
        start = int(math.ceil(t0 * fs))
        if start >= n:
            continue
        dt = rel + (start / fs - t0)
        seg = a * np.exp(-dt / decay_s) * np.sin(2 * np.pi * fc * dt)
        stop = min(n, start + length)
        out[start:stop] += seg[:stop - start]
    return out


def _belt_tone(spec: ScenarioSpec, t: np.ndarray) -> np.ndarray:
    rng = derive_rng(spec.seed, "sim.Belt.tone", spec.label.class_id)
    f0, amp = spec.belt_tone_hz, spec.belt_amplitude
    dur = spec.duration_s
    phase0 = rng.uniform(0, 2 * np.pi)
    if spec.belt_regime == "fixed":
        return amp * np.sin(2 * np.pi * f0 * t + phase0)
    if spec.belt_regime == "dropout":
        # two-state on/off gating with smoothed edges
        n = len(t)
        state = np.empty(n)
        pos, on = 0, True
        while pos < n:
            mean_len = 0.15 if on else 0.12
            seg = max(1, int(rng.exponential(mean_len) * SAMPLE_RATE_HZ))
            state[pos:pos + seg] = 1.0 if on else 0.08
            pos += seg
            on = not on
        k = int(0.005 * SAMPLE_RATE_HZ)
        env = np.convolve(state, np.ones(k) / k, mode="same")
        return 0.6 * amp * env * np.sin(2 * np.pi * f0 * t + phase0)
    # erratic: wandering frequency and amplitude
    freq = f0 + 25.0 * _smooth_process(rng, t, 0.02, dur)
    env = np.exp(0.6 * _smooth_process(rng, t, 0.03, dur))
    phase = phase0 + 2 * np.pi * np.cumsum(freq) / SAMPLE_RATE_HZ
    return amp * env * np.sin(phase)


def simulate(spec: ScenarioSpec, geom: ToolGeometry | None = None) -> AccelerationRecording:
    """Render one labeled recording at 6.4 kHz."""
    fs = SAMPLE_RATE_HZ
    if geom is None:
        geom = ToolGeometry.generate(spec.machine.blade_count, seed=spec.seed)
    n = int(round(spec.duration_s * fs))
    t = np.arange(n) / fs
    sc = spec.label.scenario.value
    cls = spec.label.class_id
    axes = [np.zeros(n), np.zeros(n), np.zeros(n)]

    sched = burst_schedule(spec, geom)
    if len(sched.times):
        bursts = _render_bursts(sched, n, fs, spec.burst_decay_s)
        for k in range(3):
            axes[k] += AXIS_GAINS[k] * bursts
        if spec.background_rms > 0:
            for k in range(3):
                rng = derive_rng(spec.seed, f"sim.{sc}.background", cls, k)
                level = spec.background_rms * AXIS_GAINS[k] * np.exp(
                    spec.background_modulation_sigma
                    * _smooth_process(rng, t, spec.background_modulation_period_s,
                                      spec.duration_s))
                axes[k] += level * rng.standard_normal(n)

    if spec.instability_rms > 0:
        rng = derive_rng(spec.seed, f"sim.{sc}.instability", cls)
        dist = _band_noise(rng, n, spec.instability_band_hz, fs)
        mod = 1.0 + spec.instability_modulation_depth * np.tanh(
            _smooth_process(rng, t, 0.25, spec.duration_s))
        dist *= spec.instability_rms * mod
        axes[1] += dist
        axes[0] += 0.5 * dist

    if spec.belt_amplitude > 0:
        axes[2] += _belt_tone(spec, t)

    for k in range(3):
        rng = derive_rng(spec.seed, f"sim.{sc}.noise", cls, k)
        axes[k] += spec.noise_floor_rms * rng.standard_normal(n)

    return AccelerationRecording(fs, axes[0], axes[1], axes[2], spec.machine, spec.label,
                                 extra={"seed": spec.seed})


def experiment_specs(scenario: Scenario | str, seed: int = 0,
                     per_class_durations: Sequence[float] | None = None,
                     overrides: Mapping[str, str] | None = None) -> list[ScenarioSpec]:
    scenario = Scenario.parse(scenario)
    durations = tuple(per_class_durations or DEFAULT_DURATIONS[scenario])
    n_rec = 1 if scenario is Scenario.WEAR else scenario.n_classes
    if len(durations) == 1 and n_rec > 1:
        durations = durations * n_rec
    if len(durations) != n_rec:
        raise SpecError(f"{scenario.value} needs {n_rec} durations, got {len(durations)}")
    specs = []
    for cls, dur in enumerate(durations):
        spec = ScenarioSpec.default(scenario, cls, seed, dur)
        if overrides:
            spec = spec.with_overrides(overrides)
        specs.append(spec)
    return specs


def recording_filename(spec: ScenarioSpec) -> str:
    sc = spec.label.scenario
    if sc is Scenario.WEAR:
        return "wear.csv"
    return f"{sc.cli_name}_class{spec.label.class_id}.csv"


def simulate_experiment(scenario: Scenario | str, seed: int = 0,
                        per_class_durations: Sequence[float] | None = None,
                        overrides: Mapping[str, str] | None = None) -> list[AccelerationRecording]:
    """In-memory version of :func:`generate_experiment`.

    The Wear trial is a single recording without a class label; its windows
    are labeled by time span downstream.
    """
    specs = experiment_specs(scenario, seed, per_class_durations, overrides)
    geom = ToolGeometry.generate(specs[0].machine.blade_count, seed=seed)
    out = []
    for spec in specs:
        rec = simulate(spec, geom)
        if spec.label.scenario is Scenario.WEAR:
            rec = AccelerationRecording(rec.sample_rate_hz, rec.x, rec.y, rec.z, rec.meta, None,
                                        {"seed": seed, "scenario": "Wear"})
        out.append(rec)
    return out


def generate_experiment(scenario: Scenario | str, out_dir: str | Path, seed: int = 0,
                        per_class_durations: Sequence[float] | None = None,
                        overrides: Mapping[str, str] | None = None,
                        extra: Mapping[str, str] | None = None) -> list[Path]:
    """Write one recording CSV per class (one file for Wear) into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = experiment_specs(scenario, seed, per_class_durations, overrides)
    recs = simulate_experiment(scenario, seed, per_class_durations, overrides)
    paths = []
    for spec, rec in zip(specs, recs):
        if extra:
            rec = AccelerationRecording(rec.sample_rate_hz, rec.x, rec.y, rec.z, rec.meta,
                                        rec.condition, {**rec.extra, **extra})
        path = out_dir / recording_filename(spec)
        save_recording(rec, path)
        paths.append(path)
    return paths
