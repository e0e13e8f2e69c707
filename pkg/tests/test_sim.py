import math

import numpy as np
import pytest
from scipy import signal as sps

from seamsentinel.signal import MachineSettings, Scenario, load_recording, segment_windows
from seamsentinel.sim import (
    SAMPLE_RATE_HZ,
    ScenarioSpec,
    SpecError,
    ToolGeometry,
    blade_pass_times,
    burst_schedule,
    experiment_specs,
    generate_experiment,
    load_scenario_spec,
    simulate,
    simulate_experiment,
)
from seamsentinel.wpd import wpd_rms_array

FS = SAMPLE_RATE_HZ


def band_rms(x, lo, hi):
    """RMS of the part of ``x`` between ``lo`` and ``hi`` Hz (one-sided DFT)."""
    X = np.fft.rfft(x)
    f = np.fft.rfftfreq(len(x), 1 / FS)
    m = (f >= lo) & (f < hi)
    return math.sqrt(2 * np.sum(np.abs(X[m]) ** 2) / len(x) ** 2)


# -- geometry and blade passes ----------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_geometry_invariants(seed):
    g = ToolGeometry.generate(32, 0.3, seed)
    a = np.asarray(g.blade_angles_rad)
    assert g.blade_count == 32 and len(g.per_blade_wear) == 32
    assert np.all(np.diff(a) > 0) and a[0] >= 0 and a[-1] < 2 * math.pi
    pitch = 2 * math.pi / 32
    assert np.all(np.abs(a - (np.arange(32) + 0.5) * pitch) <= 0.3 * pitch + 1e-12)


def test_geometry_validation():
    with pytest.raises(SpecError):
        ToolGeometry.generate(32, jitter=0.4)
    with pytest.raises(SpecError):
        ToolGeometry((0.5, 0.2), (1.0, 1.0))
    with pytest.raises(SpecError):
        ToolGeometry((0.1, 0.2), (1.0, 0.5))


@pytest.mark.parametrize("rpm, rate", [(41, 21.87), (101, 53.87)])
def test_mean_pass_rate(rpm, rate):
    times, _ = blade_pass_times(ToolGeometry.generate(32, seed=1), rpm, 60.0)
    assert len(times) / 60.0 == pytest.approx(rate, abs=0.03)
    assert rpm * 32 / 60 == pytest.approx(rate, abs=0.005)


def test_pass_time_formula():
    g = ToolGeometry.generate(32, seed=4)
    times, blades = blade_pass_times(g, 41, 10.0)
    period = 60 / 41
    rev = np.floor(times / period)
    expected = (rev + np.asarray(g.blade_angles_rad)[blades] / (2 * math.pi)) * period
    assert np.allclose(times, expected, atol=1e-12)
    assert np.all(np.diff(times) > 0) and times[-1] < 10.0


def test_zero_jitter_equal_intervals():
    times, _ = blade_pass_times(ToolGeometry.generate(32, jitter=0.0), 101, 5.0)
    d = np.diff(times)
    assert np.allclose(d, 60 / 101 / 32, rtol=1e-9)


def test_irregular_pitch_gives_unequal_intervals():
    times, _ = blade_pass_times(ToolGeometry.generate(32, seed=0), 101, 5.0)
    assert np.ptp(np.diff(times)) > 1e-4


# -- specs ----------------------------------------------------------------------------

def test_belt_requires_idle():
    spec = ScenarioSpec.default("Belt", 0)
    with pytest.raises(SpecError, match="idle"):
        ScenarioSpec(spec.label, MachineSettings(rpm=101, idle=False), 15.0,
                     belt_amplitude=0.3)


def test_defect_worn_blade_counts():
    for k, n in enumerate((0, 2, 6)):
        spec = ScenarioSpec.default("BladeDefect", k)
        assert len(spec.worn_blades) == n
    spec = ScenarioSpec.default("BladeDefect", 2)
    assert spec.worn_blades == (0, 5, 11, 16, 21, 27)
    with pytest.raises(SpecError):
        ScenarioSpec.default("BladeDefect", 1, worn_blades=(1, 2, 3))


def test_duration_minimum():
    with pytest.raises(SpecError):
        ScenarioSpec.default("Stability", 0, duration_s=1.5)


def test_spec_file(tmp_path):
    p = tmp_path / "spec.conf"
    p.write_text("# stability run\nscenario=Stability\nclass_id=1\nduration_s=4\n"
                 "instability_band_hz=500,900\nrpm=90\nseed=3\n")
    spec = load_scenario_spec(p)
    assert spec.label.class_id == 1 and spec.duration_s == 4.0 and spec.seed == 3
    assert spec.instability_band_hz == (500.0, 900.0) and spec.machine.rpm == 90.0
    p.write_text("scenario=Stability\nbogus=1\n")
    with pytest.raises(SpecError, match="bogus"):
        load_scenario_spec(p)


# -- simulate ---------------------------------------------------------------------------

def test_sixty_seconds_is_384000_samples():
    rec = simulate(ScenarioSpec.default("Stability", 0, duration_s=60.0))
    assert len(rec.x) == len(rec.y) == len(rec.z) == 384000
    assert rec.sample_rate_hz == FS
    assert rec.condition.scenario is Scenario.STABILITY
    assert rec.extra["seed"] == 0


def test_simulation_is_deterministic():
    spec = ScenarioSpec.default("BladeDefect", 1, seed=5, duration_s=3.0)
    a, b = simulate(spec), simulate(spec)
    for ax in "xyz":
        assert np.array_equal(getattr(a, ax), getattr(b, ax))
    c = simulate(ScenarioSpec.default("BladeDefect", 1, seed=6, duration_s=3.0))
    assert not np.array_equal(a.y, c.y)


def test_generate_experiment_byte_identical(tmp_path):
    p1 = generate_experiment("Belt", tmp_path / "a", seed=2)
    p2 = generate_experiment("Belt", tmp_path / "b", seed=2)
    assert [p.name for p in p1] == ["belt_class0.csv", "belt_class1.csv", "belt_class2.csv"]
    for a, b in zip(p1, p2):
        assert a.read_bytes() == b.read_bytes()
    rec = load_recording(p1[1])
    assert rec.condition.class_id == 1 and rec.meta.idle
    assert sum(len(segment_windows(load_recording(p), "Z")) for p in p1) == 45


def test_defect_schedule_two_anomalous_bursts_per_revolution():
    spec = ScenarioSpec.default("BladeDefect", 1, seed=0, duration_s=30.0)
    sched = burst_schedule(spec, ToolGeometry.generate(32, seed=0))
    med = np.median(sched.amplitudes)
    rev = np.floor(sched.times / (60 / spec.machine.rpm)).astype(int)
    for r in range(rev.max()):
        assert np.sum(sched.amplitudes[rev == r] > 2 * med) == 2


def test_idle_has_no_cutting_bursts():
    for k in range(3):
        spec = ScenarioSpec.default("Belt", k, seed=1)
        rec = simulate(spec)
        assert len(burst_schedule(spec, ToolGeometry.generate(32, seed=1)).times) == 0
        noise_in_band = spec.noise_floor_rms * math.sqrt(400 / (FS / 2))
        assert band_rms(rec.y, 2000, 2400) <= 3 * noise_in_band


def test_wear_growth_factor_four_doubles_band5():
    spec = ScenarioSpec.default("Wear", 0, seed=0, wear_growth_factor=4.0)
    rec = simulate(spec)
    ws = segment_windows(rec, "Y")
    band5 = wpd_rms_array(np.stack([w.samples for w in ws]))[:, 5]
    assert band5[-300:].mean() >= 2 * band5[:300].mean()


# -- label/signal consistency oracles (zero overlap between classes) ----------------

@pytest.mark.parametrize("seed", [0, 3])
def test_wear_oracle_separates_time_spans(seed):
    rec = simulate_experiment("Wear", seed)[0]
    assert rec.condition is None and rec.extra["scenario"] == "Wear"
    band5 = wpd_rms_array(np.stack([w.samples for w in segment_windows(rec, "Y")]))[:, 5]
    early = band5[:300].reshape(30, 10).mean(axis=1)
    late = band5[-300:].reshape(30, 10).mean(axis=1)
    assert early.max() < late.min()


def _burst_peaks(rec, spec, geom):
    sched = burst_schedule(spec, geom)
    b, a = sps.butter(4, [1900, 2500], btype="band", fs=FS)
    env = np.abs(sps.hilbert(sps.filtfilt(b, a, rec.y)))
    span = int(0.004 * FS)
    starts = np.ceil(sched.times * FS).astype(int)
    keep = starts + span < len(env)
    peaks = np.array([env[s:s + span].max() for s in starts[keep]])
    return sched.times[keep], peaks


@pytest.mark.parametrize("seed", [0, 1])
def test_defect_oracle_counts_anomalous_bursts(seed):
    specs = experiment_specs("BladeDefect", seed, per_class_durations=[20.0])
    geom = ToolGeometry.generate(32, seed=seed)
    ranges = []
    for spec in specs:
        times, peaks = _burst_peaks(simulate(spec, geom), spec, geom)
        rev = np.floor(times / (60 / spec.machine.rpm)).astype(int)
        med = np.median(peaks)
        counts = [int(np.sum(peaks[rev == r] > 2 * med)) for r in range(rev.max())]
        ranges.append((min(counts), max(counts)))
    assert ranges[0][1] < ranges[1][0] and ranges[1][1] < ranges[2][0]


@pytest.mark.parametrize("seed", [0, 4])
def test_stability_oracle_band_energy(seed):
    recs = simulate_experiment("Stability", seed)
    stable, unstable = ([band_rms(w.samples, 600, 1000) for w in segment_windows(r, "Y")]
                        for r in recs)
    assert max(stable) < min(unstable)


def _belt_measures(x):
    """Envelope variability and tone frequency spread while the tone is on."""
    b, a = sps.butter(4, [200, 380], btype="band", fs=FS)
    an = sps.hilbert(sps.filtfilt(b, a, x))
    env = np.abs(an)
    blocks = env[:len(env) // 64 * 64].reshape(-1, 64).mean(axis=1)
    inst = np.diff(np.unwrap(np.angle(an))) * FS / (2 * np.pi)
    on = env[1:] > 0.5 * np.percentile(env, 90)
    on[:200] = on[-200:] = False
    return blocks.std() / blocks.mean(), np.std(inst[on])


@pytest.mark.parametrize("seed", [0, 2, 7])
def test_belt_oracle_tone_continuity(seed):
    recs = simulate_experiment("Belt", seed)
    m = [np.array([_belt_measures(w.samples) for w in segment_windows(r, "Z")]) for r in recs]
    fixed, dropout, erratic = m
    # fixed tone: steady envelope
    assert fixed[:, 0].max() < min(dropout[:, 0].min(), erratic[:, 0].min())
    # dropout keeps its pitch while on; erratic wanders
    assert dropout[:, 1].max() < erratic[:, 1].min()


def test_default_experiment_shapes():
    assert [s.duration_s for s in experiment_specs("Wear")] == [1488.0]
    assert [s.duration_s for s in experiment_specs("Belt")] == [15.0] * 3
    assert all(s.duration_s <= 120 for s in experiment_specs("Stability"))
    with pytest.raises(SpecError):
        experiment_specs("Belt", per_class_durations=[1.0, 2.0])
