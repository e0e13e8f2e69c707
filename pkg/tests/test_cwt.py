import math

import numpy as np
import pytest
from scipy import integrate

from seamsentinel.cwt import (
    Family,
    WaveletSpec,
    cwt,
    export_scalogram,
    frequency_to_scale,
    parse_scales,
    read_scalogram_csv,
    sampled_wavelet,
    scale_to_frequency,
)

FS = 6400
FAMILIES = [WaveletSpec.gaussian(), WaveletSpec.morlet(), WaveletSpec.shannon()]


def brute_force_cwt(x, spec, scale):
    """Direct correlation sum_m x[t+m] psi(m/s)/sqrt(s) with zero extension."""
    n = len(x)
    out = np.zeros(n)
    for t in range(n):
        acc = 0.0
        for j in range(n):
            acc += x[j] * spec.psi((j - t) / scale) / math.sqrt(scale)
        out[t] = abs(acc)
    return out


@pytest.mark.parametrize("spec", [WaveletSpec.gaussian(1), WaveletSpec.gaussian(3),
                                  WaveletSpec.morlet(), WaveletSpec.morlet(1.5)])
def test_matches_brute_force(spec, rng):
    x = rng.normal(size=120)
    scales = [1.5, 4.0, 9.0]
    sc = cwt(x, spec, scales, FS)
    for i, s in enumerate(scales):
        assert np.allclose(sc.magnitudes[i], brute_force_cwt(x, spec, s), rtol=1e-7, atol=1e-7)


def test_zero_signal_gives_zero_scalogram():
    for spec in FAMILIES:
        sc = cwt(np.zeros(500), spec, [2, 5, 10], FS)
        assert sc.magnitudes.shape == (3, 500)
        assert np.all(sc.magnitudes == 0)


@pytest.mark.parametrize("a", [3.0, -0.5, 2.0 ** -7])
def test_linearity(a, rng):
    x = rng.normal(size=700)
    for spec in FAMILIES:
        m1 = cwt(x, spec, [3, 8], FS).magnitudes
        m2 = cwt(a * x, spec, [3, 8], FS).magnitudes
        assert np.allclose(m2, abs(a) * m1, rtol=1e-10, atol=1e-12)


def test_shift_covariance_in_interior(rng):
    spec = WaveletSpec.morlet()
    x = np.zeros(2000)
    x[600:1400] = rng.normal(size=800)
    k = 37
    shifted = np.roll(x, k)
    scale = 6.0
    a = cwt(x, spec, [scale], FS).magnitudes[0]
    b = cwt(shifted, spec, [scale], FS).magnitudes[0]
    support = int(math.ceil(scale * spec.support_halfwidth()))
    sl = slice(support, 2000 - support - k)
    assert np.allclose(b[sl.start + k:sl.stop + k], a[sl], rtol=1e-9, atol=1e-12)


def test_magnitudes_non_negative_and_shape(rng):
    sc = cwt(rng.normal(size=300), WaveletSpec.shannon(), np.arange(1, 11), FS)
    assert sc.magnitudes.shape == (10, 300)
    assert np.all(sc.magnitudes >= 0)


def test_200hz_morlet_ridge_near_26():
    t = np.arange(2 * FS) / FS
    x = np.sin(2 * np.pi * 200 * t)
    scales = parse_scales("5:60:0.5")
    sc = cwt(x, WaveletSpec.morlet(), scales, FS)
    expected = 0.8125 * FS / 200
    assert expected == pytest.approx(26.0)
    assert sc.dominant_scale() == pytest.approx(expected, rel=0.05)
    # per-column argmax away from the zero-extended edges
    support = int(math.ceil(scales[-1] * WaveletSpec.morlet().support_halfwidth()))
    mag = sc.magnitudes[:, support:-support]
    strong = mag.max(axis=0) > 0.1 * mag.max()
    ridge = scales[np.argmax(mag[:, strong], axis=0)]
    assert np.all(np.abs(ridge - expected) <= 0.05 * expected)


@pytest.mark.parametrize("spec", [WaveletSpec.morlet(), WaveletSpec.shannon()])
def test_impulse_peaks_at_its_position(spec):
    x = np.zeros(400)
    t0 = 173
    x[t0] = 1.0
    sc = cwt(x, spec, [1.0, 2.0, 4.0], FS)
    assert int(np.argmax(sc.magnitudes[0])) == t0


def test_odd_gaussian_impulse_is_antisymmetric_about_t0():
    x = np.zeros(400)
    x[200] = 1.0
    row = cwt(x, WaveletSpec.gaussian(1), [3.0], FS).magnitudes[0]
    assert row[200] == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(row[200 - 50:200], row[201:251][::-1])


def test_scale_to_frequency_examples():
    assert scale_to_frequency(WaveletSpec.morlet(), 26, FS) == pytest.approx(200.0)
    assert scale_to_frequency(WaveletSpec.shannon(0.1, 3), 22, FS) == pytest.approx(872.727, abs=1e-3)


@pytest.mark.parametrize("spec", FAMILIES + [WaveletSpec.gaussian(5)])
@pytest.mark.parametrize("s", [0.7, 5.0, 26.0, 123.4])
def test_scale_frequency_round_trip(spec, s):
    assert frequency_to_scale(spec, scale_to_frequency(spec, s, FS), FS) == pytest.approx(s, rel=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3, 6])
def test_gaussian_center_frequency_closed_form(order):
    # maximiser of sqrt(xi) * xi^n exp(-(2 pi xi)^2 / 2)
    assert WaveletSpec.gaussian(order).central_frequency() == pytest.approx(
        math.sqrt(order + 0.5) / (2 * math.pi), rel=1e-6)


@pytest.mark.parametrize("order", [1, 2, 4])
def test_gaussian_wavelet_unit_energy(order):
    t = np.linspace(-40, 40, 400001)
    psi = WaveletSpec.gaussian(order).psi(t)
    assert integrate.trapezoid(psi ** 2, x=t) == pytest.approx(1.0, rel=1e-8)


def test_support_truncation_threshold():
    for spec in (WaveletSpec.gaussian(2), WaveletSpec.morlet()):
        T = spec.support_halfwidth()
        t = np.linspace(T * 1.0001, T * 3, 2000)
        peak = np.abs(spec.psi(np.linspace(-5, 5, 100001))).max()
        assert np.all(np.abs(spec.psi(t)) < 1e-8 * peak * 1.0001)
    k = sampled_wavelet(WaveletSpec.morlet(), 4.0)
    assert len(k) % 2 == 1


def test_wavelet_validation_and_parse():
    with pytest.raises(ValueError):
        WaveletSpec.gaussian(0)
    with pytest.raises(ValueError):
        WaveletSpec.morlet(0)
    with pytest.raises(ValueError):
        WaveletSpec.shannon(-1, 3)
    assert WaveletSpec.parse("shannon:0.1:3") == WaveletSpec.shannon()
    assert WaveletSpec.parse("gaussian:4").order == 4
    assert WaveletSpec.parse("morlet").family is Family.MORLET
    with pytest.raises(ValueError):
        WaveletSpec.parse("mexican")


def test_scale_validation():
    with pytest.raises(ValueError):
        cwt(np.ones(10), WaveletSpec.morlet(), [], FS)
    with pytest.raises(ValueError):
        cwt(np.ones(10), WaveletSpec.morlet(), [2, 1], FS)
    with pytest.raises(ValueError):
        cwt(np.ones(10), WaveletSpec.morlet(), [0, 1], FS)


def test_parse_scales():
    s = parse_scales("5:60:0.5")
    assert len(s) == 111 and s[0] == 5 and s[-1] == 60
    assert list(parse_scales("1,2,4")) == [1, 2, 4]


def test_export_csv_round_trip(tmp_path, rng):
    sc = cwt(rng.normal(size=FS), WaveletSpec.morlet(), np.arange(1, 11), FS)
    path = tmp_path / "s.csv"
    export_scalogram(sc, path, "csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 10 and all(len(ln.split(",")) == FS for ln in lines)
    back = read_scalogram_csv(path)
    assert np.allclose(back, sc.magnitudes, rtol=1e-12, atol=0)


def _read_pgm(path):
    data = path.read_bytes()
    parts = data.split(b"\n", 3)
    assert parts[0] == b"P5"
    cols, rows = map(int, parts[1].split())
    assert parts[2] == b"255"
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(rows, cols)


def test_export_pgm(tmp_path, rng):
    sc = cwt(rng.normal(size=200), WaveletSpec.morlet(), [1, 2, 3, 4], FS)
    path = tmp_path / "s.pgm"
    export_scalogram(sc, path, "pgm")
    img = _read_pgm(path)
    assert img.shape == (4, 200)
    assert img.min() == 0 and img.max() == 255


def test_export_pgm_constant_is_zero(tmp_path):
    sc = cwt(np.zeros(50), WaveletSpec.morlet(), [1, 2], FS)
    path = tmp_path / "c.pgm"
    export_scalogram(sc, path, "pgm")
    assert np.all(_read_pgm(path) == 0)
    with pytest.raises(ValueError):
        export_scalogram(sc, tmp_path / "x.png", "png")
