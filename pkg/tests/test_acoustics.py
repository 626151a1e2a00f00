import json
import struct
import wave

import numpy as np
import pytest

from atcsrd.acoustics import (
    SNR_DB_GRID,
    WADA_G_TABLE,
    Waveform,
    manifest_snr,
    read_wav,
    snr_histogram,
    snr_ratio,
    wada_snr,
    wada_statistic,
    write_wav,
)
from atcsrd.errors import AudioError, CorruptHeader, SilentInput, UnsupportedFormat
from gen import mix_at_snr, modulated_laplacian

RNG_SEED = 2024


def _wav_bytes(pcm: bytes, channels=1, rate=16000, bits=16, tag=1, extra=b""):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + extra
    body += b"data" + struct.pack("<I", len(pcm)) + pcm
    return b"RIFF" + struct.pack("<I", len(body)) + body


def test_read_silence(tmp_path):
    p = tmp_path / "s.wav"
    write_wav(p, np.zeros(16000), 16000)
    w = read_wav(p)
    assert w.sample_rate == 16000 and w.samples.size == 16000 and not w.samples.any()


def test_read_full_scale_square(tmp_path):
    p = tmp_path / "sq.wav"
    pcm = np.tile(np.array([32767, -32767], "<i2"), 400).tobytes()
    p.write_bytes(_wav_bytes(pcm, rate=8000))
    w = read_wav(p)
    assert set(np.abs(w.samples)) == {32767 / 32768}


def test_exact_little_endian_decode(tmp_path):
    vals = np.array([0, 1, -1, 32767, -32768, 256, -257], "<i2")
    p = tmp_path / "v.wav"
    p.write_bytes(_wav_bytes(vals.tobytes()))
    np.testing.assert_array_equal(read_wav(p).samples, vals / 32768.0)


def test_write_read_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    x = np.round(rng.uniform(-0.9, 0.9, 4000) * 32768) / 32768
    p = tmp_path / "r.wav"
    write_wav(p, x, 8000)
    np.testing.assert_array_equal(read_wav(p).samples, x)


def test_extensible_format_and_odd_chunks(tmp_path):
    pcm = np.arange(100, dtype="<i2").tobytes()
    fmt = struct.pack("<HHIIHH", 0xFFFE, 1, 16000, 32000, 2, 16)
    fmt += struct.pack("<HHI", 22, 16, 4) + struct.pack("<H", 1) + b"\x00" * 14
    junk = b"LIST" + struct.pack("<I", 3) + b"abc\x00"  # odd size, padded
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + junk
    body += b"data" + struct.pack("<I", len(pcm)) + pcm
    p = tmp_path / "x.wav"
    p.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    assert read_wav(p).samples.size == 100


@pytest.mark.parametrize(
    "kw",
    [dict(bits=24), dict(channels=2), dict(rate=44100), dict(tag=3, bits=16)],
)
def test_unsupported(tmp_path, kw):
    p = tmp_path / "u.wav"
    bits = kw.get("bits", 16)
    p.write_bytes(_wav_bytes(b"\x00" * (bits // 8) * kw.get("channels", 1) * 10, **kw))
    with pytest.raises(UnsupportedFormat):
        read_wav(p)


def test_24_bit_written_by_stdlib(tmp_path):
    p = tmp_path / "24.wav"
    with wave.open(str(p), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(3)
        w.setframerate(16000)
        w.writeframes(b"\x00" * 300)
    with pytest.raises(UnsupportedFormat):
        read_wav(p)


@pytest.mark.parametrize(
    "data",
    [
        b"",
        b"RIFX" + b"\x00" * 40,
        _wav_bytes(b"\x00" * 20)[:30],
        _wav_bytes(b"\x00" * 20)[:-4],
        b"RIFF\x04\x00\x00\x00WAVE",
    ],
)
def test_corrupt(tmp_path, data):
    p = tmp_path / "c.wav"
    p.write_bytes(data)
    with pytest.raises(CorruptHeader):
        read_wav(p)


def test_waveform_validation():
    with pytest.raises(AudioError):
        Waveform(np.array([]), 16000)
    with pytest.raises(AudioError):
        Waveform(np.array([0.0, np.nan]), 16000)
    with pytest.raises(UnsupportedFormat):
        Waveform(np.zeros(10), 22050)


def test_g_table_shape():
    assert WADA_G_TABLE.shape == SNR_DB_GRID.shape == (121,)
    assert SNR_DB_GRID[0] == -20 and SNR_DB_GRID[-1] == 100


@pytest.mark.parametrize("db", [-10, 0, 5, 10, 20, 30])
def test_g_table_against_gamma_model(db):
    # independent check of the tabulated curve: the statistic of Gamma(0.4)
    # amplitude "speech" plus Gaussian noise at a known SNR
    rng = np.random.default_rng(db + 100)
    n = 1_000_000
    s = rng.gamma(0.4, 1.0, n) * rng.choice([-1.0, 1.0], n)
    x = mix_at_snr(s, rng.normal(0, 1, n), db)
    g = wada_statistic(x)
    assert g == pytest.approx(WADA_G_TABLE[db + 20], abs=0.01)
    assert wada_snr(Waveform(x, 16000)).snr_db == pytest.approx(db, abs=1.5)


def _reference_lookup(g):
    # literal reading of the tabulated inverse: last grid point whose G is
    # below g, then a straight line to the next one
    idx = None
    for i, v in enumerate(WADA_G_TABLE):
        if v < g:
            idx = i
    if idx is None:
        return -20.0
    if idx == len(WADA_G_TABLE) - 1:
        return 100.0
    frac = (g - WADA_G_TABLE[idx]) / (WADA_G_TABLE[idx + 1] - WADA_G_TABLE[idx])
    return -20.0 + idx + frac


def test_gaussian_noise_sits_at_noise_floor():
    # half-normal |z|: log E|z| - E log|z| = (log(2/pi) + euler_gamma + log 2) / 2
    analytic = 0.5 * (np.log(2 / np.pi) + np.euler_gamma + np.log(2))
    assert abs(analytic - WADA_G_TABLE[0]) < 1e-3
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(5):
        z = rng.normal(0, 1, 1_000_000)
        est = wada_snr(Waveform(z, 16000))
        assert est.statistic == pytest.approx(analytic, abs=3e-3)
        # the curve is nearly flat below -10 dB, so sampling noise in the
        # statistic moves the estimate around inside that floor region
        assert -20 <= est.snr_db <= -10
        assert est.snr_db == pytest.approx(_reference_lookup(est.statistic), abs=1.5)


def test_lookup_matches_reference_on_grid():
    from atcsrd.acoustics import _lookup

    for g in np.linspace(0.405, 1.64, 2001):
        assert _lookup(g) == pytest.approx(_reference_lookup(g), abs=1e-9)


@pytest.mark.parametrize("db", [0, 10, 20])
def test_laplacian_mixture(db):
    rng = np.random.default_rng(RNG_SEED + db)
    x = mix_at_snr(modulated_laplacian(rng), rng.normal(0, 1, 800 * 320), db)
    assert wada_snr(Waveform(x, 16000)).snr_db == pytest.approx(db, abs=3)


def test_scale_invariance():
    rng = np.random.default_rng(1)
    x = mix_at_snr(modulated_laplacian(rng, 200), rng.normal(0, 1, 200 * 320), 12)
    base = wada_snr(Waveform(x, 16000)).snr_db
    for k in (1e-2, 0.5, 3.0, 1e2):
        assert abs(wada_snr(Waveform(x * k, 16000)).snr_db - base) < 0.01


def test_more_noise_never_raises_estimate():
    rng = np.random.default_rng(3)
    s = modulated_laplacian(rng, 300)
    z = rng.normal(0, 1, s.size)
    ests = [wada_snr(Waveform(s + k * z, 16000)).snr_db for k in np.geomspace(1e-3, 10, 40)]
    assert all(b <= a + 1e-12 for a, b in zip(ests, ests[1:]))


def test_clamping_and_errors():
    rng = np.random.default_rng(4)
    clean = np.zeros(1600)
    clean[::97] = rng.normal(0, 1, clean[::97].size)
    e = wada_snr(Waveform(clean, 16000))
    assert -20 <= e.snr_db <= 100
    with pytest.raises(SilentInput):
        wada_snr(Waveform(np.zeros(1600), 16000))
    with pytest.raises(SilentInput):
        wada_snr(Waveform(np.full(1600, 1e-9), 16000))
    with pytest.raises(AudioError):
        wada_snr(Waveform(rng.normal(size=100), 8000))


def test_lookup_monotone_in_statistic():
    from atcsrd.acoustics import _lookup

    gs = np.linspace(0.40, 1.70, 5000)
    out = [_lookup(g) for g in gs]
    assert all(b >= a for a, b in zip(out, out[1:]))
    assert out[0] == -20 and out[-1] == 100


def test_snr_ratio():
    assert snr_ratio(15.8, 16.8) == pytest.approx(0.940, abs=5e-4)
    assert snr_ratio(18.9, 15.8) == pytest.approx(1.196, abs=5e-4)
    assert snr_ratio(7.0, 7.0) == 1.0


def test_histogram():
    h = snr_histogram([-20, -19, 3, 99.5, 100])
    assert h["edges"][0] == -20 and h["edges"][-1] == 100
    assert sum(h["counts"]) == 5 and h["counts"][0] == 2


def test_manifest_snr(tmp_path):
    rng = np.random.default_rng(5)
    x = mix_at_snr(modulated_laplacian(rng, 200), rng.normal(0, 1, 200 * 320), 10)
    write_wav(tmp_path / "a.wav", 0.3 * x / np.abs(x).max(), 16000)
    lines = [
        {"id": "whole", "audio_path": "a.wav", "turns": [{"role": "ATCO", "words": "a", "start_s": 0, "end_s": 1}]},
        {"id": "part", "audio_path": "a.wav", "offset_s": 1.0,
         "turns": [{"role": "PILOT", "words": "b", "start_s": 0, "end_s": 2}]},
        {"id": "noaudio", "turns": [{"role": "PILOT", "words": "c"}]},
    ]
    m = tmp_path / "m.jsonl"
    m.write_text("".join(json.dumps(d) + "\n" for d in lines))
    from atcsrd.transcript import read_manifest

    res = manifest_snr(read_manifest(m), tmp_path)
    assert set(res["entries"]) == {"whole", "part"}
    assert res["mean_db"] == pytest.approx(np.mean(list(res["entries"].values())))
    seg = read_wav(tmp_path / "a.wav").segment(1.0, 3.0)
    assert res["entries"]["part"] == wada_snr(seg).snr_db
