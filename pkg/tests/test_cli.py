import json
import wave

import numpy as np
import pytest

from opusvocoder import cli, features, modelio, synthetic


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    features.write_feature_dump(synthetic.random_frames(100, seed=1), d / "in.opnv")
    assert cli.main(["make-test-model", str(d / "ref.lpnw")]) == 0
    assert cli.main(["make-test-model", str(d / "small.lpnw"), "--config", "small"]) == 0
    assert cli.main(["features", str(d / "in.opnv"), str(d / "in.fmtx")]) == 0
    return d


def test_features_matrix_shape(workdir):
    m = cli.parse_matrix((workdir / "in.fmtx").read_bytes())
    assert m.shape == (100, 54) and m.dtype == np.dtype("<f4")


def test_features_json_summary(workdir, tmp_path, capsys):
    assert cli.main(["features", str(workdir / "in.opnv"), str(tmp_path / "o.fmtx"),
                     "--json-summary"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["frames"] == 100 and len(summary["mean"]) == 54


def test_features_empty_dump(tmp_path):
    features.write_feature_dump([], tmp_path / "e.opnv")
    assert cli.main(["features", str(tmp_path / "e.opnv"), str(tmp_path / "e.fmtx")]) == 0
    assert cli.parse_matrix((tmp_path / "e.fmtx").read_bytes()).shape == (0, 54)


def test_features_bad_magic(tmp_path, capsys):
    (tmp_path / "bad.opnv").write_bytes(b"JUNK" + bytes(8))
    assert cli.main(["features", str(tmp_path / "bad.opnv"), str(tmp_path / "o")]) == 2
    assert "OPNV" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_features_missing_input(tmp_path):
    assert cli.main(["features", str(tmp_path / "nope"), str(tmp_path / "o")]) == 1


def test_synth_wav_length_and_determinism(workdir, tmp_path):
    outs = []
    for name in ("a.wav", "b.wav"):
        assert cli.main(["synth", str(workdir / "in.fmtx"), str(workdir / "ref.lpnw"),
                         str(tmp_path / name), "--seed", "3"]) == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    audio = cli.read_wav(tmp_path / "a.wav")
    assert len(audio) == 16000


def test_synth_report_dir(workdir, tmp_path, capsys):
    rep = tmp_path / "rep"
    assert cli.main(["synth", str(workdir / "in.fmtx"), str(workdir / "small.lpnw"),
                     str(tmp_path / "s.wav"), "--report-dir", str(rep), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["samples"] == 16000
    assert (rep / "synthesis.png").stat().st_size > 0
    assert (rep / "frames.csv").read_text().count("\n") == 101


def test_synth_missing_model_leaves_nothing(workdir, tmp_path, capsys):
    out = tmp_path / "x.wav"
    code = cli.main(["synth", str(workdir / "in.fmtx"), str(tmp_path / "none.lpnw"), str(out)])
    assert code == 1
    assert capsys.readouterr().err.startswith("vocoder model:")
    assert list(tmp_path.iterdir()) == []


def test_synth_error_stages(workdir, tmp_path, capsys):
    (tmp_path / "bad.fmtx").write_bytes(b"nope")
    assert cli.main(["synth", str(tmp_path / "bad.fmtx"), str(workdir / "small.lpnw"),
                     str(tmp_path / "o.wav")]) == 2
    assert "features:" in capsys.readouterr().err
    assert cli.main(["synth", str(workdir / "in.fmtx"), str(workdir / "small.lpnw"),
                     str(tmp_path / "no_dir" / "o.wav")]) == 1
    assert "output:" in capsys.readouterr().err


def test_bench_json(workdir, tmp_path, capsys):
    rep = tmp_path / "bench"
    assert cli.main(["bench", str(workdir / "ref.lpnw"), "--seconds", "0.2", "--json",
                     "--report-dir", str(rep)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert 2.3 <= res["gflops_analytic"] <= 3.5
    assert res["real_time_factor"] > 0
    assert (rep / "flops.png").exists() and (rep / "flops.csv").exists()


def test_bench_zero_seconds(workdir, capsys):
    assert cli.main(["bench", str(workdir / "small.lpnw"), "--seconds", "0", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["seconds"] == 0


def test_bench_two_streams(workdir, capsys):
    assert cli.main(["bench", str(workdir / "small.lpnw"), "--seconds", "0.1",
                     "--streams", "2", "--json"]) == 0
    assert len(json.loads(capsys.readouterr().out)["stream_wall_seconds"]) == 2


def test_model_info_reference(workdir, tmp_path, capsys):
    assert cli.main(["model-info", str(workdir / "ref.lpnw"), "--json",
                     "--report-dir", str(tmp_path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["densities"] == pytest.approx({"w_u": 0.05, "w_r": 0.05, "w_h": 0.2}, abs=1e-3)
    assert abs(info["mean_density"] - 0.1) < 1e-3
    assert abs(info["equivalent_units"] - 123.0) < 0.1
    assert abs(info["sample_rate_weights"] - 72000) <= 3600
    assert info["checksum"] == f"{modelio.file_checksum(workdir / 'ref.lpnw'):016x}"
    assert (tmp_path / "densities.png").exists()


def test_model_info_text(workdir, capsys):
    assert cli.main(["model-info", str(workdir / "small.lpnw")]) == 0
    out = capsys.readouterr().out
    assert "equivalent units" in out and "sample-rate weights" in out


def test_model_info_tampered(workdir, tmp_path, capsys):
    data = bytearray((workdir / "small.lpnw").read_bytes())
    data[100] ^= 0xFF
    (tmp_path / "t.lpnw").write_bytes(bytes(data))
    assert cli.main(["model-info", str(tmp_path / "t.lpnw")]) == 2
    assert "checksum" in capsys.readouterr().err


def test_make_test_model_deterministic(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["make-test-model", str(tmp_path / name), "--config", "small",
                         "--seed", "5"]) == 0
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_make_test_model_rejects_zero_width(tmp_path):
    assert cli.main(["make-test-model", str(tmp_path / "z"), "--n-a", "0"]) == 2
    assert not (tmp_path / "z").exists()


def test_bad_arguments():
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["bench", "m", "--seconds", "-1"]) == 2


def test_read_wav_validation(tmp_path):
    path = tmp_path / "stereo.wav"
    with wave.open(str(path), "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(16000)
        w.writeframes(bytes(8))
    with pytest.raises(ValueError, match="channels"):
        cli.read_wav(path)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(8000)
        w.writeframes(bytes(8))
    with pytest.raises(ValueError, match="sample_rate"):
        cli.read_wav(path)
    (tmp_path / "junk.wav").write_bytes(b"not a wav")
    with pytest.raises(ValueError, match="RIFF"):
        cli.read_wav(tmp_path / "junk.wav")


def test_wav_round_trip(tmp_path):
    x = np.sin(np.linspace(0, 20, 1600)) * 0.5
    (tmp_path / "w.wav").write_bytes(cli.wav_bytes(x))
    assert np.max(np.abs(cli.read_wav(tmp_path / "w.wav").samples - x)) < 1e-4


def test_matrix_round_trip():
    m = np.random.default_rng(0).normal(size=(3, 54)).astype(np.float32)
    assert np.array_equal(cli.parse_matrix(cli.matrix_bytes(m)), m)
    with pytest.raises(ValueError):
        cli.parse_matrix(cli.matrix_bytes(m)[:-4])
