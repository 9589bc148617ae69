import json


import numpy as np
import pytest
from click.testing import CliRunner
from scipy.io import wavfile

from relaudio import client as client_mod
from relaudio.cli import main
from relaudio.data import load_dataset
from relaudio.service import create_app


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """synth -> train-experts -> train-relnet -> train-convnet, all via the CLI."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    data = root / "data"
    models = root / "models"

    result = runner.invoke(main, ["synth", "--out", str(data), "--classes", "2",
                                  "--bags", "10", "--segments", "8", "--seed", "3"])
    assert result.exit_code == 0, result.output

    common = ["--batch-size", "8", "--patience", "6", "--min-delta", "0.002",
              "--max-epochs", "30", "--seed", "1"]
    result = runner.invoke(main, ["train-experts", "--data", str(data), "--out",
                                  str(models), "--hidden-units", "16", *common])
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, ["train-relnet", "--data", str(data), "--experts",
                                  str(models), "--out", str(models / "main.relnet"),
                                  *common])
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, ["train-convnet", "--data", str(data), "--out",
                                  str(models / "base.convnet"), "--hidden-units", "16",
                                  *common])
    assert result.exit_code == 0, result.output
    return root


def test_synth_dataset_loads(workspace):
    bags, names = load_dataset(workspace / "data")
    assert len(bags) == 20
    assert names == ["class0", "class1"]


def test_evaluate_writes_report(workspace, tmp_path):
    runner = CliRunner()
    report_path = tmp_path / "report.json"
    result = runner.invoke(main, ["evaluate", "--data", str(workspace / "data"),
                                  "--models", str(workspace / "models"),
                                  "--pad-to", "80", "--report", str(report_path)])
    assert result.exit_code == 0, result.output
    report = json.loads(report_path.read_text())
    assert set(report["conditions"]) == {"padded", "unpadded"}
    assert any(name.startswith("RELNET") for name in
               report["conditions"]["padded"]["scores"])
    assert "MV" in report["conditions"]["padded"]["scores"]


def test_relevance_export_and_plot(workspace, tmp_path):
    runner = CliRunner()
    features = sorted((workspace / "data" / "features").glob("*.mel"))[0]
    experts = sorted((workspace / "models").glob("*.expert"))
    profile = tmp_path / "profile.csv"
    svg = tmp_path / "curve.svg"
    result = runner.invoke(main, ["relevance", str(features),
                                  *[str(e) for e in experts],
                                  "--out", str(profile), "--plot", str(svg)])
    assert result.exit_code == 0, result.output
    assert profile.exists()
    header = profile.read_text().splitlines()[0]
    assert header == "segment,start_seconds,r_max,top_expert"
    assert svg.exists() and b"<svg" in svg.read_bytes()


def test_plot_two_profiles(workspace, tmp_path):
    runner = CliRunner()
    features = sorted((workspace / "data" / "features").glob("*.mel"))[0]
    experts = sorted((workspace / "models").glob("*.expert"))
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    runner.invoke(main, ["relevance", str(features), *[str(e) for e in experts],
                         "--out", str(first)])
    runner.invoke(main, ["relevance", str(features), *[str(e) for e in experts],
                         "--out", str(second), "--literal"])
    out = tmp_path / "pair.png"
    result = runner.invoke(main, ["plot", str(first), str(second), "--out", str(out),
                                  "--spectrogram", str(features)])
    assert result.exit_code == 0, result.output
    assert out.exists() and out.stat().st_size > 0


def test_features_command_extracts_wavs(tmp_path):
    runner = CliRunner()
    audio = tmp_path / "audio"
    audio.mkdir()
    rng = np.random.default_rng(0)
    for name in ("one", "two"):
        samples = (rng.uniform(-0.5, 0.5, 44100) * 32767).astype(np.int16)
        wavfile.write(audio / f"{name}.wav", 44100, samples)
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("path,label,verified\none.wav,noise,true\ntwo.wav,noise,true\n")
    out = tmp_path / "features"
    result = runner.invoke(main, ["features", "--manifest", str(manifest),
                                  "--audio-root", str(audio), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert sorted(f.name for f in out.glob("*.mel")) == ["one.mel", "two.mel"]


def test_client_functions_against_app(workspace):
    from fastapi.testclient import TestClient

    app = create_app(workspace / "models", workspace / "data" / "features",
                     workspace / "data" / "manifest.csv")
    # TestClient is an httpx.Client, which is all the thin client needs
    with TestClient(app) as http:
        experts = client_mod.list_experts(http)
        assert [e["id"] for e in experts] == ["class0", "class1"]

        clips = client_mod.list_clips(http)
        assert len(clips) == 20

        profile = client_mod.compute_relevance(http, clips[0]["id"],
                                               ["class0", "class1"])
        assert len(profile["segments"]) == 8

        verdict = client_mod.classify(http, clips[0]["id"], relnet_id="main")
        assert verdict["model"] == "relnet:main"

        with pytest.raises(client_mod.ServiceError) as err:
            client_mod.compute_relevance(http, "ghost", ["class0", "class1"])
        assert err.value.status_code == 404
