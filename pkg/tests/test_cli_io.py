import json

import numpy as np
import pytest

from gibbslab.cli import main
from gibbslab.io import read_samples, write_samples
from gibbslab.lattice import ISING, Alphabet, box


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), (json.loads(err) if err else None)


def test_gamma_command(capsys):
    code, out, _ = run(capsys, "gamma", "--phi", "ising:1", "--target", "0=+1")
    assert code == 0
    assert out["status"] == "ok"
    assert out["gamma"] == pytest.approx(1 / (1 + np.exp(-4.0)))


def test_gamma_command_error(capsys):
    code, _, err = run(capsys, "gamma", "--phi", "potts:1", "--target", "0=+1")
    assert code == 2
    assert err["status"] == "error" and err["command"] == "gamma"


def test_evolved_cond_zero(capsys):
    code, out, _ = run(capsys, "evolved-cond", "--phi", "zero", "--t", "1", "--window", "2")
    assert code == 0
    assert out["conditional"] == pytest.approx(0.5)


def test_evolve_writes_samples(capsys, tmp_path):
    path = tmp_path / "s.bin"
    code, out, _ = run(
        capsys, "evolve", "--phi", "ising:0.3", "--t", "0.5", "--volume", "4x3", "--seed", "9",
        "--reps", "3", "--sweeps", "5", "--out", str(path),
    )
    assert code == 0 and out["reps"] == 3 and out["sites"] == 12
    sf = read_samples(path)
    assert sf.values.shape == (3, 12)
    assert sf.seed == 9 and sf.t == 0.5
    code, again, _ = run(
        capsys, "evolve", "--phi", "ising:0.3", "--t", "0.5", "--volume", "4x3", "--seed", "9",
        "--reps", "3", "--sweeps", "5", "--out", str(tmp_path / "t.bin"),
    )
    assert (tmp_path / "t.bin").read_bytes() == path.read_bytes()


def test_experiment_command(capsys, tmp_path):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("[experiment]\nname = decimation_1d\nseed = 1\nengine = enum\n[grid]\nbeta = 1.0\nell = 2\n")
    code, out, _ = run(capsys, "experiment", "--config", str(cfg), "--out", str(tmp_path / "r"), "--workers", "1")
    assert code == 0
    assert sorted(p.rsplit("/", 1)[1] for p in out["written"]) == ["decimation_1d.csv", "decimation_1d.json"]


def test_experiment_command_bad_config(capsys, tmp_path):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("[experiment]\nname = decimation_1d\n")
    code, _, err = run(capsys, "experiment", "--config", str(cfg))
    assert code == 2 and "seed" in err["message"]


@pytest.mark.parametrize("alphabet", [ISING, Alphabet((0, 1, 2))])
def test_sample_roundtrip(tmp_path, alphabet):
    vol = box(1, 2)
    rng = np.random.default_rng(0)
    vals = np.array(alphabet.symbols)[rng.integers(0, alphabet.size, size=(4, len(vol)))]
    p = write_samples(tmp_path / "x.bin", vol, alphabet, vals, seed=2**63 + 5, t=1.25)
    sf = read_samples(p)
    assert sf.volume == vol
    assert sf.alphabet == alphabet
    assert sf.seed == 2**63 + 5 and sf.t == 1.25
    assert np.array_equal(sf.values, vals)


def test_sample_file_rejects_garbage(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOTSAMPLE" + bytes(40))
    with pytest.raises(ValueError):
        read_samples(p)
