import json

import numpy as np
import pytest

from obsalloc.cli import main
from obsalloc.io import load_trajectories, read_json


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_gen_model_and_min_sensors(work, capsys):
    assert main(["gen-model", "model1", "--out", "m1.json"]) == 0
    assert (work / "m1.json.manifest.json").exists()
    assert main(["oracle", "min-sensors", "--model", "m1.json"]) == 0
    assert capsys.readouterr().out.strip() == "5"
    assert main(["gen-model", "model2", "--out", "m2.json"]) == 0
    assert main(["oracle", "min-sensors", "--model", "m2.json", "--accessible", "--out", "n.json"]) == 0
    assert read_json("n.json")["n_star"] == 10
    capsys.readouterr()
    assert main(["oracle", "rank", "--model", "m1.json", "--coords", "1,5"]) == 0
    assert capsys.readouterr().out.strip() == "8"


def test_model_file_schema(work):
    main(["gen-model", "model2", "--out", "m2.json"])
    data = read_json("m2.json")
    assert data["r"] == 20 and data["m"] == 20
    assert len(data["A"]) == 400 and len(data["B"]) == 400
    assert data["accessible"] == [j for j in range(1, 21) if j % 4]


def test_usage_errors_exit_1(work):
    assert main(["bogus"]) == 1
    assert main(["sysid", "--out", "x.json", "--bogus-flag"]) == 1
    main(["gen-model", "model1", "--out", "m1.json"])
    assert main(["sysid", "--model", "m1.json", "--T", "100", "--seed", "1", "--out", "G.json"]) == 1


def test_pipeline_and_failure_exit_2(work, capsys):
    main(["gen-model", "model1", "--out", "m1.json"])
    assert main(["simulate", "--model", "m1.json", "--n-bar", "5", "--s", "4", "--T", "4000",
                 "--seed", "7", "--out", "traj.npz"]) == 0
    sched, trajs = load_trajectories("traj.npz")
    assert sched.K == 16 and trajs[3].observations.shape == (4002, 5)
    assert main(["sysid", "--data", "traj.npz", "--out", "G.json"]) == 0
    assert main(["sysid", "--model", "m1.json", "--n-bar", "5", "--s", "4", "--T", "4000",
                 "--seed", "7", "--out", "G2.json"]) == 0
    assert (work / "G.json").read_bytes() == (work / "G2.json").read_bytes()
    G = read_json("G.json")
    assert G["d"] == 20 and G["s_min"] == 4 and G["s_max"] == 4 and G["T"] == 4000
    assert len(G["blocks"]) == 21 and len(G["blocks"][0]) == 400
    assert main(["recover", "--markov", "G.json", "--out", "AB.json"]) == 0
    AB = read_json("AB.json")
    A_true = np.asarray(read_json("m1.json")["A"]).reshape(20, 20)
    assert np.linalg.norm(np.asarray(AB["A"]).reshape(20, 20) - A_true, 2) < 0.3
    assert main(["allocate", "--estimator", "direct", "--a-hat", "AB.json", "--out", "alloc.json",
                 "--matrix-out", "mat.json"]) == 0
    alloc = read_json("alloc.json")
    assert alloc["n_hat"] == len(alloc["coords"]) == len(alloc["trace"])
    mat = read_json("mat.json")
    assert mat["rows"] == alloc["n_hat"] and mat["cols"] == 20
    capsys.readouterr()
    code = main(["allocate", "--estimator", "direct", "--markov", "G.json", "--candidates", "1,2,3,4",
                 "--out", "bad.json", "--error-json"])
    assert code == 2
    err = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert err["error"] == "not_observable_within_candidates"


def test_hankel_allocation_and_ho_kalman(work):
    main(["gen-model", "model2", "--out", "m2.json"])
    assert main(["sysid", "--model", "m2.json", "--n-bar", "5", "--s", "4", "--accessible",
                 "--T", "20000", "--seed", "1", "--out", "G.json"]) == 0
    G = read_json("G.json")
    assert G["d"] == 39 and G["measured"] == [j for j in range(1, 21) if j % 4]
    assert main(["allocate", "--estimator", "hankel", "--markov", "G.json",
                 "--candidates", "accessible", "--out", "alloc.json"]) == 0
    assert read_json("alloc.json")["n_hat"] == 10
    assert main(["ho-kalman", "--markov", "G.json", "--out", "hk.json", "--gap-factor", "1"]) == 0
    hk = read_json("hk.json")
    assert hk["similarity"] == "up-to-similarity" and hk["C_rows"] == 15


def test_direct_allocation_needs_threshold_without_stats(work):
    (work / "A.json").write_text(json.dumps({"r": 2, "A": [0.5, 0, 0, 0.5]}))
    assert main(["allocate", "--estimator", "direct", "--a-hat", "A.json", "--out", "a.json"]) == 1
    assert main(["allocate", "--estimator", "direct", "--a-hat", "A.json", "--threshold", "1e-3",
                 "--out", "a.json"]) == 0
    assert read_json("a.json")["coords"] == [1, 2]


def test_manifest_replay(work):
    main(["gen-model", "model1", "--out", "m1.json"])
    argv = ["sysid", "--model", "m1.json", "--n-bar", "5", "--s", "4", "--T", "2000",
            "--seed", "3", "--out", "G.json", "--threads", "2"]
    assert main(argv) == 0
    first = (work / "G.json").read_bytes()
    manifest = read_json("G.json.manifest.json")
    assert manifest["seed"] == 3 and "--threads" not in manifest["argv"]
    assert set(manifest["inputs"]) == {"m1.json"}
    (work / "G.json").unlink()
    assert main(manifest["argv"]) == 0
    assert (work / "G.json").read_bytes() == first
