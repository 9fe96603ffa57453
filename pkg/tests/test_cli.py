import json
import subprocess
import sys

import numpy as np
import pytest

from kokotsakis.cli import generate_family, main, parse_samples
from kokotsakis.mesh import load_mesh, save_mesh

from conftest import well_conditioned_mesh


@pytest.fixture
def voss_files(tmp_path):
    assert main(["generate", "voss", "--seed", "3", "--out", str(tmp_path)]) == 0
    return tmp_path / "voss_3.mesh.json", tmp_path / "voss_3.angles.json"


def test_generate_is_deterministic():
    assert generate_family("voss", 3) == generate_family("voss", 3)
    assert generate_family("voss", 3) != generate_family("voss", 4)


def test_generate_to_stdout(capsys):
    assert main(["generate", "symmetric_14_23", "--seed", "1"]) == 0
    mesh = load_mesh(capsys.readouterr().out)
    assert mesh.meta["family"] == "symmetric_14_23"
    assert max(mesh.meta["relations"].values()) < 1e-12


def test_generate_sign_flip_records_flips(tmp_path):
    assert main(["generate", "sign_flip", "--seed", "2", "--flip", "w2", "v3", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "sign_flip_2.angles.json").read_text())
    assert doc["meta"]["flips"] == ["w2", "v3"]
    assert "alpha2 + gamma2 = pi" in doc["meta"]["relations"]


def test_check_flexible_mesh(voss_files, capsys):
    mesh_path, _ = voss_files
    assert main(["check", str(mesh_path), "--order", "2", "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "flexible"
    assert report["incidence"]["holds"] and report["incidence"]["agrees_with_chi"]
    assert report["derivatives"]["vanishing"] == [True, True]


def test_check_rigid_mesh(tmp_path, capsys):
    path = tmp_path / "rigid.json"
    path.write_bytes(save_mesh(well_conditioned_mesh(np.random.default_rng(0))))
    assert main(["check", str(path), "--order", "1", "--out", str(tmp_path / "reports")]) == 1
    text = capsys.readouterr().out
    assert "verdict: rigid" in text and "condition I fails" in text
    saved = json.loads((tmp_path / "reports" / "rigid.check.json").read_text())
    assert saved["verdict"] == "rigid"


def test_check_batch_takes_worst_code(voss_files, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["check", str(voss_files[0]), str(bad), "--order", "0"]) == 2
    assert "ParseError" in capsys.readouterr().err


def test_certify_exact_and_float(voss_files, capsys):
    _, angles_path = voss_files
    assert main(["certify", str(angles_path), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["exact"] and report["verdict"] == "flexible"
    main(["certify", str(angles_path), "--float", "--samples=-3..3", "--json"])
    report = json.loads(capsys.readouterr().out)
    assert not report["exact"] and len(report["samples"]) == 7


def test_certify_exact_needs_half_tangents(tmp_path, voss_files, capsys):
    doc = json.loads(voss_files[1].read_text())
    del doc["half_tangents"]
    path = tmp_path / "plain.json"
    path.write_text(json.dumps(doc))
    assert main(["certify", str(path), "--exact"]) == 2
    assert "half_tangents" in capsys.readouterr().err


def test_simulate_writes_frames(voss_files, tmp_path, capsys):
    out = tmp_path / "frames"
    assert main(["simulate", str(voss_files[0]), "--duration", "0.2", "--frames", "3", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "frame_000000.obj",
        "frame_000001.obj",
        "frame_000002.obj",
        "monitor.csv",
    ]
    rows = (out / "monitor.csv").read_text().splitlines()
    assert len(rows) == 4
    assert abs(float(rows[-1].split(",")[1]) - 1) < 1e-7
    assert "wrote 3 frames" in capsys.readouterr().out


def test_simulate_degenerate_start(tmp_path, capsys):
    from test_mesh import square_mesh
    from kokotsakis.mesh import KokotsakisMesh

    m = square_mesh()
    V = m.V.copy()
    V[2] = m.A[2] + m.a[2] + m.w[2]
    path = tmp_path / "flat.json"
    path.write_bytes(save_mesh(KokotsakisMesh(m.A, V, m.W)))
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "t = 0" in capsys.readouterr().err


def test_parse_samples():
    assert parse_samples("-2..2") == range(-2, 3)
    with pytest.raises(Exception):
        parse_samples("3..1")


def test_module_entry_reads_stdin(voss_files):
    data = voss_files[0].read_bytes()
    proc = subprocess.run(
        [sys.executable, "-m", "kokotsakis.cli", "check", "-", "--order", "0"],
        input=data,
        capture_output=True,
    )
    assert proc.returncode == 0
    assert b"verdict: flexible" in proc.stdout
