import io
import json

import numpy as np
import pytest

from qprelax.cli import EXIT_INPUT, EXIT_OK, main
from qprelax.instances import (instance_to_dict, load_instance,
                               random_bounded_instance, save_instance)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def family_file(tmp_path, fam, alpha):
    path = tmp_path / f"{fam}.json"
    path.write_text(json.dumps({"family": {"id": fam, "alpha": str(alpha)}}))
    return str(path)


def test_instance_roundtrip(tmp_path):
    inst = random_bounded_instance(3, 2, 1, 8)
    path = tmp_path / "inst.json"
    save_instance(inst, str(path))
    back = load_instance(str(path))
    np.testing.assert_array_equal(back.Q, inst.Q)
    np.testing.assert_array_equal(back.G, inst.G)
    np.testing.assert_array_equal(back.H, inst.H)


def test_validate_and_compare(tmp_path):
    path = family_file(tmp_path, "EX1", 1)
    code, text = run("validate", path)
    assert code == EXIT_OK and "slater point" in text
    code, text = run("compare", path)
    assert code == EXIT_OK, text
    assert "FAIL" not in text


def test_compare_random_instance(tmp_path):
    path = tmp_path / "r.json"
    save_instance(random_bounded_instance(3, 2, 1, 7), str(path))
    code, text = run("compare", str(path), "--problems", "r,rd,sr,srr,srrd")
    assert code == EXIT_OK, text


def test_input_errors(tmp_path):
    assert run("compare", str(tmp_path / "missing.json"))[0] == EXIT_INPUT
    assert run("nonsense")[0] == EXIT_INPUT
    doc = instance_to_dict(random_bounded_instance(2, 0, 1, 0))
    doc["p"], doc["H"], doc["h"] = 2, [["1", "0"], ["0", "1"]], ["0", "0"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert run("compare", str(path))[0] == EXIT_INPUT
    assert run("sweep", "EX9", "--from", "0", "--to", "1",
               "--step", "1")[0] == EXIT_INPUT


def test_sweep_tsv_format_and_determinism(tmp_path):
    args = ("sweep", "EX3", "--from", "-1", "--to", "1", "--step", "0.5")
    code, serial = run(*args)
    assert code == EXIT_OK
    code, parallel = run(*args, "--workers", "3",
                         "--out", str(tmp_path / "t.tsv"))
    assert code == EXIT_OK
    assert serial == parallel
    lines = (tmp_path / "t.tsv").read_text().splitlines()
    head = lines[0].split("\t")
    assert head[:3] == ["alpha", "nu_star", "nu_star_status"]
    assert head[3:7] == ["r_status", "r_value", "r_reference", "r_pass"]
    rows = [ln.split("\t") for ln in lines[1:]]
    assert [float(r[0]) for r in rows] == [-1.0, -0.5, 0.0, 0.5, 1.0]
    for r in rows:
        assert r[1] == "-inf" and r[2] == "neg_inf"
        assert r[head.index("r_value")] == "-inf"
        assert all(r[i] == "pass" for i, h in enumerate(head)
                   if h.endswith("_pass"))


def test_certify_and_dump(tmp_path):
    path = family_file(tmp_path, "EX1", 0.5)
    dump = tmp_path / "dump"
    code, text = run("--dump-program", str(dump), "certify", path)
    assert code == EXIT_OK, text
    assert "== RLT ==" in text and "== SDP-RLT ==" in text
    assert any(dump.iterdir())
    code, text = run("certify", path, "--dual-source", "srrd")
    assert code == EXIT_OK, text
