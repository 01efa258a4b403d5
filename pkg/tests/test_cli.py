import hashlib
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cosh_atlas.cli import main, parse_complex, UsageError

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize(
    "text,value",
    [("1+0i", 1), ("0.3+0i", 0.3), ("1.5+1.5i", 1.5 + 1.5j), ("-2", -2), ("3i", 3j),
     ("-i", -1j), ("2-i", 2 - 1j), ("1e-3+2E2i", 0.001 + 200j), (".5-.5i", 0.5 - 0.5j), ("+4", 4)],
)
def test_parse_complex(text, value):
    assert parse_complex(text) == value


@pytest.mark.parametrize("text", ["abc", "1+", "i2", "", "1+2", "1+2j", "nan"])
def test_parse_complex_rejects(text):
    with pytest.raises(UsageError):
        parse_complex(text)


def test_classify_exit_codes(capsys):
    code, out, _ = run(capsys, "classify", "--fn", "h", "--z", "1+0i")
    v = json.loads(out)
    assert code == 0 and v["status"] == "FAST" and v["delay"] == 0
    assert "rate" in v
    code, out, _ = run(capsys, "classify", "--fn", "g", "--z", "0.3+0i")
    v = json.loads(out)
    assert code == 0 and v["status"] == "ATTRACTED"
    assert v["target"][0] == pytest.approx(0.589, abs=1e-3)
    code, _, err = run(capsys, "classify", "--fn", "h", "--z", "abc")
    assert code == 1 and "abc" in err
    code, out, _ = run(capsys, "classify", "--fn", "h", "--z", "0.97+2.2i")
    assert code == 2 and json.loads(out)["reason"] == "precision"


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as e:
        main(["classify", "--fn", "nope", "--z", "1"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
    code, _, _ = run(capsys, "classify", "--fn", "g", "--R", "0.5", "--z", "1")
    assert code == 1
    code, _, _ = run(capsys, "classify", "--q", "3", "--z", "1")
    assert code == 1


def test_classify_golden(capsys):
    _, out, _ = run(capsys, "classify", "--fn", "h", "--z", "1.5+1.5i")
    assert out == (DATA / "classify_h.json").read_text()


def test_schedule_golden(capsys):
    code, out, _ = run(capsys, "schedule", "--fn", "h", "--depth", "6")
    assert code == 0 and out == (DATA / "schedule_h.json").read_text()


def test_fixed_points(capsys):
    code, out, _ = run(capsys, "fixed-points", "--fn", "g", "--lo", "0", "--hi", "5")
    fps = json.loads(out)
    assert code == 0 and [p["type"] for p in fps] == ["attracting", "repelling"]
    code, out, _ = run(capsys, "fixed-points", "--fn", "h")
    assert code == 0 and json.loads(out) == []


def test_rate(capsys):
    code, out, _ = run(capsys, "rate", "--fn", "h", "--z", "1", "--n", "30")
    r = json.loads(out)
    assert code == 0 and len(r["b"]) == 31 and 0.1 < r["liminf_est"]


@pytest.mark.parametrize("fn", ["h", "g"])
def test_render_golden(tmp_path, capsys, fn):
    out = tmp_path / "x.ppm"
    code, _, _ = run(capsys, "render", "--fn", fn, "--grid-size", "15", "--res", "64", "--out", str(out))
    assert code == 0
    assert out.read_bytes() == (DATA / f"{fn}_s15_res64.ppm").read_bytes()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def _pixels(path, res):
    data = path.read_bytes()
    header = f"P6\n{res} {res}\n255\n".encode()
    assert data.startswith(header) and len(data) == len(header) + 3 * res * res
    return np.frombuffer(data[len(header):], dtype=np.uint8).reshape(res, res, 3)


def test_render_content(tmp_path, capsys):
    p = tmp_path / "h.ppm"
    run(capsys, "render", "--fn", "h", "--grid-size", "15", "--res", "65", "--out", str(p))
    img = _pixels(p, 65)
    # real-axis row: all certified (non-black, warm ramp)
    assert np.all(img[32].sum(axis=1) > 0)
    p = tmp_path / "g.ppm"
    run(capsys, "render", "--fn", "g", "--grid-size", "15", "--res", "65", "--out", str(p))
    img = _pixels(p, 65)
    # centre of the basin in the blue attracted ramp
    r, g_, b = img[32, 32]
    assert b > r


def test_render_single_pixel(tmp_path, capsys):
    p = tmp_path / "one.ppm"
    code, _, _ = run(capsys, "render", "--res", "1", "--out", str(p))
    assert code == 0
    _pixels(p, 1)


def test_render_unwritable(tmp_path, capsys):
    code, _, err = run(capsys, "render", "--res", "16", "--out", str(tmp_path / "missing" / "x.ppm"))
    assert code == 1 and "cannot write" in err


def test_certify_web_and_verify(tmp_path, capsys):
    cert = tmp_path / "c.json"
    code, out, _ = run(capsys, "certify-web", "--fn", "h", "--res", "256", "--out", str(cert))
    res = json.loads(out)
    assert code == 0 and res["verified"] and res["winding"] == 1
    assert cert.read_bytes() == (DATA / "h_web_res256.json").read_bytes()
    code, out, _ = run(capsys, "verify-cert", str(cert))
    assert code == 0 and json.loads(out)["verified"]
    # tamper: drop the closing vertex
    doc = json.loads(cert.read_text())
    doc["vertices"] = doc["vertices"][:-1]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify-cert", str(bad))
    assert code == 2 and not json.loads(out)["verified"]
    code, _, _ = run(capsys, "verify-cert", str(tmp_path / "nothing.json"))
    assert code == 1


def test_certify_web_exit_codes(capsys):
    code, out, _ = run(capsys, "certify-web", "--fn", "g", "--basepoint", "0", "--res", "128",
                       "--grid-size", "25.1327412287")
    assert code == 3 and json.loads(out)["status"] == "NotFound"
    code, _, err = run(capsys, "certify-web", "--fn", "h", "--res", "64", "--min-radius", "13")
    assert code == 1
    code, _, err = run(capsys, "certify-web", "--fn", "h", "--res", "64", "--basepoint", "5+0i")
    assert code == 1 and "certified" in err


def test_ray(capsys):
    code, out, _ = run(capsys, "ray", "--D", "30", "--X0", "10", "20")
    pts = json.loads(out)
    assert code == 0 and len(pts) == 2
    assert pts[0]["position"][0] == pytest.approx(2.1268, abs=1e-4)
    code, out, _ = run(capsys, "ray", "--address", "1,0", "--D", "30")
    assert json.loads(out)[0]["position"][1] == pytest.approx(2 * np.pi)
    code, _, _ = run(capsys, "ray", "--D", "3", "--X0", "1")
    assert code == 1


def test_selftest(capsys, monkeypatch):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(capsys, "selftest", "--suite", "rates")
    assert code == 0 and out.count("PASS") == 1 and "joukowski" not in out
    code, _, _ = run(capsys, "selftest", "--suite", "nope")
    assert code == 1
    monkeypatch.setenv("ATLAS_SELFTEST_FAULT", "cosh_sign")
    code, out, _ = run(capsys, "selftest")
    assert code == 4 and "Joukowski" in out


def test_threads_env_gives_same_bytes(tmp_path, monkeypatch, capsys):
    a, b = tmp_path / "a.ppm", tmp_path / "b.ppm"
    run(capsys, "render", "--res", "48", "--out", str(a), "--threads", "1")
    monkeypatch.setenv("ATLAS_THREADS", "3")
    run(capsys, "render", "--res", "48", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "cosh_atlas.cli", "classify", "--z", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["status"] == "FAST"
