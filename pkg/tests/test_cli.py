import io
import json
import math

import numpy as np
import pytest

from kreinext.cli import SpecError, main, parse_spec


def run(argv):
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


def write(tmp_path, obj, name="spec.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return str(p)


def test_energy_single_point_krein(tmp_path):
    spec = write(tmp_path, {"kind": "scalar", "points": [[0, 0, 0]], "matrix": "krein"})
    code, out = run(["energy", "--spec", spec])
    assert code == 0
    lines = dict(line.split(None, 1) for line in out.splitlines())
    assert abs(float(lines["rE"])) < 1e-15 and lines["status"] == "Converged"


def test_energy_vector_pair_json(tmp_path):
    spec = write(tmp_path, {"kind": "vector", "points": [[0, 0, 0], [0, 0, 1]], "matrix": "krein"})
    code, out = run(["energy", "--spec", spec, "--json", "--half-scale"])
    assert code == 0
    d = json.loads(out)
    assert abs(d["rE_scaled"] + 0.63) < 0.02 and d["scale_factor"] == 0.5
    assert d["status"] == "Converged"


def test_energy_json_round_trips_through_parser(tmp_path):
    src = {"kind": "scalar", "points": [[0, 0, 0], [1.5, 0, 0]], "matrix": [[0, 0.3], [0.3, 0]],
           "quadrature": {"abs_tol": 1e-9}}
    code, out = run(["energy", "--spec", write(tmp_path, src), "--json"])
    again = parse_spec(json.dumps(json.loads(out)["spec"]))
    first = parse_spec(json.dumps(src))
    assert np.array_equal(again.boundary_matrix().m, first.boundary_matrix().m)
    assert again.settings() == first.settings()


def test_energy_nonzero_trace_exit_2(tmp_path):
    spec = write(tmp_path, {"kind": "scalar", "points": [[0, 0, 0]], "matrix": [[1.0]]})
    code, out = run(["energy", "--spec", spec])
    assert code == 2 and "LogDivergent" in out and "trace" in out


def test_energy_bound_state_exit_3(tmp_path):
    spec = write(tmp_path, {"kind": "scalar", "points": [[0, 0, 0], [1, 0, 0]], "matrix": [[0, 0], [0, 0]]})
    code, out = run(["energy", "--spec", spec])
    assert code == 3 and "SpectralObstruction" in out


def test_energy_theta_flag():
    code, out = run(["energy", "--theta", "2.35584", "--half-scale"])
    assert code == 0
    scaled = [l for l in out.splitlines() if l.startswith("rE x")][0]
    assert abs(float(scaled.split()[-1]) + 0.4101) < 0.01


def test_energy_r_rescales(tmp_path):
    spec = write(tmp_path, {"kind": "scalar", "points": [[0, 0, 0], [0, 1, 0]], "matrix": "krein"})
    _, a = run(["energy", "--spec", spec, "--json"])
    _, b = run(["energy", "--spec", spec, "--json", "--r", "2.0"])
    a, b = json.loads(a), json.loads(b)
    assert abs(b["value"] - a["value"] / 2) < 1e-9 and abs(b["rE"] - a["rE"]) < 1e-9


def test_parse_error_reports_position(tmp_path, capsys):
    spec = write(tmp_path, '{\n  "kind": "scalar",\n  "points": [[0,0,0]]\n  "matrix": "krein"\n}')
    code, _ = run(["energy", "--spec", spec])
    assert code == 1
    assert "line 4" in capsys.readouterr().err


def test_semantic_error_location():
    text = '{\n  "kind": "scalar",\n  "points": [[0,0,0]],\n  "matrix": [[0, 1], [2, 0]]\n}'
    with pytest.raises(SpecError) as exc:
        parse_spec(text)
    assert exc.value.line == 4 and exc.value.col == 3


@pytest.mark.parametrize("bad", [
    {"kind": "spinor", "points": [[0, 0, 0]], "matrix": "krein"},
    {"kind": "scalar", "points": [[0, 0, 0]], "matrix": "maximal"},
    {"kind": "scalar", "points": [[0, 0, 0]], "matrix": "theta:x"},
    {"kind": "scalar", "points": [[0, 0, 0], [0, 0, 1]], "matrix": "theta:0.3"},
    {"kind": "scalar", "points": [[0, 0, 0], [0, 0, 0]], "matrix": "krein"},
    {"kind": "scalar", "points": [[0, 0, 0]], "matrix": "krein", "extra": 1},
    {"kind": "scalar", "points": [[0, 0, 0]]},
    {"kind": "scalar", "points": [[0, 0, 0]], "matrix": "krein", "quadrature": {"speed": 3}},
])
def test_bad_specs_exit_1(tmp_path, bad):
    code, _ = run(["energy", "--spec", write(tmp_path, bad)])
    assert code == 1


def test_missing_file_exit_1(tmp_path):
    assert run(["energy", "--spec", str(tmp_path / "nope.json")])[0] == 1


def test_symmetric_within_tolerance_accepted():
    spec = parse_spec(json.dumps({"kind": "scalar", "points": [[0, 0, 0], [1, 0, 0]],
                                  "matrix": [[0, 0.5], [0.5 + 1e-14, 0]]}))
    m = spec.boundary_matrix().m
    assert np.array_equal(m, m.T)


def test_sweep_csv_and_reproducible():
    argv = ["sweep", "--theta-min", "0.5", "--theta-max", "2.5", "--steps", "5"]
    code, a = run(argv)
    _, b = run(argv)
    assert code == 0 and a == b
    lines = a.splitlines()
    assert lines[0] == "theta,rE,abs_err,status" and len(lines) == 6
    thetas = [float(l.split(",")[0]) for l in lines[1:]]
    assert thetas == sorted(thetas)
    assert all(l.endswith(",Converged") for l in lines[1:])


def test_sweep_parallel_matches_serial():
    argv = ["sweep", "--theta-min", "0.1", "--theta-max", "3.0", "--steps", "4"]
    assert run(argv)[1] == run(argv + ["--jobs", "2"])[1]


def test_sweep_single_rows():
    _, out = run(["sweep", "--theta-min", str(math.pi / 2), "--theta-max", str(math.pi / 2), "--steps", "1"])
    assert abs(float(out.splitlines()[1].split(",")[1])) < 1e-6
    q = str(math.pi / 4)
    _, out = run(["sweep", "--theta-min", q, "--theta-max", q, "--steps", "1", "--half-scale"])
    assert abs(float(out.splitlines()[1].split(",")[1]) + 0.2158) < 0.01


def test_sweep_bad_range():
    assert run(["sweep", "--theta-min", "2", "--theta-max", "1"])[0] == 1
    assert run(["sweep", "--theta-max", "4"])[0] == 1


def test_admissible_reports(tmp_path):
    code, out = run(["admissible", "--spec", write(tmp_path, {"kind": "scalar", "points": [[0, 0, 0], [1, 0, 0]],
                                                              "matrix": "friedrichs"})])
    assert code == 0 and json.loads(out)["verdict"] == "Admissible"
    code, out = run(["admissible", "--spec", write(tmp_path, {"kind": "scalar", "points": [[0, 0, 0], [1, 0, 0]],
                                                              "matrix": [[0, 0], [0, 0]]})])
    d = json.loads(out)
    assert code == 3 and d["verdict"] == "Inadmissible"
    assert abs(d["discrete_spectrum"][0] + 0.3216) < 1e-4


def test_resolvent_command(tmp_path):
    spec = write(tmp_path, {"kind": "scalar", "points": [[0, 0, 0]], "matrix": [[0.0]]})
    code, out = run(["resolvent", "--spec", spec, "--lam=-1,0", "--x", "1,0,0", "--y=-1,0,0"])
    re_, im = json.loads(out)["kernel"]
    e2 = math.exp(-2)
    assert code == 0 and abs(re_ - 3 * e2 / (8 * math.pi)) < 1e-15 and im == 0
    _, up = run(["resolvent", "--spec", spec, "--lam", "2,0", "--x", "1,0,0", "--y", "0,1,0"])
    _, dn = run(["resolvent", "--spec", spec, "--lam", "2,0", "--below", "--x", "1,0,0", "--y", "0,1,0"])
    a, b = json.loads(up)["kernel"], json.loads(dn)["kernel"]
    assert abs(a[0] - b[0]) < 1e-15 and abs(a[1] + b[1]) < 1e-15
    assert run(["resolvent", "--spec", spec, "--lam", "oops", "--x", "1,0,0", "--y", "0,1,0"])[0] == 1
    assert run(["resolvent", "--spec", spec, "--lam", "-1,0", "--x", "1,0,0", "--y", "0,1,0"])[0] == 1


def test_kernel_diff_command(tmp_path):
    spec = write(tmp_path, {"kind": "scalar", "points": [[0, 0, 0]], "matrix": [[0.0]]})
    code, out = run(["kernel-diff", "--spec", spec, "--x", "1,0,0", "--y", "0,2,0"])
    v = json.loads(out)["kernel_sqrt_diff"]
    assert code == 0 and abs(v / (-1 / (2 * math.pi**2 * 2 * 9)) - 1) < 1e-4


def test_selfcheck_passes():
    code, out = run(["selfcheck"])
    assert code == 0 and "FAIL" not in out and out.count("PASS") >= 6
