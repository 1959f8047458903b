import json
import subprocess
import sys

import pytest

from newhouse_lab.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read(tmp_path, name):
    return (tmp_path / name).read_text()


class TestThickness:
    def test_kt(self, tmp_path):
        assert run(tmp_path, "thickness", "--system", "kt:t=0.5", "--generations", "10") == 0
        rep = json.loads(read(tmp_path, "thickness.json"))["reports"][0]
        assert abs(rep["tau"] - 0.5) <= 1e-9

    def test_middle_thirds_svg(self, tmp_path):
        assert run(tmp_path, "thickness", "--generations", "6", "--svg") == 0
        svg = read(tmp_path, "thickness.svg")
        assert svg.startswith("<svg") and "href" not in svg
        man = json.loads(read(tmp_path, "manifest.json"))
        assert man["outputs"] == ["thickness.json", "thickness.svg"]

    def test_tent_witness(self, tmp_path):
        assert run(tmp_path, "thickness", "--system", "tent:m=5", "--generations", "8") == 0
        rep = json.loads(read(tmp_path, "thickness.json"))["reports"][0]
        assert rep["witness_gap"][0] < rep["witness_gap"][1]
        assert rep["tau"] == pytest.approx(7.0, rel=1e-12)

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"system": {"preset": "kt", "t": 0.8}, "generations": [9]}))
        assert main(["thickness", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        rep = json.loads((tmp_path / "o" / "thickness.json").read_text())["reports"][0]
        assert rep["tau"] == pytest.approx(2.0, rel=1e-9)


class TestCertify:
    def test_certified(self, tmp_path):
        assert run(tmp_path, "certify", "--N", "200") == 0
        man = json.loads(read(tmp_path, "manifest.json"))
        assert man["status"] == "Certified"
        assert man["derived"]["delta_m"] == 1 / 31
        assert {"eps_m", "rho_m"} <= set(man["derived"])

    def test_inconclusive(self, tmp_path):
        assert run(tmp_path, "certify", "--t", "0.3", "--m", "4") == 2

    def test_bad_t(self, tmp_path, capsys):
        assert run(tmp_path, "certify", "--t", "1.5") == 1
        assert "t must lie" in capsys.readouterr().err


class TestOrbit:
    def test_corner(self, tmp_path):
        assert run(tmp_path, "orbit", "--x0", "1", "--y0", "0", "--n", "5") == 0
        text = read(tmp_path, "orbit.csv")
        lines = text.split("\n")
        assert lines[0] == "n,x,y,side,A,B,D"
        xs = [float(l.split(",")[1]) for l in lines[1:] if l]
        assert xs == [1.0] + [-1.0] * 5
        assert "\r" not in text

    def test_empty(self, tmp_path):
        assert run(tmp_path, "orbit", "--n", "0") == 0
        assert read(tmp_path, "orbit.csv") == "n,x,y,side,A,B,D\n"


class TestOthers:
    def test_gaplemma(self, tmp_path):
        assert run(tmp_path, "gaplemma", "--first", "kt:t=0.8", "--second", "kt:t=0.8,shift=0.013") == 0
        out = json.loads(read(tmp_path, "gaplemma.json"))
        assert out["case"] == "intersect" and out["witness"]["depth"] > 0

    def test_hyper_vacuous(self, tmp_path):
        assert run(tmp_path, "hyper", "--eps", "1.5") == 0
        out = json.loads(read(tmp_path, "hyper.json"))
        assert out["n_samples"] == 0 and out["vacuous"]

    def test_hyper(self, tmp_path):
        assert run(tmp_path, "hyper", "--grid", "40", "--N", "30", "--N-backward", "4") == 0
        out = json.loads(read(tmp_path, "hyper.json"))
        assert out["n_samples"] > 0 and out["cone_violations_outside_basins"] == 0

    def test_returns(self, tmp_path):
        assert run(tmp_path, "returns", "--g", "3", "--budget", "20") == 0
        lines = read(tmp_path, "returns.csv").splitlines()
        assert lines[0] == "x,y,verdict,m,sink_id,trace_length"
        assert all(",BudgetExceeded," in l for l in lines[1:])

    def test_returns_boxes(self, tmp_path):
        assert run(tmp_path, "returns", "--g", "3", "--budget", "300", "--boxes", "2") == 0
        boxes = json.loads(read(tmp_path, "boxes.json"))
        assert boxes["cycles"] and boxes["cycles"][0]["x_multiplier"] == 0.0

    @pytest.mark.parametrize("kind", ["cover", "lplus", "witness", "orbit"])
    def test_plot(self, tmp_path, kind):
        assert run(tmp_path, "plot", "--kind", kind, "--g", "5") == 0
        svg = read(tmp_path, f"{kind}.svg")
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")

    def test_lplus_endpoints(self, tmp_path):
        from newhouse_lab.skew import make_bc

        assert run(tmp_path, "plot", "--kind", "lplus") == 0
        p = make_bc(0.6, 5).params
        assert f"{-1 + p.rho * p.t / 2:.6g}" in read(tmp_path, "lplus.svg")


def test_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["returns", "--g", "3", "--budget", "100", "--out", str(tmp_path / d)]) == 0
        assert main(["hyper", "--grid", "30", "--N", "20", "--N-backward", "2", "--out", str(tmp_path / d / "h")]) == 0
    for name in ("returns.csv", "returns.json", "manifest.json", "h/hyper.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_module_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "newhouse_lab", "certify", "--t", "0.3", "--m", "4",
                        "--out", str(tmp_path)], capture_output=True)
    assert r.returncode == 2
