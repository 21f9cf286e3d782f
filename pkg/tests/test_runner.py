"""runner / main 통합 테스트

설정 파일에서 하위 명령을 실행하고 종료 코드와 산출물을 확인합니다.
"""

import json

import openpyxl
import pytest

import main
from src.core import runner
from src.core.artifacts import read_csv
from src.core.config import load_config
from src.core.eigensolver import EigenSolverConvergenceError
from src.core.holonomy import HolonomyError
from src.core.runner import EXIT_INVALID, EXIT_NONCONVERGED, EXIT_OK, run


@pytest.fixture
def abelian_config(write_config, abelian_config_text):
    return write_config(abelian_config_text)


@pytest.fixture
def limit_config(write_config, out_dir):
    def _make(m: int, k: int):
        text = f"""
[model]
kind = "limit"
s = 0.1
k = {k}
m = {m}

[solver]
n_eigs = 4

[output]
dir = "{out_dir.as_posix()}"
"""
        return write_config(text, f"limit_{m}_{k}.toml")

    return _make


class TestExitCodes:
    """종료 코드 테스트"""

    def test_malformed_config(self, write_config, out_dir):
        """잘못된 설정은 2, 산출물 없음"""
        path = write_config(f'[model]\ncolor = "red"\n[output]\ndir = "{out_dir.as_posix()}"\n')
        result = run("spectrum", path)
        assert result.status == EXIT_INVALID
        assert result.artifacts == []
        assert list(out_dir.iterdir()) == []

    def test_missing_config(self, tmp_path):
        """설정 파일 없음"""
        assert run("bs", tmp_path / "none.toml").status == EXIT_INVALID

    def test_unknown_subcommand(self, abelian_config):
        """알 수 없는 하위 명령"""
        assert run("dance", abelian_config).status == EXIT_INVALID

    def test_unsupported_model(self, limit_config):
        """limit 모델의 potential 은 지원하지 않음"""
        assert run("potential", limit_config(1, 1)).status == EXIT_INVALID

    def test_nonconverged(self, abelian_config, monkeypatch):
        """고윳값 미수렴은 3"""

        def fail(config, out):
            raise EigenSolverConvergenceError("no", {"krylov_dim": 8})

        monkeypatch.setitem(runner.HANDLERS, "spectrum", fail)
        assert run("spectrum", abelian_config).status == EXIT_NONCONVERGED

    @pytest.mark.parametrize(
        "error, status",
        [
            (HolonomyError("bad root"), EXIT_INVALID),
            (EigenSolverConvergenceError("no", {}), EXIT_NONCONVERGED),
        ],
    )
    def test_partial_artifacts_removed(self, abelian_config, out_dir, monkeypatch, error, status):
        """처리 중 실패하면 이미 쓴 산출물을 지움"""

        def fail_after_csv(config, out):
            out.csv(["k"], [[1]])
            out.json({"k": 1})
            raise error

        monkeypatch.setitem(runner.HANDLERS, "bs", fail_after_csv)
        result = run("bs", abelian_config)
        assert result.status == status
        assert result.artifacts == []
        assert list(out_dir.iterdir()) == []


class TestSubcommands:
    """하위 명령 산출물 테스트"""

    def test_spectrum_abelian(self, abelian_config, out_dir):
        """s=0.2, k=1: 영점 근처 1개"""
        result = run("spectrum", abelian_config)
        assert result.status == EXIT_OK
        csv_path = out_dir / f"spectrum-{result.config_hash}.csv"
        assert csv_path in result.artifacts
        table = read_csv(csv_path)
        assert table["meta"]["subcommand"] == "spectrum"
        assert table["header"] == ["index", "eigenvalue", "residual", "below_threshold", "count_below"]
        assert {row[4] for row in table["rows"]} == {"1"}
        data = json.loads((out_dir / f"spectrum-{result.config_hash}.json").read_text(encoding="utf-8"))
        assert data["count_below"] == 1
        assert data["config_hash"] == result.config_hash

    def test_spectrum_limit(self, limit_config, out_dir):
        """m=1 은 가우스 구조, m=2·k=3 은 영 구조"""
        gaussian = run("spectrum", limit_config(1, 1))
        data = json.loads((out_dir / f"spectrum-{gaussian.config_hash}.json").read_text(encoding="utf-8"))
        assert data["count_below"] == 1
        assert data["meta"]["structure"] == "gaussian"
        assert data["eigenvalues"][1] == pytest.approx(1.0, rel=1e-4)

        zero = run("spectrum", limit_config(2, 3))
        data = json.loads((out_dir / f"spectrum-{zero.config_hash}.json").read_text(encoding="utf-8"))
        assert data["eigenvalues"] == []
        assert data["meta"]["structure"] == "zero"

    def test_bs(self, abelian_config, out_dir):
        """k = 1, 2 레벨 표"""
        result = run("bs", abelian_config)
        data = json.loads((out_dir / f"bs-{result.config_hash}.json").read_text(encoding="utf-8"))
        assert data["levels"] == {"1": {"1": 1}, "2": {"1": 1, "2": 3}}
        assert data["n_points"] == 5

    def test_csv_deterministic(self, abelian_config, out_dir):
        """같은 설정과 시드는 같은 CSV 바이트"""
        first = run("bs", abelian_config)
        path = out_dir / f"bs-{first.config_hash}.csv"
        before = path.read_bytes()
        second = run("bs", abelian_config)
        assert second.config_hash == first.config_hash
        assert path.read_bytes() == before

    def test_seed_override(self, abelian_config):
        """--seed 는 해시를 바꿈"""
        assert run("bs", abelian_config, seed=99).config_hash != run("bs", abelian_config).config_hash

    def test_potential(self, abelian_config, out_dir):
        """준평탄 W 표 (s 1개 × 반지름 3개)"""
        result = run("potential", abelian_config)
        table = read_csv(out_dir / f"potential-{result.config_hash}.csv")
        assert len(table["rows"]) == 3
        assert float(table["rows"][0][3]) == pytest.approx(0.2)

    def test_lower_bound(self, abelian_config, out_dir):
        """R = 2, 3 하한과 지수 맞춤"""
        result = run("lower-bound", abelian_config)
        data = json.loads((out_dir / f"lower-bound-{result.config_hash}.json").read_text(encoding="utf-8"))
        assert [r["holds"] for r in data["reports"]] == [True, True]
        assert all(r["infimum"] >= r["floor"] * (1 - 1e-9) for r in data["reports"])
        assert data["exponent"] > 0

    def test_gh(self, abelian_config, out_dir):
        """평탄 아벨 왜곡 0, 측도 정확, BS 분리"""
        result = run("gh", abelian_config)
        data = json.loads((out_dir / f"gh-{result.config_hash}.json").read_text(encoding="utf-8"))
        assert data["distortion"][0]["sup"] < 1e-9
        assert data["measure"][0]["error"] < 1e-9
        assert data["bs_separation"][0]["distance"] > 0

    @pytest.mark.slow
    def test_sweep(self, write_config, abelian_config_text, out_dir):
        """k² 영점 근처 개수와 엑셀 출력"""
        text = abelian_config_text.replace('formats = ["csv", "json"]', 'formats = ["csv", "json", "jsonl", "xlsx"]')
        result = run("sweep", write_config(text))
        assert result.status == EXIT_OK
        lines = (out_dir / f"sweep-{result.config_hash}.jsonl").read_text(encoding="utf-8").splitlines()
        head, *records = [json.loads(line) for line in lines]
        assert head["config_hash"] == result.config_hash
        assert [(r["k"], r["near_zero"]) for r in records] == [(1, 1), (2, 4)]
        wb = openpyxl.load_workbook(out_dir / f"sweep-{result.config_hash}.xlsx")
        assert "sweep" in wb.sheetnames

    @pytest.mark.slow
    def test_oracle(self, abelian_config, out_dir):
        """기준값 파일 oracle.json: 계산값과 기준값이 짝지어 일치"""
        result = run("oracle", abelian_config)
        data = json.loads((out_dir / "oracle.json").read_text(encoding="utf-8"))
        assert result.status == EXIT_OK

        geo = data["geometry"]
        assert geo["chi_t_star"]["computed"] == pytest.approx(0.1, abs=1e-12)
        assert geo["zeta_s_0.1"]["computed"] == pytest.approx(geo["zeta_s_0.1"]["reference"], abs=1e-12)

        sf = data["semiflat"]
        assert sf["ov_matching_W"]["computed"] == pytest.approx(sf["ov_matching_W"]["reference"], rel=1e-12)
        assert sf["frame_imag_positive_definite"] is True
        nb = sf["max_fiber_eigenvalue_1+i"]
        assert nb["computed"] == pytest.approx(nb["reference"], rel=1e-12)
        assert nb["computed"] == pytest.approx(nb["closed_form"], rel=1e-12)

        ov = data["ooguri_vafa"]
        assert ov["a_half"]["computed"] == pytest.approx(0.18374, abs=1e-5)
        for key in ("a_half", "a_1/2e", "euler_gamma", "vsf_0.1", "orbit_length"):
            assert ov[key]["computed"] == pytest.approx(ov[key]["reference"], rel=1e-12)
        assert ov["vsf_0.1"]["computed"] == pytest.approx(7.3286, abs=1e-4)
        assert ov["dphi_du3_symmetric_max"] < 1e-12
        assert [c["s"] for c in ov["closeness"]] == [0.05, 0.02, 0.01]
        for c in ov["closeness"]:
            assert c["computed"] == pytest.approx(c["reference"], rel=0.05)

        hol = data["holonomy"]
        assert hol["H_0_0.1"] == pytest.approx(hol["H_0_0.1_formula"], rel=1e-12)
        assert hol["planted_root_error"] < 1e-10
        assert hol["bs_count_k3"]["computed"] == hol["bs_count_k3"]["reference"] == 9
        assert data["bs_levels"]["4"] == {"1": 1, "2": 3, "4": 12}
        assert data["rho_k_zero"] == {"m2_k3": True, "m1_k3": False}

        solver = data["eigensolver"]
        dirichlet = solver["dirichlet_1d"]
        assert dirichlet["computed"] == pytest.approx(dirichlet["reference"], rel=1e-7)
        gaussian = solver["gaussian_operator"]
        assert gaussian["computed"] == pytest.approx(gaussian["reference"], abs=1e-7)
        assert solver["hermite_galerkin_k2"]["computed"] == pytest.approx(
            solver["hermite_galerkin_k2"]["reference"], abs=1e-8
        )

        mag = data["magnetic"]
        for k in ("1", "2", "3"):
            assert mag["near_zero"][k]["computed"] == mag["near_zero"][k]["reference"]
            assert mag["near_zero"][k]["first_gap_over_k"] == pytest.approx(1.0, abs=0.2)
        assert mag["mode_truncation_change"] < 1e-6
        lb = mag["lower_bound_delta0"]
        assert lb["computed"] >= lb["reference"] - lb["h_metric"] ** 2

        gh = data["gh"]
        assert gh["abelian_measure"]["error"] < 1e-12 * gh["abelian_measure"]["reference"]
        assert gh["bs_separation"]["exponent"] == pytest.approx(-0.5, abs=0.1)

    def test_report(self, abelian_config, out_dir):
        """bs 다음 report 는 마크다운 보고서 생성"""
        bs = run("bs", abelian_config)
        result = run("report", abelian_config)
        assert result.status == EXIT_OK
        text = (out_dir / f"report-{bs.config_hash}.md").read_text(encoding="utf-8")
        assert bs.config_hash in text
        assert "보어-조머펠트" in text

    def test_report_without_artifacts(self, abelian_config):
        """산출물이 없으면 2"""
        assert run("report", abelian_config).status == EXIT_INVALID


class TestMain:
    """명령줄 진입점 테스트"""

    def test_prints_artifacts(self, abelian_config, out_dir, capsys):
        """산출물 경로를 stdout 에 출력"""
        status = main.main(["bs", "--config", str(abelian_config), "-q"])
        assert status == EXIT_OK
        assert "bs-" in capsys.readouterr().out

    def test_out_override(self, abelian_config, tmp_path):
        """--out 디렉토리 사용"""
        target = tmp_path / "elsewhere"
        assert main.main(["bs", "--config", str(abelian_config), "--out", str(target)]) == EXIT_OK
        config = load_config(abelian_config).with_overrides(out=str(target))
        assert (target / f"bs-{config.config_hash}.csv").exists()

    def test_bad_subcommand(self, abelian_config):
        """argparse 선택지 밖"""
        with pytest.raises(SystemExit):
            main.main(["dance", "--config", str(abelian_config)])
