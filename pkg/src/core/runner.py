"""실험 실행기 모듈

설정을 읽어 하위 명령을 실행하고 산출물을 씁니다.
종료 코드: 0 성공, 2 검증 실패, 3 수치 미수렴.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from src.core.artifacts import ArtifactError, ArtifactSet
from src.core.config import ConfigError, ExperimentConfig, apply_threads, load_config
from src.core.eigensolver import EigenSolverConvergenceError, EigenSolverError, eigsh_reference, lowest_eigs
from src.core.geometry import GeometryError, ModelParams, chi, zeta_s
from src.core.gh_lab import (
    GHLabError,
    bs_separation,
    fiber_diameter_constants,
    measure_check,
    pairwise_distances,
    sample_and_distort,
    write_distance_matrix,
)
from src.core.harmonic import HarmonicShiftError
from src.core.holonomy import (
    BSSummary,
    BSWindow,
    HolonomyError,
    bs_points_ov,
    bs_points_semiflat,
    holonomy_H,
    holonomy_H_numeric,
)
from src.core.limit_spectra import (
    LimitSpectraError,
    exact_gaussian_spectrum,
    gaussian_operator,
    gaussian_spectrum,
    hermite_galerkin_spectrum,
    rho_k_structure,
)
from src.core.logger import get_logger
from src.core.magnetic import (
    MagneticSolverError,
    abelian_cell,
    abelian_window,
    dbar_spectrum,
    fit_power_law,
    general,
    ov_window,
    verify_lower_bound,
)
from src.core.ooguri_vafa import (
    OoguriVafaError,
    OVParams,
    euler_gamma,
    orbit_length,
    ov_a_s,
    ov_compare,
    ov_F,
    ov_potential,
    ov_vsf,
)
from src.core.semiflat import (
    LatticeFamily,
    SemiFlatError,
    frame_is_10,
    max_fiber_eigenvalue,
    sf_fiber_metric,
    sf_frame10,
    sf_potential,
)

logger = get_logger("runner")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3

SUBCOMMANDS = ("potential", "bs", "spectrum", "lower-bound", "gh", "sweep", "oracle", "report")
GH_MODELS = {"semi-flat-abelian": "abelian", "ooguri-vafa-window": "ooguri-vafa", "limit": "limit"}
SAMPLE_RADII = (0.05, 0.1, 0.2)
UNIT_CELL = BSWindow.half_open((0.0, 0.0), (1.0, 1.0))

INVALID_ERRORS = (
    ConfigError,
    GeometryError,
    SemiFlatError,
    HarmonicShiftError,
    OoguriVafaError,
    HolonomyError,
    LimitSpectraError,
    EigenSolverError,
    MagneticSolverError,
    GHLabError,
    ArtifactError,
)


@dataclass
class RunResult:
    """실행 결과 (종료 코드, 산출물 경로)"""

    status: int
    subcommand: str
    config_hash: Optional[str] = None
    artifacts: List[Path] = field(default_factory=list)
    message: str = ""


def _ov_params(config: ExperimentConfig, s: Optional[float] = None) -> OVParams:
    model = config.model
    ovp = OVParams.from_model(model.params, shift=model.shift, branch=model.branch)
    return ovp.with_s(s) if s is not None else ovp


def _unsupported(subcommand: str, kind: str) -> ConfigError:
    return ConfigError(f"{subcommand} 는 모델 {kind!r} 을 지원하지 않습니다")


# --- potential ---


def cmd_potential(config: ExperimentConfig, out: ArtifactSet) -> None:
    kind = config.model.kind
    params = config.model.params
    rows: List[Sequence[Any]] = []
    if kind == "ooguri-vafa-window":
        header = [
            "s", "y_re", "y_im", "vsf", "closeness_constant", "lower_ratio_min",
            "upper_ratio_min", "sf_ratio_min", "sf_ratio_max", "exponential_regime",
        ]
        for s in config.sweep.s:
            ovp = _ov_params(config, s)
            for r in SAMPLE_RADII:
                if r >= ovp.delta0:
                    continue
                y = complex(0.0, r)
                cmp = ov_compare(y, s, ovp)
                rows.append([
                    s, y.real, y.imag, ov_vsf(y, ovp), cmp.closeness_constant, cmp.lower_ratio_min,
                    cmp.upper_ratio_min, cmp.sf_ratio_min, cmp.sf_ratio_max, cmp.exponential_regime,
                ])
    elif kind in ("semi-flat-abelian", "semi-flat-general"):
        header = ["s", "y_re", "y_im", "W", "b_re", "b_im", "fiber_max_eig", "frame10_residual"]
        if kind == "semi-flat-abelian":
            lattice = LatticeFamily.abelian()
        else:
            lattice = LatticeFamily.ov_matching(config.model.shift, config.model.branch)
        for s in config.sweep.s:
            for r in SAMPLE_RADII:
                y = complex(0.0, r)
                W, b = sf_potential(y, lattice, s)
                rows.append([
                    s, y.real, y.imag, W, b.real, b.imag,
                    max_fiber_eigenvalue(y, lattice, s), frame_is_10(y, lattice, s),
                ])
    else:
        raise _unsupported("potential", kind)
    out.csv(header, rows)
    out.json({"kind": kind, "params": params.to_dict(), "header": header, "rows": rows})


# --- bs ---


def cmd_bs(config: ExperimentConfig, out: ArtifactSet) -> None:
    kind = config.model.kind
    offsets = config.model.offsets
    rows: List[Sequence[Any]] = []
    summaries: Dict[str, Dict[int, int]] = {}
    for k in config.sweep.k:
        if kind in ("semi-flat-abelian", "semi-flat-general"):
            points = bs_points_semiflat(UNIT_CELL, k, offsets)
        elif kind == "ooguri-vafa-window":
            points = bs_points_ov(k, offsets, _ov_params(config))
        else:
            raise _unsupported("bs", kind)
        for p in points:
            rows.append([k, p.base.real, p.base.imag, p.level, p.strict, p.on_branch_cut])
        summaries[str(k)] = BSSummary.from_points(points, k).counts
    header = ["k", "y_re", "y_im", "level", "strict", "on_branch_cut"]
    out.csv(header, rows)
    out.json({"kind": kind, "offsets": list(offsets), "levels": summaries, "n_points": len(rows)})


# --- spectrum ---


def _spectral_model(config: ExperimentConfig, params: Optional[ModelParams] = None):
    model = config.model
    params = params or model.params
    ppw = config.solver.points_per_well
    if model.kind == "semi-flat-abelian":
        return abelian_cell(params, model.offsets, ppw)
    if model.kind == "semi-flat-general":
        lattice = LatticeFamily.ov_matching(model.shift, model.branch)
        return general(params, lattice, chart=0.1j, offsets=model.offsets, points_per_well=ppw)
    if model.kind == "ooguri-vafa-window":
        return ov_window(params, config.gh.radius, model.offsets, model.shift, ppw)
    raise _unsupported("spectrum", model.kind)


def cmd_spectrum(config: ExperimentConfig, out: ArtifactSet) -> None:
    params = config.model.params
    k = params.k
    n_eigs = config.solver.n_eigs
    if config.model.kind == "limit":
        structure = rho_k_structure(params.m, k)
        if structure.is_zero:
            values = np.zeros(0)
            residuals = np.zeros(0)
        else:
            # ρ_k 성분에서 Δ_{k,∂̄} = Δ^k/2
            result = gaussian_spectrum(k, n_eigs)
            values, residuals = result.eigenvalues / 2.0, result.residuals / 2.0
        threshold = k / 2.0
        meta: Dict[str, Any] = {"structure": "zero" if structure.is_zero else "gaussian"}
    else:
        model = _spectral_model(config)
        result = dbar_spectrum(model, n_eigs, tol=1e-9)
        values, residuals, threshold = result.eigenvalues, result.residuals, result.threshold
        meta = {**result.meta, "n_wells": len(model.wells)}
    count = int(np.sum(values < threshold))
    header = ["index", "eigenvalue", "residual", "below_threshold", "count_below"]
    rows = [[i, float(v), float(r), bool(v < threshold), count] for i, (v, r) in enumerate(zip(values, residuals))]
    out.csv(header, rows)
    out.json({
        "kind": config.model.kind,
        "params": params.to_dict(),
        "eigenvalues": values,
        "threshold": threshold,
        "count_below": count,
        "meta": meta,
    })


# --- lower-bound ---


def cmd_lower_bound(config: ExperimentConfig, out: ArtifactSet) -> None:
    if config.model.kind != "semi-flat-abelian":
        raise _unsupported("lower-bound", config.model.kind)
    params = config.model.params
    radii = sorted(config.sweep.R)
    model = abelian_window(
        params,
        offsets=config.model.offsets,
        points_per_well=config.solver.points_per_well,
        metric_half_width=radii[-1] + 5.0,
    )
    reports = [verify_lower_bound(model, R) for R in radii]
    k2 = params.k**2
    payload: Dict[str, Any] = {"reports": [r.to_dict() for r in reports]}
    if len(reports) >= 2:
        exponent, prefactor = fit_power_law(radii, [r.infimum - k2 for r in reports])
        payload.update(exponent=exponent, prefactor=prefactor)
    header = ["R", "infimum", "K", "K_lemma", "bound", "bound_2pi", "floor", "holds", "n_retained"]
    rows = [[r.R, r.infimum, r.K, r.K_lemma, r.bound, r.bound_2pi, r.floor, r.holds, r.n_retained] for r in reports]
    out.csv(header, rows)
    out.json(payload)


# --- gh ---


def cmd_gh(config: ExperimentConfig, out: ArtifactSet) -> None:
    kind = config.model.kind
    if kind not in GH_MODELS:
        raise _unsupported("gh", kind)
    model = GH_MODELS[kind]
    gh = config.gh
    seed = config.output.seed
    m = config.model.params.m
    reports = []
    measures = []
    for s in config.sweep.s:
        ovp = _ov_params(config, s) if model == "ooguri-vafa" else None
        reports.append(
            sample_and_distort(model, s, gh.radius, gh.n, seed, m=m, neighbors=gh.neighbors, ovp=ovp)
        )
        measures.append(measure_check(model, s, min(1.0, gh.radius), ovp=ovp))
    header = [
        "s", "R", "n", "median", "sup", "q90", "q99", "covering_gap",
        "submersion_lower_violations", "submersion_upper_violations", "fiber_diameter",
    ]
    rows = [
        [
            r.s, r.R, r.n, r.median, r.sup, r.quantiles["q90"], r.quantiles["q99"], r.covering_gap,
            r.submersion_lower_violations, r.submersion_upper_violations, r.fiber_diameter,
        ]
        for r in reports
    ]
    payload: Dict[str, Any] = {
        "model": model,
        "distortion": [r.to_dict() for r in reports],
        "measure": [mc.to_dict() for mc in measures],
    }
    if model == "ooguri-vafa":
        payload["fiber_diameter_constants"] = fiber_diameter_constants(config.sweep.s)
    if model == "abelian":
        # 인접 BS 점 (1/k 간격) 의 기저 거리 ~ (2π/√s)/k
        k = config.model.params.k
        payload["bs_separation"] = [
            {"s": s, "distance": bs_separation("abelian", s, [(0j, complex(1.0 / k, 0.0))], seed=seed)[0]}
            for s in config.sweep.s
        ]
    out.csv(header, rows)
    out.json(payload)
    if "bin" in out.formats:
        matrix = pairwise_distances(model, config.sweep.s[0], gh.radius, min(gh.n, 400), seed, m=m)
        out.written.append(write_distance_matrix(out.path("bin", "dist"), matrix))


# --- sweep ---


def cmd_sweep(config: ExperimentConfig, out: ArtifactSet) -> None:
    kind = config.model.kind
    records: List[Dict[str, Any]] = []
    if kind == "semi-flat-abelian":
        header = ["s", "k", "near_zero", "bs_count", "first_gap", "gap_over_k"]
        for s in config.sweep.s:
            for k in config.sweep.k:
                params = config.model.params.replace(s=s, k=k)
                model = _spectral_model(config, params)
                result = dbar_spectrum(model, len(model.wells) + 3)
                above = result.eigenvalues[result.eigenvalues >= result.threshold]
                gap = float(above[0]) if above.size else math.nan
                records.append({
                    "s": s, "k": k, "near_zero": result.count_below(),
                    "bs_count": len(model.wells), "first_gap": gap, "gap_over_k": gap / k,
                })
    elif kind == "ooguri-vafa-window":
        header = ["s", "closeness_constant", "sf_ratio_min", "sf_ratio_max", "measure_relative_error", "sandwich"]
        for s in config.sweep.s:
            ovp = _ov_params(config, s)
            cmp = ov_compare(0.1j, s, ovp)
            mc = measure_check("ooguri-vafa", s, 1.0, ovp=ovp)
            records.append({
                "s": s, "closeness_constant": cmp.closeness_constant, "sf_ratio_min": cmp.sf_ratio_min,
                "sf_ratio_max": cmp.sf_ratio_max, "measure_relative_error": mc.relative_error, "sandwich": mc.delta,
            })
    else:
        raise _unsupported("sweep", kind)
    rows = [[record[h] for h in header] for record in records]
    out.csv(header, rows)
    out.json({"kind": kind, "records": records})
    out.jsonl(records)
    out.workbook({"sweep": {"header": header, "rows": rows}})


# --- oracle ---


def _cholesky_ok(matrix: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        return False
    return True


def _oracle_geometry() -> Dict[str, Any]:
    t_star = 0.1**2 * math.log(10.0) / (2 * math.pi)
    s_zeta = math.log(10.0) / (2 * math.pi)
    return {
        "chi_t_star": {"computed": chi(t_star), "reference": 0.1},
        "zeta_s_0.1": {"computed": zeta_s(0.1, s_zeta), "reference": [0.1, 0.0]},
    }


def _oracle_semiflat() -> Dict[str, Any]:
    W, _ = sf_potential(0.1 + 0j, LatticeFamily.ov_matching(), 0.05)
    rng = np.random.default_rng(3)
    taus = [complex(rng.uniform(-2, 2), rng.uniform(0.1, 3)) for _ in range(20)]
    s = 0.1
    fiber = sf_fiber_metric(0j, LatticeFamily.constant(1 + 1j), s)
    trace, det = float(np.trace(fiber)), float(np.linalg.det(fiber))
    return {
        "ov_matching_W": {"computed": W, "reference": 0.05 * 2 * math.pi / math.log(10.0)},
        "frame_imag_positive_definite": all(
            _cholesky_ok(sf_frame10(0j, LatticeFamily.constant(tau), s).imag / s) for tau in taus
        ),
        "max_fiber_eigenvalue_1+i": {
            "computed": max_fiber_eigenvalue(0j, LatticeFamily.constant(1 + 1j), s),
            "reference": (trace + math.sqrt(trace**2 - 4 * det)) / 2,
            "closed_form": s * (3 + math.sqrt(5)) / 2 / (4 * math.pi**2),
        },
    }


def _oracle_ov() -> Dict[str, Any]:
    ovp = OVParams(s=0.05)
    s = ovp.s
    symmetric = np.array([[0.01, u2, u3] for u2 in (0.0, 0.02, 0.1) for u3 in (0.0, s / 2)])
    p = [0.05, 0.02, 0.01]
    V = float(ov_potential(p, ovp))
    closeness = []
    for s_c in (0.05, 0.02, 0.01):
        cmp = ov_compare(0.1j, s_c, ovp)
        # 첫 베셀 항의 점근값
        closeness.append({
            "s": s_c,
            "computed": cmp.closeness_constant,
            "reference": math.sqrt(s_c / (4 * 0.1)) / math.pi,
        })
    return {
        "a_half": {"computed": ov_a_s(0.5), "reference": np.euler_gamma / math.pi},
        "a_1/2e": {"computed": ov_a_s(1 / (2 * math.e)), "reference": (np.euler_gamma + 1) * math.e / math.pi},
        "euler_gamma": {"computed": euler_gamma(), "reference": np.euler_gamma},
        "vsf_0.1": {"computed": ov_vsf(0.1 + 0j, ovp), "reference": math.log(10.0) / (2 * math.pi * s)},
        "dphi_du3_symmetric_max": float(np.max(np.abs(ov_F(symmetric, ovp)))),
        "orbit_length": {
            "computed": orbit_length(p, ovp),
            "reference": 2 * math.pi * math.sqrt(1.0 / (4 * math.pi**2 * V)),
        },
        "closeness": closeness,
    }


def _oracle_holonomy(ovp: OVParams) -> Dict[str, Any]:
    h_points = [(0.0, 0.1), (0.05, 0.05), (-0.1, 0.02)]
    planted_t0 = 0.05
    planted_offsets = (0.0, -holonomy_H(0.0, planted_t0, ovp))
    planted = [p for p in bs_points_ov(1, planted_offsets, ovp) if abs(p.base - 1j * planted_t0) < 1e-6]
    return {
        "H_origin": holonomy_H(0.0, 0.0, ovp),
        "H_0_0.1": holonomy_H(0.0, 0.1, ovp),
        "H_0_0.1_formula": 0.1 * (1 + math.log(10.0)) / (2 * math.pi),
        "closed_vs_numeric": [
            {"u1": a, "u2": b, "closed": holonomy_H(a, b, ovp), "numeric": holonomy_H_numeric(a, b, ovp)}
            for a, b in h_points
        ],
        "planted_root_error": abs(planted[0].base - 1j * planted_t0) if planted else None,
        "bs_count_k3": {"computed": len(bs_points_semiflat(UNIT_CELL, 3)), "reference": 9},
    }


def _oracle_solver() -> Dict[str, Any]:
    n = 200
    h = 1.0 / (n + 1)
    laplacian = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr") / h**2
    j = np.arange(1, 6)
    dirichlet = lowest_eigs(laplacian, 5).values
    gaussian = gaussian_operator(1, n=40).matrix
    return {
        "dirichlet_1d": {
            "computed": dirichlet,
            "reference": 4 * np.sin(np.pi * j / (2 * (n + 1))) ** 2 / h**2,
        },
        "gaussian_operator": {
            "computed": lowest_eigs(gaussian, 5).values,
            "reference": eigsh_reference(gaussian, 5),
        },
        "hermite_galerkin_k2": {
            "computed": hermite_galerkin_spectrum(2, 6).eigenvalues,
            "reference": 4.0 * np.arange(6),
        },
    }


def _oracle_magnetic() -> Dict[str, Any]:
    counts: Dict[str, Any] = {}
    for k in (1, 2, 3):
        result = dbar_spectrum(abelian_cell(ModelParams(s=0.2, k=k)), k * k + 3)
        above = result.eigenvalues[result.eigenvalues >= result.threshold]
        counts[str(k)] = {
            "computed": result.count_below(),
            "reference": k * k,
            "first_gap_over_k": float(above[0]) / k if above.size else None,
        }
    cell = abelian_cell(ModelParams(s=0.1, k=1))
    narrow = dbar_spectrum(cell.with_mode_cutoff(2), 5).eigenvalues
    wide = dbar_spectrum(cell.with_mode_cutoff(3), 5).eigenvalues
    window = abelian_window(ModelParams(s=0.2, k=1), metric_half_width=8.0)
    report = verify_lower_bound(window, R=3.0, delta=0.0)
    return {
        "near_zero": counts,
        "mode_truncation_change": float(np.max(np.abs(narrow - wide))),
        "lower_bound_delta0": {
            "computed": 2 * math.pi * report.infimum,
            "reference": report.bound_2pi,
            "h_metric": window.grid.h * 2 * math.pi / math.sqrt(window.params.s),
        },
    }


def _oracle_gh() -> Dict[str, Any]:
    measure = measure_check("abelian", 0.2, 2.0)
    s_values = [0.2, 0.1, 0.05]
    distances = [bs_separation("abelian", s, [(0j, 0.5 + 0j)], seed=4)[0] for s in s_values]
    exponent, _ = fit_power_law(s_values, distances)
    return {
        "abelian_measure": {"computed": measure.value, "reference": measure.reference, "error": measure.error},
        "bs_separation": {
            "distances": [{"s": s, "computed": d, "reference": math.pi / math.sqrt(s)} for s, d in zip(s_values, distances)],
            "exponent": exponent,
            "reference_exponent": -0.5,
        },
    }


def oracle_values() -> Dict[str, Any]:
    """모듈 교차검증 기준값 (닫힌 식, 격자 열거, 정확 스펙트럼)

    각 항목은 계산값 computed 와 기준값 reference 를 짝지어 담습니다.
    """
    values: Dict[str, Any] = {
        "geometry": _oracle_geometry(),
        "semiflat": _oracle_semiflat(),
        "ooguri_vafa": _oracle_ov(),
        "holonomy": _oracle_holonomy(OVParams(s=0.05)),
        "gaussian": {
            str(k): {"computed": gaussian_spectrum(k, 5).eigenvalues, "exact": exact_gaussian_spectrum(k, 5)}
            for k in (1, 2)
        },
        "bs_levels": {
            str(k): BSSummary.from_points(bs_points_semiflat(UNIT_CELL, k), k).counts for k in (1, 2, 3, 4)
        },
        "rho_k_zero": {"m2_k3": rho_k_structure(2, 3).is_zero, "m1_k3": rho_k_structure(1, 3).is_zero},
        "eigensolver": _oracle_solver(),
        "magnetic": _oracle_magnetic(),
        "gh": _oracle_gh(),
    }
    logger.info(f"기준값 {len(values)}개 모듈 계산 완료")
    return values


def cmd_oracle(config: ExperimentConfig, out: ArtifactSet) -> None:
    out.json(oracle_values(), force=True)


# --- report ---


def cmd_report(config: ExperimentConfig, out: ArtifactSet) -> None:
    sections: Dict[str, Any] = {}
    for name in SUBCOMMANDS:
        if name in ("report", "oracle"):
            continue
        path = out.path("json", name)
        if path.exists():
            sections[name] = json.loads(path.read_text(encoding="utf-8"))
    if not sections:
        raise ArtifactError(f"{out.out_dir} 에 config={out.config_hash} 산출물이 없습니다")
    out.report({"config": config.to_dict(), "config_hash": out.config_hash, "sections": sections}, force=True)


def _discard(artifacts: Optional[ArtifactSet]) -> None:
    if artifacts is not None:
        artifacts.discard()


HANDLERS: Dict[str, Callable[[ExperimentConfig, ArtifactSet], None]] = {
    "potential": cmd_potential,
    "bs": cmd_bs,
    "spectrum": cmd_spectrum,
    "lower-bound": cmd_lower_bound,
    "gh": cmd_gh,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "report": cmd_report,
}


def run(
    subcommand: str,
    config_path: Path,
    out: Optional[str] = None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> RunResult:
    """하위 명령 실행

    검증 실패는 종료 코드 2, 고윳값 미수렴은 3 으로 돌려주며
    진단은 로거 (stderr) 로 보냅니다. 실패한 실행이 이미 쓴 산출물은 지웁니다.
    """
    if subcommand not in HANDLERS:
        logger.error(f"알 수 없는 하위 명령: {subcommand}")
        return RunResult(EXIT_INVALID, subcommand, message=f"unknown subcommand {subcommand}")
    config_hash = None
    artifacts: Optional[ArtifactSet] = None
    try:
        apply_threads(threads)
        config = load_config(config_path).with_overrides(out=out, seed=seed)
        config_hash = config.config_hash
        artifacts = ArtifactSet(config.out_dir, subcommand, config_hash, config.output.formats)
        logger.info(f"실행: {subcommand} (config={config_hash})")
        HANDLERS[subcommand](config, artifacts)
    except EigenSolverConvergenceError as e:
        logger.error(f"수치 미수렴: {e} {e.diagnostics}")
        _discard(artifacts)
        return RunResult(EXIT_NONCONVERGED, subcommand, config_hash, message=str(e))
    except INVALID_ERRORS as e:
        logger.error(f"검증 실패 ({type(e).__name__}): {e}")
        _discard(artifacts)
        return RunResult(EXIT_INVALID, subcommand, config_hash, message=str(e))
    logger.info(f"완료: {subcommand}, 산출물 {len(artifacts.written)}개")
    return RunResult(EXIT_OK, subcommand, config_hash, list(artifacts.written))
