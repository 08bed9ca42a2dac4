"""Command-line interface.

Subcommands::

    qmebench run --preset fig1 --out results/           # or --scenario file.yaml
    qmebench audit-bath --lam 5 --gamma 50 --temperature 300 --out audit/
    qmebench heom-converge --omega0 70 --j 100 --lam 5 --gamma 50 \
        --temperature 250 --depths 3,4,5 --matsubara 1,2,3 --out scan/

Exit codes: 0 success, 1 any point failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bath
from .heom import convergence_scan
from .model import ModelParams, exciton_plus_state
from .runner import run_scenarios, write_concurrence_csv  # noqa: F401 (re-export for scripts)
from .scenarios import PRESET_NAMES, ScenarioError, load_scenarios, preset
from .units import wavenumber_to_angular


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmebench",
        description=(
            "Dissipative two-level dimer dynamics under TC2/TL2 master "
            "equations and HEOM, with entanglement-based non-Markovianity "
            "benchmarks"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run scenarios or a preset")
    src = run_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", type=Path, help="scenario YAML file")
    src.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario list")
    run_p.add_argument("--out", type=Path, required=True, help="output directory")
    run_p.add_argument("--methods", type=str, default=None,
                       help="comma-separated subset of tc2,tl2,heom")
    run_p.add_argument("--oracle", action="store_true",
                       help="also run the TC2 history-convolution oracle")
    run_p.add_argument("--jobs", type=int, default=1,
                       help="scenario-level worker processes")
    run_p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    audit_p = sub.add_parser("audit-bath", help="dump and verify a bath series")
    audit_p.add_argument("--lam", type=float, required=True,
                         help="reorganization energy (cm^-1)")
    audit_p.add_argument("--gamma", type=float, required=True, help="cutoff (cm^-1)")
    audit_p.add_argument("--temperature", type=float, required=True, help="T (K)")
    audit_p.add_argument("--n-matsubara", type=int, default=None,
                         help="Matsubara count (default: auto-selected)")
    audit_p.add_argument("--out", type=Path, required=True)
    audit_p.add_argument("--no-plot", action="store_true")

    conv_p = sub.add_parser("heom-converge", help="hierarchy convergence scan")
    conv_p.add_argument("--omega0", type=float, required=True)
    conv_p.add_argument("--j", type=float, required=True, dest="j_coupling")
    conv_p.add_argument("--lam", type=float, required=True)
    conv_p.add_argument("--gamma", type=float, required=True)
    conv_p.add_argument("--temperature", type=float, required=True)
    conv_p.add_argument("--t-final", type=float, default=1000.0)
    conv_p.add_argument("--dt", type=float, default=1.0)
    conv_p.add_argument("--depths", type=_int_list, required=True,
                        help="comma-separated depths, e.g. 3,4,5")
    conv_p.add_argument("--matsubara", type=_int_list, required=True,
                        help="comma-separated Matsubara counts, e.g. 1,2,3")
    conv_p.add_argument("--out", type=Path, required=True)
    return parser


def _cmd_run(args) -> int:
    if args.scenario is not None:
        if not args.scenario.exists():
            print(f"scenario file not found: {args.scenario}", file=sys.stderr)
            return 2
        scenarios = load_scenarios(args.scenario)
    else:
        scenarios = preset(args.preset)
    methods = args.methods.split(",") if args.methods else None
    print(f"running {len(scenarios)} scenario(s) -> {args.out}")
    for s in scenarios:
        ginv = 1.0 / wavenumber_to_angular(s.model.gamma)
        print(f"  {s.name}: lambda={s.model.lam:g} gamma={s.model.gamma:g} "
              f"(1/gamma={ginv:.1f} fs) T={s.model.temperature:g} "
              f"methods={','.join(s.methods)}")
    results, failures = run_scenarios(
        scenarios, args.out, methods=methods, oracle=args.oracle,
        plot=not args.no_plot, jobs=args.jobs,
    )
    n_files = sum(len(r.files) for r in results)
    print(f"wrote {n_files} file(s)")
    for failure in failures:
        print(f"FAILED {failure.scenario}/{failure.method}: "
              f"{failure.message.splitlines()[0]}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_audit_bath(args) -> int:
    sd = bath.SpectralDensity(lam=args.lam, gamma=args.gamma)
    k = args.n_matsubara
    if k is None and args.lam > 0:
        k = bath.choose_matsubara_count(sd, args.temperature)
    series = bath.matsubara_decompose(sd, args.temperature, k or 0)
    args.out.mkdir(parents=True, exist_ok=True)
    meta = {
        "lambda_cm1": args.lam,
        "gamma_cm1": args.gamma,
        "gamma_inverse_fs": 1.0 / wavenumber_to_angular(args.gamma),
        "temperature_K": args.temperature,
    }
    series_path = args.out / "bath_series.csv"
    bath.write_series_csv(series, series_path, metadata=meta)

    grid = bath.CALIBRATION_GRID
    oracle = bath.quadrature_table(sd, args.temperature, tuple(grid))
    approx = bath.series_eval(series, grid)
    rows = []
    for t, s_val, o_val in zip(grid, approx, oracle):
        rows.append(
            ",".join(format(x, ".17g") for x in
                     (t, s_val.real, s_val.imag, o_val.real, o_val.imag))
            + f",{format(abs(s_val - o_val), '.17g')}"
        )
    compare_path = args.out / "bath_comparison.csv"
    lines = [f"# {key}: {value}" for key, value in meta.items()]
    lines.append(f"# n_matsubara: {series.n_matsubara}")
    lines.append(f"# residual_bound: {format(series.residual_bound, '.17g')}")
    lines.append("t_fs,re_series,im_series,re_quadrature,im_quadrature,abs_delta")
    compare_path.write_text("\n".join(lines + rows) + "\n")

    if not args.no_plot:
        from . import plotting

        finite = np.isfinite(oracle.real)
        plotting.plot_bath_audit(
            args.out / "bath_audit.png", grid[finite], approx[finite], oracle[finite],
            title=f"lam={args.lam:g} gamma={args.gamma:g} T={args.temperature:g} "
                  f"K={series.n_matsubara}",
        )
    print(f"K = {series.n_matsubara}, residual_bound = {series.residual_bound:.3e} "
          f"(rad/fs)^2; files in {args.out}")
    return 0


def _cmd_heom_converge(args) -> int:
    params = ModelParams(
        omega0=args.omega0, j_coupling=args.j_coupling, lam=args.lam,
        gamma=args.gamma, temperature=args.temperature,
        t_final=args.t_final, dt=args.dt,
    )
    report = convergence_scan(
        params, exciton_plus_state(), args.depths, args.matsubara
    )
    args.out.mkdir(parents=True, exist_ok=True)
    report_path = args.out / "heom_convergence.csv"
    report.to_csv(report_path, metadata={
        "omega0_cm1": args.omega0,
        "j_coupling_cm1": args.j_coupling,
        "lambda_cm1": args.lam,
        "gamma_cm1": args.gamma,
        "temperature_K": args.temperature,
    })
    for row in report.rows:
        print(f"  {row.kind:9s} depth={row.depth} K={row.n_matsubara} "
              f"delta={row.max_abs_delta:.3e}")
    print(f"converged: {report.converged} (threshold {report.threshold}); "
          f"report: {report_path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "audit-bath":
            return _cmd_audit_bath(args)
        if args.command == "heom-converge":
            return _cmd_heom_converge(args)
    except (ScenarioError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
