"""Command-line front end: parameter sweeps, table reproduction, the
end-to-end noisy pipeline, tomography demo, and a raw conic-program runner.

Every sweep writes CSV files plus a run manifest; re-running with the same
manifest (``--replay``) reproduces each CSV byte for byte.  Floats print at 12
significant digits and every row carries the seed that produced it.  CSV
schemas are documented in SCHEMAS.md.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__, certify, extend, filterops, qmat, solver, states, steer, tomo

TASKS = ("ppt", "distill", "fef", "chsh", "sr", "dc", "extend", "tomo")


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


def derive_seed(global_seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{global_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)


def parse_grid(text: str) -> list[float]:
    """start:step:stop (inclusive) or comma-separated values."""
    if ":" in text:
        start, step, stop = (float(t) for t in text.split(":"))
        n = int(round((stop - start) / step))
        return [round(start + i * step, 12) for i in range(n + 1)]
    return [float(t) for t in text.split(",")]


def write_csv(path: Path, header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(c) if isinstance(c, float) else str(c) for c in row))
    text = "\n".join(lines) + "\n"
    path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


# --- sweep task implementations -------------------------------------------------


def _state_for(d, v, noisy, seed):
    ideal = states.werner(d, v)
    if not noisy:
        return ideal
    return states.noisy_surrogate(ideal, states.experiment_like_noise(v, seed=seed))


def sweep_ppt(args, task_seed):
    rows = []
    for i, v in enumerate(args.v_grid):
        seed = task_seed ^ i
        rho = _state_for(args.d, v, args.noisy, seed)
        cert = certify.ppt_min_eig(rho)
        rows.append([args.d, float(v), seed, cert.value, cert.verdict])
    return ["d", "v", "seed", "min_eig", "verdict"], rows


def sweep_distill(args, task_seed):
    rows = []
    for i, v in enumerate(args.v_grid):
        seed = task_seed ^ i
        rho = _state_for(args.d, v, args.noisy, seed)
        cert = certify.one_distillable(rho, restarts=args.restarts, seed=seed)
        rows.append([args.d, float(v), seed, cert.value, cert.verdict, args.restarts])
    return ["d", "v", "seed", "value", "verdict", "restarts"], rows


def sweep_fef(args, task_seed):
    rows = []
    for i, v in enumerate(args.v_grid):
        seed = task_seed ^ i
        rho = _state_for(args.d, v, args.noisy, seed)
        cert = certify.fef(rho, restarts=args.restarts, seed=seed)
        filtered_f2 = certify.fef2_exact(filterops.rotated_filtered_state(v)) if args.d == 3 else float("nan")
        rows.append([args.d, float(v), seed, cert.value, 1.0 / args.d, filtered_f2])
    return ["d", "v", "seed", "fef", "threshold", "filtered_f2"], rows


def sweep_chsh(args, task_seed):
    rows = []
    for i, v in enumerate(args.v_grid):
        seed = task_seed ^ i
        rho_f = filterops.rotated_filtered_state(v)
        exact = certify.chsh_horodecki(rho_f).value
        found = steer.seesaw_bell(rho_f, steer.chsh_coefficients(), restarts=args.restarts, seed=seed)
        rows.append([float(v), seed, exact, found])
    return ["v", "seed", "chsh_horodecki", "chsh_seesaw"], rows


def sweep_sr(args, task_seed):
    rows = []
    for i, v in enumerate(args.v_grid):
        seed = task_seed ^ i
        for filtered in (0, 1):
            rho = filterops.rotated_filtered_state(v) if filtered else states.werner(3, v)
            res = steer.sr_state_lower_bound(
                rho, args.n_settings, restarts=args.restarts, seed=seed, max_rounds=args.max_rounds
            )
            rows.append([float(v), args.n_settings, filtered, res.best, res.best_gap, args.restarts, seed])
    return ["v", "n_s", "filtered", "SR", "gap", "restarts", "seed"], rows


def sweep_dc(args, task_seed):
    rows = []
    for i, d in enumerate(args.d_grid):
        root = certify.dc_threshold(int(d), tol=1e-7)
        rows.append([int(d), task_seed ^ i, float("nan") if root is None else root])
    return ["d", "seed", "v_dc"], rows


def sweep_extend(args, task_seed):
    rows = []
    for k in args.k_list:
        for i, v in enumerate(args.v_grid):
            seed = task_seed ^ (k * 1000 + i)
            rho = _state_for(args.d, v, args.noisy, seed)
            q = extend.ExtensionQuery(rho, k, args.side, args.flavor)
            res = extend.run_query(q, tol=args.sdp_tol)
            rows.append(
                [args.d, k, args.side, args.flavor, float(v), res.t_star, res.gap, res.status]
            )
    return ["d", "k", "side", "flavor", "v", "t_star", "gap", "status"], rows


def sweep_tomo(args, task_seed):
    rows = []
    for i, v in enumerate(args.v_grid):
        seed = task_seed ^ i
        ideal = states.werner(3, v)
        rho = _state_for(3, v, args.noisy, seed)
        rec = tomo.simulate_counts(rho, args.shots, seed)
        recon = tomo.mle_reconstruct(rec, max_iter=3000, tol=1e-10)
        rows.append([float(v), seed, args.shots, qmat.uhlmann_fidelity(recon, ideal)])
    return ["v", "seed", "N", "fidelity"], rows


SWEEPS = {
    "ppt": sweep_ppt,
    "distill": sweep_distill,
    "fef": sweep_fef,
    "chsh": sweep_chsh,
    "sr": sweep_sr,
    "dc": sweep_dc,
    "extend": sweep_extend,
    "tomo": sweep_tomo,
}


def run_sweep(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "artifact_version": __version__,
        "command": "sweep",
        "args": {
            k: v for k, v in vars(args).items() if k not in ("func", "config", "replay", "command") and v is not None
        },
        "global_seed": args.seed,
        "task_seeds": {},
        "outputs": {},
        "wall_times": {},
    }
    tasks = args.task.split(",")
    for task in tasks:
        if task not in SWEEPS:
            print(f"unknown task {task!r}; choose from {TASKS}", file=sys.stderr)
            return 1
        task_seed = derive_seed(args.seed, task)
        manifest["task_seeds"][task] = task_seed
        t0 = time.perf_counter()
        header, rows = SWEEPS[task](args, task_seed)
        name = f"{task}_d{args.d}.csv"
        digest = write_csv(out_dir / name, header, rows)
        manifest["wall_times"][task] = time.perf_counter() - t0
        manifest["outputs"][name] = digest
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(manifest['outputs'])} file(s) to {out_dir}")
    return 0


def run_replay(args) -> int:
    manifest = json.loads(Path(args.replay).read_text())
    stored = manifest["args"]
    new_argv = ["sweep"]
    for key, val in stored.items():
        if isinstance(val, bool):
            if val:
                new_argv.append(f"--{key.replace('_', '-')}")
            continue
        if isinstance(val, list):
            val = ",".join(str(x) for x in val)
        new_argv.extend([f"--{key.replace('_', '-')}", str(val)])
    code = main(new_argv)
    if code != 0:
        return code
    fresh = json.loads((Path(stored["out"]) / "manifest.json").read_text())
    if fresh["outputs"] != manifest["outputs"]:
        print("replay mismatch: CSV digests differ", file=sys.stderr)
        return 1
    print("replay OK: all CSV digests match")
    return 0


# --- pipeline --------------------------------------------------------------------


def _cert_entry(cert: certify.Certificate, std: float | None = None) -> dict:
    entry = {"value": cert.value, "threshold": cert.threshold, "verdict": cert.verdict}
    if std is not None:
        entry["std"] = std
    return entry


def run_pipeline(args) -> int:
    t_start = time.perf_counter()
    v = args.v
    seed = derive_seed(args.seed, f"pipeline:{v}")
    spec = states.NoiseSpec(depol=args.depol, coherent_eps=args.eps, seed=seed)
    ideal = states.werner(3, v)
    surrogate = states.noisy_surrogate(ideal, spec)

    counts = tomo.simulate_counts(surrogate, args.shots, seed ^ 1, state_tag=f"w3v{v}")
    recon = tomo.mle_reconstruct(counts, max_iter=3000, tol=1e-10)

    ppt = certify.ppt_min_eig(recon)
    _, ppt_std = tomo.bootstrap_error(counts, "ppt_min_eig", n_boot=args.bootstrap, seed=seed ^ 2)
    distill = certify.one_distillable(recon, restarts=args.restarts, seed=seed ^ 3)
    fef_cert = certify.fef(recon, restarts=max(args.restarts // 2, 4), seed=seed ^ 4)
    dc_before = certify.dense_coding_delta(recon)
    gurvits_before = certify.gurvits_ball(recon)
    sr_before = steer.sr_state_lower_bound(
        recon, args.n_settings, restarts=args.sr_restarts, seed=seed ^ 5
    ).best

    # single-copy filtering of the reconstructed state, then qubit rotations
    pi = filterops.qubit_projection(3, (1, 2), "A"), filterops.qubit_projection(3, (1, 2), "B")
    filtered_raw, success_prob = filterops.apply_filter(recon, *pi)
    rot = qmat.kron(qmat.PAULI_X, qmat.PAULI_Z)
    filtered = qmat.as_state(rot @ filtered_raw.mat @ rot.conj().T, 2, 2)
    target_f = filterops.rotated_filtered_state(v)

    counts_f = tomo.simulate_counts(filtered, args.shots, seed ^ 6, frame=tomo.qubit_bases())
    recon_f = tomo.mle_reconstruct(counts_f, max_iter=3000, tol=1e-10)
    chsh = certify.chsh_horodecki(recon_f)
    _, chsh_std = tomo.bootstrap_error(counts_f, "chsh", n_boot=args.bootstrap, seed=seed ^ 7)
    f2 = certify.fef2_exact(recon_f)
    dc_after = certify.dense_coding_delta(recon_f)
    gurvits_after = certify.gurvits_ball(recon_f)
    sr_after = steer.sr_state_lower_bound(
        recon_f, args.n_settings, restarts=args.sr_restarts, seed=seed ^ 8
    ).best

    report = {
        "schema_version": 1,
        "params": {
            "v": v,
            "depol": args.depol,
            "eps": args.eps,
            "shots": args.shots,
            "global_seed": args.seed,
            "derived_seed": seed,
            "n_settings": args.n_settings,
        },
        "unfiltered": {
            "fidelity_vs_ideal": qmat.uhlmann_fidelity(recon, ideal),
            "certificates": {
                "ppt": _cert_entry(ppt, ppt_std),
                "one_distillable": _cert_entry(distill),
                "fef": _cert_entry(fef_cert),
                "dense_coding": _cert_entry(dc_before),
                "gurvits_ball": _cert_entry(gurvits_before),
            },
            "steering_robustness": sr_before,
        },
        "filter": {"success_prob": success_prob, "kept_levels": [1, 2]},
        "filtered": {
            "fidelity_vs_target": qmat.uhlmann_fidelity(recon_f, target_f),
            "certificates": {
                "chsh": _cert_entry(chsh, chsh_std),
                "dense_coding": _cert_entry(dc_after),
                "gurvits_ball": _cert_entry(gurvits_after),
            },
            "fef2_exact": f2,
            "steering_robustness": sr_after,
        },
        "wall_time_s": time.perf_counter() - t_start,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)

    if args.strict:
        failures = _strict_check(v, report)
        if failures:
            for f in failures:
                print(f"verdict check failed: {f}", file=sys.stderr)
            return 2
    return 0


def _strict_check(v: float, report: dict) -> list[str]:
    """Direction checks against ideal-theory expectations, skipping boundaries."""
    failures = []
    margin = 0.03
    certs_u = report["unfiltered"]["certificates"]
    certs_f = report["filtered"]["certificates"]
    if v < 0.5 - margin and certs_u["ppt"]["verdict"] != "FAIL":
        failures.append(f"expected entanglement (NPPT) at v={v}")
    if v > 0.5 + margin and certs_u["ppt"]["verdict"] == "FAIL":
        failures.append(f"unexpected NPPT at v={v}")
    if v < 0.4 - margin and certs_u["one_distillable"]["verdict"] != "PASS":
        failures.append(f"expected 1-distillability at v={v}")
    v_chsh = 0.1578  # filtered CHSH boundary from 2*sqrt(2)(4-6v)/(4+2v) = 2
    if v < v_chsh - margin and certs_f["chsh"]["verdict"] != "PASS":
        failures.append(f"expected filtered CHSH violation at v={v}")
    v_dc = certify.dc_threshold(3, 1e-6)
    if v < v_dc - margin and certs_f["dense_coding"]["verdict"] != "PASS":
        failures.append(f"expected filtered dense-codability at v={v}")
    if v < 0.4 - margin and report["filtered"]["fef2_exact"] <= 0.5:
        failures.append(f"expected filtered teleportation power at v={v}")
    return failures


# --- extend-table / tomo-demo / solve ---------------------------------------------


def run_extend_table(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for flavor in args.flavors.split(","):
        for k in args.k_list:
            for i, v in enumerate(args.v_grid):
                rho = _state_for(args.d, v, args.noisy, derive_seed(args.seed, f"et{k}{i}"))
                res = extend.run_query(
                    extend.ExtensionQuery(rho, k, args.side, flavor), tol=args.sdp_tol
                )
                rows.append([args.d, k, args.side, flavor, float(v), res.t_star, res.gap, res.status])
    header = ["d", "k", "side", "flavor", "v", "t_star", "gap", "status"]
    digest = write_csv(out_dir / f"extend_table_d{args.d}.csv", header, rows)
    manifest = {
        "artifact_version": __version__,
        "command": "extend-table",
        "args": {k: v for k, v in vars(args).items() if k not in ("func", "config", "command") and v is not None},
        "global_seed": args.seed,
        "outputs": {f"extend_table_d{args.d}.csv": digest},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote extend table to {out_dir}")
    return 0


def run_tomo_demo(args) -> int:
    seed = derive_seed(args.seed, "tomo-demo")
    ideal = states.werner(3, args.v)
    rho = _state_for(3, args.v, args.noisy, seed)
    rec = tomo.simulate_counts(rho, args.shots, seed, state_tag=f"w3v{args.v}")
    recon, history = tomo.mle_reconstruct_with_history(rec, max_iter=3000, tol=1e-10)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "counts.csv").write_text(tomo.counts_to_csv(rec))
    (out_dir / "counts.meta.json").write_text(tomo.counts_metadata_json(rec) + "\n")
    from . import serialize

    (out_dir / "reconstruction.json").write_text(serialize.state_to_json(recon) + "\n")
    fid = qmat.uhlmann_fidelity(recon, ideal)
    print(f"reconstructed in {len(history)} iterations; fidelity vs ideal = {fid:.6f}")
    return 0


def run_solve(args) -> int:
    try:
        prog = solver.load_program(Path(args.program).read_text())
    except (OSError, ValueError) as exc:
        print(f"cannot load program: {exc}", file=sys.stderr)
        return 1
    sol = solver.solve(prog, tol=args.tol, max_iter=args.max_iter)
    print(f"status: {sol.status}")
    print(f"primal objective: {fmt(sol.primal_obj)}")
    print(f"dual objective: {fmt(sol.dual_obj)}")
    print(f"gap: {fmt(sol.gap)}")
    print(f"iterations: {sol.iterations}")
    return 0 if sol.status != "MAX_ITER" else 1


# --- argument parsing --------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON config file; explicit flags win")
    p.add_argument("--seed", type=int, default=2024, help="global seed")
    p.add_argument("--noisy", action="store_true", help="use noisy surrogates instead of ideal states")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wernerlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="parameter sweeps producing CSV + manifest")
    _add_common(p)
    p.add_argument("--task", default="ppt", help=f"comma-separated tasks from {TASKS}")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--v-grid", dest="v_grid", type=parse_grid, default="0:0.05:0.5")
    p.add_argument("--d-grid", dest="d_grid", type=parse_grid, default="2:1:16")
    p.add_argument("--k-list", dest="k_list", type=lambda s: [int(x) for x in s.split(",")], default="2")
    p.add_argument("--side", default="B", choices=["A", "B"])
    p.add_argument("--flavor", default="SE", choices=["SE", "SQE", "SE_B"])
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--n-settings", dest="n_settings", type=int, default=2)
    p.add_argument("--max-rounds", dest="max_rounds", type=int, default=30)
    p.add_argument("--shots", type=int, default=10**4)
    p.add_argument("--sdp-tol", dest="sdp_tol", type=float, default=1e-7)
    p.add_argument("--out", default="out")
    p.add_argument("--replay", help="manifest.json to replay instead of running new args")
    p.set_defaults(func=run_sweep)

    p = sub.add_parser("pipeline", help="surrogate -> tomography -> filter -> certificates")
    _add_common(p)
    p.add_argument("--v", type=float, default=0.0)
    p.add_argument("--depol", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=0.03)
    p.add_argument("--shots", type=int, default=10**5)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--sr-restarts", dest="sr_restarts", type=int, default=4)
    p.add_argument("--n-settings", dest="n_settings", type=int, default=2)
    p.add_argument("--bootstrap", type=int, default=15)
    p.add_argument("--out", help="write the JSON report to this file instead of stdout")
    p.add_argument("--strict", action="store_true", help="exit 2 when verdicts defy ideal theory")
    p.set_defaults(func=run_pipeline)

    p = sub.add_parser("extend-table", help="reproduce the symmetric-extension tables")
    _add_common(p)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--v-grid", dest="v_grid", type=parse_grid, default="0:0.05:0.45")
    p.add_argument("--k-list", dest="k_list", type=lambda s: [int(x) for x in s.split(",")], default="2,3")
    p.add_argument("--side", default="B", choices=["A", "B"])
    p.add_argument("--flavors", default="SE,SQE")
    p.add_argument("--sdp-tol", dest="sdp_tol", type=float, default=1e-7)
    p.add_argument("--out", default="out")
    p.set_defaults(func=run_extend_table)

    p = sub.add_parser("tomo-demo", help="simulate counts and reconstruct one state")
    _add_common(p)
    p.add_argument("--v", type=float, default=0.3)
    p.add_argument("--shots", type=int, default=10**4)
    p.add_argument("--out", default="out")
    p.set_defaults(func=run_tomo_demo)

    p = sub.add_parser("solve", help="solve a conic program from its text dump")
    p.add_argument("--program", required=True)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=200000)
    p.set_defaults(func=run_solve)
    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    """Fill unset values from a JSON config; explicit flags keep priority."""
    if not getattr(args, "config", None):
        return args
    config = json.loads(Path(args.config).read_text())
    given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, val in config.items():
        attr = key.replace("-", "_")
        if attr not in given and hasattr(args, attr):
            if attr in ("v_grid", "d_grid") and isinstance(val, str):
                val = parse_grid(val)
            if attr == "k_list" and isinstance(val, str):
                val = [int(x) for x in val.split(",")]
            setattr(args, attr, val)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(args, argv)
    if getattr(args, "replay", None):
        return run_replay(args)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
