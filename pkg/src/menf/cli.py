"""Command-line front end: tune, simulate, verify, reproduce-chua.

Exit status contract: 0 success, 1 usage/parse/configuration, 2 infeasible
tuning, 3 numerical failure, 4 verification failure. All paths are relative
to the invocation directory; there is no environment-variable configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DimensionMismatch,
    Infeasible,
    LostPositivity,
    MenfError,
    MissingTuning,
    NonFinite,
    NoStabilizingSolution,
    NotPositiveDefinite,
    NotStabilizable,
    ScenarioFormatError,
    SelfLoop,
    SingularGain,
)
from .scenario_io import (
    bundled_chua_text,
    document_hash,
    document_to_network,
    document_to_scenario,
    dump_document,
    load_document,
    load_tuned_m,
    parse_document,
    tuning_P_from_document,
    tuning_result_to_document,
)
from .sim import Trajectories, make_isolated_variant, simulate
from .tuning import laplacian_P, tune_scalar
from .verify import check_hinf

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

_USAGE_ERRORS = (
    ScenarioFormatError,
    MissingTuning,
    DimensionMismatch,
    SelfLoop,
    NotPositiveDefinite,
    FileNotFoundError,
    NotADirectoryError,
    PermissionError,
    IsADirectoryError,
)
_NUMERICAL_ERRORS = (
    LostPositivity,
    NonFinite,
    SingularGain,
    NoStabilizingSolution,
    NotStabilizable,
    ArithmeticError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise _UsageError(message)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in range(rows):
            fh.write(",".join(_fmt(col[r]) for col in columns) + "\n")


def _read_csv(path: Path) -> np.ndarray:
    data = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if not np.all(np.isfinite(data)):
        raise ScenarioFormatError("non-numeric or missing entries", str(path))
    return data


# ---------------------------------------------------------------------------
# tune
# ---------------------------------------------------------------------------

def _cmd_tune(args) -> int:
    doc = load_document(args.scenario)
    net = document_to_network(doc)
    if "tuning" not in doc:
        raise ScenarioFormatError("tuning section required by `tune`", args.scenario)
    P = tuning_P_from_document(doc, net)
    result = tune_scalar(net, P)
    out = Path(args.out)
    out.write_text(dump_document(tuning_result_to_document(result)), encoding="utf-8")
    print(f"tuned M written to {out}")
    print(f"stacked-condition margin: {result.minv_margin:.6g}")
    print(f"uniform-scalar lower bound mu_lo: {result.mu_lo_uniform:.6g}")
    print(f"per-node M^-1 levels: {[round(m, 6) for m in result.mu_profile]}")
    for cert in result.node_certificates:
        print(
            f"node {cert.node_id}: LMI margin {cert.lmi_margin:.3e}, "
            f"closed-loop abscissa {cert.are.closed_loop_spectral_abscissa:.4f}, "
            f"ARE residual {cert.are.residual:.3e}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _apply_overrides(doc: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        doc["sim"]["seed"] = int(args.seed)
    if getattr(args, "dt", None) is not None:
        doc["sim"]["dt"] = float(args.dt)
    return doc


def _resolve_m(doc: dict, args):
    if getattr(args, "tuned", None):
        return load_tuned_m(args.tuned)
    tuning = doc.get("tuning", {})
    if "M_inv" in tuning or "M" in tuning:
        return None, None  # document_to_scenario reads them itself
    raise MissingTuning(
        "no tuned M available: give --tuned FILE or put M/M_inv in the scenario"
    )


def _export_run(outdir: Path, doc: dict, scenario, traj: Trajectories) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    net = scenario.network
    t = traj.t
    n = net.n
    _write_csv(
        outdir / "state.csv",
        ["t"] + [f"x{k + 1}" for k in range(n)],
        [t] + [traj.x[:, k] for k in range(n)],
    )
    for i in net.node_ids():
        _write_csv(
            outdir / f"estimates_node{i}.csv",
            ["t"] + [f"xhat{k + 1}" for k in range(n)],
            [t] + [traj.xhat[i - 1][:, k] for k in range(n)],
        )
        _write_csv(
            outdir / f"errors_node{i}.csv",
            ["t"] + [f"e{k + 1}" for k in range(n)],
            [t] + [traj.e[i - 1][:, k] for k in range(n)],
        )
        _write_csv(
            outdir / f"gains_node{i}.csv",
            ["t"] + [f"K{r + 1}{c + 1}" for r in range(n) for c in range(n)],
            [t] + [traj.K[i - 1][:, r, c] for r in range(n) for c in range(n)],
        )
    _write_csv(
        outdir / "disturbance_w.csv",
        ["t"] + [f"w{k + 1}" for k in range(net.plant.q)],
        [t] + [traj.w_samples[:, k] for k in range(net.plant.q)],
    )
    for i in net.node_ids():
        p = net.node(i).p
        _write_csv(
            outdir / f"disturbance_v_node{i}.csv",
            ["t"] + [f"v{k + 1}" for k in range(p)],
            [t] + [traj.v_samples[i][:, k] for k in range(p)],
        )
    for (i, j) in net.edges:
        m = net.link(i, j).m
        _write_csv(
            outdir / f"disturbance_eps_{i}_{j}.csv",
            ["t"] + [f"eps{k + 1}" for k in range(m)],
            [t] + [traj.eps_samples[(i, j)][:, k] for k in range(m)],
        )
    manifest = {
        "scenario": doc,
        "scenario_sha256": document_hash(doc),
        "seed": scenario.seed,
        "version": __version__,
        "m_inv": [np.asarray(b).tolist() for b in scenario.m_inv_blocks],
        "hypotheses": {
            k: (float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v)
            for k, v in traj.hypotheses.items()
            if v is not None
        },
    }
    (outdir / "manifest.yaml").write_text(dump_document(manifest), encoding="utf-8")


def _cmd_simulate(args) -> int:
    doc = _apply_overrides(load_document(args.scenario), args)
    m_inv, margin = _resolve_m(doc, args)
    scenario = document_to_scenario(doc, m_inv_blocks=m_inv, minv_margin=margin)
    traj = simulate(scenario)
    _export_run(Path(args.out), doc, scenario, traj)
    final_e = float(np.max(np.abs(traj.e[:, -1, :])))
    print(f"run complete: {len(traj.t) - 1} steps, final max |e| = {final_e:.6g}")
    print(f"outputs in {args.out} (scenario sha256 {document_hash(doc)[:16]}...)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _load_manifest(traj_dir: Path) -> dict:
    manifest_path = traj_dir / "manifest.yaml"
    if not manifest_path.exists():
        raise ScenarioFormatError("manifest.yaml not found", str(traj_dir))
    import yaml

    manifest = yaml.safe_load(manifest_path.read_text(encoding="utf-8"))
    if not isinstance(manifest, dict) or "scenario" not in manifest:
        raise ScenarioFormatError("manifest.yaml is missing its scenario", str(manifest_path))
    # Revalidate the embedded document before trusting it.
    parse_document(dump_document(manifest["scenario"]), source=str(manifest_path))
    return manifest


def _load_trajectories(traj_dir: Path, scenario) -> Trajectories:
    net = scenario.network
    n = net.n
    state = _read_csv(traj_dir / "state.csv")
    t = state[:, 0]
    x = state[:, 1:1 + n]
    steps1 = len(t)
    xhat = np.empty((net.N, steps1, n))
    for i in net.node_ids():
        est = _read_csv(traj_dir / f"estimates_node{i}.csv")
        if est.shape[0] != steps1:
            raise ScenarioFormatError(
                f"estimates_node{i}.csv has {est.shape[0]} rows, expected {steps1}",
                str(traj_dir),
            )
        xhat[i - 1] = est[:, 1:1 + n]
    w = _read_csv(traj_dir / "disturbance_w.csv")[:, 1:1 + net.plant.q]
    v = {
        i: _read_csv(traj_dir / f"disturbance_v_node{i}.csv")[:, 1:1 + net.node(i).p]
        for i in net.node_ids()
    }
    eps = {
        (i, j): _read_csv(traj_dir / f"disturbance_eps_{i}_{j}.csv")[:, 1:1 + net.link(i, j).m]
        for (i, j) in net.edges
    }
    return Trajectories(
        t=t,
        x=x,
        xhat=xhat,
        K=np.zeros((net.N, steps1, n, n)),
        w_samples=w,
        v_samples=v,
        eps_samples=eps,
        realization=None,
        network=net,
        hypotheses={},
    )


def _resolve_verify_P(args, doc: dict, net) -> np.ndarray:
    if args.P != "laplacian":
        import yaml

        raw = yaml.safe_load(Path(args.P).read_text(encoding="utf-8"))
        if not isinstance(raw, dict) or "P" not in raw:
            raise ScenarioFormatError("P file must be a mapping with a P matrix", args.P)
        P = np.array(raw["P"], dtype=float)
        if P.shape != (net.n * net.N, net.n * net.N):
            raise DimensionMismatch(
                f"P must be {net.n * net.N}x{net.n * net.N}, got {P.shape}"
            )
        return P
    tuning = doc.get("tuning", {})
    if "P" in tuning:
        return np.array(tuning["P"], dtype=float)
    if "P0" in tuning:
        return laplacian_P(net, np.array(tuning["P0"], dtype=float), float(tuning.get("ridge", 0.0)))
    return laplacian_P(net, np.eye(net.n), ridge=0.01)


def _cmd_verify(args) -> int:
    traj_dir = Path(args.traj_dir)
    manifest = _load_manifest(traj_dir)
    doc = manifest["scenario"]
    scenario = document_to_scenario(
        doc,
        m_inv_blocks=[np.array(b) for b in manifest["m_inv"]],
        minv_margin=manifest.get("hypotheses", {}).get("minv_margin"),
    )
    traj = _load_trajectories(traj_dir, scenario)
    traj.hypotheses = dict(manifest.get("hypotheses", {}))
    P = _resolve_verify_P(args, doc, scenario.network)
    report = check_hinf(scenario, traj, P)
    lines = report.lines()
    (traj_dir / "hinf_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (traj_dir / "hinf_report.json").write_text(
        json.dumps(
            {
                "lhs": report.lhs,
                "rhs": report.rhs,
                "slack": report.slack,
                "budget": {
                    "init": report.breakdown.init,
                    "model": report.breakdown.model,
                    "measurement": report.breakdown.measurement,
                    "communication": report.breakdown.communication,
                },
                "hypotheses": report.hypotheses,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    for line in lines:
        print(line)
    if report.slack < 0:
        print("attenuation bound VIOLATED", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# reproduce-chua
# ---------------------------------------------------------------------------

def _cmd_reproduce_chua(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenario_text = bundled_chua_text()
    (out / "chua.scenario").write_text(scenario_text, encoding="utf-8")
    doc = parse_document(scenario_text, source="chua.scenario")
    net = document_to_network(doc)
    P = tuning_P_from_document(doc, net)
    result = tune_scalar(net, P)
    (out / "tuned.yaml").write_text(
        dump_document(tuning_result_to_document(result)), encoding="utf-8"
    )
    print(
        f"tuning: stacked margin {result.minv_margin:.4g}, "
        f"M^-1 levels {[round(m, 4) for m in result.mu_profile]}"
    )

    header = [
        "seed",
        *[f"max_e{i}_first_coord" for i in range(1, net.N + 1)],
        *[f"max_e{i}_inf" for i in range(1, net.N + 1)],
        "converged",
        "hinf_slack",
        "isolated_node1_max_inf",
        "isolation_ratio",
    ]
    rows = []
    for seed in range(args.seeds):
        sdoc = json.loads(json.dumps(doc))  # deep copy
        sdoc["sim"]["seed"] = seed
        scenario = document_to_scenario(
            sdoc, m_inv_blocks=result.m_inv_blocks, minv_margin=result.minv_margin
        )
        traj = simulate(scenario)
        seed_dir = out / f"seed_{seed}"
        _export_run(seed_dir, sdoc, scenario, traj)
        report = check_hinf(scenario, traj, P)

        window = traj.t >= traj.t[-1] - 1.0
        e = traj.e
        first = [float(np.max(np.abs(e[i][window, 0]))) for i in range(net.N)]
        inf = [float(np.max(np.abs(e[i][window]))) for i in range(net.N)]
        converged = all(v <= 1e-2 for v in inf)

        iso = simulate(make_isolated_variant(scenario, 1))
        iso_max = float(np.max(np.abs(iso.e[0][window])))
        ratio = iso_max / max(inf[0], 1e-300)

        _write_csv(
            seed_dir / "errors_first_coord.csv",
            ["t"] + [f"e1_node{i}" for i in range(1, net.N + 1)],
            [traj.t] + [e[i][:, 0] for i in range(net.N)],
        )
        rows.append(
            [seed, *first, *inf, converged, report.slack, iso_max, ratio]
        )
        print(
            f"seed {seed}: max|e|_inf[T-1,T] = {max(inf):.3e}, converged={converged}, "
            f"slack = {report.slack:.4g}, isolation ratio = {ratio:.3g}"
        )

    with open(out / "summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    str(int(v)) if isinstance(v, bool) else
                    (str(v) if isinstance(v, int) else _fmt(v))
                    for v in row
                )
                + "\n"
            )
    print(f"summary written to {out / 'summary.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="menf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tune", help="solve the weighting design for a scenario")
    p.add_argument("scenario")
    p.add_argument("--out", default="tuned_m.yaml")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("simulate", help="run a scenario and export CSV trajectories")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--tuned", default=None, help="tuned-M file from `menf tune`")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="evaluate the attenuation bound on a run")
    p.add_argument("traj_dir")
    p.add_argument(
        "--P",
        default="laplacian",
        help="'laplacian' (from the scenario's tuning section) or a YAML file with a P matrix",
    )
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser(
        "reproduce-chua", help="full pipeline on the built-in five-node Chua experiment"
    )
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=10)
    p.set_defaults(func=_cmd_reproduce_chua)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"menf: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"menf: infeasible tuning: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _NUMERICAL_ERRORS as exc:
        print(f"menf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _USAGE_ERRORS as exc:
        print(f"menf: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"menf: i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MenfError as exc:
        print(f"menf: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
