"""Command-line interface for the matrix-model spectrum toolkit.

Subcommands: ``spectrum`` (truncated-Hamiltonian scans), ``vqe``
(variational circuit bounds), ``lattice`` (HMC chains), ``fit``
(continuum extrapolation), ``compare`` (cross-method report).  Each
command takes flags and/or a JSON config file (``--config``) with a
top-level ``version`` field; unknown config keys are rejected.

Exit codes: 0 success, 2 usage/config error, 3 data or convergence
failure, 4 internal error.  All floating output uses 9 significant
digits.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from . import continuum_fit as cf
from . import lattice_hmc as lh
from .errors import MatrixQMError, ConfigError, InsufficientData, \
    NoConvergence
from .models import BosonicParams, MiniBMNParams

__all__ = ["main"]

CONFIG_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _load_config(path: str | None, allowed: set[str]) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="ascii") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    version = cfg.pop("version", None)
    if version != CONFIG_VERSION:
        raise ConfigError(f"config version {version!r}, "
                          f"expected {CONFIG_VERSION}")
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _parse_cutoffs(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ConfigError(f"empty cutoff range {text!r}")
        return list(range(lo, hi + 1))
    return [int(tok) for tok in text.split(",") if tok]


# ---------------------------------------------------------------------------
# spectrum

def cmd_spectrum(args: argparse.Namespace) -> int:
    from .spectrum import truncation_scan, write_scan_csv
    cfg = _load_config(args.config,
                       {"model", "N", "lam", "mu", "cutoffs", "levels",
                        "c", "cprime", "J", "output", "seed"})
    model = cfg.get("model", args.model)
    n_colors = int(cfg.get("N", args.N))
    lam = float(cfg.get("lam", args.lam))
    cutoffs = _parse_cutoffs(str(cfg.get("cutoffs", args.cutoffs)))
    if not cutoffs:
        raise ConfigError("empty cutoff list")
    levels = int(cfg.get("levels", args.levels))
    j_sector = float(cfg.get("J", args.J))
    c_mode = str(cfg.get("c", args.c))
    cprime = cfg.get("cprime", args.cprime)
    from .models import Deformation
    seed = int(cfg.get("seed", args.seed))
    rows = []
    for cutoff in cutoffs:
        if model == "bosonic":
            params = BosonicParams(N=n_colors, lam=lam, cutoff=cutoff)
            cp_default = 0.0
        elif model == "minibmn":
            params = MiniBMNParams(N=n_colors, mu=float(
                cfg.get("mu", args.mu)), lam=lam, cutoff=cutoff)
            cp_default = float(cutoff)
        else:
            raise ConfigError(f"unknown model {model!r}")
        c_val = float(cutoff) if c_mode == "auto" else float(c_mode)
        cp_val = (cp_default if cprime in (None, "auto")
                  else float(cprime))
        deformation = Deformation(c=c_val, cprime=cp_val, J=j_sector)
        rows.extend(truncation_scan(params, [cutoff], levels=levels,
                                    deformation=deformation, seed=seed))
    out = cfg.get("output", args.output)
    write_scan_csv(rows, out)
    summary = {"rows": len(rows), "output": out,
               "ground_energy": _fmt(min(r.energy for r in rows))}
    print(json.dumps(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# vqe

def cmd_vqe(args: argparse.Namespace) -> int:
    from .models import (build_bosonic_hamiltonian,
                         build_minibmn_hamiltonian, build_gauge_generators,
                         build_so2_generator, deform, Deformation)
    from .qubit_map import encode
    from .vqe import AnsatzSpec, multi_start, write_run_record
    cfg = _load_config(args.config,
                       {"model", "N", "lam", "mu", "cutoff", "form",
                        "depth", "optimizer", "restarts", "max_iters",
                        "seed", "output", "deform_c", "deform_cprime"})
    model = cfg.get("model", args.model)
    lam = float(cfg.get("lam", args.lam))
    cutoff = int(cfg.get("cutoff", args.cutoff))
    if cutoff & (cutoff - 1):
        raise ConfigError("cutoff must be a power of two for qubits")
    if model == "bosonic":
        params = BosonicParams(N=int(cfg.get("N", args.N)), lam=lam,
                               cutoff=cutoff)
        op = build_bosonic_hamiltonian(params)
    elif model == "minibmn":
        params = MiniBMNParams(N=int(cfg.get("N", args.N)),
                               mu=float(cfg.get("mu", args.mu)),
                               lam=lam, cutoff=cutoff)
        h0 = build_minibmn_hamiltonian(params)
        c = float(cfg.get("deform_c", args.deform_c))
        cp = float(cfg.get("deform_cprime", args.deform_cprime))
        op = deform(h0, build_gauge_generators(params),
                    build_so2_generator(params),
                    Deformation(c=c, cprime=cp, J=0.0))
    else:
        raise ConfigError(f"unknown model {model!r}")
    n_qubits = int(np.log2(op.dim))
    h = encode(op, n_qubits)
    form = str(cfg.get("form", args.form))
    if form not in ("ry", "ryrz"):
        raise ConfigError(f"unknown ansatz form {form!r}")
    spec = AnsatzSpec(n_qubits=n_qubits, form=form,
                      depth=int(cfg.get("depth", args.depth)))
    optimizer = str(cfg.get("optimizer", args.optimizer))
    n_restarts = int(cfg.get("restarts", args.restarts))
    max_iters = int(cfg.get("max_iters", args.max_iters))
    seed = int(cfg.get("seed", args.seed))
    stats = multi_start(h, spec, optimizer, n_restarts, seed,
                        max_iters=max_iters)
    out = cfg.get("output", args.output)
    write_run_record(out, hamiltonian_file="(in-memory)", spec=spec,
                     optimizer=optimizer, n_restarts=n_restarts,
                     max_iters=max_iters, seed=seed, stats=stats)
    print(json.dumps({"min": _fmt(stats.min), "max": _fmt(stats.max),
                      "mean": _fmt(stats.mean), "std": _fmt(stats.std),
                      "output": out}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# lattice / fit

def cmd_lattice(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config,
                       {"N", "lam", "T", "nt", "mdtu", "burn_in",
                        "save_stride", "seed", "output", "manifest",
                        "gauged"})
    params = lh.LatticeParams(
        n_colors=int(cfg.get("N", args.N)),
        lam=float(cfg.get("lam", args.lam)),
        temperature=float(cfg.get("T", args.T)),
        n_t=int(cfg.get("nt", args.nt)),
        gauged=bool(cfg.get("gauged", not args.ungauged)))
    schedule = lh.Schedule(
        n_mdtu=float(cfg.get("mdtu", args.mdtu)),
        burn_in=float(cfg.get("burn_in", args.burn_in)),
        save_stride=float(cfg.get("save_stride", args.save_stride)))
    seed = int(cfg.get("seed", args.seed))
    record = lh.ChainRecord()
    series = lh.run_chain(params, schedule, seed, record=record)
    out = cfg.get("output", args.output)
    lh.write_chain_csv(record, out)
    manifest = cfg.get("manifest", args.manifest)
    if manifest:
        lh.write_manifest(manifest, params, schedule, seed, series)
    print(json.dumps({"mean_energy": _fmt(series.mean),
                      "error": _fmt(series.error),
                      "tau_int": _fmt(series.tau_int),
                      "acceptance": _fmt(series.acceptance),
                      "output": out}))
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config,
                       {"input", "np", "amax", "output", "per_T",
                        "nt_cut"})
    source = cfg.get("input", args.input)
    if source in cf.fixture_names():
        data = cf.load_fixture(source)
    else:
        import csv as _csv
        with open(source, "r", encoding="ascii") as fh:
            rows = list(_csv.DictReader(fh))
        data = cf.FitDataset.from_records(
            [(float(r["T"]), int(r["n_t"]), float(r["E"]),
              float(r["sigma_E"])) for r in rows])
    n_p = int(cfg.get("np", args.np))
    if cfg.get("per_T", args.per_T):
        results = cf.per_temperature_fit(
            data, n_p, int(cfg.get("nt_cut", args.nt_cut)))
        payload = [{"T": t,
                    "E": _fmt(r.energy) if r else None,
                    "sigma": _fmt(r.sigma) if r else None,
                    "chi2_dof": _fmt(r.chi2_dof) if r else None,
                    "error": err or None}
                   for t, r, err in results]
        print(json.dumps(payload))
        return EXIT_OK
    result = cf.wls_polyfit(data, n_p, float(cfg.get("amax", args.amax)))
    out = cfg.get("output", args.output)
    if out:
        cf.write_report_csv(out, [(n_p, result.a_max, result, "")])
    print(json.dumps({"E": _fmt(result.energy),
                      "sigma": _fmt(result.sigma),
                      "chi2_dof": _fmt(result.chi2_dof),
                      "n_points": result.n_points}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare

def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config,
                       {"model", "N", "couplings", "cutoff", "output",
                        "vqe_json", "mc_json", "lattice_results",
                        "varmc_results"})
    model = cfg.get("model", args.model)
    n_colors = int(cfg.get("N", args.N))
    couplings = cfg.get("couplings", None) or [
        float(tok) for tok in args.couplings.split(",")]
    cutoff = int(cfg.get("cutoff", args.cutoff))
    lattice_results = cfg.get("lattice_results", {})
    varmc_results = cfg.get("varmc_results", {})
    vqe_results = cfg.get("vqe_json", {})

    from .spectrum import lowest_eigenpairs
    lines = ["| lambda | HT | DL | MC | VQE |",
             "|---|---|---|---|---|"]
    rows = []
    for lam in couplings:
        if model == "bosonic":
            from .models import (bosonic_factors, build_gauge_generators,
                                 deform_factors, Deformation)
            params = BosonicParams(N=n_colors, lam=lam, cutoff=cutoff)
            factors = bosonic_factors(params)
            gens = build_gauge_generators(params)
            h = deform_factors(
                factors, gens, None,
                Deformation(c=float(cutoff), cprime=0.0, J=0.0))
            ht = float(lowest_eigenpairs(h, k=1).values[0])
        elif model == "minibmn":
            from .models import (build_minibmn_hamiltonian,
                                 build_gauge_generators,
                                 build_so2_generator, deform, Deformation)
            params = MiniBMNParams(N=n_colors, mu=1.0, lam=lam,
                                   cutoff=cutoff)
            hp = deform(build_minibmn_hamiltonian(params),
                        build_gauge_generators(params),
                        build_so2_generator(params),
                        Deformation(c=float(cutoff), cprime=float(cutoff),
                                    J=0.0))
            from .spectrum import expectation
            res = lowest_eigenpairs(hp, k=1)
            h0 = build_minibmn_hamiltonian(params)
            ht = float(expectation(h0, res.vectors[:, 0]))
        else:
            raise ConfigError(f"unknown model {model!r}")

        def cell(source, key):
            val = source.get(str(lam)) if isinstance(source, dict) else None
            return _fmt(float(val)) if val is not None else "-"

        row = {"lambda": lam, "HT": ht,
               "DL": varmc_results.get(str(lam)),
               "MC": lattice_results.get(str(lam)),
               "VQE": vqe_results.get(str(lam))}
        rows.append(row)
        lines.append(f"| {_fmt(lam)} | {_fmt(ht)} | "
                     f"{cell(varmc_results, lam)} | "
                     f"{cell(lattice_results, lam)} | "
                     f"{cell(vqe_results, lam)} |")
    report = "\n".join(lines) + "\n"
    out = cfg.get("output", args.output)
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(report)
    sys.stdout.write(report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matrixqm",
        description="Low-energy spectra of SU(N) matrix quantum mechanics "
                    "by truncation, variational circuits, lattice Monte "
                    "Carlo and variational Monte Carlo.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="truncated-Hamiltonian scan")
    p.add_argument("--config")
    p.add_argument("--model", default="bosonic",
                   choices=["bosonic", "minibmn"])
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--lambda", dest="lam", type=float, default=0.2)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--cutoffs", default="3..6")
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--c", default="auto")
    p.add_argument("--cprime", default=None)
    p.add_argument("--J", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="spectrum.csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("vqe", help="variational circuit upper bounds")
    p.add_argument("--config")
    p.add_argument("--model", default="bosonic",
                   choices=["bosonic", "minibmn"])
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--lambda", dest="lam", type=float, default=0.2)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--cutoff", type=int, default=2)
    p.add_argument("--form", default="ry")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--optimizer", default="quasi_newton_fd",
                   choices=["nelder_mead", "quasi_newton_fd"])
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    p.add_argument("--deform-c", dest="deform_c", type=float, default=2.0)
    p.add_argument("--deform-cprime", dest="deform_cprime", type=float,
                   default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="vqe_run.json")
    p.set_defaults(func=cmd_vqe)

    p = sub.add_parser("lattice", help="lattice Monte Carlo chain")
    p.add_argument("--config")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--T", type=float, default=0.4)
    p.add_argument("--nt", type=int, default=16)
    p.add_argument("--mdtu", type=float, default=2000.0)
    p.add_argument("--burn-in", dest="burn_in", type=float, default=1000.0)
    p.add_argument("--save-stride", dest="save_stride", type=float,
                   default=10.0)
    p.add_argument("--ungauged", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="chain.csv")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("fit", help="continuum extrapolation")
    p.add_argument("--config")
    p.add_argument("--input", default="su2_lam0.5")
    p.add_argument("--np", type=int, default=2)
    p.add_argument("--amax", type=float, default=0.10)
    p.add_argument("--per-T", dest="per_T", action="store_true")
    p.add_argument("--nt-cut", dest="nt_cut", type=int, default=16)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="cross-method comparison report")
    p.add_argument("--config")
    p.add_argument("--model", default="bosonic",
                   choices=["bosonic", "minibmn"])
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--couplings", default="0.5,1.0,2.0")
    p.add_argument("--cutoff", type=int, default=10)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InsufficientData, NoConvergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MatrixQMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:      # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
