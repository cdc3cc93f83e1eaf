"""Command-line front end: ``jjsim {modes,qed,holstein} CONFIG``.

Exit status 0 on success, 2 for configuration/usage problems, 3 when a
solver or resource limit fails.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import arrays, core, holstein, qed
from .config import SCHEMAS, apply_overrides, grid, load, validate
from .errors import ConfigurationError, JJSimError
from .report import OutputWriter, PlotSpec, Table, plot_data, render_figure, to_json

OUTPUT_ENV = "JJSIM_OUTPUT_DIR"
DEFAULT_OUTPUT = "jjsim-out"


@dataclass
class RunConfig:
    subcommand: str
    input_path: str
    output_dir: str | None = None
    seed: int = 0
    format: str = "csv"
    unit_system: str | None = None
    worker_count: int = 1
    verb: str | None = None
    overwrite: bool = False
    overrides: list = field(default_factory=list)
    figures: bool = True


class _Outputs:
    """Collects artifacts in memory so nothing is written unless everything succeeded."""

    def __init__(self, fmt: str, figures: bool):
        self.fmt = fmt
        self.figures = figures
        self.files: dict[str, bytes] = {}

    def text(self, name, text):
        self.files[name] = text.encode("utf-8")

    def table(self, stem, table: Table):
        if self.fmt == "json":
            records = [dict(zip(table.columns, row)) for row in table.rows]
            self.text(f"{stem}.json", to_json(records))
        else:
            self.text(f"{stem}.csv", table.to_csv())

    def plot(self, table: Table, spec: PlotSpec):
        data, script = plot_data(table, spec)
        self.text(f"{spec.name}.dat", data)
        self.text(f"{spec.name}.gp", script)
        if self.figures:
            self.files[f"{spec.name}.png"] = render_figure(table, spec)


def _junction(cfg) -> core.JunctionParams:
    j = cfg["junction"]
    return core.JunctionParams(j["critical_current"], j["capacitance"], j["bias_ratio"], j["K"])


def _run_modes(cfg, run: RunConfig, out: _Outputs) -> dict:
    unit_system = run.unit_system or cfg["unit_system"]
    if unit_system not in ("model", "si"):
        raise ConfigurationError(f"unit_system must be 'model' or 'si', got {unit_system!r}")
    if "junction" not in cfg:
        raise ConfigurationError("missing required key 'junction'")
    if cfg["topology"] not in ("chain", "complete"):
        raise ConfigurationError(f"key 'topology' must be chain or complete, got {cfg['topology']!r}")
    jp = _junction(cfg)
    dis = cfg.get("disorder") or {"vertical_spread": 0.0, "vertical_multipliers": None, "horizontal_multipliers": None}
    spec = arrays.ArraySpec(cfg["topology"], cfg["N"], jp, dis["vertical_multipliers"], dis["horizontal_multipliers"])
    if dis["vertical_spread"]:
        rng = np.random.default_rng(run.seed)
        draws = rng.uniform(1 - dis["vertical_spread"], 1 + dis["vertical_spread"], size=spec.N)
        spec = arrays.ArraySpec(spec.topology, spec.N, jp, tuple(spec.vertical * draws), spec.horizontal_ej_multipliers)
    wp = core.plasma_frequency(jp)
    if cfg["g_over_omega_p"] is not None and "qubit" in cfg:
        raise ConfigurationError("give either 'g_over_omega_p' or a 'qubit' block, not both")
    if cfg["g_over_omega_p"] is not None:
        g = cfg["g_over_omega_p"]
    elif "qubit" in cfg:
        q = cfg["qubit"]
        g = core.qed_coupling_g(jp, core.QedCouplingParams(q["mutual_inductance"], q["qubit_squid_critical_current"], spec.N)) / wp
    else:
        raise ConfigurationError("missing required key 'g_over_omega_p' (or a 'qubit' device block)")

    spectrum = arrays.array_modes(spec)
    report = arrays.com_quality(spec, g, cfg["margin"], spectrum=spectrum)
    cols = ["s", "nu_over_omega_p"] + (["nu_rad_per_s"] if unit_system == "si" else []) + [f"b_{i}" for i in range(spec.N)]
    rows = []
    for s in range(spec.N):
        row = [s, float(spectrum.frequencies[s])]
        if unit_system == "si":
            row.append(float(spectrum.frequencies[s] * wp))
        row += [float(v) for v in spectrum.eigenvectors[:, s]]
        rows.append(tuple(row))
    table = Table(cols, rows)
    out.table("modes", table)

    extra = {
        "g_over_omega_p": g,
        "g_rad_per_s": g * wp,
        "g_hz": g * wp / (2 * math.pi),
        "margin": cfg["margin"],
        "omega_p_rad_per_s": wp,
        "topology": spec.topology.value,
        "N": spec.N,
    }
    if spec.topology is arrays.Topology.CHAIN:
        extra["asymptotic_gap"] = arrays.asymptotic_gap(spec)
    if spec.is_clean:
        ana = arrays.analytic_spectrum(spec)
        extra["max_rel_dev_from_closed_form"] = float(np.max(np.abs(spectrum.frequencies / ana - 1)))
    report.extra.update(extra)
    out.text("com_quality.json", to_json(report.to_dict()))
    out.plot(table, PlotSpec("spectrum", "s", ["nu_over_omega_p"], title="Normal-mode spectrum", ylabel="nu / omega_p", style="points"))
    theta = arrays.solve_equilibrium(spec)
    return {
        "junction": asdict(jp),
        "josephson_energy_J": jp.josephson_energy,
        "plasma_frequency_rad_per_s": wp,
        "equilibrium_phases": [float(t) for t in theta],
        "vertical_ej_multipliers": [float(v) for v in spec.vertical],
        "horizontal_ej_multipliers": [float(v) for v in spec.horizontal],
        "g_over_omega_p": g,
        "margin": cfg["margin"],
        "unit_system": unit_system,
    }


def _run_qed(cfg, run: RunConfig, out: _Outputs) -> dict:
    derived = {}
    if "device" in cfg:
        if cfg["coupling_g"] is not None:
            raise ConfigurationError("give either 'coupling_g' or a 'device' block, not both")
        dev = cfg["device"]
        jp = _junction(dev)
        wp = core.plasma_frequency(jp)
        q = dev["qubit"] if "qubit" in dev else None
        if q is None:
            raise ConfigurationError("missing required key 'device.qubit'")
        g = core.qed_coupling_g(jp, core.QedCouplingParams(q["mutual_inductance"], q["qubit_squid_critical_current"], dev["N"])) / wp
        derived = {"omega_p_rad_per_s": wp, "g_hz": g * wp / (2 * math.pi), "energy_unit": "omega_p"}
    elif cfg["coupling_g"] is None:
        raise ConfigurationError("missing required key 'coupling_g' (or a 'device' block)")
    else:
        g = cfg["coupling_g"]
    nu0 = cfg["resonator_freq"]
    bz = nu0 if cfg["qubit_Bz"] is None else cfg["qubit_Bz"]
    spec = qed.QedSpec(bz, nu0, g, cfg["fock_cutoff"], cfg["qubit_Bx"])
    init = cfg.get("initial") or {"qubit": "e", "photons": 0}
    times_cfg = cfg.get("times") or {"start": 0.0, "stop": 2 * math.pi / abs(g) if g else 10.0, "num": 1000}
    if times_cfg["num"] < 1:
        raise ConfigurationError("key 'times.num' must be >= 1")
    times = np.linspace(times_cfg["start"], times_cfg["stop"], times_cfg["num"])
    traj = qed.rabi_trajectory(spec, times, qed.jc_state(spec, init["qubit"], init["photons"]))
    ttable = Table(
        ["t", "P_e", "n_phot", "N_exc"],
        [(float(t), float(a), float(b), float(c)) for t, a, b, c in zip(times, traj.observables["P_e"], traj.observables["n_phot"], traj.observables["N_exc"])],
    )
    out.table("trajectory", ttable)
    out.plot(ttable, PlotSpec("rabi", "t", ["P_e", "n_phot"], title="Vacuum Rabi oscillation", ylabel="population"))

    sp_cfg = cfg.get("spectroscopy") or {"detuning_start": -5 * abs(g), "detuning_stop": 5 * abs(g), "num": 41}
    if sp_cfg["num"] < 1:
        raise ConfigurationError("key 'spectroscopy.num' must be >= 1")
    deltas = np.linspace(sp_cfg["detuning_start"], sp_cfg["detuning_stop"], sp_cfg["num"])
    rows = qed.dressed_spectrum(spec, deltas, workers=run.worker_count)
    stable = Table(["delta", "E1", "E2", "E3", "E4", "splitting"], [(r.detuning, *r.levels, r.splitting) for r in rows])
    out.table("spectroscopy", stable)
    out.plot(stable, PlotSpec("dressed", "delta", ["E2", "E3"], title="Dressed single-excitation levels", xlabel="detuning", ylabel="energy"))
    return {
        "qed_spec": asdict(spec),
        "initial": init,
        "times": times_cfg,
        "spectroscopy": sp_cfg,
        "derived": derived,
        "warnings": traj.warnings,
    }


def _holstein_spec(cfg) -> holstein.HolsteinSpec:
    if cfg["hopping"] is not None and cfg["exchange_J"] is not None:
        raise ConfigurationError("give either 'hopping' or 'exchange_J', not both")
    if cfg["boundary"] not in ("open", "periodic"):
        raise ConfigurationError(f"key 'boundary' must be open or periodic, got {cfg['boundary']!r}")
    if cfg["hopping"] is not None:
        t = cfg["hopping"]
    elif cfg["exchange_J"] is not None:
        t = core.hopping_from_exchange(cfg["exchange_J"])
    else:
        raise ConfigurationError("missing required key 'hopping' (or 'exchange_J')")
    return holstein.HolsteinSpec(
        cfg["N_sites"],
        t,
        cfg["phonon_freq"],
        cfg["coupling"],
        boundary=cfg["boundary"],
        phonon_cutoff=cfg["phonon_cutoff"],
        anharmonic=cfg["anharmonic"],
        chemical_Bz=cfg["chemical_Bz"],
        leakage_Bx=cfg["leakage_Bx"],
        filling=cfg["filling"],
    )


def _spec_dict(spec: holstein.HolsteinSpec) -> dict:
    d = asdict(spec)
    d["boundary"] = spec.boundary.value
    return d


def _run_holstein(cfg, run: RunConfig, out: _Outputs) -> dict:
    spec = _holstein_spec(cfg)
    verb = run.verb
    params = {"holstein_spec": _spec_dict(spec), "verb": verb}
    if verb == "ground":
        k = cfg["states"]
        H = holstein.holstein_hamiltonian(spec)
        sector = holstein.half_filling_sector(spec)
        energies, states = holstein.ground_state(H, sector, k)
        record = holstein.PhasePoint(
            spec.hopping / spec.phonon_freq,
            spec.coupling / spec.phonon_freq,
            float(energies[0]),
            float(energies[1] - energies[0]) if k > 1 else math.nan,
            holstein.cdw_structure_factor(states[0]),
            tuple(float(x) for x in holstein.density_profile(states[0])),
        ).to_dict()
        record["energies"] = [float(e) for e in energies]
        record["sector_dimension"] = sector.dimension
        out.text("ground.json", to_json(record))
        params["states"] = k
    elif verb == "ramp":
        if "ramp" not in cfg:
            raise ConfigurationError("missing required key 'ramp'")
        r = cfg["ramp"]
        schedule = holstein.RampSchedule(r["total_time"], r["steps"], staggered_field=r["staggered_field"])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = holstein.adiabatic_ramp(spec, schedule)
            rows = []
            for T in r["convergence_times"] or []:
                steps = max(1, math.ceil(r["steps"] * float(T) / r["total_time"])) if r["total_time"] else r["steps"]
                res = holstein.adiabatic_ramp(spec, holstein.RampSchedule(float(T), steps, staggered_field=r["staggered_field"]))
                rows.append((float(T), steps, res.fidelity, res.number_drift))
        out.text(
            "ramp.json",
            to_json(
                {
                    "fidelity": result.fidelity,
                    "number_drift": result.number_drift,
                    "final_density": [float(x) for x in holstein.density_profile(result.state)],
                    "final_S_pi": holstein.cdw_structure_factor(result.state),
                    "warnings": result.warnings,
                }
            ),
        )
        if rows:
            ctable = Table(["total_time", "steps", "fidelity", "number_drift"], rows)
            out.table("ramp_convergence", ctable)
            out.plot(ctable, PlotSpec("ramp_convergence", "total_time", ["fidelity"], title="Ramp fidelity vs duration", ylabel="fidelity", style="points"))
        params["ramp"] = {"total_time": r["total_time"], "steps": r["steps"], "staggered_field": r["staggered_field"], "path": "linear", "convergence_times": r["convergence_times"]}
    elif verb == "scan":
        if "scan" not in cfg:
            raise ConfigurationError("missing required key 'scan'")
        gs = grid(cfg["scan"]["g_over_omega"], "scan.g_over_omega")
        ts = grid(cfg["scan"]["t_over_omega"], "scan.t_over_omega")
        points = holstein.phase_scan(spec, gs, ts, workers=run.worker_count)
        cols = ["t_over_omega", "g_over_omega", "E0", "gap", "S_pi"] + [f"n_{i + 1}" for i in range(spec.N_sites)] + ["error"]
        rows = []
        for p in points:
            dens = list(p.density_profile) or [math.nan] * spec.N_sites
            rows.append((p.t_over_omega, p.g_over_omega, p.ground_energy, p.excitation_gap, p.cdw_order, *dens, p.error or ""))
        table = Table(cols, rows)
        out.table("scan", table)
        out.text("scan.json", to_json([p.to_dict() for p in points]))
        out.plot(table, PlotSpec("scan_cdw", "g_over_omega", ["S_pi"], group_by="t_over_omega", title="CDW structure factor", xlabel="g / omega", ylabel="S_pi"))
        out.plot(table, PlotSpec("scan_gap", "g_over_omega", ["gap"], group_by="t_over_omega", title="Half-filling excitation gap", xlabel="g / omega", ylabel="gap / omega"))
        params["scan"] = {"g_over_omega": gs, "t_over_omega": ts}
    else:
        raise ConfigurationError(f"holstein verb must be ground, ramp or scan, got {verb!r}")
    return params


_RUNNERS = {"modes": _run_modes, "qed": _run_qed, "holstein": _run_holstein}


def resolve_output_dir(run: RunConfig, cfg: dict) -> str:
    return run.output_dir or os.environ.get(OUTPUT_ENV) or cfg.get("output_dir") or DEFAULT_OUTPUT


def run(config: RunConfig) -> int:
    """Execute one CLI invocation; returns the exit status."""
    try:
        if config.subcommand not in _RUNNERS:
            raise ConfigurationError(f"unknown subcommand {config.subcommand!r}")
        if config.format not in ("csv", "json"):
            raise ConfigurationError(f"format must be csv or json, got {config.format!r}")
        if config.worker_count < 1:
            raise ConfigurationError("worker_count must be >= 1")
        raw, lines = load(config.input_path)
        raw = apply_overrides(raw, config.overrides)
        cfg = validate(raw, SCHEMAS[config.subcommand], lines)
        out_dir = resolve_output_dir(config, cfg)
        out = _Outputs(config.format, config.figures)
        params = _RUNNERS[config.subcommand](cfg, config, out)
        manifest = {
            "tool": "jjsim",
            "version": __version__,
            "subcommand": config.subcommand,
            "verb": config.verb,
            "input_path": str(config.input_path),
            "seed": config.seed,
            "format": config.format,
            "worker_count": config.worker_count,
            "config": cfg,
            "resolved": params,
            "outputs": sorted(out.files) + ["manifest.json"],
        }
        out.text("manifest.json", to_json(manifest))
        writer = OutputWriter(out_dir, overwrite=config.overwrite)
        writer.check(out.files)
        for name in sorted(out.files):
            writer.write_bytes(name, out.files[name])
    except ConfigurationError as exc:
        print(f"jjsim: configuration error: {exc}", file=sys.stderr)
        return 2
    except JJSimError as exc:
        print(f"jjsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(f"jjsim: wrote {len(out.files)} files to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jjsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"jjsim {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output-dir", help=f"output directory (env {OUTPUT_ENV}, then config output_dir)")
    common.add_argument("--seed", type=int, default=0, help="seed for disorder sampling")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    common.add_argument("--workers", type=int, default=1, help="concurrent workers for sweeps")
    common.add_argument("--overwrite", action="store_true", help="replace existing output files")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config key (dotted path)")
    common.add_argument("--no-figures", dest="figures", action="store_false", help="skip PNG rendering")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    modes = sub.add_parser("modes", parents=[common], help="array normal modes and COM-mode quality")
    modes.add_argument("config", help="YAML configuration file")
    modes.add_argument("--unit-system", choices=("model", "si"))
    qedp = sub.add_parser("qed", parents=[common], help="Jaynes-Cummings dynamics and dressed spectrum")
    qedp.add_argument("config", help="YAML configuration file")
    hol = sub.add_parser("holstein", parents=[common], help="Holstein chain: ground | ramp | scan")
    hol.add_argument("verb", choices=("ground", "ramp", "scan"))
    hol.add_argument("config", help="YAML configuration file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        subcommand=args.subcommand,
        input_path=args.config,
        output_dir=args.output_dir,
        seed=args.seed,
        format=args.format,
        unit_system=getattr(args, "unit_system", None),
        worker_count=args.workers,
        verb=getattr(args, "verb", None),
        overwrite=args.overwrite,
        overrides=args.overrides,
        figures=args.figures,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
