"""Command-line entry point: ``ensqubit {spectrum,transfer,tomo,fid,sweep}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import PRESET_NAMES, ScenarioConfig, dump_parser, load_config, load_parser
from .physical_model import ConfigError

VERBS = {
    "spectrum": "spectrum",
    "transfer": "transfer",
    "tomo": "tomography",
    "fid": "fid",
    "sweep": "sweep",
}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _with_n_ions(cfg: ScenarioConfig, n: int):
    return cfg.world if not n else cfg.world.with_ensemble(n_ions=n)


def run_spectrum(cfg: ScenarioConfig) -> dict:
    p = cfg.params
    world = _with_n_ions(cfg, p["n_ions"])
    scan = np.linspace(p["scan_start"], p["scan_stop"], p["points"])
    rep = ex.run_transfer(
        world, scan=scan, homogeneous_width=p["homogeneous_width"], alpha_max=p["alpha_max"]
    )
    _write_csv(
        cfg.output_dir / "spectrum.csv",
        ["frequency_hz", "alpha_l_qubit_in_0", "alpha_l_after_transfer"],
        zip(scan, rep.spectrum_before.alpha_l, rep.spectrum_after.alpha_l),
    )
    summary = {
        "n_ions": world.ensemble.n_ions,
        "integrated_before": rep.spectrum_before.integrated(),
        "integrated_after": rep.spectrum_after.integrated(),
        "transfer_efficiency": rep.efficiency,
    }
    _write_json(cfg.output_dir / "spectrum.json", summary)
    return summary


def run_transfer(cfg: ScenarioConfig) -> dict:
    rep = ex.run_transfer(cfg.world)
    _write_csv(
        cfg.output_dir / "transfer_spectrum.csv",
        ["frequency_hz", "alpha_l_before", "alpha_l_after"],
        zip(rep.spectrum_before.frequency, rep.spectrum_before.alpha_l, rep.spectrum_after.alpha_l),
    )
    summary = rep.to_json() | {"n_ions": cfg.world.ensemble.n_ions}
    _write_json(cfg.output_dir / "transfer.json", summary)
    return summary


def run_tomo(cfg: ScenarioConfig) -> dict:
    rows = ex.run_tomography_suite(
        cfg.world, cfg.params["targets"], cfg.repetitions, cfg.params["decompose"]
    )
    table = [r.to_json() for r in rows]
    _write_json(cfg.output_dir / "tomography.json", {"rows": table})
    header = [
        "target", "fidelity_qr_qst_mean", "fidelity_qr_qst_std", "fidelity_qr_mean",
        "fidelity_qr_std", "reported_fidelity_qr_qst", "reported_fidelity_qr", "gap_qr_qst", "gap_qr",
        "excited_dwell_us",
    ]
    _write_csv(
        cfg.output_dir / "table.csv",
        header,
        (
            [
                t["target"], t["fidelity_qr_qst_mean"], t["fidelity_qr_qst_std"],
                t["fidelity_qr_mean"], t["fidelity_qr_std"],
                "" if t["reported_fidelity_qr_qst"] is None else t["reported_fidelity_qr_qst"],
                "" if t["reported_fidelity_qr"] is None else t["reported_fidelity_qr"],
                "" if t["gap_qr_qst"] is None else t["gap_qr_qst"],
                "" if t["gap_qr"] is None else t["gap_qr"],
                t["excited_dwell_s"] * 1e6,
            ]
            for t in table
        ),
    )
    return {"rows": len(table)}


def run_fid(cfg: ScenarioConfig) -> dict:
    p = cfg.params
    world = _with_n_ions(cfg, p["n_ions"])
    rep = ex.run_fid(
        world, delay_max=p["delay_max"], delay_step=p["delay_step"], report_delays=p["report_delays"]
    )
    _write_csv(
        cfg.output_dir / "fid.csv",
        ["delay_us", "envelope", "beat_signal"],
        zip(rep.delays * 1e6, rep.envelope, rep.beat_signal),
    )
    summary = rep.to_json() | {"n_ions": world.ensemble.n_ions}
    _write_json(cfg.output_dir / "fid.json", summary)
    return summary


def run_sweep(cfg: ScenarioConfig) -> dict:
    p = cfg.params
    world = _with_n_ions(cfg, p["n_ions"])
    rows = ex.run_sweep(world, p["grid"], p["metrics"], p["tomography_target"])
    header = list(rows[0])
    _write_csv(cfg.output_dir / "sweep.csv", header, ([r[k] for k in header] for r in rows))
    units = {k: ex.SWEEP_UNITS[k] for k in p["grid"]}
    _write_json(cfg.output_dir / "sweep.json", {"units": units, "rows": rows})
    return {"points": len(rows)}


RUNNERS = {
    "spectrum": run_spectrum,
    "transfer": run_transfer,
    "tomography": run_tomo,
    "fid": run_fid,
    "sweep": run_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ensqubit", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        sp = sub.add_parser(verb)
        sp.add_argument("--config", type=Path, help="INI file layered over the preset")
        sp.add_argument("--preset", default="paper-2007", choices=PRESET_NAMES)
        sp.add_argument("--seed", type=int, help="ensemble RNG seed")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument(
            "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
            help="override one configuration value (repeatable)",
        )
        sp.add_argument("--n-ions", type=int, help="shorthand for --set ensemble.n_ions=N")
        sp.add_argument("--workers", type=int, help="threads used for the ion loop")
    return ap


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected SECTION.KEY=VALUE")
        out[key.strip()] = value.strip()
    if args.n_ions is not None:
        for section in ("ensemble", "spectrum", "fid", "sweep"):
            out[f"{section}.n_ions"] = str(args.n_ions)
    if args.workers is not None:
        out["evolution.workers"] = str(args.workers)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    scenario = VERBS[args.verb]
    out_dir = args.out
    try:
        overrides = _overrides(args)
        cfg = load_config(scenario, args.preset, args.config, overrides, args.seed, args.out)
        out_dir = cfg.output_dir
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        cp = load_parser(args.preset, args.config, overrides)
        if args.seed is not None:
            cp.set("ensemble", "seed", str(args.seed))
        # Thread count does not change results; leave it out so outputs stay
        # byte-identical across machines.
        cp.remove_option("evolution", "workers")
        (cfg.output_dir / "config_used.ini").write_text(dump_parser(cp))
        summary = RUNNERS[scenario](cfg)
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable record
        record = {
            "error": type(exc).__name__,
            "message": str(exc),
            "field": getattr(exc, "field", None),
            "scenario": scenario,
        }
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        if out_dir is not None:
            try:
                Path(out_dir).mkdir(parents=True, exist_ok=True)
                _write_json(Path(out_dir) / "error.json", record)
            except OSError:
                pass
        return 2 if isinstance(exc, ConfigError) else 1
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
