"""Command-line front end.

Commands: simulate, theory, compare, classify, sweep.  Exit codes: 0 on
success, 2 for configuration or usage errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .compare import ComparisonRules, build_report
from .config import RunConfig, env_overrides, load_json, resolve
from .empirical import run_ensemble
from .errors import ConfigError, DomainError, EnsembleError, NumericalError
from .theory import classify_igb, theory_curve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

HIST_REPLICAS = 1000
SWEEP_REPLICAS = 200
SWEEP_AXES = {"K": "offset", "k": "kernel", "L": "depth", "Nc": "classes"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--activation", choices=["linear", "relu", "srelu", "tanh"])
    p.add_argument("--pool", choices=["none", "max", "avg"])
    p.add_argument("--kernel", type=int)
    p.add_argument("--depth", type=int, help="number of hidden layers")
    p.add_argument("--width", type=int, action="append",
                   help="hidden width; repeat once per layer or give once for all")
    p.add_argument("--gain", type=float)
    p.add_argument("--offset", type=float, help="input offset K")
    p.add_argument("--classes", type=int)
    p.add_argument("--dataset-size", type=int)
    p.add_argument("--input-dim", type=int, help="input dimension (default 3072)")
    p.add_argument("--ensemble", type=int, help="number of initialisations")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--bins", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--precision", choices=["single", "double"])
    p.add_argument("--finite-size", dest="finite_size", action="store_const", const=True,
                   help="add the finite-dataset term to the theory centre variance")
    p.add_argument("--out", metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="igblab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("simulate", "run an ensemble of random networks"),
                            ("theory", "compute the analytic f0 distribution"),
                            ("compare", "simulate, compute theory and compare them"),
                            ("classify", "print whether the configuration shows bias")):
        _common(sub.add_parser(name, help=help_text))
    sw = sub.add_parser("sweep", help="vary one setting and tabulate gamma and extreme mass")
    _common(sw)
    sw.add_argument("--axis", choices=sorted(SWEEP_AXES), required=True)
    sw.add_argument("--values", type=float, nargs="+", required=True)
    sw.add_argument("--no-simulate", dest="simulate", action="store_const", const=False,
                    help="theory columns only")
    return parser


_NON_CONFIG = {"command", "config"}


def _resolve(args: argparse.Namespace) -> RunConfig:
    flags = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    file_values = load_json(args.config) if args.config else {}
    return resolve(file_values, env_overrides(), flags)


def _out_dir(cfg: RunConfig, parser: argparse.ArgumentParser, command: str) -> Path:
    if not cfg.out:
        parser.error(f"{command}: --out is required (or set 'out' in the config)")
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_config(cfg: RunConfig, out: Path, command: str) -> None:
    data = cfg.to_dict()
    data["command"] = command
    with open(out / "config.json", "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _simulate(cfg: RunConfig, replicas: int):
    return run_ensemble(cfg.architecture(), cfg.data(), replicas, cfg.seed,
                        threads=cfg.threads, bins=cfg.bins, precision=cfg.precision,
                        batch_size=cfg.batch_size)


def _curve(cfg: RunConfig):
    return theory_curve(cfg.architecture(), cfg.data(), cfg.quadrature(), cfg.grid_points,
                        cfg.finite_size)


def cmd_simulate(cfg, out):
    result = _simulate(cfg, cfg.replicas(HIST_REPLICAS))
    result.write_csv(out / "ensemble.csv")
    result.write_json(out / "summary.json")
    print(f"mean f0 = {result.mean_f[0]:.4f}, gamma = {result.gamma.value:.4f} "
          f"+- {result.gamma.stderr:.4f}; wrote {out}")


def cmd_theory(cfg, out):
    curve = _curve(cfg)
    curve.write_csv(out / "curve.csv")
    curve.write_json(out / "cumulants.json")
    gamma = curve.header()["gamma"]
    print(f"var_mu = {curve.var_mu:.6g}, var_O = {curve.var_O:.6g}, gamma = {gamma}; wrote {out}")


def cmd_compare(cfg, out):
    curve = _curve(cfg)
    result = _simulate(cfg, cfg.replicas(HIST_REPLICAS))
    report = build_report(result, curve,
                          ComparisonRules(null_replicas=cfg.ks_null_replicas, seed=cfg.seed))
    result.write_csv(out / "ensemble.csv")
    result.write_json(out / "summary.json")
    curve.write_csv(out / "curve.csv")
    curve.write_json(out / "cumulants.json")
    report.write_json(out / "report.json")
    status = "pass" if report.passed else "fail"
    print(f"ks = {report.ks:.4f} (threshold {report.ks_threshold:.4f}); {status}; wrote {out}")


def cmd_classify(cfg):
    print(classify_igb(cfg.activation, cfg.pool, cfg.kernel, cfg.gain, cfg.offset,
                       cfg.quadrature()))


def _sweep_point(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    name = SWEEP_AXES[axis]
    if name == "offset":
        point = value
    else:
        if not float(value).is_integer():
            raise ConfigError(f"sweep values for {axis} must be integers", "values")
        point = int(value)
    updates = {name: point}
    if axis == "k" and cfg.pool == "none":
        raise ConfigError("sweeping the kernel needs --pool max or avg", "pool")
    if axis == "L":
        updates["width"] = [cfg.width[0]]
    data = cfg.to_dict()
    data.update(updates)
    return resolve(data)


def cmd_sweep(cfg, out):
    rows = []
    for value in cfg.values:
        point = _sweep_point(cfg, cfg.axis, value)
        row = {"axis": cfg.axis, "value": value, "gamma_theory": "", "gamma_emp": "",
               "gamma_emp_stderr": "", "extreme_mass_theory": "", "extreme_mass_emp": "",
               "mean_f0": ""}
        try:
            curve = _curve(point)
            row["gamma_theory"] = repr(curve.var_mu / curve.var_O) if curve.var_O > 0 else "inf"
            row["extreme_mass_theory"] = repr(curve.extreme_mass())
        except ConfigError:
            if not cfg.simulate:
                raise
        if cfg.simulate:
            result = _simulate(point, point.replicas(SWEEP_REPLICAS))
            row["gamma_emp"] = repr(result.gamma.value)
            row["gamma_emp_stderr"] = repr(result.gamma.stderr)
            row["extreme_mass_emp"] = repr(result.extreme_mass())
            row["mean_f0"] = repr(float(result.mean_f[0]))
        rows.append(row)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} sweep points to {out / 'sweep.csv'}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        if args.command == "classify":
            cmd_classify(cfg)
            return EXIT_OK
        out = _out_dir(cfg, parser, args.command)
        _write_config(cfg, out, args.command)
        {"simulate": cmd_simulate, "theory": cmd_theory, "compare": cmd_compare,
         "sweep": cmd_sweep}[args.command](cfg, out)
    except (ConfigError, DomainError) as exc:
        field_name = getattr(exc, "field", None)
        where = f" [{field_name}]" if field_name else ""
        print(f"igblab: configuration error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, EnsembleError, FloatingPointError) as exc:
        print(f"igblab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
