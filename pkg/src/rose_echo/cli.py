"""Command-line frontend: config ingestion, simulation runs, curve tables, fits.

The run configuration is a flat INI-style file with experimentalist units
(Hz and microseconds) that are converted to rad/s and seconds exactly once
at load time.  Subcommands: pulse-check, simulate, curve, fit.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bloch import NonFiniteState
from .ensemble import Ensemble, RoseSequence, run_sequence, rephasing_quality
from .model import (EfficiencyModel, FitDiverged, InsufficientData,
                    confidence_band, efficiency_approx, efficiency_ideal,
                    fit_report, read_data_csv)
from .pulse import (ChsPulse, adiabaticity_ratio, bandwidth, dump_waveforms,
                    is_adiabatic, signal_for_area)

EXIT_OK = 0
EXIT_CONFIG_INVALID = 2
EXIT_INSUFFICIENT_DATA = 3
EXIT_FIT_DIVERGED = 4
EXIT_NON_FINITE = 5

TWO_PI = 2.0 * math.pi

# signal duration: safety factor 2 over the minimum that fits the swept
# bandwidth, capped so the signal window clears the first rephasing window
_SIGNAL_DURATION_FACTOR = 2.0


class ConfigInvalid(ValueError):
    """The run configuration failed validation."""


_SCHEMA = {
    "pulse": {"required": {"omega0_hz", "beta_hz", "mu"},
              "optional": {"window_half_width"}},
    "sequence": {"required": {"t12_us", "t23_us", "signal_area_pi"},
                 "optional": {"n_rephasings"}},
    "ensemble": {"required": set(),
                 "optional": {"profile", "span_factor", "n_points", "width_hz"}},
    "medium": {"required": {"alpha_l", "t2_us"},
               "optional": {"t2_high_us"}},
    "model": {"required": set(),
              "optional": {"eta_pop", "eta_phase"}},
    "output": {"required": set(),
               "optional": {"directory", "formats"}},
}


@dataclass
class RunConfig:
    """Validated configuration with everything already in SI units."""

    rephasing1: ChsPulse
    rephasing2: ChsPulse
    signal_area: float
    signal_duration: float
    t12: float
    t23: float
    n_rephasings: int
    ensemble_profile: str
    ensemble_span: float
    ensemble_points: int
    ensemble_width: float
    alpha_L: float
    t2: float
    t2_high: float
    eta_pop: float
    eta_phase: float
    out_dir: Path
    formats: tuple[str, ...]

    def sequence(self) -> RoseSequence:
        signal = signal_for_area(self.signal_area, t_center=0.0,
                                 duration=self.signal_duration)
        return RoseSequence(signal, self.rephasing1, self.rephasing2)

    def ensemble(self) -> Ensemble:
        if self.ensemble_profile == "flat":
            return Ensemble.flat(self.ensemble_span, self.ensemble_points)
        if self.ensemble_profile == "gaussian":
            return Ensemble.gaussian(self.ensemble_width, self.ensemble_span,
                                     self.ensemble_points)
        return Ensemble.lorentzian(self.ensemble_width, self.ensemble_span,
                                   self.ensemble_points)


def _parse_t2(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text) * 1e-6


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigInvalid(f"cannot read config file {path}")

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigInvalid(f"unknown config section [{section}]")
        allowed = _SCHEMA[section]["required"] | _SCHEMA[section]["optional"]
        for key in parser[section]:
            if key not in allowed:
                raise ConfigInvalid(f"unknown key '{key}' in section [{section}]")
    for section, spec in _SCHEMA.items():
        if spec["required"]:
            if section not in parser:
                raise ConfigInvalid(f"missing config section [{section}]")
            missing = spec["required"] - set(parser[section])
            if missing:
                raise ConfigInvalid(
                    f"missing keys in [{section}]: {', '.join(sorted(missing))}")

    try:
        pulse = parser["pulse"]
        omega0 = TWO_PI * pulse.getfloat("omega0_hz")
        beta = TWO_PI * pulse.getfloat("beta_hz")
        mu = pulse.getfloat("mu")
        whw = pulse.getfloat("window_half_width", fallback=5.0)

        seq = parser["sequence"]
        t12 = seq.getfloat("t12_us") * 1e-6
        t23 = seq.getfloat("t23_us") * 1e-6
        area = seq.getfloat("signal_area_pi") * math.pi
        n_reph = seq.getint("n_rephasings", fallback=2)
        if n_reph not in (1, 2):
            raise ConfigInvalid("n_rephasings must be 1 or 2")

        rp1 = ChsPulse(omega0=omega0, beta=beta, mu=mu, t_center=t12,
                       window_half_width=whw)
        rp2 = ChsPulse(omega0=omega0, beta=beta, mu=mu, t_center=t12 + t23,
                       window_half_width=whw)

        if mu > 0:
            duration = _SIGNAL_DURATION_FACTOR * 4.0 / (2.0 * mu * beta)
        else:
            duration = 4.0 / beta
        max_duration = 0.9 * (rp1.window[0] - 0.0)
        if max_duration <= 0:
            raise ConfigInvalid(
                "t12 too short: the first rephasing window reaches the signal")
        duration = min(duration, max_duration)

        ens = parser["ensemble"] if "ensemble" in parser else {}
        profile = ens.get("profile", "flat") if ens else "flat"
        if profile not in ("flat", "gaussian", "lorentzian"):
            raise ConfigInvalid(f"unknown ensemble profile {profile!r}")
        span_factor = float(ens.get("span_factor", 2.0)) if ens else 2.0
        n_points = int(ens.get("n_points", 801)) if ens else 801
        span = span_factor * mu * beta if mu > 0 else span_factor * beta
        width_hz = ens.get("width_hz") if ens else None
        width = TWO_PI * float(width_hz) if width_hz else span / 2.0

        medium = parser["medium"]
        alpha_L = medium.getfloat("alpha_l")
        t2 = _parse_t2(medium.get("t2_us"))
        t2_high = (_parse_t2(medium.get("t2_high_us"))
                   if medium.get("t2_high_us") else t2)

        mod = parser["model"] if "model" in parser else {}
        eta_pop = float(mod.get("eta_pop", 1.0)) if mod else 1.0
        eta_phase = float(mod.get("eta_phase", 1.0)) if mod else 1.0

        out = parser["output"] if "output" in parser else {}
        out_dir = Path(out.get("directory", ".")) if out else Path(".")
        formats_text = out.get("formats", "csv,json") if out else "csv,json"
        formats = tuple(f.strip() for f in formats_text.split(",") if f.strip())
        for f in formats:
            if f not in ("csv", "json"):
                raise ConfigInvalid(f"unknown output format {f!r}")

        cfg = RunConfig(
            rephasing1=rp1, rephasing2=rp2, signal_area=area,
            signal_duration=duration, t12=t12, t23=t23, n_rephasings=n_reph,
            ensemble_profile=profile, ensemble_span=span,
            ensemble_points=n_points, ensemble_width=width,
            alpha_L=alpha_L, t2=t2, t2_high=t2_high,
            eta_pop=eta_pop, eta_phase=eta_phase,
            out_dir=out_dir, formats=formats,
        )
        # surface invariant violations (pulse overlap, bad ranges) now
        cfg.sequence()
        EfficiencyModel(alpha_L=alpha_L, t23=t23, t2=t2,
                        eta_pop=eta_pop, eta_phase=eta_phase)
    except ConfigInvalid:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigInvalid(str(exc)) from exc
    return cfg


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_pulse_check(cfg: RunConfig, out_dir: Path) -> int:
    p = cfg.rephasing1
    bw = bandwidth(p)
    ratio = adiabaticity_ratio(p)
    ok = is_adiabatic(p)
    print(f"pulse bandwidth: {bw / TWO_PI:.6g} Hz ({bw:.6g} rad/s)")
    print(f"adiabaticity ratio mu*beta^2/omega0^2: {ratio:.6g}")
    print(f"adiabatic check (threshold 0.25): {'PASS' if ok else 'FAIL'}")
    if p.mu == 0:
        print("warning: mu = 0, no sweep (pulse bandwidth is zero)")
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_waveforms(p, out_dir / "pulse_rabi.csv", out_dir / "pulse_detuning.csv")
    print(f"waveforms written to {out_dir}/pulse_rabi.csv and pulse_detuning.csv")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out_dir: Path, threads: int) -> int:
    seq = cfg.sequence()
    ens = cfg.ensemble()
    trace = run_sequence(seq, ens, cfg.t2, n_rephasings=cfg.n_rephasings,
                         threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in cfg.formats:
        trace.to_csv(out_dir / "trace.csv")
    if "json" in cfg.formats:
        trace.echoes_to_json(out_dir / "echoes.json")

    beta = seq.rephasing1.beta
    signal_echoes = [e for e in trace.detected_echoes if e.mode == seq.signal.mode]
    summary: dict = {
        "alpha_L": cfg.alpha_L,
        "t2_s": cfg.t2 if cfg.t2 != math.inf else None,
        "t12_s": cfg.t12,
        "t23_s": cfg.t23,
        "n_rephasings": cfg.n_rephasings,
        "expected_echo_time_s": seq.echo_time,
        "detected_echoes": [e.as_dict() for e in trace.detected_echoes],
    }
    if signal_echoes:
        best = max(signal_echoes, key=lambda e: e.peak)
        summary["signal_mode_echo"] = best.as_dict()
        summary["message"] = (
            f"signal-mode echo at {best.time * 1e6:.2f} us")
    else:
        summary["signal_mode_echo"] = None
        summary["message"] = "no signal-mode echo"

    if cfg.n_rephasings == 2 and cfg.signal_area > 0:
        eta_pop, eta_phase = rephasing_quality(seq, ens, threads=threads)
        m = EfficiencyModel(alpha_L=cfg.alpha_L, t23=cfg.t23, t2=cfg.t2,
                            eta_pop=eta_pop, eta_phase=eta_phase)
        summary["eta_pop"] = eta_pop
        summary["eta_phase"] = eta_phase
        summary["predicted_efficiency"] = efficiency_approx(m)
    else:
        summary["eta_pop"] = None
        summary["eta_phase"] = None
        summary["predicted_efficiency"] = None

    _write_json(out_dir / "summary.json", summary)
    print(summary["message"])
    if summary["predicted_efficiency"] is not None:
        print(f"microscopic eta_pop={summary['eta_pop']:.4f} "
              f"eta_phase={summary['eta_phase']:.4f}")
        print(f"model-predicted efficiency at alpha_L={cfg.alpha_L}: "
              f"{summary['predicted_efficiency']:.4f}")
    print(f"outputs written to {out_dir}")
    return EXIT_OK


def cmd_curve(cfg: RunConfig, out_dir: Path, lo: float, hi: float, step: float) -> int:
    if hi < lo or step <= 0:
        raise ConfigInvalid("curve range must have hi >= lo and step > 0")
    n = int(round((hi - lo) / step)) + 1 if hi > lo else 1
    grid = lo + step * np.arange(n)
    ideal = np.atleast_1d(efficiency_ideal(grid))
    approx = np.array([
        efficiency_approx(EfficiencyModel(alpha_L=float(a), t23=cfg.t23, t2=cfg.t2,
                                          eta_pop=cfg.eta_pop,
                                          eta_phase=cfg.eta_phase))
        for a in grid
    ])
    band_low, band_high = confidence_band(grid, cfg.t23, cfg.t2, cfg.t2_high)
    band_low = np.atleast_1d(band_low)
    band_high = np.atleast_1d(band_high)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "curve.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha_L", "eta_ideal", "eta_approx",
                         "eta_band_low", "eta_band_high"])
        for i in range(n):
            writer.writerow([f"{grid[i]:.12e}", f"{ideal[i]:.12e}",
                             f"{approx[i]:.12e}", f"{band_low[i]:.12e}",
                             f"{band_high[i]:.12e}"])
    print(f"curve table written to {path}")
    return EXIT_OK


def cmd_fit(data_path, t23: float, t2: float, out_dir: Path,
            weighted: bool | None = None) -> int:
    data = read_data_csv(data_path)
    report = fit_report(data, t23, t2, weighted=weighted)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "fit_report.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_fit_synthetic(cfg: RunConfig, out_dir: Path, n_points: int, noise: float,
                      seed: int) -> int:
    """Generate a noisy dataset from the configured model, then fit it back."""
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.3, 4.0, n_points)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "synthetic_data.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha_L", "efficiency", "sigma_alpha_L", "sigma_efficiency"])
        for a in grid:
            m = EfficiencyModel(alpha_L=float(a), t23=cfg.t23, t2=cfg.t2,
                                eta_pop=cfg.eta_pop, eta_phase=cfg.eta_phase)
            eff = efficiency_approx(m)
            noisy = min(max(eff * (1.0 + noise * rng.standard_normal()), 0.0), 1.0)
            writer.writerow([f"{a:.12e}", f"{noisy:.12e}", f"{0.0:.12e}",
                             f"{max(noise * eff, 1e-6):.12e}"])
    print(f"synthetic data written to {path}")
    return cmd_fit(path, cfg.t23, cfg.t2, out_dir)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rose-echo",
        description="ROSE photon-echo quantum-memory simulator and model fitter")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="run configuration file (INI sections: pulse, "
                            "sequence, ensemble, medium, model, output)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="RNG seed for synthetic-data generation")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for the detuning grid")

    p = sub.add_parser("pulse-check", help="report bandwidth and adiabaticity, "
                                           "dump waveforms")
    add_common(p)

    p = sub.add_parser("simulate", help="run the echo sequence and summarize")
    add_common(p)

    p = sub.add_parser("curve", help="tabulate efficiency vs optical depth")
    add_common(p)
    p.add_argument("--min", type=float, default=0.0, dest="lo")
    p.add_argument("--max", type=float, default=5.0, dest="hi")
    p.add_argument("--step", type=float, default=0.01)

    p = sub.add_parser("fit", help="fit (eta_pop, eta_phase) to efficiency data")
    add_common(p, config_required=False)
    p.add_argument("--data", default=None, help="CSV with alpha_L, efficiency "
                                                "[, sigma_alpha_L, sigma_efficiency]")
    p.add_argument("--t23-us", type=float, default=None)
    p.add_argument("--t2-us", default=None, help="microseconds, or 'inf'")
    p.add_argument("--synthetic", type=int, default=None, metavar="N_POINTS",
                   help="generate and fit a noisy synthetic dataset from the "
                        "config's model section instead of reading --data")
    p.add_argument("--noise", type=float, default=0.03,
                   help="relative noise level for --synthetic")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "fit" and args.synthetic is None:
            if args.data is None or args.t23_us is None or args.t2_us is None:
                raise ConfigInvalid("fit requires --data, --t23-us and --t2-us "
                                    "(or --synthetic with --config)")
            out_dir = Path(args.out) if args.out else Path(".")
            return cmd_fit(args.data, args.t23_us * 1e-6, _parse_t2(args.t2_us),
                           out_dir)

        cfg = load_config(args.config)
        out_dir = Path(args.out) if args.out else cfg.out_dir
        if args.command == "pulse-check":
            return cmd_pulse_check(cfg, out_dir)
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir, threads=args.threads)
        if args.command == "curve":
            return cmd_curve(cfg, out_dir, args.lo, args.hi, args.step)
        if args.command == "fit":
            return cmd_fit_synthetic(cfg, out_dir, args.synthetic, args.noise,
                                     args.seed)
        raise ConfigInvalid(f"unknown command {args.command!r}")
    except ConfigInvalid as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG_INVALID
    except InsufficientData as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT_DATA
    except FitDiverged as exc:
        print(f"error: fit diverged: {exc}", file=sys.stderr)
        return EXIT_FIT_DIVERGED
    except NonFiniteState as exc:
        print(f"error: non-finite state: {exc}", file=sys.stderr)
        return EXIT_NON_FINITE


if __name__ == "__main__":
    sys.exit(main())
