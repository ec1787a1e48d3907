"""Command-line front end.

Five subcommands: ``forward`` (model a spectrum), ``sensitivity``
(perturbation curves), ``synth`` (noisy synthetic data plus a truth
sidecar), ``invert`` (recover plate parameters from a spectrum CSV), and
``report`` (the standard benchmark table).  Every run that writes an
artifact also writes ``<artifact>.manifest.json`` recording the resolved
configuration, so any output can be reproduced bit-for-bit by re-running
with the recorded values.

Exit codes: 0 success (and, for invert, convergence), 2 inversion did
not converge, 1 usage or file error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    ConfigFormatError,
    NoiseModel,
    SpectrumFormatError,
    add_noise,
    load_coil_config,
    load_inversion_config,
    load_plate_config,
    load_spectrum,
    save_plate_config,
    save_spectrum,
)
from .forward import (
    DEFAULT_FMAX_HZ,
    DEFAULT_FMIN_HZ,
    DEFAULT_N_FREQS,
    CoilGeometry,
    PlateParams,
    default_frequencies,
    delta_l_spectrum,
)
from .inversion import InversionConfig, inversion_report, invert
from .samples import REPORT_CASES, dp600
from .sensitivity import DEFAULT_FRACTIONS, PARAM_NAMES, sensitivity_spectrum, write_sensitivity_csv

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures reported as exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse float list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_band_flags(p: argparse.ArgumentParser):
    p.add_argument("--fmin-hz", type=float, default=DEFAULT_FMIN_HZ,
                   help="lowest frequency in Hz (default %(default)s)")
    p.add_argument("--fmax-hz", type=float, default=DEFAULT_FMAX_HZ,
                   help="highest frequency in Hz (default %(default)s)")
    p.add_argument("--m", type=int, default=DEFAULT_N_FREQS,
                   help="number of log-spaced frequencies (default %(default)s)")
    p.add_argument("--freqs-hz", type=_float_list, default=None, metavar="F1,F2,...",
                   help="explicit frequency list in Hz, overrides the log band")


def _resolve_freqs(args) -> np.ndarray:
    if args.freqs_hz is not None:
        return np.asarray(args.freqs_hz, dtype=float)
    return default_frequencies(args.fmin_hz, args.fmax_hz, args.m)


def _load_coil(path: str | None) -> CoilGeometry:
    return load_coil_config(path) if path else CoilGeometry()


def _write_manifest(artifact: Path, subcommand: str, config: dict,
                    inputs: dict, outputs: list, seed=None, wall_ms=None):
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "config": config,
        "inputs": inputs,
        "outputs": [str(o) for o in outputs],
        "seed": seed,
        "wall_ms": wall_ms,
    }
    path = Path(str(artifact) + ".manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _band_config(args, freqs) -> dict:
    return {
        "fmin_hz": args.fmin_hz,
        "fmax_hz": args.fmax_hz,
        "m": args.m,
        "freqs_hz": [float(f) for f in freqs] if args.freqs_hz is not None else None,
    }


def cmd_forward(args) -> int:
    t0 = time.perf_counter()
    coil = _load_coil(args.coil)
    plate = load_plate_config(args.plate)
    freqs = _resolve_freqs(args)
    spectrum = delta_l_spectrum(coil, plate, freqs)
    out = Path(args.out)
    save_spectrum(spectrum, out)
    wall_ms = (time.perf_counter() - t0) * 1e3
    _write_manifest(out, "forward", _band_config(args, freqs),
                    {"coil": args.coil, "plate": args.plate}, [out], wall_ms=wall_ms)
    print(f"wrote {len(spectrum)}-point spectrum to {out}")
    return 0


def cmd_sensitivity(args) -> int:
    t0 = time.perf_counter()
    coil = _load_coil(args.coil)
    plate = load_plate_config(args.plate)
    freqs = _resolve_freqs(args)
    fractions = args.fractions
    rows = []
    for name in PARAM_NAMES:
        for freq, frac, re, im in sensitivity_spectrum(coil, plate, name, fractions, freqs):
            rows.append((freq, name, frac, re, im))
    out = Path(args.out)
    write_sensitivity_csv(out, rows)
    outputs = [out]
    if args.svg:
        svg = out.with_suffix(".svg")
        _plot_sensitivity(rows, svg)
        outputs.append(svg)
    wall_ms = (time.perf_counter() - t0) * 1e3
    config = _band_config(args, freqs)
    config["fractions"] = list(fractions)
    config["svg"] = bool(args.svg)
    _write_manifest(out, "sensitivity", config,
                    {"coil": args.coil, "plate": args.plate}, outputs, wall_ms=wall_ms)
    print(f"wrote {len(rows)} sensitivity rows to {out}")
    return 0


def _plot_sensitivity(rows, svg_path: Path):
    """Decorative per-parameter sensitivity plot; the CSV is the contract."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as err:
        raise ConfigFormatError(f"--svg needs matplotlib: {err}") from None
    fig, axes = plt.subplots(2, 2, figsize=(9, 7), sharex=True)
    for ax, name in zip(axes.ravel(), PARAM_NAMES):
        sel = [r for r in rows if r[1] == name]
        for frac in sorted({r[2] for r in sel}):
            pts = [(r[0], r[3], r[4]) for r in sel if r[2] == frac]
            f = [p[0] for p in pts]
            ax.semilogx(f, [p[1] for p in pts], label=f"Re, {frac:g}")
            ax.semilogx(f, [p[2] for p in pts], "--", label=f"Im, {frac:g}")
        ax.set_title(name)
        ax.grid(True, which="both", alpha=0.3)
    axes[1, 0].set_xlabel("frequency (Hz)")
    axes[1, 1].set_xlabel("frequency (Hz)")
    axes[0, 0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_synth(args) -> int:
    t0 = time.perf_counter()
    coil = _load_coil(args.coil)
    truth = load_plate_config(args.truth)
    freqs = _resolve_freqs(args)
    clean = delta_l_spectrum(coil, truth, freqs)
    noisy = add_noise(clean, NoiseModel(amplitude=args.noise, seed=args.seed))
    out = Path(args.out)
    save_spectrum(noisy, out)
    sidecar = out.parent / (out.stem + ".truth.cfg")
    save_plate_config(truth, sidecar, header="truth parameters for scoring")
    wall_ms = (time.perf_counter() - t0) * 1e3
    config = _band_config(args, freqs)
    config["noise"] = args.noise
    _write_manifest(out, "synth", config, {"coil": args.coil, "truth": args.truth},
                    [out, sidecar], seed=args.seed, wall_ms=wall_ms)
    print(f"wrote {len(noisy)}-point synthetic spectrum to {out} (truth in {sidecar})")
    return 0


def _resolve_inversion_config(args) -> InversionConfig:
    cfg = load_inversion_config(args.config) if args.config else InversionConfig()
    init = cfg.init.as_array()
    if args.init_sigma_msm is not None:
        init[0] = args.init_sigma_msm * 1e6
    if args.init_mu_r is not None:
        init[1] = args.init_mu_r
    if args.init_t_mm is not None:
        init[2] = args.init_t_mm * 1e-3
    if args.init_liftoff_mm is not None:
        init[3] = args.init_liftoff_mm * 1e-3
    return InversionConfig(
        init=PlateParams.from_array(init),
        max_iter=args.max_iter if args.max_iter is not None else cfg.max_iter,
        step_tol=cfg.step_tol,
        residual_tol=cfg.residual_tol,
        rank_threshold=args.rank_tau if args.rank_tau is not None else cfg.rank_threshold,
        jacobian_fraction=(
            args.fd_fraction if args.fd_fraction is not None else cfg.jacobian_fraction
        ),
        damping=cfg.damping,
        bounds=cfg.bounds,
    )


def _config_dict(cfg: InversionConfig) -> dict:
    return {
        "init_sigma_msm": cfg.init.sigma / 1e6,
        "init_mu_r": cfg.init.mu_r,
        "init_t_mm": cfg.init.t * 1e3,
        "init_liftoff_mm": cfg.init.l * 1e3,
        "max_iter": cfg.max_iter,
        "step_tol": cfg.step_tol,
        "residual_tol": cfg.residual_tol,
        "rank_tau": cfg.rank_threshold,
        "fd_fraction": cfg.jacobian_fraction,
        "damping": cfg.damping,
    }


def cmd_invert(args) -> int:
    coil = _load_coil(args.coil)
    observed = load_spectrum(args.spectrum)
    truth = load_plate_config(args.truth) if args.truth else None
    cfg = _resolve_inversion_config(args)
    t0 = time.perf_counter()
    result = invert(coil, observed, cfg)
    wall_ms = (time.perf_counter() - t0) * 1e3
    report = inversion_report(result, truth)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        _write_manifest(out, "invert", _config_dict(cfg),
                        {"coil": args.coil, "spectrum": args.spectrum, "truth": args.truth},
                        [out], wall_ms=wall_ms)
    sys.stdout.write(text)
    state = "converged" if result.converged else "did not converge"
    print(f"{state} after {result.iterations} iterations "
          f"({wall_ms / 1e3:.2f} s): {result.message}", file=sys.stderr)
    return 0 if result.converged else 2


_SEEDS_PER_NOISE_ROW = 20


def cmd_report(args) -> int:
    t0 = time.perf_counter()
    coil = _load_coil(args.coil)
    freqs = default_frequencies()
    cfg = InversionConfig()
    rows = []

    def add_row(label, truth, noise, seed, est, err, iterations, converged, wall_s):
        rows.append({
            "case": label,
            "noise_pct": noise * 100.0,
            "seed": seed,
            "act": truth,
            "est": est,
            "err": err,
            "iterations": iterations,
            "converged": converged,
            "wall_s": wall_s,
        })

    def run_single(label, truth, observed, noise, seed, config):
        t1 = time.perf_counter()
        result = invert(coil, observed, config)
        wall_s = time.perf_counter() - t1
        report = inversion_report(result, truth)
        add_row(label, truth, noise, seed, result.params, report["error_pct"],
                result.iterations, result.converged, wall_s)
        return result

    for label, truth in REPORT_CASES:
        run_single(label, truth, delta_l_spectrum(coil, truth, freqs), 0.0, "", cfg)

    # Noise block: the noiseless fit locks the identifiable optimum, then
    # each noisy realization is refit from that estimate.  A noise row is
    # the per-parameter median over _SEEDS_PER_NOISE_ROW seeds; a single
    # draw says little about an estimator whose error is itself random.
    truth = dp600(0.005)
    clean = delta_l_spectrum(coil, truth, freqs)
    base = run_single("DP600", truth, clean, 0.0, "", cfg)
    noisy_cfg = replace(cfg, init=base.params)
    err_keys = ("sigma_msm", "mu_r", "t_mm", "liftoff_mm")
    for noise in (0.01, 0.05, 0.10):
        t1 = time.perf_counter()
        ests, errs, its = [], [], []
        all_converged = True
        for k in range(_SEEDS_PER_NOISE_ROW):
            observed = add_noise(clean, NoiseModel(amplitude=noise, seed=args.seed + k))
            result = invert(coil, observed, noisy_cfg)
            report = inversion_report(result, truth)
            ests.append(result.params.as_array())
            errs.append([report["error_pct"][key] for key in err_keys])
            its.append(result.iterations)
            all_converged = all_converged and result.converged
        wall_s = time.perf_counter() - t1
        med_est = PlateParams.from_array(np.median(np.asarray(ests), axis=0))
        med_err = dict(zip(err_keys, np.median(np.asarray(errs), axis=0)))
        seed_span = f"{args.seed}:{args.seed + _SEEDS_PER_NOISE_ROW - 1}"
        add_row("DP600", truth, noise, seed_span, med_est, med_err,
                int(round(float(np.median(its)))), all_converged, wall_s)

    header = (f"{'case':<8} {'lift_mm':>7} {'noise%':>6} | "
              f"{'sigma_MSm':>9} {'mu_r':>7} {'t_mm':>6} {'lift_mm':>7} | "
              f"{'e_sig%':>6} {'e_mu%':>6} {'e_t%':>6} {'e_l%':>6} | "
              f"{'iter':>4} {'conv':>4} {'sec':>5}")
    print(header)
    print("-" * len(header))
    for r in rows:
        est, err = r["est"], r["err"]
        print(f"{r['case']:<8} {r['act'].l * 1e3:>7.1f} {r['noise_pct']:>6.1f} | "
              f"{est.sigma / 1e6:>9.4f} {est.mu_r:>7.2f} {est.t * 1e3:>6.3f} "
              f"{est.l * 1e3:>7.3f} | "
              f"{err['sigma_msm']:>6.2f} {err['mu_r']:>6.2f} {err['t_mm']:>6.2f} "
              f"{err['liftoff_mm']:>6.2f} | "
              f"{r['iterations']:>4d} {'y' if r['converged'] else 'n':>4} "
              f"{r['wall_s']:>5.2f}")
    print(f"noise rows: per-parameter medians over {_SEEDS_PER_NOISE_ROW} seeds, "
          "refit from the noiseless estimate; sec is the whole sweep")

    if args.out:
        out = Path(args.out)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write("case,noise_pct,seed,act_sigma_msm,act_mu_r,act_t_mm,act_liftoff_mm,"
                     "est_sigma_msm,est_mu_r,est_t_mm,est_liftoff_mm,"
                     "err_sigma_pct,err_mu_r_pct,err_t_pct,err_liftoff_pct,"
                     "iterations,converged\n")
            for r in rows:
                act, est, err = r["act"], r["est"], r["err"]
                fh.write(f"{r['case']},{r['noise_pct']:g},{r['seed']},"
                         f"{act.sigma / 1e6:.17g},{act.mu_r:.17g},"
                         f"{act.t * 1e3:.17g},{act.l * 1e3:.17g},"
                         f"{est.sigma / 1e6:.17g},{est.mu_r:.17g},"
                         f"{est.t * 1e3:.17g},{est.l * 1e3:.17g},"
                         f"{err['sigma_msm']:.17g},{err['mu_r']:.17g},"
                         f"{err['t_mm']:.17g},{err['liftoff_mm']:.17g},"
                         f"{r['iterations']},{int(r['converged'])}\n")
        wall_ms = (time.perf_counter() - t0) * 1e3
        _write_manifest(out, "report",
                        {"seed": args.seed, "seeds_per_noise_row": _SEEDS_PER_NOISE_ROW},
                        {"coil": args.coil}, [out], seed=args.seed, wall_ms=wall_ms)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="eddyspec",
                     description="Eddy-current inductance spectroscopy of metal plates")
    parser.add_argument("--version", action="version", version=f"eddyspec {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("forward", help="model an inductance spectrum")
    p.add_argument("--coil", help="coil config file (reference probe if omitted)")
    p.add_argument("--plate", required=True, help="plate config file")
    p.add_argument("--out", required=True, help="output spectrum CSV")
    _add_band_flags(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("sensitivity", help="perturbation sensitivity curves")
    p.add_argument("--coil", help="coil config file")
    p.add_argument("--plate", required=True, help="reference plate config file")
    p.add_argument("--out", required=True, help="output sensitivity CSV")
    p.add_argument("--fractions", type=_float_list, default=list(DEFAULT_FRACTIONS),
                   metavar="F1,F2,...", help="perturbation fractions (default 0.01,0.05,0.1,0.5)")
    p.add_argument("--svg", action="store_true", help="also write a decorative SVG plot")
    _add_band_flags(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("synth", help="synthesize a noisy spectrum with a truth sidecar")
    p.add_argument("--coil", help="coil config file")
    p.add_argument("--truth", required=True, help="truth plate config file")
    p.add_argument("--out", required=True, help="output spectrum CSV")
    p.add_argument("--noise", type=float, default=0.0,
                   help="noise amplitude as a fraction (default 0)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default 0)")
    _add_band_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("invert", help="recover plate parameters from a spectrum CSV")
    p.add_argument("--coil", help="coil config file")
    p.add_argument("--spectrum", required=True, help="observed spectrum CSV")
    p.add_argument("--truth", help="truth plate config for error scoring")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--config", help="inversion config file")
    p.add_argument("--init-sigma-msm", type=float, help="initial conductivity, MS/m")
    p.add_argument("--init-mu-r", type=float, help="initial relative permeability")
    p.add_argument("--init-t-mm", type=float, help="initial thickness, mm")
    p.add_argument("--init-liftoff-mm", type=float, help="initial lift-off, mm")
    p.add_argument("--max-iter", type=int, help="iteration cap")
    p.add_argument("--rank-tau", type=float, help="dynamic rank threshold")
    p.add_argument("--fd-fraction", type=float, help="finite-difference fraction")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("report", help="run the standard benchmark cases")
    p.add_argument("--coil", help="coil config file")
    p.add_argument("--out", help="write the case table as CSV")
    p.add_argument("--seed", type=int, default=0, help="seed for the noisy rows (default 0)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, SpectrumFormatError, ConfigFormatError, ValueError) as err:
        print(f"eddyspec {args.subcommand}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
