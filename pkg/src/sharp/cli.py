"""Command-line interface.

Every command writes its outputs plus ``manifest.json`` and ``config.txt``
into ``--out``. Passing that ``config.txt`` back through ``--config``
reproduces the run. Exit codes: 0 success, 1 data/runtime error, 2 usage.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, io
from .errors import ConfigError, SharpError
from .extrapolation import (
    FAMILIES,
    METHODS,
    MethodSpec,
    PromotionContext,
    blend_weights,
    config_from_mapping,
    dump_config,
    load_config,
    parse_extent,
    parse_int_list,
    ratios,
    rescale_table,
    schedule_trace,
)
from .probe import ProbeConfig, ood_drift
from .simulate import (
    TRACE_HEADER,
    SpectralOracleDenoiser,
    TimestepGrid,
    overhead_benchmark,
    run_inference,
    trace_rows,
)
from .spectral import (
    DEFAULT_BANDS,
    band_summary,
    corpus_spectra,
    critical_time,
    mean_spectrum,
    parse_spectrum,
    recovery_score,
)

log = logging.getLogger("sharp")

ROPE_DEFAULTS = {
    "axis_dims": "32,32",
    "base": 10000.0,
    "train_extent": "64x64",
    "target_extent": "128x128",
}
SHARP_DEFAULTS = {"method": "sharp", "family": "rational", "alpha_s": 3.0, "alpha": 1.0, "beta": 32.0}


def _add_rope_flags(p):
    p.add_argument("--axis-dims", help="per-axis rotary dims, e.g. 32,32")
    p.add_argument("--base", type=float, help="rotary base (default 10000)")
    p.add_argument("--train-extent", help="training token extent HxW (default 64x64)")
    p.add_argument("--target-extent", help="target token extent HxW (default 128x128)")
    p.add_argument("--scale", type=float, help="set target extent to scale * train extent")


def _add_method_flags(p, with_method=True):
    if with_method:
        p.add_argument("--method", help=f"one of {', '.join(METHODS)}")
    p.add_argument("--family", help=f"schedule family: {', '.join(FAMILIES)}")
    p.add_argument("--alpha-s", type=float, help="rational schedule coefficient (>= 1)")
    p.add_argument("--alpha", type=float, help="lower ramp bound")
    p.add_argument("--beta", type=float, help="upper ramp bound")


def _resolve_extents(cfg):
    train = parse_extent(cfg["train_extent"])
    if cfg.get("scale") is not None:
        s = float(cfg["scale"])
        cfg["target_extent"] = f"{train[0] * s:g}x{train[1] * s:g}"
        cfg.pop("scale")
    return cfg


def _extrapolation(cfg):
    return config_from_mapping(_resolve_extents(cfg))


# --------------------------------------------------------------------------- commands


def cmd_schedule(cfg, out: Path):
    steps = int(cfg["steps"])
    grid = TimestepGrid.uniform(steps)
    ex = _extrapolation(cfg)
    rows = trace_rows(schedule_trace(ex.table, ex.ctx, ex.method, grid.loop_times))
    path = out / "schedule.csv"
    io.write_csv(path, TRACE_HEADER, rows)
    return [path]


def cmd_freqs(cfg, out: Path):
    ex = _extrapolation(cfg)
    t = float(cfg["t"])
    scaled = rescale_table(ex.table, ex.ctx, ex.method, t)
    gammas = blend_weights(ex.table, ex.ctx, ex.method, t)
    rows = []
    for a in range(ex.table.n_axes):
        r = ratios(ex.table, ex.ctx, a)
        for d, (th, lam, rr, g, h) in enumerate(zip(ex.table.thetas[a], ex.table.wavelengths[a], r, gammas[a], scaled.thetas[a])):
            rows.append((a, d, th, lam, rr, g, h))
    path = out / "freqs.csv"
    io.write_csv(path, ("axis", "d", "theta", "wavelength", "r", "gamma", "h"), rows)
    return [path]


def _bands_from_cfg(value):
    if value in (None, ""):
        return dict(DEFAULT_BANDS)
    bands = {}
    for item in str(value).split(";"):
        name, _, rng = item.partition("=")
        lo, hi = (float(x) for x in rng.split(","))
        bands[name.strip()] = (lo, hi)
    return bands


def cmd_psd(cfg, out: Path, jobs=1):
    inputs = [p for p in str(cfg["inputs"]).split(",") if p]
    resize = int(cfg["resize"])
    baseline = tuple(float(x) for x in str(cfg["baseline"]).split(","))
    bands = _bands_from_cfg(cfg.get("bands"))
    outputs = []
    summary = {"resize": resize, "baseline": list(baseline), "bands": {k: list(v) for k, v in bands.items()}, "corpora": []}
    first = None
    for i, d in enumerate(inputs):
        files = io.list_images(d)
        spectra = corpus_spectra(files, resize, baseline, jobs)
        if not spectra:
            raise SharpError(f"{d}: no readable images")
        raw = mean_spectrum([r for r, _ in spectra])
        norm = mean_spectrum([n for _, n in spectra])
        path = out / f"spectrum_{i}_{Path(d).name or 'corpus'}.csv"
        io.write_csv(path, io.SPECTRUM_HEADER, list(io.spectrum_rows(raw, norm)))
        outputs.append(path)
        means = band_summary(norm, bands)
        entry = {"input": str(d), "n_images": len(spectra), "n_skipped": len(files) - len(spectra), "band_mean": means}
        if first is None:
            first = means
        else:
            entry["ratio_to_first"] = {k: means[k] / first[k] for k in means}
        summary["corpora"].append(entry)
    path = out / "summary.json"
    io.write_json(path, summary)
    outputs.append(path)
    return outputs


def cmd_heatmap(cfg, out: Path):
    model = parse_spectrum(str(cfg["spectrum"]), float(cfg["c_eps"]))
    nf, nt = int(cfg["nf"]), int(cfg["nt"])
    if nf < 1 or nt < 1:
        raise ConfigError("grid sizes must be positive")
    fs = 0.5 * np.arange(1, nf + 1) / nf
    ts = np.arange(nt + 1) / nt
    rows = []
    for f in fs:
        tc = critical_time(model, f)
        for t in ts:
            rows.append((f, t, recovery_score(model, f, t), tc))
    path = out / "heatmap.csv"
    io.write_csv(path, ("f", "t", "P", "t_c"), rows)
    return [path]


def cmd_simulate(cfg, out: Path, seed=0):
    ex = _extrapolation(cfg)
    model = parse_spectrum(str(cfg["spectrum"]), float(cfg["c_eps"]))
    steps = TimestepGrid.uniform(int(cfg["steps"]))
    shape = tuple(int(round(x)) for x in ex.ctx.target_extent)
    oracle = SpectralOracleDenoiser(model, shape)
    res = run_inference(oracle, ex.ctx, ex.method, steps, seed, table=ex.table)
    tpath, fpath = out / "trace.csv", out / "field.rawf"
    io.write_csv(tpath, TRACE_HEADER, trace_rows(res.trace))
    io.write_rawf(fpath, res.field.grid)
    return [tpath, fpath]


def cmd_probe(cfg, out: Path, seed=0):
    ex = _extrapolation(cfg)
    kinds = [m for m in str(cfg["methods"]).split(",") if m]
    methods = []
    for kind in kinds:
        if kind == "sharp":
            methods.append(ex.method if ex.method.kind == "sharp" else MethodSpec.sharp())
        else:
            bounds = (ex.method.schedule.alpha, ex.method.schedule.beta) if ex.method.kind == "sharp" else ex.method.yarn_bounds
            methods.append(MethodSpec(kind, yarn_bounds=bounds))
    times = tuple(float(x) for x in str(cfg["times"]).split(","))
    pc = ProbeConfig(ex.table, ex.ctx, tuple(methods), int(cfg["probes"]), seed, times)
    report = ood_drift(pc)
    path = out / "report.json"
    io.write_json(path, report.as_json())
    return [path]


def cmd_bench(cfg, out: Path, seed=0):
    ex = _extrapolation(cfg)
    rep = overhead_benchmark(ex.ctx, ex.method, TimestepGrid.uniform(int(cfg["steps"])), int(cfg["reps"]), ex.table, seed)
    path = out / "bench.json"
    io.write_json(path, rep)
    return [path]


COMMANDS = {
    "schedule": (cmd_schedule, {**ROPE_DEFAULTS, **SHARP_DEFAULTS, "steps": 50}),
    "freqs": (cmd_freqs, {**ROPE_DEFAULTS, **SHARP_DEFAULTS, "t": 1.0}),
    "psd": (cmd_psd, {"inputs": "", "resize": 512, "baseline": "2,10", "bands": ""}),
    "heatmap": (cmd_heatmap, {"spectrum": "powerlaw:0.02:2", "c_eps": 1.0, "nf": 64, "nt": 50}),
    "simulate": (cmd_simulate, {**ROPE_DEFAULTS, **SHARP_DEFAULTS, "target_extent": "64x64", "train_extent": "32x32",
                                "spectrum": "powerlaw:0.02:2", "c_eps": 1.0, "steps": 50}),
    "probe": (cmd_probe, {**ROPE_DEFAULTS, **SHARP_DEFAULTS, "train_extent": "32x32", "target_extent": "64x64",
                          "methods": ",".join(METHODS), "probes": 64, "times": "1,0.75,0.5,0.25,0"}),
    "bench": (cmd_bench, {**ROPE_DEFAULTS, **SHARP_DEFAULTS, "steps": 50, "reps": 20}),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--seed", type=int, help="random seed (u64)")
    common.add_argument("--out", help="output directory (default: sharp-out)")
    common.add_argument("--jobs", type=int, help="worker threads for corpus/multi-seed work")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sharp", description="Dynamic RoPE extrapolation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", parents=[common], help="schedule trace CSV")
    _add_method_flags(p, with_method=False)
    _add_rope_flags(p)
    p.add_argument("--steps", type=int, help="number of denoising steps (default 50)")

    p = sub.add_parser("freqs", parents=[common], help="per-dimension frequency table CSV")
    _add_method_flags(p)
    _add_rope_flags(p)
    p.add_argument("--t", type=float, help="timestep for sharp (default 1)")

    p = sub.add_parser("psd", parents=[common], help="radial PSD of image corpora")
    p.add_argument("inputs", nargs="*", help="one directory per corpus")
    p.add_argument("--resize", type=int, help="square resize before FFT (default 512)")
    p.add_argument("--baseline", help="baseline bins lo,hi (default 2,10)")
    p.add_argument("--bands", help="summary bands, e.g. 'low=2,16;mid=16,96;high=96,240'")

    p = sub.add_parser("heatmap", parents=[common], help="recovery-score grid CSV")
    p.add_argument("--spectrum", help="const:V | powerlaw:A:EXP | bands:F:S,...")
    p.add_argument("--c-eps", type=float, help="noise constant (default 1)")
    p.add_argument("--nf", type=int, help="frequency samples (default 64)")
    p.add_argument("--nt", type=int, help="time intervals (default 50)")

    p = sub.add_parser("simulate", parents=[common], help="run the sampler with the spectral oracle")
    _add_method_flags(p)
    _add_rope_flags(p)
    p.add_argument("--spectrum", help="clean-data spectrum for the oracle")
    p.add_argument("--c-eps", type=float, help="noise constant (default 1)")
    p.add_argument("--steps", type=int, help="number of Euler steps (default 50)")

    p = sub.add_parser("probe", parents=[common], help="attention drift report JSON")
    _add_method_flags(p, with_method=False)
    _add_rope_flags(p)
    p.add_argument("--methods", help="comma-separated methods (default all)")
    p.add_argument("--probes", type=int, help="random q/k pairs (default 64)")
    p.add_argument("--times", help="timesteps probed for sharp")

    p = sub.add_parser("bench", parents=[common], help="rescaling overhead benchmark JSON")
    _add_method_flags(p)
    _add_rope_flags(p)
    p.add_argument("--steps", type=int, help="steps per timed run (default 50)")
    p.add_argument("--reps", type=int, help="repetitions (>= 10, default 20)")
    return parser


GLOBAL_KEYS = {"config", "seed", "out", "jobs", "verbose", "command"}


def resolve_config(args) -> dict:
    _, defaults = COMMANDS[args.command]
    cfg = dict(defaults)
    cfg["seed"] = 0
    cfg["jobs"] = 1
    if args.config:
        try:
            file_cfg = load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        for key, value in file_cfg.items():
            if key not in cfg and key != "scale":
                log.warning("ignoring config key %r not used by %s", key, args.command)
                continue
            cfg[key] = value
    for key, value in vars(args).items():
        if key in ("config", "out", "verbose", "command") or value is None:
            continue
        if key == "inputs":
            if value:
                cfg["inputs"] = ",".join(value)
            continue
        cfg[key] = value
    cfg["seed"] = int(cfg["seed"])
    cfg["jobs"] = max(1, int(cfg["jobs"]))
    return cfg


def _validate(command, cfg):
    """Surface parameter errors before any work is done."""
    if command in ("schedule", "freqs", "simulate", "probe", "bench"):
        probe = dict(cfg)
        _extrapolation(probe)
        if command == "freqs":
            t = float(cfg["t"])
            if not 0 <= t <= 1:
                raise ConfigError(f"t must lie in [0, 1], got {t}")
        if command in ("schedule", "simulate", "bench") and int(cfg["steps"]) < 1:
            raise ConfigError("steps must be >= 1")
        if command == "bench" and int(cfg["reps"]) < 10:
            raise ConfigError("reps must be >= 10")
        if command == "probe":
            for m in str(cfg["methods"]).split(","):
                if m and m not in METHODS:
                    raise ConfigError(f"unknown method {m!r}")
    if command in ("heatmap", "simulate"):
        parse_spectrum(str(cfg["spectrum"]), float(cfg["c_eps"]))
    if command == "psd" and not cfg["inputs"]:
        raise ConfigError("psd needs at least one input directory")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
        _validate(args.command, cfg)
    except (ConfigError, ValueError, TypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"sharp {args.command}: error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out or "sharp-out")
    fn, _ = COMMANDS[args.command]
    started = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        run_cfg = dict(cfg)
        kwargs = {}
        if args.command in ("simulate", "probe", "bench"):
            kwargs["seed"] = cfg["seed"]
        if args.command == "psd":
            kwargs["jobs"] = cfg["jobs"]
        outputs = fn(run_cfg, out, **kwargs)
    except (SharpError, OSError, ValueError) as exc:
        print(f"sharp {args.command}: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - started

    cfg_text = dump_config(cfg)
    io.atomic_write_text(out / "config.txt", cfg_text)
    io.write_json(out / "manifest.json", {
        "command": args.command,
        "config": {k: v for k, v in sorted(cfg.items())},
        "config_file": "config.txt",
        "seed": cfg["seed"],
        "version": __version__,
        "outputs": [p.name for p in outputs],
        "wall_clock_s": elapsed,
    })
    for p in outputs:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
