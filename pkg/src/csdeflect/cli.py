"""Batch command-line front end.

Every command reads flags (optionally preceded by a flat ``key = value``
config file given with ``--config``) and writes CSV/JSON/binary files into
``--out``. Outputs depend only on the inputs and ``--seed``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import calibration, characterize, sensing, simulator, smashed, solver, storage, wavelet

log = logging.getLogger("csdeflect")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- parsing

KIND_ALIASES = {
    "spots": "multi-spot", "multi-spot": "multi-spot",
    "lens": "plano-convex", "plano-convex": "plano-convex",
    "grating": "grating-lens", "grating-lens": "grating-lens",
    "none": "no-object", "no-object": "no-object",
}


def parse_grid(text) -> tuple:
    try:
        r, c = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"grid must look like 65x65, got {text!r}") from None
    if r < 1 or c < 1:
        raise ConfigError("grid extents must be positive")
    return (r, c)


def parse_scene(text, n_side, grid=(1, 1)) -> simulator.SceneModel:
    """``kind:key=value,...``, e.g. ``spots:q=2,rho=3`` or ``lens:power=9.99``.

    Spot keys: ``q`` (random layout drawn from ``layout``, default 0),
    ``pos`` (explicit ``row/col`` pairs joined by ``+``), ``amp`` (one value or
    ``+``-joined values), ``rho``. Lens keys: ``power``, ``psf``, ``amp``,
    ``period``, ``depth``. ``grid`` may also be given as a key.
    """
    kind, _, rest = str(text).partition(":")
    if kind not in KIND_ALIASES:
        raise ConfigError(f"unknown scene kind {kind!r}; choose from {sorted(KIND_ALIASES)}")
    kv = {}
    for item in filter(None, rest.split(",")):
        k, sep, v = item.partition("=")
        if not sep:
            raise ConfigError(f"scene option {item!r} is not key=value")
        kv[k.strip()] = v.strip()
    try:
        args = {"kind": KIND_ALIASES[kind], "grid": parse_grid(kv.pop("grid")) if "grid" in kv else grid}
        if "amp" in kv:
            amps = tuple(float(a) for a in kv.pop("amp").split("+"))
            args["amplitude"] = amps[0] if len(amps) == 1 else amps
        if "rho" in kv:
            args["rho"] = float(kv.pop("rho"))
        if "psf" in kv:
            args["psf_width"] = float(kv.pop("psf"))
        if "power" in kv:
            args["power"] = float(kv.pop("power"))
        if "period" in kv:
            args["grating_period"] = float(kv.pop("period"))
        if "depth" in kv:
            args["grating_depth"] = float(kv.pop("depth"))
        layout = int(kv.pop("layout", 0))
        if "pos" in kv:
            args["positions"] = tuple(tuple(float(x) for x in p.split("/"))
                                      for p in kv.pop("pos").split("+"))
        elif "q" in kv:
            q = int(kv.pop("q"))
            pts = simulator.random_spot_positions(q, n_side, layout, margin=min(8.0, n_side / 8))
            args["positions"] = tuple(tuple(float(x) for x in p) for p in pts)
    except ValueError as e:
        raise ConfigError(f"bad scene option in {text!r}: {e}") from None
    if kv:
        raise ConfigError(f"unknown scene options {sorted(kv)}")
    return simulator.SceneModel(**args)


def parse_noise(text) -> simulator.NoiseModel:
    text = str(text).strip().lower()
    if text in ("table1", "default"):
        return simulator.NoiseModel.table1()
    if text in ("zero", "none", "0"):
        return simulator.NoiseModel.zero()
    kv = {}
    for item in text.split(","):
        k, sep, v = item.partition("=")
        if not sep or k.strip() not in ("mu", "var", "mu_s", "var_s"):
            raise ConfigError(f"noise must be table1, zero or mu=..,var=..,mu_s=..,var_s=..; got {text!r}")
        kv[k.strip()] = float(v)
    return simulator.NoiseModel(**kv)


def parse_m(text, N) -> int:
    """An M count (``450``), a fraction (``0.11``) or a percentage (``11%``)."""
    t = str(text).strip()
    try:
        if t.endswith("%"):
            frac = float(t[:-1]) / 100
        elif "." in t or "e" in t.lower():
            frac = float(t)
        else:
            M = int(t)
            frac = None
    except ValueError:
        raise ConfigError(f"cannot parse M value {text!r}") from None
    if frac is not None:
        if not 0 < frac <= 1:
            raise ConfigError(f"M/N fraction must be in (0, 1], got {text!r}")
        M = max(1, int(round(frac * N)))
    if not 1 <= M <= N:
        raise ConfigError(f"M={M} outside [1, N={N}]")
    return M


def parse_m_list(text, N) -> list:
    return [parse_m(t, N) for t in str(text).split(",") if t.strip()]


def read_config(path) -> list:
    """Flat ``key = value`` file turned into long-option arguments."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} not found")
    out = []
    for n, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key = key.strip().replace("_", "-")
        val = val.strip()
        if val.lower() in ("true", "yes", "on"):
            out.append(f"--{key}")
        elif val.lower() in ("false", "no", "off"):
            continue
        else:
            out += [f"--{key}", val]
    return out


# ---------------------------------------------------------------- helpers

def trial_seed(seed, trial) -> int:
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1)[0])


def _out_dir(args) -> Path:
    if not args.out:
        raise ConfigError("--out is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _geometry(n_side) -> simulator.InstrumentGeometry:
    return simulator.InstrumentGeometry(n_side=n_side)


def _scene_from_sidecar(ms: simulator.MeasurementSet):
    if not ms.scene:
        return None
    return simulator.SceneModel.from_dict(ms.scene)


def _truth_offsets(scene, geometry):
    if scene is None:
        return None
    if scene.kind == "multi-spot":
        amps = np.broadcast_to(np.asarray(scene.amplitude, dtype=float), (len(scene.positions),))
        if len(amps) == 0 or np.sum(amps == amps.max()) > 1:
            return None
    return simulator.spot_offsets(scene, geometry)


def _load_measurements(path) -> simulator.MeasurementSet:
    p = Path(path)
    if p.is_dir():
        p = p / "measurements.bin"
    if not p.is_file():
        raise ConfigError(f"measurement file {p} not found")
    return storage.read_measurements(p)


def _load_calibration(path):
    if path is None:
        return None
    d = Path(path)
    if not (d / "calibration.json").is_file():
        raise ConfigError(f"no calibration.json in {d}")
    s_no, _ = storage.read_array(d / "s_no_hat.bin")
    return calibration.CalibrationReport.from_dict(storage.read_json(d / "calibration.json"), s_no)


def _solver_cfg(args) -> solver.SolverConfig:
    return solver.SolverConfig(max_iters=args.max_iters, rel_tol=args.rel_tol,
                               frame=wavelet.FrameConfig(levels=args.levels))


def _select_columns(spec, grid) -> list:
    n_c = grid[0] * grid[1]
    if spec in (None, "all"):
        return list(range(n_c))
    cols = []
    for item in spec.split(";"):
        try:
            r, c = (int(v) for v in item.split(","))
        except ValueError:
            raise ConfigError(f"pixel {item!r} is not row,col") from None
        if not (0 <= r < grid[0] and 0 <= c < grid[1]):
            raise ConfigError(f"pixel {item!r} outside grid {grid}")
        cols.append(r * grid[1] + c)
    return cols


def _write_map(out, cmap):
    (out / "centroid_map.csv").write_text(cmap.to_csv())
    storage.write_array(out / "centroid_map.bin", cmap.to_array(),
                        {"fields": ["r_y", "r_x", "magnitude", "valid"]})


# ---------------------------------------------------------------- commands

def cmd_simulate(args):
    out = _out_dir(args)
    geometry = _geometry(args.n_side)
    scene = parse_scene(args.scene, args.n_side, parse_grid(args.grid))
    noise = parse_noise(args.noise)
    N = args.n_side**2
    M = parse_m(args.m, N)
    op = sensing.build_sensing(args.seed, args.n_side, M, plain=args.plain_hadamard)
    log.info("simulating %s on a %sx%s grid, M=%d", scene.kind, *scene.grid, M)
    ms = simulator.acquire_scene(scene, geometry, op, noise, seed=args.seed)
    storage.write_measurements(out / "measurements.bin", ms)
    truth = _truth_offsets(scene, geometry)
    if truth is not None:
        rows = [(i, j, truth[i, j, 1], truth[i, j, 0])
                for i in range(scene.grid[0]) for j in range(scene.grid[1])]
        storage.write_csv(out / "truth_offsets.csv", ["k_row", "k_col", "r_x", "r_y"], rows)
    if scene.kind in ("multi-spot", "no-object"):
        # the same spectrum at every pixel
        storage.write_array(out / "truth_spectrum.bin",
                            simulator.spectrum_for_pixel(scene, geometry, (0, 0)))
    if scene.kind == "no-object":
        S = simulator.scene_spectra(scene, geometry)
        meta = {"noise": noise.to_dict(), "seed": args.seed}
        storage.write_array(out / "opaque.bin", simulator.acquire_single_pattern(S, "opaque", noise, args.seed), meta)
        storage.write_array(out / "ones.bin", simulator.acquire_single_pattern(S, "ones", noise, args.seed), meta)
    return EXIT_OK


def cmd_calibrate(args):
    src = Path(args.input)
    for name in ("opaque.bin", "ones.bin", "measurements.bin"):
        if not (src / name).is_file():
            raise ConfigError(f"calibration needs {name} in {src} (simulate a no-object scene at full sampling)")
    out = _out_dir(args)
    ms = storage.read_measurements(src / "measurements.bin")
    if ms.M != ms.op.N:
        raise ConfigError(f"calibration acquisition must be fully sampled (M={ms.M}, N={ms.op.N})")
    y0, _ = storage.read_array(src / "opaque.bin")
    y1, _ = storage.read_array(src / "ones.bin")
    m_list = parse_m_list(args.m_list, ms.op.N) if args.m_list else []
    rep = calibration.calibrate(y0, y1, ms.Y, ms.op, m_list)
    storage.write_json(out / "calibration.json", rep.to_dict())
    storage.write_array(out / "s_no_hat.bin", rep.s_no_hat.reshape(ms.op.n_side, ms.op.n_side))
    return EXIT_OK


def cmd_reconstruct(args):
    out = _out_dir(args)
    ms = _load_measurements(args.input)
    if args.m:
        ms = ms.subsample(parse_m(args.m, ms.op.N))
    calib = _load_calibration(args.calib)
    b = calib.bias(ms.op) if calib else None
    eps = calib.epsilon(ms.M) if calib else 0.0
    cfg = _solver_cfg(args)
    cols = _select_columns(args.pixels, ms.grid)
    scene = _scene_from_sidecar(ms)
    geometry = _geometry(ms.op.n_side)
    spectra, rows = [], []
    for c in cols:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = solver.reconstruct(ms.debiased([c])[:, 0], ms.op, b, eps, cfg)
        if not np.all(np.isfinite(res.spectrum)):
            raise NumericalFailure(f"non-finite reconstruction at column {c}")
        snr = np.nan
        if scene is not None:
            truth = simulator.scene_spectra(scene, geometry, [c])[:, 0]
            if np.any(truth):
                snr = solver.output_snr(truth, res.spectrum.ravel())
        k = divmod(c, ms.grid[1])
        spectra.append(res.spectrum)
        rows.append((k[0], k[1], res.iterations, res.residual, res.epsilon, res.objective,
                     int(res.converged), snr))
    storage.write_array(out / "spectra.bin", np.array(spectra),
                        {"pixels": [list(divmod(c, ms.grid[1])) for c in cols], "M": ms.M})
    storage.write_csv(out / "reconstruct.csv",
                      ["k_row", "k_col", "iterations", "residual", "epsilon", "objective",
                       "converged", "snr_db"], rows)
    return EXIT_OK


def sweep_snr(spectrum, n_side, m_values, trials, seed=0, plain=False,
              noise=simulator.NoiseModel(), calib=None, cfg=None):
    """Mean output SNR over fresh sensing draws for every M.

    Returns ``{M: (snrs, n_unconverged)}``. Trial ``t`` uses the sensing and
    noise seed ``trial_seed(seed, t)`` whatever M or ``plain`` is, so
    different settings are compared on the same draws.
    """
    s = np.asarray(spectrum, dtype=np.float64).ravel()
    N = n_side * n_side
    if not noise.is_zero and calib is None:
        raise ConfigError("a noisy sweep needs a calibration (--calib) for b and epsilon")
    out = {}
    for M in m_values:
        snrs, bad = [], 0
        for t in range(trials):
            ts = trial_seed(seed, t)
            op = sensing.build_sensing(ts, n_side, M, plain=plain)
            Y = simulator.acquire_mmv(s, op, noise, seed=ts)
            z = sensing.debias(Y[:M, 0], Y[M, 0], N)
            b = calib.bias(op) if calib else None
            eps = calib.epsilon(M) if calib else 0.0
            with warnings.catch_warnings(record=True) as w:
                warnings.simplefilter("always", RuntimeWarning)
                res = solver.reconstruct(z, op, b, eps, cfg)
            bad += int(not res.converged or bool(w))
            snrs.append(solver.output_snr(s, res.spectrum.ravel()))
        out[M] = (np.array(snrs), bad)
    return out


def cmd_sweep(args):
    out = _out_dir(args)
    N = args.n_side**2
    m_values = parse_m_list(args.m_list, N)
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    noise = parse_noise(args.noise)
    calib = _load_calibration(args.calib)
    geometry = _geometry(args.n_side)
    q_list = [int(q) for q in args.q_list.split(",")] if args.q_list else [None]
    rows = []
    for q in q_list:
        text = args.scene if q is None else f"{args.scene},q={q}" if ":" in args.scene else f"{args.scene}:q={q}"
        scene = parse_scene(text, args.n_side)
        s = simulator.spectrum_for_pixel(scene, geometry, (0, 0))
        if not np.any(s):
            raise ConfigError("sweep needs a nonzero phantom spectrum")
        res = sweep_snr(s, args.n_side, m_values, args.trials, args.seed, args.plain_hadamard,
                        noise, calib, _solver_cfg(args))
        for M in m_values:
            snrs, bad = res[M]
            rows.append((M / N, len(scene.positions) if scene.kind == "multi-spot" else 1,
                         float(np.mean(snrs)), float(np.std(snrs)), args.trials, bad))
    storage.write_csv(out / "sweep.csv",
                      ["m_over_n", "q", "mean_snr_db", "std_snr_db", "trials", "unconverged"], rows)
    storage.write_json(out / "sweep.json", {
        "scene": args.scene, "q_list": args.q_list, "m_values": m_values, "n_side": args.n_side,
        "trials": args.trials, "seed": args.seed, "plain_hadamard": args.plain_hadamard,
        "noise": noise.to_dict(), "solver": {"max_iters": args.max_iters, "rel_tol": args.rel_tol,
                                             "levels": args.levels}})
    return EXIT_OK


def cmd_centroid(args):
    out = _out_dir(args)
    ms = _load_measurements(args.input)
    calib = _load_calibration(args.calib)
    geometry = _geometry(ms.op.n_side)
    truth = _truth_offsets(_scene_from_sidecar(ms), geometry)
    m_values = parse_m_list(args.m_list, ms.op.N) if args.m_list else [ms.M]
    if max(m_values) > ms.M:
        raise ConfigError(f"--m-list exceeds the {ms.M} acquired patterns")
    report = {"method": args.method, "rho": args.rho, "M": ms.M, "grid": list(ms.grid)}
    rows = []
    for M in m_values:
        cmap = characterize.centroid_map(ms.subsample(M), args.rho, args.method, calib,
                                         _solver_cfg(args))
        if M == m_values[-1]:
            _write_map(out, cmap)
            report["valid_fraction"] = float(cmap.valid.mean())
        if truth is not None:
            err = cmap.errors(truth)[cmap.valid]
            if err.size == 0:
                raise NumericalFailure("no valid centroid estimates")
            rows.append((M / ms.op.N, M, float(err.mean()), float(np.median(err)),
                         float(cmap.valid.mean())))
    if truth is not None:
        storage.write_csv(out / "error_vs_m.csv",
                          ["m_over_n", "M", "mean_error_px", "median_error_px", "valid_fraction"], rows)
        report["mean_error_px"] = rows[-1][2]
    storage.write_json(out / "centroid.json", report)
    return EXIT_OK


def cmd_power(args):
    geometry = _geometry(args.n_side)
    if args.slope is not None:
        report = {"slope": args.slope, "power_d": characterize.dioptric_power(args.slope, geometry)}
    else:
        if not args.input:
            raise ConfigError("power needs --in measurements or --slope")
        ms = _load_measurements(args.input)
        geometry = _geometry(ms.op.n_side)
        if args.m:
            ms = ms.subsample(parse_m(args.m, ms.op.N))
        cmap = characterize.centroid_map(ms, args.rho, args.method, _load_calibration(args.calib),
                                         _solver_cfg(args))
        fit = characterize.cone_fit(cmap)
        report = {"slope": fit.slope, "apex": list(fit.apex), "n_valid": fit.n_valid,
                  "power_d": characterize.dioptric_power(fit.slope, geometry),
                  "tv_norm": characterize.tv_norm(np.nan_to_num(cmap.magnitude), args.tv_margin),
                  "M": ms.M, "method": args.method}
        scene = _scene_from_sidecar(ms)
        if scene is not None and scene.kind in ("plano-convex", "grating-lens"):
            report["true_power_d"] = scene.power
    out = _out_dir(args)
    if args.slope is None:
        _write_map(out, cmap)
    storage.write_json(out / "power.json", report)
    return EXIT_OK


def cmd_pss_compare(args):
    out = _out_dir(args)
    geometry = _geometry(args.n_side)
    scene = parse_scene(args.scene, args.n_side, parse_grid(args.grid))
    truth = _truth_offsets(scene, geometry)
    if truth is None:
        raise ConfigError("pss-compare needs a scene with a single dominant spot")
    noise = parse_noise(args.noise)
    M = parse_m(args.m, geometry.n_side**2)
    op = sensing.build_sensing(args.seed, args.n_side, M, plain=args.plain_hadamard)
    ms = simulator.acquire_scene(scene, geometry, op, noise, seed=args.seed)
    cmap = characterize.centroid_map(ms, args.rho, "compressed")
    rows, e_pss, e_sm = [], [], []
    for c in range(scene.n_pixels):
        k = divmod(c, scene.grid[1])
        s = simulator.spectrum_for_pixel(scene, geometry, k)
        y = characterize.pss_measure(s, args.wavelength, noise, seed=trial_seed(args.seed, c))
        t = truth[k]
        pss = characterize.pss_estimate(y, args.wavelength, np.round(t))
        sm = cmap.r_map[k]
        ep, es = float(np.linalg.norm(pss.r - t)), float(np.linalg.norm(sm - t))
        e_pss.append(ep)
        e_sm.append(es)
        rows.append((k[0], k[1], t[1], t[0], pss.r[1], pss.r[0], sm[1], sm[0], ep, es,
                     int(np.any(pss.unreliable))))
    storage.write_csv(out / "pss_compare.csv",
                      ["k_row", "k_col", "true_r_x", "true_r_y", "pss_r_x", "pss_r_y",
                       "smashed_r_x", "smashed_r_y", "pss_error_px", "smashed_error_px",
                       "pss_unreliable"], rows)
    storage.write_json(out / "pss_compare.json", {
        "M": M, "wavelength": args.wavelength, "rho": args.rho,
        "mean_pss_error_px": float(np.mean(e_pss)), "mean_smashed_error_px": float(np.mean(e_sm)),
        "scene": scene.to_dict(), "noise": noise.to_dict(), "seed": args.seed})
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
    "centroid": cmd_centroid,
    "power": cmd_power,
    "pss-compare": cmd_pss_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; explicit flags win")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n-side", type=int, default=64)
    common.add_argument("--out", help="output directory")
    common.add_argument("--verbose", "-v", action="store_true")

    scene = argparse.ArgumentParser(add_help=False)
    scene.add_argument("--scene", default="spots:q=1,rho=3")
    scene.add_argument("--grid", default="1x1", help="CCD grid, e.g. 65x65")
    scene.add_argument("--noise", default="zero", help="table1, zero or mu=..,var=..,mu_s=..,var_s=..")
    scene.add_argument("--plain-hadamard", action="store_true", help="sigma = 1 (no spread spectrum)")

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--max-iters", type=int, default=5000)
    solve.add_argument("--rel-tol", type=float, default=1e-4)
    solve.add_argument("--levels", type=int, default=2, help="wavelet decomposition levels")
    solve.add_argument("--calib", help="calibration directory (b and epsilon)")

    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--method", choices=("compressed", "reconstruct"), default="compressed")
    est.add_argument("--rho", type=float, default=3.0, help="template standard deviation (px)")

    p = argparse.ArgumentParser(prog="csdeflect", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common, scene])
    s.add_argument("--m", default="1.0")
    s = sub.add_parser("calibrate", parents=[common])
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--m-list", default="")
    s = sub.add_parser("reconstruct", parents=[common, solve])
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--m", default=None, help="use only the first M patterns")
    s.add_argument("--pixels", default="all", help="'all' or 'row,col;row,col'")
    s = sub.add_parser("sweep", parents=[common, scene, solve])
    s.add_argument("--m-list", required=True)
    s.add_argument("--q-list", default=None, help="override the spot count, e.g. 1,2,3")
    s.add_argument("--trials", type=int, default=20)
    s = sub.add_parser("centroid", parents=[common, solve, est])
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--m-list", default=None)
    s = sub.add_parser("power", parents=[common, solve, est])
    s.add_argument("--in", dest="input")
    s.add_argument("--m", default=None)
    s.add_argument("--slope", type=float, default=None, help="inject a cone slope directly")
    s.add_argument("--tv-margin", type=int, default=2)
    s = sub.add_parser("pss-compare", parents=[common, scene, est])
    s.add_argument("--m", default="0.1")
    s.add_argument("--wavelength", type=float, default=16.0, help="PSS period in SLM pixels")
    return p


def _expand_config(argv):
    argv = list(argv)
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    # config values go first so explicit flags override them
    return argv[:1] + read_config(known.config) + argv[1:]


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        argv = _expand_config(argv)
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        with np.errstate(invalid="raise", divide="raise", over="raise"):
            return COMMANDS[args.command](args)
    except (NumericalFailure, smashed.NoPeakError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
