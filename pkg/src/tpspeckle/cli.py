"""Command-line front end: rate curves, figure datasets, sweeps, MC validation.

Every emitted CSV starts with ``#``-prefixed comment lines recording the
package version and the fully resolved configuration (sorted-key JSON), so
a dataset can be regenerated bit-identically from its own header.  Files
are written atomically (temp file + rename).  Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .correlation import CorrelationModel, FrequencyGrid, ModelI, model_from_config, model_to_config
from .errors import TpspeckleError
from .montecarlo import (
    EnsembleConfig,
    ensemble_config_from_json,
    mc_correlator,
    mc_default_grid,
    mc_estimate_rows,
)
from .rates import (
    DimensionlessArgs,
    RateCurve,
    compute_rate_curve,
    rate_closed_form,
    rate_coherent,
    rate_entangled,
    rate_entangled_cw_limit,
    rate_fock,
    rate_theta,
    visibility,
)
from .states import (
    CoherentState,
    CrystalParams,
    EntangledState,
    FockState,
    PumpParams,
    StateSpec,
    SymmetrizedState,
    spectral_width_ratio,
)

SEED_ENV_VAR = "TPSPECKLE_SEED"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Config parsing

def _load_json(blob: str):
    if os.path.exists(blob):
        with open(blob, "r", encoding="utf-8") as fh:
            return json.load(fh)
    try:
        return json.loads(blob)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not a file and not valid JSON: {blob!r} ({exc})") from exc


def state_from_config(cfg) -> StateSpec:
    if isinstance(cfg, str):
        cfg = _load_json(cfg)
    try:
        kind = cfg["state"]
        if kind == "entangled":
            return EntangledState(
                pump=PumpParams(float(cfg["omega_bar"]), float(cfg["sigma"])),
                crystal=CrystalParams(float(cfg["nu_o"]), float(cfg["nu_e"])),
            )
        if kind == "symmetrized":
            return SymmetrizedState(
                pump=PumpParams(float(cfg["omega_bar"]), float(cfg["sigma"])),
                crystal=CrystalParams(float(cfg["nu_o"]), float(cfg["nu_e"])),
                theta=float(cfg["theta"]),
            )
        if kind == "fock":
            return FockState(omega_bar=float(cfg["omega_bar"]), delta=float(cfg["delta"]))
        if kind == "coherent":
            return CoherentState(omega_bar=float(cfg["omega_bar"]), delta=float(cfg["delta"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad state config: {exc}") from exc
    raise ConfigError(f"unknown state kind {cfg.get('state')!r}")


def state_to_config(state: StateSpec) -> dict:
    if isinstance(state, EntangledState):
        return {
            "state": "entangled",
            "omega_bar": state.pump.omega_bar,
            "sigma": state.pump.sigma,
            "nu_o": state.crystal.nu_o,
            "nu_e": state.crystal.nu_e,
        }
    if isinstance(state, SymmetrizedState):
        return {
            "state": "symmetrized",
            "omega_bar": state.pump.omega_bar,
            "sigma": state.pump.sigma,
            "nu_o": state.crystal.nu_o,
            "nu_e": state.crystal.nu_e,
            "theta": state.theta,
        }
    kind = "fock" if isinstance(state, FockState) else "coherent"
    return {"state": kind, "omega_bar": state.omega_bar, "delta": state.delta}


def _parse_model(blob: str):
    if blob.strip().lower() in ("cw", "cw-limit"):
        return "cw-limit"
    try:
        return model_from_config(_load_json(blob))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad model config: {exc}") from exc


# ---------------------------------------------------------------------------
# CSV output

def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(float(x))  # shortest round-trip; normalizes numpy scalars
    return str(x)


def write_csv(path: str, comment_lines: Sequence[str], column_names: Sequence[str], rows) -> None:
    """Atomic CSV write: '#' comment header, comma separators, LF endings."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            for line in comment_lines:
                fh.write(f"# {line}\n")
            fh.write(",".join(column_names) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_curve_csv(path: str) -> Tuple[List[str], np.ndarray]:
    """Read one of our CSVs; non-numeric cells become NaN."""

    def cell(x: str) -> float:
        try:
            return float(x)
        except ValueError:
            return math.nan

    names: List[str] = []
    data: List[List[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not names:
                names = line.split(",")
                continue
            data.append([cell(x) for x in line.split(",")])
    if not names or not data:
        raise ConfigError(f"no data rows in {path}")
    return names, np.asarray(data)


def _header(command: str, config: dict, notes: Sequence[str] = ()) -> List[str]:
    lines = [
        f"tpspeckle {__version__}",
        f"command: {command}",
        "config: " + json.dumps(config, sort_keys=True),
    ]
    lines.extend(notes)
    return lines


# ---------------------------------------------------------------------------
# rate

def cmd_rate(args) -> int:
    state = state_from_config(_load_json(args.state))
    model = _parse_model(args.model)
    if args.tau_n < 2:
        raise ConfigError("tau-n must be >= 2")
    taus = np.linspace(args.tau_min, args.tau_max, args.tau_n)
    config = {
        "state": state_to_config(state),
        "model": "cw" if isinstance(model, str) else model_to_config(model),
        "tau_grid": [args.tau_min, args.tau_max, args.tau_n],
        "method": args.method,
    }

    if args.method == "monte-carlo":
        if isinstance(model, str):
            raise ConfigError("monte-carlo needs a concrete correlation model")
        center = state.omega_bar if hasattr(state, "omega_bar") else state.pump.omega_bar
        if args.ensemble is not None:
            ens = ensemble_config_from_json(_load_json(args.ensemble), default_center=center)
        else:
            ens = EnsembleConfig(
                grid=mc_default_grid(state, model), model=model, t_bar=0.01,
                n_realizations=10_000, seed=args.seed,
            )
        config["ensemble"] = {
            "grid": {"center": ens.grid.center, "half_width": ens.grid.half_width, "n": ens.grid.n},
            "model": model_to_config(ens.model),
            "t_bar": ens.t_bar,
            "n_realizations": ens.n_realizations,
            "seed": ens.seed,
        }
        rows = mc_estimate_rows(state, ens, taus.tolist())
        write_csv(
            args.out,
            _header("rate", config),
            ["tau", "mean", "std_error", "n", "seed"],
            rows,
        )
        return EXIT_OK

    curve = compute_rate_curve(state, model, taus, method=args.method)
    write_csv(
        args.out,
        _header("rate", config),
        ["tau", "r"],
        zip(curve.taus.tolist(), curve.rs.tolist()),
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# figure

FIGURE_MODEL_DEFAULT = "II"  # captions quote Thouless frequencies
_W_SET = (math.inf, 1.0, 0.3)


def _w_label(w: float) -> str:
    return "inf" if math.isinf(w) else repr(float(w))


def _figure_dataset(figure_id, kind, args):
    """Return (abscissa_name, abscissa, column names, column arrays, notes)."""
    notes = []
    if figure_id == 2:
        if args.nu_o is None or args.nu_e is None:
            raise ConfigError("figure 2 needs --nu-o and --nu-e (no values are printed in the source)")
        crystal = CrystalParams(args.nu_o, args.nu_e)
        dw_cw = 2.78 / abs(crystal.eta_minus)
        sig = np.linspace(0.0, 3.0, 151)  # sigma in units of dw_cw
        ratios = np.array([spectral_width_ratio(s * dw_cw, crystal) for s in sig])
        notes.append("nu_o, nu_e are user inputs; literature-style placeholders, not source values")
        return "sigma_over_dw_cw", sig, ["ratio_o", "ratio_e"], [ratios[:, 0], ratios[:, 1]], notes

    if figure_id == 3:
        svals = args.s_values if args.s_values is not None else [0.0, 2.0, 8.0]
        if args.s_values is None:
            notes.append("s values are placeholders (figure shows them graphically); override with --s-values")
        t = np.linspace(-3.0, 3.0, 241)
        cols = [np.array([rate_entangled_cw_limit(tt, s) for tt in t]) for s in svals]
        return "t", t, [f"r_s={_fmt(float(s))}" for s in svals], cols, notes

    notes.append(f"correlation model: {kind} (captions leave it implicit; --model overrides)")

    if figure_id in (4, 5, 6):
        t = np.linspace(-3.0, 3.0, 241) if figure_id == 4 else np.linspace(-5.0, 5.0, 241)
        cols, names = [], []
        for w in _W_SET:
            if figure_id == 4:
                rs = np.array([rate_entangled(tt, 0.0, w, kind) for tt in t])
            elif figure_id == 5:
                rs = np.array([rate_fock(tt, w, kind) for tt in t])
            else:
                rs = np.array([rate_coherent(tt, w, kind) for tt in t])
            cols.append(rs)
            names.append(f"r_w={_w_label(w)}")
        return "t", t, names, cols, notes

    if figure_id == 7:
        t = np.linspace(-3.0, 3.0, 241)
        cols, names = [], []
        for theta in (0.0, math.pi):
            for w in (math.inf, 0.3):
                rs = np.array([rate_theta(tt, 0.0, w, theta, kind) for tt in t])
                cols.append(rs)
                names.append(f"r_theta={_fmt(round(theta, 6))}_w={_w_label(w)}")
        return "t", t, names, cols, notes

    if figure_id == 8:
        s = np.linspace(0.0, 8.0, 161)
        cols, names = [], []
        for theta in (0.0, math.pi / 2, math.pi):
            for w in _W_SET:
                rs = np.array([rate_theta(0.0, ss, w, theta, kind) for ss in s])
                cols.append(rs)
                names.append(f"r_theta={_fmt(round(theta, 6))}_w={_w_label(w)}")
        return "s", s, names, cols, notes

    if figure_id in (9, 10):
        t = np.linspace(-3.0, 3.0, 241)
        cols, names = [], []
        pairs = [(0.0, 4.0), (math.pi / 2, 4.0)] if figure_id == 9 else [(0.0, 4.0), (math.pi / 2, 0.0)]
        for theta, s in pairs:
            for w in _W_SET:
                rs = np.array([rate_theta(tt, s, w, theta, kind) for tt in t])
                cols.append(rs)
                names.append(f"r_theta={_fmt(round(theta, 6))}_s={_fmt(s)}_w={_w_label(w)}")
        return "t", t, names, cols, notes

    raise ConfigError(f"unknown figure id {figure_id} (valid: 2..10)")


def cmd_figure(args) -> int:
    if not 2 <= args.id <= 10:
        raise ConfigError(f"unknown figure id {args.id} (valid: 2..10)")
    xname, x, names, cols, notes = _figure_dataset(args.id, args.model, args)
    config = {
        "figure": args.id,
        "model": args.model,
        "nu_o": args.nu_o,
        "nu_e": args.nu_e,
        "s_values": args.s_values,
    }
    rows = zip(x.tolist(), *(c.tolist() for c in cols))
    write_csv(args.out, _header("figure", config, notes), [xname] + names, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

def cmd_sweep(args) -> int:
    cfg = _load_json(args.config)
    try:
        base_state = cfg["state"]
        model_cfg = cfg.get("model", "cw")
        vary = cfg.get("vary", {})
        taus = cfg.get("tau", [0.0])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad sweep config: {exc}") from exc
    if isinstance(taus, dict):
        taus = np.linspace(float(taus["min"]), float(taus["max"]), int(taus["n"])).tolist()

    model = "cw-limit" if model_cfg == "cw" else model_from_config(model_cfg)
    vary_keys = sorted(vary.keys())
    grids = [list(map(float, vary[k])) for k in vary_keys]

    def combos(level=0, current=()):
        if level == len(grids):
            yield current
            return
        for v in grids[level]:
            yield from combos(level + 1, current + (v,))

    rows = []
    for combo in combos():
        scfg = dict(base_state)
        mdl = model
        for key, val in zip(vary_keys, combo):
            if key == "scale":
                if isinstance(model, str):
                    raise ConfigError("cannot vary 'scale' of the cw model")
                mdl = model_from_config({**model_to_config(model), "scale": val})
            else:
                scfg[key] = val
        state = state_from_config(scfg)
        for tau in taus:
            r = rate_closed_form(state, mdl, float(tau))
            rows.append(list(combo) + [float(tau), float(r)])
    config = {"state": base_state, "model": model_cfg, "vary": vary, "tau": taus}
    write_csv(
        args.out,
        _header("sweep", config),
        vary_keys + ["tau", "r"],
        rows,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# mc-validate

def _default_mc_cases() -> List[dict]:
    cases = []
    for s, w, tau in ((0.5, 1.0, 0.0), (2.0, 0.3, 0.5)):
        cases.append(
            {
                "state": {"state": "entangled", "omega_bar": 100.0, "sigma": s / 2.0, "nu_o": 1.5, "nu_e": 0.5},
                "model": {"model": "I", "scale": w},
                "tau": tau,
            }
        )
    for w, tau in ((1.0, 0.0), (0.3, 1.0)):
        cases.append(
            {
                "state": {"state": "fock", "omega_bar": 100.0, "delta": 1.0},
                "model": {"model": "I", "scale": w},
                "tau": tau,
            }
        )
        cases.append(
            {
                "state": {"state": "coherent", "omega_bar": 100.0, "delta": 1.0},
                "model": {"model": "I", "scale": w},
                "tau": tau,
            }
        )
    return cases


def _mc_case_grid(state: StateSpec, model, cfg: dict) -> FrequencyGrid:
    if "grid" in cfg:
        g = cfg["grid"]
        center = g.get("center")
        if center is None:
            center = state.omega_bar if isinstance(state, (FockState, CoherentState)) else state.pump.omega_bar
        return FrequencyGrid(float(center), float(g["half_width"]), int(g["n"]))
    return mc_default_grid(state, model, n=128)


def _closed_rate(state: StateSpec, model: CorrelationModel, tau: float) -> float:
    if not isinstance(model, ModelI):
        raise ConfigError("mc-validate compares against Model I closed forms only")
    return rate_closed_form(state, model, tau)


def cmd_mc_validate(args) -> int:
    cfg = _load_json(args.config)
    seed = int(cfg.get("seed", args.seed))
    t_bar = float(cfg.get("t_bar", 0.01))
    n_real = int(cfg.get("n_realizations", 10_000))
    corrupt = float(cfg.get("_corrupt_closed_form", 0.0))  # test hook
    cases = cfg.get("cases") or _default_mc_cases()

    rows = []
    worst = 0.0
    for idx, case in enumerate(cases):
        state = state_from_config(case["state"])
        model = model_from_config(case["model"])
        tau = float(case.get("tau", 0.0))
        grid = _mc_case_grid(state, model, case)
        ens = EnsembleConfig(grid=grid, model=model, t_bar=t_bar, n_realizations=n_real, seed=seed + idx)
        est = mc_correlator(state, ens, tau)
        closed = _closed_rate(state, model, tau) + corrupt
        z = (est.mean - closed) / est.std_error
        worst = max(worst, abs(z))
        dims = DimensionlessArgs.from_state(state, model, tau)
        rows.append(
            [case["state"]["state"], idx, tau, dims.t, dims.s, dims.w,
             closed, est.mean, est.std_error, est.n, z]
        )
    config = {"seed": seed, "t_bar": t_bar, "n_realizations": n_real, "cases": cases}
    write_csv(
        args.out,
        _header("mc-validate", config),
        ["state", "case", "tau", "t", "s", "w", "closed_form", "mc_mean", "mc_std_error", "n", "z_score"],
        rows,
    )
    if worst > 4.0:
        print(f"mc-validate FAILED: worst |z| = {worst:.2f} > 4", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"mc-validate ok: worst |z| = {worst:.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# visibility

def cmd_visibility(args) -> int:
    names, data = read_curve_csv(args.infile)
    try:
        tau_idx = names.index("tau")
    except ValueError:
        tau_idx = 0
    r_idx = 1 if tau_idx == 0 else 0
    curve = RateCurve(
        taus=data[:, tau_idx], rs=data[:, r_idx], state=None, model="cw-limit", method="closed-form"
    )
    v = visibility(curve)
    print(repr(v))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpspeckle",
        description="Two-photon coincidence rates behind a diffusive random medium",
    )
    default_seed = int(os.environ.get(SEED_ENV_VAR, "12345"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="R(tau) curve for a state and correlation model")
    p.add_argument("--state", required=True, help="state JSON (inline or file path)")
    p.add_argument("--model", required=True, help='{"model": "I"|"II", "scale": f} or "cw"')
    p.add_argument("--tau-min", type=float, required=True)
    p.add_argument("--tau-max", type=float, required=True)
    p.add_argument("--tau-n", type=int, required=True)
    p.add_argument("--method", choices=["closed-form", "quadrature", "monte-carlo"], default="closed-form")
    p.add_argument("--ensemble", default=None, help="EnsembleConfig JSON (monte-carlo method)")
    p.add_argument("--seed", type=int, default=default_seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("figure", help="emit the dataset behind one of the source figures")
    p.add_argument("--id", type=int, required=True, help="figure number, 2..10")
    p.add_argument("--model", choices=["I", "II"], default=FIGURE_MODEL_DEFAULT)
    p.add_argument("--nu-o", type=float, default=None)
    p.add_argument("--nu-e", type=float, default=None)
    p.add_argument("--s-values", type=float, nargs="+", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("sweep", help="Cartesian parameter sweep, long-format CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc-validate", help="Monte Carlo vs closed-form z-score report")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=default_seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mc_validate)

    p = sub.add_parser("visibility", help="visibility of a rate curve CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_visibility)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TpspeckleError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
