"""Command-line interface: experiment orchestration with reproducible artifacts.

Subcommands
    analytic   closed-form parameter/timescale table (stdout table + JSON file)
    validate   structural identity and regime checks on the configured model
    simulate   raw trajectory ensembles -> events.csv
    telegraph  detector thinning, binned counts, light/dark period statistics
    fidelity   heralded-preparation fidelity grid -> fidelity.csv

Configuration is a sectioned key = value file ([model], [run]) plus
command-line flags in kebab-case mirroring the keys; flags override the file.
Every run writes the fully resolved configuration (config.ini) next to its
artifacts so any output can be regenerated bit-identically from the directory
alone, independent of worker count.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 insufficient statistics.

Defaults (also the documented reference point of all tests):
    [model] g=1.0 kappa=1.0 gamma0=0.05 gamma1=0.05 omega_l=1.0 omega_m=0.1
            delta=50.0 n_max=2
    [run]   seed=0 workers=1 n_traj=16 horizon_tdark=10.0 eta=1.0
            t_wait=0.7 out=out
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from macrojumps import effective, lindblad, telegraph, trajectory
from macrojumps.model import (
    Model,
    ModelParams,
    build_model,
    collective_hamiltonian,
    collective_jump_operators,
    collective_transform,
    dark_state,
    validate_regime,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "run_experiment", "main"]

KINDS = ("analytic", "validate", "simulate", "telegraph", "fidelity")

_MODEL_KEYS = ("g", "kappa", "gamma0", "gamma1", "omega_l", "omega_m", "delta", "n_max")
_RUN_KEYS = ("kind", "seed", "workers", "n_traj", "horizon_tdark", "eta", "t_wait", "out")


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values, or out-of-range settings."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one experiment run."""

    kind: str
    model: ModelParams
    seed: int = 0
    workers: int = 1
    n_traj: int = 16
    horizon_tdark: float = 10.0
    eta: tuple[float, ...] = (1.0,)
    t_wait: tuple[float, ...] = (0.7,)
    out: str = "out"

    def to_ini(self) -> str:
        """Lossless serialization; parse_config(to_ini()) reproduces the config."""
        cp = configparser.ConfigParser()
        cp["model"] = {k: repr(getattr(self.model, k)) for k in _MODEL_KEYS}
        cp["run"] = {
            "kind": self.kind,
            "seed": repr(self.seed),
            "workers": repr(self.workers),
            "n_traj": repr(self.n_traj),
            "horizon_tdark": repr(self.horizon_tdark),
            "eta": ",".join(repr(v) for v in self.eta),
            "t_wait": ",".join(repr(v) for v in self.t_wait),
            "out": self.out,
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _parse_scalar(key: str, raw: str, kind: type):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"value for '{key}' must be {kind.__name__}, got {raw!r}") from None


def _parse_float_list(key: str, raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in str(raw).split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"value for '{key}' must contain at least one number")
    return tuple(_parse_scalar(key, p, float) for p in parts)


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}; expected one of {', '.join(KINDS)}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"seed must lie in [0, 2^64), got {cfg.seed}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")
    if cfg.n_traj < 1:
        raise ConfigError(f"n_traj must be >= 1, got {cfg.n_traj}")
    if not cfg.horizon_tdark > 0:
        raise ConfigError(f"horizon_tdark must be positive, got {cfg.horizon_tdark}")
    for v in cfg.eta:
        if not 0.0 < v <= 1.0:
            raise ConfigError(f"eta must lie in (0, 1], got {v}")
    for v in cfg.t_wait:
        if not v > 0:
            raise ConfigError(f"t_wait must be positive (in t_dark units), got {v}")
    # Every experiment scales horizons and windows by the telegraph
    # timescales, so the derived quantities must be defined.
    try:
        effective.timescales(cfg.model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def parse_config(
    text: str | None = None,
    overrides: dict[str, object] | None = None,
    kind: str | None = None,
) -> RunConfig:
    """Resolve defaults < config file text < explicit overrides into a RunConfig.

    `overrides` maps config keys (snake_case, as in the file) to values already
    of the right python type — the CLI feeds explicitly present flags through
    here.  Unknown sections or keys in either source are a ConfigError naming
    the key.
    """
    model_kw: dict[str, object] = {}
    run_kw: dict[str, object] = {}

    if text is not None:
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        for section in cp.sections():
            if section not in ("model", "run"):
                raise ConfigError(f"unknown config section [{section}]")
        if cp.has_section("model"):
            for key, raw in cp.items("model"):
                if key not in _MODEL_KEYS:
                    raise ConfigError(f"unknown key '{key}' in section [model]")
                model_kw[key] = _parse_scalar(key, raw, int if key == "n_max" else float)
        if cp.has_section("run"):
            for key, raw in cp.items("run"):
                if key not in _RUN_KEYS:
                    raise ConfigError(f"unknown key '{key}' in section [run]")
                if key in ("kind", "out"):
                    run_kw[key] = raw
                elif key in ("seed", "workers", "n_traj"):
                    run_kw[key] = _parse_scalar(key, raw, int)
                elif key == "horizon_tdark":
                    run_kw[key] = _parse_scalar(key, raw, float)
                else:  # eta, t_wait
                    run_kw[key] = _parse_float_list(key, raw)

    for key, value in (overrides or {}).items():
        if key in _MODEL_KEYS:
            model_kw[key] = value
        elif key in _RUN_KEYS:
            run_kw[key] = value
        else:
            raise ConfigError(f"unknown key '{key}'")
    if kind is not None:
        run_kw["kind"] = kind
    if "kind" not in run_kw:
        raise ConfigError("missing required experiment kind "
                          f"(subcommand or 'kind' key; one of {', '.join(KINDS)})")

    try:
        model = ModelParams(**model_kw)  # type: ignore[arg-type]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return _validate(RunConfig(model=model, **run_kw))  # type: ignore[arg-type]


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message):  # noqa: D102 - argparse hook
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="macrojumps", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="sectioned key = value config file")
    common.add_argument("--out", metavar="DIR", help="artifact directory (default: out)")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed (default: 0)")
    common.add_argument("--workers", type=int, metavar="N", help="ensemble worker processes (default: 1)")
    common.add_argument("--n-traj", type=int, metavar="N", help="number of trajectories / protocol runs")
    common.add_argument("--horizon-tdark", type=float, metavar="F",
                        help="trajectory horizon in dark-timescale multiples")
    common.add_argument("--eta", metavar="F[,F...]", help="detector efficiencies in (0, 1]")
    common.add_argument("--t-wait", metavar="F[,F...]",
                        help="no-click windows, in dark-timescale multiples")
    common.add_argument("--nmax", type=int, metavar="N", help="photon-number truncation")
    for key in ("g", "kappa", "gamma0", "gamma1", "delta"):
        common.add_argument(f"--{key}", type=float, metavar="F", help=f"model parameter {key}")
    common.add_argument("--omega-l", type=float, metavar="F", help="model parameter omega_l")
    common.add_argument("--omega-m", type=float, metavar="F", help="model parameter omega_m")

    sub = parser.add_subparsers(dest="kind", metavar="|".join(KINDS))
    sub.required = True
    for kind in KINDS:
        sub.add_parser(kind, parents=[common])
    return parser


_FLAG_TO_KEY = {
    "out": "out", "seed": "seed", "workers": "workers", "n_traj": "n_traj",
    "horizon_tdark": "horizon_tdark", "eta": "eta", "t_wait": "t_wait",
    "nmax": "n_max", "g": "g", "kappa": "kappa", "gamma0": "gamma0",
    "gamma1": "gamma1", "delta": "delta", "omega_l": "omega_l", "omega_m": "omega_m",
}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    text = None
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
    overrides: dict[str, object] = {}
    for attr, key in _FLAG_TO_KEY.items():
        value = getattr(args, attr)
        if value is None:
            continue
        if key in ("eta", "t_wait"):
            value = _parse_float_list(key, value)
        overrides[key] = value
    return parse_config(text, overrides, kind=args.kind)


# --------------------------------------------------------------------------
# experiment runners


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.to_ini())
    return out


def _flat_items(summary: dict[str, dict[str, float]]):
    for section, block in summary.items():
        for key, value in block.items():
            yield f"{section}.{key}", value


def _run_analytic(cfg: RunConfig, out: Path) -> int:
    summary = effective.analytic_summary(cfg.model)
    width = max(len(name) for name, _ in _flat_items(summary))
    for name, value in _flat_items(summary):
        print(f"{name:<{width}}  {value!r}")
    blob = json.dumps(summary, indent=2)
    print(blob)
    (out / "analytic.json").write_text(blob + "\n")
    return 0


def _run_validate(cfg: RunConfig, out: Path) -> int:
    """Structural identities of the configured model, plus the regime report.

    Regime warnings are advisory; identity failures are numerical errors.
    """
    model = build_model(cfg.model)
    checks: list[tuple[str, float, float]] = []  # name, deviation, threshold

    # Photon-loss bookkeeping: the anti-Hermitian part of the no-click
    # generator must equal half the total jump rate operator.
    decay = 1j * (model.h_cond.matrix - model.h_cond.matrix.conj().T)
    total = sum(c.rate * c.op.conj().T @ c.op for c in model.channels)
    checks.append(("noclick_decay_bookkeeping", float(np.abs(decay - total).max()), 1e-12))

    # Same generator in the symmetric/antisymmetric basis, built independently.
    u = collective_transform(model.basis)
    h_col = collective_hamiltonian(cfg.model, model.basis)
    checks.append((
        "collective_hamiltonian_equivalence",
        float(np.abs(u.matrix @ model.h_cond.matrix @ u.matrix.conj().T - h_col.matrix).max()),
        1e-12,
    ))
    reset_bare = lindblad.reset_superoperator(model.channels)
    col_channels = collective_jump_operators(cfg.model, model.basis)
    reset_col = lindblad.reset_superoperator(col_channels)
    uu = np.kron(u.matrix, u.matrix.conj())
    checks.append((
        "collective_reset_equivalence",
        float(np.abs(uu @ reset_bare @ uu.conj().T - reset_col).max()),
        1e-12,
    ))

    # The antisymmetric ground superposition never emits: every jump operator
    # annihilates it exactly.  (The no-click generator couples it weakly to a
    # fast excited state, which is what ends dark periods — so only the
    # channels, and the eliminated model below, annihilate it exactly.)
    dark = dark_state(model.basis)
    dev = max(float(np.abs(c.apply(dark)).max()) for c in model.channels)
    checks.append(("jump_channels_annihilate_dark_state", dev, 1e-12))
    h4, ch4 = effective.build_effective_model(cfg.model)
    e_dark = np.zeros(4, dtype=complex)
    e_dark[3] = 1.0
    dev = max(float(np.abs(h4.matrix @ e_dark).max()),
              float(np.abs(ch4[0].apply(e_dark)).max()))
    checks.append(("effective_dark_state_annihilation", dev, 1e-12))

    # Emitting-cascade steady state against the closed form (finite-width
    # corrections are quadratic in kappa_eff/omega_m, well under 1e-4 here).
    eff = effective.derived_params(cfg.model)
    h3, ch3 = effective.light_submodel(cfg.model)
    pops = np.diag(lindblad.steady_state(h3, ch3)).real
    target = np.asarray(effective.steady_populations(eff.x).as_tuple())
    checks.append(("cascade_steady_state_vs_closed_form", float(np.abs(pops - target).max()), 1e-4))

    # Emission-spacing consistency: 1/(kappa <n>) equals the closed form.
    times = effective.timescales(cfg.model)
    n_bar = (eff.kappa_eff / cfg.model.kappa) * (target[1] + target[2])
    checks.append((
        "emission_spacing_identity",
        abs(1.0 / (cfg.model.kappa * n_bar) - times.t_cav) / times.t_cav,
        1e-9,
    ))

    report = validate_regime(cfg.model)
    lines = []
    failed = False
    for name, deviation, threshold in checks:
        ok = bool(deviation < threshold)
        failed = failed or not ok
        lines.append({"check": name, "deviation": float(deviation), "threshold": threshold, "pass": ok})
        print(f"{'PASS' if ok else 'FAIL'} {name} (deviation {deviation:.3e}, threshold {threshold:.0e})")
    for c in report.checks:
        print(f"{c.status.upper():4s} regime {c.condition} (ratio {c.ratio:.3g})")
    payload = {
        "identities": lines,
        "regime": [{"condition": c.condition, "ratio": c.ratio, "status": c.status} for c in report.checks],
    }
    (out / "validate.json").write_text(json.dumps(payload, indent=2) + "\n")
    if failed:
        raise lindblad.EvolutionError("structural identity check failed; see validate.json")
    return 0


def _ensemble(cfg: RunConfig, model: Model) -> list[trajectory.TrajectoryRecord]:
    horizon = cfg.horizon_tdark * effective.timescales(cfg.model).t_dark
    return trajectory.run_ensemble(
        model, cfg.n_traj, cfg.seed, horizon, workers=cfg.workers
    )


def _run_simulate(cfg: RunConfig, out: Path) -> int:
    model = build_model(cfg.model)
    records = _ensemble(cfg, model)
    path = out / "events.csv"
    trajectory.write_events_csv(records, path)
    n_events = sum(len(r) for r in records)
    print(f"wrote {path} ({n_events} events from {cfg.n_traj} trajectories)")
    return 0


def _eta_tag(eta: float) -> str:
    return f"{eta:g}"


def _run_telegraph(cfg: RunConfig, out: Path) -> int:
    model = build_model(cfg.model)
    records = _ensemble(cfg, model)
    times = effective.timescales(cfg.model)
    bin_width = 0.38 * times.t_dark
    payload: list[dict[str, object]] = []
    for eta in cfg.eta:
        threshold = telegraph.default_gap_threshold(cfg.model, eta)
        segs = []
        combined: list[telegraph.BinnedCounts] = []
        for i, rec in enumerate(records):
            stream = telegraph.thin_detections(
                rec, eta, trajectory.trajectory_seed(cfg.seed, i, stream=1), trajectory_id=i
            )
            segs.append(telegraph.segment_periods(stream, threshold))
            combined.append(telegraph.bin_counts(stream, bin_width))
        counts_path = out / f"counts_eta{_eta_tag(eta)}.csv"
        telegraph.write_counts_csv(combined[0], counts_path)
        stats = telegraph.period_stats(segs)
        entry = {
            "eta": eta,
            "gap_threshold": threshold,
            "bin_width": bin_width,
            "dark": {"n": stats.dark_count, "mean": stats.dark_mean, "stderr": stats.dark_stderr,
                     "mean_over_tdark": stats.dark_mean / times.t_dark},
            "light": {"n": stats.light_count, "mean": stats.light_mean, "stderr": stats.light_stderr,
                      "mean_over_tdark": stats.light_mean / times.t_dark},
            "predicted": {"t_dark": times.t_dark, "t_light": times.t_light, "t_cav": times.t_cav},
        }
        payload.append(entry)
        print(
            f"eta={eta:g}: {stats.dark_count} dark periods, mean {stats.dark_mean:.4g} "
            f"(predicted {times.t_dark:.4g}); {stats.light_count} light, mean {stats.light_mean:.4g} "
            f"(predicted {times.t_light:.4g}); wrote {counts_path.name}"
        )
    (out / "telegraph.json").write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def _run_fidelity(cfg: RunConfig, out: Path) -> int:
    model = build_model(cfg.model)
    prop = trajectory.build_propagator(model.h_cond)
    t_dark = effective.timescales(cfg.model).t_dark
    horizon = cfg.horizon_tdark * t_dark if cfg.horizon_tdark > 0 else None
    points = []
    for eta in cfg.eta:
        for tw in cfg.t_wait:
            point = telegraph.fidelity_protocol(
                model, eta, tw * t_dark, cfg.n_traj, cfg.seed,
                horizon=max(horizon, (tw + 1.0) * t_dark) if horizon else None,
                propagator=prop,
                workers=cfg.workers,
            )
            points.append(point)
            print(
                f"eta={eta:g} t_wait={tw:g} t_dark: F = {point.fidelity:.4f} "
                f"+- {point.stderr:.4f} ({point.n_samples} samples, {point.n_dropped} dropped)"
            )
    path = out / "fidelity.csv"
    telegraph.write_fidelity_csv(points, path)
    print(f"wrote {path}")
    return 0


_RUNNERS = {
    "analytic": _run_analytic,
    "validate": _run_validate,
    "simulate": _run_simulate,
    "telegraph": _run_telegraph,
    "fidelity": _run_fidelity,
}


def run_experiment(cfg: RunConfig) -> int:
    """Dispatch a resolved config; returns 0 or raises a module error."""
    out = _prepare_out(cfg)
    return _RUNNERS[cfg.kind](cfg, out)


def main(argv: list[str] | None = None) -> int:
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        cfg = _config_from_args(args)
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (telegraph.InsufficientDataError, telegraph.HorizonTooShortError) as exc:
        print(f"insufficient statistics: {exc}", file=sys.stderr)
        return 3
    except (
        lindblad.EvolutionError,
        lindblad.DegenerateSteadyStateError,
        trajectory.NoJumpPossibleError,
        np.linalg.LinAlgError,
        FloatingPointError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
