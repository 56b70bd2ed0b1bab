"""Batch experiment runner.

Usage::

    aggsim [run] <experiment> [--key value | key=value]... [--config FILE] [--out PATH]

Experiments: mc-x, waveform, route, scaling, lifetime, tdma. Each writes a
CSV data file whose header lines echo the full configuration, plus a JSON
summary with one pass/fail entry per check. Exit status: 0 when every check
passes, 1 when a check fails, 2 for a bad configuration, 3 for I/O errors.
"""

import csv
import json
import math
import os
import sys
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np

from . import agg_protocol, grid_routing, lifetime, tr_waveform, trc_link
from .phy_channel import ChannelParams

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

_CHANNEL_KEYS = {"B": 64.0, "delta": 1.0, "alpha": 3.0, "N0": 1.0, "P": 1.0, "rho0": 1.0}

DEFAULTS = {
    "mc-x": {**_CHANNEL_KEYS, "m": 64, "trials": 1000, "r": 1.0, "seed": 0},
    "waveform": {"trials": 100, "competitors": 100, "max_nodes": 8, "max_taps": 32,
                 "B": 1.0, "seed": 0},
    "route": {"n": 10201},
    "scaling": {**_CHANNEL_KEYS, "B": 1.0, "beta": 0.35, "gamma": 0.3,
                "n_min": 1e4, "n_max": 1e12, "per_decade": 1},
    "lifetime": {**_CHANNEL_KEYS, "B": 1.0, "beta": 0.35, "gamma": 0.3, "e0": 1.0,
                 "c2": 0.0, "lam_scale": 1e-3, "n_min": 1e6, "n_max": 1e12, "per_decade": 2,
                 "slope_tol": 0.01},
    "tdma": {**_CHANNEL_KEYS, "B": 1.0, "P": 100.0, "l": 1, "k": 1, "board": 32},
}


class ConfigError(ValueError):
    """Unparseable or unknown configuration."""


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(rows, schema, path, header=None):
    """Write ``rows`` under column ``schema``; ``header`` items become ``# key=value`` lines."""
    lines = [f"# {k}={format_value(v)}\n" for k, v in (header or {}).items()]
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema)
    for row in rows:
        extra = set(row) - set(schema)
        if extra:
            raise ValueError(f"row has keys outside the schema: {sorted(extra)}")
        writer.writerow([format_value(row[c]) for c in schema])
    _atomic_write(path, "".join(lines) + buf.getvalue())


def read_csv(path):
    """Rows of a file written by :func:`emit_csv`, header comments skipped."""
    with open(path, newline="") as fh:
        body = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(body))


def _json_default(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(type(v))


def _write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default,
                                   allow_nan=True) + "\n")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _coerce(raw, default):
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {type(default).__name__}") from None
    return raw


def read_config_file(path):
    pairs = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for num, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    return pairs


def parse_args(argv):
    """``(experiment, config dict, out path)`` from the command line."""
    argv = list(argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    if not argv or argv[0].startswith("-"):
        raise ConfigError(f"missing experiment; choose one of {', '.join(DEFAULTS)}")
    experiment, rest = argv[0], argv[1:]
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose one of {', '.join(DEFAULTS)}")
    pairs, out = [], None
    i = 0
    while i < len(rest):
        tok = rest[i]
        if tok.startswith("--"):
            key, eq, val = tok[2:].partition("=")
            if not eq:
                if i + 1 >= len(rest):
                    raise ConfigError(f"option {tok} needs a value")
                val = rest[i + 1]
                i += 1
        elif "=" in tok:
            key, _, val = tok.partition("=")
        else:
            raise ConfigError(f"cannot parse argument {tok!r}")
        if key == "config":
            pairs.extend(read_config_file(val))
        elif key == "out":
            out = val
        else:
            pairs.append((key.replace("-", "_"), val))
        i += 1
    config = dict(DEFAULTS[experiment])
    for key, val in pairs:
        if key == "experiment":
            if val != experiment:
                raise ConfigError(f"config is for {val!r}, command line says {experiment!r}")
            continue
        if key == "out":
            out = val
            continue
        if key not in config:
            raise ConfigError(f"unknown key {key!r} for {experiment}; "
                              f"allowed: {', '.join(sorted(config))}")
        config[key] = _coerce(val, DEFAULTS[experiment][key])
    return experiment, config, out or f"{experiment}.csv"


def _channel(cfg):
    try:
        return ChannelParams(bandwidth=cfg["B"], coherence_delta=cfg["delta"], alpha=cfg["alpha"],
                             noise_density=cfg["N0"], power_cap=cfg["P"], rho0=cfg["rho0"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _n_list(cfg):
    lo, hi = math.log10(cfg["n_min"]), math.log10(cfg["n_max"])
    count = int(round((hi - lo) * cfg["per_decade"])) + 1
    return [float(v) for v in np.logspace(lo, hi, count)]


def _sidecar(out, suffix):
    out = Path(out)
    return out.with_name(out.stem + suffix)


# ---------------------------------------------------------------------------
# experiments: each returns (schema, rows, checks, extra summary)
# ---------------------------------------------------------------------------

def _run_mc_x(cfg, out):
    params = _channel(cfg)
    config = trc_link.TrcLinkConfig(params, cfg["m"], cfg["r"], cfg["trials"], cfg["seed"])
    st = trc_link.monte_carlo_x(config)
    checks = {
        "x_nonnegative": st.x_min >= 0,
        "k0_below_delta_over_B": st.k0 <= params.coherence_delta / params.bandwidth,
    }
    if cfg["m"] >= 16:
        checks["mean_within_10pct"] = abs(st.mean / st.predicted_mean - 1) <= 0.10
    return trc_link.CSV_COLUMNS, [trc_link.summary_row(config, st)], checks, st.as_dict()


def _run_waveform(cfg, out):
    rows = tr_waveform.optimality_trials(cfg["seed"], cfg["trials"], cfg["competitors"],
                                         cfg["max_nodes"], cfg["max_taps"], cfg["B"])
    tol = 1e-9
    checks = {
        "peak_bound_holds": all(r["peak_competitor_max"] <= (1 + tol) * r["peak_bound"] for r in rows),
        "tr_attains_peak": all(abs(r["peak_tr"] / r["peak_bound"] - 1) < tol for r in rows),
        "energy_bound_holds": all(r["er_competitor_max"] <= (1 + tol) * r["er_bound"] for r in rows),
        "tr_attains_energy": all(abs(r["er_tr"] / r["er_bound"] - 1) < 1e-6 for r in rows),
        "localization_floor": all(r["ls_ratio_min"] >= 1 - tol for r in rows),
    }
    return tr_waveform.WAVEFORM_COLUMNS, rows, checks, {}


ROUTE_COLUMNS = ("x", "y", "load", "lower_bound", "upper_bound", "ok")


def _run_route(cfg, out):
    try:
        net = grid_routing.GridNetwork.from_n(cfg["n"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    tm = grid_routing.build_tree(net)
    report = grid_routing.check_traffic_bounds(tm)
    edges = tm.edges()
    neighbours = sum(tm.at(x, y) for x, y in ((1, 0), (-1, 0), (0, 1), (0, -1)) if net.contains((x, y)))
    emit_csv(({"child_x": a, "child_y": b, "parent_x": c, "parent_y": d} for a, b, c, d in edges.tolist()),
             ("child_x", "child_y", "parent_x", "parent_y"), _sidecar(out, ".edges.csv"))
    checks = {
        "traffic_bounds": report.ok,
        "tree_edges": len(edges) == net.n - 1,
        "sink_neighbour_loads": neighbours == net.n - 1,
        "load_balance": report.spread <= 16.0 / math.sqrt(2.0),
    }
    extra = {"violations": len(report.violations), "checked": report.checked,
             "ratio_min": report.ratio_min, "ratio_max": report.ratio_max,
             "cone_lower_ratio": report.cone_lower_ratio,
             "cone_upper_ratio": report.cone_upper_ratio,
             "c2": grid_routing.max_load_fraction(tm)}
    return ROUTE_COLUMNS, grid_routing.node_rows(tm), checks, extra


def _run_scaling(cfg, out):
    params = _channel(cfg)
    n_list = _n_list(cfg)
    try:
        rows, spread = agg_protocol.scaling_experiment(n_list, cfg["beta"], cfg["gamma"],
                                                       cfg["alpha"], params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    in_regime = bool(rows[-1]["in_regime"])
    checks = {"below_genie": all(r["lambda"] <= r["genie"] for r in rows)}
    if in_regime:
        checks["normalized_spread_below_2"] = spread < 2.0
    else:
        checks["normalized_rate_vanishes"] = rows[-1]["lambda_norm"] < 0.1 * rows[0]["lambda_norm"]
    geometry = [agg_protocol.partition(n, cfg["beta"], cfg["gamma"], cfg["alpha"]).as_dict()
                for n in n_list]
    _write_json(_sidecar(out, ".partition.json"), geometry)
    return agg_protocol.SCALING_COLUMNS, rows, checks, {"spread": spread}


def _run_lifetime(cfg, out):
    params = _channel(cfg)
    scale = cfg["lam_scale"]
    c2 = cfg["c2"]
    if c2 <= 0:
        c2 = 0.25  # busiest sink neighbour relays a quarter of the grid
    try:
        lp = lifetime.LifetimeParams(e0=cfg["e0"], lambda_fn=lambda n: scale / (n * math.log(n)),
                                     c2=c2, alpha=cfg["alpha"], beta=cfg["beta"],
                                     gamma=cfg["gamma"])
        n_list = _n_list(cfg)
        rows = lifetime.lifetime_ratio_experiment(n_list, lp, params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    slope, c3 = lifetime.fit_lifetime_exponent(n_list, lp, params)
    target = lifetime.lifetime_exponent(cfg["alpha"], cfg["beta"], cfg["gamma"])
    top = [r["ratio"] for r in rows if r["n"] >= n_list[-1] / 1000.0 * (1 - 1e-12)]
    checks = {
        "exponent_matches": abs(slope - target) <= cfg["slope_tol"],
        "ratio_increasing": all(b > a for a, b in zip(top, top[1:])),
    }
    return lifetime.LIFETIME_COLUMNS, rows, checks, {"slope": slope, "target": target, "c3": c3}


TDMA_COLUMNS = ("l", "k", "alpha", "K1", "K1_converged", "bound_rate", "schedule_rate",
                "min_sinr", "collisions", "reuse_violations")


def _run_tdma(cfg, out):
    params = _channel(cfg)
    try:
        k1 = agg_protocol.derive_K1(cfg["k"], cfg["alpha"])
        sim = agg_protocol.schedule_sinr_rate(cfg["l"], cfg["k"], params, cfg["board"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    bound = agg_protocol.tdma_broadcast_rate(cfg["l"], cfg["k"],
                                             agg_protocol.RateConstants(K1=k1.value), params)
    row = {"l": cfg["l"], "k": cfg["k"], "alpha": cfg["alpha"], "K1": k1.value,
           "K1_converged": k1.converged, "bound_rate": bound, "schedule_rate": sim["rate"],
           "min_sinr": sim["min_sinr"], "collisions": sim["collisions"],
           "reuse_violations": sim["reuse_violations"]}
    checks = {"schedule_beats_bound": sim["rate"] >= bound,
              "no_reuse_violation": sim["reuse_violations"] == 0 and sim["collisions"] == 0}
    return TDMA_COLUMNS, [row], checks, {}


RUNNERS = {"mc-x": _run_mc_x, "waveform": _run_waveform, "route": _run_route,
           "scaling": _run_scaling, "lifetime": _run_lifetime, "tdma": _run_tdma}


def run(experiment, config, out):
    """Execute one experiment and write its artifacts; returns the exit status."""
    schema, rows, checks, extra = RUNNERS[experiment](config, out)
    header = {"experiment": experiment, **config}
    emit_csv(rows, schema, out, header)
    summary = {"experiment": experiment, "config": config,
               "checks": {k: bool(v) for k, v in checks.items()},
               "passed": all(checks.values()), **extra}
    _write_json(_sidecar(out, ".summary.json"), summary)
    return EXIT_OK if summary["passed"] else EXIT_CHECK, summary


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if argv and argv[0] in ("-h", "--help"):
        print(__doc__.strip())
        return EXIT_OK
    try:
        experiment, config, out = parse_args(argv)
        status, summary = run(experiment, config, out)
    except ConfigError as exc:
        print(f"aggsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"aggsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name, ok in summary["checks"].items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"wrote {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
