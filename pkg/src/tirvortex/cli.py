"""Command-line front end: config parsing, grid runs, data-file export.

One flat TOML config drives every subcommand.  Outputs are bit-stable:
floats are serialized with 17 significant digits (lossless for 64-bit
values), orderings are fixed, and no timestamps or environment data leak
into the files.  Exit status: 0 success, 1 check failure, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np
import tomli

from . import flow, scalarfield
from .scenario import (Interface, Medium, Mode, build_braunbek_scenario,
                       build_single_wave, build_wolter_scenario)

__all__ = ["ConfigError", "RunConfig", "parse_config", "run_field",
           "run_vortices", "run_streamlines", "run_circulation",
           "run_bernoulli", "run_checks", "main"]


class ConfigError(ValueError):
    """The configuration file is malformed or physically inconsistent."""


# section -> key -> (expected type, default); _REQUIRED means no default
_REQUIRED = object()
_SCHEMA = {
    "scenario": {
        "kind": (str, _REQUIRED),
        "n_dense": (float, _REQUIRED),
        "n_rare": (float, _REQUIRED),
        "theta_mean_deg": (float, _REQUIRED),
        "delta_theta_deg": (float, 1.0),
        "lambda0": (float, 1.0),
    },
    "region": {
        "y_min": (float, -3.0),
        "y_max": (float, 3.0),
        "z_min": (float, -2.0),
        "z_max": (float, 2.0),
    },
    "grid": {"ny": (int, 600), "nz": (int, 400)},
    "time": {"t": (float, 0.0)},
    "output": {"prefix": (str, "out")},
    "streamlines": {
        "step": (float, 0.02),
        "max_steps": (int, 2000),
        "seed_grid": (int, 5),
        "ring_radius": (float, 0.02),
        "ring_seeds": (int, 4),
    },
    "contour": {
        "center_y": (float, _REQUIRED),
        "center_z": (float, _REQUIRED),
        "radius": (float, _REQUIRED),
    },
    "bernoulli": {
        "f": (float, _REQUIRED),
        "F": (float, _REQUIRED),
        "y0": (float, _REQUIRED),
        "z_min": (float, 0.0),
        "z_max": (float, 1.0),
        "samples": (int, 201),
    },
}
_KINDS = ("single", "wolter", "braunbek")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for one run."""

    kind: str
    n_dense: float
    n_rare: float
    theta_mean_deg: float
    delta_theta_deg: float
    lambda0: float
    region: tuple[float, float, float, float]
    grid: tuple[int, int]
    t: float
    prefix: str
    streamlines: dict
    contour: dict | None
    bernoulli: dict | None

    def interface(self) -> Interface:
        return Interface(Medium(self.n_dense), Medium(self.n_rare))

    def scenario(self):
        theta = math.radians(self.theta_mean_deg)
        delta = math.radians(self.delta_theta_deg)
        if self.kind == "single":
            return build_single_wave(self.interface(), theta, self.lambda0)
        if self.kind == "wolter":
            return build_wolter_scenario(self.interface(), theta, delta, self.lambda0)
        return build_braunbek_scenario(self.interface(), theta, delta, self.lambda0)


def _coerce(section, key, spec_type, value):
    if spec_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[{section}] {key}: expected a number, got {value!r}")
        return float(value)
    if spec_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"[{section}] {key}: expected a string, got {value!r}")
    return value


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config file; unknown keys are errors."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None

    for section in raw:
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"[{section}] must be a section of key = value pairs")
        for key in raw[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")

    values: dict[str, dict] = {}
    for section, keys in _SCHEMA.items():
        got = raw.get(section, {})
        out = {}
        for key, (spec_type, default) in keys.items():
            if key in got:
                out[key] = _coerce(section, key, spec_type, got[key])
            elif default is _REQUIRED:
                if section in ("contour", "bernoulli"):
                    out = None  # optional sections validated by their commands
                    break
                raise ConfigError(f"missing required key '{key}' in section [{section}]")
            else:
                out[key] = default
        values[section] = out
    for section in ("contour", "bernoulli"):
        if section in raw and values[section] is None:
            missing = [k for k, (_, d) in _SCHEMA[section].items()
                       if d is _REQUIRED and k not in raw[section]]
            raise ConfigError(
                f"section [{section}] is incomplete: missing {', '.join(missing)}"
            )

    sc = values["scenario"]
    if sc["kind"] not in _KINDS:
        raise ConfigError(
            f"[scenario] kind must be one of {', '.join(_KINDS)}, got '{sc['kind']}'"
        )
    if not sc["n_dense"] > sc["n_rare"] > 0:
        raise ConfigError(
            "[scenario] requires n_dense > n_rare > 0 for total reflection, got "
            f"n_dense={sc['n_dense']}, n_rare={sc['n_rare']}"
        )
    if not sc["lambda0"] > 0:
        raise ConfigError(f"[scenario] lambda0 must be positive, got {sc['lambda0']}")
    if sc["delta_theta_deg"] < 0:
        raise ConfigError("[scenario] delta_theta_deg must be nonnegative")
    thc_deg = math.degrees(math.asin(sc["n_rare"] / sc["n_dense"]))
    half = 0.0 if sc["kind"] == "single" else sc["delta_theta_deg"] / 2
    low = sc["theta_mean_deg"] - half
    high = sc["theta_mean_deg"] + half
    if low <= thc_deg:
        raise ConfigError(
            f"[scenario] theta_mean_deg - delta/2 = {low:.4f} deg is not above the "
            f"critical angle {thc_deg:.4f} deg for n={sc['n_dense']}/{sc['n_rare']}"
        )
    if high >= 90.0:
        raise ConfigError(
            f"[scenario] theta_mean_deg + delta/2 = {high:.4f} deg must stay below 90 deg"
        )

    rg = values["region"]
    if not (rg["y_min"] < rg["y_max"] and rg["z_min"] < rg["z_max"]):
        raise ConfigError("[region] requires y_min < y_max and z_min < z_max")
    gr = values["grid"]
    if gr["ny"] < 2 or gr["nz"] < 2:
        raise ConfigError("[grid] ny and nz must be at least 2")
    st = values["streamlines"]
    if not 0 < st["step"] <= 0.1 * sc["lambda0"]:
        raise ConfigError("[streamlines] step must lie in (0, 0.1 * lambda0]")
    if values["contour"] is not None and not values["contour"]["radius"] > 0:
        raise ConfigError("[contour] radius must be positive")
    if values["bernoulli"] is not None:
        bn = values["bernoulli"]
        if bn["F"] == 0:
            raise ConfigError("[bernoulli] F must be nonzero")
        if not bn["z_min"] < bn["z_max"]:
            raise ConfigError("[bernoulli] requires z_min < z_max")
        if bn["samples"] < 2:
            raise ConfigError("[bernoulli] samples must be at least 2")

    return RunConfig(
        kind=sc["kind"], n_dense=sc["n_dense"], n_rare=sc["n_rare"],
        theta_mean_deg=sc["theta_mean_deg"], delta_theta_deg=sc["delta_theta_deg"],
        lambda0=sc["lambda0"],
        region=(rg["y_min"], rg["y_max"], rg["z_min"], rg["z_max"]),
        grid=(gr["ny"], gr["nz"]), t=values["time"]["t"],
        prefix=values["output"]["prefix"], streamlines=st,
        contour=values["contour"], bernoulli=values["bernoulli"],
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def run_field(config: RunConfig, prefix: str | None = None) -> str:
    """Evaluate the field on the configured grid and write the CSV."""
    prefix = prefix or config.prefix
    f = scalarfield.ScenarioField(config.scenario())
    yy = np.linspace(config.region[0], config.region[1], config.grid[0])
    zz = np.linspace(config.region[2], config.region[3], config.grid[1])
    Y, Z = np.meshgrid(yy, zz, indexing="ij")
    fa = f.arrays(Y, Z, config.t, order=1)
    gy = -np.real(np.conj(fa.Vt) * fa.Vy) / (4 * math.pi)
    gz = -np.real(np.conj(fa.Vt) * fa.Vz) / (4 * math.pi)
    w = (np.abs(fa.Vt) ** 2 + np.abs(fa.Vx) ** 2 + np.abs(fa.Vy) ** 2
         + np.abs(fa.Vz) ** 2) / (8 * math.pi)
    amp = np.abs(fa.V)
    phase = np.where(amp > f.node_threshold, np.angle(fa.V), math.nan)
    path = f"{prefix}_field.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("y,z,re_v,im_v,amp,phase,gy,gz,w\n")
        for iz in range(config.grid[1]):       # z outer, ascending
            for iy in range(config.grid[0]):   # y inner, ascending
                row = (yy[iy], zz[iz], fa.V[iy, iz].real, fa.V[iy, iz].imag,
                       amp[iy, iz], phase[iy, iz], gy[iy, iz], gz[iy, iz], w[iy, iz])
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _critical_points(config: RunConfig):
    scenario = config.scenario()
    nodes = flow.find_nodes(scenario, config.region, config.t, config.grid)
    stags = flow.find_stagnation(scenario, config.region, config.t, config.grid)
    return scenario, nodes, stags


def _node_record(cp: flow.CriticalPoint) -> dict:
    return {"kind": "node", "y": cp.y, "z": cp.z, "winding": cp.winding,
            "circulation": cp.circulation, "residual": cp.residual,
            "converged": cp.converged}


def _stagnation_record(cp: flow.CriticalPoint) -> dict:
    return {"kind": "stagnation", "y": cp.y, "z": cp.z,
            "residual": cp.residual, "jacobian_det": cp.jacobian_det,
            "saddle": cp.saddle, "converged": cp.converged}


def run_vortices(config: RunConfig, prefix: str | None = None) -> str:
    """Detect nodes and stagnation points; write the JSON report."""
    prefix = prefix or config.prefix
    _, nodes, stags = _critical_points(config)
    records = [_node_record(c) for c in nodes] + [_stagnation_record(c) for c in stags]
    records.sort(key=lambda r: (r["z"], r["y"]))
    path = f"{prefix}_vortices.json"
    _write_json(path, records)
    return path


def _auto_seeds(config: RunConfig, nodes) -> list[tuple[float, float]]:
    """Coarse interior sub-grid plus small rings around each detected node."""
    st = config.streamlines
    y0, y1, z0, z1 = config.region
    n = st["seed_grid"]
    seeds = []
    for zv in np.linspace(z0, z1, n + 2)[1:-1]:
        for yv in np.linspace(y0, y1, n + 2)[1:-1]:
            seeds.append((float(yv), float(zv)))
    for cp in nodes:
        for j in range(st["ring_seeds"]):
            ang = 2 * math.pi * j / st["ring_seeds"]
            seeds.append((cp.y + st["ring_radius"] * math.cos(ang),
                          cp.z + st["ring_radius"] * math.sin(ang)))
    return seeds


def run_streamlines(config: RunConfig, prefix: str | None = None,
                    seeds=None) -> str:
    """Trace streamlines from explicit or automatic seeds; write JSON."""
    prefix = prefix or config.prefix
    scenario = config.scenario()
    if seeds is None:
        nodes = flow.find_nodes(scenario, config.region, config.t, config.grid)
        seeds = _auto_seeds(config, nodes)
    st = config.streamlines
    out = []
    for seed in seeds:
        line = flow.trace_streamline(
            scenario, seed, t=config.t, step=st["step"],
            max_steps=st["max_steps"], bounds=config.region)
        out.append({
            "seed": [float(seed[0]), float(seed[1])],
            "closed": line.closed,
            "terminated": line.terminated_reason,
            "points": [[float(p[0]), float(p[1])] for p in line.points],
        })
    path = f"{prefix}_streamlines.json"
    _write_json(path, out)
    return path


def run_circulation(config: RunConfig, prefix: str | None = None) -> str:
    """Circulation along the configured circular contour; write JSON."""
    prefix = prefix or config.prefix
    if config.contour is None:
        raise ConfigError("the circulation command needs a [contour] section "
                          "(center_y, center_z, radius)")
    ct = config.contour
    contour = flow.circle_contour((ct["center_y"], ct["center_z"]), ct["radius"])
    res = flow.circulation(config.scenario(), contour, config.t)
    path = f"{prefix}_circulation.json"
    _write_json(path, {"center_y": ct["center_y"], "center_z": ct["center_z"],
                       "radius": ct["radius"], "value": res.value, "n": res.n,
                       "defect": res.defect})
    return path


def run_bernoulli(config: RunConfig, prefix: str | None = None) -> str:
    """Sample the closed-form streamline ODE solution; write CSV."""
    prefix = prefix or config.prefix
    if config.bernoulli is None:
        raise ConfigError("the bernoulli command needs a [bernoulli] section "
                          "(f, F, y0, z_min, z_max)")
    bn = config.bernoulli
    params = flow.BernoulliParams(f=bn["f"], F=bn["F"], y0=bn["y0"],
                                  domain=(bn["z_min"], bn["z_max"]))
    sol = flow.bernoulli_closed_form(params)
    z_hi = bn["z_max"] if sol.crossing is None else min(bn["z_max"], sol.crossing)
    zs = np.linspace(bn["z_min"], z_hi, bn["samples"])
    ys = sol(zs)
    path = f"{prefix}_bernoulli.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("z,y\n")
        for zv, yv in zip(zs, ys):
            fh.write(f"{_fmt(zv)},{_fmt(yv)}\n")
    return path


def _auto_node_region(scenario):
    """A window guaranteed to span one beat period of the interference."""
    kys = sorted({float(m.k.real[1]) for m in scenario.dense.modes})
    gaps = [b - a for a, b in zip(kys, kys[1:]) if b - a > 1e-12]
    if not gaps:
        return None
    period = min(2 * math.pi / min(gaps), 200 * scenario.lambda0)
    return (0.0, period, -1.5 * scenario.lambda0, 0.5 * scenario.lambda0)


def _auto_node_grid(region, lambda0):
    ny = int(math.ceil(8 * (region[1] - region[0]) / lambda0)) + 1
    nz = int(math.ceil(8 * (region[3] - region[2]) / lambda0)) + 1
    return (ny, nz)


def run_checks(config: RunConfig, prefix: str | None = None,
               inject_dispersion_fault: bool = False) -> tuple[str, bool]:
    """Run the bundled invariant suite; returns (report path, all passed)."""
    prefix = prefix or config.prefix
    scenario = config.scenario()
    rng = np.random.default_rng(20493)
    y0, y1, z0, z1 = config.region
    checks = []

    # continuity equation: residual of dw/dt + div g under step refinement
    steps = np.array([1e-2, 5e-3, 2.5e-3]) * config.lambda0
    if inject_dispersion_fault:
        # corrupt one dense-side wavevector; the mode sum then violates the
        # wave equation and the residual stops converging
        bad = scenario.dense.modes[0]
        target = list(scenario.dense.modes[1:])
        target.append(Mode(bad.k * 1.07, bad.amplitude, bad.omega))
        z_lo, z_hi = z0, min(z1, -0.15)
    else:
        target = scenario
        z_lo, z_hi = z0, z1
    slopes = []
    for _ in range(20):
        while True:
            py = rng.uniform(y0, y1)
            pz = rng.uniform(z_lo, z_hi)
            if abs(pz) > 0.12:
                break
        res = [max(scalarfield.continuity_residual(target, (0.0, py, pz),
                                                   config.t, h), 1e-300)
               for h in steps]
        slopes.append(np.polyfit(np.log(steps), np.log(res), 1)[0])
    order = float(min(slopes))
    checks.append({"name": "continuity_convergence_order", "value": order,
                   "tolerance": ">= 1.8", "passed": order >= 1.8})

    # eikonal form of g against the bilinear form, away from nodes
    f = scalarfield.ScenarioField(scenario)
    worst = 0.0
    count = 0
    while count < 100:
        py = rng.uniform(y0, y1)
        pz = rng.uniform(z0, z1)
        sample = scalarfield.eval_field(scenario, (0.0, py, pz), config.t)
        if sample.A < 1e-6 * f.amp_scale:
            continue
        gnorm = float(np.linalg.norm(sample.g))
        if gnorm == 0.0:
            continue
        ge = scalarfield.eikonal_momentum(sample, scenario.k0)
        worst = max(worst, float(np.linalg.norm(ge - sample.g)) / gnorm)
        count += 1
    checks.append({"name": "eikonal_agreement", "value": worst,
                   "tolerance": "<= 1e-8", "passed": worst <= 1e-8})

    # circulation quantization around detected nodes
    region = _auto_node_region(scenario)
    if region is None:
        checks.append({"name": "circulation_quantization", "value": None,
                       "tolerance": "<= 1e-3", "passed": True,
                       "note": "no interference beat: no nodes expected"})
    else:
        nodes = flow.find_nodes(scenario, region, config.t,
                                _auto_node_grid(region, config.lambda0))
        good = [n for n in nodes if n.converged and n.circulation is not None]
        if not good:
            checks.append({"name": "circulation_quantization", "value": None,
                           "tolerance": "<= 1e-3", "passed": True,
                           "note": "no nodes detected in the search window"})
        else:
            defect = max(abs(n.circulation / (2 * math.pi) - n.winding) for n in good)
            checks.append({"name": "circulation_quantization", "value": defect,
                           "tolerance": "<= 1e-3", "passed": defect <= 1e-3,
                           "note": f"{len(good)} nodes"})

    # Bernoulli closed form against RK4
    worst_b = 0.0
    presets = [flow.BernoulliParams(f=0.0, F=1.0, y0=2.0, domain=(0.0, 1.0)),
               flow.BernoulliParams(f=0.5, F=2.0, y0=1.0, domain=(0.0, 2.0)),
               flow.BernoulliParams(f=1.0, F=1.0, y0=2.0, domain=(0.0, 1.0))]
    for params in presets:
        sol = flow.bernoulli_closed_form(params)
        trace = flow.bernoulli_rk4(params, step=1e-3)
        worst_b = max(worst_b, float(np.max(np.abs(sol(trace.z) - trace.y))))
    checks.append({"name": "bernoulli_crosscheck", "value": worst_b,
                   "tolerance": "<= 1e-6", "passed": worst_b <= 1e-6})

    passed = all(c["passed"] for c in checks)
    path = f"{prefix}_checks.json"
    _write_json(path, {"passed": passed, "checks": checks})
    return path, passed


def _load_seed_file(path) -> list[tuple[float, float]]:
    with open(path) as fh:
        data = json.load(fh)
    try:
        return [(float(p[0]), float(p[1])) for p in data]
    except (TypeError, ValueError, IndexError):
        raise ConfigError(
            f"seed file {path} must be a JSON array of [y, z] pairs"
        ) from None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tirvortex",
        description="Total-internal-reflection field simulator: grids, "
                    "vortex reports, streamlines, circulation, checks.")
    parser.add_argument("command",
                        choices=["field", "vortices", "streamlines",
                                 "circulation", "bernoulli", "check"])
    parser.add_argument("config", help="path to the TOML run configuration")
    parser.add_argument("--out", help="output path prefix (overrides [output] prefix)")
    parser.add_argument("--seed-file",
                        help="JSON [y, z] seed list for the streamlines command")
    parser.add_argument("--inject-dispersion-fault", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            config = parse_config(fh.read())
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "field":
            print(run_field(config, args.out))
        elif args.command == "vortices":
            print(run_vortices(config, args.out))
        elif args.command == "streamlines":
            seeds = _load_seed_file(args.seed_file) if args.seed_file else None
            print(run_streamlines(config, args.out, seeds))
        elif args.command == "circulation":
            print(run_circulation(config, args.out))
        elif args.command == "bernoulli":
            print(run_bernoulli(config, args.out))
        else:
            path, ok = run_checks(config, args.out,
                                  inject_dispersion_fault=args.inject_dispersion_fault)
            print(path)
            if not ok:
                return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
