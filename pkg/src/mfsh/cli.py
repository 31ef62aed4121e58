"""Command-line front end.

    mfsh <command> [--config FILE] [--key value ...]

Settings come from built-in defaults, then the flat ``key = value`` config
file, then command-line ``--key value`` pairs.  Exit status: 0 on success,
1 on a configuration error, 2 on a numerical failure.
"""
from __future__ import annotations

import json
import math
import os
import sys

import numpy as np

from . import classifiers as cl
from .classifiers import InstabilityKind
from .errors import ConfigError, MfshError, NoCrossing, NumericalFailure
from .model import Model, ModelParams, mu_existence

COMMANDS = ("classify", "scan", "trace", "region", "check-series", "asymptote", "simulate",
            "measure", "crossing")

ALIASES = {"gm": "g_m", "c_squared": "c2"}

# key -> (parser, default); None default means "no value"
_F, _I, _S = float, int, str


def _floats(text):
    return tuple(float(t) for t in str(text).replace(";", ",").split(",") if t.strip())


def _kinds(text):
    return tuple(t.strip() for t in str(text).split(",") if t.strip())


COMMON = {
    "command": (_S, None), "model": (_I, None), "mu": (_F, None), "q": (_F, None),
    "g": (_F, None), "g_m": (_F, None), "pr": (_F, None), "c2": (_F, None),
    "gamma": (_F, 2.5), "alpha": (_F, 2.5), "out": (_S, None), "threads": (_I, 1),
}

PER_COMMAND = {
    "classify": {},
    "scan": {"window": (_floats, (0.0, 0.3, 0.0, 0.6)), "resolution": (_I, 128),
             "annulus_band": (_F, 0.15)},
    "trace": {"kind": (_S, "svi"), "plane": (_S, "q-mu"), "plane_mu": (_F, None),
              "seed_u": (_floats, None), "seed_v_range": (_floats, None),
              "bounds": (_floats, None), "h0": (_F, 1e-3), "h_min": (_F, 1e-5),
              "h_max": (_F, 1e-2), "max_steps": (_I, 500), "cross_with": (_kinds, None),
              "ring_eps": (_F, 1e-4), "theta_step": (_F, 1e-3), "cr_window": (_floats, None)},
    "region": {"plane": (_S, "q-mu"), "plane_mu": (_F, None), "bounds": (_floats, None),
               "resolution": (_floats, (41, 41))},
    "check-series": {"step_sizes": (_floats, (1e-2, 5e-3, 2.5e-3, 1.25e-3)), "tolerance": (_F, 1e-6)},
    "asymptote": {"kind": (_S, "svi"), "regime": (_S, "small_qg"), "q_values": (_floats, None)},
    "simulate": {"M": (_I, 4), "ly": (_F, None), "dt": (_F, 0.1), "steps": (_I, 1000),
                 "init": (_S, "stripe"), "noise": (_F, 1e-3), "seed": (_I, 0),
                 "record_every": (_I, 10)},
    "measure": {"k": (_F, None), "l": (_F, None), "k_index": (_I, None), "M": (_I, 32), "ly": (_F, None),
                "amplitude": (_F, 1e-6), "t_max": (_F, 200.0), "dt": (_F, 0.05),
                "record_every": (_I, 10)},
    "crossing": {"kinds": (_kinds, ("zigzag", "eckhaus")), "plane": (_S, "q-mu"),
                 "plane_mu": (_F, None), "seed_u": (_floats, None),
                 "seed_v_range": (_floats, None), "bounds": (_floats, None),
                 "h0": (_F, 1e-3), "h_min": (_F, 1e-5), "h_max": (_F, 1e-2),
                 "max_steps": (_I, 500), "ring_eps": (_F, 1e-4), "theta_step": (_F, 1e-3),
                 "cr_window": (_floats, None)},
}

# commands that do not need a full parameter set
NO_PARAMS = {"asymptote"}


def read_config(path):
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[ALIASES.get(key, key)] = val
    return out


def _overrides(tokens):
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for --{key}")
            val = tokens[i + 1]
            i += 2
        key = key.replace("-", "_")
        out[ALIASES.get(key, key)] = val
    return out


def resolve(command, raw):
    """Typed settings for ``command``; rejects unknown keys."""
    schema = dict(COMMON)
    schema.update(PER_COMMAND[command])
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) for {command}: {', '.join(unknown)}")
    cfg = {}
    for key, (parse, default) in schema.items():
        if key in raw and raw[key] not in (None, ""):
            try:
                cfg[key] = parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw[key]!r}") from exc
        else:
            cfg[key] = default
    return cfg


def _need(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ConfigError(f"missing required key '{k}'")


def build_params(cfg) -> ModelParams:
    _need(cfg, "model", "mu", "q")
    if cfg["model"] not in (1, 2):
        raise ConfigError("model must be 1 or 2")
    extra = dict(gamma=cfg["gamma"], alpha=cfg["alpha"])
    if cfg["model"] == 2:
        _need(cfg, "g")
        for k in ("g_m", "pr", "c2"):
            if cfg.get(k) is not None:
                raise ConfigError(f"key '{k}' belongs to model 1")
        return ModelParams.model2(cfg["mu"], cfg["q"], cfg["g"], **extra)
    _need(cfg, "g_m", "pr", "c2")
    if cfg.get("g") is not None:
        raise ConfigError("key 'g' belongs to model 2")
    return ModelParams.model1(cfg["mu"], cfg["q"], cfg["g_m"], cfg["pr"], cfg["c2"], **extra)


def _r(x):
    return repr(float(x))


def _write(cfg, suffix, text):
    if not cfg.get("out"):
        return None
    path = cfg["out"] + suffix
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)
    return path


# -- commands ------------------------------------------------------------------

def cmd_classify(cfg):
    from .region import classify

    p = build_params(cfg)
    c = classify(p)
    print(c.summary())
    _write(cfg, ".json", json.dumps({
        "exists": c.exists, "stable": c.stable,
        "unstable": {k.value: v for k, v in c.unstable.items()},
        "sigma": {k.value: float(v) for k, v in c.sigma.items()}}, indent=1) + "\n")
    return 0


def cmd_scan(cfg):
    from .growth_field import features, scan, to_svg

    p = build_params(cfg)
    if len(cfg["window"]) != 4:
        raise ConfigError("window needs k0, k1, l0, l1")
    fld = scan(p, cfg["window"], cfg["resolution"], threads=cfg["threads"])
    ft = features(fld, p, band=cfg["annulus_band"])
    k, l, s, w = ft.global_max
    print(f"max sigma {_r(s)} at (k, l) = ({_r(k)}, {_r(l)}), omega {_r(w)}; "
          f"positive components {ft.n_positive_components}; annulus {ft.annulus_flag}; "
          f"oscillatory {ft.oscillatory_flag}")
    if cfg.get("out"):
        d = os.path.dirname(cfg["out"])
        if d:
            os.makedirs(d, exist_ok=True)
        fld.to_csv(cfg["out"] + "_field.csv")
        _write(cfg, "_features.json", json.dumps(ft.to_json_dict()) + "\n")
        _write(cfg, ".svg", to_svg(fld))
    return 0


def _plane(cfg):
    from .tracer import Plane

    if cfg["plane"] == "g-qs":
        mu = cfg.get("plane_mu") or cfg.get("mu")
        if mu is None:
            raise ConfigError("missing required key 'plane_mu'")
        return Plane("g-qs", mu)
    return Plane(cfg["plane"])


def _template(cfg):
    # seeds move q and mu; fill placeholders so the template validates
    c = dict(cfg)
    for k in ("mu", "q"):
        if c.get(k) is None:
            c[k] = 0.0 if k == "q" else 1.0
    return build_params(c)


def _opts(cfg):
    from .tracer import LimitOptions

    kw = dict(ring_eps=cfg["ring_eps"], theta_step=cfg["theta_step"])
    if cfg.get("cr_window"):
        kw["cr_window"] = tuple(cfg["cr_window"])
    return LimitOptions(**kw)


def _expand(kind_text):
    kind = InstabilityKind.parse(kind_text)
    if kind_text.strip().lower() == "svi":
        return [InstabilityKind.SVI_I, InstabilityKind.SVI_II]
    return [kind]


def _default_bounds(plane):
    return (1e-3, 0.3, 0.0, 1.0) if plane.name == "q-mu" else (1e-1, 1e5, -1.0, 1.0)


def _seed_range(plane, u, cfg, tpl):
    if cfg.get("seed_v_range"):
        return cfg["seed_v_range"]
    if plane.name == "q-mu":
        return (mu_existence(u) * (1 + 1e-9) + 1e-12, 1.0)
    lim = 2.0 / math.sqrt(plane.mu)
    return (-0.99 * lim, 0.99 * lim)


def _trace_kind(kind, tpl, plane, cfg, opts):
    from .tracer import seed_on_line, trace_both

    bounds = cfg.get("bounds") or _default_bounds(plane)
    seeds = cfg.get("seed_u") or ((0.2, 0.05, 0.01) if plane.name == "q-mu" else (10.0, 1e3))
    last = None
    for u in seeds:
        lo, hi = _seed_range(plane, u, cfg, tpl)
        try:
            su, sv, aux = seed_on_line(kind, tpl, plane, u, lo, hi, n=80, opts=opts)
        except NumericalFailure as exc:
            last = exc
            continue
        return trace_both(kind, tpl, plane.to_display(su, sv), plane, aux=aux, bounds=bounds,
                          h0=cfg["h0"], h_min=cfg["h_min"], h_max=cfg["h_max"],
                          max_steps=cfg["max_steps"], opts=opts)
    raise last or NoCrossing(f"no seed found for {kind.value}")


def _report_curve(c):
    a, b = c.plane.labels
    pts = c.display_points()
    if len(pts):
        print(f"{c.kind.value}: {len(pts)} points, {a} in [{_r(pts[:, 0].min())}, {_r(pts[:, 0].max())}], "
              f"{b} in [{_r(pts[:, 1].min())}, {_r(pts[:, 1].max())}]; stop: {c.stop_reason}")


def _report_crossing(c1, c2):
    from .tracer import find_crossing

    a, b = c1.plane.labels
    try:
        # only genuine intersections; near-touches at the plane edge are not reported
        x = find_crossing(c1, c2, touch_tol=0.0)
    except NoCrossing:
        print(f"crossing {c1.kind.value} x {c2.kind.value}: none")
        return None
    tag = "degenerate" if x.degenerate else ("polished" if x.polished else "unpolished")
    print(f"crossing {c1.kind.value} x {c2.kind.value}: ({a}, {b}) = "
          f"({_r(x.point[0])}, {_r(x.point[1])}) [{tag}]")
    return x


def cmd_trace(cfg):
    plane, tpl, opts = _plane(cfg), _template(cfg), _opts(cfg)
    kinds = _expand(cfg["kind"])
    curves, failures = [], []
    for kind in kinds:
        try:
            curves.append(_trace_kind(kind, tpl, plane, cfg, opts))
        except NumericalFailure as exc:
            failures.append(exc)
            if len(kinds) > 1:
                print(f"{kind.value}: {exc}")
    if not curves:
        raise failures[0]
    for c in curves:
        _report_curve(c)
        _write(cfg, f"_{c.kind.value}.csv", c.to_csv())
        _write(cfg, f"_{c.kind.value}.json", c.to_json() + "\n")
    cross = cfg.get("cross_with")
    if cross is None and kinds[0] in (InstabilityKind.SVI_I, InstabilityKind.SVI_II):
        cross = ("eckhaus",)
    for other in cross or ():
        ok = InstabilityKind.parse(other)
        oc = _trace_kind(ok, tpl, plane, cfg, opts)
        _report_curve(oc)
        _write(cfg, f"_{ok.value}.csv", oc.to_csv())
        for c in curves:
            _report_crossing(c, oc)
    return 0


def cmd_crossing(cfg):
    plane, tpl, opts = _plane(cfg), _template(cfg), _opts(cfg)
    if len(cfg["kinds"]) != 2:
        raise ConfigError("kinds needs exactly two boundary kinds")
    curves = [_trace_kind(InstabilityKind.parse(k), tpl, plane, cfg, opts) for k in cfg["kinds"]]
    for c in curves:
        _report_curve(c)
        _write(cfg, f"_{c.kind.value}.csv", c.to_csv())
    x = _report_crossing(*curves)
    if x is None:
        return 2
    a, b = plane.labels
    _write(cfg, "_crossing.json", json.dumps({a: float(x.point[0]), b: float(x.point[1]),
                                              "polished": x.polished}) + "\n")
    return 0


def cmd_region(cfg):
    from .region import stable_region

    plane, tpl = _plane(cfg), _template(cfg)
    bounds = cfg.get("bounds") or _default_bounds(plane)
    res = tuple(int(r) for r in cfg["resolution"])
    res = res * 2 if len(res) == 1 else res
    reg = stable_region(tpl, plane, bounds, res, threads=cfg["threads"])
    frac = float(reg.mask.mean())
    print(f"stable fraction {_r(frac)} on a {res[0]}x{res[1]} grid")
    for lab, pts in reg.boundaries:
        print(f"boundary bound by {lab}: {len(pts)} vertices")
    _write(cfg, ".csv", reg.to_csv())
    _write(cfg, ".json", json.dumps(reg.to_json_dict()) + "\n")
    return 0


def cmd_check_series(cfg):
    from .series import det_series, mismatch, numeric_series

    p = build_params(cfg)
    closed = det_series(p)
    fitted, cond = numeric_series(p, cfg["step_sizes"])
    mm = mismatch(closed, fitted)
    for name, a, b, m in zip("ABCDE", closed.as_array(), fitted.as_array(), mm):
        print(f"{name}: closed {_r(a)}  fitted {_r(b)}  mismatch {m:.3e}")
    worst = float(np.max(mm))
    print(f"max mismatch {worst:.3e} (stencil condition {cond:.3e})")
    _write(cfg, ".json", json.dumps({"closed": closed.as_dict(), "fitted": fitted.as_dict(),
                                     "max_mismatch": worst}) + "\n")
    return 0 if worst < cfg["tolerance"] else 2


def cmd_asymptote(cfg):
    kind = cfg["kind"].strip().lower()
    qs = cfg.get("q_values") or ((cfg["q"],) if cfg.get("q") is not None else None)
    if qs is None:
        raise ConfigError("missing required key 'q'")
    rows = []
    for q in qs:
        if kind == "svi":
            _need(cfg, "g")
            mu = cl.svi_asymptote(q, cfg["g"], cfg["regime"])
        elif kind == "osv":
            _need(cfg, "g_m")
            mu = cl.osv_asymptote(q, cfg["g_m"])
        elif kind in ("stress-free", "stress_free"):
            mu = cl.stress_free_svi_mu(q)
        elif kind == "eckhaus":
            mu = cl.eckhaus_mu(q)
        elif kind == "zigzag":
            _need(cfg, "g")
            mu = cl.zigzag_mu(q, cfg["g"])
        elif kind == "existence":
            mu = mu_existence(q)
        else:
            raise ConfigError(f"no asymptote for kind {cfg['kind']!r}")
        rows.append((q, mu))
        print(f"q {_r(q)}  mu {_r(mu)}")
    _write(cfg, ".csv", "q,mu\n" + "".join(f"{_r(q)},{_r(m)}\n" for q, m in rows))
    return 0


def cmd_simulate(cfg):
    from . import pde

    p = build_params(cfg)
    grid = pde.make_grid(p, M=cfg["M"], ly=cfg.get("ly"))
    init = cfg["init"]
    if init == "stripe":
        st = pde.stripe_state(p, grid)
    elif init == "zero":
        st = pde.zero_state(p, grid)
    elif init == "noise":
        st = pde.noise_state(p, grid, cfg["noise"], cfg["seed"])
    else:
        raise ConfigError("init must be stripe, zero or noise")
    psi0 = st.psi()
    rows = ["t,max_abs_psi,max_abs_change"]

    def cb(i, s):
        if i % cfg["record_every"] == 0:
            psi = s.psi()
            rows.append(f"{_r(s.t)},{_r(np.max(np.abs(psi)))},{_r(np.max(np.abs(psi - psi0)))}")

    st = pde.run(st, p, cfg["dt"], cfg["steps"], workers=cfg["threads"], callback=cb)
    change = float(np.max(np.abs(st.psi() - psi0)))
    print(f"t {_r(st.t)}  max |psi - psi(0)| {_r(change)}  grid {grid.nx}x{grid.ny}")
    _write(cfg, "_series.csv", "\n".join(rows) + "\n")
    if cfg.get("out"):
        pde.save_snapshot(cfg["out"] + ".snap", st, p)
    return 0


def cmd_measure(cfg):
    from . import pde
    from .stability import growth

    p = build_params(cfg)
    if cfg.get("k_index") is not None:
        # k on the box lattice: multiples of (1+q)/M
        cfg["k"] = cfg["k_index"] * (1.0 + p.q) / cfg["M"]
    _need(cfg, "k", "l")
    m = pde.measure_growth(p, (cfg["k"], cfg["l"]), cfg["amplitude"], cfg["t_max"], cfg["dt"],
                           cfg["M"], cfg.get("ly"), cfg["record_every"], workers=cfg["threads"])
    s, w = growth(p, np.array([cfg["k"]]), np.array([cfg["l"]]))
    rel = abs(m.sigma_fit - s[0]) / max(abs(s[0]), 1e-300)
    print(f"sigma_fit {_r(m.sigma_fit)}  eigenvalue {_r(s[0])}  relative difference {rel:.3e}; "
          f"omega_fit {_r(m.omega_fit)}  eigen-frequency {_r(w[0])}")
    _write(cfg, "_series.csv", m.to_csv())
    return 0


HANDLERS = {
    "classify": cmd_classify, "scan": cmd_scan, "trace": cmd_trace, "region": cmd_region,
    "check-series": cmd_check_series, "asymptote": cmd_asymptote, "simulate": cmd_simulate,
    "measure": cmd_measure, "crossing": cmd_crossing,
}


def parse(argv):
    argv = list(argv)
    if argv and argv[0] in ("-h", "--help"):
        print(__doc__.strip() + "\n\ncommands: " + ", ".join(COMMANDS))
        raise SystemExit(0)
    command = argv.pop(0) if argv and not argv[0].startswith("-") else None
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    rest = _overrides(argv)
    path = rest.pop("config", None)
    raw = read_config(path) if path else {}
    raw.update(rest)
    command = command or raw.get("command")
    if command not in COMMANDS:
        raise ConfigError("no command given (positional or 'command' key)")
    raw.pop("command", None)
    return command, resolve(command, raw)


def main(argv=None):
    try:
        command, cfg = parse(sys.argv[1:] if argv is None else argv)
        return HANDLERS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MfshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
