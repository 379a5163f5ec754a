"""Command-line front end.

Subcommands:
  expand    one parameter point, JSON dump of the computed orders
  sweep     CSV over a parameter grid, with a rendered figure alongside
  ep-scan   JSON-lines exceptional-point reports over a grid
  oracle    asymptotics against the direct integrator at chosen eps
  dimer-ep  closed-form dimer classification, cross-checked by the detector

Exit codes: 0 success, 2 configuration error, 3 fatal numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .core import (
    expand_inductive,
    first_order_closed,
    fold_constant_order,
    near_degenerate_pairs,
)
from .errors import ConfigParseError, FloqexError
from .folding import fold_complex
from .fourier import ScalarFourierSeries
from .models import (
    CapacitanceMatrix,
    DimerParams,
    OscillatorParams,
    build_dimer,
    build_hill_system,
    build_oscillator,
    classify_dimer_ep,
    classify_oscillator_ep,
)
from .oracle import (
    compare_exponents,
    exponents_from_monodromy,
    integrate_monodromy,
    liouville_residual,
    residual_slope,
)
from .spectral import detect_first_order_ep, exponent_asymptotics

FLOAT_FMT = "%.12g"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT % float(x)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc


def _period_from(params: dict) -> float:
    if "omega" in params and ("period" in params or "T" in params):
        raise ConfigParseError("give either omega or period, not both")
    if "omega" in params:
        return 2.0 * math.pi / float(params["omega"])
    if "period" in params:
        return float(params["period"])
    if "T" in params:
        return float(params["T"])
    raise ConfigParseError("model params need omega or period")


def _series_from(entries, period: float) -> ScalarFourierSeries:
    if entries is None:
        return ScalarFourierSeries.zero(period)
    return ScalarFourierSeries.from_json(period, entries)


def _c12_from(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(float(value[0]), float(value[1]))
    return complex(value)


OSC_PARAMS = ("c", "k", "a", "b", "phi", "omega", "period")
DIMER_PARAMS = ("c11", "c22", "c12_re", "c12_im", "delta", "vol", "omega", "period")


class ModelConfig:
    """A parsed model description that can be rebuilt with overrides."""

    def __init__(self, config: dict):
        if not isinstance(config, dict) or "model" not in config:
            raise ConfigParseError("config must be an object with a 'model' key")
        self.kind = config["model"]
        if self.kind not in ("oscillator", "dimer"):
            raise ConfigParseError(f"unknown model '{self.kind}'")
        self.raw = config
        self.channels = config.get("channels", "both")
        self.build({})  # validate now

    def param_names(self):
        return OSC_PARAMS if self.kind == "oscillator" else DIMER_PARAMS

    def build(self, overrides: dict):
        params = dict(self.raw.get("params", {}))
        for name, value in overrides.items():
            if name not in self.param_names():
                raise ConfigParseError(
                    f"'{name}' is not a parameter of the {self.kind} model"
                )
            if name == "omega":
                params.pop("period", None)
                params.pop("T", None)
            if name in ("period", "T"):
                params.pop("omega", None)
            params[name] = value
        period = _period_from(params)
        if self.kind == "oscillator":
            try:
                p = OscillatorParams(
                    c=float(params["c"]),
                    k=float(params["k"]),
                    a=int(params.get("a", 1)),
                    b=int(params.get("b", 1)),
                    phi=float(params.get("phi", 0.0)),
                    period=period,
                    legacy_coupling_sign=bool(params.get("legacy_coupling_sign", False)),
                )
            except KeyError as exc:
                raise ConfigParseError(f"oscillator params missing {exc}") from exc
            except ValueError as exc:
                raise ConfigParseError(str(exc)) from exc
            return p, lambda pp=p: build_oscillator(pp)
        try:
            c12 = _c12_from(params.get("c12", 0.0))
            if "c12_re" in params or "c12_im" in params:
                c12 = complex(float(params.get("c12_re", c12.real)),
                              float(params.get("c12_im", c12.imag)))
            cap = CapacitanceMatrix(float(params["c11"]), float(params["c22"]), c12)
            series = self.raw.get("series", {})
            p = DimerParams(
                cap=cap,
                delta=float(params["delta"]),
                vol=float(params.get("vol", 1.0)),
                eta1=_series_from(series.get("eta1"), period),
                eta2=_series_from(series.get("eta2"), period),
                gamma1=_series_from(series.get("gamma1"), period),
                gamma2=_series_from(series.get("gamma2"), period),
                period=period,
                legacy_potential_scale=bool(params.get("legacy_potential_scale", False)),
                legacy_a2_volume=bool(params.get("legacy_a2_volume", False)),
            )
        except KeyError as exc:
            raise ConfigParseError(f"dimer params missing {exc}") from exc
        except ValueError as exc:
            raise ConfigParseError(str(exc)) from exc
        channels = self.channels
        return p, lambda pp=p: build_dimer(pp, channels)


def _sweep_values(spec: dict, model: "ModelConfig"):
    try:
        param = spec["param"]
        start = float(spec["start"])
        stop = float(spec["stop"])
        count = int(spec["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParseError(f"bad sweep spec: {exc}") from exc
    if count < 2:
        raise ConfigParseError("sweep count must be >= 2")
    for name in [param] + list(spec.get("link", [])):
        if name not in model.param_names():
            raise ConfigParseError(
                f"'{name}' is not a parameter of the {model.kind} model"
            )
    return param, np.linspace(start, stop, count)


def _sweep_columns(dim: int, outputs, eps_list):
    cols = ["param", "err", "multiple"]
    if "f0" in outputs:
        for i in range(dim):
            cols += [f"f0_{i + 1}_re", f"f0_{i + 1}_im"]
    if "folding" in outputs:
        cols += [f"n_{i + 1}" for i in range(dim)]
    if "f1" in outputs:
        for i in range(dim):
            for j in range(dim):
                cols += [f"f1_{i + 1}{j + 1}_re", f"f1_{i + 1}{j + 1}_im"]
    if "lambda2" in outputs:
        for i in range(dim):
            cols += [f"lam1_{i + 1}_re", f"lam1_{i + 1}_im"]
        for i in range(dim):
            cols += [f"lam2_{i + 1}_re", f"lam2_{i + 1}_im"]
    if "ep" in outputs:
        cols += ["ep", "ep_pairs"]
    if "oracle" in outputs:
        cols += [f"oracle_resid_{eps:g}" for eps in eps_list]
    return cols


def _sweep_row(model: ModelConfig, param: str, value: float, linked, outputs,
               tol_fold, eps_list, steps, order):
    overrides = {param: float(value)}
    for name in linked:
        overrides[name] = float(value)
    row = {"param": value, "err": "", "multiple": 0}
    try:
        p, build = model.build(overrides)
        family = build()
        dim = family.dim
        folding = fold_constant_order(family.a0, family.period, tol_fold)
        flag_tol = folding.tol
        multiple = bool(folding.multiple_classes()) or bool(
            near_degenerate_pairs(folding, flag_tol)
        )
        row["multiple"] = int(multiple)
        if "f0" in outputs:
            for i in range(dim):
                row[f"f0_{i + 1}_re"] = folding.f0[i].real
                row[f"f0_{i + 1}_im"] = folding.f0[i].imag
        if "folding" in outputs:
            for i in range(dim):
                row[f"n_{i + 1}"] = int(folding.folding_numbers[i])
        if "f1" in outputs:
            f1, _ = first_order_closed(family, folding)
            for i in range(dim):
                for j in range(dim):
                    row[f"f1_{i + 1}{j + 1}_re"] = f1[i, j].real
                    row[f"f1_{i + 1}{j + 1}_im"] = f1[i, j].imag
        expansion = None
        if "lambda2" in outputs or "oracle" in outputs:
            use_order = min(order, family.max_order)
            expansion = expand_inductive(family, use_order, folding=folding)
        if "lambda2" in outputs:
            asym = exponent_asymptotics(expansion, tol=folding.tol)
            for e in asym:
                row[f"lam1_{e.index + 1}_re"] = complex(e.lambda1).real
                row[f"lam1_{e.index + 1}_im"] = complex(e.lambda1).imag
                lam2 = e.lambda2 if e.lambda2 is not None else float("nan")
                row[f"lam2_{e.index + 1}_re"] = complex(lam2).real
                row[f"lam2_{e.index + 1}_im"] = complex(lam2).imag
        if "ep" in outputs:
            reports = detect_first_order_ep(family, folding)
            fired = [r for r in reports if r.verdict]
            row["ep"] = int(bool(fired))
            row["ep_pairs"] = ";".join(f"{r.pair[0] + 1}-{r.pair[1] + 1}" for r in fired)
        if "oracle" in outputs:
            for eps in eps_list:
                mono = integrate_monodromy(family.evaluator(eps), family.period, steps)
                orc = exponents_from_monodromy(mono)
                asym_vals = [
                    fold_complex(z, family.period)[0] for z in expansion.eigenvalues(eps)
                ]
                match = compare_exponents(asym_vals, orc, family.period)
                row[f"oracle_resid_{eps:g}"] = match.max_residual
    except FloqexError as exc:
        row["err"] = type(exc).__name__
    return row


def cmd_sweep(args) -> int:
    spec = _load_json(args.config)
    model = ModelConfig(spec.get("model") if isinstance(spec.get("model"), dict) else spec)
    sweep_spec = spec.get("sweep")
    if sweep_spec is None:
        raise ConfigParseError("sweep config needs a 'sweep' object")
    param, values = _sweep_values(sweep_spec, model)
    linked = sweep_spec.get("link", [])
    outputs = spec.get("outputs", ["f0", "folding"])
    eps_list = [float(e) for e in args.eps] if args.eps else [0.05]
    dim = 2 if model.kind == "oscillator" else 4
    cols = _sweep_columns(dim, outputs, eps_list)

    def work(v):
        return _sweep_row(model, param, v, linked, outputs, args.tol_fold,
                          eps_list, args.steps, args.order)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(work, values))
    else:
        rows = [work(v) for v in values]

    out_path = args.out or "sweep.csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow(
                [row.get(c, float("nan")) if c in ("err", "ep_pairs") else _fmt(row.get(c, float("nan")))
                 for c in cols]
            )
    sys.stderr.write(f"wrote {len(rows)} rows to {out_path}\n")

    if not args.no_plot:
        from .plotting import render_sweep_figure

        numeric = {}
        for c in cols:
            if c in ("err", "ep_pairs"):
                continue
            numeric[c] = np.array(
                [float(row.get(c, float("nan"))) for row in rows], dtype=float
            )
        fig_path = out_path.rsplit(".", 1)[0] + ".png"
        render_sweep_figure(param, values, numeric, dim, outputs, fig_path,
                            title=f"{model.kind} sweep over {param}")
        sys.stderr.write(f"wrote figure {fig_path}\n")
    return 0


def cmd_expand(args) -> int:
    config = _load_json(args.config)
    model = ModelConfig(config)
    p, build = model.build({})
    family = build()
    order = min(args.order, family.max_order) if not args.pad else args.order
    expansion = expand_inductive(family, order, pad=args.pad, tol_fold=args.tol_fold)
    payload = expansion.to_json()
    payload["model"] = model.kind
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_ep_scan(args) -> int:
    spec = _load_json(args.config)
    model = ModelConfig(spec.get("model") if isinstance(spec.get("model"), dict) else spec)
    sweep_spec = spec.get("sweep")
    if sweep_spec is None:
        raise ConfigParseError("ep-scan config needs a 'sweep' object")
    param, values = _sweep_values(sweep_spec, model)
    linked = sweep_spec.get("link", [])
    lines = []
    for v in values:
        record = {"param": float(v), "err": None, "reports": []}
        try:
            overrides = {param: float(v), **{k: float(v) for k in linked}}
            p, build = model.build(overrides)
            family = build()
            folding = fold_constant_order(family.a0, family.period, args.tol_fold)
            record["reports"] = [r.to_json() for r in detect_first_order_ep(family, folding)]
        except FloqexError as exc:
            record["err"] = type(exc).__name__
        lines.append(json.dumps(record))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_oracle(args) -> int:
    config = _load_json(args.config)
    model = ModelConfig(config)
    p, build = model.build({})
    family = build()
    order = min(args.order, family.max_order)
    expansion = expand_inductive(family, order, tol_fold=args.tol_fold)
    eps_list = [float(e) for e in args.eps] if args.eps else [0.08, 0.04, 0.02]
    out = {
        "model": model.kind,
        "order": order,
        "eps": eps_list,
        "family_residual": [],
        "richardson": [],
        "liouville": [],
    }
    hill = model.kind == "dimer"
    if hill:
        out["hill_residual"] = []
    for eps in eps_list:
        mono = integrate_monodromy(family.evaluator(eps), family.period, args.steps)
        orc = exponents_from_monodromy(mono)
        asym = [fold_complex(z, family.period)[0] for z in expansion.eigenvalues(eps)]
        match = compare_exponents(asym, orc, family.period)
        out["family_residual"].append(match.max_residual)
        out["richardson"].append(mono.richardson_error_estimate)
        out["liouville"].append(
            liouville_residual(mono, family.trace_constant(eps) * family.period)
        )
        if hill:
            hs = build_hill_system(p, eps)
            mono_h = integrate_monodromy(hs.first_order_evaluator(), p.period, args.steps)
            orc_h = exponents_from_monodromy(mono_h)
            match_h = compare_exponents(asym, orc_h, family.period)
            out["hill_residual"].append(match_h.max_residual)
    if len(eps_list) >= 2:
        out["slope"] = residual_slope(eps_list, out["family_residual"])
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_dimer_ep(args) -> int:
    config = _load_json(args.config)
    model = ModelConfig(config)
    if model.kind != "dimer":
        raise ConfigParseError("dimer-ep needs a dimer config")
    p, build = model.build({})
    cls = classify_dimer_ep(p, model.channels, n_max=args.n_max)
    family = build()
    folding = fold_constant_order(family.a0, family.period, args.tol_fold)
    try:
        reports = detect_first_order_ep(family, folding)
        detector = any(r.verdict for r in reports)
        detector_reports = [r.to_json() for r in reports]
    except FloqexError as exc:
        detector = None
        detector_reports = [{"err": type(exc).__name__}]
    payload = {
        "verdict": cls.verdict,
        "channels": cls.channels,
        "case": cls.case,
        "n": cls.n,
        "c12_zero": cls.c12_zero,
        "ratio_reference": cls.ratio_reference,
        "exclusion_near": cls.exclusion_near,
        "notes": cls.notes,
        "pairs": [
            {
                "pair": [pv.pair[0], pv.pair[1]],
                "n": pv.resonant_frequency,
                "verdict": pv.verdict,
                "vanishing": pv.vanishing,
            }
            for pv in cls.pairs
        ],
        "admissible_omegas": cls.admissible_omegas,
        "detector_verdict": detector,
        "detector_agrees": (detector == cls.verdict) if detector is not None else None,
        "detector_reports": detector_reports,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_oscillator_ep(args) -> int:
    config = _load_json(args.config)
    model = ModelConfig(config)
    if model.kind != "oscillator":
        raise ConfigParseError("oscillator-ep needs an oscillator config")
    p, build = model.build({})
    cls = classify_oscillator_ep(p)
    payload = {
        "verdict": cls.verdict,
        "phases": [[z.real, z.imag] if z is not None else None for z in cls.phases],
        "phases_real": cls.phases_real,
        "k_unit": cls.k_unit,
        "c_in_range": cls.c_in_range,
        "both_entries_vanish": cls.both_entries_vanish,
        "matched_phase": cls.matched_phase,
        "note": cls.note,
    }
    print(json.dumps(payload, indent=2))
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floqex",
        description="Asymptotic Floquet exponent expansions, exceptional-point "
        "detection, and a direct-integration oracle.",
    )
    parser.add_argument("--version", action="version", version=f"floqex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="path to a JSON config")
        sp.add_argument("--order", type=int, default=2, choices=(0, 1, 2),
                        help="expansion order (default 2)")
        sp.add_argument("--eps", nargs="*", default=None,
                        help="perturbation sizes, e.g. --eps 0.08 0.04 0.02")
        sp.add_argument("--steps", type=int, default=4096,
                        help="integrator steps per period (default 4096)")
        sp.add_argument("--out", default=None, help="output path")
        sp.add_argument("--threads", type=int, default=1, help="worker threads")
        sp.add_argument("--tol-fold", dest="tol_fold", type=float, default=None,
                        help="fold/class tolerance override")

    sp = sub.add_parser("expand", help="expansion at one parameter point (JSON)")
    common(sp)
    sp.add_argument("--pad", action="store_true",
                    help="treat missing higher orders as zero")
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("sweep", help="parameter sweep (CSV + figure)")
    common(sp)
    sp.add_argument("--no-plot", action="store_true", help="skip the figure")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("ep-scan", help="exceptional-point reports over a grid (JSON lines)")
    common(sp)
    sp.set_defaults(func=cmd_ep_scan)

    sp = sub.add_parser("oracle", help="asymptotics against the integrator (JSON)")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("dimer-ep", help="closed-form dimer classification (JSON)")
    common(sp)
    sp.add_argument("--n-max", dest="n_max", type=int, default=8,
                    help="largest fold index searched (default 8)")
    sp.set_defaults(func=cmd_dimer_ep)

    sp = sub.add_parser("oscillator-ep", help="closed-form oscillator classification (JSON)")
    common(sp)
    sp.set_defaults(func=cmd_oscillator_ep)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigParseError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except FloqexError as exc:
        sys.stderr.write(f"numerical error: {type(exc).__name__}: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
