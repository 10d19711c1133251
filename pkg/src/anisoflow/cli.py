"""``anisoflow`` command line.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable input,
invalid parameters).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decomp import AnisoKernelSpec
from .filters import Algorithm, FilterAlgorithm, anisotropic_filter
from .gauss1d import UnsupportedSigmaError
from .image import (ImageFormatError, read_image, read_raw, write_csv, write_image,
                    write_pgm, write_ppm, write_raw)
from .interp import InterpScheme
from .orientation import (MRParams, OrientationField, TensorParams, angle_histogram,
                          colorize, default_angles, hessian_estimate, mr_estimate,
                          structure_tensor_estimate)
from .segment import NiblackParams, odd_window, segment_pipeline
from . import synth


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# parsing helpers

def _onoff(v: str) -> bool:
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return v == "on"


def _floats(v: str) -> list[float]:
    try:
        return [float(t) for t in v.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {v!r}") from exc


def _seeds(v: str) -> list[int]:
    """``10`` means seeds 0..9; ``3,7`` and ``0-4`` list them explicitly."""
    try:
        if "," not in v and "-" not in v:
            return list(range(int(v)))
        out = []
        for t in v.split(","):
            if "-" in t:
                a, b = t.split("-")
                out += list(range(int(a), int(b) + 1))
            else:
                out.append(int(t))
        return out
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed list {v!r}") from exc


def _range(v: str) -> list[int]:
    """``start:stop:step`` (stop inclusive) or a comma list."""
    try:
        if ":" in v:
            a, b, s = (int(t) for t in v.split(":"))
            return list(range(a, b + 1, s))
        return [int(t) for t in v.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size list {v!r}") from exc


def parse_algo(label: str) -> FilterAlgorithm:
    """Inverse of ``FilterAlgorithm.label``, e.g. ``hybrid+mod-linear``."""
    if label == "oracle":
        return FilterAlgorithm(Algorithm.ORACLE)
    try:
        kind, interp = label.rsplit("-", 1)
        mod = kind.endswith("+mod")
        kind = kind[:-4] if mod else kind
        return FilterAlgorithm(Algorithm(kind), InterpScheme(interp), mod)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"unknown algorithm {label!r}") from exc


def parse_method(token: str) -> synth.Method:
    median = token.endswith("+median")
    if median:
        token = token[: -len("+median")]
    if token in ("tensor", "hessian"):
        return synth.Method(token, None, median)
    if token.startswith("mr:"):
        return synth.Method("mr", parse_algo(token[3:]), median)
    raise argparse.ArgumentTypeError(f"unknown method {token!r}")


def _methods(v: str) -> list:
    return [parse_method(t.strip()) for t in v.split(",") if t.strip()]


def _algo_opts(p):
    p.add_argument("--algo", default="hybrid", choices=[a.value for a in Algorithm])
    p.add_argument("--interp", default="linear", choices=[s.value for s in InterpScheme])
    p.add_argument("--mod", default="off", type=_onoff, metavar="{on,off}")


def _algo_of(a) -> FilterAlgorithm:
    return FilterAlgorithm(Algorithm(a.algo), InterpScheme(a.interp), a.mod)


def _log(quiet):
    if quiet:
        return lambda msg: None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


def _write_report(rep, path):
    write_csv(path, rep.header, rep.rows)


# --------------------------------------------------------------------------
# subcommands

def cmd_filter(a):
    img = read_image(a.input)
    out = anisotropic_filter(img, AnisoKernelSpec(a.sigma1, a.sigma2, a.theta), _algo_of(a),
                             variant=a.coeffs, as_printed=a.decomp_as_printed,
                             boundary=a.boundary)
    write_image(out, a.out)


def _estimate(a, img) -> OrientationField:
    if a.method == "mr":
        if a.sigma2 is None and a.radius is None:
            raise UsageError("MR needs --sigma2 or --radius")
        p = MRParams(a.sigma1, a.sigma2, default_angles(a.angles_step), _algo_of(a),
                     fiber_radius=a.radius)
        return mr_estimate(img, p)
    sigma = a.sigma if a.sigma is not None else a.radius
    if sigma is None:
        raise UsageError(f"{a.method} needs --sigma or --radius")
    if a.method == "tensor":
        return structure_tensor_estimate(img, TensorParams(sigma, a.rho))
    return hessian_estimate(img, sigma)


def cmd_estimate(a):
    img = read_image(a.input)
    f = _estimate(a, img)
    write_raw(np.where(f.valid, f.angle, np.nan), a.out_angle)
    if a.out_response:
        write_raw(f.response, a.out_response)
    if a.out_color:
        write_ppm(colorize(f), a.out_color)
    if a.histogram:
        bins, counts = angle_histogram(f, np.ones(f.shape, dtype=bool), a.bin_width)
        write_csv(a.histogram, ["bin_start", "count"],
                  [[float(b), int(c)] for b, c in zip(bins, counts)])


def cmd_segment(a):
    img = read_image(a.input)
    p = MRParams(a.sigma1, a.sigma2, default_angles(a.angles_step), _algo_of(a))
    window = a.niblack_window if a.niblack_window else odd_window(a.sigma2)
    mask = segment_pipeline(img, p, NiblackParams(window, a.niblack_k), a.erode,
                            a.min_size, a.connectivity, a.global_threshold)
    write_pgm(mask.astype(np.float64), a.out_mask)


def cmd_colorize(a):
    ang = read_raw(a.angle)
    resp = read_raw(a.response) if a.response else np.ones_like(ang)
    if resp.shape != ang.shape:
        raise ValueError("angle and response images differ in size")
    valid = np.isfinite(ang)
    f = OrientationField(np.where(valid, ang, 0.0), resp, valid)
    write_ppm(colorize(f), a.out)


def _parse_specs(v: str):
    try:
        return [tuple(float(x) for x in t.split(":")) for t in v.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad spec list {v!r}") from exc


def cmd_bench_kernel(a):
    specs = synth.REFERENCE_SPECS if a.table2 or not a.specs else a.specs
    algos = [parse_algo(t) for t in a.algos.split(",")] if a.algos else synth.REFERENCE_ALGOS
    table, curves = synth.kernel_accuracy_experiment(specs, algos, a.theta_step, a.N)
    _write_report(table, a.out)
    if a.curve:
        _write_report(curves, a.curve)


def cmd_bench_throughput(a):
    os.environ["ANISOFLOW_WORKERS"] = "1"
    algos = [parse_algo(t) for t in a.algos.split(",")] if a.algos else \
        [parse_algo(t) for t in ("linebuffer-linear", "hybrid-linear", "hybrid-cubic")]
    rep = synth.throughput_benchmark(a.sizes, a.reps, a.trim, algos, a.theta,
                                     log=_log(a.quiet))
    _write_report(rep, a.out)


def _synthetic(a, methods, out, per_theta=None, summary=None):
    cfg = synth.ContrastConfig(seeds=a.seeds, contrasts=a.contrasts, widths=a.w,
                               theta_step=a.theta_step, methods=methods,
                               frequency_scaled=not a.verbatim_eq)
    per, mx = synth.run_contrast_experiment(cfg, _log(a.quiet))
    _write_report(mx, out)
    if per_theta:
        _write_report(per, per_theta)
    if summary:
        rows = mx.summary(["method", "w", "c"], "max_mae_deg")
        write_csv(summary, ["method", "w", "c", "mean_max_mae_deg", "std_max_mae_deg", "n_seeds"],
                  rows)


def cmd_bench_synthetic(a):
    methods = a.methods
    if a.median:
        methods = [synth.Method(m.kind, m.algo, True) for m in methods]
    _synthetic(a, methods, a.out, a.per_theta, a.summary)


def cmd_reproduce(a):
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    desk = a.desk_scale
    log = _log(a.quiet)
    if a.section == "table2":
        table, curves = synth.kernel_accuracy_experiment(theta_step=5.0 if desk else 1.0)
        _write_report(table, out / "t2.csv")
        _write_report(curves, out / "t2_curves.csv")
    elif a.section == "fig2a":
        _, curves = synth.kernel_accuracy_experiment([(25.0, 2.0)],
                                                     theta_step=5.0 if desk else 1.0)
        _write_report(curves, out / "fig2a.csv")
    elif a.section == "fig3b":
        os.environ["ANISOFLOW_WORKERS"] = "1"
        sizes = list(range(100, 2001, 380)) if desk else list(range(100, 4991, 30))
        rep = synth.throughput_benchmark(sizes, 10 if desk else 50, log=log)
        _write_report(rep, out / "fig3b.csv")
    else:
        ns = argparse.Namespace(
            seeds=list(range(10 if desk else 50)), contrasts=list(synth.DEFAULT_CONTRASTS),
            w=[1.0, 2.0], theta_step=5.0 if desk else 1.0, verbatim_eq=False, quiet=a.quiet)
        mr = [m for m in synth.DEFAULT_METHODS if m.kind == "mr"]
        if a.section == "fig4":
            methods = mr + [synth.Method("tensor")]
        else:
            methods = [synth.Method(m.kind, m.algo, True) for m in mr] + [synth.Method("hessian")]
        _synthetic(ns, methods, out / f"{a.section}.csv", None, out / f"{a.section}_summary.csv")


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="anisoflow", description="Anisotropic Gaussian filtering and "
                "fibre direction estimation.")
    p.add_argument("--version", action="version", version=f"anisoflow {__version__}")
    p.add_argument("--help-json", action="store_true",
                   help="print the option table as JSON and exit")
    p.add_argument("--workers", type=int, help="worker threads (default: ANISOFLOW_WORKERS or CPUs)")
    p.add_argument("--quiet", action="store_true", help="no progress messages")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    f = sub.add_parser("filter", help="filter one image")
    f.add_argument("--sigma1", type=float, required=True)
    f.add_argument("--sigma2", type=float, required=True)
    f.add_argument("--theta", type=float, required=True)
    _algo_opts(f)
    f.add_argument("--coeffs", default="2002", choices=["1995", "2002", "2002-exact"],
                   help="recursive coefficient set")
    f.add_argument("--boundary", default="nearest", choices=["nearest", "line"],
                   help="2D edge extension, or per-line extension without padding")
    f.add_argument("--decomp-as-printed", action="store_true",
                   help="alternative axis-sigma formula, for comparison only")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_filter)

    e = sub.add_parser("estimate", help="per-pixel fibre direction")
    e.add_argument("--method", default="mr", choices=["mr", "tensor", "hessian"])
    e.add_argument("--sigma1", type=float, default=synth.MR_SIGMA1)
    e.add_argument("--sigma2", type=float)
    e.add_argument("--radius", type=float, help="fibre radius r in pixels")
    e.add_argument("--sigma", type=float, help="tensor/Hessian smoothing (default: radius)")
    e.add_argument("--rho", type=float, default=synth.RHO)
    _algo_opts(e)
    e.add_argument("--angles-step", type=float, default=1.0)
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out-angle", required=True)
    e.add_argument("--out-response")
    e.add_argument("--out-color")
    e.add_argument("--histogram")
    e.add_argument("--bin-width", type=float, default=1.0)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("segment", help="fibre mask from the maximal response")
    s.add_argument("--sigma1", type=float, default=synth.MR_SIGMA1)
    s.add_argument("--sigma2", type=float, required=True)
    _algo_opts(s)
    s.add_argument("--angles-step", type=float, default=1.0)
    s.add_argument("--niblack-k", type=float, default=0.6)
    s.add_argument("--niblack-window", type=int, help="default: 4*sigma2, odd")
    s.add_argument("--global-threshold", type=float, metavar="T",
                   help="threshold the normalised response at T instead of Niblack")
    s.add_argument("--min-size", type=int, default=100)
    s.add_argument("--erode", type=int, default=2)
    s.add_argument("--connectivity", type=int, default=8, choices=[4, 8])
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out-mask", required=True)
    s.set_defaults(func=cmd_segment)

    c = sub.add_parser("colorize", help="render an angle map as RGB")
    c.add_argument("--angle", required=True, help="float-raw angle map (NaN = invalid)")
    c.add_argument("--response", help="float-raw response map")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_colorize)

    b = sub.add_parser("bench", help="benchmarks")
    bsub = b.add_subparsers(dest="bench", parser_class=_Parser)
    k = bsub.add_parser("kernel-accuracy", help="l2 kernel error over theta")
    k.add_argument("--table2", action="store_true", help="all 13 reference specs")
    k.add_argument("--specs", type=_parse_specs, help="s1:s2,s1:s2,...")
    k.add_argument("--algos", help="comma list of algorithm labels")
    k.add_argument("--theta-step", type=float, default=1.0)
    k.add_argument("--N", type=int, default=512)
    k.add_argument("--curve", help="also write per-theta errors")
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_bench_kernel)

    t = bsub.add_parser("throughput", help="megapixels per second")
    t.add_argument("--sizes", type=_range, default=_range("100:4990:30"))
    t.add_argument("--reps", type=int, default=50)
    t.add_argument("--trim", type=float, default=0.10)
    t.add_argument("--theta", type=float, default=30.0)
    t.add_argument("--algos", help="comma list of algorithm labels")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_bench_throughput)

    y = bsub.add_parser("synthetic", help="MAE on synthetic fibre images")
    y.add_argument("--config", help="key=value file; flags override")
    y.add_argument("--seeds", type=_seeds, default=_seeds("10"))
    y.add_argument("--contrasts", type=_floats, default=list(synth.DEFAULT_CONTRASTS))
    y.add_argument("--w", type=_floats, default=[1.0, 2.0])
    y.add_argument("--theta-step", type=float, default=5.0)
    y.add_argument("--methods", type=_methods, default=list(synth.DEFAULT_METHODS),
                   help="comma list: mr:<algo label>, tensor, hessian; suffix +median")
    y.add_argument("--median", type=_onoff, default=False, metavar="{on,off}")
    y.add_argument("--verbatim-eq", action="store_true",
                   help="unscaled sinusoid (period independent of w)")
    y.add_argument("--per-theta")
    y.add_argument("--summary")
    y.add_argument("--out", required=True)
    y.set_defaults(func=cmd_bench_synthetic)

    r = sub.add_parser("reproduce", help="rerun a published experiment")
    r.add_argument("section", choices=["table2", "fig2a", "fig3b", "fig4", "fig6"])
    r.add_argument("--desk-scale", action="store_true")
    r.add_argument("--out-dir", default=".")
    r.set_defaults(func=cmd_reproduce)

    # global flags are also accepted after the subcommand
    for leaf in (f, e, s, c, k, t, y, r):
        leaf.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                          help=argparse.SUPPRESS)
        leaf.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                          help=argparse.SUPPRESS)
    return p


def _options_json(p: argparse.ArgumentParser):
    def walk(parser):
        d = {"options": [], "subcommands": {}}
        for act in parser._actions:
            if isinstance(act, argparse._SubParsersAction):
                for name, sp in act.choices.items():
                    d["subcommands"][name] = walk(sp)
            elif act.option_strings:
                d["options"].append({
                    "flags": act.option_strings,
                    "required": act.required,
                    "choices": list(act.choices) if act.choices else None,
                    "help": act.help,
                })
        return d
    return walk(p)


def _read_config(path) -> dict:
    out = {}
    for ln in Path(path).read_text().splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise UsageError(f"config line without '=': {ln!r}")
        key, val = (t.strip() for t in ln.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = val
    return out


def _apply_config(p, argv):
    """Install config-file values as defaults of ``bench synthetic``."""
    if "--config" not in argv:
        return
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return
    cfg = _read_config(argv[i + 1])
    sp = p._subparsers._group_actions[0].choices["bench"]
    ysp = sp._subparsers._group_actions[0].choices["synthetic"]
    dests = {a.dest for a in ysp._actions}
    unknown = set(cfg) - dests
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for act in ysp._actions:
        if act.dest in cfg:
            act.default = cfg[act.dest]
            act.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    p = build_parser()
    try:
        _apply_config(p, argv)
    except (UsageError, OSError) as exc:
        print(f"anisoflow: error: {exc}", file=sys.stderr)
        return 1
    try:
        a = p.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if a.help_json:
        print(json.dumps(_options_json(p), indent=1))
        return 0
    if a.workers is not None:
        if a.workers < 1:
            print("anisoflow: error: --workers must be >= 1", file=sys.stderr)
            return 1
        os.environ["ANISOFLOW_WORKERS"] = str(a.workers)
    if not hasattr(a, "func"):
        p.print_usage(sys.stderr)
        return 1
    try:
        a.func(a)
    except UsageError as exc:
        print(f"anisoflow: error: {exc}", file=sys.stderr)
        return 1
    except (ImageFormatError, UnsupportedSigmaError, ValueError, OSError, KeyError) as exc:
        print(f"anisoflow: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
