"""Command-line interface: estimate, coverage, context, verify.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .bandwidth import estimate_IL, pilot_bandwidth
from .coverage import SimConfig, emit_table, plugin_h, run_coverage
from .densities import MixtureDensity, density_functionals, marron_wand
from .edgeworth import build_context, cornish_fisher_quantile, norm_quantile
from .kernels import (gaussian_kernel, hermite_order_kernel, kernel_constants,
                      kernel_moment)
from .statistics import kde, variance_estimate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="kdeplugin", description=__doc__)
    sub = p.add_subparsers(dest="command")

    est = sub.add_parser("estimate", help="density estimate from a data file")
    est.add_argument("--data", required=True, help="one value per line; # comments")
    est.add_argument("--x", type=float, required=True, nargs="+")
    est.add_argument("--alpha", type=float, default=0.05)
    est.add_argument("--variant", default="ustat",
                     choices=("ustat", "convo", "squared"))

    cov = sub.add_parser("coverage", help="run the Monte Carlo coverage study")
    cov.add_argument("--config", help="flat key = value configuration file")
    cov.add_argument("--out", required=True, help="output directory")
    cov.add_argument("--model", type=int, choices=(1, 2))
    cov.add_argument("--x", type=float, nargs="+")
    cov.add_argument("--n", type=int, nargs="+")
    cov.add_argument("--reps", type=int)
    cov.add_argument("--alpha", type=float)
    cov.add_argument("--seed", type=int)
    cov.add_argument("--variant", choices=("ustat", "convo", "squared"))
    cov.add_argument("--methods")
    cov.add_argument("--format", choices=("csv", "markdown", "both"),
                     default="both")
    cov.add_argument("--threads", type=int)
    cov.add_argument("--hhat", choices=("published", "formula"))

    ctx = sub.add_parser("context", help="dump expansion-context constants")
    ctx.add_argument("--model", type=int, choices=(1, 2), required=True)
    ctx.add_argument("--x", type=float, required=True)
    ctx.add_argument("--n", type=int, required=True)
    ctx.add_argument("--variant", default="ustat", choices=("ustat", "convo"))

    sub.add_parser("verify", help="run the deterministic oracle suite")
    return p


def read_data_file(path: str) -> np.ndarray:
    values = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                values.append(float(line))
    return np.asarray(values, dtype=float)


def parse_config(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"bad config line: {line!r}")
            out[key.strip()] = value.strip()
    return out


def _config_to_simconfig(kv: dict, args) -> SimConfig:
    def geta(name, key, cast, default=None):
        v = getattr(args, name, None)
        if v is not None:
            return v
        if key in kv:
            return cast(kv[key])
        return default

    def floats(s):
        return tuple(float(t) for t in s.replace(",", " ").split())

    def ints(s):
        return tuple(int(t) for t in s.replace(",", " ").split())

    model = geta("model", "model", int, 1)
    if "mixture" in kv:  # inline (weight:mean:sd) triples, comma separated
        model = tuple(tuple(float(p) for p in comp.split(":"))
                      for comp in kv["mixture"].split(","))
    methods = geta("methods", "methods", str, None)
    cfg = SimConfig(
        model=model,
        x_points=tuple(args.x) if args.x else floats(kv.get("x", "0")),
        n_values=tuple(args.n) if args.n else ints(kv.get("n", "100")),
        replications=geta("reps", "reps", int, 2000),
        alpha=geta("alpha", "alpha", float, 0.05),
        L=int(kv.get("L", 2)),
        Lp=int(kv.get("Lp", 6)),
        il_variant=geta("variant", "variant", str, "ustat"),
        seed=geta("seed", "seed", int, 0),
        methods=tuple(methods.replace(",", " ").split()) if methods
        else ("normal", "hall", "main", "pilot"),
        hhat=geta("hhat", "hhat", str, "published"),
        threads=geta("threads", "threads", int, 1),
        cache_dir=kv.get("cache_dir"),
    )
    return cfg


def cmd_estimate(args) -> int:
    data = read_data_file(args.data)
    if data.size < 2:
        print("estimate: need at least two observations", file=sys.stderr)
        return 2
    kernel = gaussian_kernel()
    pilot = hermite_order_kernel(6)
    consts = kernel_constants(kernel)
    n = data.size
    # normal-reference pilot bandwidth from the sample moments
    ref = MixtureDensity(((1.0, float(np.mean(data)),
                           float(max(np.std(data, ddof=1), 1e-12))),))
    dens = density_functionals(ref, 2, 6)
    b = pilot_bandwidth(dens, pilot, 2, 6, n,
                        "ustat" if args.variant == "ustat" else "convo")
    I_hat = estimate_IL(data, pilot, 2, b, args.variant)
    h_hat = plugin_h(I_hat, consts, 2, n, "formula")
    z = norm_quantile(1.0 - args.alpha / 2.0)
    for x in args.x:
        f_hat = kde(data, kernel, h_hat, x)
        se = np.sqrt(variance_estimate(data, kernel, h_hat, x) / (n * h_hat))
        print(f"x={x:g} f_hat={f_hat:.6f} h_hat={h_hat:.6f} b={b:.6f} "
              f"ci=[{f_hat - z * se:.6f}, {f_hat + z * se:.6f}]")
    return 0


def cmd_coverage(args) -> int:
    kv = parse_config(args.config) if args.config else {}
    cfg = _config_to_simconfig(kv, args)
    os.makedirs(args.out, exist_ok=True)
    failures = 0
    for x in cfg.x_points:
        sub = SimConfig(**{**cfg.__dict__, "x_points": (x,)})
        table = run_coverage(sub)
        for (n, xv, message) in table.errors:
            print(f"coverage: cell (n={n}, x={xv}) failed: {message}",
                  file=sys.stderr)
            failures += 1
        stem = f"model{cfg.model_label()}_x{x:g}".replace("-", "m")
        if args.format in ("csv", "both"):
            with open(os.path.join(args.out, stem + ".csv"), "w") as fh:
                fh.write(emit_table(table, "csv"))
        if args.format in ("markdown", "both"):
            with open(os.path.join(args.out, stem + ".md"), "w") as fh:
                fh.write(emit_table(table, "markdown"))
    return 2 if failures else 0


def cmd_context(args) -> int:
    model = marron_wand(args.model)
    kernel = gaussian_kernel()
    pilot = hermite_order_kernel(6)
    ctx = build_context(model, kernel, pilot, 2, 6, args.x, args.n,
                        il_variant=args.variant)
    for name in ("h0", "b", "I_L", "f_x", "mu20", "mu30", "mu40", "mu11",
                 "mu21", "mu02", "xi11", "rho11", "omega111", "psi111",
                 "delta", "C_PI", "script_L"):
        label = "b0" if name == "b" else name
        print(f"{label}={getattr(ctx, name):.7g}")
    for l, cg in enumerate(ctx.C_Gamma):
        print(f"C_Gamma_{l}={cg:.7g}")
    return 0


def cmd_verify(_args) -> int:
    """Deterministic oracle suite: pilot constants, kernel orders, round-trips."""
    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    pilot = hermite_order_kernel(6)
    expected = {1: (0.8448, 0.7908, 0.6930, 0.6351),
                2: (0.5227, 0.4893, 0.4287, 0.3929)}
    for mid, vals in expected.items():
        dens = density_functionals(marron_wand(mid), 2, 6)
        got = [pilot_bandwidth(dens, pilot, 2, 6, n, "ustat")
               for n in (50, 100, 400, 1000)]
        ok = all(abs(g - v) < 5e-4 for g, v in zip(got, vals))
        check(f"pilot bandwidths, model {mid}", ok)

    moments = [kernel_moment(pilot, l, 1) for l in range(1, 6)]
    check("order-6 kernel vanishing moments", max(map(abs, moments)) < 1e-8)
    check("order-6 kernel sixth moment",
          abs(kernel_moment(pilot, 6, 1) - 15.0) < 1e-6)

    ctx = build_context(marron_wand(1), gaussian_kernel(), pilot, 2, 6,
                        x=0.5, n=200)
    from .edgeworth import cdf_approx
    ok = True
    for kind in ("hall2", "main", "pilot2"):
        for alpha in (0.025, 0.5, 0.975):
            q = cornish_fisher_quantile(ctx, kind, alpha)
            ok = ok and abs(cdf_approx(ctx, q, kind) - alpha) <= 1e-8
    check("quantile round-trips", ok)

    return 2 if failures else 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        handler = {"estimate": cmd_estimate, "coverage": cmd_coverage,
                   "context": cmd_context, "verify": cmd_verify}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
