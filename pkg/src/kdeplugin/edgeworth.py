"""Population moment functionals, the higher-order CDF approximations for the
standardised and Studentised KDE, power-series coefficient assembly, and
Cornish-Fisher quantile inversion.

Everything here is a population quantity: expectations are quadratures against
a known mixture density, computed once per (model, kernel, x, n) and reusable
across Monte Carlo replications via a flat text cache.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import os
from dataclasses import dataclass, replace
from math import factorial

import numpy as np

from .bandwidth import optimal_bandwidth, pilot_bandwidth
from .densities import MixtureDensity, density_functionals, pdf, pdf_deriv
from .gausspoly import GaussPoly
from .kernels import KernelSpec, kernel_constants, kernel_tau
from .numerics import (DEFAULT_QUAD, DEFAULT_QUAD_2D, QuadratureSpec, find_root,
                       integrate, integrate2d)

__all__ = [
    "ExpansionContext",
    "build_context",
    "hall_polynomials",
    "plugin_polynomials",
    "pilot_polynomials",
    "student_polynomials",
    "cdf_approx",
    "mu_series",
    "power_series_coeffs",
    "cornish_fisher_quantile",
    "norm_cdf",
    "norm_quantile",
    "save_context",
    "load_context",
    "context_cache_key",
    "CDF_KINDS",
]

CDF_KINDS = ("normal", "hall1", "hall2", "main", "pilot1", "pilot2", "student")

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def norm_cdf(z):
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    out = np.fromiter((0.5 * (1.0 + math.erf(v / _SQRT2)) for v in flat),
                      dtype=float, count=flat.size)
    out = out.reshape(z.shape)
    return out if out.ndim else float(out)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z) / _SQRT_2PI
    return out if out.ndim else float(out)


def norm_quantile(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return find_root(lambda v: norm_cdf(v) - alpha, -9.0, 9.0, tol=1e-13)


@dataclass(frozen=True)
class ExpansionContext:
    """All population functionals an expansion at (model, x, n) consumes."""

    model_id: str
    kernel_name: str
    pilot_name: str
    il_variant: str
    L: int
    Lp: int
    x: float
    n: int
    h0: float
    b: float
    I_L: float
    f_x: float
    mu20: float
    mu30: float
    mu40: float
    mu11: float
    mu21: float
    mu02: float
    xi11: float
    rho11: float
    omega111: float
    psi111: float
    delta: float
    C_PI: float
    C_Gamma: tuple
    script_L: float

    def __post_init__(self):
        if self.mu20 <= 0:
            raise ValueError("mu20 must be positive")
        if self.C_PI <= 0:
            raise ValueError("C_PI must be positive")
        if len(self.C_Gamma) != self.L:
            raise ValueError("C_Gamma must have one entry per l = 0..L-1")


def _model_id(model: MixtureDensity) -> str:
    parts = ",".join(f"{w:.12g}:{m:.12g}:{s:.12g}" for w, m, s in model.components)
    return f"mix[{parts}]"


def build_context(model: MixtureDensity, kernel: KernelSpec, pilot: KernelSpec,
                  L: int, Lp: int, x: float, n: int, b: float | None = None,
                  il_variant: str = "ustat",
                  quad: QuadratureSpec = DEFAULT_QUAD,
                  quad2d: QuadratureSpec = DEFAULT_QUAD_2D,
                  cache_dir: str | None = None) -> ExpansionContext:
    """Assemble every moment functional by quadrature against the model.

    Pass ``cache_dir`` to reuse a previously built context for the same key.
    """
    dens = density_functionals(model, L, Lp, quad)
    consts = kernel_constants(kernel)
    h0 = optimal_bandwidth(consts, L, dens.I_L, n)
    if b is None:
        b = pilot_bandwidth(dens, pilot, L, Lp, n,
                            "ustat" if il_variant == "ustat" else "convo")

    key = context_cache_key(_model_id(model), kernel.name, pilot.name, il_variant,
                            L, Lp, x, n, b)
    if cache_dir is not None:
        path = os.path.join(cache_dir, key + ".ctx")
        if os.path.exists(path):
            return load_context(path)

    lo, hi = model.support(pad=1.0)
    lo = min(lo, x - 10.0 * h0)
    hi = max(hi, x + 10.0 * h0)

    def expect(fn):
        return integrate(lambda t: fn(t) * pdf(model, t), lo, hi, quad)

    kgp = kernel.gp
    k2gp = kgp.mul(kgp)
    g1gp = _gamma1_gp(kernel)

    def K(t):
        return kgp((t - x) / h0)

    def K2(t):
        return k2gp((t - x) / h0)

    def G(t):
        return g1gp((t - x) / h0)

    EK = expect(K)
    EK2 = expect(K2)
    EG = expect(G)

    def mu(k, l):
        def fn(t):
            out = np.ones_like(np.asarray(t, dtype=float))
            if k:
                out = out * (K(t) - EK) ** k
            if l:
                out = out * (K2(t) - EK2) ** l
            return out

        return expect(fn) / h0

    mu20, mu30, mu40 = mu(2, 0), mu(3, 0), mu(4, 0)
    mu11, mu21, mu02 = mu(1, 1), mu(2, 1), mu(0, 2)

    xi11 = expect(lambda t: (K(t) - EK) * (G(t) - EG)) / h0
    rho11 = expect(lambda t: (K(t) - EK)
                   * (pdf_deriv(model, t, 2 * L) - dens.I_L)) / h0

    kprime = kernel.derivative_gp(1)

    def Kpu(t):
        u = (t - x) / h0
        return kprime(u) * u

    EKpu = expect(Kpu)
    delta = (expect(lambda t: K(t) * Kpu(t)) - EK * EKpu) / h0

    omega111, psi111 = _pair_moments(model, kernel, pilot, L, il_variant, x, h0, b,
                                     EK, EG, lo, hi, quad2d)

    C_PI = 2.0 / ((2 * L + 1) * dens.I_L)
    C_Gamma = tuple(
        -consts.kappa(L + l, 1) * pdf_deriv(model, x, L + l) / factorial(L + l - 1)
        for l in range(L)
    )
    ctx = ExpansionContext(
        model_id=_model_id(model), kernel_name=kernel.name, pilot_name=pilot.name,
        il_variant=il_variant, L=L, Lp=Lp, x=float(x), n=int(n), h0=h0, b=float(b),
        I_L=dens.I_L, f_x=float(pdf(model, x)), mu20=mu20, mu30=mu30, mu40=mu40,
        mu11=mu11, mu21=mu21, mu02=mu02, xi11=xi11, rho11=rho11,
        omega111=omega111, psi111=psi111, delta=delta, C_PI=C_PI,
        C_Gamma=C_Gamma, script_L=float(pdf_deriv(model, x, 2 * L) - dens.I_L),
    )
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        save_context(ctx, os.path.join(cache_dir, key + ".ctx"))
    return ctx


def _gamma1_gp(kernel: KernelSpec) -> GaussPoly:
    P = np.polynomial.polynomial
    kp = kernel.derivative_gp(1)
    return GaussPoly(P.polyadd(P.polymul([0.0, 1.0], kp.c), kernel.gp.c),
                     kernel.gp.s2)


def _pair_moments(model, kernel, pilot, L, il_variant, x, h0, b, EK, EG, lo, hi,
                  quad2d):
    """omega_111 and psi_111 by 2D quadrature over (u, y), u = (X_i - X_j)/b.

    Because the first two factors are exactly centred, only the raw pair-kernel
    term of the projection-centred factor survives the expectation; the
    conditional-mean corrections integrate to zero against E[K - EK] = 0.
    """
    if il_variant == "ustat":
        g = pilot.derivative_gp(2 * L)
    else:
        hl = pilot.derivative_gp(L)
        g = hl.convolve(hl)
    u_half = pilot.effective_support * math.sqrt(g.s2)

    kgp = kernel.gp
    g1gp = _gamma1_gp(kernel)

    def kc(t):
        return kgp((t - x) / h0) - EK

    def gc(t):
        return g1gp((t - x) / h0) - EG

    def omega_f(u, ys):
        return g(u) * kc(ys) * kc(ys - u * b) * pdf(model, ys) \
            * pdf(model, ys - u * b)

    def psi_f(u, ys):
        return g(u) * kc(ys) * gc(ys - u * b) * pdf(model, ys) \
            * pdf(model, ys - u * b)

    ylo, yhi = lo - u_half * b, hi + u_half * b
    box = ((-u_half, u_half), (ylo, yhi))
    omega = integrate2d(omega_f, box, quad2d) / h0
    psi = integrate2d(psi_f, box, quad2d) / h0
    return omega, psi


# ---------------------------------------------------------------------------
# expansion polynomials
# ---------------------------------------------------------------------------

def hall_polynomials(ctx: ExpansionContext, z):
    z = np.asarray(z, dtype=float)
    p1 = -ctx.mu30 * (z * z - 1.0) / (6.0 * ctx.mu20**1.5)
    p2 = (-ctx.mu40 * (z**3 - 3.0 * z) / (24.0 * ctx.mu20**2)
          - ctx.mu30**2 * (z**5 - 10.0 * z**3 + 15.0 * z) / (72.0 * ctx.mu20**3))
    return {"p1": p1, "p2": p2}


def plugin_polynomials(ctx: ExpansionContext, z):
    z = np.asarray(z, dtype=float)
    p3 = [-ctx.C_PI * cg * ctx.rho11 * z / ctx.mu20 for cg in ctx.C_Gamma]
    p4 = (-ctx.C_PI * ctx.rho11 * ctx.xi11 * (z * z - 1.0) / ctx.mu20**1.5
          + 0.5 * ctx.C_PI * ctx.rho11 * z * z / ctx.mu20**0.5)
    return {"p3": p3, "p4": p4}


def pilot_polynomials(ctx: ExpansionContext, z):
    z = np.asarray(z, dtype=float)
    w = ctx.omega111
    frak_p1 = [-0.5 * ctx.C_PI * cg * w * (z * z - 1.0) / ctx.mu20**1.5
               for cg in ctx.C_Gamma]
    frak_p2 = -ctx.C_PI * (
        0.5 * ctx.xi11 * w * (z**3 - 3.0 * z) / ctx.mu20**2
        + ctx.psi111 * z / ctx.mu20
        - 0.25 * w * (z**3 - z) / ctx.mu20
    )
    return {"frak_p1": frak_p1, "frak_p2": frak_p2}


def student_polynomials(ctx: ExpansionContext, z):
    z = np.asarray(z, dtype=float)
    m20, m30, m40, m11 = ctx.mu20, ctx.mu30, ctx.mu40, ctx.mu11
    q1 = 0.5 * m11 / m20**1.5 - (m30 - 3.0 * m11) * (z * z - 1.0) / (6.0 * m20**1.5)
    q2 = -ctx.f_x * z * z / m20
    q3 = (-(m30**2) * z / m20**3
          - (2.0 / 3.0 * m30**2 / m20**3 - m40 / (12.0 * m20**2)) * (z**3 - 3.0 * z)
          - m30**3 * (z**5 - 10.0 * z**3 + 15.0 * z) / (18.0 * m20**3))
    stud_factor = 1.0 + ctx.delta / m20
    frak_q1 = 0.5 * ctx.C_PI * stud_factor * ctx.rho11 * z * z / m20**0.5
    frak_q2 = 0.25 * ctx.C_PI * ctx.omega111 * stud_factor * (z**3 - 2.0 * z) / m20
    return {"q1": q1, "q2": q2, "q3": q3, "frak_q1": frak_q1, "frak_q2": frak_q2}


# ---------------------------------------------------------------------------
# CDF approximations
# ---------------------------------------------------------------------------

def _bracket(ctx: ExpansionContext, z, kind: str):
    n, h0, b, L = ctx.n, ctx.h0, ctx.b, ctx.L
    rn_half = (n * h0) ** -0.5
    rn_one = 1.0 / (n * h0)
    z = np.asarray(z, dtype=float)
    if kind == "normal":
        return np.zeros_like(z)
    hall = hall_polynomials(ctx, z)
    if kind == "hall1":
        return rn_half * hall["p1"]
    if kind == "hall2":
        return rn_half * hall["p1"] + rn_one * hall["p2"]
    plug = plugin_polynomials(ctx, z)
    plug_sum = sum(h0 ** (L + l + 1) * p for l, p in enumerate(plug["p3"]))
    plug_terms = plug_sum + n**-0.5 * h0**0.5 * plug["p4"]
    if kind == "main":
        return rn_half * hall["p1"] + plug_terms + rn_one * hall["p2"]
    pil = pilot_polynomials(ctx, z)
    pil_sum = sum(
        n**-0.5 * h0 ** ((2 * L + 2 * l + 1) / 2.0) * b ** (-2 * L) * p
        for l, p in enumerate(pil["frak_p1"])
    )
    pil_tail = b ** (-2 * L) / n * pil["frak_p2"]
    if kind == "pilot1":
        return rn_half * hall["p1"] + pil_sum + pil_tail
    if kind == "pilot2":
        return (rn_half * hall["p1"] + rn_one * hall["p2"] + plug_terms
                + pil_sum + pil_tail)
    if kind == "student":
        stu = student_polynomials(ctx, z)
        return (rn_half * stu["q1"]
                + n**-0.5 * h0**0.5 * (stu["q2"] + plug["p4"] + stu["frak_q1"])
                + rn_one * stu["q3"]
                + plug_sum
                + pil_sum
                + b ** (-2 * L) / n * (pil["frak_p2"] + stu["frak_q2"]))
    raise ValueError(f"unknown cdf kind {kind!r}; expected one of {CDF_KINDS}")


def cdf_approx(ctx: ExpansionContext, z, kind: str = "main"):
    """Phi(z) + phi(z) * [the kind's correction bracket]."""
    z = np.asarray(z, dtype=float)
    out = norm_cdf(z) + norm_pdf(z) * _bracket(ctx, z, kind)
    return out if out.ndim else float(out)


def cornish_fisher_quantile(ctx: ExpansionContext, kind: str, alpha: float,
                            scan_step: float = 1e-3) -> float:
    """z* with cdf_approx(ctx, z*, kind) = alpha, on the central branch.

    Starting from the normal quantile, scan outward in both directions for a
    sign change (the expansions need not be globally monotone), then bisect.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if kind == "normal":
        return norm_quantile(alpha)

    def g(v):
        return cdf_approx(ctx, v, kind) - alpha

    z0 = norm_quantile(alpha)
    g0 = g(z0)
    if g0 == 0.0:
        return z0
    lo = hi = z0
    step = scan_step
    while max(abs(lo), abs(hi)) <= 6.0 + step:
        lo2, hi2 = lo - step, hi + step
        if lo2 >= -6.0 - 1e-12 and g(lo2) * g0 <= 0.0:
            return find_root(g, lo2, lo, tol=1e-12)
        if hi2 <= 6.0 + 1e-12 and g(hi2) * g0 <= 0.0:
            return find_root(g, hi, hi2, tol=1e-12)
        lo, hi = max(lo2, -6.0 - 1e-12), min(hi2, 6.0 + 1e-12)
        if lo <= -6.0 and hi >= 6.0:
            break
        step = min(step * 2.0, 0.25)
    raise ValueError(f"no quantile for kind={kind!r}, alpha={alpha} in [-6, 6]")


# ---------------------------------------------------------------------------
# series in powers of n^{-1/(2L+1)}
# ---------------------------------------------------------------------------

def mu_series(model: MixtureDensity, kernel: KernelSpec, x: float, L: int) -> dict:
    """Coefficients of mu_20 and mu_30 as series in h0 up to order L."""
    consts = kernel_constants(kernel)
    f = pdf(model, x)
    m2 = np.zeros(L + 1)
    m3 = np.zeros(L + 1)
    m2[0] = consts.kappa(0, 2) * f
    m3[0] = consts.kappa(0, 3) * f
    if L >= 1:
        m2[1] = -f * f
        m3[1] = -3.0 * consts.kappa(0, 2) * f * f
    for l in range(2, L + 1):
        fl = pdf_deriv(model, x, l)
        m2[l] = consts.kappa(l, 2) * fl / factorial(l)
        m3[l] = consts.kappa(l, 3) * fl / factorial(l)
        if l == 2:
            m3[l] += 2.0 * f**3
        else:
            m3[l] += (-3.0 * consts.kappa(l - 1, 2)
                      * pdf_deriv(model, x, l - 1) / factorial(l - 1) * f)
    return {"m2": m2, "m3": m3}


def _dfact(m: int) -> float:
    out = 1.0
    for t in range(m, 1, -2):
        out *= t
    return out


def _ratio_series_coeffs(m2: np.ndarray, m3: np.ndarray, L: int) -> np.ndarray:
    """h-coefficients of mu_30 * mu_20^{-3/2} through order L, by enumeration
    of index tuples (i_1, ..., i_k) with i_1 + ... + i_k + l = q."""
    out = np.zeros(L + 1)
    for q in range(L + 1):
        total = 0.0
        for l in range(q + 1):
            r = q - l
            for k in range(r + 1):
                if k == 0 and r > 0:
                    continue
                pref = ((-1.0) ** k * _dfact(2 * k + 1) / (2.0**k * factorial(k))
                        * m2[0] ** (-(2.0 * k + 3.0) / 2.0))
                if k == 0:
                    total += pref * m3[l]
                    continue
                tup_sum = 0.0
                for tup in itertools.product(range(1, L + 1), repeat=k):
                    if sum(tup) == r:
                        tup_sum += float(np.prod([m2[i] for i in tup]))
                total += pref * m3[l] * tup_sum
        out[q] = total
    return out


def power_series_coeffs(model: MixtureDensity, kernel: KernelSpec,
                        pilot: KernelSpec, L: int, Lp: int, x: float, z) -> dict:
    """a_j (deterministic-bandwidth series) and b_j (plug-in series), j <= 2,
    plus the named gamma coefficient functions, all at the point x.

    The gamma coefficients are derived from the mu-series directly; where the
    source's printed closed forms disagree with that algebra (a dropped f
    power, three sign slips from expanding 1/(a - b h)), the derived values
    are used, and the cross-expansion consistency test enforces them.
    """
    z = np.asarray(z, dtype=float)
    consts = kernel_constants(kernel)
    dens = density_functionals(model, L, Lp)
    f = pdf(model, x)
    k02 = consts.kappa(0, 2)
    k03 = consts.kappa(0, 3)
    k04 = consts.kappa(0, 4)
    tau0 = kernel_tau(kernel, 0)
    C_PI = 2.0 / ((2 * L + 1) * dens.I_L)
    CG0 = -consts.kappa(L, 1) * pdf_deriv(model, x, L) / factorial(L - 1)
    script_L = pdf_deriv(model, x, 2 * L) - dens.I_L

    gammas = {
        "gamma_1_0": -k03 / (6.0 * k02**1.5 * np.sqrt(f)),
        "gamma_1_1": 0.5 * (np.sqrt(f) / np.sqrt(k02)
                            - k03 * np.sqrt(f) / (2.0 * k02**2.5)),
        "gamma_2_1_0": -k04 / (24.0 * k02**2 * f),
        "gamma_2_2_0": -k03**2 / (72.0 * k02**3 * f),
        "gamma_3_1_0": -C_PI * CG0 * script_L / k02,
        "gamma_3_1_1": -C_PI * CG0 * script_L * f / k02**2,
        "gamma_4_1_0": -C_PI * tau0 * script_L * np.sqrt(f) / k02**1.5,
        "gamma_4_1_1": -1.5 * C_PI * tau0 * script_L * f**1.5 / k02**2.5,
        "gamma_4_2_0": 0.5 * C_PI * script_L * np.sqrt(f) / np.sqrt(k02),
        "gamma_4_2_1": 0.25 * C_PI * script_L * f**1.5 / k02**1.5,
    }

    series = mu_series(model, kernel, x, L)
    ratio = _ratio_series_coeffs(series["m2"], series["m3"], L)
    zsq = z * z - 1.0
    a = [(-ratio[q] / 6.0) * zsq for q in range(L + 1)]
    a[L] = a[L] + gammas["gamma_2_1_0"] * (z**3 - 3.0 * z) \
        + gammas["gamma_2_2_0"] * (z**5 - 10.0 * z**3 + 15.0 * z)

    b = [a[0],
         a[1] + gammas["gamma_3_1_0"] * z + gammas["gamma_4_1_0"] * zsq
         + gammas["gamma_4_2_0"] * z * z]
    if L >= 2:
        b.append(a[2] + gammas["gamma_3_1_1"] * z + gammas["gamma_4_1_1"] * zsq
                 + gammas["gamma_4_2_1"] * z * z)
    return {"a": a, "b_coeff": b, "gammas": gammas}


# ---------------------------------------------------------------------------
# context cache
# ---------------------------------------------------------------------------

_CACHE_VERSION = "kdeplugin-context v1"
_SCALARS = ("L", "Lp", "x", "n", "h0", "b", "I_L", "f_x", "mu20", "mu30", "mu40",
            "mu11", "mu21", "mu02", "xi11", "rho11", "omega111", "psi111",
            "delta", "C_PI", "script_L")


def context_cache_key(model_id: str, kernel_name: str, pilot_name: str,
                      il_variant: str, L: int, Lp: int, x: float, n: int,
                      b: float) -> str:
    raw = f"{model_id}|{kernel_name}|{pilot_name}|{il_variant}|{L}|{Lp}|" \
          f"{x:.12g}|{n}|{b:.12g}"
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


def save_context(ctx: ExpansionContext, path: str) -> None:
    lines = [f"# {_CACHE_VERSION}"]
    for name in ("model_id", "kernel_name", "pilot_name", "il_variant"):
        lines.append(f"{name} = {getattr(ctx, name)}")
    for name in _SCALARS:
        lines.append(f"{name} = {getattr(ctx, name)!r}")
    for l, cg in enumerate(ctx.C_Gamma):
        lines.append(f"C_Gamma_{l} = {cg!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_context(path: str) -> ExpansionContext:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != f"# {_CACHE_VERSION}":
            raise ValueError(f"unrecognised context cache header: {header!r}")
        kv = {}
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
    strings = {k: kv.pop(k) for k in ("model_id", "kernel_name", "pilot_name",
                                      "il_variant")}
    cg = tuple(float(kv.pop(f"C_Gamma_{l}"))
               for l in range(int(float(kv["L"]))))
    fields = {k: float(v) for k, v in kv.items()}
    fields["L"] = int(fields["L"])
    fields["Lp"] = int(fields["Lp"])
    fields["n"] = int(fields["n"])
    return ExpansionContext(C_Gamma=cg, **strings, **fields)
