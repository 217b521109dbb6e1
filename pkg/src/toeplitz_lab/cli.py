"""Command-line driver: ``toeplitz-lab <command> [flags]``.

Exit codes: 0 success, 2 parse or configuration error, 3 numerical failure,
4 point outside the domain.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from itertools import product
from math import comb

import numpy as np

from . import __version__
from .actions import (
    act,
    hamiltonian_residual,
    infinitesimal_field,
    moment_map_so2,
    moment_map_torus,
    random_group_element,
)
from .bergman import MCParams, commutator_norm, gram_blocks, toeplitz_truncation
from .errors import ConfigError, KindError, LabError, LabWarning, ParseError, StepExitsDomain
from .geometry import (
    DomainPoint,
    delta,
    jordan_pair_coeff,
    jordan_pair_coeff_numeric,
    metric,
    metric_from_kernel_fd,
    random_domain_points,
    symplectic_form,
)
from .jordan import SpinElement, in_cone, jordan_product, jordan_sqrt, random_order_interval
from .polyspaces import (
    GaussianRational,
    Polynomial,
    branching_count,
    branching_multiplicity,
    decompose,
    harmonic_dim,
    holomorphic_laplacian,
    monomials,
)
from .spectral import (
    METHODS,
    QuadSpec,
    eigenvalue_mc_cone,
    eigenvalue_quad,
    eigenvalue_table,
    gauss_jacobi_nodes,
    rows_to_csv,
    rows_to_json,
)
from .symbols import eval_on_uw, format_symbol, is_invariant_kind, parse_symbol

SUITES = ("jordan", "geometry", "moment", "harmonic", "branching", "gram", "spectral")
DEFAULTS = {
    "n": 3,
    "lambda": 4.0,
    "degree": 4,
    "kmax": 4,
    "samples": 10**6,
    "seed": 0,
    "method": "quad",
    "cache_dir": None,
    "out": None,
    "format": "csv",
    "force": False,
}


@dataclass(frozen=True)
class RunConfig:
    n: int
    lam: float
    degree_max: int
    kmax: int
    samples: int
    seed: int
    method: str
    cache_dir: str | None
    out: str | None
    output: str
    force: bool

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError(f"n must be >= 3, got {self.n}")
        if not self.lam > self.n - 1:
            raise ConfigError(f"lambda must exceed n - 1 = {self.n - 1}, got {self.lam}")
        if self.degree_max < 0 or self.kmax < 0:
            raise ConfigError("degree and kmax must be nonnegative")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}")
        if self.output not in ("csv", "json"):
            raise ConfigError("format must be csv or json")

    def mc_params(self) -> MCParams:
        return MCParams(self.n, self.lam, self.samples, self.seed, force=self.force)


def _config(args) -> RunConfig:
    values = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None and v is not False:
            values[key] = v
    return RunConfig(
        n=int(values["n"]),
        lam=float(values["lambda"]),
        degree_max=int(values["degree"]),
        kmax=int(values["kmax"]),
        samples=int(values["samples"]),
        seed=int(values["seed"]),
        method=str(values["method"]),
        cache_dir=values["cache_dir"],
        out=values["out"],
        output=str(values["format"]),
        force=bool(values["force"]),
    )


def _emit(text: str, config: RunConfig):
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _warn_unbounded(spec):
    """Warn (not reject) when a moment/invariant symbol is huge somewhere on a probe grid."""
    if not is_invariant_kind(spec):
        return
    u = np.linspace(0.0, 0.999, 200)
    w = np.linspace(0.0, 1.0, 200)
    U, W = np.meshgrid(u, w)
    ok = 2 * U < 1 + W
    ok &= W <= U * U  # |z^T z|^2 <= |z|^4
    try:
        with np.errstate(all="ignore"):
            vals = eval_on_uw(spec, U[ok], W[ok])
    except LabError:
        return
    if np.any(~np.isfinite(vals)) or np.max(np.abs(vals)) > 1e6:
        warnings.warn("symbol exceeds 1e6 in magnitude on the probe grid; it may not be bounded", LabWarning)


# ---------------------------------------------------------------- commands


def cmd_eigenvalues(config: RunConfig, symbol_text: str) -> int:
    spec = parse_symbol(symbol_text)
    if not is_invariant_kind(spec):
        raise KindError("eigenvalues need a moment or invariant symbol")
    _warn_unbounded(spec)
    rows = eigenvalue_table(spec, config.n, config.lam, config.kmax, config.method, config.samples, config.seed,
                            force=config.force)
    _emit(rows_to_csv(rows) if config.output == "csv" else rows_to_json(rows), config)
    return 0


def commutator_verdict(value: float, noise: float) -> str:
    if value <= 5 * noise:
        return "CONSISTENT_WITH_ZERO"
    if value > 10 * noise:
        return "NONZERO"
    return "INCONCLUSIVE"


def cmd_commutator(config: RunConfig, symbol_a: str, symbol_b: str) -> int:
    a, b = parse_symbol(symbol_a), parse_symbol(symbol_b)
    value, noise = commutator_norm(a, b, config.degree_max, config.mc_params())
    result = {
        "symbol_a": format_symbol(a),
        "symbol_b": format_symbol(b),
        "value": value,
        "noise": noise,
        "verdict": commutator_verdict(value, noise),
        **_provenance(config),
    }
    if config.output == "json":
        _emit(json.dumps(result, indent=1), config)
    else:
        _emit(f"value,noise,verdict\n{value!r},{noise!r},{result['verdict']}\n", config)
    return 0


def parse_complex(text: str, position: int = 0) -> complex:
    """Literals like 0.5, -1.5e-2, 0.5i, 1-2i, i."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ParseError("empty coordinate", position=position)
    try:
        if s[-1] in "ij":
            body = s[:-1]
            if body in ("", "+", "-"):
                body += "1"
            elif body[-1] in "+-":
                body += "1"
            return complex(body + "j")
        return complex(float(s))
    except ValueError:
        raise ParseError(f"cannot read complex literal {text.strip()!r}", position=position) from None


def parse_point(text: str) -> np.ndarray:
    coords = []
    offset = 0
    for part in text.split(","):
        coords.append(parse_complex(part, offset))
        offset += len(part) + 1
    return np.array(coords, dtype=complex)


def cmd_moment_map(config: RunConfig, point_text: str) -> int:
    z = parse_point(point_text)
    if z.size < 3:
        raise ConfigError("points need n >= 3 coordinates")
    p = DomainPoint(z)
    result = {
        "n": p.n,
        "torus": [float(v) for v in moment_map_torus(p.z)],
        "so2": float(moment_map_so2(p.z)),
    }
    if config.output == "json":
        _emit(json.dumps(result, indent=1), config)
    else:
        _emit("component,value\n" + "".join(f"mu_{j + 1},{v!r}\n" for j, v in enumerate(result["torus"]))
              + f"mu_so2,{result['so2']!r}\n", config)
    return 0


def _provenance(config: RunConfig) -> dict:
    return {"n": config.n, "lambda": config.lam, "degree_max": config.degree_max, "samples": config.samples,
            "seed": config.seed, "version": __version__}


def cmd_toeplitz(config: RunConfig, symbol_text: str) -> int:
    spec = parse_symbol(symbol_text)
    _warn_unbounded(spec)
    T = toeplitz_truncation(spec, config.degree_max, config.mc_params())
    ratio = np.abs(T.entries) / T.stderr
    off = np.ones(ratio.shape, dtype=bool)
    for sl in T.block_slices():
        off[sl, sl] = False
    flags = [[int(i), int(j)] for i, j in zip(*np.nonzero(off & (ratio > 5)))]
    report = {
        "max_off_block_ratio": T.off_block_ratio(),
        "flags": flags,
        "block_means": [{"k1": b.label[0], "k2": b.label[1], "mean": m} for b, m in zip(T.blocks, T.block_means())],
    }
    _emit(json.dumps({"operator": T.to_json(), "diagonality": report}), config)
    return 0


def cmd_gram(config: RunConfig) -> int:
    blocks, gauge = gram_blocks(config.degree_max, config.mc_params(), cache_dir=config.cache_dir)
    payload = {
        **_provenance(config),
        "gauge": gauge,
        "blocks": [
            {
                "torus_weight": list(b.label.torus_weight),
                "so2_weight": b.label.so2_weight,
                "polynomials": [p.to_json() for p in b.polynomials],
                "re": b.matrix.real.tolist(),
                "im": b.matrix.imag.tolist(),
                "stderr": b.stderr.tolist(),
            }
            for b in blocks.values()
        ],
    }
    _emit(json.dumps(payload), config)
    return 0


def cmd_info(config: RunConfig) -> int:
    import scipy
    import sympy

    info = {
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sympy": sympy.__version__,
        "cache_dir": config.cache_dir or os.environ.get("TOEPLITZ_LAB_CACHE"),
        "supported_n": "3 <= n <= 10 for Monte Carlo; n >= 3 for quadrature",
        "lambda_range": "lambda > n - 1 (quadrature); lambda > n - 1/2 for Monte Carlo unless --force",
        "methods": list(METHODS),
        "suites": list(SUITES),
    }
    _emit(json.dumps(info, indent=1), config)
    return 0


# ---------------------------------------------------------------- verify


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (threshold {self.threshold:.1e})"


def _le(name, value, threshold, scale):
    t = threshold * scale
    return Check(name, float(value), t, bool(value < t))


def _ge(name, value, threshold, scale):
    # lower bounds tighten as tolerances shrink; scale 0 makes the bound unreachable
    t = threshold / scale if scale else math.inf
    return Check(name, float(value), t, bool(value > t))


def suite_jordan(config, scale):
    rng = np.random.default_rng(config.seed)
    out = []
    for n in (3, 5, 8):
        x1, xp = random_order_interval(rng, n, 10**4)
        worst, outside = 0.0, 0
        for a, b in zip(x1, xp):
            x = SpinElement(a, b)
            y = jordan_sqrt(x)
            d = jordan_product(y, y) - x
            worst = max(worst, abs(d.x1), float(np.max(np.abs(d.xprime), initial=0)))
            outside += not in_cone(y)
        out.append(_le(f"sqrt round trip n={n}", worst, 1e-12, scale))
        out.append(_le(f"sqrt in cone n={n} (count outside)", outside, 0.5, scale))
    return out


def suite_geometry(config, scale):
    worst = max(
        abs(jordan_pair_coeff_numeric(*idx) - jordan_pair_coeff(*idx)) for idx in product(range(1, 4), repeat=4)
    )
    rng = np.random.default_rng(config.seed)
    mworst = 0.0
    for z in random_domain_points(rng, config.n, 20):
        g = metric(z)
        mworst = max(mworst, float(np.max(np.abs(metric_from_kernel_fd(z) - g)) / np.max(np.abs(g))))
    return [_le("Jordan pair coefficients, 81 tuples", worst, 1e-4, scale),
            _le("metric vs kernel finite differences (relative)", mworst, 1e-5, scale)]


def _hamiltonian_worst(n, rng, points=100, directions=4):
    worst = 0.0
    for z in random_domain_points(rng, n, points, shrink=0.98):
        for j in range(1, n // 2 + 2):
            for _ in range(directions):
                u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                u /= np.linalg.norm(u)
                try:
                    res = hamiltonian_residual(j, z, u)
                except StepExitsDomain:
                    continue
                om = abs(symplectic_form(z, infinitesimal_field(j, z), u))
                worst = max(worst, res / (1 + om))
    return worst


def so2_invariance_errors(rng, n, size, shrink=1.0):
    """|mu(g z) - mu(z)| and Delta(z) for random z in shrink * D, one random g per 100 points."""
    z = random_domain_points(rng, n, size, shrink)
    errs = np.empty(size)
    for k in range(0, size, 100):
        g = random_group_element(rng, n)
        zz = z[k : k + 100]
        errs[k : k + 100] = np.abs(moment_map_so2(act(g, zz)) - moment_map_so2(zz))
    return errs, delta(z)


def suite_moment(config, scale):
    rng = np.random.default_rng(config.seed)
    out = [_le(f"Hamiltonian identity n={n}", _hamiltonian_worst(n, rng), 1e-6, scale) for n in (3, 4, 5)]
    eps = np.finfo(float).eps
    for n in (3, 4, 5):
        errs, _ = so2_invariance_errors(rng, n, 10**4, shrink=0.9)
        out.append(_le(f"SO(2) moment map invariance on 0.9 D, n={n}", errs.max(), 1e-12, scale))
        # rounding in g.z alone moves mu by ~eps / Delta^2 near the boundary
        errs, d = so2_invariance_errors(rng, n, 10**4)
        out.append(_le(f"SO(2) moment map invariance on D / (eps / Delta^2), n={n}",
                       float(np.max(errs * d**2 / eps)), 100.0, scale))
    return out


def random_integer_poly(rng, n, m) -> Polynomial:
    """Exact homogeneous polynomial with small Gaussian-integer coefficients."""
    terms = {}
    for alpha in monomials(n, m):
        if rng.random() < 0.6:
            terms[alpha] = GaussianRational(int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
    return Polynomial(n, terms)


def suite_harmonic(config, scale):
    rng = np.random.default_rng(config.seed)
    bad_recon, bad_harm, bad_dim = 0, 0, 0
    for n in (3, 4, 5):
        for m in range(0, 7):
            if sum(harmonic_dim(n, m - 2 * k2) for k2 in range(m // 2 + 1)) != comb(n + m - 1, m):
                bad_dim += 1
            p = random_integer_poly(rng, n, m)
            parts = decompose(p)
            total = Polynomial(n)
            zz = Polynomial.zz(n)
            for (k1, k2), h in parts.items():
                bad_harm += not holomorphic_laplacian(h).is_zero()
                total = total + h * zz**k2
            bad_recon += not (total == p)
    return [_le("decomposition reconstruction failures", bad_recon, 0.5, scale),
            _le("non-harmonic components", bad_harm, 0.5, scale),
            _le("dimension identity failures", bad_dim, 0.5, scale)]


def suite_branching(config, scale):
    bad_sum, bad_count = 0, 0
    for n in (4, 5, 6):
        for m in range(7):
            total = sum(branching_multiplicity(m, r, n) * harmonic_dim(n - 1, r) for r in range(m + 1))
            bad_sum += total != comb(n + m - 1, n - 1)
    for m in range(7):
        for r in range(m + 1):
            bad_count += branching_multiplicity(m, r) != branching_count(m, r)
    return [_le("branching dimension sum failures", bad_sum, 0.5, scale),
            _le("multiplicity vs counting oracle failures", bad_count, 0.5, scale)]


def suite_gram(config, scale):
    params = MCParams(config.n, config.lam, min(config.samples, 2 * 10**5), config.seed, force=config.force)
    blocks, gauge = gram_blocks(min(config.degree_max, 4), params, cache_dir=config.cache_dir)
    const = [b for b in blocks.values() if b.label.so2_weight == 0][0]
    diag_ratio = min(float(np.min(np.real(np.diag(b.matrix)) / np.diag(b.stderr))) for b in blocks.values())
    herm = max(float(np.max(np.abs(b.matrix - b.matrix.conj().T))) for b in blocks.values())
    return [_le("constant class Gram = [1]", abs(const.matrix[0, 0] - 1), 1e-14, scale),
            _ge("min diagonal / stderr", diag_ratio, 5.0, scale),
            _le("Hermitian defect", herm, 1e-13, scale),
            _le("mean cross-class |<q,q'>| / stderr", gauge["mean"], 3.0, scale)]


def suite_spectral(config, scale):
    f = parse_symbol("moment: exp(s)")
    g = parse_symbol("moment: 1/(1-s)")
    unit, lin, drift = 0.0, 0.0, 0.0
    for n in (3, 4):
        for lam in (n + 1, n + 2.5):
            for k1, k2 in product(range(3), repeat=2):
                unit = max(unit, abs(eigenvalue_quad(None, n, lam, k1, k2) - 1))
                a = eigenvalue_quad(f, n, lam, k1, k2)
                b = eigenvalue_quad(g, n, lam, k1, k2)
                c = eigenvalue_quad(parse_symbol("moment: 2*exp(s) - 3/(1-s)"), n, lam, k1, k2)
                lin = max(lin, abs(c - (2 * a - 3 * b)))
                d = eigenvalue_quad(f, n, lam, k1, k2, QuadSpec().doubled())
                drift = max(drift, abs(d - a) / abs(d))
    v, e = eigenvalue_mc_cone(f, 3, 4.0, 1, 1, min(config.samples, 10**6), config.seed)
    q = eigenvalue_quad(f, 3, 4.0, 1, 1)
    return [_le("unit symbol eigenvalue", unit, 1e-12, scale),
            _le("linearity", lin, 1e-12, scale),
            _le("order-doubling drift (relative)", drift, 1e-8, scale),
            _le("Gauss-Jacobi a=b=-1/2 weight sum vs pi", abs(sum(gauss_jacobi_nodes(16, -0.5, -0.5)[1]) - math.pi),
                1e-13, scale),
            _le("cone MC vs quadrature (sigmas), (3, 4, 1, 1)", abs(v - q) / e, 3.0, scale)]


SUITE_FUNCS = {
    "jordan": suite_jordan,
    "geometry": suite_geometry,
    "moment": suite_moment,
    "harmonic": suite_harmonic,
    "branching": suite_branching,
    "gram": suite_gram,
    "spectral": suite_spectral,
}


def cmd_verify(config: RunConfig, suite: str, scale: float = 1.0) -> int:
    names = SUITES if suite == "all" else (suite,)
    ok = True
    for name in names:
        print(f"[{name}]")
        for check in SUITE_FUNCS[name](config, scale):
            print("  " + check.line())
            ok &= check.passed
    print("ALL PASS" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 3


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="dimension n >= 3 (default 3)")
    common.add_argument("--lambda", dest="lambda", type=float, help="weight parameter, > n-1 (default 4)")
    common.add_argument("--degree", type=int, help="truncation degree N (default 4)")
    common.add_argument("--kmax", type=int, help="eigenvalue table range k1 + 2 k2 <= kmax (default 4)")
    common.add_argument("--samples", type=int, help="Monte Carlo samples (default 10^6)")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--method", choices=METHODS, help="eigenvalue method (default quad)")
    common.add_argument("--cache-dir", dest="cache_dir", help="Gram cache directory (or TOEPLITZ_LAB_CACHE)")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")
    common.add_argument("--force", action="store_true", help="allow lambda <= n - 1/2 for Monte Carlo")
    common.add_argument("--config", help="JSON file of defaults; flags override it")

    parser = argparse.ArgumentParser(prog="toeplitz-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eigenvalues", parents=[common], help="eigenvalue table c_{k1,k2}")
    p.add_argument("symbol")
    p = sub.add_parser("commutator", parents=[common], help="commutator norm of two truncations")
    p.add_argument("symbol_a")
    p.add_argument("symbol_b")
    p = sub.add_parser("moment-map", parents=[common], help="moment maps at a point")
    p.add_argument("point", help='comma-separated complex literals, e.g. "0.5, 0.1-0.2i, 0"')
    p = sub.add_parser("toeplitz", parents=[common], help="truncated Toeplitz matrix and diagonality report")
    p.add_argument("symbol")
    sub.add_parser("gram", parents=[common], help="Gram matrices over torus-weight classes")
    p = sub.add_parser("verify", parents=[common], help="run invariant and acceptance checks")
    p.add_argument("suite", nargs="?", default="all", choices=SUITES + ("all",))
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every tolerance (0 is a harness self-test that must fail)")
    sub.add_parser("info", parents=[common], help="versions and supported ranges")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
        cmd = args.command
        if cmd == "eigenvalues":
            return cmd_eigenvalues(config, args.symbol)
        if cmd == "commutator":
            return cmd_commutator(config, args.symbol_a, args.symbol_b)
        if cmd == "moment-map":
            return cmd_moment_map(config, args.point)
        if cmd == "toeplitz":
            return cmd_toeplitz(config, args.symbol)
        if cmd == "gram":
            return cmd_gram(config)
        if cmd == "verify":
            return cmd_verify(config, args.suite, args.tolerance_scale)
        return cmd_info(config)
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: NUMERIC_FAILURE: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
