"""Command-line front end: ``robbakit {verify,cohomology,cover,norms,bpair}``."""

from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .bpairs import BPairTriple, DeRhamSkeleton, fundamental_sequence_check, glue_complex
from .corpus import admissible_intervals, base_interval, random_laurent, random_polynomial, rank1_corpus
from .koszul import (
    OutsideLatticeModel,
    build_phi_complex,
    build_phi_gamma_complex,
    build_psi_complex,
    build_psi_gamma_complex,
    cohomology_dims,
    phi_to_psi_morphism,
)
from .laurent import LaurentElement, gauss_valuation, interval_valuation
from .operators import OperatorSpec, check_commutation, phi_laurent, psi_laurent
from .padic import CoeffRing, is_prime
from .phigamma import (
    PhiGammaModule,
    check_cocycle,
    cover_multiplicity,
    default_chi,
    frobenius_cover,
    glue_global,
    identity_family,
    spread_module,
)
from .robba import IntervalVector, radius_cap

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    prime: int = 3
    precision: int = 4
    window: int = 1
    stability_steps: int = 2
    seed: int = 0
    fmt: str = "text"
    out: str | None = None

    def __post_init__(self):
        if not is_prime(self.prime):
            raise ConfigError(f"--prime must be prime, got {self.prime}")
        if self.precision < 4:
            raise ConfigError("--precision must be >= 4")
        if self.stability_steps < 2:
            raise ConfigError("--stability-steps must be >= 2")
        if self.window < 1:
            raise ConfigError("--window must be >= 1")
        if self.fmt not in ("text", "json"):
            raise ConfigError("--format is text or json")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(args.prime, args.precision, args.window, args.stability_steps, args.seed, args.format, args.out)


# ---------------------------------------------------------------------------
# output


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return "inf" if x == float("inf") else repr(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _text(report: dict) -> str:
    lines = [f"robbakit {report['command']} (p={report['config']['prime']}, N={report['config']['precision']})"]
    for check in report.get("checks", []):
        lines.append(f"{check['status'].upper():8s} {check['name']}: {check['detail']}")
    for key, value in report.items():
        if key in ("command", "config", "checks", "status"):
            continue
        lines.append(f"{key}: {json.dumps(_jsonable(value), sort_keys=True)}")
    lines.append(f"status: {report['status']}")
    return "\n".join(lines) + "\n"


def emit(report: dict, cfg: RunConfig) -> None:
    report = _jsonable(report)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n" if cfg.fmt == "json" else _text(report)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _report(command: str, cfg: RunConfig, checks: list[dict], **extra) -> dict:
    failed = any(c["status"] == "fail" for c in checks)
    out = {
        "command": command,
        "version": __version__,
        "config": {"prime": cfg.prime, "precision": cfg.precision, "window": cfg.window, "stability_steps": cfg.stability_steps, "seed": cfg.seed},
        "checks": checks,
        "status": "fail" if failed else "pass",
    }
    out.update(extra)
    return out


def _check(name: str, passed: bool | None, detail: str) -> dict:
    status = "unstable" if passed is None else ("pass" if passed else "fail")
    return {"name": name, "status": status, "detail": detail}


# ---------------------------------------------------------------------------
# verify


def _suite_psi_phi(cfg: RunConfig, rng: random.Random) -> dict:
    ring = CoeffRing(cfg.prime, cfg.precision + 4)
    bad = 0
    for _ in range(100):
        f = random_laurent(rng, ring, 1, -8, 8)
        g = psi_laurent(phi_laurent(f, 0), 0)
        bad += not (g.agrees_with(f) and f.agrees_with(g))
    return _check("psi_phi_identity", bad == 0, f"{100 - bad}/100 samples")


def _suite_commutation(cfg: RunConfig, rng: random.Random) -> dict:
    ring = CoeffRing(cfg.prime, cfg.precision + 4)
    chi = default_chi(cfg.prime)
    samples = [random_laurent(rng, ring, 2, -4, 4, 4) for _ in range(20)]
    ops = [OperatorSpec("phi", 0), OperatorSpec("phi", 1), OperatorSpec("gamma", 0, chi), OperatorSpec("gamma", 1, chi)]
    rep = check_commutation(ops, samples)
    pos = [random_laurent(rng, ring, 2, 0, 4, 4) for _ in range(20)]
    rep2 = check_commutation([OperatorSpec("psi", 0), OperatorSpec("gamma", 0, chi)], pos)
    ok = rep.passed and rep2.passed
    return _check("operator_commutation", ok, f"{rep.checked + rep2.checked} compositions, {len(rep.failures) + len(rep2.failures)} failures")


def _suite_gauss(cfg: RunConfig, rng: random.Random) -> dict:
    ring = CoeffRing(cfg.prime, 30)
    cap = radius_cap(cfg.prime)
    bad = 0
    for _ in range(50):
        f, g = random_polynomial(rng, ring), random_polynomial(rng, ring)
        for t in (cap, cap / 2, cap / 5):
            bad += gauss_valuation(f * g, t) != gauss_valuation(f, t) + gauss_valuation(g, t)
    return _check("gauss_multiplicativity", bad == 0, f"{150 - bad}/150 products")


def _suite_complexes(cfg: RunConfig, rng: random.Random) -> dict:
    bad = 0
    total = 0
    for M in rank1_corpus(cfg.prime)[::4]:
        for build in (build_phi_complex, build_psi_complex, build_phi_gamma_complex, build_psi_gamma_complex):
            total += 1
            bad += not build(M, cfg.window, cfg.precision).d_squared_zero()
    return _check("d_squared_zero", bad == 0, f"{total - bad}/{total} complexes")


def _suite_cohomology(cfg: RunConfig, rng: random.Random) -> dict:
    M = rank1_corpus(cfg.prime)[0]
    res = cohomology_dims(build_phi_gamma_complex(M, cfg.window, cfg.precision), stability_steps=cfg.stability_steps)
    if not res.stable:
        return _check("trivial_cohomology", None, f"unstable: {res.dims}")
    return _check("trivial_cohomology", res.dims == (1, 2, 0), f"dims {res.dims}")


def _suite_cover(cfg: RunConfig, rng: random.Random) -> dict:
    p = cfg.prime
    cap = radius_cap(p)
    worst = 0
    for n in (1, 2):
        cover = frobenius_cover((cap,) * n, (3,) * n, p)
        for _ in range(200):
            pt = [Fraction(rng.randint(1, 10**6), 10**6) * cap / p**3 * (p**3 - 1) + cap / p**3 for _ in range(n)]
            worst = max(worst, cover_multiplicity(cover, pt) / 2**n)
    ring = CoeffRing(p, cfg.precision + 4)
    glue_ok = all(glue_global(identity_family(ring, 1, d, cap, 2), precision=cfg.precision).free for d in (1, 2))
    return _check("cover_and_glue", worst <= 1 and glue_ok, f"max multiplicity ratio {worst}, identity families glue free: {glue_ok}")


def _suite_cocycle(cfg: RunConfig, rng: random.Random) -> dict:
    ring = CoeffRing(cfg.prime, cfg.precision + 6)
    M = rank1_corpus(cfg.prime, ring)[14]
    rep = check_cocycle(spread_module(M, (2, 2)), cfg.precision)
    return _check("cocycle", rep.passed, f"{rep.checked} triples")


def _suite_bpairs(cfg: RunConfig, rng: random.Random) -> dict:
    ok = all(fundamental_sequence_check(k, m, n).exact for k in range(1, 4) for m in range(1, 4) for n in (1, 2))
    return _check("fundamental_sequence", ok, "k, m <= 3, |I'| <= 2")


VERIFY_SUITES: tuple[Callable[[RunConfig, random.Random], dict], ...] = (
    _suite_psi_phi,
    _suite_commutation,
    _suite_gauss,
    _suite_complexes,
    _suite_cohomology,
    _suite_cover,
    _suite_cocycle,
    _suite_bpairs,
)


def _fixture_checks(path: str, cfg: RunConfig) -> list[dict]:
    data = json.loads(Path(path).read_text())
    M = PhiGammaModule.from_json(data, cfg.prime, cfg.precision + 8, validate=False)
    failures = M.check_invariants()
    if not failures:
        return [_check("fixture_invariants", True, path)]
    return [_check(f"fixture_invariants[{inv}]", False, detail) for inv, detail in failures]


def cmd_verify(cfg: RunConfig, fixture: str | None = None) -> tuple[int, dict]:
    checks = []
    for suite in VERIFY_SUITES:
        rng = random.Random(f"{cfg.seed}:{suite.__name__}")
        checks.append(suite(cfg, rng))
    if fixture:
        checks.extend(_fixture_checks(fixture, cfg))
    report = _report("verify", cfg, checks)
    return (0 if report["status"] == "pass" else 1), report


# ---------------------------------------------------------------------------
# cohomology


def load_module(path: str, cfg: RunConfig) -> PhiGammaModule:
    data = json.loads(Path(path).read_text())
    if int(data.get("version", SCHEMA_VERSION)) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported module-spec version {data.get('version')}")
    return PhiGammaModule.from_json(data, cfg.prime, max(cfg.precision + 8, 16))


def _with_interval(M: PhiGammaModule, iv: IntervalVector) -> PhiGammaModule:
    return PhiGammaModule(M.ring, M.nvars, M.rank, iv, M.phi, M.gamma, M.chi, M.tag)


def cmd_cohomology(path: str, cfg: RunConfig) -> tuple[int, dict]:
    M = load_module(path, cfg)
    if M.rank == 0:
        return 0, _report("cohomology", cfg, [], tables={}, sweep=[])
    tables = {}
    checks = []
    runs = {}
    builders = [("phi_gamma", build_phi_gamma_complex)]
    if M.tag.is_plain():
        builders.append(("psi_gamma", build_psi_gamma_complex))
    for name, build in builders:
        res = cohomology_dims(build(M, cfg.window, cfg.precision), stability_steps=cfg.stability_steps)
        runs[name] = res
        tables[name] = res.to_json()
    if "psi_gamma" in runs:
        a, b = runs["phi_gamma"], runs["psi_gamma"]
        if a.stable and b.stable:
            checks.append(_check("phi_psi_agree", a.dims == b.dims, f"{a.dims} vs {b.dims}"))
        else:
            checks.append(_check("phi_psi_agree", None, "unstable entries skipped"))
        if M.nvars == 1:
            cmap = phi_to_psi_morphism(M, cfg.window, cfg.precision)
            checks.append(_check("phi_to_psi_chain_map", cmap.validates(), f"square defects {cmap.defects()}"))
    sweep = []
    for iv in admissible_intervals(M.p, M.nvars):
        res = cohomology_dims(build_phi_gamma_complex(_with_interval(M, iv), cfg.window, cfg.precision), stability_steps=cfg.stability_steps)
        sweep.append({"interval": iv.to_json(), "dims": list(res.dims), "stable": res.stable})
    stable = [tuple(s["dims"]) for s in sweep if s["stable"]]
    if len(stable) == len(sweep):
        checks.append(_check("interval_independence", len(set(stable)) == 1, f"{len(sweep)} intervals"))
    else:
        checks.append(_check("interval_independence", None, "unstable entries skipped"))
    report = _report("cohomology", cfg, checks, tables=tables, sweep=sweep)
    return (0 if report["status"] == "pass" else 1), report


# ---------------------------------------------------------------------------
# cover, norms, bpair


def _fraction_list(text: str) -> list[Fraction]:
    return [Fraction(x) for x in text.split(",")]


def cmd_cover(cfg: RunConfig, nvars: int, depth: int, r0: str | None) -> tuple[int, dict]:
    p = cfg.prime
    base = tuple(_fraction_list(r0)) if r0 else (radius_cap(p),) * nvars
    if len(base) == 1 and nvars > 1:
        base = base * nvars
    cover = frobenius_cover(base, (depth,) * nvars, p)
    rng = random.Random(cfg.seed)
    worst = 0
    edges = [[b / p**k for k in range(depth + 1)] for b in base]
    points = [list(pt) for pt in itertools.product(*edges)]
    for _ in range(1000):
        points.append([b / p**depth + (b - b / p**depth) * Fraction(rng.randint(0, 10**6), 10**6) for b in base])
    for pt in points:
        worst = max(worst, cover_multiplicity(cover, pt))
    checks = [_check("multiplicity_bound", worst <= 2**nvars, f"max {worst} <= {2**nvars}")]
    report = _report("cover", cfg, checks, intervals=[iv.to_json() for iv in cover])
    return (0 if report["status"] == "pass" else 1), report


def _parse_terms(text: str, ring: CoeffRing) -> LaurentElement:
    data = json.loads(text)
    terms = {tuple(int(v) for v in str(k).split(",")): Fraction(c) for k, c in data.items()}
    return LaurentElement.from_terms(ring, terms)


def cmd_norms(cfg: RunConfig, terms: str, radius: str | None, interval: str | None) -> tuple[int, dict]:
    ring = CoeffRing(cfg.prime, max(cfg.precision, 16))
    f = _parse_terms(terms, ring)
    out: dict[str, Any] = {}
    if radius:
        t = _fraction_list(radius)
        out["gauss_valuation"] = gauss_valuation(f, t if len(t) > 1 else t[0])
    if interval:
        s, r = interval.split(":")
        iv = IntervalVector(tuple(_fraction_list(s)), tuple(_fraction_list(r)))
        out["interval_valuation"] = interval_valuation(f, iv)
    if not out:
        raise ConfigError("norms needs --radius and/or --interval")
    return 0, _report("norms", cfg, [], **out)


def _gluing_triple(cfg: RunConfig, gluing: str, k: int, m: int, nvars: int) -> BPairTriple:
    sk = DeRhamSkeleton.uniform(CoeffRing(cfg.prime, cfg.precision), nvars, k, m)
    data = json.loads(gluing)
    if isinstance(data, dict):
        data = [[data]]
    rows = []
    for row in data:
        rows.append(tuple(sk.element({tuple(int(v) for v in str(e).split(",")): Fraction(c) for e, c in g.items()}) for g in row))
    return BPairTriple(sk, len(rows), tuple(rows))


def cmd_bpair(cfg: RunConfig, gluing: str | None, spec: str | None, k: int, m: int, nvars: int) -> tuple[int, dict]:
    if spec:
        T = BPairTriple.from_json(CoeffRing(cfg.prime, cfg.precision), json.loads(Path(spec).read_text()))
    else:
        T = _gluing_triple(cfg, gluing or '{"0": "1"}', k, m, nvars)
    dims = glue_complex(T)
    seq = fundamental_sequence_check(T.skeleton.k, T.skeleton.m, T.skeleton.nvars)
    checks = [_check("fundamental_sequence", seq.exact, json.dumps(seq.to_json(), sort_keys=True))]
    report = _report("bpair", cfg, checks, triple=T.to_json(), H0=dims.h0, H1=dims.h1)
    return (0 if report["status"] == "pass" else 1), report


# ---------------------------------------------------------------------------
# entry point


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--prime", type=int, default=3)
    parser.add_argument("--precision", type=int, default=4, help="p-adic precision N (>= 4)")
    parser.add_argument("--window", type=int, default=1, help="base truncation window")
    parser.add_argument("--stability-steps", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--format", choices=("text", "json"), default="text")
    parser.add_argument("--out", default=None, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robbakit", description="Multivariate Robba rings, (phi, Gamma)-modules and their cohomology.")
    parser.add_argument("--version", action="version", version=f"robbakit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the invariant suites")
    _common(p)
    p.add_argument("--fixture", help="module spec whose invariants are checked as well")

    p = sub.add_parser("cohomology", help="dimension tables for C(phi,Gamma) and C(psi,Gamma)")
    _common(p)
    p.add_argument("spec", help="module-spec JSON file")

    p = sub.add_parser("cover", help="Frobenius interval cover")
    _common(p)
    p.add_argument("--nvars", type=int, default=1)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--r0", default=None, help="comma-separated base radii (default 1/(p-1))")

    p = sub.add_parser("norms", help="Gauss and interval valuations of a Laurent polynomial")
    _common(p)
    p.add_argument("--terms", required=True, help='JSON map of exponents to coefficients, e.g. {"-1": "3", "2": "1"}')
    p.add_argument("--radius", default=None, help="comma-separated radius vector t")
    p.add_argument("--interval", default=None, help="s1,s2:r1,r2")

    p = sub.add_parser("bpair", help="gluing complex of a B-pair triple")
    _common(p)
    p.add_argument("--gluing", default=None, help='rank-1 term map or matrix of term maps, e.g. {"1": "1"}')
    p.add_argument("--spec", default=None, help="triple spec JSON file")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--nvars", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
        if args.command == "verify":
            code, report = cmd_verify(cfg, args.fixture)
        elif args.command == "cohomology":
            code, report = cmd_cohomology(args.spec, cfg)
        elif args.command == "cover":
            code, report = cmd_cover(cfg, args.nvars, args.depth, args.r0)
        elif args.command == "norms":
            code, report = cmd_norms(cfg, args.terms, args.radius, args.interval)
        else:
            code, report = cmd_bpair(cfg, args.gluing, args.spec, args.k, args.m, args.nvars)
    except (ConfigError, OutsideLatticeModel, ValueError, OSError) as exc:
        sys.stderr.write(f"robbakit: error: {exc}\n")
        return 2
    emit(report, cfg)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
