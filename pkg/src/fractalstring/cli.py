"""Command-line front end: sweeps, dataset emission, verification.

Commands

  spectrum   labeled eigenvalue table with oracle cross-column
  ids        integrated density of states / Lyapunov / gap sweep (CSV)
  plane      affine-chart grid of the projective dynamics (escape picture)
  verify     run the full invariant suite, JSON report
  dichotomy  square-summability verdict table over the alpha grid

Output rows carry the hash of the effective configuration so every number
can be re-derived.  Floats are printed with 17 significant digits and the
JSON reports have sorted keys, so identical configurations give byte
identical files regardless of --jobs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import __version__, halfline, renorm_map, spectral, string_oracle, verify
from .errors import DomainError, NonConvergenceError, PreconditionError, WindowError
from .model import Tail, derive_params

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


@dataclass
class RunConfig:
    command: str
    alpha: float = 0.5
    blowup: str = ":tail=1"
    level: int = 0
    depth: int = 12
    window: tuple[float, float] = (-100.0, 0.0)
    tol: float = 1e-12
    max_iter: int = renorm_map.DEFAULT_MAX_ITER
    escape_radius: float = renorm_map.DEFAULT_ESCAPE_RADIUS
    grid: int = 64
    plane: tuple[float, float, float, float, int, int] = (-3.0, 3.0, -3.0, 3.0, 81, 81)
    out: str = "-"
    format: str = "csv"
    jobs: int = 1
    seed: int = 0
    fast: bool = False
    perturb_delta: float = 0.0

    def hash(self) -> str:
        # jobs and the output path do not affect emitted numbers, so they
        # stay out of the configuration identity
        blob = f"version={__version__}\n" + "\n".join(
            f"{f.name}={getattr(self, f.name)!r}"
            for f in fields(self)
            if f.name not in ("out", "jobs")
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def parse_blowup(text: str) -> tuple[tuple[int, ...], Tail]:
    """Parse 'SYMBOLS:tail=T' with T one of 1, 2, none."""
    prefix_txt, _, tail_txt = text.partition(":")
    symbols = tuple(int(c) for c in prefix_txt.strip() if not c.isspace())
    for s in symbols:
        if s not in (1, 2):
            raise DomainError(f"blow-up symbols must be 1 or 2, got {s}")
    tail = Tail.UNDECLARED
    tail_txt = tail_txt.strip()
    if tail_txt:
        key = tail_txt.removeprefix("tail=").strip()
        tail = {
            "1": Tail.ALL_ONES,
            "2": Tail.ALL_TWOS,
            "none": Tail.NONSTATIONARY,
            "undeclared": Tail.UNDECLARED,
        }.get(key)
        if tail is None:
            raise DomainError(f"unknown tail declaration {key!r}")
    return symbols, tail


def _read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"config line without '=': {raw.rstrip()}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _apply_overrides(cfg: RunConfig, file_opts: dict, args: argparse.Namespace) -> RunConfig:
    def set_field(name: str, raw):
        if raw is None:
            return
        cur = getattr(cfg, name)
        if name == "window":
            a, b = (float(s) for s in str(raw).split(","))
            setattr(cfg, name, (a, b))
        elif name == "plane":
            parts = str(raw).split(",")
            setattr(
                cfg,
                name,
                (
                    float(parts[0]),
                    float(parts[1]),
                    float(parts[2]),
                    float(parts[3]),
                    int(parts[4]),
                    int(parts[5]),
                ),
            )
        elif isinstance(cur, bool):
            setattr(cfg, name, str(raw).lower() in ("1", "true", "yes"))
        elif isinstance(cur, int):
            setattr(cfg, name, int(raw))
        elif isinstance(cur, float):
            setattr(cfg, name, float(raw))
        else:
            setattr(cfg, name, str(raw))

    for key, val in file_opts.items():
        if key == "command":
            continue
        if not hasattr(cfg, key):
            raise DomainError(f"unknown config key {key!r}")
        set_field(key, val)
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        set_field(f.name, getattr(args, f.name, None))
    return cfg


def _emit(rows: list[dict], header: list[str], cfg: RunConfig) -> None:
    if cfg.format == "json":
        doc = {
            "command": cfg.command,
            "version": __version__,
            "config_hash": cfg.hash(),
            "rows": [{k: row[k] for k in header} for row in rows],
        }
        text = json.dumps(doc, sort_keys=True, default=_fmt, indent=1) + "\n"
    else:
        lines = [",".join(header + ["config_hash"])]
        for row in rows:
            cells = [_fmt(row[k]) for k in header] + [cfg.hash()]
            quoted = [
                f'"{c}"' if ("," in c or '"' in c or "\n" in c) else c for c in cells
            ]
            lines.append(",".join(quoted))
        text = "\n".join(lines) + "\n"
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w") as fh:
            fh.write(text)


def _parallel_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig) -> int:
    p = derive_params(cfg.alpha)
    lo, hi = cfg.window
    if lo >= hi:
        raise WindowError(f"empty window [{lo}, {hi})")
    header = ["k", "p", "value", "oracle_value", "defect"]
    if hi <= lo:
        _emit([], header, cfg)
        return EXIT_OK
    needed = p.gamma**cfg.level * abs(lo) * 1.05
    rs = spectral.find_root_set(
        p,
        (-max(needed, 1.0), -min(0.4, abs(lo) / 4.0)),
        points_per_octave=cfg.grid,
        rel_tol=cfg.tol,
    )
    labels = spectral.enumerate_eigenvalues(rs, cfg.level, (lo, hi), "neumann")
    string = string_oracle.discretize(p, (1,) * cfg.level, depth=cfg.level + cfg.depth)
    op = string_oracle.build_operator(string, "neumann")
    oracle_vals = string_oracle.eigen_solve(op, (lo, min(hi, -1e-9)), tol=cfg.tol).values.tolist()
    if any(e.value == 0.0 for e in labels):
        oracle_vals.append(0.0)
    rows = []
    for e in labels:
        if oracle_vals:
            nearest = min(oracle_vals, key=lambda v: abs(v - e.value))
            defect = abs(nearest - e.value) / max(abs(e.value), 1e-300) if e.value else abs(nearest)
        else:
            nearest, defect = math.nan, math.nan
        rows.append(
            {"k": e.k, "p": e.p, "value": e.value, "oracle_value": nearest, "defect": defect}
        )
    _emit(rows, header, cfg)
    return EXIT_OK


def cmd_ids(cfg: RunConfig) -> int:
    p = derive_params(cfg.alpha)
    symbols, tail = parse_blowup(cfg.blowup)
    if len(symbols) < cfg.level:
        symbols = symbols + (1,) * (cfg.level - len(symbols))
    lo, hi = cfg.window
    lams = [float(x) for x in np.linspace(lo, min(hi, -1e-6), cfg.grid)]
    est_n = spectral.ids(p, symbols, cfg.level, lams, boundary="neumann")
    est_d = spectral.ids(p, symbols, cfg.level, lams, boundary="dirichlet")

    def one(lam: float) -> tuple[float, str]:
        z = spectral.lyapunov(lam, p, max_iter=cfg.max_iter, escape_radius=cfg.escape_radius)
        c = spectral.classify(
            lam,
            p,
            spectral.EscapeConfig(max_iter=cfg.max_iter, escape_radius=cfg.escape_radius),
        )
        return z.zeta, c.verdict.value

    extras = _parallel_map(one, lams, cfg.jobs)
    no_gaps = abs(p.delta - 1.0) < 1e-12
    rows = []
    for lam, en, ed, (zeta, verdict) in zip(lams, est_n, est_d, extras):
        rows.append(
            {
                "lambda": lam,
                "ids_neumann": en.normalized,
                "ids_dirichlet": ed.normalized,
                "zeta": zeta,
                "classification": verdict,
                "note": "no gaps expected" if no_gaps else "",
            }
        )
    _emit(rows, ["lambda", "ids_neumann", "ids_dirichlet", "zeta", "classification", "note"], cfg)
    return EXIT_OK


def cmd_plane(cfg: RunConfig) -> int:
    p = derive_params(cfg.alpha)
    x0, x1, y0, y1, nx, ny = cfg.plane
    xs = np.linspace(x0, x1, int(nx))
    ys = np.linspace(y0, y1, int(ny))

    def one(point) -> dict:
        x, y = point
        orb = renorm_map.green(
            (x, y),
            p,
            max_iter=min(cfg.max_iter, 60),
            escape_radius=cfg.escape_radius,
            stop_on_convergence=True,
        )
        r = renorm_map.hyperbola_form((x, y, 1.0))
        dline = abs(renorm_map.line_form((x, y, 1.0), p)) / math.sqrt(x * x + y * y + 1.0)
        dcurve = abs(r) / (x * x + y * y + 1.0)
        return {
            "x": x,
            "y": y,
            "green": orb.green_estimate,
            "bounded": int(orb.bounded),
            "r_sign": int(np.sign(r)),
            "dist_to_collapsed_line": dline,
            "dist_to_hyperbola": dcurve,
        }

    pts = [(float(x), float(y)) for y in ys for x in xs]
    rows = _parallel_map(one, pts, cfg.jobs)
    _emit(
        rows,
        ["x", "y", "green", "bounded", "r_sign", "dist_to_collapsed_line", "dist_to_hyperbola"],
        cfg,
    )
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    vcfg = verify.VerifyConfig(seed=cfg.seed, fast=cfg.fast, perturb_delta=cfg.perturb_delta)
    t0 = time.perf_counter()
    results = verify.run_checks(vcfg, jobs=cfg.jobs)
    total = time.perf_counter() - t0
    doc = {
        "command": "verify",
        "version": __version__,
        "config_hash": cfg.hash(),
        "all_passed": all(r.passed for r in results),
        "checks": [
            {"name": r.name, "passed": r.passed, "detail": r.detail} for r in results
        ],
    }
    text = json.dumps(doc, sort_keys=True, default=_fmt, indent=1) + "\n"
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    # timing goes to the human log only; the report body stays deterministic
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.name:32s} {r.seconds:8.2f}s  {r.detail}", file=sys.stderr)
    print(f"verify: {sum(r.passed for r in results)}/{len(results)} checks passed "
          f"in {total:.1f}s", file=sys.stderr)
    return EXIT_OK if doc["all_passed"] else EXIT_CHECK_FAILURE


def cmd_dichotomy(cfg: RunConfig) -> int:
    alphas = (0.25, 1.0 / 3.0, 0.45, 0.55, 2.0 / 3.0, 0.75)
    rows = []
    for alpha in alphas:
        p = derive_params(alpha)
        rs = spectral.find_root_set(p, (-600.0, -0.5))
        gap_evidence = ""
        if abs(p.delta - 1.0) > 1e-12:
            res = spectral.classify(rs.root(1), p, verify.GAP_ESCAPE_CONFIG)
            zeta = spectral.lyapunov(rs.root(1), p).zeta
            gap_evidence = f"ladder point verdict={res.verdict.value} zeta={zeta:.3e}"
        else:
            gap_evidence = "no gaps expected"
        for boundary in (halfline.NEUMANN, halfline.DIRICHLET):
            rep = halfline.build_eigenfunction((1, 0), boundary, p, rs, target_level=6)
            ns = halfline.norm_series(rep)
            rows.append(
                {
                    "alpha": alpha,
                    "delta": p.delta,
                    "boundary": boundary,
                    "verdict": ns.verdict,
                    "ratios_first5": " ".join(f"{r:.10g}" for r in ns.ratios_cascade[:5]),
                    "gap_evidence": gap_evidence,
                }
            )
    _emit(rows, ["alpha", "delta", "boundary", "verdict", "ratios_first5", "gap_evidence"], cfg)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fractalstring",
        description="Spectral laboratory for the self-similar string operator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("spectrum", "labeled eigenvalues with oracle cross-check"),
        ("ids", "integrated density of states / Lyapunov sweep"),
        ("plane", "projective-plane escape picture dataset"),
        ("verify", "run the invariant suite"),
        ("dichotomy", "square-summability verdict table"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--blowup", help="blow-up prefix and tail, e.g. '121:tail=1'")
        sp.add_argument("--level", type=int, help="blow-up level")
        sp.add_argument("--depth", type=int, help="oracle subdivision depth")
        sp.add_argument("--window", help="spectral window 'a,b'")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--escape-radius", dest="escape_radius", type=float)
        sp.add_argument("--grid", type=int, help="sweep resolution / points per octave")
        sp.add_argument("--plane", help="plane grid 'x0,x1,y0,y1,nx,ny'")
        sp.add_argument("--out", help="output path, '-' for stdout")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--fast", action="store_const", const=True)
        sp.add_argument(
            "--perturb-delta",
            dest="perturb_delta",
            type=float,
            help="testing hook: corrupt the planar map coefficient relatively",
        )
    return parser


COMMANDS = {
    "spectrum": cmd_spectrum,
    "ids": cmd_ids,
    "plane": cmd_plane,
    "verify": cmd_verify,
    "dichotomy": cmd_dichotomy,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage problems via exit
        return int(exc.code or 0)
    cfg = RunConfig(command=args.command)
    try:
        file_opts = _read_config_file(args.config) if args.config else {}
        cfg = _apply_overrides(cfg, file_opts, args)
        return COMMANDS[args.command](cfg)
    except (DomainError, WindowError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
