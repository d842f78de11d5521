"""Command-line experiment runner: GGM sweeps, oracle checks and scaling scans as CSV.

Subcommands: ``rvb-ggm``, ``tj-ggm``, ``oracle-check``, ``nc-scan``, ``theorem-scan``.
Each writes RFC-4180 CSV with one leading ``#`` metadata line.

Exit codes: 0 success, 2 validation failure, 3 infeasible size.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import Boundary, build_ladder

log = logging.getLogger("rvbladder")

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE = 0, 2, 3
MAX_RVB_RUNGS = 200
ORACLE_OPEN_RUNGS = 7
ORACLE_PERIODIC_RUNGS = 6
ORACLE_TOL = 1e-10
Z_TOL = 1e-9


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if np.isfinite(x) else str(float(x))
    if isinstance(x, tuple):
        return " ".join(str(v) for v in x)
    return str(x)


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            a, b = part.split(":")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _fraction_list(text: str) -> list[Fraction]:
    return [Fraction(p.strip()) for p in text.split(",") if p.strip()]


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("RVB_LADDER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CLIError(f"RVB_LADDER_THREADS={env!r} is not an integer", EXIT_VALIDATION)
    return os.cpu_count() or 1


def _pmap(fn, items, threads: int):
    """Ordered map; jobs are independent so the thread count never changes results."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _metadata(args, extra: dict | None = None) -> str:
    keys = ["command", "rungs", "boundary", "k", "nel_grid", "j_over_t", "tol", "seed", "hopping"]
    fields = [f"{key}={getattr(args, key)}" for key in keys if getattr(args, key, None) is not None]
    fields.append(f"version={__version__}")
    for key, val in (extra or {}).items():
        fields.append(f"{key}={val}")
    return "# " + " ".join(fields)


def _write_csv(args, header: list[str], rows: list[list], extra: dict | None = None):
    buf = io.StringIO()
    buf.write(_metadata(args, extra) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(args.out).write_text(text)
        except OSError as err:
            raise CLIError(f"cannot write {args.out}: {err}", EXIT_VALIDATION)
    return text


def _boundary(args, default: str) -> Boundary:
    return Boundary.parse(args.boundary or default)


# rvb-ggm -----------------------------------------------------------------


def _rvb_k_values(args, N: int) -> list[int]:
    if args.k is not None:
        ks = _int_list(args.k)
    elif args.nel_grid is not None:
        ks = []
        for n_el in _fraction_list(args.nel_grid):
            k = n_el * N
            if k.denominator != 1:
                raise CLIError(f"n_el={n_el} does not map to an integer k on {N} rungs", EXIT_VALIDATION)
            ks.append(int(k))
    else:
        ks = list(range(N + 1))
    bad = [k for k in ks if not 0 <= k <= N]
    if bad:
        raise CLIError(f"k values {bad} outside 0..{N}", EXIT_VALIDATION)
    return ks


def _rvb_block(N: int, boundary: Boundary, k: int):
    from .recursion import rho_red_open, rho_red_periodic

    return rho_red_periodic(N, k) if boundary is Boundary.PERIODIC else rho_red_open(N, k)


def _check_rvb_size(N: int, boundary: Boundary):
    if N > MAX_RVB_RUNGS:
        raise CLIError(f"{N} rungs exceeds the cap of {MAX_RVB_RUNGS}", EXIT_INFEASIBLE)
    try:
        build_ladder(N, boundary)
    except ValueError as err:
        raise CLIError(str(err), EXIT_INFEASIBLE)
    if N < 2:
        raise CLIError("a two-rung block needs at least 2 rungs", EXIT_INFEASIBLE)


def run_rvb_ggm(args) -> str:
    from .entanglement import ggm_from_block
    from .statevec import dump_rho

    boundary = _boundary(args, "periodic")
    N = _single_rungs(args, 20)
    _check_rvb_size(N, boundary)
    ks = _rvb_k_values(args, N)
    whole = N == 2 and boundary is Boundary.OPEN

    def job(k):
        rho = _rvb_block(N, boundary, k)
        return rho, ggm_from_block(rho, whole_system=whole)

    results = _pmap(job, ks, args.threads)
    rows = []
    for k, (rho, g) in zip(ks, results):
        rows.append([Fraction(k, N), k, g.ggm, g.lambda_max_sq, g.argmax_bipartition])
        if args.dump_rho:
            out = Path(args.dump_rho)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"rho_{boundary.value}_N{N}_k{k}.txt").write_text(dump_rho(rho))
    return _write_csv(
        args,
        ["n_el", "k", "ggm", "lambda_max_sq", "argmax_label"],
        [[float(r[0])] + r[1:] for r in rows],
        {"assume": "four_site_block_sufficient", "block": "rungs_0_1" if boundary is Boundary.PERIODIC else "last_two_rungs"},
    )


def _single_rungs(args, default: int) -> int:
    if args.rungs is None:
        return default
    rungs = _int_list(str(args.rungs))
    if len(rungs) != 1:
        raise CLIError("this command takes a single --rungs value", EXIT_VALIDATION)
    return rungs[0]


# tj-ggm ------------------------------------------------------------------


def run_tj_ggm(args) -> str:
    from .entanglement import ggm_pure
    from .tjmodel import MAX_SITES, TJParams, electron_counts, lanczos_ground_state, sector_basis

    boundary = _boundary(args, "periodic")
    N = _single_rungs(args, 5)
    if 2 * N > MAX_SITES:
        raise CLIError(f"{2 * N} sites exceeds the exact-diagonalization ceiling of {MAX_SITES}", EXIT_INFEASIBLE)
    try:
        spec = build_ladder(N, boundary, require_bipartite=False)
    except ValueError as err:
        raise CLIError(str(err), EXIT_INFEASIBLE)
    grid = _fraction_list(args.nel_grid) if args.nel_grid else [Fraction(e, 2 * N) for e in range(0, 2 * N + 1, 2)]
    sectors = []
    for n_el in grid:
        try:
            sectors.append(electron_counts(spec, n_el))
        except ValueError as err:
            raise CLIError(str(err), EXIT_VALIDATION)
    params = TJParams(1.0, args.j_over_t, fermionic=args.hopping == "fermion")

    def job(sector):
        basis = sector_basis(spec, *sector)
        gs = lanczos_ground_state(params, basis, tol=args.tol, seed=args.seed)
        return gs, ggm_pure(gs.vector)

    results = _pmap(job, sectors, args.threads)
    rows = []
    for n_el, (gs, g) in zip(grid, results):
        flag = "degenerate" if gs.degenerate else "clean"
        rows.append([float(n_el), gs.energy, g.ggm, gs.residual, flag, gs.gap, g.argmax_bipartition])
    return _write_csv(
        args,
        ["n_el", "energy", "ggm", "residual", "gap_flag", "gap", "argmax_label"],
        rows,
        {"sector": "Sz=0", "jw_order": "rung_major"},
    )


# nc-scan -----------------------------------------------------------------


def locate_nc(n_el: np.ndarray, ggm: np.ndarray) -> tuple[float, float, float]:
    """Parabolic refinement around the discrete maximum; returns (n_c, G(n_c), grid n_el)."""
    i = int(np.argmax(ggm))
    if i == 0 or i == len(ggm) - 1:
        return float(n_el[i]), float(ggm[i]), float(n_el[i])
    y0, y1, y2 = ggm[i - 1 : i + 2]
    h = n_el[i] - n_el[i - 1]
    den = y0 - 2 * y1 + y2
    if den >= 0:
        return float(n_el[i]), float(y1), float(n_el[i])
    shift = 0.5 * (y0 - y2) / den
    return float(n_el[i] + shift * h), float(y1 - 0.25 * (y0 - y2) * shift), float(n_el[i])


def rvb_curve(N: int, boundary="periodic") -> tuple[np.ndarray, np.ndarray]:
    from .entanglement import ggm_from_block

    boundary = Boundary.parse(boundary)
    whole = N == 2 and boundary is Boundary.OPEN
    g = np.array([ggm_from_block(_rvb_block(N, boundary, k), whole_system=whole).ggm for k in range(N + 1)])
    return np.arange(N + 1) / N, g


def run_nc_scan(args) -> str:
    boundary = _boundary(args, "periodic")
    sizes = _int_list(str(args.rungs)) if args.rungs is not None else [10, 20, 50, 100, 150]
    for N in sizes:
        _check_rvb_size(N, boundary)

    def job(N):
        return locate_nc(*rvb_curve(N, boundary))

    results = _pmap(job, sizes, args.threads)
    rows = [[2 * N, nc, g, grid] for N, (nc, g, grid) in zip(sizes, results)]
    return _write_csv(
        args, ["sites", "n_c", "ggm_at_nc", "grid_max_nel"], rows, {"assume": "four_site_block_sufficient"}
    )


# oracle-check ------------------------------------------------------------


def oracle_deviation(N: int, boundary: Boundary, golden_dir=None) -> list[dict]:
    """Per-k comparison of recursion blocks and norms against the brute-force oracle."""
    from .coverings import oracle_norm, oracle_rho_red
    from .recursion import z_table
    from .statevec import load_rho

    spec = build_ladder(N, boundary)
    Z = z_table(N, boundary)
    rung_pair = (0, 1) if boundary is Boundary.PERIODIC else (N - 2, N - 1)
    out = []
    for k in range(N + 1):
        rec = _rvb_block(N, boundary, k)
        ora = oracle_rho_red(spec, k, rung_pair)
        diff = np.abs(rec.matrix - ora.matrix)
        z_or = oracle_norm(spec, k)
        row = {
            "rungs": N,
            "boundary": boundary.value,
            "k": k,
            "max_dev": float(diff.max()),
            "z_rel_dev": abs(Z.norm(k) - z_or) / abs(z_or),
            "golden": "",
        }
        if golden_dir is not None:
            path = Path(golden_dir) / f"rho_{boundary.value}_N{N}_k{k}.txt"
            if path.exists():
                gold = load_rho(path.read_text())
                gd = np.abs(rec.matrix - gold.matrix)
                idx = np.unravel_index(int(np.argmax(gd)), gd.shape)
                row["golden"] = f"max_dev={gd.max():.3g}"
                if gd.max() > ORACLE_TOL:
                    row["golden"] += f" at ({idx[0]},{idx[1]}) rec={rec.matrix[idx]!r} gold={gold.matrix[idx]!r}"
                row["golden_dev"] = float(gd.max())
            else:
                row["golden"] = "missing"
        out.append(row)
    return out


def run_oracle_check(args) -> tuple[str, bool]:
    sizes = _int_list(str(args.rungs)) if args.rungs is not None else [2, 3, 4, 5]
    if args.boundary:
        jobs = [(N, Boundary.parse(args.boundary)) for N in sizes]
    else:
        jobs = [(N, Boundary.OPEN) for N in sizes] + [
            (N, Boundary.PERIODIC) for N in sizes if N >= 4 and N % 2 == 0
        ]
    for N, b in jobs:
        cap = ORACLE_PERIODIC_RUNGS if b is Boundary.PERIODIC else ORACLE_OPEN_RUNGS
        if N > cap:
            raise CLIError(f"oracle check is capped at {cap} rungs for {b.value} ladders", EXIT_INFEASIBLE)
        try:
            build_ladder(N, b)
        except ValueError as err:
            raise CLIError(str(err), EXIT_INFEASIBLE)
        if N < 2:
            raise CLIError("a two-rung block needs at least 2 rungs", EXIT_INFEASIBLE)
    results = _pmap(lambda job: oracle_deviation(*job, golden_dir=args.golden_dir), jobs, args.threads)
    rows, ok = [], True
    for block in results:
        for r in block:
            status = r["max_dev"] <= ORACLE_TOL and r["z_rel_dev"] <= Z_TOL
            if r["golden"] == "missing" or r.get("golden_dev", 0.0) > ORACLE_TOL:
                status = False
            ok &= status
            rows.append([r["rungs"], r["boundary"], r["k"], r["max_dev"], r["z_rel_dev"], r["golden"], "pass" if status else "FAIL"])
    text = _write_csv(args, ["rungs", "boundary", "k", "max_dev", "z_rel_dev", "golden", "status"], rows, {"oracle_tol": ORACLE_TOL, "z_tol": Z_TOL})
    return text, ok


# theorem-scan ------------------------------------------------------------


def run_theorem_scan(args) -> tuple[str, bool]:
    from .coverings import build_rvb_state
    from .entanglement import GGM_SITE_CEILING, ggm_pure, theorem_mixedness_scan

    sizes = _int_list(str(args.rungs)) if args.rungs is not None else [2, 3, 4, 5]
    if args.boundary:
        jobs = [(N, Boundary.parse(args.boundary)) for N in sizes]
    else:
        jobs = [(N, Boundary.OPEN) for N in sizes] + [(N, Boundary.PERIODIC) for N in sizes if N >= 4 and N % 2 == 0]
    cells = []
    for N, b in jobs:
        if 2 * N > GGM_SITE_CEILING:
            raise CLIError(f"theorem scan needs the full state; {2 * N} sites is too many", EXIT_INFEASIBLE)
        try:
            spec = build_ladder(N, b)
        except ValueError as err:
            raise CLIError(str(err), EXIT_INFEASIBLE)
        cells.extend((spec, k) for k in range(N + 1))

    def job(cell):
        spec, k = cell
        state = build_rvb_state(spec, k)
        rep = theorem_mixedness_scan(spec, k, state=state)
        g = ggm_pure(state.normalized()).ggm
        return rep, g

    results = _pmap(job, cells, args.threads)
    rows, ok = [], True
    for (spec, k), (rep, g) in zip(cells, results):
        status = rep.status
        if k >= 1 and g <= 1e-6:
            status = "violations"
            rep.violations.append(f"ggm {g:.3g} not positive")
        ok &= status != "violations"
        pt = min(rep.rung_pt_min.values()) if rep.rung_pt_min else float("nan")
        rows.append([spec.rungs, spec.boundary.value, k, g, rep.max_site_purity, rep.max_pair_purity, pt, status, "; ".join(rep.violations)])
    text = _write_csv(
        args,
        ["rungs", "boundary", "k", "ggm", "max_site_purity", "max_pair_purity", "rung_pt_min", "status", "violations"],
        rows,
    )
    return text, ok


# entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rungs", help="number of rungs N (comma list or a:b range for scans)")
    common.add_argument("--boundary", choices=["open", "periodic"])
    common.add_argument("--k", help="dimer counts, e.g. 0,2,5 or 0:10")
    common.add_argument("--nel-grid", dest="nel_grid", help="electron densities, e.g. 0,1/5,2/5")
    common.add_argument("--j-over-t", dest="j_over_t", type=float, default=0.66)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out", default=None, help="output CSV path (default stdout)")
    common.add_argument("--dump-rho", dest="dump_rho", default=None, help="directory for reduced blocks")
    common.add_argument("--golden-dir", dest="golden_dir", default=None)
    common.add_argument("--hopping", choices=["fermion", "qutrit"], default="fermion")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rvbladder", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("rvb-ggm", parents=[common], help="GGM vs n_el for the doped RVB ladder")
    sub.add_parser("tj-ggm", parents=[common], help="GGM vs n_el for t-J ground states")
    sub.add_parser("oracle-check", parents=[common], help="recursion vs brute-force oracle")
    sub.add_parser("nc-scan", parents=[common], help="critical density vs ladder size")
    sub.add_parser("theorem-scan", parents=[common], help="mixed marginals and entangled rungs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.threads = resolve_threads(args.threads)
        if args.tol <= 0:
            raise CLIError("--tol must be positive", EXIT_VALIDATION)
        if args.command == "rvb-ggm":
            run_rvb_ggm(args)
        elif args.command == "tj-ggm":
            run_tj_ggm(args)
        elif args.command == "nc-scan":
            run_nc_scan(args)
        elif args.command == "oracle-check":
            _, ok = run_oracle_check(args)
            if not ok:
                print("oracle-check: deviations above tolerance", file=sys.stderr)
                return EXIT_VALIDATION
        elif args.command == "theorem-scan":
            _, ok = run_theorem_scan(args)
            if not ok:
                print("theorem-scan: property violations found", file=sys.stderr)
                return EXIT_VALIDATION
    except CLIError as err:
        print(f"{args.command}: {err}", file=sys.stderr)
        return err.code
    except ValueError as err:
        print(f"{args.command}: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
