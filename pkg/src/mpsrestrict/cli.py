"""Command-line interface.

Verbs:

* ``analyze``  — per-length restriction table (probability mass, average
  entropy, quantum and classical CMI, average purity, decay series w and f),
  rate estimates, a purity verdict and a local-Hamiltonian fit block.
* ``sample``   — measurement trajectories with exact conditional weights.
* ``generate`` — write a Haar-random or constructive model file.
* ``check``    — validate a model file and print a short summary.

Exit codes: 0 success, 2 enumeration guard tripped, 3 invalid model or
parameters, 4 internal numerical inconsistency.

Reports embed the library version, the seed and every guard that shaped the
run.  All enumerations are deterministic; with ``--threads`` > 1 the per-n
work is fanned out but recombined in fixed order, so output bytes do not
depend on the thread count (which is therefore not recorded).
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .chain import BoundaryPair, ChainGeometry, KrausFamily, fixed_point
from .errors import (
    CompletionFailed,
    EnumerationTooLarge,
    MpsRestrictError,
    NonConvergent,
    NumericalInconsistency,
    SearchBudgetExceeded,
)
from .gibbs import (
    cmi_decomposition_check,
    local_hamiltonian,
    partition_function,
)
from .models import BUILTINS, clock, damping, jordan, markov
from .modelio import load_model, save_model
from .purity import (
    DecaySeries,
    constructive_purity_family,
    estimate_rate,
    haar_kraus,
    purity_verdict,
    w_series,
)
from .restriction import (
    DEFAULT_GUARD,
    CmiReport,
    RestrictionContext,
    chain_distribution,
    classical_cmi,
    restriction_scan,
    window_distribution,
)
from .trajectories import sample_trajectory

__all__ = ["main", "build_parser"]

_PER_N_COLUMNS = (
    "n",
    "p_sum",
    "avg_entropy",
    "quantum_cmi",
    "classical_cmi",
    "avg_purity_q",
    "w",
    "f",
)

# The purity staircase materializes all d^n products, so its horizon is
# capped more tightly than the streaming scans.
_PURITY_ENUM_CAP = 20_000


def _finite_or_none(x: float | None) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def _rates_obj(series: DecaySeries) -> dict[str, Any]:
    return {
        "fitted": _finite_or_none(series.fitted_rate),
        "fekete": _finite_or_none(series.fekete_rate),
        "all_zero": bool(series.all_zero),
    }


def _plain(obj: Any) -> Any:
    """Recursively convert numpy scalars so json can serialize the report."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_geometry(raw: str) -> ChainGeometry:
    parts = raw.split(",")
    if len(parts) != 3:
        raise ValueError(f"--geometry expects 'a,b,c', got {raw!r}")
    try:
        a, b, c = (int(p) for p in parts)
    except ValueError as exc:
        raise ValueError(f"--geometry entries must be integers, got {raw!r}") from exc
    return ChainGeometry(len_a=a, len_b=b, len_c=c)


def _parse_transition(raw: str) -> list[list[float]]:
    try:
        return [[float(x) for x in row.split(",")] for row in raw.split(";")]
    except ValueError as exc:
        raise ValueError(f"--p expects rows like '0.8,0.2;0.3,0.7', got {raw!r}") from exc


def _resolve_model(args: argparse.Namespace):
    """Returns (kraus, label, source, boundaries, file_geometry)."""
    if args.model:
        mf = load_model(args.model)
        label = mf.label or Path(args.model).stem
        return mf.kraus, label, str(args.model), mf.boundaries, mf.geometry
    name = args.builtin
    if name not in BUILTINS:
        raise ValueError(
            f"unknown builtin {name!r}; choices: {', '.join(sorted(BUILTINS))}"
        )
    if name == "jordan":
        K = jordan(args.dim if args.dim is not None else 4)
    elif name == "clock":
        K = clock(args.dim if args.dim is not None else 3)
    elif name == "damping":
        K = damping(args.gamma)
    elif name == "markov":
        K = markov(_parse_transition(args.p) if args.p else None)
    else:
        K = BUILTINS[name]()
    return K, name, f"builtin:{name}", None, None


def _normalization_residual(K: KrausFamily) -> float:
    gram = np.einsum("xba,xbc->ac", K.ops.conj(), K.ops)
    return float(np.linalg.norm(gram - np.eye(K.D)))


def _purity_horizon(d: int, nmax: int, guard: int) -> int:
    cap = min(guard, _PURITY_ENUM_CAP)
    n = 1
    while n + 1 <= nmax and d ** (n + 1) <= cap:
        n += 1
    return n


def _per_n_row(
    ctx: RestrictionContext,
    n: int,
    finite: bool,
    K: KrausFamily,
    boundaries: BoundaryPair | None,
    len_a: int,
    len_c: int,
    guard: int,
) -> dict[str, Any]:
    summary = restriction_scan(ctx, n, guard=guard, threads=1)
    geom = ChainGeometry(len_a=len_a, len_b=n, len_c=len_c)
    if finite:
        dist = chain_distribution(K, boundaries, geom, guard=guard)
    else:
        dist = window_distribution(ctx, geom.total, guard=guard)
    cls = max(0.0, classical_cmi(dist, geom))
    report = CmiReport(
        n=n,
        classical_cmi=cls,
        quantum_cmi=2.0 * summary.avg_entropy,
        avg_entropy=summary.avg_entropy,
        avg_purity_q=summary.avg_purity_q,
    )
    return {
        "n": n,
        "p_sum": summary.p_sum,
        "avg_entropy": report.avg_entropy,
        "quantum_cmi": report.quantum_cmi,
        "classical_cmi": report.classical_cmi,
        "avg_purity_q": report.avg_purity_q,
        "w": None,  # filled from the w series afterwards
        "f": summary.f_value,
    }


def _gibbs_block(dist, ell: int) -> dict[str, Any]:
    if not (1 <= ell <= dist.length - 2):
        raise ValueError(
            f"--ell must satisfy 1 <= ell <= sites-2 = {dist.length - 2}, got {ell}"
        )
    if dist.min_entry <= 0.0:
        dist = dist.smoothed(1e-8)
    h = local_hamiltonian(dist, ell)
    z = partition_function(h)
    lhs, rhs = cmi_decomposition_check(dist, ell)
    return {
        "sites": dist.length,
        "ell": ell,
        "smoothing_eps": dist.smoothing_eps,
        "partition_function": z,
        "relative_entropy": lhs,
        "cmi_sum": rhs,
        "identity_gap": abs(lhs - rhs),
    }


def cmd_analyze(args: argparse.Namespace) -> int:
    K, label, source, boundaries, file_geometry = _resolve_model(args)
    flag_geometry = _parse_geometry(args.geometry)
    guard = int(args.guard)
    nmax = int(args.nmax)
    if nmax < 1:
        raise ValueError(f"--nmax must be >= 1, got {nmax}")

    finite = boundaries is not None
    if finite:
        base = file_geometry if file_geometry is not None else flag_geometry
        len_a, len_c = base.len_a, base.len_c
        ctx = RestrictionContext.from_boundaries(
            K, boundaries, ChainGeometry(len_a=len_a, len_b=1, len_c=len_c)
        )
    else:
        len_a, len_c = flag_geometry.len_a, flag_geometry.len_c
        ctx = RestrictionContext.stationary(K)

    fp = fixed_point(K)

    # Warm the context caches sequentially so threaded rows only read them.
    _ = ctx.sqrt_sigma
    for n in range(1, nmax + max(len_a + len_c, 0) + 1):
        ctx.k2_for(n)

    def row(n: int) -> dict[str, Any]:
        return _per_n_row(ctx, n, finite, K, boundaries, len_a, len_c, guard)

    ns = list(range(1, nmax + 1))
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=int(args.threads)) as pool:
            rows = list(pool.map(row, ns))
    else:
        rows = [row(n) for n in ns]

    w = w_series(K, nmax, guard=guard)
    for r in rows:
        r["w"] = w.value_at(r["n"])
    f_ser = DecaySeries.from_values((r["n"], r["f"]) for r in rows)
    s_ser_rates = estimate_rate((r["n"], r["avg_entropy"]) for r in rows)

    verdict = purity_verdict(
        K, _purity_horizon(K.d, nmax, guard), tol=float(args.tol), guard=guard
    )

    gibbs_sites = flag_geometry.total
    if finite:
        gdist = chain_distribution(
            K, boundaries, ChainGeometry(len_a, max(gibbs_sites - len_a - len_c, 1), len_c), guard=guard
        )
    else:
        gdist = window_distribution(ctx, gibbs_sites, guard=guard)
    gibbs = _gibbs_block(gdist, int(args.ell))

    report = {
        "schema_version": 1,
        "library_version": __version__,
        "label": label,
        "source": source,
        "seed": int(args.seed),
        "mode": "finite" if finite else "stationary",
        "guards": {
            "enumeration": guard,
            "nmax": nmax,
            "ell": int(args.ell),
            "geometry": [flag_geometry.len_a, flag_geometry.len_b, flag_geometry.len_c],
            "tol": float(args.tol),
        },
        "model": {
            "d": K.d,
            "D": K.D,
            "normalization_residual": _normalization_residual(K),
        },
        "fixed_point": {
            "gap": fp.gap,
            "primitive": fp.primitive,
            "rho_min_eigenvalue": float(np.linalg.eigvalsh(fp.rho)[0]),
        },
        "per_n": rows,
        "rates": {
            "w": _rates_obj(w),
            "f": _rates_obj(f_ser),
            "avg_entropy": {
                "fitted": _finite_or_none(s_ser_rates[0]),
                "fekete": _finite_or_none(s_ser_rates[1]),
            },
        },
        "purity": {
            "status": verdict.status,
            "evidence": verdict.evidence,
            "n_max": verdict.n_max,
            "span_passed_at": verdict.span_passed_at,
            "span_ranks": list(verdict.span_ranks),
            "correctable_ranks": None
            if verdict.correctable_ranks is None
            else list(verdict.correctable_ranks),
            "w_fitted_rate": _finite_or_none(verdict.w_fitted_rate),
        },
        "gibbs": gibbs,
    }

    if args.format == "csv":
        text = _per_n_csv(rows)
    else:
        text = json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"
    _emit(text, args.out)
    return 0


def _per_n_csv(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(_PER_N_COLUMNS) + "\n")
    for r in rows:
        buf.write(",".join(repr(float(r[c])) if c != "n" else str(r[c]) for c in _PER_N_COLUMNS))
        buf.write("\n")
    return buf.getvalue()


def cmd_sample(args: argparse.Namespace) -> int:
    K, label, source, _boundaries, _geometry = _resolve_model(args)
    steps = int(args.nmax)
    count = int(args.trajectories)
    if count < 1:
        raise ValueError(f"--trajectories must be >= 1, got {count}")
    rows = []
    for t in range(count):
        trace = sample_trajectory(K, steps, seed=int(args.seed), stream=t)
        for step, (y, M, pr) in enumerate(
            zip(trace.outcomes, trace.m_ops, trace.probs), start=1
        ):
            lam = np.linalg.eigvalsh(M)[::-1]
            rows.append(
                {
                    "trajectory": t,
                    "step": step,
                    "outcome": y,
                    "lambda1": float(lam[0]),
                    "lambda2": float(lam[1]) if lam.size > 1 else 0.0,
                    "path_prob": pr,
                }
            )
    if args.format == "json":
        doc = {
            "schema_version": 1,
            "library_version": __version__,
            "label": label,
            "source": source,
            "seed": int(args.seed),
            "steps": steps,
            "trajectories": count,
            "rows": rows,
        }
        text = json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"
    else:
        cols = ("trajectory", "step", "outcome", "lambda1", "lambda2", "path_prob")
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for r in rows:
            buf.write(
                ",".join(
                    str(r[c]) if c in ("trajectory", "step", "outcome") else repr(float(r[c]))
                    for c in cols
                )
                + "\n"
            )
        text = buf.getvalue()
    _emit(text, args.out)
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    if args.kind == "haar":
        K = haar_kraus(int(args.dim), int(args.phys), int(args.seed))
        label = f"haar-D{args.dim}-d{args.phys}-seed{args.seed}"
    else:
        K = constructive_purity_family(int(args.dim), int(args.phys))
        label = f"constructive-D{args.dim}-d{args.phys}"
    save_model(args.out, K, label=args.label or label)
    sys.stderr.write(f"wrote {args.out}: d={K.d}, D={K.D}, label={args.label or label}\n")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    mf = load_model(args.path)
    K = mf.kraus
    lines = [
        f"format: valid kraus-family model",
        f"label: {mf.label or '(none)'}",
        f"d: {K.d}",
        f"D: {K.D}",
        f"normalization residual: {_normalization_residual(K):.3e}",
        f"boundaries: {'present' if mf.boundaries is not None else 'absent'}",
    ]
    if mf.geometry is not None:
        g = mf.geometry
        lines.append(f"geometry: ({g.len_a}, {g.len_b}, {g.len_c})")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--builtin", help=f"built-in family: {', '.join(sorted(BUILTINS))}")
    grp.add_argument("--model", help="path to a kraus-family model file (JSON)")
    p.add_argument("--dim", type=int, default=None, help="builtin parameter: jordan block size / clock dimension")
    p.add_argument("--gamma", type=float, default=0.5, help="builtin parameter: damping strength")
    p.add_argument("--p", default=None, help="builtin parameter: markov rows, e.g. '0.8,0.2;0.3,0.7'")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="RNG seed recorded in the report")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--guard", type=int, default=DEFAULT_GUARD, help="max d^n strings per enumeration")
    p.add_argument("--tol", type=float, default=1e-8, help="scalar-compression tolerance for the purity staircase")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpsrestrict",
        description="classical restrictions of matrix product states: "
        "entropies, conditional mutual information, local-Hamiltonian fits, "
        "purity certification and trajectory sampling",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="per-length restriction report")
    _add_model_flags(pa)
    _add_common_flags(pa)
    pa.add_argument("--nmax", type=int, default=6, help="largest block length in the per-n table")
    pa.add_argument("--ell", type=int, default=2, help="interaction range of the fitted local Hamiltonian")
    pa.add_argument(
        "--geometry",
        default="2,2,2",
        help="a,b,c window sites: a/c flank the block for classical CMI, a+b+c is the fit chain",
    )
    pa.add_argument("--threads", type=int, default=1, help="worker threads (outputs are thread-count independent)")
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("sample", help="draw measurement trajectories")
    _add_model_flags(ps)
    _add_common_flags(ps)
    ps.add_argument("--nmax", type=int, default=8, help="steps per trajectory")
    ps.add_argument("--trajectories", type=int, default=100, help="number of trajectories")
    ps.set_defaults(func=cmd_sample)

    pg = sub.add_parser("generate", help="write a model file")
    pg.add_argument("kind", choices=("haar", "constructive"))
    pg.add_argument("--dim", type=int, default=3, help="bond dimension D")
    pg.add_argument("--phys", type=int, default=5, help="physical dimension d")
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--label", default=None)
    pg.add_argument("--out", required=True, help="output model path")
    pg.set_defaults(func=cmd_generate)

    pc = sub.add_parser("check", help="validate a model file")
    pc.add_argument("path")
    pc.set_defaults(func=cmd_check)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except EnumerationTooLarge as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (NumericalInconsistency, NonConvergent, SearchBudgetExceeded, CompletionFailed) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 4
    except MpsRestrictError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
