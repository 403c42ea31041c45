"""Command-line front end: ``pcrkit run | leak | sweep-accuracy | ingest``.

Exit codes: 0 on success, 1 on invalid input or parameters, 2 when an
enumeration would exceed its budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import oracle
from .field import FieldError
from .leakage import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    JointModel,
    LeakageError,
    Observable,
    exact_mi,
    ipcr_leakage,
    sampled_mi,
)
from .model import (
    Database,
    IngestError,
    QuantizationConfig,
    ingest_csv,
    quantize,
    read_database,
    read_real_matrix,
    read_vectors,
    write_vectors,
)
from .runtime import execute_session, provision
from .schemes import ParamError, SchemeParams

GRID_PRESET = {"R": 4, "d": 2, "M": 5, "log_base": 757}
GRID_PRESET_ROWS = (("baseline", 1), ("diff", 1), ("mask", 2), ("mask", 3))
IPCR_PRESET = {"R": 3, "d": 3, "M": 3, "L": 28, "log_base": 757}


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0] >> 1)


# --- output -----------------------------------------------------------------


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writeheader()
        for r in rows:
            w.writerow({k: ";".join(map(str, v)) if isinstance(v, (list, tuple)) else v for k, v in r.items()})
    return buf.getvalue()


def _emit(args, doc, rows: list[dict]) -> None:
    text = _csv_text(rows) if args.format == "csv" else json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- run --------------------------------------------------------------------


def _scheme_params(args, db) -> SchemeParams:
    s = args.scheme
    d_min = args.dmin
    if s in ("mask", "mask_plus") and d_min is None:
        if not args.rejected:
            raise ParamError("mask schemes need --dmin or --rejected to compute it")
        _, xs = read_vectors(args.rejected)
        metric = oracle.Metric.weighted(args.w) if s == "mask_plus" else oracle.L2
        d_min = oracle.empirical_d_min(db.rows(), xs, metric)
    L1 = args.L1 if args.L1 is not None else (max(args.w) if args.w else 1)
    return SchemeParams.create(
        s, args.R if args.R is not None else db.R, db.d, db.M, args.q,
        L=args.L, L1=L1, F=args.F, d_min=d_min or 1, k=args.k,
    )


def cmd_run(args) -> int:
    db = read_database(args.db, args.R)
    if args.x is not None:
        queries = [tuple(args.x)]
    elif args.rejected:
        queries = read_vectors(args.rejected)[1]
    else:
        raise ParamError("give --x or --rejected")
    params = _scheme_params(args, db)
    nodes = provision(db, params, args.seed)
    results, rows = [], []
    for i, x in enumerate(queries):
        seed = args.seed if len(queries) == 1 else _derived_seed(args.seed, 3, i)
        tr = execute_session(nodes, x, params, seed, imm=args.imm, w=args.w)
        doc = {"x": list(x), "theta": tr.theta, "no_counterfactual": tr.no_counterfactual}
        if args.show_values:
            doc["values"] = list(tr.values)
        doc["cost"] = {"upload": tr.uploaded, "download": tr.downloaded}
        if args.transcript:
            path = Path(args.transcript)
            if len(queries) > 1:
                path = path.with_name(f"{path.stem}-{i + 1}{path.suffix}")
            tr.save(path)
            doc["transcript"] = str(path)
        results.append(doc)
        row = {"x": list(x), "theta": tr.theta, "no_counterfactual": tr.no_counterfactual,
               "upload": tr.uploaded, "download": tr.downloaded}
        if args.show_values:
            row["values"] = list(tr.values)
        rows.append(row)
    _emit(args, results[0] if len(results) == 1 else results, rows)
    return 0


# --- leak -------------------------------------------------------------------


def _observable(scheme: str, d: int, d_min: int | None, weights, imm_size: int | None, L: int | None):
    if scheme in ("baseline", "baseline_plus"):
        return Observable.baseline(weights)
    if scheme in ("diff", "diff_plus"):
        return Observable.diff(weights)
    if scheme in ("mask", "mask_plus"):
        return Observable.mask(d_min or 1, weights)
    if scheme == "ipcr1":
        if L is None:
            raise ParamError("single-phase leakage needs --L")
        return Observable.ipcr1(d, imm_size or 0, L)
    if scheme == "ipcr2":
        return Observable.ipcr2(d, imm_size or 0)
    raise ParamError(f"no leakage observable for scheme {scheme!r}")


def _leak_reports(args) -> list:
    if args.table2:
        rows = GRID_PRESET_ROWS
        if args.scheme:
            rows = [r for r in rows if r[0] == args.scheme and (args.dmin is None or r[1] == args.dmin)]
            if not rows:
                raise ParamError(f"the --table2 preset has no row for scheme {args.scheme!r}")
        model = JointModel.grid(GRID_PRESET["R"], GRID_PRESET["d"], GRID_PRESET["M"])
        return [
            exact_mi(_observable(s, 2, dm, None, None, None), model, args.log_base or GRID_PRESET["log_base"],
                     budget=args.budget, workers=args.threads)
            for s, dm in rows
        ]
    if args.table4:
        variants = [args.variant] if args.variant else ["single_phase", "two_phase"]
        sizes = [args.imm_size] if args.imm_size is not None else list(range(IPCR_PRESET["d"] + 1))
        return [
            ipcr_leakage(v, IPCR_PRESET["R"], IPCR_PRESET["d"], IPCR_PRESET["M"], k, args.L or IPCR_PRESET["L"],
                         args.log_base or IPCR_PRESET["log_base"], budget=args.budget, workers=args.threads)
            for v in variants for k in sizes
        ]
    if not args.scheme:
        raise ParamError("give --scheme, --table2 or --table4")
    base = args.log_base or 757
    if args.sampled:
        if not (args.accepted and args.rejected and args.M):
            raise ParamError("--sampled needs --accepted, --rejected and --M")
        _, pool = read_vectors(args.accepted)
        _, xs = read_vectors(args.rejected)
        obs = _observable(args.scheme, len(pool[0]), args.dmin, args.w, args.imm_size, args.L)
        return [sampled_mi(obs, xs, pool, args.M, args.samples, args.seed, base, budget=args.budget)]
    if None in (args.R, args.d, args.M):
        raise ParamError("exact leakage needs --R, --d and --M (or a table preset)")
    if args.scheme in ("ipcr1", "ipcr2"):
        variant = "single_phase" if args.scheme == "ipcr1" else "two_phase"
        return [ipcr_leakage(variant, args.R, args.d, args.M, args.imm_size or 0, args.L, base,
                             budget=args.budget, workers=args.threads)]
    obs = _observable(args.scheme, args.d, args.dmin, args.w, None, None)
    return [exact_mi(obs, JointModel.grid(args.R, args.d, args.M), base, budget=args.budget, workers=args.threads)]


def cmd_leak(args) -> int:
    reports = _leak_reports(args)
    docs = [r.to_dict() for r in reports]
    rows = [
        {"scheme": r.scheme, "variant": r.variant, "d_min": r.params.get("d_min"), "imm_size": r.params.get("imm_size"),
         "log_base": r.log_base, "value": r.value, "tuples_enumerated": r.tuples_enumerated, "seconds": r.seconds}
        for r in reports
    ]
    _emit(args, docs[0] if len(docs) == 1 else docs, rows)
    return 0


# --- sweep-accuracy ---------------------------------------------------------


def _sweep_round(job) -> list[tuple[int, int, float]]:
    (acc, rej, M, n_queries, levels, dmins, scheme, seed, r, mins, maxs) = job
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(4, r))))
    D = acc[rng.choice(len(acc), M, replace=False)]
    S = rej[rng.choice(len(rej), n_queries, replace=False)]
    true_best = ((S[:, None, :] - D[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    out = []
    for lv in levels:
        cfg = QuantizationConfig.from_ranges(lv, mins, maxs)
        Dq = [quantize(y, cfg).entries for y in D]
        Sq = [quantize(x, cfg).entries for x in S]
        db = Database.from_rows(Dq, cfg.R)
        for dm in dmins:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                params = SchemeParams.create(scheme, cfg.R, len(mins), M, d_min=dm)
            nodes = provision(db, params, _derived_seed(seed, 5, r, lv, dm))
            hits = 0
            for i, xq in enumerate(Sq):
                tr = execute_session(nodes, xq, params, _derived_seed(seed, 6, r, lv, dm, i))
                got = float(((S[i] - D[tr.theta - 1]) ** 2).sum())
                hits += got <= true_best[i]
            out.append((lv, dm, hits / n_queries))
    return out


def sweep_accuracy(
    accepted: np.ndarray,
    rejected: np.ndarray,
    *,
    levels,
    dmins,
    rounds: int = 100,
    M: int = 500,
    queries: int = 50,
    scheme: str = "mask",
    seed: int = 0,
    threads: int | None = 1,
) -> list[dict]:
    """Mean retrieval accuracy per (levels, d_min) against the unquantized nearest neighbour.

    A retrieved record counts as correct when it is no farther from the real
    query than the true nearest record.
    """
    accepted = np.asarray(accepted, dtype=np.float64)
    rejected = np.asarray(rejected, dtype=np.float64)
    if M > len(accepted):
        raise ParamError(f"M={M} exceeds the {len(accepted)} accepted samples")
    if queries > len(rejected):
        raise ParamError(f"{queries} queries per round exceed the {len(rejected)} rejected samples")
    both = np.vstack([accepted, rejected])
    mins, maxs = both.min(axis=0).tolist(), both.max(axis=0).tolist()
    jobs = [(accepted, rejected, M, queries, tuple(levels), tuple(dmins), scheme, seed, r, mins, maxs) for r in range(rounds)]
    if threads and threads > 1 and rounds > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_round = list(pool.map(_sweep_round, jobs))
    else:
        per_round = [_sweep_round(j) for j in jobs]
    out = []
    for k, (lv, dm, _) in enumerate(per_round[0]):
        out.append({"levels": lv, "d_min": dm, "accuracy": float(np.mean([pr[k][2] for pr in per_round]))})
    return out


def cmd_sweep(args) -> int:
    if not (args.accepted and args.rejected):
        raise ParamError("sweep-accuracy needs --accepted and --rejected")
    _, acc = read_real_matrix(args.accepted)
    _, rej = read_real_matrix(args.rejected)
    rows = sweep_accuracy(
        acc, rej, levels=args.levels, dmins=args.dmins, rounds=args.rounds, M=args.M,
        queries=args.queries, scheme=args.scheme, seed=args.seed, threads=args.threads,
    )
    _emit(args, rows, rows)
    return 0


# --- ingest -----------------------------------------------------------------


def cmd_ingest(args) -> int:
    if args.config:
        cfg = QuantizationConfig.from_json(args.config)
    elif args.levels:
        cfg = QuantizationConfig(args.levels)
    else:
        raise IngestError("give --config or --levels")
    if args.label or args.threshold is not None or args.accepted_value is not None:
        cfg = QuantizationConfig(
            cfg.levels, cfg.features, args.label or cfg.label,
            args.accepted_value if args.accepted_value is not None else cfg.accepted_value,
            args.threshold if args.threshold is not None else cfg.accepted_threshold,
            cfg.dedup,
        )
    res = ingest_csv(args.csv, cfg, dedup=True if args.dedup else None)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_vectors(out_dir / "accepted.csv", res.accepted, res.feature_names)
    write_vectors(out_dir / "rejected.csv", res.rejected, res.feature_names)
    (out_dir / "quantization.json").write_text(json.dumps(res.config.to_json(), indent=2) + "\n", encoding="utf-8")
    doc = {
        "accepted": len(res.accepted),
        "rejected": len(res.rejected),
        "duplicates_dropped": res.duplicates_dropped,
        "R": res.config.R,
        "features": res.feature_names,
        "out_dir": str(out_dir),
    }
    _emit(args, doc, [{k: v for k, v in doc.items()}])
    return 0


# --- parser -----------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    p.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="pcrkit", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run one retrieval session per query")
    run.add_argument("--scheme", required=True)
    run.add_argument("--db", required=True, help="quantized accepted-sample CSV")
    run.add_argument("--x", type=_ints, help="query vector, e.g. 1,2")
    run.add_argument("--rejected", help="quantized rejected-sample CSV (queries, and d_min when --dmin is absent)")
    run.add_argument("--R", type=int)
    run.add_argument("--q", type=int)
    run.add_argument("--dmin", type=int)
    run.add_argument("--L", type=int)
    run.add_argument("--L1", type=int)
    run.add_argument("--F", type=int)
    run.add_argument("--k", type=int, default=2)
    run.add_argument("--imm", type=_ints, help="1-based immutable feature indices")
    run.add_argument("--w", type=_ints, help="actionability weights")
    run.add_argument("--show-values", action="store_true", help="include the decoded per-record values")
    run.add_argument("--transcript", help="save the session transcript JSON here")
    run.set_defaults(func=cmd_run)

    leak = sub.add_parser("leak", parents=[common], help="database leakage by enumeration or sampling")
    leak.add_argument("--scheme")
    leak.add_argument("--variant", choices=("single_phase", "two_phase"))
    leak.add_argument("--table2", action="store_true")
    leak.add_argument("--table4", action="store_true")
    leak.add_argument("--sampled", action="store_true")
    leak.add_argument("--R", type=int)
    leak.add_argument("--d", type=int)
    leak.add_argument("--M", type=int)
    leak.add_argument("--L", type=int)
    leak.add_argument("--dmin", type=int)
    leak.add_argument("--imm-size", type=int)
    leak.add_argument("--w", type=_ints, help="weights for the + variants")
    leak.add_argument("--log-base", type=float)
    leak.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    leak.add_argument("--accepted")
    leak.add_argument("--rejected")
    leak.add_argument("--samples", type=int, default=100_000)
    leak.set_defaults(func=cmd_leak)

    sweep = sub.add_parser("sweep-accuracy", parents=[common], help="accuracy versus quantization and d_min")
    sweep.add_argument("--accepted", required=True, help="real-valued accepted samples (CSV)")
    sweep.add_argument("--rejected", required=True, help="real-valued rejected samples (CSV)")
    sweep.add_argument("--scheme", default="mask", choices=("mask", "baseline"))
    sweep.add_argument("--rounds", type=int, default=100)
    sweep.add_argument("--M", type=int, default=500)
    sweep.add_argument("--queries", type=int, default=50)
    sweep.add_argument("--levels", type=_ints, default=[4, 8, 16, 32, 64])
    sweep.add_argument("--dmins", type=_ints, default=[1, 2, 3, 4, 5])
    sweep.set_defaults(func=cmd_sweep)

    ing = sub.add_parser("ingest", parents=[common], help="quantize and split a labelled CSV")
    ing.add_argument("--csv", required=True)
    ing.add_argument("--config", help="quantization sidecar JSON")
    ing.add_argument("--levels", type=int)
    ing.add_argument("--label")
    ing.add_argument("--accepted-value")
    ing.add_argument("--threshold", type=float, help="accept rows whose label is >= this value")
    ing.add_argument("--dedup", action="store_true")
    ing.add_argument("--out-dir", default=".")
    ing.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("seed", 0), ("threads", os.cpu_count() or 1), ("format", "json"), ("out", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}; rerun with --sampled", file=sys.stderr)
        return 2
    except (ParamError, FieldError, IngestError, LeakageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
