"""Command-line front end: one executable, one subcommand per analysis.

All randomness flows from --seed, outputs are deterministic for identical
inputs and flags, and every artifact directory receives a run_config.json
echoing the fully resolved configuration. Errors are printed to stderr as a
single JSON object {"error_kind", "detail"}; exit codes are 0 (success),
1 (validation or input error), 2 (usage error).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)

_CONFIG_SCHEMA: dict[str, set[str] | type] = {
    "paths": {
        "dataset", "pool", "embeddings", "matrix_w", "matrix_dw",
        "features", "out_dir",
    },
    "seed": int,
    "threads": int,
    "distance": {"pair"},
    "bins": {"bin_width", "stats"},
    "filter": {
        "lambda", "mean_min", "mean_max", "replace_fraction",
        "dispersion", "baseline",
    },
    "reweight": {"gamma"},
    "svd": {"rank"},
    "pca": {"components", "emit_projections"},
}

SUBCOMMANDS = (
    "distance", "score", "deviation", "bin-report", "filter",
    "reweight", "svd-project", "pca", "validate",
)


def _scan_arg(argv: list[str], name: str) -> str | None:
    for i, arg in enumerate(argv):
        if arg == name and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith(name + "="):
            return arg.split("=", 1)[1]
    return None


def _configure_threads(argv: list[str]) -> None:
    """Cap BLAS parallelism before numpy loads.

    Defaults to one thread so outputs do not depend on core count; --threads
    (or the config file) raises the cap explicitly.
    """
    threads = _scan_arg(argv, "--threads")
    if threads is None:
        config_path = _scan_arg(argv, "--config")
        if config_path:
            try:
                cfg = json.loads(Path(config_path).read_text(encoding="utf-8"))
                value = cfg.get("threads")
                if isinstance(value, int):
                    threads = str(value)
            except (OSError, json.JSONDecodeError):
                pass  # reported properly during real config parsing
    for var in _THREAD_ENV_VARS:
        if threads is not None:
            os.environ[var] = threads
        else:
            os.environ.setdefault(var, "1")


# --- config file ----------------------------------------------------------------

def _load_config_file(path: str):
    from .errors import InvalidConfig, IoFailure

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read config {path}: {e}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"config {path} is not valid JSON: {e.msg}") from e
    if not isinstance(cfg, dict):
        raise InvalidConfig(f"config {path} must be a JSON object")
    for key, value in cfg.items():
        if key not in _CONFIG_SCHEMA:
            raise InvalidConfig(f"config {path}: unknown key {key!r}")
        allowed = _CONFIG_SCHEMA[key]
        if isinstance(allowed, set):
            if not isinstance(value, dict):
                raise InvalidConfig(f"config {path}: key {key!r} must be an object")
            for sub in value:
                if sub not in allowed:
                    raise InvalidConfig(
                        f"config {path}: unknown key {key!r}.{sub!r}"
                    )
        elif not isinstance(value, allowed):
            raise InvalidConfig(
                f"config {path}: key {key!r} must be {allowed.__name__}"
            )
    return cfg


class _Resolver:
    """Merge CLI flags over config-file values over defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = _load_config_file(args.config) if args.config else {}

    def value(self, flag: str, section: str, key: str, default=None):
        flag_value = getattr(self.args, flag, None)
        if flag_value is not None:
            return flag_value
        return self.file.get(section, {}).get(key, default)

    def top(self, flag: str, key: str, default=None):
        flag_value = getattr(self.args, flag, None)
        if flag_value is not None:
            return flag_value
        return self.file.get(key, default)

    def path(self, flag: str, key: str, required: bool = False) -> str | None:
        from .errors import InvalidConfig

        value = self.value(flag, "paths", key)
        if value is None and required:
            raise InvalidConfig(
                f"missing required input: give --{flag.replace('_', '-')} "
                f"or config paths.{key}"
            )
        return value


# --- output helpers ---------------------------------------------------------------

def _json_doc(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _jsonl_doc(objs) -> str:
    return "".join(json.dumps(o, ensure_ascii=False) + "\n" for o in objs)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6f}"
    if value is None:
        return "-"
    return str(value)


def render_table(headers: list[str], rows: list[list]) -> str:
    """Aligned plain-text table; numbers right-aligned, text left-aligned."""
    cells = [[_fmt(v) for v in row] for row in rows]
    widths = [
        max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
        for i, h in enumerate(headers)
    ]
    numeric = [
        all(isinstance(row[i], (int, float)) or row[i] is None for row in rows)
        for i in range(len(headers))
    ] if rows else [False] * len(headers)

    def line(values):
        parts = [
            v.rjust(widths[i]) if numeric[i] else v.ljust(widths[i])
            for i, v in enumerate(values)
        ]
        return "  ".join(parts).rstrip()

    out = [line(headers), "  ".join("-" * w for w in widths)]
    out.extend(line(r) for r in cells)
    return "\n".join(out) + "\n"


class _Emitter:
    def __init__(self, out_dir: str | None, resolved: dict):
        self.out_dir = Path(out_dir) if out_dir else None
        self.resolved = resolved
        self.stdout_parts: list[str] = []

    def add_json(self, name: str, obj: dict) -> None:
        doc = _json_doc({"config": self.resolved, **obj})
        if self.out_dir:
            (self.out_dir / name).write_text(doc, encoding="utf-8")
        else:
            self.stdout_parts.append(doc)

    def add_raw(self, name: str, text: str) -> None:
        if self.out_dir:
            (self.out_dir / name).write_text(text, encoding="utf-8")
        else:
            self.stdout_parts.append(text)

    def add_table(self, text: str) -> None:
        if self.out_dir:
            self.stdout_parts.append(text)

    def finish(self) -> None:
        if self.out_dir:
            (self.out_dir / "run_config.json").write_text(
                _json_doc(self.resolved), encoding="utf-8"
            )
        sys.stdout.write("".join(self.stdout_parts))


def _make_emitter(res: _Resolver, resolved: dict) -> _Emitter:
    out_dir = res.path("out_dir", "out_dir")
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    resolved["paths"]["out_dir"] = out_dir
    return _Emitter(out_dir, resolved)


def _as_number(value, kind, what: str):
    from .errors import InvalidConfig

    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise InvalidConfig(f"{what} must be a {kind.__name__}, got {value!r}") from None
    return out


def _resolved_base(res: _Resolver, command: str) -> dict:
    from .errors import InvalidConfig

    seed = _as_number(res.top("seed", "seed", 0), int, "seed")
    threads = _as_number(res.top("threads", "threads", 1), int, "threads")
    if seed < 0:
        raise InvalidConfig(f"seed must be >= 0, got {seed}")
    if threads < 1:
        raise InvalidConfig(f"threads must be >= 1, got {threads}")
    return {
        "subcommand": command,
        "paths": {},
        "seed": seed,
        "threads": threads,
        "params": {},
    }


# --- subcommand handlers ------------------------------------------------------------

def _load_dataset_and_table(res: _Resolver, resolved: dict, need_embeddings=True):
    from . import embed_io

    dataset_path = res.path("dataset", "dataset", required=True)
    resolved["paths"]["dataset"] = dataset_path
    items = embed_io.read_dataset(dataset_path)
    table = None
    if need_embeddings:
        embeddings_path = res.path("embeddings", "embeddings", required=True)
        resolved["paths"]["embeddings"] = embeddings_path
        table = embed_io.read_embeddings(embeddings_path)
    return items, table


def cmd_validate(res: _Resolver) -> int:
    from . import embed_io
    from .embed_io import answer_key
    from .errors import MissingEmbedding

    resolved = _resolved_base(res, "validate")
    dataset_path = res.path("dataset", "dataset")
    embeddings_path = res.path("embeddings", "embeddings")
    matrix_paths = list(getattr(res.args, "matrix", None) or [])
    for key in ("matrix_w", "matrix_dw", "features"):
        value = res.path(key, key)
        if value:
            matrix_paths.append(value)
    if not (dataset_path or embeddings_path or matrix_paths):
        from .errors import InvalidConfig

        raise InvalidConfig("validate needs a dataset, embeddings, or matrix input")

    summary: dict = {}
    items = None
    if dataset_path:
        resolved["paths"]["dataset"] = dataset_path
        items = embed_io.read_dataset(dataset_path)
        summary["n_items"] = len(items)
        summary["n_rephrases"] = sum(len(i.rephrases) for i in items)
        summary["n_locality_probes"] = sum(len(i.locality_probes) for i in items)
        summary["n_with_new"] = sum(i.new is not None for i in items)
    table = None
    if embeddings_path:
        resolved["paths"]["embeddings"] = embeddings_path
        table = embed_io.read_embeddings(embeddings_path)
        summary["n_embedding_records"] = len(table)
        summary["embedding_dim"] = table.dim
    if items is not None and table is not None:
        missing = []
        for item in items:
            roles = ["target", "old"] + (["new"] if item.new is not None else [])
            missing.extend(
                answer_key(item.id, role)
                for role in roles
                if answer_key(item.id, role) not in table
            )
        if missing:
            raise MissingEmbedding(missing[0])
        summary["n_referenced_keys"] = sum(
            2 + (i.new is not None) for i in items
        )
    shapes = []
    for path in matrix_paths:
        m = embed_io.read_matrix(path)
        shapes.append({"path": str(path), "rows": m.rows, "cols": m.cols})
    if shapes:
        summary["matrices"] = shapes

    emitter = _make_emitter(res, resolved)
    emitter.add_json("validation.json", {"summary": summary})
    emitter.add_table(
        "".join(
            f"{key}: {value}\n"
            for key, value in summary.items()
            if key != "matrices"
        )
        + "".join(f"matrix {s['path']}: {s['rows']} x {s['cols']}\n" for s in shapes)
        + "all inputs valid\n"
    )
    emitter.finish()
    return 0


def cmd_distance(res: _Resolver) -> int:
    from .errors import MissingNewAnswer
    from .semantics import AnswerPair, target_distance

    resolved = _resolved_base(res, "distance")
    pair = res.value("pair", "distance", "pair", "old")
    if pair not in ("old", "new", "both"):
        from .errors import InvalidConfig

        raise InvalidConfig(f"pair must be old, new, or both, got {pair!r}")
    resolved["params"]["pair"] = pair
    items, table = _load_dataset_and_table(res, resolved)

    want_old = pair in ("old", "both")
    want_new = pair in ("new", "both")
    if want_new:
        lacking = [i.id for i in items if i.new is None]
        if lacking:
            raise MissingNewAnswer(lacking)

    rows = []
    for item in items:
        entry: dict = {"item_id": item.id}
        if want_old:
            entry["dist_old_target"] = target_distance(
                item, table, AnswerPair.OLD_VS_TARGET
            )
        if want_new:
            entry["dist_new_target"] = target_distance(
                item, table, AnswerPair.NEW_VS_TARGET
            )
        rows.append(entry)

    emitter = _make_emitter(res, resolved)
    emitter.add_json("distances.json", {"distances": rows})
    headers = ["item_id"] + (["dist_old_target"] if want_old else []) + (
        ["dist_new_target"] if want_new else []
    )
    emitter.add_table(
        render_table(headers, [[r.get(h) for h in headers] for r in rows])
    )
    emitter.finish()
    return 0


def cmd_score(res: _Resolver) -> int:
    from .metrics import score_dataset

    resolved = _resolved_base(res, "score")
    items, _ = _load_dataset_and_table(res, resolved, need_embeddings=False)
    report = score_dataset(items)

    emitter = _make_emitter(res, resolved)
    emitter.add_json("scores.json", {"scores": report.to_json_dict()})
    emitter.add_table(
        render_table(
            ["metric", "value", "denominator"],
            [
                ["accuracy", report.accuracy, report.n_items],
                ["generality", report.generality, report.n_rephrases],
                ["locality", report.locality, report.n_probes],
            ],
        )
    )
    emitter.finish()
    return 0


def cmd_deviation(res: _Resolver) -> int:
    from .metrics import deviation_analysis

    resolved = _resolved_base(res, "deviation")
    items, table = _load_dataset_and_table(res, resolved)
    records, summary = deviation_analysis(items, table)

    emitter = _make_emitter(res, resolved)
    emitter.add_json(
        "deviation.json",
        {
            "records": [r.to_json_dict() for r in records],
            "summary": summary.to_json_dict(),
        },
    )
    headers = ["item_id", "dist_old", "dist_new", "deviated", "rd", "bad_case"]
    emitter.add_table(
        render_table(
            headers,
            [
                [
                    r.item_id,
                    r.dist_old_target,
                    r.dist_new_target,
                    r.deviated,
                    r.rd,
                    r.is_bad_case,
                ]
                for r in records
            ],
        )
        + f"deviation proportion: {summary.proportion_all:.6f}"
        + (
            f"  (bad cases: {summary.proportion_bad_cases:.6f})"
            if summary.proportion_bad_cases is not None
            else ""
        )
        + (
            f"  mean RD: {summary.mean_rd:.6f}\n"
            if summary.mean_rd is not None
            else "\n"
        )
    )
    emitter.finish()
    return 0


def cmd_bin_report(res: _Resolver) -> int:
    from .errors import InvalidConfig
    from .metrics import ALL_STATS, BinStat, binned_report

    resolved = _resolved_base(res, "bin-report")
    bin_width = _as_number(
        res.value("bin_width", "bins", "bin_width", 0.05), float, "bin_width"
    )
    stats_name = res.value("stats", "bins", "stats", "both")
    stat_sets = {
        "accuracy": frozenset({BinStat.ACCURACY}),
        "deviation": frozenset({BinStat.DEVIATION}),
        "both": ALL_STATS,
    }
    if stats_name not in stat_sets:
        raise InvalidConfig(f"unknown stats selection {stats_name!r}")
    resolved["params"]["bin_width"] = bin_width
    resolved["params"]["stats"] = stats_name

    items, table = _load_dataset_and_table(res, resolved)
    report = binned_report(items, table, bin_width, stat_sets[stats_name])

    emitter = _make_emitter(res, resolved)
    emitter.add_json("bins.json", {"report": report.to_json_dict()})
    headers = ["lo", "hi", "n_items", "accuracy", "deviation_proportion", "mean_rd"]
    emitter.add_table(
        render_table(
            headers,
            [
                [b.lo, b.hi, b.n_items, b.accuracy, b.deviation_proportion, b.mean_rd]
                for b in report.bins
            ],
        )
    )
    emitter.finish()
    return 0


def _filter_config(res: _Resolver):
    from .errors import InvalidConfig
    from .filtering import Dispersion, FilterConfig

    dispersion_name = res.value("dispersion", "filter", "dispersion", "variance")
    try:
        dispersion = Dispersion(dispersion_name)
    except ValueError:
        raise InvalidConfig(f"unknown dispersion mode {dispersion_name!r}") from None
    cfg = FilterConfig(
        lambda_weight=_as_number(
            res.value("lambda_weight", "filter", "lambda", 1.0), float, "lambda"
        ),
        mean_min=_as_number(
            res.value("mean_min", "filter", "mean_min", 0.2), float, "mean_min"
        ),
        mean_max=_as_number(
            res.value("mean_max", "filter", "mean_max", 0.8), float, "mean_max"
        ),
        replace_fraction=_as_number(
            res.value("replace_fraction", "filter", "replace_fraction", 0.6),
            float,
            "replace_fraction",
        ),
        dispersion=dispersion,
        seed=_as_number(res.top("seed", "seed", 0), int, "seed"),
    )
    cfg.validate()
    return cfg


def cmd_filter(res: _Resolver) -> int:
    from . import embed_io
    from .filtering import greedy_filter, random_baseline

    resolved = _resolved_base(res, "filter")
    cfg = _filter_config(res)
    baseline = res.value("baseline", "filter", "baseline", "none")
    resolved["params"] = {**cfg.to_json_dict(), "baseline": baseline}

    items, table = _load_dataset_and_table(res, resolved)
    pool_path = res.path("pool", "pool", required=True)
    resolved["paths"]["pool"] = pool_path
    pool = embed_io.read_dataset(pool_path)

    if baseline == "random":
        result = random_baseline(items, pool, table, cfg)
        algorithm = "random"
    elif baseline == "none":
        result = greedy_filter(items, pool, table, cfg)
        algorithm = "greedy"
    else:
        from .errors import InvalidConfig

        raise InvalidConfig(f"unknown baseline {baseline!r}")

    by_id = {i.id: i for i in items}
    by_id.update({i.id: i for i in pool})
    final_items = [by_id[i] for i in result.final_set]

    emitter = _make_emitter(res, resolved)
    emitter.add_json(
        "filter_result.json",
        {"algorithm": algorithm, "result": result.to_json_dict()},
    )
    if emitter.out_dir:
        embed_io.write_dataset(final_items, emitter.out_dir / "filtered.jsonl")
    trace = result.objective_trace
    emitter.add_table(
        f"algorithm: {algorithm}\n"
        f"swaps: {len(result.swaps)}\n"
        f"objective: {trace[0]:.6f} -> {trace[-1]:.6f}\n"
        + (
            f"stopped early: {result.stop_reason.value}\n"
            if result.stopped_early
            else ""
        )
    )
    emitter.finish()
    return 0


def cmd_reweight(res: _Resolver) -> int:
    from .reweight import emit_weights

    resolved = _resolved_base(res, "reweight")
    gamma = _as_number(res.value("gamma", "reweight", "gamma", 1.0), float, "gamma")
    resolved["params"]["gamma"] = gamma

    items, table = _load_dataset_and_table(res, resolved)
    records = emit_weights(items, table, gamma)

    emitter = _make_emitter(res, resolved)
    emitter.add_raw("weights.jsonl", _jsonl_doc(r.to_json_dict() for r in records))
    if records:
        weights = [r.weight for r in records]
        emitter.add_table(
            f"items: {len(records)}  gamma: {gamma}  "
            f"weight range: [{min(weights):.6f}, {max(weights):.6f}]\n"
        )
    emitter.finish()
    return 0


def cmd_svd_project(res: _Resolver) -> int:
    from . import embed_io
    from .matan import subspace_report

    resolved = _resolved_base(res, "svd-project")
    w_path = res.path("w", "matrix_w", required=True)
    dw_path = res.path("dw", "matrix_dw", required=True)
    resolved["paths"]["matrix_w"] = w_path
    resolved["paths"]["matrix_dw"] = dw_path
    rank = res.value("rank", "svd", "rank")
    if rank is None:
        from .errors import InvalidConfig

        raise InvalidConfig("missing required parameter: give --rank or config svd.rank")
    rank = _as_number(rank, int, "rank")
    seed = resolved["seed"]
    resolved["params"]["rank"] = rank

    w = embed_io.read_matrix(w_path)
    dw = embed_io.read_matrix(dw_path)
    report = subspace_report(w, dw, rank, seed)

    emitter = _make_emitter(res, resolved)
    emitter.add_json("subspace.json", {"report": report.to_json_dict()})
    emitter.add_table(
        render_table(
            ["quantity", "value"],
            [
                ["norm_w", report.norm_w],
                ["norm_dw", report.norm_dw],
                ["proj_dw", report.proj_dw],
                ["proj_w", report.proj_w],
                ["proj_random", report.proj_random],
                ["amplification", report.amplification],
            ],
        )
    )
    emitter.finish()
    return 0


def cmd_pca(res: _Resolver) -> int:
    from . import embed_io
    from .embed_io import DenseMatrix
    from .matan import pca

    resolved = _resolved_base(res, "pca")
    features_path = res.path("features", "features", required=True)
    resolved["paths"]["features"] = features_path
    components = _as_number(
        res.value("components", "pca", "components", 15), int, "components"
    )
    emit_projections = bool(
        res.value("emit_projections", "pca", "emit_projections", False)
    )
    resolved["params"]["components"] = components
    resolved["params"]["emit_projections"] = emit_projections

    features = embed_io.read_matrix(features_path)
    result = pca(features, components)

    emitter = _make_emitter(res, resolved)
    emitter.add_json("pca.json", {"result": result.to_json_dict()})
    if emit_projections:
        if not emitter.out_dir:
            from .errors import InvalidConfig

            raise InvalidConfig("--emit-projections requires --out-dir")
        embed_io.write_matrix(
            DenseMatrix(values=result.projections),
            emitter.out_dir / "projections.smat",
        )
    emitter.add_table(
        render_table(
            ["component", "explained_variance"],
            [[i, v] for i, v in enumerate(result.explained_variance.tolist())],
        )
    )
    emitter.finish()
    return 0


_HANDLERS = {
    "validate": cmd_validate,
    "distance": cmd_distance,
    "score": cmd_score,
    "deviation": cmd_deviation,
    "bin-report": cmd_bin_report,
    "filter": cmd_filter,
    "reweight": cmd_reweight,
    "svd-project": cmd_svd_project,
    "pca": cmd_pca,
}


# --- parser ---------------------------------------------------------------------

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON config file; flags override its values")
    sp.add_argument("--out-dir", dest="out_dir", help="directory for output artifacts")
    sp.add_argument("--seed", type=int, help="seed for all randomness (default 0)")
    sp.add_argument("--threads", type=int, help="cap internal parallelism (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semkit",
        description="Semantic-distance toolkit for knowledge fine-tuning datasets",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    sp = sub.add_parser("validate", help="validate datasets, embeddings, matrices")
    sp.add_argument("--dataset")
    sp.add_argument("--embeddings")
    sp.add_argument("--matrix", action="append", help="SMAT file (repeatable)")
    _add_common(sp)

    sp = sub.add_parser("distance", help="per-item target semantic distances")
    sp.add_argument("--dataset")
    sp.add_argument("--embeddings")
    sp.add_argument("--pair", choices=["old", "new", "both"])
    _add_common(sp)

    sp = sub.add_parser("score", help="accuracy / generality / locality")
    sp.add_argument("--dataset")
    _add_common(sp)

    sp = sub.add_parser("deviation", help="per-item deviation records and summary")
    sp.add_argument("--dataset")
    sp.add_argument("--embeddings")
    _add_common(sp)

    sp = sub.add_parser("bin-report", help="accuracy / deviation by distance bin")
    sp.add_argument("--dataset")
    sp.add_argument("--embeddings")
    sp.add_argument("--bin-width", dest="bin_width", type=float)
    sp.add_argument("--stats", choices=["accuracy", "deviation", "both"])
    _add_common(sp)

    sp = sub.add_parser("filter", help="greedy working-set optimization")
    sp.add_argument("--dataset", help="working set (JSON Lines)")
    sp.add_argument("--pool", help="candidate pool (JSON Lines)")
    sp.add_argument("--embeddings")
    sp.add_argument("--lambda", dest="lambda_weight", type=float)
    sp.add_argument("--mean-min", dest="mean_min", type=float)
    sp.add_argument("--mean-max", dest="mean_max", type=float)
    sp.add_argument("--replace-fraction", dest="replace_fraction", type=float)
    sp.add_argument("--dispersion", choices=["variance", "stddev"])
    sp.add_argument("--baseline", choices=["none", "random"])
    _add_common(sp)

    sp = sub.add_parser("reweight", help="emit per-example loss weights")
    sp.add_argument("--dataset")
    sp.add_argument("--embeddings")
    sp.add_argument("--gamma", type=float)
    _add_common(sp)

    sp = sub.add_parser("svd-project", help="subspace projection norms")
    sp.add_argument("--w", help="weight matrix (SMAT)")
    sp.add_argument("--dw", help="update matrix (SMAT)")
    sp.add_argument("--rank", type=int)
    _add_common(sp)

    sp = sub.add_parser("pca", help="principal components of feature rows")
    sp.add_argument("--features", help="stacked feature rows (SMAT)")
    sp.add_argument("--components", type=int)
    sp.add_argument(
        "--emit-projections", action="store_const", const=True, default=None,
        help="also write projections.smat to the output directory",
    )
    _add_common(sp)

    return parser


def run(argv: list[str]) -> int:
    """Parse argv and execute one subcommand, mapping errors to exit codes."""
    from .errors import IoFailure, ToolkitError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        try:
            return _HANDLERS[args.command](_Resolver(args))
        except OSError as e:
            raise IoFailure(str(e)) from e
    except ToolkitError as e:
        sys.stderr.write(
            json.dumps({"error_kind": e.kind, "detail": str(e)}) + "\n"
        )
        return 1
    except Exception as e:  # never leak a traceback
        sys.stderr.write(
            json.dumps(
                {"error_kind": "InternalError", "detail": f"{type(e).__name__}: {e}"}
            )
            + "\n"
        )
        return 1


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _configure_threads(argv)
    return run(argv)
