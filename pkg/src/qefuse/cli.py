"""Command-line interface: fuse/rerank/mbr over JSONL corpora, evaluation
reports, the scaling benchmark, and the mock scorer server.

Input records are JSONL lines {"id", "source", "candidates", "reference"?};
output records are JSONL lines {"id", "method", "output", "score",
"base_index", "stats"}, one per input line in input order. Exit codes:
0 success, 1 I/O or validation error, 2 scorer failure.
"""

import argparse
import json
import os
import sys

from .bench import METHODS, run_bench, synthetic_pools, write_csv
from .fusion import FusionConfig, fuse_corpus
from .metrics import evaluate_corpus
from .rerank import bleu_utility, chrf_utility, mbr, qe_rerank
from .scoring import (
    HttpScorer,
    LexicalScorer,
    ReferenceLookupScorer,
    Scorer,
    ScoringError,
)
from .server import create_server
from .text import CandidatePool

UTILITIES = {"bleu": bleu_utility, "chrf": chrf_utility}


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def load_records(path: str, pool_size: int | None = None) -> list[CandidatePool]:
    """Parse an InputRecord JSONL file; diagnostics carry 1-based line numbers."""
    pools: list[CandidatePool] = []
    ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            where = f"{path}: line {lineno}"
            text = line.rstrip("\n")
            if not text.strip():
                raise CliError(f"{where}: blank line")
            try:
                obj = json.loads(text)
            except ValueError as exc:
                raise CliError(f"{where}: invalid JSON ({exc})")
            if not isinstance(obj, dict):
                raise CliError(f"{where}: record must be a JSON object")
            record_id = obj.get("id")
            if not isinstance(record_id, str) or not record_id:
                raise CliError(f"{where}: missing or invalid id")
            if record_id in ids:
                raise CliError(f"{where}: duplicate id {record_id!r}")
            ids.add(record_id)
            source = obj.get("source")
            if not isinstance(source, str) or not source:
                raise CliError(f"{where}: missing or invalid source")
            candidates = obj.get("candidates")
            if (
                not isinstance(candidates, list)
                or not candidates
                or not all(isinstance(c, str) for c in candidates)
            ):
                raise CliError(f"{where}: candidates must be a non-empty string array")
            reference = obj.get("reference")
            if reference is not None and not isinstance(reference, str):
                raise CliError(f"{where}: reference must be a string when present")
            if pool_size is not None:
                candidates = candidates[:pool_size]
            pools.append(CandidatePool(record_id, source, tuple(candidates), reference))
    if not pools:
        raise CliError(f"{path}: no records")
    return pools


def load_hypotheses(path: str) -> list[tuple[str, str]]:
    """Parse (id, output) pairs from an OutputRecord JSONL file."""
    hyps: list[tuple[str, str]] = []
    ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            where = f"{path}: line {lineno}"
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise CliError(f"{where}: invalid JSON ({exc})")
            if not isinstance(obj, dict):
                raise CliError(f"{where}: record must be a JSON object")
            record_id = obj.get("id")
            output = obj.get("output")
            if not isinstance(record_id, str) or not isinstance(output, str):
                raise CliError(f"{where}: record needs string id and output fields")
            if record_id in ids:
                raise CliError(f"{where}: duplicate id {record_id!r}")
            ids.add(record_id)
            hyps.append((record_id, output))
    if not hyps:
        raise CliError(f"{path}: no records")
    return hyps


def _require_references(pools: list[CandidatePool], why: str) -> None:
    for pool in pools:
        if pool.reference is None:
            raise CliError(f"{why} requires references; sentence {pool.id!r} has none")


def build_scorer(args: argparse.Namespace, pools: list[CandidatePool]) -> Scorer:
    if args.scorer == "lexical":
        return LexicalScorer()
    if args.scorer == "oracle":
        _require_references(pools, "--scorer oracle")
        references: dict[str, str] = {}
        for pool in pools:
            existing = references.get(pool.source)
            if existing is not None and existing != pool.reference:
                raise CliError(
                    f"--scorer oracle: source of sentence {pool.id!r} repeats "
                    "with a different reference"
                )
            references[pool.source] = pool.reference
        return ReferenceLookupScorer(references)
    url = args.scorer_url or os.environ.get("QEFUSE_SCORER_URL")
    if not url:
        raise CliError("--scorer http requires --scorer-url or QEFUSE_SCORER_URL")
    return HttpScorer(url, max_batch=args.batch_size)


def write_jsonl(path: str, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _check_positive(args: argparse.Namespace) -> None:
    for name in ("pool_size", "batch_size", "beam", "seed", "sentences"):
        value = getattr(args, name, None)
        if value is not None and name != "seed" and value < 1:
            raise CliError(f"--{name.replace('_', '-')} must be >= 1")


def cmd_fuse(args: argparse.Namespace) -> int:
    _check_positive(args)
    pools = load_records(args.input, args.pool_size)
    scorer = build_scorer(args, pools)
    config = FusionConfig(beam_size=args.beam, cache_enabled=not args.no_cache)
    results = fuse_corpus(pools, scorer, config)
    write_jsonl(
        args.output,
        [
            {
                "id": pool.id,
                "method": "fuse",
                "output": result.output,
                "score": result.score,
                "base_index": result.base_index,
                "stats": {
                    "groups": result.stats.groups,
                    "hypotheses_scored": result.stats.hypotheses_scored,
                    "cache_hits": result.stats.cache_hits,
                },
            }
            for pool, result in zip(pools, results)
        ],
    )
    return 0


def cmd_rerank(args: argparse.Namespace) -> int:
    _check_positive(args)
    pools = load_records(args.input, args.pool_size)
    scorer = build_scorer(args, pools)
    records = []
    for pool in pools:
        try:
            index, score = qe_rerank(pool, scorer)
        except ScoringError as exc:
            raise ScoringError(f"scorer failed on sentence {pool.id!r}: {exc}")
        records.append(
            {
                "id": pool.id,
                "method": "qe_rerank",
                "output": pool.candidates[index],
                "score": score,
                "base_index": index,
                "stats": {"scored_items": pool.size},
            }
        )
    write_jsonl(args.output, records)
    return 0


def cmd_mbr(args: argparse.Namespace) -> int:
    _check_positive(args)
    pools = load_records(args.input, args.pool_size)
    utility = UTILITIES[args.utility]
    records = []
    for pool in pools:
        index, expected = mbr(pool, utility)
        records.append(
            {
                "id": pool.id,
                "method": "mbr",
                "output": pool.candidates[index],
                "score": expected,
                "base_index": index,
                "stats": {"utility_calls": pool.size * (pool.size - 1)},
            }
        )
    write_jsonl(args.output, records)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    hypotheses = load_hypotheses(args.hypotheses)
    pools = load_records(args.input)
    if len(hypotheses) != len(pools):
        raise CliError(
            f"{args.hypotheses} has {len(hypotheses)} records, "
            f"{args.input} has {len(pools)}"
        )
    for (hyp_id, _), pool in zip(hypotheses, pools):
        if hyp_id != pool.id:
            raise CliError(
                f"id mismatch: hypothesis {hyp_id!r} vs input {pool.id!r} "
                "(files must align line by line)"
            )
    _require_references(pools, "eval")
    report = evaluate_corpus(
        [output for _, output in hypotheses], pools, UTILITIES[args.utility]
    )
    with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    _check_positive(args)
    try:
        sizes = sorted({int(s) for s in args.sizes.split(",") if s.strip()})
    except ValueError:
        raise CliError(f"--sizes must be a comma list of integers: {args.sizes!r}")
    if not sizes or sizes[0] < 1:
        raise CliError("--sizes must contain positive integers")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for method in methods:
        if method not in METHODS:
            raise CliError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if not methods:
        raise CliError("--methods is empty")
    if args.input is not None:
        base = load_records(args.input)
        too_small = [p.id for p in base if p.size < sizes[-1]]
        if too_small:
            raise CliError(
                f"sentence {too_small[0]!r} has fewer than {sizes[-1]} candidates"
            )
    else:
        base = synthetic_pools(args.sentences, sizes[-1], seed=args.seed)
    scorer = build_scorer(args, base)
    pools_by_size = {n: [p.truncated(n) for p in base] for n in sizes}
    records = run_bench(pools_by_size, methods, scorer, UTILITIES[args.utility])
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        write_csv(records, fh)
    return 0


def cmd_mock_scorer(args: argparse.Namespace) -> int:
    if args.scorer_kind == "oracle":
        if not args.references:
            raise CliError("mock-scorer oracle mode requires --references")
        pools = load_records(args.references)
        _require_references(pools, "mock-scorer oracle mode")
        scorer: Scorer = ReferenceLookupScorer(
            {p.source: p.reference for p in pools}
        )
    else:
        scorer = LexicalScorer()
    server = create_server(args.host, args.port, scorer)
    print(f"mock scorer ({args.scorer_kind}) listening on {server.endpoint}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qefuse",
        description="Fuse, rerank, and evaluate machine-translation candidate pools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scorer_flags = argparse.ArgumentParser(add_help=False)
    scorer_flags.add_argument(
        "--scorer", choices=["lexical", "oracle", "http"], default="lexical",
        help="quality scorer backend (default: lexical)",
    )
    scorer_flags.add_argument(
        "--scorer-url", default=None,
        help="endpoint for --scorer http (default: $QEFUSE_SCORER_URL)",
    )
    scorer_flags.add_argument(
        "--batch-size", type=int, default=400,
        help="max pairs per scorer HTTP call (default: 400)",
    )
    scorer_flags.add_argument(
        "--pool-size", type=int, default=None,
        help="truncate each pool to its first N candidates",
    )

    p = sub.add_parser("fuse", parents=[scorer_flags], help="fuse candidate pools")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--beam", type=int, default=5, help="beam size (default: 5)")
    p.add_argument("--no-cache", action="store_true", help="disable score caching")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("rerank", parents=[scorer_flags], help="pick the best candidate")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("mbr", parents=[scorer_flags], help="minimum Bayes risk selection")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--utility", choices=sorted(UTILITIES), required=True)
    p.set_defaults(func=cmd_mbr)

    p = sub.add_parser("eval", help="score hypotheses against references")
    p.add_argument("hypotheses", help="output-record JSONL")
    p.add_argument("input", help="input-record JSONL with references")
    p.add_argument("report", help="report JSON path")
    p.add_argument("--utility", choices=sorted(UTILITIES), default="chrf",
                   help="utility for semantic diversity (default: chrf)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[scorer_flags], help="scaling benchmark")
    p.add_argument("input", nargs="?", default=None,
                   help="corpus JSONL; omitted = synthetic corpus")
    p.add_argument("--sizes", required=True, help="comma list of pool sizes")
    p.add_argument("--methods", default=",".join(METHODS),
                   help=f"comma list from {{{','.join(METHODS)}}}")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--utility", choices=sorted(UTILITIES), default="chrf")
    p.add_argument("--sentences", type=int, default=20,
                   help="synthetic corpus size (default: 20)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for synthetic pool generation")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("mock-scorer", help="serve the scorer wire protocol")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--scorer-kind", choices=["lexical", "oracle"], default="lexical")
    p.add_argument("--references", default=None,
                   help="input-record JSONL with references (oracle mode)")
    p.set_defaults(func=cmd_mock_scorer)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ScoringError as exc:
        print(f"scorer error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
