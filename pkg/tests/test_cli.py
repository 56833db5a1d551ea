import json
import subprocess
import sys
import threading
import time

import pytest

from qefuse import LexicalScorer, chrf, create_server, fuse, sentence_bleu
from qefuse.bench import CSV_HEADER, METHODS, synthetic_pools
from qefuse.cli import main


def write_input(path, pools):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pool in pools:
            record = {
                "id": pool.id,
                "source": pool.source,
                "candidates": list(pool.candidates),
            }
            if pool.reference is not None:
                record["reference"] = pool.reference
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


@pytest.fixture
def corpus(tmp_path):
    pools = synthetic_pools(6, 4, seed=11)
    path = tmp_path / "input.jsonl"
    write_input(path, pools)
    return pools, str(path)


class TestFuseCommand:
    def test_writes_one_record_per_line_in_order(self, corpus, tmp_path):
        pools, inp = corpus
        out = str(tmp_path / "fused.jsonl")
        assert main(["fuse", inp, out]) == 0
        records = read_jsonl(out)
        assert [r["id"] for r in records] == [p.id for p in pools]
        for record in records:
            assert record["method"] == "fuse"
            assert isinstance(record["output"], str)
            assert isinstance(record["score"], float)
            assert isinstance(record["base_index"], int)
            assert set(record["stats"]) == {
                "groups",
                "hypotheses_scored",
                "cache_hits",
            }

    def test_matches_library_results(self, corpus, tmp_path):
        pools, inp = corpus
        out = str(tmp_path / "fused.jsonl")
        assert main(["fuse", inp, out]) == 0
        records = read_jsonl(out)
        for pool, record in zip(pools, records):
            expected = fuse(pool, LexicalScorer())
            assert record["output"] == expected.output
            assert record["score"] == pytest.approx(expected.score)

    def test_identical_candidates_come_back_verbatim(self, tmp_path):
        pools = [
            type(
                "P",
                (),
                {
                    "id": "p0",
                    "source": "a b",
                    "candidates": ("a b", "a b"),
                    "reference": None,
                },
            )()
        ]
        inp = str(tmp_path / "in.jsonl")
        out = str(tmp_path / "out.jsonl")
        write_input(inp, pools)
        assert main(["fuse", inp, out]) == 0
        assert read_jsonl(out)[0]["output"] == "a b"

    def test_deterministic_bytes(self, corpus, tmp_path):
        _, inp = corpus
        out1 = tmp_path / "a.jsonl"
        out2 = tmp_path / "b.jsonl"
        assert main(["fuse", inp, str(out1)]) == 0
        assert main(["fuse", inp, str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert b"\r" not in out1.read_bytes()

    def test_beam_must_be_positive(self, corpus, tmp_path, capsys):
        _, inp = corpus
        out = str(tmp_path / "o.jsonl")
        assert main(["fuse", inp, out, "--beam", "0"]) == 1
        assert "beam" in capsys.readouterr().err

    def test_pool_size_truncates(self, corpus, tmp_path):
        _, inp = corpus
        out = str(tmp_path / "o.jsonl")
        assert main(["rerank", inp, out, "--pool-size", "2"]) == 0
        for record in read_jsonl(out):
            assert record["stats"]["scored_items"] == 2

    def test_unicode_round_trip(self, tmp_path):
        inp = str(tmp_path / "in.jsonl")
        out = str(tmp_path / "out.jsonl")
        write_lines(
            inp,
            [
                json.dumps(
                    {
                        "id": "u1",
                        "source": "das Straßenfest in Köln",
                        "candidates": ["straßenfest köln", "fête de rue à cologne"],
                    },
                    ensure_ascii=False,
                )
            ],
        )
        assert main(["fuse", inp, out]) == 0
        raw = open(out, "rb").read().decode("utf-8")
        assert "ß" in raw or "à" in raw
        assert "\\u" not in raw


class TestRerankAndMbrCommands:
    def test_rerank_picks_argmax(self, corpus, tmp_path):
        pools, inp = corpus
        out = str(tmp_path / "r.jsonl")
        assert main(["rerank", inp, out]) == 0
        records = read_jsonl(out)
        scorer = LexicalScorer()
        for pool, record in zip(pools, records):
            assert record["method"] == "qe_rerank"
            assert record["output"] == pool.candidates[record["base_index"]]
            assert record["stats"]["scored_items"] == pool.size

    def test_fuse_score_at_least_rerank_score(self, corpus, tmp_path):
        _, inp = corpus
        fused = str(tmp_path / "f.jsonl")
        reranked = str(tmp_path / "r.jsonl")
        assert main(["fuse", inp, fused]) == 0
        assert main(["rerank", inp, reranked]) == 0
        for f, r in zip(read_jsonl(fused), read_jsonl(reranked)):
            assert f["score"] >= r["score"]

    def test_mbr_reports_quadratic_call_budget(self, corpus, tmp_path):
        pools, inp = corpus
        out = str(tmp_path / "m.jsonl")
        assert main(["mbr", inp, out, "--utility", "chrf"]) == 0
        for pool, record in zip(pools, read_jsonl(out)):
            assert record["method"] == "mbr"
            n = pool.size
            assert record["stats"]["utility_calls"] == n * (n - 1)
            assert record["output"] in pool.candidates


class TestInputValidation:
    def run_expecting_error(self, tmp_path, lines, capsys, needle):
        inp = str(tmp_path / "in.jsonl")
        out = str(tmp_path / "out.jsonl")
        write_lines(inp, lines)
        assert main(["fuse", inp, out]) == 1
        err = capsys.readouterr().err
        assert needle in err
        return err

    def good_line(self, sid="ok"):
        return json.dumps(
            {"id": sid, "source": "a b", "candidates": ["a b", "a c"]}
        )

    def test_invalid_json_names_the_line(self, tmp_path, capsys):
        err = self.run_expecting_error(
            tmp_path, [self.good_line(), "{broken"], capsys, "line 2"
        )
        assert "invalid JSON" in err

    def test_blank_line_rejected(self, tmp_path, capsys):
        self.run_expecting_error(
            tmp_path, [self.good_line(), "", self.good_line("x")], capsys, "line 2"
        )

    def test_duplicate_id(self, tmp_path, capsys):
        err = self.run_expecting_error(
            tmp_path, [self.good_line("dup"), self.good_line("dup")], capsys, "line 2"
        )
        assert "duplicate id" in err

    def test_missing_source(self, tmp_path, capsys):
        line = json.dumps({"id": "x", "candidates": ["a"]})
        self.run_expecting_error(tmp_path, [line], capsys, "source")

    def test_empty_candidates(self, tmp_path, capsys):
        line = json.dumps({"id": "x", "source": "s", "candidates": []})
        self.run_expecting_error(tmp_path, [line], capsys, "candidates")

    def test_non_string_candidate(self, tmp_path, capsys):
        line = json.dumps({"id": "x", "source": "s", "candidates": ["a", 7]})
        self.run_expecting_error(tmp_path, [line], capsys, "candidates")

    def test_empty_file(self, tmp_path, capsys):
        self.run_expecting_error(tmp_path, [], capsys, "no records")

    def test_missing_input_file(self, tmp_path, capsys):
        out = str(tmp_path / "out.jsonl")
        assert main(["fuse", str(tmp_path / "absent.jsonl"), out]) == 1
        assert "error" in capsys.readouterr().err


class TestScorerSelection:
    def test_oracle_requires_references(self, tmp_path, capsys):
        inp = str(tmp_path / "in.jsonl")
        out = str(tmp_path / "out.jsonl")
        write_lines(
            inp,
            [json.dumps({"id": "x", "source": "a b", "candidates": ["a b"]})],
        )
        assert main(["fuse", inp, out, "--scorer", "oracle"]) == 1
        assert "references" in capsys.readouterr().err

    def test_oracle_scores_against_reference(self, tmp_path):
        inp = str(tmp_path / "in.jsonl")
        out = str(tmp_path / "out.jsonl")
        write_lines(
            inp,
            [
                json.dumps(
                    {
                        "id": "x",
                        "source": "src sentence",
                        "candidates": ["the red car", "a blue bike"],
                        "reference": "the red car",
                    }
                )
            ],
        )
        assert main(["rerank", inp, out, "--scorer", "oracle"]) == 0
        record = read_jsonl(out)[0]
        assert record["output"] == "the red car"
        assert record["score"] == pytest.approx(1.0)

    def test_http_requires_url(self, corpus, tmp_path, capsys, monkeypatch):
        _, inp = corpus
        out = str(tmp_path / "out.jsonl")
        monkeypatch.delenv("QEFUSE_SCORER_URL", raising=False)
        assert main(["fuse", inp, out, "--scorer", "http"]) == 1
        assert "QEFUSE_SCORER_URL" in capsys.readouterr().err

    def test_http_url_from_environment(self, corpus, tmp_path, monkeypatch):
        pools, inp = corpus
        out = str(tmp_path / "out.jsonl")
        server = create_server("127.0.0.1", 0, LexicalScorer())
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            monkeypatch.setenv("QEFUSE_SCORER_URL", server.endpoint)
            assert main(["fuse", inp, out, "--scorer", "http"]) == 0
            for pool, record in zip(pools, read_jsonl(out)):
                assert record["output"] == fuse(pool, LexicalScorer()).output
        finally:
            server.shutdown()
            server.server_close()

    def test_unreachable_scorer_exits_2(self, corpus, tmp_path, capsys):
        _, inp = corpus
        out = str(tmp_path / "out.jsonl")
        code = main(
            [
                "fuse",
                inp,
                out,
                "--scorer",
                "http",
                "--scorer-url",
                "http://127.0.0.1:1",
            ]
        )
        assert code == 2
        assert "scorer error" in capsys.readouterr().err


class TestEvalCommand:
    def make_files(self, tmp_path, outputs=None):
        pools = synthetic_pools(4, 3, seed=12)
        inp = str(tmp_path / "in.jsonl")
        write_input(inp, pools)
        hyp = str(tmp_path / "hyp.jsonl")
        chosen = outputs or [p.reference for p in pools]
        write_lines(
            hyp,
            [
                json.dumps({"id": p.id, "output": o})
                for p, o in zip(pools, chosen)
            ],
        )
        return pools, inp, hyp

    def test_perfect_hypotheses(self, tmp_path):
        pools, inp, hyp = self.make_files(tmp_path)
        report_path = str(tmp_path / "report.json")
        assert main(["eval", hyp, inp, report_path]) == 0
        with open(report_path, encoding="utf-8") as fh:
            report = json.load(fh)
        agg = report["aggregates"]
        assert agg["defect_rate"] == 0.0
        assert agg["mean_chrf"] == pytest.approx(100.0)
        assert agg["mean_bleu"] == pytest.approx(100.0)
        assert agg["novelty_rate"] == pytest.approx(100.0)

    def test_gibberish_hypotheses_all_defects(self, tmp_path):
        pools, inp, hyp = self.make_files(
            tmp_path, outputs=["zzz qqq"] * 4
        )
        report_path = str(tmp_path / "report.json")
        assert main(["eval", hyp, inp, report_path]) == 0
        with open(report_path, encoding="utf-8") as fh:
            report = json.load(fh)
        assert report["aggregates"]["defect_rate"] == 100.0

    def test_aggregates_equal_row_means(self, tmp_path):
        pools, inp, hyp = self.make_files(
            tmp_path,
            outputs=[p.candidates[0] for p in synthetic_pools(4, 3, seed=12)],
        )
        report_path = str(tmp_path / "report.json")
        assert main(["eval", hyp, inp, report_path]) == 0
        with open(report_path, encoding="utf-8") as fh:
            report = json.load(fh)
        rows = report["sentences"]
        agg = report["aggregates"]
        assert agg["mean_bleu"] == pytest.approx(
            sum(r["bleu"] for r in rows) / len(rows)
        )
        assert agg["mean_chrf"] == pytest.approx(
            sum(r["chrf"] for r in rows) / len(rows)
        )
        assert agg["defect_rate"] == pytest.approx(
            100.0 * sum(r["defect"] for r in rows) / len(rows)
        )
        for pool, row in zip(pools, rows):
            assert row["bleu"] == pytest.approx(
                sentence_bleu(pool.candidates[0], pool.reference)
            )
            assert row["chrf"] == pytest.approx(
                chrf(pool.candidates[0], pool.reference)
            )

    def test_id_mismatch(self, tmp_path, capsys):
        pools, inp, hyp = self.make_files(tmp_path)
        write_lines(
            hyp,
            [
                json.dumps({"id": f"wrong{i}", "output": "x"})
                for i in range(len(pools))
            ],
        )
        report_path = str(tmp_path / "report.json")
        assert main(["eval", hyp, inp, report_path]) == 1
        assert "id mismatch" in capsys.readouterr().err

    def test_count_mismatch(self, tmp_path, capsys):
        pools, inp, hyp = self.make_files(tmp_path)
        write_lines(hyp, [json.dumps({"id": pools[0].id, "output": "x"})])
        assert main(["eval", hyp, inp, str(tmp_path / "r.json")]) == 1
        assert "records" in capsys.readouterr().err

    def test_missing_references(self, tmp_path, capsys):
        inp = str(tmp_path / "in.jsonl")
        hyp = str(tmp_path / "hyp.jsonl")
        write_lines(
            inp, [json.dumps({"id": "x", "source": "s", "candidates": ["a"]})]
        )
        write_lines(hyp, [json.dumps({"id": "x", "output": "a"})])
        assert main(["eval", hyp, inp, str(tmp_path / "r.json")]) == 1
        assert "references" in capsys.readouterr().err

    def test_deterministic_bytes(self, tmp_path):
        _, inp, hyp = self.make_files(tmp_path)
        r1 = tmp_path / "r1.json"
        r2 = tmp_path / "r2.json"
        assert main(["eval", hyp, inp, str(r1)]) == 0
        assert main(["eval", hyp, inp, str(r2)]) == 0
        assert r1.read_bytes() == r2.read_bytes()


class TestBenchCommand:
    def test_synthetic_bench_csv(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(
            [
                "bench",
                "--sizes",
                "2,5,10",
                "--out",
                str(out),
                "--sentences",
                "5",
            ]
        )
        assert code == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 1 + len(METHODS) * 3
        rerank_rows = [l for l in lines[1:] if l.startswith("qe_rerank,")]
        for row in rerank_rows:
            _, n, _, scored_items, _ = row.split(",")
            assert int(scored_items) == 5 * int(n)

    def test_input_pools_must_cover_largest_size(self, corpus, tmp_path, capsys):
        _, inp = corpus  # pools of size 4
        out = str(tmp_path / "bench.csv")
        assert main(["bench", inp, "--sizes", "2,3,8", "--out", out]) == 1
        assert "fewer than 8" in capsys.readouterr().err

    def test_bad_sizes(self, corpus, tmp_path, capsys):
        _, inp = corpus
        out = str(tmp_path / "bench.csv")
        assert main(["bench", inp, "--sizes", "2,x", "--out", out]) == 1
        assert "sizes" in capsys.readouterr().err

    def test_unknown_method(self, corpus, tmp_path, capsys):
        _, inp = corpus
        out = str(tmp_path / "bench.csv")
        code = main(
            ["bench", inp, "--sizes", "2,3,4", "--methods", "sort", "--out", out]
        )
        assert code == 1
        assert "unknown method" in capsys.readouterr().err


class TestMockScorerCommand:
    def test_serves_until_terminated(self, tmp_path, corpus):
        pools, inp = corpus
        proc = subprocess.Popen(
            [sys.executable, "-m", "qefuse", "mock-scorer", "--port", "0"],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            line = proc.stdout.readline()
            assert "listening on" in line
            endpoint = line.strip().rsplit(" ", 1)[-1]
            deadline = time.time() + 10
            import requests as req

            while True:
                try:
                    health = req.get(endpoint + "/health", timeout=2)
                    break
                except req.RequestException:
                    if time.time() > deadline:
                        raise
                    time.sleep(0.05)
            assert health.status_code == 200
            out = str(tmp_path / "via_http.jsonl")
            code = main(
                ["fuse", inp, out, "--scorer", "http", "--scorer-url", endpoint]
            )
            assert code == 0
            for pool, record in zip(pools, read_jsonl(out)):
                assert record["output"] == fuse(pool, LexicalScorer()).output
        finally:
            proc.terminate()
            proc.wait(timeout=10)
