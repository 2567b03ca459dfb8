import csv
import io
import json
import subprocess
import sys

import pytest

from nlgm.cli import main
from nlgm.corpus import dump_corpus_jsonl, load_corpus_jsonl
from nlgm.dialogue import delexicalize, slot_error_rate
from toydata import (embeddings_text, rating_grid, ratings_csv, report_json,
                     restaurant_corpus, vocabulary)


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def files(tmp_path):
    corpus = restaurant_corpus(12, seed=3)
    lines = [i.hypothesis for i in corpus]
    (tmp_path / "hyp.txt").write_text("\n".join(lines) + "\n")
    (tmp_path / "ref.txt").write_text("\n".join(lines) + "\n")
    (tmp_path / "corpus.jsonl").write_bytes(dump_corpus_jsonl(corpus))
    (tmp_path / "emb.txt").write_bytes(embeddings_text(vocabulary(corpus)))
    return tmp_path


def test_score_identity_all_metrics(files, capsys):
    code, out, _ = run(["score", "--hyp", files / "hyp.txt", "--refs", files / "ref.txt",
                        "--embeddings", files / "emb.txt",
                        "--metrics", "bleu,meteor,rouge_l,average,extrema,greedy"], capsys)
    assert code == 0
    rep = json.loads(out)
    for name, value in rep["corpus_level"].items():
        if name == "meteor":
            assert 0.95 < value < 1.0
        else:
            assert value == pytest.approx(1.0, abs=1e-9), name


def test_score_bleu_without_embeddings(files, capsys):
    code, out, _ = run(["score", "--jsonl", files / "corpus.jsonl", "--metrics", "bleu"], capsys)
    assert code == 0 and json.loads(out)["metrics"] == ["bleu1", "bleu2", "bleu3", "bleu4"]


def test_score_greedy_without_embeddings_is_usage_error(files, capsys):
    code, _, err = run(["score", "--jsonl", files / "corpus.jsonl", "--metrics", "greedy"], capsys)
    assert code == 1 and "--embeddings" in err


@pytest.mark.parametrize("argv", [
    ["score"],
    ["score", "--metrics", "bleu"],
    ["nonsense"],
    ["score", "--jsonl", "x", "--bleu-smoothing", "laplace"],
])
def test_usage_errors(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_data_errors(files, capsys):
    (files / "short.txt").write_text("one line\n")
    code, _, err = run(["score", "--hyp", files / "hyp.txt", "--refs", files / "short.txt"], capsys)
    assert code == 2 and "unequal line counts" in err
    code, _, _ = run(["score", "--jsonl", files / "missing.jsonl"], capsys)
    assert code == 2


def test_score_pretty_out_file_and_threads(files, capsys, monkeypatch):
    out_file = files / "rep.json"
    assert run(["score", "--jsonl", files / "corpus.jsonl", "--out", out_file], capsys)[0] == 0
    monkeypatch.setenv("NLGM_THREADS", "3")
    code, out, _ = run(["score", "--jsonl", files / "corpus.jsonl"], capsys)
    assert out == out_file.read_text()
    code, out, _ = run(["score", "--jsonl", files / "corpus.jsonl", "--pretty"], capsys)
    assert code == 0 and "rouge_l" in out and "{" not in out


def test_score_synonyms_flag(tmp_path, capsys):
    (tmp_path / "h").write_text("cheap food\n")
    (tmp_path / "r").write_text("inexpensive food\n")
    (tmp_path / "syn").write_text("cheap inexpensive\n")
    base = ["score", "--hyp", tmp_path / "h", "--refs", tmp_path / "r", "--metrics", "meteor"]
    _, out, _ = run(base + ["--synonyms", tmp_path / "syn"], capsys)
    assert json.loads(out)["corpus_level"]["meteor"] == pytest.approx(0.9375)


def test_correlate_copy_of_human_means(tmp_path, capsys):
    grid = rating_grid(n_items=30, n_good=4, anti=False, flip=0.0, seed=1)
    from nlgm.stats import item_means
    means = item_means(grid, list(grid.raters))
    (tmp_path / "rep.json").write_bytes(report_json(means))
    (tmp_path / "ratings.csv").write_bytes(ratings_csv(grid))
    argv = ["correlate", "--report", tmp_path / "rep.json", "--ratings", tmp_path / "ratings.csv",
            "--seed", 4]
    code, out, _ = run(argv, capsys)
    assert code == 0
    rows = {r["metric"]: r for r in json.loads(out)["rows"]}
    assert rows["m"]["spearman"] == pytest.approx(1.0) and rows["m"]["pearson"] == pytest.approx(1.0)
    assert rows["human"]["pearson"] == pytest.approx(1.0)
    assert run(argv, capsys)[1] == out
    code, out, _ = run(argv + ["--format", "csv"], capsys)
    table = list(csv.DictReader(io.StringIO(out)))
    assert [r["metric"] for r in table] == ["human", "m"]
    code, out, _ = run(argv + ["--pretty"], capsys)
    assert code == 0 and "spearman" in out


def test_correlate_no_shared_items(tmp_path, capsys):
    grid = rating_grid(n_items=10, n_good=3, anti=False, seed=2)
    (tmp_path / "rep.json").write_bytes(report_json({"zz1": 0.1, "zz2": 0.2, "zz3": 0.5}))
    (tmp_path / "ratings.csv").write_bytes(ratings_csv(grid))
    code, _, err = run(["correlate", "--report", tmp_path / "rep.json",
                        "--ratings", tmp_path / "ratings.csv"], capsys)
    assert code == 2 and "share no item" in err


def test_kappa_command(tmp_path, capsys):
    same = "item_id,rater_id,score\n" + "".join(f"i{k},{r},{k % 5 + 1}\n"
                                                  for k in range(10) for r in ("a", "b"))
    (tmp_path / "r.csv").write_text(same)
    code, out, _ = run(["kappa", "--ratings", tmp_path / "r.csv"], capsys)
    data = json.loads(out)
    assert code == 0 and data["pairs"] == [{"a": "a", "b": "b", "kappa": 1.0}]
    assert all(b["percent"] == 100.0 for b in data["buckets"])
    (tmp_path / "one.csv").write_text("item_id,rater_id,score\ni1,a,3\n")
    assert run(["kappa", "--ratings", tmp_path / "one.csv"], capsys)[0] == 2
    code, out, _ = run(["kappa", "--ratings", tmp_path / "r.csv", "--pretty"], capsys)
    assert "1/1" in out


def test_kappa_three_raters(tmp_path, capsys):
    grid = rating_grid(n_items=20, n_good=3, anti=False, seed=5)
    (tmp_path / "r.csv").write_bytes(ratings_csv(grid))
    _, out, _ = run(["kappa", "--ratings", tmp_path / "r.csv", "--buckets", "0.0,0.5"], capsys)
    assert len(json.loads(out)["pairs"]) == 3


def test_baseline_self_train(tmp_path, capsys):
    one = restaurant_corpus(1, seed=7)
    (tmp_path / "one.jsonl").write_bytes(dump_corpus_jsonl(one))
    code, out, _ = run(["baseline", "--train", tmp_path / "one.jsonl",
                        "--test", tmp_path / "one.jsonl", "--seed", 1], capsys)
    assert code == 0
    got = load_corpus_jsonl(out.encode()).instances[0]
    ref = one.instances[0].references[0]
    assert got.hypothesis.lower() == " ".join(__import__("nlgm.text").text.tokenize(ref))


def test_baseline_missing_acts(tmp_path, capsys):
    (tmp_path / "train.jsonl").write_bytes(dump_corpus_jsonl(restaurant_corpus(5)))
    (tmp_path / "test.jsonl").write_bytes(dump_corpus_jsonl(restaurant_corpus(3, with_acts=False)))
    code, _, err = run(["baseline", "--train", tmp_path / "train.jsonl",
                        "--test", tmp_path / "test.jsonl"], capsys)
    assert code == 2 and "no dialogue acts" in err


def test_baseline_into_score_end_to_end(tmp_path, capsys):
    train, test = restaurant_corpus(40, seed=8), restaurant_corpus(5, seed=9)
    (tmp_path / "train.jsonl").write_bytes(dump_corpus_jsonl(train))
    (tmp_path / "test.jsonl").write_bytes(dump_corpus_jsonl(test))
    gen = tmp_path / "gen.jsonl"
    code, _, _ = run(["baseline", "--train", tmp_path / "train.jsonl", "--test",
                      tmp_path / "test.jsonl", "--seed", 3, "--out", gen], capsys)
    assert code == 0
    generated = load_corpus_jsonl(gen.read_bytes())
    assert len(generated) == 5
    for inst in generated:
        cand = delexicalize(inst.hypothesis, inst.acts).sentence.split()
        assert slot_error_rate(cand, inst.acts) in (0.0, None)
    code, out, _ = run(["score", "--jsonl", gen], capsys)
    rep = json.loads(out)
    assert code == 0 and all(0 <= v <= 1 for v in rep["corpus_level"].values())


def test_scatter_command(tmp_path, capsys):
    grid = rating_grid(n_items=40, n_good=4, anti=False, seed=3)
    from nlgm.stats import item_means
    means = item_means(grid, list(grid.raters))
    (tmp_path / "rep.json").write_bytes(report_json({k: v / 5 for k, v in means.items()}))
    (tmp_path / "r.csv").write_bytes(ratings_csv(grid))
    base = ["scatter", "--report", tmp_path / "rep.json", "--ratings", tmp_path / "r.csv"]
    code, out, _ = run(base + ["--metric", "m", "--sigma-human", 0, "--sigma-metric", 0], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 40
    assert list(rows[0]) == ["item_id", "human", "metric", "human_jit", "metric_jit"]
    assert all(r["human"] == r["human_jit"] and r["metric"] == r["metric_jit"] for r in rows)
    a = run(base + ["--metric", "m", "--seed", 5], capsys)[1]
    assert a == run(base + ["--metric", "m", "--seed", 5], capsys)[1]
    assert a != run(base + ["--metric", "m", "--seed", 6], capsys)[1]
    assert run(base + ["--metric", "bleu9"], capsys)[0] == 1


@pytest.mark.parametrize("sub", ["score", "correlate", "kappa", "baseline", "scatter"])
def test_help_exists(sub):
    proc = subprocess.run([sys.executable, "-m", "nlgm.cli", sub, "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "usage" in proc.stdout
