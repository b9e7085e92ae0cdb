import json
import math
import os
import pathlib

import pytest

import ctxsearch

CORPUS = pathlib.Path(os.environ.get("CTXSEARCH_TEST_CORPUS", pathlib.Path(__file__).parents[1] / "corpus"))

JAVA = """class A {
    int total(int[] xs) {
        int sum = 0;
        for (int i = 0; i < xs.length; i++) {
            sum += xs[i];
        }
        return sum;
    }
}
"""


def test_version_lists_grammars():
    text = ctxsearch.version()
    assert text.startswith("ctxsearch ")
    for name in ("c", "java", "javascript", "python"):
        assert name + "=" in text


def test_parse_round_trip_on_corpus_sample():
    files = sorted(p for p in CORPUS.rglob("*") if p.suffix in {".py", ".java", ".c", ".js"})
    assert len(files) >= 20
    ext = {".py": "python", ".java": "java", ".c": "c", ".js": "javascript"}
    for path in files[::5]:
        source = path.read_text(encoding="utf-8")
        assert ctxsearch.reconstruct(source, ext[path.suffix]) == source
        assert "".join(ctxsearch.parse_tokens(source, ext[path.suffix])) == source


def test_select_span_is_balanced_and_splices_back():
    span = ctxsearch.select_span(JAVA, "java", 20, seed=3)
    target = span["target"]
    assert target.startswith("<|cls:java|>")
    body = target[len("<|cls:java|>"):]
    for open_, close in ("()", "{}", "[]"):
        assert body.count(open_) == body.count(close)
    context = span["context"][len("<|cls:java|>"):]
    assert context.replace("<|mask|>", body, 1) == JAVA


def test_generate_pairs_is_deterministic_and_occluded():
    files = [("demo/A.java", "java", JAVA)]
    a = ctxsearch.generate_pairs(files, seed=11, mask_prob=1.0, skip_prob=0.0)
    b = ctxsearch.generate_pairs(files, seed=11, mask_prob=1.0, skip_prob=0.0, jobs=4)
    assert [p.to_json() for p in a] == [p.to_json() for p in b]
    assert a
    for pair in a:
        assert pair.context.count("<|mask|>") == 1
        assert json.loads(pair.to_json())["id"] == pair.id
        assert ctxsearch.Pair.from_json(pair.to_json()).target == pair.target


def test_batches_are_language_pure():
    files = [("demo/A.java", "java", JAVA), ("demo/b.py", "python", "def f(x):\n    return x + 1\n\n\ndef g(y):\n    return f(y) * 2\n")]
    pairs = ctxsearch.generate_pairs(files, seed=1)
    for language, members in ctxsearch.batch_by_language(pairs, 7000):
        assert {pairs[i].language for i in members} == {language}


def test_ranking_metrics():
    ranking = ["a", "b", "c", "d"]
    assert ctxsearch.average_precision(ranking, {"a", "c"}) == pytest.approx((1 + 2 / 3) / 2)
    assert ctxsearch.reciprocal_rank(ranking, {"c"}) == pytest.approx(1 / 3)
    assert ctxsearch.precision_at_k(ranking, {"a", "c"}, 2) == pytest.approx(0.5)
    assert ctxsearch.ndcg(ranking, {"b"}) == pytest.approx(1 / math.log2(3))
    with pytest.raises(ctxsearch.Error):
        ctxsearch.average_precision(ranking, set())


def test_evaluate_excludes_original():
    report = ctxsearch.evaluate(
        {"q": [1.0, 0.0]},
        {"orig": [1.0, 0.0], "near": [0.9, 0.1], "far": [0.0, 1.0]},
        {"q": {"orig", "near"}},
        {"q": "orig"},
    )
    assert report["map"] == pytest.approx(1.0)
    assert report["mrr"] == pytest.approx(1.0)


def test_info_nce_closed_form():
    assert ctxsearch.info_nce([1.0, 0.0], [1.0, 0.0], [[0.0, 1.0]], 0.1) == pytest.approx(math.log1p(math.exp(-10)), abs=1e-12)
    assert ctxsearch.info_nce([1.0, 0.0], [1.0, 0.0], [[0.0, 1.0]], 0.1, negatives_only=True) == pytest.approx(-10.0)


def test_toy_encoder_round_trip(tmp_path):
    enc = ctxsearch.ToyEncoder(buckets=512, dimension=16, seed=5)
    v = enc.encode("int x = y + 1;")
    assert len(v) == 16
    assert sum(x * x for x in v) == pytest.approx(1.0)
    path = tmp_path / "enc.ckpt"
    enc.save(path)
    again = ctxsearch.ToyEncoder.load(path)
    assert again.encode("int x = y + 1;") == v


def test_cli_usage_error_exit_code():
    code, out, err = ctxsearch.run_cli(["pairs", "--no-such-flag"])
    assert code == 1
    assert "--seed" in err
