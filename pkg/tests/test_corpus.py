import json

import pytest

from rolecast.corpus import (
    Role,
    UserCorpus,
    WordListKind,
    load_dataset,
    load_name_dictionary,
    load_word_list,
    save_dataset,
    stratified_folds,
)
from rolecast.errors import DataFormatError

from conftest import make_corpus, make_user


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def valid_row(i, **overrides):
    row = {
        "user_id": f"u{i}",
        "screen_name": f"screen{i}",
        "display_name": f"User {i}",
        "description": "hello",
        "followers": 5,
        "friends": 3,
        "tweets": ["a tweet"],
        "label": "male",
    }
    row.update(overrides)
    return row


class TestLoadDataset:
    def test_three_valid_records(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [valid_row(i) for i in range(3)])
        corpus = load_dataset(path)
        assert len(corpus) == 3

    def test_negative_friends_reports_field_and_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [valid_row(0), valid_row(1, friends=-1)])
        with pytest.raises(DataFormatError) as err:
            load_dataset(path)
        assert "friends" in str(err.value)
        assert ":2:" in str(err.value)

    def test_duplicate_user_id(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [valid_row(0), valid_row(0)])
        with pytest.raises(DataFormatError, match="duplicate user_id"):
            load_dataset(path)

    def test_missing_label_when_required(self, tmp_path):
        path = tmp_path / "d.jsonl"
        row = valid_row(0)
        del row["label"]
        write_jsonl(path, [row])
        load_dataset(path)  # fine unlabeled
        with pytest.raises(DataFormatError, match="missing label"):
            load_dataset(path, require_labels=True)

    def test_unknown_field_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [valid_row(0, imagepath="x.png")])
        with pytest.raises(DataFormatError, match="imagepath"):
            load_dataset(path)

    def test_invalid_json_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"user_id": "u0"\n', encoding="utf-8")
        with pytest.raises(DataFormatError, match=":1:"):
            load_dataset(path)

    def test_bad_label_value(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [valid_row(0, label="robot")])
        with pytest.raises(DataFormatError, match="male/female/brand"):
            load_dataset(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataFormatError, match="empty"):
            load_dataset(path)

    def test_min_tweets_gate(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [valid_row(0), valid_row(1, tweets=[])])
        corpus = load_dataset(path, min_tweets=1)
        assert len(corpus) == 1
        assert corpus.dropped_min_tweets == 1
        corpus = load_dataset(path, min_tweets=0)
        assert len(corpus) == 2

    @pytest.mark.parametrize(
        "probs,message",
        [
            ([0.5, 0.5], "exactly 3"),
            ([-0.1, 0.6, 0.5], ">= 0"),
            ([0.5, 0.5, 0.5], "sum to 1"),
        ],
    )
    def test_image_probs_invariants(self, tmp_path, probs, message):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [valid_row(0, image_probs=probs)])
        with pytest.raises(DataFormatError, match=message):
            load_dataset(path)

    def test_round_trip(self, tmp_path):
        path = tmp_path / "d.jsonl"
        rows = [
            valid_row(0, image_probs=[0.25, 0.25, 0.5], tweets=["a", "b"]),
            valid_row(1, label="brand", image_path="img.png"),
            valid_row(2, label="female", followers=0, friends=0),
        ]
        write_jsonl(path, rows)
        corpus = load_dataset(path)
        out = tmp_path / "copy.jsonl"
        save_dataset(corpus, out)
        again = load_dataset(out)
        assert corpus.records == again.records


class TestNameDictionary:
    def test_paper_counts_merge(self, tmp_path):
        path = tmp_path / "names.csv"
        path.write_text("dallis,F,406\ndallis,M,167\n", encoding="utf-8")
        d = load_name_dictionary([path])
        assert d.frequencies("dallis") == (406, 167)

    def test_additive_merge_across_files(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text("kim,F,10\n", encoding="utf-8")
        b.write_text("KIM,F,5\n", encoding="utf-8")
        d = load_name_dictionary([a, b])
        assert d.frequencies("kim") == (15, 0)

    def test_empty_file_list(self):
        with pytest.raises(DataFormatError):
            load_name_dictionary([])

    @pytest.mark.parametrize(
        "row", ["kim,X,5", "kim,F,0", "kim,F,-3", "kim,F", "kim,F,many"]
    )
    def test_malformed_rows(self, tmp_path, row):
        path = tmp_path / "names.csv"
        path.write_text(row + "\n", encoding="utf-8")
        with pytest.raises(DataFormatError):
            load_name_dictionary([path])

    def test_merge_is_order_independent(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text("kim,F,10\nlee,M,4\n", encoding="utf-8")
        b.write_text("kim,M,2\nkim,F,1\n", encoding="utf-8")
        assert load_name_dictionary([a, b]) == load_name_dictionary([b, a])


class TestWordList:
    def test_lowercased(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("I\nam\nmy\n", encoding="utf-8")
        wl = load_word_list(path, WordListKind.FIRST_PERSON)
        assert wl.words == frozenset({"i", "am", "my"})

    def test_deduplicated(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("a\na\nb\n", encoding="utf-8")
        wl = load_word_list(path, WordListKind.EMOTION)
        assert wl.words == frozenset({"a", "b"})

    def test_comments_only_is_error(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("# nothing\n# here\n", encoding="utf-8")
        with pytest.raises(DataFormatError, match="empty"):
            load_word_list(path, WordListKind.EMOTION)


class TestStratifiedFolds:
    def test_exact_divisibility(self):
        corpus = make_corpus(10)
        folds = stratified_folds(corpus, 10, seed=0)
        for f in range(10):
            ids = folds.fold_ids(f)
            assert len(ids) == 3
            labels = {corpus.get(uid).label for uid in ids}
            assert labels == {Role.MALE, Role.FEMALE, Role.BRAND}

    def test_deterministic(self):
        corpus = make_corpus(7)
        assert stratified_folds(corpus, 3, seed=5) == stratified_folds(corpus, 3, seed=5)

    def test_small_class_rejected(self):
        corpus = make_corpus(5)
        with pytest.raises(DataFormatError, match="fewer than 10"):
            stratified_folds(corpus, 10, seed=0)

    def test_n_folds_minimum(self):
        corpus = make_corpus(5)
        with pytest.raises(DataFormatError):
            stratified_folds(corpus, 1, seed=0)

    @pytest.mark.parametrize("seed", range(5))
    def test_union_and_disjointness(self, seed):
        corpus = make_corpus(7)
        folds = stratified_folds(corpus, 4, seed=seed)
        seen = []
        for f in range(4):
            seen.extend(folds.fold_ids(f))
        assert sorted(seen) == sorted(r.user_id for r in corpus)
        assert len(seen) == len(set(seen))

    @pytest.mark.parametrize("seed", range(5))
    def test_per_fold_proportions_within_one(self, seed):
        corpus = make_corpus(11)
        n_folds = 4
        folds = stratified_folds(corpus, n_folds, seed=seed)
        for f in range(n_folds):
            counts = {}
            for uid in folds.fold_ids(f):
                label = corpus.get(uid).label
                counts[label] = counts.get(label, 0) + 1
            for role in (Role.MALE, Role.FEMALE, Role.BRAND):
                expected = 11 / n_folds
                assert abs(counts.get(role, 0) - expected) <= 1

    def test_unlabeled_user_rejected(self):
        corpus = UserCorpus([make_user(0, None), make_user(1, Role.MALE)])
        with pytest.raises(DataFormatError, match="no label"):
            stratified_folds(corpus, 2, seed=0)
