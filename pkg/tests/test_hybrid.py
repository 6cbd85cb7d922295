import numpy as np
import pytest
from dataclasses import replace as dc_replace

from rolecast.corpus import Role, UserCorpus, stratified_folds
from rolecast.errors import ConfigError, DataFormatError, ResourceError
from rolecast.hybrid import (
    BF_FEATURE_NAMES,
    HybridConfig,
    assemble_bf,
    load_hybrid,
    out_of_fold_probs,
    predict_role,
    save_hybrid,
    train_binary_variant,
    train_hybrid,
)
from rolecast.learners import train_decision_tree, train_random_forest, ForestParams
from rolecast.namefeat import display_name_score, screen_name_score
from rolecast.profilefeat import (
    description_first_person_score,
    description_term_count,
    tff_score,
)
from rolecast.synth import default_synthetic_spec, generate_synthetic_corpus
from rolecast.tweetfeat import tweet_scores

from conftest import make_user


SMALL = HybridConfig(n_trees=10, k=3, inner_folds=3, seed=0)


@pytest.fixture()
def synth_corpus(tmp_path):
    spec = default_synthetic_spec(1.0, image_dir=tmp_path / "img")
    return generate_synthetic_corpus(spec, 45, seed=7)


class TestAssembleBf:
    def test_composes_individual_features(self, resources):
        record = make_user(
            0,
            Role.MALE,
            display_name="John Walker",
            screen_name="john99",
            description="i am a runner",
            followers=20,
            friends=5,
            tweets=("i love mornings", "wow what a day"),
        )
        vec = assemble_bf(record, resources, imputed_brightness=0.4)
        assert len(vec) == 9
        scores = tweet_scores(
            record.tweets, resources.first_person, resources.interjections, resources.emotions
        )
        expected = [
            display_name_score("John Walker", resources.names),
            screen_name_score("john99", resources.names, resources.lexicon),
            float(
                description_first_person_score(
                    record.description, resources.first_person, resources.brand_words
                )
            ),
            float(description_term_count(record.description)),
            tff_score(20, 5),
            0.4,
            scores.fp_tweet,
            scores.i_tweet,
            scores.e_tweet,
        ]
        assert vec.tolist() == expected

    def test_empty_description(self, resources):
        record = make_user(0, Role.MALE, description="")
        vec = assemble_bf(record, resources)
        names = list(BF_FEATURE_NAMES)
        assert vec[names.index("score_fp_desc")] == 0.0
        assert vec[names.index("score_tf_desc")] == 0.0

    def test_drop_shrinks_vector(self, resources):
        record = make_user(0, Role.MALE)
        assert len(assemble_bf(record, resources, drop=frozenset({"BF1"}))) == 7
        assert len(assemble_bf(record, resources, drop=frozenset({"BF5"}))) == 6
        assert len(assemble_bf(record, resources)) == 9

    def test_brightness_from_stats(self, resources):
        record = make_user(0, Role.MALE)
        stats = np.array([0.77, 0.5, 0.1, 0.5, 0.1, 0.5, 0.1])
        vec = assemble_bf(record, resources, image_stats=stats)
        assert vec[list(BF_FEATURE_NAMES).index("score_b_image")] == 0.77


class TestOutOfFold:
    def fit_tree(self, X, y, seed):
        return train_decision_tree(X, y, seed=seed, n_classes=3)

    def test_leave_one_out_shape(self):
        X = np.arange(12, dtype=np.float64).reshape(6, 2)
        y = np.array([0, 0, 1, 1, 2, 2])
        probs = out_of_fold_probs(X, y, self.fit_tree, 6, seed=0)
        assert probs.shape == (6, 3)
        assert np.allclose(probs.sum(axis=1), 1.0)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 3))
        y = rng.integers(0, 3, size=30)
        a = out_of_fold_probs(X, y, self.fit_tree, 5, seed=3)
        b = out_of_fold_probs(X, y, self.fit_tree, 5, seed=3)
        assert np.array_equal(a, b)

    def test_separable_data_mostly_correct(self):
        rng = np.random.default_rng(1)
        centers = np.array([[0, 0], [5, 0], [0, 5]], dtype=np.float64)
        y = rng.integers(0, 3, size=60)
        X = centers[y] + rng.normal(scale=0.4, size=(60, 2))
        fit = lambda X, y, seed: train_random_forest(
            X, y, ForestParams(n_trees=15), seed=seed, n_classes=3
        )
        probs = out_of_fold_probs(X, y, fit, 5, seed=0)
        assert (np.argmax(probs, axis=1) == y).mean() >= 0.9

    def test_monotone_rescale_invariance(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(24, 3))
        y = rng.integers(0, 3, size=24)
        a = out_of_fold_probs(X, y, self.fit_tree, 4, seed=5)
        b = out_of_fold_probs(X * 2.0, y, self.fit_tree, 4, seed=5)
        assert np.array_equal(a, b)

    def test_infeasible_stratification(self):
        X = np.zeros((3, 1))
        y = np.array([0, 1, 1])
        with pytest.raises(DataFormatError, match="infeasible"):
            out_of_fold_probs(X, y, self.fit_tree, 3, seed=0)


class TestTrainHybrid:
    def test_tri_final_width_nine(self, resources, synth_corpus):
        model = train_hybrid(synth_corpus, resources, SMALL)
        assert model.final_model.n_features == 9
        assert model.channel_names() == ("bf", "af", "image")

    def test_bi_final_width_four(self, resources, tmp_path):
        spec = default_synthetic_spec(
            1.0, image_dir=tmp_path / "img", roles=(Role.MALE, Role.FEMALE)
        )
        corpus = generate_synthetic_corpus(spec, 30, seed=3)
        model = train_binary_variant(corpus, resources, SMALL)
        assert model.final_model.n_features == 4
        assert model.channel_names() == ("merged", "image")
        assert len(model.vocab.words) == 2 * SMALL.k

    def test_bi_rejects_brand_labels(self, resources, synth_corpus):
        with pytest.raises(DataFormatError, match="brand"):
            train_binary_variant(synth_corpus, resources, SMALL)

    def test_missing_role_rejected(self, resources, tmp_path):
        spec = default_synthetic_spec(1.0, image_dir=tmp_path / "img", roles=(Role.MALE, Role.FEMALE))
        corpus = generate_synthetic_corpus(spec, 20, seed=0)
        with pytest.raises(DataFormatError, match="absent"):
            train_hybrid(corpus, resources, SMALL)

    def test_same_seed_identical_serialized_models(self, resources, synth_corpus, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_hybrid(train_hybrid(synth_corpus, resources, SMALL), a)
        save_hybrid(train_hybrid(synth_corpus, resources, SMALL), b)
        assert a.read_bytes() == b.read_bytes()

    def test_drop_af_img_single_channel(self, resources, synth_corpus):
        config = dc_replace(SMALL, drop=frozenset({"AF1", "IMG"}))
        model = train_hybrid(synth_corpus, resources, config)
        assert model.final_model.n_features == 3
        assert model.channel_names() == ("bf",)
        assert model.vocab is None
        assert model.image_source is None

    def test_drop_all_bf_groups(self, resources, synth_corpus):
        config = dc_replace(SMALL, drop=frozenset({"BF1", "BF2", "BF3", "BF4", "BF5"}))
        model = train_hybrid(synth_corpus, resources, config)
        assert model.channel_names() == ("af", "image")
        assert model.final_model.n_features == 6

    def test_uniform_image_mode_still_trains(self, resources, synth_corpus):
        config = dc_replace(SMALL, image_mode="uniform")
        model = train_hybrid(synth_corpus, resources, config)
        pred = predict_role(model, synth_corpus.records[0], resources)
        assert pred.channel_probabilities["image"] == (1 / 3, 1 / 3, 1 / 3)
        assert sum(pred.probabilities) == pytest.approx(1.0)

    def test_external_mode_from_inline_probs(self, resources):
        records = []
        i = 0
        for role, onehot in [
            (Role.MALE, (0.9, 0.05, 0.05)),
            (Role.FEMALE, (0.05, 0.9, 0.05)),
            (Role.BRAND, (0.05, 0.05, 0.9)),
        ]:
            for _ in range(6):
                records.append(
                    make_user(i, role, tweets=(f"tweet number {i} words here", "more text"),
                              image_probs=onehot)
                )
                i += 1
        corpus = UserCorpus(records)
        config = dc_replace(SMALL, image_mode="external", k=1, inner_folds=2)
        model = train_hybrid(corpus, resources, config)
        pred = predict_role(model, corpus.records[0], resources)
        assert pred.channel_probabilities["image"] == (0.9, 0.05, 0.05)

    def test_bi_external_mode_needs_two_column_file(self, resources, tmp_path):
        spec = default_synthetic_spec(
            1.0, image_dir=tmp_path / "img", roles=(Role.MALE, Role.FEMALE)
        )
        corpus = generate_synthetic_corpus(spec, 24, seed=9)
        probs_file = tmp_path / "probs.txt"
        lines = [
            f"{rec.user_id} {0.9 if rec.label == Role.MALE else 0.1:.1f} "
            f"{0.1 if rec.label == Role.MALE else 0.9:.1f}"
            for rec in corpus
        ]
        probs_file.write_text("\n".join(lines) + "\n", encoding="utf-8")
        config = dc_replace(SMALL, mode="bi", image_mode="external")
        with pytest.raises(ConfigError, match="2-column"):
            train_hybrid(corpus, resources, config)  # inline probs are tri-class only
        model = train_hybrid(corpus, resources, config, external_probs=probs_file)
        pred = predict_role(model, corpus.records[0], resources)
        assert pred.channel_probabilities["image"] == (0.9, 0.1)

    def test_resub_stacking_supported(self, resources, synth_corpus):
        config = dc_replace(SMALL, stacking="resub")
        model = train_hybrid(synth_corpus, resources, config)
        assert model.final_model.n_features == 9

    def test_all_classifier_types(self, resources, synth_corpus):
        for kind in ("tree", "forest", "adaboost"):
            config = dc_replace(SMALL, classifier=kind, boost_stages=5)
            model = train_hybrid(synth_corpus, resources, config)
            pred = predict_role(model, synth_corpus.records[0], resources)
            assert sum(pred.probabilities) == pytest.approx(1.0)


class TestStackerSanity:
    def test_one_hot_channel_pattern_predicts_male(self):
        # a final classifier trained on agreeing one-hot channel triples
        rows, labels = [], []
        for cls in range(3):
            onehot = [0.0, 0.0, 0.0]
            onehot[cls] = 1.0
            rows.extend([onehot * 3] * 5)
            labels.extend([cls] * 5)
        final = train_decision_tree(np.array(rows), labels)
        probs = np.array([1.0, 0.0, 0.0] * 3)
        from rolecast.learners import predict_proba

        assert int(np.argmax(predict_proba(final, probs))) == 0


class TestBiCrossValidation:
    def test_separable_two_class_accuracy(self, resources, tmp_path):
        from rolecast.evalreport import cross_validate

        spec = default_synthetic_spec(
            1.0, image_dir=tmp_path / "img", roles=(Role.MALE, Role.FEMALE)
        )
        corpus = generate_synthetic_corpus(spec, 60, seed=5)
        config = dc_replace(SMALL, mode="bi")
        report = cross_validate(corpus, resources, config, n_folds=3)
        assert report.accuracy >= 0.9
        assert set(report.channel_accuracy) == {"merged", "image"}


class TestPredictRole:
    def test_training_prototype_recovers_role(self, resources, synth_corpus):
        model = train_hybrid(synth_corpus, resources, SMALL)
        hits = 0
        for rec in synth_corpus.records[:9]:
            if predict_role(model, rec, resources).role == rec.label:
                hits += 1
        assert hits >= 8

    def test_tweet_order_invariance(self, resources, synth_corpus):
        model = train_hybrid(synth_corpus, resources, SMALL)
        rec = synth_corpus.records[1]
        shuffled = dc_replace(rec, tweets=tuple(reversed(rec.tweets)))
        a = predict_role(model, rec, resources)
        b = predict_role(model, shuffled, resources)
        assert a.role == b.role
        assert a.probabilities == b.probabilities

    def test_argmax_tie_goes_to_lower_index(self, resources, synth_corpus):
        model = train_hybrid(synth_corpus, resources, SMALL)
        pred = predict_role(model, synth_corpus.records[0], resources)
        probs = np.array(pred.probabilities)
        assert pred.role == model.roles[int(np.argmax(probs))]

    def test_missing_image_sets_flags(self, resources, synth_corpus):
        model = train_hybrid(synth_corpus, resources, SMALL)
        rec = dc_replace(synth_corpus.records[0], image_path=None)
        pred = predict_role(model, rec, resources)
        assert "imputed_brightness" in pred.flags
        assert "image_channel_degraded" in pred.flags


class TestNoLeakage:
    def test_mutating_held_out_users_changes_nothing(self, resources, synth_corpus, tmp_path):
        folds = stratified_folds(synth_corpus, 3, seed=0)
        train_ids = folds.train_ids(0)
        held_out = set(folds.fold_ids(0))

        baseline = train_hybrid(synth_corpus.subset(train_ids), resources, SMALL)

        mutated_records = []
        rotate = {Role.MALE: Role.FEMALE, Role.FEMALE: Role.BRAND, Role.BRAND: Role.MALE}
        for rec in synth_corpus:
            if rec.user_id in held_out:
                mutated_records.append(
                    dc_replace(rec, tweets=("garbage text only",), label=rotate[rec.label])
                )
            else:
                mutated_records.append(rec)
        mutated_corpus = UserCorpus(mutated_records)
        retrained = train_hybrid(mutated_corpus.subset(train_ids), resources, SMALL)

        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_hybrid(baseline, a)
        save_hybrid(retrained, b)
        assert a.read_bytes() == b.read_bytes()
        assert baseline.vocab == retrained.vocab


class TestHybridSerialization:
    def test_round_trip_predictions_identical(self, resources, synth_corpus, tmp_path):
        model = train_hybrid(synth_corpus, resources, SMALL)
        path = tmp_path / "model.json"
        save_hybrid(model, path)
        loaded = load_hybrid(path, resources)
        for rec in synth_corpus.records[:5]:
            assert predict_role(model, rec, resources) == predict_role(loaded, rec, resources)

    def test_fingerprint_mismatch_rejected(self, resources, synth_corpus, tmp_path):
        model = train_hybrid(synth_corpus, resources, SMALL)
        path = tmp_path / "model.json"
        save_hybrid(model, path)
        tampered = dc_replace(resources, stoplist=frozenset({"only", "these"}))
        with pytest.raises(ResourceError, match="stoplist"):
            load_hybrid(path, tampered)


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"classifier": "svm"},
            {"k": 0},
            {"window": 7},
            {"image_mode": "cnn"},
            {"mode": "quad"},
            {"stacking": "magic"},
            {"inner_folds": 1},
            {"seed": -1},
            {"n_trees": 0},
            {"max_depth": 0},
            {"drop": frozenset({"BF9"})},
            {"drop": frozenset({"BF1", "BF2", "BF3", "BF4", "BF5", "AF1", "IMG"})},
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            HybridConfig(**kwargs).validate()

    def test_config_dict_round_trip(self):
        config = HybridConfig(classifier="adaboost", k=5, window=10, drop=frozenset({"BF1"}))
        assert HybridConfig.from_dict(config.to_dict()) == config


class TestSynthCorpus:
    def test_same_seed_identical(self, tmp_path):
        spec = default_synthetic_spec(0.5, image_dir=tmp_path / "img")
        a = generate_synthetic_corpus(spec, 20, seed=4)
        b = generate_synthetic_corpus(spec, 20, seed=4)
        assert a.records == b.records
        # image files rewritten identically
        first = (tmp_path / "img" / "u00000.png").read_bytes()
        generate_synthetic_corpus(spec, 20, seed=4)
        assert (tmp_path / "img" / "u00000.png").read_bytes() == first

    def test_different_seeds_differ(self, tmp_path):
        spec = default_synthetic_spec(0.5)
        assert generate_synthetic_corpus(spec, 20, 0).records != generate_synthetic_corpus(
            spec, 20, 1
        ).records

    def test_roles_balanced(self):
        spec = default_synthetic_spec(1.0)
        corpus = generate_synthetic_corpus(spec, 30, seed=0)
        assert set(corpus.role_counts().values()) == {10}

    def test_invalid_spec_rejected(self):
        with pytest.raises(ConfigError):
            default_synthetic_spec(1.5).validate()
        spec = default_synthetic_spec(0.5, signal_groups={"NOPE"})
        with pytest.raises(ConfigError):
            spec.validate()

    def test_no_image_dir_means_no_paths(self):
        spec = default_synthetic_spec(1.0)
        corpus = generate_synthetic_corpus(spec, 6, seed=0)
        assert all(rec.image_path is None for rec in corpus)

    def test_signal_groups_isolate_names(self, tmp_path):
        spec = default_synthetic_spec(1.0, image_dir=tmp_path / "img", signal_groups={"BF1"})
        corpus = generate_synthetic_corpus(spec, 12, seed=0)
        # descriptions come from the shared profile for every role
        assert all("official" not in rec.description for rec in corpus)
