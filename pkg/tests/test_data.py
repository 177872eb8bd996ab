"""Corpus ingestion, statistics, batching, and the synthetic generator."""

import numpy as np
import pytest

from laco.data import (
    Corpus,
    CorpusFormatError,
    Instance,
    SynthSpec,
    batches,
    corpus_stats,
    empirical_cooccurrence,
    generate_synthetic,
    generative_cooccurrence,
    load_corpus,
    planted_affinity,
    read_instances,
    read_truth_table,
    train_label_frequencies,
    write_instances,
    write_truth_table,
)


class TestLoading:
    def test_two_line_file_with_inference(self, tmp_path):
        path = tmp_path / "train.tsv"
        path.write_text("a\tsome text here\na b\tmore text\n")
        corpus = load_corpus(path)
        assert corpus.label_space == ["a", "b"]
        assert corpus.n_labels == 2
        assert corpus.train[0].labels == frozenset(["a"])
        assert corpus.train[1].text == ("more", "text")

    def test_missing_tab_names_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tok text\nno separator here\n")
        with pytest.raises(CorpusFormatError, match=":2"):
            read_instances(path)

    def test_empty_label_set_names_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tok\n\tmissing labels\n")
        with pytest.raises(CorpusFormatError, match=":2"):
            read_instances(path)

    def test_unknown_label_lists_offenders(self, tmp_path):
        path = tmp_path / "train.tsv"
        path.write_text("a zz\ttext\n")
        with pytest.raises(CorpusFormatError, match="zz"):
            load_corpus(path, label_space=["a", "b"])

    def test_round_trip_bytes(self, tmp_path):
        p1 = tmp_path / "one.tsv"
        p1.write_text("a b\thello world\nb\tsecond doc\n")
        corpus = load_corpus(p1)
        p2 = tmp_path / "two.tsv"
        write_instances(p2, corpus.train)
        assert p1.read_bytes() == p2.read_bytes()

    def test_label_space_is_lexicographic(self, tmp_path):
        path = tmp_path / "train.tsv"
        path.write_text("zeta alpha\tdoc one\nmid\tdoc two\n")
        corpus = load_corpus(path)
        assert corpus.label_space == ["alpha", "mid", "zeta"]


class TestStats:
    def test_single_doc_mean_labels(self):
        corpus = Corpus(label_space=["a", "b", "c"],
                        train=[Instance(("w1", "w2"), frozenset("abc"))])
        stats = corpus_stats(corpus)
        assert stats.mean_labels == 3.0
        assert stats.mean_doc_len == 2.0
        assert stats.n_combinations == 1

    def test_frequencies_sum_to_total_label_count(self):
        rng = np.random.default_rng(0)
        names = ["a", "b", "c", "d"]
        train = []
        for _ in range(50):
            chosen = rng.choice(4, size=rng.integers(1, 4), replace=False)
            train.append(Instance(("x",), frozenset(names[i] for i in chosen)))
        corpus = Corpus(label_space=names, train=train)
        stats = corpus_stats(corpus)
        assert sum(stats.label_freq.values()) == sum(len(i.labels) for i in train)

    def test_train_frequencies_ignore_other_splits(self):
        corpus = Corpus(
            label_space=["a", "b"],
            train=[Instance(("x",), frozenset(["a"]))],
            test=[Instance(("x",), frozenset(["b"]))],
        )
        freq = train_label_frequencies(corpus)
        assert freq == {"a": 1, "b": 0}


class TestBatches:
    def test_sizes_with_partial_final_batch(self):
        instances = [Instance((str(i),), frozenset(["a"])) for i in range(100)]
        out = batches(instances, 32, shuffle_seed=0)
        assert [len(b) for b in out] == [32, 32, 32, 4]

    def test_same_seed_same_order(self):
        instances = [Instance((str(i),), frozenset(["a"])) for i in range(100)]
        a = batches(instances, 10, shuffle_seed=7)
        b = batches(instances, 10, shuffle_seed=7)
        assert a == b

    def test_different_seeds_differ(self):
        instances = [Instance((str(i),), frozenset(["a"])) for i in range(100)]
        a = batches(instances, 10, shuffle_seed=1)
        b = batches(instances, 10, shuffle_seed=2)
        assert a != b


class TestSynthetic:
    def test_deterministic_edge_forces_pair(self):
        aff = np.zeros((2, 2))
        aff[0, 1] = aff[1, 0] = 1.0
        spec = SynthSpec(n_labels=2, affinity=aff, n_train=200, n_valid=0,
                         n_test=0)
        corpus, _ = generate_synthetic(spec, seed=0)
        both = frozenset(corpus.label_space)
        for inst in corpus.train:
            assert inst.labels == both

    def test_same_seed_identical_bytes(self, tmp_path):
        spec = SynthSpec(n_labels=5, affinity=planted_affinity(5),
                         n_train=50, n_valid=10, n_test=10)
        paths = []
        for run in range(2):
            corpus, truth = generate_synthetic(spec, seed=9)
            path = tmp_path / f"run{run}.tsv"
            write_instances(path, corpus.train + corpus.valid + corpus.test)
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]

    def test_power_law_long_tail(self):
        # least-frequent label of 20 under exponent 1.5 (with no planted
        # affinity feeding it) stays under 2% of documents
        aff = np.zeros((20, 20))
        spec = SynthSpec(n_labels=20, affinity=aff, power_exponent=1.5,
                         n_train=5000, n_valid=0, n_test=0)
        corpus, _ = generate_synthetic(spec, seed=1)
        freq = train_label_frequencies(corpus)
        rarest = min(freq.values())
        assert rarest / 5000 < 0.02

    def test_empirical_matches_generative_table(self):
        spec = SynthSpec(n_labels=6, affinity=planted_affinity(6, 0.6),
                         n_train=10_000, n_valid=0, n_test=0)
        corpus, truth = generate_synthetic(spec, seed=2)
        emp = empirical_cooccurrence(corpus.train, corpus.label_space)
        assert np.max(np.abs(emp - truth)) < 0.02

    def test_generative_table_matches_brute_force_enumeration(self):
        # tiny case: enumerate anchor and the two independent coin flips
        aff = np.array([[0.0, 0.5, 0.25],
                        [0.5, 0.0, 0.0],
                        [0.25, 0.0, 0.0]])
        spec = SynthSpec(n_labels=3, affinity=aff, power_exponent=1.0,
                         n_train=1, n_valid=0, n_test=0)
        pi = spec.anchor_profile()
        table = generative_cooccurrence(spec)
        # P(0 and 1 both present)
        expected01 = pi[0] * 0.5 + pi[1] * 0.5 + pi[2] * 0.25 * 0.0
        assert table[0, 1] == pytest.approx(expected01, abs=1e-15)
        # marginal of label 2
        expected2 = pi[2] + pi[0] * 0.25 + pi[1] * 0.0
        assert table[2, 2] == pytest.approx(expected2, abs=1e-15)

    def test_isolated_label_warns(self):
        aff = np.zeros((3, 3))
        aff[0, 1] = aff[1, 0] = 0.8  # label 2 isolated
        spec = SynthSpec(n_labels=3, affinity=aff, n_train=5, n_valid=0,
                         n_test=0)
        with pytest.warns(UserWarning, match="zero affinity"):
            generate_synthetic(spec, seed=0)

    def test_truth_table_round_trip(self, tmp_path):
        spec = SynthSpec(n_labels=4, affinity=planted_affinity(4), n_train=5,
                         n_valid=0, n_test=0)
        corpus, truth = generate_synthetic(spec, seed=3)
        path = tmp_path / "truth.tsv"
        write_truth_table(path, corpus.label_space, truth)
        names, loaded = read_truth_table(path)
        assert names == corpus.label_space
        assert np.array_equal(loaded, truth)

    def test_affinity_validation(self):
        with pytest.raises(ValueError):
            SynthSpec(n_labels=2, affinity=np.array([[0.0, 1.5], [0.0, 0.0]]))
        with pytest.raises(ValueError):
            SynthSpec(n_labels=3, affinity=np.zeros((2, 2)))

    def test_label_names_sort_in_index_order(self):
        spec = SynthSpec(n_labels=12, affinity=np.zeros((12, 12)))
        assert sorted(spec.label_names) == spec.label_names
