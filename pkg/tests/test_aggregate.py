import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import fixtures_java as fx
from oracles import scalar_aggregate
from pathvec.aggregate import (
    AggregationSpec,
    EmptyClass,
    NoMethods,
    SelectionSpec,
    aggregate_vectors,
    build_dataset,
    build_pair_dataset,
    embed_file,
    embed_pair_difference,
    parse_aggregation_name,
    read_dataset_csv,
    select_methods,
    standard_agg_suite,
    write_dataset_csv,
)
from pathvec.java import parse_file
from pathvec.model import ModelConfig, TrainedModel, init_params
from pathvec.pathctx import ExtractionConfig, build_vocabulary, extract_unit_samples


# --- specs and the 23-suite ----------------------------------------------------


def test_suite_has_exactly_23():
    suite = standard_agg_suite()
    assert len(suite) == 23
    assert len({s.functions for s in suite}) == 23


def test_suite_membership():
    suite = {s.functions for s in standard_agg_suite()}
    assert ("mean",) in suite
    assert ("min", "mean") in suite
    triples_or_more = [f for f in suite if len(f) >= 3]
    assert sorted(triples_or_more) == [
        ("min", "max", "mean"),
        ("min", "max", "sum", "mean", "median", "stddev"),
    ]


def test_spec_canonical_ordering_and_names():
    spec = AggregationSpec(("mean", "min"))
    assert spec.functions == ("min", "mean")
    assert spec.name == "minMean"
    assert AggregationSpec(("stddev", "median")).name == "medStd"
    assert AggregationSpec(("min", "mean", "max")).name == "minMaxMean"
    full = AggregationSpec(("stddev", "median", "mean", "sum", "max", "min"))
    assert full.name == "minMaxSumMeanMedStd"


def test_spec_validation():
    with pytest.raises(ValueError):
        AggregationSpec(())
    with pytest.raises(ValueError):
        AggregationSpec(("mean", "mean"))
    with pytest.raises(ValueError):
        AggregationSpec(("mode",))


def test_parse_aggregation_name():
    assert parse_aggregation_name("meanMin").functions == ("min", "mean")
    assert parse_aggregation_name("maxMed").functions == ("max", "median")
    assert parse_aggregation_name("minMeanMax").functions == ("min", "max", "mean")
    assert parse_aggregation_name("minMaxMeanMedianStddevSum").functions == (
        "min", "max", "sum", "mean", "median", "stddev"
    )
    with pytest.raises(ValueError):
        parse_aggregation_name("bogus")


# --- selection -------------------------------------------------------------------


def _vecs(*pairs):
    return [(np.array(v, dtype=float), n) for v, n in pairs]


def test_select_top1_takes_longest():
    vectors = _vecs(([1.0], 10), ([2.0], 2), ([3.0], 7))
    out = select_methods(vectors, SelectionSpec("topk", k=1))
    assert [v[0] for v in out] == [1.0]


def test_select_topk_tie_prefers_earlier_declaration():
    vectors = _vecs(([1.0], 5), ([2.0], 5), ([3.0], 5))
    out = select_methods(vectors, SelectionSpec("topk", k=2))
    assert [v[0] for v in out] == [1.0, 2.0]


def test_select_clamps_k():
    vectors = _vecs(([1.0], 1), ([2.0], 2))
    for mode in ("topk", "randomk"):
        out = select_methods(vectors, SelectionSpec(mode, k=5))
        assert [v[0] for v in out] == [1.0, 2.0]


def test_select_randomk_seeded():
    vectors = _vecs(*[([float(i)], i) for i in range(20)])
    a = select_methods(vectors, SelectionSpec("randomk", k=5, seed=3), salt="s")
    b = select_methods(vectors, SelectionSpec("randomk", k=5, seed=3), salt="s")
    c = select_methods(vectors, SelectionSpec("randomk", k=5, seed=4), salt="s")
    assert [v[0] for v in a] == [v[0] for v in b]
    assert [v[0] for v in a] != [v[0] for v in c]


def test_selection_spec_validation():
    with pytest.raises(ValueError):
        SelectionSpec("best", k=1)
    with pytest.raises(ValueError):
        SelectionSpec("topk", k=0)


# --- aggregation -----------------------------------------------------------------


def test_mean_example():
    out = aggregate_vectors([np.array([1.0, 2.0]), np.array([3.0, 4.0])],
                            AggregationSpec(("mean",)))
    assert np.array_equal(out, [2.0, 3.0])


def test_meanmax_singleton():
    v = np.array([1.5, -2.0, 0.0])
    out = aggregate_vectors([v], AggregationSpec(("mean", "max")))
    assert np.array_equal(out, np.concatenate([v, v]))


def test_meanstd_identical_vectors():
    v = np.array([4.0, 5.0])
    out = aggregate_vectors([v, v, v], AggregationSpec(("mean", "stddev")))
    assert np.array_equal(out, np.concatenate([v, np.zeros(2)]))


def test_full_spec_hand_value():
    vectors = [np.array([0.0, 1.0]), np.array([2.0, 3.0]), np.array([4.0, 5.0])]
    out = aggregate_vectors(vectors, AggregationSpec(
        ("min", "max", "sum", "mean", "median", "stddev")))
    std = np.sqrt(8.0 / 3.0)
    expected = [0, 1, 4, 5, 6, 9, 2, 3, 2, 3, std, std]
    assert np.allclose(out, expected, atol=1e-12)
    assert out[10] == pytest.approx(1.632993161855452, abs=1e-12)


def test_aggregate_matches_scalar_oracle_on_random_inputs():
    rng = np.random.default_rng(8)
    suite = standard_agg_suite()
    for _ in range(200):
        n = int(rng.integers(1, 7))
        width = int(rng.integers(1, 5))
        vectors = [rng.standard_normal(width) for _ in range(n)]
        spec = suite[int(rng.integers(0, len(suite)))]
        got = aggregate_vectors(vectors, spec)
        expected = scalar_aggregate(vectors, spec.functions)
        assert got.shape == (len(spec.functions) * width,)
        assert np.allclose(got, expected, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=1, max_value=4),
    st.floats(min_value=0.01, max_value=100.0),
    st.integers(min_value=0, max_value=10_000),
)
def test_scale_equivariance(n, width, scale, seed):
    rng = np.random.default_rng(seed)
    vectors = [rng.standard_normal(width) for _ in range(n)]
    spec = AggregationSpec(("min", "max", "sum", "mean", "median", "stddev"))
    direct = aggregate_vectors([scale * v for v in vectors], spec)
    scaled = scale * aggregate_vectors(vectors, spec)
    assert np.allclose(direct, scaled, rtol=1e-9, atol=1e-9)


# --- file embedding ---------------------------------------------------------------


def _toy_model(sources, d_emb=4, seed=5):
    samples = []
    for i, source in enumerate(sources):
        unit = parse_file(source, f"seed{i}.java")
        samples.extend(extract_unit_samples(unit, ExtractionConfig(None, None, 200)))
    vocab = build_vocabulary(samples, min_count=1)
    config = ModelConfig(d_emb=d_emb, seed=seed)
    return TrainedModel(
        config=config,
        extraction=ExtractionConfig(None, None, 200),
        params=init_params(config, vocab),
        vocab=vocab,
    )


MODEL_SOURCES = [fx.FIG1_FACTORIAL, fx.FIG3_DONE, fx.FIG4_ORIGINAL, fx.FIXTURE_METHODS]


def test_embed_file_singleton_mean_equals_method_vector():
    model = _toy_model(MODEL_SOURCES)
    unit = parse_file(fx.FIG1_FACTORIAL, "f.java")
    emb = embed_file(unit, model, SelectionSpec("all"), AggregationSpec(("mean",)))
    sample = extract_unit_samples(unit, model.extraction)[0]
    assert np.array_equal(emb.values, model.embed_sample(sample))


def test_embed_file_deterministic():
    model = _toy_model(MODEL_SOURCES)
    unit_a = parse_file(fx.FIG4_ORIGINAL, "h.java")
    unit_b = parse_file(fx.FIG4_ORIGINAL, "h.java")
    spec = AggregationSpec(("min", "mean"))
    emb_a = embed_file(unit_a, model, SelectionSpec("all"), spec)
    emb_b = embed_file(unit_b, model, SelectionSpec("all"), spec)
    assert np.array_equal(emb_a.values, emb_b.values)


def test_embed_file_order_free_with_select_all():
    source_ab = "class A { int one(int x) { return x + 1; } int two(int y) { return y * 3; } }"
    source_ba = "class A { int two(int y) { return y * 3; } int one(int x) { return x + 1; } }"
    model = _toy_model(MODEL_SOURCES + [source_ab])
    spec = AggregationSpec(("min", "max", "sum", "mean", "median", "stddev"))
    emb_ab = embed_file(parse_file(source_ab, "ab.java"), model, SelectionSpec("all"), spec)
    emb_ba = embed_file(parse_file(source_ba, "ab.java"), model, SelectionSpec("all"), spec)
    assert np.allclose(emb_ab.values, emb_ba.values, atol=1e-12)


def test_embed_file_no_methods():
    model = _toy_model(MODEL_SOURCES)
    with pytest.raises(NoMethods):
        embed_file(parse_file("class A { }", "a.java"), model,
                   SelectionSpec("all"), AggregationSpec(("mean",)))


def test_pair_difference_identical_is_exact_zero():
    model = _toy_model(MODEL_SOURCES)
    unit_a = parse_file(fx.FIG4_ORIGINAL, "same.java")
    unit_b = parse_file(fx.FIG4_ORIGINAL, "same.java")
    diff = embed_pair_difference(
        unit_a, unit_b, model, SelectionSpec("all"), AggregationSpec(("mean",))
    )
    assert np.all(diff.values == 0.0)


def test_pair_difference_antisymmetric():
    model = _toy_model(MODEL_SOURCES)
    unit_a = parse_file(fx.FIG4_ORIGINAL, "a.java")
    unit_b = parse_file(fx.FIG1_FACTORIAL, "b.java")
    spec = AggregationSpec(("mean",))
    ab = embed_pair_difference(unit_a, unit_b, model, SelectionSpec("all"), spec)
    ba = embed_pair_difference(unit_b, unit_a, model, SelectionSpec("all"), spec)
    assert np.array_equal(ab.values, -ba.values)


def test_pair_difference_mean_shift_oracle():
    one = "class A { int one(int x) { return x + 1; } }"
    two = "class A { int one(int x) { return x + 1; } int extra(int y) { return y - 2; } }"
    model = _toy_model(MODEL_SOURCES + [two])
    spec = AggregationSpec(("mean",))
    unit_one = parse_file(one, "one.java")
    unit_two = parse_file(two, "two.java")
    diff = embed_pair_difference(unit_two, unit_one, model, SelectionSpec("all"), spec)
    vec_one = model.embed_sample(extract_unit_samples(unit_one, model.extraction)[0])
    samples_two = extract_unit_samples(unit_two, model.extraction)
    vecs_two = [model.embed_sample(s) for s in samples_two]
    expected = np.mean(vecs_two, axis=0) - vec_one
    assert np.allclose(diff.values, expected, atol=1e-12)


# --- dataset building ---------------------------------------------------------------


def _write_corpus(root, per_label=3):
    sources = {
        "alpha": fx.FIG1_FACTORIAL,
        "beta": fx.FIG4_ORIGINAL,
    }
    for label, source in sources.items():
        directory = root / label
        directory.mkdir(parents=True)
        for i in range(per_label):
            # vary a literal so files are distinct
            (directory / f"file{i}.java").write_text(
                source.replace("0", str(i)), encoding="utf-8"
            )
    return root


def test_build_dataset_shapes(tmp_path):
    corpus = _write_corpus(tmp_path / "corpus")
    model = _toy_model(MODEL_SOURCES)
    dataset, stats = build_dataset(
        corpus, model, SelectionSpec("all"), AggregationSpec(("mean",)),
        per_class_cap=2000, seed=1,
    )
    assert dataset.labels == ["alpha", "beta"]
    assert len(dataset.rows) == 6
    assert dataset.feature_width == model.config.d_code
    assert all(len(r.values) == dataset.feature_width for r in dataset.rows)
    assert stats.rows_per_label == {"alpha": 3, "beta": 3}


def test_build_dataset_cap(tmp_path):
    corpus = _write_corpus(tmp_path / "corpus", per_label=7)
    model = _toy_model(MODEL_SOURCES)
    dataset, stats = build_dataset(
        corpus, model, SelectionSpec("all"), AggregationSpec(("mean",)),
        per_class_cap=4, seed=1,
    )
    assert stats.rows_per_label == {"alpha": 4, "beta": 4}
    assert len(dataset.rows) == 8


def test_build_dataset_deterministic(tmp_path):
    corpus = _write_corpus(tmp_path / "corpus", per_label=6)
    model = _toy_model(MODEL_SOURCES)
    kwargs = dict(per_class_cap=3, seed=9)
    ds_a, _ = build_dataset(corpus, model, SelectionSpec("all"),
                            AggregationSpec(("mean",)), **kwargs)
    ds_b, _ = build_dataset(corpus, model, SelectionSpec("all"),
                            AggregationSpec(("mean",)), **kwargs)
    assert [r.source_path for r in ds_a.rows] == [r.source_path for r in ds_b.rows]
    assert np.array_equal(ds_a.feature_matrix(), ds_b.feature_matrix())


def test_build_dataset_jobs_match_serial(tmp_path):
    corpus = _write_corpus(tmp_path / "corpus", per_label=5)
    model = _toy_model(MODEL_SOURCES)
    serial, _ = build_dataset(corpus, model, SelectionSpec("all"),
                              AggregationSpec(("mean",)), seed=2)
    parallel, _ = build_dataset(corpus, model, SelectionSpec("all"),
                                AggregationSpec(("mean",)), seed=2, jobs=4)
    assert np.array_equal(serial.feature_matrix(), parallel.feature_matrix())
    assert [r.source_path for r in serial.rows] == [r.source_path for r in parallel.rows]


def test_build_dataset_skips_bad_files_and_rejects_empty_label(tmp_path):
    corpus = _write_corpus(tmp_path / "corpus")
    (corpus / "alpha" / "broken.java").write_text("class X {", encoding="utf-8")
    (corpus / "alpha" / "methodless.java").write_text("class Y { }", encoding="utf-8")
    model = _toy_model(MODEL_SOURCES)
    dataset, stats = build_dataset(
        corpus, model, SelectionSpec("all"), AggregationSpec(("mean",))
    )
    assert stats.skipped_parse == 1
    assert stats.skipped_empty == 1
    assert len(dataset.rows) == 6

    empty = tmp_path / "empty_corpus"
    (empty / "solo").mkdir(parents=True)
    (empty / "solo" / "nothing.java").write_text("class Z { }", encoding="utf-8")
    with pytest.raises(EmptyClass):
        build_dataset(empty, model, SelectionSpec("all"), AggregationSpec(("mean",)))


def test_pair_dataset_from_manifest(tmp_path):
    corpus = _write_corpus(tmp_path / "corpus")
    manifest = tmp_path / "pairs.tsv"
    manifest.write_text(
        "yes\talpha/file0.java\talpha/file0.java\n"
        "no\talpha/file0.java\tbeta/file1.java\n",
        encoding="utf-8",
    )
    model = _toy_model(MODEL_SOURCES)
    dataset, stats = build_pair_dataset(
        manifest, corpus, model, SelectionSpec("all"), AggregationSpec(("mean",))
    )
    assert dataset.labels == ["yes", "no"]
    assert len(dataset.rows) == 2
    identical = next(r for r in dataset.rows if r.label == "yes")
    assert np.all(identical.values == 0.0)


# --- CSV -----------------------------------------------------------------------------


def test_dataset_csv_round_trip(tmp_path):
    corpus = _write_corpus(tmp_path / "corpus")
    model = _toy_model(MODEL_SOURCES)
    dataset, _ = build_dataset(
        corpus, model, SelectionSpec("all"), AggregationSpec(("mean", "stddev"))
    )
    path = tmp_path / "data.csv"
    write_dataset_csv(dataset, path)
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("f0,") and header.endswith(",label")
    loaded = read_dataset_csv(path)
    assert loaded.labels == dataset.labels
    assert loaded.feature_width == dataset.feature_width
    assert np.allclose(loaded.feature_matrix(), dataset.feature_matrix(), atol=0)


def test_dataset_csv_quotes_labels_with_commas(tmp_path):
    from pathvec.aggregate import ClassEmbedding, LabeledDataset

    dataset = LabeledDataset(
        rows=[ClassEmbedding(np.array([1.0]), 'odd,"label"', "x")],
        feature_width=1,
        labels=['odd,"label"'],
    )
    path = tmp_path / "quoted.csv"
    write_dataset_csv(dataset, path)
    loaded = read_dataset_csv(path)
    assert loaded.rows[0].label == 'odd,"label"'
