"""Unit tests for the three matching models and the registry."""

import math

import numpy as np
import pytest

from textmatch import autodiff as ad
from textmatch.models import (
    ConfigError,
    MODEL_IDS,
    ModelContext,
    PersistError,
    build_model,
    default_kernel_bank,
    get_spec,
    list_model_specs,
    load_model,
    save_model,
)


def tiny_embeddings(vocab_size=8, dim=4, seed=3):
    gen = np.random.default_rng(seed)
    emb = gen.uniform(-0.5, 0.5, size=(vocab_size, dim))
    emb[0] = 0.0
    return emb


def dssm_tiny(seed=0):
    return build_model(
        "dssm",
        {"hidden1": 7, "hidden2": 5, "repr_dim": 4},
        ModelContext(input_dim=12),
        seed=seed,
    )


def drmm_tiny(seed=0):
    emb = tiny_embeddings()
    idf = np.linspace(0.5, 2.0, emb.shape[0])
    return build_model(
        "drmm",
        {"bins": 6, "ffn_hidden": 3, "embed_dim": 4},
        ModelContext(embeddings=emb, idf=idf),
        seed=seed,
    )


def knrm_tiny(seed=0):
    return build_model(
        "knrm", {"embed_dim": 4}, ModelContext(embeddings=tiny_embeddings()), seed=seed
    )


def swap_params_graph(model, features):
    """Adapter: expose a model's batch score as a function of parameter nodes."""

    def graph(nodes):
        original = dict(model.params)
        model.params = {**original, **nodes}
        try:
            return model.batch_score_node(features)
        finally:
            model.params = original

    return graph


class TestRegistry:
    def test_exactly_three_models_in_order(self):
        assert MODEL_IDS == ("drmm", "dssm", "knrm")
        assert [s.id for s in list_model_specs()] == ["drmm", "dssm", "knrm"]

    def test_family_tags(self):
        assert get_spec("dssm").family == "representation"
        assert get_spec("drmm").family == "interaction"
        assert get_spec("knrm").family == "interaction"

    def test_unknown_model(self):
        with pytest.raises(ConfigError, match="nosuch"):
            get_spec("nosuch")

    def test_defaults_lie_inside_domains(self):
        for spec in list_model_specs():
            resolved = spec.resolve({})
            for hp in spec.schema:
                hp.check(resolved[hp.name])

    def test_unknown_hyper_parameter_listed(self):
        with pytest.raises(ConfigError, match="bogus_knob"):
            get_spec("knrm").resolve({"bogus_knob": 1})

    def test_out_of_domain_value(self):
        with pytest.raises(ConfigError, match="kernels"):
            get_spec("knrm").resolve({"kernels": 1})

    def test_descriptions_present(self):
        for spec in list_model_specs():
            assert spec.description
            assert spec.summary()["family"] in ("representation", "interaction")


class TestDssm:
    def test_identical_texts_score_one(self):
        model = dssm_tiny()
        counts = np.arange(12, dtype=float)
        assert model.score(counts, counts) == pytest.approx(1.0, abs=1e-9)

    def test_score_within_cosine_range(self, rng):
        model = dssm_tiny()
        for _ in range(20):
            a = rng.uniform(0, 3, size=12)
            b = rng.uniform(0, 3, size=12)
            assert -1.0 - 1e-12 <= model.score(a, b) <= 1.0 + 1e-12

    def test_parameter_count_formula(self):
        v, h1, h2, r = 12, 7, 5, 4
        model = dssm_tiny()
        total = sum(p.value.size for p in model.trainable_params.values())
        assert total == (v * h1 + h1) + (h1 * h2 + h2) + (h2 * r + r)

    def test_towers_share_parameters(self, rng):
        model = dssm_tiny()
        counts = rng.uniform(0, 2, size=12)
        left1, right1 = model.representations(counts, counts)
        np.testing.assert_array_equal(left1, right1)
        model.params["tower_w1"].assign(model.params["tower_w1"].value + 0.05)
        left2, right2 = model.representations(counts, counts)
        np.testing.assert_array_equal(left2, right2)
        assert not np.array_equal(left1, left2)

    def test_batched_shape(self, rng):
        model = dssm_tiny()
        pairs = [(rng.uniform(0, 2, size=12), rng.uniform(0, 2, size=12)) for _ in range(5)]
        assert model.score_batch(pairs).shape == (5, 1)

    def test_wrong_width_rejected(self):
        model = dssm_tiny()
        with pytest.raises(ConfigError, match="width"):
            model.score(np.zeros(5), np.zeros(12))

    def test_explanation_vectors(self):
        model = dssm_tiny()
        exp = model.explain(np.ones(12), np.ones(12))
        assert exp.family == "representation"
        assert len(exp.left_vector) == 4
        assert exp.left_vector == exp.right_vector
        assert exp.score == pytest.approx(1.0, abs=1e-9)

    def test_gradients_match_finite_differences(self, rng):
        model = dssm_tiny(seed=4)
        feats = [model.pair_features(rng.uniform(0, 2, size=12), rng.uniform(0, 2, size=12))]
        point = {name: p.value for name, p in model.trainable_params.items()}
        result = ad.grad_check(
            swap_params_graph(model, feats), point,
            coordinate_limit=6, rng=np.random.default_rng(0),
        )
        assert result.max_rel_error < 1e-4


class TestDrmm:
    def test_single_query_term_gate_is_one(self):
        model = drmm_tiny()
        exp = model.explain([2], [3, 4, 5])
        assert exp.weights == pytest.approx([1.0])

    def test_gates_sum_to_one(self, rng):
        model = drmm_tiny()
        for _ in range(10):
            q = list(rng.integers(1, 8, size=int(rng.integers(1, 6))))
            d = list(rng.integers(1, 8, size=5))
            exp = model.explain(q, d)
            assert sum(exp.weights) == pytest.approx(1.0)

    def test_zero_embeddings_make_score_document_independent(self):
        emb = np.zeros((8, 4))
        model = build_model(
            "drmm",
            {"bins": 6, "ffn_hidden": 3, "embed_dim": 4},
            ModelContext(embeddings=emb, idf=np.ones(8)),
            seed=0,
        )
        # same length, different terms: counting sees only the zero cosines
        score_a = model.score([2, 3], [4, 5, 6])
        score_b = model.score([2, 3], [7, 7, 7])
        assert score_a == pytest.approx(score_b)

    def test_exact_match_lands_in_exact_bin(self):
        model = drmm_tiny()
        hist, _ = model.pair_features([2], [2])
        # cosine of a row with itself snaps to 1 -> last histogram bin
        assert hist[0, -1] == pytest.approx(math.log(2.0))  # lch of count 1

    def test_padding_masked_out(self):
        model = drmm_tiny()
        with_pad = model.score([2, 3, 0, 0], [4, 5, 0])
        without = model.score([2, 3], [4, 5])
        assert with_pad == pytest.approx(without)

    def test_empty_query_scores_zero(self):
        model = drmm_tiny()
        assert model.score([0, 0], [2, 3]) == 0.0

    def test_interaction_matrix_unpadded_extents(self):
        model = drmm_tiny()
        exp = model.explain([2, 3, 4, 0], [5, 6, 0, 0, 0])
        assert np.asarray(exp.matrix).shape == (3, 2)

    def test_missing_context_rejected(self):
        with pytest.raises(ConfigError, match="embeddings"):
            build_model("drmm", {}, ModelContext(), seed=0)

    def test_gradients_match_finite_differences(self, rng):
        model = drmm_tiny(seed=4)
        feats = [model.pair_features([2, 5, 3], [4, 6, 7, 2])]
        point = {name: p.value for name, p in model.trainable_params.items()}
        result = ad.grad_check(
            swap_params_graph(model, feats), point,
            coordinate_limit=6, rng=np.random.default_rng(0),
        )
        assert result.max_rel_error < 1e-4


class TestKnrm:
    def test_default_bank_has_eleven_features(self):
        model = knrm_tiny()
        assert len(model.bank) == 11
        assert model.params["combine_w"].value.shape == (11, 1)

    def test_zero_head_scores_zero(self):
        model = knrm_tiny()  # head starts at zero by construction
        assert model.score([2, 3], [4, 5]) == 0.0

    def test_score_inside_tanh_range(self, rng):
        model = knrm_tiny()
        # small weights keep tanh out of float64 saturation
        model.params["combine_w"].assign(rng.normal(scale=0.01, size=(11, 1)))
        model.params["combine_b"].assign(rng.normal(scale=0.01, size=(1, 1)))
        for _ in range(10):
            q = list(rng.integers(1, 8, size=3))
            d = list(rng.integers(1, 8, size=6))
            assert -1.0 < model.score(q, d) < 1.0

    def test_hand_computed_forward_pass(self):
        # 2x2 toy vocabulary: indices 2 and 3 with fixed embeddings
        emb = np.zeros((4, 2))
        emb[2] = [1.0, 0.0]
        emb[3] = [0.6, 0.8]
        model = build_model("knrm", {"embed_dim": 4}, ModelContext(embeddings=emb), seed=0)
        w = np.linspace(-0.1, 0.1, 11).reshape(11, 1)
        model.params["combine_w"].assign(w)
        model.params["combine_b"].assign([[0.05]])
        query, doc = [2, 3], [3, 2]
        # independent recomputation of the kernel features
        m = np.array(
            [
                [emb[q] @ emb[d] / (np.linalg.norm(emb[q]) * np.linalg.norm(emb[d]))
                 for d in doc]
                for q in query
            ]
        )
        bank = default_kernel_bank(11, 0.1, 0.001)
        phi = []
        for mu, sigma in bank.kernels:
            per_row = np.exp(-((m - mu) ** 2) / (2 * sigma * sigma)).sum(axis=1)
            phi.append(np.log(np.maximum(per_row, 1e-10)).sum())
        expected = math.tanh(float(np.array(phi) @ w[:, 0]) + 0.05)
        assert model.score(query, doc) == pytest.approx(expected, abs=1e-12)

    def test_empty_side_gives_bias_score(self):
        model = knrm_tiny()
        model.params["combine_b"].assign([[0.3]])
        assert model.score([0], [2, 3]) == pytest.approx(math.tanh(0.3))

    def test_explanation_matrix_shape(self):
        model = knrm_tiny()
        exp = model.explain([2, 3, 4], [5, 6, 7, 2, 3])
        assert exp.family == "interaction"
        assert np.asarray(exp.matrix).shape == (3, 5)
        assert len(exp.weights) == 11

    def test_gradients_match_finite_differences(self, rng):
        model = knrm_tiny(seed=4)
        model.params["combine_w"].assign(rng.normal(scale=0.01, size=(11, 1)))
        feats = [model.pair_features([2, 5, 3], [4, 6, 7, 2])]
        point = {name: p.value for name, p in model.trainable_params.items()}
        result = ad.grad_check(swap_params_graph(model, feats), point)
        assert result.max_rel_error < 1e-4


class TestDeterminism:
    @pytest.mark.parametrize("factory", [dssm_tiny, drmm_tiny, knrm_tiny])
    def test_same_seed_same_parameters(self, factory):
        a, b = factory(seed=9), factory(seed=9)
        for name in a.params:
            np.testing.assert_array_equal(a.params[name].value, b.params[name].value)

    def test_same_input_same_score(self, rng):
        model = drmm_tiny()
        q = [2, 4, 6]
        d = [3, 5, 7]
        assert model.score(q, d) == model.score(q, d)


class TestPersistence:
    @pytest.mark.parametrize("factory", [dssm_tiny, drmm_tiny, knrm_tiny])
    def test_round_trip_scores_bit_identical(self, factory, rng):
        model = factory(seed=2)
        manifest, blob = save_model(model)
        clone = load_model(manifest, blob)
        for _ in range(100):
            if factory is dssm_tiny:
                pair = (rng.uniform(0, 2, size=12), rng.uniform(0, 2, size=12))
            else:
                pair = (
                    list(rng.integers(1, 8, size=3)),
                    list(rng.integers(1, 8, size=5)),
                )
            assert model.score(*pair) == clone.score(*pair)

    def test_truncated_blob_rejected(self):
        manifest, blob = save_model(knrm_tiny())
        with pytest.raises(PersistError, match="bytes"):
            load_model(manifest, blob[:-8])

    def test_manifest_blob_mismatch_rejected(self):
        manifest, blob = save_model(knrm_tiny())
        manifest["parameters"][0]["shape"] = [99, 1]
        with pytest.raises(PersistError):
            load_model(manifest, blob)

    def test_manifest_records_trainability(self):
        manifest, _ = save_model(drmm_tiny())
        by_name = {e["name"]: e for e in manifest["parameters"]}
        assert by_name["embeddings"]["trainable"] is False
        assert by_name["ffn_w1"]["trainable"] is True
