#include <doctest.h>

#include <cmath>

#include "parsefuse/model.hpp"

using namespace parsefuse;

namespace {

DependencyTree tree_from_heads(const std::vector<int>& heads, const std::string& id) {
    DependencyTree t;
    t.parser_id = id;
    for (size_t i = 0; i < heads.size(); ++i)
        t.tokens.push_back({static_cast<int>(i) + 1, "w" + std::to_string(i + 1), heads[i],
                            heads[i] == 0 ? "root" : "dep"});
    validate_tree(t);
    return t;
}

LabeledInstance make_instance(const std::vector<std::vector<int>>& parser_heads,
                              const std::vector<std::string>& parser_ids, int d_in, Rng& rng) {
    const int n = static_cast<int>(parser_heads[0].size());
    LabeledInstance inst;
    inst.sentence_id = "t1";
    for (int i = 1; i <= n; ++i) inst.tokens.push_back("w" + std::to_string(i));
    inst.aspect = {1 + rng.uniform_int(n), 1};
    inst.label = Label::Positive;
    for (size_t m = 0; m < parser_heads.size(); ++m)
        inst.trees.push_back(tree_from_heads(parser_heads[m], parser_ids[m]));
    FeatureMatrix fm;
    fm.d_in = d_in;
    fm.rows.assign(n, std::vector<double>(d_in));
    for (auto& row : fm.rows)
        for (double& v : row) v = rng.uniform(-1, 1);
    inst.features = fm;
    return inst;
}

ModelConfig base_config(const std::vector<std::string>& parser_ids, int d_in) {
    ModelConfig cfg;
    cfg.parser_ids = parser_ids;
    cfg.rgat.num_layers = 1;
    cfg.rgat.num_heads = 2;
    cfg.rgat.per_head_dim = 3;
    cfg.rgat.hidden_dim = 6;
    cfg.rgat.input_dim = d_in;
    cfg.rgat.max_position = 16;
    cfg.rgat.attention_dropout = 0.0;
    cfg.rgat.hidden_dropout = 0.0;
    return cfg;
}

void copy_params(RGATParams& dst, RGATParams& src) {
    auto d = dst.all();
    auto s = src.all();
    REQUIRE(d.size() == s.size());
    for (size_t i = 0; i < d.size(); ++i) d[i]->tensor.data() = s[i]->tensor.data();
}

}  // namespace

TEST_CASE("label ensemble voting") {
    const std::array<double, 3> pos{0.6, 0.2, 0.2};
    const std::array<double, 3> neg{0.05, 0.05, 0.9};
    SUBCASE("simple majority") {
        CHECK(label_ensemble_vote({pos, pos, neg}) == static_cast<int>(Label::Positive));
    }
    SUBCASE("single member returns its argmax") {
        CHECK(label_ensemble_vote({neg}) == static_cast<int>(Label::Negative));
    }
    SUBCASE("vote tie falls to the higher summed probability") {
        CHECK(label_ensemble_vote({pos, neg}) == static_cast<int>(Label::Negative));
    }
    SUBCASE("full tie falls to class order") {
        const std::array<double, 3> neg_mirror{0.2, 0.2, 0.6};
        CHECK(label_ensemble_vote({pos, neg_mirror}) == static_cast<int>(Label::Positive));
    }
    SUBCASE("vote order does not matter") {
        CHECK(label_ensemble_vote({neg, pos, pos}) == label_ensemble_vote({pos, pos, neg}));
    }
    SUBCASE("identical inputs return their argmax") {
        CHECK(label_ensemble_vote({neg, neg, neg}) == static_cast<int>(Label::Negative));
    }
    SUBCASE("soft voting averages probabilities") {
        const std::array<double, 3> mild_pos{0.4, 0.35, 0.25};
        CHECK(label_ensemble_vote({mild_pos, mild_pos, neg}, true) ==
              static_cast<int>(Label::Negative));
    }
}

TEST_CASE("feature ensemble with tied blocks reproduces single-tree inference") {
    Rng rng(61);
    const int d_in = 4;
    LabeledInstance inst = make_instance({{2, 0, 2, 3}, {2, 0, 2, 3}}, {"a", "b"}, d_in, rng);

    ModelConfig single_cfg = base_config({"a"}, d_in);
    single_cfg.kind = ModelKind::RgatSingle;
    single_cfg.fusion = FusionMode::Single;
    single_cfg.single_parser = "a";
    SentimentModel single(single_cfg, 7);

    ModelConfig fe_cfg = base_config({"a", "b"}, d_in);
    fe_cfg.kind = ModelKind::FeatureEnsemble;
    SentimentModel fe(fe_cfg, 8);
    REQUIRE(fe.encoder_count() == 2);

    copy_params(fe.encoder(0), single.encoder(0));
    copy_params(fe.encoder(1), single.encoder(0));
    // W1 blocks tied to half the single weights so [B|B]·[h;h] = W1_single·h
    const int d_out = single_cfg.resolved_classifier_dim();
    const int d_h = single_cfg.rgat.hidden_dim;
    auto& fe_w1 = fe.classifier().w1.tensor;
    const auto& s_w1 = single.classifier().w1.tensor;
    for (int r = 0; r < d_out; ++r)
        for (int c = 0; c < d_h; ++c) {
            fe_w1.data()[static_cast<size_t>(r) * 2 * d_h + c] = s_w1.at(r, c) / 2.0;
            fe_w1.data()[static_cast<size_t>(r) * 2 * d_h + d_h + c] = s_w1.at(r, c) / 2.0;
        }
    fe.classifier().b1.tensor.data() = single.classifier().b1.tensor.data();
    fe.classifier().w2.tensor.data() = single.classifier().w2.tensor.data();
    fe.classifier().b2.tensor.data() = single.classifier().b2.tensor.data();

    auto single_prepared = prepare_instances({inst}, single_cfg);
    auto fe_prepared = prepare_instances({inst}, fe_cfg);
    auto p_single = single.predict_probs(single_prepared[0]);
    auto p_fe = fe.predict_probs(fe_prepared[0]);
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(p_single[c] - p_fe[c]) <= 1e-12);
}

TEST_CASE("feature ensemble classifier width grows linearly in M") {
    const int d_in = 4;
    auto count_w1 = [&](int m) {
        std::vector<std::string> ids;
        for (int i = 0; i < m; ++i) ids.push_back("p" + std::to_string(i));
        ModelConfig cfg = base_config(ids, d_in);
        cfg.kind = ModelKind::FeatureEnsemble;
        SentimentModel model(cfg, 1);
        return model.classifier().w1.tensor.size();
    };
    const int64_t base = count_w1(1);
    CHECK(count_w1(2) == 2 * base);
    CHECK(count_w1(3) == 3 * base);
}

TEST_CASE("feature ensemble concatenates pooled blocks in configured parser order") {
    Rng rng(67);
    const int d_in = 4;
    LabeledInstance inst = make_instance({{2, 0, 2, 3}, {4, 4, 0, 3}}, {"a", "b"}, d_in, rng);

    ModelConfig fe_cfg = base_config({"a", "b"}, d_in);
    fe_cfg.kind = ModelKind::FeatureEnsemble;
    SentimentModel fe(fe_cfg, 9);
    auto prepared = prepare_instances({inst}, fe_cfg);

    // reproduce the concatenation by hand
    Tensor h0 = encode(prepared[0].features, prepared[0].graphs[0], fe_cfg.rgat, fe.encoder(0),
                       false, nullptr);
    Tensor h1 = encode(prepared[0].features, prepared[0].graphs[1], fe_cfg.rgat, fe.encoder(1),
                       false, nullptr);
    Tensor pooled = concat(1, {pool_aspect(h0, inst.aspect), pool_aspect(h1, inst.aspect)});
    Tensor expected = classifier_logits(pooled, fe.classifier());
    Tensor got = fe.logits(prepared[0], false, nullptr);
    for (int c = 0; c < 3; ++c) CHECK(got.at(0, c) == expected.at(0, c));

    SUBCASE("permuting the parser order permutes the graphs fed to each slot") {
        ModelConfig swapped = fe_cfg;
        swapped.parser_ids = {"b", "a"};
        auto prepared_swapped = prepare_instances({inst}, swapped);
        CHECK(prepared_swapped[0].graphs[0].src == prepared[0].graphs[1].src);
        CHECK(prepared_swapped[0].graphs[1].src == prepared[0].graphs[0].src);
    }
}

TEST_CASE("model config round-trips through its canonical string") {
    ModelConfig cfg = base_config({"x", "y", "z"}, 5);
    cfg.kind = ModelKind::RgatSingle;
    cfg.fusion = FusionMode::Single;
    cfg.single_parser = "y";
    cfg.rgat.use_edge_types = false;
    cfg.classifier_dim = 11;
    ModelConfig back = ModelConfig::from_canonical_string(cfg.canonical_string());
    CHECK(back.canonical_string() == cfg.canonical_string());
    CHECK(back.single_parser == "y");
    CHECK(back.parser_ids == cfg.parser_ids);
    CHECK(back.rgat.use_edge_types == false);
}

TEST_CASE("model config validation catches bad combinations") {
    ModelConfig cfg = base_config({"a"}, 4);
    SUBCASE("fused with single fusion") {
        cfg.fusion = FusionMode::Single;
        cfg.single_parser = "a";
        CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    }
    SUBCASE("single without parser") {
        cfg.kind = ModelKind::RgatSingle;
        cfg.fusion = FusionMode::Single;
        CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    }
    SUBCASE("unknown single parser") {
        cfg.kind = ModelKind::RgatSingle;
        cfg.fusion = FusionMode::Single;
        cfg.single_parser = "nope";
        CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    }
    SUBCASE("gat baseline with edge types on") {
        cfg.kind = ModelKind::GatBaseline;
        cfg.fusion = FusionMode::Single;
        cfg.single_parser = "a";
        cfg.rgat.use_edge_types = true;
        CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    }
}

TEST_CASE("prepared fused instances honor the fusion mode") {
    Rng rng(71);
    const int d_in = 3;
    LabeledInstance inst = make_instance({{2, 0, 2}, {2, 0, 1}}, {"a", "b"}, d_in, rng);
    ModelConfig cfg = base_config({"a", "b"}, d_in);

    auto union_prepared = prepare_instances({inst}, cfg);
    CHECK(union_prepared[0].graphs[0].src.size() == 9);

    cfg.fusion = FusionMode::Intersection;
    auto inter_prepared = prepare_instances({inst}, cfg);
    CHECK(inter_prepared[0].graphs[0].src.size() == 5);
}
