#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "wavpool/errors.hpp"
#include "wavpool/hpo.hpp"

using namespace wavpool;

namespace {

const Dimension* find_dim(const SearchSpace& s, const std::string& name) {
    for (const Dimension& d : s.dims)
        if (d.name == name) return &d;
    return nullptr;
}

// 2-dim synthetic objective with a known optimum; values stay inside [0,1]
// like a real F1 score.
SearchSpace unit_square() {
    SearchSpace s;
    Dimension x;
    x.name = "x";
    x.lo = 0;
    x.hi = 1;
    Dimension y = x;
    y.name = "y";
    s.dims = {x, y};
    return s;
}

Objective distance_objective(double ox, double oy) {
    return [ox, oy](const nlohmann::json& cfg) {
        const double dx = cfg.at("x").get<double>() - ox;
        const double dy = cfg.at("y").get<double>() - oy;
        TrialRecord r;
        r.f1 = 1.0 - std::sqrt(dx * dx + dy * dy) / std::sqrt(2.0);
        return r;
    };
}

LabeledDataset make_toy(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed,
                        double scale = 1.0) {
    SeededRng rng(seed);
    LabeledDataset ds;
    ds.images = Tensor({n, h, w});
    ds.labels.resize(n);
    ds.name = "toy";
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        ds.labels[i] = label;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                const bool left = c < w / 2;
                const double sign = (left == (label == 0)) ? 1.0 : -1.0;
                ds.images.at(i, r, c) = scale * (sign + rng.uniform(-0.2, 0.2));
            }
    }
    return ds;
}

}  // namespace

TEST_CASE("default spaces: dimension names and bounds") {
    SearchSpace wp = default_space("wavpool");
    CHECK(wp.dims.size() == 5);
    const Dimension* lr = find_dim(wp, "lr");
    REQUIRE(lr != nullptr);
    CHECK(lr->lo == 1e-6);
    CHECK(lr->hi == 0.8);
    CHECK(lr->log_scale);
    CHECK(find_dim(wp, "hidden")->lo == 200);
    CHECK(find_dim(wp, "hidden")->hi == 300);
    CHECK(find_dim(wp, "pool")->lo == 2);
    CHECK(find_dim(wp, "pool")->hi == 4);
    CHECK(find_dim(wp, "scaling")->choices == std::vector<std::string>{"true", "false"});
    CHECK(find_dim(wp, "optimizer")->choices == std::vector<std::string>{"sgd", "adam"});

    SearchSpace mlp = default_space("mlp");
    CHECK(mlp.dims.size() == 3);
    CHECK(find_dim(mlp, "lr")->lo == 1e-6);
    CHECK(find_dim(mlp, "lr")->hi == 0.8);
    CHECK(find_dim(mlp, "hidden")->lo == 200);
    CHECK(find_dim(mlp, "hidden")->hi == 300);

    SearchSpace cnn = default_space("cnn");
    CHECK(cnn.dims.size() == 5);
    CHECK(find_dim(cnn, "kernel")->lo == 2);
    CHECK(find_dim(cnn, "kernel")->hi == 4);
    CHECK(find_dim(cnn, "channels1")->lo == 1);
    CHECK(find_dim(cnn, "channels1")->hi == 20);
    CHECK(find_dim(cnn, "channels2")->hi == 20);

    CHECK_THROWS_AS(default_space("resnet"), ConfigError);
}

TEST_CASE("sampling respects bounds across 10^4 draws per space") {
    for (const std::string arch : {"wavpool", "mlp", "cnn"}) {
        SearchSpace space = default_space(arch);
        SeededRng rng(42);
        for (int i = 0; i < 10000; ++i) {
            nlohmann::json cfg = sample_config(space, rng);
            CHECK(cfg.size() == space.dims.size());
            for (const Dimension& d : space.dims) {
                REQUIRE(cfg.contains(d.name));
                if (d.type == Dimension::Type::categorical) {
                    const std::string v = cfg[d.name].get<std::string>();
                    bool ok = false;
                    for (const std::string& c : d.choices) ok |= (c == v);
                    if (!ok) FAIL("categorical value out of set: ", v);
                } else if (d.type == Dimension::Type::integer) {
                    const double v = cfg[d.name].get<double>();
                    if (v != std::floor(v)) FAIL("integer dim not integral");
                    if (v < d.lo || v > d.hi) FAIL(d.name, " out of range: ", v);
                } else {
                    const double v = cfg[d.name].get<double>();
                    if (v < d.lo || v > d.hi) FAIL(d.name, " out of range: ", v);
                }
            }
        }
    }
}

TEST_CASE("learning rate is sampled log-uniform, not linearly") {
    SearchSpace space = default_space("mlp");
    SeededRng rng(7);
    int below_1e3 = 0;
    for (int i = 0; i < 10000; ++i) {
        nlohmann::json cfg = sample_config(space, rng);
        if (cfg["lr"].get<double>() < 1e-3) ++below_1e3;
    }
    // log-uniform puts ~half the mass below the geometric midpoint ~9e-4;
    // linear-uniform would put ~0.1% there.
    CHECK(below_1e3 > 3500);
    CHECK(below_1e3 < 6500);
}

TEST_CASE("budget 1 returns the single sampled config") {
    SearchResult r = search(unit_square(), distance_objective(0.5, 0.5), 1, Strategy::random, 3);
    CHECK(r.records.size() == 1);
    CHECK(r.best_config == r.records[0].config);
    CHECK(r.best_f1 == r.records[0].f1);
}

TEST_CASE("same seed and strategy produce the identical trial sequence") {
    for (Strategy st : {Strategy::random, Strategy::gp_ei}) {
        SearchResult a = search(unit_square(), distance_objective(0.2, 0.8), 12, st, 9);
        SearchResult b = search(unit_square(), distance_objective(0.2, 0.8), 12, st, 9);
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            CHECK(a.records[i].config == b.records[i].config);
            CHECK(a.records[i].f1 == b.records[i].f1);
        }
        CHECK(a.best_config == b.best_config);
    }
}

TEST_CASE("gp warm-up replays the random strategy's first ceil(budget/4) draws") {
    SearchResult rnd = search(unit_square(), distance_objective(0.4, 0.4), 8, Strategy::random, 5);
    SearchResult gp = search(unit_square(), distance_objective(0.4, 0.4), 8, Strategy::gp_ei, 5);
    for (std::size_t i = 0; i < 2; ++i)  // ceil(8/4) = 2
        CHECK(rnd.records[i].config == gp.records[i].config);
}

TEST_CASE("best recorded f1 equals the max over all records") {
    for (Strategy st : {Strategy::random, Strategy::gp_ei}) {
        SearchResult r = search(unit_square(), distance_objective(0.7, 0.3), 15, st, 21);
        double best = -1;
        for (const TrialRecord& t : r.records) best = std::max(best, t.f1);
        CHECK(r.best_f1 == best);
        CHECK(r.records.size() == 15);
    }
}

TEST_CASE("a throwing objective is recorded as f1 0 with the divergence flag") {
    Objective flaky = [](const nlohmann::json& cfg) -> TrialRecord {
        if (cfg.at("x").get<double>() > 0.5)
            throw DivergenceError("synthetic blow-up", 1, cfg.at("x").get<double>());
        TrialRecord r;
        r.f1 = cfg.at("x").get<double>();
        return r;
    };
    SearchResult r = search(unit_square(), flaky, 20, Strategy::random, 17);
    CHECK(r.records.size() == 20);
    std::size_t diverged = 0;
    for (const TrialRecord& t : r.records) {
        if (t.diverged) {
            ++diverged;
            CHECK(t.f1 == 0.0);
            CHECK(t.config.at("x").get<double>() > 0.5);
        }
    }
    CHECK(diverged > 0);
    CHECK(r.best_f1 <= 0.5);
}

TEST_CASE("gp_ei never repeats an evaluated config on a small discrete space") {
    SearchSpace tiny;
    Dimension a;
    a.name = "a";
    a.type = Dimension::Type::integer;
    a.lo = 1;
    a.hi = 3;
    Dimension b;
    b.name = "b";
    b.type = Dimension::Type::categorical;
    b.choices = {"p", "q", "r"};
    tiny.dims = {a, b};

    Objective score = [](const nlohmann::json& cfg) {
        TrialRecord r;
        r.f1 = cfg.at("a").get<double>() / 10.0 + (cfg.at("b") == "q" ? 0.05 : 0.0);
        return r;
    };
    SearchResult r = search(tiny, score, 9, Strategy::gp_ei, 2);
    for (std::size_t i = 0; i < r.records.size(); ++i)
        for (std::size_t j = i + 1; j < r.records.size(); ++j)
            CHECK(r.records[i].config != r.records[j].config);
}

TEST_CASE("gp_ei homes in on a known 2-dim optimum") {
    for (int seed : {1, 2, 3}) {
        SearchResult r =
            search(unit_square(), distance_objective(0.3, 0.7), 40, Strategy::gp_ei, seed);
        const double dx = r.best_config.at("x").get<double>() - 0.3;
        const double dy = r.best_config.at("y").get<double>() - 0.7;
        CHECK(std::sqrt(dx * dx + dy * dy) < 0.15);
    }
}

TEST_CASE("resume replays logged trials without re-evaluating them") {
    int calls = 0;
    Objective counting = [&calls](const nlohmann::json& cfg) {
        ++calls;
        TrialRecord r;
        r.f1 = cfg.at("x").get<double>();
        return r;
    };
    SearchResult full = search(unit_square(), counting, 6, Strategy::random, 8);
    CHECK(calls == 6);

    std::vector<TrialRecord> prior(full.records.begin(), full.records.begin() + 4);
    calls = 0;
    SearchResult resumed = search(unit_square(), counting, 6, Strategy::random, 8, prior);
    CHECK(calls == 2);
    REQUIRE(resumed.records.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(resumed.records[i].config == full.records[i].config);

    // a log produced under a different seed is rejected
    CHECK_THROWS_AS(search(unit_square(), counting, 6, Strategy::random, 99, prior), ConfigError);
}

TEST_CASE("trial log round-trips through jsonl") {
    TrialRecord r;
    r.config = {{"lr", 0.0123}, {"hidden", 250}, {"optimizer", "adam"}};
    r.f1 = 0.87;
    r.wall_seconds = 1.5;
    r.diverged = false;
    const std::string path = "/tmp/wavpool_test_trials.jsonl";
    {
        FILE* f = fopen(path.c_str(), "w");
        REQUIRE(f != nullptr);
        fputs((record_jsonl(r) + "\n").c_str(), f);
        TrialRecord d = r;
        d.f1 = 0;
        d.diverged = true;
        fputs((record_jsonl(d) + "\n").c_str(), f);
        fclose(f);
    }
    std::vector<TrialRecord> back = read_trial_log(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].config == r.config);
    CHECK(back[0].f1 == 0.87);
    CHECK(back[1].diverged);
    CHECK(read_trial_log("/tmp/does_not_exist_wavpool.jsonl").empty());
    std::remove(path.c_str());
}

TEST_CASE("strategy parsing") {
    CHECK(parse_strategy("random") == Strategy::random);
    CHECK(parse_strategy("gp") == Strategy::gp_ei);
    CHECK(parse_strategy("gp_ei") == Strategy::gp_ei);
    CHECK_THROWS_AS(parse_strategy("tpe"), ConfigError);
}

TEST_CASE("model_from_config maps search keys onto architecture configs") {
    SeededRng rng(1);
    nlohmann::json wp = {
        {"lr", 0.01}, {"hidden", 256}, {"pool", 4}, {"scaling", "true"}, {"optimizer", "adam"}};
    auto model = model_from_config("wavpool", wp, 28, 28, 10, rng);
    auto kv = model->config_kv();
    auto get = [&kv](const std::string& key) {
        for (auto& [k, v] : kv)
            if (k == key) return v;
        return std::string("<missing>");
    };
    CHECK(get("base_hidden") == "256");
    CHECK(get("pool_k1") == "3");  // capped so the orientation axis survives
    CHECK(get("pool_k2") == "4");
    CHECK(get("scaling") == "true");

    nlohmann::json mlp = {{"lr", 0.05}, {"hidden", 210}, {"optimizer", "sgd"}};
    auto m2 = model_from_config("mlp", mlp, 28, 28, 10, rng);
    kv = m2->config_kv();
    CHECK(get("hidden1") == "210");
    CHECK(get("hidden2") == "210");

    nlohmann::json cnn = {
        {"lr", 0.01}, {"kernel", 4}, {"channels1", 7}, {"channels2", 9}, {"optimizer", "adam"}};
    auto m3 = model_from_config("cnn", cnn, 28, 28, 10, rng);
    kv = m3->config_kv();
    CHECK(get("kernel_size") == "4");
    CHECK(get("hidden_channels_1") == "7");
    CHECK(get("hidden_channels_2") == "9");

    OptimizerConfig opt = optimizer_from_config(cnn);
    CHECK(opt.kind == OptimizerConfig::Kind::adam);
    CHECK(opt.learning_rate == 0.01);

    CHECK_THROWS_AS(model_from_config("vit", cnn, 28, 28, 10, rng), ConfigError);
}

TEST_CASE("evaluate_config: deterministic 20-epoch f1, divergence flagged") {
    LabeledDataset full = make_toy(60, 6, 6, 30);
    nlohmann::json good = {{"lr", 0.2}, {"hidden", 8}, {"optimizer", "sgd"}};
    TrialRecord a = evaluate_config(good, "mlp", full, 4, 40, 20, 8, 2);
    TrialRecord b = evaluate_config(good, "mlp", full, 4, 40, 20, 8, 2);
    CHECK(a.f1 == b.f1);
    CHECK(a.f1 > 0.9);  // separable toy: near-perfect macro F1 over 2 classes
    CHECK_FALSE(a.diverged);
    CHECK(a.wall_seconds > 0);

    LabeledDataset wild = make_toy(60, 6, 6, 31, 1e150);
    SeededRng label_rng(77);
    for (auto& y : wild.labels) y = static_cast<int>(label_rng.below(2));
    nlohmann::json hot = {{"lr", 0.8}, {"hidden", 8}, {"optimizer", "sgd"}};
    TrialRecord d = evaluate_config(hot, "mlp", wild, 4, 40, 20, 8, 2);
    CHECK(d.diverged);
    CHECK(d.f1 == 0.0);
}
