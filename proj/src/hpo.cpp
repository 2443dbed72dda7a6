#include "wavpool/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "wavpool/errors.hpp"

namespace wavpool {

void SearchSpace::validate() const {
    if (dims.empty()) throw ConfigError("search space has no dimensions");
    for (const Dimension& d : dims) {
        if (d.type == Dimension::Type::categorical) {
            if (d.choices.empty())
                throw ConfigError("categorical dimension '" + d.name + "' has no choices");
        } else {
            if (!(d.lo < d.hi))
                throw ConfigError("dimension '" + d.name + "' needs lo < hi");
            if (d.log_scale && d.lo <= 0)
                throw ConfigError("log-scale dimension '" + d.name + "' needs lo > 0");
        }
    }
}

nlohmann::json sample_config(const SearchSpace& space, SeededRng& rng) {
    nlohmann::json cfg;
    for (const Dimension& d : space.dims) {
        switch (d.type) {
            case Dimension::Type::continuous:
                if (d.log_scale)
                    cfg[d.name] = std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
                else
                    cfg[d.name] = rng.uniform(d.lo, d.hi);
                break;
            case Dimension::Type::integer: {
                const auto span = static_cast<std::uint64_t>(d.hi - d.lo) + 1;
                cfg[d.name] = static_cast<long>(d.lo) + static_cast<long>(rng.below(span));
                break;
            }
            case Dimension::Type::categorical:
                cfg[d.name] = d.choices[rng.below(d.choices.size())];
                break;
        }
    }
    return cfg;
}

SearchSpace default_space(const std::string& arch) {
    SearchSpace s;
    Dimension lr;
    lr.name = "lr";
    lr.type = Dimension::Type::continuous;
    lr.lo = 1e-6;
    lr.hi = 0.8;
    lr.log_scale = true;
    s.dims.push_back(lr);

    auto integer = [](const std::string& name, double lo, double hi) {
        Dimension d;
        d.name = name;
        d.type = Dimension::Type::integer;
        d.lo = lo;
        d.hi = hi;
        return d;
    };
    auto categorical = [](const std::string& name, std::vector<std::string> choices) {
        Dimension d;
        d.name = name;
        d.type = Dimension::Type::categorical;
        d.choices = std::move(choices);
        return d;
    };

    if (arch == "wavpool") {
        s.dims.push_back(integer("hidden", 200, 300));
        s.dims.push_back(integer("pool", 2, 4));
        s.dims.push_back(categorical("scaling", {"true", "false"}));
    } else if (arch == "mlp") {
        s.dims.push_back(integer("hidden", 200, 300));
    } else if (arch == "cnn") {
        s.dims.push_back(integer("kernel", 2, 4));
        s.dims.push_back(integer("channels1", 1, 20));
        s.dims.push_back(integer("channels2", 1, 20));
    } else {
        throw ConfigError("unknown architecture '" + arch + "' (wavpool, mlp, cnn)");
    }
    s.dims.push_back(categorical("optimizer", {"sgd", "adam"}));
    return s;
}

Strategy parse_strategy(const std::string& s) {
    if (s == "random") return Strategy::random;
    if (s == "gp" || s == "gp_ei") return Strategy::gp_ei;
    throw ConfigError("unknown search strategy '" + s + "' (random, gp)");
}

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Unit-normalized embedding of a config: continuous dims scaled to [0,1]
// (through log space when flagged), integers likewise, categoricals one-hot.
std::vector<double> normalize_config(const SearchSpace& space, const nlohmann::json& cfg) {
    std::vector<double> x;
    for (const Dimension& d : space.dims) {
        if (d.type == Dimension::Type::categorical) {
            const std::string v = cfg.at(d.name).get<std::string>();
            for (const std::string& c : d.choices) x.push_back(c == v ? 1.0 : 0.0);
        } else {
            double v = cfg.at(d.name).get<double>();
            if (d.log_scale)
                x.push_back((std::log(v) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo)));
            else
                x.push_back((v - d.lo) / (d.hi - d.lo));
        }
    }
    return x;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// In-place lower Cholesky of the n×n row-major matrix; false on failure.
bool cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0;
    }
    return true;
}

void forward_sub(const std::vector<double>& L, std::size_t n, std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * b[k];
        b[i] = s / L[i * n + i];
    }
}

void back_sub_t(const std::vector<double>& L, std::size_t n, std::vector<double>& b) {
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= L[k * n + ii] * b[k];
        b[ii] = s / L[ii * n + ii];
    }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

struct GpSurrogate {
    const SearchSpace& space;
    std::vector<std::vector<double>> X;
    std::vector<double> L;  // Cholesky factor of K + noise
    std::vector<double> alpha;
    double length2 = 1.0;  // squared length scale
    double y_best_std = 0;
    bool flat = false;  // all observations equal: EI carries no signal

    GpSurrogate(const SearchSpace& space_, const std::vector<TrialRecord>& records)
        : space(space_) {
        std::vector<double> y;
        for (const TrialRecord& r : records) {
            X.push_back(normalize_config(space, r.config));
            y.push_back(r.f1);
        }
        const std::size_t n = X.size();

        // length scale: median pairwise distance in the normalized space
        std::vector<double> dists;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                dists.push_back(std::sqrt(sq_dist(X[i], X[j])));
        std::sort(dists.begin(), dists.end());
        double med = dists.empty() ? 1.0 : dists[dists.size() / 2];
        if (med <= 0) med = 1.0;
        length2 = med * med;

        // standardize the targets so a unit-amplitude kernel is reasonable
        double mean = 0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(n);
        double var = 0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        if (var <= 0) {
            flat = true;
            return;
        }
        const double sd = std::sqrt(var);
        std::vector<double> ys(n);
        for (std::size_t i = 0; i < n; ++i) ys[i] = (y[i] - mean) / sd;
        y_best_std = *std::max_element(ys.begin(), ys.end());

        double jitter = 1e-6;
        for (int attempt = 0; attempt < 6; ++attempt) {
            L.assign(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j)
                    L[i * n + j] = std::exp(-0.5 * sq_dist(X[i], X[j]) / length2);
                L[i * n + i] += jitter;
            }
            if (cholesky(L, n)) break;
            jitter *= 100.0;
            if (attempt == 5) throw Error("gp surrogate: kernel matrix not positive definite");
        }
        alpha = ys;
        forward_sub(L, n, alpha);
        back_sub_t(L, n, alpha);
    }

    // Expected improvement (standardized-target units) at a candidate.
    double ei(const std::vector<double>& x) const {
        if (flat) return 0.0;
        const std::size_t n = X.size();
        std::vector<double> k(n);
        for (std::size_t i = 0; i < n; ++i) k[i] = std::exp(-0.5 * sq_dist(X[i], x) / length2);
        double mu = 0;
        for (std::size_t i = 0; i < n; ++i) mu += k[i] * alpha[i];
        std::vector<double> v = k;
        forward_sub(L, n, v);
        double var = 1.0;
        for (double vi : v) var -= vi * vi;
        const double sigma = std::sqrt(std::max(var, 0.0));
        const double gap = mu - y_best_std;
        if (sigma < 1e-12) return std::max(gap, 0.0);
        const double z = gap / sigma;
        return gap * normal_cdf(z) + sigma * normal_pdf(z);
    }
};

}  // namespace

SearchResult search(const SearchSpace& space, const Objective& objective, int budget,
                    Strategy strategy, int seed, const std::vector<TrialRecord>& prior) {
    space.validate();
    if (budget < 1) throw ConfigError("search budget must be >= 1");
    if (prior.size() > static_cast<std::size_t>(budget))
        throw ConfigError("resume log already holds more trials than the budget");

    SearchResult result;
    SeededRng rng(static_cast<std::uint64_t>(seed));
    const int warmup =
        strategy == Strategy::gp_ei ? (budget + 3) / 4 : budget;  // ceil(budget/4)

    for (int trial = 0; trial < budget; ++trial) {
        nlohmann::json proposal;
        if (trial < warmup) {
            proposal = sample_config(space, rng);
        } else {
            GpSurrogate gp(space, result.records);
            double best_ei = -1;
            bool found = false;
            for (int c = 0; c < 512; ++c) {
                nlohmann::json cand = sample_config(space, rng);
                bool seen = false;
                for (const TrialRecord& r : result.records)
                    if (r.config == cand) {
                        seen = true;
                        break;
                    }
                if (seen) continue;
                const double e = gp.ei(normalize_config(space, cand));
                if (!found || e > best_ei) {
                    best_ei = e;
                    proposal = std::move(cand);
                    found = true;
                }
            }
            if (!found)  // tiny discrete space fully explored: accept a repeat
                proposal = sample_config(space, rng);
        }

        TrialRecord rec;
        if (static_cast<std::size_t>(trial) < prior.size()) {
            if (prior[static_cast<std::size_t>(trial)].config != proposal)
                throw ConfigError("resume log mismatch at trial " + std::to_string(trial) +
                                  "; was the seed, strategy, or space changed?");
            rec = prior[static_cast<std::size_t>(trial)];
        } else {
            const double t0 = now_seconds();
            try {
                rec = objective(proposal);
            } catch (const DivergenceError&) {
                rec.f1 = 0;
                rec.diverged = true;
            }
            rec.config = proposal;
            if (rec.wall_seconds == 0) rec.wall_seconds = now_seconds() - t0;
        }
        result.records.push_back(std::move(rec));
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < result.records.size(); ++i)
        if (result.records[i].f1 > result.records[best].f1) best = i;
    result.best_config = result.records[best].config;
    result.best_f1 = result.records[best].f1;
    return result;
}

std::unique_ptr<Model> model_from_config(const std::string& arch, const nlohmann::json& config,
                                         std::size_t height, std::size_t width,
                                         std::size_t num_classes, SeededRng& rng) {
    if (arch == "wavpool") {
        WavPoolConfig c;
        c.height = height;
        c.width = width;
        c.num_classes = num_classes;
        c.base_hidden = config.value("hidden", c.base_hidden);
        if (config.contains("scaling")) c.scaling = config.at("scaling").get<std::string>() == "true";
        // One "pool" knob drives the 3D kernel: k2 takes it directly, k1 is
        // capped at 3 so the orientation axis (size 4, stride 1) stays valid.
        const std::size_t pool = config.value("pool", c.pool_k2);
        c.pool_k1 = std::min<std::size_t>(pool, 3);
        c.pool_k2 = pool;
        return build_wavpool(c, rng);
    }
    if (arch == "mlp") {
        MLPConfig c;
        c.input_size = height * width;
        c.num_classes = num_classes;
        const std::size_t hidden = config.value("hidden", c.hidden1);
        c.hidden1 = hidden;
        c.hidden2 = hidden;
        return build_mlp(c, rng);
    }
    if (arch == "cnn") {
        CNNConfig c;
        c.height = height;
        c.width = width;
        c.num_classes = num_classes;
        c.kernel_size = config.value("kernel", c.kernel_size);
        c.hidden_channels_1 = config.value("channels1", c.hidden_channels_1);
        c.hidden_channels_2 = config.value("channels2", c.hidden_channels_2);
        return build_cnn(c, rng);
    }
    throw ConfigError("unknown architecture '" + arch + "' (wavpool, mlp, cnn)");
}

OptimizerConfig optimizer_from_config(const nlohmann::json& config) {
    OptimizerConfig opt;
    if (config.contains("optimizer"))
        opt.kind = OptimizerConfig::parse_kind(config.at("optimizer").get<std::string>());
    opt.learning_rate = config.value("lr", opt.learning_rate);
    return opt;
}

TrialRecord evaluate_config(const nlohmann::json& config, const std::string& arch,
                            const LabeledDataset& full_train, int seed, std::size_t n_train,
                            std::size_t n_val, int batch_size, std::size_t num_classes) {
    TrialRecord rec;
    rec.config = config;
    const double t0 = now_seconds();

    SplitSpec spec;
    spec.seed = static_cast<std::uint64_t>(seed);
    spec.n_train = n_train;
    spec.n_val = n_val;
    auto [tr, va] = subset_split(full_train, spec);

    SeededRng init_rng = SeededRng(static_cast<std::uint64_t>(seed)).derive(1);
    std::unique_ptr<Model> model =
        model_from_config(arch, config, tr.height(), tr.width(), num_classes, init_rng);

    TrainConfig cfg;
    cfg.max_epochs = 20;
    cfg.patience = 19;  // cannot trigger before the cap: an un-early-stopped run
    cfg.batch_size = batch_size;
    cfg.optimizer = optimizer_from_config(config);
    cfg.seed = seed;

    try {
        TrainReport rep = train(*model, tr, va, cfg);
        rec.f1 = rep.final_val.f1;
    } catch (const DivergenceError&) {
        rec.f1 = 0;
        rec.diverged = true;
    }
    rec.wall_seconds = now_seconds() - t0;
    return rec;
}

std::string record_jsonl(const TrialRecord& record) {
    nlohmann::json j;
    j["config"] = record.config;
    j["f1"] = record.f1;
    j["wall_seconds"] = record.wall_seconds;
    j["diverged"] = record.diverged;
    return j.dump();
}

std::vector<TrialRecord> read_trial_log(const std::string& path) {
    std::vector<TrialRecord> records;
    std::ifstream in(path);
    if (!in) return records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError("bad trial log line " + std::to_string(lineno) + " in " + path +
                              ": " + e.what());
        }
        TrialRecord r;
        r.config = j.at("config");
        r.f1 = j.at("f1").get<double>();
        r.wall_seconds = j.value("wall_seconds", 0.0);
        r.diverged = j.value("diverged", false);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace wavpool
