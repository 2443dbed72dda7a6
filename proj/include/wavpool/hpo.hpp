#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavpool/models.hpp"
#include "wavpool/train.hpp"

namespace wavpool {

struct Dimension {
    enum class Type { continuous, integer, categorical };
    std::string name;
    Type type = Type::continuous;
    double lo = 0, hi = 0;             // continuous / integer bounds (inclusive)
    bool log_scale = false;            // continuous only
    std::vector<std::string> choices;  // categorical only
};

struct SearchSpace {
    std::vector<Dimension> dims;
    void validate() const;  // lo < hi, choices non-empty
};

// Sampled configs are flat JSON objects: continuous dims as doubles, integer
// dims as integers, categorical dims as strings. Keys are the dimension names.
nlohmann::json sample_config(const SearchSpace& space, SeededRng& rng);

// The tuned spaces per architecture; every space also carries the optimizer
// choice {sgd, adam}.
SearchSpace default_space(const std::string& arch);

struct TrialRecord {
    nlohmann::json config;
    double f1 = 0;
    double wall_seconds = 0;
    bool diverged = false;
};

enum class Strategy { random, gp_ei };
Strategy parse_strategy(const std::string& s);  // "random", "gp", "gp_ei"

struct SearchResult {
    nlohmann::json best_config;
    double best_f1 = 0;
    std::vector<TrialRecord> records;
};

using Objective = std::function<TrialRecord(const nlohmann::json&)>;

// Random search draws i.i.d. configs. gp_ei runs ceil(budget/4) random
// warm-up trials, then fits a squared-exponential Gaussian process on
// unit-normalized dimensions (categoricals one-hot, length scale = median
// pairwise distance, noise 1e-6) and proposes the expected-improvement
// maximizer over a seeded pool of 512 candidates, never re-proposing an
// already-evaluated config. `prior` replays an existing trial log: its
// records are reused (and checked against the proposal sequence) instead of
// re-evaluating.
SearchResult search(const SearchSpace& space, const Objective& objective, int budget,
                    Strategy strategy, int seed,
                    const std::vector<TrialRecord>& prior = {});

// Builds a model of `arch` from a flat config (search-space keys; missing
// keys fall back to the architecture defaults).
std::unique_ptr<Model> model_from_config(const std::string& arch, const nlohmann::json& config,
                                         std::size_t height, std::size_t width,
                                         std::size_t num_classes, SeededRng& rng);
OptimizerConfig optimizer_from_config(const nlohmann::json& config);

// Abbreviated 20-epoch evaluation (no early stopping): trains a fresh model
// on the seed's train/val subset split and scores validation macro F1.
// Divergence is not fatal: the record comes back with f1 = 0 and the flag set.
TrialRecord evaluate_config(const nlohmann::json& config, const std::string& arch,
                            const LabeledDataset& full_train, int seed, std::size_t n_train,
                            std::size_t n_val, int batch_size = 64, std::size_t num_classes = 10);

// JSON-lines trial log used for --resume.
std::string record_jsonl(const TrialRecord& record);
std::vector<TrialRecord> read_trial_log(const std::string& path);  // empty if missing

}  // namespace wavpool
