#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavpool/dataset.hpp"
#include "wavpool/layers.hpp"
#include "wavpool/models.hpp"

namespace wavpool {

struct TrainConfig {
    int max_epochs = 120;
    int patience = 5;
    int batch_size = 64;
    OptimizerConfig optimizer;
    int seed = 0;

    void validate() const;  // throws ConfigError
};

// Tracks the running-best validation loss. Any strict decrease resets the
// stall counter; `update` returns true once `patience` consecutive epochs
// have failed to improve the best.
struct EarlyStopper {
    int patience;
    double best = 1e300;
    int best_epoch = 0;
    int stalled = 0;

    explicit EarlyStopper(int patience_) : patience(patience_) {}
    bool update(double val_loss, int epoch);
};

struct FinalMetrics {
    double loss = 0;
    double accuracy = 0;
    double roc_auc = 0;
    double f1 = 0;
    Tensor confusion{std::vector<std::size_t>{1, 1}};
};

struct TrainReport {
    std::string arch;
    std::string task;
    int seed = 0;
    TrainConfig config;

    std::vector<double> train_loss, val_loss, train_acc, val_acc;
    int stopped_epoch = 0;
    int best_epoch = 0;

    FinalMetrics final_val;
    std::size_t param_count = 0;
    double train_wall_seconds = 0;
    double single_inference_seconds = 0;
};

// Full parameter + buffer snapshot of a model, used for best-epoch restore
// and for checkpoint files.
struct ModelSnapshot {
    std::vector<Tensor> params;
    std::vector<Tensor> state;
};

ModelSnapshot snapshot_model(Model& model);
void restore_model(Model& model, const ModelSnapshot& snap);

struct EvalOutcome {
    double loss = 0;
    double accuracy = 0;
    Tensor probs{std::vector<std::size_t>{1, 1}};  // N×K softmax scores
    std::vector<int> preds;
};

// Runs the model over `ds` in eval mode, batched, and returns mean loss,
// accuracy, and per-example softmax scores.
EvalOutcome evaluate_model(Model& model, const LabeledDataset& ds, int batch_size);

// Mini-batch training with seeded per-epoch shuffling and patience-based
// early stopping on validation loss. The best-val-loss snapshot is restored
// before the final metrics are computed. Throws DivergenceError when the
// loss turns non-finite.
TrainReport train(Model& model, const LabeledDataset& train_ds, const LabeledDataset& val_ds,
                  const TrainConfig& cfg);

struct Aggregate {
    double mean = 0;
    double max_dev = 0;  // max |value - mean|
    double stddev = 0;   // population standard deviation
    std::vector<double> values;
};

Aggregate aggregate(const std::vector<double>& values);

struct TrialsSummary {
    std::vector<TrainReport> reports;
    std::vector<int> seeds;
    Aggregate accuracy, roc_auc, f1, loss;
};

using ModelFactory = std::function<std::unique_ptr<Model>(SeededRng&)>;
using TrialHook = std::function<void(const TrainReport&, Model&)>;

// Runs one seeded trial per entry of `seeds`: the seed fixes the 4000/2000
// subset draw, the weight init, and the epoch shuffling. Reports are
// aggregated as mean with max-deviation spread (stddev also recorded).
// `on_trial`, when set, sees each finished report with its trained model
// (e.g. to save a checkpoint).
TrialsSummary run_trials(const ModelFactory& factory, const LabeledDataset& full_train,
                         const TrainConfig& base_cfg, const std::vector<int>& seeds,
                         std::size_t n_train, std::size_t n_val, const std::string& task,
                         const TrialHook& on_trial = {});

// Serialization (see docs/formats.md): full JSON report, per-epoch curve CSV
// (epoch,train_loss,val_loss,train_acc,val_acc), and confusion-grid CSV.
nlohmann::json report_json(const TrainReport& report);
std::string curves_csv(const TrainReport& report);
std::string confusion_csv(const Tensor& confusion);
nlohmann::json summary_json(const TrialsSummary& summary);

}  // namespace wavpool
