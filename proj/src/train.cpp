#include "wavpool/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "wavpool/errors.hpp"
#include "wavpool/metrics.hpp"

namespace wavpool {

void TrainConfig::validate() const {
    if (max_epochs < 1)
        throw ConfigError("max_epochs must be >= 1, got " + std::to_string(max_epochs));
    if (patience < 1) throw ConfigError("patience must be >= 1, got " + std::to_string(patience));
    if (patience >= max_epochs)
        throw ConfigError("patience (" + std::to_string(patience) + ") must be < max_epochs (" +
                          std::to_string(max_epochs) + ")");
    if (batch_size < 2)
        throw ConfigError("batch_size must be >= 2, got " + std::to_string(batch_size));
    optimizer.validate();
}

bool EarlyStopper::update(double val_loss, int epoch) {
    if (val_loss < best) {
        best = val_loss;
        best_epoch = epoch;
        stalled = 0;
        return false;
    }
    ++stalled;
    return stalled >= patience;
}

ModelSnapshot snapshot_model(Model& model) {
    ModelSnapshot snap;
    for (Param* p : model.params()) snap.params.push_back(p->value);
    for (auto& [name, t] : model.state()) snap.state.push_back(*t);
    return snap;
}

void restore_model(Model& model, const ModelSnapshot& snap) {
    auto params = model.params();
    auto state = model.state();
    if (params.size() != snap.params.size() || state.size() != snap.state.size())
        throw ProtocolError("snapshot does not match model layout");
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap.params[i];
    for (std::size_t i = 0; i < state.size(); ++i) *state[i].second = snap.state[i];
}

namespace {

// Batch index ranges over [0, n). When `merge_singleton` is set a trailing
// batch of one example is folded into its predecessor so training-mode
// batchnorm never sees a single-example batch.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, int batch_size,
                                                             bool merge_singleton) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t bs = static_cast<std::size_t>(batch_size);
    for (std::size_t start = 0; start < n; start += bs)
        out.emplace_back(start, std::min(n, start + bs));
    if (merge_singleton && out.size() >= 2 && out.back().second - out.back().first == 1) {
        out[out.size() - 2].second = out.back().second;
        out.pop_back();
    }
    return out;
}

std::vector<int> argmax_rows(const Tensor& probs) {
    const std::size_t n = probs.dim(0), k = probs.dim(1);
    std::vector<int> preds(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (probs.at(i, j) > probs.at(i, best)) best = j;
        preds[i] = static_cast<int>(best);
    }
    return preds;
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

EvalOutcome evaluate_model(Model& model, const LabeledDataset& ds, int batch_size) {
    const std::size_t n = ds.size();
    if (n == 0) throw DataConsistencyError("cannot evaluate on an empty dataset");
    EvalOutcome out;
    out.probs = Tensor({n, model.num_classes()});
    double loss_sum = 0;
    for (auto [start, stop] : batch_ranges(n, batch_size, false)) {
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = start; i < stop; ++i) idx[i - start] = i;
        LabeledDataset batch = gather(ds, idx);
        Tensor logits = model.forward(batch.images, false);
        XentResult r = softmax_xent(logits, batch.labels);
        loss_sum += r.loss * static_cast<double>(stop - start);
        for (std::size_t i = 0; i < stop - start; ++i)
            for (std::size_t j = 0; j < model.num_classes(); ++j)
                out.probs.at(start + i, j) = r.probs.at(i, j);
    }
    out.loss = loss_sum / static_cast<double>(n);
    out.preds = argmax_rows(out.probs);
    out.accuracy = accuracy(out.preds, ds.labels);
    return out;
}

TrainReport train(Model& model, const LabeledDataset& train_ds, const LabeledDataset& val_ds,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_ds.height() != val_ds.height() || train_ds.width() != val_ds.width())
        throw DataConsistencyError("train/val image shapes differ: " + train_ds.name + " vs " +
                                   val_ds.name);

    TrainReport report;
    report.arch = model.arch();
    report.task = train_ds.name;
    report.seed = cfg.seed;
    report.config = cfg;
    report.param_count = param_count(model.params());

    SeededRng shuffle_rng = SeededRng(static_cast<std::uint64_t>(cfg.seed)).derive(2);
    Optimizer opt(cfg.optimizer);
    EarlyStopper stopper(cfg.patience);
    ModelSnapshot best = snapshot_model(model);

    const std::size_t n = train_ds.size();
    const double lr = cfg.optimizer.learning_rate;
    const double t0 = now_seconds();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<std::size_t> perm = shuffle_rng.permutation(n);
        double loss_sum = 0;
        std::size_t hits = 0;
        for (auto [start, stop] : batch_ranges(n, cfg.batch_size, true)) {
            std::vector<std::size_t> idx(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                         perm.begin() + static_cast<std::ptrdiff_t>(stop));
            LabeledDataset batch = gather(train_ds, idx);
            Tensor logits = model.forward(batch.images, true);
            XentResult r = softmax_xent(logits, batch.labels);
            if (!std::isfinite(r.loss))
                throw DivergenceError("training loss became non-finite", epoch, lr);
            loss_sum += r.loss * static_cast<double>(stop - start);
            std::vector<int> preds = argmax_rows(r.probs);
            for (std::size_t i = 0; i < preds.size(); ++i)
                if (preds[i] == batch.labels[i]) ++hits;
            model.backward(r.dlogits);
            opt.step(model.params());
        }
        report.train_loss.push_back(loss_sum / static_cast<double>(n));
        report.train_acc.push_back(static_cast<double>(hits) / static_cast<double>(n));

        EvalOutcome val = evaluate_model(model, val_ds, cfg.batch_size);
        if (!std::isfinite(val.loss))
            throw DivergenceError("validation loss became non-finite", epoch, lr);
        report.val_loss.push_back(val.loss);
        report.val_acc.push_back(val.accuracy);
        report.stopped_epoch = epoch;

        const bool stop = stopper.update(val.loss, epoch);
        if (stopper.best_epoch == epoch) best = snapshot_model(model);
        if (stop) break;
    }
    report.train_wall_seconds = now_seconds() - t0;
    report.best_epoch = stopper.best_epoch;

    restore_model(model, best);
    EvalOutcome fin = evaluate_model(model, val_ds, cfg.batch_size);
    report.final_val.loss = fin.loss;
    report.final_val.accuracy = fin.accuracy;
    report.final_val.f1 = f1_macro(fin.preds, val_ds.labels, model.num_classes());
    report.final_val.roc_auc = roc_auc_macro(fin.probs, val_ds.labels);
    report.final_val.confusion = confusion(fin.preds, val_ds.labels, model.num_classes());

    // Single-datum inference time: one warm-up pass, then the mean of 16
    // timed single-image forward passes.
    {
        std::vector<std::size_t> one = {0};
        LabeledDataset single = gather(val_ds, one);
        model.forward(single.images, false);
        const double s0 = now_seconds();
        for (int rep = 0; rep < 16; ++rep) model.forward(single.images, false);
        report.single_inference_seconds = (now_seconds() - s0) / 16.0;
    }
    return report;
}

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) throw DataConsistencyError("cannot aggregate zero values");
    Aggregate a;
    a.values = values;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) {
        a.max_dev = std::max(a.max_dev, std::abs(v - a.mean));
        ss += (v - a.mean) * (v - a.mean);
    }
    a.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    return a;
}

TrialsSummary run_trials(const ModelFactory& factory, const LabeledDataset& full_train,
                         const TrainConfig& base_cfg, const std::vector<int>& seeds,
                         std::size_t n_train, std::size_t n_val, const std::string& task,
                         const TrialHook& on_trial) {
    if (seeds.empty()) throw ConfigError("run_trials needs at least one seed");
    TrialsSummary summary;
    summary.seeds = seeds;
    for (int seed : seeds) {
        SplitSpec spec;
        spec.seed = seed;
        spec.n_train = n_train;
        spec.n_val = n_val;
        auto [tr, va] = subset_split(full_train, spec);
        SeededRng init_rng = SeededRng(static_cast<std::uint64_t>(seed)).derive(1);
        std::unique_ptr<Model> model = factory(init_rng);
        TrainConfig cfg = base_cfg;
        cfg.seed = seed;
        try {
            TrainReport rep = train(*model, tr, va, cfg);
            rep.task = task;
            if (on_trial) on_trial(rep, *model);
            summary.reports.push_back(std::move(rep));
        } catch (const DivergenceError& e) {
            throw DivergenceError("trial with seed " + std::to_string(seed) + ": " + e.what(),
                                  e.epoch, e.learning_rate);
        }
    }
    std::vector<double> acc, auc, f1, loss;
    for (const TrainReport& r : summary.reports) {
        acc.push_back(r.final_val.accuracy);
        auc.push_back(r.final_val.roc_auc);
        f1.push_back(r.final_val.f1);
        loss.push_back(r.final_val.loss);
    }
    summary.accuracy = aggregate(acc);
    summary.roc_auc = aggregate(auc);
    summary.f1 = aggregate(f1);
    summary.loss = aggregate(loss);
    return summary;
}

namespace {

nlohmann::json optimizer_json(const OptimizerConfig& opt) {
    nlohmann::json j;
    j["kind"] = opt.kind_name();
    j["learning_rate"] = opt.learning_rate;
    if (opt.kind == OptimizerConfig::Kind::adam) {
        j["beta1"] = opt.beta1;
        j["beta2"] = opt.beta2;
        j["epsilon"] = opt.epsilon;
    }
    return j;
}

nlohmann::json aggregate_json(const Aggregate& a) {
    return nlohmann::json{
        {"mean", a.mean}, {"max_dev", a.max_dev}, {"std", a.stddev}, {"values", a.values}};
}

}  // namespace

nlohmann::json report_json(const TrainReport& report) {
    nlohmann::json j;
    j["arch"] = report.arch;
    j["task"] = report.task;
    j["seed"] = report.seed;
    j["config"] = {{"max_epochs", report.config.max_epochs},
                   {"patience", report.config.patience},
                   {"batch_size", report.config.batch_size},
                   {"seed", report.config.seed},
                   {"optimizer", optimizer_json(report.config.optimizer)}};
    j["stopped_epoch"] = report.stopped_epoch;
    j["best_epoch"] = report.best_epoch;
    j["param_count"] = report.param_count;
    j["train_wall_seconds"] = report.train_wall_seconds;
    j["single_inference_seconds"] = report.single_inference_seconds;
    j["curves"] = {{"train_loss", report.train_loss},
                   {"val_loss", report.val_loss},
                   {"train_acc", report.train_acc},
                   {"val_acc", report.val_acc}};
    const Tensor& c = report.final_val.confusion;
    std::vector<std::vector<double>> grid(c.dim(0), std::vector<double>(c.dim(1)));
    for (std::size_t i = 0; i < c.dim(0); ++i)
        for (std::size_t k = 0; k < c.dim(1); ++k) grid[i][k] = c.at(i, k);
    j["final_val"] = {{"loss", report.final_val.loss},
                      {"accuracy", report.final_val.accuracy},
                      {"roc_auc", report.final_val.roc_auc},
                      {"f1", report.final_val.f1},
                      {"confusion", grid}};
    return j;
}

std::string curves_csv(const TrainReport& report) {
    std::ostringstream out;
    out << "epoch,train_loss,val_loss,train_acc,val_acc\n";
    char buf[128];
    for (int e = 0; e < report.stopped_epoch; ++e) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", e + 1,
                      report.train_loss[static_cast<std::size_t>(e)],
                      report.val_loss[static_cast<std::size_t>(e)],
                      report.train_acc[static_cast<std::size_t>(e)],
                      report.val_acc[static_cast<std::size_t>(e)]);
        out << buf;
    }
    return out.str();
}

std::string confusion_csv(const Tensor& confusion) {
    std::ostringstream out;
    char buf[64];
    for (std::size_t i = 0; i < confusion.dim(0); ++i) {
        for (std::size_t k = 0; k < confusion.dim(1); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", confusion.at(i, k));
            out << (k ? "," : "") << buf;
        }
        out << "\n";
    }
    return out.str();
}

nlohmann::json summary_json(const TrialsSummary& summary) {
    nlohmann::json j;
    if (!summary.reports.empty()) {
        j["arch"] = summary.reports.front().arch;
        j["task"] = summary.reports.front().task;
    }
    j["seeds"] = summary.seeds;
    j["n_trials"] = summary.reports.size();
    j["metrics"] = {{"accuracy", aggregate_json(summary.accuracy)},
                    {"roc_auc", aggregate_json(summary.roc_auc)},
                    {"f1", aggregate_json(summary.f1)},
                    {"loss", aggregate_json(summary.loss)}};
    std::vector<std::size_t> params;
    std::vector<double> walls;
    for (const TrainReport& r : summary.reports) {
        params.push_back(r.param_count);
        walls.push_back(r.train_wall_seconds);
    }
    j["param_counts"] = params;
    j["train_wall_seconds"] = walls;
    return j;
}

}  // namespace wavpool
