// wavpool command-line interface: decompose/reconstruct images, train and
// evaluate the three architectures, run hyperparameter search, and build
// comparison reports. Exit codes: 0 success, 2 bad user input, 3 numerical
// failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wavpool/errors.hpp"
#include "wavpool/hpo.hpp"
#include "wavpool/io.hpp"
#include "wavpool/metrics.hpp"
#include "wavpool/train.hpp"

namespace fs = std::filesystem;
using namespace wavpool;

namespace {

void echo_config(const std::string& title,
                 const std::vector<std::pair<std::string, std::string>>& kv) {
    std::printf("--- %s ---\n", title.c_str());
    for (const auto& [k, v] : kv) std::printf("%s = %s\n", k.c_str(), v.c_str());
    std::printf("---\n");
}

long parse_long(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' wants an integer, got '" + value + "'");
    }
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' wants a number, got '" + value + "'");
    }
}

const std::set<std::string> kTrainKeys = {"max_epochs", "patience",  "batch_size", "optimizer",
                                          "learning_rate", "beta1", "beta2",      "epsilon",
                                          "seed"};

std::set<std::string> model_keys_for(const std::string& arch) {
    if (arch == "wavpool") return {"base_hidden", "scaling", "pool_k1", "pool_k2"};
    if (arch == "mlp") return {"hidden1", "hidden2"};
    if (arch == "cnn") return {"kernel_size", "hidden_channels_1", "hidden_channels_2"};
    throw ConfigError("unknown architecture '" + arch + "' (wavpool, mlp, cnn)");
}

// Typed-config defaults in the flat key-value vocabulary, with the data
// shape injected from the task (these keys may not appear in config files).
std::map<std::string, std::string> default_model_kv(const std::string& arch, std::size_t height,
                                                    std::size_t width, std::size_t num_classes) {
    std::map<std::string, std::string> kv;
    kv["arch"] = arch;
    kv["num_classes"] = std::to_string(num_classes);
    if (arch == "wavpool") {
        WavPoolConfig c;
        kv["height"] = std::to_string(height);
        kv["width"] = std::to_string(width);
        kv["base_hidden"] = std::to_string(c.base_hidden);
        kv["scaling"] = c.scaling ? "true" : "false";
        kv["pool_k1"] = std::to_string(c.pool_k1);
        kv["pool_k2"] = std::to_string(c.pool_k2);
    } else if (arch == "mlp") {
        MLPConfig c;
        kv["input_size"] = std::to_string(height * width);
        kv["hidden1"] = std::to_string(c.hidden1);
        kv["hidden2"] = std::to_string(c.hidden2);
    } else if (arch == "cnn") {
        CNNConfig c;
        kv["height"] = std::to_string(height);
        kv["width"] = std::to_string(width);
        kv["kernel_size"] = std::to_string(c.kernel_size);
        kv["hidden_channels_1"] = std::to_string(c.hidden_channels_1);
        kv["hidden_channels_2"] = std::to_string(c.hidden_channels_2);
    } else {
        throw ConfigError("unknown architecture '" + arch + "' (wavpool, mlp, cnn)");
    }
    return kv;
}

TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv, int seed) {
    TrainConfig cfg;
    auto geti = [&kv](const std::string& key, int dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : static_cast<int>(parse_long(it->second, key));
    };
    auto getd = [&kv](const std::string& key, double dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : parse_double(it->second, key);
    };
    cfg.max_epochs = geti("max_epochs", cfg.max_epochs);
    cfg.patience = geti("patience", cfg.patience);
    cfg.batch_size = geti("batch_size", cfg.batch_size);
    if (kv.count("optimizer")) cfg.optimizer.kind = OptimizerConfig::parse_kind(kv.at("optimizer"));
    cfg.optimizer.learning_rate = getd("learning_rate", cfg.optimizer.learning_rate);
    cfg.optimizer.beta1 = getd("beta1", cfg.optimizer.beta1);
    cfg.optimizer.beta2 = getd("beta2", cfg.optimizer.beta2);
    cfg.optimizer.epsilon = getd("epsilon", cfg.optimizer.epsilon);
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::vector<std::pair<std::string, std::string>> train_config_kv(const TrainConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"max_epochs", std::to_string(cfg.max_epochs)},
        {"patience", std::to_string(cfg.patience)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"optimizer", cfg.optimizer.kind_name()},
        {"learning_rate", fmt_g(cfg.optimizer.learning_rate)},
        {"seed", std::to_string(cfg.seed)}};
    if (cfg.optimizer.kind == OptimizerConfig::Kind::adam) {
        kv.emplace_back("beta1", fmt_g(cfg.optimizer.beta1));
        kv.emplace_back("beta2", fmt_g(cfg.optimizer.beta2));
        kv.emplace_back("epsilon", fmt_g(cfg.optimizer.epsilon));
    }
    return kv;
}

void write_trial_outputs(const std::string& dir, const TrainReport& rep, Model& model) {
    fs::create_directories(dir);
    write_text_file(dir + "/report.json", report_json(rep).dump(2) + "\n");
    write_text_file(dir + "/curves.csv", curves_csv(rep));
    write_text_file(dir + "/confusion.csv", confusion_csv(rep.final_val.confusion));
    save_checkpoint(dir + "/checkpoint", model, rep.seed, rep.best_epoch);
}

void print_summary_table(const TrialsSummary& s) {
    std::printf("\n%-10s %-28s %-28s %-28s %-28s\n", "trials", "accuracy", "roc_auc", "f1",
                "loss");
    auto cell = [](const Aggregate& a) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f +- %.4f", a.mean, a.max_dev);
        return std::string(buf);
    };
    std::printf("%-10zu %-28s %-28s %-28s %-28s\n", s.reports.size(),
                cell(s.accuracy).c_str(), cell(s.roc_auc).c_str(), cell(s.f1).c_str(),
                cell(s.loss).c_str());
}

// Shared by train and the hpo final protocol: run the seeds, save per-trial
// outputs plus summary.json under out_dir.
TrialsSummary run_and_save_trials(const ModelFactory& factory, const LabeledDataset& full,
                                  const TrainConfig& base_cfg, const std::vector<int>& seeds,
                                  const std::string& task, const std::string& out_dir) {
    fs::create_directories(out_dir);
    TrialsSummary summary = run_trials(
        factory, full, base_cfg, seeds, 4000, 2000, task,
        [&out_dir](const TrainReport& rep, Model& model) {
            write_trial_outputs(out_dir + "/trial_seed" + std::to_string(rep.seed), rep, model);
            std::printf("seed %d: stopped at epoch %d (best %d), val acc %.4f, f1 %.4f\n",
                        rep.seed, rep.stopped_epoch, rep.best_epoch, rep.final_val.accuracy,
                        rep.final_val.f1);
            std::fflush(stdout);
        });
    write_text_file(out_dir + "/summary.json", summary_json(summary).dump(2) + "\n");
    print_summary_table(summary);
    return summary;
}

// ---------------------------------------------------------------- decompose

struct DecomposeOpts {
    std::string input, out;
    int levels = 0;  // 0: all
};

void cmd_decompose(const DecomposeOpts& opt) {
    echo_config("decompose", {{"input", opt.input},
                              {"out", opt.out},
                              {"levels", opt.levels ? std::to_string(opt.levels) : "all"}});
    Tensor img = read_image_grid(opt.input);
    WaveletFilters2D filters = haar_filters_2d();
    const int full_levels = level_count(img.dim(0), img.dim(1), filters.vanishing_moments);
    int levels = opt.levels == 0 ? full_levels : opt.levels;
    if (levels < 1 || levels > full_levels)
        throw ConfigError("--levels must lie in [1, " + std::to_string(full_levels) +
                          "] for a " + img.shape_str() + " input");

    MRDecomposition mrd;
    if (levels == full_levels) {
        mrd = decompose(img, filters);
    } else {
        // truncated variant: stop the analysis after `levels` passes
        mrd.input_shape = {img.dim(0), img.dim(1)};
        Tensor current = img;
        for (int l = 0; l < levels; ++l) {
            LevelResult res = decompose_level(current, filters);
            mrd.levels.push_back(res.details);
            mrd.pad_log.push_back(res.pad);
            current = res.smooth;
        }
        mrd.smooth = current;
    }
    write_mrd(opt.out, mrd);

    Tensor rec = reconstruct(mrd, filters);
    double err = 0;
    for (std::size_t i = 0; i < img.size(); ++i)
        err = std::max(err, std::abs(rec[i] - img[i]));
    std::printf("wrote %zu levels (input %zux%zu) to %s\n", mrd.levels.size(), img.dim(0),
                img.dim(1), opt.out.c_str());
    std::printf("round-trip max abs error = %.3e\n", err);
    if (err > 1e-10) throw DivergenceError("decomposition round trip exceeded 1e-10", 0, 0);
}

// -------------------------------------------------------------- reconstruct

struct ReconstructOpts {
    std::string in, out, reference;
};

void cmd_reconstruct(const ReconstructOpts& opt) {
    echo_config("reconstruct",
                {{"in", opt.in}, {"out", opt.out}, {"reference", opt.reference}});
    MRDecomposition mrd = read_mrd(opt.in);
    Tensor rec = reconstruct(mrd, haar_filters_2d());
    write_float_grid(opt.out, rec);
    std::printf("reconstructed %zux%zu image to %s\n", rec.dim(0), rec.dim(1), opt.out.c_str());
    if (!opt.reference.empty()) {
        Tensor ref = read_image_grid(opt.reference);
        if (!ref.same_shape(rec))
            throw DataConsistencyError("reference shape " + ref.shape_str() +
                                       " does not match reconstruction " + rec.shape_str());
        double err = 0;
        for (std::size_t i = 0; i < rec.size(); ++i)
            err = std::max(err, std::abs(rec[i] - ref[i]));
        std::printf("max abs error vs reference = %.3e\n", err);
        if (err > 1e-10)
            throw DivergenceError("reconstruction differs from the reference beyond 1e-10", 0, 0);
    }
}

// -------------------------------------------------------------------- train

struct TrainOpts {
    std::string task, arch, config_file, out, data_dir;
    int seed = 0;
    bool seed_given = false;
    int trials = 1;
};

std::map<std::string, std::string> resolve_model_kv(const std::string& arch,
                                                    const std::map<std::string, std::string>& file,
                                                    std::size_t height, std::size_t width) {
    const std::set<std::string> allowed_model = model_keys_for(arch);
    for (const auto& [k, v] : file) {
        if (kTrainKeys.count(k) || allowed_model.count(k)) continue;
        throw ConfigError("config key '" + k + "' is not valid for arch '" + arch +
                          "' (shape keys come from the task)");
    }
    std::map<std::string, std::string> kv = default_model_kv(arch, height, width, 10);
    for (const auto& [k, v] : file)
        if (allowed_model.count(k)) kv[k] = v;
    return kv;
}

void cmd_train(const TrainOpts& opt) {
    const std::string data_dir = resolve_data_dir(opt.data_dir);
    std::map<std::string, std::string> file_kv;
    if (!opt.config_file.empty()) file_kv = read_kv_config(opt.config_file);

    int seed = opt.seed;
    if (!opt.seed_given && file_kv.count("seed"))
        seed = static_cast<int>(parse_long(file_kv.at("seed"), "seed"));

    LabeledDataset full = load_task(opt.task, data_dir, false);
    const auto model_kv = resolve_model_kv(opt.arch, file_kv, full.height(), full.width());
    const TrainConfig base_cfg = train_config_from_kv(file_kv, seed);

    std::vector<std::pair<std::string, std::string>> echo = {{"task", opt.task},
                                                             {"arch", opt.arch},
                                                             {"data_dir", data_dir},
                                                             {"out", opt.out},
                                                             {"trials", std::to_string(opt.trials)}};
    for (const auto& [k, v] : model_kv) echo.emplace_back(k, v);
    for (const auto& [k, v] : train_config_kv(base_cfg)) echo.emplace_back(k, v);
    echo_config("train", echo);

    if (opt.trials < 1) throw ConfigError("--trials must be >= 1");
    std::vector<int> seeds;
    for (int t = 0; t < opt.trials; ++t) seeds.push_back(seed + t);

    ModelFactory factory = [&model_kv](SeededRng& rng) { return build_model_from_kv(model_kv, rng); };
    run_and_save_trials(factory, full, base_cfg, seeds, opt.task, opt.out);
    std::printf("outputs written to %s\n", opt.out.c_str());
}

// ----------------------------------------------------------------- evaluate

struct EvaluateOpts {
    std::string checkpoint, task, data_dir, out, split = "val";
    int batch_size = 64;
};

void cmd_evaluate(const EvaluateOpts& opt) {
    Checkpoint ck = load_checkpoint(opt.checkpoint);
    std::vector<std::pair<std::string, std::string>> echo = {{"checkpoint", opt.checkpoint},
                                                             {"task", opt.task},
                                                             {"split", opt.split},
                                                             {"seed", std::to_string(ck.seed)}};
    for (const auto& [k, v] : ck.config) echo.emplace_back(k, v);
    echo_config("evaluate", echo);

    const std::string data_dir = resolve_data_dir(opt.data_dir);
    LabeledDataset ds;
    if (opt.split == "val") {
        SplitSpec spec;
        spec.seed = static_cast<std::uint64_t>(ck.seed);
        auto [tr, va] = subset_split(load_task(opt.task, data_dir, false), spec);
        ds = std::move(va);
    } else if (opt.split == "test") {
        ds = load_task(opt.task, data_dir, true);
    } else {
        throw ConfigError("--split must be 'val' or 'test', got '" + opt.split + "'");
    }

    EvalOutcome out = evaluate_model(*ck.model, ds, opt.batch_size);
    const std::size_t k = ck.model->num_classes();
    const double f1 = f1_macro(out.preds, ds.labels, k);
    const double auc = roc_auc_macro(out.probs, ds.labels);
    Tensor conf = confusion(out.preds, ds.labels, k);
    std::printf("%s %s (%zu examples): loss %.6f, accuracy %.4f, f1 %.4f, roc_auc %.4f\n",
                opt.task.c_str(), opt.split.c_str(), ds.size(), out.loss, out.accuracy, f1, auc);

    if (!opt.out.empty()) {
        fs::create_directories(opt.out);
        nlohmann::json j;
        j["task"] = opt.task;
        j["split"] = opt.split;
        j["arch"] = ck.model->arch();
        j["examples"] = ds.size();
        j["loss"] = out.loss;
        j["accuracy"] = out.accuracy;
        j["f1"] = f1;
        j["roc_auc"] = auc;
        write_text_file(opt.out + "/metrics.json", j.dump(2) + "\n");
        write_text_file(opt.out + "/confusion.csv", confusion_csv(conf));
        std::printf("metrics written to %s\n", opt.out.c_str());
    }
}

// ---------------------------------------------------------------------- hpo

struct HpoOpts {
    std::string task, arch, out, data_dir, strategy = "gp";
    int budget = 25;
    int seed = 0;
    bool resume = false;
};

void cmd_hpo(const HpoOpts& opt) {
    echo_config("hpo", {{"task", opt.task},
                        {"arch", opt.arch},
                        {"budget", std::to_string(opt.budget)},
                        {"strategy", opt.strategy},
                        {"seed", std::to_string(opt.seed)},
                        {"out", opt.out},
                        {"resume", opt.resume ? "true" : "false"}});
    const std::string data_dir = resolve_data_dir(opt.data_dir);
    LabeledDataset full = load_task(opt.task, data_dir, false);
    SearchSpace space = default_space(opt.arch);
    const Strategy strategy = parse_strategy(opt.strategy);

    fs::create_directories(opt.out);
    const std::string log_path = opt.out + "/trials.jsonl";
    std::vector<TrialRecord> prior;
    if (opt.resume)
        prior = read_trial_log(log_path);
    else if (fs::exists(log_path))
        fs::remove(log_path);
    if (!prior.empty())
        std::printf("resuming: %zu completed trials replayed from %s\n", prior.size(),
                    log_path.c_str());

    int trial_no = static_cast<int>(prior.size());
    Objective objective = [&](const nlohmann::json& config) {
        std::printf("trial %d/%d: %s\n", ++trial_no, opt.budget, config.dump().c_str());
        std::fflush(stdout);
        TrialRecord rec = evaluate_config(config, opt.arch, full, opt.seed, 4000, 2000);
        std::printf("  f1 %.4f%s (%.1fs)\n", rec.f1, rec.diverged ? " [diverged]" : "",
                    rec.wall_seconds);
        std::fflush(stdout);
        TrialRecord logged = rec;
        logged.config = config;
        std::ofstream log(log_path, std::ios::app);
        log << record_jsonl(logged) << "\n";
        return rec;
    };

    SearchResult result = search(space, objective, opt.budget, strategy, opt.seed, prior);
    bool any_ok = false;
    for (const TrialRecord& r : result.records) any_ok |= !r.diverged;
    if (!any_ok)
        throw DivergenceError("all " + std::to_string(result.records.size()) +
                                  " trials diverged; the search has no usable result",
                              0, 0);

    std::printf("best config (f1 %.4f): %s\n", result.best_f1, result.best_config.dump().c_str());
    write_text_file(opt.out + "/best_config.json", result.best_config.dump(2) + "\n");

    // Final protocol: re-initialize the winner and train it in full on three
    // seeds.
    TrainConfig final_cfg;
    final_cfg.optimizer = optimizer_from_config(result.best_config);
    ModelFactory factory = [&](SeededRng& rng) {
        return model_from_config(opt.arch, result.best_config, full.height(), full.width(), 10,
                                 rng);
    };
    std::printf("final training of the winner (3 seeds)...\n");
    run_and_save_trials(factory, full, final_cfg, {opt.seed, opt.seed + 1, opt.seed + 2},
                        opt.task, opt.out + "/final");
    std::printf("outputs written to %s\n", opt.out.c_str());
}

// ------------------------------------------------------------------- report

struct ReportOpts {
    std::vector<std::string> in;
    std::string format = "markdown";
    std::string out;
};

struct RunSummary {
    std::string dir, arch, task;
    std::map<std::string, double> metrics;  // accuracy, roc_auc, f1, loss
};

RunSummary load_run_summary(const std::string& dir) {
    RunSummary run;
    run.dir = dir;
    const std::string summary_path = dir + "/summary.json";
    const std::string report_path = dir + "/report.json";
    nlohmann::json j;
    if (fs::exists(summary_path)) {
        j = nlohmann::json::parse(read_text_file(summary_path));
        run.arch = j.value("arch", "?");
        run.task = j.value("task", "?");
        for (const std::string m : {"accuracy", "roc_auc", "f1", "loss"})
            if (j["metrics"].contains(m)) run.metrics[m] = j["metrics"][m]["mean"].get<double>();
    } else if (fs::exists(report_path)) {
        j = nlohmann::json::parse(read_text_file(report_path));
        run.arch = j.value("arch", "?");
        run.task = j.value("task", "?");
        for (const std::string m : {"accuracy", "roc_auc", "f1", "loss"})
            if (j["final_val"].contains(m)) run.metrics[m] = j["final_val"][m].get<double>();
    } else {
        throw FormatError("no summary.json or report.json under " + dir);
    }
    return run;
}

void cmd_report(const ReportOpts& opt) {
    {
        std::vector<std::pair<std::string, std::string>> echo = {{"format", opt.format}};
        for (std::size_t i = 0; i < opt.in.size(); ++i)
            echo.emplace_back("in[" + std::to_string(i) + "]", opt.in[i]);
        echo_config("report", echo);
    }
    if (opt.format != "csv" && opt.format != "json" && opt.format != "markdown")
        throw ConfigError("--format must be csv, json, or markdown");

    std::vector<RunSummary> runs;
    for (const std::string& dir : opt.in) runs.push_back(load_run_summary(dir));
    if (runs.empty()) throw ConfigError("report needs at least one --in directory");

    // columns present in every run; warn about what had to be dropped
    std::vector<std::string> cols;
    for (const std::string m : {"accuracy", "roc_auc", "f1", "loss"}) {
        bool everywhere = true;
        for (const RunSummary& r : runs)
            if (!r.metrics.count(m)) {
                std::fprintf(stderr, "warning: %s lacks metric '%s'; column omitted\n",
                             r.dir.c_str(), m.c_str());
                everywhere = false;
            }
        if (everywhere) cols.push_back(m);
    }

    const RunSummary* wavpool_run = nullptr;
    for (const RunSummary& r : runs)
        if (r.arch == "wavpool") {
            wavpool_run = &r;
            break;
        }
    if (!wavpool_run)
        std::fprintf(stderr, "warning: no wavpool run supplied; relative table omitted\n");

    // relative gain (wavpool - other)/other; for loss a lower wavpool value
    // goes negative, which is the good direction
    std::vector<std::pair<std::string, std::map<std::string, double>>> relative;
    if (wavpool_run)
        for (const RunSummary& r : runs) {
            if (&r == wavpool_run) continue;
            std::map<std::string, double> deltas;
            for (const std::string& m : cols)
                if (r.metrics.at(m) != 0)
                    deltas[m] = (wavpool_run->metrics.at(m) - r.metrics.at(m)) / r.metrics.at(m);
            relative.emplace_back(r.arch + " (" + r.task + ")", deltas);
        }

    std::string rendered;
    char buf[160];
    if (opt.format == "json") {
        nlohmann::json j;
        for (const RunSummary& r : runs)
            j["runs"].push_back({{"dir", r.dir}, {"arch", r.arch}, {"task", r.task},
                                 {"metrics", r.metrics}});
        for (const auto& [name, deltas] : relative)
            j["wavpool_relative_gain"].push_back({{"vs", name}, {"deltas", deltas}});
        rendered = j.dump(2) + "\n";
    } else if (opt.format == "csv") {
        rendered = "run,arch,task";
        for (const std::string& m : cols) rendered += "," + m;
        rendered += "\n";
        for (const RunSummary& r : runs) {
            rendered += r.dir + "," + r.arch + "," + r.task;
            for (const std::string& m : cols) {
                std::snprintf(buf, sizeof(buf), ",%.17g", r.metrics.at(m));
                rendered += buf;
            }
            rendered += "\n";
        }
        for (const auto& [name, deltas] : relative) {
            rendered += "wavpool_vs_" + name + ",,";
            for (const std::string& m : cols) {
                if (deltas.count(m))
                    std::snprintf(buf, sizeof(buf), ",%.17g", deltas.at(m));
                else
                    std::snprintf(buf, sizeof(buf), ",");
                rendered += buf;
            }
            rendered += "\n";
        }
    } else {  // markdown
        auto header = [&cols](const std::string& first) {
            std::string h = "| " + first + " |";
            std::string sep = "| --- |";
            for (const std::string& m : cols) {
                h += " " + m + " |";
                sep += " --- |";
            }
            return h + "\n" + sep + "\n";
        };
        rendered = header("run");
        for (const RunSummary& r : runs) {
            rendered += "| " + r.arch + " (" + r.task + ") |";
            for (const std::string& m : cols) {
                std::snprintf(buf, sizeof(buf), " %.4f |", r.metrics.at(m));
                rendered += buf;
            }
            rendered += "\n";
        }
        if (!relative.empty()) {
            rendered += "\nFractional gain of wavpool over each other run"
                        " ((wavpool - other)/other; loss: negative is better):\n\n";
            rendered += header("vs");
            for (const auto& [name, deltas] : relative) {
                rendered += "| " + name + " |";
                for (const std::string& m : cols) {
                    if (deltas.count(m))
                        std::snprintf(buf, sizeof(buf), " %+.4f |", deltas.at(m));
                    else
                        std::snprintf(buf, sizeof(buf), " n/a |");
                    rendered += buf;
                }
                rendered += "\n";
            }
        }
    }
    std::fputs(rendered.c_str(), stdout);
    if (!opt.out.empty()) {
        write_text_file(opt.out, rendered);
        std::printf("report written to %s\n", opt.out.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavpool: wavelet multi-resolution networks on small image tasks"};
    app.require_subcommand(1);

    DecomposeOpts dec;
    CLI::App* c_dec = app.add_subcommand("decompose", "write a multi-resolution decomposition");
    c_dec->add_option("--input", dec.input, "grayscale image: .pgm (P2/P5) or float grid")
        ->required();
    c_dec->add_option("--out", dec.out, "output directory")->required();
    c_dec->add_option("--levels", dec.levels, "only the first N levels (default: all)");

    ReconstructOpts rec;
    CLI::App* c_rec = app.add_subcommand("reconstruct", "rebuild an image from a decomposition");
    c_rec->add_option("--in", rec.in, "decomposition directory")->required();
    c_rec->add_option("--out", rec.out, "output grid file")->required();
    c_rec->add_option("--reference", rec.reference, "original image to compare against");

    TrainOpts tr;
    CLI::App* c_tr = app.add_subcommand("train", "train one architecture on one task");
    c_tr->add_option("--task", tr.task, "mnist, fashion, or cifar10")
        ->required()
        ->check(CLI::IsMember({"mnist", "fashion", "cifar10"}));
    c_tr->add_option("--arch", tr.arch, "wavpool, mlp, or cnn")
        ->required()
        ->check(CLI::IsMember({"wavpool", "mlp", "cnn"}));
    c_tr->add_option("--seed", tr.seed, "base random seed (default 0)");
    c_tr->add_option("--config", tr.config_file, "flat key=value config file");
    c_tr->add_option("--out", tr.out, "output directory")->required();
    c_tr->add_option("--trials", tr.trials, "trials with seeds S, S+1, ... (default 1)");
    c_tr->add_option("--data-dir", tr.data_dir, "dataset root (or WAVPOOL_DATA_DIR)");

    EvaluateOpts ev;
    CLI::App* c_ev = app.add_subcommand("evaluate", "score a checkpoint on a dataset split");
    c_ev->add_option("--checkpoint", ev.checkpoint, "checkpoint directory")->required();
    c_ev->add_option("--task", ev.task, "mnist, fashion, or cifar10")
        ->required()
        ->check(CLI::IsMember({"mnist", "fashion", "cifar10"}));
    c_ev->add_option("--split", ev.split, "val (checkpoint seed's split) or test");
    c_ev->add_option("--batch-size", ev.batch_size, "evaluation batch size (default 64)");
    c_ev->add_option("--out", ev.out, "directory for metrics.json + confusion.csv");
    c_ev->add_option("--data-dir", ev.data_dir, "dataset root (or WAVPOOL_DATA_DIR)");

    HpoOpts hp;
    CLI::App* c_hp = app.add_subcommand("hpo", "hyperparameter search plus final training");
    c_hp->add_option("--task", hp.task, "mnist, fashion, or cifar10")
        ->required()
        ->check(CLI::IsMember({"mnist", "fashion", "cifar10"}));
    c_hp->add_option("--arch", hp.arch, "wavpool, mlp, or cnn")
        ->required()
        ->check(CLI::IsMember({"wavpool", "mlp", "cnn"}));
    c_hp->add_option("--budget", hp.budget, "number of trials (default 25)");
    c_hp->add_option("--strategy", hp.strategy, "random or gp (default gp)")
        ->check(CLI::IsMember({"random", "gp", "gp_ei"}));
    c_hp->add_option("--seed", hp.seed, "search seed (default 0)");
    c_hp->add_option("--out", hp.out, "output directory")->required();
    c_hp->add_flag("--resume", hp.resume, "replay completed trials from the log");
    c_hp->add_option("--data-dir", hp.data_dir, "dataset root (or WAVPOOL_DATA_DIR)");

    ReportOpts rp;
    CLI::App* c_rp = app.add_subcommand("report", "compare finished runs");
    c_rp->add_option("--in", rp.in, "run directories (summary.json or report.json)")
        ->required()
        ->expected(-1);
    c_rp->add_option("--format", rp.format, "csv, json, or markdown (default)");
    c_rp->add_option("--out", rp.out, "also write the table to this file");

    try {
        app.parse(argc, argv);
        tr.seed_given = c_tr->count("--seed") > 0;
        if (app.got_subcommand(c_dec)) cmd_decompose(dec);
        else if (app.got_subcommand(c_rec)) cmd_reconstruct(rec);
        else if (app.got_subcommand(c_tr)) cmd_train(tr);
        else if (app.got_subcommand(c_ev)) cmd_evaluate(ev);
        else if (app.got_subcommand(c_hp)) cmd_hpo(hp);
        else if (app.got_subcommand(c_rp)) cmd_report(rp);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
    return 0;
}
