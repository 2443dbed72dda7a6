#include "wavpool/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "wavpool/errors.hpp"

namespace wavpool {

namespace {

void require_same_length(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.size() != labels.size())
        throw DataConsistencyError("metric inputs differ in length: " +
                                   std::to_string(preds.size()) + " predictions vs " +
                                   std::to_string(labels.size()) + " labels");
    if (preds.empty()) throw DataConsistencyError("metric inputs are empty");
}

}  // namespace

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    require_same_length(preds, labels);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double f1_macro(const std::vector<int>& preds, const std::vector<int>& labels,
                std::size_t num_classes) {
    require_same_length(preds, labels);
    std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int p = preds[i], t = labels[i];
        if (p == t)
            ++tp[p];
        else {
            ++fp[p];
            ++fn[t];
        }
    }
    double sum = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
        if (denom > 0) sum += 2.0 * static_cast<double>(tp[c]) / denom;
        // empty classes (no true or predicted members) contribute 0
    }
    return sum / static_cast<double>(num_classes);
}

Tensor confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                 std::size_t num_classes) {
    require_same_length(preds, labels);
    Tensor m = Tensor::zeros({num_classes, num_classes});
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes ||
            preds[i] < 0 || static_cast<std::size_t>(preds[i]) >= num_classes)
            throw LabelError("class index out of range in confusion matrix input");
        m.at(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(preds[i])) += 1.0;
    }
    return m;
}

double roc_auc_macro(const Tensor& scores, const std::vector<int>& labels,
                     std::vector<int>* excluded) {
    if (scores.rank() != 2)
        throw DimensionError("roc_auc_macro expects N x K scores, got " + scores.shape_str());
    const std::size_t n = scores.dim(0), k = scores.dim(1);
    if (labels.size() != n)
        throw DataConsistencyError("roc_auc_macro got " + std::to_string(n) + " rows but " +
                                   std::to_string(labels.size()) + " labels");
    if (k < 2) throw DimensionError("roc_auc_macro needs at least 2 classes");
    if (!scores.all_finite())
        throw DataConsistencyError("roc_auc_macro requires finite scores");

    double total = 0;
    std::size_t classes_used = 0;
    std::vector<std::size_t> order(n);
    std::vector<double> ranks(n);

    for (std::size_t c = 0; c < k; ++c) {
        std::size_t n_pos = 0;
        for (int y : labels)
            if (static_cast<std::size_t>(y) == c) ++n_pos;
        const std::size_t n_neg = n - n_pos;
        if (n_pos == 0 || n_neg == 0) {
            if (excluded) excluded->push_back(static_cast<int>(c));
            continue;
        }

        std::iota(order.begin(), order.end(), 0);
        const double* col_base = scores.data();
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double sa = col_base[a * k + c], sb = col_base[b * k + c];
            if (sa != sb) return sa < sb;
            return a < b;  // deterministic tie order (ranks average it away)
        });
        // average ranks over tied score groups (1-based ranks)
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            const double s = col_base[order[i] * k + c];
            while (j < n && col_base[order[j] * k + c] == s) ++j;
            const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
            for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
            i = j;
        }
        double rank_sum_pos = 0;
        for (std::size_t t = 0; t < n; ++t)
            if (static_cast<std::size_t>(labels[t]) == c) rank_sum_pos += ranks[t];
        const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
        total += (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
        ++classes_used;
    }
    if (classes_used == 0)
        throw DataConsistencyError("roc_auc_macro: no class has both positive and negative examples");
    return total / static_cast<double>(classes_used);
}

}  // namespace wavpool
