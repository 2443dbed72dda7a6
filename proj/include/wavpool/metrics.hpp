#pragma once

// Classification metrics: accuracy, macro F1, confusion matrix, and macro
// one-vs-rest ROC AUC computed with the Mann-Whitney rank statistic
// (tied scores contribute 1/2).

#include <vector>

#include "wavpool/tensor.hpp"

namespace wavpool {

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// Averages per-class F1 over all `num_classes` classes; a class with no true
// and no predicted members contributes 0.
double f1_macro(const std::vector<int>& preds, const std::vector<int>& labels,
                std::size_t num_classes);

// rows = true class, columns = predicted class
Tensor confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                 std::size_t num_classes);

// scores: N×K (higher = more confident). Classes absent from `labels` (or
// covering all of them) have no defined AUC and are excluded from the macro
// average; their indices are appended to *excluded when provided.
double roc_auc_macro(const Tensor& scores, const std::vector<int>& labels,
                     std::vector<int>* excluded = nullptr);

}  // namespace wavpool
