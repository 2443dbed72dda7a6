#pragma once

// Dataset ingestion: IDX image/label pairs (MNIST and Fashion-MNIST layout),
// CIFAR-10 binary batches converted to grayscale, and seeded train/validation
// subset splitting. All pixel values are normalized to [0, 1] float64.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wavpool/tensor.hpp"

namespace wavpool {

struct LabeledDataset {
    Tensor images;            // N×H×W
    std::vector<int> labels;  // each in [0, 10)
    std::string name;
    std::uint64_t source_digest = 0;  // FNV-1a 64-bit over the raw input files

    std::size_t size() const { return labels.size(); }
    std::size_t height() const { return images.dim(1); }
    std::size_t width() const { return images.dim(2); }
};

struct SplitSpec {
    std::uint64_t seed = 0;
    std::size_t n_train = 4000;
    std::size_t n_val = 2000;
};

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        const std::string& name);

// Each batch file holds 3073-byte records: 1 label byte, then 32×32 red,
// green, and blue planes. Grayscale via ITU-R BT.601 luma weights.
LabeledDataset load_cifar10_gray(const std::vector<std::string>& batch_paths,
                                 const std::string& name);

// Deterministic shuffle by SeededRng(seed); the first n_train indices form the
// train set and the next n_val the validation set (always disjoint).
std::pair<LabeledDataset, LabeledDataset> subset_split(const LabeledDataset& ds,
                                                       const SplitSpec& spec);

// Copy of the rows selected by `indices`, in order.
LabeledDataset gather(const LabeledDataset& ds, const std::vector<std::size_t>& indices);

// Resolves the dataset root: explicit flag value if non-empty, else the
// WAVPOOL_DATA_DIR environment variable.
std::string resolve_data_dir(const std::string& flag_value);

// Loads one of the named tasks from its conventional file layout under
// `data_dir`: mnist/ and fashion/ hold IDX files (train-images-idx3-ubyte,
// train-labels-idx1-ubyte, t10k-…), cifar10/ holds data_batch_1..5.bin and
// test_batch.bin.
LabeledDataset load_task(const std::string& task, const std::string& data_dir, bool test_split);

}  // namespace wavpool
