#include "wavpool/dataset.hpp"

#include <cstdlib>
#include <fstream>

#include "wavpool/errors.hpp"

namespace wavpool {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::uint64_t fnv1a(const std::vector<unsigned char>& bytes, std::uint64_t h) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}
constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& path) {
    if (off + 4 > b.size()) throw FormatError("truncated header in " + path);
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        const std::string& name) {
    auto ib = read_file(images_path);
    auto lb = read_file(labels_path);

    if (be32(ib, 0, images_path) != 0x00000803u)
        throw FormatError("bad IDX image magic in " + images_path +
                          " (expected 0x00000803)");
    if (be32(lb, 0, labels_path) != 0x00000801u)
        throw FormatError("bad IDX label magic in " + labels_path +
                          " (expected 0x00000801)");

    const std::size_t n = be32(ib, 4, images_path);
    const std::size_t h = be32(ib, 8, images_path);
    const std::size_t w = be32(ib, 12, images_path);
    if (ib.size() != 16 + n * h * w)
        throw FormatError("truncated IDX image file " + images_path + ": header promises " +
                          std::to_string(16 + n * h * w) + " bytes, file has " +
                          std::to_string(ib.size()));

    const std::size_t nl = be32(lb, 4, labels_path);
    if (lb.size() != 8 + nl)
        throw FormatError("truncated IDX label file " + labels_path);
    if (n != nl)
        throw DataConsistencyError("image/label count mismatch: " + std::to_string(n) +
                                   " images vs " + std::to_string(nl) + " labels");

    LabeledDataset ds;
    ds.name = name;
    ds.images = Tensor({n, h, w});
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n * h * w; ++i)
        ds.images[i] = static_cast<double>(ib[16 + i]) / 255.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = lb[8 + i];
        if (label < 0 || label >= 10)
            throw LabelError("label " + std::to_string(label) + " out of range [0, 10) in " +
                             labels_path);
        ds.labels[i] = label;
    }
    ds.source_digest = fnv1a(lb, fnv1a(ib, kFnvOffset));
    return ds;
}

LabeledDataset load_cifar10_gray(const std::vector<std::string>& batch_paths,
                                 const std::string& name) {
    constexpr std::size_t kRecord = 3073, kPlane = 1024, kSide = 32;
    LabeledDataset ds;
    ds.name = name;
    ds.source_digest = kFnvOffset;

    std::vector<double> pixels;
    for (const auto& path : batch_paths) {
        auto bytes = read_file(path);
        if (bytes.empty() || bytes.size() % kRecord != 0)
            throw FormatError("CIFAR batch " + path + " size " + std::to_string(bytes.size()) +
                              " is not a multiple of " + std::to_string(kRecord));
        ds.source_digest = fnv1a(bytes, ds.source_digest);
        const std::size_t records = bytes.size() / kRecord;
        for (std::size_t r = 0; r < records; ++r) {
            const unsigned char* rec = bytes.data() + r * kRecord;
            const int label = rec[0];
            if (label >= 10)
                throw LabelError("label " + std::to_string(label) + " out of range [0, 10) in " +
                                 path);
            ds.labels.push_back(label);
            for (std::size_t p = 0; p < kPlane; ++p) {
                const double luma = 0.299 * rec[1 + p] + 0.587 * rec[1 + kPlane + p] +
                                    0.114 * rec[1 + 2 * kPlane + p];
                pixels.push_back(luma / 255.0);
            }
        }
    }
    ds.images = Tensor({ds.labels.size(), kSide, kSide}, std::move(pixels));
    return ds;
}

LabeledDataset gather(const LabeledDataset& ds, const std::vector<std::size_t>& indices) {
    const std::size_t h = ds.height(), w = ds.width(), plane = h * w;
    LabeledDataset out;
    out.name = ds.name;
    out.source_digest = ds.source_digest;
    out.images = Tensor({indices.size(), h, w});
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= ds.size())
            throw IndexError("gather index " + std::to_string(src) + " out of range for " +
                             std::to_string(ds.size()) + " images");
        std::copy(ds.images.data() + src * plane, ds.images.data() + (src + 1) * plane,
                  out.images.data() + i * plane);
        out.labels[i] = ds.labels[src];
    }
    return out;
}

std::pair<LabeledDataset, LabeledDataset> subset_split(const LabeledDataset& ds,
                                                       const SplitSpec& spec) {
    if (spec.n_train + spec.n_val > ds.size())
        throw DataConsistencyError("split needs " + std::to_string(spec.n_train + spec.n_val) +
                                   " images but dataset '" + ds.name + "' has " +
                                   std::to_string(ds.size()));
    SeededRng rng(spec.seed);
    auto perm = rng.permutation(ds.size());
    std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + spec.n_train);
    std::vector<std::size_t> val_idx(perm.begin() + spec.n_train,
                                     perm.begin() + spec.n_train + spec.n_val);
    auto train = gather(ds, train_idx);
    auto val = gather(ds, val_idx);
    train.name = ds.name + ":train";
    val.name = ds.name + ":val";
    return {std::move(train), std::move(val)};
}

std::string resolve_data_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("WAVPOOL_DATA_DIR"); env && *env) return env;
    throw ConfigError("no data directory: pass --data-dir or set WAVPOOL_DATA_DIR");
}

LabeledDataset load_task(const std::string& task, const std::string& data_dir, bool test_split) {
    const std::string root = data_dir + "/";
    if (task == "mnist" || task == "fashion") {
        const std::string stem = test_split ? "t10k" : "train";
        return load_idx(root + task + "/" + stem + "-images-idx3-ubyte",
                        root + task + "/" + stem + "-labels-idx1-ubyte",
                        task + (test_split ? ":test" : ""));
    }
    if (task == "cifar10") {
        std::vector<std::string> paths;
        if (test_split) {
            paths.push_back(root + "cifar10/test_batch.bin");
        } else {
            for (int i = 1; i <= 5; ++i)
                paths.push_back(root + "cifar10/data_batch_" + std::to_string(i) + ".bin");
        }
        return load_cifar10_gray(paths, "cifar10" + std::string(test_split ? ":test" : ""));
    }
    throw ConfigError("unknown task '" + task + "' (expected mnist, fashion, or cifar10)");
}

}  // namespace wavpool
