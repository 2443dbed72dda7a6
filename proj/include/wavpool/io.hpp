#pragma once

#include <map>
#include <memory>
#include <string>

#include "wavpool/models.hpp"
#include "wavpool/wavelet.hpp"

namespace wavpool {

// --- grayscale inputs -------------------------------------------------------

// Portable graymap (P2 ascii or P5 binary, maxval up to 65535); samples are
// normalized to [0, 1] by maxval.
Tensor read_pgm(const std::string& path);

// Plain-text grid: one image row per line, whitespace-separated numbers.
Tensor read_float_grid(const std::string& path);
void write_float_grid(const std::string& path, const Tensor& grid);

// Dispatches on the PGM magic and falls back to the float-grid reader.
Tensor read_image_grid(const std::string& path);

// --- decomposition directories ---------------------------------------------

// Layout: manifest.json plus one grid file per view (smooth.grid,
// level<l>_v.grid / _h.grid / _d.grid, levels 1-based finest-first). The
// manifest records shapes, level order, the filter normalization, and the
// per-level padding so the directory reconstructs exactly.
void write_mrd(const std::string& dir, const MRDecomposition& mrd);
MRDecomposition read_mrd(const std::string& dir);

// --- checkpoints ------------------------------------------------------------

// A checkpoint directory holds manifest.json (arch + full model config +
// seed/epoch + a tensor table) and one raw little-endian float64 blob per
// parameter and state buffer, keyed by its name.
void save_checkpoint(const std::string& dir, Model& model, int seed, int epoch);

struct Checkpoint {
    std::unique_ptr<Model> model;
    int seed = 0;
    int epoch = 0;
    std::map<std::string, std::string> config;
};
Checkpoint load_checkpoint(const std::string& dir);

// Rebuilds a model from the flat key-value form emitted by config_kv().
std::unique_ptr<Model> build_model_from_kv(const std::map<std::string, std::string>& kv,
                                           SeededRng& rng);

// --- small file helpers -----------------------------------------------------

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Flat key=value config file: '#' lines are comments, blanks ignored,
// duplicate keys rejected.
std::map<std::string, std::string> read_kv_config(const std::string& path);

}  // namespace wavpool
