#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "wavpool/tensor.hpp"

namespace wavpool {

// The four 2x2 analysis filters of a separable wavelet with n_v vanishing
// moments. Only Haar (n_v = 1) coefficients are shipped; the struct admits
// longer filters so other members of the family can be added later.
struct WaveletFilters2D {
    Tensor smooth;    // local average
    Tensor detail_v;  // vertical differences (between rows)
    Tensor detail_h;  // horizontal differences (between columns)
    Tensor detail_d;  // diagonal differences
    int vanishing_moments = 1;

    std::size_t length() const { return smooth.dim(0); }
};

// One level's three oriented detail maps; all share a shape.
struct DetailTriple {
    Tensor v, h, d;
};

// Rows/columns appended to make an odd extent even before one level.
struct PadRecord {
    std::size_t rows = 0;
    std::size_t cols = 0;
};

// Full multi-resolution decomposition: the final smooth view plus L levels
// of detail triples. Levels are stored finest-first (levels[0] is scale 1);
// the smooth view is the result of all L smoothing passes.
struct MRDecomposition {
    Tensor smooth;
    std::vector<DetailTriple> levels;
    std::pair<std::size_t, std::size_t> input_shape;
    std::vector<PadRecord> pad_log;  // one entry per level

    std::size_t level_count() const { return levels.size(); }
    // Element count of smooth plus every detail map.
    std::size_t total_elements() const;
};

// 1D Haar pair: smooth = (1 1)/sqrt(2), detail obtained by reversing the
// smooth filter with alternating parity.
std::pair<Tensor, Tensor> haar_filters_1d();

// 2D filters from outer products of the 1D pair; every entry is +-1/2 and
// the set is orthonormal and self-inverse.
WaveletFilters2D haar_filters_2d();

// Number of decomposition levels: floor(log2(min(H, W))) - n_v + 1.
// Throws SignalTooSmallError when the result would be < 1.
int level_count(std::size_t height, std::size_t width, int vanishing_moments);

// One analysis step: pad odd extents even (edge replication, recorded),
// then convolve all four filters with stride 2.
struct LevelResult {
    Tensor smooth;
    DetailTriple details;
    PadRecord pad;
};
LevelResult decompose_level(const Tensor& smooth_prev, const WaveletFilters2D& filters);

// Full L-level decomposition of a 2D signal.
MRDecomposition decompose(const Tensor& signal, const WaveletFilters2D& filters);

// Exact inverse of decompose: expands level by level from the coarsest
// scale, trimming any padded rows/columns. Output shape == input_shape.
Tensor reconstruct(const MRDecomposition& mrd, const WaveletFilters2D& filters);

// Rebuild the level-(l-1) smooth view from one level's outputs. Exposed for
// the per-level inversion property; reconstruct() iterates this.
Tensor invert_level(const Tensor& smooth, const DetailTriple& details,
                    const WaveletFilters2D& filters, const PadRecord& pad);

enum class Orientation { vertical, horizontal, diagonal };

// Row-major flattening of one detail map; level is 1-based.
Tensor flatten_details(const MRDecomposition& mrd, int level, Orientation orientation);

}  // namespace wavpool
