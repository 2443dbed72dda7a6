#include "wavpool/wavelet.hpp"

#include <cmath>
#include <string>

namespace wavpool {

std::size_t MRDecomposition::total_elements() const {
    std::size_t n = smooth.size();
    for (const auto& lvl : levels) n += lvl.v.size() + lvl.h.size() + lvl.d.size();
    return n;
}

std::pair<Tensor, Tensor> haar_filters_1d() {
    const double c = 1.0 / std::sqrt(2.0);
    Tensor smooth({2}, {c, c});
    // detail_i = (-1)^i * smooth_{N-1-i}: reversal with alternating parity.
    Tensor detail({2}, {c, -c});
    return {smooth, detail};
}

namespace {

Tensor outer(const Tensor& a, const Tensor& b) {
    Tensor out({a.dim(0), b.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < b.dim(0); ++j) out.at(i, j) = a[i] * b[j];
    return out;
}

}  // namespace

WaveletFilters2D haar_filters_2d() {
    auto [phi, psi] = haar_filters_1d();
    WaveletFilters2D f;
    f.smooth = outer(phi, phi);
    f.detail_v = outer(psi, phi);  // differences between rows
    f.detail_h = outer(phi, psi);  // differences between columns
    f.detail_d = outer(psi, psi);
    f.vanishing_moments = 1;
    return f;
}

int level_count(std::size_t height, std::size_t width, int vanishing_moments) {
    if (height < 2 || width < 2) {
        throw SignalTooSmallError("signal [" + std::to_string(height) + "x" +
                                  std::to_string(width) + "] too small to decompose");
    }
    if (vanishing_moments < 1) throw ConfigError("vanishing moments must be >= 1");
    const std::size_t extent = std::min(height, width);
    int levels = 0;
    for (std::size_t e = extent; e >= 2; e /= 2) ++levels;  // floor(log2(extent))
    levels = levels - vanishing_moments + 1;
    if (levels < 1) {
        throw SignalTooSmallError("signal [" + std::to_string(height) + "x" +
                                  std::to_string(width) + "] too small for a wavelet with " +
                                  std::to_string(vanishing_moments) + " vanishing moments");
    }
    return levels;
}

namespace {

Tensor trim(const Tensor& t, std::size_t rows, std::size_t cols) {
    if (rows == 0 && cols == 0) return t;
    const std::size_t h = t.dim(0) - rows, w = t.dim(1) - cols;
    Tensor out({h, w});
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) out.at(i, j) = t.at(i, j);
    return out;
}

// Append replicated last row/column until both extents are even.
Tensor pad_to_even(const Tensor& t, PadRecord& pad) {
    const std::size_t h = t.dim(0), w = t.dim(1);
    pad.rows = h % 2;
    pad.cols = w % 2;
    if (pad.rows == 0 && pad.cols == 0) return t;
    Tensor out({h + pad.rows, w + pad.cols});
    for (std::size_t i = 0; i < h + pad.rows; ++i) {
        const std::size_t si = std::min(i, h - 1);
        for (std::size_t j = 0; j < w + pad.cols; ++j) {
            out.at(i, j) = t.at(si, std::min(j, w - 1));
        }
    }
    return out;
}

// Stride-2 valid cross-correlation with a 2x2 kernel on an even-extent input.
Tensor analyze(const Tensor& input, const Tensor& kernel) {
    return conv2d(input, kernel, 2, PaddingMode::none);
}

}  // namespace

LevelResult decompose_level(const Tensor& smooth_prev, const WaveletFilters2D& filters) {
    if (smooth_prev.rank() != 2) {
        throw DimensionError("decompose_level expects a 2D signal, got " + smooth_prev.shape_str());
    }
    if (smooth_prev.dim(0) < 2 || smooth_prev.dim(1) < 2) {
        throw SignalTooSmallError("cannot decompose level of shape " + smooth_prev.shape_str());
    }
    LevelResult r;
    const Tensor padded = pad_to_even(smooth_prev, r.pad);
    r.smooth = analyze(padded, filters.smooth);
    r.details.v = analyze(padded, filters.detail_v);
    r.details.h = analyze(padded, filters.detail_h);
    r.details.d = analyze(padded, filters.detail_d);
    return r;
}

MRDecomposition decompose(const Tensor& signal, const WaveletFilters2D& filters) {
    if (signal.rank() != 2) {
        throw DimensionError("decompose expects a 2D signal, got " + signal.shape_str());
    }
    const int levels = level_count(signal.dim(0), signal.dim(1), filters.vanishing_moments);
    MRDecomposition mrd;
    mrd.input_shape = {signal.dim(0), signal.dim(1)};
    Tensor current = signal;
    for (int l = 0; l < levels; ++l) {
        LevelResult r = decompose_level(current, filters);
        mrd.levels.push_back(std::move(r.details));
        mrd.pad_log.push_back(r.pad);
        current = std::move(r.smooth);
    }
    mrd.smooth = std::move(current);
    return mrd;
}

Tensor invert_level(const Tensor& smooth, const DetailTriple& details,
                    const WaveletFilters2D& filters, const PadRecord& pad) {
    if (!details.v.same_shape(details.h) || !details.v.same_shape(details.d) ||
        !smooth.same_shape(details.v)) {
        throw CorruptionError("inconsistent shapes within a decomposition level: smooth " +
                              smooth.shape_str() + ", details " + details.v.shape_str() + "/" +
                              details.h.shape_str() + "/" + details.d.shape_str());
    }
    const std::size_t h = smooth.dim(0), w = smooth.dim(1);
    Tensor up({2 * h, 2 * w});
    // Each coefficient re-scales its filter over the 2x2 block it came from;
    // for Haar the analysis filters are their own inverses.
    const Tensor* coeffs[4] = {&smooth, &details.v, &details.h, &details.d};
    const Tensor* kernels[4] = {&filters.smooth, &filters.detail_v, &filters.detail_h,
                                &filters.detail_d};
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            for (int f = 0; f < 4; ++f) {
                const double c = coeffs[f]->at(i, j);
                const Tensor& k = *kernels[f];
                up.at(2 * i, 2 * j) += c * k.at(0, 0);
                up.at(2 * i, 2 * j + 1) += c * k.at(0, 1);
                up.at(2 * i + 1, 2 * j) += c * k.at(1, 0);
                up.at(2 * i + 1, 2 * j + 1) += c * k.at(1, 1);
            }
        }
    }
    return trim(up, pad.rows, pad.cols);
}

Tensor reconstruct(const MRDecomposition& mrd, const WaveletFilters2D& filters) {
    if (mrd.levels.empty()) throw CorruptionError("decomposition has no levels");
    if (mrd.pad_log.size() != mrd.levels.size()) {
        throw CorruptionError("pad log length " + std::to_string(mrd.pad_log.size()) +
                              " does not match level count " + std::to_string(mrd.levels.size()));
    }
    Tensor current = mrd.smooth;
    for (std::size_t l = mrd.levels.size(); l-- > 0;) {
        const DetailTriple& d = mrd.levels[l];
        if (!current.same_shape(d.v)) {
            throw CorruptionError("smooth view " + current.shape_str() +
                                  " does not match level " + std::to_string(l + 1) + " details " +
                                  d.v.shape_str());
        }
        current = invert_level(current, d, filters, mrd.pad_log[l]);
    }
    if (current.dim(0) != mrd.input_shape.first || current.dim(1) != mrd.input_shape.second) {
        throw CorruptionError("reconstruction shape " + current.shape_str() +
                              " does not match recorded input shape");
    }
    return current;
}

Tensor flatten_details(const MRDecomposition& mrd, int level, Orientation orientation) {
    if (level < 1 || static_cast<std::size_t>(level) > mrd.levels.size()) {
        throw IndexError("detail level " + std::to_string(level) + " out of range [1, " +
                         std::to_string(mrd.levels.size()) + "]");
    }
    const DetailTriple& t = mrd.levels[static_cast<std::size_t>(level - 1)];
    const Tensor* src = nullptr;
    switch (orientation) {
        case Orientation::vertical: src = &t.v; break;
        case Orientation::horizontal: src = &t.h; break;
        case Orientation::diagonal: src = &t.d; break;
    }
    return src->reshaped({src->size()});
}

}  // namespace wavpool
