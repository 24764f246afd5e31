#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace gas {

// Dense row-major float matrix. Used for node features, history storage and
// oracle buffers; gradient-carrying tensors live in tensor.hpp.
struct DenseMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<float> values;

    DenseMatrix() = default;
    DenseMatrix(std::int64_t r, std::int64_t c, float fill = 0.0f)
        : rows(r), cols(c), values(static_cast<std::size_t>(r * c), fill) {}

    float* row(std::int64_t r) { return values.data() + r * cols; }
    const float* row(std::int64_t r) const { return values.data() + r * cols; }

    std::span<float> row_span(std::int64_t r) {
        return {row(r), static_cast<std::size_t>(cols)};
    }
    std::span<const float> row_span(std::int64_t r) const {
        return {row(r), static_cast<std::size_t>(cols)};
    }

    float& at(std::int64_t r, std::int64_t c) { return values[r * cols + c]; }
    float at(std::int64_t r, std::int64_t c) const { return values[r * cols + c]; }

    bool all_finite() const {
        for (float v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Node features: one row per node.
using FeatureMatrix = DenseMatrix;

inline void require_finite(const DenseMatrix& m, const char* what) {
    if (!m.all_finite()) throw std::runtime_error(std::string(what) + ": non-finite value");
}

}  // namespace gas
