#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "gas/matrix.hpp"

namespace gas {

// Per-thread count of live floats held by tensors (values + grad buffers).
// Histories, graph structure and plain DenseMatrix buffers do not register,
// so the meter tracks batch activations and parameter state only.
namespace activation_meter {
std::int64_t current();
std::int64_t peak();
void reset_peak();  // peak := current
void add(std::int64_t n);
void sub(std::int64_t n);
}  // namespace activation_meter

// Dense row-major 2-D tensor with value semantics over shared storage.
// Gradients are allocated lazily during backward.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::int64_t rows, std::int64_t cols, bool requires_grad = false);
    static Tensor from_matrix(const DenseMatrix& m, bool requires_grad = false);
    static Tensor scalar(float value, bool requires_grad = false);

    bool defined() const { return d_ != nullptr; }
    std::int64_t rows() const;
    std::int64_t cols() const;
    std::int64_t size() const { return rows() * cols(); }

    float* data();
    const float* data() const;
    std::span<float> values();
    std::span<const float> values() const;
    float& at(std::int64_t r, std::int64_t c);
    float at(std::int64_t r, std::int64_t c) const;
    float scalar_value() const;  // requires 1x1

    bool requires_grad() const;
    void set_requires_grad(bool b);

    bool has_grad() const;
    float* grad();
    const float* grad() const;
    std::span<float> grad_span();
    void ensure_grad();  // allocate and zero if missing
    void zero_grad();    // zero if allocated

    DenseMatrix to_matrix() const;
    DenseMatrix grad_matrix() const;  // zeros if never populated

    bool same_storage(const Tensor& other) const { return d_ == other.d_; }

  private:
    struct Data;
    std::shared_ptr<Data> d_;
    explicit Tensor(std::shared_ptr<Data> d) : d_(std::move(d)) {}
    friend class Tape;
};

// Reverse-mode tape: ops append backward closures in recording order;
// backward() runs them once, in reverse. A consumed tape must be reset
// before recording again.
class Tape {
  public:
    void record(std::function<void()> backward_fn);
    // Seeds loss grad with 1 and propagates. loss must be scalar.
    void backward(Tensor& loss);
    void reset();
    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

  private:
    std::vector<std::function<void()>> nodes_;
    bool consumed_ = false;
};

// Sparse aggregation stencil: out[r] = sum_e coeffs[e] * X[cols[e]] over
// e in [row_ptr[r], row_ptr[r+1]). Built per batch plan by the layers.
struct AggPattern {
    std::vector<std::int64_t> row_ptr;  // num_dst + 1
    std::vector<std::int32_t> cols;     // source rows into X
    std::vector<float> coeffs;
    std::int64_t num_dst() const { return static_cast<std::int64_t>(row_ptr.size()) - 1; }
};

// ---- Differentiable ops. `tape` may be null for forward-only evaluation. ----

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& x, float c);
Tensor add_rowvec(Tape* tape, const Tensor& x, const Tensor& bias);  // bias 1 x cols
Tensor scale_by_scalar(Tape* tape, const Tensor& x, const Tensor& s);  // s 1x1
Tensor scalar_add_const(Tape* tape, const Tensor& s, float c);         // s 1x1
Tensor relu(Tape* tape, const Tensor& x);
// Inverted dropout with a per-call seed; identity when p == 0.
Tensor dropout(Tape* tape, const Tensor& x, float p, std::uint64_t seed);
Tensor row_concat(Tape* tape, const Tensor& a, const Tensor& b);  // per-row feature concat
Tensor select_rows(Tape* tape, const Tensor& x, std::span<const std::int32_t> rows);
// out[rows_a[i]] = a[i], out[rows_b[j]] = b[j]; positions must tile 0..total-1.
Tensor compose_rows(Tape* tape, std::int64_t total_rows,
                    std::span<const std::int32_t> rows_a, const Tensor& a,
                    std::span<const std::int32_t> rows_b, const Tensor& b);
Tensor aggregate(Tape* tape, const AggPattern& pattern, const Tensor& x);
Tensor frobenius_norm(Tape* tape, const Tensor& x);  // 1x1
Tensor sum_all(Tape* tape, const Tensor& x);         // 1x1
// Mean negative log-likelihood over the given logit rows.
Tensor softmax_cross_entropy(Tape* tape, const Tensor& logits,
                             std::span<const std::int32_t> rows,
                             std::span<const std::int32_t> labels);
// weight * sum of squared entries over all params.
Tensor l2_penalty(Tape* tape, std::span<const Tensor> params, float weight);

}  // namespace gas
