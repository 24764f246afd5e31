#include "gas/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gas/rng.hpp"

namespace gas {

namespace activation_meter {
namespace {
thread_local std::int64_t t_current = 0;
thread_local std::int64_t t_peak = 0;
}  // namespace
std::int64_t current() { return t_current; }
std::int64_t peak() { return t_peak; }
void reset_peak() { t_peak = t_current; }
void add(std::int64_t n) {
    t_current += n;
    if (t_current > t_peak) t_peak = t_current;
}
void sub(std::int64_t n) { t_current -= n; }
}  // namespace activation_meter

struct Tensor::Data {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<float> values;
    std::vector<float> grad;  // empty until needed
    bool requires_grad = false;

    Data(std::int64_t r, std::int64_t c, bool rg)
        : rows(r), cols(c), values(static_cast<std::size_t>(r * c), 0.0f), requires_grad(rg) {
        activation_meter::add(r * c);
    }
    ~Data() {
        activation_meter::sub(static_cast<std::int64_t>(values.size()) +
                              static_cast<std::int64_t>(grad.size()));
    }
    void ensure_grad() {
        if (grad.empty()) {
            grad.assign(values.size(), 0.0f);
            activation_meter::add(static_cast<std::int64_t>(grad.size()));
        }
    }
};

Tensor Tensor::zeros(std::int64_t rows, std::int64_t cols, bool requires_grad) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Tensor: negative shape");
    return Tensor(std::make_shared<Data>(rows, cols, requires_grad));
}

Tensor Tensor::from_matrix(const DenseMatrix& m, bool requires_grad) {
    Tensor t = zeros(m.rows, m.cols, requires_grad);
    std::copy(m.values.begin(), m.values.end(), t.d_->values.begin());
    return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
    Tensor t = zeros(1, 1, requires_grad);
    t.d_->values[0] = value;
    return t;
}

std::int64_t Tensor::rows() const { return d_->rows; }
std::int64_t Tensor::cols() const { return d_->cols; }
float* Tensor::data() { return d_->values.data(); }
const float* Tensor::data() const { return d_->values.data(); }
std::span<float> Tensor::values() { return {d_->values.data(), d_->values.size()}; }
std::span<const float> Tensor::values() const { return {d_->values.data(), d_->values.size()}; }
float& Tensor::at(std::int64_t r, std::int64_t c) { return d_->values[r * d_->cols + c]; }
float Tensor::at(std::int64_t r, std::int64_t c) const { return d_->values[r * d_->cols + c]; }

float Tensor::scalar_value() const {
    if (size() != 1) throw std::logic_error("Tensor: scalar_value on non-scalar");
    return d_->values[0];
}

bool Tensor::requires_grad() const { return d_->requires_grad; }
void Tensor::set_requires_grad(bool b) { d_->requires_grad = b; }
bool Tensor::has_grad() const { return !d_->grad.empty(); }
float* Tensor::grad() { return d_->grad.data(); }
const float* Tensor::grad() const { return d_->grad.data(); }
std::span<float> Tensor::grad_span() { return {d_->grad.data(), d_->grad.size()}; }
void Tensor::ensure_grad() { d_->ensure_grad(); }
void Tensor::zero_grad() {
    if (has_grad()) std::fill(d_->grad.begin(), d_->grad.end(), 0.0f);
}

DenseMatrix Tensor::to_matrix() const {
    DenseMatrix m(rows(), cols());
    std::copy(d_->values.begin(), d_->values.end(), m.values.begin());
    return m;
}

DenseMatrix Tensor::grad_matrix() const {
    DenseMatrix m(rows(), cols());
    if (has_grad()) std::copy(d_->grad.begin(), d_->grad.end(), m.values.begin());
    return m;
}

void Tape::record(std::function<void()> backward_fn) {
    if (consumed_) throw std::logic_error("Tape: recording after backward; reset first");
    nodes_.push_back(std::move(backward_fn));
}

void Tape::backward(Tensor& loss) {
    if (consumed_) throw std::logic_error("Tape: backward called twice without reset");
    if (loss.size() != 1) throw std::invalid_argument("Tape: loss must be scalar");
    consumed_ = true;
    loss.ensure_grad();
    loss.grad()[0] = 1.0f;
    for (std::size_t i = nodes_.size(); i-- > 0;) nodes_[i]();
}

void Tape::reset() {
    nodes_.clear();
    consumed_ = false;
}

namespace {

void check_finite(const Tensor& t, const char* op) {
    for (float v : t.values())
        if (!std::isfinite(v))
            throw std::runtime_error(std::string(op) + ": non-finite value in output");
}

bool wants_grad(Tape* tape, std::initializer_list<const Tensor*> inputs) {
    if (!tape) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

Tensor make_output(std::int64_t rows, std::int64_t cols, bool track) {
    return Tensor::zeros(rows, cols, track);
}

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
    bool track = wants_grad(tape, {&a, &b});
    Tensor y = make_output(m, n, track);

    std::vector<double> acc(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const float* arow = a.data() + i * k;
        for (std::int64_t t = 0; t < k; ++t) {
            const double av = arow[t];
            if (av == 0.0) continue;
            const float* brow = b.data() + t * n;
            for (std::int64_t j = 0; j < n; ++j) acc[j] += av * brow[j];
        }
        float* yrow = y.data() + i * n;
        for (std::int64_t j = 0; j < n; ++j) yrow[j] = static_cast<float>(acc[j]);
    }
    check_finite(y, "matmul");

    if (track) {
        Tensor ac = a, bc = b, yc = y;
        tape->record([ac, bc, yc, m, k, n]() mutable {
            if (!yc.has_grad()) return;
            const float* gy = yc.grad();
            if (ac.requires_grad()) {
                ac.ensure_grad();
                float* ga = ac.grad();
                for (std::int64_t i = 0; i < m; ++i) {
                    const float* gyrow = gy + i * n;
                    for (std::int64_t t = 0; t < k; ++t) {
                        const float* brow = bc.data() + t * n;
                        double acc = 0.0;
                        for (std::int64_t j = 0; j < n; ++j) acc += double(gyrow[j]) * brow[j];
                        ga[i * k + t] += static_cast<float>(acc);
                    }
                }
            }
            if (bc.requires_grad()) {
                bc.ensure_grad();
                std::vector<double> acc(static_cast<std::size_t>(k * n), 0.0);
                for (std::int64_t i = 0; i < m; ++i) {
                    const float* arow = ac.data() + i * k;
                    const float* gyrow = gy + i * n;
                    for (std::int64_t t = 0; t < k; ++t) {
                        const double av = arow[t];
                        if (av == 0.0) continue;
                        double* accrow = acc.data() + t * n;
                        for (std::int64_t j = 0; j < n; ++j) accrow[j] += av * gyrow[j];
                    }
                }
                float* gb = bc.grad();
                for (std::int64_t e = 0; e < k * n; ++e) gb[e] += static_cast<float>(acc[e]);
            }
        });
    }
    return y;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    bool track = wants_grad(tape, {&a, &b});
    Tensor y = make_output(a.rows(), a.cols(), track);
    const std::int64_t sz = a.size();
    for (std::int64_t i = 0; i < sz; ++i) y.data()[i] = a.data()[i] + b.data()[i];
    check_finite(y, "add");
    if (track) {
        Tensor ac = a, bc = b, yc = y;
        tape->record([ac, bc, yc, sz]() mutable {
            if (!yc.has_grad()) return;
            const float* gy = yc.grad();
            for (Tensor* t : {&ac, &bc}) {
                if (!t->requires_grad()) continue;
                t->ensure_grad();
                float* g = t->grad();
                for (std::int64_t i = 0; i < sz; ++i) g[i] += gy[i];
            }
        });
    }
    return y;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
    bool track = wants_grad(tape, {&a, &b});
    Tensor y = make_output(a.rows(), a.cols(), track);
    const std::int64_t sz = a.size();
    for (std::int64_t i = 0; i < sz; ++i) y.data()[i] = a.data()[i] - b.data()[i];
    check_finite(y, "sub");
    if (track) {
        Tensor ac = a, bc = b, yc = y;
        tape->record([ac, bc, yc, sz]() mutable {
            if (!yc.has_grad()) return;
            const float* gy = yc.grad();
            if (ac.requires_grad()) {
                ac.ensure_grad();
                float* g = ac.grad();
                for (std::int64_t i = 0; i < sz; ++i) g[i] += gy[i];
            }
            if (bc.requires_grad()) {
                bc.ensure_grad();
                float* g = bc.grad();
                for (std::int64_t i = 0; i < sz; ++i) g[i] -= gy[i];
            }
        });
    }
    return y;
}

Tensor scale(Tape* tape, const Tensor& x, float c) {
    bool track = wants_grad(tape, {&x});
    Tensor y = make_output(x.rows(), x.cols(), track);
    const std::int64_t sz = x.size();
    for (std::int64_t i = 0; i < sz; ++i) y.data()[i] = x.data()[i] * c;
    check_finite(y, "scale");
    if (track) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc, c, sz]() mutable {
            if (!yc.has_grad() || !xc.requires_grad()) return;
            xc.ensure_grad();
            const float* gy = yc.grad();
            float* g = xc.grad();
            for (std::int64_t i = 0; i < sz; ++i) g[i] += c * gy[i];
        });
    }
    return y;
}

Tensor add_rowvec(Tape* tape, const Tensor& x, const Tensor& bias) {
    require(bias.rows() == 1 && bias.cols() == x.cols(), "add_rowvec: bias shape mismatch");
    bool track = wants_grad(tape, {&x, &bias});
    const std::int64_t m = x.rows(), n = x.cols();
    Tensor y = make_output(m, n, track);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) y.data()[i * n + j] = x.data()[i * n + j] + bias.data()[j];
    check_finite(y, "add_rowvec");
    if (track) {
        Tensor xc = x, bc = bias, yc = y;
        tape->record([xc, bc, yc, m, n]() mutable {
            if (!yc.has_grad()) return;
            const float* gy = yc.grad();
            if (xc.requires_grad()) {
                xc.ensure_grad();
                float* g = xc.grad();
                for (std::int64_t i = 0; i < m * n; ++i) g[i] += gy[i];
            }
            if (bc.requires_grad()) {
                bc.ensure_grad();
                float* g = bc.grad();
                for (std::int64_t j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (std::int64_t i = 0; i < m; ++i) acc += gy[i * n + j];
                    g[j] += static_cast<float>(acc);
                }
            }
        });
    }
    return y;
}

Tensor scale_by_scalar(Tape* tape, const Tensor& x, const Tensor& s) {
    require(s.size() == 1, "scale_by_scalar: scale must be 1x1");
    bool track = wants_grad(tape, {&x, &s});
    Tensor y = make_output(x.rows(), x.cols(), track);
    const float sv = s.scalar_value();
    const std::int64_t sz = x.size();
    for (std::int64_t i = 0; i < sz; ++i) y.data()[i] = x.data()[i] * sv;
    check_finite(y, "scale_by_scalar");
    if (track) {
        Tensor xc = x, sc = s, yc = y;
        tape->record([xc, sc, yc, sv, sz]() mutable {
            if (!yc.has_grad()) return;
            const float* gy = yc.grad();
            if (xc.requires_grad()) {
                xc.ensure_grad();
                float* g = xc.grad();
                for (std::int64_t i = 0; i < sz; ++i) g[i] += sv * gy[i];
            }
            if (sc.requires_grad()) {
                sc.ensure_grad();
                double acc = 0.0;
                for (std::int64_t i = 0; i < sz; ++i) acc += double(xc.data()[i]) * gy[i];
                sc.grad()[0] += static_cast<float>(acc);
            }
        });
    }
    return y;
}

Tensor scalar_add_const(Tape* tape, const Tensor& s, float c) {
    require(s.size() == 1, "scalar_add_const: input must be 1x1");
    bool track = wants_grad(tape, {&s});
    Tensor y = make_output(1, 1, track);
    y.data()[0] = s.scalar_value() + c;
    check_finite(y, "scalar_add_const");
    if (track) {
        Tensor sc = s, yc = y;
        tape->record([sc, yc]() mutable {
            if (!yc.has_grad() || !sc.requires_grad()) return;
            sc.ensure_grad();
            sc.grad()[0] += yc.grad()[0];
        });
    }
    return y;
}

Tensor relu(Tape* tape, const Tensor& x) {
    bool track = wants_grad(tape, {&x});
    Tensor y = make_output(x.rows(), x.cols(), track);
    const std::int64_t sz = x.size();
    for (std::int64_t i = 0; i < sz; ++i) y.data()[i] = x.data()[i] > 0.0f ? x.data()[i] : 0.0f;
    if (track) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc, sz]() mutable {
            if (!yc.has_grad() || !xc.requires_grad()) return;
            xc.ensure_grad();
            const float* gy = yc.grad();
            float* g = xc.grad();
            for (std::int64_t i = 0; i < sz; ++i)
                if (xc.data()[i] > 0.0f) g[i] += gy[i];
        });
    }
    return y;
}

Tensor dropout(Tape* tape, const Tensor& x, float p, std::uint64_t seed) {
    require(p >= 0.0f && p < 1.0f, "dropout: p must be in [0,1)");
    if (p == 0.0f) return x;  // identity, nothing recorded
    bool track = wants_grad(tape, {&x});
    Tensor y = make_output(x.rows(), x.cols(), track);
    const std::int64_t sz = x.size();
    const float inv_keep = 1.0f / (1.0f - p);
    auto mask = std::make_shared<std::vector<std::uint8_t>>(static_cast<std::size_t>(sz));
    Rng rng(seed);
    for (std::int64_t i = 0; i < sz; ++i) {
        bool keep = rng.next_double() >= p;
        (*mask)[i] = keep;
        y.data()[i] = keep ? x.data()[i] * inv_keep : 0.0f;
    }
    check_finite(y, "dropout");
    if (track) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc, mask, inv_keep, sz]() mutable {
            if (!yc.has_grad() || !xc.requires_grad()) return;
            xc.ensure_grad();
            const float* gy = yc.grad();
            float* g = xc.grad();
            for (std::int64_t i = 0; i < sz; ++i)
                if ((*mask)[i]) g[i] += gy[i] * inv_keep;
        });
    }
    return y;
}

Tensor row_concat(Tape* tape, const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows(), "row_concat: row counts differ");
    bool track = wants_grad(tape, {&a, &b});
    const std::int64_t m = a.rows(), na = a.cols(), nb = b.cols();
    Tensor y = make_output(m, na + nb, track);
    for (std::int64_t i = 0; i < m; ++i) {
        std::copy(a.data() + i * na, a.data() + (i + 1) * na, y.data() + i * (na + nb));
        std::copy(b.data() + i * nb, b.data() + (i + 1) * nb, y.data() + i * (na + nb) + na);
    }
    check_finite(y, "row_concat");
    if (track) {
        Tensor ac = a, bc = b, yc = y;
        tape->record([ac, bc, yc, m, na, nb]() mutable {
            if (!yc.has_grad()) return;
            const float* gy = yc.grad();
            if (ac.requires_grad()) {
                ac.ensure_grad();
                for (std::int64_t i = 0; i < m; ++i)
                    for (std::int64_t j = 0; j < na; ++j)
                        ac.grad()[i * na + j] += gy[i * (na + nb) + j];
            }
            if (bc.requires_grad()) {
                bc.ensure_grad();
                for (std::int64_t i = 0; i < m; ++i)
                    for (std::int64_t j = 0; j < nb; ++j)
                        bc.grad()[i * nb + j] += gy[i * (na + nb) + na + j];
            }
        });
    }
    return y;
}

Tensor select_rows(Tape* tape, const Tensor& x, std::span<const std::int32_t> rows) {
    for (auto r : rows) require(r >= 0 && r < x.rows(), "select_rows: row out of range");
    bool track = wants_grad(tape, {&x});
    const std::int64_t n = x.cols();
    Tensor y = make_output(static_cast<std::int64_t>(rows.size()), n, track);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(x.data() + rows[i] * n, x.data() + (rows[i] + 1) * n, y.data() + i * n);
    if (track) {
        Tensor xc = x, yc = y;
        std::vector<std::int32_t> rows_copy(rows.begin(), rows.end());
        tape->record([xc, yc, rows_copy, n]() mutable {
            if (!yc.has_grad() || !xc.requires_grad()) return;
            xc.ensure_grad();
            const float* gy = yc.grad();
            for (std::size_t i = 0; i < rows_copy.size(); ++i) {
                float* g = xc.grad() + rows_copy[i] * n;
                const float* gr = gy + i * n;
                for (std::int64_t j = 0; j < n; ++j) g[j] += gr[j];
            }
        });
    }
    return y;
}

Tensor compose_rows(Tape* tape, std::int64_t total_rows,
                    std::span<const std::int32_t> rows_a, const Tensor& a,
                    std::span<const std::int32_t> rows_b, const Tensor& b) {
    require(static_cast<std::int64_t>(rows_a.size()) == a.rows(), "compose_rows: |rows_a| != a.rows");
    require(!b.defined() || static_cast<std::int64_t>(rows_b.size()) == b.rows(),
            "compose_rows: |rows_b| != b.rows");
    require(!b.defined() || a.cols() == b.cols(), "compose_rows: column mismatch");
    require(static_cast<std::int64_t>(rows_a.size() + rows_b.size()) == total_rows,
            "compose_rows: positions must tile all rows");

    std::vector<std::uint8_t> covered(static_cast<std::size_t>(total_rows), 0);
    auto mark = [&](std::int32_t r) {
        require(r >= 0 && r < total_rows && !covered[r], "compose_rows: bad row coverage");
        covered[r] = 1;
    };
    for (auto r : rows_a) mark(r);
    for (auto r : rows_b) mark(r);

    bool track = b.defined() ? wants_grad(tape, {&a, &b}) : wants_grad(tape, {&a});
    const std::int64_t n = a.cols();
    Tensor y = make_output(total_rows, n, track);
    for (std::size_t i = 0; i < rows_a.size(); ++i)
        std::copy(a.data() + i * n, a.data() + (i + 1) * n, y.data() + rows_a[i] * n);
    if (b.defined())
        for (std::size_t i = 0; i < rows_b.size(); ++i)
            std::copy(b.data() + i * n, b.data() + (i + 1) * n, y.data() + rows_b[i] * n);

    if (track) {
        Tensor ac = a, bc = b, yc = y;
        std::vector<std::int32_t> ra(rows_a.begin(), rows_a.end());
        std::vector<std::int32_t> rb(rows_b.begin(), rows_b.end());
        tape->record([ac, bc, yc, ra, rb, n]() mutable {
            if (!yc.has_grad()) return;
            const float* gy = yc.grad();
            if (ac.requires_grad()) {
                ac.ensure_grad();
                for (std::size_t i = 0; i < ra.size(); ++i) {
                    float* g = ac.grad() + i * n;
                    const float* gr = gy + ra[i] * n;
                    for (std::int64_t j = 0; j < n; ++j) g[j] += gr[j];
                }
            }
            if (bc.defined() && bc.requires_grad()) {
                bc.ensure_grad();
                for (std::size_t i = 0; i < rb.size(); ++i) {
                    float* g = bc.grad() + i * n;
                    const float* gr = gy + rb[i] * n;
                    for (std::int64_t j = 0; j < n; ++j) g[j] += gr[j];
                }
            }
        });
    }
    return y;
}

Tensor aggregate(Tape* tape, const AggPattern& pattern, const Tensor& x) {
    for (auto c : pattern.cols) require(c >= 0 && c < x.rows(), "aggregate: source row out of range");
    bool track = wants_grad(tape, {&x});
    const std::int64_t m = pattern.num_dst(), n = x.cols();
    Tensor y = make_output(m, n, track);
    std::vector<double> acc(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < m; ++r) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::int64_t e = pattern.row_ptr[r]; e < pattern.row_ptr[r + 1]; ++e) {
            const double c = pattern.coeffs[e];
            const float* src = x.data() + std::int64_t(pattern.cols[e]) * n;
            for (std::int64_t j = 0; j < n; ++j) acc[j] += c * src[j];
        }
        float* yrow = y.data() + r * n;
        for (std::int64_t j = 0; j < n; ++j) yrow[j] = static_cast<float>(acc[j]);
    }
    check_finite(y, "aggregate");
    if (track) {
        Tensor xc = x, yc = y;
        // The pattern outlives the tape in all call sites (owned by the batch
        // plan context); copy the small index arrays anyway to stay safe.
        auto pat = std::make_shared<AggPattern>(pattern);
        tape->record([xc, yc, pat, m, n]() mutable {
            if (!yc.has_grad() || !xc.requires_grad()) return;
            xc.ensure_grad();
            const float* gy = yc.grad();
            for (std::int64_t r = 0; r < m; ++r) {
                const float* gr = gy + r * n;
                for (std::int64_t e = pat->row_ptr[r]; e < pat->row_ptr[r + 1]; ++e) {
                    const float c = pat->coeffs[e];
                    float* g = xc.grad() + std::int64_t(pat->cols[e]) * n;
                    for (std::int64_t j = 0; j < n; ++j) g[j] += c * gr[j];
                }
            }
        });
    }
    return y;
}

Tensor frobenius_norm(Tape* tape, const Tensor& x) {
    bool track = wants_grad(tape, {&x});
    Tensor y = make_output(1, 1, track);
    double acc = 0.0;
    const std::int64_t sz = x.size();
    for (std::int64_t i = 0; i < sz; ++i) acc += double(x.data()[i]) * x.data()[i];
    const double norm = std::sqrt(acc);
    y.data()[0] = static_cast<float>(norm);
    check_finite(y, "frobenius_norm");
    if (track) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc, norm, sz]() mutable {
            if (!yc.has_grad() || !xc.requires_grad() || norm == 0.0) return;
            xc.ensure_grad();
            const float gy = yc.grad()[0];
            const float inv = static_cast<float>(1.0 / norm);
            float* g = xc.grad();
            for (std::int64_t i = 0; i < sz; ++i) g[i] += gy * inv * xc.data()[i];
        });
    }
    return y;
}

Tensor sum_all(Tape* tape, const Tensor& x) {
    bool track = wants_grad(tape, {&x});
    Tensor y = make_output(1, 1, track);
    double acc = 0.0;
    const std::int64_t sz = x.size();
    for (std::int64_t i = 0; i < sz; ++i) acc += x.data()[i];
    y.data()[0] = static_cast<float>(acc);
    check_finite(y, "sum_all");
    if (track) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc, sz]() mutable {
            if (!yc.has_grad() || !xc.requires_grad()) return;
            xc.ensure_grad();
            const float gy = yc.grad()[0];
            float* g = xc.grad();
            for (std::int64_t i = 0; i < sz; ++i) g[i] += gy;
        });
    }
    return y;
}

Tensor softmax_cross_entropy(Tape* tape, const Tensor& logits,
                             std::span<const std::int32_t> rows,
                             std::span<const std::int32_t> labels) {
    require(!rows.empty(), "softmax_cross_entropy: empty mask");
    require(rows.size() == labels.size(), "softmax_cross_entropy: rows/labels size mismatch");
    const std::int64_t n = logits.cols();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] >= 0 && rows[i] < logits.rows(), "softmax_cross_entropy: row out of range");
        require(labels[i] >= 0 && labels[i] < n, "softmax_cross_entropy: label out of range");
    }
    bool track = wants_grad(tape, {&logits});
    Tensor y = make_output(1, 1, track);

    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const float* row = logits.data() + std::int64_t(rows[i]) * n;
        float mx = row[0];
        for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::int64_t j = 0; j < n; ++j) denom += std::exp(double(row[j]) - mx);
        total += std::log(denom) - (double(row[labels[i]]) - mx);
    }
    y.data()[0] = static_cast<float>(total / double(rows.size()));
    check_finite(y, "softmax_cross_entropy");

    if (track) {
        Tensor lc = logits, yc = y;
        std::vector<std::int32_t> rows_copy(rows.begin(), rows.end());
        std::vector<std::int32_t> labels_copy(labels.begin(), labels.end());
        tape->record([lc, yc, rows_copy, labels_copy, n]() mutable {
            if (!yc.has_grad() || !lc.requires_grad()) return;
            lc.ensure_grad();
            const float gy = yc.grad()[0];
            const float inv_m = 1.0f / static_cast<float>(rows_copy.size());
            for (std::size_t i = 0; i < rows_copy.size(); ++i) {
                const float* row = lc.data() + std::int64_t(rows_copy[i]) * n;
                float* g = lc.grad() + std::int64_t(rows_copy[i]) * n;
                float mx = row[0];
                for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
                double denom = 0.0;
                for (std::int64_t j = 0; j < n; ++j) denom += std::exp(double(row[j]) - mx);
                for (std::int64_t j = 0; j < n; ++j) {
                    double p = std::exp(double(row[j]) - mx) / denom;
                    double delta = (j == labels_copy[i]) ? 1.0 : 0.0;
                    g[j] += gy * inv_m * static_cast<float>(p - delta);
                }
            }
        });
    }
    return y;
}

Tensor l2_penalty(Tape* tape, std::span<const Tensor> params, float weight) {
    require(weight >= 0.0f, "l2_penalty: negative weight");
    bool track = false;
    if (tape)
        for (const Tensor& t : params)
            if (t.requires_grad()) track = true;
    Tensor y = make_output(1, 1, track);
    double acc = 0.0;
    for (const Tensor& t : params)
        for (float v : t.values()) acc += double(v) * v;
    y.data()[0] = static_cast<float>(weight * acc);
    check_finite(y, "l2_penalty");
    if (track) {
        std::vector<Tensor> ps(params.begin(), params.end());
        Tensor yc = y;
        tape->record([ps, yc, weight]() mutable {
            if (!yc.has_grad()) return;
            const float gy = yc.grad()[0];
            for (Tensor& t : ps) {
                if (!t.requires_grad()) continue;
                t.ensure_grad();
                float* g = t.grad();
                const float* v = t.data();
                const std::int64_t sz = t.size();
                for (std::int64_t i = 0; i < sz; ++i) g[i] += gy * 2.0f * weight * v[i];
            }
        });
    }
    return y;
}

}  // namespace gas
