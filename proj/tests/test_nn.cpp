#include <doctest.h>

#include <cmath>

#include "gas/nn.hpp"
#include "oracles.hpp"

using namespace gas;

namespace {

// Largest eigenvalue of W^T W by scanning the characteristic polynomial
// det(W^T W - t I) for its largest root (sign-change scan plus bisection).
double spectral_norm_char_scan(const DenseMatrix& w) {
    const std::int64_t n = w.cols;
    std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < w.rows; ++k)
                acc += double(w.at(k, i)) * double(w.at(k, j));
            gram[i][j] = acc;
        }

    auto char_poly = [&](double t) {
        std::vector<std::vector<double>> m = gram;
        for (std::int64_t i = 0; i < n; ++i) m[i][i] -= t;
        double det = 1.0;
        for (std::int64_t col = 0; col < n; ++col) {
            std::int64_t pivot = -1;
            double best = 0.0;
            for (std::int64_t r = col; r < n; ++r)
                if (std::abs(m[r][col]) > best) {
                    best = std::abs(m[r][col]);
                    pivot = r;
                }
            if (pivot < 0) return 0.0;
            if (pivot != col) {
                std::swap(m[pivot], m[col]);
                det = -det;
            }
            det *= m[col][col];
            for (std::int64_t r = col + 1; r < n; ++r) {
                const double f = m[r][col] / m[col][col];
                for (std::int64_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
            }
        }
        return det;
    };

    // Gershgorin upper bound for the largest eigenvalue.
    double upper = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::int64_t j = 0; j < n; ++j) row += std::abs(gram[i][j]);
        upper = std::max(upper, row);
    }
    upper += 1.0;

    // Scan downward for the first sign change; the largest root lies there.
    const int grid = 4000;
    double hi = upper, lo = 0.0;
    double prev = char_poly(upper);
    bool found = false;
    for (int i = 1; i <= grid; ++i) {
        const double t = upper * (1.0 - double(i) / grid);
        const double val = char_poly(t);
        if ((prev < 0) != (val < 0) || val == 0.0) {
            hi = upper * (1.0 - double(i - 1) / grid);
            lo = t;
            found = true;
            break;
        }
        prev = val;
    }
    if (!found) return 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double val = char_poly(mid);
        if ((val < 0) == (char_poly(hi) < 0))
            hi = mid;
        else
            lo = mid;
    }
    return std::sqrt(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    Tensor w = Tensor::from_matrix(oracle::random_matrix(3, 3, 1), true);
    DenseMatrix before = w.to_matrix();
    AdamState opt({w}, AdamConfig{});
    opt.step();  // no grads allocated at all
    w.ensure_grad();
    opt.step();  // explicit zero grads
    CHECK(oracle::max_abs_diff(w, before) == 0.0);
}

TEST_CASE("grad_clip: rescales to max_norm, identity when already within") {
    Tensor w = Tensor::zeros(1, 4, true);
    w.ensure_grad();
    w.grad()[0] = 6.0f;
    w.grad()[1] = 8.0f;  // norm 10
    std::vector<Tensor> params{w};
    const double pre = grad_clip(params, 5.0);
    CHECK(pre == doctest::Approx(10.0));
    double post = 0.0;
    for (float g : w.grad_span()) post += double(g) * g;
    CHECK(std::sqrt(post) == doctest::Approx(5.0));

    // Below the threshold nothing changes.
    const double pre2 = grad_clip(params, 50.0);
    CHECK(pre2 == doctest::Approx(5.0));
    CHECK(w.grad()[0] == doctest::Approx(3.0f));
    CHECK_THROWS_AS(grad_clip(params, 0.0), std::invalid_argument);
}

TEST_CASE("adam: drives a 1-D quadratic to zero") {
    Tensor w = Tensor::scalar(3.0f, true);
    AdamConfig cfg;
    cfg.lr = 0.1f;
    AdamState opt({w}, cfg);
    for (int step = 0; step < 200; ++step) {
        w.ensure_grad();
        w.grad()[0] = 2.0f * w.data()[0];  // d/dw of w^2
        opt.step();
        opt.zero_grad();
    }
    CHECK(std::abs(w.scalar_value()) < 1e-2);
}

TEST_CASE("spectral_norm_estimate: identity and diagonal") {
    DenseMatrix id(3, 3);
    for (int i = 0; i < 3; ++i) id.at(i, i) = 1.0f;
    CHECK(spectral_norm_estimate(Tensor::from_matrix(id), 100, 1) == doctest::Approx(1.0));

    DenseMatrix diag(2, 2);
    diag.at(0, 0) = 3.0f;
    diag.at(1, 1) = 1.0f;
    CHECK(spectral_norm_estimate(Tensor::from_matrix(diag), 100, 1) == doctest::Approx(3.0));
}

TEST_CASE("spectral_norm_estimate: random 6x6 against characteristic-scan oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        DenseMatrix w = oracle::random_matrix(6, 6, derive_seed(seed, 40));
        const double est = spectral_norm_estimate(Tensor::from_matrix(w), 300, seed);
        const double ref = spectral_norm_char_scan(w);
        CHECK(est == doctest::Approx(ref).epsilon(1e-3));
    }
}

TEST_CASE("glorot_init: bounded by fan-in/out and seeded") {
    Tensor a = Tensor::zeros(20, 30, true);
    glorot_init(a, 3);
    const double bound = std::sqrt(6.0 / (20.0 + 30.0));
    for (float v : a.values()) CHECK(std::abs(v) <= bound);
    Tensor b = Tensor::zeros(20, 30, true);
    glorot_init(b, 3);
    CHECK(a.values()[0] == b.values()[0]);
}
