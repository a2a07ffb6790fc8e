#pragma once
// Dense vector/matrix arithmetic, a fixed deterministic PRNG, stable
// softmax / log-sum-exp, and the central-difference gradient checker
// used by the model tests.
//
// All pipeline math is double precision. Embedding files may store
// 32-bit floats; they are widened on read.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace newsflow {

using Vec = std::vector<double>;

// Malformed or out-of-contract input (missing file, bad record, empty vector).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf detected. The CLI aborts the whole run on this.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const double* p, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

inline bool all_finite(const Vec& v) { return all_finite(v.data(), v.size()); }

inline void require_finite(const Vec& v, const std::string& what) {
    if (!all_finite(v)) throw numeric_error("non-finite values in " + what);
}

// Row-major dense matrix.
struct Mat {
    int rows = 0, cols = 0;
    Vec a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return a.size(); }
};

inline double dot(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

inline double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw data_error("dot: dimension mismatch");
    return dot(x.data(), y.data(), static_cast<int>(x.size()));
}

// y = A x
inline void matvec(const Mat& A, const double* x, double* y) {
    for (int r = 0; r < A.rows; ++r) y[r] = dot(A.row(r), x, A.cols);
}

// y += A x
inline void matvec_add(const Mat& A, const double* x, double* y) {
    for (int r = 0; r < A.rows; ++r) y[r] += dot(A.row(r), x, A.cols);
}

// y += A^T x   (x has A.rows entries, y has A.cols)
inline void matvec_t_add(const Mat& A, const double* x, double* y) {
    for (int r = 0; r < A.rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        const double* row = A.row(r);
        for (int c = 0; c < A.cols; ++c) y[c] += xr * row[c];
    }
}

// A += x y^T  (outer-product accumulate; x has A.rows, y has A.cols)
inline void outer_add(Mat& A, const double* x, const double* y) {
    for (int r = 0; r < A.rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        double* row = A.row(r);
        for (int c = 0; c < A.cols; ++c) row[c] += xr * y[c];
    }
}

// ---------------------------------------------------------------------
//  Rng: splitmix64-seeded xoshiro256**.
//  Fixed algorithm so that identical seeds give identical streams on
//  every platform; instances are single-owner.
// ---------------------------------------------------------------------
struct Rng {
    uint64_t s[4];

    explicit Rng(uint64_t seed = 0) {
        // splitmix64 expands the seed into the full 256-bit state
        uint64_t x = seed;
        for (auto& si : s) {
            x += 0x9e3779b97f4a7c15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            si = z ^ (z >> 31);
        }
    }

    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t next_u64() {
        const uint64_t result = rotl(s[1] * 5, 7) * 9;
        const uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n)
    uint64_t below(uint64_t n) {
        uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        uint64_t l = static_cast<uint64_t>(m);
        if (l < n) {
            uint64_t t = (0 - n) % n;
            while (l < t) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                l = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    // Box-Muller, two uniforms per draw (no cached spare, keeps the
    // stream position a pure function of the call count).
    double gaussian() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }
};

// ---------------------------------------------------------------------
//  softmax / log-sum-exp, max-subtracted for stability
// ---------------------------------------------------------------------
inline Vec softmax(const Vec& v) {
    if (v.empty()) throw data_error("empty softmax input");
    require_finite(v, "softmax input");
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    Vec out(v.size());
    double z = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

inline double log_sum_exp(const Vec& v) {
    if (v.empty()) throw data_error("empty log_sum_exp input");
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double z = 0.0;
    for (double x : v) z += std::exp(x - m);
    return m + std::log(z);
}

// ---------------------------------------------------------------------
//  Gradient check oracle.
//  Returns max over coordinates of
//      |analytic - central_difference| / max(1, |analytic|).
// ---------------------------------------------------------------------
inline double grad_check(const std::function<double(const Vec&)>& f,
                         Vec params, const Vec& analytic, double eps) {
    if (params.size() != analytic.size())
        throw data_error("grad_check: gradient size mismatch");
    if (!(eps > 0.0 && eps <= 1e-2))
        throw data_error("grad_check: eps out of (0, 1e-2]");
    double worst = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + eps;
        const double fp = f(params);
        params[i] = keep - eps;
        const double fm = f(params);
        params[i] = keep;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw numeric_error("grad_check: non-finite function evaluation");
        const double fd = (fp - fm) / (2.0 * eps);
        const double rel = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace newsflow
