#include <catch_amalgamated.hpp>

#include <cmath>

#include "newsflow/numerics.hpp"

using namespace newsflow;

// Independent oracle: exp-normalize in long double, no max subtraction.
static Vec softmax_oracle(const Vec& v) {
    long double z = 0.0L;
    std::vector<long double> e(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        e[i] = expl(static_cast<long double>(v[i]));
        z += e[i];
    }
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(e[i] / z);
    return out;
}

TEST_CASE("softmax basics") {
    SECTION("two equal entries split evenly") {
        Vec p = softmax({0.0, 0.0});
        CHECK(p[0] == Catch::Approx(0.5).margin(1e-15));
        CHECK(p[1] == Catch::Approx(0.5).margin(1e-15));
    }
    SECTION("single element is 1 for any finite x") {
        for (double x : {-700.0, -1.0, 0.0, 3.5, 700.0}) {
            Vec p = softmax({x});
            REQUIRE(p.size() == 1);
            CHECK(p[0] == Catch::Approx(1.0).margin(1e-15));
        }
    }
    SECTION("matches exp-normalize oracle") {
        Vec v{1.0, 2.0, 3.0};
        Vec got = softmax(v);
        Vec want = softmax_oracle(v);
        for (size_t i = 0; i < v.size(); ++i)
            CHECK(got[i] == Catch::Approx(want[i]).margin(1e-12));
    }
    SECTION("empty input throws") {
        CHECK_THROWS_WITH(softmax({}), "empty softmax input");
    }
    SECTION("non-finite input throws") {
        CHECK_THROWS_AS(softmax({1.0, std::nan("")}), numeric_error);
    }
}

TEST_CASE("softmax properties on random inputs") {
    Rng rng(42);
    for (int it = 0; it < 1000; ++it) {
        size_t n = 1 + rng.below(8);
        Vec v(n);
        for (double& x : v) x = rng.uniform(-50.0, 50.0);
        Vec p = softmax(v);

        // on the probability simplex
        double sum = 0.0;
        for (double x : p) {
            CHECK(x > 0.0);
            sum += x;
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-12));

        // shift invariance
        double c = rng.uniform(-100.0, 100.0);
        Vec shifted(v);
        for (double& x : shifted) x += c;
        Vec p2 = softmax(shifted);
        for (size_t i = 0; i < n; ++i)
            CHECK(p2[i] == Catch::Approx(p[i]).margin(1e-12));
    }
}

TEST_CASE("log_sum_exp matches direct evaluation and survives large inputs") {
    Vec v{1.0, 2.0, 3.0};
    long double direct = logl(expl(1.0L) + expl(2.0L) + expl(3.0L));
    CHECK(log_sum_exp(v) == Catch::Approx(static_cast<double>(direct)).margin(1e-12));

    // would overflow without max subtraction
    CHECK(log_sum_exp({1000.0, 1000.0}) == Catch::Approx(1000.0 + std::log(2.0)).margin(1e-9));
}

TEST_CASE("grad_check oracle") {
    SECTION("quadratic is exact to 1e-8") {
        auto f = [](const Vec& x) { return x[0] * x[0]; };
        double err = grad_check(f, {3.0}, {6.0}, 1e-5);
        CHECK(err < 1e-8);
    }
    SECTION("sum of sin against cos gradient") {
        Rng rng(7);
        Vec x(10);
        for (double& xi : x) xi = rng.uniform(-2.0, 2.0);
        auto f = [](const Vec& p) {
            double s = 0.0;
            for (double v : p) s += std::sin(v);
            return s;
        };
        Vec g(x.size());
        for (size_t i = 0; i < x.size(); ++i) g[i] = std::cos(x[i]);
        CHECK(grad_check(f, x, g, 1e-5) < 1e-6);
    }
    SECTION("constant function has zero error") {
        auto f = [](const Vec&) { return 4.2; };
        CHECK(grad_check(f, {1.0, 2.0}, {0.0, 0.0}, 1e-4) == 0.0);
    }
    SECTION("non-finite evaluation throws") {
        auto f = [](const Vec& x) { return std::log(x[0]); };
        CHECK_THROWS_AS(grad_check(f, {0.0}, {1.0}, 1e-5), numeric_error);
    }
    SECTION("eps outside (0, 1e-2] rejected") {
        auto f = [](const Vec& x) { return x[0]; };
        CHECK_THROWS_AS(grad_check(f, {1.0}, {1.0}, 0.0), data_error);
        CHECK_THROWS_AS(grad_check(f, {1.0}, {1.0}, 0.5), data_error);
    }
}

TEST_CASE("rng streams are reproducible per seed") {
    Rng a(123), b(123), c(124);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        uint64_t ua = a.next_u64(), ub = b.next_u64(), uc = c.next_u64();
        all_equal = all_equal && (ua == ub);
        any_diff = any_diff || (ua != uc);
    }
    CHECK(all_equal);
    CHECK(any_diff);

    // same for the derived distributions
    Rng d(9), e(9);
    for (int i = 0; i < 200; ++i) {
        CHECK(d.uniform() == e.uniform());
        CHECK(d.gaussian() == e.gaussian());
        CHECK(d.below(97) == e.below(97));
    }
}

TEST_CASE("rng distribution sanity") {
    Rng rng(2024);
    const int n = 200000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double g = rng.gaussian();
        mean += g;
        m2 += g * g;
    }
    mean /= n;
    double var = m2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == Catch::Approx(1.0).margin(0.02));

    for (int i = 0; i < 1000; ++i) {
        CHECK(rng.below(7) < 7);
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("matrix helpers against naive loops") {
    Rng rng(5);
    Mat A(3, 4);
    for (double& x : A.a) x = rng.uniform(-1.0, 1.0);
    Vec x(4), y(3);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);

    matvec(A, x.data(), y.data());
    for (int r = 0; r < 3; ++r) {
        double s = 0.0;
        for (int c = 0; c < 4; ++c) s += A(r, c) * x[c];
        CHECK(y[r] == Catch::Approx(s).margin(1e-15));
    }

    Vec yt(4, 0.0);
    matvec_t_add(A, y.data(), yt.data());
    for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (int r = 0; r < 3; ++r) s += A(r, c) * y[r];
        CHECK(yt[c] == Catch::Approx(s).margin(1e-15));
    }

    Mat B(3, 4);
    outer_add(B, y.data(), x.data());
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(B(r, c) == Catch::Approx(y[r] * x[c]).margin(1e-15));
}
