#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <parreg/scale.hpp>

using namespace parreg;

namespace {

Eigen::VectorXd unit(std::size_t n, std::size_t i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    e[static_cast<Eigen::Index>(i)] = 1.0;
    return e;
}

// Independent trapezoid evaluation of the interpolation norm on a much finer
// and wider log grid than the cached table uses.
double brute_interp_norm(const HilbertScale& s, const Eigen::VectorXd& x, double theta,
                         double q) {
    double mu_min = std::pow(s.lambda(0), s.top_level());
    double mu_max = std::pow(s.lambda(s.dim() - 1), s.top_level());
    const double lo = std::log(1e-8 / mu_max), hi = std::log(1e8 / mu_min);
    const std::size_t nt = 40000;
    const double h = (hi - lo) / static_cast<double>(nt - 1);
    double acc = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
        const double lt = lo + h * static_cast<double>(k);
        const double val = std::exp(-theta * lt) * s.k2(std::exp(lt), x);
        const double g = std::pow(val, q);
        if (k > 0) acc += 0.5 * (g + prev) * h;
        prev = g;
    }
    return std::pow(acc, 1.0 / q);
}

} // namespace

TEST_CASE("scale construction validates weights and gamma_star") {
    CHECK_THROWS_AS(HilbertScale({}, 1.0), InvalidInputError);
    CHECK_THROWS_AS(HilbertScale({0.5}, 1.0), ParameterError);
    CHECK_THROWS_AS(HilbertScale({2.0, 1.5}, 1.0), InvalidInputError);
    CHECK_THROWS_AS(HilbertScale({1.0}, 0.0), ParameterError);
    CHECK_THROWS_AS(HilbertScale({1.0}, 1.5), ParameterError);
    const HilbertScale s({1.0, 3.0}, 0.5);
    CHECK(s.top_level() == Catch::Approx(1.5));
}

TEST_CASE("power norms are diagonal with exact exponents") {
    const HilbertScale s({1.0, 2.0, 10.0}, 1.0);
    Eigen::VectorXd x(3);
    x << 1.0, 1.0, 1.0;
    CHECK(s.power_norm(x, 0.0) == Catch::Approx(std::sqrt(3.0)));
    CHECK(s.power_norm(x, 1.0) == Catch::Approx(std::sqrt(1.0 + 4.0 + 100.0)));
    CHECK(s.power_norm(unit(3, 2), 2.0) == Catch::Approx(100.0));
    CHECK_THROWS_AS(s.power_norm(x, -0.1), ParameterError);
    CHECK_THROWS_AS(s.power_norm(x, 2.1), ParameterError);
    CHECK_THROWS_AS(s.power_norm(Eigen::VectorXd::Ones(2), 1.0), InvalidInputError);
}

TEST_CASE("quadratic K functional matches its closed form") {
    const HilbertScale s({2.0}, 0.5);
    const double mu = std::pow(2.0, 1.5);
    for (const double t : {1e-3, 0.1, 1.0, 7.0}) {
        const double expect = std::sqrt(t * t * mu * mu / (1.0 + t * t * mu * mu));
        CHECK(s.k2(t, unit(1, 0)) == Catch::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("interpolation norm reproduces closed-form values") {
    const HilbertScale s({1.0}, 1.0); // mu = 1
    const Eigen::VectorXd e = unit(1, 0);
    // theta = 1/2, q = 2: the squared norm is int_0^inf dt/(1+t^2) = pi/2.
    CHECK(s.real_interp_norm(e, 0.5, 2.0) ==
          Catch::Approx(std::sqrt(M_PI / 2.0)).epsilon(2e-6));
    // theta = 1/3, q = 3: the integral collapses to int t (1+t^2)^{-3/2} dt = 1.
    CHECK(s.real_interp_norm(e, 1.0 / 3.0, 3.0) == Catch::Approx(1.0).epsilon(2e-6));
    // theta = 1/2, q = inf: sup_t sqrt(t/(1+t^2)) = 2^{-1/2}.
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(s.real_interp_norm(e, 0.5, inf) ==
          Catch::Approx(std::pow(2.0, -0.5)).epsilon(1e-9));
}

TEST_CASE("interpolation norm scales like mu^theta across the spectrum") {
    const HilbertScale s({4.0}, 1.0); // mu = 16
    const double base = std::sqrt(M_PI / 2.0);
    CHECK(s.real_interp_norm(unit(1, 0), 0.5, 2.0) == Catch::Approx(4.0 * base).epsilon(2e-6));
    const HilbertScale w({3.0}, 0.5); // mu = 3^{1.5}
    const double mu = std::pow(3.0, 1.5);
    CHECK(w.real_interp_norm(unit(1, 0), 0.5, 2.0) ==
          Catch::Approx(std::sqrt(mu) * base).epsilon(2e-6));
}

TEST_CASE("interpolation norm agrees with an independent quadrature") {
    const HilbertScale s({1.0, 2.3, 7.7}, 0.5);
    std::mt19937_64 rng(42);
    std::normal_distribution<double> gauss;
    for (int rep = 0; rep < 3; ++rep) {
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x[i] = gauss(rng);
        for (const auto [theta, q] : {std::pair{0.5, 2.0}, {0.75, 4.0}, {0.375, 8.0 / 3.0}}) {
            const double got = s.real_interp_norm(x, theta, q);
            const double want = brute_interp_norm(s, x, theta, q);
            CHECK(got == Catch::Approx(want).epsilon(1e-5));
        }
    }
}

TEST_CASE("batched interpolation norms match the per-vector path") {
    const HilbertScale s({1.0, 1.7, 4.2, 9.0}, 1.0);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd X(4, 6);
    for (int c = 0; c < 6; ++c)
        for (int r = 0; r < 4; ++r) X(r, c) = gauss(rng);
    X.col(3).setZero();
    for (const auto [theta, q] :
         {std::pair{0.5, 2.0}, {0.25, 4.0}, {0.5, std::numeric_limits<double>::infinity()}}) {
        const Eigen::VectorXd batched = s.real_interp_norms(X, theta, q);
        for (int c = 0; c < 6; ++c) {
            const double single = s.real_interp_norm(X.col(c), theta, q);
            CHECK(batched[c] == Catch::Approx(single).margin(1e-13).epsilon(1e-13));
        }
    }
    CHECK_THROWS_AS(s.real_interp_norms(Eigen::MatrixXd::Ones(3, 2), 0.5, 2.0),
                    InvalidInputError);
}

TEST_CASE("level norms dispatch between power and interpolation") {
    const HilbertScale s({1.0}, 1.0);
    const Eigen::VectorXd e = unit(1, 0);
    CHECK(s.level_norm(e, SpaceLevel::power(1.0)) == Catch::Approx(1.0));
    // height 1 on a gamma_star = 1 scale is theta = 1/2
    CHECK(s.level_norm(e, SpaceLevel::interp(1.0, 2.0)) ==
          Catch::Approx(std::sqrt(M_PI / 2.0)).epsilon(2e-6));
    Eigen::MatrixXd X(1, 2);
    X << 1.0, 2.0;
    const Eigen::VectorXd lv = s.level_norms(X, SpaceLevel::power(2.0));
    CHECK(lv[0] == Catch::Approx(1.0));
    CHECK(lv[1] == Catch::Approx(2.0));
    CHECK_THROWS_AS(s.real_interp_norm(e, 0.0, 2.0), ParameterError);
    CHECK_THROWS_AS(s.real_interp_norm(e, 1.0, 2.0), ParameterError);
    CHECK_THROWS_AS(s.real_interp_norm(e, 0.5, 0.5), ParameterError);
}
