#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <parreg/envelope.hpp>

using namespace parreg;

TEST_CASE("envelope construction and evaluation") {
    CHECK(Envelope::zero().is_zero());
    CHECK(Envelope::constant(0.0).is_zero());
    CHECK_THROWS_AS(Envelope::constant(-1.0), InvalidInputError);
    CHECK_THROWS_AS(Envelope::power(1.0, std::nan("")), ParameterError);
    CHECK_THROWS_AS(Envelope::piecewise({0.5, 1.0}, {1.0, 2.0}), InvalidInputError);
    CHECK_THROWS_AS(Envelope::piecewise({0.0, 1.0}, {1.0}), InvalidInputError);

    const Envelope p = Envelope::power(2.0, 0.5);
    CHECK(p.eval(4.0) == Catch::Approx(1.0));
    const Envelope pw = Envelope::piecewise({0.0, 1.0, 2.0}, {3.0, 1.0, 0.5});
    CHECK(pw.eval(0.5) == 3.0);
    CHECK(pw.eval(1.0) == 1.0);
    CHECK(pw.eval(10.0) == 0.5);
}

TEST_CASE("weighted class membership depends only on the power tail") {
    // t^mu b^q integrable at zero iff mu - alpha q + 1 > 0
    CHECK(Envelope::power(1.0, 0.25).in_weighted_class(4.0, 0.0, 1.0) == false);
    CHECK(Envelope::power(1.0, 0.2).in_weighted_class(4.0, 0.0, 1.0) == true);
    CHECK(Envelope::power(1.0, 0.5).in_weighted_class(2.0, 0.5, 1.0) == true);
    CHECK(Envelope::power(1.0, 0.75).in_weighted_class(2.0, 0.5, 1.0) == false);
    CHECK(Envelope::constant(5.0).in_weighted_class(2.0, 0.0, 1.0));
    CHECK(Envelope::zero().in_weighted_class(2.0, 0.0, 1.0));
}

TEST_CASE("class norms reproduce closed forms") {
    const Envelope c = Envelope::constant(3.0);
    // ||3||_{L^2(0,4)} = 3 * 2 = 6
    CHECK(c.class_norm(2.0, 0.0, 0.0, 4.0) == Catch::Approx(6.0));
    // with weight t: (9 * 8)^{1/2}
    CHECK(c.class_norm(2.0, 1.0, 0.0, 4.0) == Catch::Approx(std::sqrt(72.0)));

    const Envelope p = Envelope::power(2.0, 0.25);
    // int_0^1 t^{-1/2} dt = 2, norm = 2 * 2^{1/2}
    CHECK(p.class_norm(2.0, 0.0, 0.0, 1.0) == Catch::Approx(2.0 * std::sqrt(2.0)));
    // q = 4 makes the mass diverge at zero
    CHECK(std::isinf(p.class_norm(4.0, 0.0, 0.0, 1.0)));
    CHECK(std::isfinite(p.class_norm(4.0, 0.0, 0.5, 1.0)));

    const Envelope pw = Envelope::piecewise({0.0, 1.0}, {2.0, 1.0});
    // int_0^2 b^2 = 4 + 1 = 5
    CHECK(pw.class_norm(2.0, 0.0, 0.0, 2.0) == Catch::Approx(std::sqrt(5.0)));
    CHECK_THROWS_AS(c.class_norm(0.5, 0.0, 0.0, 1.0), ParameterError);
    CHECK_THROWS_AS(c.class_norm(2.0, -1.0, 0.0, 1.0), ParameterError);
    CHECK_THROWS_AS(c.class_norm(2.0, 0.0, 1.0, 0.5), ParameterError);
}

TEST_CASE("budget inversion finds the exact crossing point") {
    const Envelope c = Envelope::constant(1.0);
    // ||1||_{L^2(0,sigma)} = sigma^{1/2} = 1/4  =>  sigma = 1/16
    CHECK(c.invert_budget(2.0, 0.0, 0.0, 0.25, 1.0) == Catch::Approx(1.0 / 16.0));
    // remaining mass below budget returns T
    CHECK(c.invert_budget(2.0, 0.0, 0.9, 0.5, 1.0) == 1.0);

    const Envelope p = Envelope::power(1.0, 0.25);
    for (const double from : {0.0, 0.1, 0.37}) {
        const double sigma = p.invert_budget(2.0, 0.0, from, 0.3, 1.0);
        if (sigma < 1.0)
            CHECK(p.class_norm(2.0, 0.0, from, sigma) == Catch::Approx(0.3).epsilon(1e-12));
    }
    const Envelope pw = Envelope::piecewise({0.0, 0.5}, {2.0, 1.0});
    const double sigma = pw.invert_budget(2.0, 0.0, 0.25, 0.8, 2.0);
    CHECK(pw.class_norm(2.0, 0.0, 0.25, sigma) == Catch::Approx(0.8).epsilon(1e-12));

    // infinite mass must be refused, not walked through
    CHECK_THROWS_AS(Envelope::power(1.0, 0.25).invert_budget(4.0, 0.0, 0.0, 0.5, 1.0),
                    EnvelopeClassError);
    CHECK_THROWS_AS(c.invert_budget(2.0, 0.0, 0.0, 0.0, 1.0), ParameterError);
}

TEST_CASE("moments, means and sups are exact") {
    const Envelope p = Envelope::power(3.0, 0.5);
    // int_0^1 3 t^{-1/2} dt = 6, int_0^1 3 t^{1/2} dt = 2
    CHECK(p.moment(0.0, 1.0, 0) == Catch::Approx(6.0));
    CHECK(p.moment(0.0, 1.0, 1) == Catch::Approx(2.0));
    CHECK(p.mean(0.0, 1.0) == Catch::Approx(6.0));
    CHECK_THROWS_AS(p.moment(0.0, 1.0, 2), ParameterError);
    CHECK(std::isinf(Envelope::power(1.0, 1.5).moment(0.0, 1.0, 0)));

    const Envelope s = Envelope::spike(0.25, 0.125);
    CHECK(s.moment(0.0, 1.0, 0) == Catch::Approx(1.0)); // unit mass
    CHECK(s.eval(0.2) == 0.0);
    CHECK(s.eval(0.3) == Catch::Approx(8.0));
    CHECK(s.sup_on(0.0, 1.0) == Catch::Approx(8.0));
    const Envelope s0 = Envelope::spike(0.0, 0.5);
    CHECK(s0.moment(0.0, 1.0, 0) == Catch::Approx(1.0));

    CHECK(p.sup_on(0.25, 1.0) == Catch::Approx(6.0)); // decreasing: left endpoint
    CHECK(Envelope::power(1.0, -1.0).sup_on(0.0, 2.0) == Catch::Approx(2.0));
    CHECK(p.scaled(2.0).moment(0.0, 1.0, 0) == Catch::Approx(12.0));
    CHECK(s.scaled(0.5).moment(0.0, 1.0, 0) == Catch::Approx(0.5));
    CHECK(p.scaled(0.0).is_zero());
}
