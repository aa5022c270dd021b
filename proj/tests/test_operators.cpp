#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <parreg/operators.hpp>

using namespace parreg;

TEST_CASE("model families expose the expected spectra") {
    const OperatorFamily heat = make_diagonal_heat(3, 2.0, 0.5);
    CHECK(heat.scale->dim() == 3);
    CHECK(heat.scale->lambda(0) == Catch::Approx(1.0 + std::numbers::pi * std::numbers::pi));
    CHECK(heat.diagonal);
    CHECK(heat.autonomous);
    CHECK(heat.horizon == 2.0);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
    CHECK(heat.apply(0.3, x)[1] == Catch::Approx(heat.diag_base[1]));
    CHECK_THROWS_AS(make_diagonal_heat(0), ParameterError);

    const OperatorFamily sc = make_scalar_family({1.0, 4.0});
    CHECK(sc.diag_at(0.0)[1] == Catch::Approx(4.0));

    const OperatorFamily jd = make_jordan_family(2, 0.5);
    CHECK_FALSE(jd.diagonal);
    CHECK(jd.mat_base(0, 1) == Catch::Approx(0.5 * jd.diag_base[0]));
    CHECK(jd.mat_base(1, 0) == 0.0);
    Eigen::VectorXd e2(2);
    e2 << 0.0, 1.0;
    CHECK(jd.apply(0.0, e2)[0] == Catch::Approx(0.5 * jd.diag_base[0]));
    CHECK_THROWS_AS(make_jordan_family(1, 0.5), ParameterError);
}

TEST_CASE("nonautonomous modulation and its exact time average") {
    const OperatorFamily base = make_scalar_family({2.0});
    const Envelope prof = Envelope::piecewise({0.0, 0.5}, {2.0, 1.0});
    const OperatorFamily mod = make_nonautonomous(base, prof, 1.0, 2.0);
    CHECK_FALSE(mod.autonomous);
    CHECK(mod.diag_at(0.25)[0] == Catch::Approx(4.0));
    CHECK(mod.diag_at(0.75)[0] == Catch::Approx(2.0));

    const OperatorFamily avg = time_average(mod, 1.0);
    CHECK(avg.autonomous);
    CHECK(avg.diag_at(0.9)[0] == Catch::Approx(2.0 * 1.5)); // mean profile 3/2

    CHECK_THROWS_AS(make_nonautonomous(mod, prof, 1.0, 2.0), InvalidInputError);
    CHECK_THROWS_AS(make_nonautonomous(base, prof, 0.0, 2.0), ParameterError);
}

TEST_CASE("critical Lq slot realizes its declared operator norm") {
    const ScalePtr s = make_scale({1.0, 4.0, 9.0}, 1.0);
    const Rat q(4);
    const Perturbation B = make_lq_perturbation(s, Envelope::power(0.5, 0.25), q);
    REQUIRE(B.comps.size() == 1);
    const auto& c = B.comps.front();
    CHECK(c.beta == Catch::Approx(0.75)); // 1 - 1/q
    CHECK(c.q_class == q);

    // || B(t) x ||_{X_0} = b(t) || x ||_{beta} for every vector on the scale
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    for (const double t : {0.1, 0.6}) {
        const double lhs = s->power_norm(B.apply(t, x), 0.0);
        const double rhs = 0.5 * std::pow(t, -0.25) * s->power_norm(x, c.beta);
        CHECK(lhs == Catch::Approx(rhs).epsilon(1e-13));
    }
    CHECK_THROWS_AS(make_lq_perturbation(s, Envelope::zero(), Rat(1)), ParameterError);
    CHECK(make_no_perturbation(s).none());
}

TEST_CASE("mixed slots map height beta into the gamma rung isometrically") {
    const ScalePtr s = make_scale({1.0, 16.0}, 0.5);
    const ExponentTriple tr{Rat(4, 3), Rat(0), Rat(1, 2)};
    const Perturbation B = make_mixed_perturbation(s, {{tr, Envelope::constant(2.0)}});
    CHECK(B.kind == PerturbKind::MixedScale);
    const auto& c = B.comps.front();
    Eigen::VectorXd x(2);
    x << 3.0, -1.0;
    const double lhs = s->power_norm(c.apply(0.3, x), 0.5);
    const double rhs = 2.0 * s->power_norm(x, 1.0); // beta defaults to 1
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-13));

    const ExponentTriple too_high{Rat(4, 3), Rat(0), Rat(3, 4)};
    CHECK_THROWS_AS(make_mixed_perturbation(s, {{too_high, Envelope::zero()}}),
                    ParameterError);
    CHECK_THROWS_AS(make_mixed_perturbation(s, {}), InvalidInputError);
}

TEST_CASE("trace slot carries the conjugate-exponent class") {
    const ScalePtr s = make_scale({2.0}, 1.0);
    const Perturbation B = make_trace_perturbation(s, Envelope::constant(1.0), Rat(4));
    CHECK(B.comps.front().q_class == Rat(4, 3));
    CHECK(B.comps.front().target.interpolated());
    CHECK(B.comps.front().target.gamma == Catch::Approx(0.75));
    CHECK_THROWS_AS(make_trace_perturbation(s, Envelope::zero(), Rat(1)), ParameterError);
}

TEST_CASE("forcing slots name their pricing") {
    CHECK(ForcingSlot::base(4.0, 0.5).name == "base");
    const ExponentTriple tr{Rat(4, 3), Rat(0), Rat(1, 2)};
    const ForcingSlot rung = ForcingSlot::rung(2, tr);
    CHECK(rung.name == "rung2");
    CHECK(rung.p == Catch::Approx(4.0 / 3.0));
    CHECK(rung.level.gamma == Catch::Approx(0.5));
    const ForcingSlot l1 = ForcingSlot::l1_trace(4.0);
    CHECK(l1.name == "l1_trace");
    CHECK(l1.p == 1.0);
    CHECK(l1.level.interpolated());
}

TEST_CASE("separable forcing: exact integrals, norms and class screening") {
    const ScalePtr s = make_scale({1.0, 2.0}, 1.0);
    Eigen::VectorXd dir(2);
    dir << 1.0, 1.0;
    const auto f = ForcingComponent::separable(ForcingSlot::base(2.0, 0.0),
                                               Envelope::power(1.0, 0.25), dir);
    // int_0^1 t^{-1/4} dt = 4/3
    CHECK(f.integral(0.0, 1.0)[0] == Catch::Approx(4.0 / 3.0).epsilon(1e-13));
    // slot norm = ||t^{-1/4}||_{L^2(0,1)} ||dir||_0 = sqrt(2) * sqrt(2)
    CHECK(f.slot_norm(*s, 0.0, 1.0) == Catch::Approx(2.0).epsilon(1e-13));
    CHECK_NOTHROW(f.require_in_class(1.0));

    // the same envelope fails the L^4 class: 4 * 1/4 = 1 is not integrable
    const auto bad = ForcingComponent::separable(ForcingSlot::base(4.0, 0.0),
                                                 Envelope::power(1.0, 0.25), dir);
    CHECK_THROWS_AS(bad.require_in_class(1.0), EnvelopeClassError);

    const auto spike = ForcingComponent::separable(ForcingSlot::base(2.0, 0.0),
                                                   Envelope::spike(0.25, 1e-3), dir);
    CHECK(spike.integral(0.0, 1.0)[1] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("piecewise and sampled forcing forms") {
    const GridPtr g = make_time_grid(1.0, 4, 1.0);
    const ScalePtr s = make_scale({1.0}, 1.0);
    std::vector<Eigen::VectorXd> vals(4, Eigen::VectorXd::Ones(1));
    vals[2] *= 3.0;
    const auto pw = ForcingComponent::piecewise(ForcingSlot::base(2.0, 0.0), g, vals);
    CHECK(pw.eval(0.6)[0] == Catch::Approx(3.0));
    CHECK(pw.integral(0.0, 1.0)[0] == Catch::Approx(0.25 * (1 + 1 + 3 + 1)).epsilon(1e-13));
    CHECK(pw.integral(0.4, 0.6)[0] == Catch::Approx(0.1 * 1.0 + 0.1 * 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(
        ForcingComponent::piecewise(ForcingSlot::base(2.0, 0.0), g,
                                    std::vector<Eigen::VectorXd>(3, Eigen::VectorXd::Ones(1))),
        InvalidInputError);

    const auto lin = GridFunction::sample_scalar(g, [](double t) { return t; });
    const auto smp = ForcingComponent::sampled(ForcingSlot::base(2.0, 0.0), lin);
    CHECK(smp.integral(0.0, 1.0)[0] == Catch::Approx(0.5).epsilon(1e-13));
    CHECK(smp.slot_norm(*s, 0.0, 1.0) == Catch::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));

    const Inhomogeneity f = make_inhomogeneity(s, {smp});
    CHECK(f.eval(0.5)[0] == Catch::Approx(0.5));
    CHECK(f.sum_norm_upper(0.0, 1.0) == Catch::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
    Eigen::VectorXd dir2 = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(
        make_inhomogeneity(s, {ForcingComponent::separable(ForcingSlot::base(2.0, 0.0),
                                                           Envelope::constant(1.0), dir2)}),
        InvalidInputError);
}
