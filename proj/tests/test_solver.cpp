#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <parreg/solver.hpp>

using namespace parreg;

namespace {

Inhomogeneity const_forcing(const ScalePtr& s, double amp = 1.0) {
    return make_inhomogeneity(
        s, {ForcingComponent::separable(
               ForcingSlot::base(2.0, 0.0), Envelope::constant(amp),
               Eigen::VectorXd::Ones(static_cast<Eigen::Index>(s->dim())))});
}

} // namespace

TEST_CASE("budget partition: the frozen sixteen-interval case") {
    // b = 1, q = 2, budget 1/4: each interval carries mass sigma^{1/2} = 1/4,
    // so the walk takes exactly 16 equal steps of length 1/16.
    const auto pts = partition_by_budget(Envelope::constant(1.0), 2.0, 0.0, 1.0, 0.25);
    REQUIRE(pts.size() == 17);
    for (std::size_t k = 0; k < pts.size(); ++k)
        CHECK(pts[k] == Catch::Approx(static_cast<double>(k) / 16.0).margin(1e-12));
}

TEST_CASE("budget partition: singular envelopes and class rejection") {
    const Envelope b = Envelope::power(1.0, 0.25);
    const auto pts = partition_by_budget(b, 2.0, 0.0, 1.0, 0.3);
    CHECK(pts.front() == 0.0);
    CHECK(pts.back() == 1.0);
    // every interior interval carries exactly the budget mass
    for (std::size_t k = 0; k + 2 < pts.size(); ++k)
        CHECK(b.class_norm(2.0, 0.0, pts[k], pts[k + 1]) ==
              Catch::Approx(0.3).epsilon(1e-10));
    // interval count obeys (N-1) budget^q <= ||b||^q
    const double total = b.class_norm(2.0, 0.0, 0.0, 1.0);
    CHECK(static_cast<double>(pts.size() - 1) <=
          2.0 + std::pow(total / 0.3, 2.0) + 1e-9);

    CHECK_THROWS_AS(partition_by_budget(b, 4.0, 0.0, 1.0, 0.3), EnvelopeClassError);
    CHECK_THROWS_AS(partition_by_budget(b, 2.0, 0.0, 1.0, 0.0), InvalidInputError);
}

TEST_CASE("budget partition: composite terms split where the sum crosses") {
    const Envelope b1 = Envelope::constant(1.0);
    const Envelope b2 = Envelope::power(0.5, 0.25);
    const std::vector<BudgetTerm> terms = {{&b1, 2.0, 0.0}, {&b2, 2.0, 0.0}};
    const auto pts = partition_by_budget(terms, 1.0, 0.4);
    CHECK(pts.front() == 0.0);
    CHECK(pts.back() == 1.0);
    for (std::size_t k = 0; k + 2 < pts.size(); ++k) {
        const double mass = b1.class_norm(2.0, 0.0, pts[k], pts[k + 1]) +
                            b2.class_norm(2.0, 0.0, pts[k], pts[k + 1]);
        CHECK(mass == Catch::Approx(0.4).epsilon(1e-8));
    }
    const Envelope bad = Envelope::power(1.0, 0.5);
    const std::vector<BudgetTerm> terms_bad = {{&bad, 2.0, 0.0}};
    CHECK_THROWS_AS(partition_by_budget(terms_bad, 1.0, 0.4), EnvelopeClassError);
}

TEST_CASE("regularity-constant estimate brackets the scalar closed form") {
    // for a single mode, ||u|| / ||f|| with f = 1 has the exact step response
    // (1 - e^{-lambda t}) / lambda; the estimate must reach it and must stay
    // below the buffered ceiling used for budgets.
    const OperatorFamily A = make_scalar_family({1.0});
    const GridPtr g = make_time_grid(1.0, 256);
    const auto est = estimate_mr_constant(A, 2.0, 0.0, g, 8, 99);
    CHECK(est.value >= est.modal * (1.0 - 1e-9));
    CHECK(est.modal > 0.3);
    CHECK(est.value < 10.0);
    CHECK(est.sample_ratios.size() >= 1);
    // deterministic in the seed
    const auto est2 = estimate_mr_constant(A, 2.0, 0.0, g, 8, 99);
    CHECK(est.value == est2.value);
}

TEST_CASE("picard solve matches the reference solve and the closed form") {
    const OperatorFamily A = make_scalar_family({1.0});
    const GridPtr g = make_time_grid(1.0, 512);
    // t^{-1/4} lies in L^2(0,1) (q = 4 would sit on the divergent line)
    const Perturbation B =
        make_lq_perturbation(A.scale, Envelope::power(1.0, 0.25), Rat(2));
    const Inhomogeneity f = const_forcing(A.scale, 0.0);
    Eigen::VectorXd u0(1);
    u0 << 1.0;

    const SolveReport rep = picard_solve(A, B, f, u0, 2.0, 0.0, BudgetConstants{1.0, 1.0}, g);
    CHECK(rep.scheme == "picard");
    CHECK(rep.residual <= rep.residual_tol);
    CHECK(rep.constants.at("intervals") >= 1.0);
    // against the closed form exp(-t - (4/3) t^{3/4}); the trajectory lives on
    // the partition-refined mesh, so evaluate by time, not node index
    double worst = 0.0;
    for (std::size_t j = 0; j <= g->cells(); j += 5) {
        const double t = g->node(j);
        worst = std::max(worst, std::abs(rep.trajectory.eval(t)[0] -
                                         std::exp(-t - (4.0 / 3.0) * std::pow(t, 0.75))));
    }
    CHECK(worst < 1e-3);
    // against the reference dense solve, in the solution norm on the base grid
    const GridFunction ref = oracle_solve(A, B, f, u0, g);
    const double rel =
        lp_distance(rep.trajectory.on_grid(g), ref, 2.0, 0.0, SpaceLevel::power(1.0), *A.scale) /
        std::max(weighted_lp_norm(ref, 2.0, 0.0, SpaceLevel::power(1.0), *A.scale), 1e-12);
    CHECK(rel < 1e-5);
    // norms section is filled
    CHECK(rep.norms.at("mr") > 0.0);
    CHECK(rep.norms.at("trace_sup") > 0.0);
    for (const auto& iv : rep.intervals) CHECK(iv.contraction <= 0.75 + 1e-12);
}

TEST_CASE("picard solve rejects out-of-class envelopes before stepping") {
    const OperatorFamily A = make_scalar_family({1.0});
    const GridPtr g = make_time_grid(1.0, 64);
    const Inhomogeneity f = const_forcing(A.scale);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(1);
    // alpha = 1/4 with q = 4 sits exactly on the divergent line
    const Perturbation bad =
        make_lq_perturbation(A.scale, Envelope::power(1.0, 0.25), Rat(4));
    // q >= p gate
    CHECK_THROWS_AS(
        picard_solve(A, bad, f, u0, 4.0 + 1e-3, 0.0, BudgetConstants{}, g),
        ParameterError);
    CHECK_THROWS_AS(picard_solve(A, bad, f, u0, 4.0, 0.0, BudgetConstants{}, g),
                    EnvelopeClassError);
    // wrong perturbation kind
    const Perturbation none = make_no_perturbation(A.scale);
    CHECK_THROWS_AS(picard_solve(A, none, f, u0, 2.0, 0.0, BudgetConstants{}, g),
                    InvalidInputError);
}

TEST_CASE("gronwall check passes for a constant envelope at q = p") {
    const OperatorFamily A = make_diagonal_heat(4);
    const GridPtr g = make_time_grid(1.0, 128);
    const Perturbation B = make_lq_perturbation(A.scale, Envelope::constant(0.5), Rat(2));
    const Inhomogeneity f = const_forcing(A.scale);
    const GronwallReport rep = gronwall_check(A, B, f, 2.0, 0.0, g, 6, 17);
    CHECK(rep.pass);
    REQUIRE(rep.ratios.size() == rep.bounds.size());
    for (std::size_t i = 0; i < rep.ratios.size(); ++i) CHECK(rep.ratios[i] <= rep.bounds[i]);
    CHECK(rep.C > 0.0);
    CHECK(rep.M > 0.0);
}

TEST_CASE("mixed-scale solve agrees with the reference solve") {
    const OperatorFamily A = make_diagonal_heat(4, 1.0, 0.5);
    const GridPtr g = make_time_grid(1.0, 256);
    const ExponentTriple tr{Rat(4, 3), Rat(0), Rat(1, 2)};
    const Perturbation B =
        make_mixed_perturbation(A.scale, {{tr, Envelope::power(0.25, 0.25)}});
    const Inhomogeneity f = const_forcing(A.scale);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(4);
    const MixedExponents ex{Rat(4), Rat(0), Rat(1, 2)};

    const SolveReport rep = mixed_scale_solve(A, {}, B, f, u0, ex, g);
    CHECK(rep.scheme == "mixed");
    CHECK(rep.residual <= rep.residual_tol);
    CHECK(rep.norms.at("lp_x1") > 0.0);
    CHECK(rep.norms.at("mr_plus_upper") > 0.0);
    CHECK(std::isfinite(rep.norms.at("mr_plus_upper")));
    CHECK(rep.constants.at("C0") >= rep.constants.at("C0_measured"));

    const GridFunction ref = oracle_solve(A, B, f, u0, g);
    const double rel =
        lp_distance(rep.trajectory, ref, 4.0, 0.0, SpaceLevel::power(1.0), *A.scale) /
        std::max(weighted_lp_norm(ref, 4.0, 0.0, SpaceLevel::power(1.0), *A.scale), 1e-12);
    CHECK(rel < 1e-5);

    // gamma_star mismatch between exponents and scale is refused
    const MixedExponents wrong{Rat(4), Rat(0), Rat(1)};
    CHECK_THROWS_AS(mixed_scale_solve(A, {}, B, f, u0, wrong, g), InvalidInputError);
}

TEST_CASE("transference solve agrees with the reference solve") {
    const OperatorFamily A = make_diagonal_heat(4);
    const GridPtr g = make_time_grid(1.0, 256);
    const Perturbation B =
        make_trace_perturbation(A.scale, Envelope::power(0.25, 0.25), Rat(2));
    const Inhomogeneity f = const_forcing(A.scale);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(4);

    const SolveReport rep = transference_solve(A, std::nullopt, B, f, u0, 2.0, g);
    CHECK(rep.scheme == "transference");
    CHECK(rep.residual <= rep.residual_tol);
    CHECK(rep.norms.at("ep") > 0.0);
    REQUIRE(rep.components.size() >= 2);

    const GridFunction ref = oracle_solve(A, B, f, u0, g);
    const double rel =
        lp_distance(rep.trajectory, ref, 2.0, 0.0, SpaceLevel::power(1.0), *A.scale) /
        std::max(weighted_lp_norm(ref, 2.0, 0.0, SpaceLevel::power(1.0), *A.scale), 1e-12);
    CHECK(rel < 1e-5);

    // the envelope must lie in L^{p'}: alpha = 1/2 at p' = 2 diverges
    const Perturbation bad =
        make_trace_perturbation(A.scale, Envelope::power(1.0, 0.5), Rat(2));
    CHECK_THROWS_AS(transference_solve(A, std::nullopt, bad, f, u0, 2.0, g),
                    EnvelopeClassError);
    // perturbation built for a different p is refused
    CHECK_THROWS_AS(transference_solve(A, std::nullopt, B, f, u0, 3.0, g),
                    InvalidInputError);
}

TEST_CASE("semigroup mild solve handles spike forcing without losing mass") {
    const OperatorFamily A = make_scalar_family({1.0});
    const GridPtr g = make_time_grid(1.0, 512);
    Eigen::VectorXd dir(1);
    dir << 1.0;
    const Inhomogeneity f = make_inhomogeneity(
        A.scale, {ForcingComponent::separable(ForcingSlot::l1_trace(2.0),
                                              Envelope::spike(0.05, 4e-3), dir)});
    const GridFunction u = semigroup_mild_solve(A, f, Eigen::VectorXd::Zero(1), g);
    // after the spike the solution is e^{-(t - t_spike)} times the injected
    // mass, up to the width of the spike
    const double t_probe = 0.5;
    const double want = std::exp(-(t_probe - 0.052));
    CHECK(u.eval(t_probe)[0] == Catch::Approx(want).epsilon(5e-3));
    CHECK(u.eval(0.01)[0] == 0.0); // nothing before the spike
}

TEST_CASE("scaled perturbations rescale every envelope") {
    const ScalePtr s = make_scale({1.0, 2.0}, 1.0);
    const Perturbation B = make_lq_perturbation(s, Envelope::constant(1.0), Rat(2));
    const Perturbation H = scaled_perturbation(B, 0.5);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
    CHECK(H.apply(0.3, x)[0] == Catch::Approx(0.5 * B.apply(0.3, x)[0]));
}
