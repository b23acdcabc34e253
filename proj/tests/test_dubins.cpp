#include <catch2/catch_amalgamated.hpp>

#include "walsh/dubins.hpp"
#include "walsh/rng.hpp"
#include "walsh/stats.hpp"

#include "fixtures.hpp"

using namespace walsh;

TEST_CASE("refinement levels on the two-atom ray") {
    auto t = fixtures::m1();
    auto tree = refine(t, 2);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(tree.level_points(0, 1) == std::vector<double>{0.0, 2.0, inf});
    CHECK(tree.level_points(0, 2) == std::vector<double>{0.0, 1.0, 2.0, 3.0, inf});
    // a point-mass ray collapses: the empty interval keeps its left endpoint
    CHECK(tree.level_points(1, 2) == std::vector<double>{0.0, 0.0, 2.0, 2.0, inf});
    for (std::size_t g = 0; g < 2; ++g)
        for (int l = 0; l <= 2; ++l) {
            double mass = 0.0;
            for (int idx : tree.rays[g].levels[static_cast<std::size_t>(l)])
                mass += tree.rays[g].nodes[static_cast<std::size_t>(idx)].mass;
            CHECK(mass == Catch::Approx(1.0).margin(1e-12));
        }
    CHECK_THROWS_AS(refine(t, 0), std::invalid_argument);
}

TEST_CASE("point-mass rays absorb at every depth") {
    RawMeasureSpec raw;
    raw.rays.push_back({"g", 1.0, {{1.7, 1.0}}, {}});
    auto t = polar_decompose(raw);
    auto tree = refine(t, 5);
    for (int l = 1; l <= 5; ++l)
        for (int idx : tree.rays[0].levels[static_cast<std::size_t>(l)]) {
            const auto& nd = tree.rays[0].nodes[static_cast<std::size_t>(idx)];
            if (nd.mass > 0.0) CHECK(nd.bary == Catch::Approx(1.7));
        }
    auto law = analytic_law(t, 5);
    CHECK(law.expected_tau == Catch::Approx(1.7 * 1.7).margin(1e-14));
}

TEST_CASE("analytic stage laws on the fixtures") {
    auto t = fixtures::m1();
    auto law1 = analytic_law(t, 1);
    CHECK(law1.ray_pmf == std::vector<double>{0.5, 0.5});
    REQUIRE(law1.rays[0].radius.size() == 1);
    CHECK(law1.rays[0].radius[0] == Catch::Approx(2.0));
    CHECK(law1.expected_tau == Catch::Approx(4.0).margin(1e-12));

    auto law2 = analytic_law(t, 2);
    REQUIRE(law2.rays[0].radius.size() == 2);
    CHECK(law2.rays[0].radius[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(law2.rays[0].radius[1] == Catch::Approx(3.0).margin(1e-12));
    CHECK(law2.rays[0].prob[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(law2.rays[1].radius.size() == 1);
    CHECK(law2.rays[1].radius[0] == Catch::Approx(2.0).margin(1e-12));
    CHECK(law2.rays[1].prob[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(law2.expected_tau == Catch::Approx(4.5).margin(1e-12));
    CHECK(law2.expected_tau == Catch::Approx(second_moment(t)).margin(1e-12));
}

TEST_CASE("stage probabilities follow the splitting ratio", "[property]") {
    PathRng rng(4242, 0);
    for (int rep = 0; rep < 10; ++rep) {
        RawMeasureSpec raw;
        RawRay ray;
        ray.id = "g";
        ray.weight = 1.0;
        double total = 0.0;
        const int n_atoms = 3 + static_cast<int>(rng.uniform() * 5);
        for (int i = 0; i < n_atoms; ++i) {
            const double m = 0.1 + rng.uniform();
            ray.atoms.push_back({0.2 + 4.0 * rng.uniform(), m});
            total += m;
        }
        for (auto& a : ray.atoms) a.mass /= total;
        raw.rays.push_back(ray);
        auto t = polar_decompose(raw);
        auto tree = refine(t, 4);
        for (int l = 0; l < 4; ++l)
            for (int idx : tree.rays[0].levels[static_cast<std::size_t>(l)]) {
                const auto& nd = tree.rays[0].nodes[static_cast<std::size_t>(idx)];
                if (nd.mass <= 0.0 || nd.left < 0) continue;
                const auto& lo = tree.rays[0].nodes[static_cast<std::size_t>(nd.left)];
                const auto& hi = tree.rays[0].nodes[static_cast<std::size_t>(nd.right)];
                if (hi.bary == lo.bary) continue;
                const double ratio = (hi.bary - nd.bary) / (hi.bary - lo.bary);
                CHECK(nd.mass * ratio == Catch::Approx(lo.mass).margin(1e-10));
            }
    }
}

TEST_CASE("discretized measures keep the mean and converge") {
    auto uniform = RadialMeasure({}, {{0.0, 2.0, 0.5}});
    auto d1 = refined_measure(uniform, 1);
    REQUIRE(d1.atoms().size() == 1);
    CHECK(d1.atoms()[0].r == Catch::Approx(1.0));
    auto d2 = refined_measure(uniform, 2);
    REQUIRE(d2.atoms().size() == 2);
    CHECK(d2.atoms()[0].r == Catch::Approx(0.5));
    CHECK(d2.atoms()[1].r == Catch::Approx(1.5));

    auto m1A = RadialMeasure({{1.0, 0.5}, {3.0, 0.5}}, {});
    auto e2 = refined_measure(m1A, 2);
    REQUIRE(e2.atoms().size() == 2);
    CHECK(e2.atoms()[0].r == Catch::Approx(1.0).margin(1e-14));
    CHECK(e2.atoms()[0].mass == Catch::Approx(0.5).margin(1e-14));

    double prev_w1 = std::numeric_limits<double>::infinity();
    double prev_second = 0.0;
    for (int depth = 1; depth <= 7; ++depth) {
        auto d = refined_measure(uniform, depth);
        CHECK(d.mean() == Catch::Approx(1.0).margin(1e-12));  // mean preserved at every level
        const double second = d.second_moment();
        CHECK(second >= prev_second - 1e-12);
        CHECK(second <= uniform.second_moment() + 1e-12);
        prev_second = second;
        const double w1 = wasserstein1(d, uniform);
        CHECK(w1 <= prev_w1 + 1e-12);
        prev_w1 = w1;
    }
    CHECK(prev_w1 < 0.02);
}

TEST_CASE("rule construction requires a centered spinning measure") {
    auto t = fixtures::m1();
    CHECK_THROWS_AS(dubins_rule(t, SpinningMeasure({{"A", 0.8}, {"B", 0.2}}), 2), std::domain_error);
    CHECK_NOTHROW(dubins_rule(t, centered_spinning(t), 2));
}

TEST_CASE("executed rule reproduces the analytic law") {
    auto t = fixtures::m1();
    auto kappa = centered_spinning(t);
    auto spin = compile_spin(kappa, t.ray_ids());
    auto rule = dubins_rule(t, kappa, 2);
    SimParams p;
    p.dt = 1e-3;
    p.t_max = 100.0;
    p.n_paths = 6000;
    p.seed = 31;
    p.threads = 2;
    auto samples = run_until(rule, spin, p);
    EmpiricalLaw law(2, samples);
    CHECK(law.censored() == 0);
    auto chi = chi2_rays(law.ray_counts(), {0.5, 0.5});
    CHECK(chi.stat <= chi2_critical(chi.dof));
    CHECK(wasserstein1(law.radii(0), t.ray(0).radial) <= 0.05);
    CHECK(wasserstein1(law.radii(1), t.ray(1).radial) <= 0.05);
    auto tau = mean_ci(law.taus());
    CHECK(std::abs(tau.mean - 4.5) <= tau.halfwidth + 0.02 * 4.5);
    // every stop of the depth-2 rule rests on a refinement point
    for (const auto& s : samples)
        if (s.ray == 0)
            CHECK((s.radius == 1.0 || s.radius == 3.0));
        else
            CHECK(s.radius == 2.0);
}

TEST_CASE("origin atoms absorb the rule at the origin") {
    RawMeasureSpec raw;
    raw.rays.push_back({"g", 1.0, {{2.0, 1.0}}, {}});
    raw.origin_mass = 0.25;
    auto t = polar_decompose(raw);
    auto law = analytic_law(t, 2);
    REQUIRE(law.rays[0].radius.size() == 2);
    CHECK(law.rays[0].radius[0] == Catch::Approx(0.0));
    CHECK(law.rays[0].prob[0] == Catch::Approx(0.25));

    auto kappa = centered_spinning(t);
    auto spin = compile_spin(kappa, t.ray_ids());
    SimParams p;
    p.dt = 1e-3;
    p.t_max = 100.0;
    p.n_paths = 4000;
    p.seed = 8;
    p.threads = 2;
    auto samples = run_until(dubins_rule(t, kappa, 4), spin, p);
    double at_zero = 0;
    for (const auto& s : samples) {
        REQUIRE(s.stopped);
        if (s.radius == 0.0) at_zero += 1;
    }
    const double p_hat = at_zero / static_cast<double>(samples.size());
    CHECK(std::abs(p_hat - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / samples.size()));
}
