#include <catch2/catch_amalgamated.hpp>

#include "walsh/dual.hpp"
#include "walsh/stats.hpp"

#include "fixtures.hpp"

using namespace walsh;

TEST_CASE("convex cost validation") {
    CHECK_NOTHROW(ConvexCost::exp_decay().validate());
    CHECK_NOTHROW(ConvexCost::sqrt_quad().validate());
    ConvexCost broken;
    CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
    ConvexCost concave = ConvexCost::exp_decay();
    concave.d2psi = [](double) { return -1.0; };
    CHECK_THROWS_AS(concave.validate(), std::invalid_argument);
}

TEST_CASE("constant barriers have closed-form certificates") {
    Barrier bar(fixtures::m2());
    DualCertificate cert(bar, ConvexCost::exp_decay());
    const double m = 7.0 / 3.0;
    // Delta(l) = l/m, so e^Delta J = e^{-l} m/(m+1) and everything is explicit
    const std::vector<double> levels{1.0, 2.0, 4.0};
    for (double l : {0.0, 0.4, 1.3, 3.0}) {
        CHECK(cert.delta(l) == Catch::Approx(l / m).margin(1e-9));
        CHECK(cert.J(l) == Catch::Approx(std::exp(-l / m - l) * m / (m + 1.0)).margin(1e-9));
        for (std::size_t g = 0; g < 3; ++g) {
            const double expected = 1.0 - std::exp(-l) * (m / (m + 1.0)) / levels[g];
            CHECK(cert.A(g, l) == Catch::Approx(expected).margin(1e-9));
            CHECK(cert.A(g, l) <= 1.0 + 1e-12);
        }
        CHECK(cert.E_integral(l) == Catch::Approx((1.0 - std::exp(-l)) * m / (m + 1.0)).margin(1e-9));
    }
    // G at the origin: psi(0) - E_total = 1 - m/(m+1) = 0.3
    for (int g = 0; g < 3; ++g) CHECK(cert.G(g, 0.0) == Catch::Approx(0.3).margin(1e-9));
    CHECK(cert.truncation_error() == 0.0);
}

TEST_CASE("dual consistency identity on both fixtures") {
    for (const auto& target : {fixtures::m2(), fixtures::m1()}) {
        Barrier bar(target);
        DualCertificate cert(bar, ConvexCost::exp_decay());
        for (double l : {0.0, 0.3, 1.1, 2.0, 3.5, 6.0}) {
            const double lhs = cert.A_total(l);
            const double rhs = cert.cost().dpsi(l) + std::exp(cert.delta(l)) * cert.J(l);
            CHECK(lhs == Catch::Approx(rhs).margin(1e-6));
        }
    }
}

TEST_CASE("equality holds exactly on the barrier") {
    Barrier bar(fixtures::m1());
    DualCertificate cert(bar, ConvexCost::exp_decay());
    for (double l : {0.1, 0.9, 1.7, 2.2, 3.0, 5.0}) {
        for (std::size_t g = 0; g < 2; ++g) {
            const double a = bar.level(g, l);
            const double gap = cert.M_value(static_cast<int>(g), a, l) + cert.G(static_cast<int>(g), a) - cert.cost().psi(l);
            CHECK(gap == Catch::Approx(0.0).margin(1e-9));
        }
    }
}

TEST_CASE("G is concave on each ray and below psi off the barrier") {
    Barrier bar(fixtures::m1());
    DualCertificate cert(bar, ConvexCost::exp_decay());
    for (std::size_t g = 0; g < 2; ++g) {
        double prev = cert.G(static_cast<int>(g), 0.0);
        double prev_slope = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= 40; ++i) {
            const double r = 0.1 * i;
            const double cur = cert.G(static_cast<int>(g), r);
            const double slope = (cur - prev) / 0.1;
            CHECK(slope <= prev_slope + 1e-9);
            prev_slope = slope;
            prev = cur;
        }
    }
    // strictly negative gap off the barrier: interior radius at small local time
    const double gap = cert.M_value(0, 1.5, 0.4) + cert.G(0, 1.5) - cert.cost().psi(0.4);
    CHECK(gap < -1e-4);
}

TEST_CASE("M is a martingale along simulated paths and zero at the start") {
    auto t = fixtures::m1();
    Barrier bar(t);
    DualCertificate cert(bar, ConvexCost::exp_decay());
    auto spin = compile_spin(bar.kappa(), t.ray_ids());
    SimParams p;
    p.dt = 1e-3;
    p.t_max = 60.0;
    p.n_paths = 400;
    p.seed = 19;
    p.threads = 2;
    const StoppingRule rule = vallois_rule(bar);
    std::vector<double> m_at;
    double max_gap = -1e300, max_stop_gap = 0.0, mean_skel = 0.0;
    std::size_t n_stop = 0;
    for (std::size_t i = 0; i < p.n_paths; ++i) {
        auto pr = run_one_path(rule, spin, p, i);
        auto m_traj = dual_M(pr.path, cert);
        CHECK(m_traj[0] == Catch::Approx(0.0).margin(1e-12));
        auto rep = pathwise_gap(pr.path, pr.sample, cert);
        max_gap = std::max(max_gap, rep.max_gap);
        if (rep.stopped) {
            ++n_stop;
            max_stop_gap = std::max(max_stop_gap, std::abs(rep.gap_at_stop));
            mean_skel += std::abs(rep.skeleton_stop_gap);
        }
        const std::size_t at = std::min<std::size_t>(pr.path.r.size() - 1, 1000);
        m_at.push_back(cert.M_value(pr.path.ray[at], pr.path.r[at], pr.path.m[at]));
    }
    REQUIRE(n_stop == p.n_paths);
    auto ci = mean_ci(m_at);
    CHECK(std::abs(ci.mean) <= ci.halfwidth);
    CHECK(max_gap <= 1e-8);        // stops land exactly on the barrier
    CHECK(max_stop_gap <= 1e-8);
    CHECK(mean_skel / static_cast<double>(n_stop) > 0.0);  // skeleton overshoot is the dt-sensitive part
}

TEST_CASE("gap is strictly negative at stops away from the barrier") {
    auto t = fixtures::m1();
    Barrier bar(t);
    DualCertificate cert(bar, ConvexCost::exp_decay());
    auto spin = compile_spin(bar.kappa(), t.ray_ids());
    SimParams p;
    p.dt = 1e-3;
    p.t_max = 10.0;
    p.n_paths = 1;
    auto pr = run_one_path(FixedTimeRule{0.7}, spin, p, 4);
    auto rep = pathwise_gap(pr.path, pr.sample, cert);
    REQUIRE(rep.stopped);
    CHECK(rep.gap_at_stop < 0.0);
}

TEST_CASE("bounded-derivative square-root cost is handled with a reported tail") {
    Barrier bar(fixtures::m1());
    DualCertificate cert(bar, ConvexCost::sqrt_quad());
    CHECK(cert.truncation_error() < 1e-3);
    CHECK(cert.truncation_error() > 0.0);
    for (double l : {0.0, 1.0, 2.5}) {
        const double lhs = cert.A_total(l);
        const double rhs = cert.cost().dpsi(l) + std::exp(cert.delta(l)) * cert.J(l);
        // the residual lives inside the reported first-order tail bound
        CHECK(lhs == Catch::Approx(rhs).margin(cert.truncation_error() + 1e-6));
        for (std::size_t g = 0; g < 2; ++g) CHECK(cert.A(g, l) <= 1.0 + 1e-9);
    }
    for (double l : {0.1, 1.3, 2.8}) {
        const double a = bar.level(0, l);
        const double gap = cert.M_value(0, a, l) + cert.G(0, a) - cert.cost().psi(l);
        CHECK(gap == Catch::Approx(0.0).margin(1e-6));
    }
}

TEST_CASE("targets with origin mass are rejected") {
    Barrier bar(fixtures::half_origin());
    CHECK_THROWS_AS(DualCertificate(bar, ConvexCost::exp_decay()), std::domain_error);
}
