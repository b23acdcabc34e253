#include <catch2/catch_amalgamated.hpp>

#include "walsh/rng.hpp"
#include "walsh/simulate.hpp"
#include "walsh/stats.hpp"

using namespace walsh;

TEST_CASE("ks distance against discrete laws") {
    RadialMeasure law({{1.0, 0.5}, {3.0, 0.5}}, {});
    std::vector<double> matched;
    for (int i = 0; i < 1000; ++i) matched.push_back(i % 2 ? 1.0 : 3.0);
    CHECK(ks_distance(matched, law) < 0.01);
    std::vector<double> wrong(1000, 1.0);
    CHECK(ks_distance(wrong, law) >= 0.5);
    CHECK_THROWS_AS(ks_distance(std::vector<double>{}, law), std::invalid_argument);
}

TEST_CASE("ks distance against a continuous cdf") {
    std::vector<double> u;
    for (int i = 0; i < 2000; ++i) u.push_back((i + 0.5) / 2000.0);
    const double d = ks_distance(u, std::function<double(double)>([](double x) { return std::clamp(x, 0.0, 1.0); }));
    CHECK(d <= 1.0 / 2000.0 + 1e-12);
}

TEST_CASE("wasserstein distances") {
    CHECK(wasserstein1(RadialMeasure::point_mass(1.0), RadialMeasure::point_mass(2.0)) == Catch::Approx(1.0));
    RadialMeasure law({{1.0, 0.5}, {3.0, 0.5}}, {});
    std::vector<double> matched;
    for (int i = 0; i < 1000; ++i) matched.push_back(i % 2 ? 1.0 : 3.0);
    CHECK(wasserstein1(matched, law) < 1e-12);
    CHECK(wasserstein1(std::vector<double>(100, 1.0), RadialMeasure::point_mass(2.0)) == Catch::Approx(1.0));
    // mixed law with a density piece: transport distance to its own mean
    RadialMeasure uniform({}, {{0.0, 2.0, 0.5}});
    CHECK(wasserstein1(uniform, RadialMeasure::point_mass(1.0)) == Catch::Approx(0.5));
}

TEST_CASE("ray chi-square") {
    auto even = chi2_rays({500, 500}, {0.5, 0.5});
    CHECK(even.stat < 1e-9);
    CHECK(even.dof == 1);
    auto off = chi2_rays({900, 100}, {0.5, 0.5});
    CHECK(off.stat > chi2_critical(1));
    CHECK(std::isinf(chi2_rays({10, 1}, {1.0, 0.0}).stat));
    CHECK_THROWS_AS(chi2_rays({1}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("chi-square critical values") {
    // Wilson-Hilferty at the 99.9% point vs tabulated values
    CHECK(chi2_critical(1) == Catch::Approx(10.83).margin(0.6));
    CHECK(chi2_critical(2) == Catch::Approx(13.82).margin(0.35));
    CHECK(chi2_critical(7) == Catch::Approx(24.32).margin(0.25));
}

TEST_CASE("mean confidence intervals") {
    CHECK(mean_ci({2.0, 2.0, 2.0, 2.0}).halfwidth == 0.0);
    std::vector<double> xs;
    PathRng rng(5, 0);
    for (int i = 0; i < 20000; ++i) xs.push_back(rng.normal());
    auto ci = mean_ci(xs);
    CHECK(std::abs(ci.mean) <= ci.halfwidth);
    CHECK(ci.halfwidth == Catch::Approx(3.0 / std::sqrt(20000.0)).epsilon(0.05));
}

TEST_CASE("poisson goodness of fit") {
    CHECK(poisson_gof(std::vector<std::int64_t>(100, 0), 0.0).stat == 0.0);
    PathRng rng(11, 0);
    auto sample_poisson = [&](double rate) {
        // inversion by multiplication of uniforms
        const double limit = std::exp(-rate);
        std::int64_t k = 0;
        double prod = rng.uniform();
        while (prod > limit) {
            ++k;
            prod *= rng.uniform();
        }
        return k;
    };
    std::vector<std::int64_t> counts;
    for (int i = 0; i < 4000; ++i) counts.push_back(sample_poisson(2.0));
    auto good = poisson_gof(counts, 2.0);
    CHECK(good.stat <= chi2_critical(good.dof));
    auto bad = poisson_gof(counts, 3.5);
    CHECK(bad.stat > chi2_critical(bad.dof));
    CHECK_THROWS_AS(poisson_gof({}, 1.0), std::invalid_argument);
}

TEST_CASE("cost comparison") {
    auto psi = [](double x) { return x + std::exp(-x); };
    std::vector<double> a{1.0, 2.0, 3.0}, b{1.0, 2.0, 3.0};
    auto same = compare_cost(a, b, psi);
    CHECK(same.delta_mean == Catch::Approx(0.0).margin(1e-15));
    std::vector<double> c{2.0, 3.0, 4.0};
    auto diff = compare_cost(a, c, psi);
    CHECK(diff.delta_mean < 0.0);
}

namespace {
StoppedSample make_sample(int ray, double radius, double tau, double lt) {
    StoppedSample s;
    s.ray = ray;
    s.radius = radius;
    s.tau = tau;
    s.local_time = lt;
    s.stopped = true;
    return s;
}
}  // namespace

TEST_CASE("empirical law merge equals concatenation and ignores order") {
    PathRng rng(3, 0);
    std::vector<StoppedSample> all;
    for (int i = 0; i < 200; ++i)
        all.push_back(make_sample(static_cast<int>(rng.uniform() * 2), rng.uniform() * 3, rng.uniform(), rng.uniform()));
    EmpiricalLaw whole(2, all);
    std::vector<StoppedSample> first(all.begin(), all.begin() + 77), second(all.begin() + 77, all.end());
    EmpiricalLaw merged(2, first);
    merged.merge(EmpiricalLaw(2, second));
    CHECK(merged.ray_counts() == whole.ray_counts());
    CHECK(merged.taus() == whole.taus());
    CHECK(merged.radii(0) == whole.radii(0));
    CHECK(merged.local_times() == whole.local_times());

    std::vector<StoppedSample> shuffled = all;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);
    EmpiricalLaw reordered(2, shuffled);
    CHECK(reordered.taus() == whole.taus());
    CHECK(reordered.radii(1) == whole.radii(1));
}

TEST_CASE("bridge extreme sampling matches the conditional law") {
    // fixed endpoints: P[max <= y] = 1 - exp(-2(y-w0)(y-w1)/dt)
    PathRng rng(123, 0);
    const double w0 = 0.2, w1 = -0.1, dt = 0.5;
    std::vector<double> maxima;
    for (int i = 0; i < 20000; ++i) maxima.push_back(bridge_max(w0, w1, dt, rng.uniform()));
    for (double m : maxima) CHECK(m >= std::max(w0, w1));
    auto cdf = std::function<double(double)>([&](double y) { return 1.0 - std::exp(-2.0 * (y - w0) * (y - w1) / dt); });
    CHECK(ks_distance(maxima, cdf) < 3.0 * ks_scale(maxima.size()));
    std::vector<double> minima;
    for (int i = 0; i < 5000; ++i) minima.push_back(bridge_min(w0, w1, dt, rng.uniform()));
    for (double m : minima) CHECK(m <= std::min(w0, w1));
}
