#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "walsh/measure.hpp"

// Statistics for comparing empirical stopped samples against analytic laws.
// Thresholds are fixed critical-value multiples rather than p-values; the
// callers document the multiple they use.

namespace walsh {

struct MeanCi {
    double mean = 0.0;
    double halfwidth = 0.0;
    std::size_t n = 0;
};

// CLT interval; `n_sigma` is the z multiple (the tolerances in this project
// are all phrased as "within 3 sigma").
inline MeanCi mean_ci(const std::vector<double>& xs, double n_sigma = 3.0) {
    MeanCi out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    out.halfwidth = n_sigma * std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

namespace detail {

// Cadlag CDF with finitely many breakpoints and constant slope between them.
// Covers both empirical CDFs (pure jumps) and the mixed radial laws.
struct CdfCurve {
    std::vector<double> x;      // breakpoints, ascending
    std::vector<double> left;   // F(x_i-)
    std::vector<double> right;  // F(x_i)
    std::vector<double> slope;  // slope on (x_i, x_{i+1}); size x.size() (last extends right)

    double eval_left(double q) const {
        if (x.empty()) return 0.0;
        auto it = std::lower_bound(x.begin(), x.end(), q);
        if (it != x.end() && *it == q) return left[static_cast<std::size_t>(it - x.begin())];
        if (it == x.begin()) return 0.0;
        const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
        return right[i] + slope[i] * (q - x[i]);
    }

    double eval_right(double q) const {
        if (x.empty()) return 0.0;
        auto it = std::upper_bound(x.begin(), x.end(), q);
        if (it == x.begin()) return 0.0;
        const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
        return right[i] + slope[i] * (q - x[i]);
    }
};

inline CdfCurve cdf_of(const RadialMeasure& law) {
    CdfCurve c;
    std::vector<double> bks;
    for (const auto& a : law.atoms()) bks.push_back(a.r);
    for (const auto& p : law.pieces()) {
        bks.push_back(p.lo);
        bks.push_back(p.hi);
    }
    std::sort(bks.begin(), bks.end());
    bks.erase(std::unique(bks.begin(), bks.end()), bks.end());
    for (double q : bks) {
        c.x.push_back(q);
        c.left.push_back(law.mass_below(q));
        c.right.push_back(law.mass_upto(q));
        double s = 0.0;
        for (const auto& p : law.pieces())
            if (q >= p.lo && q < p.hi) s = p.density;
        c.slope.push_back(s);
    }
    return c;
}

inline CdfCurve cdf_of_sorted_samples(const std::vector<double>& sorted) {
    CdfCurve c;
    const double n = static_cast<double>(sorted.size());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        c.x.push_back(sorted[i]);
        c.left.push_back(static_cast<double>(i) / n);
        c.right.push_back(static_cast<double>(j) / n);
        c.slope.push_back(0.0);
        i = j;
    }
    return c;
}

inline double ks_between(const CdfCurve& a, const CdfCurve& b) {
    double d = 0.0;
    for (const CdfCurve* c : {&a, &b})
        for (double q : c->x) {
            d = std::max(d, std::abs(a.eval_left(q) - b.eval_left(q)));
            d = std::max(d, std::abs(a.eval_right(q) - b.eval_right(q)));
        }
    return d;
}

inline double w1_between(const CdfCurve& a, const CdfCurve& b) {
    std::vector<double> grid;
    grid.reserve(a.x.size() + b.x.size());
    grid.insert(grid.end(), a.x.begin(), a.x.end());
    grid.insert(grid.end(), b.x.begin(), b.x.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double h = grid[i + 1] - grid[i];
        if (h <= 0.0) continue;
        // difference is affine on the open cell
        const double g0 = a.eval_right(grid[i]) - b.eval_right(grid[i]);
        const double g1 = a.eval_left(grid[i + 1]) - b.eval_left(grid[i + 1]);
        if (g0 * g1 >= 0.0) {
            acc += h * (std::abs(g0) + std::abs(g1)) / 2.0;
        } else {
            acc += h * (g0 * g0 + g1 * g1) / (2.0 * (std::abs(g0) + std::abs(g1)));
        }
    }
    return acc;
}

}  // namespace detail

// sup |F_n - F| against a radial law, evaluated conservatively on both sides
// of every jump of either CDF. `samples` need not be sorted.
inline double ks_distance(std::vector<double> samples, const RadialMeasure& law) {
    if (samples.empty()) throw std::invalid_argument("ks_distance needs samples");
    std::sort(samples.begin(), samples.end());
    return detail::ks_between(detail::cdf_of_sorted_samples(samples), detail::cdf_of(law));
}

// sup |F_n - F| against a continuous CDF.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_distance needs samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// Asymptotic one-sample KS critical value at ~99% is 1.63/sqrt(n); the
// conventional scale used throughout this project is 1.36/sqrt(n) times a
// documented multiple.
inline double ks_scale(std::size_t n) { return 1.36 / std::sqrt(static_cast<double>(n)); }

inline double wasserstein1(std::vector<double> samples, const RadialMeasure& law) {
    if (samples.empty()) throw std::invalid_argument("wasserstein1 needs samples");
    std::sort(samples.begin(), samples.end());
    return detail::w1_between(detail::cdf_of_sorted_samples(samples), detail::cdf_of(law));
}

inline double wasserstein1(const RadialMeasure& a, const RadialMeasure& b) {
    return detail::w1_between(detail::cdf_of(a), detail::cdf_of(b));
}

struct Chi2Result {
    double stat = 0.0;
    int dof = 0;
};

inline Chi2Result chi2_rays(const std::vector<std::int64_t>& counts, const std::vector<double>& pmf) {
    if (counts.size() != pmf.size()) throw std::invalid_argument("chi2_rays: size mismatch");
    std::int64_t n = 0;
    for (auto c : counts) n += c;
    if (n == 0) throw std::invalid_argument("chi2_rays: empty sample");
    Chi2Result out;
    int bins = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double expected = pmf[i] * static_cast<double>(n);
        if (expected <= 0.0) {
            if (counts[i] != 0) out.stat = std::numeric_limits<double>::infinity();
            continue;
        }
        const double d = static_cast<double>(counts[i]) - expected;
        out.stat += d * d / expected;
        ++bins;
    }
    out.dof = std::max(1, bins - 1);
    return out;
}

// Wilson-Hilferty approximation of the chi-square quantile. Default z
// corresponds to the 99.9% point; tests document the multiple they use.
inline double chi2_critical(int dof, double z = 3.0902) {
    const double d = static_cast<double>(dof);
    const double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
    return d * t * t * t;
}

inline double poisson_pmf(int k, double rate) {
    if (rate == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-rate + static_cast<double>(k) * std::log(rate) - std::lgamma(static_cast<double>(k) + 1.0));
}

// Binned chi-square against Poisson(rate); bins are merged from both tails
// until each expected count is >= 5. Input is one count per path.
inline Chi2Result poisson_gof(const std::vector<std::int64_t>& counts, double rate) {
    if (counts.empty()) throw std::invalid_argument("poisson_gof needs counts");
    if (rate < 0.0) throw std::invalid_argument("poisson_gof: negative rate");
    std::int64_t kmax = 0;
    for (auto c : counts) kmax = std::max(kmax, c);
    std::vector<double> obs(static_cast<std::size_t>(kmax) + 1, 0.0);
    for (auto c : counts) obs[static_cast<std::size_t>(c)] += 1.0;
    const double n = static_cast<double>(counts.size());
    std::vector<double> expd(obs.size());
    double head = 0.0;
    for (std::size_t k = 0; k < expd.size(); ++k) {
        expd[k] = n * poisson_pmf(static_cast<int>(k), rate);
        head += expd[k];
    }
    // everything above kmax goes into the top bin
    expd.back() += n - head;

    std::vector<double> o_merged, e_merged;
    double oa = 0.0, ea = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k) {
        oa += obs[k];
        ea += expd[k];
        if (ea >= 5.0) {
            o_merged.push_back(oa);
            e_merged.push_back(ea);
            oa = ea = 0.0;
        }
    }
    if (ea > 0.0 || oa > 0.0) {
        if (e_merged.empty()) {
            o_merged.push_back(oa);
            e_merged.push_back(ea);
        } else {
            o_merged.back() += oa;
            e_merged.back() += ea;
        }
    }
    Chi2Result out;
    for (std::size_t i = 0; i < o_merged.size(); ++i) {
        if (e_merged[i] <= 0.0) continue;
        const double d = o_merged[i] - e_merged[i];
        out.stat += d * d / e_merged[i];
    }
    out.dof = std::max(1, static_cast<int>(o_merged.size()) - 1);
    return out;
}

struct CostComparison {
    double delta_mean = 0.0;  // mean cost(a) - mean cost(b)
    double halfwidth = 0.0;   // combined CI halfwidth
};

template <class Psi>
CostComparison compare_cost(const std::vector<double>& local_times_a, const std::vector<double>& local_times_b, Psi&& psi,
                            double n_sigma = 3.0) {
    std::vector<double> ca, cb;
    ca.reserve(local_times_a.size());
    cb.reserve(local_times_b.size());
    for (double l : local_times_a) ca.push_back(psi(l));
    for (double l : local_times_b) cb.push_back(psi(l));
    const MeanCi ma = mean_ci(ca, n_sigma);
    const MeanCi mb = mean_ci(cb, n_sigma);
    CostComparison out;
    out.delta_mean = ma.mean - mb.mean;
    out.halfwidth = std::sqrt(ma.halfwidth * ma.halfwidth + mb.halfwidth * mb.halfwidth);
    return out;
}

// Aggregated view of a batch of stopped samples: ray counts, per-ray sorted
// radii, and the tau / local-time samples. Merging two laws equals building
// one from the concatenated samples.
class EmpiricalLaw {
  public:
    explicit EmpiricalLaw(std::size_t n_rays) : counts_(n_rays, 0), radii_(n_rays) {}

    template <class SampleRange>
    EmpiricalLaw(std::size_t n_rays, const SampleRange& samples) : EmpiricalLaw(n_rays) {
        for (const auto& s : samples) {
            if (!s.stopped) {
                ++censored_;
                continue;
            }
            add(s.ray, s.radius, s.tau, s.local_time);
        }
        finalize();
    }

    void add(int ray, double radius, double tau, double local_time) {
        if (ray < 0 || static_cast<std::size_t>(ray) >= counts_.size()) throw std::invalid_argument("ray index out of range");
        ++counts_[static_cast<std::size_t>(ray)];
        radii_[static_cast<std::size_t>(ray)].push_back(radius);
        taus_.push_back(tau);
        local_times_.push_back(local_time);
    }

    void finalize() {
        for (auto& v : radii_) std::sort(v.begin(), v.end());
        std::sort(taus_.begin(), taus_.end());
        std::sort(local_times_.begin(), local_times_.end());
    }

    void merge(const EmpiricalLaw& other) {
        if (other.counts_.size() != counts_.size()) throw std::invalid_argument("merge: ray count mismatch");
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            counts_[i] += other.counts_[i];
            std::vector<double> merged(radii_[i].size() + other.radii_[i].size());
            std::merge(radii_[i].begin(), radii_[i].end(), other.radii_[i].begin(), other.radii_[i].end(), merged.begin());
            radii_[i] = std::move(merged);
        }
        auto merge_sorted = [](std::vector<double>& a, const std::vector<double>& b) {
            std::vector<double> m(a.size() + b.size());
            std::merge(a.begin(), a.end(), b.begin(), b.end(), m.begin());
            a = std::move(m);
        };
        merge_sorted(taus_, other.taus_);
        merge_sorted(local_times_, other.local_times_);
        censored_ += other.censored_;
    }

    const std::vector<std::int64_t>& ray_counts() const { return counts_; }
    const std::vector<double>& radii(std::size_t ray) const { return radii_[ray]; }
    const std::vector<double>& taus() const { return taus_; }
    const std::vector<double>& local_times() const { return local_times_; }
    std::size_t censored() const { return censored_; }
    std::size_t size() const { return taus_.size(); }

  private:
    std::vector<std::int64_t> counts_;
    std::vector<std::vector<double>> radii_;
    std::vector<double> taus_;
    std::vector<double> local_times_;
    std::size_t censored_ = 0;
};

}  // namespace walsh
