#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "walsh/measure.hpp"

// Per-ray potential of the scaled radial law (pushforward under
// r -> m r / m_gamma, so every scaled law has mean m):
//
//   c(r) = m + E[(r - X)+],
//
// a convex function with c(0) = m, c(r) >= r, right derivative equal to the
// scaled CDF, and c(r) - r -> 0. Its lower tangent from (0, s) is resolved
// exactly into branches: constant tangency radius across intercept ranges
// spanned by atoms, closed-form tangency inside constant-density pieces.

namespace walsh {

class RayPotential {
  public:
    struct Branch {
        double s_lo, s_hi;  // intercept range covered (both ends inclusive)
        bool is_const;
        // constant branch
        double r = 0.0;
        double c_r = 0.0;
        // quadratic branch: r(s) = sqrt(alpha^2 + 2 (i_alpha - s) / dens)
        double alpha = 0.0, dens = 0.0, i_alpha = 0.0, f_alpha = 0.0;
    };

    RayPotential(const RadialMeasure& radial, double mean_total)
        : scaled_(scale_law(radial, mean_total / radial.mean())), m_(mean_total) {
        if (!(radial.mean() > 0.0)) throw std::domain_error("ray potential needs a positive barycenter");
        build_branches();
    }

    double m() const { return m_; }
    const RadialMeasure& scaled_law() const { return scaled_; }
    double max_support() const { return scaled_.max_support(); }

    double value(double r) const {
        if (r < 0.0) throw std::domain_error("potential evaluated at negative radius");
        return m_ + r * scaled_.mass_below(r) - scaled_.partial_mean(0.0, r);
    }

    double cdf(double r) const { return scaled_.mass_upto(r); }
    double cdf_left(double r) const { return scaled_.mass_below(r); }

    const std::vector<Branch>& branches() const { return branches_; }

    // Tangency radius of the lower tangent through (0, s); ties resolved to
    // the largest radius. Defined for 0 <= s < m.
    double zeta(double s) const {
        const Branch& b = branch_at(s);
        if (b.is_const) return b.r;
        const double arg = b.alpha * b.alpha + 2.0 * (b.i_alpha - s) / b.dens;
        return std::sqrt(std::max(arg, b.alpha * b.alpha));
    }

    // Slope of that tangent.
    double phi(double s) const {
        const Branch& b = branch_at(s);
        if (b.is_const) return (b.c_r - s) / b.r;
        return b.f_alpha + b.dens * (zeta(s) - b.alpha);
    }

    // inf{ s : zeta(u) <= x for all u >= s }; returns m when the tangency
    // radius never falls to x (then the barrier stays above x forever).
    double s_where_zeta_below(double x) const {
        for (const Branch& b : branches_) {
            if (b.is_const) {
                if (b.r <= x) return b.s_lo;
                continue;
            }
            if (b.alpha > x) continue;  // whole branch above x
            const double r_hi = std::sqrt(std::max(b.alpha * b.alpha + 2.0 * (b.i_alpha - b.s_lo) / b.dens, 0.0));
            if (r_hi <= x) return b.s_lo;
            return b.i_alpha - b.dens * (x * x - b.alpha * b.alpha) / 2.0;
        }
        return m_;
    }

  private:
    static RadialMeasure scale_law(const RadialMeasure& radial, double scale) {
        if (!(scale > 0.0) || !std::isfinite(scale)) throw std::domain_error("ray potential needs a positive barycenter");
        std::vector<RadialAtom> atoms;
        for (const auto& a : radial.atoms()) atoms.push_back({a.r * scale, a.mass});
        std::vector<DensityPiece> pieces;
        for (const auto& p : radial.pieces()) pieces.push_back({p.lo * scale, p.hi * scale, p.density / scale});
        return RadialMeasure(std::move(atoms), std::move(pieces));
    }

    const Branch& branch_at(double s) const {
        if (s < 0.0 || s >= m_) throw std::domain_error("tangent intercept must lie in [0, m)");
        // first branch (largest radius) whose range still contains s
        std::size_t lo = 0, hi = branches_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (s <= branches_[mid].s_hi)
                hi = mid;
            else
                lo = mid + 1;
        }
        return branches_[lo];
    }

    void build_branches() {
        // Structural breakpoints of the scaled law, descending.
        std::vector<double> pts;
        for (const auto& a : scaled_.atoms())
            if (a.r > 0.0) pts.push_back(a.r);
        for (const auto& p : scaled_.pieces()) {
            if (p.lo > 0.0) pts.push_back(p.lo);
            pts.push_back(p.hi);
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        if (pts.empty()) throw std::domain_error("ray potential needs mass away from the origin");

        auto intercept_right = [&](double r) { return value(r) - r * cdf(r); };
        auto intercept_left = [&](double r) { return value(r) - r * cdf_left(r); };
        auto density_at = [&](double r) {
            for (const auto& p : scaled_.pieces())
                if (r >= p.lo && r < p.hi) return p.density;
            return 0.0;
        };

        for (std::size_t k = pts.size(); k-- > 0;) {
            const double p = pts[k];
            const double ir = intercept_right(p);
            const double il = intercept_left(p);
            if (il > ir) {
                Branch b;
                b.s_lo = branches_.empty() ? 0.0 : branches_.back().s_hi;
                b.s_hi = il;
                b.is_const = true;
                b.r = p;
                b.c_r = value(p);
                branches_.push_back(b);
            }
            // the stretch just below p, down to the next breakpoint (or 0)
            const double q = (k == 0) ? 0.0 : pts[k - 1];
            const double d_inside = density_at(0.5 * (q + p));
            if (d_inside > 0.0) {
                Branch b;
                b.s_lo = branches_.empty() ? 0.0 : branches_.back().s_hi;
                b.alpha = q;
                b.dens = d_inside;
                b.f_alpha = cdf(q);
                b.i_alpha = value(q) - q * cdf(q);
                b.s_hi = b.i_alpha;
                b.is_const = false;
                branches_.push_back(b);
            }
            // plain linear stretches contribute only the shared tie point,
            // which the inclusive interval ends already resolve upward
        }
        // The last branch always tops out at exactly m; pin it against
        // rounding so lookups cover all of [0, m).
        branches_.back().s_hi = m_;
    }

    RadialMeasure scaled_;
    double m_;
    std::vector<Branch> branches_;
};

// Tangent data at intercept s: (tangency radius, slope).
inline std::pair<double, double> tangent(const RayPotential& c, double s) {
    return {c.zeta(s), c.phi(s)};
}

}  // namespace walsh
