#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "walsh/measure.hpp"
#include "walsh/potential.hpp"
#include "walsh/simulate.hpp"

// Barrier embedding: tangents of the per-ray potentials give zeta/phi, the
// mixture Lambda(s) = sum_g w_g phi_g(s) drives the local-time change of
// variable H(s) = int_0^s du/Lambda(u), and the stopping surface is
// a_g(l) = (m_g/m) zeta_g(H^{-1}(l)). On stretches where every ray's tangency
// is pinned at an atom, Lambda is affine and H, H^{-1} are closed-form;
// density stretches are integrated adaptively between exact breakpoints.

namespace walsh {

struct BarrierGrid {
    double lambda_floor = 1e-6;          // survival mass left beyond the table cap
    int samples_per_smooth_piece = 129;  // rule sampling of non-constant tangency arcs

    void validate() const {
        if (!(lambda_floor > 0.0) || !(lambda_floor < 0.5)) throw std::invalid_argument("lambda_floor must lie in (0, 0.5)");
        if (samples_per_smooth_piece < 2) throw std::invalid_argument("smooth pieces need at least 2 grid samples");
    }
};

namespace detail {

template <class F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

template <class F>
double adaptive_simpson(F f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace detail

class Barrier {
  public:
    explicit Barrier(const TargetMeasure& target, BarrierGrid grid = {})
        : grid_(grid), m_(first_moment(target)), kappa_(centered_spinning(target)) {
        grid_.validate();
        for (std::size_t g = 0; g < target.ray_count(); ++g) {
            ids_.push_back(target.ray(g).id);
            weights_.push_back(target.ray(g).weight);
            inv_scale_.push_back(target.ray_mean(g) / m_);
            kappa_probs_.push_back(kappa_.prob(target.ray(g).id));
            potentials_.emplace_back(target.ray(g).radial, m_);
        }
        // survival mass pinned at the origin atoms: lim_{s->m} Lambda(s)
        lambda_end_ = 0.0;
        for (std::size_t g = 0; g < potentials_.size(); ++g)
            for (const auto& a : potentials_[g].scaled_law().atoms())
                if (a.r == 0.0) lambda_end_ += weights_[g] * a.mass;
        build_pieces();
    }

    std::size_t ray_count() const { return potentials_.size(); }
    const std::vector<std::string>& ray_ids() const { return ids_; }
    const RayPotential& potential(std::size_t g) const { return potentials_[g]; }
    const SpinningMeasure& kappa() const { return kappa_; }
    double mean() const { return m_; }
    double s_cap() const { return s_cap_; }
    double l_cap() const { return l_cap_; }
    double truncated_mass() const { return origin_capped_ ? 0.0 : lambda_cap_; }
    // finite once the target carries origin mass: barrier vanishes from here on
    double origin_local_time() const { return origin_capped_ ? l_cap_ : std::numeric_limits<double>::infinity(); }

    double lambda(double s) const {
        if (s < 0.0 || s >= m_) throw std::domain_error("lambda is defined on [0, m)");
        double acc = 0.0;
        for (std::size_t g = 0; g < potentials_.size(); ++g) acc += weights_[g] * potentials_[g].phi(s);
        return acc;
    }

    double H(double s) const {
        if (s < 0.0 || s >= m_) throw std::domain_error("H is defined on [0, m)");
        const std::size_t j = piece_index(s);
        return pieces_[j].H0 + piece_partial(j, s);
    }

    double H_inv(double l) const {
        if (l < 0.0) throw std::domain_error("H_inv needs l >= 0");
        if (l >= l_cap_) return s_cap_;
        std::size_t lo = 0, hi = pieces_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (pieces_[mid].H0 <= l)
                lo = mid;
            else
                hi = mid - 1;
        }
        const Piece& p = pieces_[lo];
        const double rem = l - p.H0;
        const double s1 = std::min(p.s1, s_cap_);
        if (p.linear) {
            // Lambda(s) = Lam0 e^{-B (l - H0)} on the piece
            const double lam = p.lam0 * std::exp(-p.B * rem);
            return std::min(s1, (p.A - lam) / p.B);
        }
        double a = p.s0, b = s1;
        for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + b); ++it) {
            const double mid = 0.5 * (a + b);
            if (piece_partial(lo, mid) <= rem)
                a = mid;
            else
                b = mid;
        }
        return 0.5 * (a + b);
    }

    // a_gamma(l), in original radius units. Right-continuous in l; zero once
    // local time passes the origin cap (targets with origin mass).
    double level(std::size_t ray, double l) const {
        if (l < 0.0) throw std::domain_error("barrier level needs l >= 0");
        if (origin_capped_ && l >= l_cap_) return 0.0;
        return inv_scale_[ray] * potentials_[ray].zeta(H_inv(l));
    }

    // inf{ l : a_gamma(l) <= r }; +inf when the barrier never falls to r.
    double b_inverse(std::size_t ray, double r) const {
        if (!(r >= 0.0)) throw std::domain_error("b_inverse needs r >= 0");
        const double s_star = potentials_[ray].s_where_zeta_below(r / inv_scale_[ray]);
        if (s_star >= s_cap_) {
            if (origin_capped_) return l_cap_;
            return s_star >= m_ ? std::numeric_limits<double>::infinity() : l_cap_;
        }
        return H(s_star);
    }

    // Exact local-time exponent: Delta(l) = -ln Lambda(H^{-1}(l)), affine with
    // slope sum_g w_g / zeta_g(s_cap) beyond the cap.
    double delta(double l) const {
        if (l < 0.0) throw std::domain_error("delta needs l >= 0");
        if (l >= l_cap_) {
            if (origin_capped_) return std::numeric_limits<double>::infinity();
            return -std::log(lambda_cap_) + delta_slope_cap_ * (l - l_cap_);
        }
        return -std::log(lambda(H_inv(l)));
    }

    double delta_slope_cap() const { return delta_slope_cap_; }

    // Executable form: per-ray breakpoints in local time with exact constant
    // stretches where tangency is pinned at an atom and sampled linear
    // stretches across density arcs.
    PiecewiseBarrier compile() const {
        PiecewiseBarrier pb;
        pb.rays.resize(ray_count());
        for (std::size_t g = 0; g < ray_count(); ++g) {
            auto& ray = pb.rays[g];
            const auto& branches = potentials_[g].branches();
            for (const auto& br : branches) {
                const double lo = br.s_lo;
                if (lo >= s_cap_) break;
                const double hi = std::min(br.s_hi, s_cap_);
                if (br.is_const) {
                    push_point(ray, H(lo), inv_scale_[g] * br.r, false);
                } else {
                    const int n = grid_.samples_per_smooth_piece;
                    for (int i = 0; i < n; ++i) {
                        const double s = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
                        const double sq = std::min(s, std::nextafter(m_, 0.0));
                        push_point(ray, H(sq), inv_scale_[g] * potentials_[g].zeta(sq), true);
                    }
                }
                if (hi >= s_cap_) break;
            }
            if (ray.l.empty()) throw std::runtime_error("barrier table is empty");
            if (origin_capped_) ray.zero_from = l_cap_;
            for (std::size_t j = 0; j + 1 < ray.a.size(); ++j)
                if (ray.a[j + 1] > ray.a[j] + 1e-9 * (1.0 + ray.a[j]))
                    throw std::runtime_error("barrier grid too coarse to certify monotonicity on ray " + ids_[g]);
        }
        return pb;
    }

  private:
    struct Piece {
        double s0, s1;
        double H0;    // H(s0)
        double lam0;  // Lambda(s0)
        bool linear;
        double A = 0.0, B = 0.0;  // Lambda(s) = A - B s when linear
    };

    static void push_point(PiecewiseBarrier::Ray& ray, double l, double a, bool lin) {
        if (!ray.l.empty()) {
            if (l <= ray.l.back()) {
                // branch transition at the same local time: keep the later
                // (smaller) value, the earlier one applies on a null set
                ray.a.back() = a;
                return;
            }
            ray.lin.push_back(lin ? 1 : 0);
        }
        ray.l.push_back(l);
        ray.a.push_back(a);
    }

    std::size_t piece_index(double s) const {
        std::size_t lo = 0, hi = pieces_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (pieces_[mid].s0 <= s)
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    }

    // int_{s0}^{s} du / Lambda(u) within piece j
    double piece_partial(std::size_t j, double s) const {
        const Piece& p = pieces_[j];
        if (s <= p.s0) return 0.0;
        if (p.linear) return std::log(p.lam0 / (p.A - p.B * s)) / p.B;
        return detail::adaptive_simpson([&](double u) { return 1.0 / lambda(std::min(u, std::nextafter(m_, 0.0))); }, p.s0, s,
                                        1e-12);
    }

    void build_pieces() {
        std::vector<double> edges{0.0, m_};
        for (const auto& pot : potentials_)
            for (const auto& br : pot.branches())
                if (br.s_hi > 0.0 && br.s_hi < m_) edges.push_back(br.s_hi);
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        double Hacc = 0.0;
        for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
            Piece p;
            p.s0 = edges[j];
            p.s1 = edges[j + 1];
            p.H0 = Hacc;
            p.lam0 = lambda(p.s0);
            p.linear = true;
            p.A = p.B = 0.0;
            const double mid = 0.5 * (p.s0 + p.s1);
            for (std::size_t g = 0; g < potentials_.size(); ++g) {
                const auto& br = branch_of(potentials_[g], mid);
                if (!br.is_const) {
                    p.linear = false;
                    break;
                }
                p.A += weights_[g] * br.c_r / br.r;
                p.B += weights_[g] / br.r;
            }
            pieces_.push_back(p);
            // the last piece can diverge at m; the cap logic integrates it
            if (j + 2 < edges.size()) Hacc += piece_partial(j, p.s1);
        }

        // Cap where the survival mass drops to the floor (or at m when the
        // origin atoms keep Lambda bounded away from zero).
        if (lambda_end_ >= grid_.lambda_floor) {
            origin_capped_ = lambda_end_ > 0.0;
            s_cap_ = m_;
            lambda_cap_ = lambda_end_;
            const std::size_t last = pieces_.size() - 1;
            l_cap_ = pieces_[last].H0 + piece_partial(last, std::nextafter(m_, 0.0));
        } else {
            origin_capped_ = false;
            std::size_t j = 0;
            while (j + 1 < pieces_.size() && lambda(pieces_[j].s1) > grid_.lambda_floor) ++j;
            const Piece& p = pieces_[j];
            double scap;
            if (p.linear) {
                scap = (p.A - grid_.lambda_floor) / p.B;
            } else {
                double a = p.s0, b = std::nextafter(std::min(p.s1, m_), p.s0);
                for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + b); ++it) {
                    const double mid = 0.5 * (a + b);
                    if (lambda(mid) > grid_.lambda_floor)
                        a = mid;
                    else
                        b = mid;
                }
                scap = 0.5 * (a + b);
            }
            s_cap_ = std::min(scap, std::nextafter(m_, 0.0));
            lambda_cap_ = lambda(s_cap_);
            l_cap_ = pieces_[piece_index(s_cap_)].H0 + piece_partial(piece_index(s_cap_), s_cap_);
        }
        delta_slope_cap_ = 0.0;
        const double s_probe = std::min(s_cap_, std::nextafter(m_, 0.0));
        for (std::size_t g = 0; g < potentials_.size(); ++g)
            delta_slope_cap_ += weights_[g] / potentials_[g].zeta(s_probe);
    }

    static const RayPotential::Branch& branch_of(const RayPotential& pot, double s) {
        for (const auto& br : pot.branches())
            if (s <= br.s_hi) return br;
        return pot.branches().back();
    }

    BarrierGrid grid_;
    double m_ = 0.0;
    SpinningMeasure kappa_;
    std::vector<std::string> ids_;
    std::vector<double> weights_;
    std::vector<double> inv_scale_;     // m_gamma / m
    std::vector<double> kappa_probs_;
    std::vector<RayPotential> potentials_;
    std::vector<Piece> pieces_;
    double lambda_end_ = 0.0;
    double lambda_cap_ = 0.0;
    double s_cap_ = 0.0;
    double l_cap_ = 0.0;
    double delta_slope_cap_ = 0.0;
    bool origin_capped_ = false;
};

inline Barrier build_barrier(const TargetMeasure& target, BarrierGrid grid = {}) { return Barrier(target, grid); }

// P[L_tau >= H(s)] = Lambda(s).
inline double local_time_survival(const Barrier& barrier, double s) { return barrier.lambda(s); }

inline StoppingRule vallois_rule(const Barrier& barrier) { return BarrierRule{barrier.compile()}; }

// Decay table for the uniform-integrability diagnostic: rows of
// x * P[h crossed x strictly before tau], estimated from the per-ray maxima
// recorded in the samples.
struct UiRow {
    double x = 0.0;
    double estimate = 0.0;  // x * P_hat
    double sigma = 0.0;     // x * binomial standard error
};

inline std::vector<UiRow> ui_diagnostic(const std::vector<StoppedSample>& samples, const Spin& spin,
                                        const std::vector<bool>& in_A, const std::vector<double>& x_grid) {
    if (in_A.size() != spin.prob.size()) throw std::invalid_argument("ui_diagnostic: subset size mismatch");
    double ka = 0.0;
    for (std::size_t i = 0; i < in_A.size(); ++i)
        if (in_A[i]) ka += spin.prob[i];
    if (!(ka > 0.0) || !(ka < 1.0)) throw std::domain_error("ui_diagnostic requires 0 < kappa(A) < 1");
    std::vector<UiRow> rows;
    const double n = static_cast<double>(samples.size());
    for (double x : x_grid) {
        UiRow row;
        row.x = x;
        if (x <= 0.0) {
            rows.push_back(row);
            continue;
        }
        const double r_needed = x / ka;  // h equals kappa(A) * radius off A
        std::size_t hits = 0;
        for (const auto& s : samples) {
            double mx = 0.0;
            for (std::size_t g = 0; g < in_A.size(); ++g)
                if (!in_A[g]) mx = std::max(mx, s.ray_max[g]);
            if (mx >= r_needed) ++hits;
        }
        const double p = static_cast<double>(hits) / n;
        row.estimate = x * p;
        row.sigma = x * std::sqrt(std::max(p * (1.0 - p), 1.0 / n) / n);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace walsh
