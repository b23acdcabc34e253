#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Polar representation of target measures: finitely many labelled rays, each
// carrying a radial probability measure made of atoms plus piecewise-constant
// density. Moments and conditional barycenters are exact for this
// representation.

namespace walsh {

inline constexpr double kMassTol = 1e-6;       // worse than this is rejected
inline constexpr double kCenteredTol = 1e-9;   // default centering check

struct RadialAtom {
    double r;
    double mass;
};

// Constant density on [lo, hi).
struct DensityPiece {
    double lo;
    double hi;
    double density;
};

class RadialMeasure {
  public:
    RadialMeasure(std::vector<RadialAtom> atoms, std::vector<DensityPiece> pieces) {
        for (const auto& a : atoms) {
            if (!(a.r >= 0.0) || !std::isfinite(a.r)) throw std::invalid_argument("radial atom location must be finite and >= 0");
            if (!(a.mass > 0.0) || !std::isfinite(a.mass)) throw std::invalid_argument("radial atom mass must be positive");
        }
        for (const auto& p : pieces) {
            if (!(p.lo >= 0.0) || !(p.hi > p.lo) || !std::isfinite(p.hi)) throw std::invalid_argument("density interval must satisfy 0 <= lo < hi < inf");
            if (!(p.density >= 0.0) || !std::isfinite(p.density)) throw std::invalid_argument("density must be finite and >= 0");
        }
        std::sort(atoms.begin(), atoms.end(), [](const RadialAtom& x, const RadialAtom& y) { return x.r < y.r; });
        // Merge exact duplicates so downstream code can rely on distinct locations.
        for (const auto& a : atoms) {
            if (!atoms_.empty() && atoms_.back().r == a.r)
                atoms_.back().mass += a.mass;
            else
                atoms_.push_back(a);
        }
        std::sort(pieces.begin(), pieces.end(), [](const DensityPiece& x, const DensityPiece& y) { return x.lo < y.lo; });
        for (const auto& p : pieces) {
            if (p.density == 0.0) continue;
            if (!pieces_.empty() && p.lo < pieces_.back().hi) throw std::invalid_argument("density intervals must be disjoint");
            pieces_.push_back(p);
        }

        double total = 0.0;
        for (const auto& a : atoms_) total += a.mass;
        for (const auto& p : pieces_) total += p.density * (p.hi - p.lo);
        if (total <= 0.0) throw std::invalid_argument("radial measure has no mass");
        if (std::abs(total - 1.0) > kMassTol) throw std::invalid_argument("radial measure mass deviates from 1 by more than 1e-6");
        for (auto& a : atoms_) a.mass /= total;
        for (auto& p : pieces_) p.density /= total;
    }

    static RadialMeasure point_mass(double r) { return RadialMeasure({{r, 1.0}}, {}); }

    const std::vector<RadialAtom>& atoms() const { return atoms_; }
    const std::vector<DensityPiece>& pieces() const { return pieces_; }

    double total_mass() const {
        double total = 0.0;
        for (const auto& a : atoms_) total += a.mass;
        for (const auto& p : pieces_) total += p.density * (p.hi - p.lo);
        return total;
    }

    // nu([0, r))
    double mass_below(double r) const {
        double acc = 0.0;
        for (const auto& a : atoms_)
            if (a.r < r) acc += a.mass;
        for (const auto& p : pieces_) {
            const double hi = std::min(p.hi, r);
            if (hi > p.lo) acc += p.density * (hi - p.lo);
        }
        return acc;
    }

    // nu([0, r])
    double mass_upto(double r) const {
        double acc = mass_below(r);
        for (const auto& a : atoms_)
            if (a.r == r) acc += a.mass;
        return acc;
    }

    // nu([a, b)); b may be +inf.
    double mass(double a, double b) const {
        if (!(b > a)) return 0.0;
        if (std::isinf(b)) return total_mass() - mass_below(a);
        return mass_below(b) - mass_below(a);
    }

    // integral of r over [a, b)
    double partial_mean(double a, double b) const {
        if (!(b > a)) return 0.0;
        double acc = 0.0;
        for (const auto& at : atoms_)
            if (at.r >= a && at.r < b) acc += at.r * at.mass;
        for (const auto& p : pieces_) {
            const double lo = std::max(p.lo, a);
            const double hi = std::min(p.hi, b);
            if (hi > lo) acc += p.density * (hi * hi - lo * lo) / 2.0;
        }
        return acc;
    }

    // integral of r^2 over [a, b)
    double partial_second(double a, double b) const {
        if (!(b > a)) return 0.0;
        double acc = 0.0;
        for (const auto& at : atoms_)
            if (at.r >= a && at.r < b) acc += at.r * at.r * at.mass;
        for (const auto& p : pieces_) {
            const double lo = std::max(p.lo, a);
            const double hi = std::min(p.hi, b);
            if (hi > lo) acc += p.density * (hi * hi * hi - lo * lo * lo) / 3.0;
        }
        return acc;
    }

    double mean() const { return partial_mean(0.0, std::numeric_limits<double>::infinity()); }
    double second_moment() const { return partial_second(0.0, std::numeric_limits<double>::infinity()); }

    double max_support() const {
        double hi = 0.0;
        if (!atoms_.empty()) hi = atoms_.back().r;
        if (!pieces_.empty()) hi = std::max(hi, pieces_.back().hi);
        return hi;
    }

    bool is_point_mass() const { return pieces_.empty() && atoms_.size() == 1; }

    // Mixture (1-k)*this + k*delta_0; used when origin mass is spread over rays.
    RadialMeasure mixed_with_origin(double k) const {
        if (k == 0.0) return *this;
        std::vector<RadialAtom> atoms = atoms_;
        for (auto& a : atoms) a.mass *= (1.0 - k);
        std::vector<DensityPiece> pieces = pieces_;
        for (auto& p : pieces) p.density *= (1.0 - k);
        atoms.push_back({0.0, k});
        return RadialMeasure(std::move(atoms), std::move(pieces));
    }

  private:
    std::vector<RadialAtom> atoms_;
    std::vector<DensityPiece> pieces_;
};

inline double ray_barycenter(const RadialMeasure& radial) { return radial.mean(); }

// Conditional mean of nu over [a, b); returns a when the interval carries no
// mass (the convention that keeps refinement grids well defined).
inline double interval_barycenter(const RadialMeasure& radial, double a, double b) {
    if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("interval_barycenter requires 0 <= a < b");
    const double mass = radial.mass(a, b);
    if (mass <= 0.0) return a;
    return radial.partial_mean(a, b) / mass;
}

class TargetMeasure {
  public:
    struct Ray {
        std::string id;
        double weight;
        RadialMeasure radial;
    };

    explicit TargetMeasure(std::vector<Ray> rays) : rays_(std::move(rays)) {
        if (rays_.empty()) throw std::invalid_argument("target measure needs at least one ray");
        double total = 0.0;
        for (const auto& r : rays_) {
            if (r.id.empty()) throw std::invalid_argument("ray id must be nonempty");
            if (!(r.weight > 0.0) || !std::isfinite(r.weight)) throw std::invalid_argument("ray weight must be positive");
            total += r.weight;
        }
        if (std::abs(total - 1.0) > kMassTol) throw std::invalid_argument("ray weights deviate from 1 by more than 1e-6");
        for (std::size_t i = 0; i < rays_.size(); ++i) {
            rays_[i].weight /= total;
            for (std::size_t j = 0; j < i; ++j)
                if (rays_[j].id == rays_[i].id) throw std::invalid_argument("duplicate ray id: " + rays_[i].id);
        }
        means_.reserve(rays_.size());
        for (const auto& r : rays_) means_.push_back(r.radial.mean());
    }

    std::size_t ray_count() const { return rays_.size(); }
    const Ray& ray(std::size_t i) const { return rays_[i]; }
    double ray_mean(std::size_t i) const { return means_[i]; }

    int ray_index(const std::string& id) const {
        for (std::size_t i = 0; i < rays_.size(); ++i)
            if (rays_[i].id == id) return static_cast<int>(i);
        return -1;
    }

    std::vector<std::string> ray_ids() const {
        std::vector<std::string> ids;
        ids.reserve(rays_.size());
        for (const auto& r : rays_) ids.push_back(r.id);
        return ids;
    }

    double origin_mass() const {
        double k = 0.0;
        for (const auto& r : rays_)
            for (const auto& a : r.radial.atoms())
                if (a.r == 0.0) k += r.weight * a.mass;
        return k;
    }

  private:
    std::vector<Ray> rays_;
    std::vector<double> means_;
};

inline double first_moment(const TargetMeasure& target) {
    double m = 0.0;
    for (std::size_t i = 0; i < target.ray_count(); ++i) m += target.ray(i).weight * target.ray_mean(i);
    return m;
}

inline double second_moment(const TargetMeasure& target) {
    double s = 0.0;
    for (std::size_t i = 0; i < target.ray_count(); ++i) s += target.ray(i).weight * target.ray(i).radial.second_moment();
    return s;
}

// Raw, unnormalized description as read from a measure spec file.
struct RawRay {
    std::string id;
    double weight = 0.0;
    std::vector<RadialAtom> atoms;
    std::vector<DensityPiece> pieces;
};

struct RawMeasureSpec {
    std::vector<RawRay> rays;
    double origin_mass = 0.0;
};

// Normalizes weights, validates each ray's radial part, and spreads the
// origin mass over rays in proportion to their weights (stored as a radius-0
// atom on every ray, so nothing downstream special-cases the origin).
inline TargetMeasure polar_decompose(const RawMeasureSpec& raw) {
    if (raw.rays.empty()) throw std::invalid_argument("measure spec has no rays");
    const double k = raw.origin_mass;
    if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("origin mass must be finite and >= 0");
    if (k >= 1.0) throw std::invalid_argument("origin mass >= 1 admits only the trivial embedding and is rejected");
    double total = 0.0;
    for (const auto& r : raw.rays) {
        if (r.weight < 0.0 || !std::isfinite(r.weight)) throw std::invalid_argument("negative ray weight");
        total += r.weight;
    }
    if (!(total > 0.0)) throw std::invalid_argument("ray weights must have positive total");

    std::vector<TargetMeasure::Ray> rays;
    for (const auto& r : raw.rays) {
        if (r.weight == 0.0) continue;  // uncharged rays carry no mass and are dropped
        RadialMeasure radial(r.atoms, r.pieces);
        rays.push_back({r.id, r.weight / total, radial.mixed_with_origin(k)});
    }
    return TargetMeasure(std::move(rays));
}

class SpinningMeasure {
  public:
    explicit SpinningMeasure(std::vector<std::pair<std::string, double>> entries) : entries_(std::move(entries)) {
        if (entries_.empty()) throw std::invalid_argument("spinning measure has empty support");
        double total = 0.0;
        for (const auto& [id, p] : entries_) {
            if (id.empty()) throw std::invalid_argument("ray id must be nonempty");
            if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("spinning probabilities must be finite and >= 0");
            total += p;
        }
        if (std::abs(total - 1.0) > kMassTol) throw std::invalid_argument("spinning probabilities deviate from 1 by more than 1e-6");
        for (auto& [id, p] : entries_) p /= total;
    }

    const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

    double prob(const std::string& id) const {
        for (const auto& [eid, p] : entries_)
            if (eid == id) return p;
        return 0.0;
    }

  private:
    std::vector<std::pair<std::string, double>> entries_;
};

// The unique spinning measure compatible with integrable embeddings:
// kappa(gamma) = w_gamma * m_gamma / m.
inline SpinningMeasure centered_spinning(const TargetMeasure& target) {
    const double m = first_moment(target);
    if (!(m > 0.0)) throw std::domain_error("target has zero mean radius; no centered spinning measure exists");
    std::vector<std::pair<std::string, double>> entries;
    for (std::size_t i = 0; i < target.ray_count(); ++i) {
        const double mg = target.ray_mean(i);
        if (!(mg > 0.0))
            throw std::domain_error("ray " + target.ray(i).id + " is a pure origin atom; the embedding degenerates");
        entries.emplace_back(target.ray(i).id, target.ray(i).weight * mg / m);
    }
    return SpinningMeasure(std::move(entries));
}

// A target is reachable iff every charged ray is charged by kappa.
inline bool is_admissible(const TargetMeasure& target, const SpinningMeasure& kappa) {
    for (std::size_t i = 0; i < target.ray_count(); ++i)
        if (target.ray(i).weight > 0.0 && !(kappa.prob(target.ray(i).id) > 0.0)) return false;
    return true;
}

inline bool is_centered(const TargetMeasure& target, const SpinningMeasure& kappa, double tol = kCenteredTol) {
    const double m = first_moment(target);
    if (!(m > 0.0)) return false;
    double worst = 0.0;
    for (std::size_t i = 0; i < target.ray_count(); ++i) {
        const double expect = target.ray(i).weight * target.ray_mean(i) / m;
        worst = std::max(worst, std::abs(kappa.prob(target.ray(i).id) - expect));
    }
    for (const auto& [id, p] : kappa.entries())
        if (target.ray_index(id) < 0) worst = std::max(worst, p);
    return worst <= tol;
}

}  // namespace walsh
