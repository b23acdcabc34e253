#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "walsh/measure.hpp"
#include "walsh/rng.hpp"

// Walsh Brownian motion skeleton simulator. The driving skeleton W is exact
// Gaussian; the radius and local time come from the running-maximum coupling
// R = M - W, L = M, which has the exact joint law of (reflecting BM, local
// time) at skeleton times. With bridge refinement on, M is updated with the
// sampled within-step maximum of the driving bridge, so L and excursion
// boundaries are exact in law at any step size; a within-step minimum is
// sampled as well, which turns level-crossing detection into the exact
// conditional Bernoulli test.

namespace walsh {

struct SimParams {
    double dt = 1e-4;
    double t_max = 100.0;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    bool bridge_refinement = true;
    unsigned threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
        if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
        if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
    }
};

// Spinning measure compiled against a fixed ray order; rules and samples use
// indices into this order.
struct Spin {
    std::vector<std::string> ids;
    std::vector<double> prob;

    int sample(PathRng& rng) const {
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < prob.size(); ++i) {
            acc += prob[i];
            if (u <= acc) return static_cast<int>(i);
        }
        return static_cast<int>(prob.size()) - 1;
    }
};

inline Spin compile_spin(const SpinningMeasure& kappa, const std::vector<std::string>& ray_order) {
    Spin s;
    s.ids = ray_order;
    s.prob.assign(ray_order.size(), 0.0);
    double covered = 0.0;
    for (std::size_t i = 0; i < ray_order.size(); ++i) {
        s.prob[i] = kappa.prob(ray_order[i]);
        covered += s.prob[i];
    }
    if (std::abs(covered - 1.0) > kMassTol)
        throw std::invalid_argument("spinning measure charges rays outside the given ray order");
    return s;
}

inline Spin compile_spin(const SpinningMeasure& kappa) {
    std::vector<std::string> order;
    for (const auto& [id, p] : kappa.entries()) order.push_back(id);
    return compile_spin(kappa, order);
}

// One skeleton trajectory. m doubles as the local time; step_peak[i] is the
// within-step radius peak attributed to the excursion in progress at the
// start of step i.
struct WalshPath {
    double dt = 0.0;
    std::vector<double> t, w, m, r;
    std::vector<int> ray;
    std::vector<double> step_peak;
};

struct StepInfo {
    double w0, w1;
    double m0, m1;
    double smax, smin;  // within-step extremes of W
    double r0, r1;
    bool renewed;
    int ray0, ray1;
    double t1;
};

class PathState {
  public:
    PathState(const Spin& spin, const SimParams& p, std::uint64_t path_index)
        : rng_(p.seed, path_index), spin_(&spin), dt_(p.dt), sqdt_(std::sqrt(p.dt)), refine_(p.bridge_refinement) {
        ray_ = spin.sample(rng_);
    }

    int ray() const { return ray_; }
    double local_time() const { return m_; }
    double radius() const { return m_ - w_; }
    double time() const { return static_cast<double>(i_) * dt_; }

    StepInfo step() {
        StepInfo s;
        s.w0 = w_;
        s.m0 = m_;
        s.ray0 = ray_;
        s.r0 = m_ - w_;
        const double z = rng_.normal();
        s.w1 = w_ + sqdt_ * z;
        if (refine_) {
            // Draw both extremes every step so all rules consume the stream
            // identically (common random numbers across methods).
            const double u1 = rng_.uniform();
            const double u2 = rng_.uniform();
            s.smax = bridge_max(s.w0, s.w1, dt_, u1);
            s.smin = bridge_min(s.w0, s.w1, dt_, u2);
        } else {
            s.smax = std::max(s.w0, s.w1);
            s.smin = std::min(s.w0, s.w1);
        }
        s.m1 = std::max(s.m0, s.smax);
        s.renewed = s.m1 > s.m0;
        if (s.renewed) ray_ = spin_->sample(rng_);
        s.ray1 = ray_;
        w_ = s.w1;
        m_ = s.m1;
        ++i_;
        s.t1 = static_cast<double>(i_) * dt_;
        s.r1 = m_ - w_;
        return s;
    }

  private:
    PathRng rng_;
    const Spin* spin_;
    double dt_, sqdt_;
    bool refine_;
    double w_ = 0.0, m_ = 0.0;
    int ray_ = 0;
    std::uint64_t i_ = 0;
};

inline WalshPath simulate_path(const Spin& spin, const SimParams& params, std::uint64_t path_index = 0) {
    params.validate();
    const std::size_t n = static_cast<std::size_t>(std::llround(params.t_max / params.dt));
    PathState st(spin, params, path_index);
    WalshPath path;
    path.dt = params.dt;
    path.t.reserve(n + 1);
    path.w.reserve(n + 1);
    path.m.reserve(n + 1);
    path.r.reserve(n + 1);
    path.ray.reserve(n + 1);
    path.step_peak.reserve(n);
    path.t.push_back(0.0);
    path.w.push_back(0.0);
    path.m.push_back(0.0);
    path.r.push_back(0.0);
    path.ray.push_back(st.ray());
    for (std::size_t i = 0; i < n; ++i) {
        const StepInfo s = st.step();
        path.t.push_back(s.t1);
        path.w.push_back(s.w1);
        path.m.push_back(s.m1);
        path.r.push_back(s.r1);
        path.ray.push_back(s.ray1);
        path.step_peak.push_back(std::max(s.r0, s.m0 - s.smin));
    }
    return path;
}

// ---------------------------------------------------------------------------
// Stopping rules

struct HitSurfaceRule {
    std::vector<double> level;  // per ray index; must be positive where charged
};

struct FixedTimeRule {
    double t;
};

// Per-ray non-increasing barrier in local time: breakpoints l[j] with value
// a[j]; segment j (between l[j] and l[j+1]) is either the constant a[j] or
// the linear interpolation a[j] -> a[j+1]. Constant a.back() beyond the last
// breakpoint, zero from `zero_from` on.
struct PiecewiseBarrier {
    struct Ray {
        std::vector<double> l;         // ascending, starts at 0
        std::vector<double> a;         // value at l[j]
        std::vector<std::uint8_t> lin;  // per segment; size l.size()-1 (may be empty)
        double zero_from = std::numeric_limits<double>::infinity();  // a == 0 from here on
    };
    std::vector<Ray> rays;

    double level(int ray, double lt) const {
        const Ray& r = rays[static_cast<std::size_t>(ray)];
        if (lt >= r.zero_from) return 0.0;
        auto it = std::upper_bound(r.l.begin(), r.l.end(), lt);
        if (it == r.l.begin()) return r.a.front();
        const std::size_t j = static_cast<std::size_t>(it - r.l.begin()) - 1;
        if (j + 1 >= r.l.size()) return r.a[j];
        if (r.lin.empty() || !r.lin[j]) return r.a[j];
        const double t01 = (lt - r.l[j]) / (r.l[j + 1] - r.l[j]);
        return r.a[j] + t01 * (r.a[j + 1] - r.a[j]);
    }

    // Value just below lt (the left limit); used by quadrature cells that end
    // exactly on a breakpoint.
    double level_left(int ray, double lt) const {
        const Ray& r = rays[static_cast<std::size_t>(ray)];
        if (lt > r.zero_from) return 0.0;
        auto it = std::lower_bound(r.l.begin(), r.l.end(), lt);
        if (it == r.l.begin()) return r.a.front();
        const std::size_t j = static_cast<std::size_t>(it - r.l.begin()) - 1;
        if (j + 1 >= r.l.size()) return r.a[j];
        if (r.lin.empty() || !r.lin[j]) return r.a[j];
        const double t01 = (lt - r.l[j]) / (r.l[j + 1] - r.l[j]);
        return r.a[j] + t01 * (r.a[j + 1] - r.a[j]);
    }
};

struct BarrierRule {
    PiecewiseBarrier barrier;
};

// Iterated two-sided exits: stage 1 hits the per-ray root level; stage l+1,
// resting at a node's barycenter, exits at the children barycenters. Terminal
// nodes (children collapse onto the rest point) absorb.
struct DubinsScheduleRule {
    struct Node {
        double bary;
        int left = -1;   // child for a downward exit
        int right = -1;  // child for an upward exit
    };
    std::vector<std::vector<Node>> rays;  // node 0 is the root
    int depth = 1;
};

using StoppingRule = std::variant<HitSurfaceRule, FixedTimeRule, BarrierRule, DubinsScheduleRule>;

struct StoppedSample {
    int ray = 0;
    double radius = 0.0;
    double tau = 0.0;
    double local_time = 0.0;
    bool stopped = false;
    // Per-ray max of the end-of-step radius over steps strictly before the
    // stopping step; feeds the uniform-integrability diagnostic.
    std::vector<double> ray_max;
};

namespace detail {

struct Stop {
    double radius;
    double local_time;
    int ray;
};

// Within one step both a level crossing (via the bridge minimum) and a zero
// touch (via the bridge maximum) can be detected; their order inside the step
// is not observable, so the deeper penetration is treated as first.
inline bool crossing_first(double pen_cross, double pen_renew) { return pen_cross >= pen_renew; }

class HitSurfaceExec {
  public:
    HitSurfaceExec(const HitSurfaceRule& rule, const SimParams&) : rule_(&rule) {}

    std::optional<Stop> on_step(const StepInfo& s) {
        const double thr0 = rule_->level[static_cast<std::size_t>(s.ray0)];
        const bool crossed = std::isfinite(thr0) && (s.m0 - s.smin) >= thr0;
        if (crossed && (!s.renewed || crossing_first((s.m0 - s.smin) - thr0, s.smax - s.m0)))
            return Stop{thr0, s.m0, s.ray0};
        if (s.renewed) {
            const double thr1 = rule_->level[static_cast<std::size_t>(s.ray1)];
            if (std::isfinite(thr1) && s.r1 >= thr1) return Stop{thr1, s.m1, s.ray1};
        }
        return std::nullopt;
    }

  private:
    const HitSurfaceRule* rule_;
};

class FixedTimeExec {
  public:
    FixedTimeExec(const FixedTimeRule& rule, const SimParams& p)
        : n_target_(static_cast<std::uint64_t>(std::llround(rule.t / p.dt))) {}

    std::optional<Stop> on_step(const StepInfo& s) {
        ++i_;
        if (i_ >= n_target_) return Stop{s.r1, s.m1, s.ray1};
        return std::nullopt;
    }

    bool immediate() const { return n_target_ == 0; }

  private:
    std::uint64_t n_target_;
    std::uint64_t i_ = 0;
};

class BarrierExec {
  public:
    BarrierExec(const BarrierRule& rule, const SimParams&) : barrier_(&rule.barrier) {
        thr_ = std::numeric_limits<double>::infinity();
    }

    std::optional<Stop> on_step(const StepInfo& s) {
        const double thr0 = thr_;
        const bool crossed = std::isfinite(thr0) && (s.m0 - s.smin) >= thr0;
        if (crossed && (!s.renewed || crossing_first((s.m0 - s.smin) - thr0, s.smax - s.m0)))
            return Stop{thr0, s.m0, s.ray0};
        if (s.renewed) {
            // Threshold freezes at the excursion's local-time label.
            thr_ = barrier_->level(s.ray1, s.m1);
            if (thr_ <= 0.0) {
                // Barrier has collapsed to the origin: stop there the moment
                // local time enters the region.
                const double lbar = barrier_->rays[static_cast<std::size_t>(s.ray1)].zero_from;
                return Stop{0.0, std::clamp(lbar, s.m0, s.m1), s.ray1};
            }
            if (s.r1 >= thr_) return Stop{thr_, s.m1, s.ray1};
        }
        return std::nullopt;
    }

  private:
    const PiecewiseBarrier* barrier_;
    double thr_;
};

class DubinsExec {
  public:
    DubinsExec(const DubinsScheduleRule& rule, const SimParams&) : rule_(&rule) {}

    std::optional<Stop> on_step(const StepInfo& s) {
        if (phase_ == Phase::Surface) {
            const double thr0 = (*rule_).rays[static_cast<std::size_t>(s.ray0)][0].bary;
            const bool crossed = (s.m0 - s.smin) >= thr0;
            if (crossed && (!s.renewed || crossing_first((s.m0 - s.smin) - thr0, s.smax - s.m0)))
                return settle(s.ray0, 0, s.m0);
            if (s.renewed) {
                const double thr1 = (*rule_).rays[static_cast<std::size_t>(s.ray1)][0].bary;
                if (s.r1 >= thr1) return settle(s.ray1, 0, s.m1);
            }
            return std::nullopt;
        }
        // Exit phase: the radius leaves [lo, hi] on a fixed ray. While it
        // stays inside with lo > 0 the local time cannot move; lo == 0 makes
        // the downward exit coincide with a zero touch.
        const bool up = (s.m0 - s.smin) >= hi_;
        const bool down = s.smax >= (s.m0 - lo_);
        if (up && (!down || crossing_first((s.m0 - s.smin) - hi_, s.smax - (s.m0 - lo_))))
            return exit_to(rule_->rays[static_cast<std::size_t>(ray_)][static_cast<std::size_t>(node_)].right, hi_, s);
        if (down) return exit_to(rule_->rays[static_cast<std::size_t>(ray_)][static_cast<std::size_t>(node_)].left, lo_, s);
        return std::nullopt;
    }

  private:
    enum class Phase { Surface, Exit };

    std::optional<Stop> exit_to(int child, double rest, const StepInfo& s) {
        return settle(ray_, child, rest == 0.0 ? s.m1 : s.m0, rest, stage_ + 1);
    }

    // Enter `node` at stage `stage` resting at its barycenter; runs the
    // zero-time transitions (boundary coincidences, collapsed intervals).
    std::optional<Stop> settle(int ray, int node, double local_time, double rest_override = -1.0, int stage = 1) {
        ray_ = ray;
        node_ = node;
        stage_ = stage;
        const auto& nodes = rule_->rays[static_cast<std::size_t>(ray_)];
        double rest = rest_override >= 0.0 ? rest_override : nodes[static_cast<std::size_t>(node_)].bary;
        for (;;) {
            const auto& nd = nodes[static_cast<std::size_t>(node_)];
            if (stage_ >= rule_->depth) return Stop{rest, local_time, ray_};
            const double b1 = nodes[static_cast<std::size_t>(nd.left)].bary;
            const double b2 = nodes[static_cast<std::size_t>(nd.right)].bary;
            if (b1 == b2) return Stop{rest, local_time, ray_};  // absorbed: later stages rest here
            if (rest == b1) {
                node_ = nd.left;
                ++stage_;
                continue;
            }
            if (rest == b2) {
                node_ = nd.right;
                ++stage_;
                continue;
            }
            lo_ = b1;
            hi_ = b2;
            phase_ = Phase::Exit;
            return std::nullopt;
        }
    }

    const DubinsScheduleRule* rule_;
    Phase phase_ = Phase::Surface;
    int ray_ = 0;
    int node_ = 0;
    int stage_ = 1;
    double lo_ = 0.0, hi_ = 0.0;
};

template <class RuleT>
struct ExecFor;
template <>
struct ExecFor<HitSurfaceRule> {
    using type = HitSurfaceExec;
};
template <>
struct ExecFor<FixedTimeRule> {
    using type = FixedTimeExec;
};
template <>
struct ExecFor<BarrierRule> {
    using type = BarrierExec;
};
template <>
struct ExecFor<DubinsScheduleRule> {
    using type = DubinsExec;
};

template <class RuleT>
StoppedSample run_one(const RuleT& rule, const Spin& spin, const SimParams& params, std::uint64_t path_index) {
    PathState st(spin, params, path_index);
    typename ExecFor<RuleT>::type exec(rule, params);
    StoppedSample out;
    out.ray_max.assign(spin.ids.size(), 0.0);

    if constexpr (std::is_same_v<RuleT, FixedTimeRule>) {
        if (exec.immediate()) {
            out.ray = st.ray();
            out.stopped = true;
            return out;
        }
    }

    const std::uint64_t n_max = static_cast<std::uint64_t>(std::llround(params.t_max / params.dt));
    for (std::uint64_t i = 0; i < n_max; ++i) {
        const StepInfo s = st.step();
        if (auto stop = exec.on_step(s)) {
            out.ray = stop->ray;
            out.radius = stop->radius;
            out.tau = s.t1;
            out.local_time = stop->local_time;
            out.stopped = true;
            return out;
        }
        double& mx = out.ray_max[static_cast<std::size_t>(s.ray1)];
        mx = std::max(mx, s.r1);
    }
    out.ray = st.ray();
    out.radius = st.radius();
    out.tau = params.t_max;
    out.local_time = st.local_time();
    out.stopped = false;
    return out;
}

template <class RuleT>
StoppedSample run_one_recorded(const RuleT& rule, const Spin& spin, const SimParams& params, std::uint64_t path_index,
                               WalshPath& path) {
    PathState st(spin, params, path_index);
    typename ExecFor<RuleT>::type exec(rule, params);
    StoppedSample out;
    out.ray_max.assign(spin.ids.size(), 0.0);
    path = WalshPath{};
    path.dt = params.dt;
    path.t.push_back(0.0);
    path.w.push_back(0.0);
    path.m.push_back(0.0);
    path.r.push_back(0.0);
    path.ray.push_back(st.ray());

    if constexpr (std::is_same_v<RuleT, FixedTimeRule>) {
        if (exec.immediate()) {
            out.ray = st.ray();
            out.stopped = true;
            return out;
        }
    }

    const std::uint64_t n_max = static_cast<std::uint64_t>(std::llround(params.t_max / params.dt));
    for (std::uint64_t i = 0; i < n_max; ++i) {
        const StepInfo s = st.step();
        path.t.push_back(s.t1);
        path.w.push_back(s.w1);
        path.m.push_back(s.m1);
        path.r.push_back(s.r1);
        path.ray.push_back(s.ray1);
        path.step_peak.push_back(std::max(s.r0, s.m0 - s.smin));
        if (auto stop = exec.on_step(s)) {
            out.ray = stop->ray;
            out.radius = stop->radius;
            out.tau = s.t1;
            out.local_time = stop->local_time;
            out.stopped = true;
            return out;
        }
        double& mx = out.ray_max[static_cast<std::size_t>(s.ray1)];
        mx = std::max(mx, s.r1);
    }
    out.ray = st.ray();
    out.radius = st.radius();
    out.tau = params.t_max;
    out.local_time = st.local_time();
    out.stopped = false;
    return out;
}

template <class Fn>
void parallel_paths(std::size_t n_paths, unsigned threads, Fn&& per_path) {
    unsigned t = threads ? threads : std::thread::hardware_concurrency();
    if (t == 0) t = 1;
    t = static_cast<unsigned>(std::min<std::size_t>(t, n_paths));
    if (t <= 1) {
        for (std::size_t i = 0; i < n_paths; ++i) per_path(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    constexpr std::size_t kBlock = 64;
    auto worker = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(kBlock);
            if (begin >= n_paths) return;
            const std::size_t end = std::min(begin + kBlock, n_paths);
            for (std::size_t i = begin; i < end; ++i) per_path(i);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Executes the rule over params.n_paths independent paths; one sample per
// path, in path-index order regardless of the worker count.
inline std::vector<StoppedSample> run_until(const StoppingRule& rule, const Spin& spin, const SimParams& params) {
    params.validate();
    std::vector<StoppedSample> out(params.n_paths);
    std::visit(
        [&](const auto& concrete) {
            detail::parallel_paths(params.n_paths, params.threads,
                                   [&](std::size_t i) { out[i] = detail::run_one(concrete, spin, params, i); });
        },
        rule);
    return out;
}

// Runs the rule on one path while keeping the skeleton trajectory (truncated
// at the stopping step).
struct PathRun {
    WalshPath path;
    StoppedSample sample;
};

inline PathRun run_one_path(const StoppingRule& rule, const Spin& spin, const SimParams& params, std::uint64_t path_index) {
    params.validate();
    PathRun out;
    std::visit([&](const auto& concrete) { out.sample = detail::run_one_recorded(concrete, spin, params, path_index, out.path); },
               rule);
    return out;
}

struct SurfaceHitLaw {
    std::vector<double> pmf;
    double expected_time = 0.0;
};

// Closed form for the first hit of a per-ray surface started at the origin:
// P[ray] is proportional to kappa/rho and E[tau] = (sum rho kappa)/(sum kappa/rho).
inline SurfaceHitLaw surface_hit_law(const Spin& spin, const std::vector<double>& rho) {
    if (rho.size() != spin.prob.size()) throw std::invalid_argument("surface_hit_law: level count mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (spin.prob[i] <= 0.0) continue;
        if (!(rho[i] > 0.0) || !std::isfinite(rho[i])) throw std::domain_error("surface level must be positive and finite on charged rays");
        num += rho[i] * spin.prob[i];
        den += spin.prob[i] / rho[i];
    }
    SurfaceHitLaw law;
    law.expected_time = num / den;
    law.pmf.assign(rho.size(), 0.0);
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (spin.prob[i] > 0.0) law.pmf[i] = (spin.prob[i] / rho[i]) / den;
    return law;
}

// Number of excursions begun before local time l whose radius peak reaches x.
inline std::int64_t excursion_counts(const WalshPath& path, double x, double l) {
    if (!(x > 0.0)) throw std::invalid_argument("excursion level must be positive");
    if (l < 0.0) throw std::invalid_argument("local-time cutoff must be >= 0");
    if (l == 0.0) return 0;
    std::int64_t count = 0;
    double label = 0.0;
    double peak = 0.0;
    for (std::size_t i = 1; i < path.m.size(); ++i) {
        const double within = path.step_peak[i - 1];
        if (path.m[i] > path.m[i - 1]) {
            peak = std::max(peak, within);
            if (label < l && peak >= x) ++count;
            label = path.m[i];
            peak = path.r[i];
        } else {
            peak = std::max({peak, within, path.r[i]});
        }
    }
    if (label < l && peak >= x) ++count;
    return count;
}

// Streaming version at acceptance scale: no path storage. Runs each path
// until its local time reaches l (or the horizon); returns per-path counts
// and whether the cutoff was reached.
struct ExcursionCountSample {
    std::int64_t count = 0;
    bool reached = false;
};

inline std::vector<ExcursionCountSample> count_big_excursions(const Spin& spin, const SimParams& params, double x, double l) {
    params.validate();
    if (!(x > 0.0) || !(l > 0.0)) throw std::invalid_argument("count_big_excursions requires x > 0, l > 0");
    std::vector<ExcursionCountSample> out(params.n_paths);
    const std::uint64_t n_max = static_cast<std::uint64_t>(std::llround(params.t_max / params.dt));
    detail::parallel_paths(params.n_paths, params.threads, [&](std::size_t idx) {
        PathState st(spin, params, idx);
        ExcursionCountSample res;
        double label = 0.0, peak = 0.0;
        for (std::uint64_t i = 0; i < n_max; ++i) {
            const StepInfo s = st.step();
            const double within = std::max(s.r0, s.m0 - s.smin);
            if (s.renewed) {
                peak = std::max(peak, within);
                if (label < l && peak >= x) ++res.count;
                label = s.m1;
                peak = s.r1;
                if (label >= l) {
                    res.reached = true;
                    break;
                }
            } else {
                peak = std::max({peak, within, s.r1});
            }
        }
        out[idx] = res;
    });
    return out;
}

// Evaluates h(Z_t) = (kappa(A) 1_{A^c} - kappa(A^c) 1_A) * R_t along a path;
// a martingale for any ray subset A with 0 < kappa(A) < 1.
inline std::vector<double> h_linear(const WalshPath& path, const std::vector<bool>& in_A, const Spin& spin) {
    if (in_A.size() != spin.prob.size()) throw std::invalid_argument("h_linear: subset size mismatch");
    double ka = 0.0;
    for (std::size_t i = 0; i < in_A.size(); ++i)
        if (in_A[i]) ka += spin.prob[i];
    if (!(ka > 0.0) || !(ka < 1.0)) throw std::domain_error("h_linear requires 0 < kappa(A) < 1");
    std::vector<double> h;
    h.reserve(path.r.size());
    for (std::size_t i = 0; i < path.r.size(); ++i) {
        const bool a = in_A[static_cast<std::size_t>(path.ray[i])];
        h.push_back((a ? -(1.0 - ka) : ka) * path.r[i]);
    }
    return h;
}

}  // namespace walsh
