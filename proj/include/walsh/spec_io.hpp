#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "walsh/dubins.hpp"
#include "walsh/measure.hpp"
#include "walsh/simulate.hpp"
#include "walsh/vallois.hpp"

// Measure spec files and the CSV/report formats the CLI emits. All floats are
// printed with %.17g so identical runs produce byte-identical files.

namespace walsh::io {

inline constexpr int kSchemaVersion = 1;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Measure spec:
// {
//   "rays": [{"id": "A", "weight": 0.5, "atoms": [[r, mass], ...],
//             "pieces": [[lo, hi, density], ...]}, ...],
//   "origin_mass": 0.0,
//   "kappa": {"A": 0.5, ...}        // optional override, validate-only
// }
inline RawMeasureSpec parse_measure_spec(const nlohmann::json& j) {
    RawMeasureSpec raw;
    if (!j.is_object() || !j.contains("rays") || !j["rays"].is_array()) throw ParseError("measure spec needs a 'rays' array");
    for (const auto& jr : j["rays"]) {
        RawRay ray;
        if (!jr.contains("id") || !jr["id"].is_string()) throw ParseError("every ray needs a string 'id'");
        ray.id = jr["id"].get<std::string>();
        if (!jr.contains("weight")) throw ParseError("ray " + ray.id + " needs a 'weight'");
        ray.weight = jr["weight"].get<double>();
        if (jr.contains("atoms"))
            for (const auto& ja : jr["atoms"]) {
                if (!ja.is_array() || ja.size() != 2) throw ParseError("atoms must be [r, mass] pairs");
                ray.atoms.push_back({ja[0].get<double>(), ja[1].get<double>()});
            }
        if (jr.contains("pieces"))
            for (const auto& jp : jr["pieces"]) {
                if (!jp.is_array() || jp.size() != 3) throw ParseError("pieces must be [lo, hi, density] triples");
                ray.pieces.push_back({jp[0].get<double>(), jp[1].get<double>(), jp[2].get<double>()});
            }
        raw.rays.push_back(std::move(ray));
    }
    raw.origin_mass = j.value("origin_mass", 0.0);
    return raw;
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return j;
}

inline RawMeasureSpec load_measure_spec(const std::string& path) { return parse_measure_spec(load_json(path)); }

inline std::optional<SpinningMeasure> parse_kappa_override(const nlohmann::json& j) {
    if (!j.contains("kappa")) return std::nullopt;
    if (!j["kappa"].is_object()) throw ParseError("'kappa' must map ray ids to probabilities");
    std::vector<std::pair<std::string, double>> entries;
    for (const auto& [id, p] : j["kappa"].items()) entries.emplace_back(id, p.get<double>());
    return SpinningMeasure(std::move(entries));
}

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string samples_csv(const std::vector<StoppedSample>& samples, const std::vector<std::string>& ids) {
    std::ostringstream os;
    os << "ray_id,radius,tau,local_time,stopped\n";
    for (const auto& s : samples)
        os << ids[static_cast<std::size_t>(s.ray)] << ',' << fmt(s.radius) << ',' << fmt(s.tau) << ',' << fmt(s.local_time)
           << ',' << (s.stopped ? 1 : 0) << '\n';
    return os.str();
}

inline std::string path_csv(const WalshPath& path, const std::vector<std::string>& ids) {
    std::ostringstream os;
    os << "t,W,R,L,ray_id\n";
    for (std::size_t i = 0; i < path.t.size(); ++i)
        os << fmt(path.t[i]) << ',' << fmt(path.w[i]) << ',' << fmt(path.r[i]) << ',' << fmt(path.m[i]) << ','
           << ids[static_cast<std::size_t>(path.ray[i])] << '\n';
    return os.str();
}

inline std::string law_csv(const DubinsLaw& law, const std::vector<std::string>& ids) {
    std::ostringstream os;
    os << "ray_id,radius,probability\n";
    for (std::size_t g = 0; g < law.rays.size(); ++g)
        for (std::size_t i = 0; i < law.rays[g].radius.size(); ++i)
            os << ids[g] << ',' << fmt(law.rays[g].radius[i]) << ',' << fmt(law.ray_pmf[g] * law.rays[g].prob[i]) << '\n';
    return os.str();
}

// Barrier table: local time, per-ray levels, and the survival P[L_tau >= l].
inline std::string barrier_csv(const Barrier& barrier, std::size_t n_rows = 512) {
    std::ostringstream os;
    os << "l";
    for (const auto& id : barrier.ray_ids()) os << ",a_" << id;
    os << ",survival\n";
    std::vector<double> ls;
    const auto pb = barrier.compile();
    for (const auto& ray : pb.rays)
        for (double l : ray.l) ls.push_back(l);
    const double l_hi = barrier.l_cap();
    for (std::size_t i = 0; i < n_rows; ++i) ls.push_back(l_hi * static_cast<double>(i) / static_cast<double>(n_rows - 1));
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    for (double l : ls) {
        os << fmt(l);
        for (std::size_t g = 0; g < barrier.ray_count(); ++g) os << ',' << fmt(barrier.level(g, l));
        const double d = barrier.delta(l);
        os << ',' << fmt(std::isinf(d) ? 0.0 : std::exp(-d)) << '\n';
    }
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace walsh::io
