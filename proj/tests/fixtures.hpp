#pragma once

#include "walsh/measure.hpp"

// Shared test fixtures. m1: two rays with a two-atom and a one-atom law,
// mean 2, second moment 4.5. m2: three point-mass rays at 1, 2, 4 with equal
// weights, mean 7/3, second moment 7.

namespace fixtures {

inline walsh::TargetMeasure m1() {
    walsh::RawMeasureSpec raw;
    raw.rays.push_back({"A", 0.5, {{1.0, 0.5}, {3.0, 0.5}}, {}});
    raw.rays.push_back({"B", 0.5, {{2.0, 1.0}}, {}});
    return walsh::polar_decompose(raw);
}

inline walsh::TargetMeasure m2() {
    walsh::RawMeasureSpec raw;
    raw.rays.push_back({"a", 1.0, {{1.0, 1.0}}, {}});
    raw.rays.push_back({"b", 1.0, {{2.0, 1.0}}, {}});
    raw.rays.push_back({"c", 1.0, {{4.0, 1.0}}, {}});
    return walsh::polar_decompose(raw);
}

// single ray, half origin atom, half at 2: mean 1
inline walsh::TargetMeasure half_origin() {
    walsh::RawMeasureSpec raw;
    raw.rays.push_back({"g", 1.0, {{2.0, 1.0}}, {}});
    raw.origin_mass = 0.5;
    return walsh::polar_decompose(raw);
}

// single ray, uniform density on [0, 2]: mean 1, density reaching the origin
inline walsh::TargetMeasure flat_ray() {
    walsh::RawMeasureSpec raw;
    raw.rays.push_back({"g", 1.0, {}, {{0.0, 2.0, 0.5}}});
    return walsh::polar_decompose(raw);
}

// two rays mixing atoms and density, with origin mass
inline walsh::TargetMeasure mixed() {
    walsh::RawMeasureSpec raw;
    raw.rays.push_back({"flat", 0.6, {}, {{0.0, 2.0, 0.5}}});
    raw.rays.push_back({"spike", 0.4, {{0.5, 0.25}, {2.5, 0.75}}, {}});
    raw.origin_mass = 0.1;
    return walsh::polar_decompose(raw);
}

}  // namespace fixtures
