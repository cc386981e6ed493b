// Points of the real torus R^{2n}/Z^{2n} in lattice-basis coordinates.
// Two flavors of fractional part: frac_exact keeps floating subtraction
// bit-faithful (used by the difference map, whose invariance tests demand
// exact cancellation on dyadic inputs), frac_snapped additionally collapses
// values within kFracSnapEps of 1 to 0 (used when projecting ambient data,
// where roundoff would otherwise split the identity into 0 and 1-eps).
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "torusflow/constants.hpp"
#include "torusflow/lattice.hpp"

namespace torusflow {

inline double frac_exact(double x) {
    double f = x - std::floor(x);
    return f >= 1.0 ? 0.0 : f;
}

inline double frac_snapped(double x) {
    double f = x - std::floor(x);
    if (f >= 1.0 - kFracSnapEps) f = 0.0;
    return f;
}

/// Distance from x to the nearest integer.
inline double dist_to_integer(double x) {
    double f = x - std::floor(x);
    return std::min(f, 1.0 - f);
}

/// A point of the torus, stored as lattice-basis coordinates in [0,1)^{2n}.
struct TorusPoint {
    Vec coords;

    TorusPoint() = default;
    explicit TorusPoint(Vec c) : coords(std::move(c)) {}

    int dim() const { return static_cast<int>(coords.size()); }

    static TorusPoint zero(int dim) { return TorusPoint(Vec::Zero(dim)); }
};

/// Wraps arbitrary real coordinates onto the torus (with roundoff snap).
inline TorusPoint torus_reduce(const Vec& raw) {
    Vec c(raw.size());
    for (int i = 0; i < raw.size(); ++i) c[i] = frac_snapped(raw[i]);
    return TorusPoint(std::move(c));
}

/// Wraps without the snap; used where exact dyadic arithmetic matters.
inline TorusPoint torus_reduce_exact(const Vec& raw) {
    Vec c(raw.size());
    for (int i = 0; i < raw.size(); ++i) c[i] = frac_exact(raw[i]);
    return TorusPoint(std::move(c));
}

inline TorusPoint torus_add(const TorusPoint& a, const TorusPoint& b) {
    return torus_reduce_exact(a.coords + b.coords);
}

inline TorusPoint torus_sub(const TorusPoint& a, const TorusPoint& b) {
    return torus_reduce_exact(a.coords - b.coords);
}

inline TorusPoint torus_scale(double s, const TorusPoint& a) {
    return torus_reduce_exact(s * a.coords);
}

/// L-infinity distance on the torus: max over coordinates of the distance
/// of the difference to the nearest integer.
inline double torus_linf(const TorusPoint& a, const TorusPoint& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("torus_linf: dimension mismatch");
    double d = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        d = std::max(d, dist_to_integer(a.coords[i] - b.coords[i]));
    return d;
}

/// Projects an ambient point through the lattice quotient: lattice
/// coordinates, then fractional parts.
inline TorusPoint torus_project(const Vec& ambient, const Lattice& lattice) {
    return torus_reduce(lattice.lattice_coords(ambient));
}

}  // namespace torusflow
