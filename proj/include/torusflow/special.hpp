// Weakly special unions and their symmetries. The stabilizer of a union V
// of translates splits into a connected part (the intersection of the
// component directions, computed exactly through stacked annihilators) and
// a finite part. Finite-part candidates are differences of component bases
// combined with torsion points of order up to a bound; each candidate is
// screened cheaply against the first component, checked exactly by matching
// components one-to-one, and finally re-verified on a point grid. That
// candidate recipe is the declared search space: stabilizer elements outside
// differences-plus-torsion (none arise for rational base data within the
// bound) are out of scope.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "torusflow/constants.hpp"
#include "torusflow/lds.hpp"
#include "torusflow/subtorus.hpp"

namespace torusflow {

/// Finite union of affine translates; construction merges components that
/// describe the same subset.
struct UnionOfTranslates {
    std::vector<AffineTranslate> components;

    explicit UnionOfTranslates(std::vector<AffineTranslate> comps,
                               double tol = kMembershipTol) {
        if (comps.empty())
            throw std::invalid_argument("UnionOfTranslates: needs at least one component");
        const int d = comps.front().ambient_dim();
        for (auto& c : comps) {
            if (c.ambient_dim() != d)
                throw std::invalid_argument("UnionOfTranslates: mixed ambient dimensions");
            bool dup = false;
            for (const auto& kept : components)
                if (translate_equal(kept, c, tol)) {
                    dup = true;
                    break;
                }
            if (!dup) components.push_back(std::move(c));
        }
    }

    int ambient_dim() const { return components.front().ambient_dim(); }

    double distance(const TorusPoint& q) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& c : components) d = std::min(d, c.distance(q));
        return d;
    }
    bool contains(const TorusPoint& q, double tol) const { return distance(q) <= tol; }
};

namespace detail {

/// Low-discrepancy fill of one translate: frac(base + c^T generators).
inline std::vector<TorusPoint> translate_grid(const AffineTranslate& comp,
                                              std::size_t count) {
    std::vector<TorusPoint> pts;
    if (comp.rank() == 0) {
        pts.push_back(comp.base);
        return pts;
    }
    Mat tangents = comp.direction.tangent_rows();
    HaltonSequence seq(comp.rank(), 0x9e3779b9ULL);
    pts.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Vec c = seq.point(k);
        Vec shifted = comp.base.coords;
        for (int i = 0; i < comp.rank(); ++i) shifted += c[i] * tangents.row(i).transpose();
        pts.push_back(torus_reduce_exact(shifted));
    }
    return pts;
}

/// Does translation by t permute the components of v? Merged components
/// make the match target unique, so a greedy scan suffices; the match must
/// be a bijection.
inline bool translation_permutes(const TorusPoint& t, const UnionOfTranslates& v, double tol) {
    std::vector<bool> used(v.components.size(), false);
    for (const auto& ci : v.components) {
        TorusPoint moved = torus_add(ci.base, t);
        bool matched = false;
        for (std::size_t j = 0; j < v.components.size(); ++j) {
            if (used[j]) continue;
            const auto& cj = v.components[j];
            if (ci.direction != cj.direction) continue;
            if (translate_distance(moved, cj.base, cj.direction) <= tol) {
                used[j] = true;
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    return true;
}

}  // namespace detail

struct StabilizerResult {
    RationalSubtorus connected;
    std::vector<TorusPoint> finite_part;  // coset representatives mod connected, sorted
};

/// Stab(V) = {t : t + V = V}. The connected part is the kernel of the
/// stacked component annihilators; the finite part is searched over base
/// differences shifted by torsion points of order <= torsion_bound and
/// reported as coset representatives modulo the connected part (always
/// including the class of 0).
inline StabilizerResult stabilizer(const UnionOfTranslates& v, int torsion_bound,
                                   double tol = kMembershipTol) {
    if (torsion_bound < 1)
        throw std::invalid_argument("stabilizer: torsion bound must be >= 1");
    const int d = v.ambient_dim();
    StabilizerResult result{RationalSubtorus::full(d), {}};

    IntMat stacked(0, 0);
    for (const auto& c : v.components)
        stacked = vstack(stacked, c.direction.annihilator());
    if (stacked.row_count() > 0) {
        IntMat ker = integer_kernel(stacked);
        result.connected = RationalSubtorus::from_rows(d, ker);
    }

    std::vector<TorusPoint> diffs;
    for (const auto& ci : v.components)
        for (const auto& cj : v.components) diffs.push_back(torus_sub(cj.base, ci.base));

    const auto& first = v.components.front();
    auto fast_reject = [&](const TorusPoint& t) {
        TorusPoint moved = torus_add(first.base, t);
        for (const auto& cj : v.components) {
            if (cj.direction != first.direction) continue;
            if (translate_distance(moved, cj.base, cj.direction) <= tol) return false;
        }
        return true;
    };
    auto known = [&](const TorusPoint& t) {
        for (const auto& kept : result.finite_part)
            if (translate_distance(t, kept, result.connected) <= tol) return true;
        return false;
    };
    std::size_t grid_count =
        std::min<std::size_t>(kGridPointCap / v.components.size() + 1, 256);
    auto grid_confirm = [&](const TorusPoint& t) {
        for (const auto& ci : v.components)
            for (const auto& x : detail::translate_grid(ci, grid_count))
                if (v.distance(torus_add(x, t)) > 10.0 * tol) return false;
        return true;
    };
    auto consider = [&](const TorusPoint& t) {
        if (fast_reject(t) || known(t)) return;
        if (!detail::translation_permutes(t, v, tol)) return;
        if (!grid_confirm(t)) return;
        result.finite_part.push_back(t);
    };

    // Torsion points of order exactly ord: coordinates a/ord with
    // gcd(a_1..a_d, ord) = 1, each visited once, streamed without storage.
    Vec tau(d);
    for (Int ord = 1; ord <= torsion_bound; ++ord) {
        std::vector<Int> a(d, 0);
        while (true) {
            Int g = ord;
            for (Int ai : a) g = std::gcd(g, ai);
            if (g == 1) {
                for (int i = 0; i < d; ++i)
                    tau[i] = static_cast<double>(a[i]) / static_cast<double>(ord);
                for (const auto& delta : diffs)
                    consider(torus_reduce_exact(delta.coords + tau));
            }
            int i = 0;
            while (i < d && a[i] == ord - 1) {
                a[i] = 0;
                ++i;
            }
            if (i == d) break;
            ++a[i];
        }
    }

    std::sort(result.finite_part.begin(), result.finite_part.end(),
              [](const TorusPoint& x, const TorusPoint& y) {
                  for (int i = 0; i < x.dim(); ++i)
                      if (x.coords[i] != y.coords[i]) return x.coords[i] < y.coords[i];
                  return false;
              });
    return result;
}

struct Decomposition {
    RationalSubtorus b;        // connected stabilizer
    RationalSubtorus bprime;   // greedy complement of b
    std::vector<AffineTranslate> vprime;  // components inside b', V = B + V'
};

/// Splits V = B + V' where B is the connected stabilizer and V' lives in
/// the complementary subtorus: each component contributes its direction
/// intersected with B' and its base projected to span(B') along span(B).
/// Requires a positive-dimensional stabilizer.
inline Decomposition decompose(const UnionOfTranslates& v, const Lattice& lattice,
                               double tol = kMembershipTol) {
    const int d = v.ambient_dim();
    if (lattice.dim() != d)
        throw std::invalid_argument("decompose: lattice dimension mismatch");
    IntMat stacked(0, 0);
    for (const auto& c : v.components)
        stacked = vstack(stacked, c.direction.annihilator());
    RationalSubtorus b = stacked.row_count() == 0
                             ? RationalSubtorus::full(d)
                             : RationalSubtorus::from_rows(d, integer_kernel(stacked));
    if (b.rank() == 0)
        throw std::invalid_argument("decompose: stabilizer identity component is trivial");
    RationalSubtorus bp = complement(b);

    Decomposition out{b, bp, {}};
    std::vector<AffineTranslate> parts;
    for (const auto& c : v.components) {
        IntMat both = vstack(c.direction.annihilator(), bp.annihilator());
        RationalSubtorus dir_p = both.row_count() == 0
                                     ? RationalSubtorus::full(d)
                                     : RationalSubtorus::from_rows(d, integer_kernel(both));
        auto [along_b, along_bp] = split_coords(c.base.coords, b, bp);
        parts.push_back(AffineTranslate{torus_reduce(along_bp), std::move(dir_p)});
    }
    out.vprime = UnionOfTranslates(std::move(parts), tol).components;
    return out;
}

/// Grid-sampled Jaccard overlap between V and the recomposition B + V'.
/// B + (base' + D') is itself a translate with direction generated by the
/// union of generators, so both sides reduce to membership tests.
inline double recomposition_jaccard(const UnionOfTranslates& v, const Decomposition& dec,
                                    double grid_step = 1e-2, double tol = kMembershipTol) {
    if (!(grid_step > 0.0 && grid_step < 1.0))
        throw std::invalid_argument("recomposition_jaccard: grid step must be in (0,1)");
    const int d = v.ambient_dim();
    std::vector<AffineTranslate> recomposed;
    for (const auto& c : dec.vprime) {
        IntMat gens = vstack(dec.b.generators(), c.direction.generators());
        recomposed.push_back(AffineTranslate{c.base, RationalSubtorus::from_rows(d, gens)});
    }
    UnionOfTranslates w(std::move(recomposed), tol);

    auto pool = [&](const UnionOfTranslates& u, std::vector<TorusPoint>& sink) {
        double per_axis = 1.0 / grid_step;
        for (const auto& c : u.components) {
            double want = std::pow(per_axis, std::max(c.rank(), 1));
            std::size_t count = static_cast<std::size_t>(
                std::min<double>(want, static_cast<double>(kGridPointCap) /
                                           static_cast<double>(u.components.size()) + 1.0));
            for (auto& p : detail::translate_grid(c, count)) sink.push_back(std::move(p));
        }
    };
    std::vector<TorusPoint> pts;
    pool(v, pts);
    pool(w, pts);
    std::size_t both = 0, either = 0;
    for (const auto& p : pts) {
        bool in_v = v.contains(p, 10.0 * tol);
        bool in_w = w.contains(p, 10.0 * tol);
        if (in_v && in_w) ++both;
        if (in_v || in_w) ++either;
    }
    return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

/// The difference map on m-tuples: (x_1..x_m) -> (x_1 - x_2, ..., x_{m-1} - x_m).
inline std::vector<TorusPoint> phi_m(const std::vector<TorusPoint>& tuple) {
    if (tuple.size() < 2)
        throw std::invalid_argument("phi_m: arity must be >= 2");
    std::vector<TorusPoint> out;
    out.reserve(tuple.size() - 1);
    for (std::size_t i = 0; i + 1 < tuple.size(); ++i)
        out.push_back(torus_sub(tuple[i], tuple[i + 1]));
    return out;
}

struct InjectivityProbe {
    bool collision_found = false;
    std::vector<TorusPoint> tuple_a, tuple_b;  // witnesses when found
    std::uint64_t trials_used = 0;
    bool exhausted = false;  // finite tuple space fully enumerated
};

namespace detail {

/// Rounds to the 2^-40 grid: keeps points within ~1e-12 of where they were
/// while making subsequent torus sums and differences exact in doubles.
inline TorusPoint quantize_dyadic(const TorusPoint& p) {
    constexpr double scale = 1099511627776.0;  // 2^40
    Vec c(p.dim());
    for (int i = 0; i < p.dim(); ++i)
        c[i] = frac_exact(std::round(p.coords[i] * scale) / scale);
    return TorusPoint(std::move(c));
}

}  // namespace detail

/// Probes injectivity of phi_m restricted to tuples from V. When V has a
/// positive-dimensional component the probe constructs a collision directly:
/// translating a tuple along the component direction by b = g/4 leaves every
/// difference unchanged (exactly, after dyadic quantization) while moving
/// the tuple. For finite V it enumerates tuple space when it is small and
/// falls back to seeded random pair trials otherwise. Only tuples with
/// pairwise-distinct entries count: tuples with a repeated entry collide for
/// any two-point set already and say nothing about the stabilizer.
inline InjectivityProbe phi_injectivity_probe(const UnionOfTranslates& v, int m,
                                              std::uint64_t trials, std::uint64_t seed) {
    if (m < 2) throw std::invalid_argument("phi_injectivity_probe: arity must be >= 2");
    InjectivityProbe probe;
    const AffineTranslate* fat = nullptr;
    for (const auto& c : v.components)
        if (c.rank() > 0) {
            fat = &c;
            break;
        }
    if (fat) {
        Vec g(fat->ambient_dim());
        for (int i = 0; i < fat->ambient_dim(); ++i)
            g[i] = static_cast<double>(fat->direction.generators().rows[0][i]);
        probe.tuple_a.reserve(m);
        for (int i = 0; i < m; ++i) {
            double step = static_cast<double>(i) / 8.0;
            probe.tuple_a.push_back(
                detail::quantize_dyadic(torus_reduce_exact(fat->base.coords + step * g)));
        }
        TorusPoint shift = detail::quantize_dyadic(torus_reduce_exact(0.25 * g));
        for (const auto& x : probe.tuple_a) probe.tuple_b.push_back(torus_add(x, shift));
        probe.trials_used = 1;
        // A primitive generator has a coordinate not divisible by 4, so the
        // shift is a nonzero torus point and the tuples differ.
        probe.collision_found = true;
        return probe;
    }

    const std::size_t r = v.components.size();
    double space = std::pow(static_cast<double>(r), m);
    auto indices_at = [&](std::uint64_t code) {
        std::vector<std::size_t> idx(m);
        for (int i = 0; i < m; ++i) {
            idx[i] = code % r;
            code /= r;
        }
        return idx;
    };
    auto injective = [](const std::vector<std::size_t>& idx) {
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = i + 1; j < idx.size(); ++j)
                if (idx[i] == idx[j]) return false;
        return true;
    };
    auto tuple_of = [&](const std::vector<std::size_t>& idx) {
        std::vector<TorusPoint> t;
        t.reserve(idx.size());
        for (std::size_t i : idx) t.push_back(v.components[i].base);
        return t;
    };
    auto phi_key = [&](const std::vector<TorusPoint>& t) {
        std::vector<Int> key;
        for (const auto& dpt : phi_m(t))
            for (int i = 0; i < dpt.dim(); ++i)
                key.push_back(static_cast<Int>(std::llround(dpt.coords[i] * 1e9)));
        return key;
    };
    if (space <= 200'000.0) {
        std::map<std::vector<Int>, std::uint64_t> seen;
        auto n = static_cast<std::uint64_t>(space);
        for (std::uint64_t code = 0; code < n; ++code) {
            auto idx = indices_at(code);
            if (!injective(idx)) continue;
            auto t = tuple_of(idx);
            auto key = phi_key(t);
            auto [it, fresh] = seen.emplace(std::move(key), code);
            ++probe.trials_used;
            if (!fresh) {
                probe.collision_found = true;
                probe.tuple_a = tuple_of(indices_at(it->second));
                probe.tuple_b = std::move(t);
                return probe;
            }
        }
        probe.exhausted = true;
        return probe;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(
        0, static_cast<std::uint64_t>(space > 1e18 ? 1e18 : space) - 1);
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        ++probe.trials_used;
        std::uint64_t ca = pick(rng), cb = pick(rng);
        if (ca == cb) continue;
        auto ia = indices_at(ca), ib = indices_at(cb);
        if (!injective(ia) || !injective(ib)) continue;
        auto ta = tuple_of(ia), tb = tuple_of(ib);
        if (phi_key(ta) == phi_key(tb)) {
            probe.collision_found = true;
            probe.tuple_a = std::move(ta);
            probe.tuple_b = std::move(tb);
            return probe;
        }
    }
    return probe;
}

}  // namespace torusflow
