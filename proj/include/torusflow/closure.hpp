// Essential-closure estimation. Samples of the projected set are fit by a
// union of affine subtorus translates: integer relations among sample
// differences give the annihilator of the first component, its integer
// kernel gives the tangent directions, and samples off that translate are
// peeled off and fit again. Across an increasing radius schedule the fits
// are compared; agreement of the last two is the stabilization signal that
// the bounded core has stopped contributing.
//
// Relation search is exhaustive over the coefficient box whenever the box
// is small enough (with a pilot subset of differences filtering candidates
// before full confirmation), and lattice-reduction proposals are always
// added. Every returned relation is confirmed against every sample.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusflow/constants.hpp"
#include "torusflow/counting.hpp"
#include "torusflow/lll.hpp"
#include "torusflow/subtorus.hpp"

namespace torusflow {

namespace detail {

inline bool relation_holds(const std::vector<Int>& m, const std::vector<Vec>& diffs,
                           double tol) {
    for (const Vec& d : diffs) {
        double dot = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
            dot += static_cast<double>(m[i]) * d[i];
        if (dist_to_integer(dot) > tol) return false;
    }
    return true;
}

/// Depth-first scan of the box |m|_inf <= bound keeping pilot-consistent
/// covectors. Only canonically signed candidates (first nonzero positive)
/// are emitted; relations come in +/- pairs so nothing is lost.
inline void exhaustive_scan(const std::vector<Vec>& pilot, int dim, int bound, double tol,
                            std::vector<std::vector<Int>>& out) {
    std::vector<Int> m(dim, 0);
    std::vector<double> acc(pilot.size(), 0.0);
    // acc holds sum over decided coordinates of m_i * pilot_j[i].
    auto rec = [&](auto&& self, int level, bool all_zero) -> void {
        if (level == dim) {
            if (all_zero) return;
            for (double a : acc)
                if (dist_to_integer(a) > tol) return;
            out.push_back(m);
            return;
        }
        Int lo = all_zero ? 0 : -bound;  // sign canon: leading coefficient >= 0
        for (Int v = lo; v <= bound; ++v) {
            m[level] = v;
            if (v != lo)
                for (std::size_t j = 0; j < pilot.size(); ++j) acc[j] += pilot[j][level];
            else if (v != 0)
                for (std::size_t j = 0; j < pilot.size(); ++j)
                    acc[j] += static_cast<double>(v) * pilot[j][level];
            self(self, level + 1, all_zero && v == 0);
        }
        for (std::size_t j = 0; j < pilot.size(); ++j)
            acc[j] -= static_cast<double>(bound) * pilot[j][level];
        m[level] = 0;
    };
    rec(rec, 0, true);
}

}  // namespace detail

/// All covectors m with |m|_inf <= bound and m . (x_i - x_0) integral
/// within tol for every sample, canonically signed and sorted. Exhaustive
/// over the box when it has at most kExhaustionCap candidates; reduction
/// proposals are merged in either way.
inline IntMat find_confirmed_relations(const std::vector<TorusPoint>& samples, int bound,
                                       double tol) {
    if (samples.empty())
        throw std::invalid_argument("find_confirmed_relations: no samples");
    const int dim = samples[0].dim();
    if (samples.size() == 1) return IntMat::identity(dim);
    std::vector<Vec> diffs;
    diffs.reserve(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i)
        diffs.push_back(samples[i].coords - samples[0].coords);

    std::set<std::vector<Int>> confirmed;
    double box = std::pow(2.0 * bound + 1.0, dim);
    if (box <= static_cast<double>(kExhaustionCap)) {
        std::vector<Vec> pilot;
        const std::size_t np = std::min<std::size_t>(diffs.size(), 4);
        for (std::size_t j = 0; j < np; ++j) pilot.push_back(diffs[j * diffs.size() / np]);
        std::vector<std::vector<Int>> candidates;
        detail::exhaustive_scan(pilot, dim, bound, tol, candidates);
        for (auto& m : candidates)
            if (detail::relation_holds(m, diffs, tol)) confirmed.insert(std::move(m));
    }
    for (auto& m : propose_relations(diffs, dim, bound))
        if (detail::relation_holds(m, diffs, tol)) confirmed.insert(std::move(m));

    IntMat rel(0, 0);
    for (const auto& m : confirmed) rel.rows.push_back(m);
    return rel;
}

struct DetectedClosure {
    std::vector<AffineTranslate> components;  // peeling order; first is primary
    double residual = 0.0;          // max over samples of distance to nearest component
    int relation_bound = 0;
    bool stabilized = false;        // set by the schedule driver
    double r_at_detection = 0.0;    // inner radius of the annulus that produced the fit
    IntMat primary_relations;       // confirmed relation set behind components[0]
    std::string fit_warning;        // nonempty when the component cap was hit
};

/// Fits a union of translates to torus samples by greedy peeling. Each pass
/// confirms relations among the remaining samples, takes the integer kernel
/// as the component direction and the first remaining sample as its base,
/// then removes the samples the component explains. Coset splitting is
/// automatic: a non-saturated relation lattice yields a direction whose
/// saturated annihilator rejects the other cosets, and later passes pick
/// them up as separate components with the same direction.
inline DetectedClosure detect_affine_subtorus(const std::vector<TorusPoint>& samples,
                                              int relation_bound,
                                              double tol = kMembershipTol) {
    if (samples.empty())
        throw std::invalid_argument("detect_affine_subtorus: no samples");
    if (relation_bound < 1)
        throw std::invalid_argument("detect_affine_subtorus: bound must be >= 1");
    const int dim = samples[0].dim();
    DetectedClosure result;
    result.relation_bound = relation_bound;

    std::vector<TorusPoint> remaining = samples;
    for (int pass = 0; pass < kMaxClosureComponents && !remaining.empty(); ++pass) {
        IntMat rel = find_confirmed_relations(remaining, relation_bound, tol);
        if (pass == 0) result.primary_relations = rel;
        RationalSubtorus direction =
            rel.row_count() == 0
                ? RationalSubtorus::full(dim)
                : RationalSubtorus::from_rows(dim, integer_kernel(rel));
        AffineTranslate comp{remaining.front(), std::move(direction)};
        std::vector<TorusPoint> rest;
        for (const TorusPoint& s : remaining)
            if (comp.distance(s) > tol) rest.push_back(s);
        result.components.push_back(std::move(comp));
        remaining = std::move(rest);
    }
    if (!remaining.empty())
        result.fit_warning = "component cap reached with " +
                             std::to_string(remaining.size()) + " samples unassigned";
    for (const TorusPoint& s : samples) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : result.components) best = std::min(best, c.distance(s));
        result.residual = std::max(result.residual, best);
    }
    return result;
}

/// Same union of translates: component multisets match under
/// translate_equal.
inline bool closure_equal(const DetectedClosure& a, const DetectedClosure& b, double tol) {
    if (a.components.size() != b.components.size()) return false;
    std::vector<bool> used(b.components.size(), false);
    for (const auto& ca : a.components) {
        bool matched = false;
        for (std::size_t j = 0; j < b.components.size(); ++j) {
            if (used[j]) continue;
            if (translate_equal(ca, b.components[j], tol)) {
                used[j] = true;
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    return true;
}

struct EssentialClosureResult {
    struct Entry {
        double r_inner = 0.0;
        double r_outer = 0.0;
        std::size_t sample_count = 0;
        DetectedClosure closure;
    };
    std::vector<Entry> entries;
    bool stabilized = false;  // last two entries agree
    bool truncated = false;   // an annulus produced no samples
};

/// Detects the closure on each annulus of the schedule (the last entry uses
/// [R, 2R)) and reports whether the detections stabilized. Requires a
/// strictly increasing schedule of length >= 3.
inline EssentialClosureResult essential_closure_estimate(
    const ParamSet& x, const Lattice& lattice, const std::vector<double>& r_schedule,
    std::uint64_t budget, int relation_bound, std::uint64_t seed, int workers = 1,
    double tol = kMembershipTol) {
    if (r_schedule.size() < 3)
        throw std::invalid_argument("essential_closure_estimate: schedule needs >= 3 radii");
    for (std::size_t i = 0; i < r_schedule.size(); ++i)
        if (r_schedule[i] <= 0.0 || (i > 0 && r_schedule[i] <= r_schedule[i - 1]))
            throw std::invalid_argument(
                "essential_closure_estimate: schedule must be positive and increasing");
    EssentialClosureResult result;
    for (std::size_t i = 0; i < r_schedule.size(); ++i) {
        double r_in = r_schedule[i];
        double r_out = i + 1 < r_schedule.size() ? r_schedule[i + 1] : 2.0 * r_schedule[i];
        SampleResult s = sample_annulus(x, r_in, r_out, budget, seed + i, workers);
        if (s.points.empty()) {
            result.truncated = true;
            break;
        }
        std::vector<TorusPoint> projected;
        projected.reserve(s.points.size());
        for (const Vec& p : s.points) projected.push_back(torus_project(p, lattice));
        EssentialClosureResult::Entry entry;
        entry.r_inner = r_in;
        entry.r_outer = r_out;
        entry.sample_count = projected.size();
        entry.closure = detect_affine_subtorus(projected, relation_bound, tol);
        entry.closure.r_at_detection = r_in;
        result.entries.push_back(std::move(entry));
    }
    if (result.entries.size() >= 2) {
        auto& last = result.entries[result.entries.size() - 1];
        auto& prev = result.entries[result.entries.size() - 2];
        result.stabilized = closure_equal(last.closure, prev.closure, 10.0 * tol);
        last.closure.stabilized = result.stabilized;
    }
    return result;
}

/// The weakly special subvariety through P inside the detected closure: the
/// direction of the component P lies on, re-verified by translating P along
/// a low-discrepancy fill of the component and re-checking membership.
/// Returns nothing when P sits on an isolated point component. Throws when
/// P is not on the closure at all.
inline std::optional<RationalSubtorus> weakly_special_witness(const DetectedClosure& closure,
                                                              const TorusPoint& p,
                                                              double tol = kMembershipTol) {
    if (closure.components.empty())
        throw std::invalid_argument("weakly_special_witness: empty closure");
    double accept = std::max(tol, closure.residual);
    const AffineTranslate* home = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : closure.components) {
        double d = c.distance(p);
        if (d < best) {
            best = d;
            home = &c;
        }
    }
    if (best > accept)
        throw std::invalid_argument("weakly_special_witness: point is not on the closure");
    if (home->rank() == 0) return std::nullopt;

    const int rank = home->rank();
    Mat tangents = home->direction.tangent_rows();
    HaltonSequence seq(rank, 0x5eedULL);
    std::size_t n_check = std::min<std::size_t>(kGridPointCap, 512);
    for (std::size_t k = 0; k < n_check; ++k) {
        Vec c = seq.point(k);
        Vec shifted = p.coords;
        for (int i = 0; i < rank; ++i) shifted += c[i] * tangents.row(i).transpose();
        TorusPoint q = torus_reduce_exact(shifted);
        double d = std::numeric_limits<double>::infinity();
        for (const auto& comp : closure.components) d = std::min(d, comp.distance(q));
        if (d > accept + 1e-9)
            throw std::runtime_error(
                "weakly_special_witness: translate re-verification failed");
    }
    return home->direction;
}

struct EquidistStats {
    double coverage = 0.0;          // fraction of occupied grid boxes
    double star_discrepancy = 0.0;  // randomized-corner estimate, lower bound
};

/// Box-coverage and star-discrepancy estimate for torus samples at a given
/// grid resolution. The discrepancy scan uses a fixed internal seed, so the
/// statistic is deterministic for a given sample list.
inline EquidistStats equidistribution_stats(const std::vector<TorusPoint>& samples,
                                            double resolution) {
    if (!(resolution > 0.0 && resolution < 1.0))
        throw std::invalid_argument("equidistribution_stats: resolution must be in (0,1)");
    if (samples.empty())
        throw std::invalid_argument("equidistribution_stats: no samples");
    const int dim = samples[0].dim();
    const std::uint64_t bins =
        static_cast<std::uint64_t>(std::ceil(1.0 / resolution));
    double total = std::pow(static_cast<double>(bins), dim);
    if (total > 4e9)
        throw std::invalid_argument("equidistribution_stats: grid too fine for this dimension");
    std::set<std::uint64_t> occupied;
    for (const TorusPoint& s : samples) {
        std::uint64_t key = 0;
        for (int i = 0; i < dim; ++i) {
            auto b = static_cast<std::uint64_t>(s.coords[i] * static_cast<double>(bins));
            if (b >= bins) b = bins - 1;
            key = key * bins + b;
        }
        occupied.insert(key);
    }
    EquidistStats stats;
    stats.coverage = static_cast<double>(occupied.size()) / total;

    std::mt19937_64 rng(0xD15CULL);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const std::size_t stride = samples.size() > 200'000 ? samples.size() / 200'000 : 1;
    for (int trial = 0; trial < 256; ++trial) {
        Vec corner(dim);
        double vol = 1.0;
        for (int i = 0; i < dim; ++i) {
            corner[i] = uni(rng);
            vol *= corner[i];
        }
        std::size_t inside = 0, seen = 0;
        for (std::size_t s = 0; s < samples.size(); s += stride) {
            ++seen;
            bool in = true;
            for (int i = 0; i < dim; ++i)
                if (samples[s].coords[i] >= corner[i]) {
                    in = false;
                    break;
                }
            if (in) ++inside;
        }
        double dev = std::abs(static_cast<double>(inside) / static_cast<double>(seen) - vol);
        stats.star_discrepancy = std::max(stats.star_discrepancy, dev);
    }
    return stats;
}

}  // namespace torusflow
