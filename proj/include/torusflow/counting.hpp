// Lattice-height counting along unbounded sets. The census discovers
// translates F - lambda of the fundamental cell met by X, each witnessed by
// a concrete point; the walk tracks which cell a discretized path sits in,
// with steps short enough that the integer cell label moves by at most one
// per coordinate between consecutive vertices.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "torusflow/lattice.hpp"
#include "torusflow/param_set.hpp"

namespace torusflow {

struct CrossingEvent {
    LatticeVector cell;        // lambda with vertex in F - lambda
    std::size_t vertex_index;  // first path vertex inside that cell
};

/// Entry events of a polyline through the cell tiling: one event per
/// maximal run of vertices sharing a cell. Requires consecutive vertex
/// distances below the cell inradius, which bounds every coefficient of
/// consecutive cell labels (hence the height) to change by at most one.
inline std::vector<CrossingEvent> crossing_walk(const std::vector<Vec>& path,
                                                const Lattice& lattice) {
    std::vector<CrossingEvent> events;
    if (path.empty()) return events;
    const double inr = lattice.cell_inradius();
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i > 0 && (path[i] - path[i - 1]).norm() >= inr)
            throw std::invalid_argument("crossing_walk: step reaches cell inradius");
        LatticeVector lambda = -lattice.reduce_to_fundamental(path[i]).lattice_part;
        if (events.empty() || !(events.back().cell == lambda))
            events.push_back({std::move(lambda), i});
    }
    return events;
}

/// Census of Sigma = {lambda : X meets F - lambda} up to height t_max.
/// `witnesses` maps each discovered coefficient tuple to the first point of
/// X found inside the corresponding cell.
struct SigmaSample {
    std::map<std::vector<Int>, Vec> witnesses;
    Int t_max = 0;                  // height horizon that was censused
    std::uint64_t evaluations = 0;  // points of X examined
    bool truncated = false;         // evaluation cap hit before the sweep finished
    bool empty_flagged = false;     // budget spent, nothing discovered

    std::map<Int, std::uint64_t> per_height() const {
        std::map<Int, std::uint64_t> h;
        for (const auto& [coeffs, w] : witnesses) {
            Int m = 0;
            for (Int c : coeffs) m = std::max(m, std::abs(c));
            ++h[m];
        }
        return h;
    }

    std::uint64_t cumulative(Int T) const {
        std::uint64_t c = 0;
        for (const auto& [height, count] : per_height())
            if (height <= T) c += count;
        return c;
    }

    Int max_height() const {
        Int m = -1;
        for (const auto& [coeffs, w] : witnesses) {
            Int h = 0;
            for (Int c : coeffs) h = std::max(h, std::abs(c));
            m = std::max(m, h);
        }
        return m;
    }
};

namespace detail {

inline void census_record(SigmaSample& census, const Lattice& lattice, const Vec& p) {
    ++census.evaluations;
    Reduction red = lattice.reduce_to_fundamental(p);
    LatticeVector lambda = -red.lattice_part;
    if (lambda.height() > census.t_max) return;
    census.witnesses.emplace(lambda.coeffs, p);
}

/// Every cell of height <= T lies inside the ball of this radius, so a
/// parameter sweep covering it censuses the curve completely up to T.
inline double census_cover_radius(const Lattice& lattice, Int t_max) {
    return (static_cast<double>(t_max) + 1.0) * lattice.cell_diameter_bound() + 1.0;
}

inline void census_curve(SigmaSample& census, const ParamSet& x, const Lattice& lattice,
                         std::uint64_t vertex_cap) {
    const double reach = census_cover_radius(lattice, census.t_max);
    ParamBox box = x.parameter_box(0.0, reach);
    double lo = box[0].lo, hi = box[0].hi;
    auto norm_at = [&](double t) {
        Vec one(1);
        one[0] = t;
        return x.evaluate(one).norm();
    };
    // Anchor at the smallest norm seen on a coarse scan, then bisect outward
    // to the reach boundary. Tracing only the bracketed range keeps fast
    // growing coordinates (exponential graphs) from overflowing far outside
    // the ball that matters for the census.
    double t_best = lo, best = norm_at(lo);
    const int kScan = 2048;
    for (int k = 1; k <= kScan; ++k) {
        double t = lo + (hi - lo) * static_cast<double>(k) / kScan;
        double n = norm_at(t);
        if (n < best) {
            best = n;
            t_best = t;
        }
    }
    if (!(best <= reach)) return;  // the curve misses the censused ball
    auto boundary = [&](double inside, double outside) {
        for (int i = 0; i < 100; ++i) {
            double mid = 0.5 * (inside + outside);
            (norm_at(mid) <= reach ? inside : outside) = mid;
        }
        return inside;
    };
    double t_hi = norm_at(hi) <= reach ? hi : boundary(t_best, hi);
    double t_lo = norm_at(lo) <= reach ? lo : boundary(t_best, lo);
    std::vector<Vec> path = trace_path(x, t_lo, t_hi, 0.5 * lattice.cell_inradius());
    std::uint64_t n = path.size();
    if (n > vertex_cap) {
        n = vertex_cap;
        census.truncated = true;
    }
    for (std::uint64_t i = 0; i < n; ++i) census_record(census, lattice, path[i]);
}

inline void census_sampled(SigmaSample& census, const ParamSet& x, const Lattice& lattice,
                           std::uint64_t budget, std::uint64_t seed, int workers) {
    const double reach = census_cover_radius(lattice, census.t_max);
    int levels = 1;
    while (std::pow(2.0, levels) < reach && levels < 60) ++levels;
    std::uint64_t share = std::max<std::uint64_t>(budget / levels, 1);
    double lo = 0.0;
    for (int j = 0; j < levels; ++j) {
        double hi = std::min(std::pow(2.0, j + 1), reach);
        SampleResult s = sample_annulus(x, lo, hi, share, seed + j, workers);
        for (const Vec& p : s.points) census_record(census, lattice, p);
        census.evaluations += s.trials - s.points.size();  // misses also count
        lo = hi;
    }
}

}  // namespace detail

/// Builds the census up to height t_max. Curve families are swept by a
/// crossing walk over the parameter range that covers every cell of height
/// <= t_max (complete up to corner clips shorter than the step); other
/// families are sampled on dyadic annuli. `budget` caps evaluations per
/// member. Deterministic in (seed, budget), independent of workers.
inline SigmaSample sigma_census(const ParamSet& x, const Lattice& lattice, Int t_max,
                                std::uint64_t budget, std::uint64_t seed, int workers = 1) {
    if (x.ambient_dim() != lattice.dim())
        throw std::invalid_argument("sigma_census: ambient dimension mismatch");
    if (t_max < 0) throw std::invalid_argument("sigma_census: t_max must be >= 0");
    SigmaSample census;
    census.t_max = t_max;
    std::vector<const ParamSet*> parts;
    if (x.is_union())
        for (const auto& m : x.members()) parts.push_back(m.get());
    else
        parts.push_back(&x);
    std::uint64_t m_index = 0;
    for (const ParamSet* part : parts) {
        // Curves get both mechanisms: the walk is complete along the traced
        // range, the sampler additionally covers stretches the bracket may
        // clip on curves that leave and re-enter the ball.
        if (part->is_curve()) detail::census_curve(census, *part, lattice, budget);
        detail::census_sampled(census, *part, lattice, budget, seed + m_index, workers);
        ++m_index;
    }
    census.empty_flagged = census.witnesses.empty();
    return census;
}

struct CountingRow {
    Int T = 0;
    std::uint64_t cumulative = 0;
    double bound = 0.0;  // T / 2
    bool pass = false;   // cumulative >= T / 2, compared exactly
};

struct CountingReport {
    std::vector<CountingRow> rows;
    std::optional<Int> t0;  // least threshold from which every row passes
};

/// Tabulates S(T) against the T/2 bound for T = 0 .. census horizon and
/// locates the stabilization threshold. Throws on an empty census.
inline CountingReport counting_bound_report(const SigmaSample& census) {
    if (census.witnesses.empty())
        throw std::invalid_argument("counting_bound_report: census is empty");
    CountingReport report;
    auto heights = census.per_height();
    std::uint64_t running = 0;
    auto it = heights.begin();
    for (Int T = 0; T <= census.t_max; ++T) {
        while (it != heights.end() && it->first <= T) {
            running += it->second;
            ++it;
        }
        CountingRow row;
        row.T = T;
        row.cumulative = running;
        row.bound = 0.5 * static_cast<double>(T);
        row.pass = 2 * running >= static_cast<std::uint64_t>(T);
        report.rows.push_back(row);
    }
    for (std::size_t i = report.rows.size(); i-- > 0;) {
        if (!report.rows[i].pass) break;
        report.t0 = report.rows[i].T;
    }
    return report;
}

}  // namespace torusflow
