// The closed catalogue of definable subsets of R^{2n} the laboratory can
// census. Each family is given by an explicit parametrization with a known
// parameter box covering any ball intersection, so sampling needs no
// root-finding: draw low-discrepancy parameters in the box, evaluate, and
// keep the points that land in the requested ball or annulus.
//
// Families:
//   LinearFlow   {offset + t * direction : t in R}
//   RayFlow      same with t >= 0
//   ExpSpiral    s linear complex coordinates z = x + iy and r exponential
//                ones e^z, all driven by one parameter pair (x, y); ambient
//                dimension 2(s + r)
//   GraphCurve   {(t, f(t))} for f polynomial, exponential, or a sine or
//                cosine restricted to a bounded interval
//   UnionSet     finite union of members with equal ambient dimension
//   BoundedBlob  cube inscribed in the ball of a given center and radius
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "torusflow/constants.hpp"
#include "torusflow/lds.hpp"
#include "torusflow/parallel.hpp"
#include "torusflow/subtorus.hpp"

namespace torusflow {

class ParamSet;

struct LinearFlowSpec {
    Vec direction;
    Vec offset;
};
struct RayFlowSpec {
    Vec direction;
    Vec offset;
};
struct ExpSpiralSpec {
    int linear_coords;       // s
    int exponential_coords;  // r
};
struct GraphFn {
    enum class Kind { Poly, Exp, Sin, Cos };
    Kind kind = Kind::Poly;
    std::vector<double> coeffs;  // Poly: c0..ck; Exp/Sin/Cos: {a, b} for a*g(b*t)

    double operator()(double t) const {
        switch (kind) {
            case Kind::Poly: {
                double acc = 0.0;
                for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
                return acc;
            }
            case Kind::Exp: return coeffs[0] * std::exp(coeffs[1] * t);
            case Kind::Sin: return coeffs[0] * std::sin(coeffs[1] * t);
            case Kind::Cos: return coeffs[0] * std::cos(coeffs[1] * t);
        }
        return 0.0;
    }
};
struct GraphCurveSpec {
    GraphFn fn;
    double t_min = -std::numeric_limits<double>::infinity();
    double t_max = std::numeric_limits<double>::infinity();
};
struct BoundedBlobSpec {
    Vec center;
    double radius = 1.0;
};
struct UnionSpec {
    std::vector<std::shared_ptr<const ParamSet>> members;
};

struct Interval {
    double lo = 0.0, hi = 0.0;
};
using ParamBox = std::vector<Interval>;

class ParamSet {
  public:
    using Spec = std::variant<LinearFlowSpec, RayFlowSpec, ExpSpiralSpec, GraphCurveSpec,
                              UnionSpec, BoundedBlobSpec>;

    explicit ParamSet(Spec spec) : spec_(std::move(spec)) { validate(); }

    static ParamSet linear_flow(Vec direction, Vec offset) {
        return ParamSet(LinearFlowSpec{std::move(direction), std::move(offset)});
    }
    static ParamSet ray_flow(Vec direction, Vec offset) {
        return ParamSet(RayFlowSpec{std::move(direction), std::move(offset)});
    }
    static ParamSet exp_spiral(int s, int r) { return ParamSet(ExpSpiralSpec{s, r}); }
    static ParamSet graph_curve(GraphFn fn, double t_min, double t_max) {
        return ParamSet(GraphCurveSpec{std::move(fn), t_min, t_max});
    }
    static ParamSet bounded_blob(Vec center, double radius) {
        return ParamSet(BoundedBlobSpec{std::move(center), radius});
    }
    static ParamSet union_of(std::vector<ParamSet> members) {
        UnionSpec u;
        for (auto& m : members) u.members.push_back(std::make_shared<const ParamSet>(std::move(m)));
        return ParamSet(std::move(u));
    }

    const Spec& spec() const { return spec_; }

    int ambient_dim() const {
        return std::visit(
            [](const auto& s) -> int {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, LinearFlowSpec> || std::is_same_v<T, RayFlowSpec>)
                    return static_cast<int>(s.direction.size());
                else if constexpr (std::is_same_v<T, ExpSpiralSpec>)
                    return 2 * (s.linear_coords + s.exponential_coords);
                else if constexpr (std::is_same_v<T, GraphCurveSpec>)
                    return 2;
                else if constexpr (std::is_same_v<T, BoundedBlobSpec>)
                    return static_cast<int>(s.center.size());
                else
                    return s.members.front()->ambient_dim();
            },
            spec_);
    }

    int param_dim() const {
        return std::visit(
            [](const auto& s) -> int {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, LinearFlowSpec> || std::is_same_v<T, RayFlowSpec> ||
                              std::is_same_v<T, GraphCurveSpec>)
                    return 1;
                else if constexpr (std::is_same_v<T, ExpSpiralSpec>)
                    return 2;
                else if constexpr (std::is_same_v<T, BoundedBlobSpec>)
                    return static_cast<int>(s.center.size());
                else
                    return 0;  // unions are sampled per member
            },
            spec_);
    }

    bool is_union() const { return std::holds_alternative<UnionSpec>(spec_); }
    const std::vector<std::shared_ptr<const ParamSet>>& members() const {
        return std::get<UnionSpec>(spec_).members;
    }

    /// One-parameter families support path tracing.
    bool is_curve() const { return param_dim() == 1; }

    bool declared_unbounded() const {
        return std::visit(
            [](const auto& s) -> bool {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, LinearFlowSpec> || std::is_same_v<T, RayFlowSpec>)
                    return s.direction.norm() > 0.0;
                else if constexpr (std::is_same_v<T, ExpSpiralSpec>)
                    return true;
                else if constexpr (std::is_same_v<T, GraphCurveSpec>)
                    return std::isinf(s.t_min) || std::isinf(s.t_max);
                else if constexpr (std::is_same_v<T, BoundedBlobSpec>)
                    return false;
                else {
                    for (const auto& m : s.members)
                        if (m->declared_unbounded()) return true;
                    return false;
                }
            },
            spec_);
    }

    Vec evaluate(const Vec& params) const {
        if (params.size() != param_dim())
            throw std::invalid_argument("ParamSet: wrong parameter arity");
        return std::visit(
            [&](const auto& s) -> Vec {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, LinearFlowSpec>) {
                    return s.offset + params[0] * s.direction;
                } else if constexpr (std::is_same_v<T, RayFlowSpec>) {
                    if (params[0] < 0.0)
                        throw std::invalid_argument("RayFlow: parameter must be >= 0");
                    return s.offset + params[0] * s.direction;
                } else if constexpr (std::is_same_v<T, ExpSpiralSpec>) {
                    double x = params[0], y = params[1];
                    Vec p(2 * (s.linear_coords + s.exponential_coords));
                    for (int j = 0; j < s.linear_coords; ++j) {
                        p[2 * j] = x;
                        p[2 * j + 1] = y;
                    }
                    double ex = std::exp(x);
                    for (int j = 0; j < s.exponential_coords; ++j) {
                        p[2 * (s.linear_coords + j)] = ex * std::cos(y);
                        p[2 * (s.linear_coords + j) + 1] = ex * std::sin(y);
                    }
                    return p;
                } else if constexpr (std::is_same_v<T, GraphCurveSpec>) {
                    double t = params[0];
                    if (t < s.t_min || t > s.t_max)
                        throw std::invalid_argument("GraphCurve: parameter outside domain");
                    Vec p(2);
                    p[0] = t;
                    p[1] = s.fn(t);
                    return p;
                } else if constexpr (std::is_same_v<T, BoundedBlobSpec>) {
                    const int d = static_cast<int>(s.center.size());
                    Vec p(d);
                    double scale = s.radius / std::sqrt(static_cast<double>(d));
                    for (int i = 0; i < d; ++i)
                        p[i] = s.center[i] + scale * (2.0 * params[i] - 1.0);
                    return p;
                } else {
                    throw std::invalid_argument("UnionSet: evaluate members individually");
                }
            },
            spec_);
    }

    /// A parameter box whose image covers X intersected with the annulus
    /// r_inner <= ||p|| < r_outer. Oversampling outside the annulus is fine;
    /// the samplers filter by norm afterwards.
    ParamBox parameter_box(double r_inner, double r_outer) const {
        if (!(r_outer > 0.0) || r_inner < 0.0 || r_inner >= r_outer)
            throw std::invalid_argument("parameter_box: need 0 <= r_inner < r_outer");
        return std::visit(
            [&](const auto& s) -> ParamBox {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, LinearFlowSpec>) {
                    double dn = s.direction.norm();
                    if (dn == 0.0) return {{0.0, 0.0}};
                    double reach = (r_outer + s.offset.norm()) / dn;
                    return {{-reach, reach}};
                } else if constexpr (std::is_same_v<T, RayFlowSpec>) {
                    double dn = s.direction.norm();
                    if (dn == 0.0) return {{0.0, 0.0}};
                    return {{0.0, (r_outer + s.offset.norm()) / dn}};
                } else if constexpr (std::is_same_v<T, ExpSpiralSpec>) {
                    // ||p||^2 = s (x^2 + y^2) + r e^{2x}.
                    double rr = static_cast<double>(s.exponential_coords);
                    double x_hi = std::log(r_outer / std::sqrt(std::max(rr, 1.0)));
                    ParamBox box(2);
                    if (s.linear_coords > 0) {
                        box[0] = {-r_outer, std::min(r_outer, x_hi)};
                        box[1] = {-r_outer, r_outer};
                    } else {
                        // Pure exponential: y acts through e^{iy} only, so one
                        // period suffices; x below log(r_inner) cannot reach
                        // the annulus.
                        double x_lo = r_inner > 0.0 ? std::log(r_inner / std::sqrt(rr)) - 1.0
                                                    : x_hi - 40.0;
                        box[0] = {x_lo, x_hi};
                        box[1] = {0.0, 2.0 * kPi};
                    }
                    return box;
                } else if constexpr (std::is_same_v<T, GraphCurveSpec>) {
                    double lo = std::max(s.t_min, -r_outer);
                    double hi = std::min(s.t_max, r_outer);
                    if (lo > hi) {
                        // Domain misses the ball entirely; collapse to the
                        // domain endpoint nearest the ball (always finite in
                        // whichever case triggered).
                        lo = hi = (s.t_min > r_outer) ? s.t_min : s.t_max;
                    }
                    return {{lo, hi}};
                } else if constexpr (std::is_same_v<T, BoundedBlobSpec>) {
                    ParamBox box(s.center.size());
                    for (auto& iv : box) iv = {0.0, 1.0};
                    return box;
                } else {
                    throw std::invalid_argument("UnionSet: sample members individually");
                }
            },
            spec_);
    }

  private:
    void validate() const {
        std::visit(
            [](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, LinearFlowSpec> || std::is_same_v<T, RayFlowSpec>) {
                    if (s.direction.size() != s.offset.size())
                        throw std::invalid_argument("flow: direction/offset size mismatch");
                    if (s.direction.size() == 0 || s.direction.size() % 2 != 0)
                        throw std::invalid_argument("flow: ambient dimension must be even");
                } else if constexpr (std::is_same_v<T, ExpSpiralSpec>) {
                    if (s.linear_coords < 0 || s.exponential_coords < 1)
                        throw std::invalid_argument("ExpSpiral: need r >= 1, s >= 0");
                } else if constexpr (std::is_same_v<T, GraphCurveSpec>) {
                    if (s.t_min > s.t_max)
                        throw std::invalid_argument("GraphCurve: empty domain");
                    bool trig = s.fn.kind == GraphFn::Kind::Sin || s.fn.kind == GraphFn::Kind::Cos;
                    if (trig && (std::isinf(s.t_min) || std::isinf(s.t_max)))
                        throw std::invalid_argument(
                            "GraphCurve: sine and cosine require a bounded domain");
                    if (s.fn.kind != GraphFn::Kind::Poly && s.fn.coeffs.size() != 2)
                        throw std::invalid_argument("GraphCurve: exp/sin/cos take coeffs {a, b}");
                    if (s.fn.kind == GraphFn::Kind::Poly && s.fn.coeffs.empty())
                        throw std::invalid_argument("GraphCurve: empty polynomial");
                } else if constexpr (std::is_same_v<T, BoundedBlobSpec>) {
                    if (!(s.radius > 0.0))
                        throw std::invalid_argument("BoundedBlob: radius must be positive");
                    if (s.center.size() == 0 || s.center.size() % 2 != 0)
                        throw std::invalid_argument("BoundedBlob: ambient dimension must be even");
                } else if constexpr (std::is_same_v<T, UnionSpec>) {
                    if (s.members.empty())
                        throw std::invalid_argument("UnionSet: needs at least one member");
                    int d = s.members.front()->ambient_dim();
                    for (const auto& m : s.members)
                        if (m->ambient_dim() != d)
                            throw std::invalid_argument("UnionSet: mixed ambient dimensions");
                }
            },
            spec_);
    }

    Spec spec_;
};

struct SampleResult {
    std::vector<Vec> points;
    std::uint64_t trials = 0;
    bool empty_flagged = false;  // budget spent, zero hits
};

/// Low-discrepancy sample of X within the annulus r_inner <= ||p|| < r_outer.
/// `budget` counts parameter draws, not hits. Unions split the budget evenly
/// across members (earlier members take the remainder) and concatenate in
/// member order. Deterministic in (seed, budget), independent of workers.
namespace detail {
inline SampleResult sample_annulus_impl(const ParamSet& x, double r_inner, double r_outer,
                                        std::uint64_t budget, std::uint64_t seed, int workers) {
    SampleResult res;
    if (x.is_union()) {
        const auto& members = x.members();
        std::uint64_t k = members.size();
        std::uint64_t share = budget / k, extra = budget % k;
        for (std::uint64_t m = 0; m < k; ++m) {
            std::uint64_t b = share + (m < extra ? 1 : 0);
            SampleResult part =
                sample_annulus_impl(*members[m], r_inner, r_outer, b, seed + m, workers);
            res.trials += part.trials;
            for (auto& p : part.points) res.points.push_back(std::move(p));
        }
        res.empty_flagged = budget > 0 && res.points.empty();
        return res;
    }
    ParamBox box = x.parameter_box(r_inner, r_outer);
    HaltonSequence seq(static_cast<int>(box.size()), seed);
    auto draw = [&](std::uint64_t idx) -> std::optional<Vec> {
        Vec u = seq.point(idx);
        Vec params(box.size());
        for (std::size_t i = 0; i < box.size(); ++i)
            params[i] = box[i].lo + u[i] * (box[i].hi - box[i].lo);
        Vec p = x.evaluate(params);
        double nrm = p.norm();
        if (nrm >= r_inner && nrm < r_outer) return p;
        return std::nullopt;
    };
    std::vector<std::optional<Vec>> hits =
        parallel_map<std::optional<Vec>>(budget, workers, draw);
    res.trials = budget;
    for (auto& h : hits)
        if (h) res.points.push_back(std::move(*h));
    res.empty_flagged = budget > 0 && res.points.empty();
    return res;
}
}  // namespace detail

inline SampleResult sample_annulus(const ParamSet& x, double r_inner, double r_outer,
                                   std::uint64_t budget, std::uint64_t seed, int workers = 1) {
    if (budget == 0) throw std::invalid_argument("sample_annulus: budget must be positive");
    if (!(r_inner >= 0.0) || !(r_outer > r_inner))
        throw std::invalid_argument("sample_annulus: need 0 <= r_inner < r_outer");
    return detail::sample_annulus_impl(x, r_inner, r_outer, budget, seed, workers);
}

inline SampleResult sample_in_ball(const ParamSet& x, double radius, std::uint64_t budget,
                                   std::uint64_t seed, int workers = 1) {
    return sample_annulus(x, 0.0, radius, budget, seed, workers);
}

/// Polyline along a one-parameter family with consecutive vertex distance
/// at most max_step, exact endpoints first and last. The step adapts by
/// halving on overshoot and re-doubling on slack, so graphs with steep
/// stretches stay within bound without a global worst-case step count.
inline std::vector<Vec> trace_path(const ParamSet& x, double t0, double t1, double max_step) {
    if (!x.is_curve() || x.is_union())
        throw std::invalid_argument("trace_path: family is not a one-parameter curve");
    if (!(max_step > 0.0)) throw std::invalid_argument("trace_path: max_step must be positive");
    if (t0 > t1) throw std::invalid_argument("trace_path: need t0 <= t1");
    Vec one(1);
    one[0] = t0;
    std::vector<Vec> pts{x.evaluate(one)};
    if (t0 == t1) return pts;
    const double span = t1 - t0;
    double t = t0, dt = span / 16.0;
    const double dt_min = span * 1e-13;
    std::uint64_t guard = 0;
    while (t < t1) {
        if (++guard > 50'000'000ull)
            throw std::runtime_error("trace_path: vertex guard exceeded");
        double t_next = std::min(t + dt, t1);
        one[0] = t_next;
        Vec p = x.evaluate(one);
        double d = (p - pts.back()).norm();
        if (d > max_step && t_next - t > dt_min) {
            dt *= 0.5;
            continue;
        }
        pts.push_back(std::move(p));
        t = t_next;
        if (d < 0.25 * max_step) dt = std::min(dt * 2.0, span);
    }
    return pts;
}

struct GrowthTable {
    std::vector<double> radii;
    std::vector<double> maxima;  // max ||p_B(sample)|| within each ball
    bool unbounded = false;
};

/// Numerical probe for unboundedness of the projection of X to span(B) in
/// the splitting span(B) + span(B'): samples X in growing balls and tracks
/// the largest projected norm. Declares unbounded when the maxima strictly
/// increase across the last three radii by a factor of kGrowthFactor each.
inline GrowthTable projection_unbounded_check(const ParamSet& x, const RationalSubtorus& b,
                                              const RationalSubtorus& bp, const Lattice& lattice,
                                              const std::vector<double>& radii,
                                              std::uint64_t budget, std::uint64_t seed,
                                              int workers = 1) {
    if (radii.size() < 3)
        throw std::invalid_argument("projection_unbounded_check: need at least three radii");
    GrowthTable table;
    for (double r : radii) {
        SampleResult s = sample_in_ball(x, r, budget, seed, workers);
        double m = 0.0;
        for (const Vec& p : s.points)
            m = std::max(m, tangent_projection(p, b, bp, lattice).norm());
        table.radii.push_back(r);
        table.maxima.push_back(m);
    }
    std::size_t n = table.maxima.size();
    table.unbounded = true;
    for (std::size_t i = n - 2; i < n; ++i) {
        if (table.maxima[i] < kGrowthFactor * table.maxima[i - 1] ||
            table.maxima[i] == 0.0) {
            table.unbounded = false;
            break;
        }
    }
    return table;
}

}  // namespace torusflow
