// Connected rational subtori of the torus R^{2n}/Z^{2n} and their affine
// translates. A subtorus is determined by the saturated sublattice of
// Z^{2n} spanned by its tangent directions; we keep that sublattice in
// canonical Hermite form so equality of subtori is row-wise equality.
//
// Membership of a torus point q in the translate P + B is measured through
// the annihilator: q lies on the translate iff c . (q - P) is an integer
// for every covector c with c . B = 0. The reported distance is the max
// over annihilator rows of the distance of c . (q - P) to the nearest
// integer; for the zero subtorus this is the L-infinity torus metric, and
// for the full torus it is identically zero.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "torusflow/integer_matrix.hpp"
#include "torusflow/lattice.hpp"
#include "torusflow/torus.hpp"

namespace torusflow {

class RationalSubtorus {
  public:
    /// Builds the subtorus whose tangent lattice is the saturation of the
    /// row span of `rows` (coordinates w.r.t. the lattice basis). Rows must
    /// be linearly independent.
    static RationalSubtorus from_rows(int ambient_dim, const IntMat& rows) {
        if (rows.row_count() == 0) return zero(ambient_dim);
        if (rows.col_count() != static_cast<std::size_t>(ambient_dim))
            throw std::invalid_argument("subtorus: generator width != ambient dimension");
        return RationalSubtorus(ambient_dim, saturate_rows(rows));
    }

    static RationalSubtorus zero(int ambient_dim) {
        return RationalSubtorus(ambient_dim, IntMat(0, 0));
    }
    static RationalSubtorus full(int ambient_dim) {
        return RationalSubtorus(ambient_dim, IntMat::identity(ambient_dim));
    }

    int ambient_dim() const { return ambient_dim_; }
    int rank() const { return static_cast<int>(generators_.row_count()); }
    bool is_zero() const { return rank() == 0; }
    bool is_full() const { return rank() == ambient_dim_; }

    /// Canonical (HNF, saturated) generator rows of the tangent lattice.
    const IntMat& generators() const { return generators_; }

    /// Canonical generators of {c in Z^{2n} : c . g = 0 for all generators g}.
    const IntMat& annihilator() const { return annihilator_; }

    /// Real tangent directions as rows of a double matrix (rank x 2n).
    Mat tangent_rows() const {
        Mat m(rank(), ambient_dim_);
        for (int i = 0; i < rank(); ++i)
            for (int j = 0; j < ambient_dim_; ++j)
                m(i, j) = static_cast<double>(generators_.rows[i][j]);
        return m;
    }

    bool operator==(const RationalSubtorus& o) const {
        return ambient_dim_ == o.ambient_dim_ && generators_ == o.generators_;
    }
    bool operator!=(const RationalSubtorus& o) const { return !(*this == o); }

  private:
    RationalSubtorus(int ambient_dim, IntMat canonical)
        : ambient_dim_(ambient_dim), generators_(std::move(canonical)) {
        if (generators_.row_count() == 0) {
            annihilator_ = IntMat::identity(ambient_dim_);
        } else if (generators_.row_count() == static_cast<std::size_t>(ambient_dim_)) {
            annihilator_ = IntMat(0, 0);
        } else {
            annihilator_ = integer_kernel(generators_);
        }
    }

    int ambient_dim_;
    IntMat generators_;
    IntMat annihilator_;
};

/// Distance of q to the translate base + direction, in the covector metric
/// described at the top of this header.
inline double translate_distance(const TorusPoint& q, const TorusPoint& base,
                                 const RationalSubtorus& direction) {
    if (q.dim() != direction.ambient_dim())
        throw std::invalid_argument("translate_distance: dimension mismatch");
    const IntMat& ann = direction.annihilator();
    double d = 0.0;
    for (const auto& row : ann.rows) {
        double dot = 0.0;
        for (int i = 0; i < q.dim(); ++i)
            dot += static_cast<double>(row[i]) * (q.coords[i] - base.coords[i]);
        d = std::max(d, dist_to_integer(dot));
    }
    return d;
}

/// A translate P + B of a rational subtorus by a torus point.
struct AffineTranslate {
    TorusPoint base;
    RationalSubtorus direction;

    int ambient_dim() const { return direction.ambient_dim(); }
    int rank() const { return direction.rank(); }

    double distance(const TorusPoint& q) const {
        return translate_distance(q, base, direction);
    }
    bool contains(const TorusPoint& q, double tol) const { return distance(q) <= tol; }
};

/// Same subset of the torus: equal directions and bases congruent modulo
/// the direction (within tol in the covector metric).
inline bool translate_equal(const AffineTranslate& a, const AffineTranslate& b, double tol) {
    if (a.direction != b.direction) return false;
    return translate_distance(a.base, b.base, a.direction) <= tol;
}

/// Greedy complement: extends B's tangent lattice by standard basis vectors
/// in index order until the span is everything, and returns the subtorus
/// generated by the vectors that were added. The result B' always satisfies
/// rank(B) + rank(B') = 2n and B + B' = full torus; it is one canonical
/// choice among many valid complements.
inline RationalSubtorus complement(const RationalSubtorus& b) {
    const int d = b.ambient_dim();
    if (b.is_full()) return RationalSubtorus::zero(d);
    if (b.is_zero()) return RationalSubtorus::full(d);
    IntMat work = b.generators();
    std::size_t current = rational_rank(work);
    IntMat picked(0, 0);
    for (int i = 0; i < d && current < static_cast<std::size_t>(d); ++i) {
        std::vector<Int> e(d, 0);
        e[i] = 1;
        IntMat trial = work;
        trial.rows.push_back(e);
        if (rational_rank(trial) == current + 1) {
            work = std::move(trial);
            picked.rows.push_back(std::move(e));
            ++current;
        }
    }
    return RationalSubtorus::from_rows(d, picked);
}

/// Number of points of B intersect B' when the ranks are complementary:
/// the index |det| of the stacked generator lattice inside Z^{2n}.
/// Throws when the intersection is infinite (spans overlap).
inline Int intersection_order(const RationalSubtorus& b, const RationalSubtorus& bp) {
    if (b.ambient_dim() != bp.ambient_dim())
        throw std::invalid_argument("intersection_order: dimension mismatch");
    const int d = b.ambient_dim();
    if (b.rank() + bp.rank() != d)
        throw std::invalid_argument("intersection_order: ranks are not complementary");
    IntMat stacked = vstack(b.generators(), bp.generators());
    Int det = determinant(stacked);
    if (det == 0)
        throw std::invalid_argument("intersection_order: spans overlap, intersection infinite");
    return det < 0 ? -det : det;
}

/// The quotient torus T -> T / B realized through a unimodular change of
/// basis: the first rank(B) rows of the new basis span B's tangent lattice,
/// and the projection keeps the complementary coordinates. Exact on lattice
/// points of B (the dropped coordinates are integers there).
class QuotientMap {
  public:
    explicit QuotientMap(const RationalSubtorus& b) : ambient_dim_(b.ambient_dim()) {
        const int d = ambient_dim_;
        rank_ = b.rank();
        if (rank_ == 0 || rank_ == d) {
            // Trivial cases: identity map or map to a point.
            coeff_ = IntMat::identity(d);
            return;
        }
        SmithResult s = smith_normal_form(b.generators());
        // Rows of vinv complete b's tangent lattice to a basis of Z^{2n};
        // coordinates w.r.t. that basis are given by v transposed.
        coeff_ = s.v;
    }

    int source_dim() const { return ambient_dim_; }
    int target_dim() const { return ambient_dim_ - rank_; }

    TorusPoint apply(const TorusPoint& x) const {
        if (x.dim() != ambient_dim_)
            throw std::invalid_argument("quotient: dimension mismatch");
        Vec out(target_dim());
        for (int j = rank_; j < ambient_dim_; ++j) {
            double acc = 0.0;
            for (int i = 0; i < ambient_dim_; ++i)
                acc += static_cast<double>(coeff_.rows[i][j]) * x.coords[i];
            out[j - rank_] = frac_snapped(acc);
        }
        return TorusPoint(std::move(out));
    }

  private:
    int ambient_dim_;
    int rank_ = 0;
    IntMat coeff_;  // v from the Smith decomposition of the generators
};

/// Splits lattice-basis coordinates t along the direct sum span(B) + span(B').
/// Returns the pair of components, still in lattice-basis coordinates.
inline std::pair<Vec, Vec> split_coords(const Vec& t, const RationalSubtorus& b,
                                        const RationalSubtorus& bp) {
    const int d = b.ambient_dim();
    if (b.rank() + bp.rank() != d)
        throw std::invalid_argument("split: ranks are not complementary");
    Mat m(d, d);
    Mat tb = b.tangent_rows(), tbp = bp.tangent_rows();
    for (int i = 0; i < b.rank(); ++i) m.col(i) = tb.row(i).transpose();
    for (int i = 0; i < bp.rank(); ++i) m.col(b.rank() + i) = tbp.row(i).transpose();
    Eigen::PartialPivLU<Mat> lu(m);
    if (std::abs(lu.determinant()) < 1e-12)
        throw std::invalid_argument("split: spans do not form a direct sum");
    Vec c = lu.solve(t);
    Vec along_b = Vec::Zero(d), along_bp = Vec::Zero(d);
    for (int i = 0; i < b.rank(); ++i) along_b += c[i] * m.col(i);
    for (int i = 0; i < bp.rank(); ++i) along_bp += c[b.rank() + i] * m.col(b.rank() + i);
    return {along_b, along_bp};
}

/// Component of the ambient point p along span(B) in the splitting
/// R^{2n} = span(B) + span(B'), returned as an ambient vector.
inline Vec tangent_projection(const Vec& p, const RationalSubtorus& b,
                              const RationalSubtorus& bp, const Lattice& lattice) {
    Vec t = lattice.lattice_coords(p);
    auto [along_b, along_bp] = split_coords(t, b, bp);
    return lattice.basis_rows().transpose() * along_b;
}

}  // namespace torusflow
