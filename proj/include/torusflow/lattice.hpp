// Full-rank lattices in R^{2n}: bases, exact integer coordinates, heights,
// and fundamental-domain reduction. The fundamental cell is the half-open
// parallelepiped {sum t_i * lambda_i : t_i in [0,1)}, so reduction assigns
// every ambient point a unique representative.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "torusflow/constants.hpp"
#include "torusflow/integer_matrix.hpp"

namespace torusflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Exact integer coefficient tuple of a lattice vector w.r.t. the fixed
/// ordered basis. The height is the max-norm of the coefficients.
struct LatticeVector {
    std::vector<Int> coeffs;

    LatticeVector() = default;
    explicit LatticeVector(std::vector<Int> c) : coeffs(std::move(c)) {}
    static LatticeVector zero(std::size_t dim) {
        return LatticeVector(std::vector<Int>(dim, 0));
    }

    std::size_t dim() const { return coeffs.size(); }
    bool is_zero() const {
        for (Int c : coeffs)
            if (c != 0) return false;
        return true;
    }

    /// H(lambda) = max(|a_1|, ..., |a_{2n}|).
    Int height() const {
        Int h = 0;
        for (Int c : coeffs) h = std::max(h, std::abs(c));
        return h;
    }

    LatticeVector operator-() const {
        LatticeVector r = *this;
        for (Int& c : r.coeffs) c = -c;
        return r;
    }
    LatticeVector operator+(const LatticeVector& o) const {
        LatticeVector r = *this;
        for (std::size_t i = 0; i < coeffs.size(); ++i) r.coeffs[i] += o.coeffs[i];
        return r;
    }
    LatticeVector operator-(const LatticeVector& o) const {
        LatticeVector r = *this;
        for (std::size_t i = 0; i < coeffs.size(); ++i) r.coeffs[i] -= o.coeffs[i];
        return r;
    }
    bool operator==(const LatticeVector& o) const { return coeffs == o.coeffs; }
    bool operator<(const LatticeVector& o) const { return coeffs < o.coeffs; }
};

/// Result of reducing an ambient point into the fundamental cell:
/// p = in_cell + lattice_part (ambient), with in_cell's basis coordinates
/// all in [0,1).
struct Reduction {
    Vec in_cell;
    LatticeVector lattice_part;
};

/// A full-rank lattice in R^{2n} with a distinguished ordered basis.
/// Immutable after construction; every operation is pure.
class Lattice {
  public:
    /// `basis_rows` holds the basis vectors lambda_i as rows (2n x 2n).
    /// Throws if the rows fail the independence check
    /// |det| > 1e-9 * prod(||lambda_i||).
    Lattice(int complex_dim, Mat basis_rows)
        : n_(complex_dim), basis_(std::move(basis_rows)) {
        const int d = 2 * n_;
        if (n_ <= 0) throw std::invalid_argument("Lattice: dimension_n must be positive");
        if (basis_.rows() != d || basis_.cols() != d)
            throw std::invalid_argument("Lattice: basis must be 2n x 2n");
        Eigen::PartialPivLU<Mat> lu(basis_.transpose());
        det_ = lu.determinant();
        double norm_prod = 1.0;
        for (int i = 0; i < d; ++i) norm_prod *= basis_.row(i).norm();
        if (!(std::abs(det_) > 1e-9 * norm_prod))
            throw std::invalid_argument("Lattice: basis vectors are not independent");
        coords_map_ = lu.inverse();  // (B^T)^{-1}: coords(p) = coords_map_ * p
        double inr = std::numeric_limits<double>::infinity();
        for (int i = 0; i < d; ++i)
            inr = std::min(inr, 0.5 / coords_map_.row(i).norm());
        inradius_ = inr;
    }

    static Lattice identity(int complex_dim) {
        return Lattice(complex_dim, Mat::Identity(2 * complex_dim, 2 * complex_dim));
    }

    /// Seeded unimodular integer basis: identity shuffled by elementary row
    /// operations with entries capped at 5. Bit-identical for a given seed.
    static Lattice random_unimodular(int complex_dim, std::uint64_t seed) {
        const int d = 2 * complex_dim;
        std::mt19937_64 rng(seed);
        IntMat b = IntMat::identity(d);
        std::uniform_int_distribution<int> pick_row(0, d - 1);
        std::uniform_int_distribution<int> pick_op(0, 5);
        int done = 0;
        const int wanted = 6 * d;
        int guard = 0;
        while (done < wanted && ++guard < 10000) {
            int i = pick_row(rng), j = pick_row(rng);
            int op = pick_op(rng);
            if (op == 0) {
                std::swap(b.rows[i], b.rows[j]);
            } else if (op == 1) {
                for (auto& v : b.rows[i]) v = -v;
            } else {
                if (i == j) continue;
                int s = (op % 2 == 0) ? 1 : -1;
                std::vector<Int> trial = b.rows[i];
                Int maxabs = 0;
                for (int c = 0; c < d; ++c) {
                    trial[c] += s * b.rows[j][c];
                    maxabs = std::max(maxabs, std::abs(trial[c]));
                }
                if (maxabs > 5) continue;
                b.rows[i] = std::move(trial);
            }
            ++done;
        }
        Mat m(d, d);
        for (int i = 0; i < d; ++i)
            for (int jj = 0; jj < d; ++jj) m(i, jj) = static_cast<double>(b.rows[i][jj]);
        return Lattice(complex_dim, m);
    }

    int complex_dim() const { return n_; }
    int dim() const { return 2 * n_; }
    const Mat& basis_rows() const { return basis_; }
    double basis_det() const { return det_; }

    /// Half of the smallest distance between opposite facets of the cell;
    /// two points closer than this have basis coordinates differing by < 1/2
    /// in every slot.
    double cell_inradius() const { return inradius_; }

    /// Upper bound sum(||lambda_i||) on the diameter of the cell.
    double cell_diameter_bound() const {
        double s = 0;
        for (int i = 0; i < basis_.rows(); ++i) s += basis_.row(i).norm();
        return s;
    }

    /// Ambient vector of an integer coefficient tuple.
    Vec ambient(const LatticeVector& v) const {
        Vec p = Vec::Zero(dim());
        for (int i = 0; i < dim(); ++i)
            if (v.coeffs[i] != 0) p += static_cast<double>(v.coeffs[i]) * basis_.row(i).transpose();
        return p;
    }

    /// Real coordinates t with p = sum t_i lambda_i.
    Vec lattice_coords(const Vec& p) const { return coords_map_ * p; }

    /// Splits p = q + lambda with q in the half-open fundamental cell.
    /// Coordinates within kFracSnapEps of the next integer snap down so that
    /// exact lattice vectors reduce to the origin.
    Reduction reduce_to_fundamental(const Vec& p) const {
        Vec t = lattice_coords(p);
        const int d = dim();
        LatticeVector lam(std::vector<Int>(d, 0));
        Vec f(d);
        for (int i = 0; i < d; ++i) {
            double fl = std::floor(t[i]);
            double frac = t[i] - fl;
            if (frac >= 1.0 - kFracSnapEps) {
                fl += 1.0;
                frac = 0.0;
            }
            lam.coeffs[i] = static_cast<Int>(fl);
            f[i] = frac;
        }
        return Reduction{basis_.transpose() * f, lam};
    }

    /// Visits every integer vector with height <= T, exactly once, in
    /// odometer order. Rejects (2T+1)^{2n} > kEnumerationGuard.
    void for_each_in_height_ball(Int T,
                                 const std::function<void(const LatticeVector&)>& fn) const {
        if (T < 0) throw std::invalid_argument("height ball: T must be >= 0");
        const int d = dim();
        double count = std::pow(2.0 * static_cast<double>(T) + 1.0, d);
        if (count > static_cast<double>(kEnumerationGuard))
            throw std::invalid_argument("height ball: enumeration exceeds resource guard");
        LatticeVector v(std::vector<Int>(d, -T));
        while (true) {
            fn(v);
            int i = 0;
            while (i < d && v.coeffs[i] == T) {
                v.coeffs[i] = -T;
                ++i;
            }
            if (i == d) break;
            ++v.coeffs[i];
        }
    }

    std::vector<LatticeVector> enumerate_height_ball(Int T) const {
        std::vector<LatticeVector> out;
        for_each_in_height_ball(T, [&](const LatticeVector& v) { out.push_back(v); });
        return out;
    }

  private:
    int n_;
    Mat basis_;
    Mat coords_map_;  // (basis^T)^{-1}
    double det_;
    double inradius_;
};

/// View type fixing the half-open cell convention of a lattice.
struct FundamentalCell {
    const Lattice& lattice;

    bool contains(const Vec& p) const {
        Vec t = lattice.lattice_coords(p);
        for (int i = 0; i < t.size(); ++i)
            if (t[i] < 0.0 || t[i] >= 1.0) return false;
        return true;
    }
    double diameter_bound() const { return lattice.cell_diameter_bound(); }
};

}  // namespace torusflow
