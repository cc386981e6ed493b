// Halton low-discrepancy sequence with a seeded toroidal shift per
// coordinate. Points are addressable by index, so any partition of an index
// range yields the same multiset of points; parallel samplers rely on this.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "torusflow/torus.hpp"

namespace torusflow {

class HaltonSequence {
  public:
    HaltonSequence(int dim, std::uint64_t seed) : dim_(dim), shift_(dim) {
        static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                         23, 29, 31, 37, 41, 43, 47, 53};
        if (dim <= 0 || dim > static_cast<int>(std::size(primes)))
            throw std::invalid_argument("HaltonSequence: unsupported dimension");
        bases_.assign(primes, primes + dim);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int i = 0; i < dim; ++i) shift_[i] = uni(rng);
    }

    int dim() const { return dim_; }

    /// Point #index of the shifted sequence, in [0,1)^dim.
    Eigen::VectorXd point(std::uint64_t index) const {
        Eigen::VectorXd p(dim_);
        for (int i = 0; i < dim_; ++i)
            p[i] = frac_exact(radical_inverse(index + 1, bases_[i]) + shift_[i]);
        return p;
    }

  private:
    static double radical_inverse(std::uint64_t k, int base) {
        double inv_base = 1.0 / base, f = inv_base, r = 0.0;
        while (k > 0) {
            r += f * static_cast<double>(k % base);
            k /= base;
            f *= inv_base;
        }
        return r;
    }

    int dim_;
    std::vector<int> bases_;
    std::vector<double> shift_;
};

}  // namespace torusflow
