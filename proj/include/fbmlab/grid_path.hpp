#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fbmlab {

// Values of a (possibly multi-dimensional) path on the uniform grid
// t_i = i*T/M, i = 0..M.  Storage is row-major (M+1) x d.  Treated as
// immutable once filled; all operations on it are pure.
class GridPath {
public:
    GridPath() = default;
    GridPath(double horizon, std::size_t steps, std::size_t dim);
    GridPath(double horizon, std::size_t steps, std::size_t dim,
             std::vector<double> values);

    double horizon() const { return T_; }
    std::size_t steps() const { return M_; }
    std::size_t dim() const { return d_; }
    std::size_t nodes() const { return M_ + 1; }
    double step() const { return T_ / static_cast<double>(M_); }
    double time(std::size_t i) const {
        return T_ * (static_cast<double>(i) / static_cast<double>(M_));
    }

    double& at(std::size_t i, std::size_t c) { return v_[i * d_ + c]; }
    double at(std::size_t i, std::size_t c) const { return v_[i * d_ + c]; }
    std::span<const double> row(std::size_t i) const {
        return {v_.data() + i * d_, d_};
    }
    std::span<double> row(std::size_t i) { return {v_.data() + i * d_, d_}; }
    const std::vector<double>& values() const { return v_; }

    bool same_grid(const GridPath& o) const {
        return M_ == o.M_ && d_ == o.d_ && T_ == o.T_;
    }
    // Euclidean norm of the row i.
    double row_norm(std::size_t i) const;
    // max_i |row_i| (used by blow-up guards and sup-norm tests)
    double sup_norm() const;
    bool all_finite() const;

    // Keeps every 2^k-th node; M must be divisible by factor.
    GridPath subsample(std::size_t factor) const;

    // CSV with header `t,comp_0,...,comp_{d-1}`, full double precision.
    void write_csv(const std::string& path) const;

private:
    double T_ = 0.0;
    std::size_t M_ = 0;
    std::size_t d_ = 0;
    std::vector<double> v_;
};

// a - b on a shared grid
GridPath path_difference(const GridPath& a, const GridPath& b);

}  // namespace fbmlab
