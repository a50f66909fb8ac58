#include "fbmlab/grid_path.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fbmlab {

GridPath::GridPath(double horizon, std::size_t steps, std::size_t dim)
    : T_(horizon), M_(steps), d_(dim), v_((steps + 1) * dim, 0.0) {
    if (horizon <= 0.0) throw std::invalid_argument("GridPath: horizon must be positive");
    if (steps == 0) throw std::invalid_argument("degenerate grid");
    if (dim == 0) throw std::invalid_argument("GridPath: dimension must be positive");
}

GridPath::GridPath(double horizon, std::size_t steps, std::size_t dim,
                   std::vector<double> values)
    : GridPath(horizon, steps, dim) {
    if (values.size() != (steps + 1) * dim)
        throw std::invalid_argument("GridPath: value array has wrong size");
    v_ = std::move(values);
}

double GridPath::row_norm(std::size_t i) const {
    double s = 0.0;
    for (std::size_t c = 0; c < d_; ++c) s += at(i, c) * at(i, c);
    return std::sqrt(s);
}

double GridPath::sup_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i <= M_; ++i) m = std::max(m, row_norm(i));
    return m;
}

bool GridPath::all_finite() const {
    for (double x : v_)
        if (!std::isfinite(x)) return false;
    return true;
}

GridPath GridPath::subsample(std::size_t factor) const {
    if (factor == 0 || M_ % factor != 0)
        throw std::invalid_argument("GridPath: subsample factor must divide M");
    GridPath out(T_, M_ / factor, d_);
    for (std::size_t i = 0; i <= M_ / factor; ++i)
        for (std::size_t c = 0; c < d_; ++c) out.at(i, c) = at(i * factor, c);
    return out;
}

void GridPath::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "t");
    for (std::size_t c = 0; c < d_; ++c) std::fprintf(f, ",comp_%zu", c);
    std::fprintf(f, "\n");
    for (std::size_t i = 0; i <= M_; ++i) {
        std::fprintf(f, "%.17g", time(i));
        for (std::size_t c = 0; c < d_; ++c) std::fprintf(f, ",%.17g", at(i, c));
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

GridPath path_difference(const GridPath& a, const GridPath& b) {
    if (!a.same_grid(b)) throw std::invalid_argument("grid mismatch");
    GridPath out(a.horizon(), a.steps(), a.dim());
    for (std::size_t i = 0; i <= a.steps(); ++i)
        for (std::size_t c = 0; c < a.dim(); ++c)
            out.at(i, c) = a.at(i, c) - b.at(i, c);
    return out;
}

}  // namespace fbmlab
