#include "dsi/latent.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace dsi {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return shape.empty() ? 0 : n;
}

std::string shape_to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

LatentArray::LatentArray(Shape s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {}

LatentArray LatentArray::zeros(const Shape& shape) {
    return LatentArray(shape, std::vector<double>(shape_size(shape), 0.0));
}

bool LatentArray::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

LatentArray make_latent(Shape shape, std::vector<double> values) {
    if (shape.empty() || shape.size() > 2) {
        throw std::invalid_argument("latent shape must have rank 1 or 2");
    }
    for (std::size_t e : shape) {
        if (e == 0) throw std::invalid_argument("latent shape extents must be positive");
    }
    if (shape_size(shape) != values.size()) {
        throw std::invalid_argument("latent value count does not match shape " +
                                    shape_to_string(shape));
    }
    LatentArray z(std::move(shape), std::move(values));
    if (!z.all_finite()) {
        throw std::invalid_argument("latent contains non-finite entries");
    }
    return z;
}

bool same_shape(const LatentArray& a, const LatentArray& b) {
    return a.shape == b.shape;
}

void require_same_shape(const LatentArray& a, const LatentArray& b, const char* what) {
    if (!same_shape(a, b)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                    shape_to_string(a.shape) + " vs " +
                                    shape_to_string(b.shape));
    }
}

}  // namespace dsi
