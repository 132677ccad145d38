#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dsi {

// Extents of a latent array, rank 1 or 2.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// A finite real-valued array (vector or small 2-D grid) holding one latent
// z_t. Values are stored row-major.
struct LatentArray {
    Shape shape;
    std::vector<double> values;

    LatentArray() = default;
    LatentArray(Shape s, std::vector<double> v);

    static LatentArray zeros(const Shape& shape);

    std::size_t size() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }

    double* data() { return values.data(); }
    const double* data() const { return values.data(); }

    std::span<double> view() { return values; }
    std::span<const double> view() const { return values; }

    bool all_finite() const;

    bool operator==(const LatentArray&) const = default;
};

// Validating constructor: rank must be 1 or 2, extents positive, the value
// count must match the shape product, and every entry must be finite.
LatentArray make_latent(Shape shape, std::vector<double> values);

bool same_shape(const LatentArray& a, const LatentArray& b);

// Throws std::invalid_argument naming `what` on mismatch.
void require_same_shape(const LatentArray& a, const LatentArray& b, const char* what);

}  // namespace dsi
