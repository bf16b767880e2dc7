#pragma once

#include <absplace/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace absplace {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](std::size_t i) const noexcept { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](std::size_t i) noexcept { return i == 0 ? x : (i == 1 ? y : z); }

    friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double norm(Vec3 v) noexcept { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
inline double distance(Vec3 a, Vec3 b) noexcept { return norm(b - a); }

using Index3 = std::array<std::size_t, 3>;
using Dims3 = std::array<std::size_t, 3>;

/// Axis-aligned box [min_corner, max_corner].
struct Region {
    Vec3 min_corner;
    Vec3 max_corner;

    void validate() const
    {
        for (std::size_t i = 0; i < 3; ++i)
            if (!(min_corner[i] < max_corner[i]))
                throw DomainError("region: min_corner must be < max_corner on every axis");
    }

    Vec3 extent() const noexcept { return max_corner - min_corner; }
};

/// Regular 3D grid; point i sits at origin + i (.) spacing.
struct Grid3 {
    Vec3 origin;
    Vec3 spacing{1.0, 1.0, 1.0};
    Dims3 dims{1, 1, 1};

    std::size_t size() const noexcept { return dims[0] * dims[1] * dims[2]; }

    /// Linear index, x fastest.
    std::size_t linear(const Index3& i) const noexcept { return i[0] + dims[0] * (i[1] + dims[1] * i[2]); }

    Index3 unravel(std::size_t k) const noexcept
    {
        return {k % dims[0], (k / dims[0]) % dims[1], k / (dims[0] * dims[1])};
    }

    void validate() const
    {
        for (std::size_t i = 0; i < 3; ++i) {
            if (dims[i] == 0)
                throw DomainError("grid: dims must be positive");
            if (!(spacing[i] > 0.0))
                throw DomainError("grid: spacing must be positive");
        }
    }
};

inline Vec3 grid_point(const Grid3& grid, const Index3& index)
{
    for (std::size_t i = 0; i < 3; ++i)
        if (index[i] >= grid.dims[i])
            throw RangeError("grid_point: index " + std::to_string(index[i]) + " out of range on axis " +
                             std::to_string(i));
    return {grid.origin.x + static_cast<double>(index[0]) * grid.spacing.x,
            grid.origin.y + static_cast<double>(index[1]) * grid.spacing.y,
            grid.origin.z + static_cast<double>(index[2]) * grid.spacing.z};
}

/// Grid whose voxels tile `region` exactly; points are voxel centers.
inline Grid3 voxel_grid(const Region& region, const Dims3& dims)
{
    region.validate();
    Grid3 g;
    g.dims = dims;
    Vec3 ext = region.extent();
    for (std::size_t i = 0; i < 3; ++i) {
        if (dims[i] == 0)
            throw DomainError("voxel_grid: dims must be positive");
        g.spacing[i] = ext[i] / static_cast<double>(dims[i]);
        g.origin[i] = region.min_corner[i] + 0.5 * g.spacing[i];
    }
    return g;
}

/// Box building standing on z = 0.
struct Building {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
    double height = 0.0;
    double absorption = 0.0; // dB/m

    void validate() const
    {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw DomainError("building: empty footprint");
        if (!(height > 0.0))
            throw DomainError("building: height must be positive");
        if (!(absorption >= 0.0))
            throw DomainError("building: absorption must be non-negative");
    }

    bool contains_strict(Vec3 p) const noexcept
    {
        return p.x > x_min && p.x < x_max && p.y > y_min && p.y < y_max && p.z > 0.0 && p.z < height;
    }

    bool contains_closed(Vec3 p) const noexcept
    {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max && p.z >= 0.0 && p.z <= height;
    }

    bool footprint_contains(double x, double y) const noexcept
    {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }

    friend bool operator==(const Building&, const Building&) = default;
};

namespace detail {

inline double axis_coordinate(double lo, double hi, std::size_t n, std::size_t i) noexcept
{
    if (n == 1)
        return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

} // namespace detail

/// Uniform grid over `region` including its faces, minus points below
/// `min_height` or strictly inside a building. Ordered x fastest, then y, then z.
inline std::vector<Vec3> build_flight_grid(const Region& region, const Dims3& dims, double min_height,
                                           std::span<const Building> buildings)
{
    region.validate();
    for (auto d : dims)
        if (d == 0)
            throw DomainError("build_flight_grid: dims must be positive");
    if (min_height < region.min_corner.z || min_height > region.max_corner.z)
        throw DomainError("build_flight_grid: min_height outside the region z-extent");

    std::vector<Vec3> points;
    for (std::size_t k = 0; k < dims[2]; ++k) {
        double z = detail::axis_coordinate(region.min_corner.z, region.max_corner.z, dims[2], k);
        if (z < min_height)
            continue;
        for (std::size_t j = 0; j < dims[1]; ++j) {
            double y = detail::axis_coordinate(region.min_corner.y, region.max_corner.y, dims[1], j);
            for (std::size_t i = 0; i < dims[0]; ++i) {
                Vec3 p{detail::axis_coordinate(region.min_corner.x, region.max_corner.x, dims[0], i), y, z};
                bool blocked = std::any_of(buildings.begin(), buildings.end(),
                                           [&](const Building& b) { return b.contains_strict(p); });
                if (!blocked)
                    points.push_back(p);
            }
        }
    }
    if (points.empty())
        throw EmptyFlightGridError();
    return points;
}

/// Piecewise-constant attenuation (dB/m) over a voxel grid.
class SpatialLossField {
public:
    SpatialLossField() = default;

    explicit SpatialLossField(Grid3 grid, double fill = 0.0)
        : grid_(grid), values_(grid.size(), fill)
    {
        grid_.validate();
        if (fill < 0.0)
            throw DomainError("spatial loss field must be non-negative");
    }

    SpatialLossField(Grid3 grid, std::vector<double> values) : grid_(grid), values_(std::move(values))
    {
        grid_.validate();
        if (values_.size() != grid_.size())
            throw DomainError("spatial loss field: value count does not match grid dims");
        for (double v : values_)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw DomainError("spatial loss field must be finite and non-negative");
    }

    const Grid3& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }

    double at(const Index3& i) const noexcept { return values_[grid_.linear(i)]; }

    void set(const Index3& i, double v)
    {
        if (!(v >= 0.0))
            throw DomainError("spatial loss field must be non-negative");
        values_[grid_.linear(i)] = v;
    }

    /// Value at a possibly out-of-range signed index; border voxels extend outward.
    double clamped(long i, long j, long k) const noexcept
    {
        auto clampi = [](long v, std::size_t n) {
            return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(n) - 1));
        };
        return at({clampi(i, grid_.dims[0]), clampi(j, grid_.dims[1]), clampi(k, grid_.dims[2])});
    }

private:
    Grid3 grid_;
    std::vector<double> values_;
};

/// Voxels whose center lies inside a building take its absorption; overlaps keep the maximum.
inline SpatialLossField voxelize_slf(std::span<const Building> buildings, const Grid3& grid)
{
    SpatialLossField slf(grid);
    for (std::size_t k = 0; k < grid.dims[2]; ++k)
        for (std::size_t j = 0; j < grid.dims[1]; ++j)
            for (std::size_t i = 0; i < grid.dims[0]; ++i) {
                Index3 idx{i, j, k};
                Vec3 c = grid_point(grid, idx);
                double v = 0.0;
                for (const auto& b : buildings)
                    if (b.contains_closed(c))
                        v = std::max(v, b.absorption);
                if (v > 0.0)
                    slf.set(idx, v);
            }
    return slf;
}

} // namespace absplace
