/*
 * Reference implementations used to check the kernels. None of them share code
 * with the clipping path in geometry.hpp:
 *
 *      finite_diff_check: central differences against an analytic gradient
 *      brute_force_intersection: all segment crossings plus mutually contained vertices
 *      raster_iou: scanline cell counting over the joint bounding box
 *      monte_carlo_iou_3d: seeded uniform sampling of the joint bounding volume
 */
#ifndef DIFFGEO_ORACLES_HPP
#define DIFFGEO_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "diffgeo/core.hpp"

#if defined(DIFFGEO_WITH_ORACLES) && !DIFFGEO_WITH_ORACLES
#error "diffgeo was configured with DIFFGEO_WITH_ORACLES=OFF"
#endif

namespace diffgeo::oracles {

////////////////////////// gradient checking //////////////////////////

struct GradCheckReport
{
    double max_relative_error = 0;
    std::size_t worst_parameter_index = 0;
    bool excluded = false; // discrete structure changed within +-h
};

// One evaluation of a piecewise-smooth function: its value and a key that
// identifies the smooth piece (e.g. from flag_structure).
struct Probe
{
    double value = 0;
    std::vector<std::int64_t> structure;
};

// nx followed by the sorted flag multiset
inline std::vector<std::int64_t> flag_structure(std::uint8_t nx, std::span<const VertexFlag> flags)
{
    std::vector<std::int64_t> key;
    key.reserve(flags.size() + 1);
    for (const auto& f : flags.first(std::min<std::size_t>(nx, flags.size())))
        key.push_back((std::int64_t(f.kind) << 16) | (std::int64_t(f.first) << 8) | f.second);
    std::sort(key.begin(), key.end());
    key.insert(key.begin(), nx);
    return key;
}

inline GradCheckReport finite_diff_check(const std::function<Probe(std::span<const double>)>& f,
    std::span<const double> x, double h, std::span<const double> analytic)
{
    if (!(h > 0))
        throw Error(Errc::EvaluationFailed, "step must be positive");
    if (analytic.size() != x.size())
        throw Error(Errc::LengthMismatch, "analytic gradient size differs from parameter count");

    auto eval = [&](std::span<const double> at) {
        try {
            return f(at);
        } catch (const std::exception& e) {
            throw Error(Errc::EvaluationFailed, e.what());
        }
    };

    GradCheckReport report;
    const Probe center = eval(x);
    std::vector<double> shifted(x.begin(), x.end());
    for (std::size_t k = 0; k < x.size(); k++) {
        shifted[k] = x[k] + h;
        const Probe plus = eval(shifted);
        shifted[k] = x[k] - h;
        const Probe minus = eval(shifted);
        shifted[k] = x[k];

        if (plus.structure != center.structure || minus.structure != center.structure)
            report.excluded = true;

        const double numeric = (plus.value - minus.value) / (2 * h);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-8});
        const double err = std::abs(analytic[k] - numeric) / denom;
        if (k == 0 || err > report.max_relative_error) {
            report.max_relative_error = err;
            report.worst_parameter_index = k;
        }
    }
    return report;
}

inline GradCheckReport finite_diff_check(const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h, std::span<const double> analytic)
{
    return finite_diff_check(
        [&](std::span<const double> at) { return Probe{f(at), {}}; }, x, h, analytic);
}

////////////////////////// intersection //////////////////////////

namespace detail {

// signed distance of t from the directed line a->b, positive on the left
template <typename Scalar>
Scalar left_distance(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& t)
{
    return ((b.x - a.x) * (t.y - a.y) - (b.y - a.y) * (t.x - a.x)) / std::hypot(b.x - a.x, b.y - a.y);
}

template <typename Scalar, std::uint8_t N>
bool contains(const ConvexPolygon<Scalar, N>& p, const Point2<Scalar>& t, Scalar tol)
{
    for (std::uint8_t k = 0; k < p.nvertices; k++)
        if (left_distance(p.vertices[k], p.vertices[(k + 1) % p.nvertices], t) < -tol)
            return false;
    return true;
}

} // namespace detail

template <typename Scalar, std::uint8_t N1, std::uint8_t N2>
ConvexPolygon<Scalar, N1 + N2> brute_force_intersection(
    const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2)
{
    constexpr Scalar tol = 1e-9;
    std::vector<Point2<Scalar>> pts;

    for (std::uint8_t i = 0; i < p1.nvertices; i++) {
        const auto& a = p1.vertices[i];
        const auto r = p1.vertices[(i + 1) % p1.nvertices] - a;
        for (std::uint8_t j = 0; j < p2.nvertices; j++) {
            const auto& c = p2.vertices[j];
            const auto s = p2.vertices[(j + 1) % p2.nvertices] - c;
            const Scalar denom = r.x * s.y - r.y * s.x;
            if (std::abs(denom) < std::numeric_limits<Scalar>::epsilon() * (r.x * r.x + r.y * r.y + s.x * s.x + s.y * s.y))
                continue; // parallel; overlapping endpoints are picked up as contained vertices
            const auto ca = c - a;
            const Scalar t = (ca.x * s.y - ca.y * s.x) / denom;
            const Scalar u = (ca.x * r.y - ca.y * r.x) / denom;
            if (t >= -1e-12 && t <= 1 + 1e-12 && u >= -1e-12 && u <= 1 + 1e-12)
                pts.push_back({a.x + t * r.x, a.y + t * r.y});
        }
    }
    for (const auto& v : p1.points())
        if (detail::contains(p2, v, tol)) pts.push_back(v);
    for (const auto& v : p2.points())
        if (detail::contains(p1, v, tol)) pts.push_back(v);

    std::vector<Point2<Scalar>> unique;
    for (const auto& p : pts)
        if (std::none_of(unique.begin(), unique.end(), [&](const auto& q) { return distance(p, q) <= tol; }))
            unique.push_back(p);

    ConvexPolygon<Scalar, N1 + N2> result;
    if (unique.size() < 3)
        return result;

    Point2<Scalar> centroid{};
    for (const auto& p : unique) centroid += p;
    centroid = Scalar(1) / Scalar(unique.size()) * centroid;
    std::sort(unique.begin(), unique.end(), [&](const auto& p, const auto& q) {
        return std::atan2(p.y - centroid.y, p.x - centroid.x) < std::atan2(q.y - centroid.y, q.x - centroid.x);
    });

    if (unique.size() > N1 + N2)
        throw Error(Errc::CapacityExceeded, "oracle produced too many vertices");
    Scalar twice_area = 0;
    for (std::size_t k = 0; k < unique.size(); k++) {
        const auto& a = unique[k];
        const auto& b = unique[(k + 1) % unique.size()];
        twice_area += a.x * b.y - b.x * a.y;
    }
    if (twice_area / 2 <= Scalar(EPS_AREA))
        return result;

    for (const auto& p : unique)
        result.vertices[result.nvertices++] = p;
    return result;
}

////////////////////////// rasterized IoU //////////////////////////

namespace detail {

struct Span1
{
    double lo = 1, hi = 0; // empty when lo > hi
};

// horizontal slice of a convex polygon at height y
template <typename Scalar, std::uint8_t N>
Span1 slice(const ConvexPolygon<Scalar, N>& p, double y)
{
    Span1 s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::uint8_t k = 0; k < p.nvertices; k++) {
        const auto& a = p.vertices[k];
        const auto& b = p.vertices[(k + 1) % p.nvertices];
        if (y < std::min<double>(a.y, b.y) || y > std::max<double>(a.y, b.y))
            continue;
        if (a.y == b.y) {
            s.lo = std::min<double>({s.lo, a.x, b.x});
            s.hi = std::max<double>({s.hi, a.x, b.x});
        } else {
            double x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
            s.lo = std::min(s.lo, x);
            s.hi = std::max(s.hi, x);
        }
    }
    return s;
}

// number of cell centers x0 + (i + 1/2) * cell, 0 <= i < n, inside s
inline long count_centers(const Span1& s, double x0, double cell, long n)
{
    if (s.lo > s.hi) return 0;
    long first = std::max(0L, long(std::ceil((s.lo - x0) / cell - 0.5)));
    long last = std::min(n - 1, long(std::floor((s.hi - x0) / cell - 0.5)));
    return last >= first ? last - first + 1 : 0;
}

} // namespace detail

template <typename Scalar, std::uint8_t N1, std::uint8_t N2>
double raster_iou(const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2, int resolution)
{
    if (resolution < 16)
        throw Error(Errc::EvaluationFailed, "resolution must be at least 16");
    if (p1.nvertices == 0 && p2.nvertices == 0)
        throw Error(Errc::EvaluationFailed, "both polygons empty");

    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
    double xmax = -xmin, ymax = -xmin;
    auto extend = [&](const auto& p) {
        for (const auto& v : p.points()) {
            xmin = std::min<double>(xmin, v.x); xmax = std::max<double>(xmax, v.x);
            ymin = std::min<double>(ymin, v.y); ymax = std::max<double>(ymax, v.y);
        }
    };
    extend(p1);
    extend(p2);

    const double cw = (xmax - xmin) / resolution, ch = (ymax - ymin) / resolution;
    long both = 0, either = 0;
    for (int r = 0; r < resolution; r++) {
        const double y = ymin + (r + 0.5) * ch;
        const auto s1 = detail::slice(p1, y), s2 = detail::slice(p2, y);
        const long n1 = detail::count_centers(s1, xmin, cw, resolution);
        const long n2 = detail::count_centers(s2, xmin, cw, resolution);
        const long n12 = detail::count_centers({std::max(s1.lo, s2.lo), std::min(s1.hi, s2.hi)}, xmin, cw, resolution);
        both += n12;
        either += n1 + n2 - n12;
    }
    return either == 0 ? 0.0 : double(both) / double(either);
}

////////////////////////// Monte-Carlo 3D IoU //////////////////////////

namespace detail {

template <typename Scalar>
bool contains(const Box3<Scalar>& b, double x, double y, double z)
{
    const double c = std::cos(b.theta), s = std::sin(b.theta);
    const double dx = x - b.cx, dy = y - b.cy;
    const double lx = c * dx + s * dy, ly = -s * dx + c * dy;
    return std::abs(lx) <= b.w / 2 && std::abs(ly) <= b.h / 2 && std::abs(z - b.cz) <= b.d / 2;
}

} // namespace detail

template <typename Scalar>
double monte_carlo_iou_3d(const Box3<Scalar>& b1, const Box3<Scalar>& b2, std::size_t n_samples, std::uint64_t seed)
{
    if (n_samples < 10000)
        throw Error(Errc::EvaluationFailed, "at least 10^4 samples required");

    double lo[3], hi[3];
    for (int a = 0; a < 3; a++) {
        lo[a] = std::numeric_limits<double>::infinity();
        hi[a] = -lo[a];
    }
    for (const auto* b : {&b1, &b2}) {
        // axis-aligned half extents of the rotated footprint
        const double c = std::abs(std::cos(b->theta)), s = std::abs(std::sin(b->theta));
        const double ex = c * b->w / 2 + s * b->h / 2, ey = s * b->w / 2 + c * b->h / 2;
        lo[0] = std::min(lo[0], b->cx - ex); hi[0] = std::max(hi[0], b->cx + ex);
        lo[1] = std::min(lo[1], b->cy - ey); hi[1] = std::max(hi[1], b->cy + ey);
        lo[2] = std::min<double>(lo[2], b->cz - b->d / 2); hi[2] = std::max<double>(hi[2], b->cz + b->d / 2);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(lo[0], hi[0]), uy(lo[1], hi[1]), uz(lo[2], hi[2]);
    std::size_t both = 0, either = 0;
    for (std::size_t i = 0; i < n_samples; i++) {
        const double x = ux(rng), y = uy(rng), z = uz(rng);
        const bool in1 = detail::contains(b1, x, y, z), in2 = detail::contains(b2, x, y, z);
        both += in1 && in2;
        either += in1 || in2;
    }
    return either == 0 ? 0.0 : double(both) / double(either);
}

} // namespace diffgeo::oracles

#endif // DIFFGEO_ORACLES_HPP
