/*
 * Backward passes (vector-Jacobian products) for the operators in geometry.hpp.
 *
 * Each *_grad function takes the forward inputs plus a cotangent on the
 * forward output and returns cotangents on the inputs. Gradients of the
 * polygon operators are piecewise: the flags chosen by the forward pass select
 * the smooth piece, and nothing is re-clipped here.
 */
#ifndef DIFFGEO_GEOMETRY_GRAD_HPP
#define DIFFGEO_GEOMETRY_GRAD_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

#include "diffgeo/core.hpp"
#include "diffgeo/geometry.hpp"

namespace diffgeo {

// a = q.y - p.y, b = p.x - q.x, c = q.x*p.y - p.x*q.y
template <typename Scalar>
std::pair<Point2<Scalar>, Point2<Scalar>> line_from_points_grad(
    const Point2<Scalar>& p, const Point2<Scalar>& q, const Line2<Scalar>& grad_line)
{
    if (distance(p, q) <= Scalar(EPS_COINCIDENT))
        throw Error(Errc::DegenerateLine, "points coincide");

    const auto& [ga, gb, gc] = grad_line;
    Point2<Scalar> grad_p{gb - gc * q.y, -ga + gc * q.x};
    Point2<Scalar> grad_q{-gb + gc * p.y, ga - gc * p.x};
    return {grad_p, grad_q};
}

// With D = a1*b2 - a2*b1, x = (b1*c2 - b2*c1)/D and y = (a2*c1 - a1*c2)/D:
//   dx/da1 = -x*b2/D          dy/da1 = -(c2 + y*b2)/D
//   dx/db1 = (c2 + x*a2)/D    dy/db1 = y*a2/D
//   dx/dc1 = -b2/D            dy/dc1 = a2/D
//   dx/da2 = x*b1/D           dy/da2 = (c1 + y*b1)/D
//   dx/db2 = -(c1 + x*a1)/D   dy/db2 = -y*a1/D
//   dx/dc2 = b1/D             dy/dc2 = -a1/D
template <typename Scalar>
std::pair<Line2<Scalar>, Line2<Scalar>> line_intersect_grad(
    const Line2<Scalar>& l1, const Line2<Scalar>& l2, const Point2<Scalar>& grad_pt)
{
    Scalar det = detail::determinant(l1, l2);
    if (std::abs(det) <= Scalar(EPS_PARALLEL))
        throw Error(Errc::ParallelLines, "determinant below tolerance");

    const Point2<Scalar> x = detail::solve(l1, l2, det);
    const Scalar gx = grad_pt.x / det, gy = grad_pt.y / det;

    Line2<Scalar> g1{
        -gx * x.x * l2.b - gy * (l2.c + x.y * l2.b),
        gx * (l2.c + x.x * l2.a) + gy * x.y * l2.a,
        -gx * l2.b + gy * l2.a,
    };
    Line2<Scalar> g2{
        gx * x.x * l1.b + gy * (l1.c + x.y * l1.b),
        -gx * (l1.c + x.x * l1.a) - gy * x.y * l1.a,
        gx * l1.b - gy * l1.a,
    };
    return {g1, g2};
}

// dA/dx_k = (y_{k+1} - y_{k-1})/2, dA/dy_k = (x_{k-1} - x_{k+1})/2.
// The last vertex takes the negated ascending sum of the others, so the
// per-axis sums are exactly zero.
template <typename Scalar, std::uint8_t Capacity>
PolygonGrad<Scalar, Capacity> area_grad(const ConvexPolygon<Scalar, Capacity>& p, Scalar grad_area)
{
    auto g = zeros_like(p);
    const std::uint8_t n = p.nvertices;
    if (n < 3)
        return g;

    const Scalar half = grad_area / 2;
    Point2<Scalar> sum{};
    for (std::uint8_t k = 0; k + 1 < n; k++) {
        const auto& prev = p.vertices[mod_dec(k, n)];
        const auto& next = p.vertices[mod_inc(k, n)];
        g.vertices[k] = {(next.y - prev.y) * half, (prev.x - next.x) * half};
        sum += g.vertices[k];
    }
    g.vertices[n - 1] = {-sum.x, -sum.y};
    return g;
}

// Route cotangents on the intersection vertices back to the input polygons.
template <typename Scalar, std::uint8_t N1, std::uint8_t N2, std::uint8_t NOut>
std::pair<PolygonGrad<Scalar, N1>, PolygonGrad<Scalar, N2>> intersect_backward(
    const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2,
    std::span<const VertexFlag> flags, const PolygonGrad<Scalar, NOut>& grad_out)
{
    if (flags.size() != grad_out.nvertices)
        throw Error(Errc::InconsistentFlags,
            std::to_string(flags.size()) + " flags for " + std::to_string(grad_out.nvertices) + " gradients");

    auto grad1 = zeros_like(p1);
    auto grad2 = zeros_like(p2);
    const std::uint8_t n1 = p1.nvertices, n2 = p2.nvertices;

    auto check = [](std::uint8_t index, std::uint8_t n) {
        if (index >= n)
            throw Error(Errc::InconsistentFlags, "flag index " + std::to_string(index) + " out of range");
    };
    // push a cotangent on an edge's line back onto its two endpoints
    auto edge_backward = [](const auto& poly, auto& grad, std::uint8_t i, const Line2<Scalar>& gl) {
        std::uint8_t inext = mod_inc(i, poly.nvertices);
        auto [gp, gq] = line_from_points_grad(poly.vertices[i], poly.vertices[inext], gl);
        grad.vertices[i] += gp;
        grad.vertices[inext] += gq;
    };

    for (std::size_t k = 0; k < flags.size(); k++) {
        const VertexFlag& f = flags[k];
        const Point2<Scalar>& g = grad_out.vertices[k];
        switch (f.kind) {
        case FlagKind::FromP1:
            check(f.first, n1);
            grad1.vertices[f.first] += g;
            break;
        case FlagKind::FromP2:
            check(f.first, n2);
            grad2.vertices[f.first] += g;
            break;
        case FlagKind::CrossP1P2: {
            check(f.first, n1);
            check(f.second, n2);
            auto [gl1, gl2] = line_intersect_grad(detail::edge_line(p1, f.first), detail::edge_line(p2, f.second), g);
            edge_backward(p1, grad1, f.first, gl1);
            edge_backward(p2, grad2, f.second, gl2);
            break;
        }
        case FlagKind::CrossP2P2: {
            check(f.first, n2);
            check(f.second, n2);
            auto [gl1, gl2] = line_intersect_grad(detail::edge_line(p2, f.first), detail::edge_line(p2, f.second), g);
            edge_backward(p2, grad2, f.first, gl1);
            edge_backward(p2, grad2, f.second, gl2);
            break;
        }
        }
    }
    return {grad1, grad2};
}

// Gradient of area(intersect(p1, p2)) given the forward intermediates.
template <typename Scalar, std::uint8_t N1, std::uint8_t N2>
std::pair<PolygonGrad<Scalar, N1>, PolygonGrad<Scalar, N2>> intersection_area_grad(
    const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2,
    Scalar grad_area, std::uint8_t nx, std::span<const VertexFlag> xflags)
{
    if (xflags.size() < nx)
        throw Error(Errc::InconsistentFlags, "fewer flags than intersection vertices");
    if (nx == 0)
        return {zeros_like(p1), zeros_like(p2)};

    auto flags = xflags.first(nx);
    auto inter = intersection_from_flags(p1, p2, flags);
    return intersect_backward(p1, p2, flags, area_grad(inter, grad_area));
}

// Backward of iou(). Zero overlap yields zero gradients.
template <typename Scalar, std::uint8_t N1, std::uint8_t N2>
std::pair<PolygonGrad<Scalar, N1>, PolygonGrad<Scalar, N2>> iou_grad(
    const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2,
    Scalar grad, std::uint8_t nx, std::span<const VertexFlag> xflags)
{
    if (xflags.size() < nx)
        throw Error(Errc::InconsistentFlags, "fewer flags than intersection vertices");
    if (nx == 0)
        return {zeros_like(p1), zeros_like(p2)};

    auto flags = xflags.first(nx);
    auto inter = intersection_from_flags(p1, p2, flags);
    const Scalar area_i = area(inter);
    const Scalar area_u = area(p1) + area(p2) - area_i;
    const Scalar grad_i = grad * (area_u + area_i) / (area_u * area_u);
    const Scalar grad_each = -grad * area_i / (area_u * area_u);

    auto [grad1, grad2] = intersect_backward(p1, p2, flags, area_grad(inter, grad_i));
    auto direct1 = area_grad(p1, grad_each);
    auto direct2 = area_grad(p2, grad_each);
    for (std::uint8_t k = 0; k < p1.nvertices; k++) grad1.vertices[k] += direct1.vertices[k];
    for (std::uint8_t k = 0; k < p2.nvertices; k++) grad2.vertices[k] += direct2.vertices[k];
    return {grad1, grad2};
}

template <typename Scalar, std::uint8_t N1, std::uint8_t N2>
std::pair<PolygonGrad<Scalar, N1>, PolygonGrad<Scalar, N2>> iou_grad(
    const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2,
    Scalar grad, const IouResult<Scalar, N1 + N2>& forward)
{
    return iou_grad(p1, p2, grad, forward.nx, forward.flags());
}

} // namespace diffgeo

#endif // DIFFGEO_GEOMETRY_GRAD_HPP
