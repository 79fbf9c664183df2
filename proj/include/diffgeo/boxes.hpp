/*
 * Rotated box IoU with analytic gradients.
 *
 * A RotatedBox2 (cx, cy, w, h, theta) maps to the quadrilateral with corners
 * center + R(theta) * (+-w/2, +-h/2), listed counter-clockwise from the
 * (-w/2, -h/2) corner. Box3 adds a vertical center and extent; rotation is
 * yaw only, so the 3D overlap is footprint area times vertical overlap.
 */
#ifndef DIFFGEO_BOXES_HPP
#define DIFFGEO_BOXES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "diffgeo/core.hpp"
#include "diffgeo/geometry.hpp"
#include "diffgeo/geometry_grad.hpp"

namespace diffgeo {

namespace detail {

// corner signs in output order
inline constexpr std::array<std::array<int, 2>, 4> box_corner_signs{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};

template <typename Scalar>
RotatedBox2<Scalar> footprint(const Box3<Scalar>& b)
{
    return {b.cx, b.cy, b.w, b.h, b.theta};
}

// IoU is translation invariant, so pairs are evaluated in a frame centered on
// the first box. Corners then carry rounding relative to the box size rather
// than to the distance from the origin. Nothing in the backward pass depends
// on the centers, so gradients need no correction.
template <typename Box>
std::pair<Box, Box> local_frame(Box b1, Box b2)
{
    b2.cx -= b1.cx;
    b2.cy -= b1.cy;
    b1.cx = b1.cy = 0;
    if constexpr (requires { b1.cz; }) {
        b2.cz -= b1.cz;
        b1.cz = 0;
    }
    return {b1, b2};
}

} // namespace detail

template <typename Scalar>
ConvexPolygon<Scalar, 4> box_to_polygon(const RotatedBox2<Scalar>& b)
{
    const Scalar c = std::cos(b.theta), s = std::sin(b.theta);
    ConvexPolygon<Scalar, 4> p;
    for (const auto& [sx, sy] : detail::box_corner_signs) {
        const Scalar lx = sx * b.w / 2, ly = sy * b.h / 2;
        p.vertices[p.nvertices++] = {b.cx + c * lx - s * ly, b.cy + s * lx + c * ly};
    }
    return p;
}

// Gradient with respect to (cx, cy, w, h, theta), returned in a box-shaped value.
template <typename Scalar>
RotatedBox2<Scalar> box_to_polygon_grad(const RotatedBox2<Scalar>& b, const PolygonGrad<Scalar, 4>& grad_poly)
{
    const Scalar c = std::cos(b.theta), s = std::sin(b.theta);
    RotatedBox2<Scalar> g{0, 0, 0, 0, 0};
    for (std::uint8_t k = 0; k < grad_poly.nvertices; k++) {
        const auto [sx, sy] = detail::box_corner_signs[k];
        const Scalar lx = sx * b.w / 2, ly = sy * b.h / 2;
        const auto& gv = grad_poly.vertices[k];

        g.cx += gv.x;
        g.cy += gv.y;
        g.w += Scalar(sx) / 2 * (c * gv.x + s * gv.y);
        g.h += Scalar(sy) / 2 * (-s * gv.x + c * gv.y);
        g.theta += (-s * lx - c * ly) * gv.x + (c * lx - s * ly) * gv.y;
    }
    return g;
}

template <typename Scalar>
using BoxIouResult = IouResult<Scalar, 8>;

template <typename Scalar>
BoxIouResult<Scalar> box_iou_2d(const RotatedBox2<Scalar>& b1, const RotatedBox2<Scalar>& b2)
{
    const auto [l1, l2] = detail::local_frame(b1, b2);
    return iou(box_to_polygon(l1), box_to_polygon(l2));
}

template <typename Scalar>
std::pair<RotatedBox2<Scalar>, RotatedBox2<Scalar>> box_iou_2d_grad(
    const RotatedBox2<Scalar>& b1, const RotatedBox2<Scalar>& b2,
    Scalar grad, std::uint8_t nx, std::span<const VertexFlag> xflags)
{
    const auto [l1, l2] = detail::local_frame(b1, b2);
    const auto p1 = box_to_polygon(l1), p2 = box_to_polygon(l2);
    auto [g1, g2] = iou_grad(p1, p2, grad, nx, xflags);
    return {box_to_polygon_grad(l1, g1), box_to_polygon_grad(l2, g2)};
}

template <typename Scalar>
std::pair<RotatedBox2<Scalar>, RotatedBox2<Scalar>> box_iou_2d_grad(
    const RotatedBox2<Scalar>& b1, const RotatedBox2<Scalar>& b2,
    Scalar grad, const BoxIouResult<Scalar>& forward)
{
    return box_iou_2d_grad(b1, b2, grad, forward.nx, forward.flags());
}

////////////////////////// 3D //////////////////////////

namespace detail {

// Vertical overlap max(0, min(top1, top2) - max(bottom1, bottom2)) and its
// subgradient. Ties go to the first box.
template <typename Scalar> struct VerticalOverlap
{
    Scalar dz = 0;
    bool top_from_first = true;
    bool bottom_from_first = true;
};

template <typename Scalar>
VerticalOverlap<Scalar> vertical_overlap(const Box3<Scalar>& b1, const Box3<Scalar>& b2)
{
    const Scalar top1 = b1.cz + b1.d / 2, top2 = b2.cz + b2.d / 2;
    const Scalar bottom1 = b1.cz - b1.d / 2, bottom2 = b2.cz - b2.d / 2;
    VerticalOverlap<Scalar> v;
    v.top_from_first = top1 <= top2;
    v.bottom_from_first = bottom1 >= bottom2;
    v.dz = std::max(Scalar(0), (v.top_from_first ? top1 : top2) - (v.bottom_from_first ? bottom1 : bottom2));
    return v;
}

} // namespace detail

template <typename Scalar>
BoxIouResult<Scalar> box_iou_3d(const Box3<Scalar>& box1, const Box3<Scalar>& box2)
{
    const auto [b1, b2] = detail::local_frame(box1, box2);
    const auto p1 = box_to_polygon(detail::footprint(b1));
    const auto p2 = box_to_polygon(detail::footprint(b2));
    auto inter = intersect(p1, p2);

    BoxIouResult<Scalar> result;
    result.nx = inter.polygon.nvertices;
    result.xflags = inter.flags;

    const Scalar dz = detail::vertical_overlap(b1, b2).dz;
    if (result.nx == 0 || dz <= 0)
        return result;

    const Scalar vol_i = area(inter.polygon) * dz;
    const Scalar vol_u = area(p1) * b1.d + area(p2) * b2.d - vol_i;
    result.value = vol_i / vol_u;
    return result;
}

template <typename Scalar>
std::pair<Box3<Scalar>, Box3<Scalar>> box_iou_3d_grad(
    const Box3<Scalar>& box1, const Box3<Scalar>& box2,
    Scalar grad, std::uint8_t nx, std::span<const VertexFlag> xflags)
{
    const auto [b1, b2] = detail::local_frame(box1, box2);
    if (xflags.size() < nx)
        throw Error(Errc::InconsistentFlags, "fewer flags than intersection vertices");

    Box3<Scalar> g1{0, 0, 0, 0, 0, 0, 0}, g2{0, 0, 0, 0, 0, 0, 0};
    const auto v = detail::vertical_overlap(b1, b2);
    if (nx == 0 || v.dz <= 0)
        return {g1, g2};

    const auto f1 = detail::footprint(b1), f2 = detail::footprint(b2);
    const auto p1 = box_to_polygon(f1), p2 = box_to_polygon(f2);
    const auto flags = xflags.first(nx);
    const Scalar area_i = area(intersection_from_flags(p1, p2, flags));
    const Scalar area1 = area(p1), area2 = area(p2);
    const Scalar vol_i = area_i * v.dz;
    const Scalar vol_u = area1 * b1.d + area2 * b2.d - vol_i;

    const Scalar grad_vi = grad * (vol_u + vol_i) / (vol_u * vol_u);
    const Scalar grad_v = -grad * vol_i / (vol_u * vol_u);

    // intersection volume through the footprint overlap
    auto [gp1, gp2] = intersection_area_grad(p1, p2, grad_vi * v.dz, nx, flags);
    // box volumes through their own footprint areas
    auto d1 = area_grad(p1, grad_v * b1.d), d2 = area_grad(p2, grad_v * b2.d);
    for (std::uint8_t k = 0; k < 4; k++) {
        gp1.vertices[k] += d1.vertices[k];
        gp2.vertices[k] += d2.vertices[k];
    }
    const auto gf1 = box_to_polygon_grad(f1, gp1), gf2 = box_to_polygon_grad(f2, gp2);
    g1 = {gf1.cx, gf1.cy, 0, gf1.w, gf1.h, grad_v * area1, gf1.theta};
    g2 = {gf2.cx, gf2.cy, 0, gf2.w, gf2.h, grad_v * area2, gf2.theta};

    // intersection volume through the vertical overlap
    const Scalar grad_dz = grad_vi * area_i;
    Box3<Scalar>& top = v.top_from_first ? g1 : g2;
    top.cz += grad_dz;
    top.d += grad_dz / 2;
    Box3<Scalar>& bottom = v.bottom_from_first ? g1 : g2;
    bottom.cz -= grad_dz;
    bottom.d += grad_dz / 2;
    return {g1, g2};
}

template <typename Scalar>
std::pair<Box3<Scalar>, Box3<Scalar>> box_iou_3d_grad(
    const Box3<Scalar>& b1, const Box3<Scalar>& b2, Scalar grad, const BoxIouResult<Scalar>& forward)
{
    return box_iou_3d_grad(b1, b2, grad, forward.nx, forward.flags());
}

} // namespace diffgeo

#endif // DIFFGEO_BOXES_HPP
