/*
 * Forward geometry operators on points, lines and convex polygons.
 *
 *      line_from_points: implicit line through two points
 *      line_eval: signed incidence a*x + b*y + c, negative on the interior side of a CCW edge
 *      line_intersect: crossing point of two lines
 *      area: shoelace area
 *      point_in_polygon: boundary-inclusive containment
 *      intersect: convex clipping that records the provenance of every output vertex
 *
 * The matching backward passes live in geometry_grad.hpp.
 */
#ifndef DIFFGEO_GEOMETRY_HPP
#define DIFFGEO_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "diffgeo/core.hpp"

namespace diffgeo {

namespace detail {

// unchecked version used on validated polygon edges
template <typename Scalar> constexpr
Line2<Scalar> line_through(const Point2<Scalar>& p, const Point2<Scalar>& q)
{
    return {q.y - p.y, p.x - q.x, q.x * p.y - p.x * q.y};
}

template <typename Scalar> constexpr
Scalar determinant(const Line2<Scalar>& l1, const Line2<Scalar>& l2)
{
    return l1.a * l2.b - l2.a * l1.b;
}

template <typename Scalar> constexpr
Point2<Scalar> solve(const Line2<Scalar>& l1, const Line2<Scalar>& l2, Scalar det)
{
    return {(l1.b * l2.c - l2.b * l1.c) / det, (l2.a * l1.c - l1.a * l2.c) / det};
}

template <typename Scalar, std::uint8_t Capacity>
Line2<Scalar> edge_line(const ConvexPolygon<Scalar, Capacity>& p, std::uint8_t i)
{
    return line_through(p.vertices[i], p.vertices[mod_inc(i, p.nvertices)]);
}

} // namespace detail

template <typename Scalar>
Line2<Scalar> line_from_points(const Point2<Scalar>& p, const Point2<Scalar>& q)
{
    if (distance(p, q) <= Scalar(EPS_COINCIDENT))
        throw Error(Errc::DegenerateLine, "points coincide");
    return detail::line_through(p, q);
}

template <typename Scalar> constexpr
Scalar line_eval(const Line2<Scalar>& l, const Point2<Scalar>& p)
{
    return l.a * p.x + l.b * p.y + l.c;
}

template <typename Scalar>
Point2<Scalar> line_intersect(const Line2<Scalar>& l1, const Line2<Scalar>& l2)
{
    Scalar det = detail::determinant(l1, l2);
    if (std::abs(det) <= Scalar(EPS_PARALLEL))
        throw Error(Errc::ParallelLines, "determinant below tolerance");
    return detail::solve(l1, l2, det);
}

template <typename Scalar, std::uint8_t Capacity>
Scalar area(const ConvexPolygon<Scalar, Capacity>& p)
{
    if (p.nvertices < 3)
        return 0;

    // shoelace taken relative to vertex 0, which avoids cancellation far from the origin
    const auto& o = p.vertices[0];
    Scalar sum = 0;
    for (std::uint8_t k = 1; k + 1 < p.nvertices; k++)
        sum += cross(p.vertices[k] - o, p.vertices[k + 1] - o);
    return sum / 2;
}

template <typename Scalar, std::uint8_t Capacity>
bool point_in_polygon(const Point2<Scalar>& pt, const ConvexPolygon<Scalar, Capacity>& p)
{
    for (std::uint8_t k = 0; k < p.nvertices; k++)
        if (line_eval(detail::edge_line(p, k), pt) > Scalar(EPS_INSIDE))
            return false;
    return true;
}

namespace detail {

struct EdgeId
{
    bool from_p1;
    std::uint8_t index;
};

// lower is preferred when two vertices collapse into one
constexpr int flag_rank(FlagKind kind)
{
    switch (kind) {
    case FlagKind::FromP1: return 0;
    case FlagKind::FromP2: return 1;
    case FlagKind::CrossP1P2: return 2;
    case FlagKind::CrossP2P2: return 3;
    }
    return 4;
}

// Polygon under clipping. edges[k] names the supporting line of the edge
// leaving vertex k.
template <typename Scalar, std::size_t Capacity> struct ClipChain
{
    std::array<Point2<Scalar>, Capacity> points;
    std::array<VertexFlag, Capacity> flags;
    std::array<EdgeId, Capacity> edges;
    std::size_t n = 0;

    void push(const Point2<Scalar>& p, VertexFlag f, EdgeId e)
    {
        if (n >= Capacity)
            throw Error(Errc::CapacityExceeded, "clipping buffer overflow");
        points[n] = p;
        flags[n] = f;
        edges[n] = e;
        n++;
    }

    // Collapse runs of coincident consecutive vertices. The survivor takes the
    // preferred flag and the outgoing edge of the last vertex in the run.
    void merge_coincident()
    {
        if (n == 0) return;
        std::size_t m = 1;
        for (std::size_t k = 1; k < n; k++) {
            if (distance(points[m - 1], points[k]) <= Scalar(EPS_COINCIDENT)) {
                if (flag_rank(flags[k].kind) < flag_rank(flags[m - 1].kind)) {
                    points[m - 1] = points[k];
                    flags[m - 1] = flags[k];
                }
                edges[m - 1] = edges[k];
            } else {
                points[m] = points[k];
                flags[m] = flags[k];
                edges[m] = edges[k];
                m++;
            }
        }
        while (m > 1 && distance(points[m - 1], points[0]) <= Scalar(EPS_COINCIDENT)) {
            if (flag_rank(flags[m - 1].kind) < flag_rank(flags[0].kind)) {
                points[0] = points[m - 1];
                flags[0] = flags[m - 1];
            }
            m--;
        }
        n = m;
    }
};

} // namespace detail

// Intersection of two convex polygons by clipping p1 (subject) against each
// edge half-plane of p2 (clipper) in order. Every output vertex carries a
// VertexFlag naming where it came from so that the backward pass can route
// gradients without re-running the clipping. Touching or sliver results are
// returned empty.
//
// The result capacity defaults to N1 + N2; pass a smaller one explicitly to
// get CapacityExceeded when the true intersection does not fit.
template <std::uint8_t ResultCapacity = 0, typename Scalar, std::uint8_t N1, std::uint8_t N2>
auto intersect(const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2)
{
    constexpr std::uint8_t Cap = ResultCapacity == 0 ? std::uint8_t(N1 + N2) : ResultCapacity;
    constexpr std::size_t Work = 2 * (std::size_t(N1) + N2);
    using Chain = detail::ClipChain<Scalar, Work>;

    IntersectResult<Scalar, Cap> result;
    const std::uint8_t n1 = p1.nvertices, n2 = p2.nvertices;
    if (n1 < 3 || n2 < 3)
        return result;

    std::array<Line2<Scalar>, N1> lines1;
    std::array<Line2<Scalar>, N2> lines2;
    for (std::uint8_t i = 0; i < n1; i++) lines1[i] = detail::edge_line(p1, i);
    for (std::uint8_t j = 0; j < n2; j++) lines2[j] = detail::edge_line(p2, j);

    Chain buffers[2];
    Chain* chain = &buffers[0];
    Chain* next = &buffers[1];
    for (std::uint8_t i = 0; i < n1; i++)
        chain->push(p1.vertices[i], VertexFlag::from_p1(i), {true, i});

    std::array<Scalar, Work> dist;
    for (std::uint8_t j = 0; j < n2 && chain->n > 0; j++) {
        const Line2<Scalar>& clip = lines2[j];
        for (std::size_t k = 0; k < chain->n; k++)
            dist[k] = line_eval(clip, chain->points[k]);

        // crossing of the edge leaving vertex k with the clip line
        auto push_crossing = [&](std::size_t k, detail::EdgeId out_edge) {
            const detail::EdgeId e = chain->edges[k];
            if (e.from_p1) {
                Scalar det = detail::determinant(lines1[e.index], clip);
                if (std::abs(det) <= Scalar(EPS_PARALLEL)) return;
                next->push(detail::solve(lines1[e.index], clip, det), VertexFlag::cross_p1p2(e.index, j), out_edge);
            } else if (mod_inc(e.index, n2) == j) {
                next->push(p2.vertices[j], VertexFlag::from_p2(j), out_edge);
            } else if (mod_inc(j, n2) == e.index) {
                next->push(p2.vertices[e.index], VertexFlag::from_p2(e.index), out_edge);
            } else {
                Scalar det = detail::determinant(lines2[e.index], clip);
                if (std::abs(det) <= Scalar(EPS_PARALLEL)) return;
                next->push(detail::solve(lines2[e.index], clip, det), VertexFlag::cross_p2p2(e.index, j), out_edge);
            }
        };

        next->n = 0;
        for (std::size_t k = 0; k < chain->n; k++) {
            std::size_t kn = k + 1 < chain->n ? k + 1 : 0;
            bool in_cur = dist[k] <= Scalar(EPS_INSIDE);
            bool in_next = dist[kn] <= Scalar(EPS_INSIDE);
            if (in_cur) {
                next->push(chain->points[k], chain->flags[k], chain->edges[k]);
                if (!in_next)
                    push_crossing(k, {false, j});
            } else if (in_next) {
                push_crossing(k, chain->edges[k]);
            }
        }
        next->merge_coincident();
        std::swap(chain, next);
    }

    if (chain->n < 3)
        return result;

    ConvexPolygon<Scalar, Work> full;
    for (std::size_t k = 0; k < chain->n; k++)
        full.vertices[k] = chain->points[k];
    full.nvertices = std::uint8_t(chain->n);
    if (area(full) <= Scalar(EPS_AREA))
        return result;

    if (chain->n > Cap)
        throw Error(Errc::CapacityExceeded, std::to_string(chain->n) + " vertices, capacity " + std::to_string(Cap));
    for (std::size_t k = 0; k < chain->n; k++) {
        result.polygon.vertices[k] = chain->points[k];
        result.flags[k] = chain->flags[k];
    }
    result.polygon.nvertices = std::uint8_t(chain->n);
    return result;
}

// Rebuild the intersection polygon from its flags, exactly as intersect
// computed it.
template <std::uint8_t Capacity = 0, typename Scalar, std::uint8_t N1, std::uint8_t N2>
auto intersection_from_flags(const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2,
    std::span<const VertexFlag> flags)
{
    constexpr std::uint8_t Cap = Capacity == 0 ? std::uint8_t(N1 + N2) : Capacity;
    if (flags.size() > Cap)
        throw Error(Errc::InconsistentFlags, "more flags than polygon capacity");

    const std::uint8_t n1 = p1.nvertices, n2 = p2.nvertices;
    auto check = [](std::uint8_t index, std::uint8_t n) {
        if (index >= n)
            throw Error(Errc::InconsistentFlags, "flag index " + std::to_string(index) + " out of range");
    };
    auto crossing = [](const Line2<Scalar>& l1, const Line2<Scalar>& l2) {
        Scalar det = detail::determinant(l1, l2);
        if (std::abs(det) <= Scalar(EPS_PARALLEL))
            throw Error(Errc::ParallelLines, "flagged crossing of parallel edges");
        return detail::solve(l1, l2, det);
    };

    ConvexPolygon<Scalar, Cap> result;
    for (const VertexFlag& f : flags) {
        Point2<Scalar> v;
        switch (f.kind) {
        case FlagKind::FromP1:
            check(f.first, n1);
            v = p1.vertices[f.first];
            break;
        case FlagKind::FromP2:
            check(f.first, n2);
            v = p2.vertices[f.first];
            break;
        case FlagKind::CrossP1P2:
            check(f.first, n1);
            check(f.second, n2);
            v = crossing(detail::edge_line(p1, f.first), detail::edge_line(p2, f.second));
            break;
        case FlagKind::CrossP2P2:
            check(f.first, n2);
            check(f.second, n2);
            v = crossing(detail::edge_line(p2, f.first), detail::edge_line(p2, f.second));
            break;
        }
        result.vertices[result.nvertices++] = v;
    }
    return result;
}

template <typename Scalar, std::uint8_t Capacity> struct IouResult
{
    Scalar value = 0;
    std::uint8_t nx = 0; // vertex count of the intersection
    std::array<VertexFlag, Capacity> xflags{};

    std::span<const VertexFlag> flags() const { return {xflags.data(), nx}; }
};

// Intersection over union. nx and xflags are the intermediates the backward
// pass needs.
template <typename Scalar, std::uint8_t N1, std::uint8_t N2>
IouResult<Scalar, N1 + N2> iou(const ConvexPolygon<Scalar, N1>& p1, const ConvexPolygon<Scalar, N2>& p2)
{
    auto inter = intersect(p1, p2);
    IouResult<Scalar, N1 + N2> result;
    result.nx = inter.polygon.nvertices;
    result.xflags = inter.flags;
    if (result.nx == 0)
        return result;

    Scalar area_i = area(inter.polygon);
    Scalar area_u = area(p1) + area(p2) - area_i;
    result.value = area_i / area_u;
    return result;
}

} // namespace diffgeo

#endif // DIFFGEO_GEOMETRY_HPP
