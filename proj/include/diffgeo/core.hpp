/*
 * Value types shared by every operator in the library.
 *
 * Point2        2D coordinate, also used as a per-vertex gradient slot
 * Line2         implicit line a*x + b*y + c = 0
 * ConvexPolygon fixed-capacity counter-clockwise vertex array
 * VertexFlag    provenance of one vertex of an intersection polygon
 * RotatedBox2   center / extents / yaw box in the plane
 * Box3          yaw-only box in space
 *
 * All types are plain values with no heap storage, so they can be copied
 * into worker threads freely.
 */
#ifndef DIFFGEO_CORE_HPP
#define DIFFGEO_CORE_HPP

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>

namespace diffgeo {

////////////////////////// tolerances //////////////////////////

// cross product of two edge vectors (length^2 units)
inline constexpr double EPS_COLLINEAR = 1e-9;
// distance between two points
inline constexpr double EPS_COINCIDENT = 1e-12;
// polygons with smaller area are normalized to empty
inline constexpr double EPS_AREA = 1e-12;
// 2x2 determinant of two line normals
inline constexpr double EPS_PARALLEL = 1e-12;
// signed incidence value; boundary counts as inside
inline constexpr double EPS_INSIDE = 1e-9;

inline constexpr std::uint8_t MAX_VERTS = 8;

////////////////////////// errors //////////////////////////

enum class Errc {
    NotCCW,
    NotConvex,
    TooManyVertices,
    TooFewVertices,
    DuplicateVertex,
    IndexOverflow,
    DegenerateLine,
    ParallelLines,
    CapacityExceeded,
    InconsistentFlags,
    InvalidBox,
    LengthMismatch,
    GradUnsupportedInCartesian,
    EvaluationFailed,
    IoError,
    InvalidFlag,
};

constexpr const char* to_string(Errc code)
{
    switch (code) {
    case Errc::NotCCW: return "NotCCW";
    case Errc::NotConvex: return "NotConvex";
    case Errc::TooManyVertices: return "TooManyVertices";
    case Errc::TooFewVertices: return "TooFewVertices";
    case Errc::DuplicateVertex: return "DuplicateVertex";
    case Errc::IndexOverflow: return "IndexOverflow";
    case Errc::DegenerateLine: return "DegenerateLine";
    case Errc::ParallelLines: return "ParallelLines";
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::InconsistentFlags: return "InconsistentFlags";
    case Errc::InvalidBox: return "InvalidBox";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::GradUnsupportedInCartesian: return "GradUnsupportedInCartesian";
    case Errc::EvaluationFailed: return "EvaluationFailed";
    case Errc::IoError: return "IoError";
    case Errc::InvalidFlag: return "InvalidFlag";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

////////////////////////// helpers //////////////////////////

template <typename T> constexpr
T mod_inc(T i, T n) { return i + 1 < n ? T(i + 1) : T(0); }
template <typename T> constexpr
T mod_dec(T i, T n) { return i > 0 ? T(i - 1) : T(n - 1); }

////////////////////////// points and lines //////////////////////////

template <typename Scalar> struct Point2
{
    Scalar x = 0, y = 0;

    friend constexpr bool operator==(const Point2&, const Point2&) = default;

    constexpr Point2& operator+=(const Point2& o) { x += o.x; y += o.y; return *this; }
    friend constexpr Point2 operator+(Point2 a, const Point2& b) { return a += b; }
    friend constexpr Point2 operator-(const Point2& a, const Point2& b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point2 operator*(Scalar s, const Point2& p) { return {s * p.x, s * p.y}; }
};

template <typename Scalar> constexpr
Scalar cross(const Point2<Scalar>& u, const Point2<Scalar>& v) { return u.x * v.y - u.y * v.x; }

// cross product of p1->p2 and p2->p3, positive for a left turn
template <typename Scalar> constexpr
Scalar turn(const Point2<Scalar>& p1, const Point2<Scalar>& p2, const Point2<Scalar>& p3)
{
    return cross(p2 - p1, p3 - p2);
}

template <typename Scalar>
Scalar distance(const Point2<Scalar>& p, const Point2<Scalar>& q)
{
    return std::hypot(p.x - q.x, p.y - q.y);
}

template <typename Scalar> struct Line2 // a*x + b*y + c = 0
{
    Scalar a = 0, b = 0, c = 0;

    friend constexpr bool operator==(const Line2&, const Line2&) = default;
};

////////////////////////// polygons //////////////////////////

// Convex polygon with vertices in counter-clockwise order. The same layout
// holds per-vertex gradients, in which case the ordering rules do not apply.
template <typename Scalar, std::uint8_t Capacity = MAX_VERTS> struct ConvexPolygon
{
    static constexpr std::uint8_t capacity = Capacity;

    std::array<Point2<Scalar>, Capacity> vertices{};
    std::uint8_t nvertices = 0;

    constexpr bool empty() const { return nvertices == 0; }
    constexpr std::uint8_t size() const { return nvertices; }

    constexpr const Point2<Scalar>& operator[](std::size_t i) const { return vertices[i]; }
    constexpr Point2<Scalar>& operator[](std::size_t i) { return vertices[i]; }

    constexpr std::span<const Point2<Scalar>> points() const { return {vertices.data(), nvertices}; }
    constexpr std::span<Point2<Scalar>> points() { return {vertices.data(), nvertices}; }

    constexpr void push_back(const Point2<Scalar>& p)
    {
        if (nvertices >= Capacity)
            throw Error(Errc::CapacityExceeded, "polygon capacity " + std::to_string(Capacity));
        vertices[nvertices++] = p;
    }

    friend constexpr bool operator==(const ConvexPolygon& a, const ConvexPolygon& b)
    {
        if (a.nvertices != b.nvertices) return false;
        for (std::uint8_t i = 0; i < a.nvertices; i++)
            if (!(a.vertices[i] == b.vertices[i])) return false;
        return true;
    }
};

template <typename Scalar, std::uint8_t Capacity = MAX_VERTS>
using PolygonGrad = ConvexPolygon<Scalar, Capacity>;

// zeroed gradient container shaped like p
template <typename Scalar, std::uint8_t Capacity> constexpr
PolygonGrad<Scalar, Capacity> zeros_like(const ConvexPolygon<Scalar, Capacity>& p)
{
    PolygonGrad<Scalar, Capacity> g;
    g.nvertices = p.nvertices;
    return g;
}

// Checked constructor. Accepts vertex sequences whose consecutive turns are
// all above -EPS_COLLINEAR and which wind around their interior once.
template <std::uint8_t Capacity = MAX_VERTS, typename Scalar>
ConvexPolygon<Scalar, Capacity> make_polygon(std::span<const Point2<Scalar>> points)
{
    const std::size_t n = points.size();
    if (n > Capacity)
        throw Error(Errc::TooManyVertices, std::to_string(n) + " > " + std::to_string(Capacity));
    if (n < 3)
        throw Error(Errc::TooFewVertices, std::to_string(n) + " < 3");

    for (std::size_t i = 0; i < n; i++) {
        const auto& p = points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw Error(Errc::NotConvex, "non-finite vertex " + std::to_string(i));
        if (distance(p, points[(i + 1) % n]) <= Scalar(EPS_COINCIDENT))
            throw Error(Errc::DuplicateVertex, "vertices " + std::to_string(i) + " and " + std::to_string((i + 1) % n));
    }

    bool any_left = false, any_right = false;
    for (std::size_t i = 0; i < n; i++) {
        Scalar t = turn(points[i], points[(i + 1) % n], points[(i + 2) % n]);
        if (t <= -Scalar(EPS_COLLINEAR)) any_right = true;
        if (t > Scalar(EPS_COLLINEAR)) any_left = true;
    }
    if (any_right && !any_left)
        throw Error(Errc::NotCCW, "vertices turn clockwise");
    if (any_right || !any_left)
        throw Error(Errc::NotConvex, "vertex sequence is not convex");

    // all left turns but wound more than once (star polygons)
    for (std::size_t i = 0; i < n; i++)
        for (std::size_t k = 0; k < n; k++)
            if (turn(points[i], points[(i + 1) % n], points[k]) <= -Scalar(EPS_COLLINEAR))
                throw Error(Errc::NotConvex, "vertex " + std::to_string(k) + " right of edge " + std::to_string(i));

    ConvexPolygon<Scalar, Capacity> result;
    for (const auto& p : points)
        result.vertices[result.nvertices++] = p;
    return result;
}

template <std::uint8_t Capacity = MAX_VERTS, typename Scalar>
ConvexPolygon<Scalar, Capacity> make_polygon(std::initializer_list<Point2<Scalar>> points)
{
    return make_polygon<Capacity, Scalar>(std::span<const Point2<Scalar>>(points.begin(), points.size()));
}

////////////////////////// provenance flags //////////////////////////

enum class FlagKind : std::uint8_t {
    CrossP2P2 = 0b00,
    FromP1 = 0b01,
    FromP2 = 0b10,
    CrossP1P2 = 0b11,
};

// FromP1/FromP2 use `first` as the vertex index. Crossings store the two edge
// indices; edge i runs from vertex i to vertex i+1.
struct VertexFlag
{
    FlagKind kind = FlagKind::FromP1;
    std::uint8_t first = 0;
    std::uint8_t second = 0;

    static constexpr VertexFlag from_p1(std::uint8_t i) { return {FlagKind::FromP1, i, 0}; }
    static constexpr VertexFlag from_p2(std::uint8_t j) { return {FlagKind::FromP2, j, 0}; }
    static constexpr VertexFlag cross_p1p2(std::uint8_t i, std::uint8_t j) { return {FlagKind::CrossP1P2, i, j}; }
    static constexpr VertexFlag cross_p2p2(std::uint8_t j1, std::uint8_t j2) { return {FlagKind::CrossP2P2, j1, j2}; }

    friend constexpr auto operator<=>(const VertexFlag&, const VertexFlag&) = default;
};

// Byte layout: bits 7-6 tag, bits 5-3 first edge index, bits 2-0 second edge
// index. Single-vertex flags keep their vertex index in bits 2-0 and leave
// bits 5-3 zero.
constexpr std::uint8_t pack_flag(const VertexFlag& flag)
{
    if (flag.first > 7 || flag.second > 7)
        throw Error(Errc::IndexOverflow, "flag index exceeds 3 bits");
    const std::uint8_t tag = std::uint8_t(std::uint8_t(flag.kind) << 6);
    if (flag.kind == FlagKind::FromP1 || flag.kind == FlagKind::FromP2)
        return std::uint8_t(tag | flag.first);
    return std::uint8_t(tag | (flag.first << 3) | flag.second);
}

constexpr VertexFlag unpack_flag(std::uint8_t byte)
{
    const auto kind = FlagKind(byte >> 6);
    const auto high = std::uint8_t((byte >> 3) & 0b111), low = std::uint8_t(byte & 0b111);
    if (kind == FlagKind::FromP1 || kind == FlagKind::FromP2) {
        if (high != 0)
            throw Error(Errc::InvalidFlag, "vertex flag with nonzero bits 5-3");
        return {kind, low, 0};
    }
    return {kind, high, low};
}

template <typename Scalar, std::uint8_t Capacity> struct IntersectResult
{
    ConvexPolygon<Scalar, Capacity> polygon;
    std::array<VertexFlag, Capacity> flags{};

    std::span<const VertexFlag> active_flags() const { return {flags.data(), polygon.nvertices}; }
};

////////////////////////// boxes //////////////////////////

template <typename Scalar> struct RotatedBox2
{
    Scalar cx = 0, cy = 0; // center
    Scalar w = 0, h = 0;   // full extents along the box axes
    Scalar theta = 0;      // yaw, radians, not normalized

    friend constexpr bool operator==(const RotatedBox2&, const RotatedBox2&) = default;
};

template <typename Scalar> struct Box3
{
    Scalar cx = 0, cy = 0, cz = 0;
    Scalar w = 0, h = 0; // footprint extents
    Scalar d = 0;        // vertical extent
    Scalar theta = 0;    // yaw about the vertical axis

    friend constexpr bool operator==(const Box3&, const Box3&) = default;
};

template <typename Scalar>
bool is_valid(const RotatedBox2<Scalar>& b)
{
    return std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.theta)
        && std::isfinite(b.w) && std::isfinite(b.h) && b.w > 0 && b.h > 0;
}

template <typename Scalar>
bool is_valid(const Box3<Scalar>& b)
{
    return std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.cz) && std::isfinite(b.theta)
        && std::isfinite(b.w) && std::isfinite(b.h) && std::isfinite(b.d)
        && b.w > 0 && b.h > 0 && b.d > 0;
}

template <typename Scalar>
RotatedBox2<Scalar> make_box(Scalar cx, Scalar cy, Scalar w, Scalar h, Scalar theta)
{
    RotatedBox2<Scalar> b{cx, cy, w, h, theta};
    if (!is_valid(b))
        throw Error(Errc::InvalidBox, "extents must be positive and all fields finite");
    return b;
}

template <typename Scalar>
Box3<Scalar> make_box(Scalar cx, Scalar cy, Scalar cz, Scalar w, Scalar h, Scalar d, Scalar theta)
{
    Box3<Scalar> b{cx, cy, cz, w, h, d, theta};
    if (!is_valid(b))
        throw Error(Errc::InvalidBox, "extents must be positive and all fields finite");
    return b;
}

////////////////////////// common aliases //////////////////////////

using Point2d = Point2<double>;
using Line2d = Line2<double>;
using Quad2d = ConvexPolygon<double, 4>;
using RotatedBox2d = RotatedBox2<double>;
using Box3d = Box3<double>;

inline std::string to_string(const VertexFlag& flag)
{
    switch (flag.kind) {
    case FlagKind::FromP1: return "FromP1(" + std::to_string(flag.first) + ")";
    case FlagKind::FromP2: return "FromP2(" + std::to_string(flag.first) + ")";
    case FlagKind::CrossP1P2: return "CrossP1P2(" + std::to_string(flag.first) + "," + std::to_string(flag.second) + ")";
    case FlagKind::CrossP2P2: return "CrossP2P2(" + std::to_string(flag.first) + "," + std::to_string(flag.second) + ")";
    }
    return "?";
}

} // namespace diffgeo

#endif // DIFFGEO_CORE_HPP
