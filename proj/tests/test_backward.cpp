#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "diffgeo/boxes.hpp"
#include "diffgeo/geometry.hpp"
#include "diffgeo/geometry_grad.hpp"
#include "diffgeo/oracles.hpp"
#include "support/random_shapes.hpp"

using namespace diffgeo;
using oracles::finite_diff_check;
using oracles::Probe;
using support::square;

namespace {

template <std::uint8_t N>
std::vector<double> flatten(const ConvexPolygon<double, N>& p)
{
    std::vector<double> x;
    for (const auto& v : p.points()) {
        x.push_back(v.x);
        x.push_back(v.y);
    }
    return x;
}

template <std::uint8_t N>
ConvexPolygon<double, N> unflatten(std::span<const double> x, std::size_t offset, std::uint8_t n)
{
    ConvexPolygon<double, N> p;
    for (std::uint8_t k = 0; k < n; k++)
        p.vertices[k] = {x[offset + 2 * k], x[offset + 2 * k + 1]};
    p.nvertices = n;
    return p;
}

template <std::uint8_t N1, std::uint8_t N2>
std::vector<double> concat(const PolygonGrad<double, N1>& a, const PolygonGrad<double, N2>& b)
{
    auto x = flatten(a);
    auto y = flatten(b);
    x.insert(x.end(), y.begin(), y.end());
    return x;
}

// IoU as a function of all vertex coordinates of both polygons
template <std::uint8_t N1, std::uint8_t N2>
auto iou_probe(std::uint8_t n1, std::uint8_t n2)
{
    return [n1, n2](std::span<const double> x) {
        auto p1 = unflatten<N1>(x, 0, n1);
        auto p2 = unflatten<N2>(x, 2 * n1, n2);
        auto r = iou(p1, p2);
        return Probe{r.value, oracles::flag_structure(r.nx, r.flags())};
    };
}

} // namespace

TEST(LineFromPointsGrad, Examples)
{
    auto [gp, gq] = line_from_points_grad(Point2d{3, -1}, Point2d{0.5, 2}, Line2d{1, 0, 0});
    EXPECT_EQ(gp, (Point2d{0, -1}));
    EXPECT_EQ(gq, (Point2d{0, 1}));

    std::tie(gp, gq) = line_from_points_grad(Point2d{0, 0}, Point2d{1, 0}, Line2d{0, 0, 1});
    EXPECT_EQ(gp, (Point2d{0, 1}));
    EXPECT_EQ(gq, (Point2d{0, 0}));

    std::tie(gp, gq) = line_from_points_grad(Point2d{0, 0}, Point2d{1, 0}, Line2d{0, 0, 0});
    EXPECT_EQ(gp, (Point2d{0, 0}));
    EXPECT_EQ(gq, (Point2d{0, 0}));

    EXPECT_THROW(line_from_points_grad(Point2d{1, 1}, Point2d{1, 1}, Line2d{1, 1, 1}), Error);
}

TEST(LineFromPointsGrad, MatchesFiniteDifferences)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int trial = 0; trial < 200; trial++) {
        const std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
        const Line2d cot{u(rng), u(rng), u(rng)};
        auto f = [&](std::span<const double> v) {
            auto l = line_from_points(Point2d{v[0], v[1]}, Point2d{v[2], v[3]});
            return cot.a * l.a + cot.b * l.b + cot.c * l.c;
        };
        auto [gp, gq] = line_from_points_grad(Point2d{x[0], x[1]}, Point2d{x[2], x[3]}, cot);
        const std::vector<double> analytic{gp.x, gp.y, gq.x, gq.y};
        EXPECT_LT(finite_diff_check(f, x, 1e-6, analytic).max_relative_error, 1e-6);
    }
}

TEST(LineIntersectGrad, Examples)
{
    // x = (b1*c2 - b2*c1)/D with D = 1, so dx/dc1 = -b2/D = -1
    auto [g1, g2] = line_intersect_grad(Line2d{1, 0, -1}, Line2d{0, 1, -2}, Point2d{1, 0});
    EXPECT_DOUBLE_EQ(g1.c, -1.0);
    EXPECT_DOUBLE_EQ(g2.c, 0.0);

    std::tie(g1, g2) = line_intersect_grad(Line2d{1, 0, -1}, Line2d{0, 1, -2}, Point2d{0, 0});
    EXPECT_EQ(g1, (Line2d{0, 0, 0}));
    EXPECT_EQ(g2, (Line2d{0, 0, 0}));

    EXPECT_THROW(line_intersect_grad(Line2d{0, -1, 0}, Line2d{0, -2, 3}, Point2d{1, 1}), Error);
}

TEST(LineIntersectGrad, MatchesFiniteDifferences)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2, 2);
    int checked = 0;
    while (checked < 200) {
        const std::vector<double> x{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
        if (std::abs(x[0] * x[4] - x[3] * x[1]) < 0.3) continue;
        const Point2d cot{u(rng), u(rng)};
        auto f = [&](std::span<const double> v) {
            auto p = line_intersect(Line2d{v[0], v[1], v[2]}, Line2d{v[3], v[4], v[5]});
            return cot.x * p.x + cot.y * p.y;
        };
        auto [g1, g2] = line_intersect_grad(Line2d{x[0], x[1], x[2]}, Line2d{x[3], x[4], x[5]}, cot);
        const std::vector<double> analytic{g1.a, g1.b, g1.c, g2.a, g2.b, g2.c};
        EXPECT_LT(finite_diff_check(f, x, 1e-6, analytic).max_relative_error, 1e-5);
        checked++;
    }
}

TEST(AreaGrad, UnitSquare)
{
    const auto g = area_grad(square(0, 0), 1.0);
    ASSERT_EQ(g.nvertices, 4);
    EXPECT_DOUBLE_EQ(g[0].x, (0.0 - 1.0) / 2);

    auto x = flatten(square(0, 0));
    auto f = [](std::span<const double> v) { return area(unflatten<4>(v, 0, 4)); };
    EXPECT_LT(finite_diff_check(f, x, 1e-6, flatten(g)).max_relative_error, 1e-9);
}

TEST(AreaGrad, ZeroCotangentAndEmptyPolygon)
{
    for (const auto& v : area_grad(square(2, 3), 0.0).points())
        EXPECT_EQ(v, (Point2d{0, 0}));
    EXPECT_EQ(area_grad(ConvexPolygon<double>{}, 1.0).nvertices, 0);
}

TEST(AreaGrad, ComponentSumsAreExactlyZero)
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> g(-3, 3);
    for (int trial = 0; trial < 2000; trial++) {
        const auto p = support::random_convex_polygon(rng, 3 + trial % 6);
        const auto grad = area_grad(p, g(rng));
        double sx = 0, sy = 0;
        for (const auto& v : grad.points()) {
            sx += v.x;
            sy += v.y;
        }
        ASSERT_EQ(sx, 0.0);
        ASSERT_EQ(sy, 0.0);
    }
}

TEST(AreaGrad, MatchesFiniteDifferencesOnRandomPolygons)
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 300; trial++) {
        const auto p = support::random_convex_polygon(rng, 3 + trial % 6);
        auto f = [n = p.nvertices](std::span<const double> v) { return area(unflatten<8>(v, 0, n)); };
        EXPECT_LT(finite_diff_check(f, flatten(p), 1e-5, flatten(area_grad(p, 1.0))).max_relative_error, 1e-6);
    }
}

TEST(IntersectBackward, IdentityRouting)
{
    const auto sq = square(0, 0);
    const auto r = intersect(sq, sq);
    PolygonGrad<double, 8> cot = zeros_like(r.polygon);
    for (std::uint8_t k = 0; k < 4; k++) cot[k] = {1.0 + k, -2.0 * k};

    auto [g1, g2] = intersect_backward(sq, sq, r.active_flags(), cot);
    for (std::uint8_t k = 0; k < 4; k++) {
        EXPECT_EQ(g1[k], cot[k]);
        EXPECT_EQ(g2[k], (Point2d{0, 0}));
    }
}

TEST(IntersectBackward, CrossingTouchesOnlyItsEdges)
{
    const auto p1 = square(0, 0), p2 = square(0.5, 0.5);
    const auto r = intersect(p1, p2);
    auto cot = zeros_like(r.polygon);
    std::uint8_t crossing = 0;
    for (std::uint8_t k = 0; k < r.polygon.nvertices; k++)
        if (r.flags[k] == VertexFlag::cross_p1p2(1, 0)) crossing = k;
    ASSERT_EQ(r.polygon[crossing], (Point2d{1, 0.5}));
    cot[crossing] = {1, 1};

    auto [g1, g2] = intersect_backward(p1, p2, r.active_flags(), cot);
    for (std::uint8_t k = 0; k < 4; k++) {
        const bool p1_touched = k == 1 || k == 2, p2_touched = k == 0 || k == 1;
        EXPECT_EQ(g1[k] != (Point2d{0, 0}), p1_touched) << "p1 vertex " << int(k);
        EXPECT_EQ(g2[k] != (Point2d{0, 0}), p2_touched) << "p2 vertex " << int(k);
    }

    // x + y of the crossing as a function of all 16 coordinates, flags held fixed
    auto f = [&](std::span<const double> v) {
        auto q1 = unflatten<4>(v, 0, 4), q2 = unflatten<4>(v, 8, 4);
        auto rr = intersect(q1, q2);
        const auto c = intersection_from_flags(q1, q2, r.active_flags())[crossing];
        return Probe{c.x + c.y,
            oracles::flag_structure(rr.polygon.nvertices, rr.active_flags())};
    };
    auto x = concat(p1, p2);
    auto report = finite_diff_check(f, x, 1e-6, concat(g1, g2));
    EXPECT_FALSE(report.excluded);
    EXPECT_LT(report.max_relative_error, 1e-6);
}

TEST(IntersectBackward, ZeroCotangentAndInconsistentFlags)
{
    const auto p1 = square(0, 0), p2 = square(0.5, 0.5);
    const auto r = intersect(p1, p2);
    auto [g1, g2] = intersect_backward(p1, p2, r.active_flags(), zeros_like(r.polygon));
    for (std::uint8_t k = 0; k < 4; k++) {
        EXPECT_EQ(g1[k], (Point2d{0, 0}));
        EXPECT_EQ(g2[k], (Point2d{0, 0}));
    }

    auto short_grad = zeros_like(r.polygon);
    short_grad.nvertices = 3;
    try {
        intersect_backward(p1, p2, r.active_flags(), short_grad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InconsistentFlags);
    }

    const std::array<VertexFlag, 3> bad{VertexFlag::from_p1(0), VertexFlag::from_p1(1), VertexFlag::from_p2(6)};
    EXPECT_THROW(intersect_backward(p1, p2, bad, zeros_like(make_polygon({Point2d{0, 0}, {1, 0}, {0, 1}}))), Error);
}

TEST(IntersectBackward, SparsityOnRandomRectangles)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 1000; trial++) {
        const auto p1 = box_to_polygon(support::random_box(rng)), p2 = box_to_polygon(support::random_box(rng));
        const auto r = intersect(p1, p2);
        auto cot = zeros_like(r.polygon);
        for (auto& v : cot.points()) v = {u(rng), u(rng)};

        std::array<bool, 4> named1{}, named2{};
        for (const auto& f : r.active_flags()) {
            switch (f.kind) {
            case FlagKind::FromP1: named1[f.first] = true; break;
            case FlagKind::FromP2: named2[f.first] = true; break;
            case FlagKind::CrossP1P2:
                named1[f.first] = named1[(f.first + 1) % 4] = true;
                named2[f.second] = named2[(f.second + 1) % 4] = true;
                break;
            case FlagKind::CrossP2P2:
                named2[f.first] = named2[(f.first + 1) % 4] = true;
                named2[f.second] = named2[(f.second + 1) % 4] = true;
                break;
            }
        }
        auto [g1, g2] = intersect_backward(p1, p2, r.active_flags(), cot);
        for (std::uint8_t k = 0; k < 4; k++) {
            if (!named1[k]) {
                EXPECT_EQ(g1[k], (Point2d{0, 0}));
            }
            if (!named2[k]) {
                EXPECT_EQ(g2[k], (Point2d{0, 0}));
            }
        }
    }
}

TEST(IouGrad, OffsetSquares)
{
    const auto p1 = square(0, 0), p2 = square(0.5, 0.5);
    const auto fwd = iou(p1, p2);
    ASSERT_NEAR(fwd.value, 1.0 / 7, 1e-15);

    // dIoU/dA_i = (A_u + A_i)/A_u^2 = 2/3.0625, dIoU/dA_1 = -A_i/A_u^2 = -0.25/3.0625.
    // The (1,1) corner is vertex 2 of p1 and of the overlap; its area gradients
    // are (0.5, 0.5) in p1 and (0.25, 0.25) in the overlap. Moving the corner
    // also drags the crossing on p1 edge 1 (or 2) by half as much, adding 0.125.
    const double d_inter = 2 / 3.0625, d_own = -0.25 / 3.0625;
    const double expected = d_inter * 0.375 + d_own * 0.5;
    EXPECT_NEAR(expected, 10.0 / 49, 1e-15);

    auto [g1, g2] = iou_grad(p1, p2, 1.0, fwd);
    EXPECT_NEAR(g1[2].x, expected, 1e-15);
    EXPECT_NEAR(g1[2].y, expected, 1e-15);

    auto report = finite_diff_check(iou_probe<4, 4>(4, 4), concat(p1, p2), 1e-5, concat(g1, g2));
    EXPECT_FALSE(report.excluded);
    EXPECT_LT(report.max_relative_error, 1e-6);
}

TEST(IouGrad, DisjointIsZero)
{
    const auto p1 = square(0, 0), p2 = square(5, 5);
    auto [g1, g2] = iou_grad(p1, p2, 3.0, iou(p1, p2));
    for (std::uint8_t k = 0; k < 4; k++) {
        EXPECT_EQ(g1[k], (Point2d{0, 0}));
        EXPECT_EQ(g2[k], (Point2d{0, 0}));
    }
}

TEST(IouGrad, InconsistentFlags)
{
    const auto p1 = square(0, 0), p2 = square(0.5, 0.5);
    const auto fwd = iou(p1, p2);
    EXPECT_THROW(iou_grad(p1, p2, 1.0, std::uint8_t(4), fwd.flags().first(2)), Error);
}

TEST(IouGrad, MatchesFiniteDifferencesOnRandomRectangles)
{
    std::mt19937_64 rng(31);
    int excluded = 0, total = 0;
    for (int trial = 0; trial < 500; trial++) {
        const auto p1 = box_to_polygon(support::random_box(rng)), p2 = box_to_polygon(support::random_box(rng));
        const auto fwd = iou(p1, p2);
        auto [g1, g2] = iou_grad(p1, p2, 1.0, fwd);
        auto report = finite_diff_check(iou_probe<4, 4>(4, 4), concat(p1, p2), 1e-5, concat(g1, g2));
        total++;
        if (report.excluded) {
            excluded++;
            continue;
        }
        EXPECT_LT(report.max_relative_error, 1e-4) << "trial " << trial << " param " << report.worst_parameter_index;
    }
    EXPECT_LT(excluded, total / 10);
}

TEST(IouGrad, MatchesFiniteDifferencesOnRandomPolygons)
{
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 300; trial++) {
        const std::uint8_t n1 = 3 + trial % 6, n2 = 3 + (trial / 6) % 6;
        const auto p1 = support::random_convex_polygon(rng, n1), p2 = support::random_convex_polygon(rng, n2);
        auto [g1, g2] = iou_grad(p1, p2, 1.0, iou(p1, p2));
        auto report = finite_diff_check(iou_probe<8, 8>(n1, n2), concat(p1, p2), 1e-5, concat(g1, g2));
        if (!report.excluded) {
            EXPECT_LT(report.max_relative_error, 1e-4) << "trial " << trial;
        }
    }
}

TEST(IouGrad, LinearInCotangent)
{
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 200; trial++) {
        const auto p1 = box_to_polygon(support::random_box(rng)), p2 = box_to_polygon(support::random_box(rng));
        const auto fwd = iou(p1, p2);
        const double alpha = -2.5;
        auto [a1, a2] = iou_grad(p1, p2, alpha * 0.7, fwd);
        auto [b1, b2] = iou_grad(p1, p2, 0.7, fwd);
        for (std::uint8_t k = 0; k < 4; k++) {
            EXPECT_NEAR(a1[k].x, alpha * b1[k].x, 1e-12);
            EXPECT_NEAR(a1[k].y, alpha * b1[k].y, 1e-12);
            EXPECT_NEAR(a2[k].x, alpha * b2[k].x, 1e-12);
            EXPECT_NEAR(a2[k].y, alpha * b2[k].y, 1e-12);
        }
    }
}

TEST(IouGrad, AscentStepIncreasesIou)
{
    const auto p1 = square(0, 0);
    auto p2 = square(0.5, 0.5);
    const auto fwd = iou(p1, p2);
    auto [g1, g2] = iou_grad(p1, p2, 1.0, fwd);
    for (std::uint8_t k = 0; k < 4; k++)
        p2[k] += 1e-3 * g2[k];
    EXPECT_GT(iou(p1, p2).value, fwd.value);
}
