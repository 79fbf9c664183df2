#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>
#include <vector>

#include "diffgeo/batch.hpp"
#include "diffgeo/boxes.hpp"
#include "diffgeo/geometry.hpp"
#include "diffgeo/geometry_grad.hpp"

namespace py = pybind11;
using namespace diffgeo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Polygon = ConvexPolygon<double, MAX_VERTS>;

PyObject* error_type = nullptr;

Polygon to_polygon(const Array& a)
{
    if (a.ndim() != 2 || a.shape(1) != 2)
        throw py::value_error("polygon must be an (n, 2) array");
    std::vector<Point2d> pts;
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < r.shape(0); i++)
        pts.push_back({r(i, 0), r(i, 1)});
    return make_polygon<MAX_VERTS>(std::span<const Point2d>(pts));
}

template <std::uint8_t N>
Array from_polygon(const ConvexPolygon<double, N>& p)
{
    Array out({py::ssize_t(p.nvertices), py::ssize_t(2)});
    auto w = out.mutable_unchecked<2>();
    for (std::uint8_t k = 0; k < p.nvertices; k++) {
        w(k, 0) = p[k].x;
        w(k, 1) = p[k].y;
    }
    return out;
}

std::vector<double> row(const Array& a, py::ssize_t width, const char* what)
{
    if (a.size() != width)
        throw py::value_error(std::string(what) + " must have " + std::to_string(width) + " entries");
    return {a.data(), a.data() + width};
}

RotatedBox2d to_box2(const Array& a)
{
    const auto v = row(a, 5, "a 2D box (cx, cy, w, h, theta)");
    return make_box(v[0], v[1], v[2], v[3], v[4]);
}

Box3d to_box3(const Array& a)
{
    const auto v = row(a, 7, "a 3D box (cx, cy, cz, w, h, d, theta)");
    return make_box(v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
}

Array from_box(const RotatedBox2d& b)
{
    Array out(5);
    double* d = out.mutable_data();
    d[0] = b.cx, d[1] = b.cy, d[2] = b.w, d[3] = b.h, d[4] = b.theta;
    return out;
}

Array from_box(const Box3d& b)
{
    Array out(7);
    double* d = out.mutable_data();
    d[0] = b.cx, d[1] = b.cy, d[2] = b.cz, d[3] = b.w, d[4] = b.h, d[5] = b.d, d[6] = b.theta;
    return out;
}

constexpr py::ssize_t width_of(const RotatedBox2d*) { return 5; }
constexpr py::ssize_t width_of(const Box3d*) { return 7; }

template <typename Box>
std::vector<Box> to_boxes(const Array& a)
{
    constexpr py::ssize_t width = width_of(static_cast<const Box*>(nullptr));
    if (a.ndim() != 2 || a.shape(1) != width)
        throw py::value_error("boxes must be an (n, " + std::to_string(width) + ") array");
    std::vector<Box> boxes(a.shape(0));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < r.shape(0); i++) {
        if constexpr (std::is_same_v<Box, RotatedBox2d>)
            boxes[i] = make_box(r(i, 0), r(i, 1), r(i, 2), r(i, 3), r(i, 4));
        else
            boxes[i] = make_box(r(i, 0), r(i, 1), r(i, 2), r(i, 3), r(i, 4), r(i, 5), r(i, 6));
    }
    return boxes;
}

template <typename Box>
Array from_boxes(const std::vector<Box>& boxes)
{
    constexpr py::ssize_t width = width_of(static_cast<const Box*>(nullptr));
    Array out({py::ssize_t(boxes.size()), width});
    double* d = out.mutable_data();
    for (const auto& b : boxes) {
        if constexpr (std::is_same_v<Box, RotatedBox2d>)
            for (double v : {b.cx, b.cy, b.w, b.h, b.theta}) *d++ = v;
        else
            for (double v : {b.cx, b.cy, b.cz, b.w, b.h, b.d, b.theta}) *d++ = v;
    }
    return out;
}

template <typename Box>
py::object batch(const Array& a, const Array& b, const std::string& mode, bool with_grad,
    std::optional<Array> upstream, unsigned threads)
{
    BatchOptions options;
    if (mode == "elementwise")
        options.mode = BatchMode::Elementwise;
    else if (mode == "cartesian")
        options.mode = BatchMode::Cartesian;
    else
        throw Error(Errc::InvalidFlag, "mode must be 'elementwise' or 'cartesian'");
    options.with_grad = with_grad;
    options.threads = threads;

    const auto boxes1 = to_boxes<Box>(a), boxes2 = to_boxes<Box>(b);
    std::vector<double> up;
    if (upstream) up.assign(upstream->data(), upstream->data() + upstream->size());

    BatchResult<Box> r;
    {
        py::gil_scoped_release release;
        if constexpr (std::is_same_v<Box, RotatedBox2d>)
            r = batch_iou_2d(boxes1, boxes2, options, up);
        else
            r = batch_iou_3d(boxes1, boxes2, options, up);
    }

    std::vector<py::ssize_t> shape{py::ssize_t(r.values.size())};
    if (options.mode == BatchMode::Cartesian)
        shape = {py::ssize_t(r.rows), py::ssize_t(r.cols)};
    Array values(shape);
    std::copy(r.values.begin(), r.values.end(), values.mutable_data());
    if (!with_grad)
        return values;
    return py::make_tuple(values, from_boxes(*r.grads1), from_boxes(*r.grads2));
}

py::list flag_names(std::span<const VertexFlag> flags)
{
    py::list out;
    for (const auto& f : flags) out.append(to_string(f));
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Rotated box and convex polygon IoU with analytic gradients";

    static py::exception<Error> exc(m, "DiffgeoError", PyExc_ValueError);
    error_type = exc.ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object instance = py::reinterpret_steal<py::object>(
                PyObject_CallFunction(error_type, "s", e.what()));
            instance.attr("code") = to_string(e.code());
            PyErr_SetObject(error_type, instance.ptr());
        }
    });

    m.def("polygon_area", [](const Array& p) { return area(to_polygon(p)); }, py::arg("polygon"),
        "Area of a CCW convex polygon given as an (n, 2) array.");

    m.def("intersect", [](const Array& a, const Array& b) {
        const auto r = intersect(to_polygon(a), to_polygon(b));
        return py::make_tuple(from_polygon(r.polygon), flag_names(r.active_flags()));
    }, py::arg("p1"), py::arg("p2"),
        "Intersection polygon and the provenance flag of each of its vertices.");

    m.def("polygon_iou", [](const Array& a, const Array& b) { return iou(to_polygon(a), to_polygon(b)).value; },
        py::arg("p1"), py::arg("p2"));

    m.def("polygon_iou_grad", [](const Array& a, const Array& b, double grad) {
        const auto p1 = to_polygon(a), p2 = to_polygon(b);
        const auto [g1, g2] = iou_grad(p1, p2, grad, iou(p1, p2));
        return py::make_tuple(from_polygon(g1), from_polygon(g2));
    }, py::arg("p1"), py::arg("p2"), py::arg("grad") = 1.0,
        "Gradient of grad * IoU with respect to both vertex arrays.");

    m.def("box_to_polygon", [](const Array& b) { return from_polygon(box_to_polygon(to_box2(b))); }, py::arg("box"));

    m.def("box_iou_2d", [](const Array& a, const Array& b) { return box_iou_2d(to_box2(a), to_box2(b)).value; },
        py::arg("b1"), py::arg("b2"));

    m.def("box_iou_2d_grad", [](const Array& a, const Array& b, double grad) {
        const auto b1 = to_box2(a), b2 = to_box2(b);
        const auto [g1, g2] = box_iou_2d_grad(b1, b2, grad, box_iou_2d(b1, b2));
        return py::make_tuple(from_box(g1), from_box(g2));
    }, py::arg("b1"), py::arg("b2"), py::arg("grad") = 1.0);

    m.def("box_iou_3d", [](const Array& a, const Array& b) { return box_iou_3d(to_box3(a), to_box3(b)).value; },
        py::arg("b1"), py::arg("b2"));

    m.def("box_iou_3d_grad", [](const Array& a, const Array& b, double grad) {
        const auto b1 = to_box3(a), b2 = to_box3(b);
        const auto [g1, g2] = box_iou_3d_grad(b1, b2, grad, box_iou_3d(b1, b2));
        return py::make_tuple(from_box(g1), from_box(g2));
    }, py::arg("b1"), py::arg("b2"), py::arg("grad") = 1.0);

    m.def("batch_iou_2d", &batch<RotatedBox2d>, py::arg("boxes1"), py::arg("boxes2"),
        py::arg("mode") = "elementwise", py::arg("with_grad") = false, py::arg("upstream") = py::none(),
        py::arg("threads") = 0u,
        "IoU over (n, 5) box arrays. Returns values, or (values, grads1, grads2) when with_grad is set.");

    m.def("batch_iou_3d", &batch<Box3d>, py::arg("boxes1"), py::arg("boxes2"),
        py::arg("mode") = "elementwise", py::arg("with_grad") = false, py::arg("upstream") = py::none(),
        py::arg("threads") = 0u,
        "IoU over (n, 7) box arrays. Returns values, or (values, grads1, grads2) when with_grad is set.");
}
