/*
 * Data-parallel evaluation of box IoU over many pairs.
 *
 * Pairs are independent and each writes its own output slot, so results are
 * bit-identical to the serial operators for any worker count.
 */
#ifndef DIFFGEO_BATCH_HPP
#define DIFFGEO_BATCH_HPP

#include <algorithm>
#include <exception>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "diffgeo/boxes.hpp"
#include "diffgeo/core.hpp"

namespace diffgeo {

enum class BatchMode { Elementwise, Cartesian };

struct BatchOptions
{
    BatchMode mode = BatchMode::Elementwise;
    bool with_grad = false;
    unsigned threads = 0; // 0 picks hardware concurrency
};

template <typename Box> struct BatchResult
{
    // n values (elementwise) or rows x cols values row-major (cartesian)
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::optional<std::vector<Box>> grads1, grads2;
};

inline unsigned resolve_threads(unsigned requested)
{
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Calls body(begin, end) over contiguous chunks of [0, n) on up to `threads`
// workers. The first exception thrown by any worker is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body)
{
    const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        body(std::size_t(0), n);
        return;
    }

    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; w++) {
            const std::size_t begin = std::min(n, w * chunk), end = std::min(n, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    body(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace detail {

template <typename Scalar>
auto box_iou(const RotatedBox2<Scalar>& a, const RotatedBox2<Scalar>& b) { return box_iou_2d(a, b); }
template <typename Scalar>
auto box_iou(const Box3<Scalar>& a, const Box3<Scalar>& b) { return box_iou_3d(a, b); }

template <typename Scalar>
auto box_iou_grad(const RotatedBox2<Scalar>& a, const RotatedBox2<Scalar>& b, Scalar g, const BoxIouResult<Scalar>& f)
{
    return box_iou_2d_grad(a, b, g, f);
}
template <typename Scalar>
auto box_iou_grad(const Box3<Scalar>& a, const Box3<Scalar>& b, Scalar g, const BoxIouResult<Scalar>& f)
{
    return box_iou_3d_grad(a, b, g, f);
}

template <typename Box>
BatchResult<Box> batch_iou(std::span<const Box> boxes1, std::span<const Box> boxes2,
    const BatchOptions& options, std::span<const double> upstream)
{
    BatchResult<Box> result;

    if (options.mode == BatchMode::Cartesian) {
        if (options.with_grad)
            throw Error(Errc::GradUnsupportedInCartesian, "gradients are only available elementwise");
        const std::size_t n = boxes1.size(), m = boxes2.size();
        result.rows = n;
        result.cols = m;
        result.values.resize(n * m);
        parallel_for(n, options.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; i++)
                for (std::size_t j = 0; j < m; j++)
                    result.values[i * m + j] = box_iou(boxes1[i], boxes2[j]).value;
        });
        return result;
    }

    const std::size_t n = boxes1.size();
    if (boxes2.size() != n)
        throw Error(Errc::LengthMismatch, std::to_string(n) + " vs " + std::to_string(boxes2.size()) + " boxes");
    if (!upstream.empty() && upstream.size() != n)
        throw Error(Errc::LengthMismatch, "upstream gradient count differs from pair count");

    result.rows = n;
    result.cols = 1;
    result.values.resize(n);
    if (options.with_grad) {
        result.grads1.emplace(n);
        result.grads2.emplace(n);
    }

    parallel_for(n, options.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; k++) {
            const auto forward = box_iou(boxes1[k], boxes2[k]);
            result.values[k] = forward.value;
            if (options.with_grad) {
                const double g = upstream.empty() ? 1.0 : upstream[k];
                auto [g1, g2] = box_iou_grad(boxes1[k], boxes2[k], g, forward);
                (*result.grads1)[k] = g1;
                (*result.grads2)[k] = g2;
            }
        }
    });
    return result;
}

} // namespace detail

// upstream, when given, holds one cotangent per pair (default 1)
inline BatchResult<RotatedBox2d> batch_iou_2d(std::span<const RotatedBox2d> boxes1, std::span<const RotatedBox2d> boxes2,
    const BatchOptions& options = {}, std::span<const double> upstream = {})
{
    return detail::batch_iou<RotatedBox2d>(boxes1, boxes2, options, upstream);
}

inline BatchResult<Box3d> batch_iou_3d(std::span<const Box3d> boxes1, std::span<const Box3d> boxes2,
    const BatchOptions& options = {}, std::span<const double> upstream = {})
{
    return detail::batch_iou<Box3d>(boxes1, boxes2, options, upstream);
}

} // namespace diffgeo

#endif // DIFFGEO_BATCH_HPP
