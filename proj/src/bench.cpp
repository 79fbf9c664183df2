#include "diffgeo/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "diffgeo/batch.hpp"

namespace diffgeo::bench {

std::string_view to_string(Mode mode)
{
    switch (mode) {
    case Mode::Forward: return "forward";
    case Mode::Backward: return "backward";
    case Mode::Both: return "both";
    }
    return "?";
}

Mode parse_mode(std::string_view text)
{
    if (text == "forward") return Mode::Forward;
    if (text == "backward") return Mode::Backward;
    if (text == "both") return Mode::Both;
    throw Error(Errc::InvalidFlag, "mode must be forward, backward or both, got '" + std::string(text) + "'");
}

void validate(const BenchConfig& config)
{
    if (config.n_pairs < 1)
        throw Error(Errc::InvalidFlag, "n_pairs must be at least 1");
    if (config.repeats < 1)
        throw Error(Errc::InvalidFlag, "repeats must be at least 1");
    if (config.dims != 2 && config.dims != 3)
        throw Error(Errc::InvalidFlag, "dims must be 2 or 3");
}

namespace {

struct Sampler
{
    std::mt19937_64 rng;
    std::uniform_real_distribution<double> center{-10.0, 10.0};
    std::uniform_real_distribution<double> extent{0.5, 5.0};
    std::uniform_real_distribution<double> yaw{-std::numbers::pi, std::numbers::pi};
    std::uniform_real_distribution<double> jitter{-2.0, 2.0};

    explicit Sampler(std::uint64_t seed) : rng(seed) {}

    double operator()(std::uniform_real_distribution<double>& d) { return d(rng); }
};

} // namespace

BoxPairs<RotatedBox2d> generate_pairs_2d(std::size_t n, std::uint64_t seed)
{
    Sampler s(seed);
    BoxPairs<RotatedBox2d> pairs;
    pairs.first.reserve(n);
    pairs.second.reserve(n);
    for (std::size_t k = 0; k < n; k++) {
        RotatedBox2d a;
        a.cx = s(s.center);
        a.cy = s(s.center);
        a.w = s(s.extent);
        a.h = s(s.extent);
        a.theta = s(s.yaw);
        RotatedBox2d b;
        b.cx = a.cx + s(s.jitter);
        b.cy = a.cy + s(s.jitter);
        b.w = s(s.extent);
        b.h = s(s.extent);
        b.theta = s(s.yaw);
        pairs.first.push_back(a);
        pairs.second.push_back(b);
    }
    return pairs;
}

BoxPairs<Box3d> generate_pairs_3d(std::size_t n, std::uint64_t seed)
{
    Sampler s(seed);
    BoxPairs<Box3d> pairs;
    pairs.first.reserve(n);
    pairs.second.reserve(n);
    for (std::size_t k = 0; k < n; k++) {
        Box3d a;
        a.cx = s(s.center);
        a.cy = s(s.center);
        a.cz = s(s.center);
        a.w = s(s.extent);
        a.h = s(s.extent);
        a.d = s(s.extent);
        a.theta = s(s.yaw);
        Box3d b;
        b.cx = a.cx + s(s.jitter);
        b.cy = a.cy + s(s.jitter);
        b.cz = a.cz + s(s.jitter);
        b.w = s(s.extent);
        b.h = s(s.extent);
        b.d = s(s.extent);
        b.theta = s(s.yaw);
        pairs.first.push_back(a);
        pairs.second.push_back(b);
    }
    return pairs;
}

namespace {

template <typename Box, typename Batch>
std::vector<BenchRecord> time_modes(const BenchConfig& config, const BoxPairs<Box>& pairs, Batch batch)
{
    using clock = std::chrono::steady_clock;
    const unsigned threads = resolve_threads(config.threads);

    std::vector<Mode> modes;
    if (config.mode != Mode::Backward) modes.push_back(Mode::Forward);
    if (config.mode != Mode::Forward) modes.push_back(Mode::Backward);

    std::vector<BenchRecord> records;
    for (Mode mode : modes) {
        BatchOptions options;
        options.with_grad = mode == Mode::Backward;
        options.threads = threads;

        auto warmup = batch(pairs.first, pairs.second, options);
        double checksum = std::accumulate(warmup.values.begin(), warmup.values.end(), 0.0);

        double best = std::numeric_limits<double>::infinity(), total = 0;
        for (int r = 0; r < config.repeats; r++) {
            auto start = clock::now();
            auto result = batch(pairs.first, pairs.second, options);
            double elapsed = std::chrono::duration<double>(clock::now() - start).count();
            best = std::min(best, elapsed);
            total += elapsed;
            checksum = std::accumulate(result.values.begin(), result.values.end(), 0.0);
        }

        BenchRecord rec;
        rec.n_pairs = config.n_pairs;
        rec.dims = config.dims;
        rec.mode = mode;
        rec.threads = threads;
        rec.repeat_best_s = best;
        rec.repeat_mean_s = total / config.repeats;
        rec.pairs_per_sec = double(config.n_pairs) / best;
        rec.value_checksum = checksum;
        records.push_back(rec);
    }
    return records;
}

} // namespace

std::vector<BenchRecord> run_bench(const BenchConfig& config)
{
    validate(config);
    if (config.dims == 2) {
        auto pairs = generate_pairs_2d(config.n_pairs, config.seed);
        return time_modes(config, pairs, [](const auto& a, const auto& b, const BatchOptions& o) {
            return batch_iou_2d(a, b, o);
        });
    }
    auto pairs = generate_pairs_3d(config.n_pairs, config.seed);
    return time_modes(config, pairs, [](const auto& a, const auto& b, const BatchOptions& o) {
        return batch_iou_3d(a, b, o);
    });
}

std::string to_csv_row(const BenchRecord& r)
{
    std::ostringstream os;
    os.precision(9);
    os << r.n_pairs << ',' << r.dims << ',' << to_string(r.mode) << ',' << r.threads << ','
       << r.repeat_best_s << ',' << r.repeat_mean_s << ',' << r.pairs_per_sec;
    return os.str();
}

void write_csv(std::ostream& out, std::span<const BenchRecord> records)
{
    out << csv_header << '\n';
    for (const auto& r : records)
        out << to_csv_row(r) << '\n';
}

} // namespace diffgeo::bench
