// Throughput benchmark for batched rotated-box IoU, forward and backward.
#ifndef DIFFGEO_BENCH_HPP
#define DIFFGEO_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffgeo/core.hpp"

namespace diffgeo::bench {

enum class Mode { Forward, Backward, Both };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text); // throws Error(InvalidFlag)

struct BenchConfig
{
    std::size_t n_pairs = 100000;
    Mode mode = Mode::Both;
    int dims = 2;
    std::uint64_t seed = 42;
    int repeats = 5;
    unsigned threads = 0; // 0 = hardware concurrency
    std::optional<std::filesystem::path> output_path;
};

void validate(const BenchConfig& config); // throws Error(InvalidFlag)

template <typename Box> struct BoxPairs
{
    std::vector<Box> first, second;
};

// Centers uniform in [-10, 10] per axis, extents uniform in [0.5, 5], yaw
// uniform in [-pi, pi). The second box of each pair is re-centered within
// +-2 of the first so that a good share of pairs overlap.
BoxPairs<RotatedBox2d> generate_pairs_2d(std::size_t n, std::uint64_t seed);
BoxPairs<Box3d> generate_pairs_3d(std::size_t n, std::uint64_t seed);

struct BenchRecord
{
    std::size_t n_pairs = 0;
    int dims = 2;
    Mode mode = Mode::Forward; // Forward or Backward, never Both
    unsigned threads = 1;
    double repeat_best_s = 0;
    double repeat_mean_s = 0;
    double pairs_per_sec = 0;
    double value_checksum = 0; // sum of all IoU values, in pair order
};

// Warm up once, then time `repeats` batch calls per mode. Backward timings
// cover the full loss step (forward values plus gradients).
std::vector<BenchRecord> run_bench(const BenchConfig& config);

inline constexpr std::string_view csv_header = "n_pairs,dims,mode,threads,repeat_best_s,repeat_mean_s,pairs_per_sec";

std::string to_csv_row(const BenchRecord& record);
void write_csv(std::ostream& out, std::span<const BenchRecord> records);

} // namespace diffgeo::bench

#endif // DIFFGEO_BENCH_HPP
