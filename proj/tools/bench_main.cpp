// diffgeo-bench: time batched rotated-box IoU and print CSV records.
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "diffgeo/bench.hpp"

int main(int argc, char** argv)
{
    using namespace diffgeo;

    bench::BenchConfig config;
    std::string mode = "both";
    std::string output;

    CLI::App app{"Throughput of rotated-box IoU forward and backward passes"};
    app.add_option("--n-pairs", config.n_pairs, "Box pairs per batch")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--mode", mode, "forward, backward or both")->capture_default_str()
        ->check(CLI::IsMember({"forward", "backward", "both"}));
    app.add_option("--dims", config.dims, "2 for planar boxes, 3 for yaw-only boxes")->capture_default_str()
        ->check(CLI::IsMember({2, 3}));
    app.add_option("--seed", config.seed, "Seed of the pair generator")->capture_default_str();
    app.add_option("--repeats", config.repeats, "Timed runs per mode")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--threads", config.threads, "Worker threads, 0 = hardware concurrency")->capture_default_str();
    app.add_option("--output", output, "Also write the CSV to this file");

    CLI11_PARSE(app, argc, argv);

    try {
        config.mode = bench::parse_mode(mode);
        if (!output.empty())
            config.output_path = output;

        std::ofstream file;
        if (config.output_path) {
            file.open(*config.output_path);
            if (!file)
                throw Error(Errc::IoError, "cannot open " + config.output_path->string());
        }

        const auto records = bench::run_bench(config);
        bench::write_csv(std::cout, records);
        if (file) {
            bench::write_csv(file, records);
            file.close();
            if (!file)
                throw Error(Errc::IoError, "failed writing " + config.output_path->string());
        }
        for (const auto& r : records)
            std::cerr << "# " << bench::to_string(r.mode) << " value_checksum=" << std::setprecision(17)
                      << r.value_checksum << '\n';
    } catch (const std::exception& e) {
        std::cerr << "diffgeo-bench: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
