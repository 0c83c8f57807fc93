#include "morseflow/errors.hpp"
#include "morseflow/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace morseflow;

namespace {

void print_summary(const PipelineResult& r)
{
    const auto& report = r.report;
    if (report.contains("critical_points")) std::cerr << "critical points: " << report["critical_points"].size() << "\n";
    if (report.contains("obstruction"))
        for (const auto& v : report["obstruction"])
            std::cerr << "obstruction k=" << v["k"].get<int>() << ": " << v["verdict"].get<std::string>() << "\n";
    for (const auto& c : report["checks"]) {
        std::cerr << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>();
        if (c.contains("detail")) std::cerr << " (" << c["detail"].get<std::string>() << ")";
        std::cerr << "\n";
    }
    std::cerr << (r.passed ? "all requested checks passed\n" : "some checks failed\n");
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"morseflow: Morse complexes, connecting orbits and smoothing obstructions"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool export_flowlines = false;

    auto* run = app.add_subcommand("run", "run the pipeline and write the report");
    run->add_option("config", config_path, "JSON config")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "directory for the report and exports (default: report to stdout)");
    run->add_flag("--export-flowlines", export_flowlines, "write connecting orbits as CSV polylines");

    auto* check = app.add_subcommand("check", "run the pipeline and print the report, without exports");
    check->add_option("config", config_path, "JSON config")->required();
    check->add_option("--seed", seed, "override the config seed");

    auto* tables = app.add_subcommand("tables", "print the stable stem and Im(J) tables");

    CLI11_PARSE(app, argc, argv);

    try {
        if (tables->parsed()) {
            std::cout << stem_tables_json().dump(2) << "\n";
            return 0;
        }
        auto config = load_config(config_path);
        if (seed) config.seed = *seed;
        const auto result = run_pipeline(config);
        const std::string text = result.report.dump(2) + "\n";
        print_summary(result);

        if (run->parsed() && !out_dir.empty()) {
            const std::filesystem::path dir(out_dir);
            std::filesystem::create_directories(dir);
            write_file(dir / (config.run_id + ".report.json"), text);
            if (export_flowlines) {
                std::ostringstream csv;
                write_flowlines_csv(csv, config.run_id, result.orbits, result.ambient_dim);
                write_file(dir / (config.run_id + ".flowlines.csv"), csv.str());
            }
        } else {
            if (export_flowlines) throw ConfigError("--export-flowlines needs --out");
            std::cout << text;
        }
        return result.passed ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 2;
    }
}
