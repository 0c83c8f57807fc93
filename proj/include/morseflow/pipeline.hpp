#pragma once

// Config ingestion and end-to-end orchestration: geometry, critical points,
// orbits, complexes, checks, report.

#include "morseflow/catalog.hpp"
#include "morseflow/critical_points.hpp"
#include "morseflow/errors.hpp"
#include "morseflow/flowlines.hpp"
#include "morseflow/loop_homology.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace morseflow {

inline constexpr int kSchemaVersion = 1;

struct ManifoldSpec {
    std::optional<CatalogTag> catalog;
    std::size_t ambient_dim = 0;
    std::vector<std::string> constraints;
    std::optional<std::vector<int>> reference_betti;
    std::optional<std::vector<std::pair<double, double>>> bounding_box;
};

struct LoopClassSpec {
    int upper = 0;
    int lower = 0;
    std::string cls;
};

struct SyntheticPoint {
    int id = 0;
    double value = 0.0;
    int index = 0;
};

// A level-graded complex given directly by its points and classes (for
// manifolds without a geometric presentation, e.g. cpn).
struct SyntheticComplex {
    CatalogTag ring;
    std::vector<SyntheticPoint> points;
    std::vector<LoopClassSpec> classes;
};

struct ObstructionQuery {
    int k = 0;
    std::vector<std::int64_t> delta;
    std::vector<std::int64_t> delta_prime;
};

struct RunConfig {
    std::string run_id = "run";
    std::uint64_t seed = 1;
    std::optional<ManifoldSpec> manifold;
    std::string function;
    SearchOptions search;
    FlowOptions flow;
    std::size_t resolution = 4096;
    std::size_t moduli_samples = 64;
    int degree_cap = kDefaultDegreeCap;
    bool check_complex = true;
    bool check_duality = false;
    bool check_extended = false;
    std::optional<CatalogTag> ring;  // overrides the catalog ring for the extended complex
    std::vector<LoopClassSpec> loop_classes;
    std::optional<SyntheticComplex> synthetic;
    std::vector<ObstructionQuery> obstruction;
};

// Throws ConfigError with the offending key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// A stage failed with a library error; carries the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.kind(), "[" + stage + "] " + cause.kind() + ": " + cause.what()), stage_(std::move(stage))
    {
    }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PipelineResult {
    nlohmann::json report;
    bool passed = true;
    std::vector<ConnectingOrbit> orbits;  // for flow-line export
    std::size_t ambient_dim = 0;
};

// Runs every stage the config asks for. Check failures land in the report
// (passed = false); errors propagate as StageError.
PipelineResult run_pipeline(const RunConfig& config);

// Stem / Im(J) tables as JSON, for the `tables` verb.
nlohmann::json stem_tables_json();

}  // namespace morseflow
