#pragma once
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core/analysis.hpp"

namespace radshoot {

// Flat key = value text, order preserved, repeated key prefixes allowed
// (row.01, row.02, ...).
struct Manifest {
    std::string id;
    std::vector<std::pair<std::string, std::string>> entries;

    std::string get(const std::string& key, const std::string& fallback = "") const;
    bool has(const std::string& key) const;
    // All entries whose key starts with the prefix, in file order.
    std::vector<std::pair<std::string, std::string>> with_prefix(const std::string& prefix) const;
};

Manifest parse_manifest(const std::string& text);
Manifest load_manifest(const std::string& path);

// The committed manifest text for a known experiment id; throws on unknown id.
std::string default_manifest_text(const std::string& id);
const std::vector<std::string>& experiment_ids();

// Space-separated k=v tokens of a row value.
std::map<std::string, std::string> parse_row_tokens(const std::string& value);

enum class RowStatus { Pass, Warn, Fail };
const char* to_string(RowStatus s);

struct ExperimentRow {
    std::string label;
    double expected = 0.0;
    double computed = 0.0;
    double rel_error = 0.0;
    double rel_tol = 0.0;
    std::string provenance;
    RowStatus status = RowStatus::Pass;
    std::string note;
};

struct ExperimentReport {
    std::string id;
    std::vector<ExperimentRow> rows;
    bool passed = false;  // true only when every row passes outright
    std::string summary;
    std::vector<std::string> artifacts;  // paths written under out_dir
};

// Gamma-table reproduction: shoot each manifest row, compare gamma* against
// the expected value; misses within 2x the row tolerance are warnings,
// beyond are failures.
ExperimentReport exp_table(const Manifest& m, const std::string& out_dir);

// Higher stationary indices at one parameter set: shoot n = 1, 2, 3, compare
// each gamma*, and emit solution trajectories plus fixed-gamma traces for
// plotting.
ExperimentReport exp_oscillations(const Manifest& m, const std::string& out_dir);

// Sweep p at fixed gamma, count stationary points inside the observation
// window, and estimate the threshold above which the later ones disappear.
ExperimentReport exp_pbar(const Manifest& m, const std::string& out_dir);

// Non-power nonlinearities: shoot each case, verify monotone solutions, and
// cross-check the power case through both construction pathways.
ExperimentReport exp_general(const Manifest& m, const std::string& out_dir);

// Dispatch by manifest id.
ExperimentReport run_experiment(const Manifest& m, const std::string& out_dir);

void write_experiment_csv(const ExperimentReport& report, const std::string& path);
void write_experiment_json(const ExperimentReport& report, const std::string& path);
std::string experiment_summary_text(const ExperimentReport& report);

}  // namespace radshoot
