#pragma once

#include "cocycle_lab/io.hpp"
#include "cocycle_lab/perturbation.hpp"

namespace cocycle_lab {

struct ParseError : Error {
    ParseError(const std::string& file, long line, const std::string& msg)
        : Error(file + ":" + std::to_string(line) + ": " + msg), line_number(line) {}
    long line_number;
};

struct ScenarioOptions {
    std::uint64_t seed = 1;
    double tol = 1e-9;
    std::string out_dir = ".";
    enum class Format { text, machine } format = Format::text;
};

struct TaskOutcome {
    std::string name;
    bool pass = false;
    std::string detail;  // failure payload or one-line summary
    std::vector<std::pair<std::string, std::string>> fields;
};

struct ScenarioResult {
    int exit_code = 0;  // 0: all assertions pass, 1: a task failed
    std::vector<TaskOutcome> tasks;
    std::string report_path;
    std::string trace_path;  // spectrum convergence CSV, empty if no spectrum ran
};

/// Parses and executes a scenario file (sections: system, cocycle, measure,
/// tasks), writes the report (text or JSON) plus a CSV trace of spectrum
/// convergence, and returns the outcome per task.  Throws ParseError with a
/// line number on malformed input.
ScenarioResult run_scenario(const std::string& path, const ScenarioOptions& options);

}  // namespace cocycle_lab
