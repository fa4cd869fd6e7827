#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wtm/electric_graph.hpp"
#include "wtm/evs.hpp"
#include "wtm/orchestrator.hpp"
#include "wtm/waveform.hpp"

namespace wtm {

/// Everything a problem file describes.
struct Problem {
    OdeSystemd system;
    PartitionSpec<double> partition;
    RunConfigd config;
    /// Path as written on the `impedance samples` line, if any.
    std::optional<std::string> impedance_file;
};

/// Parses the line-oriented problem format. Relative impedance sample files
/// are resolved against `base_dir`.
Problem parse_problem(std::string_view text, const std::filesystem::path& base_dir = {});
Problem load_problem(const std::filesystem::path& path);

/// Inverse of parse_problem for everything it reads.
std::string write_problem(const Problem& problem);

/// The two-part RC example: C=3, G=1.5, b=3, x0=0, one boundary vertex
/// split 1/3 : 2/3, Z=1.5 on [0,1] with h=0.01,
/// tol 1e-9 and a 5000-sweep cap.
Problem demo_problem();

/// 17 significant digits, shortest form the C library produces.
std::string format_real(double value);

/// `t,<value_name>` header followed by one row per grid point.
std::string waveform_csv(const Waveformd& wf, std::string_view value_name = "value");

/// Reads a two-column `t,<name>` CSV (header required) into parallel vectors.
std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(std::string_view text);

/// Rebuilds a waveform from CSV text on the given grid; rows must lie on the grid.
Waveformd read_waveform_csv(std::string_view text, const TimeGridd& grid);

}  // namespace wtm
