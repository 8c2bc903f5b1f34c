#pragma once

// File formats shared by the subcommands. Numbers use the shortest round-trip
// representation so that repeat runs produce identical bytes.

#include "gsde/fpgrid.hpp"
#include "gsde/integrate.hpp"
#include "gsde/verifier.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace gsde {

/// Writes text to path, throwing Error on IO failure.
void write_file(const std::filesystem::path& path, const std::string& text);

/// '#'-prefixed "key = value" lines, then "name,residual,tolerance,pass" rows.
std::string format_report(const std::string& title, const std::vector<std::pair<std::string, std::string>>& meta,
                          const std::vector<CheckResult>& checks);

/// traj_id,step,time,x1..xd,E,S,exit_flag with exit_flag 0 on every row except
/// the last row of a trajectory that stopped early (1 left the bounds, 2 step error).
std::string format_trajectories(const EnsembleResult& result, int dim);

/// step,time,count,mean_E,var_E,mean_S,var_S
std::string format_summary(const EnsembleSummary& summary);

/// T,deviation,deviation_over_sqrtT
std::string format_sweep(const std::vector<SweepRow>& rows);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// A minimal SVG line chart with one polyline per series.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series);
/// A minimal SVG histogram.
std::string svg_histogram(const std::string& title, const std::vector<double>& values, int bins);

} // namespace gsde
