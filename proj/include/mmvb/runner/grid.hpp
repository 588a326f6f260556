#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mmvb/runner/config.hpp"
#include "mmvb/runner/evaluate.hpp"
#include "mmvb/runner/train.hpp"

namespace mmvb::runner {

struct GridCell {
    std::size_t axis_value = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<nlohmann::json> per_seed_reports;  // eval reports of succeeded seeds
    std::vector<std::string> failures;             // messages of failed seeds
};

struct GridOutcome {
    std::vector<GridCell> cells;
    nlohmann::json summary;     // per-cell means and standard deviations over seeds
    std::string summary_table;  // text table, std in brackets
};

// Cartesian product of the grid axis and the seeds; every cell trains into its
// own directory under out_root, then evaluates its final checkpoint. A failed
// seed is recorded and the remaining runs continue. summary.json and
// summary.txt land in out_root.
GridOutcome grid_search(const ExperimentConfig& cfg, const std::string& out_root);

// "52.0 (3.1)" style cell with the standard deviation over seeds in brackets
std::string format_mean_std(double mean, double sd, int decimals = 1);

}  // namespace mmvb::runner
