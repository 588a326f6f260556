#include "mmvb/runner/grid.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmvb/core/error.hpp"

namespace mmvb::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MeanStd {
    double mean = 0.0, sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

double metric_of(const json& report, const char* direction, const char* field) {
    return report.at(direction).at(field).get<double>();
}

}  // namespace

std::string format_mean_std(double mean, double sd, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f (%.*f)", decimals, mean, decimals, sd);
    return buf;
}

GridOutcome grid_search(const ExperimentConfig& cfg, const std::string& out_root) {
    cfg.validate();
    GridOutcome outcome;
    fs::create_directories(out_root);

    for (std::size_t axis_value : cfg.axis_values()) {
        GridCell cell;
        cell.axis_value = axis_value;
        cell.seeds = cfg.seeds;
        for (std::uint64_t seed : cfg.seeds) {
            const std::string run_dir =
                (fs::path(out_root) / run_dir_name(cfg, axis_value, seed)).string();
            try {
                RunLog log = train(cfg, axis_value, seed, run_dir);
                if (log.failed) {
                    cell.failures.push_back("seed " + std::to_string(seed) + ": " +
                                            log.failure);
                    continue;
                }
                EvaluateOptions opt;
                opt.per_dim_samples = cfg.traversal_per_dim;
                opt.traversal_lo = cfg.traversal_lo;
                opt.traversal_hi = cfg.traversal_hi;
                opt.importance_samples = cfg.eval_importance_samples;
                opt.max_samples = cfg.eval_samples;
                opt.eval_seed = seed;
                auto eval_result = evaluate_checkpoint(log.final_checkpoint,
                                                       cfg.dataset_dir, cfg.level, opt);
                json report = eval_result.to_json();
                report["seed"] = seed;
                report["axis_value"] = axis_value;
                std::ofstream out(fs::path(run_dir) / "eval_report.json", std::ios::trunc);
                out << report.dump(2) << "\n";
                cell.per_seed_reports.push_back(std::move(report));
            } catch (const std::exception& ex) {
                cell.failures.push_back("seed " + std::to_string(seed) + ": " + ex.what());
            }
        }
        outcome.cells.push_back(std::move(cell));
    }

    // summary: per-cell mean/std over seeds for the seven benchmark columns
    const std::pair<const char*, const char*> columns[] = {
        {"txt2img", "strict_pct"}, {"txt2img", "features_mean"},
        {"img2txt", "strict_pct"}, {"img2txt", "features_mean"},
        {"img2txt", "letters_pct"}, {"joint", "strict_pct"},
        {"joint", "features_mean"},
    };
    json cells_json = json::array();
    std::ostringstream table;
    table << "model level axis | Txt2Img Strict % | Txt2Img Features | Img2Txt Strict % | "
             "Img2Txt Features | Img2Txt Letters % | Joint Strict % | Joint Features\n";
    for (const auto& cell : outcome.cells) {
        json cj = {{"axis_value", cell.axis_value},
                   {"seeds", cell.seeds},
                   {"succeeded", cell.per_seed_reports.size()},
                   {"failures", cell.failures}};
        table << cfg.model << " L" << cfg.level << " " << cell.axis_value << " |";
        const std::size_t features_total =
            cdsprites::feature_count(cfg.level);
        for (const auto& [direction, field] : columns) {
            std::vector<double> values;
            for (const auto& r : cell.per_seed_reports) {
                if (r.at(direction).at(field).is_null()) continue;
                values.push_back(metric_of(r, direction, field));
            }
            const auto ms = mean_std(values);
            const std::string key = std::string(direction) + "." + field;
            cj["metrics"][key] = {{"mean", ms.mean}, {"sd", ms.sd}};
            std::string shown = format_mean_std(ms.mean, ms.sd);
            if (std::string(field) == "features_mean")
                shown += "/" + std::to_string(features_total);
            table << " " << (values.empty() ? "-" : shown) << " |";
        }
        table << "\n";
        cells_json.push_back(std::move(cj));
    }
    outcome.summary = {{"model", cfg.model},
                       {"level", cfg.level},
                       {"seeds", cfg.seeds},
                       {"cells", cells_json}};
    outcome.summary_table = table.str();

    std::ofstream sj(fs::path(out_root) / "summary.json", std::ios::trunc);
    sj << outcome.summary.dump(2) << "\n";
    std::ofstream st(fs::path(out_root) / "summary.txt", std::ios::trunc);
    st << outcome.summary_table;
    if (!sj || !st) throw io_error("cannot write grid summary under " + out_root);
    return outcome;
}

}  // namespace mmvb::runner
