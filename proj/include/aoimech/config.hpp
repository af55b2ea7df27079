#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aoimech/aoi_cost.hpp"
#include "aoimech/mech_multi.hpp"
#include "aoimech/numerics.hpp"

namespace aoimech {

using nlohmann::json;

inline AoiCostModel aoi_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw config_error("aoi: expected an object with a \"kind\"");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "power") {
        if (!j.contains("alpha")) throw config_error("aoi: power kind needs \"alpha\"");
        return AoiCostModel::power(j.at("alpha").get<double>());
    }
    if (kind == "tabulated") {
        if (!j.contains("points")) throw config_error("aoi: tabulated kind needs \"points\"");
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j.at("points"))
            pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return AoiCostModel::tabulated(std::move(pts));
    }
    throw config_error("aoi: unknown kind '" + kind + "'");
}

inline json aoi_to_json(const AoiCostModel& m) {
    json j;
    if (m.is_power()) {
        j["kind"] = "power";
        j["alpha"] = m.alpha();
    } else {
        j["kind"] = "tabulated";
    }
    return j;
}

inline CostDistribution dist_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw config_error("dist: expected an object with a \"kind\"");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "uniform")
        return CostDistribution::uniform(j.at("c_low").get<double>(),
                                         j.at("c_high").get<double>());
    if (kind == "trunc_exp")
        return CostDistribution::trunc_exp(j.at("mu").get<double>(), j.at("c_high").get<double>());
    if (kind == "tabulated") {
        if (!j.contains("cdf_points")) throw config_error("dist: tabulated kind needs \"cdf_points\"");
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j.at("cdf_points"))
            pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return CostDistribution::tabulated_cdf(std::move(pts));
    }
    throw config_error("dist: unknown kind '" + kind + "'");
}

// Everything a CLI run needs: the age model, the sources, and the knobs.
struct RunConfig {
    AoiCostModel aoi = AoiCostModel::power(1.0);
    std::vector<SourceSpec> sources;
    double delta_q = 1.0;
    std::uint64_t seed = 7;
    std::size_t mc_samples = std::size_t{1} << 16;
    int deviation_true_points = 200;
    int deviation_report_points = 400;
    double ic_tolerance = 1e-6;
    std::uint64_t config_hash = 0;

    SourceProfile profile() const { return SourceProfile(sources); }
};

inline RunConfig parse_run_config(const json& j) {
    RunConfig cfg;
    if (!j.is_object()) throw config_error("config: expected a JSON object");
    if (!j.contains("aoi")) throw config_error("config: missing \"aoi\"");
    cfg.aoi = aoi_from_json(j.at("aoi"));
    if (!j.contains("sources") || !j.at("sources").is_array() || j.at("sources").empty())
        throw config_error("config: need a non-empty \"sources\" array");
    for (const auto& s : j.at("sources")) {
        SourceSpec spec{dist_from_json(s.at("dist")), 1e9};
        if (s.contains("f_max")) spec.f_max = s.at("f_max").get<double>();
        if (!(spec.f_max >= 0.0)) throw config_error("config: f_max must be >= 0");
        cfg.sources.push_back(std::move(spec));
    }
    if (j.contains("delta_q")) cfg.delta_q = j.at("delta_q").get<double>();
    if (!(cfg.delta_q > 0.0)) throw config_error("config: delta_q must be positive");
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mc_samples")) cfg.mc_samples = j.at("mc_samples").get<std::size_t>();
    if (cfg.mc_samples == 0) throw config_error("config: mc_samples must be positive");
    if (j.contains("deviation_true_points"))
        cfg.deviation_true_points = j.at("deviation_true_points").get<int>();
    if (j.contains("deviation_report_points"))
        cfg.deviation_report_points = j.at("deviation_report_points").get<int>();
    if (cfg.deviation_true_points < 2 || cfg.deviation_report_points < 2)
        throw config_error("config: deviation grids need at least 2 points");
    if (j.contains("ic_tolerance")) cfg.ic_tolerance = j.at("ic_tolerance").get<double>();
    if (!(cfg.ic_tolerance > 0.0)) throw config_error("config: ic_tolerance must be positive");
    cfg.config_hash = fnv1a_hash(j.dump());
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in); // parse errors carry line/column diagnostics
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return parse_run_config(j);
}

} // namespace aoimech
