#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "parreg/errors.hpp"
#include "parreg/solver.hpp"
#include "parreg/verify.hpp"

namespace parreg {

/// Reports keep insertion order and contain no timestamps or addresses, so a
/// fixed config and seed serialize byte-identically.
using Json = nlohmann::ordered_json;

inline Json report_json(const std::string& job, const std::map<std::string, double>& params,
                        const std::vector<double>& ratios, bool pass, std::uint64_t seed,
                        const std::map<std::string, double>& metrics = {},
                        const std::vector<std::string>& notes = {}) {
    Json j;
    j["job"] = job;
    j["params"] = params;
    j["ratios"] = ratios;
    j["pass"] = pass;
    j["seed"] = seed;
    if (!metrics.empty()) j["metrics"] = metrics;
    if (!notes.empty()) j["notes"] = notes;
    return j;
}

inline bool solve_passed(const SolveReport& rep) {
    if (!(rep.residual <= rep.residual_tol || rep.residual == 0.0)) return false;
    for (const auto& [k, v] : rep.norms)
        if (!std::isfinite(v)) return false;
    for (const auto& iv : rep.intervals)
        if (!(iv.contraction <= 0.75 + 1e-12)) return false;
    return true;
}

/// Solve jobs report the per-interval contraction factors as their headline
/// ratio family; norms and budget constants land in metrics.
inline Json solve_report_json(const std::string& job, const SolveReport& rep,
                              const std::map<std::string, double>& params, std::uint64_t seed) {
    std::vector<double> contractions;
    std::map<std::string, double> metrics;
    for (const auto& iv : rep.intervals) contractions.push_back(iv.contraction);
    for (const auto& [k, v] : rep.norms) metrics["norm." + k] = v;
    for (const auto& [k, v] : rep.constants) metrics["constant." + k] = v;
    metrics["residual"] = rep.residual;
    metrics["residual_tol"] = rep.residual_tol;
    return report_json(job, params, contractions, solve_passed(rep), seed, metrics);
}

inline Json check_report_json(const std::string& job, const CheckReport& rep,
                              std::uint64_t seed) {
    return report_json(job, rep.params, rep.ratios, rep.pass, seed, rep.metrics, rep.notes);
}

inline Json gronwall_report_json(const std::string& job, const GronwallReport& rep,
                                 const std::map<std::string, double>& params,
                                 std::uint64_t seed) {
    std::map<std::string, double> metrics;
    metrics["C"] = rep.C;
    metrics["M"] = rep.M;
    metrics["envelope_norm"] = rep.envelope_norm;
    for (std::size_t i = 0; i < rep.lambdas.size(); ++i) {
        metrics["bound_l" + std::to_string(i)] = rep.bounds[i];
        metrics["ratio_l" + std::to_string(i)] = rep.ratios[i];
    }
    return report_json(job, params, rep.ratios, rep.pass, seed, metrics);
}

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write report file: " + path);
    out << j.dump(2) << '\n';
}

/// Long-format CSV rows (one parameter per row) for plot-ready output.
struct CsvTable {
    std::string header;
    std::vector<std::string> rows;

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write csv file: " + path);
        out << header << '\n';
        for (const auto& r : rows) out << r << '\n';
    }
};

inline std::string csv_double(double v) {
    Json j = v;  // shortest round-trip float formatting, matching the reports
    return j.dump();
}

/// Flattens one report into (job, parameter, value) rows.
inline void append_report_rows(CsvTable& t, const std::string& prefix, const Json& rep) {
    const std::string job = rep.at("job").get<std::string>();
    const auto add = [&](const std::string& param, double v) {
        t.rows.push_back(prefix + job + "," + param + "," + csv_double(v));
    };
    const auto& ratios = rep.at("ratios");
    for (std::size_t i = 0; i < ratios.size(); ++i)
        add("ratio" + std::to_string(i), ratios[i].get<double>());
    if (rep.contains("metrics"))
        for (const auto& [k, v] : rep.at("metrics").items()) add(k, v.get<double>());
    t.rows.push_back(prefix + job + ",pass," + (rep.at("pass").get<bool>() ? "1" : "0"));
}

} // namespace parreg
