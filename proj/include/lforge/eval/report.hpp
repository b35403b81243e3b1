#pragma once

// Report formats.
//   rows:       one CSV header line and one data line; rates in percent with
//               two decimals, tau at full precision, then protocol fields.
//   structured: JSON object with every field at full precision and the
//               protocol descriptor verbatim.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lforge/eval/protocol.hpp"

namespace lforge {

enum class ReportFormat { rows, structured };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "rows") return ReportFormat::rows;
    if (s == "structured") return ReportFormat::structured;
    throw ContractError("unknown report format '" + std::string(s) + "' (expected rows or structured)");
}

inline std::string percent(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * rate);
    return buf;
}

namespace report_detail {

inline std::string field(const nlohmann::json& protocol, const char* key) {
    if (!protocol.contains(key)) return "";
    const auto& v = protocol.at(key);
    return v.is_string() ? v.get<std::string>() : v.dump();
}

inline std::string csv_cell(std::string s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace report_detail

inline constexpr const char* kRowsHeader = "tau,far,frr,hter,acc,eer,protocol,train_corpus,eval_corpus,magnify,seed";

inline std::string format_rows(const MetricReport& r) {
    using report_detail::csv_cell;
    const nlohmann::json& p = r.protocol;
    const nlohmann::json cfg = p.contains("config") ? p.at("config") : nlohmann::json::object();
    char tau[32];
    std::snprintf(tau, sizeof tau, "%.17g", r.tau);
    std::string line = std::string(tau) + "," + percent(r.far) + "," + percent(r.frr) + "," + percent(r.hter) + "," +
                       percent(r.acc) + "," + percent(r.eer) + "," + csv_cell(report_detail::field(p, "kind")) + "," +
                       csv_cell(report_detail::field(p, "train_corpus")) + "," +
                       csv_cell(report_detail::field(p, "eval_corpus")) + "," + report_detail::field(cfg, "magnify") +
                       "," + report_detail::field(cfg, "seed");
    return std::string(kRowsHeader) + "\n" + line + "\n";
}

inline nlohmann::json to_json(const MetricReport& r) {
    return {{"tau", r.tau},   {"far", r.far}, {"frr", r.frr},           {"hter", r.hter},
            {"acc", r.acc},   {"eer", r.eer}, {"protocol", r.protocol}, {"decision_rule", kDecisionRule}};
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.tau = j.at("tau").get<double>();
    r.far = j.at("far").get<double>();
    r.frr = j.at("frr").get<double>();
    r.hter = j.at("hter").get<double>();
    r.acc = j.at("acc").get<double>();
    r.eer = j.at("eer").get<double>();
    r.protocol = j.at("protocol");
    return r;
}

inline std::string format_report(const MetricReport& r, ReportFormat f) {
    return f == ReportFormat::rows ? format_rows(r) : to_json(r).dump(2) + "\n";
}

inline void emit_report(const MetricReport& r, const std::filesystem::path& path, ReportFormat f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot open report '" + path.string() + "' for writing");
    out << format_report(r, f);
    if (!out) throw RuntimeError("write failed for report '" + path.string() + "'");
}

/// Plot-ready FAR/FRR sweep over the EER candidate thresholds.
inline std::string format_far_frr_table(const ScoreSet& s) {
    s.require_both_classes();
    std::string out = "tau,far,frr\n";
    char buf[96];
    for (double t : threshold_candidates(s)) {
        const ErrorRates r = far_frr(s, t);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", t, r.far, r.frr);
        out += buf;
    }
    return out;
}

}  // namespace lforge
