#pragma once
/*
================================================================================
 report.hpp — structured run reports
--------------------------------------------------------------------------------
 Reports are built as an ordered key/value tree and rendered either as
 indented "key: value" text (default, human-first but machine-parseable) or
 as the JSON tree itself.
================================================================================
*/
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace apmag {

using Report = nlohmann::ordered_json;

enum class ReportFormat { text, json_tree };

inline ReportFormat report_format_from_string(const std::string& s) {
    if (s == "text") return ReportFormat::text;
    if (s == "json-like-tree" || s == "json") return ReportFormat::json_tree;
    throw std::invalid_argument("unknown report format: " + s);
}

namespace detail {

inline std::string scalar_to_string(const Report& node) {
    if (node.is_string()) return node.get<std::string>();
    if (node.is_number_float()) {
        std::ostringstream os;
        os << std::setprecision(9) << node.get<double>();
        return os.str();
    }
    return node.dump();
}

inline void render_text_node(std::ostream& os, const Report& node, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    if (node.is_object()) {
        for (const auto& [key, value] : node.items()) {
            if (value.is_object() || value.is_array()) {
                os << pad << key << ":\n";
                render_text_node(os, value, depth + 1);
            } else {
                os << pad << key << ": " << scalar_to_string(value) << '\n';
            }
        }
    } else if (node.is_array()) {
        std::size_t i = 0;
        for (const auto& value : node) {
            if (value.is_object() || value.is_array()) {
                os << pad << "- [" << i << "]\n";
                render_text_node(os, value, depth + 1);
            } else {
                os << pad << "- " << scalar_to_string(value) << '\n';
            }
            ++i;
        }
    } else {
        os << pad << scalar_to_string(node) << '\n';
    }
}

} // namespace detail

inline void write_report(std::ostream& os, const Report& report,
                         ReportFormat format = ReportFormat::text) {
    if (format == ReportFormat::json_tree) {
        os << report.dump(2) << '\n';
        return;
    }
    detail::render_text_node(os, report, 0);
}

inline std::string render_report(const Report& report,
                                 ReportFormat format = ReportFormat::text) {
    std::ostringstream os;
    write_report(os, report, format);
    return os.str();
}

} // namespace apmag
