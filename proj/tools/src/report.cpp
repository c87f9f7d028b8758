#include "atloss_cli/report.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "atloss/error.hpp"
#include "atloss/format.hpp"
#include "atloss_cli/config.hpp"

namespace atloss::cli {

ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    throw ConfigError("unknown report format '" + std::string(s) + "' (expected csv or json)");
}

std::string_view extension(ReportFormat f) { return f == ReportFormat::csv ? "csv" : "json"; }

Cell cell(const metrics::MetricValue& v) {
    if (!v.defined()) return std::string("undefined");
    return v.value();
}

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw DimensionError("table row width does not match the header");
    rows_.push_back(std::move(row));
}

namespace {

std::string cell_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::string>) return v;
            else if constexpr (std::is_same_v<V, double>) return format_double(v);
            else if constexpr (std::is_same_v<V, bool>) return v ? "true" : "false";
            else return std::to_string(v);
        },
        c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
    return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, c);
}

} // namespace

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
        out += '\n';
    }
    return out;
}

std::string Table::to_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : rows_) {
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < row.size(); ++i) obj[columns_[i]] = cell_json(row[i]);
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

std::string Table::render(ReportFormat f) const { return f == ReportFormat::csv ? to_csv() : to_json(); }

std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& name, const Table& table,
                                  ReportFormat format) {
    const auto path = dir / (name + "." + std::string(extension(format)));
    write_file_atomic(path, table.render(format));
    return path;
}

std::string render_ppm(const FieldView& field, double theta, double peak) {
    std::string out = "P6\n" + std::to_string(field.width) + " " + std::to_string(field.height) + "\n255\n";
    out.reserve(out.size() + field.values.size() * 3);
    const double scale = peak > 0.0 ? 255.0 / peak : 0.0;
    for (double v : field.values) {
        const auto g = static_cast<unsigned char>(std::lround(std::clamp(v * scale, 0.0, 255.0)));
        if (v >= theta) {
            out += static_cast<char>(255);
            out += static_cast<char>(g / 3);
            out += static_cast<char>(g / 3);
        } else {
            out += static_cast<char>(g);
            out += static_cast<char>(g);
            out += static_cast<char>(g);
        }
    }
    return out;
}

} // namespace atloss::cli
