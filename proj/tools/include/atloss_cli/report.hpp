#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "atloss/grid_field.hpp"
#include "atloss/metrics.hpp"

namespace atloss::cli {

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(std::string_view s);
std::string_view extension(ReportFormat f);

using Cell = std::variant<std::string, double, std::int64_t, std::uint64_t, bool>;

Cell cell(const metrics::MetricValue& v);

/// A rectangular result table; doubles are written round-trippable.
class Table {
public:
    explicit Table(std::vector<std::string> columns);

    void add_row(std::vector<Cell> row);
    [[nodiscard]] const std::vector<std::string>& columns() const noexcept { return columns_; }
    [[nodiscard]] const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

    [[nodiscard]] std::string to_csv() const;
    /// Array of objects keyed by column name.
    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] std::string render(ReportFormat f) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

/// Writes `dir/name.<ext>` atomically and returns the path.
std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& name, const Table& table,
                                  ReportFormat format);

/// Binary PPM: intensity in grey scaled to `peak`, cells >= theta tinted red.
std::string render_ppm(const FieldView& field, double theta, double peak);

} // namespace atloss::cli
