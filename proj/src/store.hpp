#pragma once

// Persistence: numeric CSV tables, JSON files and sampler checkpoints.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sampler.hpp"

namespace smbbayes::store {

/// Column-major numeric table with a header row. Non-numeric cells are not
/// supported except "nan", "inf" and "-inf".
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
  /// Throws InvalidInput if absent.
  const std::vector<double>& column(std::string_view name) const;
  bool has(std::string_view name) const;
  void add(std::string name, std::vector<double> values);
};

/// Shortest representation that round-trips.
std::string format_double(double v);

void write_table(const std::string& path, const Table& table);
Table read_table(const std::string& path);

/// CSV with arbitrary string cells (no quoting; cells must not contain commas).
void write_rows(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

/// Writes to a temporary sibling and renames it into place.
void write_text(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

void ensure_directory(const std::string& path);
bool exists(const std::string& path);
std::string join(const std::string& dir, const std::string& name);

nlohmann::json checkpoint_to_json(const sampler::RunState& run);
sampler::RunState checkpoint_from_json(const nlohmann::json& j);

}  // namespace smbbayes::store
