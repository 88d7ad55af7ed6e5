#pragma once

#include <map>
#include <string>
#include <vector>

#include "depiabs/engine.hpp"

namespace depiabs {

inline constexpr int kConfigSchema = 1;

// Flat view of a "key = value" file. Keys under a [section] header are
// stored as "section.key"; keys under [model] or before any header are bare.
struct ConfigFile {
  int schema = kConfigSchema;
  std::map<std::string, std::string> values;
  std::map<std::string, std::size_t> lines;  // where each key was set

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key, double fallback) const;
  std::size_t get_count(const std::string& key, std::size_t fallback) const;
};

ConfigFile parse_config(const std::string& text);
ConfigFile load_config(const std::string& path);

// Model keys (bare, without a section) applied to params; unknown bare keys
// are configuration errors.
void apply_model_config(const ConfigFile& cfg, ModelParams& params);

// Splits a "key=value" override.
std::pair<std::string, std::string> split_override(const std::string& text);

struct CsvSpec {
  std::string date_column = "date";
  std::string value_column = "value";
  std::string region_column;  // optional
  std::string region;         // keep only rows of this region when set
  bool smooth = false;        // trailing 7-day moving average
};

struct EpidemicSeries {
  std::string region;
  std::vector<std::string> dates;  // ISO 8601, one per day
  std::vector<double> values;
  std::size_t filled = 0;  // days inserted by forward fill
};

// Dates must be strictly increasing; missing days are forward-filled.
EpidemicSeries parse_csv(const std::string& text, const CsvSpec& spec = {});
EpidemicSeries ingest_csv(const std::string& path, const CsvSpec& spec = {});

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Shortest round-trip decimal form of a double.
std::string format_number(double v);

std::string series_csv(const SimulationOutput& out);
std::string params_text(const ModelParams& params);

}  // namespace depiabs
