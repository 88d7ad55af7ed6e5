#include "depiabs/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "depiabs/errors.hpp"

namespace depiabs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    else if (ch == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else field += ch;
  }
  out.push_back(trim(field));
  return out;
}

std::chrono::sys_days parse_date(const std::string& s, std::size_t line) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(s);
  if (s.size() != 10 || !(in >> y >> dash1 >> m >> dash2 >> d) || dash1 != '-' || dash2 != '-')
    throw ParseError("invalid ISO date '" + s + "'", line);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw ParseError("invalid calendar date '" + s + "'", line);
  return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace

std::string ConfigFile::get(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ConfigFile::get_real(const std::string& key, double fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "' expects a number, got '" + it->second + "'");
  }
}

std::size_t ConfigFile::get_count(const std::string& key, std::size_t fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::size_t v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + s + "'");
  return v;
}

ConfigFile parse_config(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    // '#' starts a comment unless inside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", number);
      section = trim(line.substr(1, line.size() - 2));
      if (section == "model") section.clear();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", number);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", number);
    if (section.empty() && key == "schema") {
      try {
        cfg.schema = std::stoi(value);
      } catch (const std::logic_error&) {
        throw ParseError("schema must be an integer", number);
      }
      if (cfg.schema != kConfigSchema)
        throw ParseError("unsupported config schema " + value + " (expected " + std::to_string(kConfigSchema) + ")",
                         number);
      continue;
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values.count(full)) throw ParseError("duplicate key '" + full + "'", number);
    cfg.values[full] = value;
    cfg.lines[full] = number;
  }
  return cfg;
}

ConfigFile load_config(const std::string& path) { return parse_config(read_file(path)); }

void apply_model_config(const ConfigFile& cfg, ModelParams& params) {
  for (const auto& [key, value] : cfg.values) {
    if (key.find('.') != std::string::npos) continue;
    try {
      params.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (config line " + std::to_string(cfg.lines.at(key)) + ")");
    }
  }
}

std::pair<std::string, std::string> split_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' must look like key=value");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

EpidemicSeries parse_csv(const std::string& text, const CsvSpec& spec) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++number;
    if (!trim(line).empty()) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      header = split_row(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("missing header row", number);
  auto column = [&](const std::string& name) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (unquote(header[i]) == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  };
  const auto date_col = column(spec.date_column), value_col = column(spec.value_column);
  if (date_col < 0) throw ParseError("no '" + spec.date_column + "' column in header", number);
  if (value_col < 0) throw ParseError("no '" + spec.value_column + "' column in header", number);
  std::ptrdiff_t region_col = -1;
  if (!spec.region_column.empty()) {
    region_col = column(spec.region_column);
    if (region_col < 0) throw ParseError("no '" + spec.region_column + "' column in header", number);
  }

  EpidemicSeries series;
  series.region = spec.region;
  std::optional<std::chrono::sys_days> last;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto fields = split_row(line);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                       number);
    if (region_col >= 0) {
      const std::string region = unquote(fields[region_col]);
      if (!spec.region.empty() && region != spec.region) continue;
      if (series.region.empty()) series.region = region;
    }
    const auto day = parse_date(unquote(fields[date_col]), number);
    const std::string raw = unquote(fields[value_col]);
    double value = 0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (raw.empty() || ec != std::errc() || ptr != raw.data() + raw.size() || !std::isfinite(value))
      throw ParseError("invalid value '" + raw + "'", number);
    if (value < 0) throw ParseError("negative value " + raw, number);
    if (last) {
      if (day <= *last) throw ParseError("dates must be strictly increasing (" + format_date(day) + ")", number);
      for (auto gap = *last + std::chrono::days{1}; gap < day; gap += std::chrono::days{1}) {
        series.dates.push_back(format_date(gap));
        series.values.push_back(series.values.back());
        ++series.filled;
      }
    }
    series.dates.push_back(format_date(day));
    series.values.push_back(value);
    last = day;
  }
  if (series.values.empty()) throw ParseError("series has no data rows", number);
  if (spec.smooth) {
    std::vector<double> smoothed(series.values.size());
    double window = 0;
    for (std::size_t i = 0; i < series.values.size(); ++i) {
      window += series.values[i];
      if (i >= 7) window -= series.values[i - 7];
      smoothed[i] = window / static_cast<double>(std::min<std::size_t>(i + 1, 7));
    }
    series.values = std::move(smoothed);
  }
  return series;
}

EpidemicSeries ingest_csv(const std::string& path, const CsvSpec& spec) { return parse_csv(read_file(path), spec); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string series_csv(const SimulationOutput& out) {
  std::ostringstream os;
  os << "day";
  for (std::size_t k = 0; k < kObservableCount; ++k) os << ',' << observable_name(static_cast<Observable>(k));
  os << '\n';
  for (std::size_t t = 0; t < out.days; ++t) {
    os << t + 1;
    for (std::size_t k = 0; k < kObservableCount; ++k) os << ',' << format_number(out.columns[k][t]);
    os << '\n';
  }
  return os.str();
}

std::string params_text(const ModelParams& params) {
  std::ostringstream os;
  os << "schema = " << kConfigSchema << '\n';
  for (const auto& key : ModelParams::keys()) os << key << " = " << params.get(key) << '\n';
  return os.str();
}

}  // namespace depiabs
