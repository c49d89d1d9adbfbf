#include "strategio/panel_io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

namespace strategio {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void parse_error(std::size_t row, const std::string& what) {
  fail(ErrorCode::Parse, "row " + std::to_string(row) + ": " + what);
}

long long parse_int(std::string_view s, std::size_t row, const char* field) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    parse_error(row, std::string("invalid ") + field + " '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s, std::size_t row) {
  const std::string copy(s);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size() || !std::isfinite(v))
    parse_error(row, "invalid outcome '" + copy + "'");
  return v;
}

}  // namespace

PanelDataset parse_csv(const std::string& text, int T0, int k) {
  require(T0 >= 1, ErrorCode::InvalidArgument, "T0 must be >= 1");
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;

  struct UnitRows {
    std::string id;
    int assigned = -1;
    std::size_t first_row = 0;
    std::map<long long, double> values;
  };
  std::vector<UnitRows> units;
  std::map<std::string, std::size_t> index;
  bool header = false;

  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (!header) {
      if (fields.size() != 4 || fields[0] != "unit_id" || fields[1] != "t" || fields[2] != "outcome" ||
          fields[3] != "assigned_intervention")
        parse_error(row, "expected header unit_id,t,outcome,assigned_intervention");
      header = true;
      continue;
    }
    if (fields.size() != 4) parse_error(row, "expected 4 fields, got " + std::to_string(fields.size()));
    const std::string id(fields[0]);
    if (id.empty()) parse_error(row, "empty unit_id");
    const long long t = parse_int(fields[1], row, "t");
    const double y = parse_double(fields[2], row);
    const long long d = parse_int(fields[3], row, "assigned_intervention");
    if (t < 1) parse_error(row, "t must be >= 1 (unit " + id + ")");
    if (d < 0) parse_error(row, "negative assigned_intervention for unit " + id);

    auto [it, inserted] = index.emplace(id, units.size());
    if (inserted) units.push_back({id, static_cast<int>(d), row, {}});
    auto& u = units[it->second];
    if (u.assigned != d)
      parse_error(row, "unit " + id + " has assignment " + std::to_string(d) + " but earlier rows say " +
                           std::to_string(u.assigned));
    if (!u.values.emplace(t, y).second) parse_error(row, "duplicate t=" + std::to_string(t) + " for unit " + id);
  }
  require(header, ErrorCode::Parse, "missing header");
  require(!units.empty(), ErrorCode::Parse, "no data rows");

  long long T = 0;
  for (const auto& u : units) T = std::max(T, u.values.rbegin()->first);
  require(T > T0, ErrorCode::Parse,
          "horizon " + std::to_string(T) + " must exceed T0 = " + std::to_string(T0));

  int max_d = 0;
  for (const auto& u : units) max_d = std::max(max_d, u.assigned);
  PanelDataset data;
  data.k = k > 0 ? k : max_d + 1;
  require(max_d < data.k, ErrorCode::Parse, "assigned_intervention " + std::to_string(max_d) + " >= k");
  const int m = static_cast<int>(units.size());
  data.y_pre.resize(m, T0);
  data.y_post.resize(m, T - T0);
  data.assigned.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto& u = units[i];
    for (long long t = 1; t <= T; ++t) {
      auto it = u.values.find(t);
      if (it == u.values.end())
        parse_error(u.first_row, "unit " + u.id + " is missing t=" + std::to_string(t));
      if (t <= T0)
        data.y_pre(i, t - 1) = it->second;
      else
        data.y_post(i, t - T0 - 1) = it->second;
    }
    data.assigned[i] = u.assigned;
  }
  return data;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PanelDataset ingest_csv(const std::string& path, int T0, int k) { return parse_csv(read_file(path), T0, k); }

std::string format_csv(const PanelDataset& data) {
  require(static_cast<int>(data.assigned.size()) == data.units() && data.y_post.rows() == data.units(),
          ErrorCode::DimensionMismatch, "dataset rows are inconsistent");
  std::string out = "unit_id,t,outcome,assigned_intervention\n";
  char buf[64];
  const int T0 = data.T0(), T = T0 + data.post_length();
  for (int i = 0; i < data.units(); ++i)
    for (int t = 1; t <= T; ++t) {
      const double y = t <= T0 ? data.y_pre(i, t - 1) : data.y_post(i, t - T0 - 1);
      std::snprintf(buf, sizeof buf, "%.17g", y);
      out += std::to_string(i) + ',' + std::to_string(t) + ',' + buf + ',' + std::to_string(data.assigned[i]) + '\n';
    }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorCode::Io, "cannot rename into " + path + ": " + ec.message());
  }
}

void write_csv(const PanelDataset& data, const std::string& path) { write_file_atomic(path, format_csv(data)); }

}  // namespace strategio
