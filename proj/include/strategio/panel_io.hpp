#pragma once

#include "strategio/panel_model.hpp"

#include <string>

namespace strategio {

/// Long-format panel CSV: `unit_id,t,outcome,assigned_intervention`, t
/// 1-based, one row per (unit, t), assignment constant within a unit.
/// Units are ordered by first appearance. `k` <= 0 infers max assignment + 1.
PanelDataset ingest_csv(const std::string& path, int T0, int k = 0);
PanelDataset parse_csv(const std::string& text, int T0, int k = 0);

/// Floats written with 17 significant digits.
std::string format_csv(const PanelDataset& data);
void write_csv(const PanelDataset& data, const std::string& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace strategio
