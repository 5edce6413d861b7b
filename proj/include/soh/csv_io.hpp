#pragma once

#include <string>
#include <vector>

#include "soh/series.hpp"

namespace soh {

/// Reads a sample CSV (`cell_id,time_s,current_a,voltage_v,temperature_c`)
/// and its companion capacity CSV (`cell_id,time_s,capacity_ah,nominal_ah`)
/// into one validated CellSeries per distinct cell id, ordered by first
/// appearance in the sample file.
std::vector<CellSeries> ingest_csv(const std::string& samples_path,
                                   const std::string& capacities_path);

/// Writes the same two-file schema. Doubles are emitted in shortest
/// round-trip form, so ingest(export(cells)) reproduces the input exactly.
void export_csv(const std::vector<CellSeries>& cells, const std::string& samples_path,
                const std::string& capacities_path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace soh
