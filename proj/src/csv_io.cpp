#include "soh/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "soh/errors.hpp"

namespace soh {

namespace {

double parse_double(const std::string& field, std::size_t line) {
    double out = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("malformed numeric field '" + field + "'", line);
    return out;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void expect_header(const std::vector<std::string>& lines, const std::string& expected,
                   const std::string& path) {
    if (lines.empty() || lines.front() != expected)
        throw SchemaError("file " + path + ": expected header '" + expected + "'");
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::vector<CellSeries> ingest_csv(const std::string& samples_path,
                                   const std::string& capacities_path) {
    const auto sample_lines = read_lines(samples_path);
    expect_header(sample_lines, "cell_id,time_s,current_a,voltage_v,temperature_c", samples_path);
    const auto capacity_lines = read_lines(capacities_path);
    expect_header(capacity_lines, "cell_id,time_s,capacity_ah,nominal_ah", capacities_path);

    std::vector<CellSeries> cells;
    std::map<std::string, std::size_t> index_of;

    auto cell_for = [&](const std::string& id) -> CellSeries& {
        auto it = index_of.find(id);
        if (it == index_of.end()) {
            index_of.emplace(id, cells.size());
            cells.push_back(CellSeries{id, {}, {}, 0.0});
            return cells.back();
        }
        return cells[it->second];
    };

    for (std::size_t i = 1; i < sample_lines.size(); ++i) {
        if (sample_lines[i].empty()) continue;
        const auto fields = split_csv_line(sample_lines[i]);
        if (fields.size() != 5) throw ParseError("expected 5 fields in sample row", i + 1);
        RawSample s;
        s.time_s = parse_double(fields[1], i + 1);
        s.current_a = parse_double(fields[2], i + 1);
        s.voltage_v = parse_double(fields[3], i + 1);
        s.temperature_c = parse_double(fields[4], i + 1);
        cell_for(fields[0]).samples.push_back(s);
    }

    for (std::size_t i = 1; i < capacity_lines.size(); ++i) {
        if (capacity_lines[i].empty()) continue;
        const auto fields = split_csv_line(capacity_lines[i]);
        if (fields.size() != 4) throw ParseError("expected 4 fields in capacity row", i + 1);
        CellSeries& cell = cell_for(fields[0]);
        CapacityObservation obs;
        obs.time_s = parse_double(fields[1], i + 1);
        obs.capacity_ah = parse_double(fields[2], i + 1);
        cell.capacities.push_back(obs);
        const double nominal = parse_double(fields[3], i + 1);
        if (cell.nominal_ah == 0.0)
            cell.nominal_ah = nominal;
        else if (cell.nominal_ah != nominal)
            throw DataError("cell " + cell.cell_id + ": inconsistent nominal capacity");
    }

    for (const auto& cell : cells) {
        if (cell.capacities.empty() || cell.nominal_ah == 0.0)
            throw SchemaError("cell " + cell.cell_id + ": missing capacity data");
        cell.validate();
    }
    return cells;
}

void export_csv(const std::vector<CellSeries>& cells, const std::string& samples_path,
                const std::string& capacities_path) {
    std::ofstream samples(samples_path);
    if (!samples) throw Error("cannot write file: " + samples_path);
    samples << "cell_id,time_s,current_a,voltage_v,temperature_c\n";
    for (const auto& cell : cells) {
        for (const auto& s : cell.samples) {
            samples << cell.cell_id << ',' << format_double(s.time_s) << ','
                    << format_double(s.current_a) << ',' << format_double(s.voltage_v) << ','
                    << format_double(s.temperature_c) << '\n';
        }
    }

    std::ofstream caps(capacities_path);
    if (!caps) throw Error("cannot write file: " + capacities_path);
    caps << "cell_id,time_s,capacity_ah,nominal_ah\n";
    for (const auto& cell : cells) {
        for (const auto& o : cell.capacities) {
            caps << cell.cell_id << ',' << format_double(o.time_s) << ','
                 << format_double(o.capacity_ah) << ',' << format_double(cell.nominal_ah) << '\n';
        }
    }
}

}  // namespace soh
