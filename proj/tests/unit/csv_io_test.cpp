#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "soh/csv_io.hpp"
#include "soh/errors.hpp"
#include "soh/rng.hpp"
#include "soh/synthetic.hpp"

using namespace soh;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("soh_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

}  // namespace

TEST_CASE("ingest preserves row counts per cell") {
    TempDir dir;
    std::string samples = "cell_id,time_s,current_a,voltage_v,temperature_c\n";
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 10; ++i)
            samples += "cell" + std::to_string(c) + "," + std::to_string(i * 100) + ",1.5,3.3,30\n";
    write_file(dir.file("s.csv"), samples);
    write_file(dir.file("q.csv"),
               "cell_id,time_s,capacity_ah,nominal_ah\n"
               "cell0,0,1.1,1.1\ncell0,900,1.05,1.1\n"
               "cell1,0,1.1,1.1\ncell1,900,1.04,1.1\n");

    const auto cells = ingest_csv(dir.file("s.csv"), dir.file("q.csv"));
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].samples.size() == 10);
    CHECK(cells[1].samples.size() == 10);
    CHECK(cells[0].cell_id == "cell0");
    CHECK(cells[0].nominal_ah == 1.1);
}

TEST_CASE("ingest rejects non-monotonic time naming the cell") {
    TempDir dir;
    write_file(dir.file("s.csv"),
               "cell_id,time_s,current_a,voltage_v,temperature_c\n"
               "a,0,1,3.3,30\na,5,1,3.3,30\na,3,1,3.3,30\n");
    write_file(dir.file("q.csv"),
               "cell_id,time_s,capacity_ah,nominal_ah\na,0,1.1,1.1\na,10,1.0,1.1\n");
    CHECK_THROWS_WITH_AS(ingest_csv(dir.file("s.csv"), dir.file("q.csv")),
                         doctest::Contains("non-monotonic"), DataError);
}

TEST_CASE("ingest rejects a missing capacity column as a schema error") {
    TempDir dir;
    write_file(dir.file("s.csv"),
               "cell_id,time_s,current_a,voltage_v,temperature_c\na,0,1,3.3,30\n");
    write_file(dir.file("q.csv"), "cell_id,time_s,nominal_ah\na,0,1.1\n");
    CHECK_THROWS_AS(ingest_csv(dir.file("s.csv"), dir.file("q.csv")), SchemaError);
}

TEST_CASE("ingest reports a parse error with the line number") {
    TempDir dir;
    write_file(dir.file("s.csv"),
               "cell_id,time_s,current_a,voltage_v,temperature_c\n"
               "a,0,1,3.3,30\na,oops,1,3.3,30\n");
    write_file(dir.file("q.csv"),
               "cell_id,time_s,capacity_ah,nominal_ah\na,0,1.1,1.1\na,10,1.0,1.1\n");
    try {
        ingest_csv(dir.file("s.csv"), dir.file("q.csv"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("export then ingest is lossless") {
    TempDir dir;
    SyntheticSpec spec;
    spec.n_cells = 3;
    spec.noise_std = 0.07;
    spec.rng_seed = 99;
    const auto fleet = generate_synthetic(spec);

    export_csv(fleet.cells, dir.file("s.csv"), dir.file("q.csv"));
    const auto round = ingest_csv(dir.file("s.csv"), dir.file("q.csv"));

    REQUIRE(round.size() == fleet.cells.size());
    for (std::size_t c = 0; c < round.size(); ++c) {
        CHECK(round[c].cell_id == fleet.cells[c].cell_id);
        CHECK(round[c].nominal_ah == fleet.cells[c].nominal_ah);
        REQUIRE(round[c].samples.size() == fleet.cells[c].samples.size());
        REQUIRE(round[c].capacities.size() == fleet.cells[c].capacities.size());
        for (std::size_t i = 0; i < round[c].samples.size(); ++i) {
            CHECK(round[c].samples[i].time_s == fleet.cells[c].samples[i].time_s);
            CHECK(round[c].samples[i].current_a == fleet.cells[c].samples[i].current_a);
            CHECK(round[c].samples[i].voltage_v == fleet.cells[c].samples[i].voltage_v);
            CHECK(round[c].samples[i].temperature_c == fleet.cells[c].samples[i].temperature_c);
        }
        for (std::size_t i = 0; i < round[c].capacities.size(); ++i) {
            CHECK(round[c].capacities[i].time_s == fleet.cells[c].capacities[i].time_s);
            CHECK(round[c].capacities[i].capacity_ah == fleet.cells[c].capacities[i].capacity_ah);
        }
    }
}

TEST_CASE("format_double round-trips awkward values") {
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-8.0, 8.0));
        CHECK(std::stod(format_double(v)) == v);
    }
}
