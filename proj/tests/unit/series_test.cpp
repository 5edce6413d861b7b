#include <cmath>

#include "doctest.h"
#include "soh/errors.hpp"
#include "soh/rng.hpp"
#include "soh/series.hpp"

using namespace soh;

namespace {

CellSeries cell_with_capacities(std::vector<CapacityObservation> obs, double nominal = 1.1) {
    CellSeries cell;
    cell.cell_id = "c0";
    cell.nominal_ah = nominal;
    cell.capacities = std::move(obs);
    return cell;
}

}  // namespace

TEST_CASE("true_eol interpolates the first 80% crossing") {
    const double day = kSecondsPerDay;
    // Threshold is 0.88 Ah: crossing sits 2/5 of the way through [10d, 20d].
    auto cell = cell_with_capacities({{0.0, 1.1}, {10 * day, 0.9}, {20 * day, 0.85}});
    CHECK(true_eol_days(cell) == doctest::Approx(14.0).epsilon(1e-9));
}

TEST_CASE("true_eol returns the observation time on an exact threshold hit") {
    const double day = kSecondsPerDay;
    auto cell = cell_with_capacities({{0.0, 1.0}, {5 * day, 0.8}}, 1.0);
    CHECK(true_eol_days(cell) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("true_eol throws for censored cells") {
    const double day = kSecondsPerDay;
    auto cell = cell_with_capacities({{0.0, 1.1}, {10 * day, 1.1}, {20 * day, 1.1}});
    CHECK(is_censored(cell));
    CHECK_THROWS_WITH_AS(true_eol_days(cell), doctest::Contains("censored cell"), DataError);
}

TEST_CASE("true_eol is monotone under uniform capacity drops") {
    Rng rng(71);
    const double day = kSecondsPerDay;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<CapacityObservation> obs;
        double q = 1.1;
        for (int i = 0; i <= 40; ++i) {
            obs.push_back({i * day, q});
            q -= rng.uniform(0.0, 0.02);
        }
        auto cell = cell_with_capacities(obs);
        if (is_censored(cell)) continue;
        const double base = true_eol_days(cell);

        const double eps = rng.uniform(0.001, 0.03);
        auto lowered = cell;
        for (auto& o : lowered.capacities) o.capacity_ah -= eps;
        if (lowered.capacities.back().capacity_ah <= 0.0) continue;
        CHECK(true_eol_days(lowered) <= base + 1e-12);
    }
}

TEST_CASE("capacity_at picks the nearest observation in time") {
    const double day = kSecondsPerDay;
    auto cell = cell_with_capacities({{0.0, 1.1}, {10 * day, 1.0}, {20 * day, 0.9}});
    CHECK(capacity_at(cell, 4.9 * day) == 1.1);
    CHECK(capacity_at(cell, 5.1 * day) == 1.0);
    CHECK(capacity_at(cell, 100 * day) == 0.9);
}

TEST_CASE("validate rejects broken series") {
    CellSeries cell;
    cell.cell_id = "bad";
    cell.nominal_ah = 1.1;
    cell.capacities = {{0.0, 1.1}, {100.0, 1.0}};
    cell.samples = {{0.0, 1.0, 3.0, 30.0}, {5.0, 1.0, 3.0, 30.0}, {3.0, 1.0, 3.0, 30.0}};
    CHECK_THROWS_WITH_AS(cell.validate(), doctest::Contains("non-monotonic"), DataError);

    cell.samples = {{0.0, 1.0, -3.0, 30.0}};
    CHECK_THROWS_AS(cell.validate(), DataError);  // negative voltage

    cell.samples.clear();
    cell.nominal_ah = 0.0;
    CHECK_THROWS_AS(cell.validate(), DataError);

    cell.nominal_ah = 1.1;
    cell.capacities = {{0.0, 1.1}};
    CHECK_THROWS_AS(cell.validate(), DataError);  // one observation
}

TEST_CASE("derived variables") {
    RawSample s{0.0, -2.0, 3.5, 31.0};
    CHECK(variable_value(s, Variable::current) == -2.0);
    CHECK(variable_value(s, Variable::voltage) == 3.5);
    CHECK(variable_value(s, Variable::temperature) == 31.0);
    CHECK(variable_value(s, Variable::power) == -7.0);
    CHECK(variable_value(s, Variable::abs_current) == 2.0);
    CHECK(variable_value(s, Variable::abs_power) == 7.0);
}
