#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "soh/errors.hpp"
#include "soh/rng.hpp"
#include "soh/select.hpp"

using namespace soh;

namespace {

/// Builds records with the given named columns; all other features stay 0.
std::vector<IntervalRecord> records_from_columns(
    const std::vector<std::pair<std::size_t, std::vector<double>>>& columns,
    const std::vector<double>& dq) {
    std::vector<IntervalRecord> records(dq.size());
    for (std::size_t i = 0; i < dq.size(); ++i) {
        records[i].cell_id = "c";
        records[i].interval_index = static_cast<int>(i);
        records[i].delta_q = dq[i];
        for (const auto& [feature, column] : columns) records[i].features[feature] = column[i];
    }
    return records;
}

/// Independent re-implementation of the greedy rule for cross-checking.
std::vector<std::size_t> greedy_oracle(const std::vector<std::vector<double>>& cols,
                                       const std::vector<double>& dq, std::size_t n_take,
                                       double rho_max) {
    const std::size_t n = cols.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(n);
    for (std::size_t f = 0; f < n; ++f) score[f] = std::abs(pearson(cols[f], dq));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<std::size_t> chosen;
    for (std::size_t cand : order) {
        if (chosen.size() == n_take) break;
        bool ok = true;
        for (std::size_t s : chosen)
            if (std::abs(pearson(cols[cand], cols[s])) > rho_max) ok = false;
        if (ok) chosen.push_back(cand);
    }
    return chosen;
}

}  // namespace

TEST_CASE("pearson on exact linear relations") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pearson({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pearson of a constant vector is zero") {
    CHECK(pearson({5, 5, 5, 5}, {1, 2, 3, 4}) == 0.0);
    CHECK(pearson({1, 2, 3, 4}, {7, 7, 7, 7}) == 0.0);
}

TEST_CASE("pearson rejects bad inputs") {
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), Error);
    CHECK_THROWS_AS(pearson({1}, {1}), Error);
}

TEST_CASE("rho_max = 1 reduces to top-k by absolute correlation") {
    Rng rng(12);
    const std::size_t n = 120;
    std::vector<double> dq(n);
    for (auto& v : dq) v = rng.normal();
    std::vector<std::pair<std::size_t, std::vector<double>>> cols;
    for (std::size_t f = 0; f < 10; ++f) {
        std::vector<double> col(n);
        const double weight = rng.uniform(0.0, 2.0);
        for (std::size_t i = 0; i < n; ++i) col[i] = weight * dq[i] + rng.normal();
        cols.emplace_back(f, col);
    }
    const auto records = records_from_columns(cols, dq);
    const auto result = select_features(records, {4, 1.0});

    std::vector<double> abs_rho(kFeatureCount, 0.0);
    for (std::size_t f = 0; f < 10; ++f)
        abs_rho[f] = std::abs(pearson(cols[f].second, dq));
    std::vector<std::size_t> order(kFeatureCount);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return abs_rho[a] > abs_rho[b]; });
    for (std::size_t i = 0; i < 4; ++i) CHECK(result.ids[i] == order[i]);
}

TEST_CASE("duplicate features are never both selected below rho_max 1") {
    Rng rng(13);
    const std::size_t n = 60;
    std::vector<double> dq(n), col(n);
    for (std::size_t i = 0; i < n; ++i) {
        dq[i] = rng.normal();
        col[i] = dq[i] + 0.2 * rng.normal();
    }
    std::vector<double> weak(n);
    for (auto& v : weak) v = rng.normal();
    const auto records = records_from_columns({{0, col}, {1, col}, {2, weak}}, dq);
    const auto result = select_features(records, {2, 0.95});
    REQUIRE(result.ids.size() == 2);
    CHECK(result.ids[0] == 0);   // ties break on catalog order
    CHECK(result.ids[1] == 2);   // the duplicate was skipped
    REQUIRE(!result.skipped.empty());
    CHECK(result.skipped[0].candidate == 1);
    CHECK(result.skipped[0].blocked_by == 0);
}

TEST_CASE("greedy walk matches an independent oracle") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 80;
        std::vector<double> dq(n);
        for (auto& v : dq) v = rng.normal();
        std::vector<std::vector<double>> cols(5, std::vector<double>(n));
        for (auto& col : cols) {
            const double w_dq = rng.uniform(-1.5, 1.5);
            const double mix = rng.uniform();
            for (std::size_t i = 0; i < n; ++i)
                col[i] = w_dq * dq[i] + mix * rng.normal() + (1 - mix) * std::sin(double(i));
        }
        std::vector<std::pair<std::size_t, std::vector<double>>> named;
        for (std::size_t f = 0; f < cols.size(); ++f) named.emplace_back(f, cols[f]);
        const auto records = records_from_columns(named, dq);
        const double rho_max = rng.uniform(0.5, 1.0);

        const auto result = select_features(records, {3, rho_max});
        const auto expect = greedy_oracle(cols, dq, 3, rho_max);
        REQUIRE(result.ids.size() >= expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) CHECK(result.ids[i] == expect[i]);

        for (std::size_t a = 0; a < result.ids.size(); ++a)
            for (std::size_t b = a + 1; b < result.ids.size(); ++b)
                CHECK(std::abs(result.rho(result.ids[a], result.ids[b])) <= rho_max + 1e-12);
    }
}

TEST_CASE("selection order is invariant under affine feature rescaling") {
    Rng rng(5);
    const std::size_t n = 100;
    std::vector<double> dq(n);
    for (auto& v : dq) v = rng.normal();
    std::vector<std::pair<std::size_t, std::vector<double>>> cols;
    for (std::size_t f = 0; f < 6; ++f) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i)
            col[i] = rng.uniform(-1, 1) + 0.4 * double(f) * dq[i] + rng.normal();
        cols.emplace_back(f, col);
    }
    const auto base = select_features(records_from_columns(cols, dq), {3, 0.9});

    auto scaled = cols;
    for (auto& [id, col] : scaled)
        for (auto& v : col) v = -3.0 * v + 7.0;
    const auto flipped = select_features(records_from_columns(scaled, dq), {3, 0.9});
    CHECK(base.ids == flipped.ids);
}

TEST_CASE("truncated selection sets the warning flag") {
    Rng rng(6);
    const std::size_t n = 50;
    std::vector<double> dq(n), col(n);
    for (std::size_t i = 0; i < n; ++i) {
        dq[i] = rng.normal();
        col[i] = dq[i];
    }
    // Every one of the 74 features is the same column: only one survives any
    // rho_max < 1.
    std::vector<std::pair<std::size_t, std::vector<double>>> clones;
    for (std::size_t f = 0; f < kFeatureCount; ++f) clones.emplace_back(f, col);
    const auto records = records_from_columns(clones, dq);
    const auto result = select_features(records, {3, 0.9});
    CHECK(result.truncated);
    CHECK(result.ids.size() == 1);
}

TEST_CASE("selection is deterministic") {
    Rng rng(7);
    const std::size_t n = 70;
    std::vector<double> dq(n);
    for (auto& v : dq) v = rng.normal();
    std::vector<std::pair<std::size_t, std::vector<double>>> cols;
    for (std::size_t f = 0; f < 8; ++f) {
        std::vector<double> col(n);
        for (auto& v : col) v = rng.normal();
        cols.emplace_back(f, col);
    }
    const auto records = records_from_columns(cols, dq);
    const auto a = select_features(records, {5, 0.85});
    const auto b = select_features(records, {5, 0.85});
    CHECK(a.ids == b.ids);
    CHECK(a.rho_dq == b.rho_dq);
}
