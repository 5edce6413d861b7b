#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "soh/forecast.hpp"
#include "soh/rng.hpp"

using namespace soh;

namespace {

std::vector<IntervalRecord> blank_records(std::size_t n) {
    std::vector<IntervalRecord> records(n);
    for (std::size_t i = 0; i < n; ++i) records[i].interval_index = static_cast<int>(i);
    return records;
}

DqPredictor constant_predictor(double dq) {
    return [dq](const IntervalRecord&) { return dq; };
}

}  // namespace

TEST_CASE("constant decline crosses 80% on schedule") {
    // -1 %/interval from 100%: the twentieth 12 h interval ends at 10 days.
    const auto records = blank_records(30);
    const auto fc = forecast_records(constant_predictor(-1.0), records, 100.0, 0.5);
    REQUIRE(fc.eol_days.has_value());
    CHECK(*fc.eol_days == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_FALSE(fc.eol_unreachable);
}

TEST_CASE("a flat forecast is flagged EoL-unreachable") {
    const auto records = blank_records(10);
    const auto fc = forecast_records(constant_predictor(0.0), records, 100.0, 0.5);
    CHECK(fc.eol_unreachable);
    CHECK_FALSE(fc.eol_days.has_value());
}

TEST_CASE("extrapolation continues past the recorded horizon") {
    // 10 intervals at -0.5%: ends at 95%; the remaining 15% takes 30 more
    // intervals at the tail rate.
    const auto records = blank_records(10);
    const auto fc = forecast_records(constant_predictor(-0.5), records, 100.0, 0.5);
    REQUIRE(fc.eol_days.has_value());
    CHECK(*fc.eol_days == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("trajectory reconstruction identity") {
    Rng rng(3);
    const auto records = blank_records(40);
    const auto fc = forecast_records(
        [&rng](const IntervalRecord&) { return rng.uniform(-0.8, 0.1); }, records, 100.0, 0.5);
    REQUIRE(fc.trajectory.size() == fc.predicted_dq.size() + 1);
    CHECK(fc.trajectory.front() == 100.0);
    double acc = 100.0;
    for (std::size_t i = 0; i < fc.predicted_dq.size(); ++i) {
        acc += fc.predicted_dq[i];
        CHECK(fc.trajectory[i + 1] == acc);
    }
}

TEST_CASE("a perfect forecast scores zero on all three metrics") {
    auto records = blank_records(20);
    Rng rng(4);
    for (auto& rec : records) rec.delta_q = rng.uniform(-1.2, -0.3);
    std::size_t next = 0;
    const auto fc = forecast_records(
        [&](const IntervalRecord&) { return records[next++].delta_q; }, records, 100.0, 0.5);
    REQUIRE(fc.eol_days.has_value());
    const auto m = score(fc, records, fc.eol_days);
    CHECK(m.rmse_dq == 0.0);
    CHECK(m.rmse_capacity == 0.0);
    REQUIRE(m.eol_error_pct.has_value());
    CHECK(*m.eol_error_pct == 0.0);
}

TEST_CASE("EoL error formula and sign convention") {
    auto records = blank_records(5);
    for (auto& rec : records) rec.delta_q = -1.0;
    const auto fc = forecast_records(constant_predictor(-1.0), records, 100.0, 0.5);

    // Early prediction (t = 27 against observed 30) is +10%.
    auto early = fc;
    early.eol_days = 27.0;
    auto m = score(early, records, 30.0);
    REQUIRE(m.eol_error_pct.has_value());
    CHECK(*m.eol_error_pct == doctest::Approx(10.0).epsilon(1e-12));

    // Late prediction flips the sign.
    auto late = fc;
    late.eol_days = 33.0;
    m = score(late, records, 30.0);
    CHECK(*m.eol_error_pct == doctest::Approx(-10.0).epsilon(1e-12));
}

TEST_CASE("censored cells omit the EoL term but keep the RMSE terms") {
    auto records = blank_records(8);
    for (auto& rec : records) rec.delta_q = -0.4;
    const auto fc = forecast_records(constant_predictor(-0.5), records, 100.0, 0.5);
    const auto m = score(fc, records, std::nullopt);
    CHECK_FALSE(m.eol_error_pct.has_value());
    CHECK(m.rmse_dq == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("constant transition bias accumulates in the capacity RMSE") {
    const std::size_t k = 10;
    auto records = blank_records(k);
    for (auto& rec : records) rec.delta_q = -0.5;
    const auto fc = forecast_records(constant_predictor(-0.4), records, 100.0, 0.5);
    const auto m = score(fc, records, std::nullopt);
    CHECK(m.rmse_dq == doctest::Approx(0.1).epsilon(1e-9));
    double sum_sq = 0.0;
    for (std::size_t i = 1; i <= k; ++i) sum_sq += (0.1 * double(i)) * (0.1 * double(i));
    CHECK(m.rmse_capacity == doctest::Approx(std::sqrt(sum_sq / double(k))).epsilon(1e-9));
}

TEST_CASE("capacity RMSE ignores a common shift of both trajectories") {
    auto records = blank_records(12);
    Rng rng(5);
    for (auto& rec : records) rec.delta_q = rng.uniform(-1.0, -0.2);
    const auto pred = [&rng](const IntervalRecord&) { return -0.6 + 0.01 * rng.normal(); };

    Rng rng_a(9);
    const auto fc_a = forecast_records(
        [&](const IntervalRecord&) { return -0.6 + 0.01 * rng_a.normal(); }, records, 100.0, 0.5);
    Rng rng_b(9);
    const auto fc_b = forecast_records(
        [&](const IntervalRecord&) { return -0.6 + 0.01 * rng_b.normal(); }, records, 93.0, 0.5);
    (void)pred;
    const auto m_a = score(fc_a, records, std::nullopt);
    const auto m_b = score(fc_b, records, std::nullopt);
    CHECK(m_a.rmse_capacity == doctest::Approx(m_b.rmse_capacity).epsilon(1e-12));
}

TEST_CASE("quantile uses linear interpolation between order statistics") {
    std::vector<double> values;
    for (int i = 1; i <= 100; ++i) values.push_back(double(i));
    CHECK(quantile(values, 0.5) == doctest::Approx(50.5).epsilon(1e-12));
    CHECK(quantile(values, 0.95) == doctest::Approx(95.05).epsilon(1e-12));
    CHECK(quantile(values, 0.0) == 1.0);
    CHECK(quantile(values, 1.0) == 100.0);
}

TEST_CASE("summaries of a single triple collapse to that triple") {
    MetricTriple t{0.3, 1.2, -4.0};
    const auto s = summarize({t});
    CHECK(s.median_rmse_dq == 0.3);
    CHECK(s.p95_rmse_dq == 0.3);
    CHECK(s.median_rmse_capacity == 1.2);
    CHECK(s.median_abs_eol_error == 4.0);
    CHECK(s.median_signed_eol_error == -4.0);
    CHECK(s.n_forecasts == 1);
    CHECK(s.n_eol_scored == 1);
}

TEST_CASE("summarize is permutation invariant") {
    Rng rng(6);
    std::vector<MetricTriple> triples;
    for (int i = 0; i < 40; ++i)
        triples.push_back({rng.uniform(0, 1), rng.uniform(0, 3),
                           rng.uniform() < 0.8
                               ? std::optional<double>(rng.uniform(-10, 10))
                               : std::nullopt});
    const auto base = summarize(triples);
    auto shuffled = triples;
    rng.shuffle(shuffled);
    const auto moved = summarize(shuffled);
    CHECK(base.median_rmse_dq == moved.median_rmse_dq);
    CHECK(base.p95_rmse_capacity == moved.p95_rmse_capacity);
    CHECK(base.median_abs_eol_error == moved.median_abs_eol_error);
    CHECK(base.p95_abs_eol_error == moved.p95_abs_eol_error);
    CHECK(base.n_eol_scored == moved.n_eol_scored);
}

TEST_CASE("median never exceeds the 95th percentile for nonnegative metrics") {
    Rng rng(7);
    std::vector<MetricTriple> triples;
    for (int i = 0; i < 60; ++i)
        triples.push_back({rng.uniform(0, 2), rng.uniform(0, 5), rng.uniform(-8, 8)});
    const auto s = summarize(triples);
    CHECK(s.median_rmse_dq <= s.p95_rmse_dq);
    CHECK(s.median_rmse_capacity <= s.p95_rmse_capacity);
    CHECK(s.median_abs_eol_error <= s.p95_abs_eol_error);
}
