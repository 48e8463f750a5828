#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "wfcast/features.hpp"

using namespace wfcast;

namespace {
ReturnSeries make_returns(std::vector<double> values) {
    ReturnSeries r;
    for (std::size_t i = 0; i < values.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "d%04zu", i);
        r.dates.emplace_back(buf);
    }
    r.returns = std::move(values);
    return r;
}

ReturnSeries random_returns(std::size_t n, std::uint64_t seed, double sd = 0.01) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return make_returns(std::move(v));
}
}  // namespace

TEST_CASE("make_lags shift-by-one definition") {
    const auto cols = make_lags(make_returns({1.0, 2.0, 3.0}), 1);
    REQUIRE(cols.size() == 1);
    CHECK(std::isnan(cols[0][0]));
    CHECK(cols[0][1] == 1.0);
    CHECK(cols[0][2] == 2.0);
}

TEST_CASE("make_lags rejects lag count >= length") {
    CHECK_THROWS_AS(make_lags(make_returns({1.0, 2.0}), 2), std::invalid_argument);
    CHECK_THROWS_AS(make_lags(make_returns({1.0, 2.0}), 0), std::invalid_argument);
}

TEST_CASE("rolling_std oracle values") {
    SUBCASE("constant input is zero wherever defined") {
        const std::vector<double> v(10, 0.37);
        const auto out = rolling_std(v, 4);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::isnan(out[i]));
        for (std::size_t i = 3; i < 10; ++i) CHECK(out[i] == 0.0);
    }
    SUBCASE("textbook sample std") {
        const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
        const auto out = rolling_std(v, 5);
        CHECK(out[4] == doctest::Approx(1.5811388300841898).epsilon(1e-12));
    }
    SUBCASE("window larger than series rejected") {
        CHECK_THROWS_AS(rolling_std(std::vector<double>{1.0, 2.0}, 3), std::invalid_argument);
    }
}

TEST_CASE("rolling_mean oracle values") {
    const std::vector<double> v{1.0, 3.0, 5.0};
    const auto out = rolling_mean(v, 2);
    CHECK(std::isnan(out[0]));
    CHECK(out[1] == 2.0);
    CHECK(out[2] == 4.0);

    const std::vector<double> c(6, 0.42);
    for (double x : rolling_mean(c, 3))
        if (!std::isnan(x)) CHECK(x == doctest::Approx(0.42));
}

TEST_CASE("rsi limits and symmetry") {
    SUBCASE("all gains approaches 100") {
        const std::vector<double> v(14, 0.01);
        const auto out = rsi(v, 14);
        CHECK(out[13] == doctest::Approx(100.0).epsilon(1e-3));
        CHECK(out[13] <= 100.0);
    }
    SUBCASE("all losses approaches 0") {
        const std::vector<double> v(14, -0.01);
        const auto out = rsi(v, 14);
        CHECK(out[13] == doctest::Approx(0.0).epsilon(1e-3));
        CHECK(out[13] >= 0.0);
    }
    SUBCASE("alternating gains/losses sits at 50") {
        std::vector<double> v(14);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2 == 0 ? 0.01 : -0.01;
        const auto out = rsi(v, 14);
        CHECK(out[13] == doctest::Approx(50.0).epsilon(1e-4));
    }
}

TEST_CASE("rsi stays within [0, 100] on random inputs") {
    for (std::uint64_t seed : {2ULL, 5ULL, 11ULL}) {
        const auto r = random_returns(300, seed, 0.05);
        for (double x : rsi(r.returns, 14)) {
            if (std::isnan(x)) continue;
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 100.0);
        }
    }
}

TEST_CASE("assemble_design_matrix layout and warm-up") {
    const auto returns = random_returns(200, 17);

    SUBCASE("column order and count") {
        FeatureSpec spec;
        spec.lag_count = 3;
        const auto d = assemble_design_matrix(returns, spec);
        REQUIRE(d.n_cols() == 3 + 4);
        CHECK(d.feature_names[0] == "lag_1");
        CHECK(d.feature_names[1] == "lag_2");
        CHECK(d.feature_names[2] == "lag_3");
        CHECK(d.feature_names[3] == "vol_5");
        CHECK(d.feature_names[4] == "vol_20");
        CHECK(d.feature_names[5] == "rsi_14");
        CHECK(d.feature_names[6] == "mean_10");
    }

    SUBCASE("row count equals returns minus warm-up") {
        for (int L : {10, 20, 30}) {
            FeatureSpec spec;
            spec.lag_count = L;
            const auto d = assemble_design_matrix(returns, spec);
            CHECK(d.n_cols() == static_cast<std::size_t>(L) + 4);
            CHECK(d.n_rows() == returns.size() - static_cast<std::size_t>(spec.warmup_rows()));
            CHECK(spec.warmup_rows() == std::max(L, 20));
        }
    }

    SUBCASE("L=30 drops at least the first 30 rows") {
        FeatureSpec spec;
        spec.lag_count = 30;
        const auto d = assemble_design_matrix(returns, spec);
        CHECK(d.n_rows() == returns.size() - 30);
        CHECK(d.row_dates.front() == returns.dates[30]);
    }

    SUBCASE("no missing cells in any surviving row") {
        FeatureSpec spec;
        spec.lag_count = 10;
        const auto d = assemble_design_matrix(returns, spec);
        for (const auto& row : d.rows)
            for (double v : row) REQUIRE(std::isfinite(v));
        for (double y : d.targets) REQUIRE(std::isfinite(y));
    }

    SUBCASE("lag and target values line up with the raw series") {
        FeatureSpec spec;
        spec.lag_count = 2;
        const auto d = assemble_design_matrix(returns, spec);
        const int warmup = spec.warmup_rows();
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            const std::size_t t = static_cast<std::size_t>(warmup) + i;
            CHECK(d.targets[i] == returns.returns[t]);
            CHECK(d.rows[i][0] == returns.returns[t - 1]);
            CHECK(d.rows[i][1] == returns.returns[t - 2]);
        }
    }
}

TEST_CASE("hand-shift oracle: L=2 over [1,2,3,4]-style series") {
    // Needs enough history for the indicators, so embed the pattern at the end.
    auto returns = random_returns(60, 23);
    const std::size_t n = returns.size();
    returns.returns[n - 4] = 1.0;
    returns.returns[n - 3] = 2.0;
    returns.returns[n - 2] = 3.0;
    returns.returns[n - 1] = 4.0;
    FeatureSpec spec;
    spec.lag_count = 2;
    const auto d = assemble_design_matrix(returns, spec);
    const auto& last = d.rows.back();
    CHECK(d.targets.back() == 4.0);
    CHECK(last[0] == 3.0);  // lag_1
    CHECK(last[1] == 2.0);  // lag_2
}

TEST_CASE("leakage: future values never reach earlier rows") {
    const auto base = random_returns(180, 31);
    FeatureSpec spec;
    spec.lag_count = 10;
    const auto before = assemble_design_matrix(base, spec);

    const std::size_t cut = 120;  // overwrite returns[cut..] with junk
    auto mutated = base;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> junk(5.0, 3.0);
    for (std::size_t t = cut; t < mutated.size(); ++t) mutated.returns[t] = junk(rng);
    const auto after = assemble_design_matrix(mutated, spec);

    const int warmup = spec.warmup_rows();
    for (std::size_t i = 0; i < before.n_rows(); ++i) {
        const std::size_t target_index = static_cast<std::size_t>(warmup) + i;
        if (target_index >= cut) break;
        REQUIRE(before.targets[i] == after.targets[i]);
        for (std::size_t c = 0; c < before.n_cols(); ++c)
            REQUIRE(before.rows[i][c] == after.rows[i][c]);
    }
}

TEST_CASE("indicator columns use only data before the target") {
    // Row t's vol_5 must equal the sample std of returns t-5..t-1.
    const auto returns = random_returns(100, 41);
    FeatureSpec spec;
    spec.lag_count = 1;
    const auto d = assemble_design_matrix(returns, spec);
    const int warmup = spec.warmup_rows();
    const std::size_t vol5_col = 1;
    for (std::size_t i = 0; i < 5; ++i) {
        const std::size_t t = static_cast<std::size_t>(warmup) + i;
        double mean = 0.0;
        for (std::size_t s = t - 5; s < t; ++s) mean += returns.returns[s];
        mean /= 5.0;
        double ss = 0.0;
        for (std::size_t s = t - 5; s < t; ++s) {
            const double dd = returns.returns[s] - mean;
            ss += dd * dd;
        }
        CHECK(d.rows[i][vol5_col] == doctest::Approx(std::sqrt(ss / 4.0)).epsilon(1e-12));
    }
}

TEST_CASE("assemble rejects series shorter than the warm-up") {
    FeatureSpec spec;
    spec.lag_count = 10;
    CHECK_THROWS_AS(assemble_design_matrix(random_returns(20, 3), spec), std::invalid_argument);
}
