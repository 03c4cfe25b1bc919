#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rml/experiments.hpp"
#include "rml/spectral.hpp"

using namespace rml;
using doctest::Approx;

namespace {

ExperimentConfig small(ExperimentId id, std::vector<int> n, std::size_t trials = 1000)
{
    ExperimentConfig c;
    c.id = id;
    c.n_list = std::move(n);
    c.trials = trials;
    c.master_seed = 42;
    c.workers = 1;
    return c;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        out.push_back(f);
    }
    return out;
}

}  // namespace

TEST_CASE("experiment names round trip")
{
    for (int i = 0; i <= int(ExperimentId::linear_relation_repulsion); ++i) {
        const auto id = ExperimentId(i);
        CHECK(experiment_from_name(experiment_name(id)) == id);
    }
    CHECK_THROWS(experiment_from_name("gap"));
    CHECK(bound_exponent(ExperimentId::gap_simplicity) == 1);
    CHECK(bound_exponent(ExperimentId::two_point_real) == 2);
    CHECK(bound_exponent(ExperimentId::two_point_complex) == 4);
}

TEST_CASE("config validation")
{
    auto c = small(ExperimentId::gap_simplicity, {20});
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.epsilon_grid = {0.1, 0.1};
    CHECK_THROWS(bad.validate());
    bad.epsilon_grid = {-0.1, 0.2};
    CHECK_THROWS(bad.validate());
    bad = c;
    bad.trials = 999;
    CHECK_THROWS(bad.validate());
    bad = c;
    bad.n_list = {1};
    CHECK_THROWS(bad.validate());
    bad = c;
    bad.shift_units = "furlongs";
    CHECK_THROWS(bad.validate());
    CHECK(c.effective_laws().size() == 2);
}

TEST_CASE("config json")
{
    const auto j = nlohmann::json::parse(R"({"experiment_id": "two_point_real", "n_list": [20, 30],
        "epsilon_grid": [0.2, 0.5], "shifts": [{"l1": 0, "l2": 1}, {"z1": [0, 1], "z2": 2}],
        "trials": 2000, "law": "rademacher", "master_seed": 7, "params": {"scaling": "unscaled"}})");
    const auto c = experiment_config_from_json(j);
    CHECK(c.id == ExperimentId::two_point_real);
    CHECK(c.n_list == std::vector<int>{20, 30});
    CHECK(c.shifts.size() == 2);
    CHECK(c.shifts[1].z1 == std::complex<double>(0, 1));
    CHECK(c.shifts[1].z2 == std::complex<double>(2, 0));
    CHECK(c.laws.size() == 1);
    CHECK(c.laws[0].name() == "rademacher");
    const auto back = experiment_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    auto w = c;
    w.workers = 8;
    CHECK(config_hash(w) == config_hash(c));
    w.master_seed = 8;
    CHECK(config_hash(w) != config_hash(c));
    auto extra = j;
    extra["trails"] = 5;
    CHECK_THROWS_WITH(experiment_config_from_json(extra), doctest::Contains("trails"));
    auto missing = j;
    missing.erase("experiment_id");
    CHECK_THROWS(experiment_config_from_json(missing));
}

TEST_CASE("csv headers are pinned")
{
    CHECK(rows_csv_header() ==
          "experiment,law,n,series,epsilon,k_hits,trials,p_hat,ci_low,ci_high,method,center_policy,ci_qualified,value");
    CHECK(spectral_csv_header() == "n_rows,n_cols,op_norm,sigma_min,min_gap_scaled,real_eig_count");
}

TEST_CASE("joint indicator examples")
{
    const RMat I = RMat::Identity(4, 4);
    const auto j = joint_indicator(I, 1.0, 0.0, 0.5, EpsScaling::unscaled);
    CHECK(j.first);
    CHECK_FALSE(j.second);
    CHECK_FALSE(j.both);
    // With n^{-1/2} scaling the cut is 0.25, still above sigma_min(0) = 0.
    CHECK(joint_indicator(I, 1.0, 0.0, 0.5, EpsScaling::n_inv_half).first);
    // sigma_min(I - 2I) = 1: inside the unscaled cut 1, outside the scaled cut 1/2.
    CHECK(joint_indicator(I, 2.0, 0.0, 1.0, EpsScaling::unscaled).first);
    CHECK_FALSE(joint_indicator(I, 2.0, 0.0, 1.0, EpsScaling::n_inv_half).first);
    Stream s(5, 5, 5);
    for (int t = 0; t < 50; ++t) {
        RMat A(20, 20);
        for (int i = 0; i < 20; ++i)
            for (int k = 0; k < 20; ++k) A(i, k) = s.normal();
        const double l1 = s.normal() * 2, l2 = s.normal() * 2, eps = 0.3;
        const auto same = joint_indicator(A, l1, l1, eps, EpsScaling::unscaled);
        CHECK(same.both == same.first);
        CHECK(same.second == same.first);
        const auto r = joint_indicator(A, l1, l2, eps, EpsScaling::unscaled);
        CHECK(r.first == (sigma_min_shifted(A, l1) <= eps));
        CHECK(r.second == (sigma_min_shifted(A, l2) <= eps));
        CHECK(r.both == (r.first && r.second));
    }
    CHECK_THROWS(joint_indicator(RMat::Zero(2, 3), 0, 0, 1, EpsScaling::unscaled));
}

TEST_CASE("reports are identical across worker counts")
{
    for (auto id : {ExperimentId::gap_simplicity, ExperimentId::two_point_real, ExperimentId::real_eig_count}) {
        auto c = small(id, {12});
        c.laws = {EntryLaw::rademacher()};
        std::string ref;
        for (int w : {1, 4, 8}) {
            c.workers = w;
            const auto csv = rows_csv(run(c));
            if (ref.empty()) ref = csv;
            CHECK(csv == ref);
        }
    }
}

TEST_CASE("joint rows never exceed their marginals")
{
    auto c = small(ExperimentId::two_point_real, {15}, 2000);
    c.shifts = {{0.0, 0.5}, {0.0, 1.0}};
    const auto rep = run(c);
    std::map<std::string, std::size_t> hits;
    for (const auto& r : rep.rows)
        if (r.estimate) hits[r.law + "|" + r.series + "|" + std::to_string(*r.epsilon)] = r.estimate->k_hits;
    int compared = 0;
    for (const auto& [key, k] : hits) {
        const auto p = key.find("|joint ");
        if (p == std::string::npos) continue;
        const auto rest = key.substr(p + 7);
        for (const char* m : {"|marginal1 ", "|marginal2 "}) {
            const auto other = key.substr(0, p) + m + rest;
            REQUIRE(hits.count(other));
            CHECK(k <= hits[other]);
            ++compared;
        }
    }
    CHECK(compared > 0);
    for (const auto& s : rep.stats["per_shift"]) CHECK(s["joint_le_marginals"].get<bool>());
}

TEST_CASE("real eigenvalue counts keep the parity of n")
{
    for (int n : {9, 10}) {
        auto c = small(ExperimentId::real_eig_count, {n});
        const auto rep = run(c);
        for (const auto& s : rep.stats["per_n"]) {
            CHECK(s["parity_fraction"].get<double>() == 1.0);
            CHECK(s["mean_by_rel_tol"].size() == 3);
        }
    }
}

TEST_CASE("every experiment runs at toy scale")
{
    struct Case {
        ExperimentId id;
        std::vector<int> n;
        nlohmann::json params;
    };
    const std::vector<Case> cases{
        {ExperimentId::gap_simplicity, {8}, nlohmann::json::object()},
        {ExperimentId::gap_rect, {8}, nlohmann::json::object()},
        {ExperimentId::two_point_real, {8}, nlohmann::json::object()},
        {ExperimentId::two_point_complex, {6}, nlohmann::json::object()},
        {ExperimentId::real_eig_count, {8}, nlohmann::json::object()},
        {ExperimentId::box_lcd, {8}, {{"d", 16}, {"boxN", 64}, {"alpha", std::ldexp(1.0, -20)}, {"K", 64}}},
        {ExperimentId::lo_1d, {8}, nlohmann::json::object()},
        {ExperimentId::overlap_beta, {8}, nlohmann::json::object()},
        {ExperimentId::delocalization, {8}, nlohmann::json::object()},
        {ExperimentId::tensorization, {4}, nlohmann::json::object()},
        {ExperimentId::linear_relation_repulsion, {8}, nlohmann::json::object()},
    };
    for (const auto& k : cases) {
        CAPTURE(experiment_name(k.id));
        auto c = small(k.id, k.n);
        c.params = k.params;
        const auto rep = run(c);
        CHECK_FALSE(rep.rows.empty());
        CHECK_FALSE(rep.epsilon_convention.empty());
        const auto table = parse_csv(rows_csv(rep));
        REQUIRE(table.size() == rep.rows.size() + 1);
        for (const auto& row : table) CHECK(row.size() == 14);
        const auto j = report_json(rep);
        CHECK(j["schema"] == kRowsSchema);
        CHECK(j["config_hash"] == config_hash(rep.config));
        CHECK(j["master_seed"] == 42);
    }
}

TEST_CASE("fit_scaling follows the qualified-row rule")
{
    std::vector<ConcentrationEstimate> rows;
    for (double e : {0.1, 0.2, 0.4}) rows.push_back(monte_carlo_estimate(std::size_t(1e6 * e * e), 1000000, e));
    rows.push_back(monte_carlo_estimate(0, 1000000, 0.01));  // unqualified, ignored
    const auto f = fit_scaling(rows);
    CHECK_FALSE(f.inconclusive);
    CHECK(f.qualified == 3);
    CHECK(f.slope == Approx(2.0).epsilon(1e-3));
    rows.pop_back();
    rows.pop_back();
    CHECK(fit_scaling(rows).inconclusive);
}
