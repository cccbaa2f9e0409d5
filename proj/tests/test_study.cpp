#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "nbo/error.hpp"
#include "nbo/study.hpp"

using namespace nbo;
using namespace nbo::study;

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("nbo_study_" + name + ".jsonl");
    fs::remove(p);
    return p;
}

// Two cheap f1 cells with a shortened budget.
std::vector<StudyConfig> smoke_configs() {
    StudyConfig a;
    a.replicates = 1;
    a.initial_samples = 2;
    a.acquisition = acq::AcquisitionKind::EI;
    a.covariance = gp::KernelKind::Matern;
    a.problem = testbed::ProblemId::F1;
    a.magnitude = 0.05;
    a.form = testbed::NoiseForm::Constant;
    StudyConfig b = a;
    b.acquisition = acq::AcquisitionKind::UC;
    b.covariance = gp::KernelKind::SquaredExponential;
    return {a, b};
}

StudyOptions smoke_options(int parallelism) {
    StudyOptions o;
    o.repeats = 2;
    o.parallelism = parallelism;
    o.master_seed = 17;
    o.record_wall_time = false;
    o.base.budget = 12;
    o.base.checkpoints = {6, 9, 12};
    return o;
}

std::vector<std::string> sorted_lines(const std::vector<StudyResult>& rows) {
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(to_json(r).dump());
    std::sort(out.begin(), out.end());
    return out;
}

// Synthetic result with given gaps at the three checkpoints.
StudyResult row(const StudyConfig& c, int repeat, double g0, double g1, double g2) {
    StudyResult r;
    r.config = c;
    r.config_id = c.id();
    r.repeat = repeat;
    r.gap = {g0, g1, g2};
    return r;
}

std::size_t index_of(const std::vector<std::string>& v, const std::string& s) {
    return static_cast<std::size_t>(std::find(v.begin(), v.end(), s) - v.begin());
}

// Welford running mean over the rows whose level matches; independent of the
// library's grouping code.
struct StreamingMean {
    double mean = 0.0;
    std::size_t n = 0;
    void add(double x) {
        ++n;
        mean += (x - mean) / static_cast<double>(n);
    }
};

std::vector<StudyResult> random_results(std::uint64_t seed, std::size_t n) {
    const auto configs = enumerate_configs(FactorTable{});
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, configs.size() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<StudyResult> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = row(configs[pick(gen)], 1, u(gen), u(gen), u(gen));
        if (u(gen) < 0.05) {
            r.failed = true;
            r.gap = {};
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_CASE("full factorial sizes") {
    FactorTable t;
    CHECK(t.size() == 3645);
    CHECK(enumerate_configs(t).size() == 3645);
    CHECK(enumerate_configs(t).size() * 5 == 18225);
    t.acquisition = {acq::AcquisitionKind::EI};
    CHECK(enumerate_configs(t).size() == 729);
}

TEST_CASE("enumeration is fast, ordered and has stable unique ids") {
    const auto start = std::chrono::steady_clock::now();
    const auto configs = enumerate_configs(FactorTable{});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 1.0);
    std::set<std::string> ids;
    for (const auto& c : configs) ids.insert(c.id());
    CHECK(ids.size() == configs.size());
    CHECK(configs.front().replicates == 1);
    CHECK(configs.back().replicates == 3);
    CHECK(configs.front().canonical() ==
          "replicates=1|initial_samples=2d|acquisition=UC|covariance=Gaussian|problem=f1|magnitude=0.01|form=Constant");
    // Ids depend only on the levels.
    CHECK(enumerate_configs(FactorTable{})[100].id() == configs[100].id());
    CHECK(configs[0].id().size() == 16);
    CHECK(configs[0].id().find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("run seeds are distinct across the full plan") {
    std::set<std::uint64_t> seeds;
    for (const auto& c : enumerate_configs(FactorTable{}))
        for (int r = 1; r <= 5; ++r) seeds.insert(run_seed(0, c.id(), r));
    CHECK(seeds.size() == 18225);
}

TEST_CASE("factor table and configs round trip through JSON") {
    FactorTable t;
    t.acquisition = {acq::AcquisitionKind::KG, acq::AcquisitionKind::PES};
    t.magnitude = {0.2};
    auto back = factor_table_from_json(to_json(t));
    CHECK(to_json(back) == to_json(t));
    CHECK(back.size() == t.size());
    for (const auto& c : enumerate_configs(t)) CHECK(study_config_from_json(to_json(c)).id() == c.id());
}

TEST_CASE("smoke study, resume and parallel equivalence") {
    const auto configs = smoke_configs();
    const fs::path serial = temp_file("serial");
    auto summary = run_study(configs, smoke_options(1), serial);
    CHECK(summary.planned == 4);
    CHECK(summary.executed == 4);
    const auto rows = load_results(serial);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK_FALSE(r.failed);
        for (const auto& g : r.gap) {
            REQUIRE(g.has_value());
            CHECK(std::isfinite(*g));
            CHECK(*g >= -1e-9);
        }
        CHECK(r.checkpoints == std::array<int, 3>{6, 9, 12});
        CHECK_FALSE(r.wall_time_ms.has_value());
    }

    auto again = run_study(configs, smoke_options(1), serial);
    CHECK(again.executed == 0);
    CHECK(again.skipped == 4);
    CHECK(load_results(serial).size() == 4);

    const fs::path parallel = temp_file("parallel");
    run_study(configs, smoke_options(8), parallel);
    CHECK(sorted_lines(load_results(parallel)) == sorted_lines(rows));

    // An interrupted file resumes with only the missing runs.
    const fs::path partial = temp_file("partial");
    {
        std::ofstream out(partial);
        out << to_json(rows[0]).dump() << "\n" << "{\"torn\": ";
    }
    auto resumed = run_study(configs, smoke_options(1), partial);
    CHECK(resumed.skipped == 1);
    CHECK(resumed.executed == 3);
    CHECK(sorted_lines(load_results(partial)) == sorted_lines(rows));
    for (const auto& p : {serial, parallel, partial}) fs::remove(p);
}

TEST_CASE("unwritable output is an I/O error") {
    auto o = smoke_options(1);
    try {
        run_study(smoke_configs(), o, fs::path("/proc/nbo-does-not-exist/x.jsonl"));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Io);
    } catch (const fs::filesystem_error&) {
        // create_directories refuses before the sink opens
    }
}

TEST_CASE("main effects recover a level index fixture") {
    std::vector<StudyResult> rows;
    int k = 0;
    for (const auto& c : enumerate_configs(FactorTable{})) {
        if (k++ % 7) continue;
        const double idx = static_cast<double>(static_cast<int>(c.acquisition));
        rows.push_back(row(c, 1, idx, idx, idx));
    }
    auto me = main_effects(rows, CheckpointLevel::Final);
    const auto levels = factor_levels(FactorTable{}, "acquisition");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const LevelStat* s = me.find("acquisition", levels[i]);
        REQUIRE(s != nullptr);
        CHECK_FALSE(s->missing);
        CHECK(s->mean == static_cast<double>(i));
    }
}

TEST_CASE("main effects agree with a streaming-mean oracle") {
    const auto rows = random_results(5, 4000);
    for (auto cp : {CheckpointLevel::Early, CheckpointLevel::Middle, CheckpointLevel::Final}) {
        auto me = main_effects(rows, cp);
        const auto k = static_cast<std::size_t>(cp);
        for (const auto& s : me.stats) {
            StreamingMean oracle;
            std::size_t failed = 0;
            for (const auto& r : rows) {
                if (r.config.level(s.factor) != s.level) continue;
                if (r.failed) {
                    ++failed;
                    continue;
                }
                oracle.add(*r.gap[k]);
            }
            CHECK(s.count == oracle.n);
            CHECK(s.failed == failed);
            CHECK(std::abs(s.mean - oracle.mean) <= 1e-12);
        }
    }
}

TEST_CASE("aggregations ignore row order") {
    auto rows = random_results(8, 1500);
    auto a = main_effects(rows, CheckpointLevel::Final);
    auto ia = interaction_table(rows, CheckpointLevel::Final);
    std::mt19937_64 gen(1);
    std::shuffle(rows.begin(), rows.end(), gen);
    auto b = main_effects(rows, CheckpointLevel::Final);
    auto ib = interaction_table(rows, CheckpointLevel::Final);
    REQUIRE(a.stats.size() == b.stats.size());
    for (std::size_t i = 0; i < a.stats.size(); ++i) {
        CHECK(a.stats[i].count == b.stats[i].count);
        CHECK(std::abs(a.stats[i].mean - b.stats[i].mean) <= 1e-12);
    }
    for (std::size_t r = 0; r < ia.rows.size(); ++r)
        for (std::size_t c = 0; c < ia.cols.size(); ++c)
            CHECK(std::abs(ia.cells[r][c].mean - ib.cells[r][c].mean) <= 1e-12);
}

TEST_CASE("missing groups are reported as missing") {
    StudyConfig c;
    c.acquisition = acq::AcquisitionKind::EI;
    std::vector<StudyResult> rows{row(c, 1, 0.3, 0.2, 0.1)};
    auto failed = row(c, 2, 0, 0, 0);
    failed.failed = true;
    failed.gap = {};
    rows.push_back(failed);
    auto me = main_effects(rows, CheckpointLevel::Final);
    const LevelStat* ei = me.find("acquisition", "EI");
    const LevelStat* kg = me.find("acquisition", "KG");
    REQUIRE(ei);
    REQUIRE(kg);
    CHECK(ei->count == 1);
    CHECK(ei->failed == 1);
    CHECK(ei->mean == 0.1);
    CHECK(kg->missing);
    CHECK(kg->count == 0);
    const auto csv = to_csv(me);
    CHECK(csv.find("KG") != std::string::npos);
    auto j = to_json(me);
    const auto& acq_json = j["factors"]["acquisition"];
    CHECK(acq_json["mean_gap"][index_of(factor_levels(FactorTable{}, "acquisition"), "KG")].is_null());
    auto it = interaction_table(rows, CheckpointLevel::Final);
    CHECK(it.best_level("acquisition", index_of(factor_levels(FactorTable{}, "problem"), "f2")).empty());
}

TEST_CASE("additive fixture has no interaction") {
    // GAP = acquisition effect + covariance effect + problem effect.
    const std::map<std::string, double> acq_eff{{"UC", 0.5}, {"PI", 0.2}, {"EI", 0.1}, {"KG", 0.3}, {"PES", 0.4}};
    const std::map<std::string, double> cov_eff{{"Gaussian", 0.3}, {"Power", 0.2}, {"Matern", 0.0}};
    const std::map<std::string, double> prob_eff{{"f1", 0.0}, {"f2", 1.0}, {"f3", 2.0}};
    std::vector<StudyResult> rows;
    for (const auto& c : enumerate_configs(FactorTable{})) {
        const double g = acq_eff.at(c.level("acquisition")) + cov_eff.at(c.level("covariance")) +
                         prob_eff.at(c.level("problem")) + 0.01 * c.magnitude;
        rows.push_back(row(c, 1, g, g, g));
    }
    auto it = interaction_table(rows, CheckpointLevel::Final);
    for (std::size_t col = 0; col < it.cols.size(); ++col) {
        CHECK(it.best_level("acquisition", col) == "EI");
        CHECK(it.best_level("covariance", col) == "Matern");
    }
}

TEST_CASE("cross-tab cells equal main effects on the matching subset") {
    const auto rows = random_results(21, 3000);
    auto it = interaction_table(rows, CheckpointLevel::Middle);
    for (std::size_t c = 0; c < it.cols.size(); ++c) {
        const auto& [nf, nl] = it.cols[c];
        std::vector<StudyResult> subset;
        for (const auto& r : rows)
            if (r.config.level(nf) == nl) subset.push_back(r);
        auto me = main_effects(subset, CheckpointLevel::Middle);
        for (std::size_t r = 0; r < it.rows.size(); ++r) {
            const auto& [cf, cl] = it.rows[r];
            const LevelStat* s = me.find(cf, cl);
            REQUIRE(s);
            CHECK(it.cells[r][c].missing == s->missing);
            CHECK(it.cells[r][c].count == s->count);
            if (!s->missing) CHECK(std::abs(it.cells[r][c].mean - s->mean) <= 1e-12);
        }
    }
}

TEST_CASE("best acquisition switches from PI early to UC late") {
    std::vector<StudyResult> rows;
    for (const auto& c : enumerate_configs(FactorTable{})) {
        const std::string a = c.level("acquisition");
        const double early = a == "PI" ? 0.1 : a == "UC" ? 0.3 : 0.2;
        const double late = a == "UC" ? 0.02 : a == "PI" ? 0.08 : 0.05;
        rows.push_back(row(c, 1, early, (early + late) / 2, late));
    }
    auto early = interaction_table(rows, CheckpointLevel::Early);
    auto late = interaction_table(rows, CheckpointLevel::Final);
    for (std::size_t col = 0; col < early.cols.size(); ++col) {
        CHECK(early.best_level("acquisition", col) == "PI");
        CHECK(late.best_level("acquisition", col) == "UC");
    }
    // The mark sits on exactly one row per factor and column.
    for (std::size_t col = 0; col < late.cols.size(); ++col) {
        int marks = 0;
        for (std::size_t r = 0; r < late.rows.size(); ++r)
            if (late.rows[r].first == "acquisition" && late.cells[r][col].best) ++marks;
        CHECK(marks == 1);
    }
    CHECK(to_csv(late).find("UC") != std::string::npos);
    CHECK(to_json(late).is_object());
}

TEST_CASE("checkpoint labels") {
    CHECK(checkpoint_from_string("25d") == CheckpointLevel::Early);
    CHECK(checkpoint_from_string("37.5d") == CheckpointLevel::Middle);
    CHECK(checkpoint_from_string("50d") == CheckpointLevel::Final);
    CHECK(to_string(CheckpointLevel::Middle) == "37.5d");
    CHECK_THROWS_AS(checkpoint_from_string("40d"), Error);
}

TEST_CASE("result rows round trip through JSON") {
    StudyConfig c;
    auto r = row(c, 3, 0.5, 0.25, 0.125);
    r.seed = 0xdeadbeefcafef00dULL;
    r.delta_f = 2.5;
    r.wall_time_ms = 12.5;
    r.gap[1].reset();
    auto back = study_result_from_json(to_json(r));
    CHECK(to_json(back) == to_json(r));
    CHECK(back.seed == r.seed);
    CHECK_FALSE(back.gap[1].has_value());
}
