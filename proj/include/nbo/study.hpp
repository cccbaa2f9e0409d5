#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "nbo/acquisition.hpp"
#include "nbo/bo_loop.hpp"
#include "nbo/gp/kernel.hpp"
#include "nbo/testbed.hpp"

namespace nbo::study {

/// Levels of the four controllable and three noise factors.
struct FactorTable {
    std::vector<int> replicates{1, 2, 3};
    std::vector<int> initial_samples{2, 5, 10};  // multiples of d
    std::vector<acq::AcquisitionKind> acquisition{acq::AcquisitionKind::UC, acq::AcquisitionKind::PI,
                                                  acq::AcquisitionKind::EI, acq::AcquisitionKind::KG,
                                                  acq::AcquisitionKind::PES};
    std::vector<gp::KernelKind> covariance{gp::KernelKind::SquaredExponential,
                                           gp::KernelKind::PowerExponential, gp::KernelKind::Matern};
    std::vector<testbed::ProblemId> problem{testbed::ProblemId::F1, testbed::ProblemId::F2,
                                            testbed::ProblemId::F3};
    std::vector<double> magnitude{0.01, 0.05, 0.20};
    std::vector<testbed::NoiseForm> form{testbed::NoiseForm::Constant, testbed::NoiseForm::Bad,
                                         testbed::NoiseForm::Good};

    std::size_t size() const;
};

FactorTable factor_table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FactorTable& table);

/// One cell of the factorial.
struct StudyConfig {
    int replicates = 2;
    int initial_samples = 5;
    acq::AcquisitionKind acquisition = acq::AcquisitionKind::EI;
    gp::KernelKind covariance = gp::KernelKind::Matern;
    testbed::ProblemId problem = testbed::ProblemId::F1;
    double magnitude = 0.05;
    testbed::NoiseForm form = testbed::NoiseForm::Constant;

    /// Canonical "factor=level|..." string; the id is its hash.
    std::string canonical() const;
    std::string id() const;
    /// Level label of a named factor ("acquisition" -> "EI").
    std::string level(const std::string& factor) const;

    /// Factor levels applied on top of `base` (which supplies search budget,
    /// acquisition constants and the like).
    bo::RunConfig to_run_config(const bo::RunConfig& base, std::uint64_t seed) const;
};

nlohmann::json to_json(const StudyConfig& config);
StudyConfig study_config_from_json(const nlohmann::json& j);

inline const std::array<std::string, 4> kControllableFactors{"replicates", "initial_samples", "acquisition", "covariance"};
inline const std::array<std::string, 3> kNoiseFactors{"problem", "magnitude", "form"};

/// Level labels of `factor` in table order.
std::vector<std::string> factor_levels(const FactorTable& table, const std::string& factor);

/// Lexicographic cross product in table order (replicates slowest).
std::vector<StudyConfig> enumerate_configs(const FactorTable& table);

struct StudyResult {
    std::string config_id;
    StudyConfig config;
    int repeat = 1;  // 1-based
    std::uint64_t seed = 0;
    std::array<int, 3> checkpoints{};
    std::array<std::optional<double>, 3> gap;
    double delta_f = 0.0;
    bool failed = false;
    std::string failure;
    std::optional<double> wall_time_ms;
};

nlohmann::json to_json(const StudyResult& row);
StudyResult study_result_from_json(const nlohmann::json& j);

std::uint64_t run_seed(std::uint64_t master_seed, const std::string& config_id, int repeat);

struct StudyOptions {
    int repeats = 5;
    int parallelism = 1;
    std::uint64_t master_seed = 0;
    bool record_wall_time = true;
    bo::RunConfig base;  // non-factor settings shared by every run
};

struct StudySummary {
    std::size_t planned = 0;
    std::size_t skipped = 0;
    std::size_t executed = 0;
    std::size_t failed = 0;
};

/// Executes every (config, repeat) not already present in `out`, appending
/// one JSON line per run. Throws Io on file errors; run failures are rows.
StudySummary run_study(const std::vector<StudyConfig>& configs, const StudyOptions& options,
                       const std::filesystem::path& out);

/// Parses a JSON-lines results file; malformed lines are skipped.
std::vector<StudyResult> load_results(const std::filesystem::path& path);

enum class CheckpointLevel { Early = 0, Middle = 1, Final = 2 };  // 25d, 37.5d, 50d
CheckpointLevel checkpoint_from_string(const std::string& label);
std::string to_string(CheckpointLevel level);

struct LevelStat {
    std::string factor;
    std::string level;
    double mean = 0.0;
    std::size_t count = 0;
    std::size_t failed = 0;
    bool missing = true;
};

struct MainEffects {
    CheckpointLevel checkpoint = CheckpointLevel::Final;
    std::vector<LevelStat> stats;  // factor-major, levels in table order

    const LevelStat* find(const std::string& factor, const std::string& level) const;
};

MainEffects main_effects(const std::vector<StudyResult>& results, CheckpointLevel checkpoint,
                         const FactorTable& table = {});

struct InteractionCell {
    double mean = 0.0;
    std::size_t count = 0;
    bool missing = true;
    bool best = false;  // lowest mean among its controllable factor's levels for this noise level
};

/// Controllable levels (rows) against noise levels (columns).
struct InteractionTable {
    CheckpointLevel checkpoint = CheckpointLevel::Final;
    std::vector<std::pair<std::string, std::string>> rows;  // (factor, level)
    std::vector<std::pair<std::string, std::string>> cols;
    std::vector<std::vector<InteractionCell>> cells;        // [row][col]

    /// Best level of a controllable factor in a noise column, empty if missing.
    std::string best_level(const std::string& controllable, std::size_t col) const;
};

InteractionTable interaction_table(const std::vector<StudyResult>& results, CheckpointLevel checkpoint,
                                   const FactorTable& table = {});

std::string to_csv(const MainEffects& effects);
nlohmann::json to_json(const MainEffects& effects);
std::string to_csv(const InteractionTable& table);
nlohmann::json to_json(const InteractionTable& table);

}  // namespace nbo::study
