#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nbo/acquisition.hpp"
#include "nbo/gp/gp.hpp"

namespace nbo::campaign {

constexpr int kSchemaVersion = 1;
constexpr int kMaxDimensions = 4;

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
};

struct CampaignDefinition {
    std::string name;
    std::vector<Variable> variables;
    gp::KernelFamily kernel = gp::KernelFamily::matern(gp::MaternNu::FiveHalves);
    acq::AcquisitionSpec acquisition;  // EI by default
    std::optional<int> budget;
    int initial_samples_per_dim = 5;
    int initial_replicates = 2;
    std::uint64_t seed = 0;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(variables.size()); }
    gp::Box box() const;
};

/// Validates and parses a definition; errors carry the offending field path.
CampaignDefinition definition_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CampaignDefinition& def);

struct Observation {
    Eigen::VectorXd x;  // raw units
    double y = 0.0;
    std::string timestamp;
    std::string note;
};

enum class Status { Active, Closed };

struct Campaign {
    std::string id;
    CampaignDefinition definition;
    Eigen::MatrixXd initial_design;  // raw units, replicates expanded
    std::vector<Observation> log;
    Status status = Status::Active;

    gp::Dataset dataset() const;
};

nlohmann::json to_json(const Campaign& c);
Campaign campaign_from_json(const nlohmann::json& j);

struct Suggestion {
    Eigen::VectorXd x;  // raw units
    std::optional<double> mean;
    std::optional<double> variance;
    std::optional<double> acquisition;
    std::string source;  // "initial_design", "acquisition" or "fallback"
    bool fallback = false;
};

struct StateSummary {
    std::string id;
    int observations = 0;
    Status status = Status::Active;
    std::optional<Eigen::VectorXd> recommendation;  // raw units
    std::optional<double> recommendation_mean;
    std::optional<int> remaining_budget;
};

struct Slice {
    int axis = 0;
    Eigen::VectorXd anchor;  // raw units
    std::vector<double> x, mean, variance, acquisition;
};

nlohmann::json to_json(const Suggestion& s, const CampaignDefinition& def);
nlohmann::json to_json(const StateSummary& s);
nlohmann::json to_json(const Slice& s);

/// File-backed campaign registry: one JSON document per campaign in
/// `data_dir`, replaced atomically on every change. Calls on the same
/// campaign are serialized; different campaigns proceed independently.
class CampaignStore {
public:
    explicit CampaignStore(std::filesystem::path data_dir);

    std::string create(const nlohmann::json& definition);
    nlohmann::json get(const std::string& id);
    CampaignDefinition definition(const std::string& id);
    StateSummary tell(const std::string& id, const Eigen::VectorXd& x, double y, const std::string& note = {});
    Suggestion suggest(const std::string& id);
    Slice posterior_slice(const std::string& id, int axis, int resolution);
    StateSummary close(const std::string& id);
    std::vector<std::string> ids() const;

    /// Parses `x` given as an array or as an object keyed by variable name.
    Eigen::VectorXd parse_point(const std::string& id, const nlohmann::json& x);

private:
    struct Entry {
        Campaign campaign;
        std::mutex mutex;
        std::optional<gp::FittedGP> model;
        bool model_failed = false;
        std::optional<Suggestion> suggestion;
    };

    Entry& lookup(const std::string& id);
    void persist(const Campaign& c) const;
    // Fits the snapshot when stale; returns nullptr when fitting fails.
    const gp::FittedGP* ensure_model(Entry& e);
    // Includes the recommendation when a model exists or `fit` allows one.
    StateSummary summarize(Entry& e, bool fit);

    std::filesystem::path dir_;
    mutable std::mutex map_mutex_;
    std::map<std::string, std::unique_ptr<Entry>> entries_;
};

}  // namespace nbo::campaign
