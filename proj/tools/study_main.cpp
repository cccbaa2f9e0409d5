// Factorial study driver: plan, run and analyze.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "nbo/error.hpp"
#include "nbo/study.hpp"

using namespace nbo;

namespace {

study::FactorTable load_table(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open factor file " + path);
    return study::factor_table_from_json(nlohmann::json::parse(in));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Factorial Bayesian-optimization study"};
    app.require_subcommand(1);

    std::string factors;
    int repeats = 5;
    int parallel = 1;
    std::uint64_t seed = 0;
    std::string out = "results.jsonl";
    std::string results;
    std::string checkpoint = "50d";
    std::string effects = "main";
    std::string format = "csv";
    bool no_timing = false;

    auto* plan = app.add_subcommand("plan", "Print the planned configurations");
    plan->add_option("--factors", factors, "Factor table JSON");
    plan->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
    plan->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

    auto* run = app.add_subcommand("run", "Execute the study, resuming from --out");
    run->add_option("--factors", factors, "Factor table JSON");
    run->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
    run->add_option("--parallel", parallel)->check(CLI::PositiveNumber);
    run->add_option("--seed", seed);
    run->add_option("--out", out);
    run->add_flag("--no-timing", no_timing, "Omit wall time so reruns are byte-identical");

    auto* analyze = app.add_subcommand("analyze", "Aggregate GAP by factor level");
    analyze->add_option("--factors", factors, "Factor table JSON");
    analyze->add_option("--results,--out", results, "Results file")->required();
    analyze->add_option("--checkpoint", checkpoint)->check(CLI::IsMember({"25d", "37.5d", "50d"}));
    analyze->add_option("--effects", effects)->check(CLI::IsMember({"main", "interaction"}));
    analyze->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        const study::FactorTable table = load_table(factors);
        if (*plan) {
            const auto configs = study::enumerate_configs(table);
            if (format == "json") {
                nlohmann::json j = {{"configs", configs.size()},
                                    {"repeats", repeats},
                                    {"runs", configs.size() * static_cast<std::size_t>(repeats)},
                                    {"plan", nlohmann::json::array()}};
                for (const auto& c : configs) {
                    auto row = study::to_json(c);
                    row["config_id"] = c.id();
                    j["plan"].push_back(row);
                }
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << "config_id,replicates,initial_samples,acquisition,covariance,problem,magnitude,form\n";
                for (const auto& c : configs) {
                    std::cout << c.id();
                    for (const auto& f : study::kControllableFactors) std::cout << ',' << c.level(f);
                    for (const auto& f : study::kNoiseFactors) std::cout << ',' << c.level(f);
                    std::cout << '\n';
                }
                std::cerr << configs.size() << " configs, " << configs.size() * static_cast<std::size_t>(repeats)
                          << " runs\n";
            }
        } else if (*run) {
            study::StudyOptions options;
            options.repeats = repeats;
            options.parallelism = parallel;
            options.master_seed = seed;
            options.record_wall_time = !no_timing;
            const auto summary = study::run_study(study::enumerate_configs(table), options, out);
            std::cerr << "planned " << summary.planned << ", skipped " << summary.skipped << ", executed "
                      << summary.executed << ", failed " << summary.failed << "\n";
        } else {
            const auto rows = study::load_results(results);
            const auto level = study::checkpoint_from_string(checkpoint);
            if (effects == "main") {
                const auto m = study::main_effects(rows, level, table);
                std::cout << (format == "json" ? study::to_json(m).dump(2) + "\n" : study::to_csv(m));
            } else {
                const auto t = study::interaction_table(rows, level, table);
                std::cout << (format == "json" ? study::to_json(t).dump(2) + "\n" : study::to_csv(t));
            }
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
