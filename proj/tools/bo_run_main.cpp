// Single BO run: RunConfig JSON in, Trace JSON out.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "nbo/bo_loop.hpp"

int main(int argc, char** argv) {
    std::string config_path = "-";
    std::string out_path = "-";
    CLI::App app{"Run one Bayesian-optimization trace"};
    app.add_option("config", config_path, "RunConfig JSON file, '-' for stdin");
    app.add_option("--out", out_path, "Trace JSON file, '-' for stdout");
    CLI11_PARSE(app, argc, argv);

    try {
        nlohmann::json j;
        if (config_path == "-") {
            j = nlohmann::json::parse(std::cin);
        } else {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open " + config_path);
            j = nlohmann::json::parse(in);
        }
        const auto trace = nbo::bo::run_bo(nbo::bo::run_config_from_json(j));
        const std::string text = nbo::bo::to_json(trace).dump(2) + "\n";
        if (out_path == "-") {
            std::cout << text;
        } else {
            std::ofstream(out_path) << text;
        }
        return trace.failed ? 3 : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
