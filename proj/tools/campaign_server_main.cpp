// HTTP front end for the campaign store.
#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "nbo/campaign_http.hpp"

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

}  // namespace

int main(int argc, char** argv) {
    std::string listen = env_or("NBO_LISTEN", "127.0.0.1:8080");
    std::string data_dir = env_or("NBO_DATA_DIR", "campaigns");

    CLI::App app{"Ask/tell campaign service"};
    app.add_option("--listen", listen, "host:port (env NBO_LISTEN)");
    app.add_option("--data-dir", data_dir, "Campaign storage directory (env NBO_DATA_DIR)");
    CLI11_PARSE(app, argc, argv);

    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "--listen must be host:port\n";
        return 2;
    }
    const std::string host = listen.substr(0, colon);
    const int port = std::atoi(listen.c_str() + colon + 1);

    try {
        nbo::campaign::CampaignStore store(data_dir);
        httplib::Server server;
        nbo::campaign::register_routes(server, store);
        std::cerr << "listening on " << host << ":" << port << ", data in " << data_dir << "\n";
        if (!server.listen(host, port)) {
            std::cerr << "cannot bind " << listen << "\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
