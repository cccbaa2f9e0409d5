#include "nbo/campaign_http.hpp"

#include "nbo/error.hpp"

namespace nbo::campaign {

namespace {

const char* kJson = "application/json";

void send(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const std::string& field = {}) {
    nlohmann::json body = {{"schema_version", kSchemaVersion}, {"code", code}, {"message", message}};
    if (!field.empty()) body["field"] = field;
    send(res, status, body);
}

nlohmann::json parse_body(const httplib::Request& req) {
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Validation, std::string("malformed JSON body: ") + e.what());
    }
}

int int_param(const httplib::Request& req, const char* name, int fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string raw = req.get_param_value(name);
    try {
        std::size_t used = 0;
        int v = std::stoi(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::Validation, "query parameter must be an integer", name);
    }
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, http_status(e.code()), to_string(e.code()), e.what(), e.field());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, to_string(ErrorCode::Validation), e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

}  // namespace

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::Validation:
        case ErrorCode::InvalidArgument:
        case ErrorCode::DomainError: return 400;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Conflict:
        case ErrorCode::NoModel: return 409;
        default: return 500;
    }
}

void register_routes(httplib::Server& server, CampaignStore& store) {
    server.Post("/campaigns", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const std::string id = store.create(parse_body(req));
        send(res, 201, store.get(id));
    }));

    server.Get("/campaigns", guarded([&store](const httplib::Request&, httplib::Response& res) {
        send(res, 200, {{"schema_version", kSchemaVersion}, {"campaigns", store.ids()}});
    }));

    server.Get(R"(/campaigns/([^/]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, store.get(req.matches[1]));
    }));

    server.Post(R"(/campaigns/([^/]+)/observations)",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    const std::string id = req.matches[1];
                    const nlohmann::json body = parse_body(req);
                    if (!body.is_object()) fail(ErrorCode::Validation, "body must be an object");
                    if (!body.contains("x")) fail(ErrorCode::Validation, "missing field", "x");
                    if (!body.contains("y") || !body["y"].is_number())
                        fail(ErrorCode::Validation, "must be a number", "y");
                    const Eigen::VectorXd x = store.parse_point(id, body["x"]);
                    const std::string note = body.value("note", std::string());
                    send(res, 200, to_json(store.tell(id, x, body["y"].get<double>(), note)));
                }));

    server.Get(R"(/campaigns/([^/]+)/suggestion)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   const std::string id = req.matches[1];
                   const Suggestion s = store.suggest(id);
                   send(res, 200, to_json(s, store.definition(id)));
               }));

    server.Get(R"(/campaigns/([^/]+)/slice)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const int axis = int_param(req, "axis", 0);
        const int resolution = int_param(req, "resolution", 101);
        send(res, 200, to_json(store.posterior_slice(req.matches[1], axis, resolution)));
    }));

    server.Post(R"(/campaigns/([^/]+)/close)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, to_json(store.close(req.matches[1])));
    }));
}

}  // namespace nbo::campaign
