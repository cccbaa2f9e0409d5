#include "nbo/campaign.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <random>

#include "nbo/bo_loop.hpp"
#include "nbo/design.hpp"
#include "nbo/error.hpp"
#include "nbo/rng.hpp"

namespace nbo::campaign {

namespace {

std::string now_iso8601() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const nlohmann::json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
    fail(ErrorCode::Validation, message, field);
}

double require_number(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) invalid(path + "." + key, "missing field");
    if (!j[key].is_number()) invalid(path + "." + key, "must be a number");
    double v = j[key].get<double>();
    if (!std::isfinite(v)) invalid(path + "." + key, "must be finite");
    return v;
}

std::string new_id() {
    std::random_device rd;
    std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf).substr(0, 12);
}

Eigen::VectorXd lex_min_distance_point(const gp::Dataset& data) {
    const Eigen::MatrixXd grid = acq::unit_grid(data.dim(), acq::candidate_resolution(data.dim()));
    const Eigen::MatrixXd x = data.x_unit();
    Eigen::Index best = 0;
    double best_dist = -1.0;
    for (Eigen::Index g = 0; g < grid.rows(); ++g) {
        double d = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < x.rows(); ++i) d = std::min(d, (grid.row(g) - x.row(i)).squaredNorm());
        if (d > best_dist) {
            best_dist = d;
            best = g;
        }
    }
    return grid.row(best).transpose();
}

}  // namespace

gp::Box CampaignDefinition::box() const {
    gp::Box b{Eigen::VectorXd(dim()), Eigen::VectorXd(dim())};
    for (Eigen::Index i = 0; i < dim(); ++i) {
        b.lower[i] = variables[static_cast<std::size_t>(i)].lower;
        b.upper[i] = variables[static_cast<std::size_t>(i)].upper;
    }
    return b;
}

CampaignDefinition definition_from_json(const nlohmann::json& j) {
    if (!j.is_object()) invalid("", "definition must be a JSON object");
    CampaignDefinition def;
    def.name = j.value("name", std::string());
    if (!j.contains("variables") || !j["variables"].is_array()) invalid("variables", "must be an array");
    const auto& vars = j["variables"];
    if (vars.empty() || vars.size() > static_cast<std::size_t>(kMaxDimensions))
        invalid("variables", "between 1 and 4 variables are supported");
    for (std::size_t i = 0; i < vars.size(); ++i) {
        const std::string path = "variables[" + std::to_string(i) + "]";
        if (!vars[i].is_object()) invalid(path, "must be an object");
        Variable v;
        v.name = vars[i].value("name", "x" + std::to_string(i + 1));
        if (v.name.empty()) invalid(path + ".name", "must not be empty");
        for (const auto& prev : def.variables)
            if (prev.name == v.name) invalid(path + ".name", "duplicate variable name");
        v.lower = require_number(vars[i], "lower", path);
        v.upper = require_number(vars[i], "upper", path);
        if (!(v.lower < v.upper)) invalid(path + ".upper", "upper bound must exceed lower bound");
        def.variables.push_back(v);
    }
    try {
        if (j.contains("kernel")) {
            const auto& k = j["kernel"];
            std::string family = k.is_string() ? k.get<std::string>() : k.value("family", "Matern");
            def.kernel.kind = gp::kernel_kind_from_string(family);
            if (k.is_object()) {
                def.kernel.power = k.value("power", 2.0);
                double nu = k.value("nu", 2.5);
                def.kernel.nu = nu < 1.0 ? gp::MaternNu::OneHalf
                              : nu < 2.0 ? gp::MaternNu::ThreeHalves
                                         : gp::MaternNu::FiveHalves;
            }
            def.kernel.validate();
        }
    } catch (const Error& e) {
        invalid("kernel", e.what());
    }
    try {
        if (j.contains("acquisition")) {
            const auto& a = j["acquisition"];
            if (a.is_string()) {
                def.acquisition.kind = acq::acquisition_kind_from_string(a.get<std::string>());
            } else {
                def.acquisition.kind = acq::acquisition_kind_from_string(a.value("kind", "EI"));
                def.acquisition.pi = a.value("pi", def.acquisition.pi);
                def.acquisition.lambda = a.value("lambda", def.acquisition.lambda);
                def.acquisition.kg_expectation = acq::kg_expectation_from_string(a.value("kg_expectation", std::string("exact")));
                def.acquisition.kg_quadrature = a.value("kg_quadrature", def.acquisition.kg_quadrature);
                def.acquisition.pes_star_samples = a.value("pes_star_samples", def.acquisition.pes_star_samples);
            }
            def.acquisition.validate();
        }
    } catch (const Error& e) {
        invalid("acquisition", e.what());
    } catch (const nlohmann::json::exception& e) {
        invalid("acquisition", e.what());
    }
    if (j.contains("budget") && !j["budget"].is_null()) {
        if (!j["budget"].is_number_integer() || j["budget"].get<int>() < 1) invalid("budget", "must be a positive integer");
        def.budget = j["budget"].get<int>();
    }
    if (j.contains("initial")) {
        const auto& i = j["initial"];
        def.initial_samples_per_dim = i.value("samples_per_dim", def.initial_samples_per_dim);
        def.initial_replicates = i.value("replicates", def.initial_replicates);
        if (def.initial_samples_per_dim < 1) invalid("initial.samples_per_dim", "must be positive");
        if (def.initial_replicates < 1 || def.initial_replicates > 3) invalid("initial.replicates", "must be 1, 2 or 3");
    }
    if (j.contains("seed")) {
        const auto& seed = j["seed"];
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
            invalid("seed", "must be a non-negative integer");
        def.seed = j["seed"].get<std::uint64_t>();
    }
    return def;
}

nlohmann::json to_json(const CampaignDefinition& def) {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : def.variables) vars.push_back({{"name", v.name}, {"lower", v.lower}, {"upper", v.upper}});
    nlohmann::json j = {
        {"name", def.name},
        {"variables", vars},
        {"kernel", {{"family", gp::to_string(def.kernel.kind)}, {"power", def.kernel.power}, {"nu", gp::nu_value(def.kernel.nu)}}},
        {"acquisition",
         {{"kind", acq::to_string(def.acquisition.kind)},
          {"pi", def.acquisition.pi},
          {"lambda", def.acquisition.lambda},
          {"kg_expectation", acq::to_string(def.acquisition.kg_expectation)},
          {"kg_quadrature", def.acquisition.kg_quadrature},
          {"pes_star_samples", def.acquisition.pes_star_samples}}},
        {"budget", def.budget ? nlohmann::json(*def.budget) : nlohmann::json(nullptr)},
        {"initial", {{"samples_per_dim", def.initial_samples_per_dim}, {"replicates", def.initial_replicates}}},
        {"seed", def.seed},
    };
    return j;
}

gp::Dataset Campaign::dataset() const {
    gp::Dataset ds(definition.box());
    for (const auto& o : log) ds.add_raw(o.x, o.y);
    return ds;
}

nlohmann::json to_json(const Campaign& c) {
    nlohmann::json design = nlohmann::json::array();
    for (Eigen::Index i = 0; i < c.initial_design.rows(); ++i) design.push_back(vec_json(c.initial_design.row(i).transpose()));
    nlohmann::json log = nlohmann::json::array();
    for (const auto& o : c.log)
        log.push_back({{"x", vec_json(o.x)}, {"y", o.y}, {"timestamp", o.timestamp}, {"note", o.note}});
    return {
        {"schema_version", kSchemaVersion},
        {"id", c.id},
        {"status", c.status == Status::Active ? "active" : "closed"},
        {"definition", to_json(c.definition)},
        {"initial_design", design},
        {"observations", log},
    };
}

Campaign campaign_from_json(const nlohmann::json& j) {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
        fail(ErrorCode::InvalidArgument, "unsupported campaign schema version");
    Campaign c;
    c.id = j.at("id").get<std::string>();
    c.status = j.at("status").get<std::string>() == "closed" ? Status::Closed : Status::Active;
    c.definition = definition_from_json(j.at("definition"));
    const auto& design = j.at("initial_design");
    c.initial_design.resize(static_cast<Eigen::Index>(design.size()), c.definition.dim());
    for (std::size_t i = 0; i < design.size(); ++i)
        c.initial_design.row(static_cast<Eigen::Index>(i)) = json_vec(design[i]).transpose();
    for (const auto& o : j.at("observations"))
        c.log.push_back({json_vec(o.at("x")), o.at("y").get<double>(), o.value("timestamp", std::string()),
                         o.value("note", std::string())});
    return c;
}

nlohmann::json to_json(const Suggestion& s, const CampaignDefinition& def) {
    nlohmann::json named = nlohmann::json::object();
    for (std::size_t i = 0; i < def.variables.size(); ++i) named[def.variables[i].name] = s.x[static_cast<Eigen::Index>(i)];
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {
        {"schema_version", kSchemaVersion},
        {"x", vec_json(s.x)},
        {"named", named},
        {"mean", opt(s.mean)},
        {"variance", opt(s.variance)},
        {"acquisition", opt(s.acquisition)},
        {"source", s.source},
        {"fallback", s.fallback},
    };
}

nlohmann::json to_json(const StateSummary& s) {
    nlohmann::json j = {
        {"schema_version", kSchemaVersion},
        {"id", s.id},
        {"observations", s.observations},
        {"status", s.status == Status::Active ? "active" : "closed"},
        {"recommendation", nullptr},
        {"remaining_budget", s.remaining_budget ? nlohmann::json(*s.remaining_budget) : nlohmann::json(nullptr)},
    };
    if (s.recommendation) j["recommendation"] = {{"x", vec_json(*s.recommendation)}, {"mean", *s.recommendation_mean}};
    return j;
}

nlohmann::json to_json(const Slice& s) {
    return {
        {"schema_version", kSchemaVersion},
        {"axis", s.axis},
        {"anchor", vec_json(s.anchor)},
        {"x", s.x},
        {"mean", s.mean},
        {"variance", s.variance},
        {"acquisition", s.acquisition},
    };
}

CampaignStore::CampaignStore(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        auto e = std::make_unique<Entry>();
        e->campaign = campaign_from_json(nlohmann::json::parse(in));
        std::string id = e->campaign.id;
        entries_.emplace(id, std::move(e));
    }
}

std::vector<std::string> CampaignStore::ids() const {
    std::lock_guard<std::mutex> lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : entries_) out.push_back(id);
    return out;
}

void CampaignStore::persist(const Campaign& c) const {
    const auto target = dir_ / (c.id + ".json");
    const auto tmp = dir_ / (c.id + ".json.tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
        out << to_json(c).dump(2);
        if (!out) fail(ErrorCode::Io, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

CampaignStore::Entry& CampaignStore::lookup(const std::string& id) {
    std::lock_guard<std::mutex> lock(map_mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) fail(ErrorCode::NotFound, "no campaign with id '" + id + "'");
    return *it->second;
}

std::string CampaignStore::create(const nlohmann::json& definition) {
    auto e = std::make_unique<Entry>();
    Campaign& c = e->campaign;
    c.definition = definition_from_json(definition);
    const Eigen::Index d = c.definition.dim();
    Rng rng(Rng::mix_seed(c.definition.seed, 1));
    Eigen::MatrixXd unit = design::expand_replicates(
        design::lhs_maximin(c.definition.initial_samples_per_dim * d, d, rng), c.definition.initial_replicates);
    const gp::Box box = c.definition.box();
    c.initial_design.resize(unit.rows(), d);
    for (Eigen::Index i = 0; i < unit.rows(); ++i) c.initial_design.row(i) = box.from_unit(unit.row(i).transpose()).transpose();

    std::lock_guard<std::mutex> lock(map_mutex_);
    do {
        c.id = new_id();
    } while (entries_.count(c.id));
    persist(c);
    std::string id = c.id;
    entries_.emplace(id, std::move(e));
    return id;
}

nlohmann::json CampaignStore::get(const std::string& id) {
    Entry& e = lookup(id);
    std::lock_guard<std::mutex> lock(e.mutex);
    nlohmann::json j = to_json(e.campaign);
    j["summary"] = to_json(summarize(e, true));
    return j;
}

CampaignDefinition CampaignStore::definition(const std::string& id) {
    Entry& e = lookup(id);
    std::lock_guard<std::mutex> lock(e.mutex);
    return e.campaign.definition;
}

Eigen::VectorXd CampaignStore::parse_point(const std::string& id, const nlohmann::json& x) {
    Entry& e = lookup(id);
    const auto& vars = e.campaign.definition.variables;
    Eigen::VectorXd out(static_cast<Eigen::Index>(vars.size()));
    if (x.is_array()) {
        if (x.size() != vars.size()) invalid("x", "expected " + std::to_string(vars.size()) + " coordinates");
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (!x[i].is_number()) invalid("x[" + std::to_string(i) + "]", "must be a number");
            out[static_cast<Eigen::Index>(i)] = x[i].get<double>();
        }
        return out;
    }
    if (x.is_object()) {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (!x.contains(vars[i].name) || !x[vars[i].name].is_number()) invalid("x." + vars[i].name, "missing or not a number");
            out[static_cast<Eigen::Index>(i)] = x[vars[i].name].get<double>();
        }
        return out;
    }
    invalid("x", "must be an array or an object keyed by variable name");
}

const gp::FittedGP* CampaignStore::ensure_model(Entry& e) {
    const auto n = static_cast<Eigen::Index>(e.campaign.log.size());
    if (n < 2) return nullptr;
    if (e.model && e.model->dataset().size() == n) return &*e.model;
    if (e.model_failed) return nullptr;
    try {
        gp::SearchConfig search;
        search.seed = bo::fit_seed(e.campaign.definition.seed, n);
        e.model.emplace(gp::fit(e.campaign.dataset(), e.campaign.definition.kernel, search));
        return &*e.model;
    } catch (const Error&) {
        e.model.reset();
        e.model_failed = true;
        return nullptr;
    }
}

StateSummary CampaignStore::summarize(Entry& e, bool fit) {
    StateSummary s;
    const Campaign& c = e.campaign;
    s.id = c.id;
    s.observations = static_cast<int>(c.log.size());
    s.status = c.status;
    if (c.definition.budget) s.remaining_budget = std::max(0, *c.definition.budget - s.observations);
    const bool fresh = e.model && e.model->dataset().size() == static_cast<Eigen::Index>(c.log.size());
    if (s.observations >= 2 * c.definition.dim() && (fit || fresh)) {
        if (const gp::FittedGP* model = ensure_model(e)) {
            Eigen::VectorXd u = bo::recommend(*model);
            s.recommendation = c.definition.box().from_unit(u);
            s.recommendation_mean = model->predict(u).mean;
        }
    }
    return s;
}

StateSummary CampaignStore::tell(const std::string& id, const Eigen::VectorXd& x, double y, const std::string& note) {
    Entry& e = lookup(id);
    std::lock_guard<std::mutex> lock(e.mutex);
    Campaign& c = e.campaign;
    if (c.status != Status::Active) fail(ErrorCode::Conflict, "campaign is closed");
    if (x.size() != c.definition.dim()) invalid("x", "expected " + std::to_string(c.definition.dim()) + " coordinates");
    const gp::Box box = c.definition.box();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || x[i] < box.lower[i] || x[i] > box.upper[i])
            invalid("x[" + std::to_string(i) + "]", "outside the bounds of '" + c.definition.variables[static_cast<std::size_t>(i)].name + "'");
    if (!std::isfinite(y)) invalid("y", "must be finite");
    c.log.push_back({x, y, now_iso8601(), note});
    try {
        persist(c);
    } catch (...) {
        c.log.pop_back();
        throw;
    }
    e.model.reset();
    e.model_failed = false;
    e.suggestion.reset();
    return summarize(e, false);
}

Suggestion CampaignStore::suggest(const std::string& id) {
    Entry& e = lookup(id);
    std::lock_guard<std::mutex> lock(e.mutex);
    const Campaign& c = e.campaign;
    if (c.status != Status::Active) fail(ErrorCode::Conflict, "campaign is closed");
    const auto n = static_cast<Eigen::Index>(c.log.size());
    if (c.definition.budget && n >= *c.definition.budget) fail(ErrorCode::Conflict, "experimental budget exhausted");
    if (e.suggestion) return *e.suggestion;

    const gp::Box box = c.definition.box();
    Suggestion s;
    const gp::FittedGP* model = ensure_model(e);
    if (n < c.initial_design.rows()) {
        s.x = c.initial_design.row(n).transpose();
        s.source = "initial_design";
        if (model) {
            auto p = model->predict(box.to_unit(s.x).cwiseMax(0.0).cwiseMin(1.0));
            s.mean = p.mean;
            s.variance = p.variance;
        }
    } else if (model) {
        acq::AcquisitionSpec spec = c.definition.acquisition;
        spec.seed = bo::acquisition_seed(c.definition.seed, n);
        Eigen::VectorXd u;
        try {
            auto best = acq::maximize_acquisition(*model, spec);
            u = best.x;
            s.acquisition = best.value;
            s.source = "acquisition";
        } catch (const Error& err) {
            if (err.code() != ErrorCode::AcquisitionFailure) throw;
            u = bo::max_variance_point(*model);
            s.source = "fallback";
            s.fallback = true;
        }
        auto p = model->predict(u);
        s.mean = p.mean;
        s.variance = p.variance;
        s.x = box.from_unit(u);
    } else {
        // No usable fit: maximum variance under a default-hyperparameter
        // model, or the point farthest from the data if even that fails.
        gp::Dataset data = c.dataset();
        Eigen::VectorXd u;
        try {
            auto fallback = gp::FittedGP::condition(data, c.definition.kernel, Eigen::VectorXd::Zero(c.definition.dim()), 0.1);
            u = bo::max_variance_point(fallback);
        } catch (const Error&) {
            u = lex_min_distance_point(data);
        }
        s.x = box.from_unit(u);
        s.source = "fallback";
        s.fallback = true;
    }
    e.suggestion = s;
    return s;
}

Slice CampaignStore::posterior_slice(const std::string& id, int axis, int resolution) {
    Entry& e = lookup(id);
    std::lock_guard<std::mutex> lock(e.mutex);
    const Campaign& c = e.campaign;
    if (axis < 0 || axis >= c.definition.dim()) invalid("axis", "axis out of range");
    if (resolution < 2 || resolution > 10001) invalid("resolution", "must lie in [2, 10001]");
    if (c.log.size() < 2) fail(ErrorCode::NoModel, "at least two observations are needed for a model");
    const gp::FittedGP* model = ensure_model(e);
    if (!model) fail(ErrorCode::NoModel, "the model could not be fitted to the current observations");

    const gp::Box box = c.definition.box();
    Eigen::VectorXd anchor = bo::recommend(*model);
    Eigen::MatrixXd pts = anchor.transpose().replicate(resolution, 1);
    for (int i = 0; i < resolution; ++i) pts(i, axis) = static_cast<double>(i) / (resolution - 1);
    Eigen::VectorXd mean, var;
    model->predict_batch(pts, mean, var);
    acq::AcquisitionSpec spec = c.definition.acquisition;
    spec.seed = bo::acquisition_seed(c.definition.seed, static_cast<Eigen::Index>(c.log.size()));
    Eigen::VectorXd alpha = acq::Acquisition(*model, spec).evaluate(pts);

    Slice s;
    s.axis = axis;
    s.anchor = box.from_unit(anchor);
    for (int i = 0; i < resolution; ++i) {
        s.x.push_back(box.from_unit(pts.row(i).transpose())[axis]);
        s.mean.push_back(mean[i]);
        s.variance.push_back(var[i]);
        s.acquisition.push_back(alpha[i]);
    }
    return s;
}

StateSummary CampaignStore::close(const std::string& id) {
    Entry& e = lookup(id);
    std::lock_guard<std::mutex> lock(e.mutex);
    e.campaign.status = Status::Closed;
    persist(e.campaign);
    e.suggestion.reset();
    return summarize(e, true);
}

}  // namespace nbo::campaign
