#include "nbo/study.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "nbo/error.hpp"
#include "nbo/rng.hpp"

namespace nbo::study {

namespace {

constexpr int kSchemaVersion = 1;

std::string magnitude_label(double m) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", m);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

template <typename T, typename F>
std::vector<std::string> labels(const std::vector<T>& values, F&& label) {
    std::vector<std::string> out;
    for (const auto& v : values) out.push_back(label(v));
    return out;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::size_t FactorTable::size() const {
    return replicates.size() * initial_samples.size() * acquisition.size() * covariance.size() *
           problem.size() * magnitude.size() * form.size();
}

FactorTable factor_table_from_json(const nlohmann::json& j) {
    FactorTable t;
    if (j.contains("replicates")) t.replicates = j["replicates"].get<std::vector<int>>();
    if (j.contains("initial_samples")) t.initial_samples = j["initial_samples"].get<std::vector<int>>();
    if (j.contains("acquisition")) {
        t.acquisition.clear();
        for (const auto& s : j["acquisition"]) t.acquisition.push_back(acq::acquisition_kind_from_string(s));
    }
    if (j.contains("covariance")) {
        t.covariance.clear();
        for (const auto& s : j["covariance"]) t.covariance.push_back(gp::kernel_kind_from_string(s));
    }
    if (j.contains("problem")) {
        t.problem.clear();
        for (const auto& s : j["problem"]) t.problem.push_back(testbed::problem_from_string(s));
    }
    if (j.contains("magnitude")) t.magnitude = j["magnitude"].get<std::vector<double>>();
    if (j.contains("form")) {
        t.form.clear();
        for (const auto& s : j["form"]) t.form.push_back(testbed::noise_form_from_string(s));
    }
    for (int r : t.replicates)
        if (r < 1 || r > 3) fail(ErrorCode::InvalidArgument, "replicate levels must be 1, 2 or 3", "replicates");
    for (int s : t.initial_samples)
        if (s < 1) fail(ErrorCode::InvalidArgument, "initial sample levels must be positive", "initial_samples");
    for (double m : t.magnitude)
        if (!(m > 0.0)) fail(ErrorCode::InvalidArgument, "noise magnitudes must be positive", "magnitude");
    return t;
}

nlohmann::json to_json(const FactorTable& t) {
    return {
        {"replicates", t.replicates},
        {"initial_samples", t.initial_samples},
        {"acquisition", labels(t.acquisition, [](auto k) { return acq::to_string(k); })},
        {"covariance", labels(t.covariance, [](auto k) { return gp::to_string(k); })},
        {"problem", labels(t.problem, [](auto p) { return testbed::to_string(p); })},
        {"magnitude", t.magnitude},
        {"form", labels(t.form, [](auto f) { return testbed::to_string(f); })},
    };
}

std::string StudyConfig::level(const std::string& factor) const {
    if (factor == "replicates") return std::to_string(replicates);
    if (factor == "initial_samples") return std::to_string(initial_samples) + "d";
    if (factor == "acquisition") return acq::to_string(acquisition);
    if (factor == "covariance") return gp::to_string(covariance);
    if (factor == "problem") return testbed::to_string(problem);
    if (factor == "magnitude") return magnitude_label(magnitude);
    if (factor == "form") return testbed::to_string(form);
    fail(ErrorCode::InvalidArgument, "unknown factor '" + factor + "'");
}

std::string StudyConfig::canonical() const {
    std::string s;
    for (const auto& f : kControllableFactors) s += f + "=" + level(f) + "|";
    for (const auto& f : kNoiseFactors) s += f + "=" + level(f) + "|";
    s.pop_back();
    return s;
}

std::string StudyConfig::id() const { return hex64(fnv1a64(canonical())); }

bo::RunConfig StudyConfig::to_run_config(const bo::RunConfig& base, std::uint64_t seed) const {
    bo::RunConfig rc = base;
    rc.problem = problem;
    rc.noise_form = form;
    rc.noise_magnitude = magnitude;
    rc.kernel = base.kernel;
    rc.kernel.kind = covariance;
    rc.acquisition.kind = acquisition;
    rc.initial.samples_per_dim = initial_samples;
    rc.initial.replicates = replicates;
    rc.seed = seed;
    return rc;
}

nlohmann::json to_json(const StudyConfig& c) {
    nlohmann::json j;
    for (const auto& f : kControllableFactors) j[f] = c.level(f);
    for (const auto& f : kNoiseFactors) j[f] = c.level(f);
    j["replicates"] = c.replicates;
    j["initial_samples"] = c.initial_samples;
    j["magnitude"] = c.magnitude;
    return j;
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
    StudyConfig c;
    c.replicates = j.at("replicates").get<int>();
    c.initial_samples = j.at("initial_samples").get<int>();
    c.acquisition = acq::acquisition_kind_from_string(j.at("acquisition").get<std::string>());
    c.covariance = gp::kernel_kind_from_string(j.at("covariance").get<std::string>());
    c.problem = testbed::problem_from_string(j.at("problem").get<std::string>());
    c.magnitude = j.at("magnitude").get<double>();
    c.form = testbed::noise_form_from_string(j.at("form").get<std::string>());
    return c;
}

std::vector<std::string> factor_levels(const FactorTable& t, const std::string& factor) {
    if (factor == "replicates") return labels(t.replicates, [](int r) { return std::to_string(r); });
    if (factor == "initial_samples")
        return labels(t.initial_samples, [](int s) { return std::to_string(s) + "d"; });
    if (factor == "acquisition") return labels(t.acquisition, [](auto k) { return acq::to_string(k); });
    if (factor == "covariance") return labels(t.covariance, [](auto k) { return gp::to_string(k); });
    if (factor == "problem") return labels(t.problem, [](auto p) { return testbed::to_string(p); });
    if (factor == "magnitude") return labels(t.magnitude, magnitude_label);
    if (factor == "form") return labels(t.form, [](auto f) { return testbed::to_string(f); });
    fail(ErrorCode::InvalidArgument, "unknown factor '" + factor + "'");
}

std::vector<StudyConfig> enumerate_configs(const FactorTable& t) {
    std::vector<StudyConfig> out;
    out.reserve(t.size());
    for (int r : t.replicates)
        for (int s : t.initial_samples)
            for (auto a : t.acquisition)
                for (auto c : t.covariance)
                    for (auto p : t.problem)
                        for (double m : t.magnitude)
                            for (auto f : t.form) out.push_back({r, s, a, c, p, m, f});
    return out;
}

std::uint64_t run_seed(std::uint64_t master_seed, const std::string& config_id, int repeat) {
    return Rng::mix_seed(Rng::mix_seed(master_seed, fnv1a64(config_id)), static_cast<std::uint64_t>(repeat));
}

nlohmann::json to_json(const StudyResult& row) {
    nlohmann::json gaps = nlohmann::json::array();
    for (const auto& g : row.gap) gaps.push_back(g ? nlohmann::json(*g) : nlohmann::json(nullptr));
    nlohmann::json j = {
        {"schema_version", kSchemaVersion},
        {"config_id", row.config_id},
        {"factors", to_json(row.config)},
        {"repeat", row.repeat},
        {"seed", row.seed},
        {"checkpoints", row.checkpoints},
        {"gap", gaps},
        {"delta_f", row.delta_f},
        {"failed", row.failed},
        {"failure", row.failure},
    };
    if (row.wall_time_ms) j["wall_time_ms"] = *row.wall_time_ms;
    return j;
}

StudyResult study_result_from_json(const nlohmann::json& j) {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
        fail(ErrorCode::InvalidArgument, "unsupported results schema version");
    StudyResult r;
    r.config_id = j.at("config_id").get<std::string>();
    r.config = study_config_from_json(j.at("factors"));
    r.repeat = j.at("repeat").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.checkpoints = j.at("checkpoints").get<std::array<int, 3>>();
    const auto& gaps = j.at("gap");
    for (std::size_t i = 0; i < 3 && i < gaps.size(); ++i)
        if (!gaps[i].is_null()) r.gap[i] = gaps[i].get<double>();
    r.delta_f = j.value("delta_f", 0.0);
    r.failed = j.at("failed").get<bool>();
    r.failure = j.value("failure", std::string());
    if (j.contains("wall_time_ms")) r.wall_time_ms = j["wall_time_ms"].get<double>();
    return r;
}

std::vector<StudyResult> load_results(const std::filesystem::path& path) {
    std::vector<StudyResult> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(study_result_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception&) {
            // torn final line from an interrupted run; the run is redone
        }
    }
    return out;
}

StudySummary run_study(const std::vector<StudyConfig>& configs, const StudyOptions& options,
                       const std::filesystem::path& out) {
    if (options.repeats < 1) fail(ErrorCode::InvalidArgument, "repeats must be positive");
    std::set<std::pair<std::string, int>> done;
    for (const auto& row : load_results(out)) done.emplace(row.config_id, row.repeat);

    struct Planned {
        const StudyConfig* config;
        std::string id;
        int repeat;
    };
    std::vector<Planned> pending;
    StudySummary summary;
    for (const auto& c : configs) {
        std::string id = c.id();
        for (int r = 1; r <= options.repeats; ++r) {
            ++summary.planned;
            if (done.count({id, r})) {
                ++summary.skipped;
                continue;
            }
            pending.push_back({&c, id, r});
        }
    }
    if (pending.empty()) return summary;

    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    bool torn_tail = false;
    {
        std::ifstream tail(out, std::ios::binary | std::ios::ate);
        if (tail && tail.tellg() > 0) {
            tail.seekg(-1, std::ios::end);
            torn_tail = tail.get() != '\n';
        }
    }
    std::ofstream sink(out, std::ios::app);
    if (!sink) fail(ErrorCode::Io, "cannot open results file " + out.string());
    // Terminate a torn final line so the first new row parses.
    if (torn_tail) sink << '\n';
    std::mutex sink_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failures{0};

    auto worker = [&]() {
        for (std::size_t i = next++; i < pending.size(); i = next++) {
            const Planned& p = pending[i];
            StudyResult row;
            row.config_id = p.id;
            row.config = *p.config;
            row.repeat = p.repeat;
            row.seed = run_seed(options.master_seed, p.id, p.repeat);
            auto start = std::chrono::steady_clock::now();
            bo::RunConfig rc = p.config->to_run_config(options.base, row.seed);
            const auto problem = testbed::make_problem(rc.problem);
            row.delta_f = problem.delta_f();
            auto counts = rc.checkpoint_counts(problem.dim());
            for (std::size_t k = 0; k < 3 && k < counts.size(); ++k) row.checkpoints[k] = counts[k];
            try {
                bo::Trace trace = bo::run_bo(rc);
                for (const auto& cp : trace.checkpoints)
                    for (std::size_t k = 0; k < 3; ++k)
                        if (cp.observations == row.checkpoints[k]) row.gap[k] = cp.gap;
                row.failed = trace.failed;
                row.failure = trace.failure;
            } catch (const std::exception& e) {
                row.failed = true;
                row.failure = e.what();
            }
            if (row.failed) ++failures;
            if (options.record_wall_time)
                row.wall_time_ms = std::chrono::duration<double, std::milli>(
                                       std::chrono::steady_clock::now() - start).count();
            std::string line = to_json(row).dump();
            std::lock_guard<std::mutex> lock(sink_mutex);
            sink << line << '\n';
            sink.flush();
            if (!sink) fail(ErrorCode::Io, "write to results file failed");
        }
    };

    const int threads = std::max(1, options.parallelism);
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            try {
                worker();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next = pending.size();
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    summary.executed = pending.size();
    summary.failed = failures;
    return summary;
}

CheckpointLevel checkpoint_from_string(const std::string& label) {
    if (label == "25d") return CheckpointLevel::Early;
    if (label == "37.5d") return CheckpointLevel::Middle;
    if (label == "50d") return CheckpointLevel::Final;
    fail(ErrorCode::InvalidArgument, "checkpoint must be 25d, 37.5d or 50d");
}

std::string to_string(CheckpointLevel level) {
    switch (level) {
        case CheckpointLevel::Early: return "25d";
        case CheckpointLevel::Middle: return "37.5d";
        case CheckpointLevel::Final: return "50d";
    }
    return "50d";
}

const LevelStat* MainEffects::find(const std::string& factor, const std::string& level) const {
    for (const auto& s : stats)
        if (s.factor == factor && s.level == level) return &s;
    return nullptr;
}

MainEffects main_effects(const std::vector<StudyResult>& results, CheckpointLevel checkpoint,
                         const FactorTable& table) {
    MainEffects out;
    out.checkpoint = checkpoint;
    const auto k = static_cast<std::size_t>(checkpoint);
    std::vector<std::string> factors(kControllableFactors.begin(), kControllableFactors.end());
    factors.insert(factors.end(), kNoiseFactors.begin(), kNoiseFactors.end());
    for (const auto& factor : factors) {
        for (const auto& level : factor_levels(table, factor)) {
            LevelStat s{factor, level};
            double sum = 0.0;
            for (const auto& r : results) {
                if (r.config.level(factor) != level) continue;
                if (r.failed || !r.gap[k]) {
                    ++s.failed;
                    continue;
                }
                sum += *r.gap[k];
                ++s.count;
            }
            s.missing = s.count == 0;
            s.mean = s.missing ? 0.0 : sum / static_cast<double>(s.count);
            out.stats.push_back(s);
        }
    }
    return out;
}

std::string InteractionTable::best_level(const std::string& controllable, std::size_t col) const {
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].first == controllable && cells[r][col].best) return rows[r].second;
    return {};
}

InteractionTable interaction_table(const std::vector<StudyResult>& results, CheckpointLevel checkpoint,
                                   const FactorTable& table) {
    InteractionTable out;
    out.checkpoint = checkpoint;
    const auto k = static_cast<std::size_t>(checkpoint);
    for (const auto& f : kControllableFactors)
        for (const auto& l : factor_levels(table, f)) out.rows.emplace_back(f, l);
    for (const auto& f : kNoiseFactors)
        for (const auto& l : factor_levels(table, f)) out.cols.emplace_back(f, l);
    out.cells.assign(out.rows.size(), std::vector<InteractionCell>(out.cols.size()));

    for (std::size_t r = 0; r < out.rows.size(); ++r)
        for (std::size_t c = 0; c < out.cols.size(); ++c) {
            double sum = 0.0;
            auto& cell = out.cells[r][c];
            for (const auto& row : results) {
                if (row.failed || !row.gap[k]) continue;
                if (row.config.level(out.rows[r].first) != out.rows[r].second) continue;
                if (row.config.level(out.cols[c].first) != out.cols[c].second) continue;
                sum += *row.gap[k];
                ++cell.count;
            }
            cell.missing = cell.count == 0;
            cell.mean = cell.missing ? 0.0 : sum / static_cast<double>(cell.count);
        }

    // Mark the best level of each controllable factor per noise column;
    // ties keep the first level in table order.
    for (std::size_t c = 0; c < out.cols.size(); ++c) {
        for (const auto& f : kControllableFactors) {
            std::size_t best = out.rows.size();
            for (std::size_t r = 0; r < out.rows.size(); ++r) {
                if (out.rows[r].first != f || out.cells[r][c].missing) continue;
                if (best == out.rows.size() || out.cells[r][c].mean < out.cells[best][c].mean) best = r;
            }
            if (best < out.rows.size()) out.cells[best][c].best = true;
        }
    }
    return out;
}

std::string to_csv(const MainEffects& e) {
    std::ostringstream os;
    os << "checkpoint,factor,level,mean_gap,count,failed\n";
    for (const auto& s : e.stats)
        os << to_string(e.checkpoint) << ',' << s.factor << ',' << csv_escape(s.level) << ','
           << (s.missing ? std::string() : fmt_double(s.mean)) << ',' << s.count << ',' << s.failed << '\n';
    return os.str();
}

nlohmann::json to_json(const MainEffects& e) {
    nlohmann::json factors = nlohmann::json::object();
    for (const auto& s : e.stats) {
        factors[s.factor]["levels"].push_back(s.level);
        factors[s.factor]["mean_gap"].push_back(s.missing ? nlohmann::json(nullptr) : nlohmann::json(s.mean));
        factors[s.factor]["count"].push_back(s.count);
        factors[s.factor]["failed"].push_back(s.failed);
    }
    return {{"checkpoint", to_string(e.checkpoint)}, {"factors", factors}};
}

std::string to_csv(const InteractionTable& t) {
    std::ostringstream os;
    os << "checkpoint,controllable_factor,controllable_level,noise_factor,noise_level,mean_gap,count,best\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.cols.size(); ++c) {
            const auto& cell = t.cells[r][c];
            os << to_string(t.checkpoint) << ',' << t.rows[r].first << ',' << csv_escape(t.rows[r].second) << ','
               << t.cols[c].first << ',' << csv_escape(t.cols[c].second) << ','
               << (cell.missing ? std::string() : fmt_double(cell.mean)) << ',' << cell.count << ','
               << (cell.best ? 1 : 0) << '\n';
        }
    return os.str();
}

nlohmann::json to_json(const InteractionTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back({{"factor", r.first}, {"level", r.second}});
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : t.cols) cols.push_back({{"factor", c.first}, {"level", c.second}});
    nlohmann::json mean = nlohmann::json::array();
    nlohmann::json best = nlohmann::json::array();
    nlohmann::json count = nlohmann::json::array();
    for (const auto& row : t.cells) {
        nlohmann::json m = nlohmann::json::array(), b = nlohmann::json::array(), n = nlohmann::json::array();
        for (const auto& cell : row) {
            m.push_back(cell.missing ? nlohmann::json(nullptr) : nlohmann::json(cell.mean));
            b.push_back(cell.best);
            n.push_back(cell.count);
        }
        mean.push_back(m);
        best.push_back(b);
        count.push_back(n);
    }
    return {{"checkpoint", to_string(t.checkpoint)}, {"rows", rows}, {"cols", cols},
            {"mean_gap", mean}, {"best", best}, {"count", count}};
}

}  // namespace nbo::study
