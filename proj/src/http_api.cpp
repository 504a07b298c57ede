#include "kgx/http_api.hpp"

#include <charconv>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "kgx/analysis.hpp"
#include "kgx/hash.hpp"

namespace kgx {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parse:
        case ErrorCode::Validation:
        case ErrorCode::Domain:
        case ErrorCode::Config:
        case ErrorCode::Format:
        case ErrorCode::Lookup:
        case ErrorCode::InsufficientViolations: return 400;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Comparability: return 409;
        case ErrorCode::Training:
        case ErrorCode::Storage: return 500;
    }
    return 500;
}

std::string error_body(ErrorCode code, const std::string& message) {
    ordered_json j;
    j["error"] = {{"code", error_code_name(code)}, {"message", message}};
    return j.dump();
}

namespace {

ordered_json entry_json(const SystemEntry& e) {
    ordered_json j;
    j["id"] = e.id;
    j["system_name"] = e.header.system_name;
    j["dataset_name"] = e.header.dataset_name;
    j["task"] = e.header.task;
    j["rank_basis"] = rank_basis_name(e.header.rank_basis);
    j["schema_version"] = e.header.schema_version;
    j["custom_features"] = ordered_json::parse(emit_header(e.header)).value("custom_features", ordered_json::object());
    j["created_at"] = e.created_at;
    j["sequence"] = e.sequence;
    j["record_count"] = e.record_count;
    return j;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string::npos ? s.size() : comma;
        if (end > start) out.push_back(s.substr(start, end - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& name, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw Error(ErrorCode::Config, "query parameter '" + name + "': not a number");
    return value;
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

CiConfig ci_from_query(const httplib::Request& req, CiMethod default_method) {
    CiConfig ci;
    ci.method = default_method;
    if (auto v = param(req, "ci")) {
        auto m = parse_ci_method(*v);
        if (!m) throw Error(ErrorCode::Config, "query parameter 'ci': expected none, bootstrap or ttest");
        ci.method = *m;
    }
    if (auto v = param(req, "ci_level")) {
        ci.level = parse_number<double>("ci_level", *v);
        if (!(ci.level > 0.0 && ci.level < 1.0)) throw Error(ErrorCode::Config, "query parameter 'ci_level': must be in (0, 1)");
    }
    if (auto v = param(req, "ci_seed")) ci.seed = parse_number<std::uint64_t>("ci_seed", *v);
    if (auto v = param(req, "ci_resamples")) ci.resamples = parse_number<int>("ci_resamples", *v);
    return ci;
}

void send_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

}  // namespace

std::string system_entry_json(const SystemEntry& e) { return entry_json(e).dump(); }

struct ApiServer::Impl {
    Store& store;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Store& s) : store(s) { routes(); }

    template <typename F>
    httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_json(res, http_status_for(e.code()), error_body(e.code(), e.what()));
            } catch (const std::exception& e) {
                send_json(res, 500, error_body(ErrorCode::Storage, e.what()));
            }
        };
    }

    void routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

        server.Post("/api/systems", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const SystemOutput s = parse_system_output(req.body);
            validate(s);
            const std::string id = sha256_hex(emit_system_output(s));
            const bool existed = store.contains(id);
            const std::string stored = store.put(s);
            send_json(res, existed ? 200 : 201, ordered_json{{"id", stored}, {"created", !existed}}.dump());
        }));

        server.Get("/api/systems", guarded([this](const httplib::Request&, httplib::Response& res) {
            ordered_json arr = ordered_json::array();
            for (const auto& e : store.list()) arr.push_back(entry_json(e));
            send_json(res, 200, ordered_json{{"systems", arr}}.dump());
        }));

        server.Get(R"(/api/systems/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, entry_json(store.entry(req.matches[1])).dump());
        }));

        server.Delete(R"(/api/systems/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            store.remove(id);
            send_json(res, 200, ordered_json{{"deleted", id}}.dump());
        }));

        server.Get(R"(/api/systems/([^/]+)/analysis)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       AnalysisRequest r;
                       if (auto v = param(req, "metric")) r.metrics = parse_metric_list(*v);
                       if (auto v = param(req, "feature")) r.features = split_list(*v);
                       r.ci = ci_from_query(req, CiMethod::Bootstrap);
                       send_json(res, 200, store.analysis_json(req.matches[1], r));
                   }));

        server.Get("/api/compare", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto ids = split_list(param(req, "ids").value_or(""));
            if (ids.size() < 2) throw Error(ErrorCode::Config, "query parameter 'ids': at least two system ids required");
            const Metric metric = parse_metric(param(req, "metric").value_or("mrr"));
            AnalysisRequest r;
            r.metrics = {metric};
            r.ci = ci_from_query(req, CiMethod::None);
            if (auto v = param(req, "feature")) {
                r.features = split_list(*v);
            } else {
                r.features = shared_features(ids);
            }
            std::vector<SingleAnalysisReport> reports;
            for (const auto& id : ids) reports.push_back(store.analysis(id, r));
            send_json(res, 200, comparison_report_json(compare_systems(reports, metric)));
        }));

        server.Get(R"(/api/systems/([^/]+)/buckets/([^/]+)/([^/]+)/examples)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string id = req.matches[1];
                       const std::string feature = req.matches[2];
                       const std::string label = req.matches[3];
                       Page page;
                       if (auto v = param(req, "offset")) page.offset = parse_number<std::size_t>("offset", *v);
                       if (auto v = param(req, "limit")) page.limit = parse_number<std::size_t>("limit", *v);
                       if (page.limit == 0 || page.limit > 1000) {
                           throw Error(ErrorCode::Config, "query parameter 'limit': must be in 1..1000");
                       }
                       const SystemOutput s = store.get(id);
                       const Bucketing b = assign_feature(s, feature, store.resources_for(s.header.dataset_name));
                       std::size_t total = 0;
                       for (const auto& [rid, l] : b.assignment.labels) total += l == label ? 1 : 0;
                       const auto records = drill_down(s, b.assignment, label, page);
                       ordered_json arr = ordered_json::array();
                       for (const auto& rec : records) arr.push_back(ordered_json::parse(emit_record(rec)));
                       ordered_json j;
                       j["system_id"] = id;
                       j["feature"] = feature;
                       j["label"] = label;
                       j["offset"] = page.offset;
                       j["limit"] = page.limit;
                       j["total"] = total;
                       j["records"] = std::move(arr);
                       send_json(res, 200, j.dump());
                   }));
    }

    // Features every listed system can be bucketed by, in the first system's order.
    std::vector<std::string> shared_features(const std::vector<std::string>& ids) {
        std::vector<std::string> common;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const SystemOutput s = store.get(ids[i]);
            auto feats = available_features(s, store.resources_for(s.header.dataset_name));
            if (i == 0) {
                common = std::move(feats);
                continue;
            }
            std::erase_if(common, [&](const std::string& f) { return std::find(feats.begin(), feats.end(), f) == feats.end(); });
        }
        return common;
    }
};

ApiServer::ApiServer(Store& store) : impl_(std::make_unique<Impl>(store)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) throw Error(ErrorCode::Storage, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void ApiServer::run() { impl_->server.listen_after_bind(); }

void ApiServer::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void ApiServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace kgx
