#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cdt/error.hpp"
#include "cdt/report.hpp"

namespace cdt::report {
namespace {

using nlohmann::json;

// Enum spellings as persisted. Parsers reject anything else so a truncated
// or hand-edited log fails loudly instead of loading garbage.

const char* kind_name(sched::DeviceKind k) {
    return k == sched::DeviceKind::mobile ? "mobile" : "desktop";
}

sched::DeviceKind kind_of(const std::string& s) {
    if (s == "mobile") return sched::DeviceKind::mobile;
    if (s == "desktop") return sched::DeviceKind::desktop;
    fail(errc::schema_mismatch, "unknown device kind: " + s);
}

sched::DeviceRole role_of(const std::string& s) {
    if (s == "mobile") return sched::DeviceRole::mobile;
    if (s == "paired_pc") return sched::DeviceRole::paired_pc;
    if (s == "baseline_pc") return sched::DeviceRole::baseline_pc;
    fail(errc::schema_mismatch, "unknown device role: " + s);
}

const char* state_name(sched::StateMode m) {
    return m == sched::StateMode::stateful ? "stateful" : "stateless";
}

sched::StateMode state_of(const std::string& s) {
    if (s == "stateful") return sched::StateMode::stateful;
    if (s == "stateless") return sched::StateMode::stateless;
    fail(errc::schema_mismatch, "unknown state mode: " + s);
}

const char* stage_tag(sched::StageKind k) {
    switch (k) {
    case sched::StageKind::before: return "B";
    case sched::StageKind::mobile: return "M";
    case sched::StageKind::after: return "A";
    }
    return "B";
}

sched::StageKind stage_of(const std::string& s) {
    if (s == "B") return sched::StageKind::before;
    if (s == "M") return sched::StageKind::mobile;
    if (s == "A") return sched::StageKind::after;
    fail(errc::schema_mismatch, "unknown stage tag: " + s);
}

adex::LandingRoute route_of(const std::string& s) {
    if (s == "direct-href") return adex::LandingRoute::direct_href;
    if (s == "adurl-param") return adex::LandingRoute::adurl_param;
    if (s == "redirect-param") return adex::LandingRoute::redirect_param;
    fail(errc::schema_mismatch, "unknown landing route: " + s);
}

adex::CrawlType crawl_of(const std::string& s) {
    if (s == "train") return adex::CrawlType::train;
    if (s == "test") return adex::CrawlType::test;
    fail(errc::schema_mismatch, "unknown crawl type: " + s);
}

adex::CrawlPhase phase_of(const std::string& s) {
    if (s == "before") return adex::CrawlPhase::before;
    if (s == "mobile") return adex::CrawlPhase::mobile;
    if (s == "after") return adex::CrawlPhase::after;
    fail(errc::schema_mismatch, "unknown crawl phase: " + s);
}

json parse_json(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(errc::schema_mismatch, "unparseable JSON in " + what);
    return j;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(errc::io_failure, "cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spill(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(errc::io_failure, "cannot write " + tmp.string());
        out << content;
        if (!out.flush()) fail(errc::io_failure, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, p, ec);
    if (ec) fail(errc::io_failure, "rename failed for " + p.string() + ": " + ec.message());
}

} // namespace

ExperimentStore::ExperimentStore(std::filesystem::path root) : root_(std::move(root)) {
    if (root_.empty()) fail(errc::config_invalid, "store root is empty");
    std::error_code ec;
    for (const char* sub : {"", "runs", "datasets", "reports", "personas"}) {
        std::filesystem::create_directories(root_ / sub, ec);
        if (ec) fail(errc::io_failure, "cannot create store directory " + (root_ / sub).string());
    }
}

bool ExperimentStore::has_run(const std::string& run_id) const {
    return std::filesystem::exists(root_ / "runs" / run_id / "config");
}

std::string run_config_json(const sched::RunRecord& rec) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["run_id"] = rec.run_id;
    j["run_ordinal"] = rec.run_ordinal;
    j["seed"] = rec.seed;

    json c;
    c["setup_code"] = rec.config.setup_code;
    c["persona_id"] = rec.config.persona_id;
    c["t_train_min"] = rec.config.t_train_min;
    c["t_test_min"] = rec.config.t_test_min;
    c["t_wait_min"] = rec.config.t_wait_min;
    c["t_rest_min"] = rec.config.t_rest_min;
    c["sessions"] = rec.config.sessions;
    c["runs"] = rec.config.runs;
    c["training_desktops"] = rec.config.training_desktops;
    c["stateless_desktops"] = rec.config.stateless_desktops;
    c["desktop_visits_per_stage"] = rec.config.desktop_visits_per_stage;
    j["config"] = c;

    json devices = json::array();
    for (const auto& d : rec.devices) {
        json dj;
        dj["device_id"] = d.device_id;
        dj["kind"] = kind_name(d.kind);
        dj["role"] = sched::device_role_name(d.role);
        dj["ip_label"] = d.ip_label;
        dj["state_mode"] = state_name(d.state_mode);
        devices.push_back(dj);
    }
    j["devices"] = devices;

    json t;
    t["run_id"] = rec.truth.run_id;
    t["mobile_device"] = rec.truth.mobile_device;
    t["paired_pc"] = rec.truth.paired_pc;
    t["baseline_pc"] = rec.truth.baseline_pc;
    t["device_ip"] = rec.truth.device_ip;
    j["truth"] = t;

    return j.dump(2) + "\n";
}

std::string visit_line(const sched::VisitLogEntry& e) {
    json j;
    j["at"] = e.at;
    j["session"] = e.session_id;
    j["stage"] = stage_tag(e.stage);
    j["device"] = e.device_id;
    j["page"] = e.page;
    j["train"] = e.is_train;
    j["ads"] = e.ads;
    return j.dump();
}

std::string observation_line(const adex::AdObservation& o) {
    json j;
    j["landing"] = o.landing_url;
    j["domain"] = o.landing_domain;
    j["route"] = adex::landing_route_name(o.route);
    j["page"] = o.page;
    j["run"] = o.run_id;
    j["device"] = o.device_id;
    j["stage"] = o.stage_id;
    j["session"] = o.session_id;
    j["at"] = o.observed_at;
    j["crawl"] = adex::crawl_type_name(o.crawl_type);
    j["phase"] = adex::crawl_phase_name(o.crawl_phase);
    return j.dump();
}

void ExperimentStore::save_run(const sched::RunRecord& rec) const {
    if (rec.run_id.empty()) fail(errc::config_invalid, "run record has no id");
    std::filesystem::path dir = root_ / "runs" / rec.run_id;
    if (std::filesystem::exists(dir))
        fail(errc::io_failure, "run directory already exists: " + dir.string());

    std::filesystem::path tmp = root_ / "runs" / ("." + rec.run_id + ".partial");
    std::error_code ec;
    std::filesystem::remove_all(tmp, ec);
    std::filesystem::create_directories(tmp, ec);
    if (ec) fail(errc::io_failure, "cannot create " + tmp.string());

    spill(tmp / "config", run_config_json(rec));

    std::string visits;
    for (const auto& e : rec.visit_log) {
        visits += visit_line(e);
        visits += '\n';
    }
    spill(tmp / "sessions.log", visits);

    std::string obs;
    for (const auto& session : rec.sessions) {
        for (const auto& stage : session.stages) {
            for (const auto& [device, data] : stage.devices) {
                for (const auto& o : data.ads) {
                    obs += observation_line(o);
                    obs += '\n';
                }
            }
        }
    }
    spill(tmp / "observations.log", obs);

    std::filesystem::rename(tmp, dir, ec);
    if (ec) fail(errc::io_failure, "cannot finalize " + dir.string() + ": " + ec.message());
}

sched::RunRecord ExperimentStore::load_run(const std::string& run_id) const {
    std::filesystem::path dir = root_ / "runs" / run_id;
    json j = parse_json(slurp(dir / "config"), run_id + "/config");
    if (j.value("schema_version", 0) != kSchemaVersion)
        fail(errc::schema_mismatch, "unsupported store schema in " + run_id);

    sched::RunRecord rec;
    rec.run_id = j.at("run_id").get<std::string>();
    rec.run_ordinal = j.at("run_ordinal").get<int>();
    rec.seed = j.at("seed").get<uint64_t>();

    const json& c = j.at("config");
    rec.config.setup_code = c.at("setup_code").get<std::string>();
    rec.config.persona_id = c.at("persona_id").get<std::string>();
    rec.config.t_train_min = c.at("t_train_min").get<int>();
    rec.config.t_test_min = c.at("t_test_min").get<int>();
    rec.config.t_wait_min = c.at("t_wait_min").get<int>();
    rec.config.t_rest_min = c.at("t_rest_min").get<int>();
    rec.config.sessions = c.at("sessions").get<int>();
    rec.config.runs = c.at("runs").get<int>();
    rec.config.training_desktops = c.at("training_desktops").get<int>();
    rec.config.stateless_desktops = c.at("stateless_desktops").get<bool>();
    rec.config.desktop_visits_per_stage = c.at("desktop_visits_per_stage").get<int>();

    for (const json& dj : j.at("devices")) {
        sched::DeviceProfile d;
        d.device_id = dj.at("device_id").get<std::string>();
        d.kind = kind_of(dj.at("kind").get<std::string>());
        d.role = role_of(dj.at("role").get<std::string>());
        d.ip_label = dj.at("ip_label").get<std::string>();
        d.state_mode = state_of(dj.at("state_mode").get<std::string>());
        rec.devices.push_back(std::move(d));
    }

    const json& t = j.at("truth");
    rec.truth.run_id = t.at("run_id").get<std::string>();
    rec.truth.mobile_device = t.at("mobile_device").get<std::string>();
    rec.truth.paired_pc = t.at("paired_pc").get<std::string>();
    rec.truth.baseline_pc = t.at("baseline_pc").get<std::string>();
    for (auto it = t.at("device_ip").begin(); it != t.at("device_ip").end(); ++it)
        rec.truth.device_ip[it.key()] = it.value().get<std::string>();

    // Stage boundaries are a pure function of the config, so the timeline is
    // rebuilt rather than stored.
    auto plans = sched::build_timeline(rec.config, rec.devices, rec.run_ordinal);
    for (const auto& plan : plans) {
        sched::SessionRecord srec;
        srec.session_id = plan.session_id;
        srec.start = plan.start;
        for (const auto& sp : plan.stages) {
            sched::StageData data;
            data.kind = sp.kind;
            data.start = plan.start + sp.start_offset;
            data.end = data.start + sp.duration;
            srec.stages.push_back(std::move(data));
        }
        rec.sessions.push_back(std::move(srec));
    }

    auto stage_slot = [&](int session_id, sched::StageKind kind) -> sched::StageData& {
        if (session_id < 1 || size_t(session_id) > rec.sessions.size())
            fail(errc::schema_mismatch, "log references unknown session");
        for (auto& stage : rec.sessions[size_t(session_id - 1)].stages) {
            if (stage.kind == kind) return stage;
        }
        fail(errc::schema_mismatch, "log references unknown stage");
    };

    std::istringstream visits(slurp(dir / "sessions.log"));
    std::string line;
    while (std::getline(visits, line)) {
        if (line.empty()) continue;
        json v = parse_json(line, run_id + "/sessions.log");
        sched::VisitLogEntry e;
        e.at = v.at("at").get<Tick>();
        e.session_id = v.at("session").get<int>();
        e.stage = stage_of(v.at("stage").get<std::string>());
        e.device_id = v.at("device").get<std::string>();
        e.page = v.at("page").get<std::string>();
        e.is_train = v.at("train").get<bool>();
        e.ads = v.at("ads").get<int>();

        auto& slot = stage_slot(e.session_id, e.stage).devices[e.device_id];
        if (slot.pages.empty()) slot.first_visit = e.at;
        slot.pages.push_back(e.page);
        rec.visit_log.push_back(std::move(e));
    }

    std::istringstream obs(slurp(dir / "observations.log"));
    while (std::getline(obs, line)) {
        if (line.empty()) continue;
        json o = parse_json(line, run_id + "/observations.log");
        adex::AdObservation a;
        a.landing_url = o.at("landing").get<std::string>();
        a.landing_domain = o.at("domain").get<std::string>();
        a.route = route_of(o.at("route").get<std::string>());
        a.page = o.at("page").get<std::string>();
        a.run_id = o.at("run").get<std::string>();
        a.device_id = o.at("device").get<std::string>();
        a.stage_id = o.at("stage").get<std::string>();
        a.session_id = o.at("session").get<int>();
        a.observed_at = o.at("at").get<Tick>();
        a.crawl_type = crawl_of(o.at("crawl").get<std::string>());
        a.crawl_phase = phase_of(o.at("phase").get<std::string>());

        auto& slot = stage_slot(a.session_id, stage_of(a.stage_id)).devices[a.device_id];
        slot.ads.push_back(std::move(a));
    }

    return rec;
}

std::vector<std::string> ExperimentStore::list_runs() const {
    std::vector<std::string> out;
    std::filesystem::path dir = root_ / "runs";
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        std::string name = entry.path().filename().string();
        if (name.empty() || name.front() == '.') continue; // abandoned partials
        out.push_back(name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::filesystem::path ExperimentStore::path_of(const std::string& relative) const {
    return root_ / relative;
}

void ExperimentStore::write_text(const std::string& relative,
                                 const std::string& content) const {
    std::filesystem::path p = root_ / relative;
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) fail(errc::io_failure, "cannot create " + p.parent_path().string());
    spill(p, content);
}

std::string ExperimentStore::read_text(const std::string& relative) const {
    return slurp(root_ / relative);
}

} // namespace cdt::report
