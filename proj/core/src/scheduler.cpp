#include "cdt/scheduler.hpp"

#include <algorithm>

#include "cdt/error.hpp"

namespace cdt::sched {
namespace {

constexpr const char* kSharedIp = "ip-shared";
constexpr const char* kRemoteIp = "ip-remote";

adex::CrawlPhase phase_of(StageKind k) {
    switch (k) {
    case StageKind::before: return adex::CrawlPhase::before;
    case StageKind::mobile: return adex::CrawlPhase::mobile;
    case StageKind::after: return adex::CrawlPhase::after;
    }
    return adex::CrawlPhase::before;
}

const char* stage_tag(StageKind k) {
    switch (k) {
    case StageKind::before: return "B";
    case StageKind::mobile: return "M";
    case StageKind::after: return "A";
    }
    return "B";
}

} // namespace

const char* device_role_name(DeviceRole r) {
    switch (r) {
    case DeviceRole::mobile: return "mobile";
    case DeviceRole::paired_pc: return "paired_pc";
    case DeviceRole::baseline_pc: return "baseline_pc";
    }
    return "baseline_pc";
}

const char* stage_kind_name(StageKind k) {
    switch (k) {
    case StageKind::before: return "before";
    case StageKind::mobile: return "mobile";
    case StageKind::after: return "after";
    }
    return "before";
}

uint64_t CookieJar::content_hash() const {
    std::vector<std::string_view> parts;
    std::string epoch_str = std::to_string(epoch);
    uint64_t h = hash_parts({"jar", epoch_str});
    for (const auto& [tracker, value] : cookies) {
        uint64_t entry = hash_parts({tracker, value});
        // Fold entries in map (sorted) order.
        h ^= entry + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

void RunConfig::validate() const {
    if (t_train_min <= 0 || t_test_min <= 0 || t_wait_min <= 0 || t_rest_min <= 0)
        fail(errc::config_invalid, "stage durations must be positive");
    if (sessions <= 0) fail(errc::config_invalid, "session count must be positive");
    if (runs <= 0) fail(errc::config_invalid, "run count must be positive");
    if (persona_id.empty()) fail(errc::config_invalid, "run config lacks a persona");
    if (desktop_visits_per_stage <= 0)
        fail(errc::config_invalid, "desktop_visits_per_stage must be positive");
}

SetupSpec preset(const std::string& setup_code) {
    SetupSpec spec;
    spec.code = setup_code;
    RunConfig& b = spec.base;
    b.setup_code = setup_code;

    if (setup_code == "1a" || setup_code == "1b") {
        spec.persona_ordinals = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        b.runs = 4;
        b.sessions = 15;
        spec.combined = setup_code == "1b";
        return spec;
    }
    if (setup_code == "2a" || setup_code == "2b" || setup_code == "2c" || setup_code == "2d") {
        spec.persona_ordinals = {1, 4};
        b.runs = 4;
        b.sessions = 12;
        b.t_train_min = 480;
        b.t_test_min = 30;
        b.training_desktops = -1;
        spec.combined = setup_code == "2b" || setup_code == "2d";
        spec.boosted = setup_code == "2c" || setup_code == "2d";
        spec.include_persona_vector = false;
        return spec;
    }
    if (setup_code == "3a" || setup_code == "3b") {
        spec.persona_ordinals = {1, 2, 3, 4, 5};
        b.runs = 2;
        b.sessions = 15;
        b.stateless_desktops = true;
        spec.combined = setup_code == "3b";
        return spec;
    }
    if (setup_code == "pre1" || setup_code == "pre2") {
        spec.persona_ordinals = {2};
        b.runs = 1;
        b.sessions = 28; // two days of back-to-back 100-minute cycles
        spec.permutation_only = true;
        spec.single_ip = true;
        spec.desktop_count = 3;
        if (setup_code == "pre2") b.training_desktops = 1;
        return spec;
    }
    fail(errc::unknown_setup, "unknown setup code: " + setup_code);
}

std::vector<DeviceProfile> make_devices(const SetupSpec& spec) {
    std::vector<DeviceProfile> out;
    DeviceProfile mobile;
    mobile.device_id = "mob-01";
    mobile.kind = DeviceKind::mobile;
    mobile.role = DeviceRole::mobile;
    mobile.ip_label = kSharedIp;
    mobile.state_mode = StateMode::stateful;
    out.push_back(mobile);

    if (spec.single_ip) {
        const char* names[] = {"pc-a", "pc-b", "pc-c", "pc-d"};
        for (int i = 0; i < spec.desktop_count; ++i) {
            DeviceProfile pc;
            pc.device_id = names[i % 4];
            pc.kind = DeviceKind::desktop;
            pc.role = DeviceRole::paired_pc; // everything sits behind one address
            pc.ip_label = kSharedIp;
            pc.state_mode = StateMode::stateful;
            out.push_back(pc);
        }
        return out;
    }

    DeviceProfile paired;
    paired.device_id = "pc-paired";
    paired.kind = DeviceKind::desktop;
    paired.role = DeviceRole::paired_pc;
    paired.ip_label = kSharedIp;
    paired.state_mode =
        spec.base.stateless_desktops ? StateMode::stateless : StateMode::stateful;
    out.push_back(paired);

    DeviceProfile baseline = paired;
    baseline.device_id = "pc-baseline";
    baseline.role = DeviceRole::baseline_pc;
    baseline.ip_label = kRemoteIp;
    out.push_back(baseline);
    return out;
}

Tick session_span(const RunConfig& cfg) {
    return Tick(3 * cfg.t_test_min + 2 * cfg.t_wait_min + cfg.t_train_min + cfg.t_rest_min) *
           kTicksPerMinute;
}

Tick run_start_tick(const RunConfig& cfg, int run_ordinal) {
    // Each run gets its own block of whole days (plus one rest day) so the
    // calendar features vary across runs without overlapping.
    Tick span = session_span(cfg) * cfg.sessions;
    Tick days = (span + kTicksPerDay - 1) / kTicksPerDay + 1;
    return Tick(run_ordinal - 1) * days * kTicksPerDay + 8 * kTicksPerHour;
}

std::vector<SessionPlan> build_timeline(const RunConfig& cfg,
                                        const std::vector<DeviceProfile>& devices,
                                        int run_ordinal) {
    cfg.validate();
    std::vector<std::string> desktops;
    std::string mobile_id;
    for (const auto& d : devices) {
        if (d.kind == DeviceKind::mobile) mobile_id = d.device_id;
        else desktops.push_back(d.device_id);
    }

    const Tick t_test = Tick(cfg.t_test_min) * kTicksPerMinute;
    const Tick t_train = Tick(cfg.t_train_min) * kTicksPerMinute;
    const Tick t_wait = Tick(cfg.t_wait_min) * kTicksPerMinute;
    const Tick start0 = run_start_tick(cfg, run_ordinal);
    const Tick span = session_span(cfg);

    std::vector<SessionPlan> plans;
    plans.reserve(size_t(cfg.sessions));
    for (int s = 1; s <= cfg.sessions; ++s) {
        SessionPlan plan;
        plan.session_id = s;
        plan.start = start0 + Tick(s - 1) * span;

        StagePlan before;
        before.kind = StageKind::before;
        before.start_offset = 0;
        before.duration = t_test;
        before.devices = desktops;
        plan.stages.push_back(before);

        StagePlan mob;
        mob.kind = StageKind::mobile;
        mob.start_offset = t_test + t_wait;
        mob.duration = t_train + t_test;
        mob.train_duration = t_train;
        mob.devices.push_back(mobile_id);
        int trainers = cfg.training_desktops < 0 ? int(desktops.size())
                                                 : std::min<int>(cfg.training_desktops,
                                                                 int(desktops.size()));
        for (int i = 0; i < trainers; ++i) mob.devices.push_back(desktops[size_t(i)]);
        plan.stages.push_back(mob);

        StagePlan after;
        after.kind = StageKind::after;
        after.start_offset = t_test + t_wait + t_train + t_test + t_wait;
        after.duration = t_test;
        after.devices = desktops;
        plan.stages.push_back(after);

        plans.push_back(std::move(plan));
    }
    return plans;
}

namespace {

struct Driver {
    RunEnv* env = nullptr;
    RunRecord* record = nullptr;
    std::map<std::string, DeviceProfile*> by_id;

    DeviceProfile& device(const std::string& id) { return *by_id.at(id); }

    void begin_stage(DeviceProfile& dev) {
        if (dev.state_mode == StateMode::stateless) {
            dev.jar.cookies.clear();
            dev.jar.epoch += 1;
        }
    }

    void touch_jar(DeviceProfile& dev, const std::string& page) {
        for (size_t idx : env->ecosystem->embedded_trackers(page)) {
            const auto& spec = env->ecosystem->config().trackers[idx];
            dev.jar.cookies[spec.id] =
                env->ecosystem->cookie_id(dev.device_id, dev.jar.epoch, spec.id);
        }
    }

    sim::VisitContext visit_context(const DeviceProfile& dev, const std::string& page,
                                    bool is_train, int session_id, Tick now) const {
        sim::VisitContext ctx;
        ctx.device_id = dev.device_id;
        ctx.profile_epoch = dev.jar.epoch;
        ctx.ip_label = dev.ip_label;
        ctx.mobile = dev.kind == DeviceKind::mobile;
        ctx.page = page;
        ctx.page_category = is_train ? env->persona->category_label : std::string();
        ctx.is_train = is_train;
        ctx.session_id = session_id;
        ctx.now = now;
        return ctx;
    }

    void train_visit(DeviceProfile& dev, const std::string& page, int session_id,
                     StageKind stage, Tick now, StageData& data) {
        touch_jar(dev, page);
        env->ecosystem->observe_visit(visit_context(dev, page, true, session_id, now));
        auto& slot = data.devices[dev.device_id];
        if (slot.pages.empty()) slot.first_visit = now;
        slot.pages.push_back(page);
        record->visit_log.push_back({now, session_id, stage, dev.device_id, page, true, 0});
    }

    void test_visit(DeviceProfile& dev, const std::string& page, int session_id,
                    StageKind stage, Tick now, StageData& data) {
        touch_jar(dev, page);
        sim::ServedPage served =
            env->ecosystem->serve_page(visit_context(dev, page, false, session_id, now));

        adex::ExtractionContext ectx;
        ectx.run_id = record->run_id;
        ectx.device_id = dev.device_id;
        ectx.stage_id = stage_tag(stage);
        ectx.session_id = session_id;
        ectx.observed_at = now;
        ectx.crawl_type = adex::CrawlType::test;
        ectx.crawl_phase = phase_of(stage);
        ectx.max_frame_depth = env->max_frame_depth;
        adex::PageExtraction page_result =
            adex::extract_ads(served.dom, *env->filters, *env->psl, ectx);

        auto& slot = data.devices[dev.device_id];
        if (slot.pages.empty()) slot.first_visit = now;
        slot.pages.push_back(page);
        for (auto& obs : page_result.observations) slot.ads.push_back(std::move(obs));
        record->visit_log.push_back({now, session_id, stage, dev.device_id, page, false,
                                     int(page_result.stats.ads)});
    }
};

} // namespace

RunRecord execute_run(const RunConfig& cfg, int run_ordinal,
                      std::vector<DeviceProfile> devices, RunEnv& env, uint64_t seed,
                      const std::string& run_id) {
    cfg.validate();
    if (!env.ecosystem) fail(errc::ecosystem_unavailable, "no ecosystem endpoint");
    if (!env.filters || !env.psl || !env.persona)
        fail(errc::config_invalid, "run environment incomplete");
    if (env.control_pages.empty()) fail(errc::config_invalid, "no control pages");
    if (run_ordinal < 1 || run_ordinal > cfg.runs)
        fail(errc::config_invalid, "run ordinal outside configured range");

    int mobiles = 0, desktops = 0;
    std::string mobile_ip;
    for (const auto& d : devices) {
        if (d.kind == DeviceKind::mobile) {
            ++mobiles;
            mobile_ip = d.ip_label;
            if (d.role != DeviceRole::mobile)
                fail(errc::config_invalid, "mobile device must carry the mobile role");
        } else {
            ++desktops;
        }
    }
    if (mobiles != 1) fail(errc::config_invalid, "exactly one mobile device required");
    if (desktops < 1) fail(errc::config_invalid, "at least one desktop required");
    for (const auto& d : devices) {
        if (d.kind != DeviceKind::desktop) continue;
        if (d.role == DeviceRole::paired_pc && d.ip_label != mobile_ip)
            fail(errc::config_invalid, "paired desktop must share the mobile address");
        if (d.role == DeviceRole::baseline_pc && d.ip_label == mobile_ip)
            fail(errc::config_invalid, "baseline desktop must not share the mobile address");
    }

    RunRecord record;
    record.run_id = run_id;
    record.config = cfg;
    record.run_ordinal = run_ordinal;
    record.seed = seed;

    record.truth.run_id = run_id;
    for (const auto& d : devices) {
        record.truth.device_ip[d.device_id] = d.ip_label;
        if (d.kind == DeviceKind::mobile) record.truth.mobile_device = d.device_id;
        else if (d.role == DeviceRole::paired_pc && record.truth.paired_pc.empty())
            record.truth.paired_pc = d.device_id;
        else if (d.role == DeviceRole::baseline_pc && record.truth.baseline_pc.empty())
            record.truth.baseline_pc = d.device_id;
    }

    for (const auto& d : devices) env.ecosystem->register_device(d.device_id, d.ip_label);

    Driver drv;
    drv.env = &env;
    drv.record = &record;
    for (auto& d : devices) drv.by_id[d.device_id] = &d;

    const auto& persona_pages = env.persona->persona_pages;
    if (persona_pages.empty()) fail(errc::config_invalid, "persona has no pages");

    std::vector<SessionPlan> plans = build_timeline(cfg, devices, run_ordinal);
    for (const SessionPlan& plan : plans) {
        SessionRecord srec;
        srec.session_id = plan.session_id;
        srec.start = plan.start;

        for (const StagePlan& sp : plan.stages) {
            StageData data;
            data.kind = sp.kind;
            data.start = plan.start + sp.start_offset;
            data.end = data.start + sp.duration;

            for (const auto& id : sp.devices) drv.begin_stage(drv.device(id));

            if (sp.kind == StageKind::mobile) {
                // Training window first: every device listed on the stage
                // walks the persona pages once, evenly spaced.
                Tick dwell = sp.train_duration / Tick(persona_pages.size());
                if (dwell <= 0)
                    fail(errc::stage_overrun, "training window shorter than page walk");
                for (size_t v = 0; v < persona_pages.size(); ++v) {
                    Tick at = data.start + Tick(v) * dwell;
                    for (const auto& id : sp.devices) {
                        drv.train_visit(drv.device(id), persona_pages[v], plan.session_id,
                                        sp.kind, at, data);
                    }
                }

                // Mobile test window: one control page, rotated per session.
                Tick test_start = data.start + sp.train_duration;
                if (sp.duration <= sp.train_duration)
                    fail(errc::stage_overrun, "no room left for the mobile test window");
                const std::string& page =
                    env.control_pages[size_t(plan.session_id - 1) % env.control_pages.size()];
                Tick at = test_start + (sp.duration - sp.train_duration) / 2;
                drv.test_visit(drv.device(record.truth.mobile_device), page, plan.session_id,
                               sp.kind, at, data);
            } else {
                // Desktop test stage: every desktop visits the same control
                // pages at the same instants.
                int visits = cfg.desktop_visits_per_stage;
                Tick dwell = sp.duration / Tick(visits);
                if (dwell <= 0) fail(errc::stage_overrun, "test window shorter than visit plan");
                for (int v = 0; v < visits; ++v) {
                    Tick at = data.start + Tick(v) * dwell;
                    const std::string& page = env.control_pages[size_t(v) % env.control_pages.size()];
                    for (const auto& id : sp.devices) {
                        drv.test_visit(drv.device(id), page, plan.session_id, sp.kind, at, data);
                    }
                }
            }
            srec.stages.push_back(std::move(data));
        }
        record.sessions.push_back(std::move(srec));
    }

    record.devices = std::move(devices);
    return record;
}

} // namespace cdt::sched
