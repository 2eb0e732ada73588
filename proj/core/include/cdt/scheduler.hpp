#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cdt/adex.hpp"
#include "cdt/clock.hpp"
#include "cdt/ecosim.hpp"
#include "cdt/filterlist.hpp"
#include "cdt/persona.hpp"
#include "cdt/url.hpp"

namespace cdt::sched {

// Experiment timeline driver. A run walks N sessions; each session is three
// stages: both desktops test (B), the mobile trains then tests (M), both
// desktops test again (A). Desktops move in lockstep so the only difference
// between them is the address they browse from.

enum class DeviceKind { mobile, desktop };
enum class DeviceRole { mobile, paired_pc, baseline_pc };
enum class StateMode { stateful, stateless };
enum class StageKind { before, mobile, after };

const char* device_role_name(DeviceRole r);
const char* stage_kind_name(StageKind k);

// What the device is carrying between requests. The ecosystem derives cookie
// values from (device, epoch); the jar mirrors them so state policy is
// observable: a stateless device clears the jar and bumps the epoch at every
// stage boundary, a stateful one keeps both for the whole run.
struct CookieJar {
    uint64_t epoch = 0;
    std::map<std::string, std::string> cookies; // tracker id -> cookie value

    bool empty() const { return cookies.empty(); }
    uint64_t content_hash() const;
};

struct DeviceProfile {
    std::string device_id;
    DeviceKind kind = DeviceKind::desktop;
    DeviceRole role = DeviceRole::baseline_pc;
    std::string ip_label;
    StateMode state_mode = StateMode::stateful;
    CookieJar jar;
};

struct RunConfig {
    std::string setup_code = "1a";
    std::string persona_id;
    int t_train_min = 15;
    int t_test_min = 20;
    int t_wait_min = 10;
    int t_rest_min = 5;
    int sessions = 15; // N
    int runs = 4;
    // How many desktops (in topology order) join the training crawl during M:
    // 0 = none, -1 = all. Setup 2 trains all desktops, pre2 trains the first.
    int training_desktops = 0;
    bool stateless_desktops = false; // fresh desktop profile at every stage
    int desktop_visits_per_stage = 5;

    bool desktops_train() const { return training_desktops != 0; }
    void validate() const; // throws ConfigInvalid
};

// Everything preset(code) knows about a setup beyond the run parameters.
struct SetupSpec {
    std::string code;
    std::vector<int> persona_ordinals; // catalog ids, 1-based
    RunConfig base;                    // persona_id left empty
    bool combined = false;             // fold per-persona datasets into one
    bool boosted = false;              // CDT tracker coverage forced to 1.0
    bool include_persona_vector = true;
    bool permutation_only = false; // preliminary setups: no classifier stage
    bool single_ip = false;        // preliminary setups: everything colocated
    int desktop_count = 2;
};

SetupSpec preset(const std::string& setup_code); // throws UnknownSetup

// Device topology implied by a setup. Mobile is always stateful.
std::vector<DeviceProfile> make_devices(const SetupSpec& spec);

struct StagePlan {
    StageKind kind = StageKind::before;
    Tick start_offset = 0; // from session start
    Tick duration = 0;
    Tick train_duration = 0; // leading training window (mobile stage only)
    std::vector<std::string> devices;
};

struct SessionPlan {
    int session_id = 1;
    Tick start = 0; // absolute
    std::vector<StagePlan> stages;
};

Tick session_span(const RunConfig& cfg);
Tick run_start_tick(const RunConfig& cfg, int run_ordinal);

std::vector<SessionPlan> build_timeline(const RunConfig& cfg,
                                        const std::vector<DeviceProfile>& devices,
                                        int run_ordinal);

struct VisitLogEntry {
    Tick at = 0;
    int session_id = 0;
    StageKind stage = StageKind::before;
    std::string device_id;
    std::string page;
    bool is_train = false;
    int ads = 0; // extracted from this visit (test visits only)
};

struct DeviceStageData {
    std::vector<std::string> pages;
    std::vector<adex::AdObservation> ads;
    Tick first_visit = 0;
};

struct StageData {
    StageKind kind = StageKind::before;
    Tick start = 0;
    Tick end = 0;
    std::map<std::string, DeviceStageData> devices;
};

struct SessionRecord {
    int session_id = 1;
    Tick start = 0;
    std::vector<StageData> stages;
};

struct RunRecord {
    std::string run_id;
    RunConfig config;
    int run_ordinal = 1;
    uint64_t seed = 0;
    sim::GroundTruth truth;
    std::vector<DeviceProfile> devices; // end-of-run state
    std::vector<SessionRecord> sessions;
    std::vector<VisitLogEntry> visit_log;
};

struct RunEnv {
    sim::AdEcosystem* ecosystem = nullptr;
    const filters::FilterSet* filters = nullptr;
    const PublicSuffixList* psl = nullptr;
    const persona::Persona* persona = nullptr;
    std::vector<std::string> control_pages; // domains, visit order
    int max_frame_depth = 2;
};

RunRecord execute_run(const RunConfig& cfg, int run_ordinal,
                      std::vector<DeviceProfile> devices, RunEnv& env, uint64_t seed,
                      const std::string& run_id);

} // namespace cdt::sched
