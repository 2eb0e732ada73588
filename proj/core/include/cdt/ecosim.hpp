#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cdt/clock.hpp"
#include "cdt/html.hpp"
#include "cdt/rng.hpp"

namespace cdt::sim {

// Stand-in ad ecosystem. Trackers watch page visits, accumulate per-cookie
// interest histograms, probabilistically link cookies that share an IP, and
// fill ad slots on served pages. All draws are keyed on (seed, run, ids), so
// replaying a run reproduces the exact byte stream.

struct TrackerSpec {
    std::string id;                   // organization slug
    std::vector<std::string> domains; // serving hosts; first one is canonical
    bool is_cdt = false;
    double coverage = 1.0; // probability a given page embeds this tracker
};

struct Campaign {
    std::string id;
    std::string category;
    std::vector<std::string> landing_domains;
};

struct SlotShares {
    double cross_device = 0.5;
    double retargeted = 0.1;
    double behavioral = 0.15;
    double noise = 0.25;
};

struct PairingParams {
    double ip_weight = 2.0;
    double behavior_weight = 2.0;
    // Co-observed sessions needed before shared-IP evidence saturates.
    int ip_evidence_saturation = 3;
};

struct MarkupRates {
    double double_encode = 0.10;    // redirect= with two encoding layers
    double direct_href = 0.05;      // plain path-rule click-through
    double empty_frame = 0.20;      // decorative zero-size iframe
    double widget_frame = 0.15;     // content iframe without any link
    double first_party_promo = 0.10; // self-ad anchor that is not an ad
    double no_dimension = 0.10;     // slot iframe without width/height
};

struct SimConfig {
    double cdt_strength = 0.9;
    SlotShares shares;
    PairingParams pairing;
    int mobile_ads_per_page = 5; // hard cap on mobile slots per page
    int desktop_ads_min = 2;
    int desktop_ads_max = 4;
    MarkupRates markup;
    std::vector<TrackerSpec> trackers;
    std::vector<Campaign> campaigns;

    static SimConfig from_file(const std::string& path);
    static SimConfig from_json_text(std::string_view text);
    std::string to_json_text() const;
    void validate() const; // throws ConfigInvalid
};

// What one tracker knows. Interest histograms only ever grow on training
// visits; the ip log records which cookies were active behind which address.
struct TrackerState {
    std::map<std::string, std::map<std::string, double>> cookies; // cookie -> category -> weight
    std::map<std::string, std::map<std::string, int>> ip_log;     // ip -> cookie -> requests
    std::set<std::pair<std::string, std::string>> device_graph;   // linked cookie pairs (lo,hi)
    // ip -> cookie -> sessions in which it was seen there
    std::map<std::string, std::map<std::string, std::set<int>>> ip_sessions;
    // pairing decisions already drawn this session (cleared per session)
    std::set<std::pair<std::string, std::string>> evaluated_this_session;
    int current_session = -1;
};

enum class SlotKind { cross_device, retargeted, behavioral, noise };

const char* slot_kind_name(SlotKind k);

struct PlacedAd {
    int slot_index = 0;
    SlotKind kind = SlotKind::noise;
    std::string tracker_id;
    std::string campaign_id;
    std::string landing_domain;
    std::string landing_url;
    std::string click_url;
    bool double_encoded = false;
    bool direct = false;
};

struct ServedPage {
    std::string html;
    DomSnapshot dom;
    std::vector<PlacedAd> placements;
};

struct VisitContext {
    std::string device_id;
    uint64_t profile_epoch = 0; // cookie-jar generation; bumping it = fresh cookies
    std::string ip_label;
    bool mobile = false;
    std::string page;          // page domain
    std::string page_category; // primary category, used on training visits
    bool is_train = false;
    int session_id = 0;
    Tick now = 0;
};

struct GroundTruth {
    std::string run_id;
    std::string mobile_device;
    std::string paired_pc;
    std::string baseline_pc;
    std::map<std::string, std::string> device_ip; // device -> ip label
};

class AdEcosystem {
public:
    AdEcosystem(SimConfig config, uint64_t seed, std::string run_key);

    const SimConfig& config() const { return config_; }

    // Devices announce their address up front; any request that later shows
    // up under a different ip_label is a protocol violation and throws.
    void register_device(const std::string& device_id, const std::string& ip_label);

    // Deterministic per-run embedding: which trackers run on this page.
    std::vector<size_t> embedded_trackers(const std::string& page_domain) const;

    // A browsing hit with no ad slots (persona pages). Trackers embedded on
    // the page observe the cookie; training visits grow its histogram.
    void observe_visit(const VisitContext& ctx);

    // A control-page hit: observation plus a rendered page with ad slots.
    ServedPage serve_page(const VisitContext& ctx);

    const TrackerState& tracker_state(const std::string& tracker_id) const;
    const std::map<std::string, TrackerState>& states() const { return states_; }

    // Cookie id a device presents to a tracker at a given jar generation.
    std::string cookie_id(const std::string& device_id, uint64_t profile_epoch,
                          const std::string& tracker_id) const;

    // Pairing pass for one tracker: evaluates every co-located cookie pair
    // not yet drawn this session. Called internally on every request; safe to
    // call again (draws happen at most once per pair per session).
    void update_device_graph(const std::string& tracker_id, int session_id);

private:
    const TrackerSpec& spec_of(const std::string& tracker_id) const;
    void note_request(TrackerState& state, const TrackerSpec& spec, const VisitContext& ctx,
                      const std::string& cookie);
    std::optional<Campaign const*> pick_campaign_for(const TrackerState& state,
                                                     const std::string& cookie, SlotKind kind,
                                                     Rng& rng) const;

    SimConfig config_;
    uint64_t seed_;
    std::string run_key_;
    std::string seed_tag_; // decimal seed, reused in hash keys
    std::map<std::string, TrackerState> states_;
    std::map<std::string, std::string> device_ip_;
    std::map<std::string, std::vector<const Campaign*>> campaigns_by_category_;
};

double histogram_cosine(const std::map<std::string, double>& a,
                        const std::map<std::string, double>& b);

std::string percent_encode(std::string_view s);

} // namespace cdt::sim
