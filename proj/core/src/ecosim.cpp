#include "cdt/ecosim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "cdt/error.hpp"
#include "cdt/text.hpp"

namespace cdt::sim {
namespace {

double unit_from(uint64_t h) {
    return double(h >> 11) * (1.0 / 9007199254740992.0);
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

std::string hex16(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

} // namespace

const char* slot_kind_name(SlotKind k) {
    switch (k) {
    case SlotKind::cross_device: return "cross_device";
    case SlotKind::retargeted: return "retargeted";
    case SlotKind::behavioral: return "behavioral";
    case SlotKind::noise: return "noise";
    }
    return "noise";
}

double histogram_cosine(const std::map<std::string, double>& a,
                        const std::map<std::string, double>& b) {
    if (a.empty() || b.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [k, v] : a) {
        na += v * v;
        auto it = b.find(k);
        if (it != b.end()) dot += v * it->second;
    }
    for (const auto& [k, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string percent_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        bool plain = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                     (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '~';
        if (plain) {
            out.push_back(char(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// SimConfig

void SimConfig::validate() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(cdt_strength)) fail(errc::config_invalid, "cdt_strength outside [0,1]");
    double total = shares.cross_device + shares.retargeted + shares.behavioral + shares.noise;
    if (!in01(shares.cross_device) || !in01(shares.retargeted) || !in01(shares.behavioral) ||
        !in01(shares.noise) || std::abs(total - 1.0) > 1e-6) {
        fail(errc::config_invalid, "slot shares must be in [0,1] and sum to 1");
    }
    if (pairing.ip_evidence_saturation < 1)
        fail(errc::config_invalid, "ip_evidence_saturation must be >= 1");
    if (mobile_ads_per_page < 0) fail(errc::config_invalid, "mobile_ads_per_page negative");
    if (desktop_ads_min < 0 || desktop_ads_max < desktop_ads_min)
        fail(errc::config_invalid, "desktop ad range invalid");
    for (double r : {markup.double_encode, markup.direct_href, markup.empty_frame,
                     markup.widget_frame, markup.first_party_promo, markup.no_dimension}) {
        if (!in01(r)) fail(errc::config_invalid, "markup rate outside [0,1]");
    }
    if (markup.double_encode + markup.direct_href > 1.0)
        fail(errc::config_invalid, "double_encode + direct_href exceed 1");
    if (trackers.empty()) fail(errc::config_invalid, "no trackers configured");
    if (campaigns.empty()) fail(errc::config_invalid, "no campaigns configured");
    std::set<std::string> seen;
    for (const auto& t : trackers) {
        if (t.id.empty()) fail(errc::config_invalid, "tracker with empty id");
        if (!seen.insert(t.id).second)
            fail(errc::config_invalid, "duplicate tracker id: " + t.id);
        if (t.domains.empty())
            fail(errc::config_invalid, "tracker has no serving domains: " + t.id);
        if (!in01(t.coverage))
            fail(errc::config_invalid, "tracker coverage outside [0,1]: " + t.id);
    }
    seen.clear();
    for (const auto& c : campaigns) {
        if (c.id.empty()) fail(errc::config_invalid, "campaign with empty id");
        if (!seen.insert(c.id).second)
            fail(errc::config_invalid, "duplicate campaign id: " + c.id);
        if (c.category.empty())
            fail(errc::config_invalid, "campaign has empty category: " + c.id);
        if (c.landing_domains.empty())
            fail(errc::config_invalid, "campaign has no landing domains: " + c.id);
    }
}

SimConfig SimConfig::from_json_text(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(errc::config_invalid, std::string("simulation config is not valid json: ") + e.what());
    }
    SimConfig cfg;
    try {
        cfg.cdt_strength = j.value("cdt_strength", cfg.cdt_strength);
        if (j.contains("slot_shares")) {
            const auto& s = j.at("slot_shares");
            cfg.shares.cross_device = s.value("cross_device", cfg.shares.cross_device);
            cfg.shares.retargeted = s.value("retargeted", cfg.shares.retargeted);
            cfg.shares.behavioral = s.value("behavioral", cfg.shares.behavioral);
            cfg.shares.noise = s.value("noise", cfg.shares.noise);
        }
        if (j.contains("pairing")) {
            const auto& p = j.at("pairing");
            cfg.pairing.ip_weight = p.value("ip_weight", cfg.pairing.ip_weight);
            cfg.pairing.behavior_weight = p.value("behavior_weight", cfg.pairing.behavior_weight);
            cfg.pairing.ip_evidence_saturation =
                p.value("ip_evidence_saturation", cfg.pairing.ip_evidence_saturation);
        }
        cfg.mobile_ads_per_page = j.value("mobile_ads_per_page", cfg.mobile_ads_per_page);
        cfg.desktop_ads_min = j.value("desktop_ads_min", cfg.desktop_ads_min);
        cfg.desktop_ads_max = j.value("desktop_ads_max", cfg.desktop_ads_max);
        if (j.contains("markup")) {
            const auto& m = j.at("markup");
            cfg.markup.double_encode = m.value("double_encode", cfg.markup.double_encode);
            cfg.markup.direct_href = m.value("direct_href", cfg.markup.direct_href);
            cfg.markup.empty_frame = m.value("empty_frame", cfg.markup.empty_frame);
            cfg.markup.widget_frame = m.value("widget_frame", cfg.markup.widget_frame);
            cfg.markup.first_party_promo =
                m.value("first_party_promo", cfg.markup.first_party_promo);
            cfg.markup.no_dimension = m.value("no_dimension", cfg.markup.no_dimension);
        }
        for (const auto& t : j.value("trackers", nlohmann::json::array())) {
            TrackerSpec spec;
            spec.id = t.at("id").get<std::string>();
            spec.domains = t.at("domains").get<std::vector<std::string>>();
            spec.is_cdt = t.value("is_cdt", false);
            spec.coverage = t.value("coverage", 1.0);
            cfg.trackers.push_back(std::move(spec));
        }
        for (const auto& c : j.value("campaigns", nlohmann::json::array())) {
            Campaign camp;
            camp.id = c.at("id").get<std::string>();
            camp.category = c.at("category").get<std::string>();
            camp.landing_domains = c.at("landing_domains").get<std::vector<std::string>>();
            cfg.campaigns.push_back(std::move(camp));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(errc::config_invalid, std::string("simulation config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

SimConfig SimConfig::from_file(const std::string& path) {
    return from_json_text(read_text_file(path));
}

std::string SimConfig::to_json_text() const {
    nlohmann::json j;
    j["cdt_strength"] = cdt_strength;
    j["slot_shares"] = {{"cross_device", shares.cross_device},
                        {"retargeted", shares.retargeted},
                        {"behavioral", shares.behavioral},
                        {"noise", shares.noise}};
    j["pairing"] = {{"ip_weight", pairing.ip_weight},
                    {"behavior_weight", pairing.behavior_weight},
                    {"ip_evidence_saturation", pairing.ip_evidence_saturation}};
    j["mobile_ads_per_page"] = mobile_ads_per_page;
    j["desktop_ads_min"] = desktop_ads_min;
    j["desktop_ads_max"] = desktop_ads_max;
    j["markup"] = {{"double_encode", markup.double_encode},
                   {"direct_href", markup.direct_href},
                   {"empty_frame", markup.empty_frame},
                   {"widget_frame", markup.widget_frame},
                   {"first_party_promo", markup.first_party_promo},
                   {"no_dimension", markup.no_dimension}};
    j["trackers"] = nlohmann::json::array();
    for (const auto& t : trackers) {
        j["trackers"].push_back({{"id", t.id},
                                 {"domains", t.domains},
                                 {"is_cdt", t.is_cdt},
                                 {"coverage", t.coverage}});
    }
    j["campaigns"] = nlohmann::json::array();
    for (const auto& c : campaigns) {
        j["campaigns"].push_back(
            {{"id", c.id}, {"category", c.category}, {"landing_domains", c.landing_domains}});
    }
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// AdEcosystem

AdEcosystem::AdEcosystem(SimConfig config, uint64_t seed, std::string run_key)
    : config_(std::move(config)), seed_(seed), run_key_(std::move(run_key)) {
    config_.validate();
    seed_tag_ = std::to_string(seed_);
    for (const auto& t : config_.trackers) states_[t.id]; // default-construct
    for (const auto& c : config_.campaigns) campaigns_by_category_[c.category].push_back(&c);
}

void AdEcosystem::register_device(const std::string& device_id, const std::string& ip_label) {
    auto it = device_ip_.find(device_id);
    if (it != device_ip_.end() && it->second != ip_label) {
        fail(errc::config_invalid,
             "device " + device_id + " re-registered under a different address");
    }
    device_ip_[device_id] = ip_label;
}

const TrackerSpec& AdEcosystem::spec_of(const std::string& tracker_id) const {
    for (const auto& t : config_.trackers) {
        if (t.id == tracker_id) return t;
    }
    fail(errc::config_invalid, "unknown tracker: " + tracker_id);
}

const TrackerState& AdEcosystem::tracker_state(const std::string& tracker_id) const {
    auto it = states_.find(tracker_id);
    if (it == states_.end()) fail(errc::config_invalid, "unknown tracker: " + tracker_id);
    return it->second;
}

std::string AdEcosystem::cookie_id(const std::string& device_id, uint64_t profile_epoch,
                                   const std::string& tracker_id) const {
    uint64_t h = hash_parts(
        {seed_tag_, run_key_, "cookie", device_id, std::to_string(profile_epoch), tracker_id});
    return hex16(h);
}

std::vector<size_t> AdEcosystem::embedded_trackers(const std::string& page_domain) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < config_.trackers.size(); ++i) {
        const auto& t = config_.trackers[i];
        double draw = unit_from(hash_parts({seed_tag_, run_key_, "embed", t.id, page_domain}));
        if (draw < t.coverage) out.push_back(i);
    }
    return out;
}

void AdEcosystem::update_device_graph(const std::string& tracker_id, int session_id) {
    auto it = states_.find(tracker_id);
    if (it == states_.end()) fail(errc::config_invalid, "unknown tracker: " + tracker_id);
    TrackerState& state = it->second;
    if (state.current_session != session_id) {
        state.evaluated_this_session.clear();
        state.current_session = session_id;
    }
    const auto& par = config_.pairing;
    for (const auto& [ip, by_cookie] : state.ip_sessions) {
        std::vector<const std::string*> cookies;
        cookies.reserve(by_cookie.size());
        for (const auto& [ck, _] : by_cookie) cookies.push_back(&ck);
        for (size_t a = 0; a < cookies.size(); ++a) {
            for (size_t b = a + 1; b < cookies.size(); ++b) {
                auto key = ordered(*cookies[a], *cookies[b]);
                if (state.device_graph.count(key) || state.evaluated_this_session.count(key))
                    continue;
                const auto& sa = by_cookie.at(*cookies[a]);
                const auto& sb = by_cookie.at(*cookies[b]);
                int co = 0;
                for (int s : sa) co += sb.count(s) ? 1 : 0;
                if (co == 0) continue; // never active together; nothing to decide
                double evidence =
                    double(std::min(co, par.ip_evidence_saturation)) / par.ip_evidence_saturation;
                std::map<std::string, double> empty;
                auto ha = state.cookies.find(key.first);
                auto hb = state.cookies.find(key.second);
                double cos = histogram_cosine(ha == state.cookies.end() ? empty : ha->second,
                                              hb == state.cookies.end() ? empty : hb->second);
                double p = config_.cdt_strength *
                           sigmoid(par.ip_weight * evidence + par.behavior_weight * cos);
                double draw = unit_from(hash_parts({seed_tag_, run_key_, "pair", tracker_id,
                                                    key.first, key.second,
                                                    std::to_string(session_id)}));
                if (draw < p) state.device_graph.insert(key);
                state.evaluated_this_session.insert(key);
            }
        }
    }
}

void AdEcosystem::note_request(TrackerState& state, const TrackerSpec& spec,
                               const VisitContext& ctx, const std::string& cookie) {
    if (state.current_session != ctx.session_id) {
        state.evaluated_this_session.clear();
        state.current_session = ctx.session_id;
    }
    state.ip_log[ctx.ip_label][cookie] += 1;
    state.ip_sessions[ctx.ip_label][cookie].insert(ctx.session_id);
    if (ctx.is_train && !ctx.page_category.empty()) {
        state.cookies[cookie][ctx.page_category] += 1.0;
    }

    // Re-examine links for the requesting cookie against everything else the
    // tracker has seen behind this address. One draw per pair per session.
    const auto& par = config_.pairing;
    const auto& by_cookie = state.ip_sessions[ctx.ip_label];
    const auto& own_sessions = by_cookie.at(cookie);
    for (const auto& [other, other_sessions] : by_cookie) {
        if (other == cookie) continue;
        auto key = ordered(cookie, other);
        if (state.device_graph.count(key) || state.evaluated_this_session.count(key)) continue;
        int co = 0;
        for (int s : own_sessions) co += other_sessions.count(s) ? 1 : 0;
        if (co == 0) continue;
        double evidence =
            double(std::min(co, par.ip_evidence_saturation)) / par.ip_evidence_saturation;
        std::map<std::string, double> empty;
        auto ha = state.cookies.find(key.first);
        auto hb = state.cookies.find(key.second);
        double cos = histogram_cosine(ha == state.cookies.end() ? empty : ha->second,
                                      hb == state.cookies.end() ? empty : hb->second);
        double p = config_.cdt_strength *
                   sigmoid(par.ip_weight * evidence + par.behavior_weight * cos);
        double draw = unit_from(hash_parts({seed_tag_, run_key_, "pair", spec.id, key.first,
                                            key.second, std::to_string(ctx.session_id)}));
        if (draw < p) state.device_graph.insert(key);
        state.evaluated_this_session.insert(key);
    }
}

void AdEcosystem::observe_visit(const VisitContext& ctx) {
    auto reg = device_ip_.find(ctx.device_id);
    if (reg == device_ip_.end())
        fail(errc::config_invalid, "unregistered device: " + ctx.device_id);
    if (reg->second != ctx.ip_label)
        fail(errc::config_invalid, "device " + ctx.device_id + " visited from wrong address");
    for (size_t idx : embedded_trackers(ctx.page)) {
        const TrackerSpec& spec = config_.trackers[idx];
        note_request(states_[spec.id], spec, ctx, cookie_id(ctx.device_id, ctx.profile_epoch, spec.id));
    }
}

std::optional<Campaign const*> AdEcosystem::pick_campaign_for(const TrackerState& state,
                                                              const std::string& cookie,
                                                              SlotKind kind, Rng& rng) const {
    if (kind == SlotKind::cross_device) {
        // Serve against the interests of whatever cookies this one is linked to.
        std::map<std::string, double> merged;
        for (const auto& [lo, hi] : state.device_graph) {
            const std::string* partner = nullptr;
            if (lo == cookie) partner = &hi;
            else if (hi == cookie) partner = &lo;
            if (!partner) continue;
            auto it = state.cookies.find(*partner);
            if (it == state.cookies.end()) continue;
            for (const auto& [cat, w] : it->second) merged[cat] += w;
        }
        if (merged.empty()) return std::nullopt;
        std::string best;
        double best_w = -1.0;
        for (const auto& [cat, w] : merged) {
            if (w > best_w) { // ties resolve to the smallest name via map order
                best = cat;
                best_w = w;
            }
        }
        auto ci = campaigns_by_category_.find(best);
        if (ci == campaigns_by_category_.end()) return std::nullopt;
        const auto& pool = ci->second;
        return pool[pool.size() == 1 ? 0 : rng.uniform_int(0, pool.size() - 1)];
    }
    if (kind == SlotKind::retargeted || kind == SlotKind::behavioral) {
        auto it = state.cookies.find(cookie);
        if (it == state.cookies.end() || it->second.empty()) return std::nullopt;
        std::vector<std::string> cats;
        std::vector<double> weights;
        for (const auto& [cat, w] : it->second) {
            cats.push_back(cat);
            weights.push_back(w);
        }
        const std::string& cat = cats[rng.weighted_index(weights)];
        auto ci = campaigns_by_category_.find(cat);
        if (ci == campaigns_by_category_.end()) return std::nullopt;
        const auto& pool = ci->second;
        return pool[pool.size() == 1 ? 0 : rng.uniform_int(0, pool.size() - 1)];
    }
    // Run-of-network filler: any campaign at all.
    return &config_.campaigns[config_.campaigns.size() == 1
                                  ? 0
                                  : rng.uniform_int(0, config_.campaigns.size() - 1)];
}

ServedPage AdEcosystem::serve_page(const VisitContext& ctx) {
    observe_visit(ctx);

    Rng rng(hash_parts({seed_tag_, run_key_, "page", ctx.device_id,
                        std::to_string(ctx.profile_epoch), std::to_string(ctx.session_id),
                        ctx.page, std::to_string(ctx.now)}));

    int n_slots = 0;
    if (ctx.mobile) {
        for (int i = 0; i < config_.mobile_ads_per_page; ++i) {
            if (rng.chance(0.5)) ++n_slots;
        }
    } else {
        n_slots = int(rng.uniform_int(config_.desktop_ads_min, config_.desktop_ads_max));
    }

    std::vector<size_t> embedded = embedded_trackers(ctx.page);
    std::vector<double> share_vec = {config_.shares.cross_device, config_.shares.retargeted,
                                     config_.shares.behavioral, config_.shares.noise};

    ServedPage out;
    std::ostringstream body;
    body << "<!doctype html>\n<html>\n<head><title>" << ctx.page << "</title></head>\n<body>\n";
    body << "<div class=\"masthead\"><h1>" << ctx.page
         << "</h1><p>Local conditions and headlines, refreshed hourly.</p></div>\n";

    for (int slot = 0; slot < n_slots && !embedded.empty(); ++slot) {
        size_t owner_idx = embedded[embedded.size() == 1
                                        ? 0
                                        : rng.uniform_int(0, embedded.size() - 1)];
        const TrackerSpec& owner = config_.trackers[owner_idx];
        const TrackerState& st = states_.at(owner.id);
        std::string cookie = cookie_id(ctx.device_id, ctx.profile_epoch, owner.id);

        auto drawn = static_cast<SlotKind>(rng.weighted_index(share_vec));
        SlotKind kind = drawn;
        if (kind == SlotKind::cross_device && !owner.is_cdt) kind = SlotKind::noise;
        std::optional<Campaign const*> choice = pick_campaign_for(st, cookie, kind, rng);
        if (!choice) {
            kind = SlotKind::noise;
            choice = pick_campaign_for(st, cookie, kind, rng);
        }
        const Campaign& camp = **choice;
        const std::string& land_domain =
            camp.landing_domains[camp.landing_domains.size() == 1
                                     ? 0
                                     : rng.uniform_int(0, camp.landing_domains.size() - 1)];
        const std::string& serve_domain =
            owner.domains[owner.domains.size() == 1 ? 0
                                                    : rng.uniform_int(0, owner.domains.size() - 1)];

        PlacedAd ad;
        ad.slot_index = slot;
        ad.kind = kind;
        ad.tracker_id = owner.id;
        ad.campaign_id = camp.id;
        ad.landing_domain = land_domain;

        double route = rng.uniform();
        std::string ordinal = std::to_string(slot);
        if (route < config_.markup.double_encode) {
            ad.double_encoded = true;
            ad.landing_url = "https://" + land_domain + "/offer/" + camp.id + "-" + ordinal;
            ad.click_url = "https://" + serve_domain + "/click?redirect=" +
                           percent_encode(percent_encode(ad.landing_url));
        } else if (route < config_.markup.double_encode + config_.markup.direct_href) {
            ad.direct = true;
            ad.landing_url = "https://" + land_domain + "/banner/" + camp.id + "-" + ordinal;
            ad.click_url = ad.landing_url;
        } else {
            ad.landing_url = "https://" + land_domain + "/offer/" + camp.id + "-" + ordinal;
            ad.click_url = "https://" + serve_domain + "/click?c=" + camp.id +
                           "&adurl=" + percent_encode(ad.landing_url);
        }

        bool dimensionless = rng.chance(config_.markup.no_dimension);
        body << "<iframe src=\"https://" << serve_domain << "/frame/" << slot << "\"";
        if (!dimensionless) body << " width=\"300\" height=\"250\"";
        body << ">";
        body << "<a href=\"" << ad.click_url << "\"><img src=\"https://" << serve_domain
             << "/img/" << camp.id << ".png\" width=\"300\" height=\"250\"></a>";
        body << "</iframe>\n";

        out.placements.push_back(std::move(ad));
    }

    if (rng.chance(config_.markup.empty_frame)) {
        body << "<iframe src=\"https://cdn." << ctx.page
             << "/pixel\" width=\"0\" height=\"0\"></iframe>\n";
    }
    if (rng.chance(config_.markup.widget_frame)) {
        body << "<iframe src=\"https://widgets." << ctx.page
             << "/ticker\" width=\"300\" height=\"100\"><div><p>Five day outlook: mild, "
                "scattered showers midweek.</p></div></iframe>\n";
    }
    if (rng.chance(config_.markup.first_party_promo)) {
        body << "<iframe width=\"300\" height=\"250\"><a href=\"https://" << ctx.page
             << "/subscribe\"><img src=\"https://" << ctx.page
             << "/art/housead.png\" width=\"300\" height=\"250\"></a></iframe>\n";
    }

    body << "<div class=\"footer\"><p>Contact the desk for corrections.</p></div>\n";
    body << "</body>\n</html>\n";

    out.html = body.str();
    out.dom = parse_html(out.html, "https://" + ctx.page + "/", ctx.now);
    return out;
}

} // namespace cdt::sim
