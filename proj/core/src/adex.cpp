#include "cdt/adex.hpp"

#include <cctype>
#include <set>

#include "cdt/error.hpp"
#include "cdt/text.hpp"

namespace cdt::adex {

const char* crawl_type_name(CrawlType t) { return t == CrawlType::train ? "train" : "test"; }

const char* crawl_phase_name(CrawlPhase p) {
    switch (p) {
    case CrawlPhase::before: return "before";
    case CrawlPhase::mobile: return "mobile";
    case CrawlPhase::after: return "after";
    }
    return "unknown";
}

const char* landing_route_name(LandingRoute r) {
    switch (r) {
    case LandingRoute::direct_href: return "direct-href";
    case LandingRoute::adurl_param: return "adurl-param";
    case LandingRoute::redirect_param: return "redirect-param";
    }
    return "unknown";
}

namespace {

// Leading integer of a dimension attribute ("250", "250px"). Anything that
// does not start with digits reads as undeclared.
int parse_dimension(const std::string& value, int fallback) {
    size_t i = 0;
    while (i < value.size() && std::isspace(static_cast<unsigned char>(value[i]))) ++i;
    size_t start = i;
    while (i < value.size() && std::isdigit(static_cast<unsigned char>(value[i]))) ++i;
    if (i == start) return fallback;
    return std::stoi(value.substr(start, i - start));
}

bool subtree_has_content(const DomNode& node) {
    for (const auto& child : node.children) {
        if (child.is_text()) {
            if (!trim(child.text).empty()) return true;
        } else {
            return true; // any element child counts as content
        }
    }
    return false;
}

void collect_frames(const DomNode& node, int iframe_depth, int max_depth, FrameScan& out) {
    for (const auto& child : node.children) {
        if (child.is_text()) continue;
        if (child.tag == "iframe") {
            const int depth = iframe_depth + 1;
            if (depth <= max_depth) {
                ++out.total;
                AdFrame frame;
                frame.node = &child;
                frame.depth = depth;
                const std::string* w = child.attr("width");
                const std::string* h = child.attr("height");
                frame.width = w ? parse_dimension(*w, 300) : 300;
                frame.height = h ? parse_dimension(*h, 250) : 250;
                frame.content_empty = !subtree_has_content(child);
                const bool valid = frame.width > 0 && frame.height > 0 && !frame.content_empty;
                if (valid) out.valid.push_back(frame);
                collect_frames(child, depth, max_depth, out);
            }
            continue;
        }
        collect_frames(child, iframe_depth, max_depth, out);
    }
}

bool anchor_wraps_creative(const DomNode& node) {
    for (const auto& child : node.children) {
        if (child.is_text()) continue;
        if (child.tag == "iframe") continue;
        if (child.tag == "img" || child.tag == "embed" || child.tag == "object") return true;
        if (anchor_wraps_creative(child)) return true;
    }
    return false;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

void collect_anchors(const DomNode& node, std::vector<const DomNode*>& out) {
    for (const auto& child : node.children) {
        if (child.is_text()) continue;
        if (child.tag == "iframe") continue; // belongs to the nested frame
        if (child.tag == "a") out.push_back(&child);
        collect_anchors(child, out);
    }
}

} // namespace

FrameScan find_ad_frames(const DomSnapshot& page, int max_depth) {
    FrameScan scan;
    if (!page.has_root) return scan;
    collect_frames(page.root, 0, max_depth, scan);
    return scan;
}

std::vector<CandidateLanding> extract_candidates(const AdFrame& frame) {
    std::vector<CandidateLanding> out;
    if (!frame.node) return out;
    std::vector<const DomNode*> anchors;
    collect_anchors(*frame.node, anchors);
    for (const DomNode* anchor : anchors) {
        const std::string* href = anchor->attr("href");
        if (!href || href->empty()) continue;
        if (!anchor_wraps_creative(*anchor)) continue;

        const Url click = parse_url(*href);
        if (!click.valid) continue;

        CandidateLanding candidate;
        candidate.click_url = *href;
        candidate.route = LandingRoute::direct_href;
        candidate.landing_url = *href;

        for (const auto& [key, value] : parse_query(click.query)) {
            LandingRoute route;
            if (iequals(key, "adurl"))
                route = LandingRoute::adurl_param;
            else if (iequals(key, "redirect"))
                route = LandingRoute::redirect_param;
            else
                continue;
            candidate.route = route;
            candidate.landing_url = percent_decode_rounds(value, 3);
            break; // first carrying parameter wins
        }

        if (!parse_url(candidate.landing_url).valid) continue;
        out.push_back(std::move(candidate));
    }
    return out;
}

PageExtraction extract_ads(const DomSnapshot& page, const filters::FilterSet& filter_set,
                           const PublicSuffixList& psl, const ExtractionContext& ctx) {
    if (!page.has_root) fail(errc::snapshot_malformed, "snapshot for '" + page.page_url + "' has no root");

    PageExtraction result;
    const Url page_url = parse_url(page.page_url);
    const std::string page_domain =
        page_url.valid ? psl.registrable_domain(page_url.host) : std::string();

    FrameScan scan = find_ad_frames(page, ctx.max_frame_depth);
    result.stats.frames_total = scan.total;
    result.stats.frames_valid = scan.valid.size();

    std::set<std::string> seen_landing;
    for (const AdFrame& frame : scan.valid) {
        for (const CandidateLanding& candidate : extract_candidates(frame)) {
            ++result.stats.candidates;

            filters::RequestContext req;
            req.url = candidate.click_url;
            req.page_domain = page_domain;
            if (!filter_set.matches(req)) continue;

            if (!seen_landing.insert(candidate.landing_url).second) continue;

            AdObservation obs;
            obs.landing_url = candidate.landing_url;
            obs.landing_domain = psl.registrable_domain(parse_url(candidate.landing_url).host);
            obs.route = candidate.route;
            obs.page = page_domain;
            obs.run_id = ctx.run_id;
            obs.device_id = ctx.device_id;
            obs.stage_id = ctx.stage_id;
            obs.session_id = ctx.session_id;
            obs.observed_at = ctx.observed_at;
            obs.crawl_type = ctx.crawl_type;
            obs.crawl_phase = ctx.crawl_phase;
            result.observations.push_back(std::move(obs));
        }
    }
    result.stats.ads = result.observations.size();
    return result;
}

} // namespace cdt::adex
