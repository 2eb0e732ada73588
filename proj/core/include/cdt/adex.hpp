#pragma once

#include <string>
#include <vector>

#include "cdt/clock.hpp"
#include "cdt/filterlist.hpp"
#include "cdt/html.hpp"
#include "cdt/url.hpp"

namespace cdt::adex {

enum class CrawlType { train, test };
enum class CrawlPhase { before, mobile, after };

const char* crawl_type_name(CrawlType t);
const char* crawl_phase_name(CrawlPhase p);

// An iframe that survived the validity screen. Dimensions fall back to the
// 300x250 default slot when the markup does not declare them.
struct AdFrame {
    const DomNode* node = nullptr;
    int width = 300;
    int height = 250;
    bool content_empty = true;
    int depth = 1; // 1 = top-level iframe
};

struct FrameScan {
    std::vector<AdFrame> valid; // document order
    size_t total = 0;           // all iframes within the depth limit
};

FrameScan find_ad_frames(const DomSnapshot& page, int max_depth = 2);

enum class LandingRoute { direct_href, adurl_param, redirect_param };

const char* landing_route_name(LandingRoute r);

struct CandidateLanding {
    std::string click_url;   // anchor href as written
    std::string landing_url; // after param extraction and decoding
    LandingRoute route = LandingRoute::direct_href;
};

// Anchors wrapping an img/embed/object inside the frame (nested iframes are
// their own frames and are skipped here). adurl=/redirect= query parameters
// are unwrapped with up to three percent-decode rounds; candidates whose
// landing fails to parse as an absolute URL are dropped.
std::vector<CandidateLanding> extract_candidates(const AdFrame& frame);

struct ExtractionContext {
    std::string run_id;
    std::string device_id;
    std::string stage_id; // "B", "M", "A"
    int session_id = 0;
    Tick observed_at = 0;
    CrawlType crawl_type = CrawlType::test;
    CrawlPhase crawl_phase = CrawlPhase::before;
    int max_frame_depth = 2;
};

struct AdObservation {
    std::string landing_url;
    std::string landing_domain; // registrable domain
    LandingRoute route = LandingRoute::direct_href;
    std::string page; // page domain the ad was served on
    std::string run_id;
    std::string device_id;
    std::string stage_id;
    int session_id = 0;
    Tick observed_at = 0;
    CrawlType crawl_type = CrawlType::test;
    CrawlPhase crawl_phase = CrawlPhase::before;
};

struct PageStats {
    size_t frames_total = 0;
    size_t frames_valid = 0;
    size_t candidates = 0;
    size_t ads = 0;
};

struct PageExtraction {
    std::vector<AdObservation> observations; // document order, deduplicated
    PageStats stats;
};

// Full pipeline over one snapshot: frame screen, candidate walk, filter
// verdict on the click URL, landing-URL dedup. Throws SnapshotMalformed when
// the snapshot has no root.
PageExtraction extract_ads(const DomSnapshot& page, const filters::FilterSet& filter_set,
                           const PublicSuffixList& psl, const ExtractionContext& ctx);

} // namespace cdt::adex
