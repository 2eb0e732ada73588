#include <doctest.h>

#include <string>
#include <vector>

#include "cdt/adex.hpp"
#include "cdt/error.hpp"
#include "cdt/text.hpp"
#include "test_util.hpp"

using namespace cdt;
using namespace cdt::adex;

namespace {

PublicSuffixList test_psl() { return PublicSuffixList::from_file(fixture("public_suffix.dat")); }

filters::FilterSet test_filters(const PublicSuffixList& psl) {
    return filters::FilterSet::from_file(fixture("easylist_snapshot.txt"), &psl);
}

DomSnapshot golden_page() {
    return parse_html(read_text_file(fixture("dom/control_page_1.html")),
                      "https://www.dailyforecast.example/", 600);
}

} // namespace

TEST_SUITE_BEGIN("adex");

TEST_CASE("frame screen rejects zero dimensions") {
    auto snap = parse_html(
        "<iframe width=\"300\" height=\"250\"><p>a</p></iframe>"
        "<iframe width=\"0\" height=\"300\"><p>b</p></iframe>"
        "<iframe width=\"160\" height=\"600\"><p>c</p></iframe>");
    FrameScan scan = find_ad_frames(snap);
    CHECK(scan.total == 3);
    REQUIRE(scan.valid.size() == 2);
    CHECK(scan.valid[0].width == 300);
    CHECK(scan.valid[1].height == 600);
}

TEST_CASE("a page without iframes scans to nothing") {
    auto snap = parse_html("<div><p>copy</p><img src=\"x.png\"></div>");
    FrameScan scan = find_ad_frames(snap);
    CHECK(scan.total == 0);
    CHECK(scan.valid.empty());
}

TEST_CASE("missing dimensions fall back to the default slot size") {
    auto snap = parse_html("<iframe src=\"https://ads.example/f\"><p>creative</p></iframe>");
    FrameScan scan = find_ad_frames(snap);
    REQUIRE(scan.valid.size() == 1);
    CHECK(scan.valid[0].width == 300);
    CHECK(scan.valid[0].height == 250);
    CHECK(scan.valid[0].depth == 1);
}

TEST_CASE("empty frames are counted but not valid") {
    auto snap = parse_html("<iframe width=\"300\" height=\"250\"></iframe>"
                           "<iframe width=\"300\" height=\"250\">   </iframe>");
    FrameScan scan = find_ad_frames(snap);
    CHECK(scan.total == 2);
    CHECK(scan.valid.empty());
}

TEST_CASE("dimension strings with units still parse") {
    auto snap = parse_html("<iframe width=\"300px\" height=\" 250 \"><p>x</p></iframe>");
    FrameScan scan = find_ad_frames(snap);
    REQUIRE(scan.valid.size() == 1);
    CHECK(scan.valid[0].width == 300);
    CHECK(scan.valid[0].height == 250);
}

TEST_CASE("the depth limit cuts off deeply nested frames") {
    std::string markup =
        "<iframe width=\"300\" height=\"250\"><p>outer</p>"
        "<iframe width=\"300\" height=\"250\"><p>inner</p>"
        "<iframe width=\"300\" height=\"250\"><p>deepest</p></iframe>"
        "</iframe></iframe>";
    auto snap = parse_html(markup);
    FrameScan at2 = find_ad_frames(snap, 2);
    CHECK(at2.total == 2); // the depth-3 frame is invisible
    CHECK(at2.valid.size() == 2);
    FrameScan at1 = find_ad_frames(snap, 1);
    CHECK(at1.total == 1);
    CHECK(at1.valid.size() == 1);
}

TEST_CASE("candidates need an anchor that wraps a creative") {
    auto snap = parse_html(
        "<iframe width=\"300\" height=\"250\">"
        "<a href=\"https://shop.example/with-img\"><img src=\"a.png\"></a>"
        "<a href=\"https://shop.example/text-only\">just text</a>"
        "<a><img src=\"no-href.png\"></a>"
        "<a href=\"not a url\"><img src=\"c.png\"></a>"
        "</iframe>");
    FrameScan scan = find_ad_frames(snap);
    REQUIRE(scan.valid.size() == 1);
    auto cands = extract_candidates(scan.valid[0]);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].click_url == "https://shop.example/with-img");
    CHECK(cands[0].route == LandingRoute::direct_href);
    CHECK(cands[0].landing_url == cands[0].click_url);
}

TEST_CASE("adurl parameters unwrap to the landing URL") {
    auto snap = parse_html(
        "<iframe width=\"300\" height=\"250\">"
        "<a href=\"https://adclick.g.example/aclk?sa=l&ai=xyz&adurl=https%3A%2F%2Fshop.example.com%2Fsale\">"
        "<img src=\"creative.png\"></a></iframe>");
    FrameScan scan = find_ad_frames(snap);
    REQUIRE(scan.valid.size() == 1);
    auto cands = extract_candidates(scan.valid[0]);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].route == LandingRoute::adurl_param);
    CHECK(cands[0].landing_url == "https://shop.example.com/sale");
}

TEST_CASE("double-encoded redirect parameters take two decode rounds") {
    auto snap = parse_html(
        "<iframe width=\"300\" height=\"250\">"
        "<a href=\"https://r.example/go?redirect=https%253A%252F%252Fdeal.example%252Fitem\">"
        "<img src=\"creative.png\"></a></iframe>");
    auto cands = extract_candidates(find_ad_frames(snap).valid[0]);
    REQUIRE(cands.size() == 1);
    CHECK(cands[0].route == LandingRoute::redirect_param);
    CHECK(cands[0].landing_url == "https://deal.example/item");
}

TEST_CASE("a landing that never decodes to a URL is dropped") {
    auto snap = parse_html(
        "<iframe width=\"300\" height=\"250\">"
        "<a href=\"https://r.example/go?adurl=gibberish\"><img src=\"x.png\"></a></iframe>");
    auto cands = extract_candidates(find_ad_frames(snap).valid[0]);
    CHECK(cands.empty());
}

TEST_CASE("nested frames keep their own anchors") {
    auto snap = parse_html(
        "<iframe width=\"300\" height=\"250\"><p>outer</p>"
        "<iframe width=\"100\" height=\"100\">"
        "<a href=\"https://inner.example/\"><img src=\"i.png\"></a></iframe>"
        "</iframe>");
    FrameScan scan = find_ad_frames(snap);
    REQUIRE(scan.valid.size() == 2);
    CHECK(extract_candidates(scan.valid[0]).empty()); // outer skips nested anchor
    CHECK(extract_candidates(scan.valid[1]).size() == 1);
}

TEST_CASE("golden page: frame and candidate tallies") {
    auto psl = test_psl();
    auto filter_set = test_filters(psl);
    ExtractionContext ctx;
    ctx.run_id = "golden";
    ctx.device_id = "pc-paired";
    ctx.stage_id = "B";
    ctx.session_id = 1;
    ctx.observed_at = 600;
    PageExtraction out = extract_ads(golden_page(), filter_set, psl, ctx);
    CHECK(out.stats.frames_total == 5);
    CHECK(out.stats.frames_valid == 4);
    CHECK(out.stats.candidates == 6);
    CHECK(out.stats.ads == 3);
    CHECK(out.observations.size() == 3);
}

TEST_CASE("golden page: observations in document order with routes") {
    auto psl = test_psl();
    auto filter_set = test_filters(psl);
    ExtractionContext ctx;
    ctx.run_id = "golden";
    ctx.device_id = "pc-paired";
    ctx.stage_id = "A";
    ctx.session_id = 3;
    ctx.crawl_type = CrawlType::test;
    ctx.crawl_phase = CrawlPhase::after;
    PageExtraction out = extract_ads(golden_page(), filter_set, psl, ctx);
    REQUIRE(out.observations.size() == 3);

    const AdObservation& first = out.observations[0];
    CHECK(first.landing_url == "https://solelane.example/offer/cmp-sport-01-0");
    CHECK(first.landing_domain == "solelane.example");
    CHECK(first.route == LandingRoute::adurl_param);
    CHECK(first.page == "dailyforecast.example");
    CHECK(first.run_id == "golden");
    CHECK(first.device_id == "pc-paired");
    CHECK(first.stage_id == "A");
    CHECK(first.session_id == 3);
    CHECK(first.crawl_phase == CrawlPhase::after);

    const AdObservation& second = out.observations[1];
    CHECK(second.landing_domain == "crownoutlet.example");
    CHECK(second.route == LandingRoute::redirect_param);
    CHECK(second.landing_url == "https://crownoutlet.example/offer/cmp-watch-01-1");

    const AdObservation& third = out.observations[2];
    CHECK(third.landing_domain == "fizzcrate.example");
    CHECK(third.route == LandingRoute::direct_href);
}

TEST_CASE("golden page: repeated landing is deduplicated, unblocked clicks are not ads") {
    auto psl = test_psl();
    auto filter_set = test_filters(psl);
    PageExtraction out = extract_ads(golden_page(), filter_set, psl, {});
    // Six candidates: crownoutlet twice (dedup to one), the two house-widget
    // anchors pass the filters and are dropped.
    CHECK(out.stats.candidates == 6);
    CHECK(out.stats.ads == 3);
    int crownoutlet = 0;
    for (const auto& obs : out.observations) crownoutlet += obs.landing_domain == "crownoutlet.example";
    CHECK(crownoutlet == 1);
}

TEST_CASE("a page with no frames extracts to zeros") {
    auto psl = test_psl();
    auto filter_set = test_filters(psl);
    auto snap = parse_html("<div><p>no slots here</p></div>", "https://www.dailyforecast.example/");
    PageExtraction out = extract_ads(snap, filter_set, psl, {});
    CHECK(out.stats.frames_total == 0);
    CHECK(out.stats.frames_valid == 0);
    CHECK(out.stats.candidates == 0);
    CHECK(out.observations.empty());
}

TEST_CASE("extraction refuses a rootless snapshot") {
    auto psl = test_psl();
    auto filter_set = test_filters(psl);
    DomSnapshot empty = parse_html("");
    REQUIRE_FALSE(empty.has_root);
    CHECK_THROWS_AS(extract_ads(empty, filter_set, psl, {}), cdt::error);
    try {
        extract_ads(empty, filter_set, psl, {});
    } catch (const cdt::error& e) {
        CHECK(e.code() == errc::snapshot_malformed);
    }
}

TEST_CASE("clicks the filters pass through yield no observations") {
    auto psl = test_psl();
    auto filter_set = test_filters(psl);
    auto snap = parse_html(
        "<iframe width=\"300\" height=\"250\">"
        "<a href=\"https://dailyforecast.example/self-promo\"><img src=\"x.png\"></a>"
        "</iframe>",
        "https://www.dailyforecast.example/");
    PageExtraction out = extract_ads(snap, filter_set, psl, {});
    CHECK(out.stats.candidates == 1);
    CHECK(out.stats.ads == 0);
}

TEST_CASE("extraction is a pure function of the snapshot") {
    auto psl = test_psl();
    auto filter_set = test_filters(psl);
    auto page = golden_page();
    PageExtraction a = extract_ads(page, filter_set, psl, {});
    PageExtraction b = extract_ads(page, filter_set, psl, {});
    REQUIRE(a.observations.size() == b.observations.size());
    for (size_t i = 0; i < a.observations.size(); ++i) {
        CHECK(a.observations[i].landing_url == b.observations[i].landing_url);
        CHECK(a.observations[i].route == b.observations[i].route);
    }
}

TEST_CASE("stats stay internally consistent") {
    auto psl = test_psl();
    auto filter_set = test_filters(psl);
    PageExtraction out = extract_ads(golden_page(), filter_set, psl, {});
    CHECK(out.stats.frames_valid <= out.stats.frames_total);
    CHECK(out.stats.ads <= out.stats.candidates);
    CHECK(out.stats.ads == out.observations.size());
}

TEST_SUITE_END();
