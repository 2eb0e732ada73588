#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "cdt/filterlist.hpp"
#include "cdt/rng.hpp"
#include "cdt/url.hpp"
#include "test_util.hpp"

using namespace cdt;
using namespace cdt::filters;

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

std::string rules_text(const std::vector<std::string>& rules) {
    std::string text;
    for (const auto& r : rules) {
        text += r;
        text += '\n';
    }
    return text;
}

// URLs assembled from pools that overlap the fixture list's tokens, so both
// hits and misses occur.
std::string random_url(Rng& rng) {
    static const std::vector<std::string> hosts{
        "ads.adsync.example",  "sync.adsync.example", "px.pairwise.example",
        "srv.linkgraph.example", "cdn.linkgraph.example", "tag.householdiq.example",
        "ads.bannerly.example", "cm.clickmint.example", "rb.adribbon.example",
        "pf.pixelfarm.example", "static.admart.example", "ts.trackstone.example",
        "www.dailyforecast.example", "shop.example", "promo.flashdeal.example",
        "popunder.example", "surveygate.example", "news.example"};
    static const std::vector<std::string> segments{
        "banner", "ads", "img", "fonts", "legal", "promo", "pixel", "a1",
        "adframe-300x250.js", "movie.swf", "index.html"};
    std::string url = rng.chance(0.5) ? "https://" : "http://";
    url += hosts[size_t(rng.uniform_int(0, int64_t(hosts.size()) - 1))];
    int depth = int(rng.uniform_int(0, 3));
    for (int i = 0; i < depth; ++i) {
        url += '/';
        url += segments[size_t(rng.uniform_int(0, int64_t(segments.size()) - 1))];
    }
    if (rng.chance(0.3)) url += "/";
    if (rng.chance(0.4)) {
        url += rng.chance(0.5) ? "?placement=sidebar" : "?id=42&ref=top";
    }
    return url;
}

} // namespace

TEST_SUITE_BEGIN("filterlist");

TEST_CASE("parse_line classifies unusable lines") {
    CHECK(parse_line("").reason == SkipReason::empty);
    CHECK(parse_line("   \t ").reason == SkipReason::empty);
    CHECK(parse_line("! a comment").reason == SkipReason::comment);
    CHECK(parse_line("[Adblock Plus 2.0]").reason == SkipReason::section_header);
    CHECK(parse_line("site.example##.ad").reason == SkipReason::element_hiding);
    CHECK(parse_line("site.example#@#.ad").reason == SkipReason::element_hiding);
    CHECK(parse_line("||v.example^$media").reason == SkipReason::unsupported_option);
    CHECK(parse_line("||v.example^$websocket,third-party").reason == SkipReason::unsupported_option);
    CHECK(parse_line("/^https?:.*regex/").reason == SkipReason::unsupported_option);
    CHECK(parse_line("|").reason == SkipReason::malformed);
    CHECK(parse_line("@@").reason == SkipReason::malformed);
}

TEST_CASE("parse_line keeps the supported option pair") {
    auto third = parse_line("||cdn.example^$third-party");
    REQUIRE(third.rule.has_value());
    CHECK(third.rule->party == PartyScope::third_party);

    auto first = parse_line("||self.example^$~third-party");
    REQUIRE(first.rule.has_value());
    CHECK(first.rule->party == PartyScope::first_party);

    auto domains = parse_line("||w.example^$domain=a.example|~b.example");
    REQUIRE(domains.rule.has_value());
    CHECK(domains.rule->include_domains == std::vector<std::string>{"a.example"});
    CHECK(domains.rule->exclude_domains == std::vector<std::string>{"b.example"});
}

TEST_CASE("parse_line records anchors and exception action") {
    auto rule = parse_line("@@||host.example/path|");
    REQUIRE(rule.rule.has_value());
    CHECK(rule.rule->action == RuleAction::allow);
    CHECK(rule.rule->domain_anchor);
    CHECK(rule.rule->end_anchor);
    CHECK_FALSE(rule.rule->start_anchor);

    auto start = parse_line("|https://exact.example/");
    REQUIRE(start.rule.has_value());
    CHECK(start.rule->start_anchor);
    CHECK_FALSE(start.rule->domain_anchor);
}

TEST_CASE("conformance fixture passes on both match paths") {
    auto doc = load_json(fixture("filter_conformance.json"));
    auto psl = PublicSuffixList::from_file(fixture("public_suffix.dat"));
    const auto& cases = doc.at("cases");
    REQUIRE(cases.size() >= 30);
    for (const auto& c : cases) {
        INFO("case: ", c.at("name").get<std::string>());
        std::vector<std::string> rules = c.at("rules").get<std::vector<std::string>>();
        FilterSet set = FilterSet::from_text(rules_text(rules), &psl);
        RequestContext ctx;
        ctx.url = c.at("url").get<std::string>();
        if (c.contains("page")) ctx.page_domain = c.at("page").get<std::string>();
        const bool expect = c.at("expect_blocked").get<bool>();
        CHECK(set.match(ctx).blocked == expect);
        CHECK(set.match_linear(ctx).blocked == expect);
    }
}

TEST_CASE("fixture list parse report") {
    auto set = FilterSet::from_file(fixture("easylist_snapshot.txt"));
    const ParseReport& report = set.report();
    // 54 physical lines plus the empty segment after the final newline.
    CHECK(report.total_lines == 55);
    CHECK(report.blocking == 18);
    CHECK(report.exceptions == 2);
    CHECK(set.rule_count() == 20);
    CHECK(report.skipped.at("comment") == 15);
    CHECK(report.skipped.at("section-header") == 2);
    CHECK(report.skipped.at("element-hiding") == 2);
    CHECK(report.skipped.at("unsupported-option") == 2);
    CHECK(report.skipped.count("malformed") == 0);
    CHECK(report.skipped.count("empty") == 0); // blank lines are not reported
}

TEST_CASE("indexed match equals the linear scan on random URLs") {
    auto psl = PublicSuffixList::from_file(fixture("public_suffix.dat"));
    auto set = FilterSet::from_file(fixture("easylist_snapshot.txt"), &psl);
    Rng rng(2024);
    int blocked = 0;
    for (int i = 0; i < 1000; ++i) {
        RequestContext ctx;
        ctx.url = random_url(rng);
        ctx.page_domain = rng.chance(0.5) ? "dailyforecast.example" : "wirereport.example";
        MatchResult fast = set.match(ctx);
        MatchResult slow = set.match_linear(ctx);
        INFO("url: ", ctx.url, " page: ", ctx.page_domain);
        REQUIRE(fast.blocked == slow.blocked);
        REQUIRE((fast.matched == nullptr) == (slow.matched == nullptr));
        if (fast.matched) CHECK(fast.matched->source == slow.matched->source);
        REQUIRE((fast.exception == nullptr) == (slow.exception == nullptr));
        if (fast.exception) CHECK(fast.exception->source == slow.exception->source);
        blocked += fast.blocked;
    }
    // The pools are tuned so the sweep exercises both verdicts.
    CHECK(blocked > 100);
    CHECK(blocked < 900);
}

TEST_CASE("an exception rule always wins over any blocking rule") {
    auto set = FilterSet::from_text(
        "||ads.example^\n"
        "banner\n"
        "@@||ads.example/keep/\n");
    RequestContext ctx;
    ctx.url = "https://ads.example/keep/banner.png";
    MatchResult r = set.match(ctx);
    CHECK_FALSE(r.blocked);
    REQUIRE(r.matched != nullptr);   // a blocking rule did match
    REQUIRE(r.exception != nullptr); // and was overridden
    CHECK(r.exception->action == RuleAction::allow);
}

TEST_CASE("adding blocking rules never unblocks a URL") {
    const std::vector<std::string> rules{
        "||one.example^", "/ads^", "banner", "-adframe-", "||two.example^"};
    const std::vector<std::string> urls{
        "https://one.example/x",       "https://host.example/ads?1",
        "https://host.example/banner", "https://host.example/-adframe-300.js",
        "https://two.example/",        "https://clean.example/page"};
    std::vector<bool> prev(urls.size(), false);
    for (size_t k = 1; k <= rules.size(); ++k) {
        std::vector<std::string> head(rules.begin(), rules.begin() + k);
        FilterSet set = FilterSet::from_text(rules_text(head));
        for (size_t u = 0; u < urls.size(); ++u) {
            bool now = set.matches({urls[u], "", {}});
            if (prev[u]) CHECK(now); // verdicts only grow without exceptions
            prev[u] = now;
        }
    }
}

TEST_CASE("party-scoped rules stay silent when the relation is unknown") {
    auto set = FilterSet::from_text("||cdn.example^$third-party\n");
    RequestContext ctx;
    ctx.url = "https://cdn.example/lib.js"; // no page, no override, no psl
    CHECK_FALSE(set.matches(ctx));
    ctx.third_party = true;
    CHECK(set.matches(ctx));
    ctx.third_party = false;
    CHECK_FALSE(set.matches(ctx));
}

TEST_CASE("classify_domains probes each domain as a bare request") {
    auto set = FilterSet::from_file(fixture("easylist_snapshot.txt"));
    auto verdicts = set.classify_domains(
        {"ads.adsync.example", "pf.pixelfarm.example", "shop.example",
         "WWW.popunder.example"},
        "dailyforecast.example");
    CHECK(verdicts.at("ads.adsync.example"));
    CHECK(verdicts.at("pf.pixelfarm.example"));
    CHECK_FALSE(verdicts.at("shop.example"));
    // $third-party rule without a party source stays silent here.
    CHECK_FALSE(verdicts.at("WWW.popunder.example"));
}

TEST_CASE("pattern_matches honors anchors directly") {
    auto rule = parse_line("||adserv.example^");
    REQUIRE(rule.rule.has_value());
    CHECK(pattern_matches(*rule.rule, "https://adserv.example/pixel"));
    CHECK(pattern_matches(*rule.rule, "https://a.adserv.example/pixel"));
    CHECK_FALSE(pattern_matches(*rule.rule, "https://badserv.example/pixel"));
    CHECK_FALSE(pattern_matches(*rule.rule, "https://safe.example/adserv.example"));
}

TEST_SUITE_END();
