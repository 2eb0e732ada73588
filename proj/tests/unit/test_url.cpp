#include <doctest.h>

#include <string>

#include "cdt/url.hpp"
#include "test_util.hpp"

using namespace cdt;

TEST_SUITE_BEGIN("url");

TEST_CASE("parse_url splits a full URL") {
    Url u = parse_url("https://Ads.Example.COM:8443/path/Page?a=1&b=2#frag");
    REQUIRE(u.valid);
    CHECK(u.scheme == "https");
    CHECK(u.host == "ads.example.com");
    CHECK(u.port == "8443");
    CHECK(u.path == "/path/Page");
    CHECK(u.query == "a=1&b=2");
    CHECK(u.normalized() == "https://ads.example.com:8443/path/Page?a=1&b=2");
}

TEST_CASE("parse_url handles bare hosts and missing pieces") {
    Url u = parse_url("http://site.example");
    REQUIRE(u.valid);
    CHECK(u.host == "site.example");
    CHECK(u.port == "");
    CHECK(u.query == "");

    Url q = parse_url("http://site.example?x=1");
    REQUIRE(q.valid);
    CHECK(q.query == "x=1");
}

TEST_CASE("parse_url rejects junk") {
    CHECK_FALSE(parse_url("").valid);
    CHECK_FALSE(parse_url("not a url").valid);
    CHECK_FALSE(parse_url("https://").valid);
    CHECK_FALSE(parse_url("//missing.scheme/path").valid);
}

TEST_CASE("percent_decode decodes one round") {
    CHECK(percent_decode("a%20b") == "a b");
    CHECK(percent_decode("%2Fpath%2f") == "/path/");
    CHECK(percent_decode("100%25") == "100%");
}

TEST_CASE("percent_decode leaves malformed escapes and plus signs alone") {
    CHECK(percent_decode("a%2") == "a%2");
    CHECK(percent_decode("a%zz") == "a%zz");
    CHECK(percent_decode("a+b") == "a+b");
    CHECK(percent_decode("%") == "%");
}

TEST_CASE("percent_decode is single-round") {
    // %252F is the double-encoded form of '/': one round gives %2F.
    CHECK(percent_decode("%252F") == "%2F");
}

TEST_CASE("percent_decode_rounds unwraps nested encodings up to the cap") {
    CHECK(percent_decode_rounds("%252F", 3) == "/");
    CHECK(percent_decode_rounds("%25252F", 2) == "%2F");
    // Stops early once stable.
    CHECK(percent_decode_rounds("plain", 5) == "plain");
    CHECK(percent_decode_rounds("%2F", 3) == "/");
}

TEST_CASE("parse_query preserves order and raw values") {
    auto kv = parse_query("b=2&a=%2Fx&flag&c=");
    REQUIRE(kv.size() == 4);
    CHECK(kv[0].first == "b");
    CHECK(kv[0].second == "2");
    CHECK(kv[1].first == "a");
    CHECK(kv[1].second == "%2Fx"); // values stay encoded
    CHECK(kv[2].first == "flag");
    CHECK(kv[2].second == "");
    CHECK(kv[3].first == "c");
    CHECK(kv[3].second == "");
}

TEST_CASE("public suffix lookups against the fixture snapshot") {
    auto psl = PublicSuffixList::from_file(fixture("public_suffix.dat"));
    CHECK(psl.public_suffix("shop.site.co.uk") == "co.uk");
    CHECK(psl.public_suffix("site.example") == "example");
    CHECK(psl.public_suffix("deep.a.b.com") == "com");
}

TEST_CASE("registrable_domain takes suffix plus one label") {
    auto psl = PublicSuffixList::from_file(fixture("public_suffix.dat"));
    CHECK(psl.registrable_domain("a.b.site.example") == "site.example");
    CHECK(psl.registrable_domain("shop.site.co.uk") == "site.co.uk");
    CHECK(psl.registrable_domain("site.com.au") == "site.com.au");
}

TEST_CASE("a host that is itself a public suffix is returned unchanged") {
    auto psl = PublicSuffixList::from_file(fixture("public_suffix.dat"));
    CHECK(psl.registrable_domain("co.uk") == "co.uk");
    CHECK(psl.registrable_domain("com") == "com");
}

TEST_CASE("wildcard rules match exactly one label") {
    auto psl = PublicSuffixList::from_file(fixture("public_suffix.dat"));
    // *.ck makes bar.ck a public suffix, so foo.bar.ck is registrable.
    CHECK(psl.public_suffix("foo.bar.ck") == "bar.ck");
    CHECK(psl.registrable_domain("foo.bar.ck") == "foo.bar.ck");
}

TEST_CASE("exception rules carve hosts out of a wildcard") {
    auto psl = PublicSuffixList::from_file(fixture("public_suffix.dat"));
    // !www.ck: www.ck is NOT a public suffix, its suffix is just ck.
    CHECK(psl.public_suffix("www.ck") == "ck");
    CHECK(psl.registrable_domain("www.ck") == "www.ck");
    CHECK(psl.registrable_domain("sub.www.ck") == "www.ck");
}

TEST_CASE("unknown TLDs fall back to the rightmost label") {
    auto psl = PublicSuffixList::from_text("com\n");
    CHECK(psl.public_suffix("site.zz") == "zz");
    CHECK(psl.registrable_domain("a.site.zz") == "site.zz");
}

TEST_CASE("from_text skips comments and blank lines") {
    auto psl = PublicSuffixList::from_text("// header\n\ncom\n!x.com\n");
    CHECK(psl.rule_count() == 2);
}

TEST_CASE("is_third_party compares registrable domains") {
    auto psl = PublicSuffixList::from_file(fixture("public_suffix.dat"));
    CHECK_FALSE(is_third_party(psl, "cdn.site.example", "www.site.example"));
    CHECK(is_third_party(psl, "ads.tracker.example", "www.site.example"));
    CHECK(is_third_party(psl, "site.co.uk", "site.org.uk"));
}

TEST_SUITE_END();
