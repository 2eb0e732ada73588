#include <doctest.h>

#include <string>
#include <vector>

#include "cdt/text.hpp"
#include "test_util.hpp"

using namespace cdt;

TEST_SUITE_BEGIN("text");

TEST_CASE("to_lower handles mixed case and non-letters") {
    CHECK(to_lower("AbC-12z") == "abc-12z");
    CHECK(to_lower("") == "");
}

TEST_CASE("trim strips surrounding whitespace only") {
    CHECK(trim("  a b \t") == "a b");
    CHECK(trim("\r\n") == "");
    CHECK(trim("plain") == "plain");
}

TEST_CASE("prefix and suffix checks") {
    CHECK(starts_with("foobar", "foo"));
    CHECK_FALSE(starts_with("foo", "foobar"));
    CHECK(ends_with("foobar", "bar"));
    CHECK_FALSE(ends_with("bar", "foobar"));
    CHECK(starts_with("x", ""));
    CHECK(ends_with("x", ""));
}

TEST_CASE("split keeps empty segments") {
    CHECK(split("a,b,c", ',') == std::vector<std::string>{"a", "b", "c"});
    CHECK(split("a,,c", ',') == std::vector<std::string>{"a", "", "c"});
    CHECK(split(",a,", ',') == std::vector<std::string>{"", "a", ""});
    CHECK(split("", ',') == std::vector<std::string>{""});
}

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
    CHECK(tokenize("Dog food, CHEAP!") == std::vector<std::string>{"dog", "food", "cheap"});
    CHECK(tokenize("a1-b2") == std::vector<std::string>{"a1", "b2"});
    CHECK(tokenize("...") == std::vector<std::string>{});
    CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("jaccard works on sets, not bags") {
    std::vector<std::string> a{"x", "y", "x"};
    std::vector<std::string> b{"y", "z"};
    // sets {x,y} and {y,z}: intersection 1, union 3
    CHECK(jaccard(a, b) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("jaccard edge cases") {
    std::vector<std::string> e;
    std::vector<std::string> one{"a"};
    CHECK(jaccard(e, e) == 1.0);
    CHECK(jaccard(e, one) == 0.0);
    CHECK(jaccard(one, e) == 0.0);
    CHECK(jaccard(one, one) == 1.0);
}

TEST_CASE("text file round trip") {
    TempDir tmp;
    std::string path = tmp.file("roundtrip.txt");
    write_text_file(path, "line one\nline two\n");
    CHECK(read_text_file(path) == "line one\nline two\n");
}

TEST_CASE("reading a missing file throws") {
    TempDir tmp;
    CHECK_THROWS(read_text_file(tmp.file("absent.txt")));
}

TEST_SUITE_END();
