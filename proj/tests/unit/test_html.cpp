#include <doctest.h>

#include <string>

#include "cdt/html.hpp"

using namespace cdt;

namespace {

// First element child with the given tag, depth-first.
const DomNode* find_tag(const DomNode& node, std::string_view tag) {
    if (node.tag == tag) return &node;
    for (const auto& child : node.children)
        if (const DomNode* hit = find_tag(child, tag)) return hit;
    return nullptr;
}

int count_tag(const DomNode& node, std::string_view tag) {
    int n = node.tag == tag ? 1 : 0;
    for (const auto& child : node.children) n += count_tag(child, tag);
    return n;
}

} // namespace

TEST_SUITE_BEGIN("html");

TEST_CASE("basic nesting and text extraction") {
    auto snap = parse_html("<div><p>hello <b>bold</b></p></div>");
    REQUIRE(snap.has_root);
    const DomNode* p = find_tag(snap.root, "p");
    REQUIRE(p != nullptr);
    REQUIRE(p->children.size() == 2);
    CHECK(p->children[0].is_text());
    CHECK(p->children[0].text == "hello ");
    CHECK(p->children[1].tag == "b");
}

TEST_CASE("tags and attribute keys are lowercased, values kept") {
    auto snap = parse_html(R"(<DIV CLASS="Ad Box" Data-X=Raw>x</DIV>)");
    const DomNode* div = find_tag(snap.root, "div");
    REQUIRE(div != nullptr);
    const std::string* cls = div->attr("class");
    REQUIRE(cls != nullptr);
    CHECK(*cls == "Ad Box");
    const std::string* dx = div->attr("data-x");
    REQUIRE(dx != nullptr);
    CHECK(*dx == "Raw");
    CHECK(div->attr("missing") == nullptr);
}

TEST_CASE("void elements do not swallow siblings") {
    auto snap = parse_html("<p>a<br>b<img src=\"x.png\">c</p>");
    const DomNode* p = find_tag(snap.root, "p");
    REQUIRE(p != nullptr);
    // a, br, b, img, c all siblings under p
    REQUIRE(p->children.size() == 5);
    CHECK(p->children[1].tag == "br");
    CHECK(p->children[1].children.empty());
    CHECK(p->children[3].tag == "img");
    CHECK(p->children[4].text == "c");
}

TEST_CASE("self-closing syntax also terminates an element") {
    auto snap = parse_html("<div><iframe src=\"a\"/><iframe src=\"b\"></iframe></div>");
    CHECK(count_tag(snap.root, "iframe") == 2);
    const DomNode* div = find_tag(snap.root, "div");
    REQUIRE(div != nullptr);
    CHECK(div->children.size() == 2);
}

TEST_CASE("comments and doctype are skipped") {
    auto snap = parse_html("<!doctype html><!-- hidden --><p>real</p>");
    REQUIRE(snap.has_root);
    CHECK(count_tag(snap.root, "p") == 1);
    const DomNode* p = find_tag(snap.root, "p");
    REQUIRE(p->children.size() == 1);
    CHECK(p->children[0].text == "real");
}

TEST_CASE("script and style bodies are raw text") {
    auto snap = parse_html("<script>if (a < b) { tag('<div>'); }</script><p>x</p>");
    const DomNode* script = find_tag(snap.root, "script");
    REQUIRE(script != nullptr);
    REQUIRE(script->children.size() == 1);
    CHECK(script->children[0].is_text());
    CHECK(script->children[0].text == "if (a < b) { tag('<div>'); }");
    // The '<div>' inside the script must not have become an element.
    CHECK(count_tag(snap.root, "div") == 0);
    CHECK(count_tag(snap.root, "p") == 1);
}

TEST_CASE("stray close tags are ignored") {
    auto snap = parse_html("</div><p>ok</p></span>");
    REQUIRE(snap.has_root);
    CHECK(count_tag(snap.root, "p") == 1);
}

TEST_CASE("unclosed elements are closed at end of input") {
    auto snap = parse_html("<div><p>dangling");
    const DomNode* p = find_tag(snap.root, "p");
    REQUIRE(p != nullptr);
    REQUIRE(p->children.size() == 1);
    CHECK(p->children[0].text == "dangling");
}

TEST_CASE("empty and whitespace-only input yields no root") {
    CHECK_FALSE(parse_html("").has_root);
    auto snap = parse_html("   \n\t  ");
    // Whitespace may parse to a root with only whitespace text or no root at
    // all; either way there must be no element node.
    if (snap.has_root) {
        for (const auto& child : snap.root.children) CHECK(child.is_text());
    }
}

TEST_CASE("page metadata is carried on the snapshot") {
    auto snap = parse_html("<p>x</p>", "https://site.example/page", 1234);
    CHECK(snap.page_url == "https://site.example/page");
    CHECK(snap.captured_at == 1234);
}

TEST_CASE("serialize then reparse preserves structure") {
    std::string markup =
        "<div class=\"outer\"><iframe src=\"https://ads.example/slot\" width=\"300\" "
        "height=\"250\"><a href=\"https://x.example/\"><img src=\"b.png\"></a>"
        "</iframe><br><p>tail</p></div>";
    auto first = parse_html(markup);
    REQUIRE(first.has_root);
    std::string emitted = to_html(first);
    auto second = parse_html(emitted);
    REQUIRE(second.has_root);
    CHECK(to_html(second) == emitted); // fixpoint after one round
    CHECK(count_tag(second.root, "iframe") == count_tag(first.root, "iframe"));
    CHECK(count_tag(second.root, "a") == count_tag(first.root, "a"));
    CHECK(count_tag(second.root, "br") == count_tag(first.root, "br"));
}

TEST_SUITE_END();
