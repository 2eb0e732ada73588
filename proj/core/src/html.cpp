#include "cdt/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "cdt/text.hpp"

namespace cdt {

const std::string* DomNode::attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
        if (k == key) return &v;
    }
    return nullptr;
}

namespace {

bool is_void_element(std::string_view tag) {
    static constexpr std::array<std::string_view, 14> kVoid = {
        "area", "base", "br",    "col",   "embed",  "hr",    "img",
        "input", "link", "meta", "param", "source", "track", "wbr"};
    return std::find(kVoid.begin(), kVoid.end(), tag) != kVoid.end();
}

bool is_raw_text_element(std::string_view tag) { return tag == "script" || tag == "style"; }

struct Parser {
    std::string_view in;
    size_t pos = 0;

    bool eof() const { return pos >= in.size(); }
    char peek(size_t off = 0) const { return pos + off < in.size() ? in[pos + off] : '\0'; }

    void skip_until(std::string_view marker) {
        const size_t found = in.find(marker, pos);
        pos = found == std::string_view::npos ? in.size() : found + marker.size();
    }

    static bool is_name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
    }

    std::string read_name() {
        const size_t start = pos;
        while (!eof() && is_name_char(in[pos])) ++pos;
        return to_lower(in.substr(start, pos - start));
    }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(in[pos]))) ++pos;
    }

    // Parses attributes up to '>' or '/>'. Returns true for self-closing.
    bool read_attrs(std::vector<std::pair<std::string, std::string>>& attrs) {
        while (true) {
            skip_ws();
            if (eof()) return false;
            if (peek() == '>') {
                ++pos;
                return false;
            }
            if (peek() == '/' && peek(1) == '>') {
                pos += 2;
                return true;
            }
            if (!is_name_char(peek())) { // junk inside the tag; skip a char
                ++pos;
                continue;
            }
            std::string key = read_name();
            std::string value;
            skip_ws();
            if (peek() == '=') {
                ++pos;
                skip_ws();
                if (peek() == '"' || peek() == '\'') {
                    const char quote = peek();
                    ++pos;
                    const size_t start = pos;
                    while (!eof() && in[pos] != quote) ++pos;
                    value = std::string(in.substr(start, pos - start));
                    if (!eof()) ++pos;
                } else {
                    const size_t start = pos;
                    while (!eof() && !std::isspace(static_cast<unsigned char>(in[pos])) &&
                           peek() != '>' && !(peek() == '/' && peek(1) == '>'))
                        ++pos;
                    value = std::string(in.substr(start, pos - start));
                }
            }
            // First occurrence of a key wins.
            bool seen = false;
            for (const auto& [k, v] : attrs) {
                if (k == key) {
                    seen = true;
                    break;
                }
            }
            if (!seen) attrs.emplace_back(std::move(key), std::move(value));
        }
    }

    // Parses siblings until a close tag for open_tags.back() (consumed) or a
    // close tag for a deeper ancestor (left unconsumed so callers unwind).
    std::vector<DomNode> parse_nodes(std::vector<std::string>& open_tags) {
        std::vector<DomNode> out;
        while (!eof()) {
            if (peek() != '<') {
                const size_t start = pos;
                const size_t next = in.find('<', pos);
                pos = next == std::string_view::npos ? in.size() : next;
                std::string_view run = in.substr(start, pos - start);
                if (!trim(run).empty()) {
                    DomNode text_node;
                    text_node.tag = "#text";
                    text_node.text = std::string(run);
                    out.push_back(std::move(text_node));
                }
                continue;
            }
            if (starts_with(in.substr(pos), "<!--")) {
                skip_until("-->");
                continue;
            }
            if (peek(1) == '!' || peek(1) == '?') {
                skip_until(">");
                continue;
            }
            if (peek(1) == '/') {
                const size_t save = pos;
                pos += 2;
                std::string name = read_name();
                skip_until(">");
                if (!open_tags.empty() && name == open_tags.back()) return out;
                // A close tag of some deeper ancestor unwinds this level too.
                if (std::find(open_tags.begin(), open_tags.end(), name) != open_tags.end()) {
                    pos = save;
                    return out;
                }
                continue; // stray close tag: drop it
            }
            if (!is_name_char(peek(1))) { // lone '<' in text
                ++pos;
                continue;
            }
            ++pos;
            DomNode node;
            node.tag = read_name();
            const bool self_closed = read_attrs(node.attrs);
            if (self_closed || is_void_element(node.tag)) {
                out.push_back(std::move(node));
                continue;
            }
            if (is_raw_text_element(node.tag)) {
                const std::string close = "</" + node.tag;
                size_t end = in.find(close, pos);
                if (end == std::string_view::npos) end = in.size();
                std::string_view raw = in.substr(pos, end - pos);
                if (!trim(raw).empty()) {
                    DomNode text_node;
                    text_node.tag = "#text";
                    text_node.text = std::string(raw);
                    node.children.push_back(std::move(text_node));
                }
                pos = end;
                if (pos < in.size()) skip_until(">");
                out.push_back(std::move(node));
                continue;
            }
            open_tags.push_back(node.tag);
            node.children = parse_nodes(open_tags);
            open_tags.pop_back();
            out.push_back(std::move(node));
        }
        return out;
    }
};

void append_html(const DomNode& node, std::string& out) {
    if (node.is_text()) {
        out += node.text;
        return;
    }
    out += '<';
    out += node.tag;
    for (const auto& [k, v] : node.attrs) {
        out += ' ';
        out += k;
        out += "=\"";
        out += v;
        out += '"';
    }
    out += '>';
    if (is_void_element(node.tag)) return;
    for (const auto& child : node.children) append_html(child, out);
    out += "</";
    out += node.tag;
    out += '>';
}

} // namespace

DomSnapshot parse_html(std::string_view markup, std::string_view page_url, Tick captured_at) {
    DomSnapshot snap;
    snap.page_url = std::string(page_url);
    snap.captured_at = captured_at;
    snap.root.tag = "#document";
    Parser p{markup};
    std::vector<std::string> open_tags;
    snap.root.children = p.parse_nodes(open_tags);
    snap.has_root = !snap.root.children.empty();
    return snap;
}

std::string to_html(const DomNode& node) {
    std::string out;
    if (node.tag == "#document") {
        for (const auto& child : node.children) append_html(child, out);
    } else {
        append_html(node, out);
    }
    return out;
}

std::string to_html(const DomSnapshot& snapshot) { return to_html(snapshot.root); }

} // namespace cdt
