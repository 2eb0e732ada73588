#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cdt/clock.hpp"

namespace cdt {

// One node of a parsed DOM snapshot. Element tags and attribute keys are
// lowercased; text runs are carried as "#text" children so emptiness checks
// can see them.
struct DomNode {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<DomNode> children;
    std::string text; // only meaningful for #text nodes

    bool is_text() const { return tag == "#text"; }
    const std::string* attr(std::string_view key) const;
};

struct DomSnapshot {
    std::string page_url;
    Tick captured_at = 0;
    bool has_root = false;
    DomNode root; // synthetic "#document" holding the top-level nodes
};

// Tolerant tag-soup parser: enough of HTML for captured pages — comments,
// doctype, void elements, quoted/unquoted attributes, raw-text script/style,
// stray close tags. It never throws; an empty input yields has_root = false.
DomSnapshot parse_html(std::string_view markup, std::string_view page_url = {},
                       Tick captured_at = 0);

// Serialize a snapshot back to markup (used for dumping served pages).
std::string to_html(const DomNode& node);
std::string to_html(const DomSnapshot& snapshot);

} // namespace cdt
