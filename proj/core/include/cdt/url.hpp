#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cdt {

// Absolute URL split into components. Scheme and host are lowercased at
// parse time; path and query keep their original case.
struct Url {
    std::string scheme;
    std::string host;
    std::string port;  // empty when absent
    std::string path;  // leading '/' when present
    std::string query; // without the '?'
    bool valid = false;

    // Canonical text form (fragment dropped, scheme/host lowercased).
    std::string normalized() const;
};

Url parse_url(std::string_view s);

// One round of %XX decoding. Malformed escapes pass through untouched; '+' is
// not treated as space.
std::string percent_decode(std::string_view s);

// Repeated decoding for nested encodings, at most max_rounds rounds; stops
// early once a round changes nothing or no '%' remains.
std::string percent_decode_rounds(std::string_view s, int max_rounds);

// Query string -> (key, raw value) pairs in order of appearance.
std::vector<std::pair<std::string, std::string>> parse_query(std::string_view query);

// Public-suffix snapshot in the standard list format: one rule per line,
// '!' exception rules, '*' wildcard labels, comments starting with "//".
class PublicSuffixList {
public:
    static PublicSuffixList from_file(const std::string& path);
    static PublicSuffixList from_text(std::string_view text);

    // Longest matching public suffix for a lowercase host ("" when the host
    // itself is empty). Unknown TLDs fall back to the rightmost label.
    std::string public_suffix(std::string_view host) const;

    // Suffix plus one label: "a.b.site.example" -> "site.example". A host
    // that is itself a public suffix is returned unchanged.
    std::string registrable_domain(std::string_view host) const;

    size_t rule_count() const { return rules_.size() + exceptions_.size(); }

private:
    std::vector<std::vector<std::string>> rules_;      // label lists, rightmost first
    std::vector<std::vector<std::string>> exceptions_; // likewise
};

// True when the two hosts resolve to different registrable domains.
bool is_third_party(const PublicSuffixList& psl, std::string_view request_host,
                    std::string_view page_host);

} // namespace cdt
