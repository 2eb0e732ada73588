#include "cdt/url.hpp"

#include <algorithm>
#include <cctype>

#include "cdt/text.hpp"

namespace cdt {

static bool valid_scheme(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '+' || c == '-' || c == '.';
    });
}

Url parse_url(std::string_view s) {
    Url u;
    const size_t scheme_end = s.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) return u;
    if (!valid_scheme(s.substr(0, scheme_end))) return u;
    u.scheme = to_lower(s.substr(0, scheme_end));

    size_t pos = scheme_end + 3;
    const size_t authority_end = s.find_first_of("/?#", pos);
    std::string_view authority = s.substr(pos, authority_end == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : authority_end - pos);
    const size_t colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        std::string_view port = authority.substr(colon + 1);
        if (!port.empty() && std::all_of(port.begin(), port.end(), [](unsigned char c) {
                return std::isdigit(c);
            })) {
            u.port = std::string(port);
            authority = authority.substr(0, colon);
        }
    }
    if (authority.empty()) return u;
    u.host = to_lower(authority);

    if (authority_end != std::string_view::npos) {
        std::string_view rest = s.substr(authority_end);
        const size_t frag = rest.find('#');
        if (frag != std::string_view::npos) rest = rest.substr(0, frag);
        const size_t qm = rest.find('?');
        if (qm != std::string_view::npos) {
            u.path = std::string(rest.substr(0, qm));
            u.query = std::string(rest.substr(qm + 1));
        } else {
            u.path = std::string(rest);
        }
    }
    u.valid = true;
    return u;
}

std::string Url::normalized() const {
    std::string out = scheme + "://" + host;
    if (!port.empty()) out += ":" + port;
    out += path;
    if (!query.empty()) out += "?" + query;
    return out;
}

static int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            const int hi = hex_val(s[i + 1]);
            const int lo = hex_val(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::string percent_decode_rounds(std::string_view s, int max_rounds) {
    std::string cur(s);
    for (int round = 0; round < max_rounds; ++round) {
        if (cur.find('%') == std::string::npos) break;
        std::string next = percent_decode(cur);
        if (next == cur) break;
        cur = std::move(next);
    }
    return cur;
}

std::vector<std::pair<std::string, std::string>> parse_query(std::string_view query) {
    std::vector<std::pair<std::string, std::string>> out;
    size_t start = 0;
    while (start <= query.size()) {
        size_t end = query.find('&', start);
        if (end == std::string_view::npos) end = query.size();
        std::string_view item = query.substr(start, end - start);
        if (!item.empty()) {
            const size_t eq = item.find('=');
            if (eq == std::string_view::npos) {
                out.emplace_back(std::string(item), std::string());
            } else {
                out.emplace_back(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
            }
        }
        if (end == query.size()) break;
        start = end + 1;
    }
    return out;
}

PublicSuffixList PublicSuffixList::from_file(const std::string& path) {
    return from_text(read_text_file(path));
}

PublicSuffixList PublicSuffixList::from_text(std::string_view text) {
    PublicSuffixList psl;
    for (const auto& raw_line : split(text, '\n')) {
        std::string line = trim(raw_line);
        if (line.empty() || starts_with(line, "//")) continue;
        bool exception = false;
        if (line[0] == '!') {
            exception = true;
            line.erase(0, 1);
        }
        auto labels = split(to_lower(line), '.');
        std::reverse(labels.begin(), labels.end());
        (exception ? psl.exceptions_ : psl.rules_).push_back(std::move(labels));
    }
    return psl;
}

// Labels are matched right to left; '*' matches any single label.
static bool rule_matches(const std::vector<std::string>& rule,
                         const std::vector<std::string>& host_labels) {
    if (rule.size() > host_labels.size()) return false;
    for (size_t i = 0; i < rule.size(); ++i) {
        if (rule[i] != "*" && rule[i] != host_labels[i]) return false;
    }
    return true;
}

std::string PublicSuffixList::public_suffix(std::string_view host) const {
    if (host.empty()) return std::string();
    auto labels = split(to_lower(host), '.');
    std::reverse(labels.begin(), labels.end());

    size_t best = 0; // matched label count; 0 means no listed rule applies
    for (const auto& rule : rules_) {
        if (rule_matches(rule, labels)) best = std::max(best, rule.size());
    }
    // An exception rule strips its leftmost label from the matched suffix.
    for (const auto& rule : exceptions_) {
        if (rule_matches(rule, labels)) best = std::min(best, rule.size() - 1);
    }
    if (best == 0) best = 1; // implicit "*" default rule
    best = std::min(best, labels.size());

    std::string out;
    for (size_t i = best; i-- > 0;) {
        out += labels[i];
        if (i != 0) out += '.';
    }
    return out;
}

std::string PublicSuffixList::registrable_domain(std::string_view host) const {
    if (host.empty()) return std::string();
    const std::string lower_host = to_lower(host);
    const std::string suffix = public_suffix(lower_host);
    if (lower_host == suffix) return lower_host;
    // One label beyond the suffix.
    const size_t cut = lower_host.size() - suffix.size();
    const size_t prev_dot = lower_host.rfind('.', cut >= 2 ? cut - 2 : 0);
    if (prev_dot == std::string::npos) return lower_host;
    return lower_host.substr(prev_dot + 1);
}

bool is_third_party(const PublicSuffixList& psl, std::string_view request_host,
                    std::string_view page_host) {
    return psl.registrable_domain(request_host) != psl.registrable_domain(page_host);
}

} // namespace cdt
