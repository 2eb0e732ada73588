#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdt/url.hpp"

namespace cdt::filters {

// Request-blocking subset of the EasyList syntax: address patterns with
// | / || anchors, * wildcards, ^ separators, @@ exceptions, and the
// domain= / third-party option pair. Everything else is counted and skipped.

enum class RuleAction { block, allow };

enum class PartyScope { any, third_party, first_party };

enum class PieceKind { literal, wildcard, separator };

struct Piece {
    PieceKind kind;
    std::string text; // literal pieces only
};

struct Rule {
    RuleAction action = RuleAction::block;
    bool domain_anchor = false; // leading ||
    bool start_anchor = false;  // leading |
    bool end_anchor = false;    // trailing |
    std::vector<Piece> pieces;
    PartyScope party = PartyScope::any;
    std::vector<std::string> include_domains;
    std::vector<std::string> exclude_domains;
    std::string source; // the original list line
    int line_no = 0;
};

enum class SkipReason {
    empty,
    comment,
    section_header,
    element_hiding,
    unsupported_option,
    malformed,
};

const char* skip_reason_name(SkipReason reason);

struct ParsedLine {
    std::optional<Rule> rule;          // engaged for usable rules
    SkipReason reason = SkipReason::empty; // valid when !rule
};

ParsedLine parse_line(std::string_view line, int line_no = 0);

struct ParseReport {
    size_t total_lines = 0;
    size_t blocking = 0;
    size_t exceptions = 0;
    std::map<std::string, size_t> skipped; // reason name -> count
};

struct RequestContext {
    std::string url;         // absolute request URL
    std::string page_domain; // host or registrable domain of the page; "" = unknown
    // Party relation override; when unset it is derived from the hosts.
    std::optional<bool> third_party;
};

struct MatchResult {
    bool blocked = false;
    const Rule* matched = nullptr;   // first matching blocking rule
    const Rule* exception = nullptr; // exception that overrode it, if any
};

class FilterSet {
public:
    FilterSet() = default;

    // psl may be null; party checks then rely on RequestContext::third_party.
    static FilterSet from_text(std::string_view text, const PublicSuffixList* psl = nullptr);
    static FilterSet from_file(const std::string& path, const PublicSuffixList* psl = nullptr);

    const ParseReport& report() const { return report_; }
    size_t rule_count() const { return rules_.size(); }

    // Indexed evaluation; the observable result is identical to match_linear.
    MatchResult match(const RequestContext& ctx) const;
    bool matches(const RequestContext& ctx) const { return match(ctx).blocked; }

    // Reference path: scans every rule, bypassing the token index.
    MatchResult match_linear(const RequestContext& ctx) const;

    // Verdict per candidate domain, probed as http://<domain>/.
    std::map<std::string, bool> classify_domains(const std::vector<std::string>& domains,
                                                 const std::string& page_domain) const;

private:
    struct IndexBucket {
        std::string token;
        std::vector<size_t> rule_ids;
    };

    void add_line(std::string_view line, int line_no);
    void build_index();
    MatchResult evaluate(const RequestContext& ctx, const std::vector<size_t>& block_ids,
                         const std::vector<size_t>& allow_ids) const;

    std::vector<Rule> rules_;
    std::vector<size_t> block_ids_;
    std::vector<size_t> allow_ids_;
    std::vector<IndexBucket> index_;          // token buckets (blocking and allow mixed)
    std::vector<size_t> unindexed_;           // rules with no usable token
    ParseReport report_;
    const PublicSuffixList* psl_ = nullptr;
};

// True when a single rule's pattern (anchors + pieces) matches the URL text.
// Exposed for fixture-driven conformance tests.
bool pattern_matches(const Rule& rule, std::string_view normalized_url);

} // namespace cdt::filters
