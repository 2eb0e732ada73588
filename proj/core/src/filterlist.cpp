#include "cdt/filterlist.hpp"

#include <algorithm>
#include <cctype>

#include "cdt/text.hpp"

namespace cdt::filters {

const char* skip_reason_name(SkipReason reason) {
    switch (reason) {
    case SkipReason::empty: return "empty";
    case SkipReason::comment: return "comment";
    case SkipReason::section_header: return "section-header";
    case SkipReason::element_hiding: return "element-hiding";
    case SkipReason::unsupported_option: return "unsupported-option";
    case SkipReason::malformed: return "malformed";
    }
    return "unknown";
}

namespace {

ParsedLine skip(SkipReason reason) {
    ParsedLine out;
    out.reason = reason;
    return out;
}

bool looks_like_options(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == ',' || c == '=' || c == '~' || c == '|' || c == '-' ||
               c == '.';
    });
}

// Option block after the final '$'. Only domain= and third-party survive;
// any other option disables the whole rule.
bool apply_options(std::string_view options, Rule& rule) {
    for (const auto& raw : split(options, ',')) {
        std::string opt = trim(raw);
        if (opt.empty()) return false;
        const std::string lower = to_lower(opt);
        if (lower == "third-party") {
            rule.party = PartyScope::third_party;
        } else if (lower == "~third-party") {
            rule.party = PartyScope::first_party;
        } else if (starts_with(lower, "domain=") || starts_with(lower, "~domain=")) {
            const bool flip_all = lower[0] == '~';
            std::string_view value(opt);
            value.remove_prefix(lower.find('=') + 1);
            for (const auto& entry : split(value, '|')) {
                std::string dom = to_lower(trim(entry));
                if (dom.empty() || dom.find('*') != std::string::npos) return false;
                bool negated = flip_all;
                if (dom[0] == '~') {
                    negated = true;
                    dom.erase(0, 1);
                    if (dom.empty()) return false;
                }
                (negated ? rule.exclude_domains : rule.include_domains).push_back(dom);
            }
        } else {
            return false;
        }
    }
    return true;
}

// Hosts compare case-insensitively while paths stay case-sensitive, so the
// host-looking prefix of anchored patterns is folded at parse time. Request
// URLs get the same treatment from Url::normalized(). Un-anchored patterns
// without a scheme are left alone; they may target case-sensitive path text.
void fold_host_prefix(std::string& pattern, bool domain_anchor) {
    size_t begin = 0;
    if (!domain_anchor) {
        const size_t scheme = pattern.find("://");
        if (scheme == std::string::npos) return;
        begin = scheme + 3;
    }
    size_t end = pattern.find_first_of("/^*", begin);
    if (end == std::string::npos) end = pattern.size();
    for (size_t i = 0; i < end; ++i)
        pattern[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(pattern[i])));
}

std::vector<Piece> compile_pieces(std::string_view pattern) {
    std::vector<Piece> pieces;
    std::string literal;
    auto flush = [&] {
        if (!literal.empty()) {
            pieces.push_back({PieceKind::literal, literal});
            literal.clear();
        }
    };
    for (char c : pattern) {
        if (c == '*') {
            flush();
            if (pieces.empty() || pieces.back().kind != PieceKind::wildcard)
                pieces.push_back({PieceKind::wildcard, {}});
        } else if (c == '^') {
            flush();
            pieces.push_back({PieceKind::separator, {}});
        } else {
            literal.push_back(c);
        }
    }
    flush();
    return pieces;
}

bool is_separator_char(char c) {
    if (std::isalnum(static_cast<unsigned char>(c))) return false;
    return c != '%' && c != '-' && c != '.' && c != '_';
}

bool match_pieces(const std::vector<Piece>& pieces, size_t pi, std::string_view url, size_t ui,
                  bool end_anchor) {
    if (pi == pieces.size()) return !end_anchor || ui == url.size();
    const Piece& piece = pieces[pi];
    switch (piece.kind) {
    case PieceKind::literal:
        if (url.compare(ui, piece.text.size(), piece.text) != 0) return false;
        return match_pieces(pieces, pi + 1, url, ui + piece.text.size(), end_anchor);
    case PieceKind::separator:
        if (ui < url.size() && is_separator_char(url[ui]) &&
            match_pieces(pieces, pi + 1, url, ui + 1, end_anchor))
            return true;
        // '^' also matches the end of the address without consuming anything.
        return ui == url.size() && match_pieces(pieces, pi + 1, url, ui, end_anchor);
    case PieceKind::wildcard:
        for (size_t j = ui; j <= url.size(); ++j) {
            if (match_pieces(pieces, pi + 1, url, j, end_anchor)) return true;
        }
        return false;
    }
    return false;
}

// Positions where a ||-anchored pattern may start: the beginning of the host
// and every position following a '.' inside it.
void host_anchor_positions(std::string_view url, std::vector<size_t>& out) {
    const size_t scheme = url.find("://");
    if (scheme == std::string_view::npos) return;
    const size_t host_begin = scheme + 3;
    size_t host_end = url.find_first_of("/?#", host_begin);
    if (host_end == std::string_view::npos) host_end = url.size();
    out.push_back(host_begin);
    for (size_t i = host_begin + 1; i < host_end; ++i) {
        if (url[i - 1] == '.') out.push_back(i);
    }
}

bool domain_covers(const std::string& rule_domain, std::string_view page_domain) {
    if (page_domain == rule_domain) return true;
    return page_domain.size() > rule_domain.size() &&
           ends_with(page_domain, rule_domain) &&
           page_domain[page_domain.size() - rule_domain.size() - 1] == '.';
}

} // namespace

ParsedLine parse_line(std::string_view line, int line_no) {
    std::string text = trim(line);
    if (text.empty()) return skip(SkipReason::empty);
    if (text[0] == '!') return skip(SkipReason::comment);
    if (text.front() == '[' && text.back() == ']') return skip(SkipReason::section_header);
    if (text.find("##") != std::string::npos || text.find("#@#") != std::string::npos ||
        text.find("#?#") != std::string::npos || text.find("#$#") != std::string::npos)
        return skip(SkipReason::element_hiding);

    Rule rule;
    rule.source = text;
    rule.line_no = line_no;
    if (starts_with(text, "@@")) {
        rule.action = RuleAction::allow;
        text.erase(0, 2);
    }

    const size_t dollar = text.rfind('$');
    if (dollar != std::string::npos && looks_like_options(std::string_view(text).substr(dollar + 1))) {
        if (!apply_options(std::string_view(text).substr(dollar + 1), rule))
            return skip(SkipReason::unsupported_option);
        text.erase(dollar);
    }

    // Raw regular-expression rules are outside the supported subset.
    if (text.size() >= 2 && text.front() == '/' && text.back() == '/' && text.size() > 2)
        return skip(SkipReason::unsupported_option);

    if (starts_with(text, "||")) {
        rule.domain_anchor = true;
        text.erase(0, 2);
    } else if (starts_with(text, "|")) {
        rule.start_anchor = true;
        text.erase(0, 1);
    }
    if (!text.empty() && text.back() == '|') {
        rule.end_anchor = true;
        text.pop_back();
    }
    if (text.empty() && !rule.end_anchor && !rule.domain_anchor && !rule.start_anchor)
        return skip(SkipReason::malformed);

    fold_host_prefix(text, rule.domain_anchor);
    rule.pieces = compile_pieces(text);
    if (rule.pieces.empty()) return skip(SkipReason::malformed);

    ParsedLine out;
    out.rule = std::move(rule);
    return out;
}

bool pattern_matches(const Rule& rule, std::string_view url) {
    if (rule.domain_anchor) {
        std::vector<size_t> starts;
        host_anchor_positions(url, starts);
        for (size_t s : starts) {
            if (match_pieces(rule.pieces, 0, url, s, rule.end_anchor)) return true;
        }
        return false;
    }
    if (rule.start_anchor) return match_pieces(rule.pieces, 0, url, 0, rule.end_anchor);
    for (size_t s = 0; s <= url.size(); ++s) {
        if (match_pieces(rule.pieces, 0, url, s, rule.end_anchor)) return true;
    }
    return false;
}

FilterSet FilterSet::from_text(std::string_view text, const PublicSuffixList* psl) {
    FilterSet set;
    set.psl_ = psl;
    int line_no = 0;
    for (const auto& line : split(text, '\n')) {
        set.add_line(line, ++line_no);
    }
    set.build_index();
    return set;
}

FilterSet FilterSet::from_file(const std::string& path, const PublicSuffixList* psl) {
    return from_text(read_text_file(path), psl);
}

void FilterSet::add_line(std::string_view line, int line_no) {
    ++report_.total_lines;
    ParsedLine parsed = parse_line(line, line_no);
    if (!parsed.rule) {
        if (parsed.reason != SkipReason::empty)
            ++report_.skipped[skip_reason_name(parsed.reason)];
        return;
    }
    if (parsed.rule->action == RuleAction::block)
        ++report_.blocking;
    else
        ++report_.exceptions;
    rules_.push_back(std::move(*parsed.rule));
}

void FilterSet::build_index() {
    index_.clear();
    unindexed_.clear();
    block_ids_.clear();
    allow_ids_.clear();
    std::map<std::string, std::vector<size_t>> buckets;
    for (size_t id = 0; id < rules_.size(); ++id) {
        (rules_[id].action == RuleAction::block ? block_ids_ : allow_ids_).push_back(id);
        const Rule& rule = rules_[id];
        const Piece* token = nullptr;
        for (const auto& piece : rule.pieces) {
            if (piece.kind == PieceKind::literal && piece.text.size() >= 3) {
                token = &piece;
                break;
            }
        }
        if (token)
            buckets[token->text].push_back(id);
        else
            unindexed_.push_back(id);
    }
    index_.reserve(buckets.size());
    for (auto& [tok, ids] : buckets) index_.push_back({tok, std::move(ids)});
}

MatchResult FilterSet::evaluate(const RequestContext& ctx, const std::vector<size_t>& block_ids,
                                const std::vector<size_t>& allow_ids) const {
    const Url parsed = parse_url(ctx.url);
    const std::string url = parsed.valid ? parsed.normalized() : ctx.url;
    const std::string page_domain = to_lower(ctx.page_domain);

    auto rule_applies = [&](const Rule& rule) {
        if (rule.party != PartyScope::any) {
            std::optional<bool> third = ctx.third_party;
            if (!third && psl_ && parsed.valid && !page_domain.empty())
                third = is_third_party(*psl_, parsed.host, page_domain);
            if (!third) return false; // party relation unknown: constrained rules stay silent
            if (rule.party == PartyScope::third_party && !*third) return false;
            if (rule.party == PartyScope::first_party && *third) return false;
        }
        if (!rule.include_domains.empty()) {
            const bool covered =
                std::any_of(rule.include_domains.begin(), rule.include_domains.end(),
                            [&](const std::string& d) { return domain_covers(d, page_domain); });
            if (!covered) return false;
        }
        for (const auto& d : rule.exclude_domains) {
            if (domain_covers(d, page_domain)) return false;
        }
        return pattern_matches(rule, url);
    };

    MatchResult result;
    for (size_t id : block_ids) {
        if (rule_applies(rules_[id])) {
            result.matched = &rules_[id];
            break;
        }
    }
    if (!result.matched) return result;
    for (size_t id : allow_ids) {
        if (rule_applies(rules_[id])) {
            result.exception = &rules_[id];
            return result; // exception dominates
        }
    }
    result.blocked = true;
    return result;
}

MatchResult FilterSet::match(const RequestContext& ctx) const {
    const Url parsed = parse_url(ctx.url);
    const std::string url = parsed.valid ? parsed.normalized() : ctx.url;

    // Candidate set: buckets whose token occurs in the URL plus the rules
    // that never produced a token. Sorting by rule id afterwards keeps the
    // first-match answer identical to the linear scan.
    std::vector<size_t> candidates(unindexed_);
    for (const auto& bucket : index_) {
        if (url.find(bucket.token) != std::string::npos)
            candidates.insert(candidates.end(), bucket.rule_ids.begin(), bucket.rule_ids.end());
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<size_t> block_ids, allow_ids;
    for (size_t id : candidates) {
        (rules_[id].action == RuleAction::block ? block_ids : allow_ids).push_back(id);
    }
    return evaluate(ctx, block_ids, allow_ids);
}

MatchResult FilterSet::match_linear(const RequestContext& ctx) const {
    return evaluate(ctx, block_ids_, allow_ids_);
}

std::map<std::string, bool> FilterSet::classify_domains(const std::vector<std::string>& domains,
                                                        const std::string& page_domain) const {
    std::map<std::string, bool> verdicts;
    for (const auto& domain : domains) {
        RequestContext ctx;
        ctx.url = "http://" + to_lower(domain) + "/";
        ctx.page_domain = page_domain;
        verdicts[domain] = matches(ctx);
    }
    return verdicts;
}

} // namespace cdt::filters
