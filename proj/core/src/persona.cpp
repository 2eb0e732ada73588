#include "cdt/persona.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>

#include "cdt/error.hpp"
#include "cdt/text.hpp"

namespace cdt::persona {

using nlohmann::json;

namespace {

std::string normalize_label(std::string_view raw) {
    // Collapse runs of whitespace; the result must be non-empty.
    std::string out;
    bool pending_space = false;
    for (char c : trim(raw)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

struct UnionFind {
    std::vector<size_t> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    size_t find(size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(size_t a, size_t b) { parent[find(a)] = find(b); }
};

} // namespace

std::vector<InterestCluster> cluster_interests(const std::vector<InterestTopic>& topics,
                                               double threshold) {
    std::vector<InterestTopic> normalized;
    normalized.reserve(topics.size());
    for (const auto& t : topics) {
        InterestTopic copy = t;
        copy.label = normalize_label(t.label);
        if (copy.label.empty())
            fail(errc::config_invalid, "interest topic label empty after normalization");
        normalized.push_back(std::move(copy));
    }

    std::vector<std::vector<std::string>> tokens;
    tokens.reserve(normalized.size());
    for (const auto& t : normalized) tokens.push_back(tokenize(t.label));

    UnionFind uf(normalized.size());
    for (size_t i = 0; i < normalized.size(); ++i) {
        for (size_t j = i + 1; j < normalized.size(); ++j) {
            if (jaccard(tokens[i], tokens[j]) >= threshold) uf.unite(i, j);
        }
    }

    // Roots keyed by first appearance keep cluster order deterministic.
    std::vector<size_t> root_order;
    std::map<size_t, size_t> root_to_cluster;
    std::vector<InterestCluster> clusters;
    for (size_t i = 0; i < normalized.size(); ++i) {
        const size_t root = uf.find(i);
        auto it = root_to_cluster.find(root);
        if (it == root_to_cluster.end()) {
            root_to_cluster.emplace(root, clusters.size());
            clusters.emplace_back();
            it = root_to_cluster.find(root);
        }
        clusters[it->second].members.push_back(normalized[i]);
    }
    for (auto& cluster : clusters) {
        const InterestTopic* best = &cluster.members.front();
        for (const auto& m : cluster.members) {
            if (m.label.size() > best->label.size() ||
                (m.label.size() == best->label.size() && m.label < best->label))
                best = &m;
        }
        cluster.canonical_label = best->label;
    }
    return clusters;
}

std::vector<std::string> expand_keywords(const InterestCluster& cluster,
                                         const std::vector<std::string>& taxonomy_paths) {
    std::set<std::string> member_tokens;
    for (const auto& m : cluster.members) {
        for (auto& tok : tokenize(m.label)) member_tokens.insert(std::move(tok));
    }

    std::vector<std::string> keywords;
    std::set<std::string> seen;
    for (const auto& path : taxonomy_paths) {
        const std::string lower = to_lower(path);
        const bool hit = std::any_of(member_tokens.begin(), member_tokens.end(),
                                     [&](const std::string& tok) {
                                         return lower.find(tok) != std::string::npos;
                                     });
        if (!hit) continue;
        const size_t sep = path.rfind(" > ");
        std::string leaf = trim(sep == std::string::npos ? path : path.substr(sep + 3));
        if (leaf.empty()) continue;
        if (seen.insert(leaf).second) keywords.push_back(std::move(leaf));
    }
    if (keywords.empty())
        fail(errc::empty_keyword_set,
             "no taxonomy path matches cluster '" + cluster.canonical_label + "'");
    return keywords;
}

std::vector<std::string> load_taxonomy(const std::string& path) {
    std::vector<std::string> out;
    for (const auto& raw : split(read_text_file(path), '\n')) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        out.push_back(std::move(line));
    }
    return out;
}

std::vector<std::string> build_queries(const std::vector<std::string>& keywords) {
    std::vector<std::string> out;
    out.reserve(keywords.size() * 3);
    for (const auto& k : keywords) {
        out.push_back("buy " + k);
        out.push_back("sell " + k);
        out.push_back(k + " offers");
    }
    return out;
}

FixtureSearchSource FixtureSearchSource::from_file(const std::string& path) {
    FixtureSearchSource src;
    int line_no = 0;
    for (const auto& raw : split(read_text_file(path), '\n')) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty()) continue;
        json entry = json::parse(line, nullptr, false);
        if (entry.is_discarded() || !entry.contains("query") || !entry.contains("results"))
            fail(errc::config_invalid,
                 "bad search fixture record at " + path + ":" + std::to_string(line_no));
        std::vector<Result> results;
        for (const auto& r : entry["results"]) {
            results.push_back({r.at("domain").get<std::string>(),
                               r.value("sponsored", false)});
        }
        src.entries_[entry["query"].get<std::string>()] = std::move(results);
    }
    return src;
}

std::vector<SearchSource::Result> FixtureSearchSource::query(const std::string& q) const {
    auto it = entries_.find(q);
    if (it == entries_.end()) return {};
    return it->second;
}

std::optional<Persona> generate_persona(int id, const std::string& category_label,
                                        const std::vector<std::string>& keywords,
                                        const std::vector<std::string>& queries,
                                        const SearchSource& source, const PublicSuffixList& psl,
                                        size_t min_pages, size_t max_pages) {
    std::vector<std::string> pages;
    std::set<std::string> seen;
    for (const auto& q : queries) {
        for (const auto& result : source.query(q)) {
            if (!result.sponsored) continue;
            std::string domain = psl.registrable_domain(result.domain);
            if (domain.empty() || !seen.insert(domain).second) continue;
            pages.push_back(std::move(domain));
            if (pages.size() == max_pages) break;
        }
        if (pages.size() == max_pages) break;
    }
    if (pages.size() < min_pages) return std::nullopt;

    Persona p;
    p.id = id;
    p.category_label = category_label;
    p.keywords = keywords;
    p.persona_pages = std::move(pages);
    return p;
}

void validate_experiment(const std::vector<Persona>& personas, const ControlPageSet& control) {
    std::set<std::string> control_pages(control.pages.begin(), control.pages.end());
    for (const auto& p : personas) {
        for (const auto& page : p.persona_pages) {
            if (control_pages.count(page))
                fail(errc::config_invalid, "persona " + std::to_string(p.id) +
                                               " shares page '" + page + "' with the control set");
        }
    }
}

std::string to_json(const Persona& p) {
    json j;
    j["id"] = p.id;
    j["category_label"] = p.category_label;
    j["keywords"] = p.keywords;
    j["persona_pages"] = p.persona_pages;
    return j.dump(2) + "\n";
}

Persona persona_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(errc::config_invalid, "persona file is not valid JSON");
    Persona p;
    p.id = j.at("id").get<int>();
    p.category_label = j.at("category_label").get<std::string>();
    p.keywords = j.at("keywords").get<std::vector<std::string>>();
    p.persona_pages = j.at("persona_pages").get<std::vector<std::string>>();
    return p;
}

std::vector<CatalogEntry> load_catalog(const std::string& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.contains("personas"))
        fail(errc::config_invalid, "persona catalog unreadable: " + path);
    std::vector<CatalogEntry> out;
    for (const auto& e : j["personas"]) {
        CatalogEntry entry;
        entry.id = e.at("id").get<int>();
        entry.category_label = e.at("category_label").get<std::string>();
        entry.topics = e.at("topics").get<std::vector<std::string>>();
        out.push_back(std::move(entry));
    }
    std::sort(out.begin(), out.end(),
              [](const CatalogEntry& a, const CatalogEntry& b) { return a.id < b.id; });
    return out;
}

} // namespace cdt::persona
