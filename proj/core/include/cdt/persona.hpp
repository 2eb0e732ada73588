#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdt/url.hpp"

namespace cdt::persona {

enum class TopicSource { real_user_list, persona_catalog };

struct InterestTopic {
    std::string label;
    TopicSource source = TopicSource::real_user_list;
};

struct InterestCluster {
    std::vector<InterestTopic> members; // input order
    std::string canonical_label;        // longest member label
};

// Single-link agglomeration over token-set Jaccard similarity: two topics
// land in one cluster when a chain of pairs at or above the threshold links
// them. Clusters come out ordered by their first member's input position.
std::vector<InterestCluster> cluster_interests(const std::vector<InterestTopic>& topics,
                                               double threshold);

// Taxonomy rows are full paths ("Apparel > Jewelry > Charms"). A row
// contributes its leaf term when any token of any cluster member occurs in
// the path, case-insensitively. File order is kept, duplicates dropped.
// Throws EmptyKeywordSet when nothing matches.
std::vector<std::string> expand_keywords(const InterestCluster& cluster,
                                         const std::vector<std::string>& taxonomy_paths);

std::vector<std::string> load_taxonomy(const std::string& path);

// Shopping-intent probes per keyword, keyword-major order:
// "buy k", "sell k", "k offers".
std::vector<std::string> build_queries(const std::vector<std::string>& keywords);

class SearchSource {
public:
    struct Result {
        std::string domain;
        bool sponsored = false;
    };
    virtual ~SearchSource() = default;
    virtual std::vector<Result> query(const std::string& q) const = 0;
};

// Replayable search results from a JSON-lines fixture; unknown queries
// return no results.
class FixtureSearchSource : public SearchSource {
public:
    static FixtureSearchSource from_file(const std::string& path);
    std::vector<Result> query(const std::string& q) const override;
    size_t query_count() const { return entries_.size(); }

private:
    std::map<std::string, std::vector<Result>> entries_;
};

struct Persona {
    int id = 0;
    std::string category_label;
    std::vector<std::string> keywords;
    std::vector<std::string> persona_pages; // registrable domains, first-seen order
};

// Walks the queries in order collecting sponsored result domains (deduplicated
// at the registrable-domain level) until max_pages; yields nothing when fewer
// than min_pages distinct domains accumulate.
std::optional<Persona> generate_persona(int id, const std::string& category_label,
                                        const std::vector<std::string>& keywords,
                                        const std::vector<std::string>& queries,
                                        const SearchSource& source, const PublicSuffixList& psl,
                                        size_t min_pages = 5, size_t max_pages = 10);

struct ControlPageSet {
    std::vector<std::string> pages; // domains
    bool neutrality_attested = false;
};

// Personas must not browse their own control pages; any overlap between a
// persona page set and the control set is a configuration error.
void validate_experiment(const std::vector<Persona>& personas, const ControlPageSet& control);

std::string to_json(const Persona& p);
Persona persona_from_json(const std::string& text);

// Catalog entry for a preset persona: the cluster seed topics plus the final
// category label the persona is published under.
struct CatalogEntry {
    int id = 0;
    std::string category_label;
    std::vector<std::string> topics;
};

std::vector<CatalogEntry> load_catalog(const std::string& path);

} // namespace cdt::persona
