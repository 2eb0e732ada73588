#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace cdt::category {

inline constexpr const char* kUncategorized = "Uncategorized";

// Offline category database: one registrable domain per line, tab, then one
// to four semicolon-separated labels. Lookups are exact-match only.
class CategoryDb {
public:
    static CategoryDb from_file(const std::string& path);
    static CategoryDb from_text(std::string_view text);

    const std::vector<std::string>* lookup(const std::string& domain) const;
    size_t size() const { return entries_.size(); }

    // Share of the given domains with a database entry (1.0 for no input),
    // plus the distinct labels actually assigned.
    struct Coverage {
        double fraction = 1.0;
        size_t total = 0;
        size_t categorized = 0;
        std::set<std::string> universe;
    };
    Coverage coverage(const std::vector<std::string>& domains) const;

private:
    std::map<std::string, std::vector<std::string>> entries_;
};

// Lookup front end that records misses. A miss categorizes as the
// "Uncategorized" sentinel and lands once (per categorizer lifetime) in the
// manual-review queue.
class Categorizer {
public:
    explicit Categorizer(const CategoryDb* db) : db_(db) {}

    std::vector<std::string> categorize(const std::string& domain);
    std::string primary(const std::string& domain); // first label

    const std::vector<std::string>& review_queue() const { return review_queue_; }
    void write_review_queue(const std::string& path) const;

private:
    const CategoryDb* db_;
    std::vector<std::string> review_queue_; // first-seen order
    std::set<std::string> queued_;
};

} // namespace cdt::category
