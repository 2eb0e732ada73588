#include "cdt/categorizer.hpp"

#include "cdt/error.hpp"
#include "cdt/text.hpp"

namespace cdt::category {

CategoryDb CategoryDb::from_file(const std::string& path) {
    return from_text(read_text_file(path));
}

CategoryDb CategoryDb::from_text(std::string_view text) {
    CategoryDb db;
    int line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            fail(errc::config_invalid, "category db line " + std::to_string(line_no) + ": no tab");
        const std::string domain = to_lower(trim(line.substr(0, tab)));
        std::vector<std::string> labels;
        for (const auto& piece : split(line.substr(tab + 1), ';')) {
            std::string label = trim(piece);
            if (!label.empty()) labels.push_back(std::move(label));
        }
        if (domain.empty() || labels.empty() || labels.size() > 4)
            fail(errc::config_invalid,
                 "category db line " + std::to_string(line_no) + ": need 1-4 labels");
        if (!db.entries_.emplace(domain, std::move(labels)).second)
            fail(errc::config_invalid,
                 "category db line " + std::to_string(line_no) + ": duplicate domain " + domain);
    }
    return db;
}

const std::vector<std::string>* CategoryDb::lookup(const std::string& domain) const {
    auto it = entries_.find(to_lower(domain));
    return it == entries_.end() ? nullptr : &it->second;
}

CategoryDb::Coverage CategoryDb::coverage(const std::vector<std::string>& domains) const {
    Coverage cov;
    cov.total = domains.size();
    for (const auto& domain : domains) {
        if (const auto* labels = lookup(domain)) {
            ++cov.categorized;
            cov.universe.insert(labels->begin(), labels->end());
        }
    }
    cov.fraction = cov.total == 0
                       ? 1.0
                       : static_cast<double>(cov.categorized) / static_cast<double>(cov.total);
    return cov;
}

std::vector<std::string> Categorizer::categorize(const std::string& domain) {
    if (const auto* labels = db_ ? db_->lookup(domain) : nullptr) return *labels;
    if (queued_.insert(to_lower(domain)).second) review_queue_.push_back(to_lower(domain));
    return {kUncategorized};
}

std::string Categorizer::primary(const std::string& domain) { return categorize(domain).front(); }

void Categorizer::write_review_queue(const std::string& path) const {
    std::string body;
    for (const auto& domain : review_queue_) {
        body += domain;
        body += '\n';
    }
    write_text_file(path, body);
}

} // namespace cdt::category
