#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdt/categorizer.hpp"
#include "cdt/persona.hpp"
#include "cdt/scheduler.hpp"

namespace cdt::features {

// Labeled dataset preparation. Every sample pairs one desktop test stage
// (before or after) with the mobile crawl of the same session; the class says
// whether the desktop shares the mobile's address.

// The vocabularies that give the vector blocks their columns. Mobile and
// desktop keyword blocks span the same category list so the two devices'
// columns line up; the landing blocks share the domain list likewise.
struct BlockVocab {
    std::vector<std::string> persona_cats; // empty when the block is excluded
    std::vector<std::string> ad_cats;
    std::vector<std::string> domains;

    bool operator==(const BlockVocab&) const = default;
};

struct Dataset {
    std::string setup_code;
    std::string persona_id; // empty for combined datasets
    bool include_persona_vector = true;
    uint64_t seed = 0;
    BlockVocab vocab;
    std::vector<std::string> feature_names; // derived from vocab, fixed order
    std::vector<std::vector<double>> rows;
    std::vector<int> labels; // 1 = shares the mobile address
    // Capture-unit id per row. The two desktop rows of one test stage are
    // measured against the same session and page draw, so cross-validation
    // keeps them in the same fold.
    std::vector<long> groups;

    size_t width() const { return feature_names.size(); }
    size_t size() const { return rows.size(); }
};

// Column layout for a vocabulary (scalar block, then vector blocks).
std::vector<std::string> feature_names_for(const BlockVocab& vocab,
                                           bool include_persona_vector);

// One dataset per persona: every run record must belong to the same persona.
Dataset assemble(const std::vector<sched::RunRecord>& runs, const persona::Persona& who,
                 const category::CategoryDb& db, const std::string& setup_code,
                 bool include_persona_vector, uint64_t seed);

// Union the feature spaces and concatenate the samples (combined setups).
Dataset combine(const std::vector<Dataset>& parts);

void write_csv(const Dataset& d, const std::string& path);
Dataset read_csv(const std::string& path);

std::string manifest_json(const Dataset& d);

} // namespace cdt::features
