#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdt/categorizer.hpp"
#include "cdt/detect.hpp"
#include "cdt/features.hpp"
#include "cdt/scheduler.hpp"

namespace cdt::report {

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Experiment store
//
// Layout under the root:
//   runs/<run_id>/config            run parameters, devices, ground truth
//   runs/<run_id>/sessions.log      one JSON line per page visit
//   runs/<run_id>/observations.log  one JSON line per extracted ad
//   datasets/…                      feature CSVs plus manifests
//   reports/…                       analysis output, text and JSON
//
// Run directories are append-only: saving over an existing run id is an
// error. Derived artifacts (datasets, reports) are rewritten atomically via
// a temp file and rename. Cookie jar contents are not persisted; a reloaded
// record carries fresh jars, which nothing downstream reads.

class ExperimentStore {
public:
    explicit ExperimentStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    bool has_run(const std::string& run_id) const;
    void save_run(const sched::RunRecord& rec) const;
    sched::RunRecord load_run(const std::string& run_id) const;
    std::vector<std::string> list_runs() const; // sorted by id

    // Derived artifacts, path relative to the root.
    void write_text(const std::string& relative, const std::string& content) const;
    std::string read_text(const std::string& relative) const;
    std::filesystem::path path_of(const std::string& relative) const;

private:
    std::filesystem::path root_;
};

// Serialization pieces, exposed so round-trips can be tested directly.
std::string run_config_json(const sched::RunRecord& rec);
std::string visit_line(const sched::VisitLogEntry& e);
std::string observation_line(const adex::AdObservation& o);

// ---------------------------------------------------------------------------
// Distribution report: ads and keywords per session, by device role

struct CdfPoint {
    double value = 0.0;
    double fraction = 0.0; // share of sessions with metric <= value
};

struct AdsCdfReport {
    // role name -> empirical CDF over per-session totals
    std::map<std::string, std::vector<CdfPoint>> ads;
    std::map<std::string, std::vector<CdfPoint>> keywords;
    double desktop_mean_ads_per_visit = 0.0;
    double mobile_sessions_under_5 = 0.0; // fraction of mobile sessions with < 5 ads
    long desktop_test_visits = 0;
    long mobile_sessions = 0;
};

AdsCdfReport ads_cdf(const std::vector<sched::RunRecord>& runs,
                     const category::CategoryDb& db);
std::string ads_cdf_csv(const AdsCdfReport& rep);

// ---------------------------------------------------------------------------
// Tracker coverage report

struct TrackerOrg {
    std::string name;
    bool cdt = false;
    std::vector<std::string> domains; // lowercase registrable form
};

struct TrackerList {
    std::vector<TrackerOrg> organizations;

    static TrackerList from_file(const std::string& path);
    static TrackerList from_json_text(std::string_view text);
};

struct OrgCoverage {
    std::string organization;
    bool cdt = false;
    size_t pages_seen = 0;
    double fraction = 0.0; // pages_seen / pages_total
};

struct TrackerCoverageReport {
    std::vector<OrgCoverage> rows; // coverage descending, then name
    size_t pages_total = 0;
    size_t organizations_detected = 0;
    double cdt_fraction = 0.0; // CDT share of detected organizations
};

// Coverage of each organization over the given pages, using the ecosystem's
// per-page embedding. An organization owns a tracker when they share a
// serving domain.
TrackerCoverageReport tracker_coverage(const TrackerList& list,
                                       const sim::AdEcosystem& eco,
                                       const std::vector<std::string>& pages);
std::string tracker_coverage_csv(const TrackerCoverageReport& rep);

// ---------------------------------------------------------------------------
// Category-frequency permutation screen (preliminary setups)

struct CategoryPermutationRow {
    std::string device_a;
    std::string device_b;
    std::string category;
    long count_a = 0; // raw ads in this category across all sessions
    long count_b = 0;
    detect::PermutationTestResult test;
};

// Per ad category: per-session composition (fraction of that session's ads
// on the device falling in the category) on device_a vs device_b across the
// runs, fed to the permutation test. Categories come from the landing-domain
// database; unknown domains count under the sentinel label. Categories with
// fewer than five ads on either device are too sparse to say anything about
// the mix and are left out of the table.
std::vector<CategoryPermutationRow> category_permutation(
    const std::vector<sched::RunRecord>& runs, const std::string& device_a,
    const std::string& device_b, const category::CategoryDb& db, int n_perms,
    double alpha, uint64_t seed);

// ---------------------------------------------------------------------------
// Pipeline

struct FixturePaths {
    std::string taxonomy;
    std::string persona_catalog;
    std::string search_results;
    std::string filter_list;
    std::string categories;
    std::string public_suffix;
    std::string sim_config;
    std::string control_pages; // {"standard": [...], "boosted": [...]}
    std::string trackers;
};

struct PipelineOptions {
    std::string setup_code = "1a"; // accepts a trailing "-sim"
    uint64_t seed = 0;
    std::string store_root;
    FixturePaths fixtures;
    std::string grid = "default"; // "default" or "fast"
    std::optional<double> cdt_strength;
    int outer_folds = 10;
    int inner_folds = 10;
    int permutation_draws = 10000;
};

struct PersonaResult {
    int persona_ordinal = 0; // 0 for the combined dataset
    features::Dataset dataset;
    detect::EvalReport eval;
};

struct PipelineResult {
    std::string setup_code;
    uint64_t seed = 0;
    std::vector<std::string> run_ids;
    std::vector<PersonaResult> personas;
    std::vector<CategoryPermutationRow> permutation_rows; // preliminary setups
    std::string report;                                   // full text
    std::string report_path;                              // relative to store
};

// persona build -> crawls -> feature assembly -> detection -> stored report.
// Existing run directories are reused, so repeating a command analyzes the
// same records it wrote the first time. Errors carry a leading "stage:" tag
// naming the phase that failed.
PipelineResult run_pipeline(const PipelineOptions& opt);

// The persona set a setup needs, built from fixtures. Exposed for the
// persona-build command and tests.
std::vector<persona::Persona> build_personas(const FixturePaths& fx,
                                             const std::vector<int>& ordinals);

struct ControlPages {
    std::vector<std::string> standard;
    std::vector<std::string> boosted;
};
ControlPages load_control_pages(const std::string& path);

std::string normalize_setup_code(std::string code); // strips a "-sim" suffix

} // namespace cdt::report
