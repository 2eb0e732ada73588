#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdt/detect.hpp"
#include "cdt/error.hpp"
#include "cdt/filterlist.hpp"
#include "cdt/persona.hpp"
#include "cdt/report.hpp"

namespace {

using nlohmann::json;

// Option resolution order: explicit flag, config file key, environment,
// built-in default. The config file is one JSON object per experiment.
struct Settings {
    std::string setup;
    std::optional<uint64_t> seed;
    std::string store;
    std::string fixtures_dir = "fixtures";
    std::string grid = "default";
    std::optional<double> strength;
    cdt::report::FixturePaths fixture_paths; // individual overrides
};

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

void apply_config_file(Settings& s, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) cdt::fail(cdt::errc::io_failure, "cannot open config " + path);
    std::ostringstream os;
    os << in.rdbuf();
    json j = json::parse(os.str(), nullptr, false);
    if (j.is_discarded())
        cdt::fail(cdt::errc::config_invalid, "config " + path + " is not valid JSON");

    if (j.contains("setup")) s.setup = j["setup"].get<std::string>();
    if (j.contains("seed")) s.seed = j["seed"].get<uint64_t>();
    if (j.contains("store")) s.store = j["store"].get<std::string>();
    if (j.contains("fixtures_dir")) s.fixtures_dir = j["fixtures_dir"].get<std::string>();
    if (j.contains("grid")) s.grid = j["grid"].get<std::string>();
    if (j.contains("cdt_strength")) s.strength = j["cdt_strength"].get<double>();
    if (j.contains("fixtures")) {
        const json& f = j["fixtures"];
        auto pick = [&](const char* key, std::string& slot) {
            if (f.contains(key)) slot = f[key].get<std::string>();
        };
        pick("taxonomy", s.fixture_paths.taxonomy);
        pick("persona_catalog", s.fixture_paths.persona_catalog);
        pick("search_results", s.fixture_paths.search_results);
        pick("filter_list", s.fixture_paths.filter_list);
        pick("categories", s.fixture_paths.categories);
        pick("public_suffix", s.fixture_paths.public_suffix);
        pick("sim_config", s.fixture_paths.sim_config);
        pick("control_pages", s.fixture_paths.control_pages);
        pick("trackers", s.fixture_paths.trackers);
    }
}

cdt::report::FixturePaths resolve_fixtures(const Settings& s) {
    namespace fs = std::filesystem;
    cdt::report::FixturePaths fx = s.fixture_paths;
    fs::path dir = s.fixtures_dir;
    auto fill = [&](std::string& slot, const char* name) {
        if (slot.empty()) slot = (dir / name).string();
    };
    fill(fx.taxonomy, "taxonomy.txt");
    fill(fx.persona_catalog, "persona_catalog.json");
    fill(fx.search_results, "search_results.jsonl");
    fill(fx.filter_list, "easylist_snapshot.txt");
    fill(fx.categories, "categories.tsv");
    fill(fx.public_suffix, "public_suffix.dat");
    fill(fx.sim_config, "sim_default.json");
    fill(fx.control_pages, "control_pages.json");
    fill(fx.trackers, "trackers.json");
    return fx;
}

std::string resolve_store(const Settings& s) {
    if (!s.store.empty()) return s.store;
    return env_or("CDT_LAB_STORE", "store");
}

int cmd_persona_build(const Settings& s, const std::vector<int>& ids) {
    auto fx = resolve_fixtures(s);
    auto catalog = cdt::persona::load_catalog(fx.persona_catalog);

    std::vector<int> wanted = ids;
    if (wanted.empty()) {
        for (const auto& e : catalog) wanted.push_back(e.id);
    }
    auto personas = cdt::report::build_personas(fx, wanted);

    cdt::report::ExperimentStore store{resolve_store(s)};
    for (const auto& p : personas) {
        char name[64];
        std::snprintf(name, sizeof(name), "personas/persona-%02d.json", p.id);
        store.write_text(name, cdt::persona::to_json(p));
        std::printf("persona %2d  %-28s %2zu keywords  %zu pages\n", p.id,
                    p.category_label.c_str(), p.keywords.size(), p.persona_pages.size());
    }
    std::printf("wrote %zu personas under %s/personas\n", personas.size(),
                store.root().string().c_str());
    return 0;
}

int cmd_filter_check(const Settings& s, const std::string& list_path,
                     const std::string& url, const std::string& page) {
    auto fx = resolve_fixtures(s);
    cdt::PublicSuffixList psl;
    const cdt::PublicSuffixList* psl_ptr = nullptr;
    if (std::filesystem::exists(fx.public_suffix)) {
        psl = cdt::PublicSuffixList::from_file(fx.public_suffix);
        psl_ptr = &psl;
    }
    auto set = cdt::filters::FilterSet::from_file(list_path, psl_ptr);

    cdt::filters::RequestContext ctx;
    ctx.url = url;
    ctx.page_domain = page;
    auto verdict = set.match(ctx);
    if (verdict.blocked) {
        std::printf("BLOCKED by %s (line %d)\n", verdict.matched->source.c_str(),
                    verdict.matched->line_no);
    } else if (verdict.exception) {
        std::printf("ALLOWED by exception %s (line %d)\n",
                    verdict.exception->source.c_str(), verdict.exception->line_no);
    } else {
        std::printf("no match\n");
    }
    return verdict.blocked ? 2 : 0;
}

int cmd_run(const Settings& s) {
    if (!s.seed) cdt::fail(cdt::errc::config_invalid, "--seed is required for run");
    cdt::report::PipelineOptions opt;
    opt.setup_code = s.setup;
    opt.seed = *s.seed;
    opt.store_root = resolve_store(s);
    opt.fixtures = resolve_fixtures(s);
    opt.grid = s.grid;
    opt.cdt_strength = s.strength;

    auto result = cdt::report::run_pipeline(opt);
    std::fputs(result.report.c_str(), stdout);
    std::printf("\nreport: %s\n",
                (std::filesystem::path(opt.store_root) / result.report_path).string().c_str());
    return 0;
}

int cmd_analyze(const Settings& s, const std::string& dataset_path) {
    auto ds = cdt::features::read_csv(dataset_path);
    auto grid = s.grid == "fast" ? cdt::detect::fast_grid() : cdt::detect::default_grid();
    if (s.grid != "fast" && s.grid != "default")
        cdt::fail(cdt::errc::config_invalid, "unknown grid: " + s.grid);
    auto eval = cdt::detect::nested_cv(ds, grid, 10, 10, s.seed.value_or(1));
    std::fputs(cdt::detect::report_text(eval, ds).c_str(), stdout);
    return 0;
}

int cmd_report_cdf(const Settings& s, const std::string& setup_filter,
                   const std::string& out_path) {
    auto fx = resolve_fixtures(s);
    cdt::report::ExperimentStore store{resolve_store(s)};
    auto db = cdt::category::CategoryDb::from_file(fx.categories);

    std::vector<cdt::sched::RunRecord> runs;
    for (const auto& id : store.list_runs()) {
        if (!setup_filter.empty() && id.rfind(setup_filter + "-", 0) != 0) continue;
        runs.push_back(store.load_run(id));
    }
    if (runs.empty()) {
        std::fprintf(stderr, "no stored runs%s\n",
                     setup_filter.empty() ? "" : (" for setup " + setup_filter).c_str());
    }
    auto rep = cdt::report::ads_cdf(runs, db);
    std::string csv = cdt::report::ads_cdf_csv(rep);
    if (out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) cdt::fail(cdt::errc::io_failure, "cannot write " + out_path);
        out << csv;
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_report_trackers(const Settings& s) {
    auto fx = resolve_fixtures(s);
    auto list = cdt::report::TrackerList::from_file(fx.trackers);
    auto sim = cdt::sim::SimConfig::from_file(fx.sim_config);

    // Embedding is keyed per run; the coverage view uses a fixed key so the
    // table is stable for a given seed.
    cdt::sim::AdEcosystem eco(sim, s.seed.value_or(1), "coverage");

    auto catalog = cdt::persona::load_catalog(fx.persona_catalog);
    std::vector<int> ids;
    for (const auto& e : catalog) ids.push_back(e.id);
    auto personas = cdt::report::build_personas(fx, ids);

    std::vector<std::string> pages;
    std::set<std::string> seen;
    for (const auto& p : personas) {
        for (const auto& page : p.persona_pages) {
            if (seen.insert(page).second) pages.push_back(page);
        }
    }
    auto rep = cdt::report::tracker_coverage(list, eco, pages);
    std::fputs(cdt::report::tracker_coverage_csv(rep).c_str(), stdout);
    return 0;
}

int cmd_report_auc(const Settings& s) {
    cdt::report::ExperimentStore store{resolve_store(s)};
    auto dir = store.path_of("reports");
    if (!std::filesystem::exists(dir)) {
        std::fprintf(stderr, "no reports stored yet\n");
        return 1;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::printf("%-10s %-6s %-9s %-25s %-9s %-9s\n", "setup", "seed", "persona",
                "selected", "mean_auc", "pooled");
    for (const auto& f : files) {
        json j = json::parse(store.read_text("reports/" + f.filename().string()), nullptr,
                             false);
        if (j.is_discarded()) continue;
        for (const auto& row : j["rows"]) {
            std::string persona = row["persona"].get<int>() == 0
                                      ? "combined"
                                      : std::to_string(row["persona"].get<int>());
            std::printf("%-10s %-6llu %-9s %-25s %-9.4f %-9.4f\n",
                        j["setup"].get<std::string>().c_str(),
                        static_cast<unsigned long long>(j["seed"].get<uint64_t>()),
                        persona.c_str(), row["selected"].get<std::string>().c_str(),
                        row["mean_auc"].get<double>(), row["pooled_auc"].get<double>());
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-device tracking measurement lab"};
    app.require_subcommand(1);

    Settings s;
    std::string config_path;
    app.add_option("--config", config_path, "experiment config file (JSON)");
    app.add_option("--store", s.store, "experiment store root (env CDT_LAB_STORE)");
    app.add_option("--fixtures", s.fixtures_dir, "fixture directory");

    auto* persona_cmd = app.add_subcommand("persona", "persona construction");
    auto* persona_build = persona_cmd->add_subcommand("build", "build personas from the catalog");
    std::vector<int> persona_ids;
    persona_build->add_option("--ids", persona_ids, "catalog ids (default: all)");

    auto* filter_cmd = app.add_subcommand("filter", "filter list utilities");
    auto* filter_check = filter_cmd->add_subcommand("check", "match one URL against a list");
    std::string list_path, check_url, check_page;
    filter_check->add_option("list", list_path, "filter list file")->required();
    filter_check->add_option("url", check_url, "request URL")->required();
    filter_check->add_option("--page", check_page, "page domain for party checks");

    auto* run_cmd = app.add_subcommand("run", "execute a full experiment");
    uint64_t seed_flag = 0;
    run_cmd->add_option("--setup", s.setup, "setup code (1a..3b, pre1, pre2)")->required();
    run_cmd->add_option("--seed", seed_flag, "experiment seed")->required();
    run_cmd->add_option("--grid", s.grid, "model grid: default or fast");
    double strength_flag = -1.0;
    run_cmd->add_option("--strength", strength_flag, "override cdt_strength");

    auto* analyze_cmd = app.add_subcommand("analyze", "model selection on a dataset CSV");
    std::string dataset_path;
    analyze_cmd->add_option("dataset", dataset_path, "feature CSV")->required();
    analyze_cmd->add_option("--grid", s.grid, "model grid: default or fast");
    uint64_t analyze_seed = 1;
    analyze_cmd->add_option("--seed", analyze_seed, "fold seed");

    auto* report_cmd = app.add_subcommand("report", "reports over the store");
    auto* report_cdf = report_cmd->add_subcommand("cdf", "ads/keywords per session CDF");
    std::string cdf_setup, cdf_out;
    report_cdf->add_option("--setup", cdf_setup, "only runs of this setup");
    report_cdf->add_option("--out", cdf_out, "output CSV path (default stdout)");
    auto* report_trackers = report_cmd->add_subcommand("trackers", "tracker coverage table");
    uint64_t trackers_seed = 1;
    report_trackers->add_option("--seed", trackers_seed, "embedding seed");
    auto* report_auc = report_cmd->add_subcommand("auc", "AUC summary of stored reports");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) apply_config_file(s, config_path);
        if (run_cmd->parsed()) {
            // Flags beat config file values.
            s.seed = seed_flag;
            if (strength_flag >= 0.0) s.strength = strength_flag;
        }

        if (persona_build->parsed()) return cmd_persona_build(s, persona_ids);
        if (filter_check->parsed()) return cmd_filter_check(s, list_path, check_url, check_page);
        if (run_cmd->parsed()) return cmd_run(s);
        if (analyze_cmd->parsed()) {
            s.seed = analyze_seed;
            return cmd_analyze(s, dataset_path);
        }
        if (report_cdf->parsed()) return cmd_report_cdf(s, cdf_setup, cdf_out);
        if (report_trackers->parsed()) {
            s.seed = trackers_seed;
            return cmd_report_trackers(s);
        }
        if (report_auc->parsed()) return cmd_report_auc(s);

        std::fprintf(stderr, "no command given\n");
        return 1;
    } catch (const cdt::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
