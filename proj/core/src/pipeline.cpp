#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cdt/error.hpp"
#include "cdt/report.hpp"

namespace cdt::report {
namespace {

using nlohmann::json;

// Failures escape with the pipeline phase up front, so a batch log points
// straight at the broken input: "persona: empty_keyword_set: ...".
template <typename Fn>
auto stage(const char* tag, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const error& e) {
        std::string what = e.what();
        std::string prefix = std::string(errc_name(e.code())) + ": ";
        if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
        throw error(e.code(), std::string(tag) + ": " + what);
    }
}

std::string two_digits(int n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d", n);
    return buf;
}

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_failure, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<detect::ModelSpec> grid_by_name(const std::string& name) {
    if (name == "default") return detect::default_grid();
    if (name == "fast") return detect::fast_grid();
    fail(errc::config_invalid, "unknown grid: " + name + " (expected default or fast)");
}

struct LoadedFixtures {
    PublicSuffixList psl;
    filters::FilterSet filters; // holds a pointer to psl; keep both together
    category::CategoryDb categories;
    sim::SimConfig sim;
    ControlPages control;
};

void load_fixtures(const PipelineOptions& opt, bool boosted, LoadedFixtures& fx) {
    stage("fixtures", [&] {
        fx.psl = PublicSuffixList::from_file(opt.fixtures.public_suffix);
        fx.filters = filters::FilterSet::from_file(opt.fixtures.filter_list, &fx.psl);
        fx.categories = category::CategoryDb::from_file(opt.fixtures.categories);
        fx.sim = sim::SimConfig::from_file(opt.fixtures.sim_config);
        fx.control = load_control_pages(opt.fixtures.control_pages);
        return 0;
    });

    if (opt.cdt_strength) fx.sim.cdt_strength = *opt.cdt_strength;
    if (boosted) {
        // Boosted variant: CDT organizations reach every page they are asked
        // to serve on.
        for (auto& tracker : fx.sim.trackers) {
            if (tracker.is_cdt) tracker.coverage = 1.0;
        }
    }
    stage("fixtures", [&] {
        fx.sim.validate();
        return 0;
    });
}

std::string auc_table(const PipelineResult& result) {
    std::ostringstream os;
    char buf[256];
    os << "persona  samples  features  selected                  mean_auc  pooled_auc\n";
    double sum = 0.0;
    for (const auto& pr : result.personas) {
        std::string who = pr.persona_ordinal == 0 ? "combined" : std::to_string(pr.persona_ordinal);
        std::snprintf(buf, sizeof(buf), "%-8s %-8zu %-9zu %-25s %-9.4f %-9.4f\n",
                      who.c_str(), pr.dataset.size(), pr.dataset.width(),
                      pr.eval.selected.name.c_str(), pr.eval.mean_auc, pr.eval.pooled.auc);
        os << buf;
        sum += pr.eval.mean_auc;
    }
    if (result.personas.size() > 1) {
        std::snprintf(buf, sizeof(buf), "mean over datasets: %.4f\n",
                      sum / double(result.personas.size()));
        os << buf;
    }
    return os.str();
}

std::string permutation_table(const std::vector<CategoryPermutationRow>& rows) {
    std::ostringstream os;
    char buf[256];
    os << "device_a    device_b    category                  stat      p         decision\n";
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-11s %-11s %-25s %-9.4f %-9.4f %s\n",
                      row.device_a.c_str(), row.device_b.c_str(), row.category.c_str(),
                      row.test.statistic, row.test.p_value,
                      row.test.reject ? "reject" : "accept");
        os << buf;
    }
    return os.str();
}

std::string report_json(const PipelineResult& result) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["setup"] = result.setup_code;
    j["seed"] = result.seed;
    json rows = json::array();
    for (const auto& pr : result.personas) {
        json r;
        r["persona"] = pr.persona_ordinal;
        r["samples"] = pr.dataset.size();
        r["features"] = pr.dataset.width();
        r["selected"] = pr.eval.selected.name;
        r["mean_auc"] = pr.eval.mean_auc;
        r["pooled_auc"] = pr.eval.pooled.auc;
        rows.push_back(r);
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

} // namespace

std::string normalize_setup_code(std::string code) {
    const std::string suffix = "-sim";
    if (code.size() > suffix.size() &&
        code.compare(code.size() - suffix.size(), suffix.size(), suffix) == 0) {
        code.erase(code.size() - suffix.size());
    }
    return code;
}

ControlPages load_control_pages(const std::string& path) {
    json j = json::parse(slurp_file(path), nullptr, false);
    if (j.is_discarded()) fail(errc::config_invalid, "control page file is not valid JSON");
    ControlPages cp;
    for (const json& p : j.at("standard")) cp.standard.push_back(p.get<std::string>());
    for (const json& p : j.at("boosted")) cp.boosted.push_back(p.get<std::string>());
    if (cp.standard.empty() || cp.boosted.empty())
        fail(errc::config_invalid, "control page sets must not be empty");
    return cp;
}

std::vector<persona::Persona> build_personas(const FixturePaths& fx,
                                             const std::vector<int>& ordinals) {
    auto catalog = persona::load_catalog(fx.persona_catalog);
    auto taxonomy = persona::load_taxonomy(fx.taxonomy);
    auto source = persona::FixtureSearchSource::from_file(fx.search_results);
    auto psl = PublicSuffixList::from_file(fx.public_suffix);

    std::vector<persona::Persona> out;
    for (int ordinal : ordinals) {
        const persona::CatalogEntry* entry = nullptr;
        for (const auto& e : catalog) {
            if (e.id == ordinal) {
                entry = &e;
                break;
            }
        }
        if (!entry)
            fail(errc::config_invalid,
                 "persona " + std::to_string(ordinal) + " is not in the catalog");

        std::vector<persona::InterestTopic> topics;
        for (const auto& t : entry->topics)
            topics.push_back({t, persona::TopicSource::persona_catalog});
        // Catalog entries are pre-grouped: threshold 0 folds the whole entry
        // into a single cluster.
        auto clusters = persona::cluster_interests(topics, 0.0);
        if (clusters.size() != 1)
            fail(errc::persona_formation_failure,
                 "catalog entry " + std::to_string(ordinal) + " did not form one cluster");

        auto keywords = persona::expand_keywords(clusters[0], taxonomy);
        auto queries = persona::build_queries(keywords);
        auto who = persona::generate_persona(entry->id, entry->category_label, keywords,
                                             queries, source, psl);
        if (!who)
            fail(errc::persona_formation_failure,
                 "not enough sponsored domains for persona " + std::to_string(ordinal));
        out.push_back(std::move(*who));
    }
    return out;
}

PipelineResult run_pipeline(const PipelineOptions& opt) {
    PipelineResult result;
    result.setup_code = normalize_setup_code(opt.setup_code);
    result.seed = opt.seed;

    sched::SetupSpec spec =
        stage("config", [&] { return sched::preset(result.setup_code); });
    auto grid = stage("config", [&] { return grid_by_name(opt.grid); });
    ExperimentStore store =
        stage("config", [&] { return ExperimentStore(opt.store_root); });

    std::vector<persona::Persona> personas = stage(
        "persona", [&] { return build_personas(opt.fixtures, spec.persona_ordinals); });

    LoadedFixtures fx;
    load_fixtures(opt, spec.boosted, fx);
    const std::vector<std::string>& control_pages =
        spec.boosted ? fx.control.boosted : fx.control.standard;

    stage("persona", [&] {
        persona::ControlPageSet control{control_pages, true};
        persona::validate_experiment(personas, control);
        return 0;
    });

    std::string seed_tag = std::to_string(opt.seed);

    // Crawl every (persona, run ordinal) cell, reusing stored records.
    std::map<int, std::vector<sched::RunRecord>> runs_by_persona;
    stage("run", [&] {
        for (const auto& who : personas) {
            sched::RunConfig cfg = spec.base;
            cfg.setup_code = result.setup_code;
            cfg.persona_id = "persona-" + two_digits(who.id);
            cfg.validate();

            for (int ordinal = 1; ordinal <= cfg.runs; ++ordinal) {
                std::string run_id = result.setup_code + "-p" + two_digits(who.id) + "-r" +
                                     std::to_string(ordinal) + "-s" + seed_tag;
                if (store.has_run(run_id)) {
                    runs_by_persona[who.id].push_back(store.load_run(run_id));
                    result.run_ids.push_back(run_id);
                    continue;
                }
                sim::AdEcosystem eco(fx.sim, opt.seed, run_id);
                sched::RunEnv env;
                env.ecosystem = &eco;
                env.filters = &fx.filters;
                env.psl = &fx.psl;
                env.persona = &who;
                env.control_pages = control_pages;
                auto rec = sched::execute_run(cfg, ordinal, sched::make_devices(spec), env,
                                              opt.seed, run_id);
                store.save_run(rec);
                runs_by_persona[who.id].push_back(std::move(rec));
                result.run_ids.push_back(run_id);
            }
        }
        return 0;
    });

    // Preliminary setups stop at the one-dimensional screen: with every
    // desktop on the mobile's address there is no class contrast to learn.
    if (spec.permutation_only) {
        stage("detect", [&] {
            const auto& runs = runs_by_persona.begin()->second;
            std::vector<std::string> desktops;
            for (const auto& d : runs.front().devices) {
                if (d.kind == sched::DeviceKind::desktop) desktops.push_back(d.device_id);
            }
            const std::string& mobile = runs.front().truth.mobile_device;
            std::vector<std::pair<std::string, std::string>> pairs;
            for (const auto& desktop : desktops) pairs.emplace_back(desktop, mobile);
            for (size_t i = 0; i < desktops.size(); ++i) {
                for (size_t j = i + 1; j < desktops.size(); ++j)
                    pairs.emplace_back(desktops[i], desktops[j]);
            }
            for (const auto& [a, b] : pairs) {
                auto rows = category_permutation(runs, a, b, fx.categories,
                                                 opt.permutation_draws, 0.05, opt.seed);
                result.permutation_rows.insert(result.permutation_rows.end(), rows.begin(),
                                               rows.end());
            }
            return 0;
        });

        std::ostringstream os;
        os << "experiment: setup " << result.setup_code << ", seed " << opt.seed << "\n";
        os << "runs: " << result.run_ids.size() << "\n\n";
        os << permutation_table(result.permutation_rows);
        result.report = os.str();
        result.report_path = "reports/" + result.setup_code + "-s" + seed_tag + ".txt";
        stage("report", [&] {
            store.write_text(result.report_path, result.report);
            return 0;
        });
        return result;
    }

    // Feature assembly, one dataset per persona; combined setups union them.
    std::vector<features::Dataset> parts;
    stage("features", [&] {
        for (const auto& who : personas) {
            auto ds = features::assemble(runs_by_persona[who.id], who, fx.categories,
                                         result.setup_code, spec.include_persona_vector,
                                         opt.seed);
            std::string base = "datasets/" + result.setup_code + "-p" + two_digits(who.id) +
                               "-s" + seed_tag;
            features::write_csv(ds, store.path_of(base + ".csv").string());
            store.write_text(base + ".manifest.json", features::manifest_json(ds));
            parts.push_back(std::move(ds));
        }
        return 0;
    });

    stage("detect", [&] {
        if (spec.combined) {
            features::Dataset ds = features::combine(parts);
            std::string base =
                "datasets/" + result.setup_code + "-combined-s" + seed_tag;
            features::write_csv(ds, store.path_of(base + ".csv").string());
            store.write_text(base + ".manifest.json", features::manifest_json(ds));
            PersonaResult pr;
            pr.persona_ordinal = 0;
            pr.eval = detect::nested_cv(ds, grid, opt.outer_folds, opt.inner_folds, opt.seed);
            pr.dataset = std::move(ds);
            result.personas.push_back(std::move(pr));
        } else {
            for (size_t i = 0; i < personas.size(); ++i) {
                PersonaResult pr;
                pr.persona_ordinal = personas[i].id;
                pr.eval = detect::nested_cv(parts[i], grid, opt.outer_folds,
                                            opt.inner_folds, opt.seed);
                pr.dataset = std::move(parts[i]);
                result.personas.push_back(std::move(pr));
            }
        }
        return 0;
    });

    std::ostringstream os;
    os << "experiment: setup " << result.setup_code << ", seed " << opt.seed << ", grid "
       << opt.grid << "\n";
    os << "runs: " << result.run_ids.size() << "\n\n";
    os << auc_table(result) << "\n";
    for (const auto& pr : result.personas) {
        os << "--- "
           << (pr.persona_ordinal == 0 ? std::string("combined")
                                       : "persona " + std::to_string(pr.persona_ordinal))
           << " ---\n";
        os << detect::report_text(pr.eval, pr.dataset) << "\n";
    }
    result.report = os.str();

    result.report_path = "reports/" + result.setup_code + "-s" + seed_tag + ".txt";
    stage("report", [&] {
        store.write_text(result.report_path, result.report);
        store.write_text("reports/" + result.setup_code + "-s" + seed_tag + ".json",
                         report_json(result));
        return 0;
    });
    return result;
}

} // namespace cdt::report
