#include "cdt/features.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cdt/error.hpp"
#include "cdt/text.hpp"

namespace cdt::features {
namespace {

const char* kScalarHead[] = {"Crawl_Type", "Run_ID", "Session_ID"};
const char* kScalarTail[] = {"Mobile_Timeslot",
                             "Desktop_Timeslot",
                             "Desktop_Day",
                             "Mobile_Number_of_Ads",
                             "Desktop_Number_of_Ads",
                             "Mobile_Unique_Number_of_Ads",
                             "Desktop_Unique_Number_of_Ads",
                             "Mobile_Number_of_Keywords",
                             "Desktop_Number_of_Keywords",
                             "Mobile_Unique_Number_of_Keywords",
                             "Desktop_Unique_Number_of_Keywords"};
constexpr size_t kHeadN = 3;
constexpr size_t kTailN = 11;

struct Layout {
    bool with_persona = true;
    size_t persona_n = 0, cat_n = 0, dom_n = 0;
    size_t persona_off = kHeadN;
    size_t tail_off = 0;
    size_t mk_off = 0, dk_off = 0, mlp_off = 0, dlp_off = 0;
    size_t width = 0;
};

Layout layout_for(const BlockVocab& v, bool with_persona) {
    Layout l;
    l.with_persona = with_persona;
    l.persona_n = with_persona ? v.persona_cats.size() : 0;
    l.cat_n = v.ad_cats.size();
    l.dom_n = v.domains.size();
    l.tail_off = l.persona_off + l.persona_n;
    l.mk_off = l.tail_off + kTailN;
    l.dk_off = l.mk_off + l.cat_n;
    l.mlp_off = l.dk_off + l.cat_n;
    l.dlp_off = l.mlp_off + l.dom_n;
    l.width = l.dlp_off + l.dom_n;
    return l;
}

const std::vector<std::string>& labels_of(const category::CategoryDb& db,
                                          const std::string& domain) {
    static const std::vector<std::string> fallback{category::kUncategorized};
    const auto* hit = db.lookup(domain);
    return hit ? *hit : fallback;
}

std::vector<std::string> sorted_unique(std::set<std::string>&& s) {
    return std::vector<std::string>(s.begin(), s.end());
}

size_t index_of(const std::vector<std::string>& vocab, const std::string& key) {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), key);
    if (it == vocab.end() || *it != key)
        fail(errc::schema_mismatch, "value missing from vocabulary: " + key);
    return size_t(it - vocab.begin());
}

struct StageSummary {
    double n_ads = 0, n_unique_ads = 0, n_keywords = 0, n_unique_keywords = 0;
    std::map<std::string, double> cat_counts;
    std::map<std::string, double> dom_counts;
};

StageSummary summarize(const std::vector<adex::AdObservation>& obs,
                       const category::CategoryDb& db) {
    StageSummary s;
    std::set<std::string> domains, cats;
    for (const auto& o : obs) {
        s.n_ads += 1;
        domains.insert(o.landing_domain);
        s.dom_counts[o.landing_domain] += 1;
        for (const auto& label : labels_of(db, o.landing_domain)) {
            s.n_keywords += 1;
            cats.insert(label);
            s.cat_counts[label] += 1;
        }
    }
    s.n_unique_ads = double(domains.size());
    s.n_unique_keywords = double(cats.size());
    return s;
}

// The two desktop rows of one test stage are measured against the same
// session and page draw, so they form one capture unit. The unit is fully
// identified by the leading scalar columns, which lets a dataset re-read
// from disk recover the same grouping without extra file columns.
long capture_group(double run_id, double session_id, double crawl_type) {
    return long(run_id) * 1'000'000 + long(session_id) * 10 + long(crawl_type);
}

void check_range(double v, double lo, double hi, const char* what) {
    if (v < lo || v > hi) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s out of range: %g not in [%g, %g]", what, v, lo, hi);
        fail(errc::config_invalid, buf);
    }
}

} // namespace

std::vector<std::string> feature_names_for(const BlockVocab& vocab,
                                           bool include_persona_vector) {
    std::vector<std::string> names;
    for (const char* n : kScalarHead) names.push_back(n);
    if (include_persona_vector) {
        for (const auto& c : vocab.persona_cats) names.push_back("Persona_Keywords:" + c);
    }
    for (const char* n : kScalarTail) names.push_back(n);
    for (const auto& c : vocab.ad_cats) names.push_back("Mobile_Keywords:" + c);
    for (const auto& c : vocab.ad_cats) names.push_back("Desktop_Keywords:" + c);
    for (const auto& d : vocab.domains) names.push_back("Mobile_Landing_Pages:" + d);
    for (const auto& d : vocab.domains) names.push_back("Desktop_Landing_Pages:" + d);
    return names;
}

Dataset assemble(const std::vector<sched::RunRecord>& runs, const persona::Persona& who,
                 const category::CategoryDb& db, const std::string& setup_code,
                 bool include_persona_vector, uint64_t seed) {
    if (runs.empty()) fail(errc::config_invalid, "no run records to assemble");

    // Pass 1: vocabularies over the whole setup's runs.
    std::set<std::string> cats, doms, persona_cats;
    for (const auto& page : who.persona_pages) {
        for (const auto& label : labels_of(db, page)) persona_cats.insert(label);
    }
    for (const auto& rec : runs) {
        for (const auto& srec : rec.sessions) {
            for (const auto& stage : srec.stages) {
                for (const auto& [dev, data] : stage.devices) {
                    for (const auto& o : data.ads) {
                        doms.insert(o.landing_domain);
                        for (const auto& label : labels_of(db, o.landing_domain))
                            cats.insert(label);
                    }
                }
            }
        }
    }

    char persona_tag[32];
    std::snprintf(persona_tag, sizeof(persona_tag), "persona-%02d", who.id);

    Dataset ds;
    ds.setup_code = setup_code;
    ds.persona_id = persona_tag;
    ds.include_persona_vector = include_persona_vector;
    ds.seed = seed;
    ds.vocab.persona_cats = sorted_unique(std::move(persona_cats));
    ds.vocab.ad_cats = sorted_unique(std::move(cats));
    ds.vocab.domains = sorted_unique(std::move(doms));
    ds.feature_names = feature_names_for(ds.vocab, include_persona_vector);

    const Layout l = layout_for(ds.vocab, include_persona_vector);

    std::map<std::string, double> persona_counts;
    for (const auto& page : who.persona_pages) {
        for (const auto& label : labels_of(db, page)) persona_counts[label] += 1;
    }

    // Pass 2: one row per (run, session, desktop stage, desktop).
    for (const auto& rec : runs) {
        if (rec.config.persona_id != persona_tag)
            fail(errc::schema_mismatch, "run record belongs to a different persona");
        const std::string& mobile_id = rec.truth.mobile_device;
        const std::string& mobile_ip = rec.truth.device_ip.at(mobile_id);

        for (const auto& srec : rec.sessions) {
            const sched::StageData* mob_stage = nullptr;
            for (const auto& stage : srec.stages) {
                if (stage.kind == sched::StageKind::mobile) mob_stage = &stage;
            }
            if (!mob_stage) fail(errc::incomplete_stage, "session lacks a mobile stage");
            auto mob_it = mob_stage->devices.find(mobile_id);
            if (mob_it == mob_stage->devices.end())
                fail(errc::incomplete_stage, "mobile stage has no mobile crawl");

            Tick mobile_test_at = 0;
            bool found_test = false;
            for (const auto& e : rec.visit_log) {
                if (e.session_id == srec.session_id && e.device_id == mobile_id &&
                    e.stage == sched::StageKind::mobile && !e.is_train) {
                    mobile_test_at = e.at;
                    found_test = true;
                    break;
                }
            }
            if (!found_test) fail(errc::incomplete_stage, "mobile test crawl missing");

            StageSummary mob = summarize(mob_it->second.ads, db);

            for (const auto& stage : srec.stages) {
                if (stage.kind == sched::StageKind::mobile) continue;
                for (const auto& [dev, data] : stage.devices) {
                    StageSummary dsk = summarize(data.ads, db);

                    std::vector<double> row(l.width, 0.0);
                    row[0] = stage.kind == sched::StageKind::before ? 0.0 : 1.0;
                    row[1] = double(rec.run_ordinal);
                    row[2] = double(srec.session_id);
                    if (include_persona_vector) {
                        for (const auto& [cat, n] : persona_counts)
                            row[l.persona_off + index_of(ds.vocab.persona_cats, cat)] = n;
                    }
                    double* tail = row.data() + l.tail_off;
                    tail[0] = double(timeslot_of(mobile_test_at));
                    tail[1] = double(timeslot_of(stage.start));
                    tail[2] = double(day_of_week(stage.start));
                    tail[3] = mob.n_ads;
                    tail[4] = dsk.n_ads;
                    tail[5] = mob.n_unique_ads;
                    tail[6] = dsk.n_unique_ads;
                    tail[7] = mob.n_keywords;
                    tail[8] = dsk.n_keywords;
                    tail[9] = mob.n_unique_keywords;
                    tail[10] = dsk.n_unique_keywords;
                    for (const auto& [cat, n] : mob.cat_counts)
                        row[l.mk_off + index_of(ds.vocab.ad_cats, cat)] = n;
                    for (const auto& [cat, n] : dsk.cat_counts)
                        row[l.dk_off + index_of(ds.vocab.ad_cats, cat)] = n;
                    for (const auto& [dom, n] : mob.dom_counts)
                        row[l.mlp_off + index_of(ds.vocab.domains, dom)] = n;
                    for (const auto& [dom, n] : dsk.dom_counts)
                        row[l.dlp_off + index_of(ds.vocab.domains, dom)] = n;

                    check_range(row[0], 0, 1, "crawl type");
                    check_range(row[1], 1, double(rec.config.runs), "run id");
                    check_range(row[2], 1, double(rec.config.sessions), "session id");
                    check_range(tail[0], 0, 47, "mobile timeslot");
                    check_range(tail[1], 0, 47, "desktop timeslot");
                    check_range(tail[2], 1, 7, "desktop day");
                    if (tail[5] > tail[3] || tail[6] > tail[4] || tail[9] > tail[7] ||
                        tail[10] > tail[8])
                        fail(errc::config_invalid, "unique counts exceed totals");

                    ds.groups.push_back(capture_group(row[1], row[2], row[0]));
                    ds.rows.push_back(std::move(row));
                    ds.labels.push_back(rec.truth.device_ip.at(dev) == mobile_ip ? 1 : 0);
                }
            }
        }
    }
    return ds;
}

Dataset combine(const std::vector<Dataset>& parts) {
    if (parts.empty()) fail(errc::schema_mismatch, "nothing to combine");
    const bool with_persona = parts.front().include_persona_vector;
    for (const auto& p : parts) {
        if (p.include_persona_vector != with_persona)
            fail(errc::schema_mismatch, "mixed persona-vector policies");
    }

    Dataset out;
    out.setup_code = parts.front().setup_code;
    out.persona_id = "";
    out.include_persona_vector = with_persona;
    out.seed = parts.front().seed;

    std::set<std::string> pc, ac, dm;
    for (const auto& p : parts) {
        pc.insert(p.vocab.persona_cats.begin(), p.vocab.persona_cats.end());
        ac.insert(p.vocab.ad_cats.begin(), p.vocab.ad_cats.end());
        dm.insert(p.vocab.domains.begin(), p.vocab.domains.end());
    }
    out.vocab.persona_cats = sorted_unique(std::move(pc));
    out.vocab.ad_cats = sorted_unique(std::move(ac));
    out.vocab.domains = sorted_unique(std::move(dm));
    out.feature_names = feature_names_for(out.vocab, with_persona);

    const Layout nl = layout_for(out.vocab, with_persona);
    for (const auto& p : parts) {
        const Layout ol = layout_for(p.vocab, with_persona);
        for (size_t r = 0; r < p.rows.size(); ++r) {
            const auto& src = p.rows[r];
            if (src.size() != ol.width)
                fail(errc::schema_mismatch, "row width disagrees with vocabulary");
            std::vector<double> row(nl.width, 0.0);
            for (size_t i = 0; i < kHeadN; ++i) row[i] = src[i];
            if (with_persona) {
                for (size_t i = 0; i < p.vocab.persona_cats.size(); ++i)
                    row[nl.persona_off + index_of(out.vocab.persona_cats,
                                                  p.vocab.persona_cats[i])] =
                        src[ol.persona_off + i];
            }
            for (size_t i = 0; i < kTailN; ++i) row[nl.tail_off + i] = src[ol.tail_off + i];
            for (size_t i = 0; i < p.vocab.ad_cats.size(); ++i) {
                size_t ni = index_of(out.vocab.ad_cats, p.vocab.ad_cats[i]);
                row[nl.mk_off + ni] = src[ol.mk_off + i];
                row[nl.dk_off + ni] = src[ol.dk_off + i];
            }
            for (size_t i = 0; i < p.vocab.domains.size(); ++i) {
                size_t ni = index_of(out.vocab.domains, p.vocab.domains[i]);
                row[nl.mlp_off + ni] = src[ol.mlp_off + i];
                row[nl.dlp_off + ni] = src[ol.dlp_off + i];
            }
            // Units from different personas may share an id; the merged unit
            // is still balanced, it just binds more rows to one fold.
            out.groups.push_back(capture_group(src[1], src[2], src[0]));
            out.rows.push_back(std::move(row));
            out.labels.push_back(p.labels[r]);
        }
    }
    return out;
}

void write_csv(const Dataset& d, const std::string& path) {
    std::ostringstream out;
    for (const auto& name : d.feature_names) {
        if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos)
            fail(errc::io_failure, "feature name not representable in csv: " + name);
        out << name << ',';
    }
    out << "class\n";
    char buf[64];
    for (size_t r = 0; r < d.rows.size(); ++r) {
        const auto& row = d.rows[r];
        for (double v : row) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << d.labels[r] << '\n';
    }
    write_text_file(path, out.str());
}

Dataset read_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<std::string> lines = split(text, '\n');
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) fail(errc::schema_mismatch, "empty dataset file");

    std::vector<std::string> header = split(lines[0], ',');
    if (header.empty() || header.back() != "class")
        fail(errc::schema_mismatch, "dataset header lacks a class column");
    header.pop_back();

    Dataset ds;
    ds.feature_names = header;

    // Rebuild the vocabulary from column names so downstream consumers can
    // reason about blocks.
    for (const auto& name : header) {
        if (name.rfind("Persona_Keywords:", 0) == 0) {
            ds.vocab.persona_cats.push_back(name.substr(17));
            ds.include_persona_vector = true;
        } else if (name.rfind("Mobile_Keywords:", 0) == 0) {
            ds.vocab.ad_cats.push_back(name.substr(16));
        } else if (name.rfind("Mobile_Landing_Pages:", 0) == 0) {
            ds.vocab.domains.push_back(name.substr(21));
        }
    }
    ds.include_persona_vector = !ds.vocab.persona_cats.empty();
    std::vector<std::string> expect = feature_names_for(ds.vocab, ds.include_persona_vector);
    if (expect != header) fail(errc::schema_mismatch, "dataset columns out of layout order");

    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        std::vector<std::string> cells = split(lines[i], ',');
        if (cells.size() != header.size() + 1)
            fail(errc::schema_mismatch, "row width mismatch at line " + std::to_string(i + 1));
        std::vector<double> row(header.size());
        for (size_t c = 0; c < header.size(); ++c) {
            try {
                row[c] = std::stod(cells[c]);
            } catch (const std::exception&) {
                fail(errc::schema_mismatch, "non-numeric cell at line " + std::to_string(i + 1));
            }
        }
        int label = 0;
        try {
            label = std::stoi(cells.back());
        } catch (const std::exception&) {
            fail(errc::schema_mismatch, "bad class label at line " + std::to_string(i + 1));
        }
        if (label != 0 && label != 1)
            fail(errc::schema_mismatch, "class label must be 0 or 1");
        ds.groups.push_back(capture_group(row[1], row[2], row[0]));
        ds.rows.push_back(std::move(row));
        ds.labels.push_back(label);
    }
    return ds;
}

std::string manifest_json(const Dataset& d) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["setup"] = d.setup_code;
    j["persona"] = d.persona_id;
    j["persona_vector_included"] = d.include_persona_vector;
    j["seed"] = d.seed;
    j["samples"] = d.rows.size();
    j["features"] = d.feature_names.size();
    size_t pos = 0;
    for (int l : d.labels) pos += size_t(l == 1);
    j["class_counts"] = {{"paired", pos}, {"baseline", d.labels.size() - pos}};
    j["vocabulary"] = {{"persona_categories", d.vocab.persona_cats.size()},
                       {"ad_categories", d.vocab.ad_cats.size()},
                       {"landing_domains", d.vocab.domains.size()}};
    return j.dump(2);
}

} // namespace cdt::features
