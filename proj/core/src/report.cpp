#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cdt/error.hpp"
#include "cdt/report.hpp"

namespace cdt::report {
namespace {

using nlohmann::json;

std::vector<CdfPoint> cdf_of(std::vector<double> values) {
    std::vector<CdfPoint> out;
    if (values.empty()) return out;
    std::sort(values.begin(), values.end());
    const double n = double(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        out.push_back({values[i], double(i + 1) / n});
    }
    return out;
}

size_t keyword_count(const adex::AdObservation& obs, const category::CategoryDb& db) {
    const auto* labels = db.lookup(obs.landing_domain);
    return labels ? labels->size() : 1; // unknown domains carry the sentinel label
}

} // namespace

AdsCdfReport ads_cdf(const std::vector<sched::RunRecord>& runs,
                     const category::CategoryDb& db) {
    AdsCdfReport rep;

    // (run, session, device) -> totals, keyed by role for the CDF axes.
    std::map<std::string, std::vector<double>> ads_by_role;
    std::map<std::string, std::vector<double>> keywords_by_role;

    long desktop_ads = 0;
    long mobile_under_5 = 0;

    for (const auto& rec : runs) {
        std::map<std::string, sched::DeviceRole> roles;
        for (const auto& d : rec.devices) roles[d.device_id] = d.role;

        for (const auto& session : rec.sessions) {
            std::map<std::string, long> n_ads;
            std::map<std::string, long> n_keywords;
            for (const auto& stage : session.stages) {
                for (const auto& [device, data] : stage.devices) {
                    for (const auto& obs : data.ads) {
                        n_ads[device] += 1;
                        n_keywords[device] += long(keyword_count(obs, db));
                    }
                }
            }
            for (const auto& [device, role] : roles) {
                const char* role_name = sched::device_role_name(role);
                long a = n_ads.count(device) ? n_ads[device] : 0;
                long k = n_keywords.count(device) ? n_keywords[device] : 0;
                ads_by_role[role_name].push_back(double(a));
                keywords_by_role[role_name].push_back(double(k));
                if (role == sched::DeviceRole::mobile) {
                    rep.mobile_sessions += 1;
                    if (a < 5) mobile_under_5 += 1;
                }
            }
        }

        for (const auto& e : rec.visit_log) {
            if (e.is_train) continue;
            auto it = roles.find(e.device_id);
            if (it == roles.end() || it->second == sched::DeviceRole::mobile) continue;
            rep.desktop_test_visits += 1;
            desktop_ads += e.ads;
        }
    }

    for (auto& [role, values] : ads_by_role) rep.ads[role] = cdf_of(std::move(values));
    for (auto& [role, values] : keywords_by_role)
        rep.keywords[role] = cdf_of(std::move(values));
    if (rep.desktop_test_visits > 0)
        rep.desktop_mean_ads_per_visit = double(desktop_ads) / double(rep.desktop_test_visits);
    if (rep.mobile_sessions > 0)
        rep.mobile_sessions_under_5 = double(mobile_under_5) / double(rep.mobile_sessions);
    return rep;
}

std::string ads_cdf_csv(const AdsCdfReport& rep) {
    std::ostringstream os;
    char buf[128];
    os << "metric,role,value,cum_fraction\n";
    for (const auto& [role, points] : rep.ads) {
        for (const auto& p : points) {
            std::snprintf(buf, sizeof(buf), "ads,%s,%g,%.6f\n", role.c_str(), p.value,
                          p.fraction);
            os << buf;
        }
    }
    for (const auto& [role, points] : rep.keywords) {
        for (const auto& p : points) {
            std::snprintf(buf, sizeof(buf), "keywords,%s,%g,%.6f\n", role.c_str(), p.value,
                          p.fraction);
            os << buf;
        }
    }
    std::snprintf(buf, sizeof(buf), "summary,desktop_mean_ads_per_visit,%.6f,\n",
                  rep.desktop_mean_ads_per_visit);
    os << buf;
    std::snprintf(buf, sizeof(buf), "summary,mobile_sessions_under_5_ads,%.6f,\n",
                  rep.mobile_sessions_under_5);
    os << buf;
    return os.str();
}

TrackerList TrackerList::from_json_text(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(errc::config_invalid, "tracker list is not valid JSON");
    TrackerList list;
    for (const json& oj : j.at("organizations")) {
        TrackerOrg org;
        org.name = oj.at("name").get<std::string>();
        org.cdt = oj.value("cdt", false);
        for (const json& d : oj.at("domains")) org.domains.push_back(d.get<std::string>());
        if (org.name.empty() || org.domains.empty())
            fail(errc::config_invalid, "tracker organization needs a name and domains");
        list.organizations.push_back(std::move(org));
    }
    return list;
}

TrackerList TrackerList::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_failure, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return from_json_text(os.str());
}

TrackerCoverageReport tracker_coverage(const TrackerList& list,
                                       const sim::AdEcosystem& eco,
                                       const std::vector<std::string>& pages) {
    TrackerCoverageReport rep;
    rep.pages_total = pages.size();

    // tracker index -> owning organization (shared serving domain).
    const auto& trackers = eco.config().trackers;
    std::vector<int> org_of(trackers.size(), -1);
    for (size_t t = 0; t < trackers.size(); ++t) {
        for (size_t o = 0; o < list.organizations.size() && org_of[t] < 0; ++o) {
            for (const auto& dom : trackers[t].domains) {
                const auto& org_domains = list.organizations[o].domains;
                if (std::find(org_domains.begin(), org_domains.end(), dom) !=
                    org_domains.end()) {
                    org_of[t] = int(o);
                    break;
                }
            }
        }
    }

    std::vector<std::set<std::string>> pages_of(list.organizations.size());
    for (const auto& page : pages) {
        for (size_t t : eco.embedded_trackers(page)) {
            if (org_of[t] >= 0) pages_of[size_t(org_of[t])].insert(page);
        }
    }

    size_t detected = 0, detected_cdt = 0;
    for (size_t o = 0; o < list.organizations.size(); ++o) {
        OrgCoverage row;
        row.organization = list.organizations[o].name;
        row.cdt = list.organizations[o].cdt;
        row.pages_seen = pages_of[o].size();
        row.fraction = rep.pages_total ? double(row.pages_seen) / double(rep.pages_total) : 0.0;
        if (row.pages_seen > 0) {
            detected += 1;
            if (row.cdt) detected_cdt += 1;
        }
        rep.rows.push_back(std::move(row));
    }
    std::sort(rep.rows.begin(), rep.rows.end(), [](const OrgCoverage& a, const OrgCoverage& b) {
        if (a.fraction != b.fraction) return a.fraction > b.fraction;
        return a.organization < b.organization;
    });
    rep.organizations_detected = detected;
    rep.cdt_fraction = detected ? double(detected_cdt) / double(detected) : 0.0;
    return rep;
}

std::string tracker_coverage_csv(const TrackerCoverageReport& rep) {
    std::ostringstream os;
    char buf[160];
    os << "organization,cdt,pages_seen,page_fraction\n";
    for (const auto& row : rep.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%zu,%.6f\n", row.organization.c_str(),
                      row.cdt ? 1 : 0, row.pages_seen, row.fraction);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "detected,%zu,,\ncdt_fraction,%.6f,,\n",
                  rep.organizations_detected, rep.cdt_fraction);
    os << buf;
    return os.str();
}

std::vector<CategoryPermutationRow> category_permutation(
    const std::vector<sched::RunRecord>& runs, const std::string& device_a,
    const std::string& device_b, const category::CategoryDb& db, int n_perms,
    double alpha, uint64_t seed) {
    // The two devices see very different ad volumes (a desktop test stage
    // walks every control page, the mobile tests a single one), so raw counts
    // would differ everywhere just from scale. Compare the per-session
    // category composition instead: the fraction of a session's ads that fall
    // in each category. Sessions where a device collected nothing say nothing
    // about its mix and contribute no sample.
    struct SessionTally {
        std::map<std::string, std::pair<long, long>> by_label;
        long total_a = 0;
        long total_b = 0;
    };
    std::vector<SessionTally> tallies;
    std::set<std::string> universe;

    for (const auto& rec : runs) {
        for (const auto& session : rec.sessions) {
            SessionTally tally;
            for (const auto& stage : session.stages) {
                for (const auto& [device, data] : stage.devices) {
                    int side = device == device_a ? 0 : device == device_b ? 1 : -1;
                    if (side < 0) continue;
                    for (const auto& obs : data.ads) {
                        (side == 0 ? tally.total_a : tally.total_b) += 1;
                        const auto* labels = db.lookup(obs.landing_domain);
                        static const std::vector<std::string> kMiss = {
                            category::kUncategorized};
                        for (const auto& label : labels ? *labels : kMiss) {
                            (side == 0 ? tally.by_label[label].first
                                       : tally.by_label[label].second) += 1;
                            universe.insert(label);
                        }
                    }
                }
            }
            tallies.push_back(std::move(tally));
        }
    }

    constexpr long kMinAdsPerSide = 5;

    std::vector<CategoryPermutationRow> rows;
    uint64_t salt = 0;
    for (const auto& label : universe) {
        std::vector<double> a;
        std::vector<double> b;
        long count_a = 0;
        long count_b = 0;
        for (const auto& tally : tallies) {
            auto it = tally.by_label.find(label);
            long in_a = it == tally.by_label.end() ? 0 : it->second.first;
            long in_b = it == tally.by_label.end() ? 0 : it->second.second;
            count_a += in_a;
            count_b += in_b;
            if (tally.total_a > 0) a.push_back(double(in_a) / double(tally.total_a));
            if (tally.total_b > 0) b.push_back(double(in_b) / double(tally.total_b));
        }
        salt += 1; // consumed even for skipped rows, so the table is stable
        if (count_a < kMinAdsPerSide || count_b < kMinAdsPerSide) continue;
        CategoryPermutationRow row;
        row.device_a = device_a;
        row.device_b = device_b;
        row.category = label;
        row.count_a = count_a;
        row.count_b = count_b;
        row.test = detect::permutation_test(a, b, n_perms, alpha, seed + salt - 1);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace cdt::report
