#include "analytics.hpp"

#include "error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace tg::analytics {

ContributionCurve contribution_curve(const std::map<std::string, std::uint64_t>& counts) {
    std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
    std::uint64_t total = 0;
    for (const auto& [_, c] : ranked) total += c;
    if (total == 0) fail(Errc::empty_input, "contribution curve needs at least one publisher with a positive count");
    // std::map iteration is already id-ascending, so a stable sort keeps ties in id order.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    ContributionCurve curve;
    const double n = static_cast<double>(ranked.size());
    std::uint64_t running = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        running += ranked[k].second;
        curve.points.push_back({static_cast<double>(k + 1) / n, static_cast<double>(running) / static_cast<double>(total)});
    }
    curve.points.back().y = 1.0;
    return curve;
}

std::string CountryRatioRow::display_ratio() const {
    if (!ratio) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *ratio);
    return buf;
}

std::vector<CountryRatioRow> country_ratio_table(const std::map<std::string, double>& victims,
                                                 const std::map<std::string, double>& population) {
    std::vector<CountryRatioRow> rows;
    for (const auto& [country, pct] : victims) {
        if (pct < 0) fail(Errc::invalid_argument, "negative victim percentage for " + country);
        CountryRatioRow row{country, pct, std::nullopt, std::nullopt, false};
        auto it = population.find(country);
        if (it == population.end()) {
            row.missing_country = true;
        } else {
            if (it->second < 0) fail(Errc::invalid_argument, "negative population percentage for " + country);
            row.population_pct = it->second;
            if (it->second > 0) row.ratio = pct / it->second;
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.victim_pct > b.victim_pct; });
    return rows;
}

double Cdf::at(double x) const {
    double y = 0;
    for (const auto& p : points) {
        if (p.x > x) break;
        y = p.y;
    }
    return y;
}

namespace {

Cdf empirical(std::vector<double> values) {
    Cdf cdf;
    if (values.empty()) return cdf;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        cdf.points.push_back({values[i], static_cast<double>(i + 1) / n});
    }
    std::size_t mid = values.size() / 2;
    cdf.median = values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
    return cdf;
}

}  // namespace

Cdf detection_savings_cdf(const std::vector<double>& deltas) {
    if (deltas.empty()) fail(Errc::empty_input, "detection savings CDF needs at least one delta");
    for (double d : deltas)
        if (!std::isfinite(d)) fail(Errc::invalid_argument, "detection savings delta is not finite");
    return empirical(deltas);
}

Cdf downloads_per_user_cdf(const std::vector<SwarmSampleLog>& logs) {
    std::map<std::string, std::set<InfoHash>> per_ip;
    for (const auto& log : logs)
        for (const auto& s : log.samples)
            for (const auto& e : s.endpoints) per_ip[e.ip].insert(log.infohash);
    std::vector<double> counts;
    counts.reserve(per_ip.size());
    for (const auto& [_, hashes] : per_ip) counts.push_back(static_cast<double>(hashes.size()));
    return empirical(std::move(counts));
}

CountermeasureCost countermeasure_cost(double accounts_per_day, unsigned threshold) {
    if (threshold == 0) fail(Errc::zero_threshold, "threshold must be at least 1");
    if (!(accounts_per_day >= 0)) fail(Errc::invalid_argument, "accounts per day must be non-negative");
    double per_day = accounts_per_day / threshold;
    return {per_day, 30.0 * per_day};
}

std::string to_csv(const std::vector<Point>& points) {
    std::string out = "x,y\n";
    char buf[64];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.x, p.y);
        out += buf;
    }
    return out;
}

nlohmann::json to_json(const std::vector<Point>& points) {
    auto j = nlohmann::json::array();
    for (const auto& p : points) j.push_back({p.x, p.y});
    return j;
}

}  // namespace tg::analytics
