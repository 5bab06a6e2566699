#pragma once

#include "swarm_observer.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tg::analytics {

struct Point {
    double x = 0;
    double y = 0;
    bool operator==(const Point&) const = default;
};

/// x: fraction of top publishers, y: cumulative share of fake torrents.
struct ContributionCurve {
    std::vector<Point> points;
};

/// Publishers ranked by count descending, ties by id ascending; the point at
/// x = k/N holds the share of the top k. Throws Errc::empty_input when no
/// publisher has a positive count.
ContributionCurve contribution_curve(const std::map<std::string, std::uint64_t>& counts);

struct CountryRatioRow {
    std::string country;
    double victim_pct = 0;
    std::optional<double> population_pct;
    std::optional<double> ratio;  // raw; undefined when the population share is missing or zero
    bool missing_country = false;

    /// Two-decimal rendering of the ratio, "n/a" when undefined.
    std::string display_ratio() const;
};

/// One row per victim country, ordered by victim share descending.
std::vector<CountryRatioRow> country_ratio_table(const std::map<std::string, double>& victims,
                                                 const std::map<std::string, double>& population);

/// Empirical CDF: at each distinct x, the fraction of samples <= x.
struct Cdf {
    std::vector<Point> points;
    std::optional<double> median;

    /// F(x); 0 before the first point.
    double at(double x) const;
};

/// Median uses the midpoint of the two middle values for even counts.
/// Throws Errc::empty_input on no deltas.
Cdf detection_savings_cdf(const std::vector<double>& deltas);

/// Per distinct IP, the number of distinct fake infohashes it was seen in.
Cdf downloads_per_user_cdf(const std::vector<SwarmSampleLog>& logs);

struct CountermeasureCost {
    double ips_per_day = 0;
    double ips_per_month = 0;  // 30-day month
};

/// Each IP carries `threshold` accounts before it is blacklisted, so a
/// publisher burning accounts_per_day needs accounts_per_day / threshold IPs.
CountermeasureCost countermeasure_cost(double accounts_per_day, unsigned threshold);

std::string to_csv(const std::vector<Point>& points);
nlohmann::json to_json(const std::vector<Point>& points);

}  // namespace tg::analytics
