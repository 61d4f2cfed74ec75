#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "microtrade/baselines/baselines.hpp"
#include "microtrade/marl/evaluation.hpp"
#include "microtrade/marl/trainer.hpp"

namespace microtrade::report {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

/// Fixed-width bins over [lo, hi]. Values equal to hi fall in the last bin.
struct Histogram {
    double lo = 0.0;
    double bin_width = 1.0;
    std::vector<std::size_t> counts;
    /// Samples with no value (slots without a cleared trade).
    std::optional<std::size_t> no_trade;

    std::size_t total() const;
    double bin_start(std::size_t b) const { return lo + bin_width * static_cast<double>(b); }
};

/// `bin_width` <= 0 selects (hi - lo) / 40. Throws std::invalid_argument
/// for values outside [lo, hi] or an empty range.
Histogram make_histogram(const std::vector<double>& values, double lo, double hi, double bin_width = 0.0);

Histogram clearing_price_histogram(const std::vector<std::optional<double>>& prices, double floor, double cap,
                                   double bin_width = 0.0);

struct Series {
    std::string name;
    std::vector<double> values;
};

/// A chart and the CSV holding exactly the numbers it draws.
struct Chart {
    std::string svg;
    std::string csv;
};

Chart line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                 const std::vector<Series>& series);

/// One group per category, one bar per series within each group.
Chart bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& categories,
                const std::vector<Series>& series);

Chart histogram_chart(const std::string& title, const std::string& x_label, const Histogram& h);

/// Writes `<stem>.svg` and `<stem>.csv` into `dir`.
void write_chart(const std::filesystem::path& dir, const std::string& stem, const Chart& chart);

void write_text(const std::filesystem::path& path, const std::string& text);

inline const std::string kMetricsHeader = "episode,agent,mean_reward,selling,buying,wholesale,penalty";

void write_metrics_header(std::ostream& out);
void write_metrics_rows(std::ostream& out, const marl::EpisodeMetrics& m);
std::string metrics_csv(const std::vector<marl::EpisodeMetrics>& metrics);

/// One row per (slot, microgrid) with every settlement field.
std::string settlement_log_csv(const std::vector<marl::LoggedRecord>& log);

/// Per-microgrid per-slot means: wholesale, buying, selling, penalty, overall.
std::string decomposition_csv(const marl::EvaluationReport& report);

/// Per-episode mean reward of each agent during evaluation.
std::string evaluation_rewards_csv(const marl::EvaluationReport& report);

std::string comparison_csv(const baselines::ComparisonReport& report);
std::string market_csv(const baselines::ComparisonReport& report);

/// Evaluation outputs: settlement log, decomposition, histograms for bid
/// price, trading quantity, clearing price and battery level, plus charts.
void write_evaluation(const std::filesystem::path& dir, const marl::EvaluationReport& report,
                      const grid::EnvironmentConfig& env);

/// Training outputs: metrics.csv and a reward line chart.
void write_training_charts(const std::filesystem::path& dir, const std::vector<marl::EpisodeMetrics>& metrics);

/// Comparison outputs: tables plus one grouped bar chart per microgrid.
void write_comparison(const std::filesystem::path& dir, const baselines::ComparisonReport& report);

}  // namespace microtrade::report
