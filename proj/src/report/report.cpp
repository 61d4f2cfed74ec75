#include "microtrade/report/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace microtrade::report {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 160.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string px(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::round(v * 100.0) / 100.0);
    return std::string(buf, end);
}

struct Frame {
    double lo, hi;
    double plot_w() const { return kWidth - kLeft - kRight; }
    double plot_h() const { return kHeight - kTop - kBottom; }
    double y(double v) const { return kTop + plot_h() * (1.0 - (v - lo) / (hi - lo)); }
};

Frame frame_for(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
    if (lo == hi) {
        const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
        return {lo - pad, hi + pad};
    }
    const double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

void open_svg(std::ostringstream& svg, const std::string& title) {
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<title>" << escape(title) << "</title>\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
        << "</text>\n";
}

void axes(std::ostringstream& svg, const Frame& f, const std::string& x_label, const std::string& y_label) {
    const double x0 = kLeft, x1 = kLeft + f.plot_w(), y0 = kTop + f.plot_h();
    svg << "<g stroke=\"black\" fill=\"none\">\n"
        << "<line x1=\"" << x0 << "\" y1=\"" << kTop << "\" x2=\"" << x0 << "\" y2=\"" << y0 << "\"/>\n"
        << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\"/>\n"
        << "</g>\n";
    for (int k = 0; k <= 5; ++k) {
        const double v = f.lo + (f.hi - f.lo) * k / 5.0;
        const double y = f.y(v);
        svg << "<line x1=\"" << x0 - 4 << "\" y1=\"" << px(y) << "\" x2=\"" << x0 << "\" y2=\"" << px(y)
            << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << x0 - 6 << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\">" << px(v) << "</text>\n";
    }
    svg << "<text x=\"" << px(kLeft + f.plot_w() / 2) << "\" y=\"" << kHeight - 15
        << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n"
        << "<text x=\"18\" y=\"" << px(kTop + f.plot_h() / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << px(kTop + f.plot_h() / 2) << ")\">" << escape(y_label) << "</text>\n";
}

void legend(std::ostringstream& svg, const std::vector<std::string>& names) {
    const double x = kWidth - kRight + 15;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = kTop + 18.0 * static_cast<double>(i);
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << color(i) << "\"/>\n"
            << "<text x=\"" << x + 18 << "\" y=\"" << y + 10 << "\">" << escape(names[i]) << "</text>\n";
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

}  // namespace

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::size_t Histogram::total() const {
    std::size_t n = no_trade.value_or(0);
    for (auto c : counts) n += c;
    return n;
}

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, double bin_width) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("histogram range is empty");
    if (bin_width <= 0.0) bin_width = (hi - lo) / 40.0;
    const auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / bin_width - 1e-9));
    Histogram h{lo, bin_width, std::vector<std::size_t>(std::max<std::size_t>(bins, 1), 0), std::nullopt};
    for (double v : values) {
        if (!(v >= lo && v <= hi)) {
            throw std::invalid_argument("histogram value " + format_number(v) + " outside [" + format_number(lo) + ", " +
                                        format_number(hi) + "]");
        }
        auto b = static_cast<std::size_t>((v - lo) / bin_width);
        h.counts[std::min(b, h.counts.size() - 1)] += 1;
    }
    return h;
}

Histogram clearing_price_histogram(const std::vector<std::optional<double>>& prices, double floor, double cap,
                                   double bin_width) {
    std::vector<double> traded;
    std::size_t none = 0;
    for (const auto& p : prices) {
        if (p) traded.push_back(*p);
        else ++none;
    }
    Histogram h = make_histogram(traded, floor, cap, bin_width);
    h.no_trade = none;
    return h;
}

Chart line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                 const std::vector<Series>& series) {
    double lo = INFINITY, hi = -INFINITY;
    std::size_t n = 0;
    for (const auto& s : series) {
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        n = std::max(n, s.values.size());
    }
    const Frame f = frame_for(lo, hi);
    std::ostringstream svg;
    open_svg(svg, title);
    axes(svg, f, x_label, y_label);
    const double dx = n > 1 ? f.plot_w() / static_cast<double>(n - 1) : 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        svg << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"1.5\" points=\"";
        std::string values;
        for (std::size_t t = 0; t < series[i].values.size(); ++t) {
            svg << (t ? " " : "") << px(kLeft + dx * static_cast<double>(t)) << ',' << px(f.y(series[i].values[t]));
            values += (t ? " " : "") + format_number(series[i].values[t]);
        }
        svg << "\"><title>" << escape(series[i].name) << ": " << values << "</title></polyline>\n";
    }
    std::vector<std::string> names;
    for (const auto& s : series) names.push_back(s.name);
    legend(svg, names);
    svg << "</svg>\n";

    std::ostringstream csv;
    csv << "index";
    for (const auto& s : series) csv << ',' << csv_field(s.name);
    csv << '\n';
    for (std::size_t t = 0; t < n; ++t) {
        csv << t;
        for (const auto& s : series) csv << ',' << (t < s.values.size() ? format_number(s.values[t]) : "");
        csv << '\n';
    }
    return {svg.str(), csv.str()};
}

Chart bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& categories,
                const std::vector<Series>& series) {
    for (const auto& s : series) {
        if (s.values.size() != categories.size()) throw std::invalid_argument("bar series length must match categories");
    }
    double lo = 0.0, hi = 0.0;
    for (const auto& s : series) {
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const Frame f = frame_for(lo, hi);
    std::ostringstream svg;
    open_svg(svg, title);
    axes(svg, f, "", y_label);
    const double group_w = f.plot_w() / static_cast<double>(std::max<std::size_t>(categories.size(), 1));
    const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
    const double zero = f.y(0.0);
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << px(zero) << "\" x2=\"" << kLeft + f.plot_w() << "\" y2=\"" << px(zero)
        << "\" stroke=\"#888\"/>\n";
    for (std::size_t c = 0; c < categories.size(); ++c) {
        const double gx = kLeft + group_w * static_cast<double>(c);
        for (std::size_t s = 0; s < series.size(); ++s) {
            const double v = series[s].values[c];
            const double y = f.y(v);
            svg << "<rect x=\"" << px(gx + group_w * 0.1 + bar_w * static_cast<double>(s)) << "\" y=\""
                << px(std::min(y, zero)) << "\" width=\"" << px(bar_w) << "\" height=\"" << px(std::abs(zero - y))
                << "\" fill=\"" << color(s) << "\"><title>" << escape(series[s].name) << ' ' << escape(categories[c])
                << ": " << format_number(v) << "</title></rect>\n";
        }
        svg << "<text x=\"" << px(gx + group_w / 2) << "\" y=\"" << px(kTop + f.plot_h() + 16)
            << "\" text-anchor=\"middle\">" << escape(categories[c]) << "</text>\n";
    }
    std::vector<std::string> names;
    for (const auto& s : series) names.push_back(s.name);
    legend(svg, names);
    svg << "</svg>\n";

    std::ostringstream csv;
    csv << "category";
    for (const auto& s : series) csv << ',' << csv_field(s.name);
    csv << '\n';
    for (std::size_t c = 0; c < categories.size(); ++c) {
        csv << csv_field(categories[c]);
        for (const auto& s : series) csv << ',' << format_number(s.values[c]);
        csv << '\n';
    }
    return {svg.str(), csv.str()};
}

Chart histogram_chart(const std::string& title, const std::string& x_label, const Histogram& h) {
    std::size_t peak = h.no_trade.value_or(0);
    for (auto c : h.counts) peak = std::max(peak, c);
    const Frame f{0.0, std::max<double>(1.0, static_cast<double>(peak)) * 1.05};
    std::ostringstream svg;
    open_svg(svg, title);
    axes(svg, f, x_label, "count");
    const std::size_t slots = h.counts.size() + (h.no_trade ? 1 : 0);
    const double w = f.plot_w() / static_cast<double>(slots);
    const double base = f.y(0.0);
    auto bar = [&](std::size_t k, std::size_t count, const std::string& label, const char* fill) {
        const double y = f.y(static_cast<double>(count));
        svg << "<rect x=\"" << px(kLeft + w * static_cast<double>(k)) << "\" y=\"" << px(y) << "\" width=\"" << px(w)
            << "\" height=\"" << px(base - y) << "\" fill=\"" << fill << "\" stroke=\"white\" stroke-width=\"0.5\"><title>"
            << escape(label) << ": " << count << "</title></rect>\n";
    };
    for (std::size_t b = 0; b < h.counts.size(); ++b) bar(b, h.counts[b], format_number(h.bin_start(b)), color(0));
    if (h.no_trade) bar(h.counts.size(), *h.no_trade, "no_trade", color(3));
    for (std::size_t b = 0; b <= h.counts.size(); b += std::max<std::size_t>(1, h.counts.size() / 5)) {
        svg << "<text x=\"" << px(kLeft + w * static_cast<double>(b)) << "\" y=\"" << px(base + 16)
            << "\" text-anchor=\"middle\">" << px(h.bin_start(b)) << "</text>\n";
    }
    if (h.no_trade) {
        svg << "<text x=\"" << px(kLeft + w * (static_cast<double>(h.counts.size()) + 0.5)) << "\" y=\""
            << px(base + 30) << "\" text-anchor=\"middle\">none</text>\n";
    }
    svg << "</svg>\n";

    std::ostringstream csv;
    csv << "bin_start,bin_end,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        csv << format_number(h.bin_start(b)) << ',' << format_number(h.bin_start(b + 1)) << ',' << h.counts[b] << '\n';
    }
    if (h.no_trade) csv << "no_trade,no_trade," << *h.no_trade << '\n';
    return {svg.str(), csv.str()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_chart(const std::filesystem::path& dir, const std::string& stem, const Chart& chart) {
    write_text(dir / (stem + ".svg"), chart.svg);
    write_text(dir / (stem + ".csv"), chart.csv);
}

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

void write_metrics_rows(std::ostream& out, const marl::EpisodeMetrics& m) {
    for (std::size_t i = 0; i < m.agents.size(); ++i) {
        const auto& a = m.agents[i];
        out << m.episode << ',' << i << ',' << format_number(a.mean_reward) << ',' << format_number(a.selling) << ','
            << format_number(a.buying) << ',' << format_number(a.wholesale) << ',' << format_number(a.penalty) << '\n';
    }
}

std::string metrics_csv(const std::vector<marl::EpisodeMetrics>& metrics) {
    std::ostringstream out;
    write_metrics_header(out);
    for (const auto& m : metrics) write_metrics_rows(out, m);
    return out.str();
}

std::string settlement_log_csv(const std::vector<marl::LoggedRecord>& log) {
    std::ostringstream out;
    out << "episode,slot,microgrid,clearing_price,buy_cost,sell_revenue,penalty,wholesale_cost,wholesale_energy,"
           "committed_sale,delivered,cleared_buy,wasted_energy,generation,load,charged,discharged,battery_level,"
           "reward\n";
    for (const auto& e : log) {
        const auto& r = e.record;
        out << e.episode << ',' << r.slot << ',' << r.microgrid << ','
            << (e.clearing_price ? format_number(*e.clearing_price) : "none") << ','
            << format_number(r.buy_cost.value()) << ',' << format_number(r.sell_revenue.value()) << ','
            << format_number(r.penalty.value()) << ',' << format_number(r.wholesale_cost.value()) << ','
            << format_number(r.wholesale_energy.value()) << ',' << format_number(r.committed_sale.value()) << ','
            << format_number(r.delivered.value()) << ',' << format_number(r.cleared_buy.value()) << ','
            << format_number(r.wasted_energy.value()) << ',' << format_number(r.generation.value()) << ','
            << format_number(r.load.value()) << ',' << format_number(r.charged.value()) << ','
            << format_number(r.discharged.value()) << ',' << format_number(r.battery_level.value()) << ','
            << format_number(r.reward.value()) << '\n';
    }
    return out.str();
}

std::string decomposition_csv(const marl::EvaluationReport& report) {
    std::ostringstream out;
    out << "microgrid,wholesale,buying,selling,penalty,overall\n";
    for (std::size_t i = 0; i < report.breakdown.size(); ++i) {
        const auto& b = report.breakdown[i];
        out << i << ',' << format_number(b.wholesale) << ',' << format_number(b.buying) << ','
            << format_number(b.selling) << ',' << format_number(b.penalty) << ',' << format_number(b.overall) << '\n';
    }
    return out.str();
}

std::string evaluation_rewards_csv(const marl::EvaluationReport& report) {
    std::ostringstream out;
    out << "episode,agent,mean_reward\n";
    for (std::size_t e = 0; e < report.episodes; ++e) {
        for (std::size_t i = 0; i < report.episode_reward.size(); ++i) {
            out << e << ',' << i << ',' << format_number(report.episode_reward[i][e]) << '\n';
        }
    }
    return out.str();
}

std::string comparison_csv(const baselines::ComparisonReport& report) {
    std::ostringstream out;
    out << "method,microgrid,wholesale,buying,selling,penalty,overall,delta_wholesale,delta_buying,delta_selling,"
           "delta_penalty,delta_overall\n";
    for (const auto& r : report.rows) {
        const auto& b = r.breakdown;
        const auto& d = r.delta;
        out << csv_field(r.method) << ',' << r.microgrid << ',' << format_number(b.wholesale) << ','
            << format_number(b.buying) << ',' << format_number(b.selling) << ',' << format_number(b.penalty) << ','
            << format_number(b.overall) << ',' << format_number(d.wholesale) << ',' << format_number(d.buying) << ','
            << format_number(d.selling) << ',' << format_number(d.penalty) << ',' << format_number(d.overall) << '\n';
    }
    return out.str();
}

std::string market_csv(const baselines::ComparisonReport& report) {
    std::ostringstream out;
    out << "method,successful_trading_ratio,mean_trading_quantity\n";
    for (const auto& m : report.market) {
        out << csv_field(m.method) << ',' << format_number(m.trading_ratio) << ',' << format_number(m.mean_quantity)
            << '\n';
    }
    return out.str();
}

void write_evaluation(const std::filesystem::path& dir, const marl::EvaluationReport& report,
                      const grid::EnvironmentConfig& env) {
    write_text(dir / "decomposition.csv", decomposition_csv(report));
    write_text(dir / "evaluation_rewards.csv", evaluation_rewards_csv(report));
    if (!report.log.empty()) write_text(dir / "settlement_log.csv", settlement_log_csv(report.log));

    const std::size_t n = report.breakdown.size();
    std::vector<std::string> grids;
    for (std::size_t i = 0; i < n; ++i) grids.push_back("MG" + std::to_string(i + 1));
    std::vector<Series> parts{{"wholesale", {}}, {"buying", {}}, {"selling", {}}, {"penalty", {}}, {"overall", {}}};
    for (const auto& b : report.breakdown) {
        parts[0].values.push_back(b.wholesale);
        parts[1].values.push_back(b.buying);
        parts[2].values.push_back(b.selling);
        parts[3].values.push_back(b.penalty);
        parts[4].values.push_back(b.overall);
    }
    write_chart(dir, "decomposition_chart", bar_chart("Reward decomposition per slot", "cents", grids, parts));

    std::vector<Series> rewards;
    for (std::size_t i = 0; i < n; ++i) rewards.push_back({grids[i], report.episode_reward[i]});
    write_chart(dir, "evaluation_rewards_chart", line_chart("Evaluation reward", "episode", "cents per slot", rewards));

    write_chart(dir, "hist_clearing_price",
                histogram_chart("Clearing price", "cents/kWh",
                                clearing_price_histogram(report.clearing_prices, env.price_floor, env.price_cap)));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = env.microgrids[i];
        const std::string tag = "_mg" + std::to_string(i + 1);
        write_chart(dir, "hist_bid_price" + tag,
                    histogram_chart("Bid price " + grids[i], "cents/kWh",
                                    make_histogram(report.bid_prices[i], env.price_floor, env.price_cap)));
        const double q = p.max_bid_quantity.value();
        write_chart(dir, "hist_trading_quantity" + tag,
                    histogram_chart("Trading quantity " + grids[i] + " (+buy / -sell)", "kWh",
                                    make_histogram(report.bid_quantities[i], -q, q)));
        write_chart(dir, "hist_battery_level" + tag,
                    histogram_chart("Battery level " + grids[i], "kWh",
                                    make_histogram(report.battery_levels[i], 0.0, p.battery_capacity.value())));
    }
}

void write_training_charts(const std::filesystem::path& dir, const std::vector<marl::EpisodeMetrics>& metrics) {
    std::vector<Series> rewards;
    for (const auto& m : metrics) {
        if (rewards.size() < m.agents.size()) {
            for (std::size_t i = rewards.size(); i < m.agents.size(); ++i) rewards.push_back({"MG" + std::to_string(i + 1), {}});
        }
        for (std::size_t i = 0; i < m.agents.size(); ++i) rewards[i].values.push_back(m.agents[i].mean_reward);
    }
    write_chart(dir, "training_rewards_chart", line_chart("Training reward", "episode", "cents per slot", rewards));
}

void write_comparison(const std::filesystem::path& dir, const baselines::ComparisonReport& report) {
    write_text(dir / "comparison.csv", comparison_csv(report));
    write_text(dir / "market.csv", market_csv(report));
    const std::vector<std::string> parts{"wholesale", "buying", "selling", "penalty", "overall"};
    std::size_t n = 0;
    for (const auto& r : report.rows) n = std::max(n, r.microgrid + 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Series> methods;
        for (const auto& name : report.methods) {
            const auto& b = report.row(name, i).breakdown;
            methods.push_back({name, {b.wholesale, b.buying, b.selling, b.penalty, b.overall}});
        }
        write_chart(dir, "compare_mg" + std::to_string(i + 1),
                    bar_chart("Per-slot reward components, MG" + std::to_string(i + 1), "cents", parts, methods));
    }
    std::vector<Series> ratio{{"successful_trading_ratio", {}}};
    std::vector<std::string> names;
    for (const auto& m : report.market) {
        names.push_back(m.method);
        ratio[0].values.push_back(m.trading_ratio);
    }
    write_chart(dir, "compare_trading_ratio", bar_chart("Successful trading ratio", "fraction of slots", names, ratio));
}

}  // namespace microtrade::report
