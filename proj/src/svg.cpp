// SPDX-License-Identifier: Apache-2.0
#include "fasris/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace fasris {

namespace {

constexpr double kW = 720, kH = 460;
constexpr double kLeft = 70, kRight = 190, kTop = 40, kBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

std::string esc(const std::string& s)
{
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
        }
    }
    return o;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// 1-2-5 ticks covering [lo, hi]
std::vector<double> nice_ticks(double lo, double hi, int target = 6)
{
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
        t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
}

}  // namespace

std::string render_svg(const PlotSpec& plot)
{
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    auto tx = [&](double x) { return plot.log_x ? std::log10(x) : x; };
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (plot.log_x && !(s.x[i] > 0))) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    for (double v : plot.vlines)
        if (!plot.log_x || v > 0) {
            xmin = std::min(xmin, tx(v));
            xmax = std::max(xmax, tx(v));
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
    if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto X = [&](double x) { return kLeft + (tx(x) - xmin) / (xmax - xmin) * pw; };
    auto Xt = [&](double t) { return kLeft + (t - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(plot.title)
      << "</text>\n";
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : nice_ticks(ymin, ymax)) {
        o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << Y(t) << "\" y2=\"" << Y(t)
          << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << kLeft - 6 << "\" y=\"" << Y(t) + 4 << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
    }
    std::vector<double> xt;
    if (plot.log_x)
        for (double d = std::ceil(xmin); d <= std::floor(xmax); ++d) xt.push_back(d);
    else
        xt = nice_ticks(xmin, xmax);
    for (double t : xt) {
        o << "<line x1=\"" << Xt(t) << "\" x2=\"" << Xt(t) << "\" y1=\"" << kTop << "\" y2=\"" << kTop + ph
          << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << Xt(t) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
          << (plot.log_x ? "1e" + fmt(t) : fmt(t)) << "</text>\n";
    }
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 18 << "\" text-anchor=\"middle\">" << esc(plot.x_label)
      << "</text>\n";
    o << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << esc(plot.y_label) << "</text>\n";

    for (double v : plot.vlines) {
        if (plot.log_x && !(v > 0)) continue;
        o << "<line x1=\"" << X(v) << "\" x2=\"" << X(v) << "\" y1=\"" << kTop << "\" y2=\"" << kTop + ph
          << "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";
    }

    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const auto& s = plot.series[si];
        const char* col = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
        std::ostringstream pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (plot.log_x && !(s.x[i] > 0))) continue;
            pts << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
            if (s.markers_only)
                o << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"4\" fill=\"none\" stroke=\""
                  << col << "\"/>\n";
        }
        if (!s.markers_only)
            o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.8\" points=\"" << pts.str()
              << "\"/>\n";
        const double ly = kTop + 10 + 18 * double(si);
        const double lx = kLeft + pw + 14;
        if (s.markers_only)
            o << "<circle cx=\"" << lx + 12 << "\" cy=\"" << ly << "\" r=\"4\" fill=\"none\" stroke=\"" << col
              << "\"/>\n";
        else
            o << "<line x1=\"" << lx << "\" x2=\"" << lx + 24 << "\" y1=\"" << ly << "\" y2=\"" << ly << "\" stroke=\""
              << col << "\" stroke-width=\"1.8\"/>\n";
        o << "<text x=\"" << lx + 30 << "\" y=\"" << ly + 4 << "\">" << esc(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

PlotSpec plot_from_rows(const std::vector<ExperimentRow>& rows, const std::string& title)
{
    PlotSpec plot;
    plot.title = title;
    plot.y_label = "ESR (bits/s/Hz)";
    if (!rows.empty()) plot.x_label = rows.front().axis_name;
    plot.log_x = !rows.empty() && rows.front().axis_name == "z";
    // keep first-seen order so legends are stable
    std::vector<std::string> order;
    std::map<std::string, PlotSeries> by_key;
    for (const auto& r : rows) {
        // axes that rebuild the scenario change its id; keep those on one curve
        const bool id_fixed = r.axis_name == "snr_db" || r.axis_name == "z" || r.axis_name == "W" || r.axis_name == "scale";
        const std::string key = (id_fixed ? r.scenario_id + " " : std::string()) + r.precoder + " " + r.method;
        if (!by_key.count(key)) {
            order.push_back(key);
            PlotSeries s;
            s.label = key;
            s.markers_only = r.method == "MC";
            by_key[key] = s;
        }
        by_key[key].x.push_back(r.axis_value);
        by_key[key].y.push_back(r.esr);
    }
    for (const auto& k : order) plot.series.push_back(by_key[k]);
    return plot;
}

}  // namespace fasris
