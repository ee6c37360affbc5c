#include "plot.hpp"

#include "penseg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace penseg::cli {

std::string sweep_tsv(const SweepTable& table) {
    std::string out = "length\tlog_length\tbeta\treplicates\tm_correct\terror_quantile\treference\n";
    for (const auto& r : table.rows) {
        out += std::to_string(r.length) + "\t" + format_number(std::log(static_cast<double>(r.length))) + "\t" +
               format_number(r.beta) + "\t" + std::to_string(r.replicates) + "\t" + std::to_string(r.m_correct) +
               "\t" + format_number(r.scaled_error_quantile) + "\t" + format_number(r.reference) + "\n";
    }
    return out;
}

std::string sweep_svg(const SweepTable& table) {
    constexpr double width = 640, height = 400, margin = 60;
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_hi = 0.0;
    for (const auto& r : table.rows) {
        const double lx = std::log(static_cast<double>(r.length));
        x_lo = std::min(x_lo, lx);
        x_hi = std::max(x_hi, lx);
        y_hi = std::max(y_hi, r.reference);
        if (std::isfinite(r.scaled_error_quantile)) y_hi = std::max(y_hi, r.scaled_error_quantile);
    }
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    if (!(y_hi > 0.0)) y_hi = 1.0;
    const auto px = [&](double lx) { return margin + (lx - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
    const auto py = [&](double y) { return height - margin - y / y_hi * (height - 2 * margin); };
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    svg += "<line x1=\"" + num(margin) + "\" y1=\"" + num(height - margin) + "\" x2=\"" + num(width - margin) +
           "\" y2=\"" + num(height - margin) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(margin) + "\" y1=\"" + num(margin) + "\" x2=\"" + num(margin) + "\" y2=\"" +
           num(height - margin) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"320\" y=\"390\" text-anchor=\"middle\" font-size=\"13\">log T</text>\n";
    svg += "<text x=\"16\" y=\"200\" font-size=\"13\" transform=\"rotate(-90 16 200)\" text-anchor=\"middle\">"
           "scaled location error</text>\n";
    svg += "<text x=\"" + num(margin) + "\" y=\"" + num(margin - 8) + "\" font-size=\"11\">max " +
           format_number(y_hi) + "</text>\n";

    std::string reference, observed;
    for (const auto& r : table.rows) {
        const double lx = std::log(static_cast<double>(r.length));
        reference += num(px(lx)) + "," + num(py(r.reference)) + " ";
        if (std::isfinite(r.scaled_error_quantile)) {
            observed += "<circle cx=\"" + num(px(lx)) + "\" cy=\"" + num(py(r.scaled_error_quantile)) +
                        "\" r=\"4\" fill=\"steelblue\"/>\n";
        }
    }
    svg += "<polyline points=\"" + reference + "\" fill=\"none\" stroke=\"firebrick\" stroke-dasharray=\"6 4\"/>\n";
    svg += observed;
    svg += "</svg>\n";
    return svg;
}

std::string replicates_tsv(const McReport& report) {
    std::string out = "replicate\tm_hat\tevent\tobjective\tchangepoints\n";
    for (const auto& r : report.records) {
        std::string cps;
        for (std::size_t j = 0; j < r.changepoints.size(); ++j) cps += (j ? "," : "") + std::to_string(r.changepoints[j]);
        out += std::to_string(r.replicate) + "\t" + std::to_string(r.changepoints.size()) + "\t" +
               (r.event ? "1" : "0") + "\t" + format_number(r.objective) + "\t" + cps + "\n";
    }
    return out;
}

}  // namespace penseg::cli
