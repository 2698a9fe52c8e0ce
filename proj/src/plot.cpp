#include "ccd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

namespace ccd {

std::optional<double> best_at_cost(const CostCurve& curve, double cost) {
    std::optional<double> best;
    for (const auto& [c, b] : curve) {
        if (c > cost) break;
        best = b;
    }
    return best;
}

std::vector<BandPoint> convergence_band(const std::vector<CostCurve>& replicates) {
    std::vector<BandPoint> band;
    if (replicates.empty()) return band;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& curve : replicates) {
        if (curve.empty()) return band;
        lo = std::max(lo, curve.front().first);
        hi = std::min(hi, curve.back().first);
    }
    const auto n = replicates.size();
    for (double x = std::ceil(lo); x <= hi; x += 1.0) {
        std::vector<double> ys;
        for (const auto& curve : replicates) ys.push_back(*best_at_cost(curve, x));
        double mean = 0.0;
        for (auto y : ys) mean += y;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (auto y : ys) ss += (y - mean) * (y - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        band.push_back({x, mean, sd, n});
    }
    return band;
}

std::map<std::pair<Method, std::size_t>, std::vector<CostCurve>> group_curves(const std::vector<TraceRow>& rows) {
    std::map<std::pair<Method, std::size_t>, std::map<std::size_t, CostCurve>> by_rep;
    for (const auto& r : rows) by_rep[{r.method, r.t}][r.replicate].emplace_back(r.cumulative_cost, r.best_so_far);
    std::map<std::pair<Method, std::size_t>, std::vector<CostCurve>> out;
    for (auto& [key, reps] : by_rep)
        for (auto& [rep, curve] : reps) out[key].push_back(std::move(curve));
    return out;
}

namespace {

constexpr double kPanelW = 380.0;
constexpr double kPanelH = 300.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* colour(Method m) {
    switch (m) {
        case Method::CBO: return "#2ca02c";
        case Method::DCBO: return "#d62728";
        case Method::BO: break;
    }
    return "#1f77b4";
}

std::string num(double x) { return fmt::format("{:.2f}", x); }

}  // namespace

std::string render_convergence_svg(const std::vector<TraceRow>& rows,
                                   const std::vector<std::pair<std::size_t, double>>& optima) {
    const auto curves = group_curves(rows);
    std::set<std::size_t> slices;
    std::set<Method> methods;
    for (const auto& [key, _] : curves) {
        methods.insert(key.first);
        slices.insert(key.second);
    }

    const double width = kPanelW * static_cast<double>(std::max<std::size_t>(1, slices.size()));
    const double height = kPanelH + 30.0;
    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        num(width), num(height));

    std::size_t panel = 0;
    for (auto t : slices) {
        const double ox = kPanelW * static_cast<double>(panel++);
        std::map<Method, std::vector<BandPoint>> bands;
        double xmax = 1.0, ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
        for (auto m : methods) {
            auto it = curves.find({m, t});
            if (it == curves.end()) continue;
            bands[m] = convergence_band(it->second);
            for (const auto& b : bands[m]) {
                xmax = std::max(xmax, b.cost);
                ymin = std::min(ymin, b.mean - b.sd);
                ymax = std::max(ymax, b.mean + b.sd);
            }
        }
        std::optional<double> y_star;
        for (const auto& [slice, y] : optima)
            if (slice == t) y_star = y;
        if (y_star) {
            ymin = std::min(ymin, *y_star);
            ymax = std::max(ymax, *y_star);
        }
        if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
        if (ymax - ymin < 1e-9) ymin -= 0.5, ymax += 0.5;
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;

        const double pw = kPanelW - kLeft - kRight, ph = kPanelH - kTop - kBottom;
        auto sx = [&](double x) { return ox + kLeft + pw * x / xmax; };
        auto sy = [&](double y) { return kTop + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

        svg += fmt::format("<g id=\"panel-t{}\">\n", t);
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">t = {}</text>\n",
                           num(ox + kLeft + pw / 2), num(kTop - 15), t);
        svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
                           num(ox + kLeft), num(kTop), num(pw), num(ph));
        for (int k = 0; k <= 4; ++k) {
            const double xv = xmax * k / 4.0, yv = ymin + (ymax - ymin) * k / 4.0;
            svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(sx(xv)),
                               num(kTop + ph + 15), fmt::format("{:.0f}", xv));
            svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", num(ox + kLeft - 4),
                               num(sy(yv) + 4), fmt::format("{:.3g}", yv));
        }
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">cumulative intervention cost</text>\n",
                           num(ox + kLeft + pw / 2), num(kTop + ph + 35));
        svg += fmt::format(
            "<text transform=\"translate({},{}) rotate(-90)\" text-anchor=\"middle\">best objective so far</text>\n",
            num(ox + 15), num(kTop + ph / 2));

        for (const auto& [m, band] : bands) {
            if (band.empty()) continue;
            std::string upper, lower, line;
            for (const auto& b : band) {
                upper += fmt::format("{},{} ", num(sx(b.cost)), num(sy(b.mean + b.sd)));
                line += fmt::format("{},{} ", num(sx(b.cost)), num(sy(b.mean)));
            }
            for (auto it = band.rbegin(); it != band.rend(); ++it)
                lower += fmt::format("{},{} ", num(sx(it->cost)), num(sy(it->mean - it->sd)));
            svg += fmt::format("<polygon class=\"band\" data-method=\"{}\" points=\"{}{}\" fill=\"{}\" "
                               "fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                               to_string(m), upper, lower, colour(m));
            svg += fmt::format("<polyline class=\"mean\" data-method=\"{}\" points=\"{}\" fill=\"none\" "
                               "stroke=\"{}\" stroke-width=\"2\"/>\n",
                               to_string(m), line, colour(m));
        }
        if (y_star)
            svg += fmt::format("<line class=\"optimum\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" "
                               "stroke-dasharray=\"4,3\"/>\n",
                               num(sx(0)), num(sy(*y_star)), num(sx(xmax)), num(sy(*y_star)));
        svg += "</g>\n";
    }

    double lx = kLeft;
    for (auto m : methods) {
        svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"4\" fill=\"{}\"/>", num(lx),
                           num(height - 14), colour(m));
        svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", num(lx + 18), num(height - 9), to_string(m));
        lx += 70.0;
    }
    if (!optima.empty())
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\" stroke-dasharray=\"4,3\"/>"
                           "<text x=\"{3}\" y=\"{4}\">y*</text>\n",
                           num(lx), num(height - 12), num(lx + 14), num(lx + 18), num(height - 9));
    svg += "</svg>\n";
    return svg;
}

}  // namespace ccd
