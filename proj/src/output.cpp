#include "gsde/output.hpp"

#include "gsde/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gsde {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    out.close();
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string format_report(const std::string& title, const std::vector<std::pair<std::string, std::string>>& meta,
                          const std::vector<CheckResult>& checks) {
    std::ostringstream os;
    os << "# " << title << '\n';
    for (const auto& [k, v] : meta) os << "# " << k << " = " << v << '\n';
    os << "name,residual,tolerance,pass\n";
    for (const auto& c : checks)
        os << c.name << ',' << format_double(c.residual) << ',' << format_double(c.tolerance) << ','
           << (c.pass ? "true" : "false") << '\n';
    return os.str();
}

std::string format_trajectories(const EnsembleResult& result, int dim) {
    std::ostringstream os;
    os << "traj_id,step,time";
    for (int i = 1; i <= dim; ++i) os << ",x" << i;
    os << ",E,S,exit_flag\n";
    for (std::size_t t = 0; t < result.trajectories.size(); ++t) {
        const auto& tr = result.trajectories[t];
        const int flag = tr.exit == ExitFlag::LeftBounds ? 1 : tr.exit == ExitFlag::StepError ? 2 : 0;
        for (std::size_t r = 0; r < tr.steps.size(); ++r) {
            os << t << ',' << tr.steps[r] << ',' << format_double(tr.times[r]);
            for (int i = 0; i < dim; ++i) os << ',' << format_double(tr.states[r][i]);
            os << ',' << format_double(tr.E[r]) << ',' << format_double(tr.S[r]) << ','
               << (r + 1 == tr.steps.size() ? flag : 0) << '\n';
        }
    }
    return os.str();
}

std::string format_summary(const EnsembleSummary& s) {
    std::ostringstream os;
    os << "step,time,count,mean_E,var_E,mean_S,var_S\n";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
        os << s.steps[i] << ',' << format_double(s.times[i]) << ',' << s.count[i] << ',' << format_double(s.mean_E[i])
           << ',' << format_double(s.var_E[i]) << ',' << format_double(s.mean_S[i]) << ','
           << format_double(s.var_S[i]) << '\n';
    return os.str();
}

std::string format_sweep(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "T,deviation,deviation_over_sqrtT\n";
    for (const auto& r : rows)
        os << format_double(r.T) << ',' << format_double(r.deviation) << ','
           << format_double(r.deviation_over_sqrtT) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string coord(double v) { return format_double(std::round(v * 100.0) / 100.0); }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

struct Frame2d {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
    double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        lo = 0;
        hi = 1;
    }
    if (hi - lo <= 1e-300) {
        const double pad = std::max(1e-12, std::abs(lo) * 0.05);
        lo -= pad;
        hi += pad;
    }
}

void axes(std::ostringstream& os, const std::string& title, const std::string& x_label, const Frame2d& f) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
       << "</text>\n";
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\""
       << kH - kBottom << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
       << "\" stroke=\"black\"/>\n";
    auto label = [&](double x, double y, const std::string& text, const char* anchor) {
        os << "<text x=\"" << coord(x) << "\" y=\"" << coord(y) << "\" text-anchor=\"" << anchor
           << "\" font-size=\"11\">" << escape(text) << "</text>\n";
    };
    label(kLeft, kH - kBottom + 16, format_double(f.x0), "middle");
    label(kW - kRight, kH - kBottom + 16, format_double(f.x1), "middle");
    label(kLeft - 6, kH - kBottom, format_double(f.y0), "end");
    label(kLeft - 6, kTop + 4, format_double(f.y1), "end");
    label((kLeft + kW - kRight) / 2, kH - 12, x_label, "middle");
}

} // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series) {
    Frame2d f{INFINITY, -INFINITY, INFINITY, -INFINITY};
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            f.x0 = std::min(f.x0, s.x[i]);
            f.x1 = std::max(f.x1, s.x[i]);
            f.y0 = std::min(f.y0, s.y[i]);
            f.y1 = std::max(f.y1, s.y[i]);
        }
    widen(f.x0, f.x1);
    widen(f.y0, f.y1);
    std::ostringstream os;
    axes(os, title, x_label, f);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % 5];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            os << (first ? "" : " ") << coord(f.px(s.x[i])) << ',' << coord(f.py(s.y[i]));
            first = false;
        }
        os << "\"/>\n";
        os << "<text x=\"" << coord(kW - kRight - 4) << "\" y=\"" << coord(kTop + 14 * (k + 1))
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_histogram(const std::string& title, const std::vector<double>& values, int bins) {
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    double lo = INFINITY, hi = -INFINITY;
    for (double v : values)
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    widen(lo, hi);
    std::vector<int> counts(bins, 0);
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        const int b = std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
        ++counts[b];
    }
    const int top = std::max(1, *std::max_element(counts.begin(), counts.end()));
    const Frame2d f{lo, hi, 0.0, static_cast<double>(top)};
    std::ostringstream os;
    axes(os, title, "value", f);
    const double bw = (hi - lo) / bins;
    for (int b = 0; b < bins; ++b) {
        const double x0 = f.px(lo + b * bw), x1 = f.px(lo + (b + 1) * bw), y = f.py(counts[b]);
        os << "<rect x=\"" << coord(x0) << "\" y=\"" << coord(y) << "\" width=\"" << coord(x1 - x0)
           << "\" height=\"" << coord(f.py(0) - y) << "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace gsde
