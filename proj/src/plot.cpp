#include "rmk/plot.hpp"

#include "rmk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace rmk {

namespace {

constexpr int kW = 640, kH = 420;
constexpr int kLeft = 64, kRight = 160, kTop = 36, kBottom = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

std::vector<std::string> write_accuracy_plots(const std::string& out_dir,
                                              const std::vector<SweepTable>& tables) {
    // series[attack][model] = ascending (severity, accuracy) points
    std::map<std::string, std::map<std::string, std::vector<std::pair<double, double>>>> series;
    for (const SweepTable& t : tables)
        for (const SweepRow& r : t.rows)
            if (r.severity) series[r.attack][t.model_id].push_back({*r.severity, r.bit_acc_mean});

    std::vector<std::string> written;
    for (auto& [attack, models] : series) {
        double xmin = 0.0, xmax = 0.0;
        bool first = true;
        for (auto& [id, pts] : models) {
            std::sort(pts.begin(), pts.end());
            for (const auto& [x, y] : pts) {
                if (first || x < xmin) xmin = x;
                if (first || x > xmax) xmax = x;
                first = false;
            }
        }
        if (first) continue;
        if (xmax == xmin) xmax = xmin + 1.0;

        const double px0 = kLeft, px1 = kW - kRight;
        const double py0 = kH - kBottom, py1 = kTop;  // y grows upward
        const auto X = [&](double v) { return px0 + (v - xmin) / (xmax - xmin) * (px1 - px0); };
        const auto Y = [&](double v) { return py0 + v * (py1 - py0); };  // accuracy in [0,1]

        std::string path = out_dir + "/accuracy_" + attack + ".svg";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot open " + path + " for writing");

        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
            << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"20\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"15\">bit accuracy vs " << attack
            << " severity</text>\n";

        // horizontal accuracy gridlines every 0.25
        for (int i = 0; i <= 4; ++i) {
            const double a = i * 0.25;
            out << "<line x1=\"" << num(px0) << "\" y1=\"" << num(Y(a)) << "\" x2=\"" << num(px1)
                << "\" y2=\"" << num(Y(a)) << "\" stroke=\"#dddddd\"/>\n";
            out << "<text x=\"" << num(px0 - 8) << "\" y=\"" << num(Y(a) + 4)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(a)
                << "</text>\n";
        }
        // x ticks on the union of plotted severities
        std::set<double> xs;
        for (const auto& [id, pts] : models)
            for (const auto& [x, y] : pts) xs.insert(x);
        for (double x : xs) {
            out << "<line x1=\"" << num(X(x)) << "\" y1=\"" << num(py0) << "\" x2=\"" << num(X(x))
                << "\" y2=\"" << num(py0 + 5) << "\" stroke=\"#555555\"/>\n";
            out << "<text x=\"" << num(X(x)) << "\" y=\"" << num(py0 + 18)
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(x)
                << "</text>\n";
        }
        out << "<line x1=\"" << num(px0) << "\" y1=\"" << num(py0) << "\" x2=\"" << num(px1)
            << "\" y2=\"" << num(py0) << "\" stroke=\"#000000\"/>\n";
        out << "<line x1=\"" << num(px0) << "\" y1=\"" << num(py0) << "\" x2=\"" << num(px0)
            << "\" y2=\"" << num(py1) << "\" stroke=\"#000000\"/>\n";

        int k = 0;
        for (const auto& [id, pts] : models) {
            const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (const auto& [x, y] : pts) out << num(X(x)) << "," << num(Y(y)) << " ";
            out << "\"/>\n";
            for (const auto& [x, y] : pts)
                out << "<circle cx=\"" << num(X(x)) << "\" cy=\"" << num(Y(y))
                    << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            const double ly = kTop + 16 + 18 * k;
            out << "<line x1=\"" << num(px1 + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
                << num(px1 + 34) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
                << "\" stroke-width=\"2\"/>\n";
            out << "<text x=\"" << num(px1 + 40) << "\" y=\"" << num(ly)
                << "\" font-family=\"sans-serif\" font-size=\"12\">" << id << "</text>\n";
            ++k;
        }
        out << "</svg>\n";
        if (!out) throw ValidationError("failed writing " + path);
        written.push_back(std::move(path));
    }
    return written;
}

} // namespace rmk
