#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gdgan/error.hpp"
#include "gdgan/harness.hpp"
#include "gdgan/png_io.hpp"

namespace gdgan {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSeedColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorKind::IoError, "cannot write " + path.string());
    f << text;
}

std::vector<std::pair<double, double>> read_roc_csv(const fs::path& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::MissingArtifact, "missing ROC artifact " + path.string());
    std::vector<std::pair<double, double>> pts;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string fpr, tpr;
        std::getline(ss, fpr, ',');
        std::getline(ss, tpr, ',');
        try {
            pts.emplace_back(std::stod(fpr), std::stod(tpr));
        } catch (const std::exception&) {
            raise(ErrorKind::CorruptFile, "bad ROC row in " + path.string());
        }
    }
    if (pts.empty()) raise(ErrorKind::CorruptFile, "empty ROC artifact " + path.string());
    return pts;
}

std::string roc_svg(const std::string& title, const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& curves) {
    const double left = 50, top = 30, size = 300;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"380\" height=\"380\" font-family=\"sans-serif\" "
         "font-size=\"11\">\n";
    s << "<rect width=\"380\" height=\"380\" fill=\"white\"/>\n";
    s << "<text x=\"190\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top + size << "\" x2=\"" << left + size << "\" y2=\"" << top
      << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        const double x = left + v * size, y = top + size - v * size;
        s << "<text x=\"" << x << "\" y=\"" << top + size + 14 << "\" text-anchor=\"middle\">" << fmt("%.2f", v)
          << "</text>\n";
        s << "<text x=\"" << left - 4 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt("%.2f", v)
          << "</text>\n";
    }
    s << "<text x=\"" << left + size / 2 << "\" y=\"" << top + size + 30
      << "\" text-anchor=\"middle\">False positive rate</text>\n";
    s << "<text transform=\"translate(14," << top + size / 2
      << ") rotate(-90)\" text-anchor=\"middle\">True positive rate</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const char* color = kSeedColors[c % std::size(kSeedColors)];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < curves[c].second.size(); ++i) {
            const auto [fpr, tpr] = curves[c].second[i];
            s << (i ? " " : "") << fmt("%.4f", left + fpr * size) << ',' << fmt("%.4f", top + size - tpr * size);
        }
        s << "\"/>\n";
        const double ly = top + size - 12 - 14.0 * static_cast<double>(curves.size() - 1 - c);
        s << "<line x1=\"" << left + size - 110 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + size - 92
          << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << left + size - 88 << "\" y=\"" << ly << "\">" << curves[c].first << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

// Places the grids side by side on a white canvas, top-aligned.
RawImage side_by_side(const std::vector<RawImage>& panels, int gap) {
    RawImage out;
    out.channels = 1;
    for (const auto& p : panels) {
        out.width += p.width;
        out.height = std::max(out.height, p.height);
    }
    out.width += gap * static_cast<int>(panels.size() + 1);
    out.height += 2 * gap;
    out.pixels.assign(static_cast<std::size_t>(out.width) * out.height, 255);
    int x0 = gap;
    for (const auto& p : panels) {
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
                const std::size_t src = (static_cast<std::size_t>(y) * p.width + x) * p.channels;
                out.pixels[static_cast<std::size_t>(y + gap) * out.width + x0 + x] = p.pixels[src];
            }
        x0 += p.width + gap;
    }
    return out;
}

}  // namespace

std::vector<fs::path> render_report(const EvaluationReport& report, const fs::path& artifact_root,
                                    const fs::path& out_dir) {
    if (report.cells.empty()) raise(ErrorKind::MissingArtifact, "report has no evaluated cells");
    fs::create_directories(out_dir);
    std::vector<fs::path> written;

    const fs::path json_path = out_dir / "report.json";
    write_file(json_path, report.to_json() + "\n");
    written.push_back(json_path);

    // Counts and AUC per strategy, mean ± SD over seeds.
    const std::vector<StrategySummary> summary = summarize(report.cells);
    std::ostringstream table;
    table << "strategy,cells,n_total_mean,n_total_sd,n_focus_mean,n_focus_sd,auc_mean,auc_sd\n";
    for (const auto& s : summary)
        table << s.strategy << ',' << s.cells << ',' << fmt("%.1f", s.mean_total) << ',' << fmt("%.1f", s.sd_total)
              << ',' << fmt("%.1f", s.mean_focus) << ',' << fmt("%.1f", s.sd_focus) << ','
              << fmt("%.4f", s.mean_auc) << ',' << fmt("%.4f", s.sd_auc) << '\n';
    const fs::path table_path = out_dir / "auc_table.csv";
    write_file(table_path, table.str());
    written.push_back(table_path);

    std::ostringstream cells;
    cells << "strategy,seed,split_hash,n_total,n_focus,focus_auc,roc_csv\n";
    for (const auto& c : report.cells)
        cells << c.strategy << ',' << c.seed << ',' << c.split_hash << ',' << c.n_total << ',' << c.n_focus << ','
              << fmt("%.6f", c.focus_auc) << ',' << c.per_label_roc.at(report.focus_label) << '\n';
    const fs::path cells_path = out_dir / "cells.csv";
    write_file(cells_path, cells.str());
    written.push_back(cells_path);

    // One ROC panel per strategy, seeds overlaid in run order.
    for (const auto& s : summary) {
        std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> curves;
        for (const auto& c : report.cells) {
            if (c.strategy != s.strategy) continue;
            const auto it = c.per_label_roc.find(report.focus_label);
            if (it == c.per_label_roc.end())
                raise(ErrorKind::MissingArtifact, "cell " + c.strategy + "/" + std::to_string(c.seed) +
                                                      " has no ROC for " + report.focus_label);
            curves.emplace_back("seed " + std::to_string(c.seed) + " (AUC " + fmt("%.3f", c.focus_auc) + ")",
                                read_roc_csv(artifact_root / it->second));
        }
        const fs::path svg = out_dir / ("roc_" + s.strategy + ".svg");
        write_file(svg, roc_svg(report.focus_label + ": " + s.strategy, curves));
        written.push_back(svg);
    }

    if (report.inception) {
        const InceptionBlock& inc = *report.inception;
        std::ostringstream t;
        t << "source,images,mean,sd\n";
        for (const auto& [name, r] : inc.sources)
            t << name << ',' << inc.images_per_source << ',' << fmt("%.4f", r.mean) << ',' << fmt("%.4f", r.sd)
              << '\n';
        t << "\na,b,t,dof,p\n";
        for (const auto& p : inc.tests) {
            if (p.defined)
                t << p.a << ',' << p.b << ',' << fmt("%.6g", p.result.t) << ',' << fmt("%.6g", p.result.dof) << ','
                  << fmt("%.6g", p.result.p_two_sided) << '\n';
            else
                t << p.a << ',' << p.b << ",,,\n";
        }
        const fs::path inc_path = out_dir / "inception_table.csv";
        write_file(inc_path, t.str());
        written.push_back(inc_path);

        std::vector<RawImage> panels;
        for (const char* name : {"real", "acgan", "gdgan"}) {
            const auto it = inc.sample_grids.find(name);
            if (it == inc.sample_grids.end()) continue;
            const fs::path p = artifact_root / it->second;
            if (!fs::exists(p)) raise(ErrorKind::MissingArtifact, "missing sample grid " + p.string());
            panels.push_back(read_png(p));
        }
        if (!panels.empty()) {
            const fs::path fig = out_dir / "samples.png";
            write_png(fig, side_by_side(panels, 8));
            written.push_back(fig);
        }
    }
    return written;
}

}  // namespace gdgan
