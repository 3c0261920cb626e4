#include "sgcat/output.hpp"

#include "sgcat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace sgcat {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

std::string xml_escape(const std::string& s) {
    std::string r;
    r.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': r += "&amp;"; break;
            case '<': r += "&lt;"; break;
            case '>': r += "&gt;"; break;
            case '"': r += "&quot;"; break;
            default: r += c;
        }
    }
    return r;
}

struct Ticks {
    std::vector<double> values;
};

// Round tick spacing to 1/2/5 * 10^k covering [lo, hi] with ~n intervals.
Ticks nice_ticks(double lo, double hi, int n) {
    Ticks t;
    if (!(hi > lo)) {
        t.values.push_back(lo);
        return t;
    }
    const double raw = (hi - lo) / n;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
    const double first = std::ceil(lo / step) * step;
    for (double v = first; v <= hi + 0.5 * step; v += step) {
        t.values.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    }
    return t;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out = open_out(path);
    out << "t_s,z_um,v_um_per_s,a_um_per_s2,spin,stage\n";
    for (const TrajectorySample& s : traj.samples) {
        out << format_double(s.t) << ',' << format_double(m_to_um(s.z)) << ','
            << format_double(m_to_um(s.v)) << ',' << format_double(m_to_um(s.a)) << ','
            << traj.spin_z << ',' << traj.stage_id << '\n';
    }
    finish(out, path);
}

void write_paired_series_csv(const std::filesystem::path& path, const Series& dz,
                             const Series& dv) {
    if (dz.size() != dv.size())
        throw InvalidParameter("paired series CSV needs equal-length dz and dv");
    std::ofstream out = open_out(path);
    out << "t_s,dz_um,dv_um_per_s\n";
    for (std::size_t i = 0; i < dz.size(); ++i) {
        out << format_double(dz[i].t) << ',' << format_double(m_to_um(dz[i].value)) << ','
            << format_double(m_to_um(dv[i].value)) << '\n';
    }
    finish(out, path);
}

void write_budget_csv(const std::filesystem::path& path,
                      const std::vector<CoherenceBudget>& rows) {
    std::ofstream out = open_out(path);
    out << "mass_kg,spin,stage,tol_z,tol_p,A_s2,t_s,eta\n";
    for (const CoherenceBudget& r : rows) {
        out << format_double(r.mass) << ',' << r.spin_z << ',' << r.stage << ','
            << format_double(r.tol_z) << ',' << format_double(r.tol_p) << ','
            << format_double(r.A) << ',' << format_double(r.t) << ',' << format_double(r.eta)
            << '\n';
    }
    finish(out, path);
}

void write_budget_text(const std::filesystem::path& path,
                       const std::vector<CoherenceBudget>& rows) {
    std::ofstream out = open_out(path);
    out << "Magnetic-gradient accuracy budget\n";
    std::string stage;
    for (const CoherenceBudget& r : rows) {
        if (r.stage != stage) {
            stage = r.stage;
            char head[160];
            std::snprintf(head, sizeof(head),
                          "\nstage %s  (eta = %.6g T/m^2, epsilon = %g)\n"
                          "  %-10s %-5s %-12s %-12s %-12s %-10s\n",
                          stage.c_str(), r.eta, r.epsilon, "mass/kg", "S_z", "(dEta/eta)_z",
                          "(dEta/eta)_p", "A/s^-2", "t/s");
            out << head;
        }
        char line[160];
        std::snprintf(line, sizeof(line), "  %-10.3g %-5d %-12.2g %-12.2g %-12.6g %-10.6g\n",
                      r.mass, r.spin_z, r.tol_z, r.tol_p, r.A, r.t);
        out << line;
    }
    finish(out, path);
}

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series) {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const SvgSeries& s : series) {
        if (s.data == nullptr) throw InvalidParameter("svg series has no data");
        for (const SeriesPoint& p : *s.data) {
            x_lo = std::min(x_lo, p.t);
            x_hi = std::max(x_hi, p.t);
            y_lo = std::min(y_lo, p.value);
            y_hi = std::max(y_hi, p.value);
        }
    }
    if (!(x_lo <= x_hi)) throw InvalidParameter("svg plot needs at least one point");
    if (x_hi == x_lo) x_hi = x_lo + 1.0;
    if (y_hi == y_lo) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    const double y_pad = 0.05 * (y_hi - y_lo);
    y_lo -= y_pad;
    y_hi += y_pad;

    const double width = 800, height = 500;
    const double ml = 80, mr = 24, mt = 44, mb = 56;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double y) { return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title) << "</text>\n";

    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double v : nice_ticks(x_lo, x_hi, 6).values) {
        const double x = px(v);
        svg << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x << "\" y2=\""
            << mt + ph << "\" stroke=\"#ddd\"/>\n"
            << "<text x=\"" << x << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">"
            << tick_label(v) << "</text>\n";
    }
    for (double v : nice_ticks(y_lo, y_hi, 6).values) {
        const double y = py(v);
        svg << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + pw << "\" y2=\""
            << y << "\" stroke=\"#ddd\"/>\n"
            << "<text x=\"" << ml - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
            << tick_label(v) << "</text>\n";
    }
    svg << "</g>\n";

    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (const SvgSeries& s : series) {
        if (s.data->empty()) continue;
        svg << "<polyline fill=\"none\" stroke=\"" << xml_escape(s.color)
            << "\" stroke-width=\"1.5\" points=\"";
        for (const SeriesPoint& p : *s.data) svg << px(p.t) << ',' << py(p.value) << ' ';
        svg << "\"/>\n";
    }

    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << xml_escape(x_label) << "</text>\n"
        << "<text x=\"18\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
        << mt + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

    double ly = mt + 14;
    for (const SvgSeries& s : series) {
        svg << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly - 4 << "\" x2=\""
            << ml + pw - 126 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << xml_escape(s.color)
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << ml + pw - 120 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.label)
            << "</text>\n";
        ly += 18;
    }
    svg << "</svg>\n";

    std::ofstream out = open_out(path);
    out << svg.str();
    finish(out, path);
}

}  // namespace sgcat
