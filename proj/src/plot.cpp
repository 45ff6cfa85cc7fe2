#include "ball3d/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "ball3d/errors.hpp"

namespace ball3d {
namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Panel {
    double x0, y0, width, height;  // pixel box
    double lo_a, hi_a, lo_b, hi_b; // data ranges
    int axis_b;                    // 1 = y, 2 = z

    double px(double a) const { return x0 + (a - lo_a) / (hi_a - lo_a) * width; }
    double py(double b) const { return y0 + height - (b - lo_b) / (hi_b - lo_b) * height; }
};

void pad(double& lo, double& hi) {
    if (hi - lo < 1e-6) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double margin = 0.05 * (hi - lo);
    lo -= margin;
    hi += margin;
}

}  // namespace

std::string render_trajectory_svg(const std::vector<PlotSeries>& series, const std::string& title) {
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300, lo_z = 1e300, hi_z = -1e300;
    bool any = false;
    for (const PlotSeries& s : series) {
        for (const Vec3& p : s.points) {
            any = true;
            lo_x = std::min(lo_x, p.x());
            hi_x = std::max(hi_x, p.x());
            lo_y = std::min(lo_y, p.y());
            hi_y = std::max(hi_y, p.y());
            lo_z = std::min(lo_z, p.z());
            hi_z = std::max(hi_z, p.z());
        }
    }
    if (!any) throw InvalidArgument("nothing to plot");
    pad(lo_x, hi_x);
    pad(lo_y, hi_y);
    pad(lo_z, hi_z);

    const double w = 800.0;
    const Panel side{60.0, 50.0, w - 100.0, 220.0, lo_x, hi_x, lo_y, hi_y, 1};
    const Panel top{60.0, 330.0, w - 100.0, 300.0, lo_x, hi_x, lo_z, hi_z, 2};

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"680\" viewBox=\"0 0 " << w
        << " 680\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << escape(title) << "</text>\n";
    for (const Panel* p : {&side, &top}) {
        const char* name = p->axis_b == 1 ? "side view (x, y)" : "top view (x, z)";
        out << "<g class=\"panel\">\n"
            << "<rect x=\"" << fmt(p->x0) << "\" y=\"" << fmt(p->y0) << "\" width=\"" << fmt(p->width)
            << "\" height=\"" << fmt(p->height) << "\" fill=\"none\" stroke=\"#888\"/>\n"
            << "<text x=\"" << fmt(p->x0) << "\" y=\"" << fmt(p->y0 - 6) << "\" font-family=\"sans-serif\" font-size=\"12\">"
            << name << "  x: [" << fmt(p->lo_a) << ", " << fmt(p->hi_a) << "] m  " << (p->axis_b == 1 ? "y" : "z")
            << ": [" << fmt(p->lo_b) << ", " << fmt(p->hi_b) << "] m</text>\n";
        for (const PlotSeries& s : series) {
            if (s.points.empty()) continue;
            out << "<polyline fill=\"none\" stroke=\"" << escape(s.color) << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.points.size(); ++i) {
                const Vec3& q = s.points[i];
                out << (i ? " " : "") << fmt(p->px(q.x())) << ',' << fmt(p->py(q[p->axis_b]));
            }
            out << "\"><title>" << escape(s.label) << "</title></polyline>\n";
        }
        out << "</g>\n";
    }
    double ly = 660.0;
    double lx = 60.0;
    for (const PlotSeries& s : series) {
        out << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 20) << "\" y2=\"" << fmt(ly)
            << "\" stroke=\"" << escape(s.color) << "\" stroke-width=\"2\"/>"
            << "<text x=\"" << fmt(lx + 26) << "\" y=\"" << fmt(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.label) << "</text>\n";
        lx += 160.0;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace ball3d
