#include "segfair/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "segfair/error.hpp"
#include "segfair/seg_metrics.hpp"

namespace segfair {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 60;

const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3",
                          "#e7298a", "#66a61e", "#e6ab02"};

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    double px_lo = 0.0, px_hi = 1.0;

    double to_px(double v) const {
        if (hi == lo) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }

    std::vector<double> ticks() const {
        if (hi == lo) return {lo};
        const double raw_step = (hi - lo) / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
        double step = mag;
        for (double mult : {1.0, 2.0, 5.0, 10.0})
            if (mag * mult >= raw_step) { step = mag * mult; break; }
        std::vector<double> t;
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step)
            t.push_back(v);
        return t;
    }
};

Axis fit_axis(double lo, double hi, double px_lo, double px_hi) {
    if (lo == hi) { lo -= 0.5; hi += 0.5; }
    const double pad = 0.05 * (hi - lo);
    return Axis{lo - pad, hi + pad, px_lo, px_hi};
}

class Canvas {
public:
    Canvas(const std::string& title, bool deterministic) {
        os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
            << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
            << kHeight << "\">\n";
        if (!deterministic) {
            char stamp[64];
            const std::time_t now = std::time(nullptr);
            std::tm tm_utc{};
            gmtime_r(&now, &tm_utc);
            std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
            os_ << "<!-- generated " << stamp << " -->\n";
        }
        os_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        text(kWidth / 2.0, 24, xml_escape(title), 16, "middle", "#000000", true);
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, const std::string& dash = "") {
        os_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
            << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke
            << "\" stroke-width=\"" << num(width) << "\"";
        if (!dash.empty()) os_ << " stroke-dasharray=\"" << dash << "\"";
        os_ << "/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill,
                double opacity = 1.0) {
        os_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\""
            << num(r) << "\" fill=\"" << fill << "\"";
        if (opacity < 1.0) os_ << " fill-opacity=\"" << num(opacity) << "\"";
        os_ << "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke) {
        os_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
            << num(w) << "\" height=\"" << num(h) << "\" fill=\"" << fill
            << "\" stroke=\"" << stroke << "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& stroke, double width = 1.5) {
        os_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
            << num(width) << "\" points=\"";
        for (const auto& [x, y] : pts) os_ << num(x) << "," << num(y) << " ";
        os_ << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, int size,
              const std::string& anchor, const std::string& fill, bool bold = false,
              double rotate = 0.0) {
        os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\""
            << size << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor
            << "\" fill=\"" << fill << "\"";
        if (bold) os_ << " font-weight=\"bold\"";
        if (rotate != 0.0)
            os_ << " transform=\"rotate(" << num(rotate) << " " << num(x) << " "
                << num(y) << ")\"";
        os_ << ">" << s << "</text>\n";
    }

    void axes(const Axis& x, const Axis& y, const std::string& xlabel,
              const std::string& ylabel) {
        const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
        const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
        line(x0, y0, x1, y0, "#000000");
        line(x0, y0, x0, y1, "#000000");
        for (double t : x.ticks()) {
            const double px = x.to_px(t);
            line(px, y0, px, y0 + 5, "#000000");
            text(px, y0 + 20, num_tick(t), 11, "middle", "#000000");
        }
        for (double t : y.ticks()) {
            const double py = y.to_px(t);
            line(x0 - 5, py, x0, py, "#000000");
            text(x0 - 8, py + 4, num_tick(t), 11, "end", "#000000");
        }
        text((x0 + x1) / 2.0, kHeight - 18, xml_escape(xlabel), 13, "middle", "#000000");
        text(18, (y0 + y1) / 2.0, xml_escape(ylabel), 13, "middle", "#000000", false,
             -90.0);
    }

    void save(const std::string& path) {
        os_ << "</svg>\n";
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for writing: " + path);
        f << os_.str();
        if (!f) throw IoError("write failure: " + path);
    }

private:
    static std::string num_tick(double v) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return buf;
    }

    std::ostringstream os_;
};

std::map<std::string, std::string> group_colors(const std::vector<std::string>& groups) {
    std::vector<std::string> sorted = groups;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::map<std::string, std::string> colors;
    for (std::size_t i = 0; i < sorted.size(); ++i)
        colors[sorted[i]] = kPalette[i % std::size(kPalette)];
    return colors;
}

void legend(Canvas& canvas, const std::map<std::string, std::string>& colors) {
    double y = kMarginTop + 6;
    for (const auto& [group, color] : colors) {
        canvas.circle(kWidth - kMarginRight - 120, y, 4, color);
        canvas.text(kWidth - kMarginRight - 110, y + 4, xml_escape(group), 12, "start",
                    "#000000");
        y += 18;
    }
}

} // namespace

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<ScatterPoint>& points,
                       const std::optional<FitLine>& fit, bool deterministic) {
    if (points.empty()) throw ArgError("scatter figure needs points");
    double xlo = points[0].x, xhi = points[0].x, ylo = points[0].y, yhi = points[0].y;
    std::vector<std::string> groups;
    for (const auto& p : points) {
        xlo = std::min(xlo, p.x);
        xhi = std::max(xhi, p.x);
        ylo = std::min(ylo, p.y);
        yhi = std::max(yhi, p.y);
        groups.push_back(p.group);
    }
    const Axis ax = fit_axis(xlo, xhi, kMarginLeft, kWidth - kMarginRight);
    const Axis ay = fit_axis(ylo, yhi, kHeight - kMarginBottom, kMarginTop);

    Canvas canvas(title, deterministic);
    canvas.axes(ax, ay, xlabel, ylabel);
    const auto colors = group_colors(groups);
    for (const auto& p : points)
        canvas.circle(ax.to_px(p.x), ay.to_px(p.y), 3.0, colors.at(p.group), 0.6);
    if (fit) {
        const double y_at_lo = fit->intercept + fit->slope * ax.lo;
        const double y_at_hi = fit->intercept + fit->slope * ax.hi;
        canvas.line(ax.to_px(ax.lo), ay.to_px(y_at_lo), ax.to_px(ax.hi),
                    ay.to_px(y_at_hi), "#d62728", 2.0);
        if (!fit->annotation.empty())
            canvas.text(kMarginLeft + 10, kMarginTop + 16, xml_escape(fit->annotation),
                        13, "start", "#d62728");
    }
    if (colors.size() > 1) legend(canvas, colors);
    canvas.save(path);
}

void write_box_svg(const std::string& path, const std::string& title,
                   const std::string& ylabel,
                   const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                   bool deterministic) {
    if (groups.empty()) throw ArgError("box figure needs groups");
    double ylo = groups[0].second.at(0), yhi = ylo;
    for (const auto& [_, values] : groups)
        for (double v : values) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    const Axis ay = fit_axis(ylo, yhi, kHeight - kMarginBottom, kMarginTop);

    Canvas canvas(title, deterministic);
    const Axis ax{0.0, static_cast<double>(groups.size()),
                  static_cast<double>(kMarginLeft),
                  static_cast<double>(kWidth - kMarginRight)};
    canvas.axes(Axis{0, 1, -100, -100}, ay, "", ylabel); // y axis only
    const double slot = (ax.px_hi - ax.px_lo) / static_cast<double>(groups.size());
    const double box_w = slot * 0.45;

    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& [label, values] = groups[i];
        const double cx = ax.px_lo + (static_cast<double>(i) + 0.5) * slot;
        const double q1 = percentile(values, 0.25);
        const double q2 = percentile(values, 0.50);
        const double q3 = percentile(values, 0.75);
        const double iqr = q3 - q1;
        double wlo = q1, whi = q3;
        for (double v : values) {
            if (v >= q1 - 1.5 * iqr) wlo = std::min(wlo, v);
            if (v <= q3 + 1.5 * iqr) whi = std::max(whi, v);
        }
        const std::string color = kPalette[i % std::size(kPalette)];
        canvas.line(cx, ay.to_px(wlo), cx, ay.to_px(q1), "#000000");
        canvas.line(cx, ay.to_px(q3), cx, ay.to_px(whi), "#000000");
        canvas.line(cx - box_w / 4, ay.to_px(wlo), cx + box_w / 4, ay.to_px(wlo), "#000000");
        canvas.line(cx - box_w / 4, ay.to_px(whi), cx + box_w / 4, ay.to_px(whi), "#000000");
        canvas.rect(cx - box_w / 2, ay.to_px(q3), box_w,
                    ay.to_px(q1) - ay.to_px(q3), color, "#000000");
        canvas.line(cx - box_w / 2, ay.to_px(q2), cx + box_w / 2, ay.to_px(q2),
                    "#000000", 2.0);
        for (double v : values)
            if (v < q1 - 1.5 * iqr || v > q3 + 1.5 * iqr)
                canvas.circle(cx, ay.to_px(v), 2.0, "#555555", 0.8);
        canvas.text(cx, kHeight - kMarginBottom + 20, xml_escape(label), 12, "middle",
                    "#000000");
    }
    canvas.save(path);
}

void write_density_svg(const std::string& path, const std::string& title,
                       const std::string& xlabel,
                       const std::vector<std::pair<std::string, Histogram>>& groups,
                       bool deterministic) {
    if (groups.empty()) throw ArgError("density figure needs groups");
    double xlo = groups[0].second.lo, xhi = groups[0].second.hi, yhi = 0.0;
    for (const auto& [_, h] : groups) {
        xlo = std::min(xlo, h.lo);
        xhi = std::max(xhi, h.hi);
        for (double d : h.density) yhi = std::max(yhi, d);
    }
    const Axis ax = fit_axis(xlo, xhi, kMarginLeft, kWidth - kMarginRight);
    const Axis ay = fit_axis(0.0, yhi, kHeight - kMarginBottom, kMarginTop);

    Canvas canvas(title, deterministic);
    canvas.axes(ax, ay, xlabel, "density");
    std::vector<std::string> names;
    for (const auto& [name, _] : groups) names.push_back(name);
    const auto colors = group_colors(names);
    for (const auto& [name, h] : groups) {
        const double width = (h.hi - h.lo) / static_cast<double>(h.density.size());
        std::vector<std::pair<double, double>> pts;
        pts.emplace_back(ax.to_px(h.lo), ay.to_px(0.0));
        for (std::size_t b = 0; b < h.density.size(); ++b) {
            const double center = h.lo + (static_cast<double>(b) + 0.5) * width;
            pts.emplace_back(ax.to_px(center), ay.to_px(h.density[b]));
        }
        pts.emplace_back(ax.to_px(h.hi), ay.to_px(0.0));
        canvas.polyline(pts, colors.at(name), 2.0);
    }
    if (colors.size() > 1) legend(canvas, colors);
    canvas.save(path);
}

} // namespace segfair
