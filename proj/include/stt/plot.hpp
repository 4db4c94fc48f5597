#pragma once

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "stt/sim.hpp"
#include "stt/trace_io.hpp"
#include "stt/types.hpp"
#include "stt/vec.hpp"

namespace stt {

namespace plotdetail {

inline constexpr const char* k_palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};
inline const char* color(std::size_t i) { return k_palette[i % 8]; }

inline void appendf(std::string& s, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  s += buf;
}

struct Box {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  void add(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  void pad() {
    if (x1 - x0 < 1e-9) {
      x0 -= 1.0;
      x1 += 1.0;
    }
    if (y1 - y0 < 1e-9) {
      y0 -= 1.0;
      y1 += 1.0;
    }
    const double mx = 0.05 * (x1 - x0), my = 0.05 * (y1 - y0);
    x0 -= mx;
    x1 += mx;
    y0 -= my;
    y1 += my;
  }
};

// Maps data coordinates into a pixel viewport, y flipped, aspect preserved
// for plan views.
struct Mapper {
  Box b;
  double w, h;
  bool square;
  double scale = 1.0, ox = 0.0, oy = 0.0;

  Mapper(Box box, double width, double height, bool keep_aspect)
      : b(box), w(width), h(height), square(keep_aspect) {
    b.pad();
    const double sx = w / (b.x1 - b.x0), sy = h / (b.y1 - b.y0);
    if (square) {
      scale = std::min(sx, sy);
      ox = (w - scale * (b.x1 - b.x0)) / 2.0;
      oy = (h - scale * (b.y1 - b.y0)) / 2.0;
    }
  }
  double px(double x) const {
    return square ? ox + scale * (x - b.x0) : (x - b.x0) / (b.x1 - b.x0) * w;
  }
  double py(double y) const {
    return square ? h - (oy + scale * (y - b.y0)) : h - (y - b.y0) / (b.y1 - b.y0) * h;
  }
  double pr(double r) const { return square ? scale * r : r; }
};

inline void polyline(std::string& s, const std::vector<double>& xy, const Mapper& m,
                     const char* col, double width, const char* dash = nullptr) {
  s += "<polyline fill=\"none\" stroke=\"";
  s += col;
  appendf(s, "\" stroke-width=\"%.2f\"", width);
  if (dash != nullptr) appendf(s, " stroke-dasharray=\"%s\"", dash);
  s += " points=\"";
  for (std::size_t i = 0; i + 1 < xy.size(); i += 2)
    appendf(s, "%.2f,%.2f ", m.px(xy[i]), m.py(xy[i + 1]));
  s += "\"/>\n";
}

inline void circle(std::string& s, double cx, double cy, double r, const Mapper& m,
                   const char* col, double width, double fill_opacity) {
  appendf(s,
          "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" stroke=\"%s\" stroke-width=\"%.2f\" "
          "fill=\"%s\" fill-opacity=\"%.3f\"/>\n",
          m.px(cx), m.py(cy), m.pr(r), col, width, fill_opacity > 0 ? col : "none",
          fill_opacity);
}

inline void text(std::string& s, double x, double y, const std::string& msg, int size,
                 const char* col = "#333") {
  appendf(s, "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"%d\" fill=\"%s\">",
          x, y, size, col);
  s += msg;
  s += "</text>\n";
}

struct Series {
  std::string label;
  const char* col;
  std::vector<double> values;  // aligned with the shared time grid
};

// Simple time-series chart: framed viewport, min/max y labels, one polyline
// per series, legend along the top.
inline std::string line_chart(const std::string& title, double w, double h,
                              const std::vector<double>& t, const std::vector<Series>& series,
                              std::size_t stride) {
  std::string s;
  Box b;
  for (const double tv : t) b.add(tv, 0.0);
  double ymin = 1e300, ymax = -1e300;
  for (const auto& sr : series)
    for (std::size_t i = 0; i < sr.values.size(); i += stride) {
      ymin = std::min(ymin, sr.values[i]);
      ymax = std::max(ymax, sr.values[i]);
    }
  if (ymin > ymax) {
    ymin = 0;
    ymax = 1;
  }
  b.add(t.empty() ? 0.0 : t.front(), ymin);
  b.add(t.empty() ? 1.0 : t.back(), ymax);
  Mapper m(b, w, h, false);

  appendf(s, "<rect x=\"0\" y=\"0\" width=\"%.0f\" height=\"%.0f\" fill=\"none\" stroke=\"#999\"/>\n",
          w, h);
  text(s, 4, -6, title, 13);
  double lx = 120;
  for (const auto& sr : series) {
    if (lx > w - 60) break;
    text(s, lx, -6, sr.label, 11, sr.col);
    lx += 10.0 * static_cast<double>(sr.label.size()) + 14;
  }
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", ymax);
  text(s, 4, 12, buf, 10, "#666");
  std::snprintf(buf, sizeof(buf), "%.4g", ymin);
  text(s, 4, h - 4, buf, 10, "#666");
  std::snprintf(buf, sizeof(buf), "t=%.4g", t.empty() ? 0.0 : t.back());
  text(s, w - 60, h - 4, buf, 10, "#666");

  for (const auto& sr : series) {
    std::vector<double> xy;
    xy.reserve(2 * (sr.values.size() / stride + 2));
    for (std::size_t i = 0; i < sr.values.size(); i += stride) {
      xy.push_back(t[i]);
      xy.push_back(sr.values[i]);
    }
    if (!sr.values.empty() && (sr.values.size() - 1) % stride != 0) {
      xy.push_back(t.back());
      xy.push_back(sr.values.back());
    }
    polyline(s, xy, m, sr.col, 1.4);
  }
  return s;
}

}  // namespace plotdetail

// Renders a self-contained SVG summary of a run: the center trajectories
// with tube outlines at a few time stamps (projected to a plane when the
// workspace has more than two dimensions), the radius and containment-error
// histories, and the social weights for multi-agent runs.
inline std::string render_plot_svg(const SimTrace& tr, const Scenario& sc,
                                   std::vector<double> stamps = {}) {
  using namespace plotdetail;
  const std::size_t rows = tr.rows();
  const std::size_t n_a = tr.agents.size();
  const std::size_t n_o = tr.obstacle_ids.size();
  const auto dim = static_cast<std::size_t>(tr.dim);
  const std::size_t stride = std::max<std::size_t>(1, rows / 1500);

  if (stamps.empty() && rows > 0) {
    for (int i = 0; i < 4; ++i)
      stamps.push_back(tr.t[(rows - 1) * static_cast<std::size_t>(i) / 3]);
  }
  const auto row_at = [&](double t) {
    std::size_t best = 0;
    double err = 1e300;
    for (std::size_t r = 0; r < rows; ++r) {
      const double e = std::abs(tr.t[r] - t);
      if (e < err) {
        err = e;
        best = r;
      }
    }
    return best;
  };

  // Projection to the drawing plane.
  const auto proj = [&](std::span<const double> p, double& x, double& y) {
    if (dim == 1) {
      x = p[0];
      y = 0.0;
    } else if (dim == 2) {
      x = p[0];
      y = p[1];
    } else {
      x = (p[0] - p[1]) / std::sqrt(2.0);
      y = (p[0] + p[1] - 2.0 * p[2]) / std::sqrt(6.0);
    }
  };

  const double W = 800;
  std::string body;
  double ytop = 30;

  // Plan panel (skipped for one-dimensional runs, which get time series only).
  if (dim >= 2 && rows > 0) {
    const double H = 520;
    Box b;
    double x, y;
    for (std::size_t a = 0; a < n_a; ++a)
      for (std::size_t r = 0; r < rows; r += stride) {
        proj(std::span<const double>(tr.agents[a].sigma).subspan(r * dim, dim), x, y);
        b.add(x, y);
      }
    for (const double st : stamps) {
      const std::size_t r = row_at(st);
      for (std::size_t a = 0; a < n_a; ++a) {
        proj(std::span<const double>(tr.agents[a].sigma).subspan(r * dim, dim), x, y);
        b.add(x - tr.agents[a].rho[r], y - tr.agents[a].rho[r]);
        b.add(x + tr.agents[a].rho[r], y + tr.agents[a].rho[r]);
      }
      for (std::size_t j = 0; j < n_o; ++j) {
        proj(std::span<const double>(tr.obs_center).subspan((r * n_o + j) * dim, dim), x, y);
        const double ro = tr.obs_radius[r * n_o + j];
        b.add(x - ro, y - ro);
        b.add(x + ro, y + ro);
      }
    }
    Mapper m(b, W, H, true);

    std::string p;
    appendf(p, "<g transform=\"translate(20,%.0f)\">\n", ytop);
    appendf(p, "<rect x=\"0\" y=\"0\" width=\"%.0f\" height=\"%.0f\" fill=\"none\" stroke=\"#999\"/>\n",
            W, H);
    text(p, 4, -6, dim == 2 ? "center trajectories" : "center trajectories (projected)", 13);

    for (const double st : stamps) {
      const std::size_t r = row_at(st);
      for (std::size_t j = 0; j < n_o; ++j) {
        proj(std::span<const double>(tr.obs_center).subspan((r * n_o + j) * dim, dim), x, y);
        circle(p, x, y, tr.obs_radius[r * n_o + j], m, "#777", 1.0, 0.25);
      }
    }
    for (std::size_t a = 0; a < n_a; ++a) {
      std::vector<double> xy;
      for (std::size_t r = 0; r < rows; r += stride) {
        proj(std::span<const double>(tr.agents[a].sigma).subspan(r * dim, dim), x, y);
        xy.push_back(x);
        xy.push_back(y);
      }
      polyline(p, xy, m, color(a), 1.6);
      for (const double st : stamps) {
        const std::size_t r = row_at(st);
        proj(std::span<const double>(tr.agents[a].sigma).subspan(r * dim, dim), x, y);
        circle(p, x, y, tr.agents[a].rho[r], m, color(a), 1.0, 0.07);
      }
      proj(sc.agents[a].start_point, x, y);
      circle(p, x, y, 0.0, m, color(a), 1.0, 1.0);
      appendf(p, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", m.px(x), m.py(y),
              color(a));
      proj(sc.agents[a].target_point, x, y);
      appendf(p,
              "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"none\" stroke=\"%s\" "
              "stroke-dasharray=\"4,3\"/>\n",
              m.px(x), m.py(y), m.pr(sc.agents[a].target_radius), color(a));
      text(p, m.px(x) + 4, m.py(y) - 4, sc.agents[a].id, 11, color(a));
    }
    p += "</g>\n";
    body += p;
    ytop += H + 40;
  }

  // Radius and containment-error histories.
  {
    std::vector<Series> rho_series, e1_series;
    for (std::size_t a = 0; a < n_a; ++a) {
      rho_series.push_back({tr.agent_ids[a], color(a), tr.agents[a].rho});
      e1_series.push_back({tr.agent_ids[a], color(a), tr.agents[a].e1});
    }
    appendf(body, "<g transform=\"translate(20,%.0f)\">\n", ytop);
    body += line_chart("tube radius", W, 160, tr.t, rho_series, stride);
    body += "</g>\n";
    ytop += 200;
    appendf(body, "<g transform=\"translate(20,%.0f)\">\n", ytop);
    body += line_chart("containment error e1", W, 160, tr.t, e1_series, stride);
    body += "</g>\n";
    ytop += 200;
  }

  // Social weights for multi-agent runs (first few pairs only).
  if (n_a >= 2) {
    std::vector<Series> phi_series;
    for (std::size_t k = 0; k < n_a && phi_series.size() < 8; ++k)
      for (std::size_t l = 0; l < n_a && phi_series.size() < 8; ++l) {
        if (k == l) continue;
        Series sr;
        sr.label = tr.agent_ids[k] + ">" + tr.agent_ids[l];
        sr.col = color(phi_series.size());
        sr.values.resize(rows);
        for (std::size_t r = 0; r < rows; ++r)
          sr.values[r] = tr.phi[r * n_a * n_a + k * n_a + l];
        phi_series.push_back(std::move(sr));
      }
    appendf(body, "<g transform=\"translate(20,%.0f)\">\n", ytop);
    body += line_chart("social weights", W, 160, tr.t, phi_series, stride);
    body += "</g>\n";
    ytop += 200;
  }

  std::string svg;
  appendf(svg,
          "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"840\" height=\"%.0f\" "
          "viewBox=\"0 0 840 %.0f\">\n",
          ytop + 10, ytop + 10);
  appendf(svg, "<rect width=\"840\" height=\"%.0f\" fill=\"white\"/>\n", ytop + 10);
  svg += body;
  svg += "</svg>\n";
  return svg;
}

inline void write_plot_svg(const std::string& path, const SimTrace& tr, const Scenario& sc,
                           const std::vector<double>& stamps = {}) {
  detail::write_file(path, render_plot_svg(tr, sc, stamps));
}

}  // namespace stt
