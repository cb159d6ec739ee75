#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "qpop/errors.hpp"
#include "qpop/harness/csv.hpp"
#include "qpop/odes.hpp"

namespace qpop::harness {

namespace svg {

constexpr double width = 800, height = 500;
constexpr double left = 70, right = 770, top = 40, bottom = 440;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

/// Tick positions at 1, 2 or 5 times a power of ten, about `target` of them.
inline std::vector<double> ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0})
    if (f * mag >= raw) {
      step = f * mag;
      break;
    }
  std::vector<double> out;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * step; v += step) out.push_back(v);
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return left + (x - x0) / (x1 - x0) * (right - left); }
  double py(double y) const { return bottom - (y - y0) / (y1 - y0) * (bottom - top); }
};

inline std::string header(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  if (!title.empty())
    s += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         escape(title) + "</text>\n";
  return s;
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s = "<g font-family=\"sans-serif\" font-size=\"12\" stroke=\"none\" fill=\"black\">\n";
  for (double x : ticks(f.x0, f.x1)) {
    s += "<line x1=\"" + num(f.px(x)) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(f.px(x)) + "\" y2=\"" +
         num(bottom + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(bottom + 20) + "\" text-anchor=\"middle\">" + label(x) +
         "</text>\n";
  }
  for (double y : ticks(f.y0, f.y1, 5)) {
    s += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(f.py(y)) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(f.py(y)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(left - 8) + "\" y=\"" + num(f.py(y) + 4) + "\" text-anchor=\"end\">" + label(y) +
         "</text>\n";
  }
  s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(right - left) + "\" height=\"" +
       num(bottom - top) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num((left + right) / 2) + "\" y=\"" + num(bottom + 45) + "\" text-anchor=\"middle\">" +
       escape(xlabel) + "</text>\n";
  s += "<text x=\"18\" y=\"" + num((top + bottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       num((top + bottom) / 2) + ")\">" + escape(ylabel) + "</text>\n";
  s += "</g>\n";
  return s;
}

struct Style {
  const char* column;
  const char* name;
  const char* color;
  const char* dash;  // empty for solid
};

inline const std::vector<Style>& styles() {
  static const std::vector<Style> s{{"o1_abm_mean", "ABM mean", "#1f77b4", ""},
                                    {"o1_cem", "CEM", "#d62728", "8,5"},
                                    {"o1_rem", "REM", "#2ca02c", "2,4"},
                                    {"o1_ode", "ODE", "#9467bd", "10,4,2,4"}};
  return s;
}

}  // namespace svg

/// Line chart of o_1 over time from a table in the trajectories schema: the
/// ABM mean with a translucent one-std band, one polyline per model column.
/// Output depends only on the table, so equal inputs give equal bytes.
inline std::string trajectory_svg(const Table& table, const std::string& title = "") {
  if (table.rows.empty()) throw ConfigError("plot: no data rows");
  const auto tcol = table.find("t");
  if (!tcol) throw ConfigError("plot: missing 't' column");
  const svg::Frame f{*table.rows.front()[*tcol], *table.rows.back()[*tcol], 0.0, 1.0};
  const svg::Frame frame = f.x1 > f.x0 ? f : svg::Frame{f.x0, f.x0 + 1.0, 0.0, 1.0};
  auto clamp01 = [](double y) { return std::clamp(y, 0.0, 1.0); };

  std::string s = svg::header(title);
  const auto mean = table.find("o1_abm_mean");
  const auto sd = table.find("o1_abm_std");
  if (mean && sd) {
    std::string upper, lower;
    std::vector<std::string> lows;
    for (const auto& r : table.rows) {
      if (!r[*mean] || !r[*sd]) continue;
      const double x = frame.px(*r[*tcol]);
      upper += svg::num(x) + "," + svg::num(frame.py(clamp01(*r[*mean] + *r[*sd]))) + " ";
      lows.push_back(svg::num(x) + "," + svg::num(frame.py(clamp01(*r[*mean] - *r[*sd]))));
    }
    for (auto it = lows.rbegin(); it != lows.rend(); ++it) lower += *it + " ";
    if (!lows.empty())
      s += "<polygon points=\"" + upper + lower + "\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
  }

  std::vector<const svg::Style*> drawn;
  for (const auto& st : svg::styles()) {
    const auto col = table.find(st.column);
    if (!col || !table.has_values(*col)) continue;
    drawn.push_back(&st);
    // Gaps in the column split the line.
    std::string pts;
    auto flush = [&] {
      if (pts.empty()) return;
      s += std::string("<polyline fill=\"none\" stroke=\"") + st.color + "\" stroke-width=\"2\"" +
           (*st.dash ? std::string(" stroke-dasharray=\"") + st.dash + "\"" : "") + " points=\"" + pts + "\"/>\n";
      pts.clear();
    };
    for (const auto& r : table.rows) {
      if (!r[*col]) {
        flush();
        continue;
      }
      pts += svg::num(frame.px(*r[*tcol])) + "," + svg::num(frame.py(clamp01(*r[*col]))) + " ";
    }
    flush();
  }
  if (drawn.empty()) throw ConfigError("plot: no model column has values");

  s += svg::axes(frame, "t", "o1");
  s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  double y = svg::top + 18;
  for (const auto* st : drawn) {
    s += std::string("<line x1=\"620\" y1=\"") + svg::num(y - 4) + "\" x2=\"660\" y2=\"" + svg::num(y - 4) +
         "\" stroke=\"" + st->color + "\" stroke-width=\"2\"" +
         (*st->dash ? std::string(" stroke-dasharray=\"") + st->dash + "\"" : "") + "/>\n";
    s += "<text x=\"668\" y=\"" + svg::num(y) + "\">" + st->name + "</text>\n";
    y += 18;
  }
  s += "</g>\n</svg>\n";
  return s;
}

/// Direction arrows of the homogeneous drift (fixed length, pointing along
/// (dQ1/dt, dQ2/dt)), seed trajectories in red and fixed points as dots.
inline std::string slope_field_svg(const SlopeField& field, const Lattice& box, const std::vector<QVector>& fixed = {},
                                   const std::string& title = "") {
  const svg::Frame frame{box.q1_lo, box.q1_hi, box.q2_lo, box.q2_hi};
  std::string s = svg::header(title);
  const double spacing_x = (svg::right - svg::left) / std::max<std::size_t>(box.n1, 2);
  const double spacing_y = (svg::bottom - svg::top) / std::max<std::size_t>(box.n2, 2);
  const double len = 0.4 * std::min(spacing_x, spacing_y);
  s += "<g stroke=\"#555555\" stroke-width=\"1\" fill=\"#555555\">\n";
  for (const auto& smp : field.samples) {
    const double x = frame.px(smp.q1), y = frame.py(smp.q2);
    // Pixel-space direction; the y axis points down.
    const double dx = smp.dq1 * (svg::right - svg::left) / (box.q1_hi - box.q1_lo);
    const double dy = -smp.dq2 * (svg::bottom - svg::top) / (box.q2_hi - box.q2_lo);
    const double norm = std::hypot(dx, dy);
    if (!(norm > 0.0)) {
      s += "<circle cx=\"" + svg::num(x) + "\" cy=\"" + svg::num(y) + "\" r=\"1.5\"/>\n";
      continue;
    }
    const double ux = dx / norm, uy = dy / norm;
    const double x0 = x - 0.5 * len * ux, y0 = y - 0.5 * len * uy;
    const double x1 = x + 0.5 * len * ux, y1 = y + 0.5 * len * uy;
    s += "<line x1=\"" + svg::num(x0) + "\" y1=\"" + svg::num(y0) + "\" x2=\"" + svg::num(x1) + "\" y2=\"" +
         svg::num(y1) + "\"/>\n";
    const double h = 0.35 * len;
    s += "<polygon points=\"" + svg::num(x1) + "," + svg::num(y1) + " " +
         svg::num(x1 - h * ux + 0.5 * h * uy) + "," + svg::num(y1 - h * uy - 0.5 * h * ux) + " " +
         svg::num(x1 - h * ux - 0.5 * h * uy) + "," + svg::num(y1 - h * uy + 0.5 * h * ux) + "\"/>\n";
  }
  s += "</g>\n";

  auto inside = [&](const QVector& q) {
    return q[0] >= box.q1_lo && q[0] <= box.q1_hi && q[1] >= box.q2_lo && q[1] <= box.q2_hi;
  };
  for (const auto& traj : field.trajectories) {
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        s += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      pts.clear();
    };
    for (const auto& q : traj.mean_q) {
      if (!inside(q)) {
        flush();
        continue;
      }
      pts += svg::num(frame.px(q[0])) + "," + svg::num(frame.py(q[1])) + " ";
    }
    flush();
  }
  for (const auto& q : fixed)
    if (q.size() == 2 && inside(q))
      s += "<circle cx=\"" + svg::num(frame.px(q[0])) + "\" cy=\"" + svg::num(frame.py(q[1])) +
           "\" r=\"5\" fill=\"black\"/>\n";
  s += svg::axes(frame, "Q1", "Q2");
  s += "</svg>\n";
  return s;
}

}  // namespace qpop::harness
