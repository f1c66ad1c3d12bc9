#include "admmpc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace admmpc {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// blue -> yellow -> red through t in [0,1]
std::string heat_color(double t) {
  t = std::min(1.0, std::max(0.0, t));
  int r, g, b;
  if (t < 0.5) {
    const double s = t / 0.5;
    r = static_cast<int>(40 + s * (250 - 40));
    g = static_cast<int>(60 + s * (220 - 60));
    b = static_cast<int>(180 - s * 140);
  } else {
    const double s = (t - 0.5) / 0.5;
    r = 250;
    g = static_cast<int>(220 - s * 180);
    b = static_cast<int>(40 - s * 10);
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string tick_label(double v) {
  const double l = std::log10(v);
  const double rl = std::round(l);
  if (std::abs(l - rl) < 1e-9) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "1e%d", static_cast<int>(rl));
    return buf;
  }
  return fmt(v);
}

void text(std::ostringstream& svg, double x, double y, const std::string& s,
          const char* anchor = "middle", int size = 11) {
  svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
      << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
      << "</text>\n";
}

void heatmap_svg(const std::vector<ExperimentRecord>& records, std::ostringstream& svg) {
  const auto cells = summarize(records, GroupKey::RhoCell);
  std::set<int> horizons;
  std::set<double> r1s, r2s;
  double vmin = 1e300, vmax = -1e300;
  for (const auto& c : cells) {
    horizons.insert(c.n);
    r1s.insert(c.rho1);
    r2s.insert(c.rho2);
    vmin = std::min(vmin, c.iterations.mean);
    vmax = std::max(vmax, c.iterations.mean);
  }
  const std::vector<double> rho1(r1s.begin(), r1s.end());
  const std::vector<double> rho2(r2s.begin(), r2s.end());
  const double lmin = std::log10(vmin), lmax = std::log10(std::max(vmax, vmin * (1 + 1e-9)));

  const double cell = 22.0;
  const double mx = 70.0, my = 46.0, gap = 58.0;
  const double pw = cell * static_cast<double>(rho1.size());
  const double ph = cell * static_cast<double>(rho2.size());
  const double width = mx + pw + 140.0;
  const double height = my + static_cast<double>(horizons.size()) * (ph + gap);

  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' '
      << fmt(height) << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  double top = my;
  for (int n : horizons) {
    std::map<std::pair<double, double>, double> mean;
    for (const auto& c : cells)
      if (c.n == n) mean[{c.rho1, c.rho2}] = c.iterations.mean;
    text(svg, mx + pw / 2, top - 8, "mean iterations, N = " + std::to_string(n));
    // argmin marker data
    double best = 1e300;
    std::pair<double, double> best_cell{0, 0};
    for (std::size_t i = 0; i < rho1.size(); ++i) {
      for (std::size_t j = 0; j < rho2.size(); ++j) {
        const auto it = mean.find({rho1[i], rho2[j]});
        if (it == mean.end()) continue;
        const double t = (std::log10(it->second) - lmin) / (lmax - lmin);
        const double x = mx + static_cast<double>(i) * cell;
        // y axis ascends upward: larger rho2 higher
        const double y = top + ph - static_cast<double>(j + 1) * cell;
        svg << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(cell)
            << "\" height=\"" << fmt(cell) << "\" fill=\"" << heat_color(t) << "\"/>\n";
        if (it->second < best) {
          best = it->second;
          best_cell = {x, y};
        }
      }
    }
    svg << "<rect x=\"" << fmt(best_cell.first + 1.5) << "\" y=\""
        << fmt(best_cell.second + 1.5) << "\" width=\"" << fmt(cell - 3) << "\" height=\""
        << fmt(cell - 3) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
    // decade ticks
    for (std::size_t i = 0; i < rho1.size(); ++i) {
      const double l = std::log10(rho1[i]);
      if (std::abs(l - std::round(l)) < 1e-9)
        text(svg, mx + (static_cast<double>(i) + 0.5) * cell, top + ph + 14,
             tick_label(rho1[i]), "middle", 10);
    }
    for (std::size_t j = 0; j < rho2.size(); ++j) {
      const double l = std::log10(rho2[j]);
      if (std::abs(l - std::round(l)) < 1e-9)
        text(svg, mx - 6, top + ph - (static_cast<double>(j) + 0.5) * cell + 4,
             tick_label(rho2[j]), "end", 10);
    }
    text(svg, mx + pw / 2, top + ph + 30, "rho1");
    text(svg, mx - 44, top + ph / 2, "rho2", "middle", 11);
    // colorbar
    const double bx = mx + pw + 24.0;
    for (int s = 0; s < 40; ++s) {
      const double t = 1.0 - static_cast<double>(s) / 39.0;
      svg << "<rect x=\"" << fmt(bx) << "\" y=\"" << fmt(top + s * ph / 40.0)
          << "\" width=\"14\" height=\"" << fmt(ph / 40.0 + 0.5) << "\" fill=\""
          << heat_color(t) << "\"/>\n";
    }
    text(svg, bx + 20, top + 10, fmt(vmax), "start", 10);
    text(svg, bx + 20, top + ph, fmt(vmin), "start", 10);
    top += ph + gap;
  }
  svg << "</svg>\n";
}

struct Series {
  std::vector<double> x, median, p98, time_median;
};

void band_svg(const std::vector<ExperimentRecord>& records, std::ostringstream& svg) {
  std::set<double> epss;
  std::set<int> ns;
  for (const auto& r : records) {
    epss.insert(r.epsilon);
    ns.insert(r.n);
  }
  const bool by_eps = epss.size() > 1 && ns.size() == 1;
  const bool by_n = ns.size() > 1 && epss.size() == 1;
  if (!by_eps && !by_n)
    throw std::invalid_argument("band plot: records must sweep exactly one of epsilon or N");

  Series s;
  const auto groups = summarize(records, by_eps ? GroupKey::Epsilon : GroupKey::Horizon);
  for (const auto& g : groups) {
    s.x.push_back(by_eps ? g.epsilon : static_cast<double>(g.n));
    s.median.push_back(g.iterations.median);
    s.p98.push_back(g.iterations.p98);
    s.time_median.push_back(g.wall_time_s.median);
  }

  const double W = 480, H = 300, mx = 64, my = 34, pw = W - mx - 24, ph = H - my - 56;
  const int panels = by_n ? 2 : 1;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(W) << "\" height=\""
      << fmt(H * panels) << "\" viewBox=\"0 0 " << fmt(W) << ' ' << fmt(H * panels)
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto panel = [&](double top, const std::vector<double>& y1, const std::vector<double>* y2,
                   bool logx, bool logy, const std::string& title,
                   const std::string& xlabel) {
    double xmin = s.x.front(), xmax = s.x.back();
    double ymin = 1e300, ymax = -1e300;
    auto scan = [&](const std::vector<double>& ys) {
      for (double v : ys) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    };
    scan(y1);
    if (y2) scan(*y2);
    if (logy) {
      ymin = std::max(ymin, 1e-12);
      ymax = std::max(ymax, ymin * 1.0001);
    } else {
      ymin = std::min(0.0, ymin);
      if (ymax <= ymin) ymax = ymin + 1.0;
    }
    auto X = [&](double v) {
      if (logx)
        return mx + pw * (std::log10(v) - std::log10(xmin)) /
                        (std::log10(xmax) - std::log10(xmin));
      return mx + pw * (v - xmin) / (xmax - xmin);
    };
    auto Y = [&](double v) {
      if (logy)
        return top + my + ph -
               ph * (std::log10(v) - std::log10(ymin)) / (std::log10(ymax) - std::log10(ymin));
      return top + my + ph - ph * (v - ymin) / (ymax - ymin);
    };
    svg << "<rect x=\"" << fmt(mx) << "\" y=\"" << fmt(top + my) << "\" width=\"" << fmt(pw)
        << "\" height=\"" << fmt(ph)
        << "\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>\n";
    text(svg, mx + pw / 2, top + my - 10, title);
    text(svg, mx + pw / 2, top + my + ph + 32, xlabel);
    // x ticks
    if (logx) {
      for (double v : s.x) {
        const double l = std::log10(v);
        if (std::abs(l - std::round(l)) < 1e-9) {
          text(svg, X(v), top + my + ph + 14, tick_label(v), "middle", 10);
          svg << "<line x1=\"" << fmt(X(v)) << "\" y1=\"" << fmt(top + my + ph)
              << "\" x2=\"" << fmt(X(v)) << "\" y2=\"" << fmt(top + my + ph + 4)
              << "\" stroke=\"#555\"/>\n";
        }
      }
    } else {
      for (double v : s.x) {
        text(svg, X(v), top + my + ph + 14, fmt(v), "middle", 9);
      }
    }
    // y ticks: 4 values
    for (int i = 0; i <= 3; ++i) {
      double v;
      if (logy)
        v = std::pow(10.0, std::log10(ymin) + (std::log10(ymax) - std::log10(ymin)) * i / 3.0);
      else
        v = ymin + (ymax - ymin) * i / 3.0;
      text(svg, mx - 6, Y(v) + 4, fmt(v), "end", 10);
    }
    auto curve = [&](const std::vector<double>& ys, const char* color, const char* dash) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
      if (dash[0]) svg << " stroke-dasharray=\"" << dash << "\"";
      svg << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        svg << fmt(X(s.x[i])) << ',' << fmt(Y(ys[i])) << ' ';
      svg << "\"/>\n";
    };
    curve(y1, "#1f5fbf", "");
    if (y2) curve(*y2, "#c23b22", "6,4");
  };

  panel(0, s.median, &s.p98, /*logx=*/by_eps, /*logy=*/by_eps,
        by_eps ? "iterations vs epsilon (median solid, p98 dashed)"
               : "iterations vs N (median solid, p98 dashed)",
        by_eps ? "epsilon" : "N");
  if (by_n)
    panel(H, s.time_median, nullptr, false, false, "median wall time [s] vs N", "N");
  svg << "</svg>\n";
}

}  // namespace

void emit_plot(const std::vector<ExperimentRecord>& records, PlotKind kind,
               const std::string& out_path) {
  if (records.empty()) throw std::invalid_argument("emit_plot: empty record set");
  std::ostringstream svg;
  if (kind == PlotKind::Heatmap)
    heatmap_svg(records, svg);
  else
    band_svg(records, svg);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
  out << svg.str();
  if (!out) throw std::runtime_error("write to '" + out_path + "' failed");
}

}  // namespace admmpc
