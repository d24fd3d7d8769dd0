#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spotvol/eigen.hpp"
#include "spotvol/error.hpp"
#include "spotvol/estimator.hpp"

namespace spotvol {

struct EigenReport {
  double t = 0.0;
  std::vector<double> eigenvalues;  // descending, clamped at 0
  std::vector<double> ratios;       // r_m, m = 1..min(top, d)
};

using PcaPath = std::vector<EigenReport>;

// Dynamic PCA of one matrix: eigenvalues within -tol*trace of zero are
// clamped to 0 before forming the cumulative explained-variance ratios.
inline EigenReport eigen_report(const VolMatrix& v, std::size_t top = 3, double rel_tol = 1e-10) {
  std::ostringstream where;
  where << "at t = " << v.t << ": ";
  const double trace = v.entries.trace();
  if (!(trace > 0.0)) throw Error(where.str() + "degenerate matrix (trace <= 0)");

  std::vector<double> lambda;
  try {
    lambda = symm_eigenvalues(v.entries);
  } catch (const Error& e) {
    throw Error(where.str() + e.what());
  }
  for (double& l : lambda) {
    if (l < -rel_tol * trace) {
      std::ostringstream msg;
      msg << where.str() << "eigenvalue " << l << " below -" << rel_tol << " * trace";
      throw InvariantViolation(msg.str());
    }
    l = std::max(l, 0.0);
  }
  double total = 0.0;
  for (double l : lambda) total += l;

  EigenReport r{v.t, lambda, {}};
  const std::size_t m = std::min(top, lambda.size());
  double partial = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    partial += lambda[i];
    r.ratios.push_back(std::min(1.0, partial / total));
  }
  return r;
}

inline PcaPath pca_ratios(const VolPath& path, std::size_t top = 3, double rel_tol = 1e-10) {
  if (top == 0) throw Error("pca_ratios: top must be >= 1");
  PcaPath out;
  out.reserve(path.size());
  for (const auto& p : path.points) out.push_back(eigen_report(p, top, rel_tol));
  return out;
}

// Smallest m with r_m >= threshold; d when no computed ratio reaches it.
inline std::size_t rank_estimate(const EigenReport& report, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("rank threshold must lie in (0,1)");
  double total = 0.0;
  for (double l : report.eigenvalues) total += l;
  double partial = 0.0;
  for (std::size_t m = 0; m < report.eigenvalues.size(); ++m) {
    partial += report.eigenvalues[m];
    if (total > 0.0 && partial / total >= threshold) return m + 1;
  }
  return report.eigenvalues.size();
}

inline void write_pca_csv(std::ostream& out, const PcaPath& pca) {
  if (pca.empty()) throw Error("empty PCA path");
  const std::size_t d = pca.front().eigenvalues.size();
  const std::size_t m = pca.front().ratios.size();
  const auto old_precision = out.precision(17);
  out << 't';
  for (std::size_t i = 0; i < d; ++i) out << ",lambda_" << i + 1;
  for (std::size_t i = 0; i < m; ++i) out << ",r" << i + 1;
  out << '\n';
  for (const auto& r : pca) {
    out << r.t;
    for (double l : r.eigenvalues) out << ',' << l;
    for (double x : r.ratios) out << ',' << x;
    out << '\n';
  }
  out.precision(old_precision);
}

// Stacked line charts, one per ratio (r1 on top), each on [0,1] x [0,1].
inline void write_pca_svg(std::ostream& out, const PcaPath& pca, const std::string& title = "") {
  if (pca.empty()) throw Error("empty PCA path");
  const std::size_t panels = pca.front().ratios.size();
  constexpr double width = 640.0, panel_h = 180.0, left = 60.0, right = 20.0, top_pad = 40.0, gap = 40.0;
  const double plot_w = width - left - right;
  const double height = top_pad + panels * (panel_h + gap);

  auto esc = [](const std::string& s) {
    std::string o;
    for (char ch : s) {
      switch (ch) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += ch;
      }
    }
    return o;
  };

  std::ostringstream svg;
  svg.setf(std::ios::fixed);
  svg.precision(2);
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(title)
        << "</text>\n";

  static const char* labels[] = {"largest eigenvalue share", "top two eigenvalues share",
                                 "top three eigenvalues share"};
  for (std::size_t k = 0; k < panels; ++k) {
    const double y0 = top_pad + k * (panel_h + gap);
    auto px = [&](double t) { return left + std::clamp(t, 0.0, 1.0) * plot_w; };
    auto py = [&](double r) { return y0 + (1.0 - std::clamp(r, 0.0, 1.0)) * panel_h; };

    svg << "<g>\n<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << plot_w << "\" height=\"" << panel_h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
      const double v = tick / 4.0;
      svg << "<line x1=\"" << left - 4 << "\" y1=\"" << py(v) << "\" x2=\"" << left << "\" y2=\"" << py(v)
          << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << v << "</text>\n"
          << "<line x1=\"" << px(v) << "\" y1=\"" << y0 + panel_h << "\" x2=\"" << px(v) << "\" y2=\""
          << y0 + panel_h + 4 << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << px(v) << "\" y=\"" << y0 + panel_h + 16 << "\" text-anchor=\"middle\">" << v
          << "</text>\n";
    }
    const std::string label = k < 3 ? labels[k] : "top " + std::to_string(k + 1) + " eigenvalues share";
    svg << "<text x=\"" << left + 4 << "\" y=\"" << y0 - 6 << "\">r" << k + 1 << ": " << label << "</text>\n";
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pca.size(); ++i) {
      if (i) svg << ' ';
      svg << px(pca[i].t) << ',' << py(pca[i].ratios[k]);
    }
    svg << "\"/>\n</g>\n";
  }
  svg << "</svg>\n";
  out << svg.str();
}

}  // namespace spotvol
