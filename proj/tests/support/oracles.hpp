#pragma once

// Reference implementations written independently of the library, used
// only to check it.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cherry::oracle {

// Relabels clusters in order of first appearance; noise stays -1.
inline std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out;
  for (int l : labels) {
    if (l < 0) {
      out.push_back(-1);
      continue;
    }
    auto [it, fresh] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return 1.0 - ab / std::sqrt(aa * bb);
}

// Textbook recursive DBSCAN.
inline std::vector<int> dbscan(const std::vector<std::vector<double>>& pts, double eps, std::size_t min_points) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (cosine_distance(pts[i], pts[j]) <= eps) nb[i].push_back(j);
    }
  }
  constexpr int kUnset = -2;
  std::vector<int> label(n, kUnset);
  int cluster = 0;
  std::function<void(std::size_t)> expand = [&](std::size_t p) {
    for (std::size_t q : nb[p]) {
      if (label[q] == kUnset || label[q] == -1) {
        const bool fresh = label[q] == kUnset;
        label[q] = cluster;
        if (fresh && nb[q].size() >= min_points) expand(q);
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnset) continue;
    if (nb[i].size() < min_points) {
      label[i] = -1;
      continue;
    }
    label[i] = cluster;
    expand(i);
    ++cluster;
  }
  return canonical(label);
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// TF-IDF cosine matrix with smoothed idf, then the damped walk solved as a
// linear system: pi (I - M) = 0 with sum(pi) = 1.
inline std::vector<double> lexrank(const std::vector<std::string>& sentences, double threshold, double damping) {
  const std::size_t n = sentences.size();
  std::vector<std::map<std::string, double>> tf(n);
  std::map<std::string, int> df;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& t : tokens(sentences[i])) tf[i][t] += 1.0;
    for (const auto& [t, _] : tf[i]) ++df[t];
  }
  std::vector<std::map<std::string, double>> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0;
    for (const auto& [t, f] : tf[i]) {
      const double v = f * (std::log((1.0 + n) / (1.0 + df[t])) + 1.0);
      w[i][t] = v;
      norm += v * v;
    }
    for (auto& [t, v] : w[i]) v /= std::sqrt(norm);
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> edges;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (const auto& [t, v] : w[i]) {
        auto it = w[j].find(t);
        if (it != w[j].end()) s += v * it->second;
      }
      if (s >= threshold && s > 0) edges.push_back(j);
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double walk = edges.empty() ? 1.0 / n
                          : std::count(edges.begin(), edges.end(), j) ? 1.0 / edges.size()
                                                                       : 0.0;
      m(i, j) = damping / n + (1.0 - damping) * walk;
    }
  }
  Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(n, n) - m).transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::VectorXd pi = a.fullPivLu().solve(b);
  return {pi.data(), pi.data() + n};
}

// Ranks by counting, ties averaged.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      less += x < v[i];
      equal += x == v[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

}  // namespace cherry::oracle
