#include "refcheck/transport_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace refcheck {

Mat squared_distances(const Mat& points) {
  const std::size_t n = points.size();
  Mat c(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < points[i].size(); ++d) {
        const double diff = points[i][d] - points[j][d];
        s += diff * diff;
      }
      c[i][j] = s;
    }
  return c;
}

double exact_ot_value(const Vec& xi, const Vec& eta, const Mat& cost) {
  const int n = static_cast<int>(xi.size());
  if (n > kMaxExactOtSize)
    throw std::invalid_argument("exact OT oracle refused for N = " + std::to_string(n));
  if (static_cast<int>(eta.size()) != n || static_cast<int>(cost.size()) != n)
    throw std::invalid_argument("exact OT: size mismatch");

  // Nodes: 0 source, 1..n rows, n+1..2n columns, 2n+1 sink.
  const int nodes = 2 * n + 2;
  const int src = 0, sink = 2 * n + 1;
  struct Edge {
    int to;
    double cap;
    double cost;
    int rev;
  };
  std::vector<std::vector<Edge>> g(nodes);
  auto add = [&](int a, int b, double cap, double c) {
    g[a].push_back({b, cap, c, static_cast<int>(g[b].size())});
    g[b].push_back({a, 0.0, -c, static_cast<int>(g[a].size()) - 1});
  };
  double total_supply = 0.0;
  for (int i = 0; i < n; ++i) {
    add(src, 1 + i, xi[i], 0.0);
    total_supply += xi[i];
  }
  for (int j = 0; j < n; ++j) add(1 + n + j, sink, eta[j], 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) add(1 + i, 1 + n + j, std::numeric_limits<double>::infinity(),
                                    0.5 * cost[i][j]);

  constexpr double kCapEps = 1e-15;
  double flow = 0.0, value = 0.0;
  while (flow < total_supply - kCapEps) {
    // Bellman-Ford on the residual graph (no negative cycles in successive
    // shortest paths).
    std::vector<double> dist(nodes, std::numeric_limits<double>::infinity());
    std::vector<int> prev_node(nodes, -1), prev_edge(nodes, -1);
    dist[src] = 0.0;
    for (int round = 0; round < nodes; ++round) {
      bool changed = false;
      for (int a = 0; a < nodes; ++a) {
        if (!std::isfinite(dist[a])) continue;
        for (int e = 0; e < static_cast<int>(g[a].size()); ++e) {
          const Edge& ed = g[a][e];
          if (ed.cap <= kCapEps) continue;
          if (dist[a] + ed.cost < dist[ed.to] - 1e-15) {
            dist[ed.to] = dist[a] + ed.cost;
            prev_node[ed.to] = a;
            prev_edge[ed.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (!std::isfinite(dist[sink])) break;
    double push = std::numeric_limits<double>::infinity();
    for (int v = sink; v != src; v = prev_node[v]) push = std::min(push, g[prev_node[v]][prev_edge[v]].cap);
    for (int v = sink; v != src; v = prev_node[v]) {
      Edge& ed = g[prev_node[v]][prev_edge[v]];
      ed.cap -= push;
      g[v][ed.rev].cap += push;
    }
    flow += push;
    value += push * dist[sink];
  }
  return value;
}

EntropicOtOracle entropic_ot(const Vec& xi, const Vec& eta, const Mat& cost, double eps,
                             double tol, int max_iter) {
  const std::size_t n = xi.size();
  Mat k(n, Vec(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k[i][j] = std::exp(-cost[i][j] / (2.0 * eps));
  Vec a(n, 1.0), b(n, 1.0);
  int it = 0;
  double err = std::numeric_limits<double>::infinity();
  while (err > tol && it < max_iter) {
    ++it;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i][j] * a[i];
      b[j] = eta[j] / s;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += k[i][j] * b[j];
      a[i] = xi[i] / s;
    }
    // Rows are exact after the a-update; only columns can be off.
    err = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += a[i] * k[i][j] * b[j];
      err += std::abs(s - eta[j]);
    }
  }
  if (err > tol) throw std::runtime_error("entropic OT oracle did not converge");
  EntropicOtOracle out{0.0, Mat(n, Vec(n, 0.0)), it};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double m = a[i] * k[i][j] * b[j];
      out.plan[i][j] = m;
      if (m > 0.0) out.value += m * (0.5 * cost[i][j] + eps * std::log(m));
    }
  return out;
}

Vec gibbs_vector(const Vec& v, double beta) {
  const double vmin = *std::min_element(v.begin(), v.end());
  Vec g(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    g[i] = std::exp(-beta * (v[i] - vmin));
    s += g[i];
  }
  for (double& x : g) x /= s;
  return g;
}

double kl_divergence(const Vec& p, const Vec& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

double l1_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace refcheck
