#pragma once

#include <cstddef>
#include <vector>

namespace sflick::testing {

// Plain double-precision evaluation of the same network and loss, written
// directly from the layer definitions with zero "same" padding.
struct RefNet {
  int R, W, C;
  std::vector<double> w;  // NetParams layout

  double tap(const std::vector<double>& plane, int r, int c) const {
    return (r < 0 || c < 0 || r >= R || c >= W) ? 0.0 : plane[r * W + c];
  }
  static double leaky(double z) { return z > 0 ? z : 0.2 * z; }

  std::vector<double> residual(const std::vector<double>& x) const {
    const std::size_t w1 = 0, b1 = 9 * C, w2 = 10 * C, b2 = 10 * C + 9 * C * C, w3 = b2 + C, b3 = w3 + C;
    std::vector<std::vector<double>> a1(C, std::vector<double>(R * W)), a2 = a1;
    for (int o = 0; o < C; ++o)
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < W; ++c) {
          double z = w[b1 + o];
          for (int dy = 0; dy < 3; ++dy)
            for (int dx = 0; dx < 3; ++dx) z += w[w1 + o * 9 + dy * 3 + dx] * tap(x, r + dy - 1, c + dx - 1);
          a1[o][r * W + c] = leaky(z);
        }
    for (int o = 0; o < C; ++o)
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < W; ++c) {
          double z = w[b2 + o];
          for (int i = 0; i < C; ++i)
            for (int dy = 0; dy < 3; ++dy)
              for (int dx = 0; dx < 3; ++dx)
                z += w[w2 + (o * C + i) * 9 + dy * 3 + dx] * tap(a1[i], r + dy - 1, c + dx - 1);
          a2[o][r * W + c] = leaky(z);
        }
    std::vector<double> f(R * W, w[b3]);
    for (int i = 0; i < C; ++i)
      for (int k = 0; k < R * W; ++k) f[k] += w[w3 + i] * a2[i][k];
    return f;
  }

  double loss(const std::vector<double>& a, const std::vector<double>& b, double alpha) const {
    const auto fa = residual(a), fb = residual(b);
    double l1 = 0, l2 = 0, l3 = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double ya = a[k] - fa[k], yb = b[k] - fb[k];
      l1 += (ya - b[k]) * (ya - b[k]);
      l2 += (yb - a[k]) * (yb - a[k]);
      l3 += (ya - yb) * (ya - yb);
    }
    const double n = static_cast<double>(a.size());
    return 0.5 * l1 / n + 0.5 * l2 / n + alpha * l3 / n;
  }
};

/// Central differences of RefNet::loss with respect to every weight.
inline std::vector<double> central_difference_grad(RefNet net, const std::vector<double>& a,
                                                   const std::vector<double>& b, double alpha, double h = 1e-6) {
  std::vector<double> g(net.w.size());
  for (std::size_t i = 0; i < net.w.size(); ++i) {
    const double keep = net.w[i];
    net.w[i] = keep + h;
    const double up = net.loss(a, b, alpha);
    net.w[i] = keep - h;
    const double dn = net.loss(a, b, alpha);
    net.w[i] = keep;
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

}  // namespace sflick::testing
