#pragma once

// Brute-force reference implementations shared by the unit and acceptance
// tests. Each is written directly from the defining formula.

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "rirforge/ism.hpp"

namespace rirforge::testing {

using LatticeKey = std::tuple<int, int, int, int, int, int>;

struct OracleImage {
  Vec3 position;
  double amplitude;
  int order;
};

// Every (m, q) in the box, filtered by reflection order.
inline std::map<LatticeKey, OracleImage> lattice_oracle(const Room& room, const Vec3& s,
                                                        int max_order) {
  std::map<LatticeKey, OracleImage> out;
  const int b = max_order + 1;
  for (int mx = -b; mx <= b; ++mx)
    for (int my = -b; my <= b; ++my)
      for (int mz = -b; mz <= b; ++mz)
        for (int qx = 0; qx < 2; ++qx)
          for (int qy = 0; qy < 2; ++qy)
            for (int qz = 0; qz < 2; ++qz) {
              const int m[3] = {mx, my, mz};
              const int q[3] = {qx, qy, qz};
              OracleImage img{{}, 1.0, 0};
              for (int a = 0; a < 3; ++a) {
                const int low = std::abs(m[a] - q[a]);
                const int high = std::abs(m[a]);
                img.order += low + high;
                img.amplitude *= std::pow(1.0 - room.absorption[2 * a], 0.5 * low) *
                                 std::pow(1.0 - room.absorption[2 * a + 1], 0.5 * high);
                img.position[a] = (q[a] ? -s[a] : s[a]) + 2.0 * m[a] * room.dims[a];
              }
              if (img.order <= max_order) out[{mx, my, mz, qx, qy, qz}] = img;
            }
  return out;
}

// Largest deviation between enumerate_images and the lattice oracle, or a
// negative value when the image sets differ.
inline double lattice_mismatch(const Room& room, const SourcePose& src, int max_order) {
  const auto oracle = lattice_oracle(room, src.position, max_order);
  const auto images = enumerate_images(room, src, max_order);
  if (images.size() != oracle.size()) return -1.0;
  double worst = 0.0;
  for (const ImageSource& img : images) {
    const LatticeKey key{img.lattice[0], img.lattice[1], img.lattice[2],
                         img.parity[0],  img.parity[1],  img.parity[2]};
    const auto it = oracle.find(key);
    if (it == oracle.end() || it->second.order != img.order) return -1.0;
    worst = std::max(worst, std::abs(img.amplitude - it->second.amplitude));
    for (std::size_t a = 0; a < 3; ++a) {
      worst = std::max(worst, std::abs(img.position[a] - it->second.position[a]));
    }
  }
  return worst;
}

// Double-loop clamped EDC.
inline std::vector<double> edc_oracle(const std::vector<double>& x, double floor_db) {
  double total = 0.0;
  for (double v : x) total += v * v;
  std::vector<double> out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    double e = 0.0;
    for (std::size_t k = n; k < x.size(); ++k) e += x[k] * x[k];
    out[n] = e > 0.0 ? std::max(10.0 * std::log10(e / total), floor_db) : floor_db;
  }
  return out;
}

// Cosine schedule: ideal abar ratio, clipped per-step noise, cumulative
// product. Long double for the ratios.
inline std::vector<double> abar_oracle(int steps, double offset) {
  const long double pi = 3.141592653589793238462643383279502884L;
  auto f = [&](int t) {
    const long double c =
        std::cos(((static_cast<long double>(t) / steps + offset) / (1.0L + offset)) * pi / 2.0L);
    return c * c;
  };
  std::vector<double> out{1.0};
  long double abar = 1.0L;
  for (int t = 1; t <= steps; ++t) {
    long double beta = 1.0L - (f(t) / f(0)) / (f(t - 1) / f(0));
    if (beta > 0.999L) beta = 0.999L;
    abar *= (1.0L - beta);
    out.push_back(static_cast<double>(abar));
  }
  return out;
}

}  // namespace rirforge::testing
