#include <cmath>
#include <span>
#include <stdexcept>

#include "cpa/engine.hpp"

namespace cpa {

double pearson_oracle(std::span<const double> w, std::span<const double> h) {
  if (w.size() != h.size()) throw std::invalid_argument("pearson_oracle: column lengths differ");
  if (w.size() < 2) throw std::invalid_argument("pearson_oracle: need at least 2 values");
  const double n = static_cast<double>(w.size());
  double mw = 0.0, mh = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    mw += w[i];
    mh += h[i];
  }
  mw /= n;
  mh /= n;
  double cross = 0.0, vw = 0.0, vh = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double dw = w[i] - mw;
    const double dh = h[i] - mh;
    cross += dw * dh;
    vw += dw * dw;
    vh += dh * dh;
  }
  if (vw == 0.0 || vh == 0.0) return 0.0;
  return cross / std::sqrt(vw * vh);
}

}  // namespace cpa
