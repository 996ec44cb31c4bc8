#include "kdwbc/barrier.hpp"

#include <cmath>
#include <stdexcept>

namespace kdwbc {

BarrierEval rbfPenalty(double h, double xi, double delta) {
  if (!(xi > 0.0) || !(delta > 0.0)) {
    throw std::invalid_argument("rbfPenalty: xi and delta must be positive");
  }
  BarrierEval out;
  if (h >= delta) {
    out.value = -xi * std::log(h);
    out.d1 = -xi / h;
    out.d2 = xi / (h * h);
  } else {
    const double s = (h - 2.0 * delta) / delta;
    out.value = xi * (0.5 * s * s - 0.5 - std::log(delta));
    out.d1 = xi * (h - 2.0 * delta) / (delta * delta);
    out.d2 = xi / (delta * delta);
  }
  return out;
}

}  // namespace kdwbc
