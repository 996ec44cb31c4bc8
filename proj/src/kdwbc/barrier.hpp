#pragma once

namespace kdwbc {

struct BarrierEval {
  double value = 0.0;
  double d1 = 0.0;  // d/dh
  double d2 = 0.0;  // d^2/dh^2
};

// Relaxed log barrier: -xi*ln(h) for h >= delta, switching to the quadratic
// that matches value and both derivatives at delta. Defined for all real h.
BarrierEval rbfPenalty(double h, double xi, double delta);

}  // namespace kdwbc
