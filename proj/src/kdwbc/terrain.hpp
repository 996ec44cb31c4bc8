#pragma once

#include <vector>

#include "kdwbc/types.hpp"

namespace kdwbc {

// Piecewise-constant height field over x: height(x) is the height of the last
// step whose x_start <= x, 0 before the first step.
struct Terrain {
  struct Step {
    double x_start = 0.0;
    double height = 0.0;
  };
  std::vector<Step> steps;  // sorted by x_start

  double height(double x, double /*y*/) const {
    double h = 0.0;
    for (const Step& s : steps) {
      if (x >= s.x_start) h = s.height;
      else break;
    }
    return h;
  }
};

}  // namespace kdwbc
