#ifndef TEST_SUPPORT_FIXTURES_HPP
#define TEST_SUPPORT_FIXTURES_HPP

#include "policybounds/model.hpp"

namespace testsupport {

// Binary-instrument example where IV monotonicity strictly shrinks the
// policy-complier bounds: all observed cells carry mass 1/3.
inline policybounds::DataDistribution monotonicity_helps_instance() {
  using namespace policybounds;
  DataDistribution d;
  d.grid = OutcomeGrid::binary();
  const double t = 1.0 / 3.0;

  JudgeCell z1;  // P(Y,D|Z=1): D=1 row {1/3, 1/3}, D=0 row {1/3, 0}
  z1.id = "z1";
  z1.share = 0.5;
  z1.n_cases = 1000;
  z1.group = 0;
  z1.pmf = {{0.0, t}, {t, t}};  // pmf[y][d]

  JudgeCell z0;  // P(Y,D|Z=0): D=1 row {1/3, 0}, D=0 row {1/3, 1/3}
  z0.id = "z0";
  z0.share = 0.5;
  z0.n_cases = 1000;
  z0.group = 0;
  z0.pmf = {{t, 0.0}, {t, t}};

  d.judges.push_back(std::move(z1));
  d.judges.push_back(std::move(z0));
  return d;
}

}  // namespace testsupport

#endif
