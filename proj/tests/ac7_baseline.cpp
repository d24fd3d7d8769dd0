// Regenerates the frozen AC-7 baseline with the literal quadruple-sum
// estimator. Slow (minutes); not part of ctest.

#include <cstdio>

#include "accuracy_experiment.hpp"

int main() {
  using namespace spotvol;
  const double value = test::accuracy_experiment(Method::generic);
  std::printf("%.17g\n", value);
  return 0;
}
