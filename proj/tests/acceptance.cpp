// One line per acceptance criterion on stdout; timings go to stderr so that stdout is reproducible.
#include <cstdio>
#include <iostream>

#include "pinchlab/acceptance.hpp"

int main() {
  bool all = true;
  pinchlab::run_acceptance({}, [&](const pinchlab::CriterionResult& r) {
    all = all && r.pass;
    std::cout << pinchlab::format_criterion(r) << std::endl;
    std::cerr << "  criterion " << r.id << " timing: " << r.timing << std::endl;
  });
  return all ? 0 : 1;
}
