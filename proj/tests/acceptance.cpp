// Acceptance gate: runs every suite check at full depth and prints one
// pass/fail line per criterion. Exit 0 iff everything passes.

#include <cstdio>

#include "pwadyn/suite.hpp"

int main() {
  pwadyn::SuiteOptions opt;  // full depths, pinned seed, default budget
  const pwadyn::SuiteReport rep = pwadyn::run_suite(opt);
  for (const auto& c : rep.checks) {
    std::printf("%-28s %s  (%.1f s)\n", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.seconds);
    if (!c.pass)
      for (const auto& r : c.records) std::printf("    %s\n", r.line().c_str());
  }
  std::printf("acceptance: %s\n", rep.all_pass ? "PASS" : "FAIL");
  return rep.all_pass ? 0 : 1;
}
