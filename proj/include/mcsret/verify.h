//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_VERIFY_H_
#define MCSRET_VERIFY_H_

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mcsret/autodiff.h"
#include "mcsret/graph.h"
#include "mcsret/params.h"
#include "mcsret/scorers.h"

namespace mcsret {

// Finite-difference check of fn with respect to every entry of the store.
GradCheckResult grad_check_params(const ParameterStore &store,
                                  const std::function<Var(Tape &, const Binding &)> &fn,
                                  double eps = 1e-5, double floor = 1e-2);

// Erdos-Renyi graph with the given node count and edge probability.
Graph random_graph(int nodes, double p, std::mt19937_64 &rng, const std::string &id = "g");
// Uniformly random relabeling; perm[old] = new.
std::vector<int> random_permutation(int n, std::mt19937_64 &rng);

struct CheckResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  std::string detail;

  bool passed() const { return failures == 0; }
};

struct VerifyReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
};

std::vector<std::string> verify_suites();
// Throws ValidationError for an unknown suite.
VerifyReport run_verify_suite(const std::string &suite, std::uint64_t seed);
// One `PASS|FAIL<TAB>suite<TAB>check<TAB>failures/trials<TAB>detail` row per check.
std::string format_verify(const VerifyReport &report);

}  // namespace mcsret

#endif  // MCSRET_VERIFY_H_
