#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "statespace.hpp"

namespace mpst {

// Result of one property check. `witness` is a human-readable trace: the
// starting context, one line per transition, and a final line naming the
// violation (empty when the property holds, or when no finite witness applies).
struct Verdict {
  bool holds = false;
  bool conclusive = true;  // false only for budgeted oracle runs that gave up
  std::vector<std::string> witness;
};

// Communication safety: along every reachable reduction, an enabled send whose
// peer is ready (or stopped) must be transmittable with that label, and a
// stopped peer with a listener must be detectable.
Verdict check_safety(const Lts& lts);

// Deadlock freedom: every reachable state with no transmission or detection
// has only terminated, crashed, or crash-waiting entries.
Verdict check_deadlock_free(const Lts& lts);

// Termination: deadlock freedom plus no infinite reduction sequence.
Verdict check_terminating(const Lts& lts);

// Never-termination: every reachable state can still transmit or detect.
Verdict check_never_terminating(const Lts& lts);

// Liveness, decided by evaluating the modal encoding over the state space.
Verdict check_live(const Lts& lts);

// Liveness, decided directly from the definition: for every reachable state
// and every pending send or non-crash receive obligation there, no fair
// crash-free path may avoid discharging it forever. Exact on finite spaces;
// `work_budget` caps graph work before reporting an inconclusive verdict.
Verdict fair_lasso_oracle(const Lts& lts, std::uint64_t work_budget = 50'000'000);

}  // namespace mpst
