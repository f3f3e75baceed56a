#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "context.hpp"

namespace mpst {

struct LtsLimits {
  std::uint64_t max_states = 1000000;
  std::uint64_t max_depth = 0;  // 0 = unbounded
};

struct Lts {
  std::string session;
  std::vector<std::string> reliable;     // sorted
  std::vector<Context> states;           // index = state id; 0 = initial
  struct Edge {
    std::uint32_t from;
    std::uint32_t to;
    TransitionLabel label;
  };
  std::vector<Edge> edges;               // sorted by (from, label)
  std::vector<std::uint32_t> out_begin;  // states.size()+1 offsets into edges
  std::vector<char> red_reachable;       // per state: reachable via reductions
  std::uint64_t red_state_count = 0;
  std::uint64_t red_edge_count = 0;      // Comm/CrashDetect/Crash edges between reachable states

  bool is_reduction_edge(const Edge& e) const {
    ActKind k = e.label.kind;
    return k == ActKind::Comm || k == ActKind::CrashDetect || k == ActKind::Crash;
  }
  bool is_noncrash_edge(const Edge& e) const {
    ActKind k = e.label.kind;
    return k == ActKind::Comm || k == ActKind::CrashDetect;
  }
};

struct LimitExceeded {
  std::string what;  // which limit tripped
  std::uint64_t seen;
};

using LtsResult = std::variant<Lts, LimitExceeded>;

// Breadth-first closure of `successors` from g0. States are numbered in BFS
// discovery order; the per-state successor list is already label-sorted, which
// fixes the numbering and makes repeated builds byte-identical.
LtsResult build_lts(const Context& g0, const std::string& s,
                    const std::vector<std::string>& reliable, const LtsLimits& limits = {});

std::string lts_to_dot(const Lts& lts);
std::string lts_to_json(const Lts& lts);

}  // namespace mpst
