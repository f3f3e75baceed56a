#include "properties.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>

#include "mucalc.hpp"

namespace mpst {

namespace {

using EdgeIdx = std::uint32_t;

std::pair<EdgeIdx, EdgeIdx> out_range(const Lts& lts, std::uint32_t v) {
  return {lts.out_begin[v], lts.out_begin[v + 1]};
}

// Shortest reduction paths from the initial state: parent edge per state.
std::vector<std::int64_t> reduction_parents(const Lts& lts) {
  std::vector<std::int64_t> parent(lts.states.size(), -2);  // -2 unreached, -1 root
  std::deque<std::uint32_t> queue;
  if (!lts.states.empty()) {
    parent[0] = -1;
    queue.push_back(0);
  }
  while (!queue.empty()) {
    std::uint32_t v = queue.front();
    queue.pop_front();
    auto [b, e] = out_range(lts, v);
    for (EdgeIdx i = b; i < e; ++i) {
      const Lts::Edge& edge = lts.edges[i];
      if (!lts.is_reduction_edge(edge)) continue;
      if (parent[edge.to] != -2) continue;
      parent[edge.to] = static_cast<std::int64_t>(i);
      queue.push_back(edge.to);
    }
  }
  return parent;
}

std::vector<std::string> trace_to(const Lts& lts, const std::vector<std::int64_t>& parent,
                                  std::uint32_t v, std::string violation) {
  std::vector<EdgeIdx> chain;
  for (std::uint32_t cur = v; parent[cur] >= 0;) {
    EdgeIdx i = static_cast<EdgeIdx>(parent[cur]);
    chain.push_back(i);
    cur = lts.edges[i].from;
  }
  std::reverse(chain.begin(), chain.end());
  std::vector<std::string> out;
  out.push_back(context_short(lts.states[0]));
  for (EdgeIdx i : chain) {
    const Lts::Edge& e = lts.edges[i];
    out.push_back("--[ " + label_render(e.label) + " ]--> " + context_short(lts.states[e.to]));
  }
  out.push_back("violation: " + std::move(violation));
  return out;
}

bool is_crash_waiting(const TypeRef& t) {
  TypeRef u = full_unfold(t);
  return u->kind == TypeKind::External && u->branches.size() == 1 &&
         u->branches[0].label == kCrashLabel;
}

bool reduction_stuck(const Lts& lts, std::uint32_t v) {
  auto [b, e] = out_range(lts, v);
  for (EdgeIdx i = b; i < e; ++i)
    if (lts.is_noncrash_edge(lts.edges[i])) return false;
  return true;
}

}  // namespace

Verdict check_safety(const Lts& lts) {
  std::vector<std::int64_t> parent = reduction_parents(lts);
  for (std::uint32_t v = 0; v < lts.states.size(); ++v) {
    if (!lts.red_reachable[v]) continue;
    auto [b, e] = out_range(lts, v);
    auto has_edge = [&](auto pred) {
      for (EdgeIdx i = b; i < e; ++i)
        if (pred(lts.edges[i].label)) return true;
      return false;
    };
    for (EdgeIdx i = b; i < e; ++i) {
      const TransitionLabel& l = lts.edges[i].label;
      if (l.kind == ActKind::Output) {
        bool ready = has_edge([&](const TransitionLabel& m) {
          return (m.kind == ActKind::Input && m.p == l.q && m.q == l.p) ||
                 (m.kind == ActKind::Stopped && m.p == l.q);
        });
        if (!ready) continue;
        bool ok = has_edge([&](const TransitionLabel& m) {
          return m.kind == ActKind::Comm && m.p == l.p && m.q == l.q && m.label == l.label;
        });
        if (!ok)
          return {false, true,
                  trace_to(lts, parent, v,
                           "send " + l.p + "->" + l.q + ":" + l.label +
                               " is enabled and " + l.q +
                               " is ready or stopped, but the message cannot be transmitted")};
      } else if (l.kind == ActKind::Stopped) {
        for (EdgeIdx j = b; j < e; ++j) {
          const TransitionLabel& m = lts.edges[j].label;
          if (m.kind != ActKind::Input || m.q != l.p) continue;
          bool ok = has_edge([&](const TransitionLabel& d) {
            return d.kind == ActKind::CrashDetect && d.p == m.p && d.q == l.p;
          });
          if (!ok)
            return {false, true,
                    trace_to(lts, parent, v,
                             l.p + " has crashed while " + m.p + " still waits on it, but " +
                                 m.p + " cannot detect the crash")};
        }
      }
    }
  }
  return {true, true, {}};
}

Verdict check_deadlock_free(const Lts& lts) {
  std::vector<std::int64_t> parent = reduction_parents(lts);
  for (std::uint32_t v = 0; v < lts.states.size(); ++v) {
    if (!lts.red_reachable[v] || !reduction_stuck(lts, v)) continue;
    for (const auto& [ep, t] : lts.states[v].entries) {
      if (t->kind == TypeKind::Stop || sub_end(t) || is_crash_waiting(t)) continue;
      return {false, true,
              trace_to(lts, parent, v,
                       "deadlock: " + ep.session + "[" + ep.role + "] = " + type_short(t) +
                           " is neither terminated, crashed, nor waiting only on a crash")};
    }
  }
  return {true, true, {}};
}

Verdict check_terminating(const Lts& lts) {
  Verdict df = check_deadlock_free(lts);
  if (!df.holds) {
    df.witness.back() += " (termination requires deadlock freedom)";
    return df;
  }
  // A cycle in the reduction graph yields an infinite reduction sequence.
  std::vector<int> color(lts.states.size(), 0);
  std::vector<std::pair<std::uint32_t, EdgeIdx>> stack;
  for (std::uint32_t root = 0; root < lts.states.size(); ++root) {
    if (!lts.red_reachable[root] || color[root] != 0) continue;
    stack.push_back({root, lts.out_begin[root]});
    color[root] = 1;
    while (!stack.empty()) {
      auto& [v, cursor] = stack.back();
      if (cursor >= lts.out_begin[v + 1]) {
        color[v] = 2;
        stack.pop_back();
        continue;
      }
      const Lts::Edge& edge = lts.edges[cursor];
      EdgeIdx taken = cursor++;
      if (!lts.is_reduction_edge(edge)) continue;
      if (color[edge.to] == 1) {
        // Reconstruct: prefix to the cycle entry, then the cycle itself.
        std::vector<EdgeIdx> loop;
        if (edge.to != v) {
          std::size_t k = stack.size() - 1;
          while (stack[k].first != edge.to) --k;
          for (; k + 1 < stack.size(); ++k)
            loop.push_back(static_cast<EdgeIdx>(stack[k].second - 1));
        }
        loop.push_back(taken);
        std::vector<std::int64_t> parent = reduction_parents(lts);
        std::vector<std::string> witness = trace_to(lts, parent, edge.to, "");
        witness.pop_back();
        witness.push_back("cycle:");
        for (EdgeIdx i : loop) {
          const Lts::Edge& e2 = lts.edges[i];
          witness.push_back("--[ " + label_render(e2.label) + " ]--> " +
                            context_short(lts.states[e2.to]));
        }
        witness.push_back("violation: the reductions above repeat forever");
        return {false, true, std::move(witness)};
      }
      if (color[edge.to] == 0) {
        color[edge.to] = 1;
        stack.push_back({edge.to, lts.out_begin[edge.to]});
      }
    }
  }
  return {true, true, {}};
}

Verdict check_never_terminating(const Lts& lts) {
  std::vector<std::int64_t> parent = reduction_parents(lts);
  for (std::uint32_t v = 0; v < lts.states.size(); ++v) {
    if (!lts.red_reachable[v] || !reduction_stuck(lts, v)) continue;
    return {false, true,
            trace_to(lts, parent, v, "no transmission or detection is possible here")};
  }
  return {true, true, {}};
}

namespace {

// Fairness keys: (pair, action family). Communication keys are directed
// sender->receiver; detection keys are detector->crashed.
struct ObKind {
  bool receive;  // false: send obligation p->q; true: receive obligation at q from p
  std::string p, q;
  bool operator<(const ObKind& o) const {
    return std::tie(receive, p, q) < std::tie(o.receive, o.p, o.q);
  }
};

struct OracleGraph {
  std::vector<std::uint32_t> states;                    // reduction-reachable ids
  std::vector<std::vector<EdgeIdx>> noncrash_out;      // per lts state id
  std::vector<std::vector<int>> enabled;               // fairness keys enabled per state
  std::map<std::tuple<bool, std::string, std::string>, int> key_ids;

  int key(bool det, const std::string& a, const std::string& b) {
    auto [it, _] = key_ids.emplace(std::make_tuple(det, a, b), static_cast<int>(key_ids.size()));
    return it->second;
  }
};

int edge_key(OracleGraph& g, const TransitionLabel& l) {
  if (l.kind == ActKind::Comm) return g.key(false, l.p, l.q);
  return g.key(true, l.p, l.q);  // CrashDetect: p detects q
}

// Tarjan over the discharge-free crash-free subgraph.
struct SccResult {
  std::vector<int> comp;  // -1 for states outside the graph
  int count = 0;
};

template <typename KeepEdge>
SccResult scc(const Lts& lts, const OracleGraph& g, KeepEdge keep) {
  std::size_t n = lts.states.size();
  SccResult r;
  r.comp.assign(n, -1);
  std::vector<int> low(n, 0), num(n, -1);
  std::vector<bool> on(n, false);
  std::vector<std::uint32_t> tstack;
  int counter = 0;
  struct Frame {
    std::uint32_t v;
    std::size_t i;
  };
  std::vector<Frame> call;
  for (std::uint32_t root : g.states) {
    if (num[root] != -1) continue;
    call.push_back({root, 0});
    num[root] = low[root] = counter++;
    on[root] = true;
    tstack.push_back(root);
    while (!call.empty()) {
      Frame& f = call.back();
      const auto& adj = g.noncrash_out[f.v];
      bool descended = false;
      while (f.i < adj.size()) {
        EdgeIdx ei = adj[f.i++];
        if (!keep(ei)) continue;
        std::uint32_t w = lts.edges[ei].to;
        if (num[w] == -1) {
          num[w] = low[w] = counter++;
          on[w] = true;
          tstack.push_back(w);
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on[w]) low[f.v] = std::min(low[f.v], num[w]);
      }
      if (descended) continue;
      if (low[f.v] == num[f.v]) {
        while (true) {
          std::uint32_t w = tstack.back();
          tstack.pop_back();
          on[w] = false;
          r.comp[w] = r.count;
          if (w == f.v) break;
        }
        ++r.count;
      }
      std::uint32_t done = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[done]);
    }
  }
  return r;
}

}  // namespace

Verdict fair_lasso_oracle(const Lts& lts, std::uint64_t work_budget) {
  if (lts.states.empty()) return {true, true, {}};
  OracleGraph g;
  for (std::uint32_t v = 0; v < lts.states.size(); ++v)
    if (lts.red_reachable[v]) g.states.push_back(v);
  g.noncrash_out.resize(lts.states.size());
  g.enabled.resize(lts.states.size());
  for (std::uint32_t v : g.states) {
    auto [b, e] = out_range(lts, v);
    for (EdgeIdx i = b; i < e; ++i) {
      if (!lts.is_noncrash_edge(lts.edges[i])) continue;
      g.noncrash_out[v].push_back(i);
      int k = edge_key(g, lts.edges[i].label);
      auto& en = g.enabled[v];
      if (std::find(en.begin(), en.end(), k) == en.end()) en.push_back(k);
    }
  }

  // Pending obligations per reachable state, read off the one-sided barbs.
  std::set<ObKind> obligations;
  for (std::uint32_t v : g.states) {
    auto [b, e] = out_range(lts, v);
    for (EdgeIdx i = b; i < e; ++i) {
      const TransitionLabel& l = lts.edges[i].label;
      if (l.kind == ActKind::Output) obligations.insert({false, l.p, l.q});
      if (l.kind == ActKind::Input && l.label != kCrashLabel)
        obligations.insert({true, l.q, l.p});  // sender l.q, receiver l.p
    }
  }

  std::uint64_t work = 0;
  std::vector<std::int64_t> parent = reduction_parents(lts);
  for (const ObKind& o : obligations) {
    work += g.states.size() + lts.edges.size();
    if (work > work_budget)
      return {false, false, {"liveness oracle gave up: work budget exhausted"}};

    auto discharges = [&](EdgeIdx i) {
      const TransitionLabel& l = lts.edges[i].label;
      if (l.kind == ActKind::Comm && l.p == o.p && l.q == o.q) return true;
      if (o.receive && l.kind == ActKind::CrashDetect && l.p == o.q && l.q == o.p) return true;
      return false;
    };
    auto keep = [&](EdgeIdx i) { return !discharges(i); };

    // Bad targets: crash-free-stuck states (finite maximal runs are fair),
    // plus states inside a fair recurrence. A fair run can recur in the
    // discharge-free subgraph iff iterated SCC pruning leaves a component
    // with an internal edge whose internal edges fire every key enabled at
    // its states: a state enabling a key its component never fires cannot
    // recur fairly, so it is removed and the decomposition repeated.
    std::vector<bool> bad(lts.states.size(), false);
    for (std::uint32_t v : g.states)
      if (g.enabled[v].empty()) bad[v] = true;

    std::vector<bool> alive(lts.states.size(), false);
    for (std::uint32_t v : g.states) alive[v] = true;
    auto kept = [&](EdgeIdx i) {
      return keep(i) && alive[lts.edges[i].from] && alive[lts.edges[i].to];
    };
    for (;;) {
      work += g.states.size() + lts.edges.size();
      if (work > work_budget)
        return {false, false, {"liveness oracle gave up: work budget exhausted"}};
      SccResult comps = scc(lts, g, kept);
      std::vector<std::set<int>> fired_in(comps.count);
      std::vector<bool> has_edge(comps.count, false);
      for (std::uint32_t v : g.states) {
        if (!alive[v]) continue;
        int c = comps.comp[v];
        if (c < 0) continue;
        for (EdgeIdx i : g.noncrash_out[v]) {
          if (!kept(i)) continue;
          if (comps.comp[lts.edges[i].to] == c) {
            has_edge[c] = true;
            fired_in[c].insert(edge_key(g, lts.edges[i].label));
          }
        }
      }
      bool pruned = false;
      for (std::uint32_t v : g.states) {
        if (!alive[v]) continue;
        int c = comps.comp[v];
        if (c < 0 || !has_edge[c]) continue;
        for (int k : g.enabled[v])
          if (!fired_in[static_cast<std::size_t>(c)].count(k)) {
            alive[v] = false;
            pruned = true;
            break;
          }
      }
      if (!pruned) {
        for (std::uint32_t v : g.states) {
          if (!alive[v]) continue;
          int c = comps.comp[v];
          if (c >= 0 && has_edge[static_cast<std::size_t>(c)]) bad[v] = true;
        }
        break;
      }
    }

    // Backward closure: states that can reach a bad target without discharging.
    std::vector<std::vector<std::uint32_t>> rev(lts.states.size());
    for (std::uint32_t v : g.states)
      for (EdgeIdx i : g.noncrash_out[v])
        if (keep(i)) rev[lts.edges[i].to].push_back(v);
    std::deque<std::uint32_t> queue;
    for (std::uint32_t v : g.states)
      if (bad[v]) queue.push_back(v);
    while (!queue.empty()) {
      std::uint32_t v = queue.front();
      queue.pop_front();
      for (std::uint32_t u : rev[v])
        if (!bad[u]) {
          bad[u] = true;
          queue.push_back(u);
        }
    }

    // The obligation fails if it is pending at any state with a fair escape.
    for (std::uint32_t v : g.states) {
      if (!bad[v]) continue;
      bool active = false;
      auto [b, e] = out_range(lts, v);
      for (EdgeIdx i = b; i < e && !active; ++i) {
        const TransitionLabel& l = lts.edges[i].label;
        if (!o.receive && l.kind == ActKind::Output && l.p == o.p && l.q == o.q) active = true;
        if (o.receive && l.kind == ActKind::Input && l.p == o.q && l.q == o.p &&
            l.label != kCrashLabel)
          active = true;
      }
      if (!active) continue;
      std::string what = o.receive
                             ? "receive obligation of " + o.q + " from " + o.p
                             : "send obligation " + o.p + "->" + o.q;
      return {false, true,
              trace_to(lts, parent, v,
                       what + " can be dodged forever on a fair crash-free path")};
    }
  }
  return {true, true, {}};
}

Verdict check_live(const Lts& lts) {
  FormulaRef phi = encode(PropertyKind::Live, lts_alphabet(lts));
  bool holds = eval_initial(lts, phi);
  if (holds) return {true, true, {}};
  Verdict witness = fair_lasso_oracle(lts);
  if (!witness.holds && witness.conclusive) return witness;
  return {false, true, {"liveness encoding fails at the initial state"}};
}

}  // namespace mpst
