#include "statespace.hpp"

#include <deque>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace mpst {

LtsResult build_lts(const Context& g0, const std::string& s,
                    const std::vector<std::string>& reliable, const LtsLimits& limits) {
  Lts lts;
  lts.session = s;
  lts.reliable = reliable;
  std::sort(lts.reliable.begin(), lts.reliable.end());

  // Deque gives stable references so the id map can point at stored states.
  std::deque<Context> store;
  struct CtxHash {
    std::size_t operator()(const Context* g) const { return context_hash(*g); }
  };
  struct CtxEq {
    bool operator()(const Context* a, const Context* b) const { return context_equal(*a, *b); }
  };
  std::unordered_map<const Context*, std::uint32_t, CtxHash, CtxEq> ids;
  std::deque<std::pair<std::uint32_t, std::uint64_t>> queue;  // (state, depth)

  store.push_back(g0);
  ids.emplace(&store.back(), 0);
  queue.push_back({0, 0});

  // Edges are produced in BFS order of the source state; within one source the
  // successor list is label-sorted already, which fixes numbering and bytes.
  while (!queue.empty()) {
    auto [id, depth] = queue.front();
    queue.pop_front();
    std::vector<Successor> sucs = successors(store[id], s, lts.reliable);
    // A depth cut that would hide transitions is an error, not a silent truncation.
    if (limits.max_depth && depth >= limits.max_depth) {
      if (!sucs.empty()) return LimitExceeded{"max_depth", limits.max_depth};
      continue;
    }
    for (Successor& suc : sucs) {
      std::uint32_t to;
      auto it = ids.find(&suc.state);
      if (it != ids.end()) {
        to = it->second;
      } else {
        if (store.size() >= limits.max_states)
          return LimitExceeded{"max_states", limits.max_states};
        to = static_cast<std::uint32_t>(store.size());
        store.push_back(std::move(suc.state));
        ids.emplace(&store.back(), to);
        queue.push_back({to, depth + 1});
      }
      lts.edges.push_back(Lts::Edge{id, to, std::move(suc.label)});
    }
  }

  lts.states.assign(std::make_move_iterator(store.begin()), std::make_move_iterator(store.end()));

  lts.out_begin.assign(lts.states.size() + 1, 0);
  for (const Lts::Edge& e : lts.edges) lts.out_begin[e.from + 1]++;
  for (std::size_t i = 1; i < lts.out_begin.size(); ++i) lts.out_begin[i] += lts.out_begin[i - 1];

  // Reduction reachability: closure over Comm/CrashDetect/Crash edges.
  lts.red_reachable.assign(lts.states.size(), 0);
  std::deque<std::uint32_t> rq;
  lts.red_reachable[0] = 1;
  rq.push_back(0);
  while (!rq.empty()) {
    std::uint32_t v = rq.front();
    rq.pop_front();
    for (std::uint32_t i = lts.out_begin[v]; i < lts.out_begin[v + 1]; ++i) {
      const Lts::Edge& e = lts.edges[i];
      if (!lts.is_reduction_edge(e)) continue;
      if (!lts.red_reachable[e.to]) {
        lts.red_reachable[e.to] = 1;
        rq.push_back(e.to);
      }
    }
  }
  for (char c : lts.red_reachable) lts.red_state_count += c ? 1 : 0;
  for (const Lts::Edge& e : lts.edges)
    if (lts.red_reachable[e.from] && lts.is_reduction_edge(e)) lts.red_edge_count++;

  return lts;
}

namespace {
std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}
}  // namespace

std::string lts_to_dot(const Lts& lts) {
  std::string out = "digraph lts {\n";
  out += "  rankdir=LR;\n";
  out += "  node [shape=circle, fontsize=10];\n";
  for (std::size_t i = 0; i < lts.states.size(); ++i) {
    out += "  n" + std::to_string(i) + " [label=\"" + std::to_string(i) + "\"";
    if (lts.red_reachable[i]) out += ", style=bold";
    out += ", tooltip=\"" + dot_escape(context_short(lts.states[i])) + "\"];\n";
  }
  for (const Lts::Edge& e : lts.edges) {
    out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) + " [label=\"" +
           dot_escape(label_render(e.label)) + "\"";
    if (!lts.is_reduction_edge(e)) out += ", style=dashed, color=gray";
    out += "];\n";
  }
  out += "}\n";
  return out;
}

std::string lts_to_json(const Lts& lts) {
  nlohmann::ordered_json j;
  j["session"] = lts.session;
  j["reliable"] = lts.reliable;
  j["states"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < lts.states.size(); ++i) {
    nlohmann::ordered_json st;
    st["id"] = i;
    st["context"] = context_short(lts.states[i]);
    st["reduction_reachable"] = static_cast<bool>(lts.red_reachable[i]);
    j["states"].push_back(std::move(st));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const Lts::Edge& e : lts.edges) {
    nlohmann::ordered_json ed;
    ed["from"] = e.from;
    ed["to"] = e.to;
    ed["kind"] = [&] {
      switch (e.label.kind) {
        case ActKind::Output: return "output";
        case ActKind::Input: return "input";
        case ActKind::Comm: return "comm";
        case ActKind::Crash: return "crash";
        case ActKind::CrashDetect: return "crash_detect";
        case ActKind::Stopped: return "stopped";
      }
      return "?";
    }();
    ed["label"] = label_render(e.label);
    j["edges"].push_back(std::move(ed));
  }
  j["stats"]["states"] = lts.states.size();
  j["stats"]["edges"] = lts.edges.size();
  j["stats"]["reduction_reachable_states"] = lts.red_state_count;
  j["stats"]["reduction_reachable_edges"] = lts.red_edge_count;
  return j.dump(2) + "\n";
}

}  // namespace mpst
