#include "context.hpp"

#include <algorithm>

namespace mpst {

namespace {
std::size_t mix(std::size_t h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}
std::size_t str_hash(const std::string& s) { return std::hash<std::string>{}(s); }
}  // namespace

void Context::set(const Endpoint& ep, TypeRef t) {
  auto it = std::lower_bound(entries.begin(), entries.end(), ep,
                             [](const auto& e, const Endpoint& k) { return e.first < k; });
  if (it != entries.end() && it->first == ep) {
    it->second = std::move(t);
  } else {
    entries.insert(it, {ep, std::move(t)});
  }
}

const TypeRef* Context::find(const Endpoint& ep) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), ep,
                             [](const auto& e, const Endpoint& k) { return e.first < k; });
  if (it != entries.end() && it->first == ep) return &it->second;
  return nullptr;
}

bool Context::erase(const Endpoint& ep) {
  auto it = std::lower_bound(entries.begin(), entries.end(), ep,
                             [](const auto& e, const Endpoint& k) { return e.first < k; });
  if (it != entries.end() && it->first == ep) {
    entries.erase(it);
    return true;
  }
  return false;
}

bool Context::has_session(const std::string& s) const {
  for (const auto& [ep, _] : entries)
    if (ep.session == s) return true;
  return false;
}

std::vector<std::string> Context::roles_of(const std::string& s) const {
  std::vector<std::string> out;
  for (const auto& [ep, _] : entries)
    if (ep.session == s) out.push_back(ep.role);
  return out;
}

int context_compare(const Context& a, const Context& b) {
  if (a.entries.size() != b.entries.size())
    return a.entries.size() < b.entries.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const auto& [ea, ta] = a.entries[i];
    const auto& [eb, tb] = b.entries[i];
    if (ea.session != eb.session) return ea.session < eb.session ? -1 : 1;
    if (ea.role != eb.role) return ea.role < eb.role ? -1 : 1;
    if (int c = type_compare(ta, tb)) return c;
  }
  return 0;
}

bool context_equal(const Context& a, const Context& b) { return context_compare(a, b) == 0; }

std::size_t context_hash(const Context& g) {
  std::size_t h = 0xc0117e87;
  for (const auto& [ep, t] : g.entries) {
    h = mix(h, str_hash(ep.session));
    h = mix(h, str_hash(ep.role));
    h = mix(h, type_hash(t));
  }
  return h;
}

std::string context_short(const Context& g) {
  std::string out = "{";
  bool first = true;
  for (const auto& [ep, t] : g.entries) {
    if (!first) out += ", ";
    first = false;
    out += ep.session + "[" + ep.role + "]: " + type_short(t);
  }
  out += "}";
  return out;
}

bool TransitionLabel::operator==(const TransitionLabel& o) const {
  return label_compare(*this, o) == 0;
}

int label_compare(const TransitionLabel& a, const TransitionLabel& b) {
  if (a.kind != b.kind) return static_cast<int>(a.kind) - static_cast<int>(b.kind);
  if (int c = a.session.compare(b.session)) return c;
  if (int c = a.p.compare(b.p)) return c;
  if (int c = a.q.compare(b.q)) return c;
  if (int c = a.label.compare(b.label)) return c;
  return payload_compare(a.payload, b.payload);
}

std::size_t label_hash(const TransitionLabel& l) {
  std::size_t h = static_cast<std::size_t>(l.kind) * 0x85ebca6b;
  h = mix(h, str_hash(l.session));
  h = mix(h, str_hash(l.p));
  h = mix(h, str_hash(l.q));
  h = mix(h, str_hash(l.label));
  h = mix(h, payload_hash(l.payload));
  return h;
}

namespace {
std::string payload_render(const Payload& p) {
  if (p.is_session()) return type_short(p.session);
  return sort_name(p.sort);
}
}  // namespace

std::string label_render(const TransitionLabel& l) {
  switch (l.kind) {
    case ActKind::Output: {
      std::string out = "out " + l.session + ":" + l.p + "->" + l.q + ":" + l.label;
      if (l.payload.is_session() || l.payload.sort != Sort::Unit)
        out += "(" + payload_render(l.payload) + ")";
      return out;
    }
    case ActKind::Input: {
      std::string out = "in " + l.session + ":" + l.p + "<-" + l.q + ":" + l.label;
      if (l.payload.is_session() || l.payload.sort != Sort::Unit)
        out += "(" + payload_render(l.payload) + ")";
      return out;
    }
    case ActKind::Comm:
      return "comm " + l.session + ":" + l.p + "~>" + l.q + ":" + l.label;
    case ActKind::Crash:
      return "crash " + l.session + ":" + l.p;
    case ActKind::CrashDetect:
      return "crdet " + l.session + ":" + l.p + "," + l.q;
    case ActKind::Stopped:
      return "stop " + l.session + ":" + l.p;
  }
  return "?";
}

namespace {

Context with(const Context& g, const Endpoint& ep, TypeRef t) {
  Context out = g;
  out.set(ep, std::move(t));
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

std::vector<Successor> successors(const Context& g, const std::string& s,
                                  const std::vector<std::string>& reliable) {
  std::vector<Successor> out;

  struct Head {
    Endpoint ep;
    TypeRef raw;       // as stored (possibly rec-headed or stop)
    TypeRef head;      // full unfolding
  };
  std::vector<Head> heads;
  for (const auto& [ep, t] : g.entries) {
    if (ep.session != s) continue;
    heads.push_back(Head{ep, t, full_unfold(t)});
  }

  for (const Head& h : heads) {
    const std::string& r = h.ep.role;
    if (h.head->kind == TypeKind::Stop) {
      out.push_back({TransitionLabel{ActKind::Stopped, s, r, "", "", {}}, g});
      continue;
    }
    if (h.head->kind == TypeKind::Internal) {
      for (const Branch& b : h.head->branches) {
        out.push_back({TransitionLabel{ActKind::Output, s, r, h.head->peer, b.label, b.payload},
                       with(g, h.ep, b.cont)});
      }
    } else if (h.head->kind == TypeKind::External) {
      for (const Branch& b : h.head->branches) {
        out.push_back({TransitionLabel{ActKind::Input, s, r, h.head->peer, b.label, b.payload},
                       with(g, h.ep, b.cont)});
      }
    }
    // A non-terminated entry of an unreliable role may crash.
    if (!sub_end(h.raw) && !contains(reliable, r)) {
      out.push_back({TransitionLabel{ActKind::Crash, s, r, "", "", {}},
                     with(g, h.ep, t_stop())});
    }
  }

  // Pairwise rules: communication, lost messages, crash detection.
  for (const Head& sender : heads) {
    if (sender.head->kind != TypeKind::Internal) continue;
    const std::string& p = sender.ep.role;
    const std::string& q = sender.head->peer;
    const Head* recv = nullptr;
    for (const Head& h : heads)
      if (h.ep.role == q) { recv = &h; break; }
    if (!recv) continue;
    if (recv->head->kind == TypeKind::Stop) {
      // Message into a stopped endpoint is lost; the sender advances alone.
      for (const Branch& b : sender.head->branches) {
        out.push_back({TransitionLabel{ActKind::Comm, s, p, q, b.label, {}},
                       with(g, sender.ep, b.cont)});
      }
    } else if (recv->head->kind == TypeKind::External && recv->head->peer == p) {
      for (const Branch& sb : sender.head->branches) {
        for (const Branch& rb : recv->head->branches) {
          if (rb.label != sb.label) continue;
          if (!payload_sub(sb.payload, rb.payload)) continue;
          Context next = with(g, sender.ep, sb.cont);
          next.set(recv->ep, rb.cont);
          out.push_back({TransitionLabel{ActKind::Comm, s, p, q, sb.label, {}},
                         std::move(next)});
        }
      }
    }
  }
  for (const Head& det : heads) {
    if (det.head->kind != TypeKind::External) continue;
    const Head* peer = nullptr;
    for (const Head& h : heads)
      if (h.ep.role == det.head->peer) { peer = &h; break; }
    if (!peer || peer->head->kind != TypeKind::Stop) continue;
    for (const Branch& b : det.head->branches) {
      if (b.label != kCrashLabel) continue;
      out.push_back({TransitionLabel{ActKind::CrashDetect, s, det.ep.role, det.head->peer, "", {}},
                     with(g, det.ep, b.cont)});
    }
  }

  std::sort(out.begin(), out.end(), [](const Successor& a, const Successor& b) {
    if (int c = label_compare(a.label, b.label)) return c < 0;
    return context_compare(a.state, b.state) < 0;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Successor& a, const Successor& b) {
                          return label_compare(a.label, b.label) == 0 &&
                                 context_equal(a.state, b.state);
                        }),
            out.end());
  return out;
}

std::vector<Successor> reduction_successors(const Context& g, const std::string& s,
                                            const std::vector<std::string>& reliable,
                                            ReductionMode mode) {
  std::vector<Successor> all = successors(g, s, reliable);
  std::vector<Successor> out;
  for (Successor& suc : all) {
    ActKind k = suc.label.kind;
    bool keep = k == ActKind::Comm || k == ActKind::CrashDetect ||
                (mode == ReductionMode::MaybeCrash && k == ActKind::Crash);
    if (keep) out.push_back(std::move(suc));
  }
  return out;
}

}  // namespace mpst
