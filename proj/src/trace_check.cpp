#include "utp/trace_check.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <tuple>
#include <unordered_map>

namespace utp {
namespace {

constexpr std::string_view kDispatcherNode = "dispatcher";

struct Arg {
  std::string handle;
  bool write = false;
};

struct Rec {
  std::int64_t id = -1;
  std::int64_t parent = -1;
  int level = 0;
  std::string op;
  std::string detail;
  std::string node;
  int ctx = 0;  // at submission
  std::optional<std::uint64_t> submitted, ready, run_start, run_end, finished;
  std::vector<std::int64_t> children;
  std::vector<Arg> args;

  std::uint64_t gate() const { return ready ? *ready : run_start ? *run_start : *submitted; }
  std::string label() const { return "task " + std::to_string(id) + " " + op + " [" + detail + "]"; }
};

std::vector<Arg> parse_args(const std::string& detail) {
  std::vector<Arg> out;
  std::size_t start = 0;
  while (start < detail.size()) {
    std::size_t end = detail.find(' ', start);
    if (end == std::string::npos) end = detail.size();
    const std::string tok = detail.substr(start, end - start);
    start = end + 1;
    if (tok.empty()) continue;
    const auto colon = tok.rfind(':');
    Arg a;
    a.handle = colon == std::string::npos ? tok : tok.substr(0, colon);
    a.write = colon != std::string::npos && tok.substr(colon + 1) == "RW";
    out.push_back(std::move(a));
  }
  return out;
}

class Checker {
 public:
  Checker(const std::vector<TraceEvent>& ev, const CheckOptions& opts) : ev_(ev), dist_nodes_(opts.distributed_nodes) {}

  CheckReport run() {
    report_.events = ev_.size();
    check_seq();
    collect();
    report_.tasks = recs_.size();
    report_.messages = msgs_.size();
    for (auto& [id, r] : recs_) lifecycle(r);
    for (auto& [id, r] : recs_) hierarchy(r);
    find_domains();
    epochs();
    messages();
    std::stable_sort(report_.violations.begin(), report_.violations.end(),
                     [](const Violation& a, const Violation& b) { return a.seq < b.seq; });
    return std::move(report_);
  }

 private:
  void fail(std::uint64_t seq, std::int64_t task, std::string msg) {
    report_.violations.push_back({seq, task, std::move(msg)});
  }

  void check_seq() {
    for (std::size_t i = 1; i < ev_.size(); ++i) {
      if (ev_[i].seq <= ev_[i - 1].seq) {
        fail(ev_[i].seq, ev_[i].task,
             "seq " + std::to_string(ev_[i].seq) + " does not follow " + std::to_string(ev_[i - 1].seq));
      }
    }
  }

  void collect() {
    for (const auto& e : ev_) {
      if (e.event == EventKind::Message) {
        msgs_.push_back(&e);
        continue;
      }
      auto [it, fresh] = recs_.try_emplace(e.task);
      Rec& r = it->second;
      if (fresh) {
        r.id = e.task;
        r.parent = e.parent;
        r.level = e.level;
        r.op = e.op;
        r.detail = e.detail;
        r.args = parse_args(e.detail);
      } else if (r.parent != e.parent || r.op != e.op || r.level != e.level || r.detail != e.detail) {
        fail(e.seq, e.task, "task " + std::to_string(e.task) + " changes identity between events");
      }
      std::optional<std::uint64_t>* slot = nullptr;
      switch (e.event) {
        case EventKind::Submitted: slot = &r.submitted; break;
        case EventKind::Ready: slot = &r.ready; break;
        case EventKind::RunStart: slot = &r.run_start; break;
        case EventKind::RunEnd: slot = &r.run_end; break;
        case EventKind::Finished: slot = &r.finished; break;
        case EventKind::Message: break;
      }
      if (*slot) {
        fail(e.seq, e.task, r.label() + ": duplicate " + std::string(to_string(e.event)));
        continue;
      }
      *slot = e.seq;
      if (e.event == EventKind::Submitted) {
        r.node = e.node;
        r.ctx = e.ctx;
      }
      node_of_[{e.task, e.event}] = e.node;
    }
  }

  const std::string& node_at(const Rec& r, EventKind k) { return node_of_[{r.id, k}]; }

  void lifecycle(Rec& r) {
    if (!r.submitted) {
      fail(first_seq(r), r.id, r.label() + ": never submitted");
      return;
    }
    if (!r.finished) fail(*r.submitted, r.id, r.label() + ": never finished");
    // Expected order: submitted < ready < run_start < run_end < finished.
    std::uint64_t last = *r.submitted;
    EventKind last_kind = EventKind::Submitted;
    const std::pair<EventKind, std::optional<std::uint64_t>> order[] = {
        {EventKind::Ready, r.ready}, {EventKind::RunStart, r.run_start}, {EventKind::RunEnd, r.run_end},
        {EventKind::Finished, r.finished}};
    for (const auto& [k, s] : order) {
      if (!s) continue;
      if (*s <= last) {
        fail(*s, r.id, r.label() + ": " + std::string(to_string(k)) + " before " + std::string(to_string(last_kind)));
      }
      last = std::max(last, *s);
      last_kind = k;
    }
    if (r.run_start.has_value() != r.run_end.has_value()) {
      fail(r.run_start ? *r.run_start : *r.run_end, r.id, r.label() + ": unmatched run_start/run_end");
    }
    if (r.ready && node_at(r, EventKind::Ready) != r.node) {
      fail(*r.ready, r.id, r.label() + ": ready at '" + node_at(r, EventKind::Ready) + "' but submitted at '" + r.node + "'");
    }
    if (r.finished && node_at(r, EventKind::Finished) != r.node) {
      fail(*r.finished, r.id,
           r.label() + ": finished at '" + node_at(r, EventKind::Finished) + "' but submitted at '" + r.node + "'");
    }
    if (r.run_start && r.run_end && node_at(r, EventKind::RunStart) != node_at(r, EventKind::RunEnd)) {
      fail(*r.run_end, r.id, r.label() + ": run_start and run_end on different nodes");
    }
  }

  std::uint64_t first_seq(const Rec& r) const {
    for (const auto& o : {r.submitted, r.ready, r.run_start, r.run_end, r.finished}) {
      if (o) return *o;
    }
    return 0;
  }

  void hierarchy(Rec& r) {
    if (r.parent < 0) {
      if (r.level != 0) fail(first_seq(r), r.id, r.label() + ": level " + std::to_string(r.level) + " without parent");
      return;
    }
    auto it = recs_.find(r.parent);
    if (it == recs_.end()) {
      fail(first_seq(r), r.id, r.label() + ": parent " + std::to_string(r.parent) + " never appears");
      return;
    }
    Rec& p = it->second;
    p.children.push_back(r.id);
    if (r.level != p.level + 1) {
      fail(first_seq(r), r.id,
           r.label() + ": level " + std::to_string(r.level) + " under parent at level " + std::to_string(p.level));
    }
    if (p.run_start && p.children.size() == 1) fail(*p.run_start, p.id, p.label() + ": both executed and split");
    if (p.submitted && r.submitted) {
      const std::uint64_t anchor = p.ready ? *p.ready : *p.submitted;
      if (*r.submitted <= anchor) fail(*r.submitted, r.id, r.label() + ": created before its parent was ready");
    }
    if (p.finished && r.finished && *p.finished <= *r.finished) {
      fail(*p.finished, p.id, p.label() + ": finished before child " + std::to_string(r.id));
    }
  }

  // Memory domain of a task: the rank of its nearest ancestor-or-self that
  // was submitted at a distributed node; -1 outside any.
  void find_domains() {
    for (const auto* m : msgs_) dist_nodes_.insert(m->node);
    for (auto& [id, r] : recs_) {
      int dom = -1;
      const Rec* p = &r;
      while (p) {
        if (dist_nodes_.contains(p->node)) {
          dom = p->ctx;
          break;
        }
        auto it = p->parent >= 0 ? recs_.find(p->parent) : recs_.end();
        p = it == recs_.end() ? nullptr : &it->second;
      }
      domain_[id] = dom;
    }
  }

  // Owner rank of a handle at a distributed node: the rank of any writer,
  // else the source of any transfer.
  std::optional<int> owner(const std::string& node, const std::string& handle) const {
    if (auto it = writers_.find({node, handle}); it != writers_.end() && !it->second.empty()) {
      return it->second.front()->ctx;
    }
    for (const auto* m : msgs_) {
      if (m->node != node) continue;
      if (auto info = parse_message_detail(m->detail); info && info->handle == handle) return info->src;
    }
    return std::nullopt;
  }

  void epochs() {
    std::vector<Rec*> order;
    for (auto& [id, r] : recs_) {
      if (r.submitted && r.finished && r.node != kDispatcherNode) order.push_back(&r);
    }
    std::sort(order.begin(), order.end(), [](Rec* a, Rec* b) { return *a->submitted < *b->submitted; });
    for (Rec* r : order) {
      if (!dist_nodes_.contains(r->node)) continue;
      for (const auto& a : r->args) {
        if (a.write) writers_[{r->node, a.handle}].push_back(r);
      }
    }

    struct Slot {
      Rec* writer = nullptr;
      std::vector<Rec*> readers;
    };
    std::map<std::tuple<std::string, int, std::string>, Slot> slots;
    for (Rec* r : order) {
      const bool dist = dist_nodes_.contains(r->node);
      for (const auto& a : r->args) {
        if (dist && !a.write) {
          const auto o = owner(r->node, a.handle);
          if (o && *o != r->ctx) {
            remote_reads_.push_back({r, a.handle});
            continue;
          }
        }
        Slot& s = slots[{r->node, domain_[r->id], a.handle}];
        auto after = [&](Rec* prev) {
          if (*prev->finished >= r->gate()) {
            fail(r->gate(), r->id,
                 r->label() + " proceeds on " + a.handle + " before " + prev->label() + " finished");
          }
        };
        if (a.write) {
          if (s.readers.empty()) {
            if (s.writer) after(s.writer);
          } else {
            for (Rec* rd : s.readers) after(rd);
          }
          s.writer = r;
          s.readers.clear();
        } else {
          if (s.writer) after(s.writer);
          s.readers.push_back(r);
        }
      }
    }
  }

  void messages() {
    using Key = std::tuple<std::string, std::string, std::uint64_t, int>;  // node, handle, version, dst
    std::map<Key, std::vector<Rec*>> needed;
    for (const auto& [r, handle] : remote_reads_) {
      const auto& ws = writers_[{r->node, handle}];
      const auto v = static_cast<std::uint64_t>(
          std::count_if(ws.begin(), ws.end(), [&](Rec* w) { return *w->submitted < *r->submitted; }));
      needed[{r->node, handle, v, r->ctx}].push_back(r);
    }
    std::map<Key, const TraceEvent*> seen;
    for (const auto* m : msgs_) {
      const auto info = parse_message_detail(m->detail);
      if (!info) {
        fail(m->seq, m->task, "malformed message detail '" + m->detail + "'");
        continue;
      }
      const Key k{m->node, info->handle, info->epoch, info->dst};
      if (!seen.emplace(k, m).second) {
        fail(m->seq, m->task, "duplicate transfer of " + info->handle + " epoch " + std::to_string(info->epoch) +
                                  " to rank " + std::to_string(info->dst));
        continue;
      }
      if (!needed.contains(k)) {
        fail(m->seq, m->task, "unnecessary transfer of " + info->handle + " epoch " + std::to_string(info->epoch) +
                                  " to rank " + std::to_string(info->dst));
      }
      if (const auto o = owner(m->node, info->handle); o && *o != info->src) {
        fail(m->seq, m->task,
             "transfer of " + info->handle + " sent by rank " + std::to_string(info->src) + ", owner is " +
                 std::to_string(*o));
      }
    }
    for (const auto& [k, consumers] : needed) {
      const auto& [node, handle, v, dst] = k;
      auto it = seen.find(k);
      if (it == seen.end()) {
        for (Rec* c : consumers) {
          fail(c->gate(), c->id,
               c->label() + " on rank " + std::to_string(dst) + " reads remote " + handle + " epoch " +
                   std::to_string(v) + " with no transfer");
        }
        continue;
      }
      const std::uint64_t ms = it->second->seq;
      const auto& ws = writers_[{node, handle}];
      if (v >= 1 && v <= ws.size() && ws[v - 1]->finished && *ws[v - 1]->finished >= ms) {
        fail(ms, it->second->task, "transfer of " + handle + " epoch " + std::to_string(v) + " before " +
                                       ws[v - 1]->label() + " finished");
      }
      if (v < ws.size() && ws[v]->gate() <= ms) {
        fail(ms, it->second->task, "transfer of " + handle + " epoch " + std::to_string(v) + " after " +
                                       ws[v]->label() + " started overwriting it");
      }
      for (Rec* c : consumers) {
        if (c->gate() <= ms) {
          fail(c->gate(), c->id, c->label() + " proceeds before the transfer of " + handle + " arrived");
        }
      }
    }
  }

  const std::vector<TraceEvent>& ev_;
  CheckReport report_;
  std::map<std::int64_t, Rec> recs_;
  std::map<std::pair<std::int64_t, EventKind>, std::string> node_of_;
  std::vector<const TraceEvent*> msgs_;
  std::set<std::string> dist_nodes_;
  std::unordered_map<std::int64_t, int> domain_;
  std::map<std::pair<std::string, std::string>, std::vector<Rec*>> writers_;
  std::vector<std::pair<Rec*, std::string>> remote_reads_;
};

}  // namespace

CheckReport check_trace(const std::vector<TraceEvent>& events, const CheckOptions& options) {
  return Checker(events, options).run();
}

std::multiset<std::string> leaf_multiset(const std::vector<TraceEvent>& events) {
  std::multiset<std::string> out;
  for (const auto& e : events) {
    if (e.event == EventKind::RunStart) out.insert(e.op + " " + e.detail);
  }
  return out;
}

std::multiset<std::string> task_tree_signature(const std::vector<TraceEvent>& events) {
  std::map<std::int64_t, std::pair<std::int64_t, std::string>> tasks;  // id -> (parent, "op detail")
  for (const auto& e : events) {
    if (e.event == EventKind::Submitted) tasks.emplace(e.task, std::pair{e.parent, e.op + " " + e.detail});
  }
  std::multiset<std::string> out;
  for (const auto& [id, t] : tasks) {
    std::string path = t.second;
    for (std::int64_t p = t.first; p >= 0;) {
      auto it = tasks.find(p);
      if (it == tasks.end()) break;
      path = it->second.second + " / " + path;
      p = it->second.first;
    }
    out.insert(std::move(path));
  }
  return out;
}

}  // namespace utp
