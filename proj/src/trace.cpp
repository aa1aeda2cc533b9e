#include "utp/trace.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "utp/error.hpp"
#include "utp/task.hpp"

namespace utp {
namespace {

thread_local int tl_context = 0;

std::atomic<std::uint64_t> g_tracer_uid{1};

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

constexpr std::string_view kArrow = "\xE2\x86\x92";  // U+2192

template <typename T>
bool parse_int(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

// Splits one CSV record; the last field may be double-quoted.
bool split_record(const std::string& line, std::vector<std::string>& fields) {
  fields.clear();
  std::string cur;
  bool quoted = false, in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"' && cur.empty() && !quoted) {
      in_quotes = quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      quoted = false;
    } else {
      cur += ch;
    }
  }
  if (in_quotes) return false;
  fields.push_back(std::move(cur));
  return true;
}

}  // namespace

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::Submitted: return "submitted";
    case EventKind::Ready: return "ready";
    case EventKind::RunStart: return "run_start";
    case EventKind::RunEnd: return "run_end";
    case EventKind::Finished: return "finished";
    case EventKind::Message: return "message";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view s) noexcept {
  for (EventKind k : {EventKind::Submitted, EventKind::Ready, EventKind::RunStart, EventKind::RunEnd,
                      EventKind::Finished, EventKind::Message}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

int current_context() noexcept { return tl_context; }

ContextScope::ContextScope(int ctx) noexcept : saved_(tl_context) { tl_context = ctx; }
ContextScope::~ContextScope() { tl_context = saved_; }

Tracer::Tracer(bool enabled) : enabled_(enabled), uid_(g_tracer_uid.fetch_add(1)), t0_(now_ns()) {}
Tracer::~Tracer() = default;

Tracer::Buffer& Tracer::local() {
  // Keyed by uid so a stale entry from a destroyed tracer is never reused.
  thread_local std::unordered_map<std::uint64_t, Buffer*> cache;
  auto it = cache.find(uid_);
  if (it != cache.end()) return *it->second;
  std::lock_guard lock(mu_);
  buffers_.push_back(std::make_unique<Buffer>());
  Buffer* b = buffers_.back().get();
  cache.emplace(uid_, b);
  return *b;
}

void Tracer::push(TraceEvent ev) {
  ev.seq = next_seq_.fetch_add(1, std::memory_order_acq_rel);
  ev.t_ns = now_ns() - t0_;
  local().events.push_back(std::move(ev));
}

void Tracer::task_event(std::string_view node, const Task& t, EventKind kind, int ctx) {
  if (!enabled_) return;
  TraceEvent ev;
  ev.node = node;
  ev.ctx = ctx;
  ev.task = static_cast<std::int64_t>(t.id());
  ev.parent = t.parent() ? static_cast<std::int64_t>(t.parent()->id()) : -1;
  ev.op = t.op_name();
  ev.level = static_cast<int>(t.level());
  ev.event = kind;
  ev.detail = t.describe_args();
  push(std::move(ev));
}

void Tracer::message(std::string_view node, int src, int dst, std::string_view handle,
                     std::uint64_t epoch, const Task& consumer) {
  if (!enabled_) return;
  TraceEvent ev;
  ev.node = node;
  ev.ctx = src;
  ev.task = static_cast<std::int64_t>(consumer.id());
  ev.parent = consumer.parent() ? static_cast<std::int64_t>(consumer.parent()->id()) : -1;
  ev.op = consumer.op_name();
  ev.level = static_cast<int>(consumer.level());
  ev.event = EventKind::Message;
  ev.detail = message_detail(src, dst, handle, epoch);
  push(std::move(ev));
}

std::vector<TraceEvent> Tracer::collect() {
  std::lock_guard lock(mu_);
  std::vector<TraceEvent> all;
  for (auto& b : buffers_) {
    std::move(b->events.begin(), b->events.end(), std::back_inserter(all));
    b->events.clear();
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return all;
}

std::string message_detail(int src, int dst, std::string_view handle, std::uint64_t epoch) {
  std::string s = std::to_string(src);
  s += kArrow;
  s += std::to_string(dst);
  s += ',';
  s += handle;
  s += ',';
  s += std::to_string(epoch);
  return s;
}

std::optional<MessageInfo> parse_message_detail(std::string_view d) {
  const auto arrow = d.find(kArrow);
  if (arrow == std::string_view::npos) return std::nullopt;
  const auto c1 = d.find(',', arrow);
  const auto c2 = d.rfind(',');
  if (c1 == std::string_view::npos || c2 == c1) return std::nullopt;
  MessageInfo m;
  if (!parse_int(d.substr(0, arrow), m.src) ||
      !parse_int(d.substr(arrow + kArrow.size(), c1 - arrow - kArrow.size()), m.dst) ||
      !parse_int(d.substr(c2 + 1), m.epoch)) {
    return std::nullopt;
  }
  m.handle = std::string(d.substr(c1 + 1, c2 - c1 - 1));
  if (m.handle.empty()) return std::nullopt;
  return m;
}

void write_trace(std::ostream& os, const std::vector<TraceEvent>& events) {
  os << kTraceHeader << '\n';
  for (const auto& e : events) {
    os << e.seq << ',' << e.t_ns << ',' << e.node << ',' << e.ctx << ',' << e.task << ',' << e.parent
       << ',' << e.op << ',' << e.level << ',' << to_string(e.event) << ",\"";
    for (char ch : e.detail) {
      if (ch == '"') os << '"';
      os << ch;
    }
    os << "\"\n";
  }
}

std::vector<TraceEvent> read_trace(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("trace: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw UsageError("trace: line 1: expected header '" + std::string(kTraceHeader) + "'");
  std::vector<TraceEvent> out;
  std::vector<std::string> f;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto bad = [&](std::string_view what) {
      return UsageError("trace: line " + std::to_string(lineno) + ": " + std::string(what));
    };
    if (!split_record(line, f) || f.size() != 10) throw bad("expected 10 fields");
    TraceEvent e;
    if (!parse_int(f[0], e.seq)) throw bad("bad seq");
    if (!parse_int(f[1], e.t_ns)) throw bad("bad t_ns");
    e.node = f[2];
    if (e.node.empty()) throw bad("empty node");
    if (!parse_int(f[3], e.ctx)) throw bad("bad ctx");
    if (!parse_int(f[4], e.task)) throw bad("bad task");
    if (!parse_int(f[5], e.parent)) throw bad("bad parent");
    e.op = f[6];
    if (!parse_int(f[7], e.level)) throw bad("bad level");
    auto kind = parse_event_kind(f[8]);
    if (!kind) throw bad("unknown event '" + f[8] + "'");
    e.event = *kind;
    e.detail = f[9];
    out.push_back(std::move(e));
  }
  if (out.empty()) throw UsageError("trace: no events");
  return out;
}

}  // namespace utp
