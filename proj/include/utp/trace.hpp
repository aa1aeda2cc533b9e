#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace utp {

class Task;

enum class EventKind { Submitted, Ready, RunStart, RunEnd, Finished, Message };

std::string_view to_string(EventKind k) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view s) noexcept;

/// One lifecycle record. Column order in files follows field order here.
struct TraceEvent {
  std::uint64_t seq = 0;
  std::int64_t t_ns = 0;
  std::string node;
  int ctx = 0;
  std::int64_t task = -1;
  std::int64_t parent = -1;
  std::string op;
  int level = 0;
  EventKind event = EventKind::Submitted;
  std::string detail;
};

inline constexpr std::string_view kTraceHeader = "seq,t_ns,node,ctx,task,parent,op,level,event,detail";

/// Ordinal of the calling execution context (worker or rank); 0 for the
/// program thread.
int current_context() noexcept;

class ContextScope {
 public:
  explicit ContextScope(int ctx) noexcept;
  ~ContextScope();
  ContextScope(const ContextScope&) = delete;
  ContextScope& operator=(const ContextScope&) = delete;

 private:
  int saved_;
};

/// Collects events into per-thread buffers; `collect` merges by seq. Must
/// only be called once every emitting thread is quiescent.
class Tracer {
 public:
  explicit Tracer(bool enabled = true);
  ~Tracer();
  Tracer(const Tracer&) = delete;
  Tracer& operator=(const Tracer&) = delete;

  bool enabled() const noexcept { return enabled_; }

  void task_event(std::string_view node, const Task& t, EventKind kind, int ctx);
  void task_event(std::string_view node, const Task& t, EventKind kind) {
    task_event(node, t, kind, current_context());
  }
  // `consumer` is the task whose read triggered the transfer.
  void message(std::string_view node, int src, int dst, std::string_view handle,
               std::uint64_t epoch, const Task& consumer);

  std::vector<TraceEvent> collect();

 private:
  struct Buffer {
    std::vector<TraceEvent> events;
  };
  Buffer& local();
  void push(TraceEvent ev);

  bool enabled_;
  std::uint64_t uid_;
  std::int64_t t0_;
  std::atomic<std::uint64_t> next_seq_{0};
  std::mutex mu_;
  std::vector<std::unique_ptr<Buffer>> buffers_;
};

void write_trace(std::ostream& os, const std::vector<TraceEvent>& events);
/// Throws UsageError on malformed input, including an empty stream.
std::vector<TraceEvent> read_trace(std::istream& is);

// Message detail helpers: "src→dst,handle,epoch".
std::string message_detail(int src, int dst, std::string_view handle, std::uint64_t epoch);
struct MessageInfo {
  int src = 0;
  int dst = 0;
  std::string handle;
  std::uint64_t epoch = 0;
};
std::optional<MessageInfo> parse_message_detail(std::string_view detail);

}  // namespace utp
