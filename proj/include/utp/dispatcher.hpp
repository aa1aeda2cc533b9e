#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "utp/config.hpp"
#include "utp/executor.hpp"
#include "utp/task.hpp"
#include "utp/trace.hpp"

namespace utp {

class KernelExecutor;

/// Routes program tasks through the flow graph.
///
/// The dispatcher is itself depth 0: a program task over partitioned data
/// is split once here and its children enter the root node. A non-kernel
/// node at depth d manages level-d tasks; when one becomes ready it is
/// split into the next node, or, if its arguments are leaves, executed by
/// the kernel node. Completions travel back up through on_finished.
class Dispatcher {
 public:
  struct Options {
    bool trace = false;
    std::chrono::milliseconds deadlock_timeout{30000};
  };

  static constexpr std::size_t kSelf = static_cast<std::size_t>(-1);
  static constexpr std::string_view kSelfName = "dispatcher";

  Dispatcher(const FlowGraph& graph, const OperationRegistry& registry, Options options);
  Dispatcher(const FlowGraph& graph, const OperationRegistry& registry)
      : Dispatcher(graph, registry, Options{}) {}
  ~Dispatcher();
  Dispatcher(const Dispatcher&) = delete;
  Dispatcher& operator=(const Dispatcher&) = delete;

  // Program interface.
  Task& create_task(std::string_view op_name, std::vector<TaskArg> args);
  void submit(Task& t);
  Task& submit(std::string_view op_name, std::vector<TaskArg> args) {
    Task& t = create_task(op_name, std::move(args));
    submit(t);
    return t;
  }
  /// Blocks until every submitted program task has finished. Rethrows the
  /// first task failure; throws DeadlockError if nothing happens for the
  /// configured timeout while work remains.
  void wait_all();
  /// Joins all execution contexts. Called by the destructor.
  void shutdown();

  // Executor interface.
  void on_ready(std::size_t node, Task& t);
  /// `t`'s own work (kernel run or all children) is done.
  void finish(Task& t);
  /// Splits a ready task and routes its children to `next`.
  void split(Task& t, std::size_t next);
  void route(std::size_t node, Task& t);
  void fail(std::exception_ptr e);
  bool failed() const noexcept { return failed_.load(std::memory_order_acquire); }
  void note_event() noexcept { events_.fetch_add(1, std::memory_order_relaxed); }
  void count_leaf() noexcept { leaf_tasks_.fetch_add(1, std::memory_order_relaxed); }
  void count_message() noexcept { messages_.fetch_add(1, std::memory_order_relaxed); }

  Tracer& tracer() noexcept { return tracer_; }
  std::string_view node_name(std::size_t node) const;
  std::size_t node_count() const noexcept { return executors_.size(); }
  Executor& executor(std::size_t node) { return *executors_.at(node); }
  KernelExecutor& kernel_node() { return *kernel_; }
  std::size_t kernel_index() const noexcept { return executors_.size() - 1; }
  const FlowGraph& graph() const noexcept { return graph_; }

  std::size_t leaf_tasks() const noexcept { return leaf_tasks_.load(); }
  std::size_t messages() const noexcept { return messages_.load(); }
  /// Shuts down and returns the merged trace.
  std::vector<TraceEvent> take_trace();
  std::string describe_unfinished() const;

 private:
  class Sink;
  Task& adopt(std::unique_ptr<Task> t);

  FlowGraph graph_;
  TaskFactory factory_;
  Options options_;
  Tracer tracer_;
  std::vector<std::unique_ptr<Executor>> executors_;  // root-to-sink order
  KernelExecutor* kernel_ = nullptr;

  mutable std::mutex tasks_mu_;
  std::vector<std::unique_ptr<Task>> tasks_;

  std::mutex wait_mu_;
  std::condition_variable wait_cv_;
  std::size_t outstanding_roots_ = 0;
  std::exception_ptr failure_;
  std::atomic<bool> failed_{false};
  std::atomic<bool> waiting_{false};
  std::atomic<std::uint64_t> events_{0};
  std::atomic<std::size_t> leaf_tasks_{0};
  std::atomic<std::size_t> messages_{0};
  bool shut_down_ = false;
};

}  // namespace utp
