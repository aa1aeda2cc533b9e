#pragma once

#include <cstddef>
#include <string>

#include "utp/config.hpp"

namespace utp {

class Dispatcher;
class Task;

/// A node of the flow graph. The dispatcher routes tasks in with submit();
/// non-kernel executors call Dispatcher::on_ready when a task's
/// dependencies are satisfied and receive mark_finished once the task's
/// whole subtree has completed.
class Executor {
 public:
  Executor(Dispatcher& d, std::size_t index, std::string id, NodeKind kind)
      : dispatcher_(d), index_(index), id_(std::move(id)), kind_(kind) {}
  virtual ~Executor() = default;
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  // Takes the task from Created to Submitted and emits the submitted event.
  virtual void submit(Task& t) = 0;
  virtual void mark_finished(Task& t) = 0;
  // Stops and joins execution contexts. Idempotent.
  virtual void shutdown() {}
  virtual std::string describe_pending() const { return {}; }

  std::size_t index() const noexcept { return index_; }
  const std::string& id() const noexcept { return id_; }
  NodeKind kind() const noexcept { return kind_; }

 protected:
  Dispatcher& dispatcher_;

 private:
  std::size_t index_;
  std::string id_;
  NodeKind kind_;
};

}  // namespace utp
