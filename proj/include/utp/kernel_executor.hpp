#pragma once

#include "utp/executor.hpp"

namespace utp {

/// Terminal node: runs each task synchronously in the caller's context and
/// reports completion. No queue and no dependency tracking; ordering is
/// the business of the level above.
class KernelExecutor final : public Executor {
 public:
  KernelExecutor(Dispatcher& d, std::size_t index, std::string id)
      : Executor(d, index, std::move(id), NodeKind::Kernel) {}

  void submit(Task& t) override;
  void mark_finished(Task&) override {}

  /// Runs a task that became ready at node `origin` (another node's task
  /// whose arguments are leaves).
  void execute_ready(Task& t);

 private:
  void run_leaf(Task& t);
};

}  // namespace utp
