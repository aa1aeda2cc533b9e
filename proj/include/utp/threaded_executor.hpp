#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <vector>

#include "utp/executor.hpp"
#include "utp/task.hpp"

namespace utp {

/// Multi-worker dependency-tracking node. Tasks are registered in this
/// node's epoch ledgers in submission order; dependency-ready tasks go on
/// a FIFO queue drained by W long-lived workers, each of which delivers
/// the ready notification (and so the split and any kernel runs) inline.
class ThreadedExecutor final : public Executor {
 public:
  ThreadedExecutor(Dispatcher& d, std::size_t index, std::string id, std::size_t workers);
  ~ThreadedExecutor() override;

  void submit(Task& t) override;
  void mark_finished(Task& t) override;
  void shutdown() override;
  std::string describe_pending() const override;

  std::size_t workers() const noexcept { return threads_.size(); }

 private:
  void worker_loop(int ordinal);

  mutable std::mutex mu_;
  std::condition_variable cv_;
  LedgerSet ledgers_;
  std::deque<Task*> ready_;
  struct Parked {
    Task* task;
    std::size_t blocked;
  };
  std::unordered_map<TaskId, Parked> parked_;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace utp
