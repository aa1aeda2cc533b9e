#include "utp/threaded_executor.hpp"

#include <algorithm>
#include <sstream>

#include "utp/dispatcher.hpp"
#include "utp/error.hpp"

namespace utp {

ThreadedExecutor::ThreadedExecutor(Dispatcher& d, std::size_t index, std::string id, std::size_t workers)
    : Executor(d, index, std::move(id), NodeKind::Threaded) {
  if (workers == 0) throw ConfigError("threaded node needs at least one worker");
  threads_.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads_.emplace_back([this, w] { worker_loop(static_cast<int>(w)); });
  }
}

ThreadedExecutor::~ThreadedExecutor() { shutdown(); }

void ThreadedExecutor::shutdown() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& th : threads_) {
    if (th.joinable()) th.join();
  }
}

void ThreadedExecutor::submit(Task& t) {
  t.transition(TaskState::Submitted);
  dispatcher_.tracer().task_event(id(), t, EventKind::Submitted);
  {
    std::lock_guard lock(mu_);
    const std::size_t blocked = ledgers_.record(t);
    if (blocked > 0) {
      parked_.emplace(t.id(), Parked{&t, blocked});
      return;
    }
    ready_.push_back(&t);
  }
  cv_.notify_one();
}

void ThreadedExecutor::mark_finished(Task& t) {
  std::vector<Task*> released;
  {
    std::lock_guard lock(mu_);
    for (TaskId id : ledgers_.finish(t)) {
      auto it = parked_.find(id);
      if (it == parked_.end()) throw InternalError("threaded node: released task " + std::to_string(id) + " not parked");
      if (--it->second.blocked == 0) {
        released.push_back(it->second.task);
        parked_.erase(it);
      }
    }
    std::sort(released.begin(), released.end(), [](Task* a, Task* b) { return a->id() < b->id(); });
    ready_.insert(ready_.end(), released.begin(), released.end());
  }
  if (released.size() == 1) {
    cv_.notify_one();
  } else if (!released.empty()) {
    cv_.notify_all();
  }
}

void ThreadedExecutor::worker_loop(int ordinal) {
  ContextScope ctx(ordinal);
  while (true) {
    Task* t = nullptr;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stop_ || !ready_.empty(); });
      if (stop_) return;
      t = ready_.front();
      ready_.pop_front();
    }
    if (dispatcher_.failed()) continue;
    try {
      t->transition(TaskState::Ready);
      dispatcher_.tracer().task_event(id(), *t, EventKind::Ready);
    } catch (...) {
      dispatcher_.fail(std::current_exception());
      continue;
    }
    dispatcher_.on_ready(index(), *t);
  }
}

std::string ThreadedExecutor::describe_pending() const {
  std::lock_guard lock(mu_);
  std::ostringstream os;
  for (Task* t : ready_) os << "    ready task " << t->id() << " " << t->op_name() << '\n';
  for (const auto& [tid, p] : parked_) {
    os << "    parked task " << tid << " " << p.task->op_name() << " waiting on" << ledgers_.describe_waiting(*p.task)
       << '\n';
  }
  return os.str();
}

}  // namespace utp
