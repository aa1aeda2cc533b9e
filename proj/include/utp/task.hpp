#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "utp/data.hpp"

namespace utp {

using TaskId = std::uint64_t;

enum class AccessMode { Read, ReadWrite };

std::string_view to_string(AccessMode m) noexcept;  // "R" / "RW"

enum class TaskState { Created, Submitted, Ready, Running, AwaitingChildren, Finished };

std::string_view to_string(TaskState s) noexcept;

struct TaskArg {
  const DataHandle* handle = nullptr;
  AccessMode mode = AccessMode::Read;
};

class Operation;

/// A unit of work. Created by TaskFactory, owned by the dispatcher.
class Task {
 public:
  Task(TaskId id, const Operation& op, Task* parent, std::vector<TaskArg> args, MatrixStore& store);
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;

  TaskId id() const noexcept { return id_; }
  const Operation& op() const noexcept { return *op_; }
  const std::string& op_name() const noexcept;
  Task* parent() const noexcept { return parent_; }
  std::span<const TaskArg> args() const noexcept { return args_; }
  std::size_t level() const noexcept { return level_; }
  bool args_are_leaves() const noexcept;

  // Memory the task's kernels operate on. Defaults to the handles' store;
  // the distributed simulator points tasks at per-rank replicas.
  MatrixStore& store() const noexcept { return *store_; }
  void set_store(MatrixStore& s) noexcept { store_ = &s; }

  TaskState state() const noexcept { return state_.load(std::memory_order_acquire); }
  // Atomic checked transition along the lifecycle; throws InternalError
  // on an illegal edge or a lost race.
  void transition(TaskState to);

  std::size_t pending_children() const noexcept { return pending_.load(std::memory_order_acquire); }
  void set_pending_children(std::size_t n) noexcept { pending_.store(n, std::memory_order_release); }
  // Returns the remaining count after the decrement.
  std::size_t child_finished();

  // Routing bookkeeping maintained by the dispatcher.
  std::size_t node = 0;
  int rank = -1;

  // "A(1,0):R A(1,1):RW"
  std::string describe_args() const;

 private:
  TaskId id_;
  const Operation* op_;
  Task* parent_;
  std::vector<TaskArg> args_;
  std::size_t level_;
  MatrixStore* store_;
  std::atomic<TaskState> state_{TaskState::Created};
  std::atomic<std::size_t> pending_{0};
};

/// Receives the child tasks an operation's split produces.
class ChildSink {
 public:
  virtual ~ChildSink() = default;
  virtual void emit(std::string_view op_name, std::vector<TaskArg> args) = 0;
};

/// Named (split, run) behavior pair.
class Operation {
 public:
  using SplitFn = std::function<void(const Task&, ChildSink&)>;
  using RunFn = std::function<void(const Task&)>;

  Operation(std::string name, SplitFn split, RunFn run)
      : name_(std::move(name)), split_(std::move(split)), run_(std::move(run)) {}

  const std::string& name() const noexcept { return name_; }
  void split(const Task& t, ChildSink& sink) const { split_(t, sink); }
  void run(const Task& t) const { run_(t); }

 private:
  std::string name_;
  SplitFn split_;
  RunFn run_;
};

class OperationRegistry {
 public:
  void add(Operation op);
  const Operation& find(std::string_view name) const;  // RegistryError if unknown
  bool contains(std::string_view name) const;

 private:
  std::map<std::string, Operation, std::less<>> ops_;
};

/// Creates tasks with strictly increasing ids.
class TaskFactory {
 public:
  explicit TaskFactory(const OperationRegistry& registry) : registry_(registry) {}

  std::unique_ptr<Task> create(std::string_view op_name, Task* parent, std::vector<TaskArg> args);
  const OperationRegistry& registry() const noexcept { return registry_; }

 private:
  const OperationRegistry& registry_;
  std::atomic<TaskId> next_{1};
};

/// Read-coalescing access epochs for one handle at one executor node.
/// Consecutive reads share an epoch; every read-write access opens its own.
class EpochLedger {
 public:
  struct Epoch {
    AccessMode mode;
    std::vector<TaskId> tasks;
    std::size_t unfinished = 0;
  };

  // Returns the epoch index the task was placed in.
  std::size_t record(TaskId task, AccessMode mode);
  // True iff every task in every epoch before `epoch` has finished.
  bool is_released(std::size_t epoch) const noexcept { return epoch <= front_; }
  bool is_released_for(TaskId task) const { return is_released(epoch_of(task)); }
  // Marks `task` finished; returns tasks whose epoch became released.
  std::vector<TaskId> finish(TaskId task);

  std::size_t epoch_of(TaskId task) const;
  const std::vector<Epoch>& epochs() const noexcept { return epochs_; }
  bool drained() const noexcept { return front_ == epochs_.size(); }

 private:
  std::vector<Epoch> epochs_;
  std::unordered_map<TaskId, std::size_t> epoch_of_;
  std::size_t front_ = 0;  // first epoch with unfinished tasks
};

/// Ledgers of one executor node keyed by (memory, handle).
class LedgerSet {
 public:
  // Registers all of `t`'s accesses; returns how many args are not yet
  // released.
  std::size_t record(const Task& t);
  // Returns ids of tasks for which one arg became released, one entry per
  // released (task, handle) pair.
  std::vector<TaskId> finish(const Task& t);
  bool is_ready(const Task& t) const;
  // Epoch index of `t` on one of its args.
  std::size_t epoch_of(const Task& t, const TaskArg& arg) const;
  std::string describe_waiting(const Task& t) const;

 private:
  struct Key {
    const MatrixStore* store;
    HandleId handle;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<const void*>{}(k.store) ^ (std::size_t{k.handle} * 0x9e3779b97f4a7c15ULL);
    }
  };
  const EpochLedger* find(const Task& t, const TaskArg& a) const;

  std::unordered_map<Key, EpochLedger, KeyHash> ledgers_;
};

/// True iff `t` is dependency-ready on every arg in `ledgers`.
inline bool is_ready(const Task& t, const LedgerSet& ledgers) { return ledgers.is_ready(t); }

}  // namespace utp
