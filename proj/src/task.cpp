#include "utp/task.hpp"

#include <string>

#include "utp/error.hpp"

namespace utp {

std::string_view to_string(AccessMode m) noexcept {
  return m == AccessMode::Read ? "R" : "RW";
}

std::string_view to_string(TaskState s) noexcept {
  switch (s) {
    case TaskState::Created: return "Created";
    case TaskState::Submitted: return "Submitted";
    case TaskState::Ready: return "Ready";
    case TaskState::Running: return "Running";
    case TaskState::AwaitingChildren: return "AwaitingChildren";
    case TaskState::Finished: return "Finished";
  }
  return "?";
}

namespace {

bool legal(TaskState from, TaskState to) {
  switch (from) {
    case TaskState::Created: return to == TaskState::Submitted;
    case TaskState::Submitted: return to == TaskState::Ready;
    case TaskState::Ready: return to == TaskState::Running;
    case TaskState::Running: return to == TaskState::Finished || to == TaskState::AwaitingChildren;
    case TaskState::AwaitingChildren: return to == TaskState::Finished;
    case TaskState::Finished: return false;
  }
  return false;
}

const DataHandle& tree_root(const DataHandle& h) {
  const DataHandle* p = &h;
  while (p->parent()) p = p->parent();
  return *p;
}

}  // namespace

Task::Task(TaskId id, const Operation& op, Task* parent, std::vector<TaskArg> args,
           MatrixStore& store)
    : id_(id),
      op_(&op),
      parent_(parent),
      args_(std::move(args)),
      level_(parent ? parent->level() + 1 : 0),
      store_(&store) {}

const std::string& Task::op_name() const noexcept { return op_->name(); }

bool Task::args_are_leaves() const noexcept {
  for (const auto& a : args_) {
    if (!a.handle->is_leaf()) return false;
  }
  return true;
}

void Task::transition(TaskState to) {
  TaskState from = state_.load(std::memory_order_acquire);
  if (!legal(from, to) || !state_.compare_exchange_strong(from, to, std::memory_order_acq_rel)) {
    throw InternalError("task " + std::to_string(id_) + " (" + op_name() + "): illegal transition " +
                        std::string(to_string(from)) + " -> " + std::string(to_string(to)));
  }
}

std::size_t Task::child_finished() {
  const std::size_t before = pending_.fetch_sub(1, std::memory_order_acq_rel);
  if (before == 0) {
    throw InternalError("task " + std::to_string(id_) + ": child completion with no pending children");
  }
  return before - 1;
}

std::string Task::describe_args() const {
  std::string out;
  for (const auto& a : args_) {
    if (!out.empty()) out += ' ';
    out += a.handle->name();
    out += ':';
    out += to_string(a.mode);
  }
  return out;
}

void OperationRegistry::add(Operation op) {
  std::string key = op.name();
  ops_.insert_or_assign(std::move(key), std::move(op));
}

const Operation& OperationRegistry::find(std::string_view name) const {
  auto it = ops_.find(name);
  if (it == ops_.end()) throw RegistryError("unknown operation '" + std::string(name) + "'");
  return it->second;
}

bool OperationRegistry::contains(std::string_view name) const { return ops_.find(name) != ops_.end(); }

std::unique_ptr<Task> TaskFactory::create(std::string_view op_name, Task* parent,
                                          std::vector<TaskArg> args) {
  const Operation& op = registry_.find(op_name);
  if (args.empty()) throw UsageError("create_task: '" + std::string(op_name) + "' has no data arguments");
  const std::size_t level = parent ? parent->level() + 1 : 0;
  const DataHandle& root = tree_root(*args.front().handle);
  for (const auto& a : args) {
    if (&tree_root(*a.handle) != &root) {
      throw UsageError("create_task: arguments of '" + std::string(op_name) +
                       "' come from different data hierarchies");
    }
    if (a.handle->level() != level) {
      throw UsageError("create_task: argument " + a.handle->name() + " is at partition level " +
                       std::to_string(a.handle->level()) + " but the task is at level " +
                       std::to_string(level));
    }
  }
  MatrixStore& store = parent ? parent->store() : args.front().handle->store();
  const TaskId id = next_.fetch_add(1, std::memory_order_relaxed);
  return std::make_unique<Task>(id, op, parent, std::move(args), store);
}

std::size_t EpochLedger::record(TaskId task, AccessMode mode) {
  if (epoch_of_.contains(task)) {
    throw UsageError("record_access: task " + std::to_string(task) + " already registered on this handle");
  }
  std::size_t idx;
  if (mode == AccessMode::Read && !epochs_.empty() && epochs_.back().mode == AccessMode::Read) {
    idx = epochs_.size() - 1;
  } else {
    epochs_.push_back(Epoch{mode, {}, 0});
    idx = epochs_.size() - 1;
  }
  Epoch& e = epochs_[idx];
  e.tasks.push_back(task);
  if (e.unfinished++ == 0 && front_ > idx) front_ = idx;
  epoch_of_.emplace(task, idx);
  return idx;
}

std::size_t EpochLedger::epoch_of(TaskId task) const {
  auto it = epoch_of_.find(task);
  if (it == epoch_of_.end()) throw InternalError("ledger: task " + std::to_string(task) + " not registered");
  return it->second;
}

std::vector<TaskId> EpochLedger::finish(TaskId task) {
  const std::size_t idx = epoch_of(task);
  Epoch& e = epochs_[idx];
  if (e.unfinished == 0 || idx != front_) {
    throw InternalError("ledger: task " + std::to_string(task) + " finished out of epoch order");
  }
  std::vector<TaskId> released;
  if (--e.unfinished > 0) return released;
  while (front_ < epochs_.size() && epochs_[front_].unfinished == 0) ++front_;
  if (front_ < epochs_.size()) released = epochs_[front_].tasks;
  return released;
}

const EpochLedger* LedgerSet::find(const Task& t, const TaskArg& a) const {
  auto it = ledgers_.find(Key{&t.store(), a.handle->id()});
  return it == ledgers_.end() ? nullptr : &it->second;
}

std::size_t LedgerSet::record(const Task& t) {
  std::size_t blocked = 0;
  for (const auto& a : t.args()) {
    EpochLedger& l = ledgers_[Key{&t.store(), a.handle->id()}];
    if (!l.is_released(l.record(t.id(), a.mode))) ++blocked;
  }
  return blocked;
}

std::vector<TaskId> LedgerSet::finish(const Task& t) {
  std::vector<TaskId> released;
  for (const auto& a : t.args()) {
    auto it = ledgers_.find(Key{&t.store(), a.handle->id()});
    if (it == ledgers_.end()) throw InternalError("ledger: finish of unrecorded task " + std::to_string(t.id()));
    auto r = it->second.finish(t.id());
    released.insert(released.end(), r.begin(), r.end());
    if (it->second.drained()) ledgers_.erase(it);
  }
  return released;
}

bool LedgerSet::is_ready(const Task& t) const {
  for (const auto& a : t.args()) {
    const EpochLedger* l = find(t, a);
    if (!l || !l->is_released_for(t.id())) return false;
  }
  return true;
}

std::size_t LedgerSet::epoch_of(const Task& t, const TaskArg& arg) const {
  const EpochLedger* l = find(t, arg);
  if (!l) throw InternalError("ledger: task " + std::to_string(t.id()) + " not recorded");
  return l->epoch_of(t.id());
}

std::string LedgerSet::describe_waiting(const Task& t) const {
  std::string out;
  for (const auto& a : t.args()) {
    const EpochLedger* l = find(t, a);
    if (!l) continue;
    const std::size_t e = l->epoch_of(t.id());
    if (l->is_released(e)) continue;
    out += " " + a.handle->name() + "@epoch" + std::to_string(e) + " behind {";
    bool first = true;
    for (std::size_t k = 0; k < e; ++k) {
      for (TaskId id : l->epochs()[k].tasks) {
        out += (first ? "" : ",") + std::to_string(id);
        first = false;
      }
    }
    out += "}";
  }
  return out;
}

}  // namespace utp
