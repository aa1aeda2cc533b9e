#include "utp/dispatcher.hpp"

#include <sstream>

#include "utp/distsim_executor.hpp"
#include "utp/error.hpp"
#include "utp/kernel_executor.hpp"
#include "utp/threaded_executor.hpp"

namespace utp {

class Dispatcher::Sink final : public ChildSink {
 public:
  Sink(Dispatcher& d, Task& parent) : d_(d), parent_(parent) {}
  void emit(std::string_view op_name, std::vector<TaskArg> args) override {
    children.push_back(&d_.adopt(d_.factory_.create(op_name, &parent_, std::move(args))));
  }
  std::vector<Task*> children;

 private:
  Dispatcher& d_;
  Task& parent_;
};

Dispatcher::Dispatcher(const FlowGraph& graph, const OperationRegistry& registry, Options options)
    : graph_(graph), factory_(registry), options_(options), tracer_(options.trace) {
  validate(graph_);
  const auto path = graph_.path();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const NodeSpec& n = graph_.nodes[path[i]];
    switch (n.kind) {
      case NodeKind::Kernel: {
        auto k = std::make_unique<KernelExecutor>(*this, i, n.id);
        kernel_ = k.get();
        executors_.push_back(std::move(k));
        break;
      }
      case NodeKind::Threaded:
        executors_.push_back(std::make_unique<ThreadedExecutor>(*this, i, n.id, workers_of(n)));
        break;
      case NodeKind::Distsim: {
        auto [pr, pc] = grid_of(n);
        executors_.push_back(std::make_unique<DistsimExecutor>(*this, i, n.id, RankMap{pr, pc}));
        break;
      }
    }
  }
  if (!kernel_ || executors_.back().get() != kernel_) {
    throw ConfigError("flow graph must end at a kernel node");
  }
}

Dispatcher::~Dispatcher() { shutdown(); }

void Dispatcher::shutdown() {
  if (shut_down_) return;
  shut_down_ = true;
  for (auto& e : executors_) e->shutdown();
}

Task& Dispatcher::adopt(std::unique_ptr<Task> t) {
  std::lock_guard lock(tasks_mu_);
  tasks_.push_back(std::move(t));
  return *tasks_.back();
}

Task& Dispatcher::create_task(std::string_view op_name, std::vector<TaskArg> args) {
  return adopt(factory_.create(op_name, nullptr, std::move(args)));
}

std::string_view Dispatcher::node_name(std::size_t node) const {
  return node == kSelf ? kSelfName : std::string_view(executors_.at(node)->id());
}

void Dispatcher::submit(Task& t) {
  if (waiting_.load()) throw UsageError("submit: program barrier (wait_all) in progress");
  if (shut_down_) throw UsageError("submit: dispatcher has been shut down");
  if (t.level() != 0 || t.parent()) throw UsageError("submit: only level-0 program tasks may be submitted");
  if (t.state() != TaskState::Created) throw UsageError("submit: task already submitted");
  {
    std::lock_guard lock(wait_mu_);
    ++outstanding_roots_;
  }
  note_event();
  try {
    if (t.args_are_leaves()) {
      // Unpartitioned data: nothing for the dispatcher to split.
      route(0, t);
      return;
    }
    t.node = kSelf;
    t.transition(TaskState::Submitted);
    tracer_.task_event(kSelfName, t, EventKind::Submitted);
    t.transition(TaskState::Ready);
    tracer_.task_event(kSelfName, t, EventKind::Ready);
    split(t, 0);
  } catch (...) {
    fail(std::current_exception());
  }
}

void Dispatcher::route(std::size_t node, Task& t) {
  t.node = node;
  executors_.at(node)->submit(t);
}

void Dispatcher::split(Task& t, std::size_t next) {
  t.transition(TaskState::Running);
  Sink sink(*this, t);
  t.op().split(t, sink);
  if (sink.children.empty()) {
    finish(t);
    return;
  }
  t.set_pending_children(sink.children.size());
  t.transition(TaskState::AwaitingChildren);
  for (Task* c : sink.children) {
    if (failed()) return;
    route(next, *c);
  }
}

void Dispatcher::on_ready(std::size_t node, Task& t) {
  if (failed()) return;
  note_event();
  try {
    const std::size_t next = node + 1;
    if (next >= executors_.size()) throw InternalError("ready notification from the kernel node");
    if (t.args_are_leaves()) {
      if (next != kernel_index()) {
        throw ConfigError("task " + std::to_string(t.id()) + " (" + t.op_name() +
                          ") has leaf arguments at non-terminal node '" + std::string(node_name(node)) +
                          "': partition depth is shallower than flow depth");
      }
      kernel_->execute_ready(t);
    } else {
      split(t, next);
    }
  } catch (...) {
    fail(std::current_exception());
  }
}

void Dispatcher::finish(Task& t) {
  note_event();
  t.transition(TaskState::Finished);
  tracer_.task_event(node_name(t.node), t, EventKind::Finished, t.rank >= 0 ? t.rank : current_context());
  if (t.node != kSelf) executors_.at(t.node)->mark_finished(t);
  if (Task* p = t.parent()) {
    if (p->child_finished() == 0) finish(*p);
    return;
  }
  std::lock_guard lock(wait_mu_);
  if (outstanding_roots_ == 0) throw InternalError("completion of unknown program task " + std::to_string(t.id()));
  if (--outstanding_roots_ == 0) wait_cv_.notify_all();
}

void Dispatcher::fail(std::exception_ptr e) {
  std::lock_guard lock(wait_mu_);
  if (!failure_) failure_ = e;
  failed_.store(true, std::memory_order_release);
  wait_cv_.notify_all();
}

void Dispatcher::wait_all() {
  waiting_.store(true);
  struct Reset {
    std::atomic<bool>& flag;
    ~Reset() { flag.store(false); }
  } reset{waiting_};
  std::unique_lock lock(wait_mu_);
  std::uint64_t seen = events_.load();
  while (true) {
    if (failure_) std::rethrow_exception(failure_);
    if (outstanding_roots_ == 0) return;
    const bool woke = wait_cv_.wait_for(lock, options_.deadlock_timeout,
                                        [&] { return failure_ || outstanding_roots_ == 0; });
    if (woke) continue;
    const std::uint64_t now = events_.load();
    if (now != seen) {
      seen = now;
      continue;
    }
    lock.unlock();
    throw DeadlockError("no progress for " + std::to_string(options_.deadlock_timeout.count()) +
                        " ms with work outstanding\n" + describe_unfinished());
  }
}

std::vector<TraceEvent> Dispatcher::take_trace() {
  shutdown();
  return tracer_.collect();
}

std::string Dispatcher::describe_unfinished() const {
  std::ostringstream os;
  {
    std::lock_guard lock(tasks_mu_);
    for (const auto& t : tasks_) {
      const TaskState s = t->state();
      if (s == TaskState::Finished || s == TaskState::Created) continue;
      os << "  task " << t->id() << " " << t->op_name() << " [" << t->describe_args() << "] state "
         << to_string(s) << " at " << node_name(t->node);
      if (s == TaskState::AwaitingChildren) os << " (" << t->pending_children() << " children pending)";
      os << '\n';
    }
  }
  for (const auto& e : executors_) {
    const std::string p = e->describe_pending();
    if (!p.empty()) os << "  node " << e->id() << ":\n" << p;
  }
  return os.str();
}

}  // namespace utp
