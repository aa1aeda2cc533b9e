#include "utp/kernel_executor.hpp"

#include "utp/dispatcher.hpp"

namespace utp {

void KernelExecutor::submit(Task& t) {
  t.transition(TaskState::Submitted);
  dispatcher_.tracer().task_event(id(), t, EventKind::Submitted);
  t.transition(TaskState::Ready);
  if (t.args_are_leaves()) {
    run_leaf(t);
  } else {
    // Data partitioned deeper than the flow graph: expand the remaining
    // levels here, children executing one by one in emission order.
    dispatcher_.split(t, index());
  }
}

void KernelExecutor::execute_ready(Task& t) { run_leaf(t); }

void KernelExecutor::run_leaf(Task& t) {
  t.transition(TaskState::Running);
  dispatcher_.tracer().task_event(id(), t, EventKind::RunStart);
  t.op().run(t);
  dispatcher_.tracer().task_event(id(), t, EventKind::RunEnd);
  dispatcher_.count_leaf();
  dispatcher_.finish(t);
}

}  // namespace utp
