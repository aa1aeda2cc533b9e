#include "utp/distsim_executor.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "utp/dispatcher.hpp"
#include "utp/error.hpp"

namespace utp {

int RankMap::owner(const DataHandle& h) const noexcept {
  const DataHandle* p = &h;
  if (p->level() == 0) return 0;
  while (p->level() > 1) p = p->parent();
  const auto [i, j] = p->grid_pos();
  return owner(i, j);
}

int assign_rank(const Task& t, const RankMap& m) {
  for (const auto& a : t.args()) {
    if (a.mode == AccessMode::ReadWrite) return m.owner(*a.handle);
  }
  throw UsageError("assign_rank: task " + std::to_string(t.id()) + " (" + t.op_name() +
                   ") has no read-write argument");
}

DistsimExecutor::DistsimExecutor(Dispatcher& d, std::size_t index, std::string id, RankMap map)
    : Executor(d, index, std::move(id), NodeKind::Distsim), map_(map) {
  if (map_.ranks() == 0) throw ConfigError("distsim node needs at least one rank");
  for (std::size_t r = 0; r < map_.ranks(); ++r) {
    ranks_.push_back(std::make_unique<Rank>());
    ranks_.back()->id = static_cast<int>(r);
  }
  for (auto& r : ranks_) {
    Rank* rp = r.get();
    rp->thread = std::thread([this, rp] { rank_loop(*rp); });
  }
}

DistsimExecutor::~DistsimExecutor() { shutdown(); }

void DistsimExecutor::shutdown() {
  for (auto& r : ranks_) {
    {
      std::lock_guard lock(r->mail_mu);
      r->stop = true;
    }
    r->mail_cv.notify_all();
  }
  for (auto& r : ranks_) {
    if (r->thread.joinable()) r->thread.join();
  }
}

DistsimExecutor::Replicas& DistsimExecutor::replicas_for(MatrixStore& global) {
  std::lock_guard lock(replicas_mu_);
  auto it = replicas_.find(&global);
  if (it != replicas_.end()) return it->second;
  Replicas reps;
  for (std::size_t r = 0; r < map_.ranks(); ++r) {
    reps.per_rank.push_back(std::make_unique<MatrixStore>(global.rows(), global.cols()));
    auto el = reps.per_rank.back()->elements();
    std::fill(el.begin(), el.end(), std::numeric_limits<double>::quiet_NaN());
  }
  return replicas_.emplace(&global, std::move(reps)).first->second;
}

MatrixStore& DistsimExecutor::replica(const MatrixStore& global, int rank) {
  std::lock_guard lock(replicas_mu_);
  return *replicas_.at(&global).per_rank.at(static_cast<std::size_t>(rank));
}

void DistsimExecutor::post(int rank, Message m) {
  Rank& r = *ranks_.at(static_cast<std::size_t>(rank));
  {
    std::lock_guard lock(r.mail_mu);
    r.mailbox.push_back(std::move(m));
  }
  r.mail_cv.notify_one();
}

void DistsimExecutor::submit(Task& t) {
  std::lock_guard lock(submit_mu_);
  const int r = assign_rank(t, map_);
  MatrixStore& global = t.args().front().handle->store();
  if (&t.store() != &global) throw ConfigError("distsim: nested distributed nodes are not supported");

  const bool fresh = [&] {
    std::lock_guard rl(replicas_mu_);
    return !replicas_.contains(&global);
  }();
  Replicas& reps = replicas_for(global);
  if (fresh) {
    // Seed each rank with the blocks it owns.
    const DataHandle* root = t.args().front().handle;
    while (root->parent()) root = root->parent();
    std::vector<const DataHandle*> blocks;
    if (root->is_leaf()) {
      blocks.push_back(root);
    } else {
      const auto [pr, pc] = root->grid();
      for (std::size_t i = 0; i < pr; ++i)
        for (std::size_t j = 0; j < pc; ++j) blocks.push_back(&root->child(i, j));
    }
    for (const DataHandle* b : blocks) {
      write_region(*b, *reps.per_rank[static_cast<std::size_t>(map_.owner(*b))], read_region(*b, global));
    }
  }

  SubmitMsg sm{&t, {}};
  std::vector<SendRequest> sends;
  for (const auto& a : t.args()) {
    const int owner = map_.owner(*a.handle);
    if (a.mode == AccessMode::ReadWrite) {
      if (owner != r) {
        throw UsageError("distsim: task " + std::to_string(t.id()) + " writes " + a.handle->name() +
                         " owned by rank " + std::to_string(owner) + " but runs on rank " + std::to_string(r));
      }
      continue;
    }
    if (owner == r) continue;
    const std::uint64_t v = versions_[{&global, a.handle->id()}];
    if (requested_.emplace(&global, a.handle->id(), v, r).second) {
      sm.arrivals.emplace_back(a.handle, v);
      sends.push_back(SendRequest{a.handle, &global, v, r, &t});
    }
  }
  for (const auto& a : t.args()) {
    if (a.mode == AccessMode::ReadWrite) ++versions_[{&global, a.handle->id()}];
  }

  t.rank = r;
  t.set_store(*reps.per_rank[static_cast<std::size_t>(r)]);
  t.transition(TaskState::Submitted);
  dispatcher_.tracer().task_event(id(), t, EventKind::Submitted, r);
  // The consumer's arrival slot must be in its mailbox before any payload.
  post(r, std::move(sm));
  for (auto& s : sends) post(map_.owner(*s.handle), s);
}

void DistsimExecutor::mark_finished(Task& t) {
  // Publish written blocks to the program's matrix before the completion
  // propagates upward. Later writers of these blocks are still held back
  // by the rank ledger, so the replica region is stable here.
  for (const auto& a : t.args()) {
    if (a.mode == AccessMode::ReadWrite) write_region(*a.handle, a.handle->store(), read_region(*a.handle, t.store()));
  }
  post(t.rank, FinishedMsg{&t});
}

TaskId DistsimExecutor::record(Rank& r, const MatrixStore& mem, const DataHandle& h, TaskId id, AccessMode mode,
                               bool& released) {
  EpochLedger& l = r.ledgers[{&mem, h.id()}];
  released = l.is_released(l.record(id, mode));
  return id;
}

void DistsimExecutor::rank_loop(Rank& r) {
  ContextScope ctx(r.id);
  while (true) {
    Message m;
    {
      std::unique_lock lock(r.mail_mu);
      r.mail_cv.wait(lock, [&] { return r.stop || !r.mailbox.empty(); });
      if (r.stop) return;
      m = std::move(r.mailbox.front());
      r.mailbox.pop_front();
    }
    if (dispatcher_.failed()) continue;
    std::vector<Task*> ready;
    try {
      std::lock_guard lock(r.state_mu);
      handle(r, m, ready);
    } catch (...) {
      dispatcher_.fail(std::current_exception());
      continue;
    }
    std::sort(ready.begin(), ready.end(), [](Task* a, Task* b) { return a->id() < b->id(); });
    for (Task* t : ready) {
      if (dispatcher_.failed()) break;
      try {
        t->transition(TaskState::Ready);
        dispatcher_.tracer().task_event(id(), *t, EventKind::Ready, r.id);
      } catch (...) {
        dispatcher_.fail(std::current_exception());
        break;
      }
      dispatcher_.on_ready(index(), *t);
    }
  }
}

void DistsimExecutor::handle(Rank& r, Message& msg, std::vector<Task*>& ready) {
  dispatcher_.note_event();
  if (auto* sm = std::get_if<SubmitMsg>(&msg)) {
    Task& t = *sm->task;
    const MatrixStore& mem = t.store();
    for (const auto& [h, v] : sm->arrivals) {
      const TaskId pid = next_pseudo_.fetch_add(1);
      bool released = false;
      record(r, mem, *h, pid, AccessMode::ReadWrite, released);
      r.pseudo.emplace(pid, Pseudo{Pseudo::Arrive, h, &h->store(), v, map_.owner(*h), &t, released, std::nullopt});
      r.arrival_of[{&mem, h->id(), v}] = pid;
    }
    std::size_t blocked = 0;
    for (const auto& a : t.args()) {
      bool released = false;
      record(r, mem, *a.handle, t.id(), a.mode, released);
      if (!released) ++blocked;
    }
    if (blocked == 0) {
      ready.push_back(&t);
    } else {
      r.waiting.emplace(t.id(), std::pair{&t, blocked});
    }
  } else if (auto* sr = std::get_if<SendRequest>(&msg)) {
    const MatrixStore& mem = replica(*sr->global, r.id);
    const TaskId pid = next_pseudo_.fetch_add(1);
    bool released = false;
    record(r, mem, *sr->handle, pid, AccessMode::Read, released);
    auto& p = r.pseudo.emplace(pid, Pseudo{Pseudo::Send, sr->handle, sr->global, sr->epoch, sr->dst, sr->consumer,
                                           released, std::nullopt})
                  .first->second;
    if (released) do_send(r, pid, p, ready);
  } else if (auto* tm = std::get_if<TransferMsg>(&msg)) {
    const MatrixStore& mem = replica(tm->handle->store(), r.id);
    auto it = r.arrival_of.find({&mem, tm->handle->id(), tm->epoch});
    if (it == r.arrival_of.end()) {
      throw InternalError("distsim: unexpected transfer of " + tm->handle->name() + " epoch " +
                          std::to_string(tm->epoch) + " to rank " + std::to_string(r.id));
    }
    const TaskId pid = it->second;
    Pseudo& p = r.pseudo.at(pid);
    p.payload = std::move(tm->payload);
    if (p.released) do_arrive(r, pid, p, ready);
  } else if (auto* fm = std::get_if<FinishedMsg>(&msg)) {
    Task& t = *fm->task;
    std::vector<TaskId> ids;
    for (const auto& a : t.args()) {
      auto key = std::pair{static_cast<const MatrixStore*>(&t.store()), a.handle->id()};
      EpochLedger& l = r.ledgers.at(key);
      auto rel = l.finish(t.id());
      ids.insert(ids.end(), rel.begin(), rel.end());
      if (l.drained()) r.ledgers.erase(key);
    }
    release(r, ids, ready);
  }
}

void DistsimExecutor::release(Rank& r, const std::vector<TaskId>& ids, std::vector<Task*>& ready) {
  for (TaskId id : ids) {
    if (auto pit = r.pseudo.find(id); pit != r.pseudo.end()) {
      Pseudo& p = pit->second;
      p.released = true;
      if (p.kind == Pseudo::Send) {
        do_send(r, id, p, ready);
      } else if (p.payload) {
        do_arrive(r, id, p, ready);
      }
      continue;
    }
    auto it = r.waiting.find(id);
    if (it == r.waiting.end()) throw InternalError("distsim: released task " + std::to_string(id) + " not waiting");
    if (--it->second.second == 0) {
      ready.push_back(it->second.first);
      r.waiting.erase(it);
    }
  }
}

void DistsimExecutor::do_send(Rank& r, TaskId pid, Pseudo& p, std::vector<Task*>& ready) {
  MatrixStore& mem = replica(*p.global, r.id);
  TransferMsg tm{r.id, p.peer, p.handle, p.epoch, read_region(*p.handle, mem)};
  dispatcher_.tracer().message(id(), r.id, p.peer, p.handle->name(), p.epoch, *p.consumer);
  dispatcher_.count_message();
  post(p.peer, std::move(tm));
  const HandleId hid = p.handle->id();
  r.pseudo.erase(pid);
  auto key = std::pair{static_cast<const MatrixStore*>(&mem), hid};
  EpochLedger& l = r.ledgers.at(key);
  auto ids = l.finish(pid);
  if (l.drained()) r.ledgers.erase(key);
  release(r, ids, ready);
}

void DistsimExecutor::do_arrive(Rank& r, TaskId pid, Pseudo& p, std::vector<Task*>& ready) {
  MatrixStore& mem = replica(*p.global, r.id);
  write_region(*p.handle, mem, *p.payload);
  const HandleId hid = p.handle->id();
  r.arrival_of.erase({&mem, hid, p.epoch});
  r.pseudo.erase(pid);
  auto key = std::pair{static_cast<const MatrixStore*>(&mem), hid};
  EpochLedger& l = r.ledgers.at(key);
  auto ids = l.finish(pid);
  if (l.drained()) r.ledgers.erase(key);
  release(r, ids, ready);
}

std::string DistsimExecutor::describe_pending() const {
  std::ostringstream os;
  for (const auto& rp : ranks_) {
    std::lock_guard lock(rp->state_mu);
    for (const auto& [tid, w] : rp->waiting) {
      os << "    rank " << rp->id << " task " << tid << " " << w.first->op_name() << " waiting on " << w.second
         << " argument(s)\n";
    }
    for (const auto& [pid, p] : rp->pseudo) {
      os << "    rank " << rp->id << (p.kind == Pseudo::Send ? " send " : " arrival ") << p.handle->name() << " epoch "
         << p.epoch << (p.kind == Pseudo::Send ? " to rank " : " from rank ") << p.peer
         << (p.released ? "" : " (behind earlier epochs)") << '\n';
    }
  }
  return os.str();
}

}  // namespace utp
