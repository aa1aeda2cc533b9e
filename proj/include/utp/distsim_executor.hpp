#pragma once

// Simulated distributed-memory node. P ranks run as threads in one process;
// each rank owns a full-size replica of every matrix it touches, in which
// only the level-1 blocks it owns hold real data (the rest start as NaN).
// Tasks run on the rank owning the block they write. A read of a block
// owned elsewhere is satisfied by an explicit, epoch-tagged copy pushed
// from the owner once the producing write has finished.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

#include "utp/executor.hpp"
#include "utp/task.hpp"

namespace utp {

/// 2D block-cyclic ownership of level-1 blocks.
struct RankMap {
  std::size_t p_rows = 1;
  std::size_t p_cols = 1;

  std::size_t ranks() const noexcept { return p_rows * p_cols; }
  int owner(std::size_t i, std::size_t j) const noexcept {
    return static_cast<int>((i % p_rows) * p_cols + (j % p_cols));
  }
  /// Owner of the level-1 block containing `h` (h itself when level 1).
  /// The root handle of an unpartitioned matrix belongs to rank 0.
  int owner(const DataHandle& h) const noexcept;
};

/// Owner-computes: the rank owning the task's first read-write argument.
/// Throws UsageError if the task writes nothing.
int assign_rank(const Task& t, const RankMap& m);

/// One inter-rank block copy.
struct TransferMsg {
  int src = 0;
  int dst = 0;
  const DataHandle* handle = nullptr;
  std::uint64_t epoch = 0;  // write-version of the block being shipped
  std::vector<double> payload;
};

class DistsimExecutor final : public Executor {
 public:
  DistsimExecutor(Dispatcher& d, std::size_t index, std::string id, RankMap map);
  ~DistsimExecutor() override;

  void submit(Task& t) override;
  void mark_finished(Task& t) override;
  void shutdown() override;
  std::string describe_pending() const override;

  const RankMap& rank_map() const noexcept { return map_; }

 private:
  struct SubmitMsg {
    Task* task;
    std::vector<std::pair<const DataHandle*, std::uint64_t>> arrivals;  // new remote versions to await
  };
  struct SendRequest {
    const DataHandle* handle;
    const MatrixStore* global;
    std::uint64_t epoch;
    int dst;
    Task* consumer;
  };
  struct FinishedMsg {
    Task* task;
  };
  using Message = std::variant<SubmitMsg, SendRequest, TransferMsg, FinishedMsg>;

  struct Pseudo {
    enum Kind { Send, Arrive } kind;
    const DataHandle* handle;
    const MatrixStore* global;
    std::uint64_t epoch;
    int peer;
    Task* consumer;
    bool released = false;
    std::optional<std::vector<double>> payload;
  };

  struct Rank {
    int id = 0;
    std::thread thread;
    std::mutex mail_mu;
    std::condition_variable mail_cv;
    std::deque<Message> mailbox;
    bool stop = false;

    // Owned by the rank thread; state_mu only serializes diagnostics.
    mutable std::mutex state_mu;
    std::map<std::pair<const MatrixStore*, HandleId>, EpochLedger> ledgers;
    std::unordered_map<TaskId, std::pair<Task*, std::size_t>> waiting;
    std::unordered_map<TaskId, Pseudo> pseudo;
    std::map<std::tuple<const MatrixStore*, HandleId, std::uint64_t>, TaskId> arrival_of;
  };

  struct Replicas {
    std::vector<std::unique_ptr<MatrixStore>> per_rank;
  };

  void post(int rank, Message m);
  void rank_loop(Rank& r);
  void handle(Rank& r, Message& m, std::vector<Task*>& ready);
  void release(Rank& r, const std::vector<TaskId>& ids, std::vector<Task*>& ready);
  void do_send(Rank& r, TaskId pid, Pseudo& p, std::vector<Task*>& ready);
  void do_arrive(Rank& r, TaskId pid, Pseudo& p, std::vector<Task*>& ready);
  TaskId record(Rank& r, const MatrixStore& mem, const DataHandle& h, TaskId id, AccessMode mode, bool& released);
  Replicas& replicas_for(MatrixStore& global);
  MatrixStore& replica(const MatrixStore& global, int rank);

  RankMap map_;
  std::vector<std::unique_ptr<Rank>> ranks_;

  // Submission side, serialized by submit_mu_.
  std::mutex submit_mu_;
  std::map<std::pair<const MatrixStore*, HandleId>, std::uint64_t> versions_;
  std::set<std::tuple<const MatrixStore*, HandleId, std::uint64_t, int>> requested_;
  std::atomic<TaskId> next_pseudo_{TaskId{1} << 63};

  mutable std::mutex replicas_mu_;
  std::map<const MatrixStore*, Replicas> replicas_;
};

}  // namespace utp
