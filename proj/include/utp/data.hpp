#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "utp/kernels.hpp"

namespace utp {

using HandleId = std::uint32_t;

/// Dense row-major matrix storage. All handles of one tree alias windows of
/// a single store.
class MatrixStore {
 public:
  MatrixStore(std::size_t n_rows, std::size_t n_cols);

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return n_cols_; }
  std::span<double> elements() noexcept { return elements_; }
  std::span<const double> elements() const noexcept { return elements_; }
  double& at(std::size_t r, std::size_t c) { return elements_[r * n_cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return elements_[r * n_cols_ + c]; }

 private:
  std::size_t n_rows_;
  std::size_t n_cols_;
  std::vector<double> elements_;
};

/// Block counts per partition level, outermost first: [(b1,b1),(b2,b2)].
struct PartitionLevel {
  std::size_t block_rows = 1;
  std::size_t block_cols = 1;
  bool operator==(const PartitionLevel&) const = default;
};
using PartitionSpec = std::vector<PartitionLevel>;

/// One node of the partition tree. Geometry only; element access goes
/// through a MatrixStore so that the same tree can address replicas.
class DataHandle {
 public:
  HandleId id() const noexcept { return id_; }
  std::size_t row_offset() const noexcept { return row_offset_; }
  std::size_t col_offset() const noexcept { return col_offset_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t level() const noexcept { return level_; }
  const DataHandle* parent() const noexcept { return parent_; }
  // Position in the parent's grid; (0,0) for the root.
  std::pair<std::size_t, std::size_t> grid_pos() const noexcept { return grid_pos_; }
  bool is_leaf() const noexcept { return children_.empty(); }
  // "A", "A(1,0)", "A(1,0)(0,1)", ...
  const std::string& name() const noexcept { return name_; }
  MatrixStore& store() const noexcept { return *store_; }

  std::pair<std::size_t, std::size_t> grid() const noexcept { return {p_rows_, p_cols_}; }
  const DataHandle& child(std::size_t r, std::size_t c) const;

  bool contains(std::size_t r, std::size_t c) const noexcept {
    return r >= row_offset_ && r < row_offset_ + rows_ && c >= col_offset_ &&
           c < col_offset_ + cols_;
  }

 private:
  friend class DataTree;

  HandleId id_ = 0;
  MatrixStore* store_ = nullptr;
  std::size_t row_offset_ = 0, col_offset_ = 0;
  std::size_t rows_ = 0, cols_ = 0;
  std::size_t level_ = 0;
  const DataHandle* parent_ = nullptr;
  std::pair<std::size_t, std::size_t> grid_pos_{0, 0};
  std::size_t p_rows_ = 0, p_cols_ = 0;
  std::vector<DataHandle*> children_;  // row-major over the grid
  std::string name_;
};

/// Owns a matrix store and its full partition tree, built eagerly.
/// The tree is immutable after construction.
class DataTree {
 public:
  DataTree(std::size_t n_rows, std::size_t n_cols, PartitionSpec spec,
           std::string name = "A");
  DataTree(const DataTree&) = delete;
  DataTree& operator=(const DataTree&) = delete;

  const DataHandle& root() const noexcept { return *handles_.front(); }
  MatrixStore& store() noexcept { return *store_; }
  const MatrixStore& store() const noexcept { return *store_; }
  const PartitionSpec& spec() const noexcept { return spec_; }
  std::size_t depth() const noexcept { return spec_.size(); }
  std::size_t handle_count() const noexcept { return handles_.size(); }
  const DataHandle& handle(HandleId id) const;
  // All handles at one partition level, in creation order.
  std::vector<const DataHandle*> level_handles(std::size_t level) const;

 private:
  void build(DataHandle& h);

  std::unique_ptr<MatrixStore> store_;
  PartitionSpec spec_;
  std::vector<std::unique_ptr<DataHandle>> handles_;
};

/// Returns the level-0 handle of a new tree. Kept as a free function for
/// callers that think in terms of handles rather than trees.
std::unique_ptr<DataTree> create_data(std::size_t n_rows, std::size_t n_cols,
                                      const PartitionSpec& spec);

const DataHandle& get_partition(const DataHandle& h, std::size_t r, std::size_t c);
std::pair<std::size_t, std::size_t> num_partitions(const DataHandle& h) noexcept;

/// Symmetric, strictly diagonally dominant fill of a square level-0 handle:
/// off-diagonals uniform in [-1,1), diagonal n + uniform[0,1).
void fill_spd(const DataHandle& h, std::uint64_t seed);

std::vector<double> read_region(const DataHandle& h, const MatrixStore& store);
std::vector<double> read_region(const DataHandle& h);
void write_region(const DataHandle& h, MatrixStore& store, std::span<const double> block);
void write_region(const DataHandle& h, std::span<const double> block);

/// Strided view of the handle's window in `store`.
kernels::BlockView view_of(const DataHandle& h, MatrixStore& store);

}  // namespace utp
