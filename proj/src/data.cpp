#include "utp/data.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "utp/error.hpp"

namespace utp {

MatrixStore::MatrixStore(std::size_t n_rows, std::size_t n_cols)
    : n_rows_(n_rows), n_cols_(n_cols), elements_(n_rows * n_cols, 0.0) {}

const DataHandle& DataHandle::child(std::size_t r, std::size_t c) const {
  if (is_leaf()) throw UsageError("get_partition: " + name_ + " is a leaf handle");
  if (r >= p_rows_ || c >= p_cols_) {
    throw UsageError("get_partition: index (" + std::to_string(r) + "," + std::to_string(c) +
                     ") outside " + std::to_string(p_rows_) + "x" + std::to_string(p_cols_) +
                     " grid of " + name_);
  }
  return *children_[r * p_cols_ + c];
}

DataTree::DataTree(std::size_t n_rows, std::size_t n_cols, PartitionSpec spec, std::string name)
    : spec_(std::move(spec)) {
  if (n_rows == 0 || n_cols == 0) throw ConfigError("create_data: matrix extents must be >= 1");
  std::size_t rows = n_rows, cols = n_cols;
  for (std::size_t lv = 0; lv < spec_.size(); ++lv) {
    const auto& p = spec_[lv];
    if (p.block_rows == 0 || p.block_cols == 0) {
      throw ConfigError("create_data: zero block count at partition level " + std::to_string(lv + 1));
    }
    if (rows % p.block_rows != 0 || cols % p.block_cols != 0) {
      throw ConfigError("create_data: " + std::to_string(p.block_rows) + "x" +
                        std::to_string(p.block_cols) + " blocks do not evenly divide a " +
                        std::to_string(rows) + "x" + std::to_string(cols) + " region at level " +
                        std::to_string(lv + 1));
    }
    rows /= p.block_rows;
    cols /= p.block_cols;
  }
  store_ = std::make_unique<MatrixStore>(n_rows, n_cols);
  auto root = std::make_unique<DataHandle>();
  root->store_ = store_.get();
  root->rows_ = n_rows;
  root->cols_ = n_cols;
  root->name_ = std::move(name);
  handles_.push_back(std::move(root));
  build(*handles_.front());
}

void DataTree::build(DataHandle& h) {
  if (h.level_ >= spec_.size()) return;
  const auto& p = spec_[h.level_];
  h.p_rows_ = p.block_rows;
  h.p_cols_ = p.block_cols;
  const std::size_t cr = h.rows_ / p.block_rows, cc = h.cols_ / p.block_cols;
  for (std::size_t r = 0; r < p.block_rows; ++r) {
    for (std::size_t c = 0; c < p.block_cols; ++c) {
      auto child = std::make_unique<DataHandle>();
      child->id_ = static_cast<HandleId>(handles_.size());
      child->store_ = store_.get();
      child->row_offset_ = h.row_offset_ + r * cr;
      child->col_offset_ = h.col_offset_ + c * cc;
      child->rows_ = cr;
      child->cols_ = cc;
      child->level_ = h.level_ + 1;
      child->parent_ = &h;
      child->grid_pos_ = {r, c};
      child->name_ = h.name_ + "(" + std::to_string(r) + "," + std::to_string(c) + ")";
      h.children_.push_back(child.get());
      handles_.push_back(std::move(child));
    }
  }
  for (DataHandle* c : h.children_) build(*c);
}

const DataHandle& DataTree::handle(HandleId id) const {
  if (id >= handles_.size()) throw UsageError("unknown handle id " + std::to_string(id));
  return *handles_[id];
}

std::vector<const DataHandle*> DataTree::level_handles(std::size_t level) const {
  std::vector<const DataHandle*> out;
  for (const auto& h : handles_) {
    if (h->level() == level) out.push_back(h.get());
  }
  return out;
}

std::unique_ptr<DataTree> create_data(std::size_t n_rows, std::size_t n_cols,
                                      const PartitionSpec& spec) {
  return std::make_unique<DataTree>(n_rows, n_cols, spec);
}

const DataHandle& get_partition(const DataHandle& h, std::size_t r, std::size_t c) {
  return h.child(r, c);
}

std::pair<std::size_t, std::size_t> num_partitions(const DataHandle& h) noexcept {
  return h.grid();
}

void fill_spd(const DataHandle& h, std::uint64_t seed) {
  if (h.level() != 0) throw UsageError("fill_spd: handle must be level 0");
  if (h.rows() != h.cols()) throw UsageError("fill_spd: matrix must be square");
  MatrixStore& s = h.store();
  const std::size_t n = h.rows();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.at(i, i) = static_cast<double>(n) + unit(rng);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = off(rng);
      s.at(i, j) = v;
      s.at(j, i) = v;
    }
  }
}

std::vector<double> read_region(const DataHandle& h, const MatrixStore& store) {
  std::vector<double> out(h.rows() * h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r) {
    const double* src = store.elements().data() + (h.row_offset() + r) * store.cols() + h.col_offset();
    std::copy_n(src, h.cols(), out.begin() + static_cast<std::ptrdiff_t>(r * h.cols()));
  }
  return out;
}

std::vector<double> read_region(const DataHandle& h) { return read_region(h, h.store()); }

void write_region(const DataHandle& h, MatrixStore& store, std::span<const double> block) {
  if (block.size() != h.rows() * h.cols()) {
    throw UsageError("write_region: block of " + std::to_string(block.size()) +
                     " elements does not match " + std::to_string(h.rows()) + "x" +
                     std::to_string(h.cols()) + " region " + h.name());
  }
  for (std::size_t r = 0; r < h.rows(); ++r) {
    double* dst = store.elements().data() + (h.row_offset() + r) * store.cols() + h.col_offset();
    std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(r * h.cols()), h.cols(), dst);
  }
}

void write_region(const DataHandle& h, std::span<const double> block) {
  write_region(h, h.store(), block);
}

kernels::BlockView view_of(const DataHandle& h, MatrixStore& store) {
  return {store.elements().data() + h.row_offset() * store.cols() + h.col_offset(), h.rows(),
          h.cols(), store.cols()};
}

}  // namespace utp
