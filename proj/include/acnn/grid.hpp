#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace acnn {

// Dense row-major 2-D grid. The workhorse container for images, feature
// channels (0/1), and real-valued neuron-state channels.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  T& at(int r, int c) {
    check_bounds(r, c);
    return (*this)(r, c);
  }
  const T& at(int r, int c) const {
    check_bounds(r, c);
    return (*this)(r, c);
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool operator==(const Grid&) const = default;

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows < 0 || cols < 0) {
      throw std::invalid_argument("Grid: negative dimensions");
    }
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  void check_bounds(int r, int c) const {
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_) {
      throw std::out_of_range("Grid::at(" + std::to_string(r) + "," + std::to_string(c) +
                              ") outside " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using ByteGrid = Grid<std::uint8_t>;
using RealGrid = Grid<double>;

// A stack of equally sized real channels (e.g. all layer-1 channels of one
// exemplar, or the final layer-2 channels fed to the classifier head).
using ChannelStack = std::vector<RealGrid>;

}  // namespace acnn
