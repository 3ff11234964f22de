#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace dfv {

using Extents = std::vector<std::size_t>;

/// Number of elements described by `dims`; throws InvalidDimension when the
/// list is empty or any extent is zero.
std::size_t checked_volume(const Extents& dims);

/// Dense row-major array of doubles. The latent state of every flow in this
/// library (source clips, noised samples, velocities, masks) is a Grid.
///
/// Construction and destruction are reported to a process-wide byte counter
/// so the efficiency probes can read the peak number of live grid bytes.
class Grid {
 public:
  Grid() = default;
  explicit Grid(Extents dims, double fill = 0.0);
  Grid(Extents dims, std::vector<double> values);

  Grid(const Grid& other);
  Grid(Grid&& other) noexcept;
  Grid& operator=(const Grid& other);
  Grid& operator=(Grid&& other) noexcept;
  ~Grid();

  static Grid like(const Grid& shape, double fill = 0.0) { return Grid(shape.dims(), fill); }

  const Extents& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const double* data() const noexcept { return data_.data(); }
  double* data() noexcept { return data_.data(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  /// Multi-index access; the index count must equal rank().
  double at(std::initializer_list<std::size_t> index) const;
  double& at(std::initializer_list<std::size_t> index);

  bool same_shape(const Grid& other) const noexcept { return dims_ == other.dims_; }

  /// Same data reinterpreted under new extents of equal volume.
  Grid reshaped(Extents dims) const;

  /// Value equality of dims and every element (0.0 == -0.0).
  friend bool operator==(const Grid& a, const Grid& b) noexcept;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;
  void account_add() const noexcept;
  void account_remove() const noexcept;

  Extents dims_;
  std::vector<double> data_;
};

/// True when dims match and every element has an identical bit pattern.
bool bit_equal(const Grid& a, const Grid& b) noexcept;

bool all_finite(const Grid& g) noexcept;

enum class ElementOp { Add, Sub, Mul };

/// result[i] = a[i] op (scale * b[i]).
Grid elementwise(const Grid& a, const Grid& b, ElementOp op, double scale = 1.0);

enum class NormKind { MaxAbs, L2, Mean };

double reduce_norm(const Grid& a, NormKind kind);

/// alpha * x + beta * y, elementwise; shapes must match.
Grid lincomb(double alpha, const Grid& x, double beta, const Grid& y);

Grid scaled(const Grid& x, double alpha);

struct GridMemoryStats {
  std::int64_t live_bytes = 0;
  std::int64_t peak_bytes = 0;
};

GridMemoryStats grid_memory() noexcept;

/// Restarts peak tracking from the current live byte count.
void reset_grid_peak() noexcept;

}  // namespace dfv
