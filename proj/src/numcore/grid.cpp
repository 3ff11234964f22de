#include "dfv/numcore/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv {

namespace {

std::atomic<std::int64_t> g_live_bytes{0};
std::atomic<std::int64_t> g_peak_bytes{0};

std::string dims_string(const Extents& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::Shape, std::string(what) + ": " + dims_string(a.dims()) + " vs " +
                               dims_string(b.dims()));
  }
}

Grid checked(Grid g, const char* what) {
  if (!all_finite(g)) fail(ErrorKind::Domain, std::string(what) + " produced a non-finite value");
  return g;
}

}  // namespace

std::size_t checked_volume(const Extents& dims) {
  if (dims.empty()) fail(ErrorKind::InvalidDimension, "extent list is empty");
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) fail(ErrorKind::InvalidDimension, "zero extent in " + dims_string(dims));
    n *= d;
  }
  return n;
}

Grid::Grid(Extents dims, double fill) : dims_(std::move(dims)) {
  data_.assign(checked_volume(dims_), fill);
  account_add();
}

Grid::Grid(Extents dims, std::vector<double> values) : dims_(std::move(dims)), data_(std::move(values)) {
  if (checked_volume(dims_) != data_.size()) {
    fail(ErrorKind::Shape, "value count " + std::to_string(data_.size()) + " does not match dims " +
                               dims_string(dims_));
  }
  account_add();
}

Grid::Grid(const Grid& other) : dims_(other.dims_), data_(other.data_) { account_add(); }

Grid::Grid(Grid&& other) noexcept : dims_(std::move(other.dims_)), data_(std::move(other.data_)) {
  other.dims_.clear();
  other.data_.clear();
}

Grid& Grid::operator=(const Grid& other) {
  if (this != &other) {
    account_remove();
    dims_ = other.dims_;
    data_ = other.data_;
    account_add();
  }
  return *this;
}

Grid& Grid::operator=(Grid&& other) noexcept {
  if (this != &other) {
    account_remove();
    dims_ = std::move(other.dims_);
    data_ = std::move(other.data_);
    other.dims_.clear();
    other.data_.clear();
  }
  return *this;
}

Grid::~Grid() { account_remove(); }

void Grid::account_add() const noexcept {
  const auto bytes = static_cast<std::int64_t>(data_.size() * sizeof(double));
  if (bytes == 0) return;
  const auto now = g_live_bytes.fetch_add(bytes) + bytes;
  auto peak = g_peak_bytes.load();
  while (now > peak && !g_peak_bytes.compare_exchange_weak(peak, now)) {
  }
}

void Grid::account_remove() const noexcept {
  const auto bytes = static_cast<std::int64_t>(data_.size() * sizeof(double));
  if (bytes) g_live_bytes.fetch_sub(bytes);
}

std::size_t Grid::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != dims_.size()) {
    fail(ErrorKind::Index, "expected " + std::to_string(dims_.size()) + " indices, got " +
                               std::to_string(index.size()));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= dims_[axis]) fail(ErrorKind::Index, "index out of range on axis " + std::to_string(axis));
    off = off * dims_[axis] + i;
    ++axis;
  }
  return off;
}

double Grid::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }
double& Grid::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }

Grid Grid::reshaped(Extents dims) const {
  if (checked_volume(dims) != size()) {
    fail(ErrorKind::Shape, "cannot reshape " + dims_string(dims_) + " to " + dims_string(dims));
  }
  return Grid(std::move(dims), data_);
}

bool operator==(const Grid& a, const Grid& b) noexcept {
  return a.dims_ == b.dims_ && a.data_ == b.data_;
}

bool bit_equal(const Grid& a, const Grid& b) noexcept {
  return a.dims() == b.dims() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool all_finite(const Grid& g) noexcept {
  return std::all_of(g.values().begin(), g.values().end(), [](double v) { return std::isfinite(v); });
}

Grid elementwise(const Grid& a, const Grid& b, ElementOp op, double scale) {
  require_same_shape(a, b, "elementwise");
  Grid out = Grid::like(a);
  const std::size_t n = a.size();
  switch (op) {
    case ElementOp::Add:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + scale * b[i];
      break;
    case ElementOp::Sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - scale * b[i];
      break;
    case ElementOp::Mul:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * (scale * b[i]);
      break;
  }
  return checked(std::move(out), "elementwise");
}

double reduce_norm(const Grid& a, NormKind kind) {
  if (a.empty()) fail(ErrorKind::InvalidDimension, "reduction over an empty grid");
  double acc = 0.0;
  switch (kind) {
    case NormKind::MaxAbs:
      for (double v : a.values()) acc = std::max(acc, std::abs(v));
      return acc;
    case NormKind::L2:
      for (double v : a.values()) acc += v * v;
      return std::sqrt(acc);
    case NormKind::Mean:
      for (double v : a.values()) acc += v;
      return acc / static_cast<double>(a.size());
  }
  return acc;
}

Grid lincomb(double alpha, const Grid& x, double beta, const Grid& y) {
  require_same_shape(x, y, "lincomb");
  Grid out = Grid::like(x);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i] + beta * y[i];
  return checked(std::move(out), "lincomb");
}

Grid scaled(const Grid& x, double alpha) {
  Grid out = x;
  for (double& v : out.values()) v *= alpha;
  return checked(std::move(out), "scaled");
}

GridMemoryStats grid_memory() noexcept { return {g_live_bytes.load(), g_peak_bytes.load()}; }

void reset_grid_peak() noexcept { g_peak_bytes.store(g_live_bytes.load()); }

}  // namespace dfv
