#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace evoem {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One row of a DataSet. An empty mask means every coordinate is observed.
struct Datapoint {
  std::span<const double> y;
  std::span<const std::uint8_t> mask;

  std::size_t dim() const noexcept { return y.size(); }
  bool fully_observed() const noexcept { return mask.empty(); }
  bool observed(std::size_t d) const noexcept { return mask.empty() || mask[d] != 0; }
  std::size_t observed_count() const noexcept;
  // Observed coordinate indices in increasing order.
  void observed_indices(std::vector<int>& out) const;
};

// N x D data matrix with an optional N x D observation mask (1 = observed).
struct DataSet {
  RowMatrix Y;
  std::optional<MaskMatrix> mask;

  DataSet() = default;
  explicit DataSet(RowMatrix y, std::optional<MaskMatrix> m = std::nullopt);

  std::size_t size() const noexcept { return static_cast<std::size_t>(Y.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(Y.cols()); }
  bool has_mask() const noexcept { return mask.has_value(); }

  Datapoint row(std::size_t n) const;

  // Total number of observed entries.
  std::size_t observed_total() const;

  // Throws DimensionError when the mask shape disagrees with Y or a row has
  // no observed entry.
  void validate() const;
};

}  // namespace evoem
