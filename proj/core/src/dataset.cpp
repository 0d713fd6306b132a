#include "evoem/dataset.hpp"

#include <string>

#include "evoem/error.hpp"

namespace evoem {

std::size_t Datapoint::observed_count() const noexcept {
  if (mask.empty()) return y.size();
  std::size_t c = 0;
  for (auto m : mask) c += (m != 0);
  return c;
}

void Datapoint::observed_indices(std::vector<int>& out) const {
  out.clear();
  for (std::size_t d = 0; d < y.size(); ++d)
    if (observed(d)) out.push_back(static_cast<int>(d));
}

DataSet::DataSet(RowMatrix y, std::optional<MaskMatrix> m) : Y(std::move(y)), mask(std::move(m)) { validate(); }

Datapoint DataSet::row(std::size_t n) const {
  const auto D = dim();
  Datapoint dp;
  dp.y = std::span<const double>(Y.data() + n * D, D);
  if (mask) dp.mask = std::span<const std::uint8_t>(mask->data() + n * D, D);
  return dp;
}

std::size_t DataSet::observed_total() const {
  if (!mask) return size() * dim();
  std::size_t c = 0;
  for (Eigen::Index i = 0; i < mask->size(); ++i) c += (mask->data()[i] != 0);
  return c;
}

void DataSet::validate() const {
  if (!mask) return;
  if (mask->rows() != Y.rows() || mask->cols() != Y.cols())
    throw DimensionError("DataSet: mask is " + std::to_string(mask->rows()) + "x" + std::to_string(mask->cols()) +
                         " but data is " + std::to_string(Y.rows()) + "x" + std::to_string(Y.cols()));
  for (std::size_t n = 0; n < size(); ++n)
    if (row(n).observed_count() == 0)
      throw DimensionError("DataSet: row " + std::to_string(n) + " has no observed entry");
}

}  // namespace evoem
