#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "evoem/params.hpp"

namespace evoem::detail {

// Solves W G = B for the rows of W (G symmetric PSD, H x H; B is R x H),
// restricted to units with positive Gram diagonal; columns of units that never
// appeared keep their previous values. A ridge of kRidgeScale * trace / H is
// added only when the restricted system is numerically singular.
inline void solve_gram_rows(const Eigen::MatrixXd& G, const Eigen::MatrixXd& B, Eigen::MatrixXd& W,
                            MStepReport& report) {
  const Eigen::Index H = G.rows();
  std::vector<Eigen::Index> used;
  for (Eigen::Index h = 0; h < H; ++h)
    if (G(h, h) > 0.0) used.push_back(h);
  if (used.empty()) return;
  const auto k = static_cast<Eigen::Index>(used.size());

  Eigen::MatrixXd Gs(k, k);
  Eigen::MatrixXd Bs(B.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Bs.col(i) = B.col(used[i]);
    for (Eigen::Index j = 0; j < k; ++j) Gs(i, j) = G(used[i], used[j]);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(Gs);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    const double ridge = limits::kRidgeScale * Gs.trace() / static_cast<double>(H);
    Gs.diagonal().array() += ridge;
    llt.compute(Gs);
    report.ridge_used = true;
  }
  const Eigen::MatrixXd Ws = llt.solve(Bs.transpose()).transpose();
  for (Eigen::Index i = 0; i < k; ++i) W.col(used[i]) = Ws.col(i);
}

}  // namespace evoem::detail
