#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "amh/ingest.hpp"
#include "amh/models.hpp"

namespace amh {

struct SimOutput {
  ReturnSeries returns;       ///< zero-mean process; not mean-adjusted
  Eigen::VectorXd true_beta;  ///< beta_{1,t}
  Eigen::VectorXd true_h;     ///< conditional variance (sigma2_eps for TVAR)
  std::uint64_t seed = 0;
};

/// Forward simulation of the generative model. The variance recursion is
/// driven by the true shocks sigma_{t-1} eps_{t-1}, and h_0 is the
/// unconditional variance omega / (1 - persistence). Dates are consecutive
/// month-ends from 1995-01-31. Per step the stream yields the random-walk
/// increments first, then the return shock.
SimOutput simulate(const ModelSpec& spec, const Theta& theta, Eigen::Index length,
                   std::uint64_t seed, double beta0 = 0.0);

}  // namespace amh
