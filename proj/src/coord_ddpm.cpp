/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/coord_ddpm.hpp"

#include <algorithm>
#include <string>

namespace sgdiff {

PointCloud gaussian_sample(const CounterRng& rng, Eigen::Index n, std::uint64_t tag) {
  PointCloud out(n, 3);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index k = 0; k < 3; ++k)
      out(r, k) = rng.normal(tag, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(k));
  return out;
}

double coord_loss(const PointCloud& eps, const PointCloud& eps_hat) {
  if (eps.rows() != eps_hat.rows() || eps.cols() != eps_hat.cols()) {
    throw std::invalid_argument("coord_loss: shape mismatch");
  }
  if (eps.size() == 0) return 0.0;
  return (eps - eps_hat).squaredNorm() / static_cast<double>(eps.size());
}

double coord_loss(const CoordDenoiser& model, const PointCloud& x0, int t, const PointCloud& eps,
                  const DiffusionSchedule& sched) {
  const PointCloud xt = forward_noise_coords(x0, t, eps, sched);
  return coord_loss(eps, model.predict(xt, t, sched.steps()));
}

PointCloud sample_coords(const CoordDenoiser& model, Eigen::Index n, const DiffusionSchedule& sched,
                         const CounterRng& rng) {
  const int steps = sched.steps();
  PointCloud x = gaussian_sample(rng, n, static_cast<std::uint64_t>(steps) + 1);
  for (int t = steps; t >= 1; --t) {
    const PointCloud eps_hat = model.predict(x, t, steps);
    const PointCloud noise = gaussian_sample(rng, n, static_cast<std::uint64_t>(t));
    x = reverse_step_coords(x, t, eps_hat, noise, sched);
    if (!x.allFinite()) {
      throw std::runtime_error("sample_coords: non-finite coordinates at step " + std::to_string(t) +
                               " (max |eps_hat| = " + std::to_string(eps_hat.cwiseAbs().maxCoeff()) + ")");
    }
  }
  return x;
}

CoordNormalizer CoordNormalizer::fit(std::span<const SpatialGraph> corpus) {
  CoordNormalizer norm;
  Eigen::Index total = 0;
  Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
  for (const auto& g : corpus) {
    sum += g.coords().colwise().sum();
    total += g.coords().rows();
  }
  if (total == 0) return norm;
  norm.mean = sum / static_cast<double>(total);
  std::vector<double> radii;
  radii.reserve(static_cast<std::size_t>(total));
  for (const auto& g : corpus) {
    for (Eigen::Index r = 0; r < g.coords().rows(); ++r) radii.push_back((g.coords().row(r) - norm.mean).norm());
  }
  const auto k = static_cast<std::size_t>(0.99 * static_cast<double>(radii.size() - 1));
  std::nth_element(radii.begin(), radii.begin() + static_cast<std::ptrdiff_t>(k), radii.end());
  norm.scale = radii[k] > 0.0 ? radii[k] : 1.0;
  return norm;
}

PointCloud CoordNormalizer::normalize(const Coords& coords) const {
  return ((coords.rowwise() - mean) / scale).eval();
}

Coords CoordNormalizer::denormalize(const PointCloud& coords) const {
  Coords out = (coords * scale).rowwise() + mean;
  return out;
}

}  // namespace sgdiff
