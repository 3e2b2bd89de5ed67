#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ctm/net.hpp"
#include "ctm/num.hpp"
#include "ctm/rng.hpp"

namespace ctm {

struct GaussComponent {
  double weight = 1.0;
  Vec mean;
  Vec var;  // diagonal covariance
};

// Label-conditioned diagonal Gaussian mixture. Labels carry equal prior
// weight; the unconditional distribution is their weighted union.
struct ConditionedMixture {
  int dim = 0;
  std::vector<std::vector<GaussComponent>> by_label;  // weights sum to 1 per label

  int num_labels() const { return int(by_label.size()); }
  const std::vector<GaussComponent>& components(Label c) const;

  Vec sample(Label c, Rng& rng) const;
  double log_density(Label c, std::span<const double> x) const;

  // Affine-rescale all components so the pooled distribution has zero mean
  // and average per-coordinate variance sigma_data^2.
  void standardize(double sigma_data);

  void validate() const;

  // Random well-separated blobs; the reference instance for low dim.
  static ConditionedMixture blobs(int dim, int labels, int comps_per_label,
                                  double spread, std::uint64_t seed);

  // Smooth random signals with label-dependent envelopes; gives the
  // intensity-guidance task something to control. Use dim >= 64.
  static ConditionedMixture smooth_signals(int dim, int labels, int comps_per_label,
                                           std::uint64_t seed);

 private:
  mutable std::vector<GaussComponent> marginal_;  // built lazily
  const std::vector<GaussComponent>& marginal() const;
  void invalidate_cache() { marginal_.clear(); }
};

}  // namespace ctm
