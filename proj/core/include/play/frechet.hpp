#pragma once

#include <string>
#include <vector>

namespace play {

// Equal-length real vectors drawn from one distribution.
struct FeatureSet {
  std::vector<std::vector<double>> vectors;
  std::string source;

  int dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }
  int size() const { return static_cast<int>(vectors.size()); }
};

struct FrechetResult {
  double distance = 0.0;
  // Set when either set has fewer samples than dimensions.
  bool undersampled = false;
};

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}) with unbiased
// covariances. The trace of the square root is taken from the eigenvalues of
// S_a^{1/2} S_b S_a^{1/2}, negative eigenvalues clipped to zero.
FrechetResult frechet_distance_checked(const FeatureSet& a, const FeatureSet& b);
double frechet_distance(const FeatureSet& a, const FeatureSet& b);

}  // namespace play
