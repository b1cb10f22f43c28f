#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace uavx::gmm {

inline constexpr int kPoolGrid = 4;
inline constexpr std::size_t kEmbeddingDim = kPoolGrid * kPoolGrid;

using Embedding = std::vector<double>;

// Average-pools a width x height observation onto a 4x4 grid, row-major.
Embedding embed(std::span<const double> observation, int width, int height);

// Diagonal-covariance Gaussian mixture.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
};

struct FitConfig {
  int components = 3;
  int iterations = 20;
  double pseudocount = 1.0;  // Dirichlet pseudocount added to each component's responsibility mass
  double variance_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct FitResult {
  GaussianMixture mixture;
  // Penalized log-likelihood after initialization and after every EM iteration.
  std::vector<double> objective;
};

// MAP expectation-maximization. Means start at a seeded farthest-point
// selection; throws ArgumentError when there are fewer points than components.
FitResult fit(std::span<const Embedding> points, const FitConfig& config);

// ln sum_k w_k N(x | mu_k, diag(var_k)), evaluated with log-sum-exp.
double log_density(const GaussianMixture& g, std::span<const double> x);

// Sum of log densities plus pseudocount * sum_k ln w_k.
double penalized_log_likelihood(const GaussianMixture& g, std::span<const Embedding> points,
                                double pseudocount);

}  // namespace uavx::gmm
