#include "uavx/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "uavx/errors.h"
#include "uavx/rng.h"

namespace uavx::gmm {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Log of one weighted diagonal Gaussian term.
double log_component(const GaussianMixture& g, std::size_t k, std::span<const double> x) {
  const auto& mu = g.means[k];
  const auto& var = g.variances[k];
  double quad = 0.0;
  double log_det = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double diff = x[j] - mu[j];
    quad += diff * diff / var[j];
    log_det += std::log(var[j]);
  }
  return std::log(g.weights[k]) - 0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det + quad);
}

double log_sum_exp(std::span<const double> terms) {
  const double peak = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

}  // namespace

Embedding embed(std::span<const double> observation, int width, int height) {
  if (width < 1 || height < 1 || observation.size() != static_cast<std::size_t>(width) * height) {
    throw ArgumentError("observation size does not match " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
  Embedding out(kEmbeddingDim, 0.0);
  for (int gr = 0; gr < kPoolGrid; ++gr) {
    const int r0 = gr * height / kPoolGrid;
    const int r1 = std::max(r0 + 1, (gr + 1) * height / kPoolGrid);
    for (int gc = 0; gc < kPoolGrid; ++gc) {
      const int c0 = gc * width / kPoolGrid;
      const int c1 = std::max(c0 + 1, (gc + 1) * width / kPoolGrid);
      double sum = 0.0;
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) sum += observation[static_cast<std::size_t>(r) * width + c];
      }
      out[gr * kPoolGrid + gc] = sum / ((r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

double log_density(const GaussianMixture& g, std::span<const double> x) {
  if (x.size() != g.dim()) throw ArgumentError("embedding dimension does not match mixture");
  std::vector<double> terms(g.components());
  for (std::size_t k = 0; k < g.components(); ++k) terms[k] = log_component(g, k, x);
  return log_sum_exp(terms);
}

double penalized_log_likelihood(const GaussianMixture& g, std::span<const Embedding> points,
                                double pseudocount) {
  double total = 0.0;
  for (const auto& p : points) total += log_density(g, p);
  if (pseudocount > 0.0) {
    for (double w : g.weights) total += pseudocount * std::log(w);
  }
  return total;
}

FitResult fit(std::span<const Embedding> points, const FitConfig& config) {
  const std::size_t m = static_cast<std::size_t>(std::max(config.components, 0));
  const std::size_t n = points.size();
  if (m < 1) throw ArgumentError("mixture needs at least one component");
  if (n < m) {
    throw ArgumentError("cannot fit " + std::to_string(m) + " components to " + std::to_string(n) +
                        " points");
  }
  if (!(config.pseudocount >= 0.0)) throw ArgumentError("pseudocount must be non-negative");
  const std::size_t d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw ArgumentError("points differ in dimension");
  }
  const double floor = config.variance_floor;

  // Pooled statistics seed every component's variance.
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& p : points) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  for (const auto& p : points) {
    for (std::size_t j = 0; j < d; ++j) var[j] += (p[j] - mean[j]) * (p[j] - mean[j]);
  }
  for (double& v : var) v = std::max(v / static_cast<double>(n), floor);

  GaussianMixture g;
  g.weights.assign(m, 1.0 / static_cast<double>(m));
  g.variances.assign(m, var);
  Rng rng(config.seed);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = uniform_index(rng, n);
  for (std::size_t k = 0; k < m; ++k) {
    g.means.push_back(points[pick]);
    std::size_t far = 0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], points[pick]));
      if (nearest[i] > nearest[far]) far = i;
    }
    pick = far;
  }

  FitResult result;
  result.objective.push_back(penalized_log_likelihood(g, points, config.pseudocount));

  std::vector<double> resp(n * m);
  std::vector<double> terms(m);
  for (int iter = 0; iter < config.iterations; ++iter) {
    // E-step.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < m; ++k) terms[k] = log_component(g, k, points[i]);
      const double lse = log_sum_exp(terms);
      for (std::size_t k = 0; k < m; ++k) resp[i * m + k] = std::exp(terms[k] - lse);
    }
    // M-step with Dirichlet-MAP weights and floored variances.
    const double denom = static_cast<double>(n) + static_cast<double>(m) * config.pseudocount;
    for (std::size_t k = 0; k < m; ++k) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) mass += resp[i * m + k];
      g.weights[k] = (mass + config.pseudocount) / denom;
      if (mass < 1e-300) continue;  // empty component keeps its Gaussian
      auto& mu = g.means[k];
      std::fill(mu.begin(), mu.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * m + k];
        for (std::size_t j = 0; j < d; ++j) mu[j] += r * points[i][j];
      }
      for (double& v : mu) v /= mass;
      auto& sigma = g.variances[k];
      std::fill(sigma.begin(), sigma.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * m + k];
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = points[i][j] - mu[j];
          sigma[j] += r * diff * diff;
        }
      }
      for (double& v : sigma) v = std::max(v / mass, floor);
    }
    result.objective.push_back(penalized_log_likelihood(g, points, config.pseudocount));
  }
  result.mixture = std::move(g);
  return result;
}

}  // namespace uavx::gmm
