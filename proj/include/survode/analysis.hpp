#pragma once

#include <vector>

#include "survode/metrics.hpp"
#include "survode/training.hpp"

namespace survode::analysis {

// Per-subject event-k cause-module embeddings summed over bins 1..horizon
// (rows of an N x embed_dim matrix).
std::vector<std::vector<double>> latent_summary(const Model& model,
                                                const Dataset& data, int k,
                                                int horizon);

struct KMeansResult {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  std::vector<double> inertia_trace;  // nonincreasing across iterations
};

// Lloyd's algorithm with k-means++ seeding; empty clusters are re-seeded
// from the farthest point.
KMeansResult kmeans(const std::vector<std::vector<double>>& rows,
                    int k_clusters, uint64_t seed, int max_iter = 100);

struct ClusterCurves {
  int cluster = 0;
  size_t n_members = 0;
  metrics::AalenJohansen curves;
};

// Aalen-Johansen CIF curves within each cluster; empty clusters are omitted.
std::vector<ClusterCurves> cluster_incidence(
    const std::vector<int>& labels, const std::vector<SurvivalRecord>& records,
    int n_event_types);

}  // namespace survode::analysis
