#include "survode/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survode/errors.hpp"

namespace survode::analysis {

std::vector<std::vector<double>> latent_summary(const Model& model,
                                                const Dataset& data, int k,
                                                int horizon) {
  if (k < 1 || static_cast<size_t>(k) > model.dims.b)
    throw ValidationError("latent_summary: event type out of range");
  if (horizon < 1) throw ValidationError("latent_summary: horizon must be >= 1");
  std::vector<std::vector<double>> rows;
  rows.reserve(data.records.size());
  for (const auto& rec : data.records) {
    ad::Tape tape;
    nn::BoundParams p = nn::BoundParams::bind(tape, model.params);
    EncodedBatch batch = build_batch({rec});
    EncodedPosterior post =
        encode(tape, p, batch, model.dims, model.config.solver);
    // posterior mean, embeddings summed over bins 1..horizon
    std::vector<ad::Var> z = latent_trajectory(tape, p, model.dims, post.mu[0],
                                               horizon, model.config.solver);
    std::vector<double> row(model.dims.cause_embed, 0.0);
    for (int t = 1; t <= horizon; ++t) {
      ad::Var e = cause_embedding(tape, p, model.dims,
                                  z[static_cast<size_t>(t)], k);
      const ad::Vec& v = tape.val(e);
      for (size_t i = 0; i < row.size(); ++i) row[i] += v[i];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double r = a[i] - b[i];
    d += r * r;
  }
  return d;
}

size_t nearest_centroid(const std::vector<double>& row,
                        const std::vector<std::vector<double>>& centroids) {
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(row, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& rows,
                    int k_clusters, uint64_t seed, int max_iter) {
  if (k_clusters < 1) throw ValidationError("kmeans: k must be >= 1");
  const size_t n = rows.size();
  const size_t k = static_cast<size_t>(k_clusters);
  if (n < k)
    throw ValidationError("kmeans: fewer points than clusters");
  const size_t dim = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != dim) throw DimensionError("kmeans: ragged input rows");

  Rng rng(seed);
  // k-means++ seeding
  std::vector<std::vector<double>> centroids;
  centroids.push_back(rows[rng.below(n)]);
  std::vector<double> d2(n);
  while (centroids.size() < k) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, sq_dist(rows[i], c));
      d2[i] = best;
      total += best;
    }
    size_t pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u <= acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);  // all points coincide with a centroid
    }
    centroids.push_back(rows[pick]);
  }

  KMeansResult res;
  res.labels.assign(n, 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = iter == 0;
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const int label = static_cast<int>(nearest_centroid(rows[i], centroids));
      if (label != res.labels[i]) changed = true;
      res.labels[i] = label;
      inertia += sq_dist(rows[i], centroids[static_cast<size_t>(label)]);
    }
    res.inertia_trace.push_back(inertia);
    if (!changed) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      const auto c = static_cast<size_t>(res.labels[i]);
      ++counts[c];
      for (size_t j = 0; j < dim; ++j) sums[c][j] += rows[i][j];
    }
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (size_t j = 0; j < dim; ++j)
          centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      } else {
        // re-seed an empty cluster from the farthest point
        size_t far = 0;
        double far_d = -1.0;
        for (size_t i = 0; i < n; ++i) {
          const double d =
              sq_dist(rows[i], centroids[static_cast<size_t>(res.labels[i])]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids[c] = rows[far];
      }
    }
  }
  res.centroids = std::move(centroids);
  return res;
}

std::vector<ClusterCurves> cluster_incidence(
    const std::vector<int>& labels, const std::vector<SurvivalRecord>& records,
    int n_event_types) {
  if (labels.size() != records.size())
    throw DimensionError("cluster_incidence: labels/records size mismatch");
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  std::vector<ClusterCurves> out;
  for (int c = 0; c <= max_label; ++c) {
    std::vector<SurvivalRecord> members;
    for (size_t i = 0; i < records.size(); ++i)
      if (labels[i] == c) members.push_back(records[i]);
    if (members.empty()) continue;
    ClusterCurves cc;
    cc.cluster = c;
    cc.n_members = members.size();
    cc.curves = metrics::aalen_johansen(members, n_event_types);
    out.push_back(std::move(cc));
  }
  return out;
}

}  // namespace survode::analysis
