#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "doctest.h"
#include "survode/analysis.hpp"
#include "survode/decoder.hpp"

using namespace survode;
using ad::Vec;

namespace {

SurvivalRecord outcome(const std::string& id, int t, std::optional<int> k) {
  SurvivalRecord r;
  r.id = id;
  r.observed_time = t;
  r.event_type = k;
  r.event_indicator = k.has_value();
  r.series.timestamps = {0.0};
  r.series.values = {{0.5}};
  return r;
}

Model tiny_model(int b) {
  Model m;
  m.dims.M = 1;
  m.dims.b = static_cast<size_t>(b);
  m.dims.H = 6;
  m.dims.L0 = 3;
  m.dims.L = 3;
  m.dims.enc_field_hidden = 4;
  m.dims.dec_field_hidden = 4;
  m.dims.cause_hidden = 4;
  m.dims.cause_embed = 3;
  m.dims.data_hidden = 4;
  m.params = init_params(m.dims, 33);
  m.config.dims = m.dims;
  m.config.t_m = 6;
  return m;
}

}  // namespace

TEST_CASE("latent summaries") {
  Model model = tiny_model(2);
  Dataset ds;
  ds.n_event_types = 2;
  ds.records = {outcome("a", 2, 1), outcome("b", 3, 2), outcome("a2", 2, 1)};
  ds.records[2].series = ds.records[0].series;  // identical inputs
  ds.records[2].observed_time = ds.records[0].observed_time;

  SUBCASE("identical subjects give identical rows") {
    auto rows = analysis::latent_summary(model, ds, 1, 4);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == rows[2]);
    CHECK(rows[0].size() == model.dims.cause_embed);
  }
  SUBCASE("horizon 1 equals the single-bin embedding") {
    auto rows = analysis::latent_summary(model, ds, 1, 1);
    // manual: encode, posterior mean, trajectory to bin 1, embedding at z(1)
    ad::Tape tape;
    auto p = nn::BoundParams::bind(tape, model.params);
    EncodedBatch batch = build_batch({ds.records[0]});
    auto enc = encode(tape, p, batch, model.dims, model.config.solver);
    auto traj = latent_trajectory(tape, p, model.dims, enc.mu[0], 1,
                                  model.config.solver);
    auto emb = cause_embedding(tape, p, model.dims, traj[1], 1);
    CHECK(rows[0] == tape.val(emb));
  }
  SUBCASE("summaries are permutation-equivariant over subjects") {
    auto rows = analysis::latent_summary(model, ds, 2, 3);
    Dataset rev = ds;
    std::reverse(rev.records.begin(), rev.records.end());
    auto rrows = analysis::latent_summary(model, rev, 2, 3);
    CHECK(rows[0] == rrows[2]);
    CHECK(rows[1] == rrows[1]);
  }
  SUBCASE("event index out of range is rejected") {
    CHECK_THROWS_AS(analysis::latent_summary(model, ds, 3, 2),
                    ValidationError);
  }
}

TEST_CASE("k-means") {
  SUBCASE("two well-separated blobs are recovered") {
    Rng rng(7);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 30; ++i)
      rows.push_back({10.0 + 0.1 * rng.normal(), 10.0 + 0.1 * rng.normal()});
    for (int i = 0; i < 30; ++i)
      rows.push_back({-10.0 + 0.1 * rng.normal(), -10.0 + 0.1 * rng.normal()});
    auto res = analysis::kmeans(rows, 2, 1);
    for (int i = 1; i < 30; ++i) CHECK(res.labels[i] == res.labels[0]);
    for (int i = 31; i < 60; ++i) CHECK(res.labels[i] == res.labels[30]);
    CHECK(res.labels[0] != res.labels[30]);
  }
  SUBCASE("k = n puts every point in its own cluster with zero inertia") {
    std::vector<std::vector<double>> rows{{0.0}, {1.0}, {2.0}, {5.0}};
    auto res = analysis::kmeans(rows, 4, 3);
    std::vector<int> sorted = res.labels;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3});
    CHECK(res.inertia_trace.back() == doctest::Approx(0.0));
  }
  SUBCASE("duplicate rows land in the same cluster") {
    std::vector<std::vector<double>> rows{{1.0}, {1.0}, {9.0}, {9.0}};
    auto res = analysis::kmeans(rows, 2, 5);
    CHECK(res.labels[0] == res.labels[1]);
    CHECK(res.labels[2] == res.labels[3]);
  }
  SUBCASE("inertia is nonincreasing across iterations") {
    Rng rng(13);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 50; ++i)
      rows.push_back({rng.normal(), rng.normal(), rng.normal()});
    auto res = analysis::kmeans(rows, 5, 2);
    for (size_t i = 1; i < res.inertia_trace.size(); ++i)
      CHECK(res.inertia_trace[i] <= res.inertia_trace[i - 1] + 1e-9);
  }
  SUBCASE("deterministic given the seed") {
    Rng rng(17);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 40; ++i) rows.push_back({rng.normal(), rng.normal()});
    CHECK(analysis::kmeans(rows, 4, 9).labels ==
          analysis::kmeans(rows, 4, 9).labels);
  }
  SUBCASE("fewer points than clusters is rejected") {
    std::vector<std::vector<double>> rows{{1.0}};
    CHECK_THROWS_AS(analysis::kmeans(rows, 2, 0), ValidationError);
  }
}

TEST_CASE("cluster incidence curves") {
  std::vector<SurvivalRecord> recs = {outcome("a", 1, 1), outcome("b", 2, 2),
                                      outcome("c", 3, std::nullopt),
                                      outcome("d", 2, 1)};
  SUBCASE("a single cluster equals the whole-sample estimate") {
    auto cc = analysis::cluster_incidence({0, 0, 0, 0}, recs, 2);
    REQUIRE(cc.size() == 1);
    auto whole = metrics::aalen_johansen(recs, 2);
    CHECK(cc[0].curves.F[0].values == whole.F[0].values);
    CHECK(cc[0].n_members == 4);
  }
  SUBCASE("pairing matters, order does not") {
    auto cc1 = analysis::cluster_incidence({0, 1, 0, 1}, recs, 2);
    auto recs_rev = recs;
    std::reverse(recs_rev.begin(), recs_rev.end());
    auto cc2 = analysis::cluster_incidence({1, 0, 1, 0}, recs_rev, 2);
    REQUIRE(cc1.size() == 2);
    REQUIRE(cc2.size() == 2);
    CHECK(cc1[0].curves.F[0].values == cc2[0].curves.F[0].values);
    CHECK(cc1[1].curves.F[1].values == cc2[1].curves.F[1].values);
  }
  SUBCASE("empty clusters are omitted") {
    auto cc = analysis::cluster_incidence({0, 0, 2, 2}, recs, 2);
    REQUIRE(cc.size() == 2);
    CHECK(cc[0].cluster == 0);
    CHECK(cc[1].cluster == 2);
  }
  SUBCASE("label/record length mismatch is rejected") {
    CHECK_THROWS_AS(analysis::cluster_incidence({0, 1}, recs, 2),
                    DimensionError);
  }
}
