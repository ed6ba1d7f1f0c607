#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "aggrekit/mobility.hpp"

using namespace aggrekit;
using mobility::ClusterWorld;
using mobility::MobilityParams;
using mobility::NodeState;

namespace {

// Hand-coded Pearson for the [DERIVED] oracle cases.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// A world whose rm histories are set directly, bypassing kinematics, so the
// clustering/upload logic can be exercised on hand-built topologies.
ClusterWorld manual_world(const std::vector<NodeState>& nodes,
                          const MobilityParams& params) {
  ClusterWorld world;
  world.params = params;
  world.cell_radius_m = params.cell_radius_m;
  world.cr_range_m = params.beacon_range_m;
  world.weights = {params.alpha, params.beta};
  world.ledger.tti_s = params.tti_s;
  world.nodes = nodes;
  for (auto& n : world.nodes) {
    n.energy_j = params.initial_energy_j;
    if (n.rm_history.empty()) n.rm_history.assign(nodes.size(), {});
  }
  return world;
}

// Gives the ordered pair (x, y) rm histories whose Pearson correlation is
// exactly `target`: mix a centered ramp with an orthogonal alternating
// component.
void set_pair_affinity(ClusterWorld& world, int x, int y, double target) {
  const int w = world.params.window;
  std::vector<double> base(w), alt(w);
  for (int i = 0; i < w; ++i) {
    base[i] = i;
    alt[i] = (i % 2) ? 1.0 : -1.0;
  }
  double mb = 0, ma = 0;
  for (int i = 0; i < w; ++i) {
    mb += base[i];
    ma += alt[i];
  }
  mb /= w;
  ma /= w;
  double dot = 0, bb = 0;
  for (int i = 0; i < w; ++i) {
    base[i] -= mb;
    alt[i] -= ma;
    dot += alt[i] * base[i];
    bb += base[i] * base[i];
  }
  double aa = 0;
  for (int i = 0; i < w; ++i) {
    alt[i] -= dot / bb * base[i];
    aa += alt[i] * alt[i];
  }
  std::vector<double> mix(w);
  const double s = std::sqrt(std::max(0.0, 1.0 - target * target));
  for (int i = 0; i < w; ++i) {
    mix[i] = target * base[i] / std::sqrt(bb) + s * alt[i] / std::sqrt(aa);
  }
  world.nodes[x].rm_history[y] = base;
  world.nodes[y].rm_history[x] = mix;
}

}  // namespace

TEST_SUITE_BEGIN("mobility");

TEST_CASE("step_kinematics integrates speed and horizontal component") {
  NodeState node;
  node = mobility::step_kinematics(node, 2.0, 1.0, 0.0);
  CHECK(node.speed == doctest::Approx(2.0));
  CHECK(node.velocity_history.back() == doctest::Approx(2.0));

  NodeState fast;
  fast.speed = 2.0;
  fast = mobility::step_kinematics(fast, 0.0, 1.0, M_PI / 3.0);
  CHECK(fast.velocity_history.back() == doctest::Approx(1.0));

  NodeState steady;
  steady.speed = 1.25;
  for (int i = 0; i < 5; ++i)
    steady = mobility::step_kinematics(steady, 0.0, 0.5, 0.3);
  CHECK(steady.speed == doctest::Approx(1.25));
}

TEST_CASE("normalized_distance against the beacon range") {
  NodeState a, b;
  b.position = {300.0, 0.0};
  CHECK(mobility::normalized_distance(a, b, 300.0) == doctest::Approx(1.0));
  b.position = {90.0, 120.0};  // distance 150
  CHECK(mobility::normalized_distance(a, b, 300.0) == doctest::Approx(0.5));
  b.position = {0.0, 0.0};
  CHECK(mobility::normalized_distance(a, b, 300.0) == doctest::Approx(0.0));
}

TEST_CASE("relative_mobility is the weighted sum of Eq 2.8") {
  CHECK(mobility::relative_mobility(0.5, 0.2, {0.5, 0.5}) == doctest::Approx(0.35));
  CHECK(mobility::relative_mobility(0.0, 0.0, {0.5, 0.5}) == doctest::Approx(0.0));
  const double once = mobility::relative_mobility(0.3, 0.7, {0.4, 0.6});
  const double twice = mobility::relative_mobility(0.3, 0.7, {0.8, 1.2});
  CHECK(twice == doctest::Approx(2.0 * once));
  CHECK_THROWS_AS(mobility::relative_mobility(0.1, 0.1, {-0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("co_relative_mobility matches a Pearson oracle") {
  std::vector<double> ramp{1, 2, 3, 4};
  auto r = mobility::co_relative_mobility(ramp, ramp, 4);
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(!r.degenerate);

  std::vector<double> neg{-1, -2, -3, -4};
  CHECK(mobility::co_relative_mobility(ramp, neg, 4).value == doctest::Approx(-1.0));

  std::vector<double> y{1, 2, 2, 5};
  const double oracle = pearson_oracle(ramp, y);
  CHECK(oracle == doctest::Approx(6.0 / std::sqrt(45.0)));  // hand-computed
  CHECK(mobility::co_relative_mobility(ramp, y, 4).value ==
        doctest::Approx(oracle).epsilon(1e-12));

  std::vector<double> flat{2, 2, 2, 2};
  auto d = mobility::co_relative_mobility(ramp, flat, 4);
  CHECK(d.value == 0.0);
  CHECK(d.degenerate);

  CHECK_THROWS_AS(mobility::co_relative_mobility(ramp, y, 5),
                  std::invalid_argument);
}

TEST_CASE("assign_rings follows ceil(max_rings * d / R) with clamping") {
  MobilityParams params;
  params.max_rings = 5;
  params.cell_radius_m = 1000.0;

  std::vector<NodeState> nodes(4);
  for (int i = 0; i < 4; ++i) nodes[i].id = i;
  nodes[0].position = {450.0, 0.0};   // 0.45R -> ceil(2.25) = 3
  nodes[1].position = {0.0, 0.0};     // at BS -> ring 1
  nodes[2].position = {1000.0, 0.0};  // exactly R -> ring 5
  nodes[3].position = {1400.0, 0.0};  // outside -> clamped to 5, warned

  auto world = manual_world(nodes, params);
  mobility::assign_rings(world);
  CHECK(world.nodes[0].ring == 3);
  CHECK(world.nodes[1].ring == 1);
  CHECK(world.nodes[2].ring == 5);
  CHECK(world.nodes[3].ring == 5);
  CHECK(world.outside_cell_warnings == 1);
}

TEST_CASE("form_clusters joins the argmax advertiser in the same ring") {
  MobilityParams params;
  params.window = 4;
  std::vector<NodeState> nodes(3);
  for (int i = 0; i < 3; ++i) {
    nodes[i].id = i;
    nodes[i].ring = 2;
    nodes[i].position = {100.0 + 10.0 * i, 0.0};
  }
  auto world = manual_world(nodes, params);
  for (auto& n : world.nodes) n.ring = 2;
  set_pair_affinity(world, 0, 1, 0.9);
  set_pair_affinity(world, 0, 2, -0.8);
  set_pair_affinity(world, 1, 2, -0.5);

  mobility::form_clusters(world);
  CHECK(world.nodes[0].member_of == 1);
  CHECK(world.nodes[1].is_ch);

  // A candidate in a different ring is excluded regardless of affinity.
  auto world2 = manual_world(nodes, params);
  world2.nodes[1].ring = 3;
  set_pair_affinity(world2, 0, 1, 0.95);
  set_pair_affinity(world2, 0, 2, 0.1);
  set_pair_affinity(world2, 1, 2, 0.1);
  mobility::form_clusters(world2);
  CHECK(world2.nodes[0].member_of == 2);
}

TEST_CASE("cluster formation partitions every node exactly once") {
  MobilityParams params;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto world = mobility::make_world(params, 50, seed);
    mobility::advance_kinematics(world, seed, params.window);
    mobility::assign_rings(world);
    mobility::form_clusters(world);

    std::set<int> seen;
    for (const auto& [ch, members] : world.clusters) {
      CHECK(seen.insert(ch).second);
      for (int m : members) {
        CHECK(seen.insert(m).second);
        CHECK(world.nodes[m].ring == world.nodes[ch].ring);
        CHECK(mobility::distance(world.nodes[m].position,
                                 world.nodes[ch].position) <= world.cr_range_m);
      }
    }
    CHECK(seen.size() == world.nodes.size());
  }
}

TEST_CASE("join choice is argmax over eligible advertisers at join time") {
  MobilityParams params;
  auto world = mobility::make_world(params, 40, 77);
  mobility::advance_kinematics(world, 77, params.window);
  mobility::assign_rings(world);
  mobility::form_clusters(world);

  for (const auto& [ch, members] : world.clusters) {
    for (int m : members) {
      const auto& node = world.nodes[m];
      const double chosen = mobility::co_relative_mobility(
                                node.rm_history[ch],
                                world.nodes[ch].rm_history[m], params.window)
                                .value;
      for (const auto& other : world.nodes) {
        if (other.id == m || other.id == ch) continue;
        if (other.ring != node.ring) continue;
        if (other.member_of >= 0) continue;  // was ineligible at join time
        if (mobility::distance(node.position, other.position) > world.cr_range_m)
          continue;
        const double cand = mobility::co_relative_mobility(
                                node.rm_history[other.id],
                                other.rm_history[m], params.window)
                                .value;
        CHECK(chosen >= cand - 1e-12);
      }
    }
  }
}

TEST_CASE("upload_round routes a chain of cluster heads to the BS") {
  MobilityParams params;
  params.max_rings = 3;
  params.cell_radius_m = 300.0;
  params.window = 4;

  std::vector<NodeState> nodes(3);
  nodes[0].id = 0;
  nodes[0].position = {250.0, 0.0};  // ring 3
  nodes[1].id = 1;
  nodes[1].position = {150.0, 0.0};  // ring 2
  nodes[2].id = 2;
  nodes[2].position = {50.0, 0.0};  // ring 1
  auto world = manual_world(nodes, params);
  mobility::assign_rings(world);
  REQUIRE(world.nodes[0].ring == 3);
  REQUIRE(world.nodes[1].ring == 2);
  REQUIRE(world.nodes[2].ring == 1);
  set_pair_affinity(world, 0, 1, 0.5);
  set_pair_affinity(world, 0, 2, 0.5);
  set_pair_affinity(world, 1, 2, 0.5);

  mobility::form_clusters(world);  // all singleton CHs (different rings)
  REQUIRE(world.clusters.size() == 3);
  auto ledger = mobility::upload_round(world, 80.0);
  CHECK(ledger.delivered == 3);
  CHECK(ledger.dropped == 0);
  CHECK(ledger.fallback_hops == 0);

  // Rings strictly decrease along inter-ring hops.
  for (const auto& hop : ledger.hops) {
    if (hop.kind == mobility::HopKind::kInterRing) {
      CHECK(hop.to_ring == hop.from_ring - 1);
    }
  }
}

TEST_CASE("upload_round prefers the higher-affinity next hop") {
  MobilityParams params;
  params.max_rings = 3;
  params.cell_radius_m = 600.0;
  params.window = 8;

  // Two ring-1 heads out of each other's beacon range but both reachable
  // from the ring-2 head.
  std::vector<NodeState> nodes(3);
  nodes[0].id = 0;
  nodes[0].position = {250.0, 0.0};  // ring 2
  nodes[1].id = 1;
  nodes[1].position = {100.0, 170.0};  // ring 1 candidate
  nodes[2].id = 2;
  nodes[2].position = {100.0, -170.0};  // ring 1 candidate
  auto world = manual_world(nodes, params);
  mobility::assign_rings(world);
  REQUIRE(world.nodes[0].ring == 2);
  REQUIRE(world.nodes[1].ring == 1);
  REQUIRE(world.nodes[2].ring == 1);
  set_pair_affinity(world, 0, 1, 0.8);
  set_pair_affinity(world, 0, 2, 0.3);
  set_pair_affinity(world, 1, 2, -0.2);
  mobility::form_clusters(world);
  REQUIRE(world.clusters.size() == 3);
  auto ledger = mobility::upload_round(world, 80.0);

  bool found = false;
  for (const auto& hop : ledger.hops) {
    if (hop.from == 0 && hop.kind == mobility::HopKind::kInterRing) {
      CHECK(hop.to == 1);  // the 0.8 candidate
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("isolated node falls back to a single direct BS transmission") {
  MobilityParams params;
  params.window = 4;
  std::vector<NodeState> nodes(1);
  nodes[0].id = 0;
  nodes[0].position = {400.0, 0.0};
  auto world = manual_world(nodes, params);
  mobility::assign_rings(world);
  mobility::form_clusters(world);
  auto ledger = mobility::upload_round(world, 80.0);
  CHECK(ledger.delivered == 1);
  CHECK(ledger.fallback_hops == 1);
  CHECK(ledger.per_node.at(0).packets == 1);
}

TEST_CASE("energy_efficiency substitutes directly into Eq 2.1") {
  mobility::EnergyLedger ledger;
  ledger.tti_s = 1e-3;
  ledger.per_node[0] = {80.0, 1, 1e-6, 0.0};
  CHECK(mobility::energy_efficiency(ledger) == doctest::Approx(8.0e10));

  mobility::EnergyLedger empty;
  CHECK(mobility::energy_efficiency(empty) == 0.0);

  // Doubling every d_N doubles eta.
  mobility::EnergyLedger more = ledger;
  more.per_node[1] = {160.0, 2, 3e-6, 1e-7};
  double base = mobility::energy_efficiency(more);
  for (auto& [id, entry] : more.per_node) entry.bits_uploaded *= 2.0;
  CHECK(mobility::energy_efficiency(more) == doctest::Approx(2.0 * base));
}

TEST_CASE("energy ledger conserves node energy exactly") {
  MobilityParams params;
  for (std::uint64_t seed = 3; seed <= 6; ++seed) {
    auto result = mobility::simulate(params, 30, 80.0, seed);
    // Rebuild the world the same way to compare initial vs final energy.
    auto world = mobility::make_world(params, 30, seed);
    for (int round = 0; round < params.rounds; ++round) {
      mobility::advance_kinematics(world, seed + round, params.window);
      mobility::assign_rings(world);
      mobility::form_clusters(world);
      mobility::upload_round(world, 80.0);
    }
    for (const auto& node : world.nodes) {
      const auto it = world.ledger.per_node.find(node.id);
      const double spent =
          it == world.ledger.per_node.end() ? 0.0 : it->second.joules();
      // The ledger is the single source of truth for energy: the node's
      // remaining budget must be bit-identical to initial minus logged.
      CHECK(node.energy_j == params.initial_energy_j - spent);
      CHECK(node.energy_j <= params.initial_energy_j);
    }
  }
}

TEST_CASE("scaling all affinities by a positive constant keeps memberships") {
  // Pearson is scale-invariant, so the argmax join must not move.
  MobilityParams params;
  auto world = mobility::make_world(params, 25, 13);
  mobility::advance_kinematics(world, 13, params.window);
  mobility::assign_rings(world);
  mobility::form_clusters(world);
  const auto memberships = world.clusters;

  for (auto& node : world.nodes)
    for (auto& series : node.rm_history)
      for (auto& v : series) v *= 3.5;
  mobility::form_clusters(world);
  CHECK(world.clusters == memberships);
}

TEST_CASE("simulate is deterministic and direct scheme delivers per round") {
  MobilityParams params;
  auto a = mobility::simulate(params, 20, 80.0, 42);
  auto b = mobility::simulate(params, 20, 80.0, 42);
  CHECK(a.eta == b.eta);
  CHECK(a.delivered == b.delivered);

  auto direct =
      mobility::simulate(params, 20, 80.0, 42, mobility::Scheme::kDirectToBs);
  CHECK(direct.delivered == 20 * params.rounds);
}

TEST_SUITE_END();
