#include "aggrekit/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aggrekit/rng.hpp"

namespace aggrekit::mobility {

double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

void ClusterWorld::debit(int node_id, double joules, bool control) {
  auto& entry = ledger.per_node[node_id];
  if (control) {
    entry.control_joules += joules;
  } else {
    entry.data_joules += joules;
  }
  nodes[static_cast<std::size_t>(node_id)].energy_j =
      params.initial_energy_j - entry.joules();
}

NodeState step_kinematics(NodeState node, double accel, double dt, double theta) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_kinematics: dt must be > 0");
  node.speed += accel * dt;
  node.heading = theta;
  const double vx = node.speed * std::cos(theta);
  node.position.x += node.speed * std::cos(theta) * dt;
  node.position.y += node.speed * std::sin(theta) * dt;
  node.velocity_history.push_back(vx);
  return node;
}

double normalized_distance(const NodeState& a, const NodeState& b, double cr) {
  if (!(cr > 0.0)) throw std::invalid_argument("normalized_distance: cr must be > 0");
  return distance(a.position, b.position) / cr;
}

double relative_mobility(double d_norm, double v_bar,
                         std::pair<double, double> weights) {
  if (weights.first < 0.0 || weights.second < 0.0) {
    throw std::invalid_argument("relative_mobility: weights must be nonnegative");
  }
  return weights.first * d_norm + weights.second * v_bar;
}

CorrelationResult co_relative_mobility(const std::vector<double>& rm_x,
                                       const std::vector<double>& rm_y,
                                       int window) {
  if (window < 2) throw std::invalid_argument("co_relative_mobility: window < 2");
  if (rm_x.size() < static_cast<std::size_t>(window) ||
      rm_y.size() < static_cast<std::size_t>(window)) {
    throw std::invalid_argument("co_relative_mobility: series shorter than window");
  }
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t x0 = rm_x.size() - w;
  const std::size_t y0 = rm_y.size() - w;

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    mx += rm_x[x0 + i];
    my += rm_y[y0 + i];
  }
  mx /= static_cast<double>(w);
  my /= static_cast<double>(w);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    const double dx = rm_x[x0 + i] - mx;
    const double dy = rm_y[y0 + i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    return {0.0, true};
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), false};
}

void assign_rings(ClusterWorld& world) {
  if (!(world.cell_radius_m > 0.0) || world.params.max_rings < 1) {
    throw std::invalid_argument("assign_rings: bad cell radius or ring count");
  }
  const int max_rings = world.params.max_rings;
  for (auto& node : world.nodes) {
    const double d = distance(node.position, world.bs_position);
    if (d > world.cell_radius_m) ++world.outside_cell_warnings;
    const int ring = static_cast<int>(
        std::ceil(max_rings * d / world.cell_radius_m));
    node.ring = std::clamp(ring, 1, max_rings);
  }
}

namespace {

// Correlation between two nodes' relative-mobility series, by id.
CorrelationResult pair_cr(const ClusterWorld& world, int x, int y) {
  const auto& nx = world.nodes[static_cast<std::size_t>(x)];
  const auto& ny = world.nodes[static_cast<std::size_t>(y)];
  return co_relative_mobility(nx.rm_history[static_cast<std::size_t>(y)],
                              ny.rm_history[static_cast<std::size_t>(x)],
                              world.params.window);
}

double node_distance(const ClusterWorld& world, int x, int y) {
  return distance(world.nodes[static_cast<std::size_t>(x)].position,
                  world.nodes[static_cast<std::size_t>(y)].position);
}

}  // namespace

void form_clusters(ClusterWorld& world) {
  world.clusters.clear();
  for (auto& node : world.nodes) {
    node.member_of = -1;
    node.is_ch = false;
  }

  // One advertisement broadcast per participating node.
  for (const auto& node : world.nodes) {
    const double cost =
        world.params.radio.broadcast_cost(world.params.control_packet_bits);
    if (node.energy_j >= cost) world.debit(node.id, cost, /*control=*/true);
  }

  for (auto& node : world.nodes) {
    if (node.is_ch) continue;  // already committed as a cluster head

    int best = -1;
    double best_cr = 0.0;
    for (const auto& adv : world.nodes) {
      if (adv.id == node.id) continue;
      if (adv.ring != node.ring) continue;  // same-ring constraint
      if (adv.member_of >= 0) continue;     // joined nodes decline CH role
      if (node_distance(world, node.id, adv.id) > world.cr_range_m) continue;
      const double cr = pair_cr(world, node.id, adv.id).value;
      if (best < 0 || cr > best_cr) {
        best = adv.id;  // ties keep the lower id (ascending scan)
        best_cr = cr;
      }
    }

    if (best < 0) {
      node.is_ch = true;
      world.clusters.emplace(node.id, std::vector<int>{});
    } else {
      node.member_of = best;
      auto& head = world.nodes[static_cast<std::size_t>(best)];
      head.is_ch = true;
      world.clusters[best].push_back(node.id);
    }
  }
}

EnergyLedger upload_round(ClusterWorld& world, double payload_bits) {
  world.ledger.tti_s = world.params.tti_s;
  auto& ledger = world.ledger;

  // Packets currently held by each CH (own data plus anything relayed in).
  std::map<int, long> bundle;

  // Members upload to their CH first.
  for (auto& node : world.nodes) {
    if (node.member_of < 0) continue;
    const double d = node_distance(world, node.id, node.member_of);
    const double cost = world.params.radio.tx_cost(payload_bits, d);
    if (node.energy_j < cost) {
      ++ledger.dropped;
      continue;
    }
    world.debit(node.id, cost, /*control=*/false);
    auto& entry = ledger.per_node[node.id];
    entry.bits_uploaded += payload_bits;
    entry.packets += 1;
    bundle[node.member_of] += 1;
    ledger.hops.push_back({node.id, node.member_of, node.ring,
                           world.nodes[static_cast<std::size_t>(node.member_of)].ring,
                           HopKind::kIntraCluster, 1});
  }

  // Every CH carries its own packet too.
  std::vector<int> heads;
  for (const auto& [ch, members] : world.clusters) {
    bundle[ch] += 1;
    heads.push_back(ch);
  }
  // Outer rings forward first so bundles cascade inward within one round.
  std::sort(heads.begin(), heads.end(), [&](int a, int b) {
    const int ra = world.nodes[static_cast<std::size_t>(a)].ring;
    const int rb = world.nodes[static_cast<std::size_t>(b)].ring;
    return ra != rb ? ra > rb : a < b;
  });

  for (int ch : heads) {
    auto& head = world.nodes[static_cast<std::size_t>(ch)];
    const long packets = bundle[ch];
    if (packets <= 0) continue;
    const double bits = payload_bits * static_cast<double>(packets);

    // Advertisement to discover the next hop.
    const double adv_cost =
        world.params.radio.broadcast_cost(world.params.control_packet_bits);
    if (head.energy_j >= adv_cost) world.debit(ch, adv_cost, /*control=*/true);

    int next = -1;
    double next_cr = 0.0;
    if (head.ring > 1) {
      for (int cand : heads) {
        const auto& cn = world.nodes[static_cast<std::size_t>(cand)];
        if (cn.ring != head.ring - 1) continue;
        if (node_distance(world, ch, cand) > world.cr_range_m) continue;
        const double cr = pair_cr(world, ch, cand).value;
        if (next < 0 || cr > next_cr) {
          next = cand;
          next_cr = cr;
        }
      }
    }

    double hop_dist = 0.0;
    HopRecord hop;
    hop.from = ch;
    hop.from_ring = head.ring;
    hop.packets_carried = packets;
    if (head.ring == 1) {
      hop_dist = distance(head.position, world.bs_position);
      hop.to = -1;
      hop.to_ring = 0;
      hop.kind = HopKind::kToBs;
    } else if (next >= 0) {
      hop_dist = node_distance(world, ch, next);
      hop.to = next;
      hop.to_ring = head.ring - 1;
      hop.kind = HopKind::kInterRing;
    } else {
      hop_dist = distance(head.position, world.bs_position);
      hop.to = -1;
      hop.to_ring = 0;
      hop.kind = HopKind::kFallbackToBs;
    }

    const double cost = world.params.radio.tx_cost(bits, hop_dist);
    if (head.energy_j < cost) {
      ledger.dropped += packets;
      continue;
    }
    world.debit(ch, cost, /*control=*/false);
    auto& entry = ledger.per_node[ch];
    entry.bits_uploaded += bits;
    entry.packets += 1;
    ledger.hops.push_back(hop);

    if (hop.to < 0) {
      ledger.delivered += packets;
      if (hop.kind == HopKind::kFallbackToBs) ++ledger.fallback_hops;
    } else {
      bundle[next] += packets;
    }
    bundle[ch] = 0;
  }

  return ledger;
}

double energy_efficiency(const EnergyLedger& ledger) {
  double eta = 0.0;
  for (const auto& [id, entry] : ledger.per_node) {
    if (entry.packets < 1) continue;  // zero-packet node skipped
    const double e_n = entry.joules() / static_cast<double>(entry.packets);
    if (!(e_n > 0.0)) continue;
    eta += entry.bits_uploaded /
           (e_n * static_cast<double>(entry.packets) * ledger.tti_s);
  }
  return eta;
}

ClusterWorld make_world(const MobilityParams& params, int node_count,
                        std::uint64_t seed) {
  ClusterWorld world;
  world.params = params;
  world.bs_position = {0.0, 0.0};
  world.cell_radius_m = params.cell_radius_m;
  world.cr_range_m = params.beacon_range_m;
  world.weights = {params.alpha, params.beta};
  world.ledger.tti_s = params.tti_s;

  RandomStream placement(seed, StreamPurpose::kPlacement);
  world.nodes.resize(static_cast<std::size_t>(node_count));
  for (int i = 0; i < node_count; ++i) {
    auto& node = world.nodes[static_cast<std::size_t>(i)];
    node.id = i;
    const double r = params.cell_radius_m * std::sqrt(placement.u01());
    const double phi = placement.uniform(0.0, 2.0 * M_PI);
    node.position = {r * std::cos(phi), r * std::sin(phi)};
    node.speed = placement.uniform(0.0, params.init_speed_max);
    node.heading = placement.uniform(0.0, 2.0 * M_PI);
    node.energy_j = params.initial_energy_j;
    node.rm_history.assign(static_cast<std::size_t>(node_count), {});
  }
  return world;
}

void advance_kinematics(ClusterWorld& world, std::uint64_t seed, int steps) {
  RandomStream motion(seed, StreamPurpose::kKinematics);
  RandomStream ranging(seed, StreamPurpose::kNoise);
  const auto n = world.nodes.size();
  for (int step = 0; step < steps; ++step) {
    for (auto& node : world.nodes) {
      const double accel =
          motion.uniform(-world.params.accel_max, world.params.accel_max);
      const double theta =
          node.heading + motion.uniform(-world.params.heading_drift_max,
                                        world.params.heading_drift_max);
      node = step_kinematics(std::move(node), accel, world.params.dt_s, theta);
    }
    // Materialize this step's pairwise relative mobility (Eq 2.8): the
    // distance term is pairwise, the speed term is the node's own |V_x|.
    for (std::size_t x = 0; x < n; ++x) {
      auto& nx = world.nodes[x];
      const double v_bar = std::abs(nx.velocity_history.back());
      for (std::size_t y = 0; y < n; ++y) {
        if (x == y) continue;
        double d = distance(nx.position, world.nodes[y].position);
        if (world.params.jitter_std_m > 0.0) {
          d = std::abs(d + ranging.gaussian(0.0, world.params.jitter_std_m));
        }
        const double rm =
            relative_mobility(d / world.cr_range_m, v_bar, world.weights);
        nx.rm_history[y].push_back(rm);
      }
    }
  }
}

SimulationResult simulate(const MobilityParams& params, int node_count,
                          double payload_bits, std::uint64_t seed,
                          Scheme scheme) {
  ClusterWorld world = make_world(params, node_count, seed);

  for (int round = 0; round < params.rounds; ++round) {
    advance_kinematics(world, seed + static_cast<std::uint64_t>(round),
                       params.window);
    if (scheme == Scheme::kMultiHop) {
      assign_rings(world);
      form_clusters(world);
      upload_round(world, payload_bits);
    } else {
      // Non-cooperative baseline: every node reaches the BS on its own.
      world.ledger.tti_s = params.tti_s;
      for (auto& node : world.nodes) {
        const double d = distance(node.position, world.bs_position);
        const double cost = params.radio.tx_cost(payload_bits, d);
        if (node.energy_j < cost) {
          ++world.ledger.dropped;
          continue;
        }
        world.debit(node.id, cost, /*control=*/false);
        auto& entry = world.ledger.per_node[node.id];
        entry.bits_uploaded += payload_bits;
        entry.packets += 1;
        ++world.ledger.delivered;
      }
    }
  }

  SimulationResult result;
  result.ledger = world.ledger;
  result.eta = energy_efficiency(world.ledger);
  result.delivered = world.ledger.delivered;
  result.dropped = world.ledger.dropped;
  result.outside_cell_warnings = world.outside_cell_warnings;
  return result;
}

}  // namespace aggrekit::mobility
