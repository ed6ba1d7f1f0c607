#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace aggrekit::mobility {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

// First-order radio energy model: transmitting `bits` over distance d costs
// bits * (E_elec + eps_amp * d^2). Beacon/advertisement broadcasts are
// charged electronics-only (they are not amplified toward a receiver).
struct RadioModel {
  double e_elec_j_per_bit = 50e-9;
  double eps_amp_j_per_bit_m2 = 100e-12;

  double tx_cost(double bits, double dist_m) const {
    return bits * (e_elec_j_per_bit + eps_amp_j_per_bit_m2 * dist_m * dist_m);
  }
  double broadcast_cost(double bits) const { return bits * e_elec_j_per_bit; }
};

// Table 2.1 values plus the knobs the chapter leaves implicit.
struct MobilityParams {
  double alpha = 0.5;
  double beta = 0.5;
  double beacon_range_m = 300.0;  // CR
  double tti_s = 1e-3;
  double control_packet_bits = 200.0;
  double initial_energy_j = 0.5;
  int max_rings = 5;
  int rounds = 2;

  double cell_radius_m = 500.0;
  int window = 16;          // co-relative mobility correlation window
  double dt_s = 1.0;
  double accel_max = 1.0;   // |a| drawn uniformly within this bound
  double init_speed_max = 2.0;
  double heading_drift_max = 0.5;  // radians per step
  double jitter_std_m = 0.0;       // ranging error stand-in
  RadioModel radio;
};

struct NodeState {
  int id = 0;
  Vec2 position;
  double speed = 0.0;    // v(t)
  double heading = 0.0;  // velocity angle theta
  std::vector<double> velocity_history;  // V_x = v*cos(theta) per step
  int ring = 0;
  double energy_j = 0.0;
  // rm_history[other] is this node's relative-mobility series w.r.t. that
  // neighbor; indexed by node id.
  std::vector<std::vector<double>> rm_history;

  int member_of = -1;  // CH id once joined
  bool is_ch = false;
};

struct NodeLedger {
  double bits_uploaded = 0.0;  // d_N
  long packets = 0;            // r_N, radio transmissions carrying data
  double data_joules = 0.0;
  double control_joules = 0.0;

  double joules() const { return data_joules + control_joules; }
};

enum class HopKind { kIntraCluster, kInterRing, kToBs, kFallbackToBs };

struct HopRecord {
  int from = -1;
  int to = -1;  // -1 = base station
  int from_ring = 0;
  int to_ring = 0;  // 0 = base station
  HopKind kind = HopKind::kIntraCluster;
  long packets_carried = 0;
};

struct EnergyLedger {
  std::map<int, NodeLedger> per_node;
  double tti_s = 1e-3;
  long delivered = 0;
  long dropped = 0;
  long fallback_hops = 0;
  std::vector<HopRecord> hops;
};

struct ClusterWorld {
  std::vector<NodeState> nodes;
  Vec2 bs_position;
  double cell_radius_m = 500.0;
  double cr_range_m = 300.0;
  std::pair<double, double> weights{0.5, 0.5};  // (alpha, beta)
  std::map<int, std::vector<int>> clusters;     // CH id -> member ids
  MobilityParams params;

  EnergyLedger ledger;
  long outside_cell_warnings = 0;

  // energy_j only ever decreases; it is derived from the ledger so that
  // initial - final equals the logged joules exactly.
  void debit(int node_id, double joules, bool control);
};

struct CorrelationResult {
  double value = 0.0;
  bool degenerate = false;
};

// --- Chapter 2 primitives ------------------------------------------------

// Integrates speed forward (v += a*dt), sets the heading, moves the node
// and appends the horizontal velocity component V_x = v*cos(theta) to the
// history.
NodeState step_kinematics(NodeState node, double accel, double dt, double theta);

double normalized_distance(const NodeState& a, const NodeState& b, double cr);

double relative_mobility(double d_norm, double v_bar,
                         std::pair<double, double> weights);

// Pearson correlation of the two series over the trailing window. A
// zero-variance series yields value 0 with the degenerate flag set.
CorrelationResult co_relative_mobility(const std::vector<double>& rm_x,
                                       const std::vector<double>& rm_y,
                                       int window);

// ring(node) = ceil(max_rings * dist/R) clamped to [1, max_rings]; nodes
// beyond R are clamped outward and counted in outside_cell_warnings.
void assign_rings(ClusterWorld& world);

// Fig 2.2 flow: every node advertises; nodes join (in ascending id order)
// the in-range same-ring advertiser with the highest co-relative mobility.
// Advertisers that accepted a joiner become CHs; nodes with no eligible
// advertiser become singleton CHs. Joined nodes decline the CH role.
void form_clusters(ClusterWorld& world);

// Fig 2.3 flow: members upload to their CH, CHs bundle and forward to the
// highest-cr CH in the next ring inward, ring-1 CHs reach the BS. A CH with
// no candidate falls back to a direct BS hop (flagged). Returns the
// accumulated ledger.
EnergyLedger upload_round(ClusterWorld& world, double payload_bits);

// eta = sum_N d_N / (E_N * r_N * TTI) with E_N the node's mean joules per
// transmitted packet. Nodes with zero packets are skipped.
double energy_efficiency(const EnergyLedger& ledger);

// --- Simulation driver ----------------------------------------------------

enum class Scheme { kMultiHop, kDirectToBs };

struct SimulationResult {
  EnergyLedger ledger;
  double eta = 0.0;
  long delivered = 0;
  long dropped = 0;
  long outside_cell_warnings = 0;
};

ClusterWorld make_world(const MobilityParams& params, int node_count,
                        std::uint64_t seed);

// Advances kinematics for params.window steps and materializes pairwise
// relative-mobility histories.
void advance_kinematics(ClusterWorld& world, std::uint64_t seed, int steps);

SimulationResult simulate(const MobilityParams& params, int node_count,
                          double payload_bits, std::uint64_t seed,
                          Scheme scheme = Scheme::kMultiHop);

}  // namespace aggrekit::mobility
