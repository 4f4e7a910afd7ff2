#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "motrec/geometry.hpp"

namespace motrec {

/// Cost entry assigned to pairs that must never match (different classes).
/// Finite so the solver stays well-defined; larger than any gate.
inline constexpr double kForbiddenCost = 1e9;

struct CostMatrix {
  Eigen::MatrixXd costs;     // detections x tracks
  std::vector<int> row_ids;  // detection indices
  std::vector<int> col_ids;  // track indices
};

struct Assignment {
  std::vector<std::pair<int, int>> matches;  // (detection id, track id)
  std::vector<int> unmatched_detections;
  std::vector<int> unmatched_tracks;
};

/// costs[m][n] = 1 - giou3d(det m, track n), in [0, 2]. Boxes must share a
/// frame (giou3d throws otherwise). Row/col ids default to 0..size-1.
CostMatrix build_cost_matrix(const std::vector<OrientedBox3>& detections,
                             const std::vector<OrientedBox3>& tracks);

/// Class-aware variant: pairs with different labels get kForbiddenCost.
CostMatrix build_cost_matrix(const std::vector<OrientedBox3>& detections,
                             const std::vector<std::string>& det_classes,
                             const std::vector<OrientedBox3>& tracks,
                             const std::vector<std::string>& track_classes);

/// Minimum-total-cost rectangular assignment (Munkres), then gating: any
/// matched pair with cost > gate is demoted to unmatched. With
/// pre_mask_gate the over-gate entries are excluded from the optimisation
/// itself (replaced by kForbiddenCost) instead of being dropped afterwards.
Assignment solve(const CostMatrix& c, double gate,
                 bool pre_mask_gate = false);

}  // namespace motrec
