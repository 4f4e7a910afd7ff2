#include "motrec/association.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace motrec {

namespace {

// Shortest-augmenting-path assignment with dual potentials. Requires
// rows <= cols; returns for each row its matched column. Minimises the
// total cost over all complete row matchings.
std::vector<int> assign_min_cost(const Eigen::MatrixXd& a) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(m + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= m; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(m, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

CostMatrix build_cost_matrix(const std::vector<OrientedBox3>& detections,
                             const std::vector<OrientedBox3>& tracks) {
  CostMatrix c;
  c.costs.resize(static_cast<int>(detections.size()),
                 static_cast<int>(tracks.size()));
  for (int i = 0; i < c.costs.rows(); ++i)
    for (int j = 0; j < c.costs.cols(); ++j)
      c.costs(i, j) = 1.0 - giou3d(detections[i], tracks[j]);
  c.row_ids.resize(detections.size());
  c.col_ids.resize(tracks.size());
  for (size_t i = 0; i < detections.size(); ++i)
    c.row_ids[i] = static_cast<int>(i);
  for (size_t j = 0; j < tracks.size(); ++j) c.col_ids[j] = static_cast<int>(j);
  return c;
}

CostMatrix build_cost_matrix(const std::vector<OrientedBox3>& detections,
                             const std::vector<std::string>& det_classes,
                             const std::vector<OrientedBox3>& tracks,
                             const std::vector<std::string>& track_classes) {
  if (detections.size() != det_classes.size() ||
      tracks.size() != track_classes.size())
    throw std::invalid_argument("build_cost_matrix: class list size mismatch");
  CostMatrix c = build_cost_matrix(detections, tracks);
  for (int i = 0; i < c.costs.rows(); ++i)
    for (int j = 0; j < c.costs.cols(); ++j)
      if (det_classes[i] != track_classes[j]) c.costs(i, j) = kForbiddenCost;
  return c;
}

Assignment solve(const CostMatrix& c, double gate, bool pre_mask_gate) {
  const int m = static_cast<int>(c.costs.rows());
  const int n = static_cast<int>(c.costs.cols());
  if (static_cast<int>(c.row_ids.size()) != m ||
      static_cast<int>(c.col_ids.size()) != n)
    throw std::invalid_argument("solve: id list does not match matrix shape");

  Assignment out;
  if (m == 0 || n == 0) {
    out.unmatched_detections = c.row_ids;
    out.unmatched_tracks = c.col_ids;
    return out;
  }

  Eigen::MatrixXd work = c.costs;
  if (pre_mask_gate) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        if (work(i, j) > gate) work(i, j) = kForbiddenCost;
  }

  // The solver wants rows <= cols; transpose when detections outnumber
  // tracks and swap the pairing back afterwards.
  std::vector<int> det_to_trk(m, -1);
  if (m <= n) {
    det_to_trk = assign_min_cost(work);
  } else {
    const std::vector<int> trk_to_det = assign_min_cost(work.transpose());
    for (int j = 0; j < n; ++j)
      if (trk_to_det[j] >= 0) det_to_trk[trk_to_det[j]] = j;
  }

  std::vector<char> track_matched(n, 0);
  for (int i = 0; i < m; ++i) {
    const int j = det_to_trk[i];
    if (j >= 0 && c.costs(i, j) <= gate) {
      out.matches.emplace_back(c.row_ids[i], c.col_ids[j]);
      track_matched[j] = 1;
    } else {
      out.unmatched_detections.push_back(c.row_ids[i]);
    }
  }
  for (int j = 0; j < n; ++j)
    if (!track_matched[j]) out.unmatched_tracks.push_back(c.col_ids[j]);
  return out;
}

}  // namespace motrec
