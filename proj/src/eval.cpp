#include "motrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "motrec/association.hpp"

namespace motrec {

namespace {

[[noreturn]] void fail_at(const std::string& path, int line,
                          const std::string& what) {
  throw std::runtime_error(path + " line " + std::to_string(line) + ": " +
                           what);
}

double ap_all_points(const std::vector<char>& is_tp, int n_gt) {
  if (n_gt == 0) return 0.0;
  const int n = static_cast<int>(is_tp.size());
  std::vector<double> recall(n), precision(n);
  int tp = 0;
  for (int i = 0; i < n; ++i) {
    tp += is_tp[i];
    recall[i] = static_cast<double>(tp) / n_gt;
    precision[i] = static_cast<double>(tp) / (i + 1);
  }
  double ap = 0.0, best = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    best = std::max(best, precision[i]);
    const double left = (i == 0) ? 0.0 : recall[i - 1];
    ap += (recall[i] - left) * best;
  }
  return ap;
}

}  // namespace

MapReport eval_map(const std::vector<ScoredBox>& detections,
                   const std::vector<GtObject>& gt, double iou_threshold) {
  struct Slot {
    const GtObject* object;
    bool used = false;
  };
  // class -> frame -> ground truth boxes of that class in that frame
  std::map<std::string, std::map<int, std::vector<Slot>>> gt_index;
  std::map<std::string, int> gt_count;
  for (const GtObject& g : gt) {
    gt_index[g.class_label][g.frame_id].push_back({&g});
    gt_count[g.class_label] += 1;
  }

  std::map<std::string, std::vector<const ScoredBox*>> dets_by_class;
  for (const ScoredBox& d : detections)
    dets_by_class[d.class_label].push_back(&d);

  MapReport report;
  double ap_sum = 0.0;
  for (auto& [label, count] : gt_count) {
    auto& dets = dets_by_class[label];
    std::stable_sort(dets.begin(), dets.end(),
                     [](const ScoredBox* a, const ScoredBox* b) {
                       return a->score > b->score;
                     });
    std::vector<char> is_tp;
    is_tp.reserve(dets.size());
    auto& frames = gt_index[label];
    for (const ScoredBox* d : dets) {
      Slot* best = nullptr;
      double best_iou = iou_threshold;
      const auto it = frames.find(d->frame_id);
      if (it != frames.end()) {
        for (Slot& slot : it->second) {
          if (slot.used) continue;
          const double iou = iou3d(d->box, slot.object->box);
          if (iou >= best_iou) {
            best_iou = iou;
            best = &slot;
          }
        }
      }
      if (best != nullptr) best->used = true;
      is_tp.push_back(best != nullptr);
    }
    const double ap = ap_all_points(is_tp, count);
    report.per_class_ap[label] = ap;
    ap_sum += ap;
  }
  report.map = gt_count.empty() ? 0.0 : ap_sum / gt_count.size();
  return report;
}

MotReport eval_mot(const std::vector<TrackedBox>& tracks,
                   const std::vector<GtObject>& gt, double iou_threshold) {
  if (gt.empty()) throw std::invalid_argument("eval_mot: empty ground truth");

  std::map<int, std::vector<int>> gt_by_frame, trk_by_frame;
  for (std::size_t i = 0; i < gt.size(); ++i)
    gt_by_frame[gt[i].frame_id].push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < tracks.size(); ++i)
    trk_by_frame[tracks[i].frame_id].push_back(static_cast<int>(i));
  for (const auto& [frame, indices] : trk_by_frame) {
    std::set<int> ids;
    for (int i : indices)
      if (!ids.insert(tracks[i].track_id).second)
        throw std::invalid_argument("eval_mot: duplicate track id " +
                                    std::to_string(tracks[i].track_id) +
                                    " in frame " + std::to_string(frame));
  }

  std::set<int> frames;
  for (const auto& [frame, _] : gt_by_frame) frames.insert(frame);
  for (const auto& [frame, _] : trk_by_frame) frames.insert(frame);

  MotReport report;
  report.gt_total = static_cast<int>(gt.size());
  double matched_iou_sum = 0.0;
  std::map<int, int> last_matched_id;  // GT instance -> track id

  for (int frame : frames) {
    const auto& g_rows = gt_by_frame[frame];
    const auto& t_cols = trk_by_frame[frame];

    CostMatrix c;
    c.costs.resize(g_rows.size(), t_cols.size());
    c.row_ids = g_rows;
    c.col_ids = t_cols;
    for (std::size_t i = 0; i < g_rows.size(); ++i)
      for (std::size_t j = 0; j < t_cols.size(); ++j)
        c.costs(i, j) =
            1.0 - iou3d(gt[g_rows[i]].box, tracks[t_cols[j]].box);

    const Assignment a = solve(c, 1.0 - iou_threshold);

    MotReport::FrameTally tally;
    tally.frame_id = frame;
    tally.tp = static_cast<int>(a.matches.size());
    tally.fp = static_cast<int>(a.unmatched_tracks.size());
    tally.fn = static_cast<int>(a.unmatched_detections.size());
    for (const auto& [gi, ti] : a.matches) {
      matched_iou_sum += iou3d(gt[gi].box, tracks[ti].box);
      const int instance = gt[gi].instance_id;
      const int id = tracks[ti].track_id;
      const auto it = last_matched_id.find(instance);
      if (it != last_matched_id.end() && it->second != id) tally.ids += 1;
      last_matched_id[instance] = id;
    }
    report.tp_total += tally.tp;
    report.fp_total += tally.fp;
    report.fn_total += tally.fn;
    report.ids += tally.ids;
    report.frames.push_back(tally);
  }

  report.mota = 1.0 - static_cast<double>(report.fp_total + report.fn_total +
                                          report.ids) /
                          report.gt_total;
  report.motp =
      report.tp_total > 0 ? matched_iou_sum / report.tp_total : 0.0;
  return report;
}

DepthMetrics eval_depth(const DepthImage& pred, const DepthImage& gt,
                        const std::vector<std::uint8_t>& mask,
                        EmptyPredPolicy policy) {
  const std::size_t pixels =
      static_cast<std::size_t>(gt.width) * gt.height;
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("eval_depth: image dimensions differ");
  if (mask.size() != pixels)
    throw std::invalid_argument("eval_depth: mask size mismatch");

  std::size_t masked = 0, effective = 0, in_delta[3] = {0, 0, 0};
  double se = 0.0, log_se = 0.0, abs_rel = 0.0, sq_rel = 0.0;
  for (std::size_t i = 0; i < pixels; ++i) {
    if (!mask[i]) continue;
    ++masked;
    const double g = gt.values[i];
    if (!(g > 0.0))
      throw std::invalid_argument(
          "eval_depth: nonpositive ground truth inside the mask");
    const double p = pred.values[i];
    if (!(p > 0.0)) continue;
    ++effective;
    const double diff = p - g;
    se += diff * diff;
    const double log_diff = std::log(p) - std::log(g);
    log_se += log_diff * log_diff;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    const double ratio = std::max(p / g, g / p);
    double bound = 1.25;
    for (int k = 0; k < 3; ++k, bound *= 1.25)
      in_delta[k] += ratio < bound;
  }
  if (masked == 0) throw std::invalid_argument("eval_depth: empty mask");
  if (effective == 0)
    throw std::invalid_argument(
        "eval_depth: no masked pixel carries a prediction");

  const double n = static_cast<double>(effective);
  const double delta_n = static_cast<double>(
      policy == EmptyPredPolicy::kCountAsMiss ? masked : effective);
  DepthMetrics m;
  m.rmse = std::sqrt(se / n);
  m.log_rmse = std::sqrt(log_se / n);
  m.abs_rel = abs_rel / n;
  m.sq_rel = sq_rel / n;
  m.delta1 = in_delta[0] / delta_n;
  m.delta2 = in_delta[1] / delta_n;
  m.delta3 = in_delta[2] / delta_n;
  return m;
}

std::vector<GtObject> read_gt_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<GtObject> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_at(path.string(), line_no, e.what());
    }
    GtObject g;
    try {
      g.frame_id = j.at("frame").get<int>();
      g.instance_id = j.at("instance").get<int>();
      g.class_label = j.at("class").get<std::string>();
      const auto center = j.at("center").get<std::vector<double>>();
      const auto rotation = j.at("rotation").get<std::vector<double>>();
      const auto scale = j.at("scale").get<std::vector<double>>();
      if (center.size() != 3 || rotation.size() != 9 || scale.size() != 3)
        fail_at(path.string(), line_no, "bad center/rotation/scale length");
      g.box.pose.translation = {center[0], center[1], center[2]};
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          g.box.pose.rotation(r, c) = rotation[3 * r + c];
      g.box.scale = {scale[0], scale[1], scale[2]};
      g.box.frame = Frame::kWorld;
    } catch (const nlohmann::json::exception& e) {
      fail_at(path.string(), line_no, e.what());
    }
    if (!is_orthonormal(g.box.pose.rotation, 1e-6))
      fail_at(path.string(), line_no, "rotation is not orthonormal");
    if (!(g.box.scale.sx > 0.0 && g.box.scale.sy > 0.0 &&
          g.box.scale.sz > 0.0))
      fail_at(path.string(), line_no, "scale must be positive");
    out.push_back(std::move(g));
  }
  return out;
}

void write_gt_jsonl(const std::filesystem::path& path,
                    const std::vector<GtObject>& objects) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (const GtObject& g : objects) {
    nlohmann::ordered_json j;
    j["frame"] = g.frame_id;
    j["instance"] = g.instance_id;
    j["class"] = g.class_label;
    j["center"] = {g.box.pose.translation.x(), g.box.pose.translation.y(),
                   g.box.pose.translation.z()};
    std::vector<double> rotation(9);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rotation[3 * r + c] = g.box.pose.rotation(r, c);
    j["rotation"] = rotation;
    j["scale"] = {g.box.scale.sx, g.box.scale.sy, g.box.scale.sz};
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_metrics_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "metric,value\n";
  for (const auto& [name, value] : rows)
    out << name << "," << nlohmann::json(value).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace motrec
