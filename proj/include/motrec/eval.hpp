#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "motrec/geometry.hpp"
#include "motrec/shape.hpp"

namespace motrec {

/// One annotated object in one frame. instance_id is stable across frames
/// for the same physical object.
struct GtObject {
  int frame_id = 0;
  int instance_id = 0;
  std::string class_label;
  OrientedBox3 box;  // world frame
};

/// Scored detection lifted to a world box, input to eval_map.
struct ScoredBox {
  int frame_id = 0;
  std::string class_label;
  double score = 0.0;
  OrientedBox3 box;  // world frame
};

/// Id-labelled tracker output box for one frame, input to eval_mot.
struct TrackedBox {
  int frame_id = 0;
  int track_id = 0;
  OrientedBox3 box;  // world frame
};

struct MapReport {
  std::map<std::string, double> per_class_ap;
  double map = 0.0;
};

struct MotReport {
  struct FrameTally {
    int frame_id = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    int ids = 0;
  };

  double mota = 0.0;
  double motp = 0.0;  // mean matched IoU, in [0,1]
  int ids = 0;
  int gt_total = 0;
  int tp_total = 0;
  int fp_total = 0;
  int fn_total = 0;
  std::vector<FrameTally> frames;
};

struct DepthMetrics {
  double rmse = 0.0;
  double log_rmse = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double delta1 = 0.0;  // max(p/g, g/p) < 1.25
  double delta2 = 0.0;  // < 1.25^2
  double delta3 = 0.0;  // < 1.25^3
};

/// Average precision at a fixed IoU threshold, all-points interpolation.
/// Detections are ranked by score per class and greedily matched to unused
/// ground truth of the same class and frame at iou3d >= iou_threshold.
/// map averages over the classes present in the ground truth; detections of
/// classes absent from it match nothing.
MapReport eval_map(const std::vector<ScoredBox>& detections,
                   const std::vector<GtObject>& gt,
                   double iou_threshold = 0.5);

/// CLEAR-style tracking metrics. Per frame the GT-track matching minimises
/// total 1 - iou3d under the gate iou >= iou_threshold; MOTA counts FP, FN
/// and id switches against the total GT box count, and an id switch is a
/// change of a GT instance's matched track id between its consecutive
/// matched frames. Duplicate track ids within a frame are an error.
MotReport eval_mot(const std::vector<TrackedBox>& tracks,
                   const std::vector<GtObject>& gt,
                   double iou_threshold = 0.25);

/// What to do with pixels the prediction left empty (0) inside the mask:
/// drop them from every metric, or keep their slot in the delta-accuracy
/// denominators as misses. The error means always skip them because log and
/// ratio terms are undefined at zero depth.
enum class EmptyPredPolicy { kExclude, kCountAsMiss };

/// Depth errors and threshold accuracies over mask & {gt > 0 required,
/// pred > 0 effective}. Throws when shapes differ, the mask is empty, gt is
/// nonpositive on the mask, or no masked pixel has a prediction.
DepthMetrics eval_depth(const DepthImage& pred, const DepthImage& gt,
                        const std::vector<std::uint8_t>& mask,
                        EmptyPredPolicy policy = EmptyPredPolicy::kExclude);

/// JSONL ground truth, one object per line:
/// {"frame":int,"instance":int,"class":str,"center":[3],"rotation":[9],
///  "scale":[3]} with the rotation row-major and orthonormal.
std::vector<GtObject> read_gt_jsonl(const std::filesystem::path& path);
void write_gt_jsonl(const std::filesystem::path& path,
                    const std::vector<GtObject>& objects);

/// CSV with a header and one `name,value` row per metric.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, double>>& rows);

}  // namespace motrec
