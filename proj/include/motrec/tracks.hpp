#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "motrec/association.hpp"
#include "motrec/detection.hpp"
#include "motrec/eval.hpp"
#include "motrec/imm.hpp"

namespace motrec {

enum class TrackStatus { kTentative, kConfirmed, kTerminated };

/// One mapped object. The filter carries center and velocity; orientation,
/// scale and the latent shape code are fused outside it (latest-wins,
/// running mean and running mean respectively).
struct Track {
  int id = 0;
  std::string class_label;
  ImmState state;
  TrackStatus status = TrackStatus::kTentative;
  int hits = 0;    // consecutive observations
  int misses = 0;  // consecutive unobserved steps
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();  // world
  Scale scale;
  int scale_count = 0;
  Eigen::VectorXd code_mean;  // empty until the first code arrives
  int code_count = 0;
  int born_frame = -1;
  int last_observed_frame = -1;
  int not_visible_streak = 0;  // consecutive exposed-but-unsupported steps
  bool matched_this_frame = false;  // transient, valid inside one step
  // Motion label as of the last update. Lifecycle decisions use this, not
  // the live mixture: with no measurements the model probabilities drift to
  // the transition matrix's stationary point, which says nothing about the
  // object. An unseen static object must stay static.
  MotionStatus last_motion = MotionStatus::kDynamic;

  Eigen::Vector3d center() const { return state.combined_mean.head<3>(); }
  Eigen::Vector3d velocity() const { return state.combined_mean.tail<3>(); }
  OrientedBox3 world_box() const {
    return OrientedBox3{Pose{orientation, center()}, scale, Frame::kWorld};
  }
};

struct TrackerConfig {
  ImmConfig imm;
  ViewpointBins bins;
  double gate = 0.25;  // association cost gate on 1 - giou3d
  bool pre_mask_gate = false;
  int n_confirm = 3;
  int n_terminate = 3;
  double visibility_iou = 0.5;  // 2D support threshold for prune_invisible
  int stale_after = 10;  // consecutive unsupported steps removing a track
  int image_width = 0;   // 0 derives the bound from intrinsics as 2*cx
  int image_height = 0;  // 0 derives the bound from intrinsics as 2*cy
};

/// Desk-range scenes: tight gate, low measurement noise.
TrackerConfig indoor_config();
/// Road-range scenes: wide gate (1.75), R = 0.25 I, stronger acceleration
/// noise for fast objects.
TrackerConfig outdoor_config();

/// Detection lifted off the image plane into an upright world-frame box.
struct WorldDetection {
  std::string class_label;
  OrientedBox3 box;  // Frame::kWorld, gravity-aligned
  double score = 0.0;
  std::optional<Eigen::VectorXd> shape_code;
};

WorldDetection lift_detection(const Detection& d, const CameraIntrinsics& k,
                              const Pose& t_wc, const ViewpointBins& bins = {});

enum class TrackEventKind {
  kBorn,
  kConfirmed,
  kTerminated,
  kNotVisible,
  kStaleRemoved,
};

struct TrackEvent {
  TrackEventKind kind = TrackEventKind::kBorn;
  int track_id = 0;
};

/// Snapshot of one live track after a step, also the tracks.jsonl row.
struct TrackedObject {
  int frame_id = 0;
  int id = 0;
  std::string class_label;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Scale scale;
  TrackStatus status = TrackStatus::kTentative;
  MotionStatus motion = MotionStatus::kStatic;
  double p_static = 0.0;
};

struct FrameOutput {
  int frame_id = 0;
  std::vector<TrackedObject> objects;  // all live tracks, tentative included
  std::vector<TrackEvent> events;
  int matched = 0;
  int unmatched_detections = 0;
};

/// The whole online map. Terminated tracks stay in the list (ids are never
/// reused) but take no further part in anything.
struct MapState {
  TrackerConfig config;
  std::vector<Track> tracks;
  int next_id = 0;
  int frame_id = -1;  // last processed frame, -1 before the first step
  double last_timestamp = 0.0;
};

/// One online step. In order: lift detections into world boxes, IMM-predict
/// every live track, select the matchable set, associate (class-aware GIoU
/// costs, gated Munkres), merge matched detections, start tentative tracks
/// from unmatched ones, apply miss/termination bookkeeping and the
/// negative-information visibility rule, then snapshot the live map.
/// Throws std::invalid_argument when frame order or timestamps regress.
FrameOutput step(MapState& map, const FrameInput& frame);

/// Indices into map.tracks eligible for association: every non-terminated
/// track, however long unobserved. Tracks flagged not-visible keep
/// participating; only termination removes a candidate.
std::vector<int> select_matchable(const MapState& map);

/// Miss bookkeeping for tracks left unmatched by the current step:
/// tentative tracks terminate on their first miss (confirmation requires
/// consecutive observations), confirmed tracks accrue misses and terminate
/// only while dynamic with misses >= n_terminate. Static tracks never
/// terminate here.
void handle_misses(MapState& map, std::vector<TrackEvent>& events);

/// Negative-information rule: an unmatched live track whose predicted
/// center projects into the image is checked for 2D support; if no
/// detection box reaches visibility_iou overlap with its projected box the
/// step counts as not visible (no penalty by itself -- a detection box
/// covering the spot, the object's own or an occluder's, resets the count).
/// A static track is removed as stale once it has stale_after consecutive
/// such steps AND a same-class track was confirmed after its last
/// observation: the object was seen again somewhere else, so the old
/// instance is a leftover. Without that re-detection the track persists
/// indefinitely, which is what keeps long-occluded objects alive.
void prune_invisible(MapState& map, const FrameInput& frame,
                     std::vector<TrackEvent>& events);

/// Fuses one matched detection: IMM position update, latest-wins
/// orientation, running-mean scale and shape code, hit/miss counters.
/// Throws std::invalid_argument on a class mismatch.
void merge_detection(Track& t, const WorldDetection& d, const ImmConfig& cfg,
                     int frame_id);

/// tracks.jsonl: one object-state row per live track per frame.
void write_tracks_jsonl(const std::string& path,
                        const std::vector<FrameOutput>& outputs);
std::vector<TrackedObject> read_tracks_jsonl(const std::string& path);

/// Rows reduced to eval input; confirmed_only drops tentative rows (the
/// usual choice, so one-frame noise never counts as a reported object).
std::vector<TrackedBox> to_tracked_boxes(const std::vector<TrackedObject>& rows,
                                         bool confirmed_only = true);

}  // namespace motrec
