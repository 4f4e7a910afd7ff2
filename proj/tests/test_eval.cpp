#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "motrec/eval.hpp"

using namespace motrec;

namespace {

OrientedBox3 box_at(double x, double y = 0, double z = 0, double yaw = 0,
                    double sx = 1, double sy = 1, double sz = 1) {
  OrientedBox3 b;
  b.pose.translation = {x, y, z};
  b.pose.rotation = rot_z(yaw);
  b.scale = {sx, sy, sz};
  b.frame = Frame::kWorld;
  return b;
}

GtObject gt_at(int frame, int instance, const std::string& label, double x,
               double y = 0) {
  return {frame, instance, label, box_at(x, y)};
}

TrackedBox trk_at(int frame, int id, double x, double y = 0) {
  return {frame, id, box_at(x, y)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DepthImage image_of(int w, int h, std::vector<float> v) {
  DepthImage img;
  img.width = w;
  img.height = h;
  img.values = std::move(v);
  return img;
}

}  // namespace

TEST_CASE("eval_map hand cases") {
  std::vector<GtObject> gt = {gt_at(0, 1, "chair", 0), gt_at(0, 2, "chair", 5),
                              gt_at(1, 1, "chair", 0.2)};
  std::vector<ScoredBox> perfect;
  for (const GtObject& g : gt)
    perfect.push_back({g.frame_id, g.class_label, 0.3 + 0.1 * g.instance_id,
                       g.box});
  const MapReport full = eval_map(perfect, gt);
  CHECK(full.map == 1.0);
  CHECK(full.per_class_ap.at("chair") == 1.0);

  CHECK(eval_map({}, gt).map == 0.0);

  // One GT; the perfect detection outranks the disjoint one.
  const std::vector<GtObject> one = {gt_at(0, 1, "chair", 0)};
  const MapReport ranked = eval_map({{0, "chair", 0.9, box_at(0)},
                                     {0, "chair", 0.8, box_at(50)}},
                                    one);
  CHECK(ranked.map == 1.0);

  // Ranked the other way the FP halves the precision at full recall.
  const MapReport swapped = eval_map({{0, "chair", 0.8, box_at(0)},
                                      {0, "chair", 0.9, box_at(50)}},
                                     one);
  CHECK(swapped.map == 0.5);

  // A perfect box in the wrong frame matches nothing.
  const MapReport wrong_frame =
      eval_map({{3, "chair", 0.9, box_at(0)}}, one);
  CHECK(wrong_frame.map == 0.0);

  // Per-class APs average into mAP; unknown classes match nothing.
  const std::vector<GtObject> two_cls = {gt_at(0, 1, "chair", 0),
                                         gt_at(0, 2, "table", 4)};
  const MapReport mixed = eval_map({{0, "chair", 0.9, box_at(0)},
                                    {0, "table", 0.7, box_at(40)},
                                    {0, "lamp", 0.99, box_at(4)}},
                                   two_cls);
  CHECK(mixed.per_class_ap.at("chair") == 1.0);
  CHECK(mixed.per_class_ap.at("table") == 0.0);
  CHECK(mixed.per_class_ap.count("lamp") == 0);
  CHECK(mixed.map == 0.5);
}

TEST_CASE("eval_map is invariant to monotone score rescaling") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> pos(-8.0, 8.0);
  std::uniform_real_distribution<double> score(0.05, 0.95);
  std::uniform_int_distribution<int> frame(0, 4);
  std::vector<GtObject> gt;
  for (int i = 0; i < 12; ++i)
    gt.push_back(gt_at(frame(rng), i, i % 2 ? "chair" : "table", pos(rng),
                       pos(rng)));
  std::vector<ScoredBox> dets;
  for (int i = 0; i < 25; ++i) {
    const GtObject& g = gt[i % gt.size()];
    const double jitter = (i % 5) * 0.15;
    dets.push_back({g.frame_id, g.class_label, score(rng),
                    box_at(g.box.pose.translation.x() + jitter,
                           g.box.pose.translation.y())});
  }
  const MapReport base = eval_map(dets, gt);
  for (ScoredBox& d : dets) d.score = 2.0 * d.score + 1.0;
  const MapReport scaled = eval_map(dets, gt);
  CHECK(base.map == scaled.map);
  CHECK(base.per_class_ap == scaled.per_class_ap);
}

TEST_CASE("eval_mot perfect, fp-per-frame and id swap") {
  std::vector<GtObject> gt;
  std::vector<TrackedBox> perfect, with_fp, swapped;
  for (int f = 0; f < 10; ++f) {
    gt.push_back(gt_at(f, 1, "chair", 0.0));
    gt.push_back(gt_at(f, 2, "chair", 4.0));
    perfect.push_back(trk_at(f, 11, 0.0));
    perfect.push_back(trk_at(f, 12, 4.0));
    with_fp.push_back(trk_at(f, 11, 0.0));
    with_fp.push_back(trk_at(f, 12, 4.0));
    with_fp.push_back(trk_at(f, 99, 40.0));
    const bool flip = f >= 5;
    swapped.push_back(trk_at(f, flip ? 12 : 11, 0.0));
    swapped.push_back(trk_at(f, flip ? 11 : 12, 4.0));
  }

  const MotReport clean = eval_mot(perfect, gt);
  CHECK(clean.mota == 1.0);
  CHECK(clean.motp == 1.0);
  CHECK(clean.ids == 0);
  CHECK(clean.gt_total == 20);
  CHECK(clean.tp_total == 20);
  CHECK(clean.frames.size() == 10);

  const MotReport fp = eval_mot(with_fp, gt);
  CHECK(fp.mota == 0.5);  // 1 - 10/20
  CHECK(fp.motp == 1.0);
  CHECK(fp.ids == 0);
  CHECK(fp.fp_total == 10);
  CHECK(fp.fn_total == 0);

  const MotReport swap = eval_mot(swapped, gt);
  CHECK(swap.ids == 2);
  CHECK(swap.mota == doctest::Approx(1.0 - 2.0 / 20.0));
  CHECK(swap.motp == 1.0);
  CHECK(swap.frames[5].ids == 2);
}

TEST_CASE("eval_mot id continuity across gaps and gating") {
  // Matched at frames 0..2 and 4 by the same id: the gap is not a switch.
  std::vector<GtObject> gt;
  for (int f = 0; f < 5; ++f) gt.push_back(gt_at(f, 1, "chair", 0.0));
  std::vector<TrackedBox> tracks = {trk_at(0, 1, 0), trk_at(1, 1, 0),
                                    trk_at(2, 1, 0), trk_at(4, 1, 0)};
  const MotReport gap = eval_mot(tracks, gt);
  CHECK(gap.ids == 0);
  CHECK(gap.fn_total == 1);
  CHECK(gap.mota == doctest::Approx(1.0 - 1.0 / 5.0));

  // Same story with a different id after the gap: one switch.
  tracks.back().track_id = 7;
  const MotReport switched = eval_mot(tracks, gt);
  CHECK(switched.ids == 1);
  CHECK(switched.mota == doctest::Approx(1.0 - 2.0 / 5.0));

  // 1/7 IoU sits below the 0.25 gate: both sides stay unmatched.
  const std::vector<GtObject> close_gt = {gt_at(0, 1, "chair", 0.0)};
  const MotReport gated = eval_mot({trk_at(0, 5, 0.75)}, close_gt);
  CHECK(gated.tp_total == 0);
  CHECK(gated.fp_total == 1);
  CHECK(gated.fn_total == 1);
  CHECK(gated.mota == -1.0);

  // 1/3 IoU passes the gate and shows up in MOTP.
  const MotReport passed = eval_mot({trk_at(0, 5, 0.5)}, close_gt);
  CHECK(passed.tp_total == 1);
  CHECK(passed.motp == doctest::Approx(1.0 / 3.0));
  CHECK(passed.mota == 1.0);

  CHECK_THROWS_AS(eval_mot({trk_at(0, 5, 0.0), trk_at(0, 5, 3.0)}, close_gt),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_mot({}, {}), std::invalid_argument);
}

TEST_CASE("eval_mot single-frame sequences never switch ids") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  for (int it = 0; it < 20; ++it) {
    std::vector<GtObject> gt;
    std::vector<TrackedBox> tracks;
    for (int i = 0; i < 4; ++i) {
      gt.push_back(gt_at(0, i, "chair", pos(rng), pos(rng)));
      tracks.push_back(trk_at(0, 100 + i, pos(rng), pos(rng)));
    }
    CHECK(eval_mot(tracks, gt).ids == 0);
  }
}

TEST_CASE("eval_mot prefers the higher-overlap pairing") {
  // Track 21 overlaps both Gts; the optimal pairing keeps it on the centre
  // box and leaves the far GT to the other track.
  const std::vector<GtObject> gt = {gt_at(0, 1, "chair", 0.0),
                                    gt_at(0, 2, "chair", 0.6)};
  const std::vector<TrackedBox> tracks = {trk_at(0, 21, 0.1),
                                          trk_at(0, 22, 0.7)};
  const MotReport r = eval_mot(tracks, gt);
  CHECK(r.tp_total == 2);
  CHECK(r.fp_total == 0);
  // Pairing (1<->21, 2<->22) costs less than the crossed alternative.
  const double straight = iou3d(gt[0].box, tracks[0].box) +
                          iou3d(gt[1].box, tracks[1].box);
  const double crossed = iou3d(gt[0].box, tracks[1].box) +
                         iou3d(gt[1].box, tracks[0].box);
  CHECK(straight > crossed);
  CHECK(r.motp == doctest::Approx(straight / 2.0));
}

TEST_CASE("eval_depth closed forms") {
  const std::vector<std::uint8_t> all(6, 1);
  const DepthImage gt = image_of(3, 2, {1, 2, 3, 4, 5, 6});

  const DepthMetrics same = eval_depth(gt, gt, all);
  CHECK(same.rmse == 0.0);
  CHECK(same.log_rmse == 0.0);
  CHECK(same.abs_rel == 0.0);
  CHECK(same.sq_rel == 0.0);
  CHECK(same.delta1 == 1.0);
  CHECK(same.delta3 == 1.0);

  DepthImage scaled = gt;
  for (float& v : scaled.values) v *= 1.2f;
  const DepthMetrics ratio = eval_depth(scaled, gt, all);
  CHECK(ratio.abs_rel == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(ratio.delta1 == 1.0);
  CHECK(ratio.delta2 == 1.0);
  CHECK(ratio.delta3 == 1.0);
  CHECK(ratio.log_rmse == doctest::Approx(std::log(1.2)).epsilon(1e-6));

  const DepthImage two = image_of(2, 2, {2, 2, 2, 2});
  const DepthImage three = image_of(2, 2, {3, 3, 3, 3});
  const std::vector<std::uint8_t> mask4(4, 1);
  const DepthMetrics off = eval_depth(three, two, mask4);
  CHECK(off.rmse == 1.0);
  CHECK(off.abs_rel == 0.5);
  CHECK(off.sq_rel == 0.5);
  CHECK(off.log_rmse == doctest::Approx(0.4054651081081644));
  CHECK(off.delta1 == 0.0);  // 1.5 >= 1.25
  CHECK(off.delta2 == 1.0);  // 1.5 < 1.5625
  CHECK(off.delta3 == 1.0);
}

TEST_CASE("eval_depth mask, empty predictions and errors") {
  // Garbage outside the mask never matters.
  const DepthImage gt = image_of(2, 2, {2, 2, -7, 0});
  const DepthImage pred = image_of(2, 2, {2, 2, 123, 9});
  const std::vector<std::uint8_t> half = {1, 1, 0, 0};
  const DepthMetrics m = eval_depth(pred, gt, half);
  CHECK(m.rmse == 0.0);
  CHECK(m.delta1 == 1.0);

  // An empty prediction drops out or keeps its delta slot as a miss.
  const DepthImage holes = image_of(2, 2, {2, 2, 2, 0});
  const DepthImage gt4 = image_of(2, 2, {2, 2, 2, 2});
  const std::vector<std::uint8_t> mask4(4, 1);
  const DepthMetrics drop = eval_depth(holes, gt4, mask4);
  CHECK(drop.delta1 == 1.0);
  CHECK(drop.rmse == 0.0);
  const DepthMetrics miss =
      eval_depth(holes, gt4, mask4, EmptyPredPolicy::kCountAsMiss);
  CHECK(miss.delta1 == 0.75);
  CHECK(miss.delta3 == 0.75);
  CHECK(miss.rmse == 0.0);

  CHECK_THROWS_AS(eval_depth(image_of(1, 1, {1}), gt4, mask4),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_depth(gt4, gt4, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(eval_depth(gt4, gt4, std::vector<std::uint8_t>(4, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_depth(gt4, image_of(2, 2, {2, 0, 2, 2}), mask4),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      eval_depth(image_of(2, 2, {0, 0, 0, 0}), gt4, mask4),
      std::invalid_argument);
}

TEST_CASE("eval_depth properties on random images") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> depth(0.5, 20.0);
  for (int it = 0; it < 10; ++it) {
    DepthImage gt = image_of(8, 8, std::vector<float>(64));
    DepthImage pred = gt;
    std::vector<std::uint8_t> mask(64, 0);
    for (int i = 0; i < 64; ++i) {
      gt.values[i] = static_cast<float>(depth(rng));
      pred.values[i] = static_cast<float>(depth(rng));
      mask[i] = i % 3 != 0;
    }
    const DepthMetrics m = eval_depth(pred, gt, mask);
    CHECK(m.rmse >= 0.0);
    CHECK(m.log_rmse >= 0.0);
    CHECK(m.abs_rel >= 0.0);
    CHECK(m.sq_rel >= 0.0);
    CHECK(m.delta1 <= m.delta2);
    CHECK(m.delta2 <= m.delta3);
    CHECK(m.delta3 <= 1.0);
  }
}

TEST_CASE("gt jsonl round trip and errors") {
  const auto path =
      std::filesystem::temp_directory_path() / "motrec_test_gt.jsonl";

  GtObject a{3, 7, "chair", box_at(1.5, -2, 0.25)};
  a.box.scale = {1, 2, 0.5};
  GtObject b{4, 8, "table", box_at(0, 1, 2, 0.7, 2, 1, 1)};
  write_gt_jsonl(path, {a, b});

  const std::string text = slurp(path);
  CHECK(text.substr(0, text.find('\n')) ==
        "{\"frame\":3,\"instance\":7,\"class\":\"chair\","
        "\"center\":[1.5,-2.0,0.25],"
        "\"rotation\":[1.0,0.0,0.0,0.0,1.0,0.0,0.0,0.0,1.0],"
        "\"scale\":[1.0,2.0,0.5]}");

  const std::vector<GtObject> back = read_gt_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].frame_id == 3);
  CHECK(back[0].instance_id == 7);
  CHECK(back[0].class_label == "chair");
  CHECK(back[0].box.pose.translation == a.box.pose.translation);
  CHECK(back[0].box.scale.sy == 2.0);
  CHECK(back[0].box.frame == Frame::kWorld);
  CHECK((back[1].box.pose.rotation - b.box.pose.rotation).norm() < 1e-15);

  std::ofstream bad(path);
  bad << "{\"frame\":0,\"instance\":1,\"class\":\"x\",\"center\":[0,0,0],"
         "\"rotation\":[2,0,0,0,1,0,0,0,1],\"scale\":[1,1,1]}\n";
  bad.close();
  CHECK_THROWS_WITH_AS(read_gt_jsonl(path),
                       doctest::Contains("line 1: rotation"),
                       std::runtime_error);

  std::ofstream bad2(path);
  bad2 << "\n{\"frame\":0}\n";
  bad2.close();
  CHECK_THROWS_WITH_AS(read_gt_jsonl(path), doctest::Contains("line 2"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("metrics csv") {
  const auto path =
      std::filesystem::temp_directory_path() / "motrec_test_metrics.csv";
  write_metrics_csv(path, {{"mota", 0.5}, {"ids", 3.0}, {"motp", 0.875}});
  CHECK(slurp(path) == "metric,value\nmota,0.5\nids,3.0\nmotp,0.875\n");
  std::filesystem::remove(path);
}
