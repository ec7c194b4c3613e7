#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "gata2floor/facade_data.hpp"
#include "gata2floor/rng.hpp"

using g2f::BoxCategory;
using g2f::DetectionBox;

namespace {

std::string write_temp(const std::string& content) {
  static int counter = 0;
  std::string path = "facades_test_" + std::to_string(counter++) + ".jsonl";
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

DetectionBox random_box(g2f::Rng& rng, double W, double H) {
  double w = rng.uniform(1.0, W / 2.0);
  double h = rng.uniform(1.0, H / 2.0);
  return {rng.uniform(0.0, W - w), rng.uniform(0.0, H - h), w, h, BoxCategory::kWindow, {}};
}

}  // namespace

TEST_CASE("node features of a corner box") {
  DetectionBox box{0, 0, 10, 10, BoxCategory::kWindow, {}};
  g2f::NodeFeatures f = g2f::node_features(box, 100, 100);
  CHECK(f[0] == doctest::Approx(0.05));
  CHECK(f[1] == doctest::Approx(0.05));
  CHECK(f[2] == doctest::Approx(0.1));
  CHECK(f[3] == doctest::Approx(0.1));
  CHECK(f[4] == doctest::Approx(1.0));
  CHECK(f[5] == 1.0);
}

TEST_CASE("full-image box and doors") {
  DetectionBox box{0, 0, 640, 480, BoxCategory::kDoor, {}};
  g2f::NodeFeatures f = g2f::node_features(box, 640, 480);
  CHECK(f[0] == doctest::Approx(0.5));
  CHECK(f[1] == doctest::Approx(0.5));
  CHECK(f[2] == doctest::Approx(1.0));
  CHECK(f[3] == doctest::Approx(1.0));
  CHECK(f[5] == 0.0);
}

TEST_CASE("aspect ratio uses raw pixels") {
  DetectionBox box{10, 10, 30, 10, BoxCategory::kWindow, {}};
  g2f::NodeFeatures f = g2f::node_features(box, 1000, 100);
  CHECK(f[4] == doctest::Approx(3.0));
}

TEST_CASE("degenerate boxes are rejected") {
  DetectionBox flat{0, 0, 10, 0, BoxCategory::kWindow, {}};
  CHECK_THROWS_AS(g2f::node_features(flat, 100, 100), std::invalid_argument);
  DetectionBox outside{200, 200, 10, 10, BoxCategory::kWindow, {}};
  CHECK_THROWS_AS(g2f::node_features(outside, 100, 100), std::invalid_argument);
}

TEST_CASE("boxes past the frame are clamped and flagged") {
  DetectionBox box{90, 90, 20, 20, BoxCategory::kWindow, {}};
  bool clamped = false;
  DetectionBox c = g2f::clamp_box(box, 100, 100, &clamped);
  CHECK(clamped);
  CHECK(c.w == doctest::Approx(10.0));
  CHECK(c.h == doctest::Approx(10.0));
  g2f::NodeFeatures f = g2f::node_features(box, 100, 100);
  CHECK(f[0] == doctest::Approx(0.95));
  CHECK(f[2] == doctest::Approx(0.1));
}

TEST_CASE("edge features of identical and disjoint boxes") {
  DetectionBox a{10, 10, 20, 20, BoxCategory::kWindow, {}};
  g2f::EdgeFeatures same = g2f::edge_features(a, a, 100, 100);
  CHECK(same[0] == 0.0);
  CHECK(same[1] == 0.0);
  CHECK(same[2] == doctest::Approx(1.0));
  CHECK(same[3] == doctest::Approx(1.0));

  DetectionBox b{60, 60, 20, 20, BoxCategory::kWindow, {}};
  g2f::EdgeFeatures far = g2f::edge_features(a, b, 100, 100);
  CHECK(far[2] == 0.0);
  CHECK(far[3] == 0.0);
}

TEST_CASE("edge features of half-overlapping boxes") {
  DetectionBox a{0, 0, 10, 10, BoxCategory::kWindow, {}};
  DetectionBox b{5, 0, 10, 10, BoxCategory::kWindow, {}};
  g2f::EdgeFeatures f = g2f::edge_features(a, b, 100, 100);
  CHECK(f[0] == doctest::Approx(0.05));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(1.0 / 3.0));
  CHECK(f[3] == doctest::Approx(0.5));
}

TEST_CASE("edge features are symmetric and IoU never exceeds the overlap ratio") {
  g2f::Rng rng = g2f::substream(21, "edge-prop");
  for (int trial = 0; trial < 200; ++trial) {
    DetectionBox a = random_box(rng, 320, 240);
    DetectionBox b = random_box(rng, 320, 240);
    g2f::EdgeFeatures ab = g2f::edge_features(a, b, 320, 240);
    g2f::EdgeFeatures ba = g2f::edge_features(b, a, 320, 240);
    for (int i = 0; i < 4; ++i) {
      CHECK(ab[i] == doctest::Approx(ba[i]).epsilon(1e-12));
      CHECK(ab[i] >= 0.0);
      CHECK(ab[i] <= 1.0);
    }
    CHECK(ab[2] <= ab[3] + 1e-12);
  }
}

TEST_CASE("loading an empty facades file yields no records") {
  std::string path = write_temp("");
  CHECK(g2f::load_facades(path).empty());
  std::remove(path.c_str());
}

TEST_CASE("loading a valid line") {
  std::string path = write_temp(
      R"({"facade_id":"f1","width":640,"height":480,"floor_count":3,)"
      R"("boxes":[{"x":1,"y":2,"w":30,"h":40,"category":"door","floor_id":0}],"extra":42})"
      "\n");
  std::vector<g2f::FacadeRecord> recs = g2f::load_facades(path);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].facade_id == "f1");
  CHECK(recs[0].width == 640);
  CHECK(*recs[0].floor_count == 3);
  REQUIRE(recs[0].boxes.size() == 1);
  CHECK(recs[0].boxes[0].category == BoxCategory::kDoor);
  CHECK(*recs[0].boxes[0].floor_id == 0);
  std::remove(path.c_str());
}

TEST_CASE("load errors carry the line number and the offending field") {
  std::string bad_w = write_temp(
      R"({"facade_id":"a","width":10,"height":10,"boxes":[{"x":0,"y":0,"w":5,"h":5,"category":"window"}]})"
      "\n"
      R"({"facade_id":"b","width":10,"height":10,"boxes":[{"x":0,"y":0,"w":-3,"h":5,"category":"window"}]})"
      "\n");
  CHECK_THROWS_WITH_AS(g2f::load_facades(bad_w), doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(g2f::load_facades(bad_w), doctest::Contains("'w'"), std::runtime_error);
  std::remove(bad_w.c_str());

  std::string bad_json = write_temp("{not json}\n");
  CHECK_THROWS_WITH_AS(g2f::load_facades(bad_json), doctest::Contains("line 1"), std::runtime_error);
  std::remove(bad_json.c_str());

  std::string bad_dims = write_temp(R"({"facade_id":"a","width":-5,"height":10,"boxes":[]})" "\n");
  CHECK_THROWS_AS(g2f::load_facades(bad_dims), std::runtime_error);
  std::remove(bad_dims.c_str());
}

TEST_CASE("facade records survive a save/load round trip") {
  g2f::FacadeRecord rec;
  rec.facade_id = "rt";
  rec.width = 321;
  rec.height = 123;
  rec.floor_count = 4;
  rec.boxes.push_back({1.5, 2.25, 10.0, 12.5, BoxCategory::kWindow, 2});
  rec.boxes.push_back({7.0, 8.0, 3.0, 6.0, BoxCategory::kDoor, std::nullopt});
  std::string path = "facades_test_rt.jsonl";
  g2f::save_facades({rec}, path);
  std::vector<g2f::FacadeRecord> back = g2f::load_facades(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].facade_id == rec.facade_id);
  CHECK(back[0].width == rec.width);
  CHECK(back[0].height == rec.height);
  CHECK(*back[0].floor_count == 4);
  REQUIRE(back[0].boxes.size() == 2);
  CHECK(back[0].boxes[0].x_min == rec.boxes[0].x_min);
  CHECK(back[0].boxes[0].h == rec.boxes[0].h);
  CHECK(*back[0].boxes[0].floor_id == 2);
  CHECK(!back[0].boxes[1].floor_id);
  std::remove(path.c_str());
}
