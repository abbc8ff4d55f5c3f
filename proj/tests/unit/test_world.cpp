// SPDX-License-Identifier: Apache-2.0
#include "hintbox/world/io.hpp"
#include "hintbox/world/world.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace hintbox;
using namespace hintbox::world;

namespace {

SceneObject object(std::string label, Box box, double depth = 0.5, Vec3 p = {}, PhysicalSize size = {1, 1}) {
  SceneObject o;
  o.label = std::move(label);
  o.box = box;
  o.mean_depth = depth;
  o.point3d = p;
  o.size_m = size;
  return o;
}

SceneSpec scene_of(std::vector<SceneObject> objs) {
  SceneSpec s;
  s.id = "crafted";
  s.background_depth = 0.9;
  s.camera = {512, 320, 240};
  for (std::size_t i = 0; i < objs.size(); ++i) objs[i].instance_id = static_cast<int>(i + 1);
  s.objects = std::move(objs);
  return s;
}

std::string option_of(const QAItem& qa) {
  const auto idx = static_cast<std::size_t>(qa.answer[0] - 'A');
  REQUIRE(idx < qa.options.size());
  return qa.options[idx];
}

}  // namespace

TEST_CASE("generate_scene examples") {
  SceneParams p;
  p.n_objects = 3;
  auto a = generate_scene(7, p), b = generate_scene(7, p);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(*a == *b);
  CHECK(a->objects.size() == 3);

  p.n_objects = 0;
  auto empty = generate_scene(7, p);
  REQUIRE(empty.ok());
  CHECK(empty->objects.empty());

  p.n_objects = 1000000;
  p.width = 64;
  p.height = 64;
  auto inf = generate_scene(7, p);
  REQUIRE_FALSE(inf.ok());
  CHECK(inf.error().kind == WorldErrorKind::Infeasible);
}

TEST_CASE("generated scenes respect their invariants") {
  SceneParams p;
  p.min_instances = {{"cup", 2}};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto s = generate_scene(seed, p);
    REQUIRE(s.ok());
    CHECK(s->objects.size() == 4);
    int cups = 0;
    for (std::size_t i = 0; i < s->objects.size(); ++i) {
      const auto& o = s->objects[i];
      cups += o.label == "cup";
      CHECK(o.box.valid());
      CHECK(o.box.inside(s->width, s->height));
      CHECK(o.box.x1 == std::floor(o.box.x1));
      CHECK((o.mean_depth >= 0.0 && o.mean_depth <= 1.0));
      CHECK(o.point3d.z > 0);
      // Pinhole consistency: the physical height projects to the box height.
      CHECK(o.size_m.h * s->camera.focal / o.point3d.z == doctest::Approx(o.box.height()).epsilon(1e-9));
      for (std::size_t j = 0; j < i; ++j) CHECK(intersection_area(o.box, s->objects[j].box) == 0.0);
    }
    CHECK(cups >= 2);
    CHECK((s->background_depth >= 0.0 && s->background_depth <= 1.0));
  }
}

TEST_CASE("oracle_detect examples") {
  const auto s = scene_of({object("lamp", {10, 20, 50, 80})});
  auto d = oracle_detect(s, {"lamp"}, {}, 1);
  REQUIRE(d.ok());
  REQUIRE(d->items.size() == 1);
  CHECK(d->items[0] == tools::Detection{"lamp", {10, 20, 50, 80}, 1.0});

  CHECK(oracle_detect(s, {"sofa"}, {}, 1)->items.empty());
  CHECK(oracle_detect(s, {"The Lamp"}, {}, 1)->items.size() == 1);

  NoiseConfig miss;
  miss.miss_prob = 1.0;
  CHECK(oracle_detect(s, {"lamp"}, miss, 1)->items.empty());

  NoiseConfig fail;
  fail.failure_prob = 1.0;
  auto f = oracle_detect(s, {"lamp"}, fail, 1);
  REQUIRE_FALSE(f.ok());
  CHECK(f.error().kind == WorldErrorKind::InjectedFailure);
}

TEST_CASE("noisy detections stay valid and reproducible") {
  auto s = generate_scene(3);
  REQUIRE(s.ok());
  std::vector<std::string> labels;
  for (const auto& o : s->objects) labels.push_back(o.label);
  NoiseConfig n;
  n.box_jitter_px = 6;
  n.false_positive_prob = 0.5;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto a = oracle_detect(*s, labels, n, seed);
    auto b = oracle_detect(*s, labels, n, seed);
    REQUIRE(a.ok());
    CHECK(*a == *b);
    CHECK_FALSE(tools::check_output(tools::AtomicOutput{*a}, s->width, s->height).has_value());
    for (const auto& d : a->items) CHECK((d.score >= 0.05 && d.score <= 1.0));
  }
}

TEST_CASE("depth, segment and 3d oracles") {
  const auto s = scene_of({object("cup", {100, 100, 140, 160}, 0.3, {1.0, 0.5, 2.0})});
  auto depth = oracle_depth(s);
  REQUIRE(depth.ok());
  CHECK(depth->width == 640);
  CHECK(depth->values[0] == 0.9f);
  CHECK(depth->values[120 * 640 + 120] == 0.3f);
  CHECK(depth->values[99 * 640 + 120] == 0.9f);
  CHECK(depth->values[159 * 640 + 139] == 0.3f);
  CHECK(depth->values[160 * 640 + 139] == 0.9f);

  auto det = oracle_detect(s, {"cup"}, {}, 0);
  auto masks = oracle_segment(s, *det);
  REQUIRE(masks.ok());
  REQUIRE(masks->items.size() == 1);
  CHECK(masks->items[0].area() == 40 * 60);
  CHECK(masks->items[0].extent() == Box{100, 100, 140, 160});

  auto pts = oracle_3d(s, *det);
  REQUIRE(pts.ok());
  REQUIRE(pts->points.size() == 1);
  CHECK(pts->points[0].xyz == Vec3{1.0, 0.5, 2.0});
  CHECK(pts->camera->focal == 512);
}

TEST_CASE("later objects overwrite depth") {
  auto s = scene_of({object("a", {0, 0, 20, 20}, 0.2), object("b", {10, 10, 30, 30}, 0.6)});
  auto d = oracle_depth(s);
  CHECK(d->values[15 * 640 + 15] == 0.6f);
  CHECK(d->values[5 * 640 + 5] == 0.2f);
}

TEST_CASE("relative direction and distance") {
  CHECK(relative_direction({90, 90, 110, 110}, {290, 90, 310, 110}) == "left");
  CHECK(relative_direction({290, 90, 310, 110}, {90, 90, 110, 110}) == "right");
  CHECK(relative_direction({0, 0, 10, 10}, {0, 100, 10, 110}) == "above");
  CHECK(relative_direction({0, 100, 10, 110}, {0, 0, 10, 10}) == "below");
  CHECK(relative_direction({0, 0, 10, 10}, {50, 50, 60, 60}) == "left");
  CHECK(distance({0, 0, 2}, {0, 0, 4}) == 2.0);
  CHECK(distance({1, 2, 3}, {4, 6, 3}) == 5.0);
}

TEST_CASE("generate_qa examples") {
  const auto s = scene_of({object("cup", {50, 50, 80, 80}, 0.3, {0, 0, 2}), object("lamp", {300, 50, 330, 80}, 0.5, {0, 0, 4})});
  auto abs = generate_qa(s, TaskType::AbsDist, 1);
  REQUIRE(abs.ok());
  CHECK(abs->kind == grammar::AnswerKind::Numeric);
  CHECK(abs->answer_value == 2.0);
  CHECK(abs->answer == "2");

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto dir = generate_qa(s, TaskType::RelDir, seed);
    REQUIRE(dir.ok());
    CHECK(dir->options.size() == 4);
    CHECK(option_of(*dir) == (dir->entities[0] == "cup" ? "left" : "right"));
  }

  const auto one = scene_of({object("cup", {50, 50, 80, 80})});
  auto under = generate_qa(one, TaskType::RelDist, 1);
  REQUIRE_FALSE(under.ok());
  CHECK(under.error().kind == WorldErrorKind::Underspecified);
  CHECK(generate_qa(scene_of({}), TaskType::Count, 1).error().kind == WorldErrorKind::Underspecified);
}

TEST_CASE("qa answers follow from the scene") {
  std::map<TaskType, int> seen;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SceneParams p;
    p.n_objects = 5;
    p.min_instances = {{"chair", 2}};
    auto s = generate_scene(seed, p);
    REQUIRE(s.ok());
    for (auto task : kAllTasks) {
      auto qa = generate_qa(*s, task, seed);
      if (!qa.ok()) continue;
      ++seen[task];
      const auto find = [&](const std::string& label) {
        const SceneObject* hit = nullptr;
        for (const auto& o : s->objects) {
          if (o.label == label) hit = &o;
        }
        return hit;
      };
      switch (task) {
        case TaskType::Count: {
          const auto n = std::count_if(s->objects.begin(), s->objects.end(),
                                       [&](const SceneObject& o) { return o.label == qa->entities[0]; });
          CHECK(option_of(*qa) == std::to_string(n));
          break;
        }
        case TaskType::RelDir:
          CHECK(option_of(*qa) == relative_direction(find(qa->entities[0])->box, find(qa->entities[1])->box));
          break;
        case TaskType::RelDist: {
          const auto* a = find(qa->entities[0]);
          const auto* b = find(qa->entities[1]);
          const double dx = a->point3d.x - b->point3d.x, dy = a->point3d.y - b->point3d.y,
                       dz = a->point3d.z - b->point3d.z;
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.2f m", std::sqrt(dx * dx + dy * dy + dz * dz));
          CHECK(option_of(*qa) == buf);
          break;
        }
        case TaskType::AbsDist:
          CHECK(qa->answer_value == distance(find(qa->entities[0])->point3d, find(qa->entities[1])->point3d));
          break;
        case TaskType::SizeEst:
          CHECK(qa->answer_value == find(qa->entities[0])->size_m.h);
          break;
      }
      if (qa->kind == grammar::AnswerKind::MultipleChoice) {
        CHECK(qa->options.size() == 4);
        std::set<std::string> uniq(qa->options.begin(), qa->options.end());
        CHECK(uniq.size() == 4);
      }
      auto again = generate_qa(*s, task, seed);
      CHECK(again->question == qa->question);
      CHECK(again->answer == qa->answer);
    }
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("crop_scene rescales objects") {
  const auto s = scene_of({object("cup", {100, 100, 140, 160}), object("lamp", {500, 400, 520, 420})});
  const auto c = crop_scene(s, {80, 80, 240, 200, 2.0});
  CHECK(c.width == 320);
  CHECK(c.height == 240);
  REQUIRE(c.objects.size() == 1);
  CHECK(c.objects[0].box == Box{40, 40, 120, 160});
}

TEST_CASE("scene and qa json round trip") {
  auto s = generate_scene(11);
  REQUIRE(s.ok());
  auto back = scene_from_json(scene_to_json(*s));
  REQUIRE(back.ok());
  CHECK(*back == *s);
  auto qa = generate_qa(*s, TaskType::Count, 4);
  auto qback = qa_from_json(qa_to_json(*qa));
  REQUIRE(qback.ok());
  CHECK(qback->answer == qa->answer);
  CHECK(qback->options == qa->options);
  CHECK(qback->scene == qa->scene);

  const auto dir = std::filesystem::temp_directory_path() / "hintbox_world_io";
  std::filesystem::create_directories(dir);
  REQUIRE(write_scenes(dir / "s.jsonl", {*s, *s}).ok());
  auto read = read_scenes(dir / "s.jsonl");
  REQUIRE(read.ok());
  CHECK(read->size() == 2);

  CHECK_FALSE(scene_from_json(nlohmann::json{{"schema", "other"}}).ok());
  std::ofstream(dir / "bad.jsonl") << scene_to_json(*s).dump() << "\n{not json\n";
  auto bad = read_scenes(dir / "bad.jsonl");
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.error().line == 2);
}

TEST_CASE("noise config json") {
  NoiseConfig n;
  n.box_jitter_px = 2;
  n.failure_prob = 0.1;
  n.failure_kinds = {{tools::ToolErrorKind::Timeout, 1.0}};
  auto back = noise_from_json(noise_to_json(n));
  REQUIRE(back.ok());
  CHECK(back->box_jitter_px == 2);
  CHECK(back->failure_prob == 0.1);
  REQUIRE(back->failure_kinds.size() == 1);
  CHECK(back->failure_kinds[0].first == tools::ToolErrorKind::Timeout);
  CHECK_FALSE(noise_from_json(nlohmann::json{{"miss_prob", 2.0}}).ok());
}
