// SPDX-License-Identifier: Apache-2.0
#include "hintbox/world/io.hpp"

#include <fstream>

namespace hintbox::world {

using nlohmann::json;

namespace {

json box_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must be [x1, y1, x2, y2]");
  return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void expect_schema(const json& j, std::string_view schema) {
  if (j.value("schema", std::string()) != schema) {
    throw std::invalid_argument("expected schema " + std::string(schema));
  }
}

SceneSpec scene_from(const json& j) {
  expect_schema(j, kSceneSchema);
  SceneSpec s;
  s.id = j.at("id").get<std::string>();
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.background_depth = j.at("background_depth").get<double>();
  s.seed = j.value("seed", std::uint64_t{0});
  const auto& cam = j.at("camera");
  s.camera = Camera{cam.at("focal").get<double>(), cam.at("cx").get<double>(), cam.at("cy").get<double>()};
  for (const auto& o : j.at("objects")) {
    SceneObject obj;
    obj.label = o.at("label").get<std::string>();
    obj.box = box_from(o.at("box"));
    obj.mean_depth = o.at("mean_depth").get<double>();
    const auto& size = o.at("size_m");
    obj.size_m = PhysicalSize{size.at(0).get<double>(), size.at(1).get<double>()};
    const auto& p = o.at("point3d");
    obj.point3d = Vec3{p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
    obj.instance_id = o.value("instance_id", 0);
    s.objects.push_back(std::move(obj));
  }
  if (s.width <= 0 || s.height <= 0) throw std::invalid_argument("scene size must be positive");
  return s;
}

template <typename F>
auto guarded(F&& f) -> Result<decltype(f()), FormatError> {
  try {
    return f();
  } catch (const std::exception& e) {
    return fail(FormatError{e.what()});
  }
}

}  // namespace

json scene_to_json(const SceneSpec& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"label", o.label},
                       {"box", box_json(o.box)},
                       {"mean_depth", o.mean_depth},
                       {"size_m", {o.size_m.w, o.size_m.h}},
                       {"point3d", {o.point3d.x, o.point3d.y, o.point3d.z}},
                       {"instance_id", o.instance_id}});
  }
  return {{"schema", kSceneSchema},
          {"id", scene.id},
          {"width", scene.width},
          {"height", scene.height},
          {"background_depth", scene.background_depth},
          {"seed", scene.seed},
          {"camera", {{"focal", scene.camera.focal}, {"cx", scene.camera.cx}, {"cy", scene.camera.cy}}},
          {"objects", objects}};
}

Result<SceneSpec, FormatError> scene_from_json(const json& j) {
  return guarded([&] { return scene_from(j); });
}

json qa_to_json(const QAItem& item) {
  return {{"schema", kQASchema},
          {"id", item.id},
          {"task", task_name(item.task)},
          {"question", item.question},
          {"answer_kind", item.kind == grammar::AnswerKind::Numeric ? "numeric" : "choice"},
          {"options", item.options},
          {"answer", item.answer},
          {"answer_value", item.answer_value},
          {"entities", item.entities},
          {"scene", scene_to_json(item.scene)}};
}

Result<QAItem, FormatError> qa_from_json(const json& j) {
  return guarded([&] {
    expect_schema(j, kQASchema);
    QAItem item;
    item.id = j.at("id").get<std::string>();
    const auto task = parse_task(j.at("task").get<std::string>());
    if (!task) throw std::invalid_argument("unknown task " + j.at("task").get<std::string>());
    item.task = *task;
    item.question = j.at("question").get<std::string>();
    const auto kind = j.at("answer_kind").get<std::string>();
    if (kind != "numeric" && kind != "choice") throw std::invalid_argument("unknown answer_kind " + kind);
    item.kind = kind == "numeric" ? grammar::AnswerKind::Numeric : grammar::AnswerKind::MultipleChoice;
    item.options = j.value("options", std::vector<std::string>{});
    item.answer = j.at("answer").get<std::string>();
    item.answer_value = j.value("answer_value", 0.0);
    item.entities = j.value("entities", std::vector<std::string>{});
    item.scene = scene_from(j.at("scene"));
    return item;
  });
}

json noise_to_json(const NoiseConfig& n) {
  json kinds = json::object();
  for (const auto& [k, w] : n.failure_kinds) kinds[std::string(tools::tool_error_name(k))] = w;
  return {{"box_jitter_px", n.box_jitter_px},
          {"miss_prob", n.miss_prob},
          {"false_positive_prob", n.false_positive_prob},
          {"failure_prob", n.failure_prob},
          {"failure_kinds", kinds}};
}

Result<NoiseConfig, FormatError> noise_from_json(const json& j) {
  return guarded([&] {
    NoiseConfig n;
    n.box_jitter_px = j.value("box_jitter_px", 0.0);
    n.miss_prob = j.value("miss_prob", 0.0);
    n.false_positive_prob = j.value("false_positive_prob", 0.0);
    n.failure_prob = j.value("failure_prob", 0.0);
    if (j.contains("failure_kinds")) {
      n.failure_kinds.clear();
      for (const auto& [name, w] : j["failure_kinds"].items()) {
        const auto kind = tools::parse_tool_error(name);
        if (!kind) throw std::invalid_argument("unknown failure kind '" + name + "'");
        n.failure_kinds.emplace_back(*kind, w.get<double>());
      }
    }
    if (!n.valid()) throw std::invalid_argument("noise probabilities must be in [0, 1]");
    return n;
  });
}

Result<std::vector<json>, FormatError> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return fail(FormatError{"cannot open " + path.string()});
  std::vector<json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const std::exception& e) {
      return fail(FormatError{e.what(), n});
    }
  }
  return rows;
}

Result<void, FormatError> write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) return fail(FormatError{"cannot write " + path.string()});
  for (const auto& r : rows) out << r.dump() << '\n';
  if (!out) return fail(FormatError{"write failed: " + path.string()});
  return {};
}

namespace {

template <typename T, typename F>
Result<std::vector<T>, FormatError> read_rows(const std::filesystem::path& path, F&& parse) {
  auto rows = read_jsonl(path);
  if (!rows) return fail(rows.error());
  std::vector<T> out;
  for (std::size_t i = 0; i < rows->size(); ++i) {
    auto r = parse((*rows)[i]);
    if (!r) return fail(FormatError{r.error().message, i + 1});
    out.push_back(std::move(r).value());
  }
  return out;
}

}  // namespace

Result<std::vector<SceneSpec>, FormatError> read_scenes(const std::filesystem::path& path) {
  return read_rows<SceneSpec>(path, scene_from_json);
}

Result<void, FormatError> write_scenes(const std::filesystem::path& path, const std::vector<SceneSpec>& scenes) {
  std::vector<json> rows;
  for (const auto& s : scenes) rows.push_back(scene_to_json(s));
  return write_jsonl(path, rows);
}

Result<std::vector<QAItem>, FormatError> read_qa(const std::filesystem::path& path) {
  return read_rows<QAItem>(path, qa_from_json);
}

Result<void, FormatError> write_qa(const std::filesystem::path& path, const std::vector<QAItem>& items) {
  std::vector<json> rows;
  for (const auto& q : items) rows.push_back(qa_to_json(q));
  return write_jsonl(path, rows);
}

}  // namespace hintbox::world
