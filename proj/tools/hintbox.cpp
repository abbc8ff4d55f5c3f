// SPDX-License-Identifier: Apache-2.0
// hintbox: scenes, QA, episodes, rewards, datasets, and the mock tool server.

#include "hintbox/backend/mock_server.hpp"
#include "hintbox/backend/protocol.hpp"
#include "hintbox/data/pipeline.hpp"
#include "hintbox/eval/harness.hpp"
#include "hintbox/kernels/kernels.hpp"
#include "hintbox/reward/reward.hpp"
#include "hintbox/world/io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <pthread.h>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace hintbox;
using nlohmann::json;

namespace {

[[noreturn]] void die(const std::string& msg) {
  std::cerr << "hintbox: " << msg << "\n";
  std::exit(1);
}

std::vector<world::SceneSpec> load_scenes(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<world::SceneSpec> out;
  for (const auto& f : files) {
    auto scenes = world::read_scenes(f);
    if (!scenes) die(f.string() + ":" + std::to_string(scenes.error().line) + ": " + scenes.error().message);
    out.insert(out.end(), scenes->begin(), scenes->end());
  }
  if (out.empty()) die("no scenes in " + path.string());
  return out;
}

world::NoiseConfig load_noise(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) die("cannot open " + path);
  try {
    auto n = world::noise_from_json(json::parse(in));
    if (!n) die(path + ": " + n.error().message);
    return *n;
  } catch (const std::exception& e) {
    die(path + ": " + e.what());
  }
}

void write_rows(const std::string& path, const std::vector<json>& rows) {
  if (path.empty() || path == "-") {
    for (const auto& r : rows) std::cout << r.dump() << "\n";
    return;
  }
  auto ok = world::write_jsonl(path, rows);
  if (!ok) die(ok.error().message);
}

struct BackendOpts {
  std::string backend;
  std::string noise;
  std::uint64_t noise_seed = 0;
  std::string detector = std::string(skills::kDefaultDetector);
  double fault_prob = 0.0;
};

void add_backend_opts(CLI::App* cmd, BackendOpts& o) {
  cmd->add_option("--backend", o.backend, "url of a tool.v1 server, or 'inprocess' (default: $HINTBOX_BACKEND_URL)");
  cmd->add_option("--noise", o.noise, "noise config JSON for the in-process oracle");
  cmd->add_option("--noise-seed", o.noise_seed, "seed of the oracle noise draws");
  cmd->add_option("--detector", o.detector, "detector binding")->check(CLI::IsMember({"groundingdino", "owlv2"}));
  cmd->add_option("--fault-prob", o.fault_prob, "per-call injected failure probability")->check(CLI::Range(0.0, 1.0));
}

skills::Toolbox make_toolbox(const BackendOpts& o) {
  auto backend = o.backend;
  if (backend.empty()) {
    const char* env = std::getenv(std::string(backend::kEndpointEnv).c_str());
    backend = env && *env ? env : "inprocess";
  }
  tools::BackendPtr perception;
  if (backend == "inprocess") {
    perception = std::make_shared<world::OracleBackend>(load_noise(o.noise), o.noise_seed);
  } else {
    perception = std::make_shared<backend::RemoteBackend>(backend);
  }
  skills::FaultConfig faults;
  faults.probability = o.fault_prob;
  return skills::make_toolbox(perception, faults, o.detector);
}

std::unique_ptr<eval::Agent> make_agent(const std::string& kind, const eval::RemoteAgentConfig& remote) {
  if (kind == "oracle") return std::make_unique<eval::OracleAgent>();
  if (kind == "notool") return std::make_unique<eval::NoToolAgent>();
  return std::make_unique<eval::RemoteChatAgent>(remote);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hintbox: tool sandbox for tag-structured spatial agents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hintbox 0.1.0");

  // gen-scenes
  int n_scenes = 100, n_objects = 4, width = 640, height = 480;
  std::uint64_t seed = 0;
  std::string out;
  auto* gen_scenes = app.add_subcommand("gen-scenes", "generate synthetic scenes (scene.v1 JSONL)");
  gen_scenes->add_option("--n", n_scenes)->check(CLI::NonNegativeNumber);
  gen_scenes->add_option("--objects", n_objects)->check(CLI::NonNegativeNumber);
  gen_scenes->add_option("--width", width)->check(CLI::PositiveNumber);
  gen_scenes->add_option("--height", height)->check(CLI::PositiveNumber);
  gen_scenes->add_option("--seed", seed);
  gen_scenes->add_option("--out", out, "output file, '-' for stdout")->required();

  // gen-qa
  std::string scenes_path;
  int n_items = 500;
  auto* gen_qa = app.add_subcommand("gen-qa", "generate QA items (qa.v1 JSONL) cycling through task types");
  gen_qa->add_option("--scenes", scenes_path, "scene JSONL file or directory")->required();
  gen_qa->add_option("--n", n_items)->check(CLI::NonNegativeNumber);
  gen_qa->add_option("--seed", seed);
  gen_qa->add_option("--out", out)->required();

  // eval / run-episode
  std::string qa_path, agent = "oracle", records_path, episode_dir, agent_url, model = "default";
  double r = 0.25;
  int jobs = 1, index = 0;
  eval::EpisodeLimits limits;
  int deadline_ms = 60000;
  BackendOpts bopts;
  auto* eval_cmd = app.add_subcommand("eval", "run episodes and report metrics");
  auto* episode_cmd = app.add_subcommand("run-episode", "run one QA item and print its transcript");
  for (auto* cmd : {eval_cmd, episode_cmd}) {
    cmd->add_option("--qa", qa_path, "QA JSONL")->required();
    cmd->add_option("--agent", agent)->check(CLI::IsMember({"oracle", "notool", "remote"}));
    cmd->add_option("--agent-url", agent_url, "chat-completion endpoint for --agent remote");
    cmd->add_option("--model", model, "model name sent to the remote agent");
    cmd->add_option("--r", r, "relative error margin for numeric answers");
    cmd->add_option("--seed", seed);
    cmd->add_option("--max-calls", limits.max_calls)->check(CLI::NonNegativeNumber);
    cmd->add_option("--max-turns", limits.max_turns)->check(CLI::PositiveNumber);
    cmd->add_option("--deadline-ms", deadline_ms)->check(CLI::PositiveNumber);
    cmd->add_option("--episode-dir", episode_dir, "write rendered images under this directory");
    add_backend_opts(cmd, bopts);
  }
  eval_cmd->add_option("--out", out, "report JSON");
  eval_cmd->add_option("--records", records_path, "per-episode JSONL");
  eval_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  episode_cmd->add_option("--index", index, "item index in the QA file")->check(CLI::NonNegativeNumber);

  // reward
  std::string traj_path, grpo_path, config_path;
  auto* reward_cmd = app.add_subcommand("reward", "score episode records or GRPO batches");
  reward_cmd->add_option("--trajectories", traj_path, "episode records JSONL (as written by eval --records)");
  reward_cmd->add_option("--grpo", grpo_path, "GRPO batches JSONL");
  reward_cmd->add_option("--config", config_path, "reward config JSON");
  reward_cmd->add_option("--out", out, "output JSONL (default stdout)");

  // build-data
  std::string data_kind;
  int n_data = 100;
  double failure_fraction = 0.1875;
  std::string images_dir;
  auto* data_cmd = app.add_subcommand("build-data", "build warm-up pairs or SFT trajectories");
  data_cmd->add_option("kind", data_kind)->required()->check(CLI::IsMember({"warmup", "sft"}));
  data_cmd->add_option("--scenes", scenes_path, "scene JSONL file or directory")->required();
  data_cmd->add_option("--n", n_data)->check(CLI::NonNegativeNumber);
  data_cmd->add_option("--seed", seed);
  data_cmd->add_option("--failure-fraction", failure_fraction)->check(CLI::Range(0.0, 1.0));
  data_cmd->add_option("--images-dir", images_dir, "write rendered images under this directory");
  data_cmd->add_option("--out", out)->required();

  // serve-mock
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string noise_path;
  auto* serve_cmd = app.add_subcommand("serve-mock", "serve synthetic-world oracles over tool.v1");
  serve_cmd->add_option("--scenes", scenes_path, "scene JSONL file or directory")->required();
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--noise", noise_path);
  serve_cmd->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  if (*gen_scenes) {
    world::SceneParams params;
    params.n_objects = n_objects;
    params.width = width;
    params.height = height;
    std::vector<json> rows;
    for (int i = 0; i < n_scenes; ++i) {
      auto s = world::generate_scene(seed + static_cast<std::uint64_t>(i), params);
      if (!s) die("scene " + std::to_string(i) + ": " + s.error().message);
      rows.push_back(world::scene_to_json(*s));
    }
    write_rows(out, rows);
    return 0;
  }

  if (*gen_qa) {
    const auto scenes = load_scenes(scenes_path);
    std::vector<json> rows;
    for (const auto& item : data::sample_items(scenes, n_items, seed)) rows.push_back(world::qa_to_json(item));
    write_rows(out, rows);
    return 0;
  }

  if (*eval_cmd || *episode_cmd) {
    auto items = world::read_qa(qa_path);
    if (!items) die(qa_path + ":" + std::to_string(items.error().line) + ": " + items.error().message);
    if (agent == "remote" && agent_url.empty()) die("--agent remote needs --agent-url");
    const auto toolbox = make_toolbox(bopts);
    eval::EpisodeOptions options;
    options.limits = limits;
    options.limits.deadline = std::chrono::milliseconds(deadline_ms);
    options.r = r;
    options.seed = seed;
    if (!episode_dir.empty()) options.episode_dir = episode_dir;
    eval::RemoteAgentConfig remote;
    remote.endpoint = agent_url;
    remote.model = model;
    if (const char* key = std::getenv("HINTBOX_AGENT_API_KEY")) remote.api_key = key;

    if (*episode_cmd) {
      if (index >= static_cast<int>(items->size())) die("index out of range");
      auto a = make_agent(agent, remote);
      const auto rec = eval::run_episode(*a, (*items)[static_cast<std::size_t>(index)], toolbox, options);
      std::cout << (*items)[static_cast<std::size_t>(index)].question << "\n\n" << rec.transcript << "\n\n"
                << eval::record_to_json(rec).dump(2) << "\n";
      return 0;
    }
    const auto records = eval::run_eval(*items, [&] { return make_agent(agent, remote); }, toolbox, options, jobs);
    auto report = eval::compute_metrics(records);
    if (!report) die(report.error().message);
    std::cout << "kernels: " << kernels::isa_name(kernels::active().isa) << "\n" << eval::report_table(*report);
    if (!out.empty()) {
      std::ofstream f(out);
      f << eval::report_to_json(*report).dump(2) << "\n";
      if (!f) die("cannot write " + out);
    }
    if (!records_path.empty()) {
      std::vector<json> rows;
      for (const auto& rec : records) rows.push_back(eval::record_to_json(rec));
      write_rows(records_path, rows);
    }
    return 0;
  }

  if (*reward_cmd) {
    reward::RewardConfig cfg;
    if (!config_path.empty()) {
      auto c = reward::load_config(config_path);
      if (!c) die(c.error().message);
      cfg = *c;
    }
    if (traj_path.empty() == grpo_path.empty()) die("give exactly one of --trajectories or --grpo");
    auto rows = world::read_jsonl(traj_path.empty() ? grpo_path : traj_path);
    if (!rows) die(rows.error().message + " (line " + std::to_string(rows.error().line) + ")");
    std::vector<json> results;
    std::size_t line = 0;
    for (const auto& row : *rows) {
      ++line;
      try {
        if (!grpo_path.empty()) {
          auto batch = reward::batch_from_json(row, cfg);
          if (!batch) die("line " + std::to_string(line) + ": " + batch.error().message);
          auto res = reward::grpo_surrogate(*batch);
          if (!res) die("line " + std::to_string(line) + ": " + std::string(reward::reward_error_name(res.error().kind)) +
                        ": " + res.error().message);
          results.push_back(reward::result_to_json(*res));
          continue;
        }
        const auto kind = row.value("answer_kind", std::string("choice")) == "numeric" ? grammar::AnswerKind::Numeric
                                                                                       : grammar::AnswerKind::MultipleChoice;
        const auto gt = reward::normalize_ground_truth(row.at("gt").get<std::string>(), kind);
        if (!gt) die("line " + std::to_string(line) + ": unreadable ground truth");
        const auto text = row.contains("transcript") ? row["transcript"].get<std::string>() : row.at("text").get<std::string>();
        std::vector<char> ok;
        for (const auto& c : row.value("tool_calls", json::array())) ok.push_back(c.value("outcome", "") == "Success");
        auto flags = std::make_unique<bool[]>(ok.size());
        std::copy(ok.begin(), ok.end(), flags.get());
        std::optional<bool> correct;
        if (row.contains("answer_correct") && row["answer_correct"].is_boolean()) correct = row["answer_correct"].get<bool>();
        const auto b = reward::score_rollout(text, *gt, std::span<const bool>(flags.get(), ok.size()), cfg, correct);
        auto j = reward::breakdown_to_json(b);
        if (row.contains("qa_id")) j["qa_id"] = row["qa_id"];
        results.push_back(j);
      } catch (const std::exception& e) {
        die("line " + std::to_string(line) + ": " + e.what());
      }
    }
    write_rows(out, results);
    return 0;
  }

  if (*data_cmd) {
    const auto scenes = load_scenes(scenes_path);
    const auto toolbox = skills::make_toolbox(std::make_shared<world::OracleBackend>());
    std::optional<fs::path> dir;
    if (!images_dir.empty()) dir = images_dir;
    std::vector<json> rows;
    if (data_kind == "warmup") {
      for (const auto& p : data::build_warmup(scenes, n_data, seed, toolbox, dir)) rows.push_back(data::warmup_to_json(p));
    } else {
      const auto items = data::sample_items(scenes, n_data, seed);
      auto trajs = data::build_sft(items, toolbox, failure_fraction, seed, dir);
      if (!trajs) die(trajs.error().message);
      std::size_t failures = 0;
      for (const auto& t : *trajs) {
        failures += t.failure_injected ? 1 : 0;
        rows.push_back(data::sft_to_json(t));
      }
      std::cerr << fmt::format("{} trajectories, {} with injected failures\n", trajs->size(), failures);
    }
    write_rows(out, rows);
    return 0;
  }

  if (*serve_cmd) {
    backend::SceneStore store;
    for (auto& s : load_scenes(scenes_path)) store.emplace(s.id, std::move(s));
    backend::MockOptions opts;
    opts.host = host;
    opts.port = port;
    opts.noise = load_noise(noise_path);
    opts.seed = seed;
    // Block the signals before the server threads start so only sigwait sees them.
    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &sigs, nullptr);
    auto server = backend::MockServer::start(std::move(store), opts);
    if (!server) die(server.error().message);
    std::cout << "serving " << (*server)->url() << std::string(backend::kAtomicPath) << std::endl;
    int sig = 0;
    sigwait(&sigs, &sig);
    (*server)->stop();
    std::cerr << "handled " << (*server)->handled() << " requests\n";
    return 0;
  }
  return 0;
}
