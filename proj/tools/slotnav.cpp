// Command-line front end: gen-data, train, eval, grad-check, inspect-prompt.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slotnav/error.hpp"
#include "slotnav/eval/metrics.hpp"
#include "slotnav/eval/runner.hpp"
#include "slotnav/trainer/config.hpp"
#include "slotnav/trainer/grad_audit.hpp"
#include "slotnav/trainer/trainer.hpp"
#include "slotnav/world/dataset.hpp"

using namespace slotnav;
using nlohmann::json;

namespace {

constexpr double kGradTolerance = 1e-4;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Io:
    case ErrorKind::Input: return 3;
    case ErrorKind::Numeric: return 4;
    default: return 1;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

void require_dir(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::Io, "dataset directory " + dir + " does not exist");
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void print_split_summary(const std::string& name, const std::vector<world::Episode>& eps) {
  std::vector<double> lens;
  std::size_t hard = 0;
  for (const auto& e : eps) {
    lens.push_back(e.path_length());
    hard += e.difficulty == world::Difficulty::Hard;
  }
  if (eps.empty()) {
    std::printf("%-5s %5zu episodes\n", name.c_str(), eps.size());
    std::fprintf(stderr, "warning: split '%s' is empty\n", name.c_str());
    return;
  }
  std::printf("%-5s %5zu episodes (easy %zu, hard %zu)  path length min %.1f / median %.1f / max %.1f m\n",
              name.c_str(), eps.size(), eps.size() - hard, hard, *std::min_element(lens.begin(), lens.end()),
              median(lens), *std::max_element(lens.begin(), lens.end()));
}

struct GenArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  bool seed_set = false;
  world::CorpusSpec spec;
  std::vector<std::string> overrides;
};

int cmd_gen_data(const GenArgs& a) {
  json j = a.config.empty() ? json(world::to_json(world::WorldConfig{})) : read_json_file(a.config);
  if (a.seed_set) j["seed"] = a.seed;
  trainer::apply_overrides(j, a.overrides);
  const world::WorldConfig wc = world::world_config_from_json(j);
  if (!(a.spec.hard_fraction >= 0.0 && a.spec.hard_fraction <= 1.0)) {
    fail(ErrorKind::Config, "--hard-fraction must lie in [0, 1]");
  }
  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + a.out + ": " + ec.message());
  const world::Corpus c = world::generate_corpus(wc, a.spec);
  world::write_corpus(c, wc, {a.out});
  std::printf("wrote %s (seed %llu)\n", a.out.c_str(), static_cast<unsigned long long>(wc.seed));
  print_split_summary("train", c.train);
  print_split_summary("val", c.val);
  print_split_summary("test", c.test);
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::string resume;
  bool no_shic = false;
  bool no_ste = false;
  int jobs = 0;
  std::vector<std::string> overrides;
};

int cmd_train(const TrainArgs& a) {
  require_dir(a.data);
  json j = a.config.empty() ? json(trainer::to_json(trainer::TrainConfig{})) : read_json_file(a.config);
  trainer::apply_overrides(j, a.overrides);
  if (a.no_shic) j["model"]["use_shic"] = false;
  if (a.no_ste) j["model"]["use_ste"] = false;
  if (a.jobs > 0) j["train"]["jobs"] = a.jobs;
  const trainer::TrainConfig tc = trainer::train_config_from_json(j);
  const world::DatasetPaths paths{a.data};
  const world::WorldConfig wc = world::load_world_config(paths.world());
  const auto train_set = world::read_episodes(paths.split("train"));
  const auto val = world::read_episodes(paths.split("val"));
  if (train_set.empty()) std::fprintf(stderr, "warning: training split is empty; nothing to fit\n");

  const trainer::TrainOutputs out{a.out};
  const auto summary = trainer::train(tc, wc, train_set, val, out, a.resume,
                                      [](const std::string& s) { std::printf("%s\n", s.c_str()); });
  std::printf("trained %zu steps; checkpoints in %s\n", summary.steps, a.out.c_str());
  if (summary.best_val_ne) std::printf("best validation NE %.2f m\n", *summary.best_val_ne);
  return 0;
}

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  std::string report;
  std::string logs;
  std::string policy = "model";
  bool no_shic = false;
  bool no_ste = false;
  int jobs = 1;
  std::size_t max_steps = eval::kDefaultMaxSteps;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a) {
  require_dir(a.data);
  const auto kind = eval::policy_kind_from_string(a.policy);
  const world::DatasetPaths paths{a.data};
  world::WorldConfig wc = world::load_world_config(paths.world());
  const auto episodes = world::read_episodes(paths.split(a.split));

  trainer::LoadedModel loaded;
  std::unique_ptr<pgm::Model> model;
  if (kind == eval::PolicyKind::Model) {
    if (a.ckpt.empty()) fail(ErrorKind::Config, "--ckpt is required for the model policy");
    loaded = trainer::load_model(a.ckpt);
    if (a.no_shic || a.no_ste) {
      // Same weights, history segments dropped from the prompt.
      pgm::ModelConfig mc = loaded.config.model;
      if (a.no_shic) mc.use_shic = false;
      if (a.no_ste) mc.use_ste = false;
      model = std::make_unique<pgm::Model>(mc, loaded.world);
      for (std::size_t i = 0; i < model->params().size(); ++i) {
        model->params()[i].value = loaded.model->params().find(model->params()[i].name)->value;
      }
    } else {
      model = std::move(loaded.model);
    }
  }
  const auto logs = eval::run_episodes(eval::make_policy_factory(kind, model.get(), wc, a.seed), episodes, wc,
                                       a.max_steps, static_cast<std::size_t>(std::max(1, a.jobs)));
  const eval::MetricReport r = eval::make_report(logs);
  std::printf("%s", eval::report_table(r, a.policy + " on " + a.split).c_str());
  if (!a.report.empty()) {
    write_text(a.report, eval::report_to_json(r).dump(2) + "\n");
    const std::string log_path =
        a.logs.empty() ? (std::filesystem::path(a.report).replace_extension("").string() + ".trajectories.jsonl")
                       : a.logs;
    eval::write_logs(logs, log_path);
  } else if (!a.logs.empty()) {
    eval::write_logs(logs, a.logs);
  }
  return 0;
}

int cmd_grad_check(std::size_t dims, double eps) {
  trainer::GradAuditOptions o;
  o.dims = dims;
  o.eps = eps;
  const auto entries = trainer::grad_audit(o);
  double worst = 0.0;
  for (const auto& e : entries) {
    std::printf("%-16s %3zu tensors  max rel err %.3e  %s\n", e.group.c_str(), e.tensors.size(), e.max_rel_error,
                e.max_rel_error < kGradTolerance ? "ok" : "FAIL");
    worst = std::max(worst, e.max_rel_error);
  }
  std::printf("worst %.3e (tolerance %.0e)\n", worst, kGradTolerance);
  if (worst >= kGradTolerance) fail(ErrorKind::Numeric, "gradient check exceeded tolerance");
  return 0;
}

struct InspectArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  std::size_t episode = 0;
  std::size_t step = 1;
};

int cmd_inspect_prompt(const InspectArgs& a) {
  require_dir(a.data);
  const world::DatasetPaths paths{a.data};
  const auto episodes = world::read_episodes(paths.split(a.split));
  if (a.episode >= episodes.size()) {
    fail(ErrorKind::Config, "--episode " + std::to_string(a.episode) + " out of range (split has " +
                                std::to_string(episodes.size()) + ")");
  }
  std::unique_ptr<pgm::Model> model;
  world::WorldConfig wc = world::load_world_config(paths.world());
  if (a.ckpt.empty()) {
    model = std::make_unique<pgm::Model>(pgm::ModelConfig{}, wc);
  } else {
    auto loaded = trainer::load_model(a.ckpt);
    model = std::move(loaded.model);
  }
  const world::Episode& ep = episodes[a.episode];
  const world::Scene scene = world::generate_scene(ep.scene_seed, model->world());
  std::printf("%s", pgm::render_prompt_text(pgm::replay_prompt(*model, scene, ep, a.step)).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slotnav: slot-memory waypoint navigation toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "generate train/val/test episode splits");
  g->add_option("--config", gen.config, "world config JSON (defaults built in)");
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--seed", gen.seed, "world seed")->each([&](const std::string&) { gen.seed_set = true; });
  g->add_option("--n-train", gen.spec.n_train);
  g->add_option("--n-val", gen.spec.n_val);
  g->add_option("--n-test", gen.spec.n_test);
  g->add_option("--hard-fraction", gen.spec.hard_fraction);
  g->add_option("--episodes-per-scene", gen.spec.episodes_per_scene);
  g->add_option("overrides", gen.overrides, "world config overrides key=value");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a model");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--config", tr.config, "train config JSON");
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--resume", tr.resume, "checkpoint to continue from");
  t->add_flag("--no-shic", tr.no_shic, "drop the slot memory (SLOTS segments)");
  t->add_flag("--no-ste", tr.no_ste, "drop the trajectory encoding (TRAJ segment)");
  t->add_option("--jobs", tr.jobs, "parallel episodes per batch");
  t->add_option("overrides", tr.overrides, "config overrides, e.g. train.lr=5e-4 model.slots=8");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "closed-loop evaluation");
  e->add_option("--ckpt", ev.ckpt, "checkpoint (model policy)");
  e->add_option("--data", ev.data, "dataset directory")->required();
  e->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("--report", ev.report, "report JSON path");
  e->add_option("--logs", ev.logs, "trajectory log JSONL path");
  e->add_option("--policy", ev.policy, "model|random|fixed|gt");
  e->add_flag("--no-shic", ev.no_shic);
  e->add_flag("--no-ste", ev.no_ste);
  e->add_option("--jobs", ev.jobs);
  e->add_option("--max-steps", ev.max_steps);
  e->add_option("--seed", ev.seed, "seed for the random policy");

  std::size_t dims = 8;
  double eps = 1e-5;
  auto* gc = app.add_subcommand("grad-check", "finite-difference audit of every trainable tensor");
  gc->add_option("--dims", dims);
  gc->add_option("--eps", eps);

  InspectArgs ins;
  auto* ip = app.add_subcommand("inspect-prompt", "print the rendered prompt for one episode step");
  ip->add_option("--ckpt", ins.ckpt, "checkpoint (fresh init when omitted)");
  ip->add_option("--data", ins.data, "dataset directory")->required();
  ip->add_option("--split", ins.split)->check(CLI::IsMember({"train", "val", "test"}));
  ip->add_option("--episode", ins.episode);
  ip->add_option("--step", ins.step, "1-based step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*g) return cmd_gen_data(gen);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*gc) return cmd_grad_check(dims, eps);
    if (*ip) return cmd_inspect_prompt(ins);
  } catch (const Error& err) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(err.kind()), err.what());
    return exit_code(err.kind());
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
