#include "slotnav/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "slotnav/error.hpp"
#include "slotnav/eval/runner.hpp"
#include "slotnav/world/observation.hpp"

namespace slotnav::trainer {

using nlohmann::json;
using nlohmann::ordered_json;
using numkit::GradBuffer;
using numkit::Matrix;
using numkit::Tape;
using numkit::Var;

double ss_probability(std::size_t step, std::size_t freq, double ratio) {
  if (freq == 0) fail(ErrorKind::Config, "ss_probability: freq must be positive");
  double p = 1.0;
  for (std::size_t k = step / freq; k > 0; --k) p *= ratio;
  return p;
}

AdamState make_adam_state(const numkit::ParamSet& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.rows(), p.value.cols());
    s.v.emplace_back(p.value.rows(), p.value.cols());
  }
  return s;
}

double learning_rate(const TrainConfig& c, std::size_t step) {
  if (c.lr_decay_steps == 0) return c.lr;
  const double f = static_cast<double>(std::min(step, c.lr_decay_steps)) / static_cast<double>(c.lr_decay_steps);
  return c.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * f));
}

void adamw_step(numkit::ParamSet& params, const GradBuffer& grads, AdamState& state, const TrainConfig& c,
                double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    fail(ErrorKind::Config, "adamw_step: parameter/gradient/moment counts differ");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& w = params[i].value;
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    const Matrix& g = grads[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mh = m[k] / bc1;
      const double vh = v[k] / bc2;
      w[k] -= lr * (mh / (std::sqrt(vh) + c.adam_eps) + c.weight_decay * w[k]);
    }
  }
}

Var episode_loss(Tape& tape, const pgm::Model& model, const world::Scene& scene, const world::Episode& episode,
                 const TrainConfig& config, double ss_p, std::uint64_t stream, EpisodeStats* stats) {
  const std::size_t T = episode.waypoints.size();
  if (T == 0) fail(ErrorKind::Input, "episode has no waypoints");
  const world::WorldConfig& wc = model.world();
  const double inv_scale = 1.0 / wc.step_max;

  pgm::Rollout rollout(model, episode.instruction, &tape);
  world::Pose pose = episode.start;
  Var wp_sum = tape.constant(Matrix(1, 1));
  Var bce_sum = tape.constant(Matrix(1, 1));
  double mse_m2 = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const world::Vec3 here = pose.position();
    const pgm::StepResult r = rollout.step(world::observe(scene, wc, pose), here);
    const world::Vec3 y = rollout.head_target(here, episode.waypoints[t]);
    const Var diff = tape.sub(r.head, tape.constant(Matrix::row({y.x, y.y, y.z})));
    wp_sum = tape.add(wp_sum, tape.sum_squares(tape.scale(diff, inv_scale)));
    bce_sum = tape.add(bce_sum, tape.bce_with_logits(r.stop, t + 1 == T ? 1.0 : 0.0));
    const Matrix& d = tape.value(diff);
    mse_m2 += d[0] * d[0] + d[1] * d[1] + d[2] * d[2];

    const bool teacher = numkit::hash_uniform(numkit::derive_seed(stream, {t})) < ss_p;
    pose = world::step(pose, teacher ? episode.waypoints[t] : r.waypoint, wc.bounds);
  }
  const double inv_t = 1.0 / static_cast<double>(T);
  const Var wp = tape.scale(wp_sum, inv_t);
  const Var bce = tape.scale(bce_sum, inv_t);
  const Var loss = tape.add(wp, tape.scale(bce, config.stop_weight));
  if (stats) {
    stats->loss = tape.value(loss)[0];
    stats->waypoint_mse = mse_m2 * inv_t;
    stats->stop_bce = tape.value(bce)[0];
    stats->steps = T;
  }
  return loss;
}

Trainer::Trainer(const TrainConfig& config, const world::WorldConfig& world, std::vector<world::Episode> train)
    : config_(config), world_(world), train_(std::move(train)) {
  config_.validate();
  world_.validate();
  scenes_.reserve(train_.size());
  for (const auto& e : train_) scenes_.push_back(world::generate_scene(e.scene_seed, world_));
  model_ = std::make_unique<pgm::Model>(config_.model, world_);
  adam_ = make_adam_state(model_->params());
}

std::size_t Trainer::steps_per_epoch() const noexcept {
  return (train_.size() + config_.batch_size - 1) / config_.batch_size;
}

std::vector<std::size_t> Trainer::batch_indices(std::size_t step) const {
  const std::size_t spe = steps_per_epoch();
  if (spe == 0) fail(ErrorKind::Input, "training split is empty");
  const std::size_t epoch = step / spe;
  const std::size_t b = step % spe;
  std::vector<std::size_t> perm(train_.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  numkit::Rng rng(numkit::derive_seed(config_.seed, {0xe90c, epoch}));
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const std::size_t lo = b * config_.batch_size;
  const std::size_t hi = std::min(lo + config_.batch_size, perm.size());
  return {perm.begin() + static_cast<std::ptrdiff_t>(lo), perm.begin() + static_cast<std::ptrdiff_t>(hi)};
}

StepStats Trainer::step() {
  const std::size_t g = global_step_;
  const std::vector<std::size_t> batch = batch_indices(g);
  const double ss_p = ss_probability(g, config_.ss_freq, config_.ss_ratio);
  const std::size_t n = batch.size();

  std::vector<GradBuffer> grads(n);
  std::vector<EpisodeStats> stats(n);
  auto run_one = [&](std::size_t k) {
    const std::size_t idx = batch[k];
    Tape tape;
    const Var loss = episode_loss(tape, *model_, scenes_[idx], train_[idx], config_, ss_p,
                                  numkit::derive_seed(config_.seed, {0x55, g, idx}), &stats[k]);
    if (!std::isfinite(stats[k].loss)) {
      fail(ErrorKind::Numeric, "non-finite loss at step " + std::to_string(g) + " on training episode " +
                                   std::to_string(idx));
    }
    tape.backward(loss);
    grads[k] = GradBuffer(model_->params());
    tape.accumulate_param_grads(grads[k]);
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(config_.jobs, n));
  if (jobs == 1) {
    for (std::size_t k = 0; k < n; ++k) run_one(k);
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < n; k += jobs) run_one(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Fixed-order reduction keeps the sum independent of scheduling.
  GradBuffer total(model_->params());
  StepStats out;
  out.step = g;
  out.epoch = g / steps_per_epoch();
  out.ss_p = ss_p;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    total.add_scaled(grads[k], inv_n);
    out.loss += stats[k].loss * inv_n;
    out.waypoint_mse += stats[k].waypoint_mse * inv_n;
    out.stop_bce += stats[k].stop_bce * inv_n;
  }
  if (!total.all_finite()) fail(ErrorKind::Numeric, "non-finite gradient at step " + std::to_string(g));
  out.lr = learning_rate(config_, g);
  adamw_step(model_->params(), total, adam_, config_, out.lr);
  ++global_step_;
  return out;
}

namespace {

ordered_json matrix_values(const Matrix& m) {
  ordered_json a = ordered_json::array();
  for (double v : m.values()) a.push_back(v);
  return a;
}

void load_values(Matrix& m, const json& a, const std::string& what) {
  if (!a.is_array() || a.size() != m.size()) fail(ErrorKind::Input, "checkpoint: size mismatch for " + what);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = a[i].get<double>();
}

void load_params(numkit::ParamSet& params, const json& list) {
  if (!list.is_array() || list.size() != params.size()) {
    fail(ErrorKind::Input, "checkpoint: parameter count differs from the model");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& e = list[i];
    numkit::Parameter& p = params[i];
    if (e.at("name").get<std::string>() != p.name || e.at("rows").get<std::size_t>() != p.value.rows() ||
        e.at("cols").get<std::size_t>() != p.value.cols()) {
      fail(ErrorKind::Input, "checkpoint: parameter " + std::to_string(i) + " does not match '" + p.name + "' " +
                                 p.value.shape_string());
    }
    load_values(p.value, e.at("values"), p.name);
  }
}

void check_header(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) fail(ErrorKind::Input, "checkpoint: missing schema_version");
  if (j.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
    fail(ErrorKind::Input, "checkpoint: unsupported schema_version " + j.at("schema_version").dump());
  }
}

}  // namespace

ordered_json Trainer::checkpoint() const {
  ordered_json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["config_hash"] = config_hash(config_, world_);
  j["global_step"] = global_step_;
  j["best_val_ne"] = best_val_ne ? ordered_json(*best_val_ne) : ordered_json(nullptr);
  j["world"] = world::to_json(world_);
  j["config"] = to_json(config_);
  ordered_json params = ordered_json::array();
  for (const auto& p : model_->params()) {
    ordered_json e;
    e["name"] = p.name;
    e["rows"] = p.value.rows();
    e["cols"] = p.value.cols();
    e["values"] = matrix_values(p.value);
    params.push_back(std::move(e));
  }
  j["params"] = std::move(params);
  ordered_json adam;
  adam["t"] = adam_.t;
  ordered_json m = ordered_json::array(), v = ordered_json::array();
  for (std::size_t i = 0; i < adam_.m.size(); ++i) {
    m.push_back(matrix_values(adam_.m[i]));
    v.push_back(matrix_values(adam_.v[i]));
  }
  adam["m"] = std::move(m);
  adam["v"] = std::move(v);
  j["adam"] = std::move(adam);
  return j;
}

void Trainer::restore(const json& j) {
  check_header(j);
  try {
    const std::string want = config_hash(config_, world_);
    if (j.at("config_hash").get<std::string>() != want) {
      fail(ErrorKind::Config, "checkpoint config hash " + j.at("config_hash").get<std::string>() +
                                  " does not match the current config (" + want + ")");
    }
    load_params(model_->params(), j.at("params"));
    const json& adam = j.at("adam");
    adam_.t = adam.at("t").get<std::uint64_t>();
    for (std::size_t i = 0; i < adam_.m.size(); ++i) {
      load_values(adam_.m[i], adam.at("m").at(i), "adam.m");
      load_values(adam_.v[i], adam.at("v").at(i), "adam.v");
    }
    global_step_ = j.at("global_step").get<std::size_t>();
    best_val_ne.reset();
    if (!j.at("best_val_ne").is_null()) best_val_ne = j.at("best_val_ne").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Input, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ordered_json& checkpoint, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write checkpoint " + path);
    out << checkpoint.dump() << "\n";
    if (!out) fail(ErrorKind::Io, "write failed for " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move checkpoint into place at " + path + ": " + ec.message());
}

json read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Input, path + ": " + e.what());
  }
}

LoadedModel load_model(const std::string& path) {
  const json j = read_checkpoint(path);
  check_header(j);
  LoadedModel out;
  try {
    out.config = train_config_from_json(j.at("config"));
    out.world = world::world_config_from_json(j.at("world"));
    if (j.at("config_hash").get<std::string>() != config_hash(out.config, out.world)) {
      fail(ErrorKind::Input, path + ": stored config hash does not match the stored configs");
    }
    out.model = std::make_unique<pgm::Model>(out.config.model, out.world);
    load_params(out.model->params(), j.at("params"));
    out.global_step = j.at("global_step").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Input, path + ": " + e.what());
  }
  return out;
}

std::vector<eval::TrajectoryLog> rollout_model(const pgm::Model& model, const world::WorldConfig& world,
                                               const std::vector<world::Episode>& episodes,
                                               std::size_t max_steps, std::size_t jobs) {
  return eval::run_episodes(eval::make_policy_factory(eval::PolicyKind::Model, &model, world), episodes, world,
                            max_steps, jobs);
}

namespace {

ordered_json metrics_json(const eval::SplitMetrics& m) {
  ordered_json j;
  j["ne"] = m.ne;
  j["sr"] = m.sr;
  j["osr"] = m.osr;
  j["spl"] = m.spl;
  j["n"] = m.n;
  return j;
}

}  // namespace

TrainSummary train(const TrainConfig& config, const world::WorldConfig& world,
                   const std::vector<world::Episode>& train_set, const std::vector<world::Episode>& val,
                   const TrainOutputs& out, const std::string& resume,
                   const std::function<void(const std::string&)>& progress) {
  std::error_code ec;
  std::filesystem::create_directories(out.dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + out.dir + ": " + ec.message());

  Trainer tr(config, world, train_set);
  if (!resume.empty()) tr.restore(read_checkpoint(resume));

  std::ofstream log(out.log(), resume.empty() ? std::ios::binary | std::ios::trunc : std::ios::binary | std::ios::app);
  if (!log) fail(ErrorKind::Io, "cannot write training log " + out.log());

  const std::size_t spe = tr.steps_per_epoch();
  const std::size_t total = config.max_steps > 0 ? (spe > 0 ? config.max_steps : 0) : spe * config.epochs;
  const std::size_t val_every = config.val_every > 0 ? config.val_every : std::max<std::size_t>(spe, 1);
  std::vector<world::Episode> val_set = val;
  if (config.val_episodes > 0 && val_set.size() > config.val_episodes) val_set.resize(config.val_episodes);

  TrainSummary summary;
  bool best_saved = false;
  auto validate = [&] {
    if (val_set.empty()) return;
    const auto logs = rollout_model(tr.model(), world, val_set, config.max_episode_steps, config.jobs);
    const eval::SplitMetrics m = eval::aggregate(logs);
    summary.last_val = m;
    ordered_json line;
    line["step"] = tr.global_step();
    line["epoch"] = spe ? tr.global_step() / spe : 0;
    line["val"] = metrics_json(m);
    log << line.dump() << "\n";
    if (!tr.best_val_ne || m.ne < *tr.best_val_ne) {
      tr.best_val_ne = m.ne;
      save_checkpoint(tr.checkpoint(), out.best());
      best_saved = true;
    }
    save_checkpoint(tr.checkpoint(), out.last());
    if (progress) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "step %zu/%zu  val NE %.2f m  SR %.1f%%  OSR %.1f%%  SPL %.1f%%",
                    tr.global_step(), total, m.ne, m.sr, m.osr, m.spl);
      progress(buf);
    }
  };

  while (tr.global_step() < total) {
    const StepStats s = tr.step();
    ordered_json line;
    line["step"] = s.step;
    line["epoch"] = s.epoch;
    line["loss"] = s.loss;
    line["wp_mse_m2"] = s.waypoint_mse;
    line["stop_bce"] = s.stop_bce;
    line["ss_p"] = s.ss_p;
    line["lr"] = s.lr;
    log << line.dump() << "\n";
    if (!log) fail(ErrorKind::Io, "write failed for " + out.log());
    if (tr.global_step() % val_every == 0 || tr.global_step() == total) validate();
  }

  save_checkpoint(tr.checkpoint(), out.last());
  if (!best_saved && (!std::filesystem::exists(out.best()) || resume.empty())) {
    save_checkpoint(tr.checkpoint(), out.best());
  }
  summary.steps = tr.global_step();
  summary.best_val_ne = tr.best_val_ne;
  return summary;
}

}  // namespace slotnav::trainer
