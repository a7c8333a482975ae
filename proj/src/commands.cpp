#include "genrl/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <thread>

#include "genrl/empolicy/em.hpp"
#include "genrl/error.hpp"
#include "genrl/evalmetrics/dipr.hpp"
#include "genrl/evalmetrics/dwpr.hpp"
#include "genrl/evalmetrics/knn_pr.hpp"
#include "genrl/evalmetrics/l3.hpp"
#include "genrl/evalmetrics/pearson.hpp"
#include "genrl/genmodels/infogan.hpp"
#include "genrl/genmodels/vae.hpp"
#include "genrl/io/csv.hpp"
#include "genrl/io/json_io.hpp"

namespace genrl::cli {

using io::json;
using io::RunManifest;
using numkit::RngStream;

namespace {

// Fixed stream ids keep every command's randomness disjoint from the
// library-internal streams of the routines it drives.
constexpr std::uint64_t kGenDataStream = 11;
constexpr std::uint64_t kGridSeedStream = 12;
constexpr std::uint64_t kPolicyStream = 13;
constexpr std::uint64_t kEvalStream = 14;
constexpr std::uint64_t kCorrelateStream = 15;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ContractError("cannot create output directory '" + dir + "': " + ec.message());
}

json load_config(const CommandArgs& args) {
  require(!args.config_path.empty(), "a --config file is required");
  return io::load_json(args.config_path);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  require(j.is_object(), std::string(where) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) known = true;
    if (!known) throw ContractError(std::string(where) + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
T field(const json& j, const char* key, const T& def) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return def;
  return it->get<T>();
}

std::uint64_t resolve_seed(const CommandArgs& args, const json& raw) {
  return args.seed ? *args.seed : field<std::uint64_t>(raw, "seed", 0);
}

RunManifest begin_manifest(const char* command, const CommandArgs& args, json resolved,
                           std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config_path = args.config_path;
  m.config = std::move(resolved);
  m.root_seed = seed;
  m.add_input(args.config_path);
  return m;
}

RunManifest finish(RunManifest m, const std::string& out_dir, const Timer& timer) {
  m.wall_clock_seconds = timer.seconds();
  io::write_manifest(join_path(out_dir, "manifest.json"), m);
  return m;
}

trajenv::Environment env_by_name(const std::string& name) {
  return trajenv::exe_kind_from_name(name) == trajenv::ExeKind::LinearIntegrator
             ? trajenv::make_linear_env()
             : trajenv::make_two_link_arm_env();
}

// Rebuilds the execution map a dataset was generated under.
trajenv::Environment env_for_dataset(const trajenv::TrajectoryDataset& data) {
  trajenv::Environment env = env_by_name(data.manifest.env_kind);
  env.horizon = data.horizon;
  require(env.action_dim == data.action_dim, "dataset action_dim disagrees with the environment");
  return env;
}

// Runs fn(0..count-1) on up to jobs threads. Exceptions rethrow on the
// caller thread, lowest index first.
void run_pool(std::size_t jobs, std::size_t count, const std::function<void(std::size_t)>& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (std::size_t t = 0; t < jobs; ++t) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

// Flat metric view shared by the CSV export, correlate, and report. Order
// is the canonical column order.
constexpr const char* kMetricColumns[] = {"precision",    "recall",      "dip",
                                          "dir",          "dwpr_delta1", "dwpr_delta2",
                                          "dwpr_delta_avg", "l3"};

std::map<std::string, double> flatten_metrics(const json& report) {
  std::map<std::string, double> out;
  for (const char* key : {"precision", "recall", "dip", "dir", "l3"})
    if (report.contains(key)) out[key] = report.at(key).get<double>();
  if (report.contains("dwpr")) {
    const json& d = report.at("dwpr");
    out["dwpr_delta1"] = d.at("delta1").get<double>();
    out["dwpr_delta2"] = d.at("delta2").get<double>();
    out["dwpr_delta_avg"] = d.at("delta_avg").get<double>();
  }
  return out;
}

[[noreturn]] void bad_config(const char* command, const json::exception& e) {
  throw ContractError(std::string(command) + ": bad config: " + e.what());
}

}  // namespace

RunManifest run_gen_data(const CommandArgs& args) {
  const Timer timer;
  const json raw = load_config(args);
  json cfg;
  trajenv::Environment env;
  std::size_t count = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  try {
    check_keys(raw, {"env", "count", "noise_scale", "seed", "horizon", "action_limit",
                     "goal_region"},
               "gen-data");
    const std::string env_name = field<std::string>(raw, "env", "linear");
    env = env_by_name(env_name);
    env.horizon = field<std::size_t>(raw, "horizon", env.horizon);
    env.action_limit = field<double>(raw, "action_limit", env.action_limit);
    if (raw.contains("goal_region") && !raw.at("goal_region").is_null()) {
      const json& r = raw.at("goal_region");
      check_keys(r, {"xmin", "xmax", "ymin", "ymax"}, "gen-data goal_region");
      env.goal_region.xmin = r.at("xmin").get<double>();
      env.goal_region.xmax = r.at("xmax").get<double>();
      env.goal_region.ymin = r.at("ymin").get<double>();
      env.goal_region.ymax = r.at("ymax").get<double>();
    }
    count = field<std::size_t>(raw, "count", 4000);
    noise = field<double>(raw, "noise_scale", 0.1);
    seed = resolve_seed(args, raw);
    cfg = json{{"env", env_name},
               {"count", count},
               {"noise_scale", noise},
               {"seed", seed},
               {"horizon", env.horizon},
               {"action_limit", env.action_limit},
               {"goal_region",
                json{{"xmin", env.goal_region.xmin},
                     {"xmax", env.goal_region.xmax},
                     {"ymin", env.goal_region.ymin},
                     {"ymax", env.goal_region.ymax}}}};
  } catch (const json::exception& e) {
    bad_config("gen-data", e);
  }
  require(count >= 1, "gen-data: count must be at least 1");
  require(noise >= 0.0, "gen-data: noise_scale must be nonnegative");
  require(env.horizon >= 1, "gen-data: horizon must be at least 1");
  require(env.action_limit > 0.0, "gen-data: action_limit must be positive");
  require(env.goal_region.xmin < env.goal_region.xmax &&
              env.goal_region.ymin < env.goal_region.ymax,
          "gen-data: goal region must have positive area");

  ensure_out_dir(args.out_dir);
  RunManifest m = begin_manifest("gen-data", args, cfg, seed);
  const std::string id = m.manifest_id();

  RngStream rng(seed, kGenDataStream);
  const trajenv::TrajectoryDataset data = trajenv::gen_demos(env, count, noise, rng);

  io::save_dataset(join_path(args.out_dir, "dataset.json"), data, id);
  io::CsvTable ends;
  ends.header = {"x", "y"};
  for (std::size_t i = 0; i < data.count(); ++i)
    ends.rows.push_back({io::format_double(data.end_states(i, 0)),
                         io::format_double(data.end_states(i, 1))});
  io::write_csv(join_path(args.out_dir, "end_states.csv"), ends);

  m.add_output("dataset.json", join_path(args.out_dir, "dataset.json"));
  m.add_output("end_states.csv", join_path(args.out_dir, "end_states.csv"));
  return finish(std::move(m), args.out_dir, timer);
}

namespace {

struct GridEntry {
  std::string name;  // file suffix and model_id stem, e.g. "lat2_kl2.5"
  std::size_t latent_dim = 0;
  double hyper = 0.0;  // kl_target for VAEs, lambda for InfoGANs
  std::uint64_t seed = 0;
};

json arch_to_json(const genmodels::ModelArch& arch) {
  return json{{"latent_dim", arch.latent_dim},
              {"decoder_hidden", arch.decoder_hidden},
              {"trunk_hidden", arch.trunk_hidden},
              {"q_head_hidden", arch.q_head_hidden},
              {"batch_norm", arch.batch_norm}};
}

}  // namespace

RunManifest run_train_model(const CommandArgs& args) {
  const Timer timer;
  const json raw = load_config(args);
  json cfg;
  std::string kind, dataset_path;
  genmodels::ModelArch arch;
  genmodels::TrainConfig train;
  double kl_target = 2.5, lambda = 1.5;
  std::uint64_t seed = 0;
  std::vector<GridEntry> entries;
  const auto hyper_tag = [&] { return kind == "vae" ? "kl" : "lam"; };
  try {
    check_keys(raw, {"kind", "dataset", "seed", "epochs", "batch_size", "learning_rate",
                     "arch", "kl_target", "lambda", "grid"},
               "train-model");
    kind = field<std::string>(raw, "kind", "vae");
    require(kind == "vae" || kind == "infogan", "train-model: kind must be vae or infogan");
    dataset_path = field<std::string>(raw, "dataset", "dataset.json");
    seed = resolve_seed(args, raw);
    train.epochs = field<std::size_t>(raw, "epochs", 300);
    train.batch_size = field<std::size_t>(raw, "batch_size", 256);
    train.learning_rate = field<double>(raw, "learning_rate", 2e-4);
    if (raw.contains("arch") && !raw.at("arch").is_null()) {
      const json& a = raw.at("arch");
      check_keys(a, {"latent_dim", "decoder_hidden", "trunk_hidden", "q_head_hidden",
                     "batch_norm"},
                 "train-model arch");
      arch.latent_dim = field<std::size_t>(a, "latent_dim", arch.latent_dim);
      arch.decoder_hidden = field<std::vector<std::size_t>>(a, "decoder_hidden", arch.decoder_hidden);
      arch.trunk_hidden = field<std::vector<std::size_t>>(a, "trunk_hidden", arch.trunk_hidden);
      arch.q_head_hidden = field<std::vector<std::size_t>>(a, "q_head_hidden", arch.q_head_hidden);
      arch.batch_norm = field<bool>(a, "batch_norm", arch.batch_norm);
    }
    kl_target = field<double>(raw, "kl_target", 2.5);
    lambda = field<double>(raw, "lambda", 1.5);

    cfg = json{{"kind", kind},
               {"dataset", dataset_path},
               {"seed", seed},
               {"epochs", train.epochs},
               {"batch_size", train.batch_size},
               {"learning_rate", train.learning_rate},
               {"arch", arch_to_json(arch)},
               {"kl_target", kl_target},
               {"lambda", lambda},
               {"grid", nullptr}};

    if (raw.contains("grid") && !raw.at("grid").is_null()) {
      const json& g = raw.at("grid");
      check_keys(g, {"latent_dims", "kl_targets", "lambdas"}, "train-model grid");
      const auto latents =
          field<std::vector<std::size_t>>(g, "latent_dims", std::vector<std::size_t>{2, 3, 6});
      const auto hypers =
          kind == "vae"
              ? field<std::vector<double>>(g, "kl_targets", std::vector<double>{1.0, 2.5, 5.0})
              : field<std::vector<double>>(g, "lambdas", std::vector<double>{0.5, 1.5, 4.0});
      require(!latents.empty() && !hypers.empty(), "train-model: empty grid axis");
      RngStream grid_rng(seed, kGridSeedStream);
      for (std::size_t latent : latents) {
        for (double h : hypers) {
          GridEntry e;
          e.name = "lat" + std::to_string(latent) + "_" + hyper_tag() + io::format_double(h);
          e.latent_dim = latent;
          e.hyper = h;
          e.seed = grid_rng.split(entries.size()).next_u64();
          entries.push_back(std::move(e));
        }
      }
      cfg["grid"] = json{{"latent_dims", latents},
                         {kind == "vae" ? "kl_targets" : "lambdas", hypers}};
      for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t j = i + 1; j < entries.size(); ++j)
          require(entries[i].name != entries[j].name, "train-model: duplicate grid entry");
    } else {
      entries.push_back(GridEntry{"lat" + std::to_string(arch.latent_dim) + "_" + hyper_tag() +
                                      io::format_double(kind == "vae" ? kl_target : lambda),
                                  arch.latent_dim, kind == "vae" ? kl_target : lambda, seed});
    }
  } catch (const json::exception& e) {
    bad_config("train-model", e);
  }
  require(train.epochs >= 1, "train-model: epochs must be at least 1");
  require(train.batch_size >= 1, "train-model: batch_size must be at least 1");
  require(train.learning_rate > 0.0, "train-model: learning_rate must be positive");
  require(arch.latent_dim >= 1, "train-model: latent_dim must be at least 1");
  require(kl_target > 0.0, "train-model: kl_target must be positive");
  require(lambda >= 0.0, "train-model: lambda must be nonnegative");

  ensure_out_dir(args.out_dir);
  RunManifest m = begin_manifest("train-model", args, cfg, seed);
  const std::string id = m.manifest_id();
  m.add_input(dataset_path);
  const trajenv::TrajectoryDataset data = io::load_dataset(dataset_path);

  const bool single = entries.size() == 1 && (!raw.contains("grid") || raw.at("grid").is_null());
  const auto model_name = [&](const GridEntry& e) {
    return single ? std::string("model.json") : "model_" + e.name + ".json";
  };
  const auto loss_name = [&](const GridEntry& e) {
    return single ? std::string("loss.csv") : "loss_" + e.name + ".csv";
  };
  const auto entry_hyperparams = [&](const GridEntry& e) {
    genmodels::ModelArch a = arch;
    a.latent_dim = e.latent_dim;
    return json{{"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"learning_rate", train.learning_rate},
                {"seed", e.seed},
                {kind == "vae" ? "kl_target" : "lambda", e.hyper},
                {"arch", arch_to_json(a)}};
  };
  const auto model_id_of = [&](const GridEntry& e) {
    return kind + "_" + e.name + "_s" + std::to_string(seed);
  };

  std::string failure;
  if (kind == "vae") {
    std::vector<genmodels::VaeTrainResult> results(entries.size());
    run_pool(args.jobs, entries.size(), [&](std::size_t i) {
      genmodels::ModelArch a = arch;
      a.latent_dim = entries[i].latent_dim;
      genmodels::TrainConfig tc = train;
      tc.seed = entries[i].seed;
      results[i] = genmodels::train_vae(data, a, tc, entries[i].hyper);
    });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string model_path = join_path(args.out_dir, model_name(entries[i]));
      io::save_model(model_path, results[i].model, model_id_of(entries[i]), id,
                     entry_hyperparams(entries[i]));
      io::CsvTable loss;
      loss.header = {"epoch", "recon", "kl", "beta"};
      for (const auto& row : results[i].log)
        loss.rows.push_back({std::to_string(row.epoch), io::format_double(row.recon),
                             io::format_double(row.kl), io::format_double(row.beta)});
      io::write_csv(join_path(args.out_dir, loss_name(entries[i])), loss);
      m.add_output(model_name(entries[i]), model_path);
      m.add_output(loss_name(entries[i]), join_path(args.out_dir, loss_name(entries[i])));
      if (results[i].failed_epoch && failure.empty())
        failure = entries[i].name + " at epoch " + std::to_string(*results[i].failed_epoch);
    }
  } else {
    std::vector<genmodels::InfoGanTrainResult> results(entries.size());
    run_pool(args.jobs, entries.size(), [&](std::size_t i) {
      genmodels::ModelArch a = arch;
      a.latent_dim = entries[i].latent_dim;
      genmodels::TrainConfig tc = train;
      tc.seed = entries[i].seed;
      results[i] = genmodels::train_infogan(data, a, tc, entries[i].hyper);
    });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string model_path = join_path(args.out_dir, model_name(entries[i]));
      io::save_model(model_path, results[i].model, model_id_of(entries[i]), id,
                     entry_hyperparams(entries[i]));
      io::CsvTable loss;
      loss.header = {"epoch", "d_loss", "g_loss", "info_loss"};
      for (const auto& row : results[i].log)
        loss.rows.push_back({std::to_string(row.epoch), io::format_double(row.d_loss),
                             io::format_double(row.g_loss), io::format_double(row.info_loss)});
      io::write_csv(join_path(args.out_dir, loss_name(entries[i])), loss);
      m.add_output(model_name(entries[i]), model_path);
      m.add_output(loss_name(entries[i]), join_path(args.out_dir, loss_name(entries[i])));
      if (results[i].failed_epoch && failure.empty())
        failure = entries[i].name + " at epoch " + std::to_string(*results[i].failed_epoch);
    }
  }

  RunManifest done = finish(std::move(m), args.out_dir, timer);
  if (!failure.empty())
    throw NumericError("train-model: non-finite loss in entry " + failure +
                       "; checkpoint and manifest written");
  return done;
}

RunManifest run_eval(const CommandArgs& args) {
  const Timer timer;
  const json raw = load_config(args);
  json cfg;
  std::vector<std::string> model_paths;
  std::string dataset_path;
  std::uint64_t seed = 0;
  std::size_t pr_k = 3, pr_samples = 0;
  evalmetrics::MmdConfig mmd;
  evalmetrics::DiprConfig dipr_cfg;
  evalmetrics::DwprConfig dwpr_cfg;
  evalmetrics::L3Config l3_cfg;
  std::string top_mode = "min_dims";
  try {
    check_keys(raw, {"model", "models", "dataset", "seed", "pr", "mmd", "dipr", "dwpr", "l3"},
               "eval");
    const bool has_single = raw.contains("model") && !raw.at("model").is_null();
    const bool has_list = raw.contains("models") && !raw.at("models").is_null();
    require(!(has_single && has_list), "eval: give either model or models, not both");
    if (has_list)
      model_paths = raw.at("models").get<std::vector<std::string>>();
    else
      model_paths = {field<std::string>(raw, "model", "model.json")};
    require(!model_paths.empty(), "eval: empty model list");
    dataset_path = field<std::string>(raw, "dataset", "dataset.json");
    seed = resolve_seed(args, raw);

    const json pr = raw.contains("pr") && !raw.at("pr").is_null() ? raw.at("pr") : json::object();
    check_keys(pr, {"k", "samples"}, "eval pr");
    pr_k = field<std::size_t>(pr, "k", 3);
    pr_samples = field<std::size_t>(pr, "samples", 0);

    const json mj = raw.contains("mmd") && !raw.at("mmd").is_null() ? raw.at("mmd") : json::object();
    check_keys(mj, {"gamma", "permutations", "eta", "repeats"}, "eval mmd");
    mmd.gamma = field<double>(mj, "gamma", mmd.gamma);
    mmd.permutations = field<std::size_t>(mj, "permutations", mmd.permutations);
    mmd.eta = field<double>(mj, "eta", mmd.eta);
    mmd.repeats = field<std::size_t>(mj, "repeats", mmd.repeats);

    const json dj =
        raw.contains("dipr") && !raw.at("dipr").is_null() ? raw.at("dipr") : json::object();
    check_keys(dj, {"interventions", "samples", "top_mode"}, "eval dipr");
    dipr_cfg.interventions = field<std::size_t>(dj, "interventions", dipr_cfg.interventions);
    dipr_cfg.samples = field<std::size_t>(dj, "samples", dipr_cfg.samples);
    top_mode = field<std::string>(dj, "top_mode", top_mode);
    require(top_mode == "min_dims" || top_mode == "fixed_three",
            "eval: dipr top_mode must be min_dims or fixed_three");
    dipr_cfg.top_mode = top_mode == "min_dims" ? evalmetrics::TopPairMode::MinDims
                                               : evalmetrics::TopPairMode::FixedThree;
    dipr_cfg.mmd = mmd;

    const json wj =
        raw.contains("dwpr") && !raw.at("dwpr").is_null() ? raw.at("dwpr") : json::object();
    check_keys(wj, {"interventions", "samples", "k"}, "eval dwpr");
    dwpr_cfg.interventions = field<std::size_t>(wj, "interventions", dwpr_cfg.interventions);
    dwpr_cfg.samples = field<std::size_t>(wj, "samples", dwpr_cfg.samples);
    dwpr_cfg.k = field<std::size_t>(wj, "k", dwpr_cfg.k);

    const json lj = raw.contains("l3") && !raw.at("l3").is_null() ? raw.at("l3") : json::object();
    check_keys(lj, {"epsilon", "centers", "neighbors", "train_count", "test_count"}, "eval l3");
    l3_cfg.epsilon = field<double>(lj, "epsilon", l3_cfg.epsilon);
    l3_cfg.centers = field<std::size_t>(lj, "centers", l3_cfg.centers);
    l3_cfg.neighbors = field<std::size_t>(lj, "neighbors", l3_cfg.neighbors);
    l3_cfg.train_count = field<std::size_t>(lj, "train_count", l3_cfg.train_count);
    l3_cfg.test_count = field<std::size_t>(lj, "test_count", l3_cfg.test_count);

    cfg = json{{"models", model_paths},
               {"dataset", dataset_path},
               {"seed", seed},
               {"pr", json{{"k", pr_k}, {"samples", pr_samples}}},
               {"mmd",
                json{{"gamma", mmd.gamma},
                     {"permutations", mmd.permutations},
                     {"eta", mmd.eta},
                     {"repeats", mmd.repeats}}},
               {"dipr",
                json{{"interventions", dipr_cfg.interventions},
                     {"samples", dipr_cfg.samples},
                     {"top_mode", top_mode}}},
               {"dwpr",
                json{{"interventions", dwpr_cfg.interventions},
                     {"samples", dwpr_cfg.samples},
                     {"k", dwpr_cfg.k}}},
               {"l3",
                json{{"epsilon", l3_cfg.epsilon},
                     {"centers", l3_cfg.centers},
                     {"neighbors", l3_cfg.neighbors},
                     {"train_count", l3_cfg.train_count},
                     {"test_count", l3_cfg.test_count}}}};
  } catch (const json::exception& e) {
    bad_config("eval", e);
  }

  bool want_pr = args.metrics.empty(), want_dipr = want_pr, want_dwpr = want_pr,
       want_l3 = want_pr;
  for (const std::string& name : args.metrics) {
    if (name == "pr")
      want_pr = true;
    else if (name == "dipr")
      want_dipr = true;
    else if (name == "dwpr")
      want_dwpr = true;
    else if (name == "l3")
      want_l3 = true;
    else
      throw ContractError("eval: unknown metric '" + name + "'");
  }
  json selected = json::array();
  if (want_pr) selected.push_back("pr");
  if (want_dipr) selected.push_back("dipr");
  if (want_dwpr) selected.push_back("dwpr");
  if (want_l3) selected.push_back("l3");
  cfg["metrics"] = selected;

  ensure_out_dir(args.out_dir);
  RunManifest m = begin_manifest("eval", args, cfg, seed);
  const std::string id = m.manifest_id();
  m.add_input(dataset_path);
  const trajenv::TrajectoryDataset data = io::load_dataset(dataset_path);
  const trajenv::Environment env = env_for_dataset(data);

  io::CsvTable table;
  table.header.assign({"model_id"});
  for (const char* col : kMetricColumns) table.header.push_back(col);

  for (const std::string& model_path : model_paths) {
    m.add_input(model_path);
    const io::ModelFile mf = io::load_model(model_path);
    const genmodels::GenerativeModel& gen = mf.gen();
    require(gen.shape.flat_dim() == data.traj_dim(),
            "eval: model trajectory shape disagrees with the dataset");

    RngStream mrng = RngStream(seed, kEvalStream).split(io::fnv1a(mf.model_id));
    json report{{"model_id", mf.model_id},
                {"manifest_id", id},
                {"model_manifest_id", mf.manifest_id},
                {"seed", seed},
                {"config", cfg}};
    if (want_pr) {
      RngStream rng = mrng.split(1);
      const std::size_t n = pr_samples > 0 ? pr_samples : data.count();
      const numkit::Matrix samples = gen.sample(n, rng);
      const evalmetrics::PrResult pr = evalmetrics::precision_recall(data.trajectories, samples, pr_k);
      report["precision"] = pr.precision;
      report["recall"] = pr.recall;
    }
    if (want_dipr) {
      RngStream rng = mrng.split(2);
      const evalmetrics::DiprResult r =
          evalmetrics::dipr(genmodels::decode_fn(gen), gen.prior, env, data.end_states,
                            dipr_cfg, rng);
      report["dip"] = r.dip;
      report["dir"] = r.dir;
    }
    if (want_dwpr) {
      RngStream rng = mrng.split(3);
      const evalmetrics::DwprResult r =
          evalmetrics::dwpr(genmodels::decode_fn(gen), gen.prior, dwpr_cfg, rng);
      report["dwpr"] = json{{"per_dim", r.delta},
                            {"delta1", r.delta1},
                            {"delta2", r.delta2},
                            {"delta_avg", r.delta_avg},
                            {"degenerate", r.degenerate}};
    }
    if (want_l3) {
      RngStream rng = mrng.split(4);
      const evalmetrics::L3Result r =
          evalmetrics::l3(genmodels::decode_fn(gen), gen.prior, env, l3_cfg, rng);
      report["l3"] = r.mean_mse;
    }

    const std::string report_name = "report_" + mf.model_id + ".json";
    io::write_json(join_path(args.out_dir, report_name), report);
    m.add_output(report_name, join_path(args.out_dir, report_name));

    const std::map<std::string, double> flat = flatten_metrics(report);
    std::vector<std::string> row{mf.model_id};
    for (const char* col : kMetricColumns) {
      const auto it = flat.find(col);
      row.push_back(it == flat.end() ? std::string() : io::format_double(it->second));
    }
    table.rows.push_back(std::move(row));
  }

  io::write_csv(join_path(args.out_dir, "metrics.csv"), table);
  m.add_output("metrics.csv", join_path(args.out_dir, "metrics.csv"));
  return finish(std::move(m), args.out_dir, timer);
}

RunManifest run_train_policy(const CommandArgs& args) {
  const Timer timer;
  const json raw = load_config(args);
  json cfg;
  std::string model_path, env_name;
  std::uint64_t seed = 0;
  std::size_t runs = 3;
  empolicy::EmConfig em;
  try {
    check_keys(raw, {"model", "env", "seed", "runs", "em"}, "train-policy");
    model_path = field<std::string>(raw, "model", "model.json");
    env_name = field<std::string>(raw, "env", "linear");
    seed = resolve_seed(args, raw);
    runs = field<std::size_t>(raw, "runs", 3);
    const json ej = raw.contains("em") && !raw.at("em").is_null() ? raw.at("em") : json::object();
    check_keys(ej, {"batch_size", "outer_iterations", "inner_epochs", "kl_weight", "policy_lr",
                    "value_lr", "normalize_advantages"},
               "train-policy em");
    em.batch_size = field<std::size_t>(ej, "batch_size", em.batch_size);
    em.outer_iterations = field<std::size_t>(ej, "outer_iterations", em.outer_iterations);
    em.inner_epochs = field<std::size_t>(ej, "inner_epochs", em.inner_epochs);
    em.kl_weight = field<double>(ej, "kl_weight", em.kl_weight);
    em.policy_lr = field<double>(ej, "policy_lr", em.policy_lr);
    em.value_lr = field<double>(ej, "value_lr", em.value_lr);
    em.normalize_advantages = field<bool>(ej, "normalize_advantages", em.normalize_advantages);
    cfg = json{{"model", model_path},
               {"env", env_name},
               {"seed", seed},
               {"runs", runs},
               {"em",
                json{{"batch_size", em.batch_size},
                     {"outer_iterations", em.outer_iterations},
                     {"inner_epochs", em.inner_epochs},
                     {"kl_weight", em.kl_weight},
                     {"policy_lr", em.policy_lr},
                     {"value_lr", em.value_lr},
                     {"normalize_advantages", em.normalize_advantages}}}};
  } catch (const json::exception& e) {
    bad_config("train-policy", e);
  }
  require(runs >= 1, "train-policy: runs must be at least 1");
  require(em.batch_size >= 2, "train-policy: batch_size must be at least 2");
  require(em.outer_iterations >= 1, "train-policy: outer_iterations must be at least 1");
  require(em.inner_epochs >= 1, "train-policy: inner_epochs must be at least 1");
  require(em.kl_weight >= 0.0, "train-policy: kl_weight must be nonnegative");
  require(em.policy_lr > 0.0 && em.value_lr > 0.0, "train-policy: learning rates must be positive");

  ensure_out_dir(args.out_dir);
  RunManifest m = begin_manifest("train-policy", args, cfg, seed);
  const std::string id = m.manifest_id();
  m.add_input(model_path);
  const io::ModelFile mf = io::load_model(model_path);
  trajenv::Environment env = env_by_name(env_name);
  env.horizon = mf.gen().shape.horizon;
  require(env.action_dim == mf.gen().shape.action_dim,
          "train-policy: model action_dim disagrees with the environment");

  json run_rows = json::array();
  double label = 0.0;
  bool label_set = false;
  std::string failure;
  for (std::size_t k = 0; k < runs; ++k) {
    const std::uint64_t run_seed = seed + k;
    empolicy::EmConfig run_cfg = em;
    run_cfg.seed = run_seed;
    RngStream rng(run_seed, kPolicyStream);
    const empolicy::EmResult result = empolicy::train_em(mf.gen(), env, run_cfg, rng);

    const std::string suffix = "_seed" + std::to_string(run_seed);
    io::CsvTable curve;
    curve.header = {"iteration", "mean_reward", "std_reward", "mean_kl", "clamp_fraction"};
    double best = 0.0;
    bool best_set = false;
    for (const auto& row : result.curve) {
      curve.rows.push_back({std::to_string(row.iteration), io::format_double(row.mean_reward),
                            io::format_double(row.std_reward), io::format_double(row.mean_kl),
                            io::format_double(row.clamp_fraction)});
      if (!best_set || row.mean_reward > best) {
        best = row.mean_reward;
        best_set = true;
      }
    }
    io::write_csv(join_path(args.out_dir, "curve" + suffix + ".csv"), curve);
    io::save_net(join_path(args.out_dir, "policy" + suffix + ".json"), result.policy.net, id);
    io::save_net(join_path(args.out_dir, "value" + suffix + ".json"), result.value, id);
    m.add_output("curve" + suffix + ".csv", join_path(args.out_dir, "curve" + suffix + ".csv"));
    m.add_output("policy" + suffix + ".json",
                 join_path(args.out_dir, "policy" + suffix + ".json"));
    m.add_output("value" + suffix + ".json", join_path(args.out_dir, "value" + suffix + ".json"));

    json row{{"seed", run_seed},
             {"curve", "curve" + suffix + ".csv"},
             {"policy", "policy" + suffix + ".json"},
             {"value", "value" + suffix + ".json"}};
    if (best_set) {
      row["best_mean_reward"] = best;
      row["final_mean_reward"] = result.curve.back().mean_reward;
      if (!label_set || best > label) {
        label = best;
        label_set = true;
      }
    }
    if (result.failed_iteration) {
      row["failed_iteration"] = *result.failed_iteration;
      if (failure.empty())
        failure = "seed " + std::to_string(run_seed) + " at iteration " +
                  std::to_string(*result.failed_iteration);
    }
    run_rows.push_back(std::move(row));
  }

  json label_doc{{"model_id", mf.model_id}, {"manifest_id", id}, {"runs", run_rows}};
  label_doc["label"] = label_set ? json(label) : json(nullptr);
  io::write_json(join_path(args.out_dir, "label.json"), label_doc);
  m.add_output("label.json", join_path(args.out_dir, "label.json"));

  RunManifest done = finish(std::move(m), args.out_dir, timer);
  if (!failure.empty())
    throw NumericError("train-policy: non-finite rollout in " + failure +
                       "; checkpoint and manifest written");
  return done;
}

RunManifest run_correlate(const CommandArgs& args) {
  const Timer timer;
  const json raw = load_config(args);
  json cfg;
  std::vector<std::string> report_paths, label_paths;
  std::size_t permutations = 10000;
  std::uint64_t seed = 0;
  try {
    check_keys(raw, {"reports", "labels", "permutations", "seed"}, "correlate");
    report_paths = field<std::vector<std::string>>(raw, "reports", {});
    label_paths = field<std::vector<std::string>>(raw, "labels", {});
    permutations = field<std::size_t>(raw, "permutations", 10000);
    seed = resolve_seed(args, raw);
    cfg = json{{"reports", report_paths},
               {"labels", label_paths},
               {"permutations", permutations},
               {"seed", seed}};
  } catch (const json::exception& e) {
    bad_config("correlate", e);
  }
  require(!report_paths.empty(), "correlate: reports must be nonempty");
  require(!label_paths.empty(), "correlate: labels must be nonempty");
  require(permutations >= 1, "correlate: permutations must be at least 1");

  ensure_out_dir(args.out_dir);
  RunManifest m = begin_manifest("correlate", args, cfg, seed);
  const std::string id = m.manifest_id();

  std::map<std::string, std::map<std::string, double>> metrics_by_model;
  for (const std::string& path : report_paths) {
    m.add_input(path);
    const json report = io::load_json(path);
    try {
      const std::string model_id = report.at("model_id").get<std::string>();
      require(!metrics_by_model.count(model_id),
              "correlate: duplicate metric report for model '" + model_id + "'");
      metrics_by_model[model_id] = flatten_metrics(report);
    } catch (const json::exception& e) {
      throw ContractError("correlate: malformed report '" + path + "': " + e.what());
    }
  }

  std::vector<std::pair<std::string, double>> labels;  // (model_id, label)
  for (const std::string& path : label_paths) {
    m.add_input(path);
    const json doc = io::load_json(path);
    try {
      require(!doc.at("label").is_null(),
              "correlate: label file '" + path + "' has no usable label");
      labels.emplace_back(doc.at("model_id").get<std::string>(), doc.at("label").get<double>());
    } catch (const json::exception& e) {
      throw ContractError("correlate: malformed label '" + path + "': " + e.what());
    }
  }

  RngStream root(seed, kCorrelateStream);
  io::CsvTable table;
  table.header = {"metric", "n", "r", "p_value", "defined"};
  json rows = json::array();
  std::size_t metric_index = 0;
  for (const char* metric : kMetricColumns) {
    std::vector<double> xs, ys;
    for (const auto& [model_id, label] : labels) {
      const auto model = metrics_by_model.find(model_id);
      require(model != metrics_by_model.end(),
              "correlate: no metric report for model '" + model_id + "'");
      const auto value = model->second.find(metric);
      if (value == model->second.end()) continue;
      xs.push_back(value->second);
      ys.push_back(label);
    }
    const auto variance = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return ss;
    };
    const bool defined = xs.size() >= 3 && variance(xs) > 0.0 && variance(ys) > 0.0;
    json row{{"metric", metric}, {"n", xs.size()}, {"defined", defined}};
    std::vector<std::string> cells{metric, std::to_string(xs.size())};
    if (defined) {
      RngStream rng = root.split(metric_index);
      const evalmetrics::PearsonResult r = evalmetrics::pearson(xs, ys, permutations, rng);
      row["r"] = r.r;
      row["p_value"] = r.p_value;
      cells.push_back(io::format_double(r.r));
      cells.push_back(io::format_double(r.p_value));
    } else {
      row["r"] = nullptr;
      row["p_value"] = nullptr;
      cells.push_back("");
      cells.push_back("");
    }
    cells.push_back(defined ? "true" : "false");
    table.rows.push_back(std::move(cells));
    rows.push_back(std::move(row));
    ++metric_index;
  }

  io::write_csv(join_path(args.out_dir, "correlation.csv"), table);
  io::write_json(join_path(args.out_dir, "correlation.json"),
                 json{{"manifest_id", id},
                      {"seed", seed},
                      {"permutations", permutations},
                      {"rows", rows}});
  m.add_output("correlation.csv", join_path(args.out_dir, "correlation.csv"));
  m.add_output("correlation.json", join_path(args.out_dir, "correlation.json"));
  return finish(std::move(m), args.out_dir, timer);
}

namespace {

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string md_table(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::string out = "|";
  for (const std::string& h : header) out += " " + md_escape(h) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& row : rows) {
    out += "|";
    for (const std::string& cell : row) out += " " + md_escape(cell) + " |";
    out += "\n";
  }
  return out;
}

}  // namespace

RunManifest run_report(const CommandArgs& args) {
  const Timer timer;
  const json raw = load_config(args);
  json cfg;
  std::vector<std::string> inputs;
  try {
    check_keys(raw, {"inputs", "seed"}, "report");
    inputs = field<std::vector<std::string>>(raw, "inputs", {});
    cfg = json{{"inputs", inputs}, {"seed", resolve_seed(args, raw)}};
  } catch (const json::exception& e) {
    bad_config("report", e);
  }
  require(!inputs.empty(), "report: inputs must be nonempty");

  ensure_out_dir(args.out_dir);
  RunManifest m = begin_manifest("report", args, cfg, cfg.at("seed").get<std::uint64_t>());
  const std::string id = m.manifest_id();

  json artifacts = json::array();
  std::vector<std::vector<std::string>> datasets, models, metric_rows, label_rows, corr_rows,
      manifests;
  for (const std::string& path : inputs) {
    m.add_input(path);
    const json doc = io::load_json(path);
    json entry{{"path", path}};
    try {
      if (doc.contains("command")) {
        entry["kind"] = "manifest";
        entry["command"] = doc.at("command");
        entry["manifest_id"] = doc.at("manifest_id");
        manifests.push_back({path, doc.at("command").get<std::string>(),
                             doc.at("manifest_id").get<std::string>(),
                             std::to_string(doc.at("outputs").size())});
      } else if (doc.contains("model_kind")) {
        entry["kind"] = "model";
        entry["model_id"] = doc.at("model_id");
        entry["model_kind"] = doc.at("model_kind");
        entry["latent_dim"] = doc.at("prior").at("dim");
        models.push_back({doc.at("model_id").get<std::string>(),
                          doc.at("model_kind").get<std::string>(),
                          std::to_string(doc.at("prior").at("dim").get<std::size_t>()), path});
      } else if (doc.contains("trajectories")) {
        entry["kind"] = "dataset";
        entry["count"] = doc.at("manifest").at("count");
        entry["env_kind"] = doc.at("manifest").at("env_kind");
        datasets.push_back({path, doc.at("manifest").at("env_kind").get<std::string>(),
                            std::to_string(doc.at("manifest").at("count").get<std::size_t>()),
                            io::format_double(doc.at("manifest").at("noise_scale").get<double>())});
      } else if (doc.contains("label") || doc.contains("runs")) {
        entry["kind"] = "label";
        entry["model_id"] = doc.at("model_id");
        entry["label"] = doc.at("label");
        label_rows.push_back({doc.at("model_id").get<std::string>(),
                              doc.at("label").is_null()
                                  ? std::string()
                                  : io::format_double(doc.at("label").get<double>()),
                              std::to_string(doc.at("runs").size())});
      } else if (doc.contains("rows")) {
        entry["kind"] = "correlation";
        entry["rows"] = doc.at("rows");
        for (const json& row : doc.at("rows"))
          corr_rows.push_back({row.at("metric").get<std::string>(),
                               std::to_string(row.at("n").get<std::size_t>()),
                               row.at("r").is_null() ? std::string()
                                                     : io::format_double(row.at("r").get<double>()),
                               row.at("p_value").is_null()
                                   ? std::string()
                                   : io::format_double(row.at("p_value").get<double>()),
                               row.at("defined").get<bool>() ? "true" : "false"});
      } else if (doc.contains("model_id")) {
        entry["kind"] = "metrics";
        entry["model_id"] = doc.at("model_id");
        const std::map<std::string, double> flat = flatten_metrics(doc);
        for (const auto& [key, value] : flat) entry[key] = value;
        std::vector<std::string> row{doc.at("model_id").get<std::string>()};
        for (const char* col : kMetricColumns) {
          const auto it = flat.find(col);
          row.push_back(it == flat.end() ? std::string() : io::format_double(it->second));
        }
        metric_rows.push_back(std::move(row));
      } else {
        entry["kind"] = "unknown";
      }
    } catch (const json::exception& e) {
      throw ContractError("report: malformed artifact '" + path + "': " + e.what());
    }
    artifacts.push_back(std::move(entry));
  }

  std::string md = "# Run report\n";
  if (!datasets.empty())
    md += "\n## Datasets\n\n" + md_table({"path", "env", "count", "noise_scale"}, datasets);
  if (!models.empty())
    md += "\n## Models\n\n" + md_table({"model_id", "kind", "latent_dim", "path"}, models);
  if (!metric_rows.empty()) {
    std::vector<std::string> header{"model_id"};
    for (const char* col : kMetricColumns) header.push_back(col);
    md += "\n## Metrics\n\n" + md_table(header, metric_rows);
  }
  if (!label_rows.empty())
    md += "\n## Policy labels\n\n" + md_table({"model_id", "label", "runs"}, label_rows);
  if (!corr_rows.empty())
    md += "\n## Correlations\n\n" + md_table({"metric", "n", "r", "p_value", "defined"}, corr_rows);
  if (!manifests.empty())
    md += "\n## Manifests\n\n" + md_table({"path", "command", "manifest_id", "outputs"}, manifests);

  io::write_json(join_path(args.out_dir, "report.json"),
                 json{{"manifest_id", id}, {"version", io::kVersion}, {"artifacts", artifacts}});
  io::write_text(join_path(args.out_dir, "report.md"), md);
  m.add_output("report.json", join_path(args.out_dir, "report.json"));
  m.add_output("report.md", join_path(args.out_dir, "report.md"));
  return finish(std::move(m), args.out_dir, timer);
}

}  // namespace genrl::cli
