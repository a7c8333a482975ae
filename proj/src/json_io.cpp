#include "genrl/io/json_io.hpp"

#include <fstream>
#include <sstream>

#include "genrl/error.hpp"

namespace genrl::io {

using numkit::Activation;
using numkit::BatchNorm;
using numkit::Layer;
using numkit::Matrix;
using numkit::Mlp;

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  throw ContractError("activation_name: unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw ContractError("activation_from_name: unknown activation '" + name + "'");
}

json mlp_to_json(const Mlp& net) {
  require(!net.empty(), "mlp_to_json: empty network");
  json dims = json::array();
  json acts = json::array();
  json weights = json::array();
  json biases = json::array();
  json bns = json::array();
  dims.push_back(net.in_dim());
  for (const Layer& layer : net.layers()) {
    dims.push_back(layer.weight.rows());
    acts.push_back(activation_name(layer.act));
    json w = json::array();
    for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < layer.weight.cols(); ++j) row.push_back(layer.weight(i, j));
      w.push_back(std::move(row));
    }
    weights.push_back(std::move(w));
    biases.push_back(layer.bias);
    if (layer.bn) {
      bns.push_back(json{{"gamma", layer.bn->gamma},
                         {"beta", layer.bn->beta},
                         {"running_mean", layer.bn->running_mean},
                         {"running_var", layer.bn->running_var},
                         {"momentum", layer.bn->momentum},
                         {"eps", layer.bn->eps}});
    } else {
      bns.push_back(nullptr);
    }
  }
  return json{{"layer_dims", std::move(dims)},
              {"activations", std::move(acts)},
              {"weights", std::move(weights)},
              {"biases", std::move(biases)},
              {"batch_norm", std::move(bns)}};
}

Mlp mlp_from_json(const json& j) {
  try {
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    require(dims.size() >= 2, "mlp_from_json: need at least two layer dims");
    const std::size_t layer_count = dims.size() - 1;
    const json& acts = j.at("activations");
    const json& weights = j.at("weights");
    const json& biases = j.at("biases");
    const json& bns = j.at("batch_norm");
    require(acts.size() == layer_count && weights.size() == layer_count &&
                biases.size() == layer_count && bns.size() == layer_count,
            "mlp_from_json: per-layer array lengths disagree with layer_dims");

    std::vector<Activation> act_list(layer_count);
    std::vector<bool> bn_list(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l) {
      act_list[l] = activation_from_name(acts[l].get<std::string>());
      bn_list[l] = !bns[l].is_null();
    }
    Mlp net(dims, act_list, bn_list);

    for (std::size_t l = 0; l < layer_count; ++l) {
      Layer& layer = net.layers()[l];
      const auto w = weights[l].get<std::vector<std::vector<double>>>();
      require(w.size() == dims[l + 1], "mlp_from_json: weight row count mismatch");
      for (std::size_t i = 0; i < w.size(); ++i) {
        require(w[i].size() == dims[l], "mlp_from_json: weight column count mismatch");
        for (std::size_t c = 0; c < w[i].size(); ++c) layer.weight(i, c) = w[i][c];
      }
      layer.bias = biases[l].get<std::vector<double>>();
      require(layer.bias.size() == dims[l + 1], "mlp_from_json: bias length mismatch");
      if (bn_list[l]) {
        BatchNorm& bn = *layer.bn;
        const json& b = bns[l];
        bn.gamma = b.at("gamma").get<std::vector<double>>();
        bn.beta = b.at("beta").get<std::vector<double>>();
        bn.running_mean = b.at("running_mean").get<std::vector<double>>();
        bn.running_var = b.at("running_var").get<std::vector<double>>();
        bn.momentum = b.at("momentum").get<double>();
        bn.eps = b.at("eps").get<double>();
        require(bn.gamma.size() == dims[l + 1] && bn.beta.size() == dims[l + 1] &&
                    bn.running_mean.size() == dims[l + 1] && bn.running_var.size() == dims[l + 1],
                "mlp_from_json: batch norm vector length mismatch");
      }
    }
    return net;
  } catch (const json::exception& e) {
    throw ContractError(std::string("mlp_from_json: malformed weight document: ") + e.what());
  }
}

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("load_json: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ContractError("load_json: '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("read_text: cannot open '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractError("write_text: cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ContractError("write_text: short write to '" + path + "'");
}

const genmodels::GenerativeModel& ModelFile::gen() const {
  return model_kind == "vae" ? vae.gen : infogan.gen;
}

namespace {

json prior_to_json(const genmodels::Prior& prior) {
  return json{{"kind", genmodels::prior_kind_name(prior.kind)}, {"dim", prior.dim}};
}

genmodels::Prior prior_from_json(const json& j) {
  genmodels::Prior prior;
  prior.kind = genmodels::prior_kind_from_name(j.at("kind").get<std::string>());
  prior.dim = j.at("dim").get<std::size_t>();
  return prior;
}

json shape_to_json(const genmodels::TrajShape& shape) {
  return json{{"horizon", shape.horizon}, {"action_dim", shape.action_dim}};
}

genmodels::TrajShape shape_from_json(const json& j) {
  genmodels::TrajShape shape;
  shape.horizon = j.at("horizon").get<std::size_t>();
  shape.action_dim = j.at("action_dim").get<std::size_t>();
  return shape;
}

json model_header(const std::string& kind, const genmodels::GenerativeModel& gen,
                  const std::string& model_id, const std::string& manifest_id,
                  const json& hyperparams) {
  return json{{"model_kind", kind},
              {"model_id", model_id},
              {"manifest_id", manifest_id},
              {"prior", prior_to_json(gen.prior)},
              {"traj_shape", shape_to_json(gen.shape)},
              {"hyperparams", hyperparams}};
}

}  // namespace

void save_model(const std::string& path, const genmodels::VaeModel& model,
                const std::string& model_id, const std::string& manifest_id,
                const json& hyperparams) {
  model.validate();
  json doc = model_header("vae", model.gen, model_id, manifest_id, hyperparams);
  doc["beta"] = model.beta;
  doc["kl_target"] = model.kl_target;
  doc["nets"] = json{{"encoder", mlp_to_json(model.encoder)},
                     {"decoder", mlp_to_json(model.gen.decoder)}};
  write_json(path, doc);
}

void save_model(const std::string& path, const genmodels::InfoGanModel& model,
                const std::string& model_id, const std::string& manifest_id,
                const json& hyperparams) {
  model.validate();
  json doc = model_header("infogan", model.gen, model_id, manifest_id, hyperparams);
  doc["lambda"] = model.lambda;
  doc["nets"] = json{{"generator", mlp_to_json(model.gen.decoder)},
                     {"trunk", mlp_to_json(model.trunk)},
                     {"disc_head", mlp_to_json(model.disc_head)},
                     {"q_head", mlp_to_json(model.q_head)}};
  write_json(path, doc);
}

ModelFile load_model(const std::string& path) {
  const json doc = load_json(path);
  ModelFile file;
  try {
    file.model_kind = doc.at("model_kind").get<std::string>();
    file.model_id = doc.at("model_id").get<std::string>();
    file.manifest_id = doc.at("manifest_id").get<std::string>();
    file.hyperparams = doc.at("hyperparams");
    const genmodels::Prior prior = prior_from_json(doc.at("prior"));
    const genmodels::TrajShape shape = shape_from_json(doc.at("traj_shape"));
    const json& nets = doc.at("nets");
    if (file.model_kind == "vae") {
      file.vae.encoder = mlp_from_json(nets.at("encoder"));
      file.vae.gen.decoder = mlp_from_json(nets.at("decoder"));
      file.vae.gen.prior = prior;
      file.vae.gen.shape = shape;
      file.vae.beta = doc.at("beta").get<double>();
      file.vae.kl_target = doc.at("kl_target").get<double>();
      file.vae.validate();
    } else if (file.model_kind == "infogan") {
      file.infogan.gen.decoder = mlp_from_json(nets.at("generator"));
      file.infogan.gen.prior = prior;
      file.infogan.gen.shape = shape;
      file.infogan.trunk = mlp_from_json(nets.at("trunk"));
      file.infogan.disc_head = mlp_from_json(nets.at("disc_head"));
      file.infogan.q_head = mlp_from_json(nets.at("q_head"));
      file.infogan.lambda = doc.at("lambda").get<double>();
      file.infogan.validate();
    } else {
      throw ContractError("load_model: unknown model_kind '" + file.model_kind + "'");
    }
  } catch (const json::exception& e) {
    throw ContractError("load_model: '" + path + "' malformed: " + e.what());
  }
  return file;
}

void save_dataset(const std::string& path, const trajenv::TrajectoryDataset& data,
                  const std::string& manifest_id) {
  json trajs = json::array();
  for (std::size_t i = 0; i < data.count(); ++i) {
    json steps = json::array();
    for (std::size_t t = 0; t < data.horizon; ++t) {
      json step = json::array();
      for (std::size_t m = 0; m < data.action_dim; ++m)
        step.push_back(data.trajectories(i, t * data.action_dim + m));
      steps.push_back(std::move(step));
    }
    trajs.push_back(std::move(steps));
  }
  json ends = json::array();
  for (std::size_t i = 0; i < data.count(); ++i)
    ends.push_back(json::array({data.end_states(i, 0), data.end_states(i, 1)}));
  const json doc{{"manifest_id", manifest_id},
                 {"manifest",
                  json{{"seed", data.manifest.seed},
                       {"noise_scale", data.manifest.noise_scale},
                       {"count", data.manifest.count},
                       {"env_kind", data.manifest.env_kind}}},
                 {"horizon", data.horizon},
                 {"action_dim", data.action_dim},
                 {"goal_region",
                  json{{"xmin", data.goal_region.xmin},
                       {"xmax", data.goal_region.xmax},
                       {"ymin", data.goal_region.ymin},
                       {"ymax", data.goal_region.ymax}}},
                 {"trajectories", std::move(trajs)},
                 {"end_states", std::move(ends)}};
  write_json(path, doc);
}

trajenv::TrajectoryDataset load_dataset(const std::string& path) {
  const json doc = load_json(path);
  trajenv::TrajectoryDataset data;
  try {
    data.horizon = doc.at("horizon").get<std::size_t>();
    data.action_dim = doc.at("action_dim").get<std::size_t>();
    const json& region = doc.at("goal_region");
    data.goal_region.xmin = region.at("xmin").get<double>();
    data.goal_region.xmax = region.at("xmax").get<double>();
    data.goal_region.ymin = region.at("ymin").get<double>();
    data.goal_region.ymax = region.at("ymax").get<double>();
    const json& manifest = doc.at("manifest");
    data.manifest.seed = manifest.at("seed").get<std::uint64_t>();
    data.manifest.noise_scale = manifest.at("noise_scale").get<double>();
    data.manifest.count = manifest.at("count").get<std::size_t>();
    data.manifest.env_kind = manifest.at("env_kind").get<std::string>();

    const json& trajs = doc.at("trajectories");
    const json& ends = doc.at("end_states");
    require(trajs.size() == data.manifest.count && ends.size() == data.manifest.count,
            "load_dataset: row counts disagree with the manifest count");
    data.trajectories = Matrix(trajs.size(), data.horizon * data.action_dim);
    data.end_states = Matrix(ends.size(), 2);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      const json& steps = trajs[i];
      require(steps.size() == data.horizon, "load_dataset: trajectory horizon mismatch");
      for (std::size_t t = 0; t < data.horizon; ++t) {
        const json& step = steps[t];
        require(step.size() == data.action_dim, "load_dataset: action dim mismatch");
        for (std::size_t m = 0; m < data.action_dim; ++m)
          data.trajectories(i, t * data.action_dim + m) = step[m].get<double>();
      }
      require(ends[i].size() == 2, "load_dataset: end state must be planar");
      data.end_states(i, 0) = ends[i][0].get<double>();
      data.end_states(i, 1) = ends[i][1].get<double>();
    }
  } catch (const json::exception& e) {
    throw ContractError("load_dataset: '" + path + "' malformed: " + e.what());
  }
  return data;
}

void save_net(const std::string& path, const Mlp& net, const std::string& manifest_id) {
  json doc = mlp_to_json(net);
  doc["manifest_id"] = manifest_id;
  write_json(path, doc);
}

Mlp load_net(const std::string& path) { return mlp_from_json(load_json(path)); }

}  // namespace genrl::io
