#pragma once

// Self-describing JSON checkpoint: model config, every parameter tensor
// (64-bit, column-major), and the feature pipeline including standardization
// stats. Doubles are written with round-trip precision.

#include <fstream>
#include <sstream>
#include <string>

#include "repseg/error.hpp"
#include "repseg/features.hpp"
#include "repseg/neural/model.hpp"
#include "repseg/skeleton.hpp"

namespace repseg {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "repseg-checkpoint";

struct Checkpoint {
  SequenceModel model;
  FeaturePipeline pipeline;
};

inline Json model_config_json(const ModelConfig& c) {
  return Json{{"input_dim", c.input_dim},         {"hidden_dim", c.hidden_dim}, {"lstm_layers", c.lstm_layers},
              {"use_conv", c.use_conv},           {"conv_kernel", c.conv_kernel},
              {"conv_channels", c.conv_channels}, {"head", std::string(to_string(c.head))},
              {"seed", c.seed}};
}

/// Missing keys keep their defaults, so partial configs are accepted.
inline ModelConfig model_config_from_json(const Json& j, ModelConfig c = {}) {
  try {
    c.input_dim = j.value("input_dim", c.input_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
    c.use_conv = j.value("use_conv", c.use_conv);
    c.conv_kernel = j.value("conv_kernel", c.conv_kernel);
    c.conv_channels = j.value("conv_channels", c.conv_channels);
    if (j.contains("head")) c.head = parse_head(j.at("head").get<std::string>());
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("model config: ") + e.what());
  }
  return c;
}

inline Json normalization_json(const NormalizationSpec& n) {
  return Json{{"enabled", n.enabled},
              {"root_joint", n.root_joint},
              {"scale_pair", {n.scale_joint_a, n.scale_joint_b}}};
}

inline NormalizationSpec normalization_from_json(const Json& j, NormalizationSpec n = {}) {
  try {
    n.enabled = j.value("enabled", n.enabled);
    n.root_joint = j.value("root_joint", n.root_joint);
    if (j.contains("scale_pair")) {
      n.scale_joint_a = j.at("scale_pair").at(0).get<int>();
      n.scale_joint_b = j.at("scale_pair").at(1).get<int>();
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("normalization: ") + e.what());
  }
  return n;
}

namespace detail {

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) data.push_back(m.data()[i]);
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorCode::MalformedJson, "tensor size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
  return m;
}

}  // namespace detail

inline Json checkpoint_json(const Checkpoint& ck) {
  Json params = Json::array();
  for (const auto& p : ck.model.parameters()) {
    Json t = detail::matrix_json(p.value);
    t["name"] = p.name;
    params.push_back(std::move(t));
  }
  Json stats = nullptr;
  if (ck.pipeline.stats) {
    stats = Json{{"mean", detail::matrix_json(ck.pipeline.stats->mean)}, {"std", detail::matrix_json(ck.pipeline.stats->std)}};
  }
  return Json{{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"config", model_config_json(ck.model.config())},
              {"features",
               {{"variant", std::string(to_string(ck.pipeline.variant))},
                {"angle_spec", angle_spec_json(ck.pipeline.angles)}}},
              {"normalization", normalization_json(ck.pipeline.normalization)},
              {"standardization", std::move(stats)},
              {"parameters", std::move(params)}};
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  try {
    require(j.value("format", std::string{}) == kCheckpointFormat, ErrorCode::MalformedJson, "not a checkpoint file");
    require(j.contains("version"), ErrorCode::MalformedJson, "checkpoint has no version field");
    const int version = j.at("version").get<int>();
    require(version == kCheckpointVersion, ErrorCode::MalformedJson,
            "unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck{SequenceModel(model_config_from_json(j.at("config"))), {}};
    auto& params = ck.model.parameters();
    const auto& jp = j.at("parameters");
    require(jp.size() == params.size(), ErrorCode::MalformedJson, "checkpoint parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      require(jp[i].at("name").get<std::string>() == params[i].name, ErrorCode::MalformedJson,
              "unexpected tensor '" + jp[i].at("name").get<std::string>() + "'");
      Eigen::MatrixXd m = detail::matrix_from_json(jp[i]);
      require(m.rows() == params[i].value.rows() && m.cols() == params[i].value.cols(), ErrorCode::MalformedJson,
              "tensor '" + params[i].name + "' has the wrong shape");
      params[i].value = std::move(m);
    }
    ck.pipeline.variant = parse_feature_variant(j.at("features").at("variant").get<std::string>());
    ck.pipeline.angles = angle_spec_from_json(j.at("features").at("angle_spec"));
    ck.pipeline.normalization = normalization_from_json(j.at("normalization"));
    if (!j.at("standardization").is_null()) {
      const auto& s = j.at("standardization");
      ck.pipeline.stats = StandardizationStats{detail::matrix_from_json(s.at("mean")), detail::matrix_from_json(s.at("std"))};
    }
    return ck;
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + path + "'");
  out << checkpoint_json(ck).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(detail::parse_json_text(ss.str(), "checkpoint"));
}

}  // namespace repseg
