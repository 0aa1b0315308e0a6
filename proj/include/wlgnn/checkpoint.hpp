#pragma once

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "wlgnn/error.hpp"
#include "wlgnn/graph.hpp"
#include "wlgnn/model.hpp"

namespace wlgnn {

// Text container:
//
//   wlgnn-checkpoint 1
//   k 2
//   layers 2
//   input_dim 128
//   hidden_dim 64
//   output_dim 64
//   encoder_layers 1
//   tensor <name> <rows> <cols>
//   <rows*cols values, %.17g, one row per line>
//   ...
//
// 17 significant digits make the decimal round trip exact.

inline constexpr const char* kCheckpointMagic = "wlgnn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(std::ostream& out, const Model& model) {
  const auto& c = model.config;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n'
      << "k " << c.gnn.k << '\n'
      << "layers " << c.gnn.layers << '\n'
      << "input_dim " << c.gnn.input_dim << '\n'
      << "hidden_dim " << c.gnn.hidden_dim << '\n'
      << "output_dim " << c.gnn.output_dim << '\n'
      << "encoder_layers " << c.encoder_layers << '\n';
  char buf[32];
  model.for_each_tensor([&](const std::string& name, const Matrix& m) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        if (j) out << ' ';
        out << buf;
      }
      out << '\n';
    }
  });
}

inline Model load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) {
    throw ParseError(1, "not a checkpoint file");
  }
  if (version != kCheckpointVersion) {
    throw ParseError(1, "unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, std::size_t> header;
  for (const char* key : {"k", "layers", "input_dim", "hidden_dim", "output_dim",
                          "encoder_layers"}) {
    std::string name;
    std::size_t value = 0;
    if (!(in >> name >> value) || name != key) {
      throw ParseError(0, std::string("checkpoint: expected '") + key + "'");
    }
    header[key] = value;
  }
  ModelConfig config;
  config.gnn.k = header["k"];
  config.gnn.layers = header["layers"];
  config.gnn.input_dim = header["input_dim"];
  config.gnn.hidden_dim = header["hidden_dim"];
  config.gnn.output_dim = header["output_dim"];
  config.encoder_layers = header["encoder_layers"];

  // Build the structure, then overwrite every tensor in visit order.
  Model model = init_model(config, 0);
  std::string token;
  for (auto& [name, tensor] : model.tensors()) {
    std::string tag, stored;
    std::size_t rows = 0, cols = 0;
    if (!(in >> tag >> stored >> rows >> cols) || tag != "tensor") {
      throw ParseError(0, "checkpoint: expected tensor '" + name + "'");
    }
    if (stored != name) {
      throw ParseError(0, "checkpoint: expected tensor '" + name + "', found '" + stored + "'");
    }
    if (rows != tensor->rows() || cols != tensor->cols()) {
      throw ShapeError("checkpoint: tensor '" + name + "' is " + std::to_string(rows) + "x" +
                       std::to_string(cols) + ", model expects " + tensor->shape_string());
    }
    for (double& v : tensor->values()) {
      if (!(in >> token)) throw ParseError(0, "checkpoint: truncated tensor '" + name + "'");
      const auto parsed = detail::parse_double(token);
      if (!parsed) throw ParseError(0, "checkpoint: bad value '" + token + "'");
      v = *parsed;
    }
  }
  if (in >> token) throw ParseError(0, "checkpoint: trailing data '" + token + "'");
  model.validate();
  return model;
}

}  // namespace wlgnn
