#include "maskcontrast/model.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "maskcontrast/rng.h"

MC_NAMESPACE_BEGIN

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

ConvLayer make_layer(std::int64_t out, std::int64_t in, std::int64_t k) {
  return ConvLayer{Tensor(Shape{out, in, k, k}), Tensor(Shape{out})};
}

void fill_uniform(Tensor& weight, Rng& rng) {
  const auto& s = weight.shape();
  const double fan_in = static_cast<double>(s[1] * s[2] * s[3]);
  const double bound = std::sqrt(1.0 / fan_in);
  for (Real& v : weight.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
}

ConvVars bind_layer(Graph& g, const ConvLayer& layer, bool trainable) {
  if (trainable) return ConvVars{g.parameter(layer.weight), g.parameter(layer.bias)};
  return ConvVars{g.constant(layer.weight), g.constant(layer.bias)};
}

void take_grad(const Var& v, const Tensor& like, Tensor& out) {
  out = v.grad().empty() ? Tensor(like.shape()) : v.grad();
}

}  // namespace

void ModelConfig::validate() const {
  if (embed_dim < 2) throw DataError("embed_dim must be >= 2, got " + std::to_string(embed_dim));
  if (channels.empty()) throw DataError("model needs at least one encoder stage");
  for (int c : channels)
    if (c <= 0) throw DataError("encoder channel counts must be positive");
  const int f = downsample_factor();
  if (input_height <= 0 || input_width <= 0 || input_height % f != 0 || input_width % f != 0) {
    throw DataError("input size " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                    " not divisible by downsampling factor " + std::to_string(f));
  }
}

NamedTensors ModelParams::tensors() {
  NamedTensors out;
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    out.emplace_back("encoder." + std::to_string(i) + ".weight", &encoder[i].weight);
    out.emplace_back("encoder." + std::to_string(i) + ".bias", &encoder[i].bias);
  }
  out.emplace_back("decoder.weight", &decoder.weight);
  out.emplace_back("decoder.bias", &decoder.bias);
  out.emplace_back("embed_head.weight", &embed_head.weight);
  out.emplace_back("embed_head.bias", &embed_head.bias);
  out.emplace_back("saliency_head.weight", &saliency_head.weight);
  out.emplace_back("saliency_head.bias", &saliency_head.bias);
  return out;
}

ConstNamedTensors ModelParams::tensors() const {
  ConstNamedTensors out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->tensors()) out.emplace_back(name, t);
  return out;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& [name, t] : z.tensors()) t->fill(Real(0));
  return z;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors()) n += t->size();
  return n;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::int64_t in = 3;
  for (int c : config.channels) {
    p.encoder.push_back(make_layer(c, in, 3));
    in = c;
  }
  p.decoder = make_layer(in, in, 3);
  p.embed_head = make_layer(config.embed_dim, in, 1);
  p.saliency_head = make_layer(1, in, 1);

  Rng rng(seed);
  for (auto& [name, t] : p.tensors())
    if (t->rank() == 4) fill_uniform(*t, rng);
  return p;
}

ModelVars bind(Graph& graph, const ModelParams& params, bool trainable) {
  ModelVars v;
  for (const auto& layer : params.encoder) v.encoder.push_back(bind_layer(graph, layer, trainable));
  v.decoder = bind_layer(graph, params.decoder, trainable);
  v.embed_head = bind_layer(graph, params.embed_head, trainable);
  v.saliency_head = bind_layer(graph, params.saliency_head, trainable);
  return v;
}

ModelParams collect_gradients(const ModelVars& vars, const ModelParams& like) {
  ModelParams g = like;
  for (std::size_t i = 0; i < vars.encoder.size(); ++i) {
    take_grad(vars.encoder[i].weight, like.encoder[i].weight, g.encoder[i].weight);
    take_grad(vars.encoder[i].bias, like.encoder[i].bias, g.encoder[i].bias);
  }
  take_grad(vars.decoder.weight, like.decoder.weight, g.decoder.weight);
  take_grad(vars.decoder.bias, like.decoder.bias, g.decoder.bias);
  take_grad(vars.embed_head.weight, like.embed_head.weight, g.embed_head.weight);
  take_grad(vars.embed_head.bias, like.embed_head.bias, g.embed_head.bias);
  take_grad(vars.saliency_head.weight, like.saliency_head.weight, g.saliency_head.weight);
  take_grad(vars.saliency_head.bias, like.saliency_head.bias, g.saliency_head.bias);
  return g;
}

void check_input(const Tensor& image, const ModelConfig& config) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("model input must be [3,H,W], got " + shape_string(image.shape()));
  }
  const int f = config.downsample_factor();
  if (image.dim(1) % f != 0 || image.dim(2) % f != 0) {
    throw ShapeError("input " + shape_string(image.shape()) + " not divisible by downsampling factor " +
                     std::to_string(f));
  }
}

Var forward_features(const ModelVars& vars, Var image, const ModelConfig& config) {
  check_input(image.value(), config);
  // Fixed input standardisation: [0,1] -> [-2,2].
  Var h = scale(add(image, image.graph().constant(Tensor(image.shape(), Real(-0.5)))), 4.0);
  for (const auto& stage : vars.encoder) h = relu(conv2d(h, stage.weight, stage.bias, 2, 1));
  h = upsample_bilinear(h, config.downsample_factor());
  // No relu here: an all-zero feature vector would give a zero embedding.
  return conv2d(h, vars.decoder.weight, vars.decoder.bias, 1, 1);
}

ForwardVars forward(const ModelVars& vars, Var image, const ModelConfig& config) {
  ForwardVars out;
  out.features = forward_features(vars, image, config);
  Var raw = conv2d(out.features, vars.embed_head.weight, vars.embed_head.bias, 1, 0);
  out.embeddings = l2_normalize(raw, 0);
  Var sal = conv2d(out.features, vars.saliency_head.weight, vars.saliency_head.bias, 1, 0);
  out.saliency_logits = reshape(sal, Shape{image.value().dim(1), image.value().dim(2)});
  return out;
}

PixelEmbeddingMap predict(const ModelParams& params, const Tensor& image) {
  Graph g;
  const ModelVars vars = bind(g, params, false);
  const ForwardVars out = forward(vars, g.constant(image), params.config);
  return PixelEmbeddingMap{out.embeddings.value(), out.saliency_logits.value()};
}

void write_checkpoint(const std::filesystem::path& path, const ConstNamedTensors& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write("MCKP", 4);
  io::write_u32(out, kCheckpointVersion);
  for (const auto& [name, tensor] : records) {
    io::write_string(out, name);
    write_tensor(out, *tensor);
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MCKP", 4) != 0) {
    throw DataError(path.string() + ": bad MCKP magic");
  }
  const std::uint32_t version = io::read_u32(in);
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::vector<std::pair<std::string, Tensor>> records;
  while (in.peek() != std::char_traits<char>::eof()) {
    std::string name = io::read_string(in, 4096);
    records.emplace_back(std::move(name), read_tensor(in));
  }
  return records;
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  const Tensor input_size = Tensor::from(Shape{2}, {static_cast<double>(params.config.input_height),
                                                    static_cast<double>(params.config.input_width)});
  ConstNamedTensors records = params.tensors();
  records.emplace_back("meta.input_size", &input_size);
  write_checkpoint(path, records);
}

ModelParams model_from_records(const std::vector<std::pair<std::string, Tensor>>& records) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : records) by_name[name] = &t;
  auto need = [&](const std::string& name) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint missing record " + name);
    return *it->second;
  };

  ModelParams p;
  for (int i = 0;; ++i) {
    const std::string prefix = "encoder." + std::to_string(i);
    if (!by_name.count(prefix + ".weight")) break;
    p.encoder.push_back(ConvLayer{need(prefix + ".weight"), need(prefix + ".bias")});
  }
  if (p.encoder.empty()) throw DataError("checkpoint has no encoder stages");
  p.config.channels.clear();
  for (const auto& layer : p.encoder) p.config.channels.push_back(static_cast<int>(layer.weight.dim(0)));
  p.decoder = ConvLayer{need("decoder.weight"), need("decoder.bias")};
  p.embed_head = ConvLayer{need("embed_head.weight"), need("embed_head.bias")};
  p.saliency_head = ConvLayer{need("saliency_head.weight"), need("saliency_head.bias")};
  p.config.embed_dim = static_cast<int>(p.embed_head.weight.dim(0));
  if (auto it = by_name.find("meta.input_size"); it != by_name.end() && it->second->size() == 2) {
    p.config.input_height = static_cast<int>(std::lround((*it->second)[0]));
    p.config.input_width = static_cast<int>(std::lround((*it->second)[1]));
  }
  p.config.validate();
  // Layer shapes must chain.
  std::int64_t in = 3;
  for (const auto& layer : p.encoder) {
    if (layer.weight.rank() != 4 || layer.weight.dim(1) != in) throw DataError("checkpoint encoder shapes do not chain");
    in = layer.weight.dim(0);
  }
  if (p.decoder.weight.dim(1) != in || p.embed_head.weight.dim(1) != p.decoder.weight.dim(0) ||
      p.saliency_head.weight.dim(1) != p.decoder.weight.dim(0)) {
    throw DataError("checkpoint head shapes do not match the decoder");
  }
  return p;
}

ModelParams load_model(const std::filesystem::path& path) { return model_from_records(read_checkpoint(path)); }

MC_NAMESPACE_END
