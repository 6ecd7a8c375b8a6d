#pragma once

// Shared fixtures for the unit and acceptance tests. Header-only so it
// compiles against either precision flavour.

#include <vector>

#include "maskcontrast/contrast.h"
#include "maskcontrast/model.h"
#include "maskcontrast/rng.h"
#include "support/gradcheck.h"

MC_NAMESPACE_BEGIN
namespace testkit {

/// sum_i v_i * w_i with fixed random weights, to reduce any tensor to a
/// scalar with a non-degenerate gradient.
inline Var weighted_sum(Var v, std::uint64_t seed = 7) {
  const auto n = static_cast<std::int64_t>(v.value().size());
  Rng rng(seed);
  Tensor w = random_tensor(Shape{n, 1}, rng);
  return sum(matmul(reshape(v, Shape{1, n}), v.graph().constant(std::move(w))));
}

/// ModelVars over leaves given in ModelParams::tensors() order.
inline ModelVars vars_from(const std::vector<Var>& v, std::size_t stages) {
  ModelVars m;
  std::size_t i = 0;
  for (std::size_t s = 0; s < stages; ++s, i += 2) m.encoder.push_back(ConvVars{v[i], v[i + 1]});
  m.decoder = ConvVars{v[i], v[i + 1]};
  m.embed_head = ConvVars{v[i + 2], v[i + 3]};
  m.saliency_head = ConvVars{v[i + 4], v[i + 5]};
  return m;
}

inline std::vector<Tensor> param_list(const ModelParams& p) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : p.tensors()) out.push_back(*t);
  return out;
}

/// Two 16x16 images with fixed object masks, views taken verbatim (no
/// augmentation), and a small pre-filled bank.
struct ObjectiveFixture {
  ModelConfig config;
  ModelParams query;
  ModelParams key;
  std::vector<ViewPair> batch;
  MemoryBank bank{4, 6};
  LossConfig loss;

  ObjectiveFixture() {
    config.embed_dim = 6;
    config.channels = {4, 6};
    config.input_height = config.input_width = 16;
    query = init_model(config, 11);
    key = init_model(config, 12);
    Rng rng(3);
    // Positive biases keep most relu inputs away from the kink, where finite
    // differences are meaningless.
    for (ModelParams* p : {&query, &key})
      for (auto& [name, t] : p->tensors())
        if (t->rank() == 1) *t = random_tensor(t->shape(), rng, 0.8, 1.5);
    for (int n = 0; n < 2; ++n) {
      ObjectMask qm(16, 16), km(16, 16);
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
          qm.set(y, x, n == 0 ? (y >= 3 && y < 10 && x >= 4 && x < 12) : (x + y < 12));
          km.set(y, x, n == 0 ? (y >= 5 && y < 14 && x >= 2 && x < 9) : (x > y));
        }
      batch.push_back(ViewPair{View{random_tensor(Shape{3, 16, 16}, rng, 0.0, 1.0), qm},
                               View{random_tensor(Shape{3, 16, 16}, rng, 0.0, 1.0), km}});
    }
    Tensor entries = random_tensor(Shape{3, 6}, rng);
    for (std::int64_t r = 0; r < 3; ++r) {
      double n2 = 0;
      for (std::int64_t c = 0; c < 6; ++c) n2 += entries[static_cast<std::size_t>(r * 6 + c)] * entries[static_cast<std::size_t>(r * 6 + c)];
      for (std::int64_t c = 0; c < 6; ++c) entries[static_cast<std::size_t>(r * 6 + c)] = static_cast<Real>(entries[static_cast<std::size_t>(r * 6 + c)] / std::sqrt(n2));
    }
    bank.enqueue(entries);
  }

  /// Total loss as a function of the query parameters.
  LossBuilder total_loss_builder() const {
    return [this](Graph& g, const std::vector<Var>& leaves) {
      const ModelVars q = vars_from(leaves, config.channels.size());
      const ModelVars k = bind(g, key, false);
      return maskcontrast_objective(g, q, k, config, batch, bank, loss)->total;
    };
  }
};

}  // namespace testkit
MC_NAMESPACE_END
