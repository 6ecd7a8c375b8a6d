#include "maskcontrast/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskcontrast/kernels.h"

MC_NAMESPACE_BEGIN

namespace {

constexpr double kNormEpsilon = 1e-12;

Graph& graph_of(std::initializer_list<Var> vars) {
  Graph* g = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw Error("operation on an unbound Var");
    if (g && &v.graph() != g) throw Error("operation mixes Vars from different graphs");
    g = &v.graph();
  }
  return *g;
}

bool any_requires_grad(const Graph& g, std::initializer_list<Var> vars) {
  for (const Var& v : vars)
    if (g.requires_grad(v.id())) return true;
  return false;
}

Graph::Node make_node(Op op, Tensor value, std::initializer_list<Var> parents, const Graph& g) {
  Graph::Node n;
  n.op = op;
  n.value = std::move(value);
  n.requires_grad = any_requires_grad(g, parents);
  for (const Var& p : parents) n.parents.push_back(p.id());
  return n;
}

// View of an axis as [outer, extent, inner].
struct AxisView {
  std::int64_t outer = 1;
  std::int64_t extent = 1;
  std::int64_t inner = 1;
};

AxisView axis_view(const Shape& shape, int axis) {
  const int rank = static_cast<int>(shape.size());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("axis out of range for shape " + shape_string(shape));
  AxisView v;
  for (int i = 0; i < axis; ++i) v.outer *= shape[static_cast<std::size_t>(i)];
  v.extent = shape[static_cast<std::size_t>(axis)];
  for (int i = axis + 1; i < rank; ++i) v.inner *= shape[static_cast<std::size_t>(i)];
  return v;
}

double log1p_exp_neg_abs(double x) { return std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }

double Var::scalar() const {
  const auto& n = graph_->node(id_);
  if (n.exact) return *n.exact;
  return static_cast<double>(n.value.item());
}

Var Graph::add_node(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::parameter(Tensor value) {
  Node n;
  n.op = Op::kParameter;
  n.value = std::move(value);
  n.requires_grad = true;
  return add_node(std::move(n));
}

Var Graph::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return add_node(std::move(n));
}

std::set<int> Graph::ancestors(Var v) const {
  std::set<int> seen;
  std::vector<int> stack{v.id()};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) continue;
    for (int p : node(id).parents) stack.push_back(p);
  }
  return seen;
}

Tensor& Graph::parent_grad(int parent) {
  Node& p = node(parent);
  if (p.grad.empty()) p.grad = Tensor(p.value.shape());
  return p.grad;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw Error("backward on a Var of another graph");
  if (value(loss.id()).size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_string(value(loss.id()).shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  Node& root = node(loss.id());
  root.grad = Tensor(root.value.shape(), Real(1));
  for (int id = loss.id(); id >= 0; --id) {
    const Node& n = node(id);
    if (n.grad.empty() || !n.requires_grad) continue;
    propagate(id);
  }
}

void Graph::propagate(int id) {
  // Parents are always older than the node, so references into nodes_ stay
  // valid: propagate never appends.
  Node& n = node(id);
  const Tensor& g = n.grad;
  auto wants = [&](std::size_t i) { return node(n.parents[i]).requires_grad; };

  switch (n.op) {
    case Op::kParameter:
    case Op::kConstant:
    case Op::kDetach:
      return;

    case Op::kConv2d: {
      const Tensor& x = node(n.parents[0]).value;
      const Tensor& w = node(n.parents[1]).value;
      const Tensor& b = node(n.parents[2]).value;
      const kernels::ConvGeometry geo = kernels::conv_geometry(x.shape(), w.shape(), b.shape(), n.stride, n.padding);
      const std::int64_t pix = geo.out_pixels();
      const std::int64_t patch = geo.patch_size();
      if (wants(2)) {
        Tensor& db = parent_grad(n.parents[2]);
        for (std::int64_t o = 0; o < geo.out_channels; ++o) {
          double acc = 0;
          const Real* row = g.data() + o * pix;
          for (std::int64_t i = 0; i < pix; ++i) acc += row[i];
          db[static_cast<std::size_t>(o)] += static_cast<Real>(acc);
        }
      }
      if (wants(1)) {
        std::vector<Real> cols_t(static_cast<std::size_t>(patch * pix));
        kernels::transpose(patch, pix, n.saved.data(), cols_t.data());
        kernels::gemm(geo.out_channels, patch, pix, g.data(), cols_t.data(), parent_grad(n.parents[1]).data(), true);
      }
      if (wants(0)) {
        std::vector<Real> dcols(static_cast<std::size_t>(patch * pix));
        kernels::gemm_tn(patch, pix, geo.out_channels, w.data(), g.data(), dcols.data(), false);
        Tensor& dx = parent_grad(n.parents[0]);
        if (n.flag) {
          for (std::size_t i = 0; i < dcols.size(); ++i) dx[i] += dcols[i];
        } else {
          kernels::col2im(dcols.data(), geo, dx.data());
        }
      }
      return;
    }

    case Op::kRelu: {
      if (!wants(0)) return;
      Tensor& dx = parent_grad(n.parents[0]);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (n.value[i] > Real(0)) dx[i] += g[i];
      return;
    }

    case Op::kUpsample: {
      if (!wants(0)) return;
      const Tensor back = kernels::upsample_bilinear_adjoint(g, node(n.parents[0]).value.shape(), n.stride);
      Tensor& dx = parent_grad(n.parents[0]);
      for (std::size_t i = 0; i < back.size(); ++i) dx[i] += back[i];
      return;
    }

    case Op::kL2Normalize: {
      if (!wants(0)) return;
      const AxisView v = axis_view(n.value.shape(), n.axis);
      Tensor& dx = parent_grad(n.parents[0]);
      for (std::int64_t o = 0; o < v.outer; ++o)
        for (std::int64_t in = 0; in < v.inner; ++in) {
          const std::int64_t base = o * v.extent * v.inner + in;
          double dot = 0;
          for (std::int64_t d = 0; d < v.extent; ++d) {
            const auto i = static_cast<std::size_t>(base + d * v.inner);
            dot += static_cast<double>(n.value[i]) * g[i];
          }
          const Real norm = n.saved[static_cast<std::size_t>(o * v.inner + in)];
          if (norm == 0) continue;
          const double inv = 1.0 / norm;
          for (std::int64_t d = 0; d < v.extent; ++d) {
            const auto i = static_cast<std::size_t>(base + d * v.inner);
            dx[i] += static_cast<Real>((g[i] - n.value[i] * dot) * inv);
          }
        }
      return;
    }

    case Op::kMatmul: {
      const Tensor& a = node(n.parents[0]).value;
      const Tensor& b = node(n.parents[1]).value;
      const std::int64_t m = a.dim(0), k = a.dim(1), cols = b.dim(1);
      if (wants(0)) {
        std::vector<Real> bt(static_cast<std::size_t>(k * cols));
        kernels::transpose(k, cols, b.data(), bt.data());
        kernels::gemm(m, k, cols, g.data(), bt.data(), parent_grad(n.parents[0]).data(), true);
      }
      if (wants(1)) kernels::gemm_tn(k, cols, m, a.data(), g.data(), parent_grad(n.parents[1]).data(), true);
      return;
    }

    case Op::kSoftmaxCrossEntropy: {
      if (!wants(0) || n.indices.empty()) return;
      // saved: softmax probabilities; indices: target per row (-1 = ignored);
      // scale: 1 / counted rows.
      const Tensor& logits = node(n.parents[0]).value;
      const std::int64_t rows = logits.dim(0), cols = logits.dim(1);
      Tensor& dx = parent_grad(n.parents[0]);
      const double coef = static_cast<double>(g[0]) * n.scale;
      for (std::int64_t r = 0; r < rows; ++r) {
        const std::int64_t t = n.indices[static_cast<std::size_t>(r)];
        if (t < 0) continue;
        for (std::int64_t c = 0; c < cols; ++c) {
          const auto i = static_cast<std::size_t>(r * cols + c);
          const double target = (c == t) ? 1.0 : 0.0;
          dx[i] += static_cast<Real>(coef * (n.saved[i] - target));
        }
      }
      return;
    }

    case Op::kBinaryCrossEntropy: {
      if (!wants(0)) return;
      const Tensor& logits = node(n.parents[0]).value;
      Tensor& dx = parent_grad(n.parents[0]);
      const double coef = static_cast<double>(g[0]) / static_cast<double>(logits.size());
      for (std::size_t i = 0; i < logits.size(); ++i) {
        const double t = static_cast<double>(n.indices[i]);
        dx[i] += static_cast<Real>(coef * (sigmoid(logits[i]) - t));
      }
      return;
    }

    case Op::kMaskedPool: {
      if (!wants(0)) return;
      const Tensor& emb = node(n.parents[0]).value;
      const std::int64_t d = emb.dim(0), pix = emb.dim(1) * emb.dim(2);
      Tensor& dx = parent_grad(n.parents[0]);
      for (std::int64_t c = 0; c < d; ++c) {
        const Real gc = static_cast<Real>(g[static_cast<std::size_t>(c)] * n.scale);
        for (std::int64_t p : n.indices) dx[static_cast<std::size_t>(c * pix + p)] += gc;
      }
      return;
    }

    case Op::kSelectPixels: {
      if (!wants(0)) return;
      const Tensor& emb = node(n.parents[0]).value;
      const std::int64_t d = emb.dim(0), pix = emb.dim(1) * emb.dim(2);
      Tensor& dx = parent_grad(n.parents[0]);
      for (std::size_t r = 0; r < n.indices.size(); ++r) {
        const std::int64_t p = n.indices[r];
        for (std::int64_t c = 0; c < d; ++c)
          dx[static_cast<std::size_t>(c * pix + p)] += g[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
      }
      return;
    }

    case Op::kConcatRows: {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < n.parents.size(); ++i) {
        const std::size_t len = node(n.parents[i]).value.size();
        if (wants(i)) {
          Tensor& dx = parent_grad(n.parents[i]);
          for (std::size_t j = 0; j < len; ++j) dx[j] += g[offset + j];
        }
        offset += len;
      }
      return;
    }

    case Op::kScale: {
      if (!wants(0)) return;
      Tensor& dx = parent_grad(n.parents[0]);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += n.scale * g[i];
      return;
    }

    case Op::kAdd: {
      for (std::size_t p = 0; p < 2; ++p) {
        if (!wants(p)) continue;
        Tensor& dx = parent_grad(n.parents[p]);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      }
      return;
    }

    case Op::kReshape: {
      if (!wants(0)) return;
      Tensor& dx = parent_grad(n.parents[0]);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      return;
    }

    case Op::kSum: {
      if (!wants(0)) return;
      Tensor& dx = parent_grad(n.parents[0]);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[0];
      return;
    }
  }
}

// ---------------------------------------------------------------------------

Var conv2d(Var input, Var kernel, Var bias, int stride, int padding) {
  Graph& g = graph_of({input, kernel, bias});
  std::vector<Real> cols;
  Tensor out = kernels::conv2d(input.value(), kernel.value(), bias.value(), stride, padding, &cols);
  Graph::Node n = make_node(Op::kConv2d, std::move(out), {input, kernel, bias}, g);
  n.stride = stride;
  n.padding = padding;
  const Shape& ks = kernel.shape();
  n.flag = ks[2] == 1 && ks[3] == 1 && stride == 1 && padding == 0;
  if (g.requires_grad(kernel.id())) n.saved = std::move(cols);
  return g.add_node(std::move(n));
}

Var relu(Var x) {
  Graph& g = graph_of({x});
  Tensor out = x.value();
  for (Real& v : out.values()) v = v > Real(0) ? v : Real(0);
  return g.add_node(make_node(Op::kRelu, std::move(out), {x}, g));
}

Var upsample_bilinear(Var x, int factor) {
  Graph& g = graph_of({x});
  Graph::Node n = make_node(Op::kUpsample, kernels::upsample_bilinear(x.value(), factor), {x}, g);
  n.stride = factor;
  return g.add_node(std::move(n));
}

Var l2_normalize(Var x, int axis) {
  Graph& g = graph_of({x});
  const Tensor& in = x.value();
  const AxisView v = axis_view(in.shape(), axis);
  Tensor out(in.shape());
  std::vector<Real> norms(static_cast<std::size_t>(v.outer * v.inner));
  for (std::int64_t o = 0; o < v.outer; ++o)
    for (std::int64_t i = 0; i < v.inner; ++i) {
      const std::int64_t base = o * v.extent * v.inner + i;
      double sq = 0;
      for (std::int64_t d = 0; d < v.extent; ++d) {
        const double e = in[static_cast<std::size_t>(base + d * v.inner)];
        sq += e * e;
      }
      const double norm = std::sqrt(sq);
      if (!std::isfinite(norm)) throw NumericError("l2_normalize: non-finite input");
      // Degenerate slices stay zero; a saved norm of 0 marks them for backward.
      if (!(norm > kNormEpsilon)) continue;
      norms[static_cast<std::size_t>(o * v.inner + i)] = static_cast<Real>(norm);
      for (std::int64_t d = 0; d < v.extent; ++d) {
        const auto k = static_cast<std::size_t>(base + d * v.inner);
        out[k] = static_cast<Real>(in[k] / norm);
      }
    }
  Graph::Node n = make_node(Op::kL2Normalize, std::move(out), {x}, g);
  n.axis = axis;
  n.saved = std::move(norms);
  return g.add_node(std::move(n));
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of({a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul shape mismatch: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  Tensor out(Shape{av.dim(0), bv.dim(1)});
  kernels::gemm(av.dim(0), bv.dim(1), av.dim(1), av.data(), bv.data(), out.data(), false);
  return g.add_node(make_node(Op::kMatmul, std::move(out), {a, b}, g));
}

Var softmax_cross_entropy(Var logits, std::span<const int> targets, std::optional<int> ignore_index) {
  Graph& g = graph_of({logits});
  const Tensor& l = logits.value();
  if (l.rank() != 2) throw ShapeError("softmax_cross_entropy expects [P,M], got " + shape_string(l.shape()));
  const std::int64_t rows = l.dim(0), cols = l.dim(1);
  if (static_cast<std::int64_t>(targets.size()) != rows) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(rows) + " rows");
  }
  std::vector<Real> probs(l.size());
  std::vector<std::int64_t> t(static_cast<std::size_t>(rows));
  double total = 0;
  std::int64_t counted = 0;
  for (std::int64_t r = 0; r < rows; ++r) {
    const int target = targets[static_cast<std::size_t>(r)];
    if (ignore_index && target == *ignore_index) {
      t[static_cast<std::size_t>(r)] = -1;
      continue;
    }
    if (target < 0 || target >= cols) {
      throw DataError("softmax_cross_entropy: target " + std::to_string(target) + " out of range [0," +
                      std::to_string(cols) + ") at row " + std::to_string(r));
    }
    t[static_cast<std::size_t>(r)] = target;
    const Real* row = l.data() + r * cols;
    double mx = row[0];
    for (std::int64_t c = 1; c < cols; ++c) mx = std::max(mx, static_cast<double>(row[c]));
    double z = 0;
    for (std::int64_t c = 0; c < cols; ++c) z += std::exp(static_cast<double>(row[c]) - mx);
    const double lse = mx + std::log(z);
    for (std::int64_t c = 0; c < cols; ++c)
      probs[static_cast<std::size_t>(r * cols + c)] = static_cast<Real>(std::exp(static_cast<double>(row[c]) - lse));
    total += lse - static_cast<double>(row[target]);
    ++counted;
  }
  const double loss = counted ? total / static_cast<double>(counted) : 0.0;
  Graph::Node n = make_node(Op::kSoftmaxCrossEntropy, Tensor::scalar(static_cast<Real>(loss)), {logits}, g);
  n.exact = loss;
  n.scale = counted ? static_cast<Real>(1.0 / static_cast<double>(counted)) : Real(0);
  if (counted == 0) t.clear();
  n.indices = std::move(t);
  n.saved = std::move(probs);
  return g.add_node(std::move(n));
}

Var binary_cross_entropy(Var logits, std::span<const std::uint8_t> targets) {
  Graph& g = graph_of({logits});
  const Tensor& l = logits.value();
  if (targets.size() != l.size()) {
    throw ShapeError("binary_cross_entropy: " + std::to_string(targets.size()) + " targets for logits of shape " +
                     shape_string(l.shape()));
  }
  std::vector<std::int64_t> t(targets.size());
  double total = 0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (targets[i] > 1) throw DataError("binary_cross_entropy: target values must be 0 or 1");
    const double x = l[i];
    const double y = targets[i];
    total += std::max(x, 0.0) - x * y + log1p_exp_neg_abs(x);
    t[i] = targets[i];
  }
  const double loss = total / static_cast<double>(l.size());
  Graph::Node n = make_node(Op::kBinaryCrossEntropy, Tensor::scalar(static_cast<Real>(loss)), {logits}, g);
  n.exact = loss;
  n.indices = std::move(t);
  return g.add_node(std::move(n));
}

namespace {

Var masked_pool(Var embeddings, std::span<const std::uint8_t> mask, bool mean) {
  Graph& g = graph_of({embeddings});
  const Tensor& e = embeddings.value();
  if (e.rank() != 3) throw ShapeError("masked pool expects [D,H,W], got " + shape_string(e.shape()));
  const std::int64_t d = e.dim(0), pix = e.dim(1) * e.dim(2);
  if (static_cast<std::int64_t>(mask.size()) != pix) {
    throw ShapeError("masked pool: mask of " + std::to_string(mask.size()) + " pixels for embeddings " +
                     shape_string(e.shape()));
  }
  std::vector<std::int64_t> fg;
  for (std::int64_t p = 0; p < pix; ++p)
    if (mask[static_cast<std::size_t>(p)]) fg.push_back(p);
  if (fg.empty()) throw DataError("masked pool over an empty mask");
  const double coef = mean ? 1.0 / static_cast<double>(fg.size()) : 1.0;
  Tensor out(Shape{d});
  for (std::int64_t c = 0; c < d; ++c) {
    double acc = 0;
    const Real* plane = e.data() + c * pix;
    for (std::int64_t p : fg) acc += plane[p];
    out[static_cast<std::size_t>(c)] = static_cast<Real>(acc * coef);
  }
  Graph::Node n = make_node(Op::kMaskedPool, std::move(out), {embeddings}, g);
  n.scale = static_cast<Real>(coef);
  n.indices = std::move(fg);
  return g.add_node(std::move(n));
}

}  // namespace

Var masked_mean_pool(Var embeddings, std::span<const std::uint8_t> mask) { return masked_pool(embeddings, mask, true); }

Var masked_sum_pool(Var embeddings, std::span<const std::uint8_t> mask) { return masked_pool(embeddings, mask, false); }

Var select_pixels(Var embeddings, std::span<const std::int64_t> pixels) {
  Graph& g = graph_of({embeddings});
  const Tensor& e = embeddings.value();
  if (e.rank() != 3) throw ShapeError("select_pixels expects [D,H,W], got " + shape_string(e.shape()));
  const std::int64_t d = e.dim(0), pix = e.dim(1) * e.dim(2);
  const auto rows = static_cast<std::int64_t>(pixels.size());
  if (rows == 0) throw ShapeError("select_pixels: no pixels selected");
  Tensor out(Shape{rows, d});
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::int64_t p = pixels[static_cast<std::size_t>(r)];
    if (p < 0 || p >= pix) throw ShapeError("select_pixels: pixel index " + std::to_string(p) + " out of range");
    for (std::int64_t c = 0; c < d; ++c) out[static_cast<std::size_t>(r * d + c)] = e[static_cast<std::size_t>(c * pix + p)];
  }
  Graph::Node n = make_node(Op::kSelectPixels, std::move(out), {embeddings}, g);
  n.indices.assign(pixels.begin(), pixels.end());
  return g.add_node(std::move(n));
}

Var concat_rows(std::span<const Var> blocks) {
  if (blocks.empty()) throw ShapeError("concat_rows of nothing");
  Graph& g = blocks[0].graph();
  std::int64_t width = -1, rows = 0;
  std::vector<Real> values;
  Graph::Node n;
  n.op = Op::kConcatRows;
  for (const Var& b : blocks) {
    if (&b.graph() != &g) throw Error("operation mixes Vars from different graphs");
    const Tensor& t = b.value();
    std::int64_t r, w;
    if (t.rank() == 1) {
      r = 1;
      w = t.dim(0);
    } else if (t.rank() == 2) {
      r = t.dim(0);
      w = t.dim(1);
    } else {
      throw ShapeError("concat_rows expects rank 1 or 2 blocks, got " + shape_string(t.shape()));
    }
    if (width >= 0 && w != width) {
      throw ShapeError("concat_rows width mismatch: " + std::to_string(width) + " vs " + std::to_string(w));
    }
    width = w;
    rows += r;
    values.insert(values.end(), t.values().begin(), t.values().end());
    n.parents.push_back(b.id());
    n.requires_grad = n.requires_grad || g.requires_grad(b.id());
  }
  n.value = Tensor(Shape{rows, width}, std::move(values));
  return g.add_node(std::move(n));
}

Var scale(Var x, double factor) {
  Graph& g = graph_of({x});
  Tensor out = x.value();
  const Real f = static_cast<Real>(factor);
  for (Real& v : out.values()) v *= f;
  Graph::Node n = make_node(Op::kScale, std::move(out), {x}, g);
  n.scale = f;
  if (x.value().size() == 1) n.exact = factor * x.scalar();
  return g.add_node(std::move(n));
}

Var add(Var a, Var b) {
  Graph& g = graph_of({a, b});
  if (a.shape() != b.shape()) {
    throw ShapeError("add shape mismatch: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  Graph::Node n = make_node(Op::kAdd, std::move(out), {a, b}, g);
  if (bv.size() == 1) n.exact = a.scalar() + b.scalar();
  return g.add_node(std::move(n));
}

Var reshape(Var x, Shape shape) {
  Graph& g = graph_of({x});
  return g.add_node(make_node(Op::kReshape, x.value().reshaped(std::move(shape)), {x}, g));
}

Var sum(Var x) {
  Graph& g = graph_of({x});
  double acc = 0;
  for (Real v : x.value().values()) acc += v;
  Graph::Node n = make_node(Op::kSum, Tensor::scalar(static_cast<Real>(acc)), {x}, g);
  n.exact = acc;
  return g.add_node(std::move(n));
}

Var detach(Var x) {
  Graph& g = graph_of({x});
  Graph::Node n;
  n.op = Op::kDetach;
  n.value = x.value();
  n.parents = {x.id()};
  n.requires_grad = false;
  return g.add_node(std::move(n));
}

MC_NAMESPACE_END
