#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "maskcontrast/tensor.h"

MC_NAMESPACE_BEGIN

class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Value of a one-element node. Reductions keep their 64-bit accumulator,
  /// which is returned here instead of the rounded stored value.
  double scalar() const;
  /// Gradient accumulated by the last backward(); empty if none reached it.
  const Tensor& grad() const;

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

/// Local-gradient rule of a node.
enum class Op : std::uint8_t {
  kParameter,
  kConstant,
  kDetach,
  kConv2d,
  kRelu,
  kUpsample,
  kL2Normalize,
  kMatmul,
  kSoftmaxCrossEntropy,
  kBinaryCrossEntropy,
  kMaskedPool,
  kSelectPixels,
  kConcatRows,
  kScale,
  kAdd,
  kReshape,
  kSum,
};

/// Define-by-run reverse-mode graph over a fixed op set. Nodes are appended
/// in creation order, which is a topological order; backward() walks it in
/// reverse. Single-threaded.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that receives a gradient.
  Var parameter(Tensor value);
  /// Leaf that never receives a gradient.
  Var constant(Tensor value);

  /// Accumulates d(loss)/d(node) into every node that depends on a parameter.
  /// Throws if `loss` is not a one-element tensor. Gradients from a previous
  /// backward() are cleared first.
  void backward(Var loss);

  const Tensor& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  const Tensor& grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).grad; }
  Op op(int id) const { return nodes_.at(static_cast<std::size_t>(id)).op; }
  bool requires_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Ids of all nodes `v` depends on, including itself.
  std::set<int> ancestors(Var v) const;

  // Op constructors live in the free functions below.
  struct Node {
    Op op = Op::kConstant;
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    bool requires_grad = false;
    // Attributes, interpreted per op.
    int stride = 1;
    int padding = 0;
    int axis = 0;
    Real scale = Real(1);
    bool flag = false;
    std::vector<std::int64_t> indices;
    std::vector<Real> saved;
    std::optional<double> exact;
  };
  Var add_node(Node node);
  Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

 private:
  void propagate(int id);
  Tensor& parent_grad(int parent);

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable operations.

/// Cross-correlation of input [C_in,H,W] with kernel [C_out,C_in,kH,kW] plus
/// bias [C_out]. Output [C_out,H',W'], H' = (H + 2p - kH)/stride + 1.
Var conv2d(Var input, Var kernel, Var bias, int stride, int padding);
Var relu(Var x);
/// Half-pixel bilinear upsampling of [C,H,W] by an integer factor.
Var upsample_bilinear(Var x, int factor);
/// Unit-normalises every slice along `axis`. A slice with norm <= 1e-12 (a
/// pixel whose features are all dead) maps to zero and passes no gradient.
Var l2_normalize(Var x, int axis);
Var matmul(Var a, Var b);
/// Mean over rows of -log softmax(logits[p])[targets[p]]. Rows whose target
/// equals `ignore_index` are skipped.
Var softmax_cross_entropy(Var logits, std::span<const int> targets,
                          std::optional<int> ignore_index = std::nullopt);
/// Mean binary cross-entropy of logits against {0,1} targets of equal size.
Var binary_cross_entropy(Var logits, std::span<const std::uint8_t> targets);
/// Mean (or sum) over foreground pixels of emb [D,H,W]; result [D].
Var masked_mean_pool(Var embeddings, std::span<const std::uint8_t> mask);
Var masked_sum_pool(Var embeddings, std::span<const std::uint8_t> mask);
/// Gathers pixel vectors of [D,H,W] at flat pixel indices into [P,D].
Var select_pixels(Var embeddings, std::span<const std::int64_t> pixels);
/// Stacks [r_i, D] (or [D]) blocks into [sum r_i, D].
Var concat_rows(std::span<const Var> blocks);
Var scale(Var x, double factor);
Var add(Var a, Var b);
Var reshape(Var x, Shape shape);
Var sum(Var x);
/// Same value, no gradient flows to `x`.
Var detach(Var x);

MC_NAMESPACE_END
