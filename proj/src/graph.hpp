#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tensor.hpp"

namespace deepauction::diffcore {

// Reverse-mode automatic differentiation over dense tensors.
//
// A Graph is an append-only list of op nodes in topological order
// (inputs are created before their consumers, so node ids double as an
// evaluation order). Graphs are shape-agnostic in the batch dimension:
// shapes are inferred from the bound input tensors at evaluation time,
// so one graph serves any minibatch size. Graphs are immutable once
// built; evaluation state lives in an Executor, so several threads may
// evaluate the same graph through private executors.

enum class Op {
  kInput,
  kConst,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kAddRowVec,
  kMulRowVec,
  kScalarMul,
  kScalarAdd,
  kTanh,
  kSigmoid,
  kRelu,
  kExp,
  kLog,
  kMin,
  kMax,
  kMaxConst,
  kSoftmax,
  kGroupSoftmaxDummy,
  kGroupReduceMax,
  kGroupReduceMin,
  kReduceSumAll,
  kReduceSumAxis,
  kGatherCols,
  kConcatCols,
  kMinScatter,
};

const char* op_name(Op op);

// Describes strided column groups of a 2-d tensor: group g owns columns
// g*group_stride + k*member_stride for k in [0, size). Every column must
// belong to exactly one group.
struct GroupSpec {
  std::size_t count = 1;
  std::size_t size = 1;
  std::size_t member_stride = 1;
  std::size_t group_stride = 0;

  static GroupSpec contiguous(std::size_t count, std::size_t size) {
    return {count, size, 1, size};
  }
  static GroupSpec strided(std::size_t count, std::size_t size,
                           std::size_t member_stride) {
    return {count, size, member_stride, 1};
  }
  static GroupSpec whole_row(std::size_t size) { return {1, size, 1, 0}; }
};

struct Node {
  Op op;
  std::vector<int> inputs;
  std::string name;             // kInput
  Tensor constant;              // kConst
  double c = 0.0;               // scalar payload
  int axis = 1;                 // kSoftmax / kReduceSumAxis
  GroupSpec group;              // grouped ops
  std::vector<std::size_t> cols;  // kGatherCols / kMinScatter
};

class Graph {
 public:
  int input(const std::string& name);
  int constant(Tensor t);
  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int div(int a, int b);
  int add_row(int a, int v);
  int mul_row(int a, int v);
  int scalar_mul(int a, double c);
  int scalar_add(int a, double c);
  int tanh(int a);
  int sigmoid(int a);
  int relu(int a);
  int exp(int a);
  int log(int a);
  int min(int a, int b);
  int max(int a, int b);
  int max_const(int a, double c);
  int softmax(int a, int axis);
  int group_softmax_dummy(int a, GroupSpec spec);
  int group_reduce_max(int a, std::size_t count, std::size_t size);
  int group_reduce_min(int a, std::size_t count, std::size_t size);
  int reduce_sum(int a);
  int reduce_sum_axis(int a, int axis);
  int gather_cols(int a, std::vector<std::size_t> cols);
  int concat_cols(std::vector<int> parts);
  int min_scatter(int full, int sub, std::vector<std::size_t> cols);

  // Inner product of two same-shape tensors, as a composite.
  int dot(int a, int b) { return reduce_sum(mul(a, b)); }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int input_id(const std::string& name) const;
  const std::unordered_map<std::string, int>& input_ids() const {
    return input_ids_;
  }

 private:
  int push(Node n);
  void check_id(int id) const;

  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> input_ids_;
};

// Evaluation state for one graph. Reusable across calls: rebinding the
// inputs and calling forward() again recomputes every node with the
// buffers already allocated, which is what the training loops rely on.
class Executor {
 public:
  explicit Executor(const Graph& g);

  void bind(const std::string& name, Tensor value);
  void bind(int input_id, Tensor value);

  // Computes every node value, in id order.
  void forward();

  // Accumulates d(root)/d(node) for every node that feeds the scalar
  // root. Must follow a forward() on the same bindings.
  void backward(int root);

  const Tensor& value(int id) const;
  const Tensor& grad(int id) const;
  const Tensor& input_grad(const std::string& name) const;

  const Graph& graph() const { return *graph_; }

 private:
  void eval_node(int id);
  void accumulate(int id);
  const std::vector<char>& reach_mask(int root);

  const Graph* graph_;
  std::vector<Tensor> val_;
  std::vector<Tensor> grad_;
  std::vector<char> bound_;
  std::map<int, std::vector<char>> reach_cache_;
};

struct EvalGrad {
  Tensor value;
  std::map<std::string, Tensor> grads;
};

// One-shot evaluation with gradients w.r.t. the named inputs. The value
// node must be a scalar whenever gradients are requested.
EvalGrad eval_and_grad(const Graph& g, int value_node,
                       const std::map<std::string, Tensor>& bindings,
                       const std::vector<std::string>& wrt);

// Numerically stabilized softmax along an axis of a 1-d or 2-d tensor
// (axis 1 = along each row, axis 0 = along each column).
Tensor softmax(const Tensor& t, int axis);

}  // namespace deepauction::diffcore
