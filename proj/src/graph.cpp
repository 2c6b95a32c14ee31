#include "graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace deepauction::diffcore {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const MatRM>;
using MutMap = Eigen::Map<MatRM>;

[[noreturn]] void fail(int id, Op op, const std::string& msg) {
  std::ostringstream os;
  os << op_name(op) << " node " << id << ": " << msg;
  throw DiffError(os.str());
}

void ensure_shape(Tensor& t, const std::vector<std::size_t>& shape) {
  std::size_t need = 1;
  for (std::size_t d : shape) need *= d;
  if (t.shape() != shape || t.size() != need) t = Tensor(shape);
}

// Treats rank-0/rank-1 tensors as 1-row matrices.
std::size_t rows_of(const Tensor& t) { return t.rank() == 2 ? t.shape()[0] : 1; }
std::size_t cols_of(const Tensor& t) {
  if (t.rank() == 2) return t.shape()[1];
  if (t.rank() == 1) return t.shape()[0];
  return 1;
}

bool broadcast_pair(const Tensor& a, const Tensor& b) {
  return a.is_scalar() || b.is_scalar();
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kConst: return "const";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kAddRowVec: return "add_row";
    case Op::kMulRowVec: return "mul_row";
    case Op::kScalarMul: return "scalar_mul";
    case Op::kScalarAdd: return "scalar_add";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kMin: return "min";
    case Op::kMax: return "max";
    case Op::kMaxConst: return "max_const";
    case Op::kSoftmax: return "softmax";
    case Op::kGroupSoftmaxDummy: return "group_softmax_dummy";
    case Op::kGroupReduceMax: return "group_reduce_max";
    case Op::kGroupReduceMin: return "group_reduce_min";
    case Op::kReduceSumAll: return "reduce_sum";
    case Op::kReduceSumAxis: return "reduce_sum_axis";
    case Op::kGatherCols: return "gather_cols";
    case Op::kConcatCols: return "concat_cols";
    case Op::kMinScatter: return "min_scatter";
  }
  return "?";
}

int Graph::push(Node n) {
  for (int in : n.inputs) check_id(in);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Graph::check_id(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw DiffError("graph: input id out of range");
  }
}

int Graph::input(const std::string& name) {
  auto it = input_ids_.find(name);
  if (it != input_ids_.end()) return it->second;
  Node n;
  n.op = Op::kInput;
  n.name = name;
  int id = push(std::move(n));
  input_ids_[name] = id;
  return id;
}

int Graph::constant(Tensor t) {
  Node n;
  n.op = Op::kConst;
  n.constant = std::move(t);
  return push(std::move(n));
}

#define DA_BINARY(fn, opk)                     \
  int Graph::fn(int a, int b) {                \
    Node n;                                    \
    n.op = opk;                                \
    n.inputs = {a, b};                         \
    return push(std::move(n));                 \
  }

DA_BINARY(matmul, Op::kMatMul)
DA_BINARY(add, Op::kAdd)
DA_BINARY(sub, Op::kSub)
DA_BINARY(mul, Op::kMul)
DA_BINARY(div, Op::kDiv)
DA_BINARY(add_row, Op::kAddRowVec)
DA_BINARY(mul_row, Op::kMulRowVec)
DA_BINARY(min, Op::kMin)
DA_BINARY(max, Op::kMax)
#undef DA_BINARY

#define DA_UNARY(fn, opk)      \
  int Graph::fn(int a) {       \
    Node n;                    \
    n.op = opk;                \
    n.inputs = {a};            \
    return push(std::move(n)); \
  }

DA_UNARY(tanh, Op::kTanh)
DA_UNARY(sigmoid, Op::kSigmoid)
DA_UNARY(relu, Op::kRelu)
DA_UNARY(exp, Op::kExp)
DA_UNARY(log, Op::kLog)
DA_UNARY(reduce_sum, Op::kReduceSumAll)
#undef DA_UNARY

int Graph::scalar_mul(int a, double c) {
  Node n;
  n.op = Op::kScalarMul;
  n.inputs = {a};
  n.c = c;
  return push(std::move(n));
}

int Graph::scalar_add(int a, double c) {
  Node n;
  n.op = Op::kScalarAdd;
  n.inputs = {a};
  n.c = c;
  return push(std::move(n));
}

int Graph::max_const(int a, double c) {
  Node n;
  n.op = Op::kMaxConst;
  n.inputs = {a};
  n.c = c;
  return push(std::move(n));
}

int Graph::softmax(int a, int axis) {
  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {a};
  n.axis = axis;
  return push(std::move(n));
}

int Graph::group_softmax_dummy(int a, GroupSpec spec) {
  Node n;
  n.op = Op::kGroupSoftmaxDummy;
  n.inputs = {a};
  n.group = spec;
  return push(std::move(n));
}

int Graph::group_reduce_max(int a, std::size_t count, std::size_t size) {
  Node n;
  n.op = Op::kGroupReduceMax;
  n.inputs = {a};
  n.group = GroupSpec::contiguous(count, size);
  return push(std::move(n));
}

int Graph::group_reduce_min(int a, std::size_t count, std::size_t size) {
  Node n;
  n.op = Op::kGroupReduceMin;
  n.inputs = {a};
  n.group = GroupSpec::contiguous(count, size);
  return push(std::move(n));
}

int Graph::reduce_sum_axis(int a, int axis) {
  Node n;
  n.op = Op::kReduceSumAxis;
  n.inputs = {a};
  n.axis = axis;
  return push(std::move(n));
}

int Graph::gather_cols(int a, std::vector<std::size_t> cols) {
  Node n;
  n.op = Op::kGatherCols;
  n.inputs = {a};
  n.cols = std::move(cols);
  return push(std::move(n));
}

int Graph::concat_cols(std::vector<int> parts) {
  Node n;
  n.op = Op::kConcatCols;
  n.inputs = std::move(parts);
  return push(std::move(n));
}

int Graph::min_scatter(int full, int sub, std::vector<std::size_t> cols) {
  Node n;
  n.op = Op::kMinScatter;
  n.inputs = {full, sub};
  n.cols = std::move(cols);
  return push(std::move(n));
}

int Graph::input_id(const std::string& name) const {
  auto it = input_ids_.find(name);
  if (it == input_ids_.end()) {
    throw DiffError("graph: no input named '" + name + "'");
  }
  return it->second;
}

Executor::Executor(const Graph& g)
    : graph_(&g), val_(g.size()), grad_(g.size()), bound_(g.size(), 0) {}

void Executor::bind(const std::string& name, Tensor value) {
  bind(graph_->input_id(name), std::move(value));
}

void Executor::bind(int input_id, Tensor value) {
  if (graph_->node(input_id).op != Op::kInput) {
    throw DiffError("executor: bind target is not an input node");
  }
  val_[static_cast<std::size_t>(input_id)] = std::move(value);
  bound_[static_cast<std::size_t>(input_id)] = 1;
}

const Tensor& Executor::value(int id) const {
  return val_[static_cast<std::size_t>(id)];
}

const Tensor& Executor::grad(int id) const {
  return grad_[static_cast<std::size_t>(id)];
}

const Tensor& Executor::input_grad(const std::string& name) const {
  return grad(graph_->input_id(name));
}

void Executor::forward() {
  for (int id = 0; id < static_cast<int>(graph_->size()); ++id) eval_node(id);
}

void Executor::eval_node(int id) {
  const Node& n = graph_->node(id);
  Tensor& out = val_[static_cast<std::size_t>(id)];
  auto in = [&](int k) -> const Tensor& {
    return val_[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(k)])];
  };

  switch (n.op) {
    case Op::kInput:
      if (!bound_[static_cast<std::size_t>(id)]) {
        fail(id, n.op, "input '" + n.name + "' is unbound");
      }
      return;
    case Op::kConst:
      out = n.constant;
      return;

    case Op::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      std::size_t p = rows_of(a), q = cols_of(a);
      std::size_t q2 = rows_of(b), r = cols_of(b);
      if (q != q2) {
        fail(id, n.op,
             "shape mismatch " + a.shape_string() + " x " + b.shape_string());
      }
      ensure_shape(out, {p, r});
      MutMap(out.data(), p, r).noalias() =
          ConstMap(a.data(), p, q) * ConstMap(b.data(), q, r);
      return;
    }

    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (!a.same_shape(b) && !broadcast_pair(a, b)) {
        fail(id, n.op,
             "shape mismatch " + a.shape_string() + " vs " + b.shape_string());
      }
      const Tensor& big = a.is_scalar() && !b.is_scalar() ? b : a;
      ensure_shape(out, big.shape());
      std::size_t len = big.size();
      const double* pa = a.data();
      const double* pb = b.data();
      std::size_t sa = a.is_scalar() ? 0 : 1;
      std::size_t sb = b.is_scalar() ? 0 : 1;
      double* po = out.data();
      switch (n.op) {
        case Op::kAdd:
          for (std::size_t i = 0; i < len; ++i) po[i] = pa[i * sa] + pb[i * sb];
          break;
        case Op::kSub:
          for (std::size_t i = 0; i < len; ++i) po[i] = pa[i * sa] - pb[i * sb];
          break;
        case Op::kMul:
          for (std::size_t i = 0; i < len; ++i) po[i] = pa[i * sa] * pb[i * sb];
          break;
        default:
          for (std::size_t i = 0; i < len; ++i) po[i] = pa[i * sa] / pb[i * sb];
          break;
      }
      return;
    }

    case Op::kAddRowVec:
    case Op::kMulRowVec: {
      const Tensor& a = in(0);
      const Tensor& v = in(1);
      std::size_t r = rows_of(a), c = cols_of(a);
      if (v.size() != c) {
        fail(id, n.op,
             "row vector " + v.shape_string() + " does not match " +
                 a.shape_string());
      }
      ensure_shape(out, a.shape());
      const double* pa = a.data();
      const double* pv = v.data();
      double* po = out.data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          po[i * c + j] = n.op == Op::kAddRowVec ? pa[i * c + j] + pv[j]
                                                 : pa[i * c + j] * pv[j];
        }
      }
      return;
    }

    case Op::kScalarMul:
    case Op::kScalarAdd: {
      const Tensor& a = in(0);
      ensure_shape(out, a.shape());
      const double* pa = a.data();
      double* po = out.data();
      if (n.op == Op::kScalarMul) {
        for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * n.c;
      } else {
        for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] + n.c;
      }
      return;
    }

    case Op::kTanh:
    case Op::kSigmoid:
    case Op::kRelu:
    case Op::kExp:
    case Op::kLog:
    case Op::kMaxConst: {
      const Tensor& a = in(0);
      ensure_shape(out, a.shape());
      const double* pa = a.data();
      double* po = out.data();
      std::size_t len = a.size();
      switch (n.op) {
        case Op::kTanh:
          for (std::size_t i = 0; i < len; ++i) po[i] = std::tanh(pa[i]);
          break;
        case Op::kSigmoid:
          for (std::size_t i = 0; i < len; ++i)
            po[i] = 1.0 / (1.0 + std::exp(-pa[i]));
          break;
        case Op::kRelu:
          for (std::size_t i = 0; i < len; ++i) po[i] = pa[i] > 0 ? pa[i] : 0.0;
          break;
        case Op::kExp:
          for (std::size_t i = 0; i < len; ++i) po[i] = std::exp(pa[i]);
          break;
        case Op::kLog:
          for (std::size_t i = 0; i < len; ++i) po[i] = std::log(pa[i]);
          break;
        default:
          for (std::size_t i = 0; i < len; ++i) po[i] = std::max(pa[i], n.c);
          break;
      }
      return;
    }

    case Op::kMin:
    case Op::kMax: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (!a.same_shape(b) && !broadcast_pair(a, b)) {
        fail(id, n.op,
             "shape mismatch " + a.shape_string() + " vs " + b.shape_string());
      }
      const Tensor& big = a.is_scalar() && !b.is_scalar() ? b : a;
      ensure_shape(out, big.shape());
      const double* pa = a.data();
      const double* pb = b.data();
      std::size_t sa = a.is_scalar() ? 0 : 1;
      std::size_t sb = b.is_scalar() ? 0 : 1;
      double* po = out.data();
      for (std::size_t i = 0; i < big.size(); ++i) {
        double x = pa[i * sa], y = pb[i * sb];
        po[i] = n.op == Op::kMin ? std::min(x, y) : std::max(x, y);
      }
      return;
    }

    case Op::kSoftmax: {
      out = diffcore::softmax(in(0), n.axis);
      return;
    }

    case Op::kGroupSoftmaxDummy: {
      const Tensor& a = in(0);
      std::size_t r = rows_of(a), c = cols_of(a);
      const GroupSpec& g = n.group;
      if (g.count * g.size != c) {
        fail(id, n.op, "groups do not cover " + a.shape_string());
      }
      ensure_shape(out, a.shape());
      const double* pa = a.data();
      double* po = out.data();
      for (std::size_t i = 0; i < r; ++i) {
        const double* row = pa + i * c;
        double* orow = po + i * c;
        for (std::size_t gi = 0; gi < g.count; ++gi) {
          double m = 0.0;  // dummy score
          for (std::size_t k = 0; k < g.size; ++k) {
            m = std::max(m, row[gi * g.group_stride + k * g.member_stride]);
          }
          double denom = std::exp(-m);
          for (std::size_t k = 0; k < g.size; ++k) {
            denom += std::exp(row[gi * g.group_stride + k * g.member_stride] - m);
          }
          for (std::size_t k = 0; k < g.size; ++k) {
            std::size_t col = gi * g.group_stride + k * g.member_stride;
            orow[col] = std::exp(row[col] - m) / denom;
          }
        }
      }
      return;
    }

    case Op::kGroupReduceMax:
    case Op::kGroupReduceMin: {
      const Tensor& a = in(0);
      std::size_t r = rows_of(a), c = cols_of(a);
      const GroupSpec& g = n.group;
      if (g.count * g.size != c) {
        fail(id, n.op, "groups do not cover " + a.shape_string());
      }
      ensure_shape(out, {r, g.count});
      const double* pa = a.data();
      double* po = out.data();
      bool want_max = n.op == Op::kGroupReduceMax;
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t gi = 0; gi < g.count; ++gi) {
          double best = pa[i * c + gi * g.size];
          for (std::size_t k = 1; k < g.size; ++k) {
            double x = pa[i * c + gi * g.size + k];
            best = want_max ? std::max(best, x) : std::min(best, x);
          }
          po[i * g.count + gi] = best;
        }
      }
      return;
    }

    case Op::kReduceSumAll: {
      const Tensor& a = in(0);
      double s = 0.0;
      const double* pa = a.data();
      for (std::size_t i = 0; i < a.size(); ++i) s += pa[i];
      ensure_shape(out, {});
      out[0] = s;
      return;
    }

    case Op::kReduceSumAxis: {
      const Tensor& a = in(0);
      std::size_t r = rows_of(a), c = cols_of(a);
      const double* pa = a.data();
      if (n.axis == 0) {
        ensure_shape(out, {1, c});
        out.fill(0.0);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) out[j] += pa[i * c + j];
      } else {
        ensure_shape(out, {r, 1});
        for (std::size_t i = 0; i < r; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < c; ++j) s += pa[i * c + j];
          out[i] = s;
        }
      }
      return;
    }

    case Op::kGatherCols: {
      const Tensor& a = in(0);
      std::size_t r = rows_of(a), c = cols_of(a);
      std::size_t k = n.cols.size();
      for (std::size_t col : n.cols) {
        if (col >= c) fail(id, n.op, "column index out of range");
      }
      ensure_shape(out, {r, k});
      const double* pa = a.data();
      double* po = out.data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < k; ++j) po[i * k + j] = pa[i * c + n.cols[j]];
      }
      return;
    }

    case Op::kConcatCols: {
      std::size_t r = rows_of(in(0));
      std::size_t total = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        if (rows_of(in(static_cast<int>(k))) != r) {
          fail(id, n.op, "row count mismatch between parts");
        }
        total += cols_of(in(static_cast<int>(k)));
      }
      ensure_shape(out, {r, total});
      double* po = out.data();
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor& part = in(static_cast<int>(k));
        std::size_t pc = cols_of(part);
        const double* pp = part.data();
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < pc; ++j) {
            po[i * total + off + j] = pp[i * pc + j];
          }
        }
        off += pc;
      }
      return;
    }

    case Op::kMinScatter: {
      const Tensor& full = in(0);
      const Tensor& sub = in(1);
      std::size_t r = rows_of(full), c = cols_of(full);
      std::size_t k = n.cols.size();
      if (rows_of(sub) != r || cols_of(sub) != k) {
        fail(id, n.op, "sub tensor shape does not match column map");
      }
      ensure_shape(out, full.shape());
      const double* pf = full.data();
      const double* ps = sub.data();
      double* po = out.data();
      for (std::size_t i = 0; i < r * c; ++i) po[i] = pf[i];
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          std::size_t col = n.cols[j];
          double* slot = po + i * c + col;
          *slot = std::min(*slot, ps[i * k + j]);
        }
      }
      return;
    }
  }
}

const std::vector<char>& Executor::reach_mask(int root) {
  auto it = reach_cache_.find(root);
  if (it != reach_cache_.end()) return it->second;
  std::vector<char> mask(graph_->size(), 0);
  mask[static_cast<std::size_t>(root)] = 1;
  for (int id = root; id >= 0; --id) {
    if (!mask[static_cast<std::size_t>(id)]) continue;
    for (int in : graph_->node(id).inputs) mask[static_cast<std::size_t>(in)] = 1;
  }
  return reach_cache_.emplace(root, std::move(mask)).first->second;
}

void Executor::backward(int root) {
  const Tensor& rv = val_[static_cast<std::size_t>(root)];
  if (!rv.is_scalar()) {
    throw DiffError("backward: root node is not a scalar");
  }
  const std::vector<char>& mask = reach_mask(root);
  for (std::size_t id = 0; id < graph_->size(); ++id) {
    if (!mask[id]) continue;
    ensure_shape(grad_[id], val_[id].shape());
    grad_[id].fill(0.0);
  }
  grad_[static_cast<std::size_t>(root)][0] = 1.0;
  for (int id = root; id >= 0; --id) {
    if (mask[static_cast<std::size_t>(id)]) accumulate(id);
  }
}

void Executor::accumulate(int id) {
  const Node& n = graph_->node(id);
  if (n.op == Op::kInput || n.op == Op::kConst) return;
  const Tensor& g = grad_[static_cast<std::size_t>(id)];
  auto inv = [&](int k) -> const Tensor& {
    return val_[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(k)])];
  };
  auto ing = [&](int k) -> Tensor& {
    return grad_[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(k)])];
  };

  switch (n.op) {
    case Op::kInput:
    case Op::kConst:
      return;

    case Op::kMatMul: {
      const Tensor& a = inv(0);
      const Tensor& b = inv(1);
      std::size_t p = rows_of(a), q = cols_of(a), r = cols_of(b);
      MutMap(ing(0).data(), p, q).noalias() +=
          ConstMap(g.data(), p, r) * ConstMap(b.data(), q, r).transpose();
      MutMap(ing(1).data(), q, r).noalias() +=
          ConstMap(a.data(), p, q).transpose() * ConstMap(g.data(), p, r);
      return;
    }

    case Op::kAdd:
    case Op::kSub: {
      double sign = n.op == Op::kSub ? -1.0 : 1.0;
      for (int side = 0; side < 2; ++side) {
        Tensor& gi = ing(side);
        double f = side == 0 ? 1.0 : sign;
        const double* pg = g.data();
        double* pgi = gi.data();
        if (gi.is_scalar() && !g.is_scalar()) {
          double s = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) s += pg[i];
          pgi[0] += f * s;
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) pgi[i] += f * pg[i];
        }
      }
      return;
    }

    case Op::kMul:
    case Op::kDiv: {
      const Tensor& a = inv(0);
      const Tensor& b = inv(1);
      std::size_t sa = a.is_scalar() ? 0 : 1;
      std::size_t sb = b.is_scalar() ? 0 : 1;
      const double* pg = g.data();
      const double* pa = a.data();
      const double* pb = b.data();
      double* ga = ing(0).data();
      double* gb = ing(1).data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        double x = pa[i * sa], y = pb[i * sb], gi = pg[i];
        if (n.op == Op::kMul) {
          ga[i * sa] += gi * y;
          gb[i * sb] += gi * x;
        } else {
          ga[i * sa] += gi / y;
          gb[i * sb] += -gi * x / (y * y);
        }
      }
      return;
    }

    case Op::kAddRowVec:
    case Op::kMulRowVec: {
      const Tensor& a = inv(0);
      const Tensor& v = inv(1);
      std::size_t r = rows_of(a), c = cols_of(a);
      const double* pg = g.data();
      const double* pa = a.data();
      const double* pv = v.data();
      double* ga = ing(0).data();
      double* gv = ing(1).data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          double gi = pg[i * c + j];
          if (n.op == Op::kAddRowVec) {
            ga[i * c + j] += gi;
            gv[j] += gi;
          } else {
            ga[i * c + j] += gi * pv[j];
            gv[j] += gi * pa[i * c + j];
          }
        }
      }
      return;
    }

    case Op::kScalarMul: {
      const double* pg = g.data();
      double* ga = ing(0).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += pg[i] * n.c;
      return;
    }
    case Op::kScalarAdd: {
      const double* pg = g.data();
      double* ga = ing(0).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += pg[i];
      return;
    }

    case Op::kTanh:
    case Op::kSigmoid:
    case Op::kRelu:
    case Op::kExp:
    case Op::kLog:
    case Op::kMaxConst: {
      const Tensor& a = inv(0);
      const Tensor& y = val_[static_cast<std::size_t>(id)];
      const double* pg = g.data();
      const double* pa = a.data();
      const double* py = y.data();
      double* ga = ing(0).data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d = 0.0;
        switch (n.op) {
          case Op::kTanh: d = 1.0 - py[i] * py[i]; break;
          case Op::kSigmoid: d = py[i] * (1.0 - py[i]); break;
          case Op::kRelu:
            d = pa[i] > 0 ? 1.0 : (pa[i] == 0.0 ? 0.5 : 0.0);
            break;
          case Op::kExp: d = py[i]; break;
          case Op::kLog: d = 1.0 / pa[i]; break;
          default:  // kMaxConst
            d = pa[i] > n.c ? 1.0 : (pa[i] == n.c ? 0.5 : 0.0);
            break;
        }
        ga[i] += pg[i] * d;
      }
      return;
    }

    case Op::kMin:
    case Op::kMax: {
      // Full gradient to the achieving argument; exact ties split it
      // equally between the two sides.
      const Tensor& a = inv(0);
      const Tensor& b = inv(1);
      std::size_t sa = a.is_scalar() ? 0 : 1;
      std::size_t sb = b.is_scalar() ? 0 : 1;
      const double* pg = g.data();
      const double* pa = a.data();
      const double* pb = b.data();
      double* ga = ing(0).data();
      double* gb = ing(1).data();
      bool want_min = n.op == Op::kMin;
      for (std::size_t i = 0; i < g.size(); ++i) {
        double x = pa[i * sa], y = pb[i * sb];
        if (x == y) {
          ga[i * sa] += 0.5 * pg[i];
          gb[i * sb] += 0.5 * pg[i];
        } else if ((x < y) == want_min) {
          ga[i * sa] += pg[i];
        } else {
          gb[i * sb] += pg[i];
        }
      }
      return;
    }

    case Op::kSoftmax: {
      const Tensor& y = val_[static_cast<std::size_t>(id)];
      std::size_t r = rows_of(y), c = cols_of(y);
      const double* pg = g.data();
      const double* py = y.data();
      double* ga = ing(0).data();
      if (n.axis == 1 || y.rank() < 2) {
        for (std::size_t i = 0; i < r; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < c; ++j)
            dot += pg[i * c + j] * py[i * c + j];
          for (std::size_t j = 0; j < c; ++j) {
            ga[i * c + j] += py[i * c + j] * (pg[i * c + j] - dot);
          }
        }
      } else {
        for (std::size_t j = 0; j < c; ++j) {
          double dot = 0.0;
          for (std::size_t i = 0; i < r; ++i)
            dot += pg[i * c + j] * py[i * c + j];
          for (std::size_t i = 0; i < r; ++i) {
            ga[i * c + j] += py[i * c + j] * (pg[i * c + j] - dot);
          }
        }
      }
      return;
    }

    case Op::kGroupSoftmaxDummy: {
      const Tensor& y = val_[static_cast<std::size_t>(id)];
      std::size_t r = rows_of(y), c = cols_of(y);
      const GroupSpec& gs = n.group;
      const double* pg = g.data();
      const double* py = y.data();
      double* ga = ing(0).data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t gi = 0; gi < gs.count; ++gi) {
          double dot = 0.0;
          for (std::size_t k = 0; k < gs.size; ++k) {
            std::size_t col = gi * gs.group_stride + k * gs.member_stride;
            dot += pg[i * c + col] * py[i * c + col];
          }
          for (std::size_t k = 0; k < gs.size; ++k) {
            std::size_t col = gi * gs.group_stride + k * gs.member_stride;
            ga[i * c + col] += py[i * c + col] * (pg[i * c + col] - dot);
          }
        }
      }
      return;
    }

    case Op::kGroupReduceMax:
    case Op::kGroupReduceMin: {
      const Tensor& a = inv(0);
      const Tensor& y = val_[static_cast<std::size_t>(id)];
      std::size_t r = rows_of(a), c = cols_of(a);
      const GroupSpec& gs = n.group;
      const double* pg = g.data();
      const double* pa = a.data();
      const double* py = y.data();
      double* ga = ing(0).data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t gi = 0; gi < gs.count; ++gi) {
          double best = py[i * gs.count + gi];
          std::size_t ties = 0;
          for (std::size_t k = 0; k < gs.size; ++k) {
            if (pa[i * c + gi * gs.size + k] == best) ++ties;
          }
          double share = pg[i * gs.count + gi] / static_cast<double>(ties);
          for (std::size_t k = 0; k < gs.size; ++k) {
            if (pa[i * c + gi * gs.size + k] == best) {
              ga[i * c + gi * gs.size + k] += share;
            }
          }
        }
      }
      return;
    }

    case Op::kReduceSumAll: {
      double gs = g[0];
      double* ga = ing(0).data();
      for (std::size_t i = 0; i < inv(0).size(); ++i) ga[i] += gs;
      return;
    }

    case Op::kReduceSumAxis: {
      const Tensor& a = inv(0);
      std::size_t r = rows_of(a), c = cols_of(a);
      const double* pg = g.data();
      double* ga = ing(0).data();
      if (n.axis == 0) {
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += pg[j];
      } else {
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += pg[i];
      }
      return;
    }

    case Op::kGatherCols: {
      std::size_t r = rows_of(inv(0)), c = cols_of(inv(0));
      std::size_t k = n.cols.size();
      const double* pg = g.data();
      double* ga = ing(0).data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          ga[i * c + n.cols[j]] += pg[i * k + j];
        }
      }
      return;
    }

    case Op::kConcatCols: {
      std::size_t r = rows_of(val_[static_cast<std::size_t>(id)]);
      std::size_t total = cols_of(val_[static_cast<std::size_t>(id)]);
      const double* pg = g.data();
      std::size_t off = 0;
      for (std::size_t part = 0; part < n.inputs.size(); ++part) {
        std::size_t pc = cols_of(inv(static_cast<int>(part)));
        double* gp = ing(static_cast<int>(part)).data();
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < pc; ++j) {
            gp[i * pc + j] += pg[i * total + off + j];
          }
        }
        off += pc;
      }
      return;
    }

    case Op::kMinScatter: {
      const Tensor& full = inv(0);
      const Tensor& sub = inv(1);
      std::size_t r = rows_of(full), c = cols_of(full);
      std::size_t k = n.cols.size();
      const double* pg = g.data();
      const double* pf = full.data();
      const double* ps = sub.data();
      double* gf = ing(0).data();
      double* gsub = ing(1).data();
      std::vector<char> mapped(c, 0);
      for (std::size_t col : n.cols) mapped[col] = 1;
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          if (!mapped[j]) gf[i * c + j] += pg[i * c + j];
        }
        for (std::size_t j = 0; j < k; ++j) {
          std::size_t col = n.cols[j];
          double x = pf[i * c + col], y = ps[i * k + j];
          double gi = pg[i * c + col];
          if (x == y) {
            gf[i * c + col] += 0.5 * gi;
            gsub[i * k + j] += 0.5 * gi;
          } else if (x < y) {
            gf[i * c + col] += gi;
          } else {
            gsub[i * k + j] += gi;
          }
        }
      }
      return;
    }
  }
}

EvalGrad eval_and_grad(const Graph& g, int value_node,
                       const std::map<std::string, Tensor>& bindings,
                       const std::vector<std::string>& wrt) {
  Executor ex(g);
  for (const auto& [name, t] : bindings) ex.bind(name, t);
  ex.forward();
  EvalGrad out;
  out.value = ex.value(value_node);
  if (!wrt.empty()) {
    ex.backward(value_node);
    for (const std::string& name : wrt) {
      out.grads[name] = ex.input_grad(name);
    }
  }
  return out;
}

Tensor softmax(const Tensor& t, int axis) {
  std::size_t r = t.rank() == 2 ? t.shape()[0] : 1;
  std::size_t c = t.rank() == 2 ? t.shape()[1] : t.size();
  Tensor out(t.shape());
  const double* p = t.data();
  double* o = out.data();
  if (axis == 1 || t.rank() < 2) {
    for (std::size_t i = 0; i < r; ++i) {
      double m = p[i * c];
      for (std::size_t j = 1; j < c; ++j) m = std::max(m, p[i * c + j]);
      double denom = 0.0;
      for (std::size_t j = 0; j < c; ++j) denom += std::exp(p[i * c + j] - m);
      for (std::size_t j = 0; j < c; ++j) {
        o[i * c + j] = std::exp(p[i * c + j] - m) / denom;
      }
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      double m = p[j];
      for (std::size_t i = 1; i < r; ++i) m = std::max(m, p[i * c + j]);
      double denom = 0.0;
      for (std::size_t i = 0; i < r; ++i) denom += std::exp(p[i * c + j] - m);
      for (std::size_t i = 0; i < r; ++i) {
        o[i * c + j] = std::exp(p[i * c + j] - m) / denom;
      }
    }
  }
  return out;
}

}  // namespace deepauction::diffcore
