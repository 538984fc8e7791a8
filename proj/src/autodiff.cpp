#include "lws/autodiff.hpp"

#include <cmath>

#include "lws/errors.hpp"

namespace lws {

void zero_gradients(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

Tape::NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Tensor& Tape::value(NodeId id) const { return nodes_.at(id).value; }

const Tensor& Tape::input_value(const Node& node, std::size_t i) const {
  return nodes_[node.in[i]].value;
}

Tape::NodeId Tape::parameter(Parameter& p) {
  Node n;
  n.op = Op::kParameter;
  n.value = p.value;
  n.param = &p;
  return push(std::move(n));
}

Tape::NodeId Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kMatmul;
  n.n_in = 2;
  n.in = {a, b, 0};
  n.value = ops::matmul(value(a), value(b));
  return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId x) {
  Node n;
  n.op = Op::kRelu;
  n.n_in = 1;
  n.in = {x, 0, 0};
  n.value = ops::relu(value(x));
  return push(std::move(n));
}

Tape::NodeId Tape::conv2d(NodeId x, NodeId kernel, NodeId bias) {
  Node n;
  n.op = Op::kConv2d;
  n.n_in = 3;
  n.in = {x, kernel, bias};
  n.value = ops::conv2d(value(x), value(kernel), value(bias));
  return push(std::move(n));
}

Tape::NodeId Tape::maxpool2(NodeId x) {
  Node n;
  n.op = Op::kMaxPool2;
  n.n_in = 1;
  n.in = {x, 0, 0};
  n.value = ops::maxpool2(value(x));
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  Node n;
  n.op = Op::kAdd;
  n.n_in = 2;
  n.in = {a, b, 0};
  n.value = ops::add(value(a), value(b));
  return push(std::move(n));
}

Tape::NodeId Tape::add_rowwise(NodeId m, NodeId row) {
  Node n;
  n.op = Op::kAddRowwise;
  n.n_in = 2;
  n.in = {m, row, 0};
  n.value = ops::add_rowwise(value(m), value(row));
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId x, double c) {
  Node n;
  n.op = Op::kScale;
  n.n_in = 1;
  n.in = {x, 0, 0};
  n.c = c;
  n.value = ops::scale(value(x), c);
  return push(std::move(n));
}

Tape::NodeId Tape::reshape(NodeId x, Shape new_shape) {
  Node n;
  n.op = Op::kReshape;
  n.n_in = 1;
  n.in = {x, 0, 0};
  n.value = ops::reshape(value(x), std::move(new_shape));
  return push(std::move(n));
}

Tape::NodeId Tape::softmax_cross_entropy_mean(NodeId logits,
                                              std::vector<int> labels) {
  Node n;
  n.op = Op::kSoftmaxXentMean;
  n.n_in = 1;
  n.in = {logits, 0, 0};
  n.value = ops::softmax_cross_entropy_mean(value(logits), labels);
  n.labels = std::move(labels);
  return push(std::move(n));
}

namespace {

// dA += G B^T and dB += A^T G for G = adjoint of (A B).
void matmul_backward(const Tensor& g, const Tensor& a, const Tensor& b,
                     Tensor& da, Tensor& db) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const double* pg = g.data();
  const double* pa = a.data();
  const double* pb = b.data();
  double* pda = da.data();
  double* pdb = db.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double gv = pg[i * n + j];
      for (std::size_t kk = 0; kk < k; ++kk) {
        pda[i * k + kk] += gv * pb[kk * n + j];
      }
    }
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = pa[i * k + kk];
      for (std::size_t j = 0; j < n; ++j) {
        pdb[kk * n + j] += av * pg[i * n + j];
      }
    }
  }
}

void conv2d_backward(const Tensor& g, const Tensor& x, const Tensor& kernel,
                     Tensor& dx, Tensor& dk, Tensor& dbias) {
  const std::size_t bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t f = kernel.dim(0);
  const double* pg = g.data();
  const double* px = x.data();
  const double* pk = kernel.data();
  double* pdx = dx.data();
  double* pdk = dk.data();
  for (std::size_t b = 0; b < bsz; ++b) {
    for (std::size_t of = 0; of < f; ++of) {
      const double* pgf = pg + (b * f + of) * h * w;
      double bsum = 0.0;
      for (std::size_t i = 0; i < h * w; ++i) bsum += pgf[i];
      dbias[of] += bsum;
      for (std::size_t ic = 0; ic < c; ++ic) {
        const double* pxc = px + (b * c + ic) * h * w;
        double* pdxc = pdx + (b * c + ic) * h * w;
        const double* pkc = pk + (of * c + ic) * 9;
        double* pdkc = pdk + (of * c + ic) * 9;
        for (std::size_t kh = 0; kh < 3; ++kh) {
          for (std::size_t kw = 0; kw < 3; ++kw) {
            const double kv = pkc[kh * 3 + kw];
            double ksum = 0.0;
            const std::size_t oh_lo = kh == 0 ? 1 : 0;
            const std::size_t oh_hi = kh == 2 ? h - 1 : h;
            const std::size_t ow_lo = kw == 0 ? 1 : 0;
            const std::size_t ow_hi = kw == 2 ? w - 1 : w;
            for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
              const double* pxr = pxc + (oh + kh - 1) * w;
              double* pdxr = pdxc + (oh + kh - 1) * w;
              const double* pgr = pgf + oh * w;
              for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                const double gv = pgr[ow];
                ksum += gv * pxr[ow + kw - 1];
                pdxr[ow + kw - 1] += gv * kv;
              }
            }
            pdkc[kh * 3 + kw] += ksum;
          }
        }
      }
    }
  }
}

void maxpool2_backward(const Tensor& g, const Tensor& x, Tensor& dx) {
  const std::size_t bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const double* pg = g.data();
  const double* px = x.data();
  double* pdx = dx.data();
  for (std::size_t bc = 0; bc < bsz * c; ++bc) {
    const double* pin = px + bc * h * w;
    double* pdin = pdx + bc * h * w;
    const double* pgo = pg + bc * (h / 2) * (w / 2);
    for (std::size_t oh = 0; oh < h / 2; ++oh) {
      for (std::size_t ow = 0; ow < w / 2; ++ow) {
        // Same first-in-row-major tie rule as the forward pass.
        const std::size_t idx[4] = {
            (2 * oh) * w + 2 * ow, (2 * oh) * w + 2 * ow + 1,
            (2 * oh + 1) * w + 2 * ow, (2 * oh + 1) * w + 2 * ow + 1};
        std::size_t best = idx[0];
        for (std::size_t t = 1; t < 4; ++t)
          if (pin[idx[t]] > pin[best]) best = idx[t];
        pdin[best] += pgo[oh * (w / 2) + ow];
      }
    }
  }
}

void softmax_xent_backward(double gscale, const Tensor& logits,
                           const std::vector<int>& labels, Tensor& dlogits) {
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* r = logits.data() + i * cols;
    double* dr = dlogits.data() + i * cols;
    double mx = r[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, r[j]);
    double se = 0.0;
    for (std::size_t j = 0; j < cols; ++j) se += std::exp(r[j] - mx);
    for (std::size_t j = 0; j < cols; ++j) {
      const double p = std::exp(r[j] - mx) / se;
      const double delta = static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0;
      dr[j] += gscale * (p - delta) * inv_rows;
    }
  }
}

}  // namespace

void Tape::backward(NodeId loss) {
  if (loss >= nodes_.size()) throw ArgumentError("backward: unknown node id");
  if (nodes_[loss].value.numel() != 1) {
    throw ArgumentError("backward: loss must hold one element, got shape " +
                        shape_to_string(nodes_[loss].value.shape()));
  }

  std::vector<Tensor> adjoint(nodes_.size());
  auto adj = [&](NodeId id) -> Tensor& {
    Tensor& t = adjoint[id];
    if (t.numel() == 0 && nodes_[id].value.numel() != 0) {
      t = Tensor(nodes_[id].value.shape());
    }
    return t;
  };
  adj(loss)[0] = 1.0;

  for (std::size_t i = loss + 1; i-- > 0;) {
    Node& node = nodes_[i];
    const Tensor& g = adjoint[i];
    if (g.numel() == 0) continue;  // not an ancestor of the loss

    switch (node.op) {
      case Op::kParameter:
        for (std::size_t j = 0; j < g.numel(); ++j) node.param->grad[j] += g[j];
        break;
      case Op::kConstant:
        break;
      case Op::kMatmul:
        matmul_backward(g, input_value(node, 0), input_value(node, 1),
                        adj(node.in[0]), adj(node.in[1]));
        break;
      case Op::kRelu: {
        const Tensor& x = input_value(node, 0);
        Tensor& dx = adj(node.in[0]);
        // Subgradient 0 at exactly 0.
        for (std::size_t j = 0; j < x.numel(); ++j)
          if (x[j] > 0.0) dx[j] += g[j];
        break;
      }
      case Op::kConv2d:
        conv2d_backward(g, input_value(node, 0), input_value(node, 1),
                        adj(node.in[0]), adj(node.in[1]), adj(node.in[2]));
        break;
      case Op::kMaxPool2:
        maxpool2_backward(g, input_value(node, 0), adj(node.in[0]));
        break;
      case Op::kAdd: {
        Tensor& da = adj(node.in[0]);
        Tensor& db = adj(node.in[1]);
        for (std::size_t j = 0; j < g.numel(); ++j) {
          da[j] += g[j];
          db[j] += g[j];
        }
        break;
      }
      case Op::kAddRowwise: {
        Tensor& dm = adj(node.in[0]);
        Tensor& drow = adj(node.in[1]);
        const std::size_t rows = g.dim(0), cols = g.dim(1);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) {
            dm[r * cols + c] += g[r * cols + c];
            drow[c] += g[r * cols + c];
          }
        break;
      }
      case Op::kScale: {
        Tensor& dx = adj(node.in[0]);
        for (std::size_t j = 0; j < g.numel(); ++j) dx[j] += node.c * g[j];
        break;
      }
      case Op::kReshape: {
        Tensor& dx = adj(node.in[0]);
        for (std::size_t j = 0; j < g.numel(); ++j) dx[j] += g[j];
        break;
      }
      case Op::kSoftmaxXentMean:
        softmax_xent_backward(g[0], input_value(node, 0), node.labels,
                              adj(node.in[0]));
        break;
    }
  }
}

}  // namespace lws
