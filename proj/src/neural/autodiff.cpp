#include "dialogen/neural/autodiff.hpp"

#include <cmath>
#include <limits>

#include "dialogen/core/error.hpp"

namespace dialogen::nn {

// --- parameters ---------------------------------------------------------------

ParamStore::ParamStore(const ParamStore& other) { *this = other; }

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this == &other) return *this;
  params_.clear();
  index_ = other.index_;
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Param>(*p));
  return *this;
}

Param& ParamStore::add(const std::string& name, Mat init) {
  if (index_.contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  index_[name] = params_.size();
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = std::move(init);
  p->zero_grad();
  params_.push_back(std::move(p));
  return *params_.back();
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::size_t ParamStore::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamStore::check_finite_grads() const {
  for (const auto& p : params_) {
    if (!p->grad.allFinite()) throw DivergenceError("non-finite gradient in parameter '" + p->name + "'");
  }
}

// --- tape ---------------------------------------------------------------------

Var Tape::push(Mat value, std::function<void(Tape&, int)> backward) {
  Node n;
  n.value = std::move(value);
  if (record_) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Mat& Tape::val(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.value_ref ? *n.value_ref : n.value;
}

Mat& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  Mat& g = n.grad_ref ? *n.grad_ref : n.grad;
  if (g.size() == 0) {
    const Mat& v = val(id);
    g.setZero(v.rows(), v.cols());
  }
  return g;
}

const Mat& Tape::value(Var v) const { return val(v.id); }

double Tape::scalar(Var v) const {
  const Mat& m = val(v.id);
  if (m.size() != 1) throw UsageError("scalar() on a non-scalar value");
  return m(0, 0);
}

Var Tape::constant(Mat value) { return push(std::move(value), nullptr); }

Var Tape::param(Param& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second};
  Node n;
  n.value_ref = &p.value;
  n.grad_ref = &p.grad;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[&p] = id;
  return Var{id};
}

Var Tape::param(const Param& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second};
  Node n;
  n.value_ref = &p.value;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[&p] = id;
  return Var{id};
}

void Tape::backward(Var loss) {
  if (!record_) throw UsageError("backward() on a tape that did not record");
  if (backward_done_) throw UsageError("backward() already ran on this tape");
  backward_done_ = true;
  if (val(loss.id).size() != 1) throw UsageError("backward() needs a scalar loss");
  // Parameter gradients accumulate; intermediate gradients start at zero.
  for (auto& n : nodes_) {
    if (!n.grad_ref) n.grad.resize(0, 0);
  }
  grad(loss.id)(0, 0) += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.backward) continue;
    if (n.grad.size() == 0) continue;  // nothing flowed here
    n.backward(*this, id);
  }
}

Var Tape::gather_rows(Var table, std::span<const int> ids) {
  const Mat& t = val(table.id);
  Mat out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) throw UsageError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return push(std::move(out), [table, idx = std::move(idx)](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    Mat& gt = tp.grad(table.id);
    for (std::size_t i = 0; i < idx.size(); ++i) gt.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::add(Var a, Var b) {
  return push(val(a.id) + val(b.id), [a, b](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id) += g;
    tp.grad(b.id) += g;
  });
}

Var Tape::sub(Var a, Var b) {
  return push(val(a.id) - val(b.id), [a, b](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id) += g;
    tp.grad(b.id) -= g;
  });
}

Var Tape::add_row(Var a, Var row) {
  const Mat& r = val(row.id);
  if (r.rows() != 1 || r.cols() != val(a.id).cols()) throw UsageError("add_row: shape mismatch");
  Mat out = val(a.id);
  out.rowwise() += r.row(0);
  return push(std::move(out), [a, row](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id) += g;
    tp.grad(row.id) += g.colwise().sum();
  });
}

Var Tape::mul(Var a, Var b) {
  return push(val(a.id).cwiseProduct(val(b.id)), [a, b](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id) += g.cwiseProduct(tp.val(b.id));
    tp.grad(b.id) += g.cwiseProduct(tp.val(a.id));
  });
}

Var Tape::scale(Var a, double c) {
  return push(val(a.id) * c, [a, c](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id) += g * c;
  });
}

Var Tape::matmul(Var a, Var b) {
  if (val(a.id).cols() != val(b.id).rows()) throw UsageError("matmul: shape mismatch");
  Mat out = val(a.id) * val(b.id);
  return push(std::move(out), [a, b](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id).noalias() += g * tp.val(b.id).transpose();
    tp.grad(b.id).noalias() += tp.val(a.id).transpose() * g;
  });
}

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluK = 0.044715;

}  // namespace

Var Tape::gelu(Var a) {
  Mat out = val(a.id).unaryExpr([](double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluK * x * x * x)));
  });
  return push(std::move(out), [a](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    const Mat d = tp.val(a.id).unaryExpr([](double x) {
      const double t = std::tanh(kGeluC * (x + kGeluK * x * x * x));
      return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluK * x * x);
    });
    tp.grad(a.id) += g.cwiseProduct(d);
  });
}

Var Tape::exp(Var a) {
  Mat out = val(a.id).array().exp().matrix();
  return push(std::move(out), [a](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id) += g.cwiseProduct(tp.val(self));
  });
}

Var Tape::square(Var a) {
  return push(val(a.id).cwiseAbs2(), [a](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id) += 2.0 * g.cwiseProduct(tp.val(a.id));
  });
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Mat& in = val(x.id);
  const Eigen::Index n = in.rows();
  const Eigen::Index d = in.cols();
  Mat xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = in.row(i).mean();
    const double var = (in.row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (in.row(i).array() - mu) * inv_std(i);
  }
  Mat out = xhat;
  out.array().rowwise() *= val(gain.id).row(0).array();
  out.rowwise() += val(bias.id).row(0);
  return push(std::move(out), [x, gain, bias, xhat, inv_std](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(gain.id) += g.cwiseProduct(xhat).colwise().sum();
    tp.grad(bias.id) += g.colwise().sum();
    Mat dxhat = g;
    dxhat.array().rowwise() *= tp.val(gain.id).row(0).array();
    Mat& gx = tp.grad(x.id);
    for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
      const double m1 = dxhat.row(i).mean();
      const double m2 = dxhat.row(i).dot(xhat.row(i)) / static_cast<double>(dxhat.cols());
      gx.row(i).array() += inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
    }
  });
}

Var Tape::attention(Var q, Var k, Var v, int heads, bool causal) {
  const Mat& Q = val(q.id);
  const Mat& K = val(k.id);
  const Mat& V = val(v.id);
  if (Q.cols() != K.cols() || K.cols() != V.cols() || K.rows() != V.rows() || Q.cols() % heads != 0) {
    throw UsageError("attention: shape mismatch");
  }
  const Eigen::Index lq = Q.rows();
  const Eigen::Index lk = K.rows();
  const Eigen::Index dk = Q.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Mat> probs(static_cast<std::size_t>(heads));
  Mat out(lq, Q.cols());
  for (int h = 0; h < heads; ++h) {
    Mat s = Q.middleCols(h * dk, dk) * K.middleCols(h * dk, dk).transpose() * scale;
    for (Eigen::Index i = 0; i < lq; ++i) {
      const Eigen::Index visible = causal ? std::min<Eigen::Index>(i + 1, lk) : lk;
      const double mx = s.row(i).head(visible).maxCoeff();
      double z = 0.0;
      for (Eigen::Index j = 0; j < lk; ++j) {
        const double e = j < visible ? std::exp(s(i, j) - mx) : 0.0;
        s(i, j) = e;
        z += e;
      }
      s.row(i) /= z;
    }
    out.middleCols(h * dk, dk).noalias() = s * V.middleCols(h * dk, dk);
    probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  return push(std::move(out), [q, k, v, heads, dk, scale, probs = std::move(probs)](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    const Mat& Q = tp.val(q.id);
    const Mat& K = tp.val(k.id);
    const Mat& V = tp.val(v.id);
    Mat& gq = tp.grad(q.id);
    Mat& gk = tp.grad(k.id);
    Mat& gv = tp.grad(v.id);
    for (int h = 0; h < heads; ++h) {
      const Mat& p = probs[static_cast<std::size_t>(h)];
      const Mat go = g.middleCols(h * dk, dk);
      gv.middleCols(h * dk, dk).noalias() += p.transpose() * go;
      const Mat dp = go * V.middleCols(h * dk, dk).transpose();
      Mat ds = p.cwiseProduct(dp);
      const Eigen::VectorXd rs = ds.rowwise().sum();
      ds -= p.cwiseProduct(rs.replicate(1, p.cols()));
      gq.middleCols(h * dk, dk).noalias() += ds * K.middleCols(h * dk, dk) * scale;
      gk.middleCols(h * dk, dk).noalias() += ds.transpose() * Q.middleCols(h * dk, dk) * scale;
    }
  });
}

Var Tape::log_softmax_rows(Var a) {
  Mat out = val(a.id);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double mx = out.row(i).maxCoeff();
    const double lse = mx + std::log((out.row(i).array() - mx).exp().sum());
    out.row(i).array() -= lse;
  }
  return push(std::move(out), [a](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    const Mat sm = tp.val(self).array().exp().matrix();
    const Eigen::VectorXd gs = g.rowwise().sum();
    tp.grad(a.id) += g - sm.cwiseProduct(gs.replicate(1, sm.cols()));
  });
}

Var Tape::pick(Var a, std::span<const int> cols) {
  const Mat& m = val(a.id);
  if (static_cast<Eigen::Index>(cols.size()) != m.rows()) throw UsageError("pick: one column per row required");
  Mat out(m.rows(), 1);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const int c = cols[static_cast<std::size_t>(i)];
    if (c < 0 || c >= m.cols()) throw UsageError("pick: column out of range");
    out(i, 0) = m(i, c);
  }
  std::vector<int> idx(cols.begin(), cols.end());
  return push(std::move(out), [a, idx = std::move(idx)](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    Mat& ga = tp.grad(a.id);
    for (std::size_t i = 0; i < idx.size(); ++i) ga(static_cast<Eigen::Index>(i), idx[i]) += g(static_cast<Eigen::Index>(i), 0);
  });
}

Var Tape::sum(Var a) {
  Mat out(1, 1);
  out(0, 0) = val(a.id).sum();
  return push(std::move(out), [a](Tape& tp, int self) {
    const double g = tp.grad(self)(0, 0);
    tp.grad(a.id).array() += g;
  });
}

Var Tape::mean(Var a) {
  const double n = static_cast<double>(val(a.id).size());
  Mat out(1, 1);
  out(0, 0) = val(a.id).sum() / n;
  return push(std::move(out), [a, n](Tape& tp, int self) {
    const double g = tp.grad(self)(0, 0);
    tp.grad(a.id).array() += g / n;
  });
}

Var Tape::mean_rows(Var a) {
  const double n = static_cast<double>(val(a.id).rows());
  Mat out = val(a.id).colwise().mean();
  return push(std::move(out), [a, n](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id).rowwise() += g.row(0) / n;
  });
}

Var Tape::row(Var a, int i) {
  Mat out = val(a.id).row(i);
  return push(std::move(out), [a, i](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    tp.grad(a.id).row(i) += g.row(0);
  });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  Eigen::Index rows = 0;
  const Eigen::Index cols = val(parts.front().id).cols();
  for (const Var& p : parts) {
    if (val(p.id).cols() != cols) throw UsageError("concat_rows: column mismatch");
    rows += val(p.id).rows();
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, val(p.id).rows()) = val(p.id);
    r += val(p.id).rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), [ps = std::move(ps)](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    Eigen::Index r = 0;
    for (const Var& p : ps) {
      const Eigen::Index n = tp.val(p.id).rows();
      tp.grad(p.id) += g.middleRows(r, n);
      r += n;
    }
  });
}

Var Tape::minimum(Var a, Var b) {
  const Mat& x = val(a.id);
  const Mat& y = val(b.id);
  return push(x.cwiseMin(y), [a, b](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    const Mat& x = tp.val(a.id);
    const Mat& y = tp.val(b.id);
    Mat& ga = tp.grad(a.id);
    Mat& gb = tp.grad(b.id);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (x.data()[i] <= y.data()[i]) {
        ga.data()[i] += g.data()[i];
      } else {
        gb.data()[i] += g.data()[i];
      }
    }
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  Mat out = val(a.id).cwiseMax(lo).cwiseMin(hi);
  return push(std::move(out), [a, lo, hi](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    const Mat& x = tp.val(a.id);
    Mat& ga = tp.grad(a.id);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (x.data()[i] > lo && x.data()[i] < hi) ga.data()[i] += g.data()[i];
    }
  });
}

}  // namespace dialogen::nn
