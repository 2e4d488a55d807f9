#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace dialogen::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named trainable array with its gradient accumulator.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Ordered collection of parameters. Addresses are stable for the lifetime of
// the store (parameters are never removed).
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Param& add(const std::string& name, Mat init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return params_.size(); }
  Param& operator[](std::size_t i) { return *params_[i]; }
  const Param& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t count() const;  // total scalar count
  void zero_grad();
  double grad_norm() const;
  // Throws DivergenceError naming the first parameter with a non-finite gradient.
  void check_finite_grads() const;

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

struct Var {
  int id = -1;
};

// Reverse-mode recorder for one forward pass. Values are computed eagerly;
// backward closures are kept only when recording. backward() may run once.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Mat value);
  // Leaf bound to a parameter; gradients accumulate into param.grad.
  Var param(Param& p);
  // Read-only binding; gradients stay on the tape.
  Var param(const Param& p);

  const Mat& value(Var v) const;
  double scalar(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates to every parameter leaf.
  void backward(Var loss);
  std::size_t size() const { return nodes_.size(); }

  // --- operations ---------------------------------------------------------
  Var gather_rows(Var table, std::span<const int> ids);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcast 1xN over rows
  Var mul(Var a, Var b);        // elementwise
  Var scale(Var a, double c);
  Var matmul(Var a, Var b);
  Var gelu(Var a);
  Var exp(Var a);
  Var square(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  // softmax(Q K^T / sqrt(dk)) V per head; causal hides future key positions.
  Var attention(Var q, Var k, Var v, int heads, bool causal);
  Var log_softmax_rows(Var a);
  // out[i] = a(i, cols[i]) as an Nx1 column.
  Var pick(Var a, std::span<const int> cols);
  Var sum(Var a);
  Var mean(Var a);
  Var mean_rows(Var a);  // 1xN column means
  Var row(Var a, int i);
  Var concat_rows(std::span<const Var> parts);
  Var minimum(Var a, Var b);
  Var clamp(Var a, double lo, double hi);

 private:
  struct Node {
    Mat value;
    const Mat* value_ref = nullptr;
    Mat grad;
    Mat* grad_ref = nullptr;
    std::function<void(Tape&, int)> backward;
  };

  Var push(Mat value, std::function<void(Tape&, int)> backward);
  const Mat& val(int id) const;
  Mat& grad(int id);

  bool record_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Param*, int> param_nodes_;
};

}  // namespace dialogen::nn
