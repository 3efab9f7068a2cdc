#pragma once

// Dense 64-bit arrays with a reverse-mode tape and the Adam optimizer.
// Sized for desk-scale graph networks: everything is row-major and dense,
// sparse structure is expressed through gather/scatter over index lists.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace glpmfd::tensor {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> data);

  static Array scalar(double v) { return Array({1}, {v}); }
  static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Array({rows, cols}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  // First axis, and the product of the remaining axes.
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const {
    std::size_t c = shape_.empty() ? 0 : 1;
    for (std::size_t k = 1; k < shape_.size(); ++k) c *= shape_[k];
    return c;
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* ptr() { return data_.data(); }
  const double* ptr() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  void fill(double v);
  Array reshaped(Shape shape) const;
  bool all_finite() const;

  friend bool operator==(const Array& a, const Array& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

class Tape;

// Handle to a value produced on a tape. Untracked values (constants, or
// anything computed while the tape is not recording) carry id() == -1.
class Var {
 public:
  Var() = default;
  const Array& value() const { return *value_; }
  const Shape& shape() const { return value_->shape(); }
  std::ptrdiff_t id() const { return id_; }
  bool tracked() const { return id_ >= 0; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::ptrdiff_t id, std::shared_ptr<const Array> value)
      : tape_(tape), id_(id), value_(std::move(value)) {}

  Tape* tape_ = nullptr;
  std::ptrdiff_t id_ = -1;
  std::shared_ptr<const Array> value_;
};

class Tape {
 public:
  using BackwardFn = std::function<void(const Array& out_grad, Tape& tape)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Array value);
  // Differentiable leaf owning its value; read its gradient with grad().
  Var variable(Array value);
  // Differentiable leaf referencing external storage. The referenced array
  // must outlive the tape; gradients are added into *grad_sink on backward.
  Var param(const Array& value, Array* grad_sink);

  // Records an op result. `fn` runs on backward with the output gradient and
  // routes gradient to inputs through accumulate().
  Var record(Array value, std::initializer_list<const Var*> inputs, BackwardFn fn);

  void accumulate(const Var& input, const Array& grad);
  // Mutable gradient buffer of a tracked input (allocated on first use).
  Array& grad_buffer(const Var& input);

  void backward(const Var& loss);
  // Gradient of the last backward() w.r.t. a tracked value (zeros if none).
  Array grad(const Var& v) const;

 private:
  struct Node {
    std::shared_ptr<const Array> value;
    Array grad;
    bool has_grad = false;
    Array* sink = nullptr;
    BackwardFn fn;
  };

  bool recording_;
  std::vector<Node> nodes_;
};

struct Conv2dSpec {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;  // circular padding on axis H (the Doppler axis)
  std::size_t pad_w = 0;  // zero padding on axis W
};

// Forward ops. Shape mismatches raise ShapeError naming both shapes.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_bias(const Var& a, const Var& bias);
Var mul_rows(const Var& a, const Var& row_weights);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
Var gather_rows(const Var& a, std::span<const std::size_t> index);
Var scatter_add_rows(const Var& a, std::span<const std::size_t> index, std::size_t n_rows);
Var segment_softmax(const Var& logits, std::span<const std::size_t> segment, std::size_t n_segments);
Var reshape(const Var& a, Shape shape);
Var leaky_relu(const Var& a, double slope = 0.2);
Var elu(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
// input [B, C_in, H, W], kernel [C_out, C_in, kh, kw], bias [C_out].
Var conv2d(const Var& input, const Var& kernel, const Var& bias, const Conv2dSpec& spec);

Shape conv2d_output_shape(const Shape& input, const Shape& kernel, const Conv2dSpec& spec);

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;
double grad_check(const ScalarFn& f, std::vector<Array> params, double h = 1e-5);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Array> m;
  std::vector<Array> v;
};

void adam_step(std::span<Array> params, std::span<const Array> grads, AdamState& state, double lr);

}  // namespace glpmfd::tensor
