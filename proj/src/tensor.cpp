#include "glpmfd/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace glpmfd::tensor {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

std::size_t product(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

void require_rank2(const char* op, const Array& a) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + to_string(a.shape()));
  }
}

Tape& tape_of(const Var& v) {
  if (v.tape() == nullptr) throw std::logic_error("value is not attached to a tape");
  return *v.tape();
}

void add_into(Array& dst, const Array& src) {
  double* d = dst.ptr();
  const double* s = src.ptr();
  for (std::size_t i = 0, n = src.size(); i < n; ++i) d[i] += s[i];
}

// Elementwise op; the derivative is evaluated at the input.
template <class F, class D>
Var unary(const Var& a, F&& f, D dfdx) {
  const Array& x = a.value();
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  Var av = a;
  return tape_of(a).record(std::move(out), {&a}, [av, dfdx](const Array& g, Tape& t) {
    Array& ga = t.grad_buffer(av);
    const Array& x = av.value();
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * dfdx(x[i]);
  });
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

Array::Array(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {}

Array::Array(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != product(shape_)) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     to_string(shape_));
  }
}

void Array::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Array Array::reshaped(Shape shape) const {
  if (product(shape) != data_.size()) shape_error("reshape", shape_, shape);
  return Array(std::move(shape), data_);
}

bool Array::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------- Tape

Var Tape::constant(Array value) {
  return Var(this, -1, std::make_shared<const Array>(std::move(value)));
}

Var Tape::variable(Array value) {
  Node n;
  n.value = std::make_shared<const Array>(std::move(value));
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::ptrdiff_t>(nodes_.size() - 1), nodes_.back().value);
}

Var Tape::param(const Array& value, Array* grad_sink) {
  std::shared_ptr<const Array> ref(std::shared_ptr<const Array>{}, &value);
  if (!recording_) return Var(this, -1, ref);
  Node n;
  n.value = ref;
  n.sink = grad_sink;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::ptrdiff_t>(nodes_.size() - 1), nodes_.back().value);
}

Var Tape::record(Array value, std::initializer_list<const Var*> inputs, BackwardFn fn) {
  const bool needs_grad =
      recording_ && std::any_of(inputs.begin(), inputs.end(), [](const Var* v) { return v->tracked(); });
  if (!needs_grad) return Var(this, -1, std::make_shared<const Array>(std::move(value)));
  Node n;
  n.value = std::make_shared<const Array>(std::move(value));
  n.fn = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::ptrdiff_t>(nodes_.size() - 1), nodes_.back().value);
}

Array& Tape::grad_buffer(const Var& input) {
  static thread_local Array scratch;
  if (!input.tracked()) {
    scratch = Array(input.shape());
    return scratch;
  }
  Node& n = nodes_[static_cast<std::size_t>(input.id())];
  if (!n.has_grad) {
    n.grad = Array(n.value->shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(const Var& input, const Array& grad) {
  if (!input.tracked()) return;
  if (grad.size() != input.value().size()) shape_error("accumulate", input.shape(), grad.shape());
  add_into(grad_buffer(input), grad);
}

void Tape::backward(const Var& loss) {
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + to_string(loss.shape()));
  }
  if (!loss.tracked()) return;
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Array();
  }
  Node& root = nodes_[static_cast<std::size_t>(loss.id())];
  root.grad = Array(root.value->shape(), 1.0);
  root.has_grad = true;
  for (std::ptrdiff_t i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad) continue;
    if (n.fn) n.fn(n.grad, *this);
    if (n.sink != nullptr) {
      if (n.sink->size() != n.grad.size()) shape_error("backward sink", n.sink->shape(), n.grad.shape());
      add_into(*n.sink, n.grad);
    }
  }
}

Array Tape::grad(const Var& v) const {
  if (!v.tracked()) return Array(v.shape());
  const Node& n = nodes_[static_cast<std::size_t>(v.id())];
  return n.has_grad ? n.grad : Array(v.shape());
}

// ---------------------------------------------------------------- ops

Var matmul(const Var& a, const Var& b) {
  const Array& A = a.value();
  const Array& B = b.value();
  require_rank2("matmul", A);
  require_rank2("matmul", B);
  if (A.shape()[1] != B.shape()[0]) shape_error("matmul", A.shape(), B.shape());
  const auto n = static_cast<Eigen::Index>(A.shape()[0]);
  const auto k = static_cast<Eigen::Index>(A.shape()[1]);
  const auto m = static_cast<Eigen::Index>(B.shape()[1]);
  Array out({A.shape()[0], B.shape()[1]});
  MapMat(out.ptr(), n, m).noalias() = CMapMat(A.ptr(), n, k) * CMapMat(B.ptr(), k, m);
  return tape_of(a).record(std::move(out), {&a, &b}, [a, b, n, k, m](const Array& g, Tape& t) {
    CMapMat G(g.ptr(), n, m);
    if (a.tracked()) {
      MapMat(t.grad_buffer(a).ptr(), n, k).noalias() += G * CMapMat(b.value().ptr(), k, m).transpose();
    }
    if (b.tracked()) {
      MapMat(t.grad_buffer(b).ptr(), k, m).noalias() += CMapMat(a.value().ptr(), n, k).transpose() * G;
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Array out = a.value();
  add_into(out, b.value());
  return tape_of(a).record(std::move(out), {&a, &b}, [a, b](const Array& g, Tape& t) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return tape_of(a).record(std::move(out), {&a, &b}, [a, b](const Array& g, Tape& t) {
    t.accumulate(a, g);
    if (b.tracked()) {
      Array& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return tape_of(a).record(std::move(out), {&a, &b}, [a, b](const Array& g, Tape& t) {
    if (a.tracked()) {
      Array& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.value()[i];
    }
    if (b.tracked()) {
      Array& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.value()[i];
    }
  });
}

Var scale(const Var& a, double c) {
  Array out = a.value();
  for (double& v : out.data()) v *= c;
  return tape_of(a).record(std::move(out), {&a}, [a, c](const Array& g, Tape& t) {
    Array& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var add_bias(const Var& a, const Var& bias) {
  const Array& A = a.value();
  require_rank2("add_bias", A);
  const std::size_t n = A.shape()[0], c = A.shape()[1];
  if (bias.value().size() != c) shape_error("add_bias", A.shape(), bias.shape());
  Array out = A;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] += bias.value()[j];
  return tape_of(a).record(std::move(out), {&a, &bias}, [a, bias, n, c](const Array& g, Tape& t) {
    t.accumulate(a, g);
    if (bias.tracked()) {
      Array& gb = t.grad_buffer(bias);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
    }
  });
}

Var mul_rows(const Var& a, const Var& w) {
  const Array& A = a.value();
  const std::size_t n = A.rows(), c = A.cols();
  if (w.value().size() != n) shape_error("mul_rows", A.shape(), w.shape());
  Array out = A;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] *= w.value()[r];
  return tape_of(a).record(std::move(out), {&a, &w}, [a, w, n, c](const Array& g, Tape& t) {
    if (a.tracked()) {
      Array& ga = t.grad_buffer(a);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) ga[r * c + j] += g[r * c + j] * w.value()[r];
    }
    if (w.tracked()) {
      Array& gw = t.grad_buffer(w);
      for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += g[r * c + j] * a.value()[r * c + j];
        gw[r] += s;
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t n = parts[0].value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank2("concat_cols", p.value());
    if (p.value().rows() != n) shape_error("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Array out({n, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array& P = parts[k].value();
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(P.ptr() + r * widths[k], widths[k], out.ptr() + r * total + off);
    off += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& tape = tape_of(parts[0]);
  // record() takes an initializer list; route tracking through the first tracked input
  const Var* any_tracked = &parts[0];
  for (const Var& p : parts)
    if (p.tracked()) any_tracked = &p;
  return tape.record(std::move(out), {any_tracked}, [inputs, widths, n, total](const Array& g, Tape& t) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (inputs[k].tracked()) {
        Array& gk = t.grad_buffer(inputs[k]);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t j = 0; j < widths[k]; ++j) gk[r * widths[k] + j] += g[r * total + off + j];
      }
      off += widths[k];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t c = parts[0].value().cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != 0 && p.value().cols() != c) shape_error("concat_rows", parts[0].shape(), p.shape());
    total += p.value().rows();
  }
  Shape shape = parts[0].shape();
  shape[0] = total;
  Array out(shape);
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.ptr() + off);
    off += p.value().size();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  const Var* any_tracked = &parts[0];
  for (const Var& p : parts)
    if (p.tracked()) any_tracked = &p;
  return tape_of(parts[0]).record(std::move(out), {any_tracked}, [inputs](const Array& g, Tape& t) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      const std::size_t len = p.value().size();
      if (p.tracked()) {
        Array& gp = t.grad_buffer(p);
        for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
      }
      off += len;
    }
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  const Array& A = a.value();
  require_rank2("slice_cols", A);
  const std::size_t n = A.shape()[0], c = A.shape()[1];
  if (begin > end || end > c) throw ShapeError("slice_cols: range out of bounds for " + to_string(A.shape()));
  const std::size_t w = end - begin;
  Array out({n, w});
  for (std::size_t r = 0; r < n; ++r) std::copy_n(A.ptr() + r * c + begin, w, out.ptr() + r * w);
  return tape_of(a).record(std::move(out), {&a}, [a, n, c, w, begin](const Array& g, Tape& t) {
    Array& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < w; ++j) ga[r * c + begin + j] += g[r * w + j];
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
  const Array& A = a.value();
  if (begin > end || end > A.rows()) throw ShapeError("slice_rows: range out of bounds for " + to_string(A.shape()));
  const std::size_t c = A.cols();
  Shape shape = A.shape();
  shape[0] = end - begin;
  Array out(shape);
  std::copy_n(A.ptr() + begin * c, (end - begin) * c, out.ptr());
  return tape_of(a).record(std::move(out), {&a}, [a, begin, c](const Array& g, Tape& t) {
    Array& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[begin * c + i] += g[i];
  });
}

Var gather_rows(const Var& a, std::span<const std::size_t> index) {
  const Array& A = a.value();
  const std::size_t c = A.cols();
  Shape shape = A.shape();
  shape[0] = index.size();
  Array out(shape);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= A.rows()) throw ShapeError("gather_rows: index out of range for " + to_string(A.shape()));
    std::copy_n(A.ptr() + index[k] * c, c, out.ptr() + k * c);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return tape_of(a).record(std::move(out), {&a}, [a, idx = std::move(idx), c](const Array& g, Tape& t) {
    Array& ga = t.grad_buffer(a);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      double* dst = ga.ptr() + idx[k] * c;
      const double* src = g.ptr() + k * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var scatter_add_rows(const Var& a, std::span<const std::size_t> index, std::size_t n_rows) {
  const Array& A = a.value();
  if (A.rows() != index.size()) {
    throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " indices for rows of " +
                     to_string(A.shape()));
  }
  const std::size_t c = A.cols();
  Shape shape = A.shape();
  shape[0] = n_rows;
  Array out(shape);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= n_rows) throw ShapeError("scatter_add_rows: index out of range");
    double* dst = out.ptr() + index[k] * c;
    const double* src = A.ptr() + k * c;
    for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return tape_of(a).record(std::move(out), {&a}, [a, idx = std::move(idx), c](const Array& g, Tape& t) {
    Array& ga = t.grad_buffer(a);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double* src = g.ptr() + idx[k] * c;
      double* dst = ga.ptr() + k * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var segment_softmax(const Var& logits, std::span<const std::size_t> segment, std::size_t n_segments) {
  const Array& z = logits.value();
  if (z.size() != segment.size()) {
    throw ShapeError("segment_softmax: " + std::to_string(segment.size()) + " segment ids for " +
                     to_string(z.shape()));
  }
  std::vector<double> mx(n_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (segment[k] >= n_segments) throw ShapeError("segment_softmax: segment id out of range");
    mx[segment[k]] = std::max(mx[segment[k]], z[k]);
  }
  std::vector<double> denom(n_segments, 0.0);
  Array y(z.shape());
  for (std::size_t k = 0; k < z.size(); ++k) {
    y[k] = std::exp(z[k] - mx[segment[k]]);
    denom[segment[k]] += y[k];
  }
  for (std::size_t k = 0; k < z.size(); ++k) y[k] /= denom[segment[k]];
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  auto y_saved = std::make_shared<Array>(y);
  return tape_of(logits).record(
      std::move(y), {&logits}, [logits, seg = std::move(seg), y_saved, n_segments](const Array& g, Tape& t) {
        const Array& y = *y_saved;
        std::vector<double> dot(n_segments, 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) dot[seg[k]] += g[k] * y[k];
        Array& gz = t.grad_buffer(logits);
        for (std::size_t k = 0; k < g.size(); ++k) gz[k] += y[k] * (g[k] - dot[seg[k]]);
      });
}

Var reshape(const Var& a, Shape shape) {
  Array out = a.value().reshaped(std::move(shape));
  return tape_of(a).record(std::move(out), {&a}, [a](const Array& g, Tape& t) {
    Array& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Var elu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x) { return x > 0.0 ? 1.0 : std::exp(x); });
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(const Var& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var softmax_rows(const Var& a) {
  const Array& z = a.value();
  require_rank2("softmax_rows", z);
  const std::size_t n = z.shape()[0], c = z.shape()[1];
  Array y(z.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* zr = z.ptr() + r * c;
    double* yr = y.ptr() + r * c;
    const double m = *std::max_element(zr, zr + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (yr[j] = std::exp(zr[j] - m));
    for (std::size_t j = 0; j < c; ++j) yr[j] /= s;
  }
  auto y_saved = std::make_shared<Array>(y);
  return tape_of(a).record(std::move(y), {&a}, [a, y_saved, n, c](const Array& g, Tape& t) {
    const Array& y = *y_saved;
    Array& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < n; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[r * c + j] * y[r * c + j];
      for (std::size_t j = 0; j < c; ++j) ga[r * c + j] += y[r * c + j] * (g[r * c + j] - dot);
    }
  });
}

Var log_softmax_rows(const Var& a) {
  const Array& z = a.value();
  require_rank2("log_softmax_rows", z);
  const std::size_t n = z.shape()[0], c = z.shape()[1];
  Array y(z.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* zr = z.ptr() + r * c;
    const double m = *std::max_element(zr, zr + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(zr[j] - m);
    const double lse = m + std::log(s);
    for (std::size_t j = 0; j < c; ++j) y[r * c + j] = zr[j] - lse;
  }
  auto y_saved = std::make_shared<Array>(y);
  return tape_of(a).record(std::move(y), {&a}, [a, y_saved, n, c](const Array& g, Tape& t) {
    const Array& y = *y_saved;
    Array& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < n; ++r) {
      double gs = 0.0;
      for (std::size_t j = 0; j < c; ++j) gs += g[r * c + j];
      for (std::size_t j = 0; j < c; ++j) ga[r * c + j] += g[r * c + j] - std::exp(y[r * c + j]) * gs;
    }
  });
}

Var sum(const Var& a) {
  const Array& x = a.value();
  double s = 0.0;
  for (double v : x.data()) s += v;
  return tape_of(a).record(Array::scalar(s), {&a}, [a](const Array& g, Tape& t) {
    Array& ga = t.grad_buffer(a);
    for (double& v : ga.data()) v += g[0];
  });
}

Var mean(const Var& a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Shape conv2d_output_shape(const Shape& in, const Shape& k, const Conv2dSpec& spec) {
  if (in.size() != 4 || k.size() != 4 || in[1] != k[1]) shape_error("conv2d", in, k);
  if (spec.stride_h == 0 || spec.stride_w == 0) throw ShapeError("conv2d: zero stride");
  const std::size_t hp = in[2] + 2 * spec.pad_h, wp = in[3] + 2 * spec.pad_w;
  if (in[2] == 0 || hp < k[2] || wp < k[3]) shape_error("conv2d", in, k);
  return {in[0], k[0], (hp - k[2]) / spec.stride_h + 1, (wp - k[3]) / spec.stride_w + 1};
}

Var conv2d(const Var& input, const Var& kernel, const Var& bias, const Conv2dSpec& spec) {
  const Array& X = input.value();
  const Array& K = kernel.value();
  const Shape os = conv2d_output_shape(X.shape(), K.shape(), spec);
  if (bias.value().size() != K.shape()[0]) shape_error("conv2d bias", K.shape(), bias.shape());
  const std::size_t B = X.shape()[0], Ci = X.shape()[1], H = X.shape()[2], W = X.shape()[3];
  const std::size_t Co = K.shape()[0], kh = K.shape()[2], kw = K.shape()[3];
  const std::size_t Ho = os[2], Wo = os[3];

  // Input row for (output row, tap) with circular wrap; input column or -1 for zero padding.
  std::vector<std::size_t> hidx(Ho * kh);
  std::vector<std::ptrdiff_t> widx(Wo * kw);
  for (std::size_t oh = 0; oh < Ho; ++oh)
    for (std::size_t p = 0; p < kh; ++p) {
      const auto hp = static_cast<std::ptrdiff_t>(oh * spec.stride_h + p) - static_cast<std::ptrdiff_t>(spec.pad_h);
      const auto Hs = static_cast<std::ptrdiff_t>(H);
      hidx[oh * kh + p] = static_cast<std::size_t>(((hp % Hs) + Hs) % Hs);
    }
  for (std::size_t ow = 0; ow < Wo; ++ow)
    for (std::size_t q = 0; q < kw; ++q) {
      const auto wpos = static_cast<std::ptrdiff_t>(ow * spec.stride_w + q) - static_cast<std::ptrdiff_t>(spec.pad_w);
      widx[ow * kw + q] = (wpos < 0 || wpos >= static_cast<std::ptrdiff_t>(W)) ? -1 : wpos;
    }

  Array Y(os);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t co = 0; co < Co; ++co)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          double acc = bias.value()[co];
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const double* xs = X.ptr() + (b * Ci + ci) * H * W;
            const double* ks = K.ptr() + (co * Ci + ci) * kh * kw;
            for (std::size_t p = 0; p < kh; ++p) {
              const double* xrow = xs + hidx[oh * kh + p] * W;
              for (std::size_t q = 0; q < kw; ++q) {
                const std::ptrdiff_t w = widx[ow * kw + q];
                if (w >= 0) acc += ks[p * kw + q] * xrow[w];
              }
            }
          }
          Y[((b * Co + co) * Ho + oh) * Wo + ow] = acc;
        }

  Tape& tape = tape_of(input);
  return tape.record(std::move(Y), {&input, &kernel, &bias},
                     [input, kernel, bias, hidx, widx, B, Ci, H, W, Co, kh, kw, Ho, Wo](const Array& g, Tape& t) {
                       const Array& X = input.value();
                       const Array& K = kernel.value();
                       Array* gx = input.tracked() ? &t.grad_buffer(input) : nullptr;
                       Array* gk = kernel.tracked() ? &t.grad_buffer(kernel) : nullptr;
                       Array* gb = bias.tracked() ? &t.grad_buffer(bias) : nullptr;
                       for (std::size_t b = 0; b < B; ++b)
                         for (std::size_t co = 0; co < Co; ++co)
                           for (std::size_t oh = 0; oh < Ho; ++oh)
                             for (std::size_t ow = 0; ow < Wo; ++ow) {
                               const double go = g[((b * Co + co) * Ho + oh) * Wo + ow];
                               if (gb) (*gb)[co] += go;
                               for (std::size_t ci = 0; ci < Ci; ++ci) {
                                 const std::size_t xbase = (b * Ci + ci) * H * W;
                                 const std::size_t kbase = (co * Ci + ci) * kh * kw;
                                 for (std::size_t p = 0; p < kh; ++p) {
                                   const std::size_t xrow = xbase + hidx[oh * kh + p] * W;
                                   for (std::size_t q = 0; q < kw; ++q) {
                                     const std::ptrdiff_t w = widx[ow * kw + q];
                                     if (w < 0) continue;
                                     const auto xi = xrow + static_cast<std::size_t>(w);
                                     if (gk) (*gk)[kbase + p * kw + q] += go * X[xi];
                                     if (gx) (*gx)[xi] += go * K[kbase + p * kw + q];
                                   }
                                 }
                               }
                             }
                     });
}

// ---------------------------------------------------------------- checks & optimizer

double grad_check(const ScalarFn& f, std::vector<Array> params, double h) {
  std::vector<Array> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Array& p : params) vars.push_back(tape.variable(p));
    Var out = f(tape, vars);
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }
  auto evaluate = [&](const std::vector<Array>& ps) {
    Tape tape(false);
    std::vector<Var> vars;
    vars.reserve(ps.size());
    for (const Array& p : ps) vars.push_back(tape.constant(p));
    return f(tape, vars).value()[0];
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].size(); ++k) {
      const double orig = params[i][k];
      params[i][k] = orig + h;
      const double fp = evaluate(params);
      params[i][k] = orig - h;
      const double fm = evaluate(params);
      params[i][k] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[i][k];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

void adam_step(std::span<Array> params, std::span<const Array> grads, AdamState& state, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (const Array& p : params) {
      state.m.emplace_back(p.shape());
      state.v.emplace_back(p.shape());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match params");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) shape_error("adam_step", params[i].shape(), grads[i].shape());
    if (state.m[i].shape() != params[i].shape()) shape_error("adam_step state", state.m[i].shape(), params[i].shape());
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Array& p = params[i];
    Array& m = state.m[i];
    Array& v = state.v[i];
    const Array& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace glpmfd::tensor
