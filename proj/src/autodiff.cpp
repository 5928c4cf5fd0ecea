#include "gacem/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gacem/kernels.hpp"
#include "gacem/normal.hpp"

namespace gacem::ad {

// ---- Tensor ---------------------------------------------------------------

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw DimensionError("tensor: shape " + shape_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
  }
}

std::size_t Tensor::rows() const {
  if (rank() == 2) return shape_[0];
  if (rank() <= 1) return 1;
  throw DimensionError("tensor: rows() needs rank <= 2, got " + shape_string(shape_));
}

std::size_t Tensor::cols() const {
  if (rank() == 2) return shape_[1];
  if (rank() == 1) return shape_[0];
  if (rank() == 0) return 1;
  throw DimensionError("tensor: cols() needs rank <= 2, got " + shape_string(shape_));
}

double Tensor::item() const {
  if (values_.size() != 1) throw DimensionError("tensor: item() on " + shape_string(shape_));
  return values_[0];
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

// ---- Tape -----------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backprop backprop) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [this](const Var& v) {
    if (&v.tape() != this) throw ContractError("tape: operands recorded on different tapes");
    return nodes_[v.id()].needs_grad;
  });
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backprop) : Backprop{}, nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var& v, std::span<const double> g) {
  Node& n = nodes_[v.id()];
  if (!n.needs_grad) return;
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
  if (g.size() != n.value.size()) throw DimensionError("tape: gradient size mismatch");
  double* dst = n.grad.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::accumulate(const Var& v, const Tensor& g) { accumulate(v, g.values()); }

void Tape::backward(const Var& output) {
  if (&output.tape() != this) throw ContractError("backward: output belongs to another tape");
  Node& out = nodes_[output.id()];
  if (out.value.size() != 1) {
    throw ContractError("backward: output must be a scalar, got shape " + shape_string(out.value.shape()));
  }
  if (!out.needs_grad) return;
  out.grad = Tensor(out.value.shape(), 1.0);
  // Inputs always precede their consumers, so a reverse index sweep is a
  // valid reverse topological order.
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backprop) {
      Tensor g = std::move(n.grad);
      n.backprop(*this, g);
      n.grad = Tensor();
    } else if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.size() != p.value.size()) p.zero_grad();
      for (std::size_t j = 0; j < n.grad.size(); ++j) p.grad[j] += n.grad[j];
      n.grad = Tensor();
    }
  }
}

// ---- helpers --------------------------------------------------------------

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

void require_rank2(const Var& a, const char* op) {
  if (a.value().rank() != 2) throw DimensionError(std::string(op) + ": expected a rank-2 tensor");
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

// ---- elementwise ----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  const Var ins[] = {a, b};
  return a.tape().record(std::move(out), ins, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  const Var ins[] = {a, b};
  return a.tape().record(std::move(out), ins, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, map(g, [](double v) { return -v; }));
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  const Var ins[] = {a, b};
  return a.tape().record(std::move(out), ins, [a, b](Tape& t, const Tensor& g) {
    Tensor ga(g.shape()), gb(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] = g[i] * b.value()[i];
      gb[i] = g[i] * a.value()[i];
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

Var scale(const Var& a, double s) {
  const Var ins[] = {a};
  return a.tape().record(map(a.value(), [s](double v) { return s * v; }), ins,
                         [a, s](Tape& t, const Tensor& g) { t.accumulate(a, map(g, [s](double v) { return s * v; })); });
}

Var add_scalar(const Var& a, double s) {
  const Var ins[] = {a};
  return a.tape().record(map(a.value(), [s](double v) { return v + s; }), ins,
                         [a](Tape& t, const Tensor& g) { t.accumulate(a, g); });
}

Var square(const Var& a) { return mul(a, a); }

Var tanh(const Var& a) {
  Tensor out = map(a.value(), [](double v) { return std::tanh(v); });
  const Var ins[] = {a};
  auto& tape = a.tape();
  const std::size_t self = tape.size();
  return tape.record(std::move(out), ins, [a, self](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(Var(&t, self));
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * (1.0 - y[i] * y[i]);
    t.accumulate(a, ga);
  });
}

Var exp(const Var& a) {
  Tensor out = map(a.value(), [](double v) { return std::exp(v); });
  const Var ins[] = {a};
  auto& tape = a.tape();
  const std::size_t self = tape.size();
  return tape.record(std::move(out), ins, [a, self](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(Var(&t, self));
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * y[i];
    t.accumulate(a, ga);
  });
}

Var log(const Var& a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw DomainError("log: argument must be positive");
  }
  const Var ins[] = {a};
  return a.tape().record(map(a.value(), [](double v) { return std::log(v); }), ins,
                         [a](Tape& t, const Tensor& g) {
                           Tensor ga(g.shape());
                           for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / a.value()[i];
                           t.accumulate(a, ga);
                         });
}

Var clamp(const Var& a, double lo, double hi) {
  const Var ins[] = {a};
  return a.tape().record(map(a.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); }), ins,
                         [a, lo, hi](Tape& t, const Tensor& g) {
                           Tensor ga(g.shape());
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             const double v = a.value()[i];
                             ga[i] = (v >= lo && v <= hi) ? g[i] : 0.0;
                           }
                           t.accumulate(a, ga);
                         });
}

// ---- reductions -----------------------------------------------------------

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const Var ins[] = {a};
  return a.tape().record(Tensor::scalar(s), ins, [a](Tape& t, const Tensor& g) {
    t.accumulate(a, Tensor(a.shape(), g.item()));
  });
}

Var mean(const Var& a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw ContractError("mean: empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var weighted_sum(const Var& a, std::span<const double> coeffs) {
  if (coeffs.size() != a.value().size()) throw DimensionError("weighted_sum: coefficient count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * a.value()[i];
  std::vector<double> c(coeffs.begin(), coeffs.end());
  const Var ins[] = {a};
  return a.tape().record(Tensor::scalar(s), ins, [a, c = std::move(c)](Tape& t, const Tensor& g) {
    Tensor ga(a.shape());
    for (std::size_t i = 0; i < c.size(); ++i) ga[i] = g.item() * c[i];
    t.accumulate(a, ga);
  });
}

// ---- row-wise -------------------------------------------------------------

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_cols");
  const Tensor& v = a.value();
  if (begin > end || end > v.cols()) throw DimensionError("slice_cols: column range out of bounds");
  const std::size_t rows = v.rows(), width = end - begin, cols = v.cols();
  Tensor out = Tensor::matrix(rows, width);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(v.data() + r * cols + begin, width, out.data() + r * width);
  const Var ins[] = {a};
  return a.tape().record(std::move(out), ins, [a, begin, width, rows, cols](Tape& t, const Tensor& g) {
    Tensor ga = Tensor::matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(g.data() + r * width, width, ga.data() + r * cols + begin);
    t.accumulate(a, ga);
  });
}

Var log_sum_exp(const Var& a) {
  require_rank2(a, "log_sum_exp");
  const Tensor& v = a.value();
  const std::size_t rows = v.rows(), cols = v.cols();
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = v.data() + r * cols;
    const double m = *std::max_element(row, row + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(row[c] - m);
    out[r] = m + std::log(s);
  }
  const Var ins[] = {a};
  auto& tape = a.tape();
  const std::size_t self = tape.size();
  return tape.record(std::move(out), ins, [a, self, rows, cols](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(Var(&t, self));
    const Tensor& x = a.value();
    Tensor ga = Tensor::matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) ga.at(r, c) = g[r] * std::exp(x.at(r, c) - y[r]);
    t.accumulate(a, ga);
  });
}

Var log_softmax(const Var& a) {
  require_rank2(a, "log_softmax");
  const Tensor& v = a.value();
  const std::size_t rows = v.rows(), cols = v.cols();
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double z = normal::log_sum_exp(v.data() + r * cols, cols);
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = v.at(r, c) - z;
  }
  const Var ins[] = {a};
  auto& tape = a.tape();
  const std::size_t self = tape.size();
  return tape.record(std::move(out), ins, [a, self, rows, cols](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(Var(&t, self));
    Tensor ga = Tensor::matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < cols; ++c) gs += g.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) ga.at(r, c) = g.at(r, c) - std::exp(y.at(r, c)) * gs;
    }
    t.accumulate(a, ga);
  });
}

Var softmax(const Var& a) {
  require_rank2(a, "softmax");
  const Tensor& v = a.value();
  const std::size_t rows = v.rows(), cols = v.cols();
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double z = normal::log_sum_exp(v.data() + r * cols, cols);
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = std::exp(v.at(r, c) - z);
  }
  const Var ins[] = {a};
  auto& tape = a.tape();
  const std::size_t self = tape.size();
  return tape.record(std::move(out), ins, [a, self, rows, cols](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(Var(&t, self));
    Tensor ga = Tensor::matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g.at(r, c) * y.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) ga.at(r, c) = y.at(r, c) * (g.at(r, c) - dot);
    }
    t.accumulate(a, ga);
  });
}

// ---- distributions --------------------------------------------------------

Var gaussian_log_pdf(const Var& x, const Var& mu, const Var& sigma) {
  require_same_shape(x, mu, "gaussian_log_pdf");
  require_same_shape(x, sigma, "gaussian_log_pdf");
  const std::size_t n = x.value().size();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i) out[i] = normal::log_pdf(x.value()[i], mu.value()[i], sigma.value()[i]);
  const Var ins[] = {x, mu, sigma};
  return x.tape().record(std::move(out), ins, [x, mu, sigma, n](Tape& t, const Tensor& g) {
    Tensor gx(x.shape()), gm(x.shape()), gs(x.shape());
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sigma.value()[i];
      const double z = (x.value()[i] - mu.value()[i]) / s;
      gx[i] = -g[i] * z / s;
      gm[i] = g[i] * z / s;
      gs[i] = g[i] * (z * z - 1.0) / s;
    }
    t.accumulate(x, gx);
    t.accumulate(mu, gm);
    t.accumulate(sigma, gs);
  });
}

Var gaussian_cdf(const Var& z) {
  const Var ins[] = {z};
  return z.tape().record(map(z.value(), [](double v) { return normal::cdf(v); }), ins,
                         [z](Tape& t, const Tensor& g) {
                           Tensor gz(g.shape());
                           for (std::size_t i = 0; i < g.size(); ++i) gz[i] = g[i] * normal::std_pdf(z.value()[i]);
                           t.accumulate(z, gz);
                         });
}

Var binned_mixture_log_prob(const Var& logits, const Var& mu, const Var& sigma, std::span<const int> bins,
                            int num_bins) {
  require_rank2(logits, "binned_mixture_log_prob");
  require_same_shape(logits, mu, "binned_mixture_log_prob");
  require_same_shape(logits, sigma, "binned_mixture_log_prob");
  const std::size_t rows = logits.value().rows(), K = logits.value().cols();
  if (bins.size() != rows) throw DimensionError("binned_mixture_log_prob: one bin per row required");
  if (K > 256) throw DimensionError("binned_mixture_log_prob: at most 256 components");
  for (int b : bins) {
    if (b < 0 || b >= num_bins) throw ContractError("binned_mixture_log_prob: bin index off the grid");
  }
  for (double s : sigma.value().values()) {
    if (!(s > 0.0)) throw DomainError("binned_mixture_log_prob: sigma must be positive");
  }
  Tape& tape = logits.tape();
  const bool want_grad = tape.needs_grad(logits) || tape.needs_grad(mu) || tape.needs_grad(sigma);
  Tensor out({rows});
  const kernels::MixtureShape shape{rows, K, num_bins};
  const std::vector<int> bin_copy(bins.begin(), bins.end());
  if (!want_grad) {
    kernels::mixture_log_prob(shape, logits.value().values(), mu.value().values(), sigma.value().values(),
                              bin_copy, out.values(), nullptr);
    const Var ins[] = {logits, mu, sigma};
    return tape.record(std::move(out), ins, {});
  }
  auto jl = std::make_shared<Tensor>(Shape{rows, K});
  auto jm = std::make_shared<Tensor>(Shape{rows, K});
  auto js = std::make_shared<Tensor>(Shape{rows, K});
  const kernels::MixtureJacobian jac{jl->values(), jm->values(), js->values()};
  kernels::mixture_log_prob(shape, logits.value().values(), mu.value().values(), sigma.value().values(),
                            bin_copy, out.values(), &jac);
  const Var ins[] = {logits, mu, sigma};
  return tape.record(std::move(out), ins, [=](Tape& t, const Tensor& g) {
    Tensor gl(logits.shape()), gm(logits.shape()), gs(logits.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t i = r * K + k;
        gl[i] = g[r] * (*jl)[i];
        gm[i] = g[r] * (*jm)[i];
        gs[i] = g[r] * (*js)[i];
      }
    }
    t.accumulate(logits, gl);
    t.accumulate(mu, gm);
    t.accumulate(sigma, gs);
  });
}

// ---- layers ---------------------------------------------------------------

MaskedLinear::MaskedLinear(std::string name, std::size_t in, std::size_t out)
    : weight(name + ".weight", Tensor::matrix(out, in)),
      bias(name + ".bias", Tensor({out})),
      mask(Tensor::matrix(out, in, 1.0)) {}

Tensor MaskedLinear::effective_weight() const {
  Tensor w(weight.value.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = weight.value[i] * mask[i];
  return w;
}

void MaskedLinear::init_uniform(std::mt19937_64& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, in_features())));
  std::uniform_real_distribution<double> dist(-s, s);
  for (double& w : weight.value.values()) w = dist(rng);
  bias.value.fill(0.0);
}

Var forward_masked_linear(const Var& x, MaskedLinear& layer) {
  require_rank2(x, "masked_linear");
  const std::size_t batch = x.value().rows(), in = x.value().cols(), out = layer.out_features();
  if (in != layer.in_features()) {
    throw DimensionError("masked_linear: input has " + std::to_string(in) + " features, layer expects " +
                         std::to_string(layer.in_features()));
  }
  Tape& tape = x.tape();
  const Var w = tape.parameter(layer.weight);
  const Var b = tape.parameter(layer.bias);
  auto w_eff = std::make_shared<Tensor>(layer.effective_weight());
  Tensor y = Tensor::matrix(batch, out);
  const kernels::LinearShape shape{batch, in, out};
  kernels::linear_forward(shape, x.value().values(), w_eff->values(), layer.bias.value.values(), y.values());
  const Tensor* mask = &layer.mask;
  const Var ins[] = {x, w, b};
  return tape.record(std::move(y), ins, [=](Tape& t, const Tensor& g) {
    if (t.needs_grad(x)) {
      Tensor gx = Tensor::matrix(batch, in);
      kernels::linear_backward_input(shape, g.values(), w_eff->values(), gx.values());
      t.accumulate(x, gx);
    }
    Tensor gw = Tensor::matrix(out, in);
    Tensor gb({out});
    kernels::linear_backward_params(shape, g.values(), x.value().values(), mask->values(), gw.values(),
                                    gb.values());
    t.accumulate(w, gw);
    t.accumulate(b, gb);
  });
}

// ---- Adam -----------------------------------------------------------------

Adam::Adam(std::vector<Parameter*> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("adam: learning rate must be positive");
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
    if (p->grad.size() != p->value.size()) p->zero_grad();
  }
}

void Adam::descend() { apply(-1.0); }
void Adam::ascend() { apply(1.0); }

void Adam::apply(double direction) {
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t j = 0; j < params_.size(); ++j) {
    Parameter& p = *params_[j];
    auto& m = m_[j];
    auto& v = v_[j];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double step = config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
      p.value[i] += direction * step;
    }
    p.zero_grad();
  }
}

}  // namespace gacem::ad
