#include "moodshift/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "moodshift/random.hpp"

namespace moodshift::nn {

namespace {

constexpr double kLnEps = 1e-5;
constexpr std::size_t kPerLayer = 16;

enum LayerSlot : std::size_t {
  kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo, kLn1G, kLn1B, kFf1W, kFf1B, kFf2W, kFf2B, kLn2G, kLn2B
};

std::size_t layer_base(std::size_t l) { return 1 + l * kPerLayer; }
std::size_t head_w(const TransformerConfig& c) { return 1 + c.n_layers * kPerLayer; }
std::size_t head_b(const TransformerConfig& c) { return head_w(c) + 1; }

std::vector<Tensor> layout(const TransformerConfig& c) {
  const std::size_t d = c.d_model, f = c.d_ff;
  std::vector<Tensor> t;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    t.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  };
  add("embedding", {c.vocab_size, d});
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "wq", {d, d});
    add(p + "bq", {d});
    add(p + "wk", {d, d});
    add(p + "bk", {d});
    add(p + "wv", {d, d});
    add(p + "bv", {d});
    add(p + "wo", {d, d});
    add(p + "bo", {d});
    add(p + "ln1.gamma", {d});
    add(p + "ln1.beta", {d});
    add(p + "ff1.w", {d, f});
    add(p + "ff1.b", {f});
    add(p + "ff2.w", {f, d});
    add(p + "ff2.b", {d});
    add(p + "ln2.gamma", {d});
    add(p + "ln2.beta", {d});
  }
  add("head.w", {d, c.n_classes});
  add("head.b", {c.n_classes});
  return t;
}

double position_encoding(std::size_t pos, std::size_t i, std::size_t d) {
  const double expo = static_cast<double>(i - i % 2) / static_cast<double>(d);
  const double angle = static_cast<double>(pos) / std::pow(10000.0, expo);
  return i % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

void layer_norm_fwd(const double* x, const double* g, const double* b, double* y, double* xhat, double* rstd,
                    std::size_t rows, std::size_t d) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xi[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<double>(d);
    const double r = 1.0 / std::sqrt(var + kLnEps);
    rstd[i] = r;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (xi[j] - mu) * r;
      xhat[i * d + j] = xh;
      y[i * d + j] = g[j] * xh + b[j];
    }
  }
}

// dx is overwritten; dg and db accumulate.
void layer_norm_bwd(const double* dy, const double* xhat, const double* rstd, const double* g, double* dx, double* dg,
                    double* db, std::size_t rows, std::size_t d) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* dyi = dy + i * d;
    const double* xh = xhat + i * d;
    double mean_dxh = 0.0, mean_dxh_xh = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dyi[j] * g[j];
      mean_dxh += dxh;
      mean_dxh_xh += dxh * xh[j];
      dg[j] += dyi[j] * xh[j];
      db[j] += dyi[j];
    }
    mean_dxh /= static_cast<double>(d);
    mean_dxh_xh /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j)
      dx[i * d + j] = rstd[i] * (dyi[j] * g[j] - mean_dxh - xh[j] * mean_dxh_xh);
  }
}

void add_bias(double* x, const double* b, std::size_t rows, std::size_t n) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j) x[i * n + j] += b[j];
}

void sum_rows_into(const double* x, double* out, std::size_t rows, std::size_t n) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += x[i * n + j];
}

struct LayerCache {
  std::vector<double> xin, q, k, v, att, o, zmask, xhat1, rstd1, y1, hpre, h, fmask, xhat2, rstd2;
};

struct SeqCache {
  std::size_t len = 0;
  std::vector<int> ids;
  std::vector<LayerCache> layers;
  std::vector<double> xfinal;
};

std::size_t real_length(const TransformerConfig& cfg, const EncodedText& x) {
  if (x.ids.size() != cfg.max_len)
    throw ShapeError("input_ids: expected length " + std::to_string(cfg.max_len) + ", got " +
                     std::to_string(x.ids.size()));
  if (x.mask.size() != cfg.max_len)
    throw ShapeError("attention_mask: expected length " + std::to_string(cfg.max_len) + ", got " +
                     std::to_string(x.mask.size()));
  std::size_t len = 0;
  while (len < x.mask.size() && x.mask[len]) ++len;
  for (std::size_t i = len; i < x.mask.size(); ++i)
    if (x.mask[i]) throw ShapeError("attention_mask: real tokens must form a prefix");
  if (len == 0) throw ShapeError("attention_mask: sequence has no real tokens");
  for (std::size_t i = 0; i < len; ++i) {
    if (x.ids[i] < 0 || static_cast<std::size_t>(x.ids[i]) >= cfg.vocab_size)
      throw ShapeError("input_ids: id " + std::to_string(x.ids[i]) + " outside vocabulary of size " +
                       std::to_string(cfg.vocab_size));
  }
  return len;
}

void fill_dropout(std::vector<double>& mask, std::size_t n, double rate, Rng* rng) {
  mask.assign(n, 1.0);
  if (!rng || rate <= 0.0) return;
  const double keep = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = rng->uniform01() < rate ? 0.0 : keep;
}

std::array<double, kNumLabels> run_forward(const TransformerConfig& cfg, const std::vector<Tensor>& p,
                                           const EncodedText& x, SeqCache& cache, Rng* dropout) {
  const std::size_t d = cfg.d_model, f = cfg.d_ff, nh = cfg.n_heads, dh = d / nh;
  const std::size_t len = real_length(cfg, x);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  cache.len = len;
  cache.ids.assign(x.ids.begin(), x.ids.begin() + static_cast<std::ptrdiff_t>(len));
  cache.layers.resize(cfg.n_layers);

  std::vector<double> xcur(len * d);
  const auto& emb = p[0].values;
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t j = 0; j < d; ++j)
      xcur[i * d + j] = emb[static_cast<std::size_t>(cache.ids[i]) * d + j] + position_encoding(i, j, d);

  std::vector<double> z(len * d), r(len * d), fo(len * d);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::size_t b = layer_base(l);
    LayerCache& c = cache.layers[l];
    c.xin = xcur;
    c.q.assign(len * d, 0.0);
    c.k.assign(len * d, 0.0);
    c.v.assign(len * d, 0.0);
    kernels::gemm_nn(c.xin.data(), p[b + kWq].values.data(), c.q.data(), len, d, d);
    kernels::gemm_nn(c.xin.data(), p[b + kWk].values.data(), c.k.data(), len, d, d);
    kernels::gemm_nn(c.xin.data(), p[b + kWv].values.data(), c.v.data(), len, d, d);
    add_bias(c.q.data(), p[b + kBq].values.data(), len, d);
    add_bias(c.k.data(), p[b + kBk].values.data(), len, d);
    add_bias(c.v.data(), p[b + kBv].values.data(), len, d);

    c.att.assign(nh * len * len, 0.0);
    c.o.assign(len * d, 0.0);
    for (std::size_t h = 0; h < nh; ++h) {
      double* a = c.att.data() + h * len * len;
      for (std::size_t i = 0; i < len; ++i) {
        double mx = -INFINITY;
        for (std::size_t j = 0; j < len; ++j) {
          double s = 0.0;
          for (std::size_t e = 0; e < dh; ++e) s += c.q[i * d + h * dh + e] * c.k[j * d + h * dh + e];
          a[i * len + j] = s * scale;
          mx = std::max(mx, a[i * len + j]);
        }
        double den = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
          a[i * len + j] = std::exp(a[i * len + j] - mx);
          den += a[i * len + j];
        }
        for (std::size_t j = 0; j < len; ++j) a[i * len + j] /= den;
        for (std::size_t j = 0; j < len; ++j) {
          const double w = a[i * len + j];
          for (std::size_t e = 0; e < dh; ++e) c.o[i * d + h * dh + e] += w * c.v[j * d + h * dh + e];
        }
      }
    }

    std::fill(z.begin(), z.end(), 0.0);
    kernels::gemm_nn(c.o.data(), p[b + kWo].values.data(), z.data(), len, d, d);
    add_bias(z.data(), p[b + kBo].values.data(), len, d);
    fill_dropout(c.zmask, len * d, cfg.dropout_rate, dropout);
    for (std::size_t i = 0; i < len * d; ++i) r[i] = c.xin[i] + z[i] * c.zmask[i];

    c.y1.assign(len * d, 0.0);
    c.xhat1.assign(len * d, 0.0);
    c.rstd1.assign(len, 0.0);
    layer_norm_fwd(r.data(), p[b + kLn1G].values.data(), p[b + kLn1B].values.data(), c.y1.data(), c.xhat1.data(),
                   c.rstd1.data(), len, d);

    c.hpre.assign(len * f, 0.0);
    kernels::gemm_nn(c.y1.data(), p[b + kFf1W].values.data(), c.hpre.data(), len, d, f);
    add_bias(c.hpre.data(), p[b + kFf1B].values.data(), len, f);
    c.h.resize(len * f);
    for (std::size_t i = 0; i < len * f; ++i) c.h[i] = gelu(c.hpre[i]);

    std::fill(fo.begin(), fo.end(), 0.0);
    kernels::gemm_nn(c.h.data(), p[b + kFf2W].values.data(), fo.data(), len, f, d);
    add_bias(fo.data(), p[b + kFf2B].values.data(), len, d);
    fill_dropout(c.fmask, len * d, cfg.dropout_rate, dropout);
    for (std::size_t i = 0; i < len * d; ++i) r[i] = c.y1[i] + fo[i] * c.fmask[i];

    c.xhat2.assign(len * d, 0.0);
    c.rstd2.assign(len, 0.0);
    layer_norm_fwd(r.data(), p[b + kLn2G].values.data(), p[b + kLn2B].values.data(), xcur.data(), c.xhat2.data(),
                   c.rstd2.data(), len, d);
  }
  cache.xfinal = xcur;

  std::array<double, kNumLabels> logits{};
  const auto& hw = p[head_w(cfg)].values;
  const auto& hb = p[head_b(cfg)].values;
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    double s = hb[k];
    for (std::size_t j = 0; j < d; ++j) s += xcur[j] * hw[j * kNumLabels + k];
    logits[k] = s;
  }
  return logits;
}

void run_backward(const TransformerConfig& cfg, const std::vector<Tensor>& p, const SeqCache& cache,
                  const std::array<double, kNumLabels>& dlogits, std::vector<Tensor>& g) {
  const std::size_t d = cfg.d_model, f = cfg.d_ff, nh = cfg.n_heads, dh = d / nh;
  const std::size_t len = cache.len;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto& ghw = g[head_w(cfg)].values;
  auto& ghb = g[head_b(cfg)].values;
  const auto& hw = p[head_w(cfg)].values;
  std::vector<double> dx(len * d, 0.0);
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    ghb[k] += dlogits[k];
    for (std::size_t j = 0; j < d; ++j) {
      ghw[j * kNumLabels + k] += cache.xfinal[j] * dlogits[k];
      dx[j] += hw[j * kNumLabels + k] * dlogits[k];
    }
  }

  std::vector<double> dr(len * d), dy1(len * d), dfo(len * d), dh_(len * f), dz(len * d), dobuf(len * d);
  std::vector<double> dq(len * d), dk(len * d), dv(len * d), datt(len);
  for (std::size_t li = cfg.n_layers; li-- > 0;) {
    const std::size_t b = layer_base(li);
    const LayerCache& c = cache.layers[li];

    // LN2
    layer_norm_bwd(dx.data(), c.xhat2.data(), c.rstd2.data(), p[b + kLn2G].values.data(), dr.data(),
                   g[b + kLn2G].values.data(), g[b + kLn2B].values.data(), len, d);
    dy1 = dr;
    for (std::size_t i = 0; i < len * d; ++i) dfo[i] = dr[i] * c.fmask[i];

    // FF2
    kernels::gemm_tn(c.h.data(), dfo.data(), g[b + kFf2W].values.data(), len, f, d);
    sum_rows_into(dfo.data(), g[b + kFf2B].values.data(), len, d);
    std::fill(dh_.begin(), dh_.end(), 0.0);
    kernels::gemm_nt(dfo.data(), p[b + kFf2W].values.data(), dh_.data(), len, d, f);
    for (std::size_t i = 0; i < len * f; ++i) dh_[i] *= gelu_grad(c.hpre[i]);

    // FF1
    kernels::gemm_tn(c.y1.data(), dh_.data(), g[b + kFf1W].values.data(), len, d, f);
    sum_rows_into(dh_.data(), g[b + kFf1B].values.data(), len, f);
    kernels::gemm_nt(dh_.data(), p[b + kFf1W].values.data(), dy1.data(), len, f, d);

    // LN1
    layer_norm_bwd(dy1.data(), c.xhat1.data(), c.rstd1.data(), p[b + kLn1G].values.data(), dr.data(),
                   g[b + kLn1G].values.data(), g[b + kLn1B].values.data(), len, d);
    dx = dr;  // residual path into the layer input
    for (std::size_t i = 0; i < len * d; ++i) dz[i] = dr[i] * c.zmask[i];

    // output projection
    kernels::gemm_tn(c.o.data(), dz.data(), g[b + kWo].values.data(), len, d, d);
    sum_rows_into(dz.data(), g[b + kBo].values.data(), len, d);
    std::fill(dobuf.begin(), dobuf.end(), 0.0);
    kernels::gemm_nt(dz.data(), p[b + kWo].values.data(), dobuf.data(), len, d, d);

    // attention
    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dk.begin(), dk.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    for (std::size_t h = 0; h < nh; ++h) {
      const double* a = c.att.data() + h * len * len;
      for (std::size_t i = 0; i < len; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
          double s = 0.0;
          for (std::size_t e = 0; e < dh; ++e) s += dobuf[i * d + h * dh + e] * c.v[j * d + h * dh + e];
          datt[j] = s;
          dot += a[i * len + j] * s;
          for (std::size_t e = 0; e < dh; ++e) dv[j * d + h * dh + e] += a[i * len + j] * dobuf[i * d + h * dh + e];
        }
        for (std::size_t j = 0; j < len; ++j) {
          const double ds = a[i * len + j] * (datt[j] - dot) * scale;
          for (std::size_t e = 0; e < dh; ++e) {
            dq[i * d + h * dh + e] += ds * c.k[j * d + h * dh + e];
            dk[j * d + h * dh + e] += ds * c.q[i * d + h * dh + e];
          }
        }
      }
    }

    // input projections
    kernels::gemm_tn(c.xin.data(), dq.data(), g[b + kWq].values.data(), len, d, d);
    kernels::gemm_tn(c.xin.data(), dk.data(), g[b + kWk].values.data(), len, d, d);
    kernels::gemm_tn(c.xin.data(), dv.data(), g[b + kWv].values.data(), len, d, d);
    sum_rows_into(dq.data(), g[b + kBq].values.data(), len, d);
    sum_rows_into(dk.data(), g[b + kBk].values.data(), len, d);
    sum_rows_into(dv.data(), g[b + kBv].values.data(), len, d);
    kernels::gemm_nt(dq.data(), p[b + kWq].values.data(), dx.data(), len, d, d);
    kernels::gemm_nt(dk.data(), p[b + kWk].values.data(), dx.data(), len, d, d);
    kernels::gemm_nt(dv.data(), p[b + kWv].values.data(), dx.data(), len, d, d);
  }

  auto& gemb = g[0].values;
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t j = 0; j < d; ++j) gemb[static_cast<std::size_t>(cache.ids[i]) * d + j] += dx[i * d + j];
}

void check_params(const TransformerConfig& cfg, const Parameters& params) {
  if (params.tensors().size() != head_b(cfg) + 1)
    throw ShapeError("parameters: expected " + std::to_string(head_b(cfg) + 1) + " tensors, got " +
                     std::to_string(params.tensors().size()));
}

}  // namespace

void TransformerConfig::validate() const {
  if (vocab_size == 0 || d_model == 0 || n_heads == 0 || n_layers == 0 || d_ff == 0)
    throw std::invalid_argument("TransformerConfig: sizes must be positive");
  if (d_model % n_heads != 0) throw std::invalid_argument("TransformerConfig: d_model must be divisible by n_heads");
  if (max_len < 2) throw std::invalid_argument("TransformerConfig: max_len must be >= 2");
  if (n_classes != kNumLabels) throw std::invalid_argument("TransformerConfig: n_classes must be 3");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("TransformerConfig: dropout_rate must be in [0,1)");
}

Parameters Parameters::zeros(const TransformerConfig& cfg) {
  cfg.validate();
  Parameters p;
  p.tensors_ = layout(cfg);
  return p;
}

Parameters Parameters::initialize(const TransformerConfig& cfg, std::uint64_t seed) {
  Parameters p = zeros(cfg);
  Rng rng(seed);
  for (auto& t : p.tensors_) {
    const auto& n = t.name;
    auto ends_with = [&](std::string_view s) { return n.size() >= s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0; };
    if (n == "embedding") {
      const double a = std::sqrt(3.0);
      for (auto& v : t.values) v = rng.uniform(-a, a);
    } else if (ends_with("gamma")) {
      std::fill(t.values.begin(), t.values.end(), 1.0);
    } else if (t.shape.size() == 2) {
      const double a = std::sqrt(6.0 / static_cast<double>(t.shape[0] + t.shape[1]));
      for (auto& v : t.values) v = rng.uniform(-a, a);
    }
  }
  return p;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

void Parameters::check_layout(const TransformerConfig& cfg) const {
  const auto expected = layout(cfg);
  if (tensors_.size() != expected.size())
    throw ShapeError("parameters: expected " + std::to_string(expected.size()) + " tensors, got " +
                     std::to_string(tensors_.size()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (tensors_[i].name != expected[i].name)
      throw ShapeError("tensor " + std::to_string(i) + ": expected name '" + expected[i].name + "', got '" +
                       tensors_[i].name + "'");
    if (tensors_[i].shape != expected[i].shape || tensors_[i].values.size() != expected[i].values.size())
      throw ShapeError("tensor '" + expected[i].name + "': shape does not match the configuration");
  }
}

void Parameters::set_zero() {
  for (auto& t : tensors_) std::fill(t.values.begin(), t.values.end(), 0.0);
}

void Parameters::add(const Parameters& other) {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& a = tensors_[i].values;
    const auto& b = other.tensors_[i].values;
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
  }
}

void Parameters::scale(double s) {
  for (auto& t : tensors_)
    for (auto& v : t.values) v *= s;
}

std::array<double, kNumLabels> softmax(const std::array<double, kNumLabels>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::array<double, kNumLabels> out{};
  double den = 0.0;
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    out[k] = std::exp(logits[k] - mx);
    den += out[k];
  }
  for (auto& v : out) v /= den;
  return out;
}

std::array<double, kNumLabels> forward_one(const TransformerConfig& cfg, const Parameters& params,
                                           const EncodedText& x) {
  check_params(cfg, params);
  SeqCache cache;
  return run_forward(cfg, params.tensors(), x, cache, nullptr);
}

std::vector<std::array<double, kNumLabels>> forward(const TransformerConfig& cfg, const Parameters& params,
                                                    std::span<const EncodedText> batch, kernels::Execution exec) {
  check_params(cfg, params);
  std::vector<std::array<double, kNumLabels>> out(batch.size());
  kernels::for_each_index(batch.size(), exec, [&](std::size_t i) {
    SeqCache cache;
    out[i] = run_forward(cfg, params.tensors(), batch[i], cache, nullptr);
  });
  return out;
}

LossAndGrad loss_and_grad(const TransformerConfig& cfg, const Parameters& params, std::span<const EncodedText> batch,
                          std::span<const SentimentLabel> gold, kernels::Execution exec, std::uint64_t dropout_seed) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  if (batch.size() != gold.size())
    throw ShapeError("labels: expected " + std::to_string(batch.size()) + " entries, got " + std::to_string(gold.size()));
  check_params(cfg, params);

  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<Parameters> per_example(n);
  std::vector<double> losses(n);
  LossAndGrad res;
  res.logits.resize(n);

  kernels::for_each_index(n, exec, [&](std::size_t i) {
    SeqCache cache;
    std::optional<Rng> rng;
    if (cfg.dropout_rate > 0.0) rng.emplace(dropout_seed + 0x9E3779B97F4A7C15ULL * (i + 1));
    const auto logits = run_forward(cfg, params.tensors(), batch[i], cache, rng ? &*rng : nullptr);
    res.logits[i] = logits;
    const auto prob = softmax(logits);
    const std::size_t y = label_index(gold[i]);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double lse = 0.0;
    for (double l : logits) lse += std::exp(l - mx);
    losses[i] = std::log(lse) + mx - logits[y];

    std::array<double, kNumLabels> dlogits{};
    for (std::size_t k = 0; k < kNumLabels; ++k) dlogits[k] = (prob[k] - (k == y ? 1.0 : 0.0)) * inv_n;
    per_example[i] = Parameters::zeros(cfg);
    run_backward(cfg, params.tensors(), cache, dlogits, per_example[i].tensors());
  });

  res.grads = Parameters::zeros(cfg);
  for (std::size_t i = 0; i < n; ++i) {
    res.grads.add(per_example[i]);
    res.loss += losses[i];
  }
  res.loss *= inv_n;
  return res;
}

}  // namespace moodshift::nn
