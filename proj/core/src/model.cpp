/* Copyright 2026 The kwsdet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "kwsdet/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace kws {
namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

// Parameter vectors live in std::vector, whose alignment varies between
// allocations. Eigen picks its vectorised summation order from the address,
// so products read from an aligned copy and gradients are formed in aligned
// temporaries before being added in, keeping runs bit-identical.
Matrix param_block(const std::vector<double>& v, std::size_t off, Eigen::Index rows,
                   Eigen::Index cols) {
  return ConstMap(v.data() + off, rows, cols);
}

constexpr int kHeatHead = 0;
constexpr int kLengthHead = 1;
constexpr int kOffsetHead = 2;
constexpr double kInitialLengthFrames = 8.0;

int conv_out_len(int n, int kernel, int stride) {
  const int pad = (kernel - 1) / 2;
  return (n + 2 * pad - kernel) / stride + 1;
}

Matrix im2col(const Matrix& x, int kernel, int stride) {
  const int n = static_cast<int>(x.rows());
  const auto cin = x.cols();
  const int pad = (kernel - 1) / 2;
  const int out = conv_out_len(n, kernel, stride);
  Matrix cols = Matrix::Zero(out, kernel * cin);
  for (int t = 0; t < out; ++t) {
    for (int j = 0; j < kernel; ++j) {
      const int src = t * stride + j - pad;
      if (src < 0 || src >= n) continue;
      cols.block(t, j * cin, 1, cin) = x.row(src);
    }
  }
  return cols;
}

void col2im_add(const Matrix& dcols, int kernel, int stride, Matrix& dx) {
  const int n = static_cast<int>(dx.rows());
  const auto cin = dx.cols();
  const int pad = (kernel - 1) / 2;
  for (Eigen::Index t = 0; t < dcols.rows(); ++t) {
    for (int j = 0; j < kernel; ++j) {
      const int src = static_cast<int>(t) * stride + j - pad;
      if (src < 0 || src >= n) continue;
      dx.row(src) += dcols.block(t, j * cin, 1, cin);
    }
  }
}

Matrix conv_forward(const ConvLayer& l, const std::vector<double>& v, const Matrix& x) {
  const Matrix W = param_block(v, l.w_off, static_cast<Eigen::Index>(l.kernel) * l.c_in, l.c_out);
  const Eigen::RowVectorXd b = param_block(v, l.b_off, 1, l.c_out);
  Matrix z;
  if (l.kernel == 1 && l.stride == 1) {
    z.noalias() = x * W;
  } else {
    z.noalias() = im2col(x, l.kernel, l.stride) * W;
  }
  z.rowwise() += b;
  return z;
}

// Accumulates weight/bias gradients into `grad` and, when dx is non-null,
// adds the input gradient into *dx (which must be sized like x).
void conv_backward(const ConvLayer& l, const std::vector<double>& v, const Matrix& x,
                   const Matrix& dz, std::vector<double>& grad, Matrix* dx) {
  const auto rows = static_cast<Eigen::Index>(l.kernel) * l.c_in;
  const Matrix W = param_block(v, l.w_off, rows, l.c_out);
  MutMap gW(grad.data() + l.w_off, rows, l.c_out);
  Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + l.b_off, l.c_out);
  const Eigen::RowVectorXd db = dz.colwise().sum();
  gb += db;
  Matrix dW;
  if (l.kernel == 1 && l.stride == 1) {
    dW.noalias() = x.transpose() * dz;
    gW += dW;
    if (dx != nullptr) dx->noalias() += dz * W.transpose();
    return;
  }
  const Matrix cols = im2col(x, l.kernel, l.stride);
  dW.noalias() = cols.transpose() * dz;
  gW += dW;
  if (dx != nullptr) {
    const Matrix dcols = dz * W.transpose();
    col2im_add(dcols, l.kernel, l.stride, *dx);
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix silu(const Matrix& z) {
  return z.unaryExpr([](double v) { return v * sigmoid(v); });
}

// dz = dy * silu'(z)
Matrix silu_backward(const Matrix& z, const Matrix& dy) {
  return dy.binaryExpr(z, [](double g, double v) {
    const double s = sigmoid(v);
    return g * s * (1.0 + v * (1.0 - s));
  });
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

Matrix upsample2(const Matrix& m) {
  Matrix out(m.rows() * 2, m.cols());
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    out.row(2 * t) = m.row(t);
    out.row(2 * t + 1) = m.row(t);
  }
  return out;
}

Matrix upsample2_adjoint(const Matrix& d) {
  Matrix out(d.rows() / 2, d.cols());
  for (Eigen::Index t = 0; t < out.rows(); ++t) out.row(t) = d.row(2 * t) + d.row(2 * t + 1);
  return out;
}

ConvLayer add_layer(std::size_t& offset, int c_in, int c_out, int kernel, int stride) {
  ConvLayer l;
  l.c_in = c_in;
  l.c_out = c_out;
  l.kernel = kernel;
  l.stride = stride;
  l.w_off = offset;
  offset += l.num_weights();
  l.b_off = offset;
  offset += static_cast<std::size_t>(c_out);
  return l;
}

void check_arch(const ArchSpec& a) {
  if (a.freq_bins < 1) throw ConfigError("arch: freq_bins must be >= 1");
  if (a.n_ch < 1) throw ConfigError("arch: n_ch must be >= 1");
  if (a.depth < 0) throw ConfigError("arch: depth must be >= 0");
  if (a.kernel < 1 || a.kernel % 2 == 0) throw ConfigError("arch: kernel must be odd");
  if (a.head == HeadKind::kDetection && a.heat_channels < 1) {
    throw ConfigError("arch: heat_channels must be >= 1");
  }
  if (a.head == HeadKind::kClassification && a.num_classes < 2) {
    throw ConfigError("arch: classifier needs >= 2 classes");
  }
}

// Shared encoder: projection and stride-2 residual blocks.
void trunk_forward(const DetectorParams& p, const Matrix& input, ForwardCache& c) {
  const Layout& L = p.layout;
  const auto& v = p.values;
  c.x = input;
  c.z0 = conv_forward(L.proj, v, input);
  c.e.assign(1, silu(c.z0));
  c.za.clear();
  c.a.clear();
  c.zr.clear();
  for (int i = 0; i < p.arch.depth; ++i) {
    c.za.push_back(conv_forward(L.down[static_cast<std::size_t>(i)], v, c.e.back()));
    c.a.push_back(silu(c.za.back()));
    c.zr.push_back(conv_forward(L.res[static_cast<std::size_t>(i)], v, c.a.back()));
    c.e.push_back(c.a.back() + silu(c.zr.back()));
  }
}

// de[i] holds upstream gradients for every encoder level; consumed in place.
void trunk_backward(const DetectorParams& p, const ForwardCache& c, std::vector<Matrix>& de,
                    std::vector<double>& grad) {
  const Layout& L = p.layout;
  const auto& v = p.values;
  for (int i = p.arch.depth - 1; i >= 0; --i) {
    const auto k = static_cast<std::size_t>(i);
    const Matrix& up = de[k + 1];
    Matrix da = up;
    conv_backward(L.res[k], v, c.a[k], silu_backward(c.zr[k], up), grad, &da);
    conv_backward(L.down[k], v, c.e[k], silu_backward(c.za[k], da), grad, &de[k]);
  }
  conv_backward(L.proj, v, c.x, silu_backward(c.z0, de[0]), grad, nullptr);
}

}  // namespace

ArchSpec detection_arch(const PipelineConfig& cfg) {
  ArchSpec a;
  a.freq_bins = cfg.freq_bins();
  a.n_ch = cfg.n_ch;
  a.depth = cfg.depth;
  a.kernel = cfg.kernel_size;
  a.heat_channels = cfg.heat_channels();
  a.num_classes = 0;
  a.head = HeadKind::kDetection;
  return a;
}

ArchSpec classification_arch(const PipelineConfig& cfg) {
  ArchSpec a = detection_arch(cfg);
  a.heat_channels = 0;
  a.num_classes = cfg.num_keywords + 2;
  a.head = HeadKind::kClassification;
  return a;
}

Layout make_layout(const ArchSpec& a) {
  check_arch(a);
  Layout L;
  std::size_t off = 0;
  L.proj = add_layer(off, a.freq_bins, a.n_ch, 1, 1);
  for (int i = 0; i < a.depth; ++i) {
    L.down.push_back(add_layer(off, a.n_ch, a.n_ch, a.kernel, 2));
    L.res.push_back(add_layer(off, a.n_ch, a.n_ch, a.kernel, 1));
  }
  if (a.head == HeadKind::kDetection) {
    for (int i = 0; i < a.depth; ++i) L.up.push_back(add_layer(off, a.n_ch, a.n_ch, a.kernel, 1));
    for (int h = 0; h < 3; ++h) {
      L.head_hidden.push_back(add_layer(off, a.n_ch, a.n_ch, a.kernel, 1));
    }
    L.head_out.push_back(add_layer(off, a.n_ch, a.heat_channels, 1, 1));
    L.head_out.push_back(add_layer(off, a.n_ch, 1, 1, 1));
    L.head_out.push_back(add_layer(off, a.n_ch, 1, 1, 1));
  } else {
    L.classifier = add_layer(off, a.n_ch, a.num_classes, 1, 1);
  }
  L.size = off;
  return L;
}

DetectorParams init_params(const ArchSpec& arch, std::uint64_t seed) {
  DetectorParams p;
  p.arch = arch;
  p.layout = make_layout(arch);
  p.values.assign(p.layout.size, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto he = [&](const ConvLayer& l, double gain) {
    const double sd = gain * std::sqrt(2.0 / (static_cast<double>(l.kernel) * l.c_in));
    for (std::size_t i = 0; i < l.num_weights(); ++i) p.values[l.w_off + i] = sd * gauss(rng);
  };
  const Layout& L = p.layout;
  he(L.proj, 1.0);
  for (std::size_t i = 0; i < L.down.size(); ++i) {
    he(L.down[i], 1.0);
    he(L.res[i], 1.0);
  }
  for (const auto& l : L.up) he(l, 1.0);
  for (const auto& l : L.head_hidden) he(l, 1.0);
  for (const auto& l : L.head_out) he(l, 0.1);
  if (arch.head == HeadKind::kDetection) {
    const ConvLayer& heat = L.head_out[kHeatHead];
    for (int c = 0; c < heat.c_out; ++c) {
      p.values[heat.b_off + static_cast<std::size_t>(c)] = std::log(0.01 / 0.99);
    }
    p.values[L.head_out[kLengthHead].b_off] = std::log(std::expm1(kInitialLengthFrames));
  } else {
    he(L.classifier, 0.1);
  }
  return p;
}

std::string describe(const DetectorParams& params) {
  const ArchSpec& a = params.arch;
  const Layout& L = params.layout;
  std::ostringstream out;
  auto line = [&](const std::string& name, const ConvLayer& l) {
    out << "  " << name << ": conv k=" << l.kernel << " s=" << l.stride << " " << l.c_in << "->"
        << l.c_out << " (" << l.num_weights() + static_cast<std::size_t>(l.c_out) << ")\n";
  };
  out << (a.head == HeadKind::kDetection ? "detector" : "classifier") << " freq_bins=" << a.freq_bins
      << " n_ch=" << a.n_ch << " depth=" << a.depth << " kernel=" << a.kernel << '\n';
  line("proj", L.proj);
  for (std::size_t i = 0; i < L.down.size(); ++i) {
    line("down" + std::to_string(i), L.down[i]);
    line("res" + std::to_string(i), L.res[i]);
  }
  for (std::size_t i = 0; i < L.up.size(); ++i) line("up" + std::to_string(i), L.up[i]);
  const char* heads[] = {"heat", "length", "offset"};
  for (std::size_t h = 0; h < L.head_hidden.size(); ++h) {
    line(std::string(heads[h]) + ".hidden", L.head_hidden[h]);
    line(std::string(heads[h]) + ".out", L.head_out[h]);
  }
  if (a.head == HeadKind::kClassification) line("classifier", L.classifier);
  out << "parameters: " << params.size() << '\n';
  return out.str();
}

PredictionTensors forward(const DetectorParams& params, const Matrix& input,
                          ForwardCache* cache) {
  const ArchSpec& a = params.arch;
  if (a.head != HeadKind::kDetection) throw ShapeError("forward: model has no detection heads");
  if (input.cols() != a.freq_bins) {
    throw ShapeError("forward: expected " + std::to_string(a.freq_bins) + " frequency bins, got " +
                     std::to_string(input.cols()));
  }
  const int T = static_cast<int>(input.rows());
  const int stride = 1 << a.depth;
  if (T < stride || T % stride != 0) {
    throw ShapeError("forward: T=" + std::to_string(T) + " must be a positive multiple of 2^depth=" +
                     std::to_string(stride));
  }
  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  const Layout& L = params.layout;
  const auto& v = params.values;

  trunk_forward(params, input, c);
  const auto D = static_cast<std::size_t>(a.depth);
  c.zu.assign(D, Matrix());
  c.u.assign(D + 1, Matrix());
  c.u[D] = c.e[D];
  for (std::size_t i = D; i-- > 0;) {
    c.zu[i] = conv_forward(L.up[i], v, upsample2(c.u[i + 1]));
    c.u[i] = silu(c.zu[i]) + c.e[i];
  }
  const Matrix& feat = c.u[0];
  c.zh.assign(3, Matrix());
  c.g.assign(3, Matrix());
  c.out.assign(3, Matrix());
  for (std::size_t h = 0; h < 3; ++h) {
    c.zh[h] = conv_forward(L.head_hidden[h], v, feat);
    c.g[h] = silu(c.zh[h]);
    c.out[h] = conv_forward(L.head_out[h], v, c.g[h]);
  }
  PredictionTensors p;
  p.Y_hat = c.out[kHeatHead].unaryExpr([](double z) { return sigmoid(z); });
  p.L_hat = c.out[kLengthHead].col(0).unaryExpr([](double z) { return softplus(z); });
  p.O_hat = c.out[kOffsetHead].col(0).unaryExpr([](double z) { return sigmoid(z); });
  c.preds = p;
  return p;
}

std::vector<double> backward(const DetectorParams& params, const ForwardCache& c,
                             const Matrix& dY_hat, const Vector& dL_hat, const Vector& dO_hat) {
  const ArchSpec& a = params.arch;
  const Layout& L = params.layout;
  const auto& v = params.values;
  if (c.out.size() != 3 || c.u.size() != static_cast<std::size_t>(a.depth) + 1 ||
      c.x.cols() != a.freq_bins) {
    throw ShapeError("backward: cache does not match these parameters");
  }
  const auto T = c.x.rows();
  if (dY_hat.rows() != T || dY_hat.cols() != a.heat_channels || dL_hat.size() != T ||
      dO_hat.size() != T) {
    throw ShapeError("backward: upstream gradient shape mismatch");
  }
  std::vector<double> grad(params.size(), 0.0);

  std::vector<Matrix> dout(3);
  dout[kHeatHead] = dY_hat.binaryExpr(c.preds.Y_hat, [](double g, double y) { return g * y * (1 - y); });
  dout[kLengthHead] = Matrix(T, 1);
  dout[kOffsetHead] = Matrix(T, 1);
  for (Eigen::Index t = 0; t < T; ++t) {
    dout[kLengthHead](t, 0) = dL_hat[t] * sigmoid(c.out[kLengthHead](t, 0));
    const double o = c.preds.O_hat[t];
    dout[kOffsetHead](t, 0) = dO_hat[t] * o * (1 - o);
  }

  const Matrix& feat = c.u[0];
  Matrix dfeat = Matrix::Zero(feat.rows(), feat.cols());
  for (std::size_t h = 0; h < 3; ++h) {
    Matrix dg = Matrix::Zero(c.g[h].rows(), c.g[h].cols());
    conv_backward(L.head_out[h], v, c.g[h], dout[h], grad, &dg);
    conv_backward(L.head_hidden[h], v, feat, silu_backward(c.zh[h], dg), grad, &dfeat);
  }

  const auto D = static_cast<std::size_t>(a.depth);
  std::vector<Matrix> de(D + 1);
  for (std::size_t i = 0; i <= D; ++i) de[i] = Matrix::Zero(c.e[i].rows(), c.e[i].cols());
  Matrix du = std::move(dfeat);
  for (std::size_t i = 0; i < D; ++i) {
    de[i] += du;
    const Matrix up_in = upsample2(c.u[i + 1]);
    Matrix dup = Matrix::Zero(up_in.rows(), up_in.cols());
    conv_backward(L.up[i], v, up_in, silu_backward(c.zu[i], du), grad, &dup);
    du = upsample2_adjoint(dup);
  }
  de[D] += du;
  trunk_backward(params, c, de, grad);
  return grad;
}

Eigen::RowVectorXd classification_head_forward(const DetectorParams& params, const Matrix& window,
                                               ForwardCache* cache) {
  const ArchSpec& a = params.arch;
  if (a.head != HeadKind::kClassification) throw ShapeError("model has no classification head");
  if (window.rows() < 1 || window.cols() != a.freq_bins) {
    throw ShapeError("classification_head_forward: window shape mismatch");
  }
  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  trunk_forward(params, window, c);
  c.pooled = c.e.back().colwise().mean();
  const ConvLayer& l = params.layout.classifier;
  const Matrix W = param_block(params.values, l.w_off, l.c_in, l.c_out);
  const Eigen::RowVectorXd b = param_block(params.values, l.b_off, 1, l.c_out);
  Eigen::RowVectorXd logits = c.pooled * W + b;
  logits.array() -= logits.maxCoeff();
  Eigen::RowVectorXd probs = logits.array().exp();
  probs /= probs.sum();
  c.probs = probs;
  return probs;
}

std::vector<double> classification_backward(const DetectorParams& params,
                                            const ForwardCache& c,
                                            const Eigen::RowVectorXd& dlogits) {
  const ArchSpec& a = params.arch;
  if (a.head != HeadKind::kClassification || c.e.size() != static_cast<std::size_t>(a.depth) + 1 ||
      dlogits.size() != a.num_classes) {
    throw ShapeError("classification_backward: cache or gradient mismatch");
  }
  std::vector<double> grad(params.size(), 0.0);
  const ConvLayer& l = params.layout.classifier;
  const Matrix W = param_block(params.values, l.w_off, l.c_in, l.c_out);
  MutMap gW(grad.data() + l.w_off, l.c_in, l.c_out);
  Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + l.b_off, l.c_out);
  const Matrix dW = c.pooled.transpose() * dlogits;
  gW += dW;
  gb += dlogits;
  const Eigen::RowVectorXd dpooled = dlogits * W.transpose();

  const auto D = static_cast<std::size_t>(a.depth);
  std::vector<Matrix> de(D + 1);
  for (std::size_t i = 0; i <= D; ++i) de[i] = Matrix::Zero(c.e[i].rows(), c.e[i].cols());
  const double inv = 1.0 / static_cast<double>(c.e[D].rows());
  de[D].rowwise() += dpooled * inv;
  trunk_backward(params, c, de, grad);
  return grad;
}

std::pair<int, int> receptive_field(const ArchSpec& a, int T, int t) {
  const int pad = (a.kernel - 1) / 2;
  const int D = a.depth;
  std::vector<int> len(static_cast<std::size_t>(D) + 1);
  len[0] = T;
  for (int i = 0; i < D; ++i) {
    len[static_cast<std::size_t>(i) + 1] = conv_out_len(len[static_cast<std::size_t>(i)], a.kernel, 2);
  }
  auto clip = [&](std::pair<int, int> r, int level) {
    return std::make_pair(std::max(0, r.first), std::min(len[static_cast<std::size_t>(level)] - 1, r.second));
  };
  auto hull = [](std::pair<int, int> x, std::pair<int, int> y) {
    return std::make_pair(std::min(x.first, y.first), std::max(x.second, y.second));
  };
  // Input range feeding encoder output e[level] over [lo, hi].
  auto enc = [&](auto&& self, int level, std::pair<int, int> r) -> std::pair<int, int> {
    if (level == 0) return r;  // 1x1 projection
    r = clip({r.first - pad, r.second + pad}, level);  // residual conv (hull with identity)
    r = clip({2 * r.first - pad, 2 * r.second - pad + a.kernel - 1}, level - 1);
    return self(self, level - 1, r);
  };
  // Input range feeding u[level].
  auto dec = [&](auto&& self, int level, std::pair<int, int> r) -> std::pair<int, int> {
    if (level == D) return enc(enc, D, r);
    const auto via_skip = enc(enc, level, r);
    auto conv_in = clip({r.first - pad, r.second + pad}, level);
    const auto coarse = clip({conv_in.first / 2, conv_in.second / 2}, level + 1);
    return hull(via_skip, self(self, level + 1, coarse));
  };
  const auto head_in = clip({t - pad, t + pad}, 0);
  return dec(dec, 0, head_in);
}

}  // namespace kws
