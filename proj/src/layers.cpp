#include "intentsieve/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "intentsieve/error.hpp"

namespace isv::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;
using StrideMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using MutStrideMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace

void glorot_uniform(Tensor& t, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, int in_dim, int out_dim, Rng& rng)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      w_(name + ".w", {in_dim, out_dim}),
      b_(name + ".b", {out_dim}) {
  if (in_dim <= 0 || out_dim <= 0) throw InvalidConfig("dense dims must be positive");
  glorot_uniform(w_.tensor, in_dim, out_dim, rng);
}

Tensor Dense::forward(const Tensor& x, Mode) {
  require(x.rank() == 2 && x.dim(1) == in_dim_,
          "dense expects (N, " + std::to_string(in_dim_) + "), got " + x.shape_str());
  x_ = x;
  const int n = x.dim(0);
  Tensor y({n, out_dim_});
  CMapM xm(x.data(), n, in_dim_);
  CMapM wm(w_.tensor.data(), in_dim_, out_dim_);
  MapM ym(y.data(), n, out_dim_);
  ym.noalias() = xm * wm;
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.tensor.data(), out_dim_);
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  const int n = x_.dim(0);
  require(dy.rank() == 2 && dy.dim(0) == n && dy.dim(1) == out_dim_,
          "dense backward shape mismatch: " + dy.shape_str());
  CMapM xm(x_.data(), n, in_dim_);
  CMapM dym(dy.data(), n, out_dim_);
  MapM dwm(w_.tensor.grad_data(), in_dim_, out_dim_);
  dwm.noalias() += xm.transpose() * dym;
  Eigen::Map<Eigen::RowVectorXd>(b_.tensor.grad_data(), out_dim_) += dym.colwise().sum();

  Tensor dx({n, in_dim_});
  MapM dxm(dx.data(), n, in_dim_);
  CMapM wm(w_.tensor.data(), in_dim_, out_dim_);
  dxm.noalias() = dym * wm.transpose();
  return dx;
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& x, Mode) {
  x_ = x;
  Tensor y(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor ReLU::backward(const Tensor& dy) {
  require(dy.same_shape(x_), "relu backward shape mismatch");
  Tensor dx(dy.shape());
  for (std::int64_t i = 0; i < dy.numel(); ++i) dx[i] = x_[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (rate < 0.0 || rate >= 1.0) throw InvalidConfig("dropout rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  if (mode == Mode::Infer || rate_ == 0.0) {
    active_ = false;
    return x;
  }
  active_ = true;
  const double keep_scale = 1.0 / (1.0 - rate_);
  mask_.resize(static_cast<std::size_t>(x.numel()));
  Tensor y(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double m = rng_.uniform() < rate_ ? 0.0 : keep_scale;
    mask_[static_cast<std::size_t>(i)] = m;
    y[i] = x[i] * m;
  }
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  if (!active_) return dy;
  require(dy.numel() == static_cast<std::int64_t>(mask_.size()), "dropout backward shape mismatch");
  Tensor dx(dy.shape());
  for (std::int64_t i = 0; i < dy.numel(); ++i)
    dx[i] = dy[i] * mask_[static_cast<std::size_t>(i)];
  return dx;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int kh, int kw, int c_in, int c_out, Padding padding, Rng& rng)
    : kh_(kh),
      kw_(kw),
      c_in_(c_in),
      c_out_(c_out),
      padding_(padding),
      w_(name + ".w", {kh, kw, c_in, c_out}),
      b_(name + ".b", {c_out}) {
  if (kh <= 0 || kw <= 0 || c_in <= 0 || c_out <= 0)
    throw InvalidConfig("conv dims must be positive");
  glorot_uniform(w_.tensor, kh * kw * c_in, kh * kw * c_out, rng);
}

void Conv2d::out_dims(int h, int w, int* oh, int* ow, int* pad_top, int* pad_left) const {
  if (padding_ == Padding::Same) {
    *oh = h;
    *ow = w;
    *pad_top = (kh_ - 1) / 2;
    *pad_left = (kw_ - 1) / 2;
  } else {
    *oh = h - kh_ + 1;
    *ow = w - kw_ + 1;
    *pad_top = 0;
    *pad_left = 0;
    require(*oh >= 1 && *ow >= 1, "valid-padding kernel larger than input");
  }
}

namespace {

/// Gather the receptive fields of every output position of one sample into
/// a (oh*ow, kh*kw*c_in) matrix (zero rows for out-of-image taps).
void im2col(const double* x, int h, int w, int c, int kh, int kw, int oh, int ow, int pad_top,
            int pad_left, double* col) {
  const std::int64_t k = static_cast<std::int64_t>(kh) * kw * c;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* row = col + (static_cast<std::int64_t>(oy) * ow + ox) * k;
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy - pad_top + ky;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox - pad_left + kx;
          double* dst = row + (static_cast<std::int64_t>(ky) * kw + kx) * c;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            std::fill(dst, dst + c, 0.0);
          } else {
            const double* src = x + (static_cast<std::int64_t>(iy) * w + ix) * c;
            std::copy(src, src + c, dst);
          }
        }
      }
    }
  }
}

/// Scatter-add the columnized gradient back onto the input image.
void col2im_add(const double* col, int h, int w, int c, int kh, int kw, int oh, int ow,
                int pad_top, int pad_left, double* dx) {
  const std::int64_t k = static_cast<std::int64_t>(kh) * kw * c;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double* row = col + (static_cast<std::int64_t>(oy) * ow + ox) * k;
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy - pad_top + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox - pad_left + kx;
          if (ix < 0 || ix >= w) continue;
          const double* src = row + (static_cast<std::int64_t>(ky) * kw + kx) * c;
          double* dst = dx + (static_cast<std::int64_t>(iy) * w + ix) * c;
          for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, Mode) {
  require(x.rank() == 4, "conv expects (N, H, W, C), got " + x.shape_str());
  require(x.dim(3) == c_in_, "conv channel mismatch: input has " + std::to_string(x.dim(3)) +
                                 ", layer expects " + std::to_string(c_in_));
  x_ = x;
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2);
  int oh, ow, pt, pl;
  out_dims(h, w, &oh, &ow, &pt, &pl);

  const std::int64_t rows = static_cast<std::int64_t>(oh) * ow;
  const std::int64_t k = static_cast<std::int64_t>(kh_) * kw_ * c_in_;
  std::vector<double> col(static_cast<std::size_t>(rows * k));
  CMapM wm(w_.tensor.data(), k, c_out_);

  Tensor y({n, oh, ow, c_out_});
  for (int s = 0; s < n; ++s) {
    im2col(x.data() + static_cast<std::int64_t>(s) * h * w * c_in_, h, w, c_in_, kh_, kw_, oh, ow,
           pt, pl, col.data());
    CMapM cm(col.data(), rows, k);
    MapM ym(y.data() + static_cast<std::int64_t>(s) * rows * c_out_, rows, c_out_);
    ym.noalias() = cm * wm;
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.tensor.data(), c_out_);
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  const int n = x_.dim(0), h = x_.dim(1), w = x_.dim(2);
  int oh, ow, pt, pl;
  out_dims(h, w, &oh, &ow, &pt, &pl);
  require(dy.rank() == 4 && dy.dim(0) == n && dy.dim(1) == oh && dy.dim(2) == ow &&
              dy.dim(3) == c_out_,
          "conv backward shape mismatch: " + dy.shape_str());

  const std::int64_t rows = static_cast<std::int64_t>(oh) * ow;
  const std::int64_t k = static_cast<std::int64_t>(kh_) * kw_ * c_in_;
  std::vector<double> col(static_cast<std::size_t>(rows * k));
  std::vector<double> dcol(static_cast<std::size_t>(rows * k));
  CMapM wm(w_.tensor.data(), k, c_out_);
  MapM dwm(w_.tensor.grad_data(), k, c_out_);
  Eigen::Map<Eigen::RowVectorXd> dbm(b_.tensor.grad_data(), c_out_);

  Tensor dx(x_.shape());
  for (int s = 0; s < n; ++s) {
    im2col(x_.data() + static_cast<std::int64_t>(s) * h * w * c_in_, h, w, c_in_, kh_, kw_, oh, ow,
           pt, pl, col.data());
    CMapM cm(col.data(), rows, k);
    CMapM dym(dy.data() + static_cast<std::int64_t>(s) * rows * c_out_, rows, c_out_);
    dwm.noalias() += cm.transpose() * dym;
    dbm += dym.colwise().sum();
    MapM dcm(dcol.data(), rows, k);
    dcm.noalias() = dym * wm.transpose();
    col2im_add(dcol.data(), h, w, c_in_, kh_, kw_, oh, ow, pt, pl,
               dx.data() + static_cast<std::int64_t>(s) * h * w * c_in_);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2d

MaxPool2d::MaxPool2d(int ph, int pw) : ph_(ph), pw_(pw) {
  if (ph < 1 || pw < 1) throw InvalidConfig("pool dims must be >= 1");
}

Tensor MaxPool2d::forward(const Tensor& x, Mode) {
  require(x.rank() == 4, "maxpool expects (N, H, W, C), got " + x.shape_str());
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int oh = h / ph_, ow = w / pw_;
  require(oh >= 1 && ow >= 1, "pool window larger than input: " + x.shape_str());

  in_shape_ = x.shape();
  Tensor y({n, oh, ow, c});
  argmax_.assign(static_cast<std::size_t>(y.numel()), 0);

  std::int64_t out_i = 0;
  for (int s = 0; s < n; ++s) {
    const std::int64_t base = static_cast<std::int64_t>(s) * h * w * c;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int ch = 0; ch < c; ++ch, ++out_i) {
          double best = -std::numeric_limits<double>::infinity();
          std::int64_t best_idx = 0;
          for (int ky = 0; ky < ph_; ++ky) {
            const int iy = oy * ph_ + ky;
            for (int kx = 0; kx < pw_; ++kx) {
              const int ix = ox * pw_ + kx;
              const std::int64_t idx = base + (static_cast<std::int64_t>(iy) * w + ix) * c + ch;
              if (x[idx] > best) {  // ties keep the first window element
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          y[out_i] = best;
          argmax_[static_cast<std::size_t>(out_i)] = best_idx;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
  require(dy.numel() == static_cast<std::int64_t>(argmax_.size()),
          "maxpool backward shape mismatch");
  Tensor dx(in_shape_);
  for (std::int64_t i = 0; i < dy.numel(); ++i)
    dx[argmax_[static_cast<std::size_t>(i)]] += dy[i];
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, int channels)
    : channels_(channels),
      gamma_(name + ".gamma", {channels}),
      beta_(name + ".beta", {channels}),
      running_mean_(name + ".running_mean", {channels}),
      running_var_(name + ".running_var", {channels}) {
  if (channels <= 0) throw InvalidConfig("batchnorm channels must be positive");
  gamma_.tensor.fill(1.0);
  running_var_.tensor.fill(1.0);
  running_mean_.trainable = false;
  running_var_.trainable = false;
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode) {
  require(x.rank() == 4 && x.dim(3) == channels_,
          "batchnorm expects (N, H, W, " + std::to_string(channels_) + "), got " + x.shape_str());
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = channels_;
  const std::int64_t m = static_cast<std::int64_t>(n) * h * w;

  mean_.assign(static_cast<std::size_t>(c), 0.0);
  inv_std_.assign(static_cast<std::size_t>(c), 0.0);

  if (mode == Mode::Train) {
    if (n < 2) throw InvalidInput("batchnorm train mode needs batch size > 1");
    std::vector<double> var(static_cast<std::size_t>(c), 0.0);
    for (std::int64_t i = 0; i < x.numel(); ++i)
      mean_[static_cast<std::size_t>(i % c)] += x[i];
    for (int ch = 0; ch < c; ++ch) mean_[static_cast<std::size_t>(ch)] /= static_cast<double>(m);
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      const double d = x[i] - mean_[static_cast<std::size_t>(i % c)];
      var[static_cast<std::size_t>(i % c)] += d * d;
    }
    for (int ch = 0; ch < c; ++ch) {
      var[static_cast<std::size_t>(ch)] /= static_cast<double>(m);
      inv_std_[static_cast<std::size_t>(ch)] = 1.0 / std::sqrt(var[static_cast<std::size_t>(ch)] + eps_);
      running_mean_.tensor[ch] =
          momentum_ * running_mean_.tensor[ch] + (1.0 - momentum_) * mean_[static_cast<std::size_t>(ch)];
      running_var_.tensor[ch] =
          momentum_ * running_var_.tensor[ch] + (1.0 - momentum_) * var[static_cast<std::size_t>(ch)];
    }
    ever_updated_ = true;
    train_path_ = true;
  } else {
    if (!ever_updated_ && !warned_uninit_) {
      warn("batchnorm inference before any training step: using init statistics (mean 0, var 1)");
      warned_uninit_ = true;
    }
    for (int ch = 0; ch < c; ++ch) {
      mean_[static_cast<std::size_t>(ch)] = running_mean_.tensor[ch];
      inv_std_[static_cast<std::size_t>(ch)] = 1.0 / std::sqrt(running_var_.tensor[ch] + eps_);
    }
    train_path_ = false;
  }

  x_ = x;
  xhat_.resize(static_cast<std::size_t>(x.numel()));
  Tensor y(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const auto ch = static_cast<std::size_t>(i % c);
    const double xh = (x[i] - mean_[ch]) * inv_std_[ch];
    xhat_[static_cast<std::size_t>(i)] = xh;
    y[i] = gamma_.tensor[static_cast<std::int64_t>(ch)] * xh + beta_.tensor[static_cast<std::int64_t>(ch)];
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  require(dy.same_shape(x_), "batchnorm backward shape mismatch");
  const int c = channels_;
  const std::int64_t m = x_.numel() / c;

  std::vector<double> sum_dxhat(static_cast<std::size_t>(c), 0.0);
  std::vector<double> sum_dxhat_xhat(static_cast<std::size_t>(c), 0.0);
  for (std::int64_t i = 0; i < dy.numel(); ++i) {
    const auto ch = static_cast<std::size_t>(i % c);
    const double dxh = dy[i] * gamma_.tensor[static_cast<std::int64_t>(ch)];
    sum_dxhat[ch] += dxh;
    sum_dxhat_xhat[ch] += dxh * xhat_[static_cast<std::size_t>(i)];
    gamma_.tensor.grad()[static_cast<std::size_t>(ch)] += dy[i] * xhat_[static_cast<std::size_t>(i)];
    beta_.tensor.grad()[static_cast<std::size_t>(ch)] += dy[i];
  }

  Tensor dx(x_.shape());
  if (train_path_) {
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::int64_t i = 0; i < dy.numel(); ++i) {
      const auto ch = static_cast<std::size_t>(i % c);
      const double dxh = dy[i] * gamma_.tensor[static_cast<std::int64_t>(ch)];
      dx[i] = inv_std_[ch] *
              (dxh - inv_m * sum_dxhat[ch] - xhat_[static_cast<std::size_t>(i)] * inv_m * sum_dxhat_xhat[ch]);
    }
  } else {
    for (std::int64_t i = 0; i < dy.numel(); ++i) {
      const auto ch = static_cast<std::size_t>(i % c);
      dx[i] = dy[i] * gamma_.tensor[static_cast<std::int64_t>(ch)] * inv_std_[ch];
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BiLstm

BiLstm::BiLstm(std::string name, int in_dim, int hidden, Rng& rng)
    : in_dim_(in_dim),
      hidden_(hidden),
      fw_w_(name + ".fw.w", {in_dim, 4 * hidden}),
      fw_u_(name + ".fw.u", {hidden, 4 * hidden}),
      fw_b_(name + ".fw.b", {4 * hidden}),
      bw_w_(name + ".bw.w", {in_dim, 4 * hidden}),
      bw_u_(name + ".bw.u", {hidden, 4 * hidden}),
      bw_b_(name + ".bw.b", {4 * hidden}) {
  if (in_dim <= 0 || hidden <= 0) throw InvalidConfig("lstm dims must be positive");
  glorot_uniform(fw_w_.tensor, in_dim, hidden, rng);
  glorot_uniform(fw_u_.tensor, hidden, hidden, rng);
  glorot_uniform(bw_w_.tensor, in_dim, hidden, rng);
  glorot_uniform(bw_u_.tensor, hidden, hidden, rng);
  // Forget-gate bias starts at 1 so early training does not wipe the cell state.
  for (int j = 0; j < hidden; ++j) {
    fw_b_.tensor[hidden + j] = 1.0;
    bw_b_.tensor[hidden + j] = 1.0;
  }
}

void BiLstm::run_direction(const Tensor& x, bool reverse, const Parameter& w, const Parameter& u,
                           const Parameter& b, DirCache* cache) const {
  const int n = x.dim(0), t_len = x.dim(1), d = x.dim(2), hid = hidden_;
  const std::size_t nh = static_cast<std::size_t>(n) * hid;

  auto alloc = [&](std::vector<std::vector<double>>& v) {
    v.assign(static_cast<std::size_t>(t_len), std::vector<double>(nh, 0.0));
  };
  alloc(cache->i);
  alloc(cache->f);
  alloc(cache->g);
  alloc(cache->o);
  alloc(cache->c);
  alloc(cache->tanh_c);
  alloc(cache->h);

  CMapM wm(w.tensor.data(), d, 4 * hid);
  CMapM um(u.tensor.data(), hid, 4 * hid);
  Eigen::Map<const Eigen::RowVectorXd> bm(b.tensor.data(), 4 * hid);

  RowMat z(n, 4 * hid);
  std::vector<double> h_prev(nh, 0.0), c_prev(nh, 0.0);

  for (int s = 0; s < t_len; ++s) {
    const int t = reverse ? t_len - 1 - s : s;
    StrideMap xt(x.data() + static_cast<std::int64_t>(t) * d, n, d,
                 Eigen::OuterStride<>(static_cast<Eigen::Index>(t_len) * d));
    CMapM hp(h_prev.data(), n, hid);
    z.noalias() = xt * wm;
    z.noalias() += hp * um;
    z.rowwise() += bm;

    auto& ci = (*cache).i[static_cast<std::size_t>(s)];
    auto& cf = (*cache).f[static_cast<std::size_t>(s)];
    auto& cg = (*cache).g[static_cast<std::size_t>(s)];
    auto& co = (*cache).o[static_cast<std::size_t>(s)];
    auto& cc = (*cache).c[static_cast<std::size_t>(s)];
    auto& ctc = (*cache).tanh_c[static_cast<std::size_t>(s)];
    auto& ch = (*cache).h[static_cast<std::size_t>(s)];

    for (int row = 0; row < n; ++row) {
      for (int j = 0; j < hid; ++j) {
        const std::size_t k = static_cast<std::size_t>(row) * hid + static_cast<std::size_t>(j);
        const double zi = z(row, j);
        const double zf = z(row, hid + j);
        const double zg = z(row, 2 * hid + j);
        const double zo = z(row, 3 * hid + j);
        const double gi = sigmoid(zi);
        const double gf = sigmoid(zf);
        const double gg = std::tanh(zg);
        const double go = sigmoid(zo);
        const double cv = gf * c_prev[k] + gi * gg;
        const double tc = std::tanh(cv);
        ci[k] = gi;
        cf[k] = gf;
        cg[k] = gg;
        co[k] = go;
        cc[k] = cv;
        ctc[k] = tc;
        ch[k] = go * tc;
      }
    }
    h_prev = ch;
    c_prev = cc;
  }
}

Tensor BiLstm::forward(const Tensor& x, Mode) {
  require(x.rank() == 3, "bilstm expects (N, T, D), got " + x.shape_str());
  require(x.dim(2) == in_dim_, "bilstm input width mismatch: got " + std::to_string(x.dim(2)) +
                                   ", expected " + std::to_string(in_dim_));
  require(x.dim(1) >= 1, "bilstm needs at least one timestep");
  x_ = x;
  const int n = x.dim(0), t_len = x.dim(1), hid = hidden_;

  run_direction(x, false, fw_w_, fw_u_, fw_b_, &fw_cache_);
  run_direction(x, true, bw_w_, bw_u_, bw_b_, &bw_cache_);

  Tensor y({n, t_len, 2 * hid});
  for (int s = 0; s < t_len; ++s) {
    const auto& hf = fw_cache_.h[static_cast<std::size_t>(s)];
    const auto& hb = bw_cache_.h[static_cast<std::size_t>(s)];
    const int tf = s;               // forward cache step s is timestep s
    const int tb = t_len - 1 - s;   // backward cache step s is timestep T-1-s
    for (int row = 0; row < n; ++row) {
      double* out_f = y.data() + (static_cast<std::int64_t>(row) * t_len + tf) * 2 * hid;
      double* out_b = y.data() + (static_cast<std::int64_t>(row) * t_len + tb) * 2 * hid + hid;
      const double* src_f = hf.data() + static_cast<std::size_t>(row) * hid;
      const double* src_b = hb.data() + static_cast<std::size_t>(row) * hid;
      std::copy(src_f, src_f + hid, out_f);
      std::copy(src_b, src_b + hid, out_b);
    }
  }
  return y;
}

Tensor BiLstm::backward_direction(const Tensor& dy, int dy_offset, bool reverse,
                                  const DirCache& cache, Parameter& w, Parameter& u,
                                  Parameter& b) {
  const int n = x_.dim(0), t_len = x_.dim(1), d = x_.dim(2), hid = hidden_;
  const std::size_t nh = static_cast<std::size_t>(n) * hid;

  CMapM wm(w.tensor.data(), d, 4 * hid);
  CMapM um(u.tensor.data(), hid, 4 * hid);
  MapM dwm(w.tensor.grad_data(), d, 4 * hid);
  MapM dum(u.tensor.grad_data(), hid, 4 * hid);
  Eigen::Map<Eigen::RowVectorXd> dbm(b.tensor.grad_data(), 4 * hid);

  Tensor dx({n, t_len, d});
  RowMat dz(n, 4 * hid);
  std::vector<double> dh_next(nh, 0.0), dc_next(nh, 0.0);

  for (int s = t_len - 1; s >= 0; --s) {
    const int t = reverse ? t_len - 1 - s : s;
    const auto& gi = cache.i[static_cast<std::size_t>(s)];
    const auto& gf = cache.f[static_cast<std::size_t>(s)];
    const auto& gg = cache.g[static_cast<std::size_t>(s)];
    const auto& go = cache.o[static_cast<std::size_t>(s)];
    const auto& tc = cache.tanh_c[static_cast<std::size_t>(s)];
    const std::vector<double>* c_prev = s > 0 ? &cache.c[static_cast<std::size_t>(s) - 1] : nullptr;

    for (int row = 0; row < n; ++row) {
      const double* dy_row =
          dy.data() + (static_cast<std::int64_t>(row) * t_len + t) * dy.dim(2) + dy_offset;
      for (int j = 0; j < hid; ++j) {
        const std::size_t k = static_cast<std::size_t>(row) * hid + static_cast<std::size_t>(j);
        const double dh = dy_row[j] + dh_next[k];
        const double do_ = dh * tc[k];
        const double dc = dc_next[k] + dh * go[k] * (1.0 - tc[k] * tc[k]);
        const double di = dc * gg[k];
        const double dg = dc * gi[k];
        const double df = dc * (c_prev ? (*c_prev)[k] : 0.0);
        dc_next[k] = dc * gf[k];
        dz(row, j) = di * gi[k] * (1.0 - gi[k]);
        dz(row, hid + j) = df * gf[k] * (1.0 - gf[k]);
        dz(row, 2 * hid + j) = dg * (1.0 - gg[k] * gg[k]);
        dz(row, 3 * hid + j) = do_ * go[k] * (1.0 - go[k]);
      }
    }

    StrideMap xt(x_.data() + static_cast<std::int64_t>(t) * d, n, d,
                 Eigen::OuterStride<>(static_cast<Eigen::Index>(t_len) * d));
    dwm.noalias() += xt.transpose() * dz;
    dbm += dz.colwise().sum();
    if (s > 0) {
      CMapM hp(cache.h[static_cast<std::size_t>(s) - 1].data(), n, hid);
      dum.noalias() += hp.transpose() * dz;
    }

    MutStrideMap dxt(dx.data() + static_cast<std::int64_t>(t) * d, n, d,
                     Eigen::OuterStride<>(static_cast<Eigen::Index>(t_len) * d));
    dxt.noalias() += dz * wm.transpose();

    CMapM dzm(dz.data(), n, 4 * hid);
    MapM dhn(dh_next.data(), n, hid);
    dhn.noalias() = dzm * um.transpose();
  }
  return dx;
}

Tensor BiLstm::backward(const Tensor& dy) {
  const int n = x_.dim(0), t_len = x_.dim(1);
  require(dy.rank() == 3 && dy.dim(0) == n && dy.dim(1) == t_len && dy.dim(2) == 2 * hidden_,
          "bilstm backward shape mismatch: " + dy.shape_str());

  Tensor dx_f = backward_direction(dy, 0, false, fw_cache_, fw_w_, fw_u_, fw_b_);
  Tensor dx_b = backward_direction(dy, hidden_, true, bw_cache_, bw_w_, bw_u_, bw_b_);
  for (std::int64_t i = 0; i < dx_f.numel(); ++i) dx_f[i] += dx_b[i];
  return dx_f;
}

// ---------------------------------------------------------------------------
// SelfAttention

SelfAttention::SelfAttention(std::string name, int in_dim, int att_dim, Rng& rng)
    : in_dim_(in_dim),
      att_dim_(att_dim),
      w_(name + ".w", {in_dim, att_dim}),
      b_(name + ".b", {att_dim}),
      c_(name + ".c", {att_dim}) {
  if (in_dim <= 0 || att_dim <= 0) throw InvalidConfig("attention dims must be positive");
  glorot_uniform(w_.tensor, in_dim, att_dim, rng);
  glorot_uniform(c_.tensor, att_dim, 1, rng);
}

Tensor SelfAttention::forward(const Tensor& x, Mode) {
  require(x.rank() == 3 && x.dim(2) == in_dim_,
          "attention expects (N, T, " + std::to_string(in_dim_) + "), got " + x.shape_str());
  require(x.dim(1) >= 1, "attention needs at least one timestep");
  x_ = x;
  const int n = x.dim(0), t_len = x.dim(1);

  u_ = Tensor({n, t_len, att_dim_});
  alpha_ = Tensor({n, t_len});
  Tensor y({n, in_dim_});

  CMapM wm(w_.tensor.data(), in_dim_, att_dim_);
  Eigen::Map<const Eigen::VectorXd> cv(c_.tensor.data(), att_dim_);

  for (int s = 0; s < n; ++s) {
    CMapM xs(x.data() + static_cast<std::int64_t>(s) * t_len * in_dim_, t_len, in_dim_);
    MapM us(u_.data() + static_cast<std::int64_t>(s) * t_len * att_dim_, t_len, att_dim_);
    us.noalias() = xs * wm;
    us.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.tensor.data(), att_dim_);
    us = us.array().tanh();

    Eigen::VectorXd scores = us * cv;
    const double mx = scores.maxCoeff();
    Eigen::VectorXd ex = (scores.array() - mx).exp();
    const double denom = ex.sum();
    Eigen::Map<Eigen::VectorXd> al(alpha_.data() + static_cast<std::int64_t>(s) * t_len, t_len);
    al = ex / denom;

    Eigen::Map<Eigen::RowVectorXd> ys(y.data() + static_cast<std::int64_t>(s) * in_dim_, in_dim_);
    ys.noalias() = al.transpose() * xs;
  }
  return y;
}

Tensor SelfAttention::backward(const Tensor& dy) {
  const int n = x_.dim(0), t_len = x_.dim(1);
  require(dy.rank() == 2 && dy.dim(0) == n && dy.dim(1) == in_dim_,
          "attention backward shape mismatch: " + dy.shape_str());

  CMapM wm(w_.tensor.data(), in_dim_, att_dim_);
  MapM dwm(w_.tensor.grad_data(), in_dim_, att_dim_);
  Eigen::Map<Eigen::RowVectorXd> dbm(b_.tensor.grad_data(), att_dim_);
  Eigen::Map<const Eigen::VectorXd> cv(c_.tensor.data(), att_dim_);
  Eigen::Map<Eigen::VectorXd> dcv(c_.tensor.grad_data(), att_dim_);

  Tensor dx(x_.shape());
  for (int s = 0; s < n; ++s) {
    CMapM xs(x_.data() + static_cast<std::int64_t>(s) * t_len * in_dim_, t_len, in_dim_);
    CMapM us(u_.data() + static_cast<std::int64_t>(s) * t_len * att_dim_, t_len, att_dim_);
    Eigen::Map<const Eigen::VectorXd> al(alpha_.data() + static_cast<std::int64_t>(s) * t_len,
                                         t_len);
    Eigen::Map<const Eigen::RowVectorXd> dys(dy.data() + static_cast<std::int64_t>(s) * in_dim_,
                                             in_dim_);
    MapM dxs(dx.data() + static_cast<std::int64_t>(s) * t_len * in_dim_, t_len, in_dim_);

    // output = alpha^T X : gradient splits into the weights and the rows.
    Eigen::VectorXd dalpha = xs * dys.transpose();    // (T)
    dxs.noalias() += al * dys;                        // alpha_t * dy per row

    // softmax jacobian
    const double dot = al.dot(dalpha);
    Eigen::VectorXd dscore = al.array() * (dalpha.array() - dot);

    // score_t = u_t . c
    dcv.noalias() += us.transpose() * dscore;
    RowMat dpre = (dscore * cv.transpose()).array() * (1.0 - us.array().square());  // (T, att)
    dwm.noalias() += xs.transpose() * dpre;
    dbm += dpre.colwise().sum();
    dxs.noalias() += dpre * wm.transpose();
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Embedding

Embedding::Embedding(std::string name, int vocab_size_with_unk, int dim, Rng& rng)
    : rows_(vocab_size_with_unk), dim_(dim), table_(name + ".table", {vocab_size_with_unk, dim}) {
  if (rows_ <= 0 || dim <= 0) throw InvalidConfig("embedding dims must be positive");
  glorot_uniform(table_.tensor, rows_, dim, rng);
}

Tensor Embedding::forward(const Tensor& x, Mode) {
  require(x.rank() == 2, "embedding expects (N, T) ids, got " + x.shape_str());
  ids_ = x;
  const int n = x.dim(0), t_len = x.dim(1);
  Tensor y({n, t_len, dim_});
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double v = x[i];
    const int id = static_cast<int>(v);
    if (static_cast<double>(id) != v || id < -1 || id >= rows_)
      throw InvalidInput("embedding id out of range: " + std::to_string(v));
    if (id < 0) continue;  // padding stays a zero row
    const double* src = table_.tensor.data() + static_cast<std::int64_t>(id) * dim_;
    std::copy(src, src + dim_, y.data() + i * dim_);
  }
  return y;
}

Tensor Embedding::backward(const Tensor& dy) {
  const int n = ids_.dim(0), t_len = ids_.dim(1);
  require(dy.rank() == 3 && dy.dim(0) == n && dy.dim(1) == t_len && dy.dim(2) == dim_,
          "embedding backward shape mismatch: " + dy.shape_str());
  for (std::int64_t i = 0; i < ids_.numel(); ++i) {
    const int id = static_cast<int>(ids_[i]);
    if (id < 0) continue;
    double* dst = table_.tensor.grad_data() + static_cast<std::int64_t>(id) * dim_;
    const double* src = dy.data() + i * dim_;
    for (int k = 0; k < dim_; ++k) dst[k] += src[k];
  }
  return Tensor(ids_.shape());  // ids carry no gradient
}

// ---------------------------------------------------------------------------
// Free functions

Tensor softmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects (N, K), got " + logits.shape_str());
  const int n = logits.dim(0), k = logits.dim(1);
  Tensor p(logits.shape());
  for (int r = 0; r < n; ++r) {
    const double* in = logits.data() + static_cast<std::int64_t>(r) * k;
    double* out = p.data() + static_cast<std::int64_t>(r) * k;
    double mx = in[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, in[j]);
    double denom = 0.0;
    for (int j = 0; j < k; ++j) {
      out[j] = std::exp(in[j] - mx);
      denom += out[j];
    }
    for (int j = 0; j < k; ++j) out[j] /= denom;
  }
  return p;
}

Tensor concat_features(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
    throw ShapeError("concat expects two (N, D) tensors with equal N: " + a.shape_str() + " vs " +
                     b.shape_str());
  const int n = a.dim(0), da = a.dim(1), db = b.dim(1);
  Tensor y({n, da + db});
  for (int r = 0; r < n; ++r) {
    std::copy(a.data() + static_cast<std::int64_t>(r) * da,
              a.data() + static_cast<std::int64_t>(r + 1) * da,
              y.data() + static_cast<std::int64_t>(r) * (da + db));
    std::copy(b.data() + static_cast<std::int64_t>(r) * db,
              b.data() + static_cast<std::int64_t>(r + 1) * db,
              y.data() + static_cast<std::int64_t>(r) * (da + db) + da);
  }
  return y;
}

void split_features_grad(const Tensor& dy, int da, Tensor* dda, Tensor* ddb) {
  if (dy.rank() != 2 || dy.dim(1) <= da)
    throw ShapeError("split expects (N, >" + std::to_string(da) + "), got " + dy.shape_str());
  const int n = dy.dim(0), d = dy.dim(1), db = d - da;
  *dda = Tensor({n, da});
  *ddb = Tensor({n, db});
  for (int r = 0; r < n; ++r) {
    const double* src = dy.data() + static_cast<std::int64_t>(r) * d;
    std::copy(src, src + da, dda->data() + static_cast<std::int64_t>(r) * da);
    std::copy(src + da, src + d, ddb->data() + static_cast<std::int64_t>(r) * db);
  }
}

Tensor flatten_batch(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("flatten expects a batched tensor, got " + x.shape_str());
  Tensor y = x;
  y.reshape({x.dim(0), static_cast<int>(x.numel() / x.dim(0))});
  return y;
}

Tensor bilstm_final_state(const Tensor& seq) {
  if (seq.rank() != 3 || seq.dim(2) % 2 != 0)
    throw ShapeError("expected (N, T, 2H) sequence, got " + seq.shape_str());
  const int n = seq.dim(0), t_len = seq.dim(1), d = seq.dim(2), h = d / 2;
  Tensor y({n, d});
  for (int r = 0; r < n; ++r) {
    const double* last = seq.data() + (static_cast<std::int64_t>(r) * t_len + (t_len - 1)) * d;
    const double* first = seq.data() + static_cast<std::int64_t>(r) * t_len * d;
    std::copy(last, last + h, y.data() + static_cast<std::int64_t>(r) * d);
    std::copy(first + h, first + d, y.data() + static_cast<std::int64_t>(r) * d + h);
  }
  return y;
}

Tensor bilstm_final_state_backward(const Tensor& dy, const std::vector<int>& seq_shape) {
  if (seq_shape.size() != 3) throw ShapeError("sequence shape must be rank 3");
  const int n = seq_shape[0], t_len = seq_shape[1], d = seq_shape[2], h = d / 2;
  if (dy.rank() != 2 || dy.dim(0) != n || dy.dim(1) != d)
    throw ShapeError("final-state backward shape mismatch: " + dy.shape_str());
  Tensor dx(seq_shape);
  for (int r = 0; r < n; ++r) {
    const double* src = dy.data() + static_cast<std::int64_t>(r) * d;
    double* last = dx.data() + (static_cast<std::int64_t>(r) * t_len + (t_len - 1)) * d;
    double* first = dx.data() + static_cast<std::int64_t>(r) * t_len * d;
    std::copy(src, src + h, last);
    std::copy(src + h, src + d, first + h);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// WeightedCrossEntropy

WeightedCrossEntropy::WeightedCrossEntropy(std::vector<double> class_weights)
    : weights_(std::move(class_weights)) {
  if (weights_.empty()) throw InvalidConfig("class weights must be non-empty");
  for (double w : weights_)
    if (!(w > 0.0)) throw InvalidConfig("class weights must be positive");
}

double WeightedCrossEntropy::forward(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) throw ShapeError("loss expects (N, K) logits, got " + logits.shape_str());
  const int n = logits.dim(0), k = logits.dim(1);
  if (k != static_cast<int>(weights_.size()))
    throw DimensionMismatch("class-weight vector has " + std::to_string(weights_.size()) +
                            " entries for " + std::to_string(k) + " classes");
  if (static_cast<int>(labels.size()) != n)
    throw InvalidInput("label count does not match batch size");
  for (int y : labels)
    if (y < 0 || y >= k) throw InvalidInput("label out of range: " + std::to_string(y));

  probs_ = softmax_rows(logits);
  labels_ = labels;
  double loss = 0.0;
  for (int r = 0; r < n; ++r) {
    const double p = probs_[static_cast<std::int64_t>(r) * k + labels[static_cast<std::size_t>(r)]];
    loss -= weights_[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])] *
            std::log(std::max(p, 1e-300));
  }
  return loss / n;
}

Tensor WeightedCrossEntropy::backward() const {
  const int n = probs_.dim(0), k = probs_.dim(1);
  Tensor d(probs_.shape());
  for (int r = 0; r < n; ++r) {
    const int y = labels_[static_cast<std::size_t>(r)];
    const double w = weights_[static_cast<std::size_t>(y)] / n;
    for (int j = 0; j < k; ++j) {
      const double p = probs_[static_cast<std::int64_t>(r) * k + j];
      d[static_cast<std::int64_t>(r) * k + j] = w * (p - (j == y ? 1.0 : 0.0));
    }
  }
  return d;
}

}  // namespace isv::nn
