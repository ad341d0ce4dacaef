#ifndef INTENTSIEVE_LAYERS_HPP
#define INTENTSIEVE_LAYERS_HPP

#include <string>
#include <vector>

#include "intentsieve/rng.hpp"
#include "intentsieve/tensor.hpp"

namespace isv::nn {

/// Train enables dropout masks and batch statistics; Infer is deterministic.
enum class Mode { Train, Infer };

/// Uniform Glorot-style init: U(-limit, limit), limit = sqrt(6/(fan_in+fan_out)).
void glorot_uniform(Tensor& t, int fan_in, int fan_out, Rng& rng);

/// Reverse-mode layer: forward caches whatever backward needs; backward
/// consumes the loss gradient w.r.t. the output, accumulates parameter
/// gradients, and returns the gradient w.r.t. the input. One forward must
/// precede each backward on the same instance.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual std::vector<Parameter*> params() { return {}; }
};

/// Fully connected: (N, in) -> (N, out), y = x W + b.
class Dense : public Layer {
 public:
  Dense(std::string name, int in_dim, int out_dim, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> params() override { return {&w_, &b_}; }

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

 private:
  int in_dim_, out_dim_;
  Parameter w_, b_;
  Tensor x_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor x_;
};

/// Inverted dropout: zero a fraction `rate` of activations in train mode and
/// scale the survivors by 1/(1-rate); identity in infer mode.
class Dropout : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;

  /// Restart the mask stream (used by gradient checks to repeat a mask).
  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
  double rate() const { return rate_; }

 private:
  double rate_;
  Rng rng_;
  std::vector<double> mask_;
  bool active_ = false;
};

/// 2-D cross-correlation over (N, H, W, C_in) with stride 1.
/// Padding::Same zero-pads to preserve (H, W); Padding::Valid shrinks to
/// (H-kh+1, W-kw+1). Weights are (kh, kw, C_in, C_out) plus a per-channel bias.
enum class Padding { Same, Valid };

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, int kh, int kw, int c_in, int c_out, Padding padding, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> params() override { return {&w_, &b_}; }

 private:
  void out_dims(int h, int w, int* oh, int* ow, int* pad_top, int* pad_left) const;

  int kh_, kw_, c_in_, c_out_;
  Padding padding_;
  Parameter w_, b_;
  Tensor x_;
};

/// Non-overlapping max pooling with floor division of the spatial dims.
/// Gradient flows to the first maximal element in row-major window order.
class MaxPool2d : public Layer {
 public:
  MaxPool2d(int ph, int pw);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;

 private:
  int ph_, pw_;
  std::vector<int> in_shape_;
  std::vector<std::int64_t> argmax_;
};

/// Per-channel batch normalization over (N, H, W, C). Train mode normalizes
/// with batch statistics (and requires batch size > 1); infer mode uses
/// running statistics accumulated as running = 0.9*running + 0.1*batch.
class BatchNorm2d : public Layer {
 public:
  BatchNorm2d(std::string name, int channels);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> params() override {
    return {&gamma_, &beta_, &running_mean_, &running_var_};
  }

  /// Declare the running statistics meaningful (set after loading a trained
  /// checkpoint) so inference does not warn about initialization statistics.
  void set_stats_initialized() { ever_updated_ = true; }

 private:
  int channels_;
  double eps_ = 1e-5;
  double momentum_ = 0.9;  ///< retention factor for the running statistics
  Parameter gamma_, beta_;
  Parameter running_mean_, running_var_;  ///< trainable=false, checkpointed
  bool ever_updated_ = false;
  bool warned_uninit_ = false;
  // backward cache
  Tensor x_;
  bool train_path_ = false;
  std::vector<double> mean_, inv_std_, xhat_;
};

/// Bidirectional LSTM over (N, T, D) -> (N, T, 2*hidden). Gate layout in the
/// packed weight matrices is [input, forget, candidate, output]; the forget
/// gate bias starts at 1.
class BiLstm : public Layer {
 public:
  BiLstm(std::string name, int in_dim, int hidden, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> params() override {
    return {&fw_w_, &fw_u_, &fw_b_, &bw_w_, &bw_u_, &bw_b_};
  }

  int hidden() const { return hidden_; }

 private:
  struct DirCache {
    // (T) entries of (N, hidden) activations needed by BPTT.
    std::vector<std::vector<double>> i, f, g, o, c, tanh_c, h;
  };
  void run_direction(const Tensor& x, bool reverse, const Parameter& w, const Parameter& u,
                     const Parameter& b, DirCache* cache) const;
  Tensor backward_direction(const Tensor& dy, int dy_offset, bool reverse, const DirCache& cache,
                            Parameter& w, Parameter& u, Parameter& b);

  int in_dim_, hidden_;
  Parameter fw_w_, fw_u_, fw_b_, bw_w_, bw_u_, bw_b_;
  Tensor x_;
  DirCache fw_cache_, bw_cache_;
};

/// Additive self-attention pooling: u_t = tanh(h_t W + b) with W mapping the
/// hidden width to `att_dim`, score_t = u_t . c for a learned context vector
/// c, alpha = softmax(scores), output = sum_t alpha_t h_t.
/// (N, T, D) -> (N, D).
class SelfAttention : public Layer {
 public:
  SelfAttention(std::string name, int in_dim, int att_dim, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> params() override { return {&w_, &b_, &c_}; }

  /// Attention weights (N, T) from the most recent forward pass.
  const Tensor& attention_weights() const { return alpha_; }

 private:
  int in_dim_, att_dim_;
  Parameter w_, b_, c_;
  Tensor x_, u_, alpha_;
};

/// Trainable character embedding for the no-pretrained-vectors fallback.
/// Input holds integer ids as doubles, shape (N, T); id -1 is padding and
/// maps to a frozen zero row, id vocab_size is the shared unknown row.
/// Output is (N, T, dim).
class Embedding : public Layer {
 public:
  Embedding(std::string name, int vocab_size_with_unk, int dim, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Parameter*> params() override { return {&table_}; }

  int dim() const { return dim_; }

 private:
  int rows_, dim_;
  Parameter table_;
  Tensor ids_;
};

/// Row-wise softmax over the last axis of a (N, K) tensor.
Tensor softmax_rows(const Tensor& logits);

/// Concatenate two (N, Da) and (N, Db) tensors along the feature axis.
Tensor concat_features(const Tensor& a, const Tensor& b);
/// Split the gradient of concat_features back into the two inputs.
void split_features_grad(const Tensor& dy, int da, Tensor* dda, Tensor* ddb);

/// Flatten (N, ...) to (N, prod(rest)); returns a reshaped copy.
Tensor flatten_batch(const Tensor& x);

/// Summary vector of a BiLSTM sequence output (N, T, 2H): the forward
/// direction's state at t = T-1 next to the backward direction's state at
/// t = 0, i.e. each direction after reading the whole sequence. -> (N, 2H)
Tensor bilstm_final_state(const Tensor& seq);
/// Gradient of bilstm_final_state: scatter (N, 2H) back into (N, T, 2H).
Tensor bilstm_final_state_backward(const Tensor& dy, const std::vector<int>& seq_shape);

/// Class-weighted cross entropy from logits, averaged over the batch:
/// loss = mean_i -w[y_i] * log softmax(logits_i)[y_i].
class WeightedCrossEntropy {
 public:
  explicit WeightedCrossEntropy(std::vector<double> class_weights);

  double forward(const Tensor& logits, const std::vector<int>& labels);
  /// Gradient w.r.t. the logits of the last forward call.
  Tensor backward() const;

 private:
  std::vector<double> weights_;
  Tensor probs_;
  std::vector<int> labels_;
};

}  // namespace isv::nn

#endif  // INTENTSIEVE_LAYERS_HPP
