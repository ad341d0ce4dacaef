#include "intentsieve/models.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_map>

#include "intentsieve/error.hpp"

namespace isv::model {

namespace {

using nn::Tensor;

struct KindInfo {
  const char* name;
  int classes;
  bool audio;
  bool text_cnn;
  bool text_rnn;
  bool rnn_attention;
};

const std::map<ModelKind, KindInfo>& kind_table() {
  static const std::map<ModelKind, KindInfo> table = {
      {ModelKind::Fci, {"fci", 7, false, false, true, true}},
      {ModelKind::ThreeA, {"three_a", 6, true, false, true, true}},
      {ModelKind::CharCnn, {"charCNN", 7, false, true, false, false}},
      {ModelKind::CharBiLstm, {"charBiLSTM", 7, false, false, true, false}},
      {ModelKind::CharCnnBiLstm, {"charCNN+charBiLSTM", 7, false, true, true, false}},
      {ModelKind::CharBiLstmAtt, {"charBiLSTM-Att", 7, false, false, true, true}},
      {ModelKind::CharCnnBiLstmAtt, {"charCNN+charBiLSTM-Att", 7, false, true, true, true}},
      {ModelKind::OnlySpeech, {"only_speech", 6, true, false, false, false}},
      {ModelKind::OnlyText6, {"only_text6", 6, false, false, true, true}},
  };
  return table;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string model_kind_name(ModelKind kind) { return kind_table().at(kind).name; }

ModelKind parse_model_kind(const std::string& name) {
  const std::string want = lower(name);
  for (const auto& [kind, info] : kind_table())
    if (lower(info.name) == want) return kind;
  if (want == "threea" || want == "3a") return ModelKind::ThreeA;
  throw InvalidInput("unknown model kind: " + name);
}

int model_kind_classes(ModelKind kind) { return kind_table().at(kind).classes; }
bool model_kind_uses_audio(ModelKind kind) { return kind_table().at(kind).audio; }
bool model_kind_uses_text(ModelKind kind) {
  const KindInfo& info = kind_table().at(kind);
  return info.text_cnn || info.text_rnn;
}

void ModelConfig::validate() const {
  if (mlp_hidden != 64 && mlp_hidden != 128)
    throw InvalidConfig("mlp_hidden must be 64 or 128, got " + std::to_string(mlp_hidden));
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidConfig("dropout must be in [0, 1)");
  if (label_space != 0 && label_space != 6 && label_space != 7)
    throw InvalidConfig("label_space must be 6 or 7");
  if (fusion_proj_dim <= 0) throw InvalidConfig("fusion_proj_dim must be positive");
  if (max_chars <= 0 || char_dim <= 0) throw InvalidConfig("text dims must be positive");
  if (audio_rows <= 0 || audio_cols <= 0) throw InvalidConfig("audio dims must be positive");
  if (trainable_embedding && vocab_size < 0)
    throw InvalidConfig("vocab_size must be non-negative");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"mlp_hidden", mlp_hidden},
          {"dropout", dropout},
          {"label_space", label_space},
          {"fusion_proj_dim", fusion_proj_dim},
          {"max_chars", max_chars},
          {"char_dim", char_dim},
          {"audio_rows", audio_rows},
          {"audio_cols", audio_cols},
          {"trainable_embedding", trainable_embedding},
          {"vocab_size", vocab_size}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.label_space = j.value("label_space", c.label_space);
  c.fusion_proj_dim = j.value("fusion_proj_dim", c.fusion_proj_dim);
  c.max_chars = j.value("max_chars", c.max_chars);
  c.char_dim = j.value("char_dim", c.char_dim);
  c.audio_rows = j.value("audio_rows", c.audio_rows);
  c.audio_cols = j.value("audio_cols", c.audio_cols);
  c.trainable_embedding = j.value("trainable_embedding", c.trainable_embedding);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  return c;
}

// ---------------------------------------------------------------------------

struct IntentModel::Impl {
  static constexpr int kLstmHidden = 64;  // per direction
  static constexpr int kAttDim = 64;

  bool has_audio = false, has_text_cnn = false, has_text_rnn = false, rnn_att = false;

  // text branch
  std::unique_ptr<nn::Embedding> embed;
  std::unique_ptr<nn::Conv2d> tc1, tc2;
  nn::ReLU tc1_relu, tc2_relu;
  std::unique_ptr<nn::MaxPool2d> tc_pool;
  std::unique_ptr<nn::Dropout> tc_drop;
  int text_cnn_width = 0;
  std::vector<int> text_conv_out_shape;

  std::unique_ptr<nn::BiLstm> tr_lstm;
  std::unique_ptr<nn::SelfAttention> tr_att;
  std::vector<int> tr_seq_shape;

  // audio branch
  std::array<std::unique_ptr<nn::Conv2d>, 5> ac;
  std::array<std::unique_ptr<nn::BatchNorm2d>, 5> abn;
  std::array<nn::ReLU, 5> arelu;
  std::array<std::unique_ptr<nn::MaxPool2d>, 5> apool;
  std::unique_ptr<nn::Dropout> a_drop;
  std::unique_ptr<nn::Dense> a_cnn_proj;
  nn::ReLU a_cnn_relu;
  std::unique_ptr<nn::BiLstm> a_lstm;
  std::unique_ptr<nn::SelfAttention> a_att;
  std::unique_ptr<nn::Dense> a_fuse;
  int audio_flat_width = 0;
  std::vector<int> audio_conv_out_shape;

  // classifier head
  std::unique_ptr<nn::Dense> h_fc1, h_out;
  nn::ReLU h_relu;
  std::unique_ptr<nn::Dropout> h_drop;

  std::vector<int> branch_widths;  // concat order: audio, text_cnn, text_rnn
};

namespace {

/// Spatial size after the audio CNN stack for (rows, cols, 1) input.
void audio_stack_dims(int rows, int cols, int* oh, int* ow) {
  static constexpr int pool_h[5] = {2, 2, 2, 2, 2};
  static constexpr int pool_w[5] = {2, 2, 2, 1, 1};
  int h = rows, w = cols;
  for (int i = 0; i < 5; ++i) {
    h /= pool_h[i];
    w /= pool_w[i];
    if (h < 1 || w < 1)
      throw InvalidConfig("audio feature " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " too small for the CNN stack");
  }
  *oh = h;
  *ow = w;
}

}  // namespace

IntentModel::IntentModel(ModelKind kind, ModelConfig cfg, RngSeed seed)
    : kind_(kind), cfg_(cfg), impl_(std::make_unique<Impl>()) {
  const KindInfo& info = kind_table().at(kind);
  if (cfg_.label_space == 0) cfg_.label_space = info.classes;
  if (cfg_.label_space != info.classes)
    throw InvalidConfig("label_space " + std::to_string(cfg_.label_space) +
                        " does not match model kind " + info.name);
  cfg_.validate();

  Impl& im = *impl_;
  im.has_audio = info.audio;
  im.has_text_cnn = info.text_cnn;
  im.has_text_rnn = info.text_rnn;
  im.rnn_att = info.rnn_attention;

  Rng rng(Rng::derive(seed.value, 1));  // stream 1: weight initialization
  const int lstm_out = 2 * Impl::kLstmHidden;

  if ((im.has_text_cnn || im.has_text_rnn) && cfg_.trainable_embedding)
    im.embed = std::make_unique<nn::Embedding>("text.embed", cfg_.vocab_size + 1, cfg_.char_dim, rng);

  if (im.has_text_cnn) {
    // conv 3x(char_dim) valid collapses the vector axis to width 1
    im.tc1 = std::make_unique<nn::Conv2d>("text.cnn1", 3, cfg_.char_dim, 1, 32, nn::Padding::Valid, rng);
    im.tc_pool = std::make_unique<nn::MaxPool2d>(2, 1);
    im.tc2 = std::make_unique<nn::Conv2d>("text.cnn2", 3, 1, 32, 32, nn::Padding::Valid, rng);
    im.tc_drop = std::make_unique<nn::Dropout>(cfg_.dropout, Rng::derive(seed.value, 101));
    const int h3 = (cfg_.max_chars - 2) / 2 - 2;
    if (h3 < 1)
      throw InvalidConfig("max_chars " + std::to_string(cfg_.max_chars) +
                          " too small for the text CNN");
    im.text_cnn_width = h3 * 32;
  }

  if (im.has_text_rnn) {
    im.tr_lstm = std::make_unique<nn::BiLstm>("text.lstm", cfg_.char_dim, Impl::kLstmHidden, rng);
    if (im.rnn_att)
      im.tr_att = std::make_unique<nn::SelfAttention>("text.att", lstm_out, Impl::kAttDim, rng);
  }

  if (im.has_audio) {
    static constexpr int kh[5] = {5, 5, 3, 3, 3};
    static constexpr int kw[5] = {5, 5, 3, 3, 3};
    static constexpr int ch[6] = {1, 32, 64, 128, 32, 32};
    static constexpr int ph[5] = {2, 2, 2, 2, 2};
    static constexpr int pw[5] = {2, 2, 2, 1, 1};
    for (int i = 0; i < 5; ++i) {
      const std::string tag = "audio.conv" + std::to_string(i + 1);
      im.ac[static_cast<std::size_t>(i)] =
          std::make_unique<nn::Conv2d>(tag, kh[i], kw[i], ch[i], ch[i + 1], nn::Padding::Same, rng);
      im.abn[static_cast<std::size_t>(i)] =
          std::make_unique<nn::BatchNorm2d>("audio.bn" + std::to_string(i + 1), ch[i + 1]);
      im.apool[static_cast<std::size_t>(i)] = std::make_unique<nn::MaxPool2d>(ph[i], pw[i]);
    }
    int oh, ow;
    audio_stack_dims(cfg_.audio_rows, cfg_.audio_cols, &oh, &ow);
    im.audio_flat_width = oh * ow * ch[5];
    im.a_drop = std::make_unique<nn::Dropout>(cfg_.dropout, Rng::derive(seed.value, 102));
    im.a_cnn_proj = std::make_unique<nn::Dense>("audio.cnn_proj", im.audio_flat_width,
                                                cfg_.fusion_proj_dim, rng);
    im.a_lstm = std::make_unique<nn::BiLstm>("audio.lstm", cfg_.audio_cols, Impl::kLstmHidden, rng);
    im.a_att = std::make_unique<nn::SelfAttention>("audio.att", lstm_out, Impl::kAttDim, rng);
    im.a_fuse = std::make_unique<nn::Dense>("audio.fuse", cfg_.fusion_proj_dim + lstm_out,
                                            cfg_.fusion_proj_dim, rng);
  }

  im.branch_widths.clear();
  int head_in = 0;
  if (im.has_audio) {
    im.branch_widths.push_back(cfg_.fusion_proj_dim);
    head_in += cfg_.fusion_proj_dim;
  }
  if (im.has_text_cnn) {
    im.branch_widths.push_back(im.text_cnn_width);
    head_in += im.text_cnn_width;
  }
  if (im.has_text_rnn) {
    im.branch_widths.push_back(lstm_out);
    head_in += lstm_out;
  }

  im.h_fc1 = std::make_unique<nn::Dense>("head.fc1", head_in, cfg_.mlp_hidden, rng);
  im.h_drop = std::make_unique<nn::Dropout>(cfg_.dropout, Rng::derive(seed.value, 103));
  im.h_out = std::make_unique<nn::Dense>("head.out", cfg_.mlp_hidden, cfg_.label_space, rng);
}

IntentModel::~IntentModel() = default;

int IntentModel::num_classes() const { return cfg_.label_space; }

nn::Tensor IntentModel::forward(const Batch& batch, nn::Mode mode) {
  Impl& im = *impl_;
  int n = -1;
  auto check_n = [&](int got) {
    if (n == -1) n = got;
    if (n != got)
      throw ShapeError("batch fields disagree on batch size: " + std::to_string(n) + " vs " +
                       std::to_string(got));
  };

  // Resolve the character sequence (N, max_chars, char_dim) if needed.
  Tensor text_seq;
  if (im.has_text_cnn || im.has_text_rnn) {
    if (cfg_.trainable_embedding) {
      if (batch.text_ids.rank() != 2 || batch.text_ids.dim(1) != cfg_.max_chars)
        throw ShapeError("expected text ids (N, " + std::to_string(cfg_.max_chars) + "), got " +
                         batch.text_ids.shape_str());
      check_n(batch.text_ids.dim(0));
      text_seq = im.embed->forward(batch.text_ids, mode);
    } else {
      if (batch.text.rank() != 3 || batch.text.dim(1) != cfg_.max_chars ||
          batch.text.dim(2) != cfg_.char_dim)
        throw ShapeError("expected text feature (N, " + std::to_string(cfg_.max_chars) + ", " +
                         std::to_string(cfg_.char_dim) + "), got " + batch.text.shape_str());
      check_n(batch.text.dim(0));
      text_seq = batch.text;
    }
  }
  if (im.has_audio) {
    if (batch.audio.rank() != 3 || batch.audio.dim(1) != cfg_.audio_rows ||
        batch.audio.dim(2) != cfg_.audio_cols)
      throw ShapeError("expected audio feature (N, " + std::to_string(cfg_.audio_rows) + ", " +
                       std::to_string(cfg_.audio_cols) + "), got " + batch.audio.shape_str());
    check_n(batch.audio.dim(0));
  }
  if (n < 1) throw InvalidInput("empty batch");

  std::vector<Tensor> outs;

  if (im.has_audio) {
    Tensor img = batch.audio;
    img.reshape({n, cfg_.audio_rows, cfg_.audio_cols, 1});
    Tensor t = std::move(img);
    for (int i = 0; i < 5; ++i) {
      const auto s = static_cast<std::size_t>(i);
      t = im.ac[s]->forward(t, mode);
      t = im.abn[s]->forward(t, mode);
      t = im.arelu[s].forward(t, mode);
      t = im.apool[s]->forward(t, mode);
    }
    im.audio_conv_out_shape = t.shape();
    Tensor flat = nn::flatten_batch(t);
    flat = im.a_drop->forward(flat, mode);
    Tensor cp = im.a_cnn_proj->forward(flat, mode);
    cp = im.a_cnn_relu.forward(cp, mode);

    Tensor seq = im.a_lstm->forward(batch.audio, mode);
    Tensor att = im.a_att->forward(seq, mode);

    Tensor fused = im.a_fuse->forward(nn::concat_features(cp, att), mode);
    outs.push_back(std::move(fused));
  }

  if (im.has_text_cnn) {
    Tensor img = text_seq;
    img.reshape({n, cfg_.max_chars, cfg_.char_dim, 1});
    Tensor t = im.tc1->forward(img, mode);
    t = im.tc1_relu.forward(t, mode);
    t = im.tc_pool->forward(t, mode);
    t = im.tc2->forward(t, mode);
    t = im.tc2_relu.forward(t, mode);
    im.text_conv_out_shape = t.shape();
    Tensor flat = nn::flatten_batch(t);
    flat = im.tc_drop->forward(flat, mode);
    outs.push_back(std::move(flat));
  }

  if (im.has_text_rnn) {
    Tensor seq = im.tr_lstm->forward(text_seq, mode);
    im.tr_seq_shape = seq.shape();
    Tensor summary = im.rnn_att ? im.tr_att->forward(seq, mode) : nn::bilstm_final_state(seq);
    outs.push_back(std::move(summary));
  }

  Tensor feat = std::move(outs[0]);
  for (std::size_t i = 1; i < outs.size(); ++i) feat = nn::concat_features(feat, outs[i]);

  Tensor h = im.h_fc1->forward(feat, mode);
  h = im.h_relu.forward(h, mode);
  h = im.h_drop->forward(h, mode);
  return im.h_out->forward(h, mode);
}

void IntentModel::backward(const nn::Tensor& dlogits) {
  Impl& im = *impl_;
  Tensor d = im.h_out->backward(dlogits);
  d = im.h_drop->backward(d);
  d = im.h_relu.backward(d);
  d = im.h_fc1->backward(d);  // (N, sum of branch widths)

  // Split the fused gradient back into per-branch slices.
  std::vector<Tensor> branch_grads;
  {
    Tensor rest = std::move(d);
    for (std::size_t i = 0; i + 1 < im.branch_widths.size(); ++i) {
      Tensor left, right;
      nn::split_features_grad(rest, im.branch_widths[i], &left, &right);
      branch_grads.push_back(std::move(left));
      rest = std::move(right);
    }
    branch_grads.push_back(std::move(rest));
  }

  std::size_t bi = 0;
  Tensor dtext_seq;  // accumulated gradient for the shared character sequence
  auto add_text_grad = [&](const Tensor& g) {
    if (dtext_seq.numel() == 0) {
      dtext_seq = g;
    } else {
      for (std::int64_t i = 0; i < g.numel(); ++i) dtext_seq[i] += g[i];
    }
  };

  if (im.has_audio) {
    Tensor dfused = im.a_fuse->backward(branch_grads[bi++]);
    Tensor dcp, datt;
    nn::split_features_grad(dfused, cfg_.fusion_proj_dim, &dcp, &datt);

    dcp = im.a_cnn_relu.backward(dcp);
    Tensor dflat = im.a_cnn_proj->backward(dcp);
    dflat = im.a_drop->backward(dflat);
    dflat.reshape(im.audio_conv_out_shape);
    Tensor t = std::move(dflat);
    for (int i = 4; i >= 0; --i) {
      const auto s = static_cast<std::size_t>(i);
      t = im.apool[s]->backward(t);
      t = im.arelu[s].backward(t);
      t = im.abn[s]->backward(t);
      t = im.ac[s]->backward(t);
    }
    Tensor dseq = im.a_att->backward(datt);
    im.a_lstm->backward(dseq);  // input gradient unused: audio is raw data
  }

  if (im.has_text_cnn) {
    Tensor dflat = im.tc_drop->backward(branch_grads[bi++]);
    dflat.reshape(im.text_conv_out_shape);
    Tensor t = im.tc2_relu.backward(dflat);
    t = im.tc2->backward(t);
    t = im.tc_pool->backward(t);
    t = im.tc1_relu.backward(t);
    t = im.tc1->backward(t);  // (N, max_chars, char_dim, 1)
    t.reshape({t.dim(0), cfg_.max_chars, cfg_.char_dim});
    add_text_grad(t);
  }

  if (im.has_text_rnn) {
    Tensor dsummary = std::move(branch_grads[bi++]);
    Tensor dseq = im.rnn_att ? im.tr_att->backward(dsummary)
                             : nn::bilstm_final_state_backward(dsummary, im.tr_seq_shape);
    Tensor dtext = im.tr_lstm->backward(dseq);
    add_text_grad(dtext);
  }

  if (im.embed && dtext_seq.numel() > 0) im.embed->backward(dtext_seq);
}

nn::Tensor IntentModel::predict_probs(const Batch& batch) {
  return nn::softmax_rows(forward(batch, nn::Mode::Infer));
}

std::vector<int> IntentModel::predict_labels(const Batch& batch) {
  const Tensor logits = forward(batch, nn::Mode::Infer);
  const int n = logits.dim(0), k = logits.dim(1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    const double* row = logits.data() + static_cast<std::int64_t>(r) * k;
    int best = 0;
    for (int j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;  // ties keep the lowest class code
    labels[static_cast<std::size_t>(r)] = best;
  }
  return labels;
}

std::vector<nn::Parameter*> IntentModel::params() {
  Impl& im = *impl_;
  std::vector<nn::Parameter*> out;
  auto append = [&](nn::Layer* layer) {
    if (!layer) return;
    for (nn::Parameter* p : layer->params()) out.push_back(p);
  };
  append(im.embed.get());
  append(im.tc1.get());
  append(im.tc2.get());
  append(im.tr_lstm.get());
  append(im.tr_att.get());
  for (int i = 0; i < 5; ++i) {
    append(im.ac[static_cast<std::size_t>(i)].get());
    append(im.abn[static_cast<std::size_t>(i)].get());
  }
  append(im.a_lstm.get());
  append(im.a_att.get());
  append(im.a_cnn_proj.get());
  append(im.a_fuse.get());
  append(im.h_fc1.get());
  append(im.h_out.get());
  return out;
}

std::int64_t IntentModel::parameter_count() {
  std::int64_t total = 0;
  for (nn::Parameter* p : params())
    if (p->trainable) total += p->tensor.numel();
  return total;
}

const nn::SelfAttention* IntentModel::text_attention() const { return impl_->tr_att.get(); }
const nn::SelfAttention* IntentModel::audio_attention() const { return impl_->a_att.get(); }

void IntentModel::reseed_dropout(std::uint64_t seed) {
  Impl& im = *impl_;
  if (im.tc_drop) im.tc_drop->reseed(Rng::derive(seed, 101));
  if (im.a_drop) im.a_drop->reseed(Rng::derive(seed, 102));
  if (im.h_drop) im.h_drop->reseed(Rng::derive(seed, 103));
}

void IntentModel::mark_loaded() {
  for (auto& bn : impl_->abn)
    if (bn) bn->set_stats_initialized();
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

constexpr char kMagic[4] = {'I', 'S', 'V', '1'};

}  // namespace

void save_model(const std::string& path, IntentModel& model, const nlohmann::json& extra) {
  nlohmann::json manifest = nlohmann::json::array();
  std::vector<nn::Parameter*> params = model.params();
  std::int64_t offset = 0;
  for (nn::Parameter* p : params) {
    manifest.push_back({{"name", p->name}, {"shape", p->tensor.shape()}, {"offset", offset}});
    offset += p->tensor.numel();
  }
  const nlohmann::json header = {{"model_kind", model_kind_name(model.kind())},
                                 {"config", model.config().to_json()},
                                 {"extra", extra},
                                 {"tensors", manifest}};
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  const auto hlen = static_cast<std::uint32_t>(header_str.size());
  unsigned char len_bytes[4] = {static_cast<unsigned char>(hlen & 0xff),
                                static_cast<unsigned char>((hlen >> 8) & 0xff),
                                static_cast<unsigned char>((hlen >> 16) & 0xff),
                                static_cast<unsigned char>((hlen >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(len_bytes), 4);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  std::vector<float> buf;
  for (nn::Parameter* p : params) {
    buf.resize(static_cast<std::size_t>(p->tensor.numel()));
    for (std::int64_t i = 0; i < p->tensor.numel(); ++i)
      buf[static_cast<std::size_t>(i)] = static_cast<float>(p->tensor[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw IoError("checkpoint write failed: " + path);
}

std::unique_ptr<IntentModel> load_model(const std::string& path, nlohmann::json* extra) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("not a model checkpoint (bad magic): " + path);
  unsigned char len_bytes[4];
  in.read(reinterpret_cast<char*>(len_bytes), 4);
  if (in.gcount() != 4) throw ParseError("truncated checkpoint header: " + path);
  const std::uint32_t hlen = static_cast<std::uint32_t>(len_bytes[0]) |
                             (static_cast<std::uint32_t>(len_bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(len_bytes[2]) << 16) |
                             (static_cast<std::uint32_t>(len_bytes[3]) << 24);
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (static_cast<std::uint32_t>(in.gcount()) != hlen)
    throw ParseError("truncated checkpoint header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("bad checkpoint header JSON: " + std::string(e.what()));
  }

  const ModelKind kind = parse_model_kind(header.at("model_kind").get<std::string>());
  const ModelConfig cfg = ModelConfig::from_json(header.at("config"));
  if (extra) *extra = header.value("extra", nlohmann::json::object());

  auto model = std::make_unique<IntentModel>(kind, cfg, RngSeed{0});
  std::unordered_map<std::string, nn::Parameter*> by_name;
  for (nn::Parameter* p : model->params()) by_name.emplace(p->name, p);

  std::size_t loaded = 0;
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw ParseError("checkpoint tensor " + name + " has no slot in model kind " +
                       model_kind_name(kind));
    nn::Parameter* p = it->second;
    if (p->tensor.shape() != shape)
      throw DimensionMismatch("checkpoint tensor " + name + " has shape mismatch");
    const std::int64_t payload_off = entry.at("offset").get<std::int64_t>();
    in.seekg(8 + static_cast<std::streamoff>(hlen) + payload_off * static_cast<std::streamoff>(sizeof(float)));
    std::vector<float> buf(static_cast<std::size_t>(p->tensor.numel()));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float))
      throw ParseError("checkpoint payload truncated at tensor " + name);
    for (std::int64_t i = 0; i < p->tensor.numel(); ++i)
      p->tensor[i] = buf[static_cast<std::size_t>(i)];
    ++loaded;
  }
  if (loaded != by_name.size())
    throw ParseError("checkpoint is missing " + std::to_string(by_name.size() - loaded) +
                     " tensors for model kind " + model_kind_name(kind));
  model->mark_loaded();
  return model;
}

std::unique_ptr<IntentModel> build_model(ModelKind kind, const ModelConfig& cfg, RngSeed seed) {
  return std::make_unique<IntentModel>(kind, cfg, seed);
}

}  // namespace isv::model
