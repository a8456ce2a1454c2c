#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgr/nn.hpp"
#include "dgr/rng.hpp"
#include "dgr/types.hpp"

// The merged generator/classifier: conv encoder -> diagonal-Gaussian latent,
// class-conditional Gaussian prior, class-gated decoder, classifier head on
// mu. One network serves both the generative and discriminative roles.

namespace dgr {

enum class ReconKind { bernoulli, gaussian };

inline std::string to_string(ReconKind k) {
  return k == ReconKind::bernoulli ? "bernoulli" : "gaussian";
}

inline ReconKind recon_kind_from_string(const std::string& s) {
  if (s == "bernoulli") return ReconKind::bernoulli;
  if (s == "gaussian") return ReconKind::gaussian;
  throw ConfigError("unknown reconstruction loss '" + s + "'", "model.recon");
}

struct ModelConfig {
  ImageShape input{1, 28, 28};
  int num_classes = 10;   // K_max: label space across the whole stream
  int d_z = 100;
  std::vector<int> channels = {32, 64};  // conv blocks, each halves H and W
  int kernel = 4, stride = 2, pad = 1;
  bool conditional_prior = true;  // false: KL against N(0, I)
  bool gating = true;
  double keep_fraction = 0.2;     // fraction of decoder hidden units kept per class
  double logvar_clamp = 10.0;
  ReconKind recon = ReconKind::bernoulli;
  double prior_mean_std = 0.1;

  void validate() const {
    if (input.channels <= 0 || input.height <= 0 || input.width <= 0)
      throw ConfigError("image shape must be positive", "model.input");
    if (num_classes <= 0) throw ConfigError("must be positive", "model.num_classes");
    if (d_z <= 0) throw ConfigError("must be positive", "model.d_z");
    if (channels.empty()) throw ConfigError("needs at least one conv block", "model.channels");
    if (keep_fraction <= 0.0 || keep_fraction > 1.0)
      throw ConfigError("must be in (0, 1]", "model.keep_fraction");
    if (logvar_clamp <= 0.0) throw ConfigError("must be positive", "model.logvar_clamp");
    int h = input.height;
    for (size_t i = 0; i < channels.size(); ++i) {
      if (channels[i] <= 0) throw ConfigError("channel counts must be positive", "model.channels");
      h = (h + 2 * pad - kernel) / stride + 1;
      if (h <= 0) throw ConfigError("conv stack shrinks input below 1 pixel", "model.channels");
    }
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"channels_in", c.input.channels}, {"height", c.input.height},
       {"width", c.input.width},          {"num_classes", c.num_classes},
       {"d_z", c.d_z},                    {"channels", c.channels},
       {"kernel", c.kernel},              {"stride", c.stride},
       {"pad", c.pad},                    {"conditional_prior", c.conditional_prior},
       {"gating", c.gating},              {"keep_fraction", c.keep_fraction},
       {"logvar_clamp", c.logvar_clamp},  {"recon", to_string(c.recon)},
       {"prior_mean_std", c.prior_mean_std}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.input = ImageShape{j.at("channels_in").get<int>(), j.at("height").get<int>(),
                       j.at("width").get<int>()};
  c.num_classes = j.at("num_classes").get<int>();
  c.d_z = j.at("d_z").get<int>();
  c.channels = j.at("channels").get<std::vector<int>>();
  c.kernel = j.at("kernel").get<int>();
  c.stride = j.at("stride").get<int>();
  c.pad = j.at("pad").get<int>();
  c.conditional_prior = j.at("conditional_prior").get<bool>();
  c.gating = j.at("gating").get<bool>();
  c.keep_fraction = j.at("keep_fraction").get<double>();
  c.logvar_clamp = j.at("logvar_clamp").get<double>();
  c.recon = recon_kind_from_string(j.at("recon").get<std::string>());
  c.prior_mean_std = j.at("prior_mean_std").get<double>();
}

// z = mu + exp(log_var / 2) * noise
template <typename S>
void reparameterize(const Matrix<S>& mu, const Matrix<S>& log_var, const Matrix<S>& noise,
                    Matrix<S>& z) {
  DGR_CHECK(noise.rows() == mu.rows() && noise.cols() == mu.cols(),
            "reparameterize: noise shape must match mu");
  z = mu.array() + (log_var.array() * S(0.5)).exp() * noise.array();
}

// Per-sample negative log-likelihood, summed over pixels. Bernoulli clamps
// only the log arguments, so a saturated exact match costs exactly zero.
template <typename S>
Vector<S> recon_values(ReconKind kind, const Matrix<S>& x, const Matrix<S>& x_hat) {
  DGR_CHECK(x.rows() == x_hat.rows() && x.cols() == x_hat.cols(),
            "recon_loss: shape mismatch");
  if (kind == ReconKind::gaussian) {
    Vector<S> out =
        (S(0.5) * (x - x_hat).array().square().colwise().sum()).matrix().transpose();
    return out;
  }
  const S eps = S(1e-7);
  Vector<S> out = (-(x.array() * x_hat.array().max(eps).log() +
                     (S(1) - x.array()) * (S(1) - x_hat.array()).max(eps).log())
                        .colwise()
                        .sum())
                      .matrix()
                      .transpose();
  return out;
}

// d(recon)/d(pre-sigmoid logits), scaled per sample by w.
template <typename S>
void recon_grad_px(ReconKind kind, const Matrix<S>& x, const Matrix<S>& x_hat,
                   const Vector<S>& w, Matrix<S>& dpx) {
  if (kind == ReconKind::gaussian)
    dpx = ((x_hat - x).array() * x_hat.array() * (S(1) - x_hat.array())).matrix();
  else
    dpx = x_hat - x;
  dpx.array().rowwise() *= w.transpose().array();
}

template <typename S>
struct EncodeState {
  Matrix<S> input;
  std::vector<Matrix<S>> cols, pre, act;
  Matrix<S> mu, lv_raw, lv;
};

template <typename S>
struct DecodeState {
  Matrix<S> z;
  VectorI class_ids;            // empty = ungated
  Matrix<S> fc_pre, hidden;     // hidden is post-ReLU, post-gate
  Matrix<S> gate;
  std::vector<Matrix<S>> xblocks, pre;
  Matrix<S> px_logits, x_hat;
};

template <typename S>
class UnifiedModel {
 public:
  UnifiedModel() = default;

  UnifiedModel(ModelConfig cfg, std::uint64_t init_seed, std::uint64_t gating_seed)
      : cfg_(std::move(cfg)), gating_seed_(gating_seed) {
    cfg_.validate();
    build_geometry();
    allocate();
    Rng rng(derive_seed(init_seed, "model-init"));
    init_params(rng);
    build_gates();
    seen_mask_.assign(size_t(cfg_.num_classes), 0);
  }

  const ModelConfig& config() const { return cfg_; }
  int hidden_units() const { return hidden_; }
  std::uint64_t gating_seed() const { return gating_seed_; }

  // --- seen-class bookkeeping -------------------------------------------
  void mark_seen(const std::vector<int>& classes) {
    for (int c : classes) {
      DGR_CHECK(c >= 0 && c < cfg_.num_classes, "mark_seen: class out of range");
      if (!seen_mask_[size_t(c)]) {
        seen_mask_[size_t(c)] = 1;
        seen_.push_back(c);
      }
    }
  }
  const std::vector<int>& seen_classes() const { return seen_; }
  bool is_seen(int c) const {
    return c >= 0 && c < cfg_.num_classes && seen_mask_[size_t(c)] != 0;
  }

  // --- parameters ---------------------------------------------------------
  ParamRefs<S> params() {
    ParamRefs<S> out;
    for (auto& [name, p] : named_params()) out.push_back(p);
    return out;
  }
  std::vector<std::pair<std::string, Param<S>*>> named_params() {
    std::vector<std::pair<std::string, Param<S>*>> out;
    for (size_t i = 0; i < enc_W_.size(); ++i) {
      out.emplace_back("enc.conv" + std::to_string(i) + ".W", &enc_W_[i]);
      out.emplace_back("enc.conv" + std::to_string(i) + ".b", &enc_b_[i]);
    }
    out.emplace_back("enc.mu.W", &mu_W_);
    out.emplace_back("enc.mu.b", &mu_b_);
    out.emplace_back("enc.logvar.W", &lv_W_);
    out.emplace_back("enc.logvar.b", &lv_b_);
    out.emplace_back("dec.fc.W", &dec_W_);
    out.emplace_back("dec.fc.b", &dec_b_);
    for (size_t i = 0; i < dect_W_.size(); ++i) {
      out.emplace_back("dec.convt" + std::to_string(i) + ".W", &dect_W_[i]);
      out.emplace_back("dec.convt" + std::to_string(i) + ".b", &dect_b_[i]);
    }
    out.emplace_back("clf.W", &clf_W_);
    out.emplace_back("clf.b", &clf_b_);
    out.emplace_back("prior.means", &prior_mean_);
    out.emplace_back("prior.logvars", &prior_lv_);
    return out;
  }
  Index param_count() {
    auto p = params();
    return dgr::param_count<S>(p);
  }

  // --- encoder ------------------------------------------------------------
  void encode(const Matrix<S>& x, EncodeState<S>& s) const {
    DGR_CHECK(x.rows() == Index(cfg_.input.size()), "encode: input feature size mismatch");
    const size_t n = enc_geom_.size();
    s.input = x;
    s.cols.resize(n);
    s.pre.resize(n);
    s.act.resize(n);
    const Matrix<S>* cur = &s.input;
    for (size_t i = 0; i < n; ++i) {
      conv_forward(enc_geom_[i], enc_W_[i], enc_b_[i], *cur, s.cols[i], s.pre[i]);
      relu(s.pre[i], s.act[i]);
      cur = &s.act[i];
    }
    dense_forward(mu_W_, mu_b_, *cur, s.mu);
    dense_forward(lv_W_, lv_b_, *cur, s.lv_raw);
    const S c = S(cfg_.logvar_clamp);
    s.lv = s.lv_raw.cwiseMax(-c).cwiseMin(c);
  }

  void encode_backward(const EncodeState<S>& s, const Matrix<S>& dmu, const Matrix<S>& dlv) {
    const S c = S(cfg_.logvar_clamp);
    Matrix<S> dlv_raw =
        ((s.lv_raw.array().abs() < c).template cast<S>() * dlv.array()).matrix();
    const size_t n = enc_geom_.size();
    const Matrix<S>& flat = n ? s.act[n - 1] : s.input;
    Matrix<S> dflat, tmp;
    dense_backward(mu_W_, mu_b_, flat, dmu, dflat);
    dense_backward(lv_W_, lv_b_, flat, dlv_raw, tmp);
    dflat += tmp;
    for (size_t i = n; i-- > 0;) {
      relu_backward(s.pre[i], dflat, tmp);
      conv_backward(enc_geom_[i], enc_W_[i], enc_b_[i], s.cols[i], tmp, dflat);
    }
  }

  // --- decoder ------------------------------------------------------------
  // class_ids empty -> ungated decode; otherwise every id must be seen.
  void decode(const Matrix<S>& z, const VectorI& class_ids, DecodeState<S>& s) const {
    DGR_CHECK(z.rows() == Index(cfg_.d_z), "decode: latent width mismatch");
    const bool gated = cfg_.gating && class_ids.size() > 0;
    if (class_ids.size() > 0) {
      DGR_CHECK(class_ids.size() == z.cols(), "decode: one class id per sample required");
      for (Index j = 0; j < class_ids.size(); ++j)
        if (!is_seen(class_ids[j]))
          throw Error("decode: class " + std::to_string(class_ids[j]) +
                      " has not been seen (bad replay label?)");
    }
    s.z = z;
    s.class_ids = class_ids;
    dense_forward(dec_W_, dec_b_, z, s.fc_pre);
    relu(s.fc_pre, s.hidden);
    if (gated) {
      s.gate.resize(hidden_, z.cols());
      for (Index j = 0; j < z.cols(); ++j) s.gate.col(j) = gates_.col(class_ids[j]);
      s.hidden.array() *= s.gate.array();
    } else {
      s.gate.resize(0, 0);
    }
    const size_t n = dect_geom_.size();
    s.xblocks.resize(n);
    s.pre.resize(n);
    const Matrix<S>* cur = &s.hidden;
    for (size_t i = 0; i < n; ++i) {
      convt_forward(dect_geom_[i], dect_W_[i], dect_b_[i], *cur, s.xblocks[i], s.pre[i]);
      if (i + 1 < n) {
        relu(s.pre[i], s.pre[i]);  // in place: backward only needs the sign
        cur = &s.pre[i];
      }
    }
    s.px_logits = s.pre[n - 1];
    sigmoid(s.px_logits, s.x_hat);
  }

  void decode_backward(const DecodeState<S>& s, const Matrix<S>& dpx_logits, Matrix<S>& dz) {
    const size_t n = dect_geom_.size();
    Matrix<S> d = dpx_logits, tmp;
    for (size_t i = n; i-- > 0;) {
      if (i + 1 < n) {
        relu_backward(s.pre[i], d, tmp);  // pre holds post-ReLU values; sign matches
        d.swap(tmp);
      }
      convt_backward(dect_geom_[i], dect_W_[i], dect_b_[i], s.xblocks[i], d, tmp);
      d.swap(tmp);
    }
    if (s.gate.size() > 0) d.array() *= s.gate.array();
    relu_backward(s.fc_pre, d, tmp);
    dense_backward(dec_W_, dec_b_, s.z, tmp, dz);
  }

  // --- classifier (consumes mu, never a sample) ----------------------------
  void classify(const Matrix<S>& mu, Matrix<S>& logits) const {
    dense_forward(clf_W_, clf_b_, mu, logits);
  }
  void classify_backward(const Matrix<S>& mu, const Matrix<S>& dlogits, Matrix<S>& dmu) {
    dense_backward(clf_W_, clf_b_, mu, dlogits, dmu);
  }
  // logits of classes outside `mask` (or unseen, if mask empty) -> -inf
  void mask_unseen(Matrix<S>& logits) const {
    const S ninf = -std::numeric_limits<S>::infinity();
    for (int c = 0; c < cfg_.num_classes; ++c)
      if (!seen_mask_[size_t(c)]) logits.row(c).setConstant(ninf);
  }

  // --- class-conditional prior ---------------------------------------------
  // KL( N(mu, e^{lv}) || N(m_c, e^{plv_c}) ) per sample; empty ids -> N(0, I).
  Vector<S> kl_values(const Matrix<S>& mu, const Matrix<S>& lv, const VectorI& class_ids) const {
    const Index B = mu.cols();
    const bool cond = class_ids.size() > 0;
    Vector<S> out(B);
    Vector<S> zero = Vector<S>::Zero(mu.rows());
    for (Index j = 0; j < B; ++j) {
      if (cond) check_seen(class_ids[j], "kl_conditional");
      Vector<S> m = cond ? Vector<S>(prior_mean_.v.col(class_ids[j])) : zero;
      Vector<S> plv = cond ? Vector<S>(prior_lv_.v.col(class_ids[j])) : zero;
      Array<S> d = mu.col(j).array() - m.array();
      Array<S> e = lv.col(j).array() - plv.array();
      out[j] = S(0.5) * (-e + e.exp() + d.square() * (-plv.array()).exp() - S(1)).sum();
    }
    return out;
  }

  // Accumulates w_j * dKL_j into dmu/dlv and into the prior parameter grads.
  void kl_backward(const Matrix<S>& mu, const Matrix<S>& lv, const VectorI& class_ids,
                   const Vector<S>& w, Matrix<S>& dmu, Matrix<S>& dlv) {
    const Index B = mu.cols();
    const bool cond = class_ids.size() > 0;
    Vector<S> zero = Vector<S>::Zero(mu.rows());
    for (Index j = 0; j < B; ++j) {
      Vector<S> m = cond ? Vector<S>(prior_mean_.v.col(class_ids[j])) : zero;
      Vector<S> plv = cond ? Vector<S>(prior_lv_.v.col(class_ids[j])) : zero;
      Array<S> inv_s2 = (-plv.array()).exp();
      Array<S> d = mu.col(j).array() - m.array();
      dmu.col(j).array() += w[j] * d * inv_s2;
      dlv.col(j).array() += w[j] * S(0.5) * ((lv.col(j).array() - plv.array()).exp() - S(1));
      if (cond) {
        const int c = class_ids[j];
        prior_mean_.g.col(c).array() -= w[j] * d * inv_s2;
        prior_lv_.g.col(c).array() +=
            w[j] * S(0.5) * (S(1) - (lv.col(j).array().exp() + d.square()) * inv_s2);
      }
    }
  }

  // z ~ N(m_c, e^{plv_c} I) via a reparameterized draw
  void sample_conditional(const VectorI& class_ids, const Matrix<S>& noise, Matrix<S>& z) const {
    DGR_CHECK(noise.rows() == Index(cfg_.d_z) && noise.cols() == class_ids.size(),
              "sample_conditional: noise must be [d_z, count]");
    z.resize(cfg_.d_z, class_ids.size());
    for (Index j = 0; j < class_ids.size(); ++j) {
      check_seen(class_ids[j], "sample_conditional");
      const int c = class_ids[j];
      z.col(j) = prior_mean_.v.col(c).array() +
                 (prior_lv_.v.col(c).array() * S(0.5)).exp() * noise.col(j).array();
    }
  }

  const Matrix<S>& gates() const { return gates_; }

  // --- checkpoint ----------------------------------------------------------
  void save(const std::string& path) {
    nlohmann::json header;
    header["format_version"] = 1;
    header["scalar_bytes"] = sizeof(S);
    header["byte_order"] = "little-endian";
    header["config"] = cfg_;
    header["gating_seed"] = gating_seed_;
    header["seen"] = seen_;
    nlohmann::json tensors = nlohmann::json::array();
    for (auto& [name, p] : named_params())
      tensors.push_back({{"name", name}, {"rows", p->v.rows()}, {"cols", p->v.cols()}});
    header["tensors"] = tensors;
    const std::string h = header.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open checkpoint for writing: " + path);
    f.write("DGRM", 4);
    std::uint64_t len = h.size();
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write(h.data(), std::streamsize(h.size()));
    for (auto& [name, p] : named_params())
      f.write(reinterpret_cast<const char*>(p->v.data()),
              std::streamsize(size_t(p->v.size()) * sizeof(S)));
    if (!f) throw Error("checkpoint write failed: " + path);
  }

  static UnifiedModel load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open checkpoint: " + path);
    char magic[4];
    if (!f.read(magic, 4) || std::string(magic, 4) != "DGRM")
      throw ParseError("not a model checkpoint (bad magic) in " + path, 0);
    std::uint64_t len = 0;
    if (!f.read(reinterpret_cast<char*>(&len), 8))
      throw ParseError("truncated checkpoint header in " + path, 4);
    std::string h(len, '\0');
    if (!f.read(h.data(), std::streamsize(len)))
      throw ParseError("truncated checkpoint header in " + path, 12);
    nlohmann::json header = nlohmann::json::parse(h);
    if (header.at("scalar_bytes").get<size_t>() != sizeof(S))
      throw Error("checkpoint scalar width mismatch: file has " +
                  std::to_string(header.at("scalar_bytes").get<size_t>()) +
                  "-byte scalars");
    ModelConfig cfg = header.at("config").get<ModelConfig>();
    UnifiedModel m(cfg, 0, header.at("gating_seed").get<std::uint64_t>());
    m.mark_seen(header.at("seen").get<std::vector<int>>());
    auto named = m.named_params();
    const auto& tensors = header.at("tensors");
    DGR_CHECK(tensors.size() == named.size(), "checkpoint tensor list mismatch");
    for (size_t i = 0; i < named.size(); ++i) {
      auto& [name, p] = named[i];
      const auto& t = tensors[i];
      if (t.at("name").get<std::string>() != name ||
          t.at("rows").get<Index>() != p->v.rows() ||
          t.at("cols").get<Index>() != p->v.cols())
        throw Error("checkpoint tensor '" + t.at("name").get<std::string>() +
                    "' does not match the architecture built from its config");
      if (!f.read(reinterpret_cast<char*>(p->v.data()),
                  std::streamsize(size_t(p->v.size()) * sizeof(S))))
        throw ParseError("truncated checkpoint payload in " + path, 0);
    }
    return m;
  }

 private:
  void check_seen(int c, const char* op) const {
    if (!is_seen(c))
      throw Error(std::string(op) + ": class " + std::to_string(c) + " has not been seen");
  }

  void build_geometry() {
    int h = cfg_.input.height, w = cfg_.input.width;
    int in_c = cfg_.input.channels;
    for (int ch : cfg_.channels) {
      ConvGeom g{in_c, h, w, ch, cfg_.kernel, cfg_.stride, cfg_.pad};
      enc_geom_.push_back(g);
      h = g.out_h();
      w = g.out_w();
      in_c = ch;
    }
    hidden_ = in_c * h * w;
    const size_t n = cfg_.channels.size();
    for (size_t i = 0; i < n; ++i) {
      const ConvGeom& mirror = enc_geom_[n - 1 - i];
      ConvTGeom g{mirror.out_c, mirror.out_h(), mirror.out_w(), mirror.in_c,
                  cfg_.kernel, cfg_.stride, cfg_.pad};
      DGR_CHECK(g.out_h() == mirror.in_h && g.out_w() == mirror.in_w,
                "decoder does not mirror encoder geometry");
      dect_geom_.push_back(g);
    }
  }

  void allocate() {
    const size_t n = enc_geom_.size();
    enc_W_.resize(n);
    enc_b_.resize(n);
    for (size_t i = 0; i < n; ++i) {
      enc_W_[i].resize(enc_geom_[i].out_c, enc_geom_[i].patch());
      enc_b_[i].resize(enc_geom_[i].out_c, 1);
    }
    mu_W_.resize(cfg_.d_z, hidden_);
    mu_b_.resize(cfg_.d_z, 1);
    lv_W_.resize(cfg_.d_z, hidden_);
    lv_b_.resize(cfg_.d_z, 1);
    dec_W_.resize(hidden_, cfg_.d_z);
    dec_b_.resize(hidden_, 1);
    dect_W_.resize(n);
    dect_b_.resize(n);
    for (size_t i = 0; i < n; ++i) {
      dect_W_[i].resize(dect_geom_[i].in_c, dect_geom_[i].out_c * cfg_.kernel * cfg_.kernel);
      dect_b_[i].resize(dect_geom_[i].out_c, 1);
    }
    clf_W_.resize(cfg_.num_classes, cfg_.d_z);
    clf_b_.resize(cfg_.num_classes, 1);
    prior_mean_.resize(cfg_.d_z, cfg_.num_classes);
    prior_lv_.resize(cfg_.d_z, cfg_.num_classes);
  }

  void init_params(Rng& rng) {
    for (size_t i = 0; i < enc_W_.size(); ++i)
      he_init(enc_W_[i], enc_geom_[i].patch(), rng);
    xavier_init(mu_W_, hidden_, rng);
    xavier_init(lv_W_, hidden_, rng);
    xavier_init(dec_W_, cfg_.d_z, rng);
    for (size_t i = 0; i < dect_W_.size(); ++i)
      he_init(dect_W_[i], dect_geom_[i].out_c * cfg_.kernel * cfg_.kernel, rng);
    xavier_init(clf_W_, cfg_.d_z, rng);
    Rng prior_rng(derive_seed(gating_seed_, "prior-init"));
    prior_rng.fill_normal(prior_mean_.v, cfg_.prior_mean_std);
    // prior log-vars start at zero (near-standard-normal mixture components)
  }

  void build_gates() {
    gates_.setOnes(hidden_, cfg_.num_classes);
    if (!cfg_.gating) return;
    const int keep = int(std::lround(cfg_.keep_fraction * hidden_));
    std::vector<int> idx(static_cast<size_t>(hidden_), 0);
    for (int c = 0; c < cfg_.num_classes; ++c) {
      for (int i = 0; i < hidden_; ++i) idx[size_t(i)] = i;
      Rng r(derive_seed(gating_seed_, "gating-mask", std::uint64_t(c)));
      r.shuffle(idx);
      gates_.col(c).setZero();
      for (int i = 0; i < keep; ++i) gates_(idx[size_t(i)], c) = S(1);
    }
  }

  ModelConfig cfg_;
  std::uint64_t gating_seed_ = 0;
  int hidden_ = 0;
  std::vector<ConvGeom> enc_geom_;
  std::vector<ConvTGeom> dect_geom_;
  std::vector<Param<S>> enc_W_, enc_b_;
  Param<S> mu_W_, mu_b_, lv_W_, lv_b_;
  Param<S> dec_W_, dec_b_;
  std::vector<Param<S>> dect_W_, dect_b_;
  Param<S> clf_W_, clf_b_;
  Param<S> prior_mean_, prior_lv_;
  Matrix<S> gates_;
  std::vector<int> seen_;
  std::vector<std::uint8_t> seen_mask_;
};

// Latents for a batch of class ids: conditional prior draw when the model has
// one, otherwise N(0, I).
template <typename S>
void draw_latents(const UnifiedModel<S>& m, const VectorI& class_ids, Rng& rng, Matrix<S>& z) {
  Matrix<S> noise(m.config().d_z, class_ids.size());
  rng.fill_normal(noise);
  if (m.config().conditional_prior)
    m.sample_conditional(class_ids, noise, z);
  else
    z = std::move(noise);
}

template <typename S>
void generate_images(const UnifiedModel<S>& m, const VectorI& class_ids, Rng& rng,
                     Matrix<S>& x_hat) {
  Matrix<S> z;
  draw_latents(m, class_ids, rng, z);
  DecodeState<S> ds;
  m.decode(z, m.config().gating ? class_ids : VectorI(), ds);
  x_hat = std::move(ds.x_hat);
}

}  // namespace dgr
