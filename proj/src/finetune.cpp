#include "protoprompt/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "protoprompt/error.hpp"
#include "protoprompt/npy.hpp"
#include "protoprompt/prompts.hpp"

namespace protoprompt {
namespace {

// A prototype as a linear combination of feature-map cells.
using CellWeights = std::vector<std::pair<std::size_t, double>>;

std::vector<CellWeights> prototype_weights(const FeatureMap& features, const BinaryMask& mask,
                                           const ProtoSegConfig& config, ClassIndex cls) {
  std::vector<CellWeights> out;
  if (!mask.any()) return out;
  const PoolingWindow window{std::min(config.window.rows, features.rows()),
                             std::min(config.window.cols, features.cols())};
  const BinaryMask at_features = resize(mask, features.shape(), Interpolation::kNearest);
  const double cells = static_cast<double>(window.rows) * window.cols;
  for (const auto& local : pool_local_prototypes(features, at_features, window, config.occupancy_threshold, cls)) {
    CellWeights w;
    for (int r = local.window->m * window.rows; r < (local.window->m + 1) * window.rows; ++r)
      for (int c = local.window->n * window.cols; c < (local.window->n + 1) * window.cols; ++c)
        w.emplace_back(static_cast<std::size_t>(r) * features.cols() + c, 1.0 / cells);
    out.push_back(std::move(w));
  }
  const auto fractions = area_fractions(mask, features.shape());
  double total = 0.0;
  for (double v : fractions) total += v;
  CellWeights global;
  for (std::size_t i = 0; i < fractions.size(); ++i)
    if (fractions[i] > 0.0) global.emplace_back(i, fractions[i] / total);
  out.push_back(std::move(global));
  return out;
}

// Per-class forward state needed for the backward pass.
struct ClassTape {
  std::vector<CellWeights> weights;
  std::vector<std::vector<double>> protos;  // L x D
  std::vector<double> proto_norms;
  std::vector<double> sims;   // L x N
  std::vector<double> soft;   // L x N
  std::vector<double> fused;  // N
};

ClassTape forward_class(const FeatureMap& proto_features, const BinaryMask& mask, const FeatureMap& query,
                        std::span<const double> query_norms, const ProtoSegConfig& config, ClassIndex cls) {
  ClassTape tape;
  const int dim = proto_features.dim();
  const std::size_t n = query.shape().area();
  tape.weights = prototype_weights(proto_features, mask, config, cls);
  tape.fused.assign(n, 0.0);
  if (tape.weights.empty()) return tape;
  const std::size_t count = tape.weights.size();
  const auto fv = proto_features.values();
  for (const auto& w : tape.weights) {
    std::vector<double> p(dim, 0.0);
    for (const auto& [cell, coef] : w)
      for (int d = 0; d < dim; ++d) p[d] += coef * fv[cell * dim + d];
    double norm = 0.0;
    for (double v : p) norm += v * v;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm)) fail(ErrorCode::kNonFiniteLoss, "non-finite prototype vector");
    require(norm > 0.0, "prototype has zero norm");
    tape.protos.push_back(std::move(p));
    tape.proto_norms.push_back(norm);
  }
  tape.sims.assign(count * n, 0.0);
  tape.soft.assign(count * n, 0.0);
  const auto qv = query.values();
  for (std::size_t j = 0; j < n; ++j) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < count; ++l) {
      double s = 0.0;
      if (query_norms[j] > 0.0) {
        double dot = 0.0;
        for (int d = 0; d < dim; ++d) dot += tape.protos[l][d] * qv[j * dim + d];
        s = config.alpha * dot / (tape.proto_norms[l] * query_norms[j]);
      }
      tape.sims[l * n + j] = s;
      peak = std::max(peak, s);
    }
    double z = 0.0;
    for (std::size_t l = 0; l < count; ++l) z += std::exp(tape.sims[l * n + j] - peak);
    double fused = 0.0;
    for (std::size_t l = 0; l < count; ++l) {
      const double w = std::exp(tape.sims[l * n + j] - peak) / z;
      tape.soft[l * n + j] = w;
      fused += w * tape.sims[l * n + j];
    }
    tape.fused[j] = fused;
  }
  return tape;
}

void backward_class(const ClassTape& tape, std::span<const double> d_fused, const FeatureMap& query,
                    std::span<const double> query_norms, double alpha, std::vector<double>& proto_grad,
                    std::vector<double>& query_grad) {
  if (tape.weights.empty()) return;
  const int dim = query.dim();
  const std::size_t n = query.shape().area();
  const auto qv = query.values();
  
  for (std::size_t l = 0; l < tape.weights.size(); ++l) {
    const auto& p = tape.protos[l];
    const double pn = tape.proto_norms[l];
    std::vector<double> dp(dim, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (query_norms[j] == 0.0 || d_fused[j] == 0.0) continue;
      const double s = tape.sims[l * n + j];
      const double ds = d_fused[j] * tape.soft[l * n + j] * (1.0 + s - tape.fused[j]);
      const double cosine = s / alpha;
      const double qn = query_norms[j];
      for (int d = 0; d < dim; ++d) {
        const double qhat = qv[j * dim + d] / qn;
        const double phat = p[d] / pn;
        dp[d] += ds * alpha * (qhat - cosine * phat) / pn;
        query_grad[j * dim + d] += ds * alpha * (phat - cosine * qhat) / qn;
      }
    }
    for (const auto& [cell, coef] : tape.weights[l])
      for (int d = 0; d < dim; ++d) proto_grad[cell * dim + d] += coef * dp[d];
  }
}

}  // namespace

TrainEpisode build_episode(const Image2D& image, const SuperpixelLabelMap& superpixels, int segment,
                           const AffineTransform& geometric, const IntensityTransform& intensity) {
  require(superpixels.shape() == image.shape(), "build_episode: superpixel map does not match the image");
  TrainEpisode ep;
  ep.support_image = image;
  ep.support_mask = superpixels.segment_mask(segment);
  ep.query = warp(intensity.apply(image), geometric, Interpolation::kBilinear);
  ep.query_truth = warp(ep.support_mask, geometric);
  ep.segment = segment;
  ep.geometric = geometric;
  ep.intensity = intensity;
  return ep;
}

TrainEpisode build_episode(const Image2D& image, const SuperpixelLabelMap& superpixels, std::mt19937_64& rng,
                           const AugmentConfig& config) {
  require(superpixels.num_segments >= 1, "build_episode: superpixel map has no segments");
  const int segment = std::uniform_int_distribution<int>(0, superpixels.num_segments - 1)(rng);
  const auto geometric = AffineTransform::random(rng, image.shape(), config);
  const auto intensity = IntensityTransform::random(rng, config);
  return build_episode(image, superpixels, segment, geometric, intensity);
}

double seg_loss(const ProbabilityMask& prediction, const BinaryMask& truth) {
  require(prediction.shape() == truth.shape(), "seg_loss: prediction " + to_string(prediction.shape()) +
                                                   " and truth " + to_string(truth.shape()) + " differ");
  const auto fg = prediction.foreground_plane();
  const auto bg = prediction.background_plane();
  const auto labels = truth.labels();
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    sum -= std::log(std::max(labels[i] ? fg[i] : bg[i], kProbabilityFloor));
  return sum / static_cast<double>(labels.size());
}

BinaryMask prediction_in_support_frame(const ProbabilityMask& query_prediction, const AffineTransform& geometric,
                                       double threshold) {
  return warp(threshold_mask(query_prediction, threshold), geometric.inverse());
}

double alignment_loss(const Image2D& support_image, const BinaryMask& pred_as_label, const BinaryMask& original_label,
                      const EncoderBackend& backend, const ProtoSegConfig& config) {
  require(pred_as_label.shape() == support_image.shape() && original_label.shape() == support_image.shape(),
          "alignment_loss: masks must match the support image");
  if (!pred_as_label.any()) {
    const std::size_t n = support_image.shape().area();
    return seg_loss(ProbabilityMask(support_image.rows(), support_image.cols(), std::vector<double>(n, 1.0),
                                    std::vector<double>(n, 0.0)),
                    original_label);
  }
  return seg_loss(coarse_segment(support_image, pred_as_label, support_image, backend, config), original_label);
}

TrainableStubEncoder::TrainableStubEncoder(StubEncoderOptions base, int rank, std::uint64_t adapter_seed)
    : base_(base), rank_(rank) {
  require(rank >= 1, "adapter rank must be >= 1");
  const int dim = base_.feature_dim();
  params_.assign(2 * static_cast<std::size_t>(rank) * dim, 0.0);
  std::mt19937_64 rng(adapter_seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (std::size_t i = 0; i < static_cast<std::size_t>(rank) * dim; ++i) params_[i] = normal(rng);
}

void TrainableStubEncoder::set_parameters(std::span<const double> params) {
  require(params.size() == params_.size(), "adapter parameter count mismatch: got " + std::to_string(params.size()) +
                                               ", expected " + std::to_string(params_.size()));
  params_.assign(params.begin(), params.end());
}

FeatureMap TrainableStubEncoder::adapt(const FeatureMap& base_features) const {
  const int dim = feature_dim();
  require(base_features.dim() == dim, "adapter: feature dimension mismatch");
  const double* a = params_.data();
  const double* b = a + static_cast<std::size_t>(rank_) * dim;
  const auto in = base_features.values();
  std::vector<double> out(in.begin(), in.end());
  std::vector<double> u(rank_);
  for (std::size_t cell = 0; cell < base_features.shape().area(); ++cell) {
    const double* f = in.data() + cell * dim;
    for (int k = 0; k < rank_; ++k) {
      double acc = 0.0;
      for (int d = 0; d < dim; ++d) acc += a[k * dim + d] * f[d];
      u[k] = acc;
    }
    for (int d = 0; d < dim; ++d) {
      double acc = 0.0;
      for (int k = 0; k < rank_; ++k) acc += b[d * rank_ + k] * u[k];
      out[cell * dim + d] += acc;
    }
  }
  if (!std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); }))
    fail(ErrorCode::kNonFiniteLoss, "adapter produced non-finite features");
  return FeatureMap(dim, base_features.rows(), base_features.cols(), std::move(out));
}

void TrainableStubEncoder::accumulate_gradient(const FeatureMap& base_features, std::span<const double> feature_grad,
                                               std::span<double> param_grad) const {
  const int dim = feature_dim();
  require(feature_grad.size() == base_features.values().size() && param_grad.size() == params_.size(),
          "adapter gradient: size mismatch");
  const double* a = params_.data();
  const double* b = a + static_cast<std::size_t>(rank_) * dim;
  double* ga = param_grad.data();
  double* gb = ga + static_cast<std::size_t>(rank_) * dim;
  const auto in = base_features.values();
  std::vector<double> u(rank_), v(rank_);
  for (std::size_t cell = 0; cell < base_features.shape().area(); ++cell) {
    const double* f = in.data() + cell * dim;
    const double* g = feature_grad.data() + cell * dim;
    for (int k = 0; k < rank_; ++k) {
      double au = 0.0, bv = 0.0;
      for (int d = 0; d < dim; ++d) {
        au += a[k * dim + d] * f[d];
        bv += b[d * rank_ + k] * g[d];
      }
      u[k] = au;
      v[k] = bv;
    }
    for (int d = 0; d < dim; ++d)
      for (int k = 0; k < rank_; ++k) {
        gb[d * rank_ + k] += g[d] * u[k];
        ga[k * dim + d] += v[k] * f[d];
      }
  }
}

PrototypeLossGradient prototype_loss_gradient(const FeatureMap& proto_features, const BinaryMask& proto_mask,
                                              const FeatureMap& query_features, const BinaryMask& truth,
                                              const ProtoSegConfig& config) {
  require(proto_features.dim() == query_features.dim(), "prototype_loss_gradient: feature dimensions differ");
  if (!proto_mask.any()) fail(ErrorCode::kEmptySupport, "prototype_loss_gradient: empty prototype mask");
  const int dim = query_features.dim();
  const Shape2D grid = query_features.shape();
  const Shape2D out = truth.shape();
  const std::size_t n = grid.area();

  std::vector<double> query_norms(n, 0.0);
  const auto qv = query_features.values();
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += qv[j * dim + d] * qv[j * dim + d];
    query_norms[j] = std::sqrt(s);
  }
  const auto fg_tape = forward_class(proto_features, proto_mask, query_features, query_norms, config,
                                     ClassIndex::kForeground);
  const auto bg_tape = forward_class(proto_features, proto_mask.complement(), query_features, query_norms, config,
                                     ClassIndex::kBackground);

  std::vector<double> pf(n), pb(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double peak = std::max(fg_tape.fused[j], bg_tape.fused[j]);
    const double ef = std::exp(fg_tape.fused[j] - peak), eb = std::exp(bg_tape.fused[j] - peak);
    pf[j] = ef / (ef + eb);
    pb[j] = eb / (ef + eb);
    if (!std::isfinite(pf[j]) || !std::isfinite(pb[j])) fail(ErrorCode::kNonFiniteLoss, "non-finite class scores");
  }
  auto up_f = resize_plane(pf, grid, out);
  auto up_b = resize_plane(pb, grid, out);
  for (std::size_t i = 0; i < up_f.size(); ++i) {
    const double s = up_f[i] + up_b[i];
    up_f[i] /= s;
    up_b[i] /= s;
  }

  PrototypeLossGradient result;
  const auto labels = truth.labels();
  const double scale = 1.0 / static_cast<double>(labels.size());
  std::vector<double> g_up_f(labels.size(), 0.0), g_up_b(labels.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = labels[i] ? up_f[i] : up_b[i];
    auto& g = labels[i] ? g_up_f[i] : g_up_b[i];
    if (p > kProbabilityFloor) {
      result.loss -= std::log(p);
      g = -scale / p;
    } else {
      result.loss -= std::log(kProbabilityFloor);
    }
  }
  result.loss *= scale;
  result.prediction = ProbabilityMask(out.rows, out.cols, std::move(up_b), std::move(up_f));

  const auto g_f = resize_plane_adjoint(g_up_f, grid, out);
  const auto g_b = resize_plane_adjoint(g_up_b, grid, out);
  std::vector<double> d_fg(n), d_bg(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double dz = (g_f[j] - g_b[j]) * pf[j] * pb[j];
    d_fg[j] = dz;
    d_bg[j] = -dz;
  }
  result.proto_grad.assign(proto_features.values().size(), 0.0);
  result.query_grad.assign(qv.size(), 0.0);
  backward_class(fg_tape, d_fg, query_features, query_norms, config.alpha, result.proto_grad,
                 result.query_grad);
  backward_class(bg_tape, d_bg, query_features, query_norms, config.alpha, result.proto_grad,
                 result.query_grad);
  return result;
}

EpisodeLoss episode_loss(const TrainEpisode& episode, const TrainableStubEncoder& encoder,
                         const ProtoSegConfig& config, double reg_weight, bool with_gradient) {
  const FeatureMap support_base = encoder.base().encode(episode.support_image);
  const FeatureMap query_base = encoder.base().encode(episode.query);
  const FeatureMap support = encoder.adapt(support_base);
  const FeatureMap query = encoder.adapt(query_base);

  auto forward = prototype_loss_gradient(support, episode.support_mask, query, episode.query_truth, config);
  const BinaryMask pred_label = prediction_in_support_frame(forward.prediction, episode.geometric);

  EpisodeLoss loss;
  loss.seg = forward.loss;
  std::optional<PrototypeLossGradient> reverse;
  if (pred_label.any()) {
    reverse = prototype_loss_gradient(support, pred_label, support, episode.support_mask, config);
    loss.reg = reverse->loss;
  } else {
    loss.reg = alignment_loss(episode.support_image, pred_label, episode.support_mask, encoder, config);
  }
  loss.total = loss.seg + reg_weight * loss.reg;
  if (!with_gradient) return loss;

  std::vector<double> d_support = std::move(forward.proto_grad);
  if (reverse) {
    for (std::size_t i = 0; i < d_support.size(); ++i)
      d_support[i] += reg_weight * (reverse->proto_grad[i] + reverse->query_grad[i]);
  }
  loss.gradient.assign(encoder.parameter_count(), 0.0);
  encoder.accumulate_gradient(support_base, d_support, loss.gradient);
  encoder.accumulate_gradient(query_base, forward.query_grad, loss.gradient);
  return loss;
}

void save_checkpoint(const std::filesystem::path& path, const AdapterCheckpoint& checkpoint) {
  nlohmann::json j;
  j["step"] = checkpoint.step;
  j["rank"] = checkpoint.rank;
  j["base"] = {{"feature_dim", checkpoint.base.feature_dim},
               {"patch_stride", checkpoint.base.patch_stride},
               {"seed", checkpoint.base.seed},
               {"bandwidth", checkpoint.base.bandwidth}};
  j["params"] = checkpoint.params;
  j["adam_m"] = checkpoint.adam_m;
  j["adam_v"] = checkpoint.adam_v;
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorCode::kIoError, "cannot write checkpoint " + tmp);
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

AdapterCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open checkpoint " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    AdapterCheckpoint ck;
    ck.step = j.at("step").get<int>();
    ck.rank = j.at("rank").get<int>();
    const auto& base = j.at("base");
    ck.base.feature_dim = base.at("feature_dim").get<int>();
    ck.base.patch_stride = base.at("patch_stride").get<int>();
    ck.base.seed = base.at("seed").get<std::uint64_t>();
    ck.base.bandwidth = base.at("bandwidth").get<double>();
    ck.params = j.at("params").get<std::vector<double>>();
    ck.adam_m = j.at("adam_m").get<std::vector<double>>();
    ck.adam_v = j.at("adam_v").get<std::vector<double>>();
    if (ck.adam_m.size() != ck.params.size() || ck.adam_v.size() != ck.params.size())
      fail(ErrorCode::kSchemaError, "checkpoint optimizer state does not match parameter count");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchemaError, "malformed checkpoint " + path.string() + ": " + e.what());
  }
}

TrainableStubEncoder encoder_from_checkpoint(const AdapterCheckpoint& checkpoint) {
  TrainableStubEncoder encoder(checkpoint.base, checkpoint.rank);
  encoder.set_parameters(checkpoint.params);
  return encoder;
}

namespace {

void write_npy_image(const std::filesystem::path& path, const Image2D& image) {
  npy::Array arr;
  arr.dtype = npy::DType::kFloat32;
  arr.shape = {static_cast<std::size_t>(image.rows()), static_cast<std::size_t>(image.cols()),
               static_cast<std::size_t>(image.channels())};
  arr.values.assign(image.pixels().begin(), image.pixels().end());
  npy::write(path, arr);
}

void write_npy_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  npy::Array arr;
  arr.dtype = npy::DType::kUInt8;
  arr.shape = {static_cast<std::size_t>(mask.rows()), static_cast<std::size_t>(mask.cols())};
  arr.values.assign(mask.labels().begin(), mask.labels().end());
  npy::write(path, arr);
}

std::filesystem::path dump_episode(const std::filesystem::path& dir, int step, std::size_t image_index,
                                   const TrainEpisode& ep, const EpisodeLoss& loss) {
  const auto out = dir / ("nonfinite_step" + std::to_string(step));
  std::filesystem::create_directories(out);
  write_npy_image(out / "support.npy", ep.support_image);
  write_npy_image(out / "query.npy", ep.query);
  write_npy_mask(out / "support_mask.npy", ep.support_mask);
  write_npy_mask(out / "query_truth.npy", ep.query_truth);
  nlohmann::json j;
  j["step"] = step;
  j["image_index"] = image_index;
  j["segment"] = ep.segment;
  j["geometric"] = {{"matrix", ep.geometric.matrix()}, {"offset", ep.geometric.offset()}};
  j["intensity"] = {{"gamma", ep.intensity.gamma},
                    {"noise_sigma", ep.intensity.noise_sigma},
                    {"noise_seed", ep.intensity.noise_seed}};
  j["l_seg"] = std::isfinite(loss.seg) ? nlohmann::json(loss.seg) : nlohmann::json(std::to_string(loss.seg));
  j["l_reg"] = std::isfinite(loss.reg) ? nlohmann::json(loss.reg) : nlohmann::json(std::to_string(loss.reg));
  std::ofstream(out / "episode.json") << j.dump(2) << '\n';
  return out;
}

}  // namespace

TrainReport train(const std::vector<TrainingImage>& images, TrainableStubEncoder& encoder, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& resume_from) {
  require(config.steps >= 1, "finetune: steps must be >= 1");
  require(config.learning_rate > 0.0, "finetune: learning_rate must be > 0");
  require(config.checkpoint_interval >= 1, "finetune: checkpoint_interval must be >= 1");
  require(config.reg_weight >= 0.0, "finetune: reg_weight must be >= 0");
  if (images.empty()) fail(ErrorCode::kEmptyDataset, "finetune: no training images");

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const std::size_t count = encoder.parameter_count();
  std::vector<double> m(count, 0.0), v(count, 0.0);
  int start = 1;
  if (resume_from) {
    const auto ck = load_checkpoint(*resume_from);
    if (ck.rank != encoder.rank() || ck.base.feature_dim != encoder.feature_dim() ||
        ck.params.size() != count) {
      fail(ErrorCode::kConfigError, "checkpoint " + resume_from->string() + " does not match the adapter shape");
    }
    encoder.set_parameters(ck.params);
    m = ck.adam_m;
    v = ck.adam_v;
    start = ck.step + 1;
  }

  std::filesystem::create_directories(config.output_dir);
  std::ofstream log(config.output_dir / "train_log.jsonl", resume_from ? std::ios::app : std::ios::trunc);
  if (!log) fail(ErrorCode::kIoError, "cannot open training log in " + config.output_dir.string());

  TrainReport report;
  if (resume_from) report.last_checkpoint = *resume_from;
  std::vector<double> params(encoder.parameters().begin(), encoder.parameters().end());
  for (int step = start; step <= config.steps; ++step) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(step)};
    std::mt19937_64 rng(seq);
    const std::size_t index = std::uniform_int_distribution<std::size_t>(0, images.size() - 1)(rng);
    const auto& item = images[index];
    const auto episode = build_episode(item.image, item.superpixels, rng, config.augment);
    EpisodeLoss loss;
    try {
      loss = episode_loss(episode, encoder, config.protoseg, config.reg_weight, true);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFiniteLoss) throw;
      loss.seg = loss.reg = loss.total = std::numeric_limits<double>::quiet_NaN();
    }

    bool finite = std::isfinite(loss.total) && loss.gradient.size() == count;
    for (double g : loss.gradient) finite = finite && std::isfinite(g);
    if (!finite) {
      const auto dump = dump_episode(config.output_dir, step, index, episode, loss);
      fail(ErrorCode::kNonFiniteLoss, "non-finite loss at step " + std::to_string(step) +
                                          "; episode written to " + dump.string());
    }

    const double c1 = 1.0 - std::pow(kBeta1, step), c2 = 1.0 - std::pow(kBeta2, step);
    for (std::size_t i = 0; i < count; ++i) {
      const double g = loss.gradient[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      params[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
    encoder.set_parameters(params);

    log << nlohmann::json{{"step", step}, {"l_seg", loss.seg}, {"l_reg", loss.reg}}.dump() << '\n';
    log.flush();
    report.history.push_back({step, loss.seg, loss.reg});

    if (step % config.checkpoint_interval == 0 || step == config.steps) {
      AdapterCheckpoint ck{step, encoder.rank(), encoder.base().options(), params, m, v};
      report.last_checkpoint = config.output_dir / ("adapter_step" + std::to_string(step) + ".json");
      save_checkpoint(report.last_checkpoint, ck);
    }
  }
  return report;
}

}  // namespace protoprompt
