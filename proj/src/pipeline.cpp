#include "vfikit/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "vfikit/dataset.hpp"
#include "vfikit/errors.hpp"
#include "vfikit/image.hpp"
#include "vfikit/metrics.hpp"
#include "vfikit/motion.hpp"
#include "vfikit/runtime.hpp"

namespace vfikit {
namespace {

using nlohmann::json;

std::array<FlowField, 3> to_array(const FlowField (&a)[3]) { return {a[0], a[1], a[2]}; }
std::array<OcclusionMap, 3> to_array(const OcclusionMap (&a)[3]) { return {a[0], a[1], a[2]}; }

Tensor pack_quad_input(const Quad& q) {
  return nme_pack_input(to_array(q.flow_fwd), to_array(q.flow_bwd), to_array(q.occ_fwd),
                        to_array(q.occ_bwd));
}

MotionCoeffs coeffs_for(const Quad& q, Mode mode, const Models* models) {
  switch (mode) {
    case Mode::GtCoeffs:
      if (!q.has_gt_coeffs)
        throw ContractError("quad from " + (q.source.empty() ? std::string("unknown source") : q.source) +
                            " carries no ground-truth motion coefficients");
      return q.gt;
    case Mode::AnalyticBaseline:
      return analytic_coeffs_full(q.flow_fwd[1], q.flow_bwd[0], q.flow_bwd[1], q.flow_fwd[2]);
    case Mode::Learned:
      if (!models) throw ContractError("learned mode requires model weights");
      return gridnet3d_forward(models->nme, pack_quad_input(q));
  }
  throw ContractError("unknown interpolation mode");
}

// Shared tail: coefficients -> intermediate flows -> (refinement, mask) ->
// frame. Outside learned mode refinement is the identity and the mask is a
// constant 0.5, so the math core runs without any network weights.
Tensor run_stage(const Tensor& i0, const Tensor& i1, Mode mode, const Models* models,
                 const MotionCoeffs& coeffs, float t, Tensor* out_fr0, Tensor* out_fr1,
                 Diagnostics* diag) {
  Tensor f0t = eval_quadratic_flow(coeffs, t, 0);
  Tensor f1t = eval_quadratic_flow(coeffs, t, 1);
  HoleMask h0, h1;
  Tensor f_t0 = reverse_flow(f0t, &h0);
  Tensor f_t1 = reverse_flow(f1t, &h1);

  Tensor fr_t0 = f_t0;
  Tensor fr_t1 = f_t1;
  Tensor mask;
  if (mode == Mode::Learned) {
    Tensor w0 = backward_warp(i0, f_t0);
    Tensor w1 = backward_warp(i1, f_t1);
    MRResult ref = mr_forward(models->mr, i0, i1, w0, w1, f_t0, f_t1);
    fr_t0 = apply_refinement(f_t0, ref.offsets0, ref.residuals0);
    fr_t1 = apply_refinement(f_t1, ref.offsets1, ref.residuals1);
    Tensor w0r = backward_warp(i0, fr_t0);
    Tensor w1r = backward_warp(i1, fr_t1);
    mask = bme_forward(models->bme, w0r, w1r, ref.features);
  } else {
    mask = Tensor::full({1, i0.shape()[1], i0.shape()[2]}, 0.5f);
  }
  Tensor frame = synthesize_frame(i0, i1, fr_t0, fr_t1, mask, t);

  if (out_fr0) *out_fr0 = fr_t0;
  if (out_fr1) *out_fr1 = fr_t1;
  if (diag) {
    diag->coeffs = {coeffs.alpha0.detached_copy(), coeffs.beta0.detached_copy(),
                    coeffs.alpha1.detached_copy(), coeffs.beta1.detached_copy()};
    diag->f_t0 = f_t0.detached_copy();
    diag->f_t1 = f_t1.detached_copy();
    diag->fr_t0 = fr_t0.detached_copy();
    diag->fr_t1 = fr_t1.detached_copy();
    diag->mask = mask.detached_copy();
    diag->holes_t0 = std::move(h0);
    diag->holes_t1 = std::move(h1);
  }
  return frame;
}

void require_time(float t) {
  if (!(t > 0.0f && t < 1.0f))
    throw ContractError("interpolation time must lie in (0,1), got " + std::to_string(t));
}

template <typename Getter>
void maybe(const json& j, const char* key, Getter&& get) {
  if (j.contains(key)) get(j.at(key));
}

}  // namespace

Mode mode_from_string(const std::string& s) {
  if (s == "learned") return Mode::Learned;
  if (s == "analytic-baseline") return Mode::AnalyticBaseline;
  if (s == "gt-coeffs") return Mode::GtCoeffs;
  throw ContractError("unknown mode '" + s + "' (expected learned | analytic-baseline | gt-coeffs)");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Learned: return "learned";
    case Mode::AnalyticBaseline: return "analytic-baseline";
    case Mode::GtCoeffs: return "gt-coeffs";
  }
  return "unknown";
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config is not valid json: ") + e.what());
  }
  PipelineConfig c;
  try {
    maybe(j, "mode", [&](const json& v) { c.mode = mode_from_string(v.get<std::string>()); });
    maybe(j, "model_seed", [&](const json& v) { c.model_seed = v.get<unsigned>(); });
    maybe(j, "t_values", [&](const json& v) { c.t_values = v.get<std::vector<float>>(); });
    maybe(j, "optimizer", [&](const json& o) {
      maybe(o, "lr", [&](const json& v) { c.adam.lr = v.get<float>(); });
      maybe(o, "beta1", [&](const json& v) { c.adam.beta1 = v.get<float>(); });
      maybe(o, "beta2", [&](const json& v) { c.adam.beta2 = v.get<float>(); });
      maybe(o, "eps", [&](const json& v) { c.adam.eps = v.get<float>(); });
    });
    maybe(j, "train", [&](const json& tr) {
      maybe(tr, "steps", [&](const json& v) { c.steps = v.get<int>(); });
      maybe(tr, "batch_size", [&](const json& v) { c.batch_size = v.get<int>(); });
      maybe(tr, "late_phase_step", [&](const json& v) { c.late_phase_step = v.get<int>(); });
      maybe(tr, "data_seed", [&](const json& v) { c.data_seed = v.get<unsigned>(); });
    });
    maybe(j, "weights", [&](const json& w) {
      maybe(w, "lambda_r", [&](const json& v) { c.weights.lambda_r = v.get<float>(); });
      maybe(w, "lambda_p", [&](const json& v) { c.weights.lambda_p = v.get<float>(); });
      maybe(w, "lambda_w", [&](const json& v) { c.weights.lambda_w = v.get<float>(); });
      maybe(w, "lambda_s", [&](const json& v) { c.weights.lambda_s = v.get<float>(); });
    });
    maybe(j, "data", [&](const json& d) {
      maybe(d, "manifest", [&](const json& v) { c.manifest = v.get<std::string>(); });
      maybe(d, "synth", [&](const json& s) {
        maybe(s, "count", [&](const json& v) { c.synth.count = v.get<int>(); });
        maybe(s, "seed", [&](const json& v) { c.synth.seed = v.get<unsigned>(); });
        maybe(s, "size", [&](const json& v) { c.synth.size = v.get<int>(); });
        maybe(s, "difficulty",
              [&](const json& v) { c.synth.difficulty = difficulty_from_string(v.get<std::string>()); });
      });
    });
  } catch (const json::exception& e) {
    throw FormatError(std::string("config field has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string PipelineConfig::to_json_text() const {
  json j;
  j["mode"] = to_string(mode);
  j["model_seed"] = model_seed;
  j["t_values"] = t_values;
  j["optimizer"] = {{"lr", adam.lr}, {"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}};
  j["train"] = {{"steps", steps},
                {"batch_size", batch_size},
                {"late_phase_step", late_phase_step},
                {"data_seed", data_seed}};
  j["weights"] = {{"lambda_r", weights.lambda_r},
                  {"lambda_p", weights.lambda_p},
                  {"lambda_w", weights.lambda_w},
                  {"lambda_s", weights.lambda_s}};
  j["data"] = {{"manifest", manifest},
               {"synth",
                {{"count", synth.count},
                 {"seed", synth.seed},
                 {"size", synth.size},
                 {"difficulty", to_string(synth.difficulty)}}}};
  return j.dump(2);
}

void PipelineConfig::validate() const {
  if (t_values.empty()) throw ContractError("config needs at least one t value");
  for (float t : t_values) require_time(t);
  if (steps < 0) throw ContractError("steps must be >= 0");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (late_phase_step < 0) throw ContractError("late_phase_step must be >= 0 (0 disables it)");
  if (adam.lr < 0) throw ContractError("optimizer lr must be non-negative");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1))
    throw ContractError("optimizer betas must lie in [0,1)");
  if (!(adam.eps > 0)) throw ContractError("optimizer eps must be positive");
  if (weights.lambda_r < 0 || weights.lambda_p < 0 || weights.lambda_w < 0 || weights.lambda_s < 0)
    throw ContractError("loss weights must be non-negative");
  if (manifest.empty()) {
    if (synth.count < 1) throw ContractError("synth count must be >= 1");
    if (synth.size < 8) throw ContractError("synth size must be >= 8");
    if (mode == Mode::Learned && synth.size % 4 != 0)
      throw ContractError("learned mode needs a frame size divisible by 4");
  }
}

Models::Models(unsigned seed)
    : nme(seed), mr(seed + 0x9e3779b9u), bme(seed + 0x85ebca6bu) {}

std::vector<std::pair<std::string, Tensor>> Models::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto append = [&](const char* prefix, std::vector<std::pair<std::string, Tensor>> list) {
    for (auto& [name, t] : list) out.emplace_back(prefix + name, std::move(t));
  };
  append("nme.", nme.named_parameters());
  append("mr.", mr.named_parameters());
  append("bme.", bme.named_parameters());
  return out;
}

Checkpoint make_checkpoint(const Models& models, const std::string& config_json, std::int64_t step,
                           const AdamState* opt) {
  Checkpoint ck;
  ck.step = step;
  ck.config_json = config_json;
  for (auto& [name, t] : models.named_parameters()) ck.params.emplace_back(name, t.detached_copy());
  if (opt) {
    if (opt->m.size() != ck.params.size() || opt->v.size() != ck.params.size())
      throw ContractError("optimizer state does not match the parameter list");
    ck.has_opt = true;
    ck.opt_step = opt->step;
    for (const Tensor& m : opt->m) ck.opt_m.push_back(m.detached_copy());
    for (const Tensor& v : opt->v) ck.opt_v.push_back(v.detached_copy());
  }
  return ck;
}

void restore_models(Models& models, const Checkpoint& ck) {
  std::unordered_map<std::string, const Tensor*> stored;
  for (const auto& [name, t] : ck.params) stored[name] = &t;
  std::size_t used = 0;
  for (auto& [name, param] : models.named_parameters()) {
    auto it = stored.find(name);
    if (it == stored.end()) throw FormatError("checkpoint is missing parameter " + name);
    const Tensor& src = *it->second;
    if (src.shape() != param.shape()) {
      std::ostringstream msg;
      msg << "checkpoint parameter " << name << " has " << src.numel() << " values, model expects "
          << param.numel();
      throw FormatError(msg.str());
    }
    std::memcpy(param.data(), src.data(), sizeof(float) * std::size_t(src.numel()));
    ++used;
  }
  if (used != stored.size())
    throw FormatError("checkpoint carries " + std::to_string(stored.size() - used) +
                      " parameters this model does not have");
}

Tensor interpolate(const Quad& quad, const PipelineConfig& cfg, const Models* models, float t,
                   Diagnostics* diag) {
  require_time(t);
  MotionCoeffs coeffs = coeffs_for(quad, cfg.mode, models);
  Tensor i0 = image_to_tensor(quad.frames[1]);
  Tensor i1 = image_to_tensor(quad.frames[2]);
  return run_stage(i0, i1, cfg.mode, models, coeffs, t, nullptr, nullptr, diag);
}

std::vector<Tensor> interpolate_multi(const Quad& quad, const PipelineConfig& cfg,
                                      const Models* models, const std::vector<float>& ts) {
  if (ts.empty()) throw ContractError("interpolate_multi needs at least one t value");
  for (float t : ts) require_time(t);
  MotionCoeffs coeffs = coeffs_for(quad, cfg.mode, models);
  Tensor i0 = image_to_tensor(quad.frames[1]);
  Tensor i1 = image_to_tensor(quad.frames[2]);
  std::vector<Tensor> out;
  out.reserve(ts.size());
  for (float t : ts)
    out.push_back(run_stage(i0, i1, cfg.mode, models, coeffs, t, nullptr, nullptr, nullptr));
  return out;
}

std::vector<Quad> load_dataset(const PipelineConfig& cfg) {
  if (!cfg.manifest.empty()) {
    std::vector<QuadRecord> recs = read_manifest(cfg.manifest);
    std::string base = std::filesystem::path(cfg.manifest).parent_path().string();
    std::vector<Quad> out;
    out.reserve(recs.size());
    for (const QuadRecord& r : recs) out.push_back(load_quad(r, base));
    return out;
  }
  return make_dataset(cfg.synth.count, cfg.synth.seed, cfg.synth.size, cfg.synth.difficulty);
}

std::string loss_log_tsv(const std::vector<LossLogRow>& rows) {
  std::ostringstream out;
  out << "step\tlambda_w\tlambda_s\tloss_r\tloss_p\tloss_w\tloss_s\ttotal\n";
  out << std::setprecision(9);
  for (const LossLogRow& r : rows)
    out << r.step << '\t' << r.lambda_w << '\t' << r.lambda_s << '\t' << r.loss_r << '\t' << r.loss_p
        << '\t' << r.loss_w << '\t' << r.loss_s << '\t' << r.total << '\n';
  return out.str();
}

TrainResult train(const PipelineConfig& cfg, Models& models) {
  PipelineConfig tc = cfg;
  tc.mode = Mode::Learned;
  tc.validate();

  std::vector<Quad> data = load_dataset(tc);
  if (data.empty()) throw ContractError("training set is empty");

  struct Sample {
    Tensor i0, i1, gt, packed;
    float t;
  };
  std::vector<Sample> samples;
  samples.reserve(data.size());
  for (const Quad& q : data) {
    if (q.gt_frame.data.empty())
      throw ContractError("training requires a reference frame for every quad");
    samples.push_back({image_to_tensor(q.frames[1]), image_to_tensor(q.frames[2]),
                       image_to_tensor(q.gt_frame), pack_quad_input(q), q.t});
  }

  auto named = models.named_parameters();
  std::vector<Tensor> params;
  params.reserve(named.size());
  for (auto& [name, p] : named) params.push_back(p);
  AdamState opt = adam_init(params);
  FeatureExtractor phi;

  std::mt19937 order_rng(tc.data_seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();  // forces a shuffle before the first draw
  auto draw = [&]() -> const Sample& {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), order_rng);
      cursor = 0;
    }
    return samples[order[cursor++]];
  };

  std::vector<LossLogRow> log;
  log.reserve(std::size_t(tc.steps));
  const float inv_batch = 1.0f / float(tc.batch_size);
  for (int step = 1; step <= tc.steps; ++step) {
    LossWeights w = tc.weights;
    if (tc.late_phase_step > 0 && step >= tc.late_phase_step) w.phase = LossWeights::Phase::Late;

    LossLogRow row;
    row.step = step;
    row.lambda_w = w.warp_weight();
    row.lambda_s = w.smooth_weight();
    for (int b = 0; b < tc.batch_size; ++b) {
      const Sample& s = draw();
      Tape tape;
      MotionCoeffs coeffs = gridnet3d_forward(models.nme, s.packed);
      Tensor fr0, fr1;
      Tensor frame = run_stage(s.i0, s.i1, Mode::Learned, &models, coeffs, s.t, &fr0, &fr1, nullptr);
      LossParts parts;
      parts.reconstruction = reconstruction_loss(frame, s.gt);
      parts.perceptual = perceptual_loss(frame, s.gt, phi);
      if (w.warp_weight() > 0) parts.warping = warping_loss(s.gt, s.i0, s.i1, fr0, fr1);
      if (w.smooth_weight() > 0) parts.smoothness = smoothness_loss(fr0, fr1);
      Tensor total = total_loss(parts, w);
      tape.backward(scale(total, inv_batch));
      row.loss_r += double(parts.reconstruction.item()) * inv_batch;
      row.loss_p += double(parts.perceptual.item()) * inv_batch;
      if (w.warp_weight() > 0) row.loss_w += double(parts.warping.item()) * inv_batch;
      if (w.smooth_weight() > 0) row.loss_s += double(parts.smoothness.item()) * inv_batch;
      row.total += double(total.item()) * inv_batch;
    }
    if (!std::isfinite(row.total)) {
      std::ostringstream msg;
      msg << "loss stopped being finite at step " << step << " (r=" << row.loss_r
          << " p=" << row.loss_p << " w=" << row.loss_w << " s=" << row.loss_s << ")";
      throw NumericError(msg.str());
    }
    adam_step(opt, params, tc.adam);
    for (Tensor& p : params) p.zero_grad();
    log.push_back(row);
  }

  TrainResult result;
  result.checkpoint = make_checkpoint(models, tc.to_json_text(), tc.steps, &opt);
  result.log = std::move(log);
  return result;
}

TrainResult train(const PipelineConfig& cfg) {
  Models models(cfg.model_seed);
  return train(cfg, models);
}

EvalReport evaluate(const std::vector<Quad>& quads, const PipelineConfig& cfg,
                    const Models* models) {
  if (quads.empty()) throw ContractError("evaluation set is empty");
  const int n = int(quads.size());
  const int nthreads = std::max(1, std::min(effective_threads(), n));

  EvalReport rep;
  rep.rows.resize(std::size_t(n));
  std::vector<std::exception_ptr> errors;
  errors.resize(std::size_t(nthreads));
  auto work = [&](int shard) {
    try {
      for (int i = shard; i < n; i += nthreads) {
        const Quad& q = quads[std::size_t(i)];
        if (q.gt_frame.data.empty())
          throw ContractError("quad " + std::to_string(i) + " has no reference frame to score against");
        Tensor frame = interpolate(q, cfg, models, q.t);
        Tensor gt = image_to_tensor(q.gt_frame);
        rep.rows[std::size_t(i)] = {i, psnr(frame, gt), ssim(frame, gt), q.source};
      }
    } catch (...) {
      errors[std::size_t(shard)] = std::current_exception();
    }
  };
  if (nthreads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthreads - 1));
    for (int s = 1; s < nthreads; ++s) pool.emplace_back(work, s);
    work(0);
    for (std::thread& th : pool) th.join();
  }
  for (std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  for (const EvalRow& r : rep.rows) {
    rep.mean_psnr += r.psnr_db;
    rep.mean_ssim += r.ssim_v;
  }
  rep.mean_psnr /= n;
  rep.mean_ssim /= n;
  return rep;
}

std::string report_table(const EvalReport& rep) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "index\tpsnr_db\tssim\tsource\n";
  for (const EvalRow& r : rep.rows)
    out << r.index << '\t' << r.psnr_db << '\t' << r.ssim_v << '\t' << r.source << '\n';
  out << "mean\t" << rep.mean_psnr << '\t' << rep.mean_ssim << "\t-\n";
  return out.str();
}

std::string report_json(const EvalReport& rep) {
  json rows = json::array();
  for (const EvalRow& r : rep.rows)
    rows.push_back({{"index", r.index}, {"psnr_db", r.psnr_db}, {"ssim", r.ssim_v}, {"source", r.source}});
  json j = {{"rows", rows}, {"mean_psnr_db", rep.mean_psnr}, {"mean_ssim", rep.mean_ssim}};
  return j.dump(2);
}

}  // namespace vfikit
