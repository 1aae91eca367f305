#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vfikit/adam.hpp"
#include "vfikit/checkpoint.hpp"
#include "vfikit/losses.hpp"
#include "vfikit/nets.hpp"
#include "vfikit/synth.hpp"

namespace vfikit {

// How the quadratic motion coefficients are obtained. "Learned" runs the
// estimator plus refinement and mask networks; "AnalyticBaseline" solves the
// closed form from the four pair flows and blends with a constant 0.5 mask;
// "GtCoeffs" uses the generator's exact coefficients (synthetic quads only)
// with the same constant mask.
enum class Mode { Learned, AnalyticBaseline, GtCoeffs };
Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

struct SynthSpec {
  int count = 16;
  unsigned seed = 1;
  int size = 64;
  Difficulty difficulty = Difficulty::Moderate;
};

// Full run description. Serializes to JSON (schema in README) and is stored
// verbatim inside checkpoints so a weight file carries its own provenance.
struct PipelineConfig {
  Mode mode = Mode::Learned;
  unsigned model_seed = 1234;
  std::vector<float> t_values{0.5f};

  AdamConfig adam;
  int steps = 200;
  int batch_size = 4;
  int late_phase_step = 0;  // 0 = never; steps >= this use late weights
  unsigned data_seed = 7;
  LossWeights weights;

  std::string manifest;  // when set, data comes from disk instead of synth
  SynthSpec synth;

  static PipelineConfig from_json_text(const std::string& text);
  static PipelineConfig from_json_file(const std::string& path);
  std::string to_json_text() const;
  void validate() const;  // ContractError on out-of-range fields
};

// The three trainable networks plus a stable parameter naming scheme used by
// the optimizer and the checkpoint format.
struct Models {
  GridNet3D nme;
  GridNet2DMR mr;
  BMEHead bme;
  explicit Models(unsigned seed);
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
};

Checkpoint make_checkpoint(const Models& models, const std::string& config_json,
                           std::int64_t step, const AdamState* opt = nullptr);
// Copies checkpoint parameters into the models by name; every model parameter
// must be present with a matching shape (FormatError otherwise).
void restore_models(Models& models, const Checkpoint& ck);

// Everything interpolate computed on the way to the output frame. Feeding
// fr_t0 / fr_t1 / mask back into synthesize_frame reproduces the frame
// bit-exactly.
struct Diagnostics {
  MotionCoeffs coeffs;
  Tensor f_t0, f_t1;    // reversed flows t->0, t->1
  Tensor fr_t0, fr_t1;  // after refinement (same as f_* outside learned mode)
  Tensor mask;          // [1,H,W]
  HoleMask holes_t0, holes_t1;
};

// Interpolates one frame at time t in (0,1). models may be null outside
// learned mode. ContractError when the mode's inputs are missing (no ground
// truth coefficients, no models).
Tensor interpolate(const Quad& quad, const PipelineConfig& cfg, const Models* models, float t,
                   Diagnostics* diag = nullptr);
// One forward pass of the shared stages per t value, in the given order.
std::vector<Tensor> interpolate_multi(const Quad& quad, const PipelineConfig& cfg,
                                      const Models* models, const std::vector<float>& ts);

struct LossLogRow {
  int step = 0;
  float lambda_w = 0, lambda_s = 0;  // effective weights at this step
  double loss_r = 0, loss_p = 0, loss_w = 0, loss_s = 0, total = 0;
};
std::string loss_log_tsv(const std::vector<LossLogRow>& rows);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossLogRow> log;
};

// Runs cfg.steps Adam steps of the learned pipeline on the configured
// dataset. Deterministic for a fixed config. NumericError if the loss stops
// being finite.
TrainResult train(const PipelineConfig& cfg, Models& models);
TrainResult train(const PipelineConfig& cfg);

struct EvalRow {
  int index = 0;
  double psnr_db = 0, ssim_v = 0;
  std::string source;
};
struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_psnr = 0, mean_ssim = 0;
};

// Interpolates every quad at its own t and scores against its reference
// frame (ContractError if one is missing). Sharded across effective_threads()
// with index-stable row placement.
EvalReport evaluate(const std::vector<Quad>& quads, const PipelineConfig& cfg,
                    const Models* models);
std::string report_table(const EvalReport& rep);
std::string report_json(const EvalReport& rep);

// Synthetic set or manifest-driven set, per the config.
std::vector<Quad> load_dataset(const PipelineConfig& cfg);

}  // namespace vfikit
