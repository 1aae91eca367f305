#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "vfikit/dataset.hpp"
#include "vfikit/errors.hpp"
#include "vfikit/io.hpp"
#include "vfikit/pipeline.hpp"
#include "vfikit/synth.hpp"

namespace fs = std::filesystem;
using namespace vfikit;

namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  return s;
}

Quad quad_from_arg(const std::string& arg, int index) {
  std::string manifest = arg;
  if (fs::is_directory(arg)) manifest = (fs::path(arg) / "manifest.txt").string();
  std::vector<QuadRecord> recs = read_manifest(manifest);
  if (index < 0 || index >= int(recs.size()))
    throw ContractError("quad index " + std::to_string(index) + " out of range; manifest has " +
                        std::to_string(recs.size()) + " rows");
  return load_quad(recs[std::size_t(index)], fs::path(manifest).parent_path().string());
}

Models models_from_checkpoint(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  Models m(0);
  restore_models(m, ck);
  return m;
}

std::string numbered(const std::string& path, std::size_t i) {
  fs::path p(path);
  fs::path out = p.parent_path() / (p.stem().string() + "_" + std::to_string(i) + p.extension().string());
  return out.string();
}

void write_text(const std::string& path, const std::string& text) {
  detail::atomic_write(path, text.data(), text.size());
}

void cmd_synth(const std::string& spec_path, int n, unsigned seed, int size,
               const std::string& difficulty, const std::string& out_dir, const CLI::App* cmd) {
  PipelineConfig cfg;
  if (!spec_path.empty()) cfg = PipelineConfig::from_json_file(spec_path);
  if (cmd->count("--n")) cfg.synth.count = n;
  if (cmd->count("--seed")) cfg.synth.seed = seed;
  if (cmd->count("--size")) cfg.synth.size = size;
  if (cmd->count("--difficulty")) cfg.synth.difficulty = difficulty_from_string(difficulty);
  cfg.manifest.clear();

  std::vector<Quad> quads =
      make_dataset(cfg.synth.count, cfg.synth.seed, cfg.synth.size, cfg.synth.difficulty);
  std::vector<QuadRecord> recs;
  recs.reserve(quads.size());
  for (std::size_t i = 0; i < quads.size(); ++i)
    recs.push_back(save_quad(quads[i], out_dir, "q" + std::to_string(i)));
  std::string manifest = (fs::path(out_dir) / "manifest.txt").string();
  write_manifest(recs, manifest);
  std::cout << "wrote " << quads.size() << " quads, manifest " << manifest << "\n";
}

void cmd_interpolate(const std::string& quad_arg, int index, const std::string& mode_str,
                     std::vector<float> ts, const std::string& checkpoint, const std::string& out) {
  PipelineConfig cfg;
  cfg.mode = mode_from_string(mode_str);
  Quad q = quad_from_arg(quad_arg, index);

  Models models(0);
  const Models* mp = nullptr;
  if (cfg.mode == Mode::Learned) {
    if (checkpoint.empty()) throw ContractError("learned mode needs --checkpoint");
    models = models_from_checkpoint(checkpoint);
    mp = &models;
  }
  if (ts.empty()) ts.push_back(0.5f);

  std::vector<Tensor> frames = interpolate_multi(q, cfg, mp, ts);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::string path = frames.size() == 1 ? out : numbered(out, i);
    write_image(tensor_to_image(frames[i]), path);
    std::cout << "t=" << ts[i] << " -> " << path << "\n";
  }
}

void cmd_train(const std::string& config_path, const std::string& out,
               const std::string& log_path) {
  PipelineConfig cfg = PipelineConfig::from_json_file(config_path);
  TrainResult result = train(cfg);
  save_checkpoint(result.checkpoint, out);
  if (!log_path.empty()) write_text(log_path, loss_log_tsv(result.log));
  if (!result.log.empty()) {
    const LossLogRow& first = result.log.front();
    const LossLogRow& last = result.log.back();
    std::cout << "steps " << result.log.size() << ", total " << first.total << " -> " << last.total
              << ", checkpoint " << out << "\n";
  } else {
    std::cout << "steps 0, checkpoint " << out << "\n";
  }
}

void cmd_eval(const std::string& dataset, const std::string& mode_str,
              const std::string& checkpoint, const std::string& report_path) {
  PipelineConfig cfg;
  if (fs::path(dataset).extension() == ".json") {
    cfg = PipelineConfig::from_json_file(dataset);
  } else {
    cfg.manifest = dataset;
  }
  cfg.mode = mode_from_string(mode_str);

  Models models(0);
  const Models* mp = nullptr;
  if (cfg.mode == Mode::Learned) {
    if (checkpoint.empty()) throw ContractError("learned mode needs --checkpoint");
    models = models_from_checkpoint(checkpoint);
    mp = &models;
  }

  std::vector<Quad> quads = load_dataset(cfg);
  EvalReport rep = evaluate(quads, cfg, mp);
  std::cout << report_table(rep);
  if (!report_path.empty()) write_text(report_path, report_json(rep));
}

void cmd_reverse_flow(const std::string& in, const std::string& out, bool oracle) {
  FlowField fwd = read_flo(in);
  FlowField rev;
  if (oracle) {
    rev = brute_force_reverse(fwd);
  } else {
    rev = reverse_flow(fwd).first;
  }
  write_flo(rev, out);
  std::cout << (oracle ? "oracle" : "splat") << " reversal -> " << out << "\n";
}

void cmd_viz(const std::string& in, const std::string& out) {
  write_image(flow_to_image(read_flo(in)), out);
  std::cout << "rendered " << in << " -> " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"video frame interpolation with quadratic per-pixel motion"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic quad dataset on disk");
  std::string sy_spec, sy_difficulty = "moderate", sy_out;
  int sy_n = 16, sy_size = 64;
  unsigned sy_seed = 1;
  synth->add_option("--spec", sy_spec, "config json providing the synth block");
  synth->add_option("--n", sy_n, "number of quads");
  synth->add_option("--seed", sy_seed, "generator seed");
  synth->add_option("--size", sy_size, "frame width and height");
  synth->add_option("--difficulty", sy_difficulty, "linear | moderate | occlusion");
  synth->add_option("--out", sy_out, "output directory")->required();
  synth->callback([&] { cmd_synth(sy_spec, sy_n, sy_seed, sy_size, sy_difficulty, sy_out, synth); });

  auto* interp = app.add_subcommand("interpolate", "interpolate frames for one quad");
  std::string in_quad, in_mode = "learned", in_ckpt, in_out;
  int in_index = 0;
  std::vector<float> in_ts;
  interp->add_option("--quad", in_quad, "manifest file or dataset directory")->required();
  interp->add_option("--index", in_index, "row in the manifest");
  interp->add_option("--mode", in_mode, "learned | analytic-baseline | gt-coeffs");
  interp->add_option("--t", in_ts, "interpolation times in (0,1), repeatable");
  interp->add_option("--checkpoint", in_ckpt, "weights for learned mode");
  interp->add_option("--out", in_out, "output image (.png/.ppm)")->required();
  interp->callback([&] { cmd_interpolate(in_quad, in_index, in_mode, in_ts, in_ckpt, in_out); });

  auto* tr = app.add_subcommand("train", "train the learned pipeline");
  std::string tr_config, tr_out, tr_log;
  tr->add_option("--config", tr_config, "pipeline config json")->required();
  tr->add_option("--out", tr_out, "checkpoint to write")->required();
  tr->add_option("--log", tr_log, "loss log tsv to write");
  tr->callback([&] { cmd_train(tr_config, tr_out, tr_log); });

  auto* ev = app.add_subcommand("eval", "score a dataset with psnr/ssim");
  std::string ev_data, ev_mode = "learned", ev_ckpt, ev_report;
  ev->add_option("--dataset", ev_data, "manifest file or config json")->required();
  ev->add_option("--mode", ev_mode, "learned | analytic-baseline | gt-coeffs");
  ev->add_option("--checkpoint", ev_ckpt, "weights for learned mode");
  ev->add_option("--report", ev_report, "json report to write");
  ev->callback([&] { cmd_eval(ev_data, ev_mode, ev_ckpt, ev_report); });

  auto* rf = app.add_subcommand("reverse-flow", "reverse a flow field's direction");
  std::string rf_in, rf_out;
  bool rf_oracle = false;
  rf->add_option("--in", rf_in, "input .flo")->required();
  rf->add_option("--out", rf_out, "output .flo")->required();
  rf->add_flag("--oracle", rf_oracle, "use the exhaustive reference instead of splatting");
  rf->callback([&] { cmd_reverse_flow(rf_in, rf_out, rf_oracle); });

  auto* vz = app.add_subcommand("viz", "render a flow field as a color wheel image");
  std::string vz_in, vz_out;
  vz->add_option("--in", vz_in, "input .flo")->required();
  vz->add_option("--out", vz_out, "output image")->required();
  vz->callback([&] { cmd_viz(vz_in, vz_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << e.error_class() << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
