#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "meshfit/driver.hpp"
#include "meshfit/errors.hpp"
#include "meshfit/graphnet.hpp"
#include "meshfit/losses.hpp"
#include "meshfit/mesh.hpp"
#include "meshfit/metrics.hpp"
#include "meshfit/refine.hpp"
#include "meshfit/sampler.hpp"

namespace {

using namespace meshfit;

int run_fit(const std::string& init_path, const std::string& target_path, FitConfig config,
            const std::string& mode, const std::string& encoder_path, bool uniform,
            bool normalize, const std::string& out_dir) {
  EncoderParams encoder;
  if (!encoder_path.empty()) {
    encoder = load_encoder(encoder_path);
    config.encoder = &encoder;
  }
  if (mode == "ptp") config.surface_loss = LossKind::ptp;
  config.uniform_split = uniform;

  const Mesh init = load_obj(init_path);
  Mesh target = load_obj(target_path);
  if (normalize) target = normalized_to_unit_cube(target);

  const FitTrace trace = fit_mesh(init, target, config);

  std::filesystem::create_directories(out_dir);
  save_obj(trace.final_mesh, out_dir + "/final.obj");
  write_fit_trace_csv(trace, out_dir + "/trace.csv");
  for (std::size_t i = 0; i < trace.splits.size(); ++i)
    write_split_report_csv(trace.splits[i], out_dir + "/split_" + std::to_string(i) + ".csv");
  {
    std::ofstream summary(out_dir + "/summary.csv");
    char buf[160];
    summary << "metric,value\n";
    std::snprintf(buf, sizeof(buf), "final_f1,%.17g\n", trace.final_f1);
    summary << buf;
    summary << "final_vertices," << trace.final_mesh.num_vertices() << '\n';
    summary << "final_faces," << trace.final_mesh.num_faces() << '\n';
  }
  std::printf("final_f1 %.4f vertices %d faces %d\n", trace.final_f1,
              trace.final_mesh.num_vertices(), trace.final_mesh.num_faces());
  return 0;
}

int run_toy2d(const std::string& loss, int points, int iters, int n_seeds, double lr,
              const std::string& out_path) {
  LossKind kind;
  if (loss == "vtp") kind = LossKind::vtp;
  else if (loss == "ptp") kind = LossKind::ptp;
  else if (loss == "pts") kind = LossKind::pts;
  else throw ConfigError("unknown loss '" + loss + "' (expected vtp|ptp|pts)");

  std::vector<seed_t> seeds;
  for (int s = 0; s < n_seeds; ++s) seeds.push_back(static_cast<seed_t>(s));
  const std::vector<double> ious = toy_square_triangle(kind, points, iters, lr, seeds);

  std::vector<std::tuple<std::string, int, seed_t, double>> rows;
  double mean = 0.0;
  for (std::size_t i = 0; i < ious.size(); ++i) {
    rows.emplace_back(loss, points, seeds[i], ious[i]);
    mean += ious[i];
  }
  mean /= static_cast<double>(ious.size());
  if (!out_path.empty()) write_toy_csv(rows, out_path);
  std::printf("loss %s n %d seeds %d mean_iou %.4f\n", loss.c_str(), points, n_seeds, mean);
  return 0;
}

int run_split(const std::string& in_path, double alpha, const std::string& out_path,
              const std::string& report_path) {
  const Mesh mesh = load_obj(in_path);
  SplitConfig config;
  config.alpha_degrees = alpha;
  const auto [result, report] = split_adaptive(mesh, config);
  save_obj(result, out_path);
  if (!report_path.empty()) write_split_report_csv(report, report_path);
  std::printf("split %zu of %d faces: %d -> %d vertices, %d -> %d faces\n",
              report.split_face_indices.size(), report.faces_before, report.vertices_before,
              report.vertices_after, report.faces_before, report.faces_after);
  return 0;
}

int run_metrics(const std::string& pred_path, const std::string& target_path, double tau,
                int samples, seed_t seed) {
  const Mesh pred = load_obj(pred_path);
  const Mesh target = load_obj(target_path);
  const seed_t eval_seed = derive_seed(seed, 31);
  const SampledPointSet pred_points = sample_surface(pred, samples, eval_seed);
  const SampledPointSet target_points = sample_surface(target, samples, eval_seed);
  const double f1 = f1_score(pred_points.positions, target_points.positions, tau);
  std::printf("metric,value,config\n");
  std::printf("f1,%.17g,tau=%.17g;samples=%d;seed=%llu\n", f1, tau, samples,
              static_cast<unsigned long long>(seed));
  return 0;
}

int run_gradcheck(const std::string& loss, int trials, double tol, seed_t seed) {
  std::vector<std::string> names;
  if (loss == "all")
    names = {"vtp", "ptp", "pts", "edge", "laplacian", "latent"};
  else
    names = {loss};
  bool ok = true;
  for (const auto& name : names) {
    const TrialReport report = run_gradient_trials(name, trials, seed);
    const bool pass = report.max_rel_error < tol;
    ok = ok && pass;
    std::printf("%-10s trials %d resampled %d max_rel_error %.3e %s\n", name.c_str(),
                report.trials, report.resampled, report.max_rel_error,
                pass ? "PASS" : "FAIL");
  }
  return ok ? 0 : 1;
}

int run_train_encoder(const std::string& out_path, int steps, double lr, seed_t seed) {
  const EncoderTrainReport report = train_toy_encoder(steps, lr, seed);
  save_encoder(report.encoder, out_path);
  std::printf("holdout_accuracy %.3f train_loss %.5f (%d train, %d holdout)\n",
              report.holdout_accuracy, report.final_train_loss, report.train_meshes,
              report.holdout_meshes);
  return 0;
}

int run_primitive(const std::string& kind, int subdiv, const std::string& out_path) {
  Mesh mesh;
  if (kind == "cube") mesh = make_cube();
  else if (kind == "sphere") mesh = make_ico_sphere(subdiv);
  else if (kind == "torus") mesh = make_torus();
  else if (kind == "square2d") mesh = make_square2d();
  else if (kind == "triangle2d") mesh = make_triangle2d();
  else throw ConfigError("unknown primitive '" + kind + "'");
  save_obj(mesh, out_path);
  std::printf("%s: %d vertices, %d faces -> %s\n", kind.c_str(), mesh.num_vertices(),
              mesh.num_faces(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable triangle-mesh fitting toolkit"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit an initial mesh to a target mesh");
  std::string init_path, target_path, mode = "pts", encoder_path, out_dir = "fit_out";
  FitConfig fit_config;
  std::vector<double> gammas;
  bool uniform = false, no_normalize = false;
  fit->add_option("--init", init_path, "Initial mesh OBJ")->required();
  fit->add_option("--target", target_path, "Target mesh OBJ")->required();
  fit->add_option("--stages", fit_config.stages, "Deform-split stages");
  fit->add_option("--iters", fit_config.iters_per_stage, "Iterations per stage");
  fit->add_option("--lr", fit_config.lr, "Learning rate");
  fit->add_option("--alpha", fit_config.split.alpha_degrees, "Split threshold in degrees");
  fit->add_option("--gammas", gammas, "Loss weights g1,g2,g3,g4")->delimiter(',')->expected(4);
  fit->add_option("--samples", fit_config.samples, "Surface samples per iteration");
  fit->add_option("--seed", fit_config.seed, "Master seed");
  fit->add_option("--mode", mode, "Surface loss after switch-over: ptp|pts")
      ->check(CLI::IsMember({"ptp", "pts"}));
  fit->add_option("--switch-iter", fit_config.switch_iter,
                  "Global iterations of ptp warmup (-1 = one stage)");
  fit->add_option("--encoder", encoder_path, "Encoder file for the latent term");
  fit->add_option("--out-dir", out_dir, "Output directory");
  fit->add_option("--eval-samples", fit_config.eval_samples, "Samples for the final F1");
  fit->add_option("--tau", fit_config.tau, "Squared-distance F1 threshold");
  fit->add_flag("--uniform-split", uniform, "Split every face instead of by curvature");
  fit->add_flag("--no-normalize", no_normalize, "Skip unit-cube normalization of the target");

  // toy2d
  auto* toy = app.add_subcommand("toy2d", "Square-to-triangle 2D loss study");
  std::string toy_loss;
  int toy_points = 50, toy_iters = 2000, toy_seeds = 20;
  double toy_lr = 0.01;
  std::string toy_out;
  toy->add_option("--loss", toy_loss, "vtp|ptp|pts")->required();
  toy->add_option("--points", toy_points, "Sample count n");
  toy->add_option("--iters", toy_iters, "Optimization iterations");
  toy->add_option("--seeds", toy_seeds, "Number of seeds (0..k-1)");
  toy->add_option("--lr", toy_lr, "Learning rate");
  toy->add_option("--out", toy_out, "CSV output path");

  // split
  auto* split = app.add_subcommand("split", "Curvature-adaptive face splitting");
  std::string split_in, split_out, split_report;
  double split_alpha = 70.0;
  split->add_option("--in", split_in, "Input OBJ")->required();
  split->add_option("--alpha", split_alpha, "Curvature threshold in degrees");
  split->add_option("--out", split_out, "Output OBJ")->required();
  split->add_option("--report", split_report, "CSV report path");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Sampled F1 between two meshes");
  std::string metrics_pred, metrics_target;
  double metrics_tau = 1e-4;
  int metrics_samples = 10000;
  seed_t metrics_seed = 0;
  metrics->add_option("--pred", metrics_pred, "Predicted mesh OBJ")->required();
  metrics->add_option("--target", metrics_target, "Target mesh OBJ")->required();
  metrics->add_option("--tau", metrics_tau, "Squared-distance threshold");
  metrics->add_option("--samples", metrics_samples, "Samples per surface");
  metrics->add_option("--seed", metrics_seed, "Sampling seed");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  std::string gc_loss;
  int gc_trials = 100;
  double gc_tol = 1e-4;
  seed_t gc_seed = 0;
  gradcheck->add_option("--loss", gc_loss, "vtp|ptp|pts|edge|laplacian|latent|all")->required();
  gradcheck->add_option("--trials", gc_trials, "Random configurations per loss");
  gradcheck->add_option("--tol", gc_tol, "Relative-error pass threshold");
  gradcheck->add_option("--seed", gc_seed, "Master seed");

  // train-encoder
  auto* train = app.add_subcommand("train-encoder", "Train the toy shape-family encoder");
  std::string train_out;
  int train_steps = 500;
  double train_lr = 0.05;
  seed_t train_seed = 0;
  train->add_option("--out", train_out, "Encoder output file")->required();
  train->add_option("--steps", train_steps, "Gradient-descent steps");
  train->add_option("--lr", train_lr, "Learning rate");
  train->add_option("--seed", train_seed, "Master seed");

  // primitive
  auto* primitive = app.add_subcommand("primitive", "Write a built-in mesh as OBJ");
  std::string prim_kind, prim_out;
  int prim_subdiv = 2;
  primitive->add_option("--kind", prim_kind, "cube|sphere|torus|square2d|triangle2d")
      ->required();
  primitive->add_option("--subdiv", prim_subdiv, "Sphere subdivision level");
  primitive->add_option("--out", prim_out, "Output OBJ path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      if (!gammas.empty()) {
        fit_config.weights = {gammas[0], gammas[1], gammas[2], gammas[3]};
      }
      return run_fit(init_path, target_path, fit_config, mode, encoder_path, uniform,
                     !no_normalize, out_dir);
    }
    if (toy->parsed()) return run_toy2d(toy_loss, toy_points, toy_iters, toy_seeds, toy_lr, toy_out);
    if (split->parsed()) return run_split(split_in, split_alpha, split_out, split_report);
    if (metrics->parsed())
      return run_metrics(metrics_pred, metrics_target, metrics_tau, metrics_samples,
                         metrics_seed);
    if (gradcheck->parsed()) return run_gradcheck(gc_loss, gc_trials, gc_tol, gc_seed);
    if (train->parsed()) return run_train_encoder(train_out, train_steps, train_lr, train_seed);
    if (primitive->parsed()) return run_primitive(prim_kind, prim_subdiv, prim_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
