// Command-line front end for the restoration pipeline:
//   correct        non-local Retinex illumination correction
//   restore        patch-wise blind restoration (full pipeline)
//   degrade        synthetic degradation (blur / illumination / noise)
//   eval           PSNR / SSIM / error-ratio metrics as CSV
//   shearlet-dump  per-subband coefficient rasters
//   grid-search    TGV weight-bound sweep maximizing PSNR against a truth

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "blindrestore/blindrestore.hpp"

namespace {

struct Options {
  br::AppConfig cfg;
  bool print_config = false;
};

void add_config_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", "configuration file (flat key=value lines)")
      ->check(CLI::ExistingFile)
      ->each([&opt](const std::string& path) { br::apply_config_file(opt.cfg, path); });
  for (const std::string& key : br::config_keys()) {
    cmd->add_option("--" + key, "config key " + key)
        ->each([&opt, key](const std::string& v) { br::apply_config_value(opt.cfg, key, v); });
  }
  cmd->add_flag("--print-config", opt.print_config,
                "print the effective configuration and exit");
  cmd->add_flag_callback("--noisy",
                         [&opt] { opt.cfg.restore.lambda = 0.1; },
                         "preset: shearlet weight for noisy inputs (lambda = 0.1)");
  cmd->add_flag_callback("--noise-free",
                         [&opt] { opt.cfg.restore.lambda = 0.01; },
                         "preset: shearlet weight for noise-free inputs (lambda = 0.01)");
}

void load_default_config(Options& opt) {
  if (const char* env = std::getenv("RESTORE_CONFIG")) {
    if (*env) br::apply_config_file(opt.cfg, env);
  }
}

bool handle_print_config(const Options& opt) {
  if (!opt.print_config) return false;
  std::cout << br::serialize_config(opt.cfg);
  return true;
}

void write_csv(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw br::IoError(tmp + ": cannot open for writing");
    out << contents;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw br::IoError(path + ": rename failed");
  }
}

br::BlurKernel kernel_from_flags(const std::string& kernel_file, double length, double angle,
                                 int size) {
  if (!kernel_file.empty()) {
    if (kernel_file == "identity") return br::BlurKernel::delta(1);
    bool renorm = false;
    br::BlurKernel k = br::load_kernel(kernel_file, &renorm);
    if (renorm) std::cerr << "note: kernel " << kernel_file << " renormalized to unit mass\n";
    return k;
  }
  return br::synth_motion_kernel(length, angle, size);
}

int run(int argc, char** argv) {
  CLI::App app{"blind restoration of unevenly illuminated, motion-blurred grayscale images"};
  app.require_subcommand(1);

  // ---- correct ----
  Options correct_opt;
  std::string in_path, out_path, illum_path, trace_path;
  auto* correct = app.add_subcommand("correct", "non-local Retinex illumination correction");
  correct->add_option("input", in_path, "input image (PGM/PNG grayscale)")->required();
  correct->add_option("output", out_path, "output image")->required();
  correct->add_option("--dump-illumination", illum_path, "write the illumination field");
  correct->add_option("--trace", trace_path, "write per-iteration objective CSV");
  add_config_flags(correct, correct_opt);

  // ---- restore ----
  Options restore_opt;
  std::string r_in, r_out, report_path, kernels_dir, r_trace_dir;
  auto* restore = app.add_subcommand("restore", "patch-wise blind restoration");
  restore->add_option("input", r_in, "input image")->required();
  restore->add_option("output", r_out, "output image")->required();
  restore->add_option("--report", report_path, "write the per-patch report file");
  restore->add_option("--kernels", kernels_dir, "directory for the kernel gallery");
  restore->add_option("--trace-dir", r_trace_dir, "directory for per-patch residual CSVs");
  add_config_flags(restore, restore_opt);

  // ---- degrade ----
  Options degrade_opt;
  std::string d_in, d_out, d_kernel_file;
  double d_length = 10.0, d_angle = 0.0, d_sigma = 0.0, d_min_level = 0.3;
  int d_kernel_size = 11;
  std::uint64_t d_seed = 0;
  std::string d_illum = "none";
  auto* degrade_cmd = app.add_subcommand("degrade", "synthesize a degraded image");
  degrade_cmd->add_option("input", d_in, "truth image")->required();
  degrade_cmd->add_option("output", d_out, "degraded output")->required();
  degrade_cmd->add_option("--kernel", d_kernel_file, "kernel file, or 'identity'");
  degrade_cmd->add_option("--kernel-length", d_length, "synthetic motion length (pixels)");
  degrade_cmd->add_option("--kernel-angle", d_angle, "synthetic motion angle (degrees)");
  degrade_cmd->add_option("--kernel-size", d_kernel_size, "synthetic kernel support (odd)");
  degrade_cmd->add_option("--illum", d_illum, "none|horizontal|vertical|gaussian");
  degrade_cmd->add_option("--min-level", d_min_level, "darkest illumination multiplier");
  degrade_cmd->add_option("--sigma", d_sigma, "additive Gaussian noise std");
  degrade_cmd->add_option("--seed", d_seed, "noise seed");
  std::string d_save_kernel;
  degrade_cmd->add_option("--save-kernel", d_save_kernel, "write the applied kernel to a file");
  add_config_flags(degrade_cmd, degrade_opt);

  // ---- eval ----
  Options eval_opt;
  std::string e_truth, e_candidate, e_csv, e_kernel_est, e_kernel_true;
  auto* eval_cmd = app.add_subcommand("eval", "metrics for (truth, candidate) pairs");
  eval_cmd->add_option("truth", e_truth, "ground-truth image")->required();
  eval_cmd->add_option("candidate", e_candidate, "image to evaluate")->required();
  eval_cmd->add_option("--kernel-est", e_kernel_est, "estimated kernel file");
  eval_cmd->add_option("--kernel-true", e_kernel_true, "true kernel file");
  eval_cmd->add_option("--csv", e_csv, "append the CSV row to this file");
  add_config_flags(eval_cmd, eval_opt);

  // ---- shearlet-dump ----
  Options dump_opt;
  std::string s_in, s_dir;
  auto* dump_cmd = app.add_subcommand("shearlet-dump", "write per-subband coefficient rasters");
  dump_cmd->add_option("input", s_in, "input image")->required();
  dump_cmd->add_option("outdir", s_dir, "output directory")->required();
  add_config_flags(dump_cmd, dump_opt);

  // ---- grid-search ----
  Options gs_opt;
  std::string g_in, g_truth, g_csv;
  int g_steps = 3;
  auto* gs_cmd = app.add_subcommand("grid-search", "sweep TGV bounds, maximize PSNR vs truth");
  gs_cmd->add_option("input", g_in, "degraded input image")->required();
  gs_cmd->add_option("--truth", g_truth, "ground-truth image")->required();
  gs_cmd->add_option("--steps", g_steps, "log-grid steps across [1e-3, 1e-2]");
  gs_cmd->add_option("--csv", g_csv, "write sweep results to this file");
  add_config_flags(gs_cmd, gs_opt);

  load_default_config(correct_opt);
  load_default_config(restore_opt);
  load_default_config(degrade_opt);
  load_default_config(eval_opt);
  load_default_config(dump_opt);
  load_default_config(gs_opt);

  app.parse(argc, argv);

  if (correct->parsed()) {
    Options& opt = correct_opt;
    if (handle_print_config(opt)) return 0;
    br::set_max_threads(opt.cfg.threads);
    const br::Image g = br::load_image(in_path);
    const br::RetinexResult res = br::correct_illumination(g, opt.cfg.retinex);
    br::save_image(res.reflectance, out_path, opt.cfg.save_bits);
    if (!illum_path.empty()) {
      br::Image l = res.illumination;
      br::save_image(clamp01(std::move(l)), illum_path, opt.cfg.save_bits);
    }
    if (!trace_path.empty()) {
      std::ostringstream os;
      os << "iteration,objective,max_rlog\n";
      os.precision(12);
      for (const auto& row : res.trace)
        os << row.iteration << "," << row.objective << "," << row.max_rlog << "\n";
      write_csv(trace_path, os.str());
    }
    std::cerr << "correct: " << res.iterations << " iterations\n";
    return 0;
  }

  if (restore->parsed()) {
    Options& opt = restore_opt;
    if (handle_print_config(opt)) return 0;
    br::set_max_threads(opt.cfg.threads);
    opt.cfg.restore.keep_trace = !r_trace_dir.empty();
    const br::Image g = br::load_image(r_in);
    const br::RestoreResult res = br::restore_image(g, opt.cfg.retinex, opt.cfg.restore);
    br::save_image(res.image, r_out, opt.cfg.save_bits);
    if (!kernels_dir.empty()) {
      std::filesystem::create_directories(kernels_dir);
      for (const auto& p : res.patches)
        br::save_kernel(p.kernel, kernels_dir + "/kernel_" + std::to_string(p.index) + ".txt");
    }
    if (!report_path.empty()) {
      std::ostringstream os;
      os << "patches " << res.grid.count() << " patch_size " << res.grid.patch_size << " overlap "
         << res.grid.overlap << "\n";
      for (const auto& p : res.patches)
        os << "patch " << p.index << " origin " << p.origin_y << " " << p.origin_x
           << " iterations " << p.iterations << " residual " << p.final_residual
           << " kernel_size " << p.kernel_size << "\n";
      write_csv(report_path, os.str());
    }
    if (!r_trace_dir.empty()) {
      std::filesystem::create_directories(r_trace_dir);
      for (std::size_t i = 0; i < res.traces.size(); ++i) {
        std::ostringstream os;
        os << "kernel_size,sweep,res_w,res_y,res_v,res_total,rel_change\n";
        os.precision(12);
        for (const auto& row : res.traces[i])
          os << row.kernel_size << "," << row.sweep << "," << row.res_w << "," << row.res_y << ","
             << row.res_v << "," << row.res_total << "," << row.rel_change << "\n";
        write_csv(r_trace_dir + "/patch_" + std::to_string(i) + ".csv", os.str());
      }
    }
    std::cerr << "restore: " << res.grid.count() << " patches\n";
    return 0;
  }

  if (degrade_cmd->parsed()) {
    Options& opt = degrade_opt;
    if (handle_print_config(opt)) return 0;
    const br::Image truth = br::load_image(d_in);
    br::DegradationSpec spec;
    spec.kernel = kernel_from_flags(d_kernel_file, d_length, d_angle, d_kernel_size);
    spec.min_level = d_min_level;
    spec.noise_sigma = d_sigma;
    spec.seed = d_seed;
    if (d_illum == "none")
      spec.illumination = br::IlluminationKind::None;
    else if (d_illum == "horizontal")
      spec.illumination = br::IlluminationKind::Horizontal;
    else if (d_illum == "vertical")
      spec.illumination = br::IlluminationKind::Vertical;
    else if (d_illum == "gaussian")
      spec.illumination = br::IlluminationKind::Gaussian;
    else
      throw br::ConfigError("degrade: unknown illumination kind '" + d_illum + "'");
    br::save_image(br::degrade(truth, spec), d_out, opt.cfg.save_bits);
    if (!d_save_kernel.empty()) br::save_kernel(spec.kernel, d_save_kernel);
    return 0;
  }

  if (eval_cmd->parsed()) {
    Options& opt = eval_opt;
    if (handle_print_config(opt)) return 0;
    br::set_max_threads(opt.cfg.threads);
    const br::Image truth = br::load_image(e_truth);
    const br::Image cand = br::load_image(e_candidate);
    std::ostringstream os;
    os.precision(10);
    os << e_truth << "," << e_candidate << "," << br::psnr(truth, cand) << ","
       << br::ssim(truth, cand);
    if (!e_kernel_est.empty() && !e_kernel_true.empty()) {
      const br::BlurKernel ke = br::load_kernel(e_kernel_est);
      const br::BlurKernel kt = br::load_kernel(e_kernel_true);
      const br::ErrorRatioResult er = br::error_ratio(truth, ke, kt, br::nonblind_metric_config());
      os << "," << er.value << (er.exact_recovery ? ",exact" : "");
    }
    os << "\n";
    if (e_csv.empty()) {
      std::cout << os.str();
    } else {
      std::ofstream f(e_csv, std::ios::app);
      if (!f) throw br::IoError(e_csv + ": cannot open for appending");
      f << os.str();
    }
    return 0;
  }

  if (dump_cmd->parsed()) {
    Options& opt = dump_opt;
    if (handle_print_config(opt)) return 0;
    const br::Image img = br::load_image(s_in);
    const br::ShearletSystem sys =
        br::build_system(img.width, img.height, opt.cfg.restore.levels, opt.cfg.restore.shears,
                         opt.cfg.restore.fan_size);
    const br::SubbandStack stack = br::dnst_forward(img, sys);
    std::filesystem::create_directories(s_dir);
    for (int b = 0; b < sys.subband_count(); ++b)
      br::save_subband(stack.bands[b], sys.info[b], b,
                       s_dir + "/subband_" + std::to_string(b) + ".sub");
    std::cerr << "shearlet-dump: " << sys.subband_count() << " subbands\n";
    return 0;
  }

  if (gs_cmd->parsed()) {
    Options& opt = gs_opt;
    if (handle_print_config(opt)) return 0;
    br::set_max_threads(opt.cfg.threads);
    const br::Image g = br::load_image(g_in);
    const br::Image truth = br::load_image(g_truth);
    if (g_steps < 2) throw br::ConfigError("grid-search: steps must be >= 2");
    std::vector<double> values;
    for (int i = 0; i < g_steps; ++i)
      values.push_back(std::pow(10.0, -3.0 + i * (1.0 / (g_steps - 1))));
    std::ostringstream os;
    os << "alpha_max,alpha_min,psnr\n";
    os.precision(10);
    double best_psnr = -1, best_max = 0, best_min = 0;
    for (double amax : values)
      for (double amin : values) {
        if (amin > amax) continue;
        br::RestoreConfig rc = opt.cfg.restore;
        rc.tgv.alpha0_max = rc.tgv.alpha1_max = amax;
        rc.tgv.alpha0_min = rc.tgv.alpha1_min = amin;
        const br::RestoreResult res = br::restore_image(g, opt.cfg.retinex, rc);
        const double p = br::psnr(res.image, truth);
        os << amax << "," << amin << "," << p << "\n";
        std::cerr << "grid-search: alpha_max=" << amax << " alpha_min=" << amin << " psnr=" << p
                  << "\n";
        if (p > best_psnr) {
          best_psnr = p;
          best_max = amax;
          best_min = amin;
        }
      }
    os << "best," << best_max << "," << best_min << "," << best_psnr << "\n";
    if (g_csv.empty())
      std::cout << os.str();
    else
      write_csv(g_csv, os.str());
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    CLI::App dummy;
    const int code = dummy.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const br::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const br::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const br::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
