#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "diffdraw/grad.hpp"
#include "diffdraw/imageio.hpp"
#include "diffdraw/optimize.hpp"

namespace diffdraw {

namespace {

// Flag values that parse but make no sense together.
class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kKinds{"point", "line", "bezier2", "bezier3", "crs"};
const std::vector<std::string> kLosses{"mse", "blurmse", "ssmse"};
const std::vector<std::string> kCompositions{"softor", "over", "smoothmax"};

PrimitiveKind parse_kind(const std::string& s) {
  const auto k = kind_from_name(s);
  if (!k) throw UsageError("unknown primitive kind '" + s + "'");
  return *k;
}

Composition parse_composition(const std::string& s, double tau) {
  if (s == "softor") return Composition::soft_or();
  if (s == "over") return Composition::over();
  if (s == "smoothmax") return Composition::smoothmax(tau);
  throw UsageError("unknown composition '" + s + "'");
}

LossSpec parse_loss(const std::string& s, double blur_sigma, int octaves, int intervals) {
  LossSpec spec;
  if (s == "mse") {
    spec.kind = LossSpec::Kind::MSE;
  } else if (s == "blurmse") {
    spec.kind = LossSpec::Kind::BlurMSE;
  } else if (s == "ssmse") {
    spec.kind = LossSpec::Kind::SSMSE;
  } else {
    throw UsageError("unknown loss '" + s + "'");
  }
  spec.blur_sigma = blur_sigma;
  spec.octaves = octaves;
  spec.intervals = intervals;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return spec;
}

// "polyline:S" or "recursive:I:S"
CurveMethod parse_method(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  auto num = [&](const std::string& t) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != t.size() || v < 1) throw UsageError("bad curve method '" + s + "'");
    return v;
  };
  if (parts.size() == 2 && parts[0] == "polyline") return CurveMethod::polyline(num(parts[1]));
  if (parts.size() == 3 && parts[0] == "recursive") return CurveMethod::recursive(num(parts[1]), num(parts[2]));
  throw UsageError("bad curve method '" + s + "' (expected polyline:S or recursive:I:S)");
}

std::string method_name(const CurveMethod& m) {
  if (m.kind == CurveMethod::Kind::Polyline) return "polyline:" + std::to_string(m.segments);
  return "recursive:" + std::to_string(m.iters) + ":" + std::to_string(m.slices);
}

double sigma2_for_thickness(double thickness) {
  const double s = sigma_from_thickness(thickness);
  return s * s;
}

struct OptimizeArgs {
  std::string target;
  std::string kind = "line";
  int count = 100;
  std::string loss = "blurmse";
  double blur_sigma = 1.0;
  int octaves = 5;
  int intervals = 1;
  int iters = 500;
  double lr = 0.01;
  double thickness = 1.0;
  std::string composition;
  double tau = 0.1;
  std::uint64_t seed = 0;
  bool learn_sigma = false;
  bool color = false;
  std::string curve_method = "polyline:10";
  int log_every = 50;
  int threads = 1;
  std::string out_scene = "fit.json";
  std::string out_image = "fit.png";
  std::string out_csv = "fit_loss.csv";
  std::string out_svg = "fit.svg";
};

struct RenderArgs {
  std::string scene;
  std::string out;
  bool hard = false;
  bool svg = false;
  std::string curve_method = "polyline:10";
  int threads = 1;
};

struct GradcheckArgs {
  std::string kind = "line";
  std::string composition = "softor";
  std::string loss = "mse";
  std::uint64_t seed = 0;
  double h = 1e-4;
  bool all = false;
  bool color = false;
  std::string curve_method = "polyline:10";
};

struct BenchArgs {
  int count = 100;
  int size = 64;
  std::string kind = "line";
  std::string curve_method;
  std::uint64_t seed = 0;
  int threads = 1;
  int repeats = 3;
};

int cmd_optimize(const OptimizeArgs& a, bool tau_given, std::ostream& out) {
  std::string comp_name = a.composition.empty() ? (a.color ? "over" : "softor") : a.composition;
  if (tau_given && comp_name != "smoothmax") throw UsageError("--tau only applies to --composition smoothmax");
  const PrimitiveKind kind = parse_kind(a.kind);
  const Composition comp = parse_composition(comp_name, a.tau);
  const LossSpec loss = parse_loss(a.loss, a.blur_sigma, a.octaves, a.intervals);
  const CurveMethod method = parse_method(a.curve_method);
  if (!(a.thickness > 0.0)) throw UsageError("--thickness must be > 0");

  std::vector<Raster> target = load_image(a.target);
  if (a.color) {
    if (target.size() == 1) target = {target[0], target[0], target[0]};
  } else {
    target = {to_luma(target)};
  }
  const Canvas canvas = target[0].canvas();

  InitOptions init;
  init.sigma2 = sigma2_for_thickness(a.thickness);
  init.color = a.color;
  const Scene start = init_scene(kind, a.count, canvas, a.seed, comp, init);

  FitConfig cfg;
  cfg.iterations = a.iters;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  cfg.learn_sigma = a.learn_sigma;
  cfg.learn_color = a.color;
  cfg.loss = loss;
  cfg.method = method;
  cfg.log_every = a.log_every;
  cfg.threads = a.threads;
  cfg.log = &out;
  const FitResult r = fit(start, target, cfg);

  save_scene(r.scene, a.out_scene);
  save_image(r.image, a.out_image);
  export_svg(r.scene, a.out_svg);
  std::ofstream csv(a.out_csv);
  if (!csv) throw IoError("cannot write " + a.out_csv);
  csv << "iter,loss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.history.size(); ++i) csv << i << ',' << r.history[i] << '\n';
  if (!csv) throw IoError("write failed: " + a.out_csv);

  out << "initial_loss=" << r.history.front() << " final_loss=" << r.history.back() << '\n';
  out << "wrote " << a.out_scene << ' ' << a.out_image << ' ' << a.out_svg << ' ' << a.out_csv << '\n';
  return kExitOk;
}

int cmd_render(const RenderArgs& a, std::ostream& out) {
  const CurveMethod method = parse_method(a.curve_method);
  const Scene scene = load_scene(a.scene);
  if (a.hard) {
    // Binary union of the thresholded primitives.
    Raster img(scene.canvas);
    for (const auto& p : scene.primitives) {
      const Raster r = raster_hard(p, scene.canvas, 0.5, method);
      for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::max(img[i], r[i]);
    }
    save_image(img, a.out);
  } else {
    save_image(render(scene, {method, a.threads}), a.out);
  }
  out << "wrote " << a.out << '\n';
  if (a.svg) {
    std::filesystem::path svg = a.out;
    svg.replace_extension(".svg");
    export_svg(scene, svg);
    out << "wrote " << svg.string() << '\n';
  }
  return kExitOk;
}

double run_gradcheck(const std::string& kind, const std::string& comp, const std::string& loss, bool color,
                     const GradcheckArgs& a, std::ostream& out) {
  const Canvas canvas(32, 32);
  const Composition composition = parse_composition(comp, 0.1);
  const LossSpec spec = parse_loss(loss, 1.0, 3, 1);
  const CurveMethod method = parse_method(a.curve_method);
  const PrimitiveKind k = parse_kind(kind);
  const Scene scene = gradcheck_scene(k, 8, canvas, composition, color, a.seed);
  const Scene other = gradcheck_scene(k, 8, canvas, composition, color, a.seed + 7919);
  const auto target = render(other, {method, 1});
  const GradCheckReport rep = grad_check(scene, target, spec, a.h, {method, 1});
  out << "kind=" << kind << " composition=" << comp << " loss=" << loss << (color ? " color" : "")
      << " params=" << rep.entries.size() << " underflowed=" << rep.underflowed
      << " max_rel_error=" << std::scientific << std::setprecision(3) << rep.max_rel_error << std::defaultfloat
      << '\n';
  return rep.max_rel_error;
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  double worst = 0.0;
  if (a.all) {
    for (const auto& k : kKinds) {
      for (const auto& c : kCompositions) {
        for (const auto& l : kLosses) worst = std::max(worst, run_gradcheck(k, c, l, a.color, a, out));
      }
    }
  } else {
    worst = run_gradcheck(a.kind, a.composition, a.loss, a.color, a, out);
  }
  const bool ok = worst <= 1e-3;
  out << "max_rel_error=" << std::scientific << std::setprecision(3) << worst << std::defaultfloat
      << (ok ? " PASS" : " FAIL") << '\n';
  return ok ? kExitOk : kExitRuntime;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.count < 1 || a.size < 1 || a.repeats < 1) throw UsageError("--count, --size and --repeats must be >= 1");
  const PrimitiveKind kind = parse_kind(a.kind);
  std::vector<CurveMethod> methods;
  if (!a.curve_method.empty()) {
    methods.push_back(parse_method(a.curve_method));
  } else if (is_curve(kind)) {
    methods = {CurveMethod::polyline(10), CurveMethod::recursive(3, 16)};
  } else {
    methods = {CurveMethod{}};
  }
  const Canvas canvas(a.size, a.size);
  const Scene scene = init_scene(kind, a.count, canvas, a.seed);
  const Scene other = init_scene(kind, a.count, canvas, a.seed + 1);
  using Clock = std::chrono::steady_clock;
  auto ms = [](Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

  out << std::left << std::setw(8) << "kind" << std::setw(18) << "method" << std::setw(8) << "count" << std::setw(8)
      << "size" << std::setw(12) << "render_ms" << std::setw(14) << "backward_ms" << "field_bytes\n";
  for (const auto& m : methods) {
    const RenderOptions opts{m, a.threads};
    const auto target = render(other, opts);
    double render_ms = 1e300;
    double backward_ms = 1e300;
    for (int r = 0; r < a.repeats; ++r) {
      auto t0 = Clock::now();
      (void)render(scene, opts);
      auto t1 = Clock::now();
      (void)backward(scene, target, LossSpec::mse(), opts);
      auto t2 = Clock::now();
      render_ms = std::min(render_ms, ms(t1 - t0));
      backward_ms = std::min(backward_ms, ms(t2 - t1));
    }
    out << std::left << std::setw(8) << a.kind << std::setw(18) << method_name(m) << std::setw(8) << a.count
        << std::setw(8) << a.size << std::setw(12) << std::fixed << std::setprecision(3) << render_ms << std::setw(14)
        << backward_ms << std::defaultfloat << field_memory_bytes(scene, opts) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentiable rasterizer: fit vector primitives to raster images", "diffdraw"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);

  OptimizeArgs oa;
  auto* opt = app.add_subcommand("optimize", "Fit random primitives to a target image with Adam");
  opt->add_option("target", oa.target, "Target image (.png, .pgm, .ppm)")->required();
  opt->add_option("--kind", oa.kind, "Primitive kind")->check(CLI::IsMember(kKinds))->capture_default_str();
  opt->add_option("--count", oa.count, "Number of primitives")->check(CLI::PositiveNumber)->capture_default_str();
  opt->add_option("--loss", oa.loss, "Loss function")->check(CLI::IsMember(kLosses))->capture_default_str();
  opt->add_option("--blur-sigma", oa.blur_sigma, "Gaussian sigma for blurmse (px)")->capture_default_str();
  opt->add_option("--octaves", oa.octaves, "Scale-space octaves for ssmse")->capture_default_str();
  opt->add_option("--intervals", oa.intervals, "Scale-space intervals per octave for ssmse")->capture_default_str();
  opt->add_option("--iters", oa.iters, "Adam iterations")->check(CLI::PositiveNumber)->capture_default_str();
  opt->add_option("--lr", oa.lr, "Adam learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  opt->add_option("--thickness", oa.thickness, "Initial stroke thickness (px)")->capture_default_str();
  opt->add_option("--composition", oa.composition, "Layer composition (default softor, or over with --color)")
      ->check(CLI::IsMember(kCompositions));
  auto* tau_opt = opt->add_option("--tau", oa.tau, "Smoothmax temperature")->capture_default_str();
  opt->add_option("--seed", oa.seed, "Initialisation seed")->capture_default_str();
  opt->add_flag("--learn-sigma", oa.learn_sigma, "Also optimise stroke width");
  opt->add_flag("--color", oa.color, "Fit RGB with learnable per-primitive colour");
  opt->add_option("--curve-method", oa.curve_method, "Curve distance: polyline:S or recursive:I:S")
      ->capture_default_str();
  opt->add_option("--log-every", oa.log_every, "Progress line interval (0 disables)")->capture_default_str();
  opt->add_option("--threads", oa.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  opt->add_option("--out-scene", oa.out_scene, "Fitted scene file")->capture_default_str();
  opt->add_option("--out-image", oa.out_image, "Rendered fitted image")->capture_default_str();
  opt->add_option("--out-csv", oa.out_csv, "Loss history CSV (iter,loss)")->capture_default_str();
  opt->add_option("--out-svg", oa.out_svg, "SVG export of the fitted scene")->capture_default_str();

  RenderArgs ra;
  auto* ren = app.add_subcommand("render", "Render a scene file to an image");
  ren->add_option("scene", ra.scene, "Scene file")->required();
  ren->add_option("output", ra.out, "Output image (.png, .pgm, .ppm)")->required();
  ren->add_flag("--hard", ra.hard, "Binary threshold render (squared distance below 0.5)");
  ren->add_flag("--svg", ra.svg, "Also write an SVG next to the output");
  ren->add_option("--curve-method", ra.curve_method, "Curve distance: polyline:S or recursive:I:S")
      ->capture_default_str();
  ren->add_option("--threads", ra.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  GradcheckArgs ga;
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gc->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  gc->add_option("--kind", ga.kind, "Primitive kind")->check(CLI::IsMember(kKinds))->capture_default_str();
  gc->add_option("--composition", ga.composition, "Layer composition")
      ->check(CLI::IsMember(kCompositions))
      ->capture_default_str();
  gc->add_option("--loss", ga.loss, "Loss function")->check(CLI::IsMember(kLosses))->capture_default_str();
  gc->add_option("--seed", ga.seed, "Scene seed")->capture_default_str();
  gc->add_option("--h", ga.h, "Finite-difference step")->check(CLI::PositiveNumber)->capture_default_str();
  gc->add_option("--curve-method", ga.curve_method, "Curve distance: polyline:S or recursive:I:S")
      ->capture_default_str();
  gc->add_flag("--color", ga.color, "Give primitives colours (checks colour gradients)");
  gc->add_flag("--all", ga.all, "Sweep every kind x composition x loss");

  BenchArgs ba;
  auto* be = app.add_subcommand("bench", "Time render and backward passes");
  be->add_option("--count", ba.count, "Number of primitives")->capture_default_str();
  be->add_option("--size", ba.size, "Square canvas side (px)")->capture_default_str();
  be->add_option("--kind", ba.kind, "Primitive kind")->check(CLI::IsMember(kKinds))->capture_default_str();
  be->add_option("--curve-method", ba.curve_method,
                 "Curve distance: polyline:S or recursive:I:S (default: compare both for curves)");
  be->add_option("--seed", ba.seed, "Scene seed")->capture_default_str();
  be->add_option("--threads", ba.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  be->add_option("--repeats", ba.repeats, "Timing repeats (best is reported)")->capture_default_str();

  // CLI11 consumes arguments from the back, without the program name.
  std::vector<std::string> rev;
  if (args.size() > 1) rev.assign(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == opt) return cmd_optimize(oa, tau_opt->count() > 0, out);
    if (active == ren) return cmd_render(ra, out);
    if (active == gc) return cmd_gradcheck(ga, out);
    if (active == be) return cmd_bench(ba, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << active->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace diffdraw
