#include "cli.hpp"

#include "matrix_io.hpp"
#include "pf2/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pf2::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const auto end = std::min(text.find(',', begin), text.size());
    const auto part = trim(text.substr(begin, end - begin));
    if (!part.empty()) parts.push_back(part);
    begin = end + 1;
  }
  return parts;
}

Mode parse_mode(std::string_view name) {
  if (name == "H" || name == "h") return Mode::H;
  if (name == "W" || name == "w" || name == "S") return Mode::W;
  if (name == "V" || name == "v") return Mode::V;
  throw ValidationError("unknown factor '" + std::string(name) + "' (expected H, W or V)");
}

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

ConstraintKind& slot(ConstraintSpec& spec, Mode mode) {
  switch (mode) {
    case Mode::H: return spec.on_h;
    case Mode::W: return spec.on_w;
    case Mode::V: return spec.on_v;
  }
  return spec.on_h;
}

void assign(ConstraintSpec& spec, Mode mode, ConstraintKind kind) {
  ConstraintKind& target = slot(spec, mode);
  if (target.type() != ConstraintKind::Type::none) {
    throw ValidationError("factor " + std::string(mode_name(mode)) + " already has constraint " + target.to_string());
  }
  target = kind;
}

json constraint_json(const ConstraintSpec& spec) {
  json c;
  for (Mode m : {Mode::H, Mode::W, Mode::V}) c[std::string(mode_name(m))] = spec.on(m).to_string();
  if (spec.smoothness) {
    c["smooth"] = {{"n_basis", spec.smoothness->n_basis},
                   {"degree", spec.smoothness->degree},
                   {"gap_aware", spec.smoothness->gap_aware}};
  } else {
    c["smooth"] = nullptr;
  }
  return c;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

std::vector<Mode> parse_mode_list(std::string_view text) {
  std::vector<Mode> modes;
  for (auto part : split_commas(text)) modes.push_back(parse_mode(part));
  if (modes.empty()) throw ValidationError("empty factor list");
  return modes;
}

std::vector<std::pair<Mode, double>> parse_mode_values(std::string_view text) {
  std::vector<std::pair<Mode, double>> out;
  for (auto part : split_commas(text)) {
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("expected FACTOR=VALUE, got '" + std::string(part) + "'");
    }
    out.emplace_back(parse_mode(trim(part.substr(0, eq))), parse_double(trim(part.substr(eq + 1)), "parameter"));
  }
  if (out.empty()) throw ValidationError("empty FACTOR=VALUE list");
  return out;
}

SmoothnessConfig parse_smooth(std::string_view text) {
  SmoothnessConfig cfg;
  cfg.gap_aware = false;
  for (auto part : split_commas(text)) {
    const auto eq = part.find('=');
    const auto key = trim(part.substr(0, eq));
    const auto value = eq == std::string_view::npos ? std::string_view{} : trim(part.substr(eq + 1));
    if (key == "gap-aware") {
      cfg.gap_aware = value.empty() || value == "true" || value == "1";
      if (!cfg.gap_aware && value != "false" && value != "0") {
        throw ValidationError("invalid gap-aware value '" + std::string(value) + "'");
      }
    } else if (key == "l" || key == "degree") {
      const double v = parse_double(value, key);
      if (v != static_cast<double>(static_cast<int>(v)) || v < 0) {
        throw ValidationError("smooth " + std::string(key) + " must be a non-negative integer");
      }
      if (key == "l") cfg.n_basis = static_cast<Index>(v);
      else cfg.degree = static_cast<int>(v);
    } else {
      throw ValidationError("unknown smooth setting '" + std::string(key) + "'");
    }
  }
  return cfg;
}

std::vector<std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::vector<std::string> args;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(path.string(), line_no, "expected 'key = value'");
    const auto key = trim(view.substr(0, eq));
    const auto value = trim(view.substr(eq + 1));
    if (key.empty()) throw ParseError(path.string(), line_no, "empty key");
    if (key == "config") throw ParseError(path.string(), line_no, "nested config files are not supported");
    args.push_back("--" + std::string(key) + "=" + std::string(value));
  }
  return args;
}

json trace_to_json(const FitTrace& trace, bool include_timing) {
  json iterations = json::array();
  for (const auto& rec : trace.iterations) {
    json it;
    it["iteration"] = rec.iteration;
    it["fit"] = rec.fit;
    if (include_timing) it["seconds"] = rec.seconds;
    json inner, primal, dual;
    for (Mode m : {Mode::H, Mode::W, Mode::V}) {
      const auto& s = rec.modes[static_cast<std::size_t>(mode_index(m))];
      const std::string name(mode_name(m));
      inner[name] = s.iterations;
      primal[name] = s.primal_residual;
      dual[name] = s.dual_residual;  // +inf (dual variable still zero) serializes as null
    }
    it["inner_iterations"] = inner;
    it["primal_residual"] = primal;
    it["dual_residual"] = dual;
    it["rank_deficient"] = rec.rank_deficient;
    iterations.push_back(std::move(it));
  }
  return {{"converged", trace.converged}, {"iterations", std::move(iterations)}};
}

int cmd_fit(const FitCommand& cmd, std::ostream& err) {
  try {
    const auto days_path = cmd.timestamps.value_or(timestamps_path_for(cmd.input));
    const IrregularTensor tensor = load_irregular_tensor(cmd.input, cmd.timestamps);
    if (cmd.constraints.smoothness && cmd.constraints.smoothness->gap_aware && !tensor.has_visit_days()) {
      err << "error: gap-aware smoothness needs visit days, but the timestamps file " << days_path
          << " was not found\n";
      return kError;
    }

    FitOptions options = cmd.options;
    if (cmd.verbose) {
      options.on_iteration = [&err](const IterationRecord& rec, const Parafac2Model&) {
        err << "iter " << rec.iteration << "  fit " << rec.fit << "  inner H/W/V " << rec.modes[0].iterations << '/'
            << rec.modes[1].iterations << '/' << rec.modes[2].iterations << "  " << rec.seconds << "s\n";
      };
    }
    const auto start = std::chrono::steady_clock::now();
    const FitResult result = fit(tensor, cmd.constraints, options);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const double fit_value = compute_fit(result.model, tensor);
    int deficient = 0;
    json iteration_seconds = json::array();
    for (const auto& rec : result.trace.iterations) {
      deficient += rec.rank_deficient;
      iteration_seconds.push_back(rec.seconds);
    }
    if (deficient > 0) {
      err << "warning: " << deficient << " rank-deficient Procrustes update(s) were completed arbitrarily\n";
    }

    fs::create_directories(cmd.out_dir);
    io::write_model(cmd.out_dir, result.model, cmd.emit_u);
    // Wall time stays out of trace.json in deterministic mode so reruns are byte-identical.
    write_json(cmd.out_dir / "trace.json", trace_to_json(result.trace, !options.deterministic));

    json config = {
        {"input", cmd.input.string()},
        {"timestamps", tensor.has_visit_days() ? json(days_path.string()) : json(nullptr)},
        {"rank", options.rank},
        {"constraints", constraint_json(cmd.constraints)},
        {"outer_tol", options.outer_tol},
        {"max_outer_iters", options.max_outer_iters},
        {"admm_tol", options.admm_tol},
        {"admm_max_iters", options.admm_max_iters},
        {"seed", options.seed},
        {"threads", options.thread_count},
        {"deterministic", options.deterministic},
        {"emit_u", cmd.emit_u},
        {"out", cmd.out_dir.string()},
    };
    json summary = {
        {"fit", fit_value},
        {"sparsity_v", compute_sparsity(result.model.v)},
        {"iterations", result.trace.iterations.size()},
        {"converged", result.trace.converged},
        {"wall_seconds", wall},
        {"iteration_seconds", std::move(iteration_seconds)},
        {"rank_deficient_updates", deficient},
        {"config", std::move(config)},
    };
    write_json(cmd.out_dir / "summary.json", summary);
    return result.trace.converged ? kOk : kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
}

int cmd_synth(const SynthCommand& cmd, std::ostream& err) {
  try {
    const SyntheticData data = generate_synthetic(cmd.config);
    fs::create_directories(cmd.out_dir / "truth");
    save_irregular_tensor(data.tensor, cmd.out_dir / "tensor.tns");
    io::write_model(cmd.out_dir / "truth", data.truth);
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
}

int cmd_eval(const EvalCommand& cmd, std::ostream& out, std::ostream& err) {
  try {
    const IrregularTensor tensor = load_irregular_tensor(cmd.tensor);
    const Parafac2Model model = io::read_model(cmd.model_dir);
    if (model.n_slices() != tensor.n_slices() || model.v.rows() != tensor.n_cols()) {
      err << "error: model is " << model.n_slices() << " slices x " << model.v.rows() << " columns, tensor is "
          << tensor.n_slices() << " x " << tensor.n_cols() << '\n';
      return kError;
    }
    const json result = {{"fit", compute_fit(model, tensor)}, {"sparsity", compute_sparsity(model.v)}};
    out << result.dump() << '\n';
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
}

namespace {

// Splices `--config FILE` contents in right after the subcommand so that
// explicit flags, which come later, take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw ValidationError("--config needs a file");
      from_file = read_config_file(args[++i]);
    } else if (a.rfind("--config=", 0) == 0) {
      from_file = read_config_file(a.substr(9));
    } else {
      out.push_back(a);
    }
  }
  if (!from_file.empty() && !out.empty()) out.insert(out.begin() + 1, from_file.begin(), from_file.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained PARAFAC2 for irregular sparse tensors", "pf2"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_help;
  app.add_option("--config", config_help, "Flat key = value file; explicit flags override it");

  FitCommand fit_cmd;
  std::string input, timestamps, nonneg, l0, l1, smooth;
  auto* fit_app = app.add_subcommand("fit", "Fit a constrained PARAFAC2 model");
  fit_app->add_option("--config", config_help, "Flat key = value file; explicit flags override it");
  fit_app->add_option("--input,-i", input, "Tensor file")->required();
  fit_app->add_option("--timestamps", timestamps, "Visit-day sidecar (default: <input stem>.days)");
  fit_app->add_option("--rank,-r", fit_cmd.options.rank, "Target rank R")->required();
  fit_app->add_option("--nonneg", nonneg, "Non-negative factors, e.g. H,W,V");
  fit_app->add_option("--l0", l0, "Hard-threshold factors, e.g. V=49");
  fit_app->add_option("--l1", l1, "Soft-threshold factors, e.g. V=0.5");
  fit_app->add_option("--smooth", smooth, "Spline smoothness on U_k, e.g. l=7,degree=3,gap-aware");
  fit_app->add_option("--outer-tol", fit_cmd.options.outer_tol, "Relative FIT change stopping threshold")
      ->capture_default_str();
  fit_app->add_option("--max-outer", fit_cmd.options.max_outer_iters, "Outer iteration cap")->capture_default_str();
  fit_app->add_option("--admm-tol", fit_cmd.options.admm_tol, "Inner residual threshold")->capture_default_str();
  fit_app->add_option("--admm-max", fit_cmd.options.admm_max_iters, "Inner iteration cap")->capture_default_str();
  fit_app->add_option("--seed", fit_cmd.options.seed, "Initialization seed")->capture_default_str();
  fit_app->add_option("--threads", fit_cmd.options.thread_count, "Worker threads")->capture_default_str();
  fit_app->add_flag("--deterministic,!--no-deterministic", fit_cmd.options.deterministic,
                    "Ordered, bit-reproducible reductions (default on)");
  fit_app->add_option("--out,-o", fit_cmd.out_dir, "Output directory")->capture_default_str();
  fit_app->add_flag("--emit-u", fit_cmd.emit_u, "Also write U_k");
  fit_app->add_flag("--verbose,-v", fit_cmd.verbose, "Per-iteration progress on stderr");

  SynthCommand synth_cmd;
  auto* synth_app = app.add_subcommand("synth", "Generate a synthetic tensor with known factors");
  synth_app->add_option("--config", config_help, "Flat key = value file; explicit flags override it");
  synth_app->add_option("--slices,-K", synth_cmd.config.n_slices, "K")->capture_default_str();
  synth_app->add_option("--cols,-J", synth_cmd.config.n_cols, "J")->capture_default_str();
  synth_app->add_option("--rank,-r", synth_cmd.config.rank, "R")->capture_default_str();
  synth_app->add_option("--rows-min", synth_cmd.config.rows_min, "Smallest I_k")->capture_default_str();
  synth_app->add_option("--rows-max", synth_cmd.config.rows_max, "Largest I_k")->capture_default_str();
  synth_app->add_option("--density", synth_cmd.config.density, "Nonzero fraction of V")->capture_default_str();
  synth_app->add_option("--noise", synth_cmd.config.noise_level, "Gaussian noise level")->capture_default_str();
  synth_app->add_option("--seed", synth_cmd.config.seed, "Seed")->capture_default_str();
  synth_app->add_option("--out,-o", synth_cmd.out_dir, "Output directory")->capture_default_str();

  EvalCommand eval_cmd;
  auto* eval_app = app.add_subcommand("eval", "Report FIT and SPARSITY of a model directory");
  eval_app->add_option("--config", config_help, "Flat key = value file; explicit flags override it");
  eval_app->add_option("--model,-m", eval_cmd.model_dir, "Model directory")->required();
  eval_app->add_option("--tensor,-t", eval_cmd.tensor, "Tensor file")->required();

  try {
    const std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }

  if (*fit_app) {
    try {
      fit_cmd.input = input;
      if (!timestamps.empty()) fit_cmd.timestamps = timestamps;
      if (!nonneg.empty())
        for (Mode m : parse_mode_list(nonneg)) assign(fit_cmd.constraints, m, ConstraintKind::non_negative());
      if (!l0.empty())
        for (auto [m, mu] : parse_mode_values(l0)) assign(fit_cmd.constraints, m, ConstraintKind::l0(mu));
      if (!l1.empty())
        for (auto [m, lambda] : parse_mode_values(l1)) assign(fit_cmd.constraints, m, ConstraintKind::l1(lambda));
      if (!smooth.empty()) fit_cmd.constraints.smoothness = parse_smooth(smooth);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kError;
    }
    return cmd_fit(fit_cmd, err);
  }
  if (*synth_app) return cmd_synth(synth_cmd, err);
  return cmd_eval(eval_cmd, out, err);
}

}  // namespace pf2::cli
