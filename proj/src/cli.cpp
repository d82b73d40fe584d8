#include "irpf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "irpf/eval.hpp"
#include "irpf/field.hpp"
#include "irpf/review.hpp"
#include "irpf/synthetic.hpp"

namespace irpf {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string labels_text(const std::vector<Label>& labels) {
  std::ostringstream s;
  write_labels(s, labels);
  return s.str();
}

// Flags shared by the commands that run the pipeline on a recording.
struct PipelineFlags {
  std::string input;
  double rate = 0.0;
  double duration = 4.0;
  std::string config_path;
  std::optional<double> u_lim;
  double sensitivity = 1.0;
  std::string combiner;
  std::vector<double> preband{0.1, 44.0};
  std::string labels_path;

  void add_to(CLI::App& app) {
    app.add_option("-i,--input", input, "Recording CSV (header of channel names)")->required()->check(CLI::ExistingFile);
    app.add_option("--rate", rate, "Sampling rate, Hz")->required()->check(CLI::PositiveNumber);
    app.add_option("--duration", duration, "Epoch duration, seconds")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("-c,--config", config_path, "Field config JSON (default: built-in 21-channel field)");
    app.add_option("--u-lim", u_lim, "Outlier gate limit (overrides the config)")->check(CLI::PositiveNumber);
    app.add_option("--sensitivity", sensitivity, "Kneedle sensitivity")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--combiner", combiner, "fisher, liptak, pearson, tippett or meta (overrides the config)");
    app.add_option("--preband", preband, "Preprocessing band LOW HIGH in Hz; 0 disables an edge")
        ->expected(2)
        ->capture_default_str();
    app.add_option("--labels", labels_path, "Ground-truth labels, one 0/1 per epoch")->check(CLI::ExistingFile);
  }
};

struct Loaded {
  PreparedRecording prepared;
  FieldConfig config;
};

Loaded load_inputs(const PipelineFlags& f) {
  const Recording raw = load_recording(f.input, f.rate);
  FieldConfig config = f.config_path.empty() ? default_field_config() : load_field_config(f.config_path, raw);
  if (f.u_lim) config.u_lim = *f.u_lim;
  if (!f.combiner.empty()) config.combiner = parse_combiner(f.combiner);
  validate_field_config(config, raw.channel_names(), raw.sampling_rate());

  auto edge = [](double v) { return v > 0.0 ? std::optional<double>(v) : std::nullopt; };
  Loaded l{prepare_recording(raw, f.duration, edge(f.preband.at(0)), edge(f.preband.at(1))), std::move(config)};
  if (!f.labels_path.empty()) l.prepared.epochs.labels = load_labels(f.labels_path, l.prepared.epochs.size());
  return l;
}

struct Timed {
  SqiReport report;
  double fit_ms = 0.0;
  double score_ms = 0.0;
  double total_ms() const { return fit_ms + score_ms; }
};

Timed run_method(Method method, const PreparedRecording& p, const FieldConfig& config, const FieldOptions& options) {
  Timed t;
  const auto start = Clock::now();
  switch (method) {
    case Method::IRPF: {
      const FieldModel model = fit_irpf(p.recording, p.epochs, config, options);
      t.fit_ms = elapsed_ms(start);
      const auto scored = Clock::now();
      t.report = score_irpf(model, p.epochs);
      t.score_ms = elapsed_ms(scored);
      return t;
    }
    case Method::RPF: t.report = run_rpf(p.recording, p.epochs, config); break;
    case Method::RP: t.report = run_rp(p.recording, p.epochs, config.rp_z_threshold, config.u_lim); break;
  }
  t.fit_ms = elapsed_ms(start);
  return t;
}

std::string timing_json(const Timed& t, std::size_t n_epochs) {
  const nlohmann::json j = {{"method", std::string(to_string(t.report.method))},
                            {"epochs", n_epochs},
                            {"fit_ms", t.fit_ms},
                            {"score_ms", t.score_ms},
                            {"total_ms", t.total_ms()},
                            {"per_epoch_ms", n_epochs ? t.total_ms() / static_cast<double>(n_epochs) : 0.0}};
  return j.dump(2);
}

std::size_t count(const std::vector<bool>& v) { return static_cast<std::size_t>(std::count(v.begin(), v.end(), true)); }

// reject ---------------------------------------------------------------

struct RejectCmd {
  PipelineFlags flags;
  std::string method = "irpf";
  std::optional<double> z_th;
  std::optional<double> p_th;
  std::string output;

  void add_to(CLI::App& app) {
    flags.add_to(app);
    app.add_option("--method", method, "irpf, rpf or rp")
        ->capture_default_str()
        ->check(CLI::IsMember({"irpf", "rpf", "rp"}));
    app.add_option("--z-th", z_th, "RP z threshold (default 2.0)");
    app.add_option("--p-th", p_th, "RPF p threshold (default 0.01)")->check(CLI::Range(0.0, 1.0));
    app.add_option("-o,--output", output, "Output directory for mask.txt, report.json, timing.json")->required();
  }

  int run(std::ostream& out) {
    Loaded in = load_inputs(flags);
    if (z_th) in.config.rp_z_threshold = *z_th;
    if (p_th) in.config.rpf_p_threshold = *p_th;
    FieldOptions options;
    options.sensitivity = flags.sensitivity;

    const Timed t = run_method(parse_method(method), in.prepared, in.config, options);
    const auto& epochs = in.prepared.epochs;
    const fs::path dir(output);
    write_file(dir / "mask.txt", labels_text(t.report.verdict()));
    write_file(dir / "report.json", to_json(t.report));
    write_file(dir / "timing.json", timing_json(t, epochs.size()));

    out << method << ": " << epochs.size() << " epochs, " << count(t.report.rejected) << " rejected ("
        << count(t.report.gate_rejected) << " by the gate), threshold " << t.report.threshold << ", " << std::fixed
        << std::setprecision(3) << t.total_ms() / static_cast<double>(epochs.size()) << " ms/epoch\n";
    if (epochs.labels) out << to_json(metrics(confusion(t.report.verdict(), *epochs.labels))) << '\n';
    return kExitOk;
  }
};

// eval -----------------------------------------------------------------

struct EvalCmd {
  std::string mask;
  std::string labels;
  std::string output;

  void add_to(CLI::App& app) {
    app.add_option("--mask", mask, "Rejection mask, one 0/1 per epoch")->required()->check(CLI::ExistingFile);
    app.add_option("--labels", labels, "Ground-truth labels, one 0/1 per epoch")->required()->check(CLI::ExistingFile);
    app.add_option("-o,--output", output, "Write the metric JSON here");
  }

  int run(std::ostream& out) {
    const auto truth = load_labels(labels);
    const auto predicted = load_labels(mask, truth.size());
    const auto c = confusion(predicted, truth);
    nlohmann::json j = nlohmann::json::parse(to_json(metrics(c)));
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["tn"] = c.tn;
    j["fn"] = c.fn;
    out << j.dump() << '\n';
    if (!output.empty()) write_file(output, j.dump(2));
    return kExitOk;
  }
};

// synth ----------------------------------------------------------------

struct SynthCmd {
  std::uint64_t seed = 0;
  std::optional<std::size_t> channels;
  std::optional<double> duration;
  std::optional<double> rate;
  std::optional<double> epoch_duration;
  std::optional<double> blink, vem, hem, emg, pop;
  std::string output;

  void add_to(CLI::App& app) {
    app.add_option("--seed", seed, "Generator seed")->capture_default_str();
    app.add_option("--channels", channels, "Number of channels (first n of the 21-channel montage)");
    app.add_option("--duration", duration, "Recording length, seconds (default 400)");
    app.add_option("--rate", rate, "Sampling rate, Hz (default 200)");
    app.add_option("--epoch", epoch_duration, "Label epoch length, seconds (default 4)");
    app.add_option("--blink", blink, "Fraction of blink epochs");
    app.add_option("--vem", vem, "Fraction of vertical eye movement epochs");
    app.add_option("--hem", hem, "Fraction of horizontal eye movement epochs");
    app.add_option("--emg", emg, "Fraction of EMG epochs");
    app.add_option("--pop", pop, "Fraction of electrode pop epochs");
    app.add_option("-o,--output", output, "Output directory for recording.csv and labels.txt")->required();
  }

  int run(std::ostream& out) {
    SyntheticSpec spec = corpus_spec(seed);
    if (channels) spec.n_channels = *channels;
    if (duration) spec.duration_s = *duration;
    if (rate) spec.rate_hz = *rate;
    if (epoch_duration) spec.epoch_duration = *epoch_duration;
    if (blink) spec.artifact_mix.blink = *blink;
    if (vem) spec.artifact_mix.vem = *vem;
    if (hem) spec.artifact_mix.hem = *hem;
    if (emg) spec.artifact_mix.emg = *emg;
    if (pop) spec.artifact_mix.pop = *pop;
    const SyntheticData data = generate_synthetic(spec);

    const fs::path dir(output);
    std::ostringstream csv;
    write_recording(csv, data.recording);
    write_file(dir / "recording.csv", csv.str());
    write_file(dir / "labels.txt", labels_text(*data.epochs.labels));
    const auto& labels = *data.epochs.labels;
    out << data.recording.n_channels() << " channels, " << data.recording.n_samples() << " samples, "
        << labels.size() << " epochs, " << std::count(labels.begin(), labels.end(), Label::Artifact)
        << " artifact\n";
    return kExitOk;
  }
};

// export-review ----------------------------------------------------------

struct ExportReviewCmd {
  PipelineFlags flags;
  std::string output;

  void add_to(CLI::App& app) {
    flags.add_to(app);
    app.add_option("-o,--output", output, "Review bundle JSON path")->required();
  }

  int run(std::ostream& out) {
    const Loaded in = load_inputs(flags);
    FieldOptions options;
    options.sensitivity = flags.sensitivity;
    const auto& p = in.prepared;
    const SqiReport report = score_irpf(fit_irpf(p.recording, p.epochs, in.config, options), p.epochs);
    write_file(output, to_json(make_review_bundle(report, p.epochs, &in.config)));
    out << "review bundle: " << p.epochs.size() << " epochs, suggested threshold " << report.threshold << '\n';
    return kExitOk;
  }
};

// bench ----------------------------------------------------------------

struct BenchCmd {
  std::size_t seeds = 20;
  std::uint64_t first_seed = 0;
  std::optional<double> u_lim;
  std::string output;

  void add_to(CLI::App& app) {
    app.add_option("--seeds", seeds, "Number of corpus recordings")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", first_seed, "First corpus seed")->capture_default_str();
    app.add_option("--u-lim", u_lim, "Outlier gate limit (default: built-in field's)")->check(CLI::PositiveNumber);
    app.add_option("-o,--output", output, "Directory for records.jsonl, aggregate.csv and timing.json");
  }

  int run(std::ostream& out) {
    FieldConfig config = default_field_config();
    if (u_lim) config.u_lim = *u_lim;
    std::vector<MetricRecord> records;
    std::ostringstream jsonl;
    double irpf_ms = 0.0;
    std::size_t irpf_epochs = 0;
    for (std::size_t s = 0; s < seeds; ++s) {
      const std::uint64_t seed = first_seed + s;
      const SyntheticData data = generate_synthetic(corpus_spec(seed));
      const PreparedRecording p = prepare_recording(data.recording, data.epochs.epoch_duration);
      for (Method m : {Method::IRPF, Method::RPF, Method::RP}) {
        const Timed t = run_method(m, p, config, {});
        if (m == Method::IRPF) {
          irpf_ms += t.total_ms();
          irpf_epochs += p.epochs.size();
        }
        MetricRecord r;
        r.method = std::string(to_string(m));
        r.seed = seed;
        r.counts = confusion(t.report.verdict(), *data.epochs.labels);
        r.metrics = metrics(r.counts);
        jsonl << to_json(r) << '\n';
        records.push_back(std::move(r));
      }
    }
    std::ostringstream csv;
    write_aggregate_csv(csv, records);
    out << csv.str();
    out << "irpf fit+score: " << std::fixed << std::setprecision(3)
        << irpf_ms / static_cast<double>(std::max<std::size_t>(irpf_epochs, 1)) << " ms/epoch over " << irpf_epochs
        << " epochs\n";
    if (!output.empty()) {
      const fs::path dir(output);
      write_file(dir / "records.jsonl", jsonl.str());
      write_file(dir / "aggregate.csv", csv.str());
      const nlohmann::json timing = {{"method", "irpf"},
                                     {"epochs", irpf_epochs},
                                     {"total_ms", irpf_ms},
                                     {"per_epoch_ms", irpf_ms / static_cast<double>(std::max<std::size_t>(irpf_epochs, 1))}};
      write_file(dir / "timing.json", timing.dump(2));
    }
    return kExitOk;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Epoch-level EEG artifact rejection with Riemannian potato fields"};
  app.name("irpf_cli");
  app.require_subcommand(1);

  RejectCmd reject;
  EvalCmd eval;
  SynthCmd synth;
  ExportReviewCmd review;
  BenchCmd bench;
  reject.add_to(*app.add_subcommand("reject", "Score a recording and write the rejection mask"));
  eval.add_to(*app.add_subcommand("eval", "Compare a mask with ground-truth labels"));
  synth.add_to(*app.add_subcommand("synth", "Generate a labelled synthetic recording"));
  review.add_to(*app.add_subcommand("export-review", "Write the review bundle for threshold inspection"));
  bench.add_to(*app.add_subcommand("bench", "Run iRPF, RPF and RP over the synthetic corpus"));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  try {
    if (app.got_subcommand("reject")) return reject.run(out);
    if (app.got_subcommand("eval")) return eval.run(out);
    if (app.got_subcommand("synth")) return synth.run(out);
    if (app.got_subcommand("export-review")) return review.run(out);
    if (app.got_subcommand("bench")) return bench.run(out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.code() == ErrorCode::TooFewCleanEpochs ? kExitTooFewClean : kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace irpf
