#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "d2h/errors.hpp"
#include "d2h/eval_metrics.hpp"
#include "d2h/parallel.hpp"
#include "d2h/pca.hpp"
#include "d2h/pipeline.hpp"
#include "d2h/score_engine.hpp"
#include "d2h/score_table.hpp"
#include "d2h/synth.hpp"
#include "d2h/trace_io.hpp"

namespace d2h::cli {
namespace fs = std::filesystem;

namespace {

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct ScoreArgs {
  std::string traces;
  std::string out;
  double k = 0.5;
  std::string mode = "final-row";
  std::string norm = "minmax";
  double w_dispersion = 0.5;
  double w_drift = 0.5;
  std::string baselines = "all";
  double temperature = 0.7;
  unsigned jobs = default_jobs();
  bool strict = false;
};

struct EvalArgs {
  std::string scores;
  std::string out;
  bool strict_ties = false;
};

struct SynthArgs {
  std::size_t faithful = 0;
  std::size_t halluc = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string preset = "default";
};

struct InspectArgs {
  std::string trace;
  std::optional<long long> layer;
  std::string pca2d;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool write_text(const fs::path& path, const std::string& text, std::ostream& err) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << text;
  os.flush();
  if (!os) {
    err << "error: cannot write " << path.string() << '\n';
    return false;
  }
  return true;
}

std::set<std::string, std::less<>> parse_baselines(const std::string& list) {
  std::set<std::string, std::less<>> out;
  if (list == "none") return out;
  if (list == "all") return {detector::baselines.begin(), detector::baselines.end()};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (std::find(detector::baselines.begin(), detector::baselines.end(), item) == detector::baselines.end()) {
      throw UsageError("unknown baseline '" + item + "'");
    }
    out.insert(item);
  }
  return out;
}

int cmd_score(const ScoreArgs& a, std::ostream& out, std::ostream& err) {
  ScoringOptions opts;
  opts.drift.k_fraction = a.k;
  opts.drift.importance_mode = a.mode == "col-mean" ? ImportanceMode::col_mean : ImportanceMode::final_row;
  opts.fusion.w_dispersion = a.w_dispersion;
  opts.fusion.w_drift = a.w_drift;
  opts.fusion.normalization = a.norm == "zscore" ? Normalization::zscore : Normalization::minmax;
  opts.baseline.temperature = a.temperature;
  try {
    opts.drift.validate();
    opts.fusion.validate();
    opts.baselines = parse_baselines(a.baselines);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  std::vector<fs::path> files;
  try {
    files = io::list_trace_files(a.traces);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }

  struct Slot {
    std::optional<ScoreRecord> record;
    std::string decode_error;
    std::string drift_error;
  };
  std::vector<Slot> slots(files.size());
  parallel_for(files.size(), a.jobs, [&](std::size_t i) {
    Slot& s = slots[i];
    Trace trace;
    try {
      trace = io::read_trace_file(files[i]);
    } catch (const FormatError& e) {
      s.decode_error = e.what();
      return;
    }
    try {
      s.record = score_trace(trace, opts);
    } catch (const DriftUnavailable& e) {
      s.drift_error = e.what();
    }
  });

  std::size_t decode_failures = 0;
  std::size_t drift_failures = 0;
  std::vector<ScoreRecord> records;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto name = files[i].filename().string();
    if (!slots[i].decode_error.empty()) {
      ++decode_failures;
      err << (a.strict ? "error: " : "warning: skipping ") << name << ": " << slots[i].decode_error << '\n';
    } else if (!slots[i].drift_error.empty()) {
      ++drift_failures;
      err << "error: " << name << ": " << slots[i].drift_error << '\n';
    } else {
      records.push_back(std::move(*slots[i].record));
    }
  }
  if (decode_failures > 0 && a.strict) return kInvalidInput;
  if (drift_failures > 0) return kDriftUnavailable;
  if (records.empty()) err << "warning: no traces scored in " << a.traces << '\n';

  std::stable_sort(records.begin(), records.end(),
                   [](const ScoreRecord& x, const ScoreRecord& y) { return x.trace_id < y.trace_id; });
  if (!records.empty()) fuse_d2h(records, opts.fusion);

  std::ostringstream csv;
  write_scores_csv(records, csv);
  if (a.out.empty()) {
    out << csv.str();
    return kOk;
  }
  return write_text(a.out, csv.str(), err) ? kOk : kIoError;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  std::ifstream is(a.scores, std::ios::binary);
  if (!is) {
    err << "error: cannot read " << a.scores << '\n';
    return kIoError;
  }
  std::vector<ScoreRecord> records;
  try {
    records = read_scores_csv(is);
  } catch (const Error& e) {
    err << "error: " << a.scores << ": " << e.what() << '\n';
    return kIoError;
  }
  EvalReport report;
  try {
    report = evaluate_detectors(records, a.strict_ties ? TieCredit::strict : TieCredit::half);
  } catch (const MetricUndefined& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  for (const auto& id : report.excluded_traces) err << "note: excluded unlabeled trace " << id << '\n';
  for (const auto& s : report.skipped_detectors) err << "note: skipped detector " << s << '\n';

  const std::string csv = report_to_csv(report);
  if (a.out.empty()) {
    out << csv;
    return kOk;
  }
  fs::path stem = a.out;
  if (stem.extension() == ".csv" || stem.extension() == ".json") stem.replace_extension();
  fs::path csv_path = stem;
  csv_path += ".csv";
  fs::path json_path = stem;
  json_path += ".json";
  if (!write_text(csv_path, csv, err) || !write_text(json_path, report_to_json(report), err)) {
    return kIoError;
  }
  return kOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  const auto presets = synth::preset_by_name(a.preset);
  if (!presets) throw UsageError("unknown preset '" + a.preset + "'");
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec || !fs::is_directory(a.out)) {
    err << "error: cannot create output directory " << a.out << '\n';
    return kIoError;
  }
  const auto batch = synth::generate_labeled_batch(a.faithful, a.halluc, *presets, a.seed);
  try {
    for (const auto& t : batch) {
      fs::path file = fs::path(a.out) / t.meta.trace_id;
      file += io::kExtension;
      io::write_trace_file(t, file);
    }
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  out << "wrote " << batch.size() << " traces to " << a.out << '\n';
  return kOk;
}

std::string_view reduction_name(AttnReduction r) {
  switch (r) {
    case AttnReduction::none: return "none";
    case AttnReduction::final_row: return "final_row";
    case AttnReduction::col_mean: return "col_mean";
    case AttnReduction::both: return "both";
  }
  return "none";
}

int cmd_inspect(const InspectArgs& a, std::ostream& out, std::ostream& err) {
  Trace t;
  try {
    t = io::read_trace_file(a.trace);
  } catch (const FormatError& e) {
    err << "error: " << a.trace << ": " << e.what() << '\n';
    return kIoError;
  }
  const auto& m = t.meta;
  const long long first = m.has_embedding_layer ? 0 : 1;
  const long long last = m.n_layers;
  if (a.layer && (*a.layer < first || *a.layer > last)) {
    err << "error: layer " << *a.layer << " out of range [" << first << ", " << last << "]\n";
    return kInvalidInput;
  }

  out << "trace_id: " << m.trace_id << '\n'
      << "label: " << (m.label ? to_string(*m.label) : std::string_view("none")) << '\n'
      << "n_layers: " << m.n_layers << '\n'
      << "has_embedding_layer: " << (m.has_embedding_layer ? "true" : "false") << '\n'
      << "t_gen: " << m.t_gen << '\n'
      << "prompt_len: " << m.prompt_len << '\n'
      << "hidden_dim: " << m.hidden_dim << '\n'
      << "n_heads: " << m.n_heads << '\n'
      << "vocab_size: " << m.vocab_size << '\n'
      << "temperature: " << format_score(m.temperature) << '\n'
      << "attn_reduction: " << reduction_name(m.attn_reduction) << '\n';
  if (!t.extra_metadata.empty()) out << "metadata: " << t.extra_metadata << '\n';
  out << "layer,dispersion\n";
  for (std::size_t i = 0; i < t.hidden.size(); ++i) {
    out << (first + static_cast<long long>(i)) << ',' << format_score(layer_dispersion(t.hidden[i])) << '\n';
  }

  if (!a.pca2d.empty()) {
    const auto proj = pca_2d(t.hidden[static_cast<std::size_t>(*a.layer - first)]);
    std::string csv = "pc1,pc2\n";
    for (const auto& p : proj.points) csv += format_score(p[0]) + ',' + format_score(p[1]) + '\n';
    if (!write_text(a.pca2d, csv, err)) return kIoError;
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"d2h: training-free hallucination scoring over recorded generation traces"};
  app.name("d2h");
  app.require_subcommand(1);

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Score every *.d2ht trace in a directory");
  score->add_option("--traces", sa.traces, "Trace directory")->required();
  score->add_option("--out", sa.out, "Output scores CSV (stdout if omitted)");
  score->add_option("--k", sa.k, "Key-token fraction in (0, 1]")->check(CLI::Range(0.0, 1.0));
  score->add_option("--mode", sa.mode, "Key-token importance")->check(CLI::IsMember({"final-row", "col-mean"}));
  score->add_option("--norm", sa.norm, "Batch normalization")->check(CLI::IsMember({"minmax", "zscore"}));
  score->add_option("--w-dispersion", sa.w_dispersion, "Dispersion weight")->check(CLI::NonNegativeNumber);
  score->add_option("--w-drift", sa.w_drift, "Drift weight")->check(CLI::NonNegativeNumber);
  score->add_option("--baselines", sa.baselines, "all, none, or a comma-separated list");
  score->add_option("--temperature", sa.temperature, "Temperature the summaries were built at")
      ->check(CLI::PositiveNumber);
  score->add_option("--jobs", sa.jobs, "Worker threads")->envname("D2H_JOBS")->check(CLI::Range(1u, 4096u));
  score->add_flag("--strict", sa.strict, "Fail (exit 2) on any undecodable or invalid trace");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "AUROC / FPR@95 / AUPR per detector from a scores CSV");
  eval->add_option("--scores", ea.scores, "Scores CSV from `d2h score`")->required();
  eval->add_option("--out", ea.out, "Report path; writes <stem>.csv and <stem>.json");
  eval->add_flag("--strict-ties", ea.strict_ties, "AUROC gives tied pairs no credit");

  SynthArgs ya;
  auto* syn = app.add_subcommand("synth", "Generate a labeled synthetic trace corpus");
  syn->add_option("--faithful", ya.faithful, "Faithful traces (>= 1)")->required()->check(CLI::PositiveNumber);
  syn->add_option("--halluc", ya.halluc, "Hallucinated traces (>= 1)")->required()->check(CLI::PositiveNumber);
  syn->add_option("--seed", ya.seed, "Batch seed")->required();
  syn->add_option("--out", ya.out, "Output directory")->required();
  syn->add_option("--preset", ya.preset, "Regime preset")->check(CLI::IsMember({"default"}));

  InspectArgs ia;
  auto* insp = app.add_subcommand("inspect", "Print trace metadata and per-layer dispersion");
  insp->add_option("--trace", ia.trace, "Trace file")->required();
  auto* layer_opt = insp->add_option("--layer", ia.layer, "Stored layer index for --pca2d");
  insp->add_option("--pca2d", ia.pca2d, "Write the layer's 2-D PCA projection as CSV")->needs(layer_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*score) {
      if (sa.k <= 0.0) throw UsageError("--k must be > 0");
      return cmd_score(sa, out, err);
    }
    if (*eval) return cmd_eval(ea, out, err);
    if (*syn) return cmd_synth(ya, out, err);
    if (*insp) return cmd_inspect(ia, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("d2h");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace d2h::cli
