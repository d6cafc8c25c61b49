#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "cli_io.hpp"

namespace fs = std::filesystem;
using namespace speclust;
using cli::parse_double_list;
using cli::parse_int_grid;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Every option of the subcommand with its resolved value, defaults included.
/// Keys are the long flag names, so a manifest can be replayed as arguments.
Json resolved_config(const CLI::App& sub) {
  Json cfg = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->get_expected_max() == 0) {  // flag
      cfg[name] = opt->count() > 0;
    } else if (opt->count() > 0 && opt->get_items_expected_max() > 1) {
      cfg[name] = opt->results();
    } else if (opt->count() > 0) {
      cfg[name] = opt->as<std::string>();
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

void write_manifest(const fs::path& out, const CLI::App& sub, std::uint64_t seed) {
  cli::write_json(out / "manifest.json", make_manifest(sub.get_name(), resolved_config(sub), seed));
}

KernelSpec make_kernel(const std::string& name, double sigma) {
  KernelSpec k{kernel_kind_from_string(name), sigma};
  k.validate();
  return k;
}

// ------------------------------------------------------------------ sequences

/// A sequence on disk: sequence.json lists per-step files relative to it.
void write_sequence(const fs::path& dir, const SnapshotSequence& seq) {
  Json steps = Json::array();
  for (std::size_t t = 0; t < seq.steps.size(); ++t) {
    const Snapshot& s = seq.steps[t];
    char stem[32];
    std::snprintf(stem, sizeof stem, "step_%03zu", t);
    Json e{{"timestamp", s.timestamp}};
    if (s.graph) {
      cli::write_graph(dir / (std::string(stem) + ".edges"), dir / (std::string(stem) + ".nodes"), *s.graph);
      e["graph"] = std::string(stem) + ".edges";
      e["nodes"] = std::string(stem) + ".nodes";
    } else {
      cli::write_file(dir / (std::string(stem) + ".csv"), [&](std::ostream& o) { write_csv(o, *s.points); });
      cli::write_file(dir / (std::string(stem) + ".ids"), [&](std::ostream& o) {
        for (const auto& id : s.ids) o << id << '\n';
      });
      e["points"] = std::string(stem) + ".csv";
      e["ids"] = std::string(stem) + ".ids";
    }
    if (s.truth.size() > 0) {
      cli::write_partition(dir / (std::string(stem) + ".truth"), s.truth);
      e["truth"] = std::string(stem) + ".truth";
    }
    steps.push_back(e);
  }
  cli::write_json(dir / "sequence.json", {{"steps", steps}});
}

SnapshotSequence read_sequence(const std::string& path, bool weighted) {
  const Json j = read_json_file(path);
  const fs::path base = fs::path(path).parent_path();
  SnapshotSequence seq;
  try {
    for (const auto& e : j.at("steps")) {
      Snapshot s;
      s.timestamp = e.at("timestamp").get<double>();
      if (e.contains("graph")) {
        s.graph = cli::read_graph((base / e.at("graph").get<std::string>()).string(), weighted,
                                  e.contains("nodes") ? (base / e.at("nodes").get<std::string>()).string() : std::string());
        s.ids = s.graph->node_ids();
      } else {
        s.points = cli::read_matrix((base / e.at("points").get<std::string>()).string());
        if (e.contains("ids"))
          s.ids = cli::read_lines((base / e.at("ids").get<std::string>()).string());
        else
          for (Eigen::Index i = 0; i < s.points->rows(); ++i) s.ids.push_back(std::to_string(i));
        if (static_cast<Eigen::Index>(s.ids.size()) != s.points->rows()) throw ValidationError("read_sequence: ids do not match rows");
      }
      if (e.contains("truth")) {
        s.truth = cli::read_partition((base / e.at("truth").get<std::string>()).string());
        if (s.truth.size() != s.ids.size()) throw ValidationError("read_sequence: truth does not cover the snapshot");
      }
      seq.steps.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("read_sequence: ") + e.what());
  }
  if (seq.steps.empty()) throw ValidationError("read_sequence: no steps");
  for (const auto& s : seq.steps)
    if (s.graph.has_value() != seq.steps.front().graph.has_value()) throw ValidationError("read_sequence: mixed graph and point steps");
  seq.validate();
  return seq;
}

// ------------------------------------------------------------------ generate

struct GenerateArgs {
  std::string kind, out, overlap = "none", scenario = "two_drifting";
  std::uint64_t seed = 0;
  int per_component = 500, blocks = 4, steps = 10;
  // unset values fall back to per-kind defaults
  std::optional<int> nodes;
  std::optional<double> p_in, p_out, switch_fraction;
};

void cmd_generate(const GenerateArgs& a, const CLI::App& sub) {
  const fs::path out = cli::prepare_out(a.out);
  if (a.kind == "gaussians") {
    const Overlap ov = a.overlap == "none" ? Overlap::None : a.overlap == "few" ? Overlap::Few : a.overlap == "large" ? Overlap::Large
                                                                                                                  : throw ValidationError("unknown overlap '" + a.overlap + "'");
    const LabeledDataset d = three_gaussians(ov, a.seed, a.per_component);
    cli::write_file(out / "data.csv", [&](std::ostream& o) { write_csv(o, d.data); });
    cli::write_partition(out / "truth.csv", d.truth);
  } else if (a.kind == "planted") {
    const LabeledGraph g = planted_partition(a.nodes.value_or(400), a.blocks, a.p_in.value_or(0.3), a.p_out.value_or(0.01), a.seed);
    cli::write_graph(out / "graph.edges", out / "graph.nodes", g.graph);
    cli::write_partition(out / "truth.csv", g.truth);
  } else if (a.kind == "drift") {
    DriftOptions o;
    o.nodes = a.nodes.value_or(o.nodes);
    o.p_in = a.p_in.value_or(o.p_in);
    o.p_out = a.p_out.value_or(o.p_out);
    o.switch_fraction = a.switch_fraction.value_or(o.switch_fraction);
    write_sequence(out, gen_drift_sequence(a.scenario, a.steps, a.seed, o));
  } else if (a.kind == "frequency-switch") {
    const Stream s = frequency_switch_stream(FrequencySwitchOptions{}, a.seed);
    cli::write_file(out / "stream.csv", [&](std::ostream& o) { write_csv(o, s.points); });
    cli::write_partition(out / "truth.csv", s.truth);
  } else {
    throw ValidationError("generate: unknown kind '" + a.kind + "'");
  }
  write_manifest(out, sub, a.seed);
}

// ------------------------------------------------------------------ cluster

struct ClusterArgs {
  std::string data, truth, out, kernel = "rbf", sigma_grid = "1,2,3,5,8", grid_k = "2:6", criterion = "ams", method = "sksc";
  double eta = 0.5, train_fraction = 0.3, validation_fraction = 0.3;
  std::uint64_t seed = 0;
};

void cmd_cluster(const ClusterArgs& a, const CLI::App& sub) {
  const auto t0 = Clock::now();
  const DataMatrix X = cli::read_matrix(a.data);
  std::optional<Partition> truth;
  if (!a.truth.empty()) {
    truth = cli::read_partition(a.truth);
    if (static_cast<Eigen::Index>(truth->size()) != X.rows()) throw ValidationError("cluster: truth does not match the data rows");
  }
  if (a.method != "ksc" && a.method != "sksc") throw ValidationError("cluster: method must be ksc or sksc");
  const KernelKind kind = kernel_kind_from_string(a.kernel);
  if (kind == KernelKind::Community) throw ValidationError("cluster: the community kernel needs a graph");
  GridSpec grid;
  grid.ks = parse_int_grid(a.grid_k);
  grid.params = KernelSpec{kind, 1.0}.has_bandwidth() ? parse_double_list(a.sigma_grid) : std::vector<double>{1.0};
  grid.criterion = criterion_from_string(a.criterion);
  grid.eta = a.eta;
  grid.train_fraction = a.train_fraction;
  grid.validation_fraction = a.validation_fraction;
  const fs::path out = cli::prepare_out(a.out);

  const SelectionResult sel = select_points(grid, kind, X, a.seed);
  const Split split = split_indices(static_cast<int>(X.rows()), grid.train_fraction, grid.validation_fraction, a.seed);
  const DataMatrix train = take_rows(X, split.train);
  const KernelSpec spec = make_kernel(a.kernel, sel.best_param);
  KscFit fit = train_ksc(spec, train, sel.best_k);
  fit.model.source.path = a.data;
  for (int i : split.train) fit.model.source.ids.push_back(std::to_string(i));
  const KernelMatrix K_all = kernel_matrix(spec, X, train);
  const ScoreMatrix scores = project(fit.model, K_all);
  const SoftPartition soft = soft_assign(scores, compute_prototypes(fit.train_scores, fit.train_labels));
  const Partition labels = a.method == "sksc" ? soft.hard() : assign_hamming(scores, fit.model.codebook);

  cli::write_partition(out / "labels.csv", labels);
  cli::write_file(out / "memberships.csv", [&](std::ostream& o) { write_memberships(o, soft); });
  cli::write_file(out / "scores.csv", [&](std::ostream& o) { write_coordinates(o, scores); });
  cli::write_file(out / "selection.csv", [&](std::ostream& o) { sel.write_csv(o); });
  cli::write_json(out / "model.json", model_to_json(fit.model));
  Json metrics{{"k", sel.best_k}, {"kernel", kernel_to_json(spec)}, {"criterion", a.criterion}, {"criterion_score", sel.best_score},
               {"method", a.method}, {"n_points", X.rows()}, {"n_train", split.train.size()}, {"ams", ams(soft)}};
  if (labels.nonempty_clusters() >= 2) {
    metrics["msv"] = silhouette(X, labels).msv;
    metrics["dbi"] = dbi(X, labels);
  }
  if (truth) {
    metrics["ari"] = ari(labels, *truth);
    metrics["nmi"] = nmi(labels, *truth);
  }
  cli::write_json(out / "metrics.json", metrics);
  write_manifest(out, sub, a.seed);
  cli::write_json(out / "timings.json", {{"seconds", seconds_since(t0)}});
  std::cout << "k=" << sel.best_k << " sigma=" << detail::format_double(sel.best_param) << '\n';
}

// ------------------------------------------------------------------ community

struct CommunityArgs {
  std::string graph, nodes, truth, out, kernel, sigma_grid = "1", grid_k = "2:8", criterion = "mod", subset = "ef";
  bool weighted = false;
  double eta = 0.5;
  std::optional<double> train_fraction, validation_fraction;
  int block_size = 256, stall_budget = 2000;
  std::uint64_t seed = 0;
};

void cmd_community(const CommunityArgs& a, const CLI::App& sub) {
  const auto t0 = Clock::now();
  const Graph g = cli::read_graph(a.graph, a.weighted, a.nodes);
  CommunityOptions o;
  if (!a.kernel.empty()) o.kernel = KernelSpec{kernel_kind_from_string(a.kernel), 1.0};
  o.train_fraction = a.train_fraction;
  o.validation_fraction = a.validation_fraction;
  if (a.subset != "ef" && a.subset != "random") throw ValidationError("community: subset must be ef or random");
  o.subset = a.subset == "ef" ? SubsetMethod::Ef : SubsetMethod::Random;
  o.block_size = a.block_size;
  o.stall_budget = a.stall_budget;
  o.seed = a.seed;
  if (!a.truth.empty()) o.truth = cli::read_partition(a.truth);
  GridSpec grid;
  grid.ks = parse_int_grid(a.grid_k);
  grid.params = parse_double_list(a.sigma_grid);
  grid.criterion = criterion_from_string(a.criterion);
  grid.eta = a.eta;
  const fs::path out = cli::prepare_out(a.out);

  const CommunityResult r = detect_communities(g, grid, o);
  cli::write_partition(out / "labels.csv", r.labels);
  cli::write_file(out / "nodes.csv", [&](std::ostream& os) {
    os << "id,label\n";
    for (int i = 0; i < g.n_nodes(); ++i) os << g.node_ids()[static_cast<std::size_t>(i)] << ',' << r.labels[static_cast<std::size_t>(i)] << '\n';
  });
  cli::write_file(out / "selection.csv", [&](std::ostream& os) { r.selection.write_csv(os); });
  cli::write_json(out / "result.json", r.to_json(g));
  write_manifest(out, sub, a.seed);
  cli::write_json(out / "timings.json", {{"seconds", seconds_since(t0)}, {"pipeline_seconds", r.seconds}});
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "k=" << r.k << " modularity=" << detail::format_double(r.modularity);
  if (r.ari) std::cout << " ari=" << detail::format_double(*r.ari);
  std::cout << '\n';
}

// ------------------------------------------------------------------ evolve

struct EvolveArgs {
  std::string sequence, out, kernel, criterion = "auto", gamma_grid = "0.5,1,2", nu_grid = "0,0.1,0.5,1";
  int k = 2, memory = 1, framework = 1;
  double eta = 0.5, sigma = 1.0;
  bool weighted = false;
};

void cmd_evolve(const EvolveArgs& a, const CLI::App& sub) {
  const auto t0 = Clock::now();
  const SnapshotSequence seq = read_sequence(a.sequence, a.weighted);
  const bool graphs = seq.steps.front().graph.has_value();
  MkscConfig cfg;
  cfg.k = a.k;
  cfg.memory = a.memory;
  cfg.framework = a.framework;
  cfg.gamma_grid = parse_double_list(a.gamma_grid);
  cfg.nu_grid = parse_double_list(a.nu_grid);
  if (!a.kernel.empty()) cfg.kernel = make_kernel(a.kernel, a.sigma);
  else if (!graphs) cfg.kernel = KernelSpec::rbf(a.sigma);
  cfg.criterion = a.criterion == "auto" ? (graphs ? QualityKind::Mod : QualityKind::Blf) : quality_from_string(a.criterion);
  cfg.eta = a.eta;
  const fs::path out = cli::prepare_out(a.out);

  const MkscRun run = run_mksc(seq, cfg);
  const TrackedSequence tracked = track_sequence(run.labels, run.ids);
  Json steps = Json::array();
  for (std::size_t t = 0; t < seq.steps.size(); ++t) {
    const Snapshot& s = seq.steps[t];
    char stem[32];
    std::snprintf(stem, sizeof stem, "%03zu", t);
    cli::write_partition(out / ("labels_" + std::string(stem) + ".csv"), Partition::from_labels(tracked.labels[t]));
    cli::write_file(out / ("alpha_" + std::string(stem) + ".csv"),
                    [&](std::ostream& o) { write_coordinates(o, run.alphas[t], "alpha_", s.ids); });
    std::optional<QualityView> before;
    if (t > 0) {
      const Snapshot& p = seq.steps[t - 1];
      before = QualityView{p.ids, p.graph ? &*p.graph : nullptr, p.truth.size() ? &p.truth : nullptr, nullptr};
    }
    const QualityView now{s.ids, s.graph ? &*s.graph : nullptr, s.truth.size() ? &s.truth : nullptr, nullptr};
    Json e{{"t", t}, {"timestamp", s.timestamp}, {"gamma", run.gamma[t]}, {"nu", run.nu[t]}, {"residual", run.residual[t]},
           {"criterion", run.smoothed[t]}, {"k", run.labels[t].nonempty_clusters()}};
    if (graphs) {
      e["mod_mem"] = smoothed_quality(QualityKind::Mod, run.labels[t], now, before, a.eta);
      e["cond_mem"] = cond_mem_report(run.labels[t], now, before);
    }
    if (s.truth.size() > 0) e["ari_mem"] = smoothed_quality(QualityKind::Ari, run.labels[t], now, before, a.eta);
    if (t > 0) {
      // NMI over nodes present at both steps
      const auto pos = detail::positions_of(seq.steps[t - 1].ids, s.ids);
      std::vector<int> cur, prev;
      for (std::size_t i = 0; i < pos.size(); ++i)
        if (pos[i] >= 0) {
          cur.push_back(static_cast<int>(i));
          prev.push_back(pos[i]);
        }
      if (!cur.empty()) e["nmi_prev"] = nmi(run.labels[t].subset(cur), run.labels[t - 1].subset(prev));
    }
    steps.push_back(e);
  }
  cli::write_json(out / "steps.json", {{"framework", a.framework}, {"memory", a.memory}, {"steps", steps}});
  cli::write_file(out / "events.jsonl", [&](std::ostream& o) {
    for (const auto& e : tracked.events()) o << e.to_json().dump() << '\n';
  });
  cli::write_file(out / "tracking.csv", [&](std::ostream& o) { write_tracking_csv(o, tracked); });
  write_manifest(out, sub, 0);
  cli::write_json(out / "timings.json", {{"seconds", seconds_since(t0)}});
  std::cout << "steps=" << seq.steps.size() << " events=" << tracked.events().size() << '\n';
}

// ------------------------------------------------------------------ stream

struct StreamArgs {
  std::string data, truth, out, kernel = "rbf";
  int init_size = 100, k = 2, window = 0, death_horizon = 500, min_size = 5, calibration = 100;
  double sigma = 1.0, tau_merge = 0.5, eps_scale = 0.01, count_cap = 25.0, input_count_cap = 0.0;
  std::optional<double> eps_deg;
  bool model_scaling = false, track_ari = false;
};

void cmd_stream(const StreamArgs& a, const CLI::App& sub) {
  const auto t0 = Clock::now();
  DataMatrix X = cli::read_matrix(a.data);
  std::optional<Partition> truth;
  if (!a.truth.empty()) truth = cli::read_partition(a.truth);
  if (a.window > 0) {
    X = window_concat(X, a.window);
    if (truth) {
      // a window takes the label of its last row
      std::vector<int> t(truth->labels().begin() + (a.window - 1), truth->labels().end());
      truth = Partition::from_labels(std::move(t));
    }
  }
  if (truth && static_cast<Eigen::Index>(truth->size()) != X.rows()) throw ValidationError("stream: truth does not match the data rows");
  if (a.init_size < a.k || a.init_size >= X.rows()) throw ValidationError("stream: init-size must lie in [k, rows)");
  const fs::path out = cli::prepare_out(a.out);

  const DataMatrix init = X.topRows(a.init_size);
  const DataMatrix rest = X.bottomRows(X.rows() - a.init_size);
  std::optional<Partition> rest_truth;
  if (truth) rest_truth = Partition(std::vector<int>(truth->labels().begin() + a.init_size, truth->labels().end()), truth->k());
  IkscOptions io;
  io.tau_merge = a.tau_merge;
  io.death_horizon = a.death_horizon;
  io.min_size = a.min_size;
  io.calibration = a.calibration;
  io.eps_scale = a.eps_scale;
  io.eps_deg = a.eps_deg;
  io.count_cap = a.count_cap;
  io.input_count_cap = a.input_count_cap;
  io.model_scaling = a.model_scaling;
  const KscFit fit = train_ksc(make_kernel(a.kernel, a.sigma), init, a.k);
  IkscModel model = init_iksc(fit, init, io);
  StreamReport rep = run_stream(model, rest, rest_truth, a.track_ari);
  const Partition part = rep.partition();

  cli::write_partition(out / "labels.csv", part);
  cli::write_file(out / "report.jsonl", [&](std::ostream& o) {
    for (std::size_t i = 0; i < rep.assignments.size(); ++i) {
      Json p{{"type", "point"}, {"index", i + static_cast<std::size_t>(a.init_size)}, {"cluster", rep.assignments[i]}};
      if (!rep.running_ari.empty()) p["ari"] = rep.running_ari[i];
      o << p.dump() << '\n';
    }
    for (const auto& e : rep.events)
      o << Json{{"type", "event"}, {"event", to_string(e.kind)}, {"index", e.index}, {"cluster", e.cluster}, {"other", e.other}, {"size", e.size}}.dump()
        << '\n';
  });
  Json summary{{"init_size", a.init_size}, {"streamed", rest.rows()}, {"final_k", rep.final_k}, {"eps_deg", model.eps_deg},
               {"births", rep.count(IkscEventKind::Birth)}, {"merges", rep.count(IkscEventKind::Merge)},
               {"deaths", rep.count(IkscEventKind::Death)}, {"outliers", rep.count(IkscEventKind::Outlier)}};
  if (rest_truth) {
    summary["ari"] = ari(part, *rest_truth);
    if (!rep.running_ari.empty()) {
      double err = 0.0;
      for (double v : rep.running_ari) err += 1.0 - v;
      summary["cumulative_ari_error"] = err / static_cast<double>(rep.running_ari.size());
    }
  }
  if (part.nonempty_clusters() >= 2 && rest.rows() <= 5000) summary["msv"] = silhouette(rest, part).msv;
  cli::write_json(out / "summary.json", summary);
  write_manifest(out, sub, 0);
  cli::write_json(out / "timings.json", {{"seconds", seconds_since(t0)}});
  std::cout << "final_k=" << rep.final_k << " events=" << rep.events.size() << '\n';
}

// ------------------------------------------------------------------ metrics

struct MetricsArgs {
  std::vector<std::string> labels;
  std::string graph, nodes, data, out;
  bool weighted = false;
};

void cmd_metrics(const MetricsArgs& a, const CLI::App& sub) {
  if (a.labels.empty() || a.labels.size() > 2) throw ValidationError("metrics: pass one or two --labels files");
  std::vector<Partition> parts;
  for (const auto& p : a.labels) parts.push_back(cli::read_partition(p));
  Json j = Json::object();
  if (parts.size() == 2) {
    if (parts[0].size() != parts[1].size()) throw ValidationError("metrics: label files differ in length");
    j["ari"] = ari(parts[0], parts[1]);
    j["nmi"] = nmi(parts[0], parts[1]);
  }
  if (!a.graph.empty()) {
    const Graph g = cli::read_graph(a.graph, a.weighted, a.nodes);
    Json per = Json::array();
    for (const auto& p : parts) {
      const auto c = conductance(g, p);
      per.push_back({{"modularity", modularity(g, p)}, {"conductance", c.mean}, {"conductance_per_cluster", c.per_cluster}});
    }
    j["graph"] = per;
  }
  if (!a.data.empty()) {
    const DataMatrix X = cli::read_matrix(a.data);
    Json per = Json::array();
    for (const auto& p : parts) per.push_back({{"msv", silhouette(X, p).msv}, {"dbi", dbi(X, p)}});
    j["data"] = per;
  }
  std::cout << j.dump(2) << '\n';
  if (!a.out.empty()) {
    const fs::path out = cli::prepare_out(a.out);
    cli::write_json(out / "metrics.json", j);
    write_manifest(out, sub, 0);
  }
}

/// Rebuilds the argument vector of a recorded run.
std::vector<std::string> replay_args(const std::string& manifest, const std::string& out_override) {
  const Json m = read_json_file(manifest);
  std::vector<std::string> args{"speclust"};
  try {
    args.push_back(m.at("command").get<std::string>());
    for (const auto& [key, value] : m.at("config").items()) {
      if (value.is_boolean()) {
        if (value.get<bool>()) args.push_back("--" + key);
        continue;
      }
      if (value.is_array()) {
        for (const auto& v : value) args.insert(args.end(), {"--" + key, v.get<std::string>()});
        continue;
      }
      std::string v = value.is_string() ? value.get<std::string>() : value.dump();
      if (key == "out" && !out_override.empty()) v = out_override;
      args.insert(args.end(), {"--" + key, v});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("replay: bad manifest: ") + e.what());
  }
  return args;
}

int run(int argc, const char* const* argv);

int run_replay(const std::string& manifest, const std::string& out) {
  const auto args = replay_args(manifest, out);
  std::vector<const char*> raw;
  for (const auto& s : args) raw.push_back(s.c_str());
  return run(static_cast<int>(raw.size()), raw.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Kernel spectral clustering toolkit"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset with ground truth");
  gen->add_option("--kind", ga.kind, "gaussians | planted | drift | frequency-switch")->required();
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--seed", ga.seed)->capture_default_str();
  gen->add_option("--overlap", ga.overlap, "none | few | large (gaussians)")->capture_default_str();
  gen->add_option("--per-component", ga.per_component)->capture_default_str();
  gen->add_option("--nodes", ga.nodes, "Graph size (planted: 400)");
  gen->add_option("--blocks", ga.blocks)->capture_default_str();
  gen->add_option("--p-in", ga.p_in, "In-block edge probability (planted: 0.3)");
  gen->add_option("--p-out", ga.p_out, "Cross-block edge probability (planted: 0.01)");
  gen->add_option("--scenario", ga.scenario, "two_drifting | multi_merge | switching_labels | planted_partition_evolve")->capture_default_str();
  gen->add_option("--steps", ga.steps)->capture_default_str();
  gen->add_option("--switch-fraction", ga.switch_fraction);

  ClusterArgs ca;
  auto* clu = app.add_subcommand("cluster", "KSC / soft KSC on a point dataset with model selection");
  clu->add_option("--data", ca.data, "CSV with a header row")->required();
  clu->add_option("--truth", ca.truth, "Labels file for ARI / NMI");
  clu->add_option("--out", ca.out)->required();
  clu->add_option("--kernel", ca.kernel)->capture_default_str();
  clu->add_option("--sigma-grid", ca.sigma_grid)->capture_default_str();
  clu->add_option("--grid-k", ca.grid_k)->capture_default_str();
  clu->add_option("--criterion", ca.criterion, "blf | ams")->capture_default_str();
  clu->add_option("--method", ca.method, "ksc | sksc labels")->capture_default_str();
  clu->add_option("--eta", ca.eta)->capture_default_str();
  clu->add_option("--train-fraction", ca.train_fraction)->capture_default_str();
  clu->add_option("--validation-fraction", ca.validation_fraction)->capture_default_str();
  clu->add_option("--seed", ca.seed)->capture_default_str();

  CommunityArgs co;
  auto* com = app.add_subcommand("community", "Community detection on a graph");
  com->add_option("--graph", co.graph, "Edge list")->required();
  com->add_option("--nodes", co.nodes, "Node order, one id per line");
  com->add_flag("--weighted", co.weighted);
  com->add_option("--truth", co.truth);
  com->add_option("--out", co.out)->required();
  com->add_option("--kernel", co.kernel, "Default: picked from the graph");
  com->add_option("--sigma-grid", co.sigma_grid)->capture_default_str();
  com->add_option("--grid-k", co.grid_k)->capture_default_str();
  com->add_option("--criterion", co.criterion, "mod | ams | blf")->capture_default_str();
  com->add_option("--eta", co.eta)->capture_default_str();
  com->add_option("--train-fraction", co.train_fraction);
  com->add_option("--validation-fraction", co.validation_fraction);
  com->add_option("--subset", co.subset, "ef | random")->capture_default_str();
  com->add_option("--block-size", co.block_size)->capture_default_str();
  com->add_option("--stall-budget", co.stall_budget)->capture_default_str();
  com->add_option("--seed", co.seed)->capture_default_str();

  EvolveArgs ea;
  auto* evo = app.add_subcommand("evolve", "Clustering with memory over a snapshot sequence");
  evo->add_option("--sequence", ea.sequence, "sequence.json")->required();
  evo->add_option("--out", ea.out)->required();
  evo->add_flag("--weighted", ea.weighted);
  evo->add_option("--k", ea.k)->capture_default_str();
  evo->add_option("--memory", ea.memory)->capture_default_str();
  evo->add_option("--framework", ea.framework, "1: tune gamma, 2: tune nu")->capture_default_str();
  evo->add_option("--gamma-grid", ea.gamma_grid)->capture_default_str();
  evo->add_option("--nu-grid", ea.nu_grid)->capture_default_str();
  evo->add_option("--kernel", ea.kernel, "Default: community for graphs, rbf for points");
  evo->add_option("--sigma", ea.sigma)->capture_default_str();
  evo->add_option("--criterion", ea.criterion, "auto | mod | cond | ari | blf")->capture_default_str();
  evo->add_option("--eta", ea.eta)->capture_default_str();

  StreamArgs sa;
  auto* str = app.add_subcommand("stream", "Incremental clustering of a data stream");
  str->add_option("--data", sa.data, "CSV rows in arrival order")->required();
  str->add_option("--truth", sa.truth);
  str->add_option("--out", sa.out)->required();
  str->add_option("--kernel", sa.kernel)->capture_default_str();
  str->add_option("--sigma", sa.sigma)->capture_default_str();
  str->add_option("--k", sa.k)->capture_default_str();
  str->add_option("--init-size", sa.init_size, "Leading rows used to train the initial model")->capture_default_str();
  str->add_option("--window", sa.window, "Concatenate this many consecutive rows per point (0: off)")->capture_default_str();
  str->add_option("--tau-merge", sa.tau_merge)->capture_default_str();
  str->add_option("--death-horizon", sa.death_horizon)->capture_default_str();
  str->add_option("--min-size", sa.min_size)->capture_default_str();
  str->add_option("--calibration", sa.calibration)->capture_default_str();
  str->add_option("--eps-scale", sa.eps_scale)->capture_default_str();
  str->add_option("--eps-deg", sa.eps_deg);
  str->add_option("--count-cap", sa.count_cap)->capture_default_str();
  str->add_option("--input-count-cap", sa.input_count_cap)->capture_default_str();
  str->add_flag("--model-scaling", sa.model_scaling);
  str->add_flag("--track-ari", sa.track_ari);

  MetricsArgs ma;
  auto* met = app.add_subcommand("metrics", "Compare label files and score them on a graph or data");
  met->add_option("--labels", ma.labels, "Labels file (repeat for a pairwise comparison)")->required();
  met->add_option("--graph", ma.graph);
  met->add_option("--nodes", ma.nodes);
  met->add_flag("--weighted", ma.weighted);
  met->add_option("--data", ma.data);
  met->add_option("--out", ma.out);

  std::string manifest, replay_out;
  auto* rep = app.add_subcommand("replay", "Rerun a command from its manifest.json");
  rep->add_option("--manifest", manifest)->required();
  rep->add_option("--out", replay_out, "Write to this directory instead of the recorded one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*gen) cmd_generate(ga, *gen);
    else if (*clu) cmd_cluster(ca, *clu);
    else if (*com) cmd_community(co, *com);
    else if (*evo) cmd_evolve(ea, *evo);
    else if (*str) cmd_stream(sa, *str);
    else if (*met) cmd_metrics(ma, *met);
    else if (*rep) return run_replay(manifest, replay_out);
  } catch (const ValidationError& e) {
    std::cerr << "error [" << name << "]: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure [" << name << "]: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error [" << name << "]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
