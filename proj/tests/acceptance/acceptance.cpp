// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
//
//   xtal_acceptance [--work-dir DIR] [--only N ...]

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "xtal/checkpoint.hpp"
#include "xtal/config.hpp"
#include "xtal/evaluation.hpp"
#include "xtal/io.hpp"
#include "xtal/sampler.hpp"
#include "xtal/verify.hpp"

using namespace xtal;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

/// Folds a list of checks into one outcome.
Outcome all_of(const std::vector<verify::CheckResult>& checks) {
  Outcome o{true, ""};
  for (const auto& c : checks) {
    o.pass = o.pass && c.pass;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += c.name + " " + (c.pass ? "ok" : "FAIL") + " worst " + fmt(c.worst, 3) + " tol " +
                fmt(c.tolerance, 3);
  }
  return o;
}

Outcome timed(const verify::CheckResult& c, double limit_seconds) {
  Outcome o = all_of({c});
  const bool fast = c.seconds <= limit_seconds;
  o.pass = o.pass && fast;
  o.detail += ", " + fmt(c.seconds, 3) + " s (limit " + fmt(limit_seconds) + " s)";
  return o;
}

struct PipelineResult {
  double first_loss = 0.0;
  double last_loss = 0.0;
  MetricsReport metrics;
  ReconstructionMetrics recon;
  double seconds = 0.0;
  RunConfig config;
  Checkpoint checkpoint;
};

/// Train on the split, sample 100 materials and optionally reconstruct the test part.
PipelineResult run_pipeline(RunConfig c, const Split<Material>& split, const std::string& mode,
                            const fs::path& dir, bool reconstruct) {
  const auto t0 = Clock::now();
  c.score_matching_mode = mode;
  c.validate();
  fs::create_directories(dir);
  std::mt19937_64 rng(c.seed);
  const EdgeStd s = estimate_edge_std(split.train, c.schedule(), c.cutoff, rng);
  const JointModel model = c.joint_model(s);
  const JointTrainResult trained = train_joint(split.train, c.train(), model, model.init(c.seed));
  trained.curve.write_csv((dir / "loss.csv").string());
  Checkpoint ckpt{c.to_text(), s, trained.params};
  save_checkpoint((dir / "checkpoint.xck").string(), ckpt);

  std::mt19937_64 sample_rng(c.seed + 1);
  std::vector<Material> gen;
  for (int i = 0; i < 100; ++i) {
    gen.push_back(generate_material(model, trained.params, c.sampler(), sample_rng, c.generation())
                      .material);
  }
  save_dataset((dir / "gen.jsonl").string(), gen);

  PipelineResult r;
  r.first_loss = trained.curve.first().front();
  r.last_loss = trained.curve.last().front();
  r.metrics = evaluate(gen, split.test, c.coverage());
  r.metrics.write_key_value((dir / "metrics.txt").string());
  if (reconstruct) {
    std::vector<std::pair<Material, Material>> pairs;
    for (const Material& m : split.test) {
      pairs.emplace_back(
          m, reconstruct_material(model, trained.params, m, c.sampler(), sample_rng, c.generation())
                 .material);
    }
    r.recon = reconstruction_metrics(pairs, c.cutoff);
  }
  r.seconds = seconds_since(t0);
  r.config = c;
  r.checkpoint = std::move(ckpt);
  return r;
}

Split<Material> desk_split(const RunConfig& c) {
  return split_dataset(synth_perovskite_corpus(500, c.synth_noise, c.seed), c.seed);
}

Outcome criterion_training(const fs::path& work, std::optional<PipelineResult>& distance_run) {
  const RunConfig c = RunConfig::load(XTAL_DESK_CONFIG);
  const auto t0 = Clock::now();
  const Split<Material> split = desk_split(c);
  distance_run = run_pipeline(c, split, "distance", work / "distance", true);
  const PipelineResult& r = *distance_run;
  const double seconds = seconds_since(t0);
  const double drop = 1.0 - r.last_loss / r.first_loss;
  const bool a = drop >= 0.5;
  const bool b = r.metrics.structure_validity >= 0.9;
  const bool cc = r.recon.lattice_length_rmse <= 0.15;
  const bool d = r.recon.atom_type_match_rate >= 0.8;
  const bool t = seconds <= 1800.0;
  Outcome o;
  o.pass = a && b && cc && d && t;
  o.detail = "split " + std::to_string(split.train.size()) + "/" + std::to_string(split.val.size()) +
             "/" + std::to_string(split.test.size()) + "; loss " + fmt(r.first_loss) + " -> " +
             fmt(r.last_loss) + " (drop " + fmt(100 * drop, 3) + "%)" + (a ? "" : " FAIL") +
             "; structure_validity " + fmt(r.metrics.structure_validity) + (b ? "" : " FAIL") +
             "; lattice_length_rmse " + fmt(r.recon.lattice_length_rmse) + " A" + (cc ? "" : " FAIL") +
             "; type_match " + fmt(r.recon.atom_type_match_rate) + (d ? "" : " FAIL") + "; " +
             fmt(seconds) + " s" + (t ? "" : " FAIL");
  return o;
}

Outcome criterion_coordinate_mode(const fs::path& work, std::optional<PipelineResult>& distance_run) {
  const RunConfig c = RunConfig::load(XTAL_DESK_CONFIG);
  const Split<Material> split = desk_split(c);
  if (!distance_run) distance_run = run_pipeline(c, split, "distance", work / "distance", false);
  const PipelineResult coord = run_pipeline(c, split, "coordinate", work / "coordinate", false);

  const JointModel model = coord.config.joint_model(coord.checkpoint.edge_std);
  const Parameters& params = coord.checkpoint.params;
  const verify::EdgeScoreFn scores = [&](const MultiGraph& g, const std::vector<int>& types) {
    return edge_scores(model.score.net, params, g, types, 1).values;
  };
  const auto checks = verify::run_all(c.seed, scores, c.cutoff);
  bool suite = true;
  for (const auto& r : checks) suite = suite && r.pass;

  const fs::path report = work / "mode_comparison.txt";
  {
    std::ofstream out(report);
    out << std::setprecision(6);
    out << "mode        loss_first  loss_last  composition_validity  structure_validity  emd_density\n";
    for (const PipelineResult* r : {static_cast<const PipelineResult*>(&*distance_run), &coord}) {
      out << std::left << std::setw(12) << r->config.score_matching_mode << std::setw(12)
          << r->first_loss << std::setw(11) << r->last_loss << std::setw(22)
          << r->metrics.composition_validity << std::setw(20) << r->metrics.structure_validity
          << r->metrics.emd_density << '\n';
    }
    out << "\nverify suite with the coordinate-mode score network:\n";
    for (const auto& r : checks) out << verify::format_result(r) << '\n';
  }
  const bool finite = std::isfinite(coord.last_loss) && coord.last_loss < coord.first_loss;
  Outcome o;
  o.pass = suite && finite && fs::exists(report);
  o.detail = "coordinate loss " + fmt(coord.first_loss) + " -> " + fmt(coord.last_loss) +
             "; validity distance " + fmt(distance_run->metrics.structure_validity) + " vs coordinate " +
             fmt(coord.metrics.structure_validity) + "; verify suite " +
             (suite ? "all passed" : "FAILED") + "; report " + report.string();
  return o;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome criterion_cli_determinism(const fs::path& work) {
  const fs::path root = work / "cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path conf = root / "tiny.conf";
  std::ofstream(conf) << "seed = 3\ncutoff = 3.5\nmax_atoms = 6\nlayers = 1\nhidden = 8\nrbf_count = 4\n"
                         "latent_a_dim = 4\nlatent_l_dim = 4\ndecoder_hidden = 8\n"
                         "element_embed_dim = 4\nbatch_size = 8\nepochs = 3\nnoise_levels = 5\n"
                         "steps_per_level = 5\n";
  const std::string x = std::string("\"") + XTAL_CLI + "\"";
  const std::string cfg = " --config \"" + conf.string() + "\"";
  auto run = [](const std::string& cmd) { return std::system((cmd + " > /dev/null").c_str()) == 0; };
  if (!run(x + " synth-data --count 20 --out \"" + (root / "data.jsonl").string() + "\"" + cfg)) {
    return {false, "synth-data failed"};
  }
  const std::vector<std::string> files = {"train/checkpoint.xck", "train/loss.csv", "gen.jsonl",
                                          "metrics.txt", "metrics.csv"};
  std::vector<std::string> first;
  for (const std::string tag : {"a", "b"}) {
    const fs::path d = root / tag;
    const std::string data = " --data \"" + (root / "data.jsonl").string() + "\"";
    const bool ok =
        run(x + " train" + data + " --out-dir \"" + (d / "train").string() + "\"" + cfg) &&
        run(x + " sample --checkpoint \"" + (d / "train/checkpoint.xck").string() + "\" -n 4 --out \"" +
            (d / "gen.jsonl").string() + "\"") &&
        run(x + " eval --gen \"" + (d / "gen.jsonl").string() + "\" --ref \"" +
            (root / "data.jsonl").string() + "\" --out \"" + (d / "metrics.txt").string() +
            "\" --csv \"" + (d / "metrics.csv").string() + "\"");
    if (!ok) return {false, "CLI run " + tag + " failed"};
    for (const auto& f : files) {
      const std::string bytes = read_file(d / f);
      if (tag == "a") {
        first.push_back(bytes);
      } else if (bytes != first[&f - files.data()]) {
        return {false, f + " differs between runs"};
      }
    }
  }
  return {true, "train, sample and eval outputs identical across two runs (" +
                    std::to_string(files.size()) + " files)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string work_dir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Directory for intermediate outputs");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);
  const fs::path work(work_dir);
  fs::create_directories(work);

  std::optional<PipelineResult> distance_run;
  const std::uint64_t seed = 20261014;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"assembled score invariance",
       [&] {
         return timed(verify::check_assembled_invariance(verify::random_backbone_scores(seed), 4.0, 100,
                                                         seed + 1, 1e-8),
                      60.0);
       }},
      {"multigraph oracle and distance invariance",
       [&] {
         return all_of({verify::check_multigraph_oracle(200, seed + 2),
                        verify::check_distance_invariance(200, seed + 3, 1e-9)});
       }},
      {"gradient checks",
       [&] {
         return all_of({verify::check_unit_vector_gradient(100, seed + 4, 1e-6),
                        verify::check_backbone_gradients(seed + 5, 1e-5),
                        verify::check_denoising_target(1000, seed + 6, 1e-6)});
       }},
      {"lattice round trip and rotation invariance",
       [&] {
         return all_of({verify::check_lattice_roundtrip(1000, seed + 7, 1e-9),
                        verify::check_lattice_rotation_invariance(1000, seed + 8, 1e-10)});
       }},
      {"zero-sum law", [&] { return all_of({verify::check_zero_sum(200, seed + 9, 1e-10)}); }},
      {"alignment oracle", [&] { return all_of({verify::check_alignment_oracle(200, seed + 10)}); }},
      {"analytic sampler", [&] { return timed(verify::check_analytic_sampler(500, seed + 11), 300.0); }},
      {"emd, coverage and composition oracles",
       [&] {
         return all_of({verify::check_emd_oracle(1000, seed + 12, 1e-9),
                        verify::check_coverage_identity(20, seed + 13),
                        verify::check_composition_oracle()});
       }},
      {"desk training run", [&] { return criterion_training(work, distance_run); }},
      {"coordinate mode", [&] { return criterion_coordinate_mode(work, distance_run); }},
      {"CLI determinism", [&] { return criterion_cli_determinism(work); }},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << std::setw(2) << id << " " << (o.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << o.detail << " [" << fmt(seconds_since(t0), 3) << " s]"
              << std::endl;
  }
  std::cout << (all ? "all criteria passed" : "some criteria FAILED") << '\n';
  return all ? 0 : 1;
}
