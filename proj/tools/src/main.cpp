#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "xtal/checkpoint.hpp"
#include "xtal/config.hpp"
#include "xtal/error.hpp"
#include "xtal/evaluation.hpp"
#include "xtal/io.hpp"
#include "xtal/sampler.hpp"
#include "xtal/verify.hpp"

namespace fs = std::filesystem;
using namespace xtal;

namespace {

struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "Flat key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "Override one config key (key=value), repeatable");
    cmd->add_option("--seed", seed, "Random seed (overrides the config)");
  }

  /// Config file (or `base` text) with --set and --seed applied, validated.
  RunConfig resolve(const std::string& base = "") const {
    RunConfig c = !path.empty() ? RunConfig::load(path)
                  : base.empty() ? RunConfig{}
                                 : RunConfig::parse(base);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void echo_config(const fs::path& output, const RunConfig& c) {
  write_text(fs::path(output.string() + ".config"), c.to_text());
}

void ensure_dir(const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::string format_edge_std(const EdgeStd& s) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < s.sigma_hats.size(); ++i) out << i + 1 << ' ' << s.sigma_hats[i] << '\n';
  return out.str();
}

struct Loaded {
  RunConfig config;
  Checkpoint ckpt;
  JointModel model;
};

Loaded load_model(const std::string& checkpoint, const ConfigFlags& flags) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  RunConfig c = flags.resolve(ckpt.config_text);
  JointModel model = c.joint_model(ckpt.edge_std);
  return Loaded{std::move(c), std::move(ckpt), std::move(model)};
}

std::vector<MaterialRecord> as_records(const std::vector<Material>& ms, const std::string& prefix) {
  std::vector<MaterialRecord> out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    out.push_back(MaterialRecord{prefix + std::to_string(i), ms[i], std::nullopt});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic material generation: data, training, sampling and evaluation"};
  app.require_subcommand(1);

  // synth-data
  int synth_count = 500;
  std::optional<double> synth_noise;
  std::string synth_out;
  ConfigFlags synth_flags;
  auto* synth = app.add_subcommand("synth-data", "Write a synthetic ABX3 perovskite corpus");
  synth->add_option("--count", synth_count, "Number of materials")->check(CLI::PositiveNumber);
  synth->add_option("--noise", synth_noise, "Coordinate jitter in angstrom");
  synth->add_option("--out", synth_out, "Output dataset")->required();
  synth_flags.attach(synth);

  // split
  std::string split_in, split_dir;
  ConfigFlags split_flags;
  auto* split = app.add_subcommand("split", "Shuffle a dataset into 3:1:1 train/val/test files");
  split->add_option("--data", split_in, "Input dataset")->required()->check(CLI::ExistingFile);
  split->add_option("--out-dir", split_dir, "Directory for train/val/test.jsonl")->required();
  split_flags.attach(split);

  // estimate-noise
  std::string noise_data, noise_out;
  ConfigFlags noise_flags;
  auto* noise = app.add_subcommand("estimate-noise", "Per-level edge-distance noise scales");
  noise->add_option("--data", noise_data, "Training dataset")->required()->check(CLI::ExistingFile);
  noise->add_option("--out", noise_out, "Output file (level sigma_hat per line)")->required();
  noise_flags.attach(noise);

  // train
  std::string train_data, train_dir, train_mode;
  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "Jointly train the VAE and the score network");
  train->add_option("--data", train_data, "Training dataset")->required()->check(CLI::ExistingFile);
  train->add_option("--out-dir", train_dir, "Directory for checkpoint, loss curve and config")
      ->required();
  train->add_option("--mode", train_mode, "Score matching target")
      ->check(CLI::IsMember({"distance", "coordinate"}));
  train_flags.attach(train);

  // sample
  std::string sample_ckpt, sample_out;
  int sample_n = 100;
  ConfigFlags sample_flags;
  auto* sample = app.add_subcommand("sample", "Generate materials from a trained checkpoint");
  sample->add_option("--checkpoint", sample_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  sample->add_option("-n,--count", sample_n, "Number of materials")->check(CLI::PositiveNumber);
  sample->add_option("--out", sample_out, "Output dataset")->required();
  sample_flags.attach(sample);

  // eval
  std::string eval_gen, eval_ref, eval_out, eval_csv;
  ConfigFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Validity, EMD, coverage and uniqueness metrics");
  eval->add_option("--gen", eval_gen, "Generated dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--ref", eval_ref, "Reference dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Key-value metrics file");
  eval->add_option("--csv", eval_csv, "CSV metrics file");
  eval_flags.attach(eval);

  // reconstruct
  std::string recon_ckpt, recon_data, recon_out, recon_metrics;
  ConfigFlags recon_flags;
  auto* recon = app.add_subcommand("reconstruct", "Encode and decode materials");
  recon->add_option("--checkpoint", recon_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  recon->add_option("--data", recon_data, "Materials to reconstruct")->required()->check(CLI::ExistingFile);
  recon->add_option("--out", recon_out, "Reconstructed dataset")->required();
  recon->add_option("--metrics", recon_metrics, "Key-value reconstruction metrics file");
  recon_flags.attach(recon);

  // optimize
  std::string opt_ckpt, opt_data, opt_out;
  ConfigFlags opt_flags;
  auto* opt = app.add_subcommand("optimize", "Latent gradient steps on the property head");
  opt->add_option("--checkpoint", opt_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  opt->add_option("--data", opt_data, "Starting materials")->required()->check(CLI::ExistingFile);
  opt->add_option("--out", opt_out, "Optimized dataset (property = predicted value)")->required();
  opt_flags.attach(opt);

  // verify
  std::string verify_ckpt;
  std::uint64_t verify_seed = 0;
  auto* ver = app.add_subcommand("verify", "Run the invariance, oracle and gradient suite");
  ver->add_option("--checkpoint", verify_ckpt, "Use a trained score network for the invariance check")
      ->check(CLI::ExistingFile);
  ver->add_option("--seed", verify_seed, "Random seed");

  // export-cif
  std::string cif_data, cif_dir;
  auto* cif = app.add_subcommand("export-cif", "Write one P1 CIF file per record");
  cif->add_option("--data", cif_data, "Dataset")->required()->check(CLI::ExistingFile);
  cif->add_option("--out-dir", cif_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const RunConfig c = synth_flags.resolve();
      const double s = synth_noise.value_or(c.synth_noise);
      ensure_dir(fs::path(synth_out).parent_path());
      save_dataset(synth_out, synth_perovskite_corpus(synth_count, s, c.seed));
      echo_config(synth_out, c);
      std::cout << "wrote " << synth_count << " materials to " << synth_out << '\n';
    } else if (*split) {
      const RunConfig c = split_flags.resolve();
      const auto parts = split_dataset(load_records(split_in), c.seed);
      ensure_dir(split_dir);
      save_records((fs::path(split_dir) / "train.jsonl").string(), parts.train);
      save_records((fs::path(split_dir) / "val.jsonl").string(), parts.val);
      save_records((fs::path(split_dir) / "test.jsonl").string(), parts.test);
      write_text(fs::path(split_dir) / "split.config", c.to_text());
      std::cout << "train " << parts.train.size() << ", val " << parts.val.size() << ", test "
                << parts.test.size() << '\n';
    } else if (*noise) {
      const RunConfig c = noise_flags.resolve();
      std::mt19937_64 rng(c.seed);
      const EdgeStd s = estimate_edge_std(load_dataset(noise_data), c.schedule(), c.cutoff, rng);
      ensure_dir(fs::path(noise_out).parent_path());
      write_text(noise_out, format_edge_std(s));
      echo_config(noise_out, c);
    } else if (*train) {
      RunConfig c = train_flags.resolve();
      if (!train_mode.empty()) c.score_matching_mode = train_mode;
      c.validate();
      const auto data = load_dataset(train_data);
      std::mt19937_64 rng(c.seed);
      const EdgeStd s = estimate_edge_std(data, c.schedule(), c.cutoff, rng);
      const JointModel model = c.joint_model(s);
      const JointTrainResult r = train_joint(data, c.train(), model, model.init(c.seed));
      const fs::path dir(train_dir);
      ensure_dir(dir);
      save_checkpoint((dir / "checkpoint.xck").string(), Checkpoint{c.to_text(), s, r.params});
      r.curve.write_csv((dir / "loss.csv").string());
      write_text(dir / "config.txt", c.to_text());
      write_text(dir / "edge_std.txt", format_edge_std(s));
      std::cout << std::setprecision(6) << "loss " << r.curve.first().front() << " -> "
                << r.curve.last().front() << " over " << r.curve.rows.size() << " epochs\n";
    } else if (*sample) {
      const Loaded l = load_model(sample_ckpt, sample_flags);
      std::mt19937_64 rng(l.config.seed);
      std::vector<Material> out;
      long empty_steps = 0, retries = 0;
      for (int i = 0; i < sample_n; ++i) {
        GeneratedMaterial g =
            generate_material(l.model, l.ckpt.params, l.config.sampler(), rng, l.config.generation());
        empty_steps += g.empty_graph_steps;
        retries += g.lattice_retries;
        out.push_back(std::move(g.material));
      }
      ensure_dir(fs::path(sample_out).parent_path());
      save_records(sample_out, as_records(out, "g"));
      echo_config(sample_out, l.config);
      std::cout << "wrote " << out.size() << " materials (" << retries << " lattice resamples, "
                << empty_steps << " empty-graph steps)\n";
    } else if (*eval) {
      const RunConfig c = eval_flags.resolve();
      const MetricsReport r = evaluate(load_dataset(eval_gen), load_dataset(eval_ref), c.coverage());
      for (const auto& [k, v] : r.fields()) std::cout << k << " = " << v << '\n';
      if (!eval_out.empty()) {
        r.write_key_value(eval_out);
        echo_config(eval_out, c);
      }
      if (!eval_csv.empty()) r.write_csv(eval_csv);
    } else if (*recon) {
      const Loaded l = load_model(recon_ckpt, recon_flags);
      std::mt19937_64 rng(l.config.seed);
      std::vector<std::pair<Material, Material>> pairs;
      std::vector<Material> out;
      for (const Material& m : load_dataset(recon_data)) {
        Material r = reconstruct_material(l.model, l.ckpt.params, m, l.config.sampler(), rng,
                                          l.config.generation())
                         .material;
        pairs.emplace_back(m, r);
        out.push_back(std::move(r));
      }
      ensure_dir(fs::path(recon_out).parent_path());
      save_records(recon_out, as_records(out, "r"));
      echo_config(recon_out, l.config);
      const ReconstructionMetrics rm = reconstruction_metrics(pairs, l.config.cutoff);
      std::ostringstream text;
      text << std::setprecision(17) << "atom_type_match_rate = " << rm.atom_type_match_rate
           << "\nlattice_rmse = " << rm.lattice_rmse << "\nlattice_length_rmse = "
           << rm.lattice_length_rmse << "\ndistance_rmse = " << rm.distance_rmse << '\n';
      std::cout << text.str();
      if (!recon_metrics.empty()) write_text(recon_metrics, text.str());
    } else if (*opt) {
      const Loaded l = load_model(opt_ckpt, opt_flags);
      if (!l.model.vae.config().property_head) {
        throw InvalidArgument("checkpoint was trained without a property head");
      }
      std::mt19937_64 rng(l.config.seed);
      const PropertyFn h = property_head_fn(l.model.vae, l.ckpt.params);
      std::vector<MaterialRecord> out;
      int index = 0;
      for (const Material& m : load_dataset(opt_data)) {
        const LatentState s = encode_vae(l.model.vae, l.ckpt.params, m, rng).state;
        Eigen::VectorXd z0(s.mu_a.size() + s.mu_l.size());
        z0 << s.mu_a, s.mu_l;
        const auto [za, zl] = optimize_property(s.mu_a, s.mu_l, h, l.config.optimize_steps,
                                                l.config.optimize_step_size, l.config.goal());
        Eigen::VectorXd z1(za.size() + zl.size());
        z1 << za, zl;
        const double before = h(z0, nullptr), after = h(z1, nullptr);
        try {
          Material d = decode_material(l.model, l.ckpt.params, za, zl, l.config.sampler(), rng,
                                       l.config.generation())
                           .material;
          std::cout << std::setprecision(6) << "o" << index << ": predicted " << before << " -> "
                    << after << ", decoded density " << density(d) << '\n';
          out.push_back(MaterialRecord{"o" + std::to_string(index), std::move(d), after});
        } catch (const UnrealizableCell& e) {
          std::cout << "o" << index << ": " << e.what() << '\n';
        }
        ++index;
      }
      ensure_dir(fs::path(opt_out).parent_path());
      save_records(opt_out, out);
      echo_config(opt_out, l.config);
    } else if (*ver) {
      verify::EdgeScoreFn scores;
      double cutoff = 4.0;
      std::optional<Loaded> l;
      if (!verify_ckpt.empty()) {
        l.emplace(load_model(verify_ckpt, ConfigFlags{}));
        cutoff = l->config.cutoff;
        scores = [&l](const MultiGraph& g, const std::vector<int>& types) {
          return edge_scores(l->model.score.net, l->ckpt.params, g, types, 1).values;
        };
      }
      bool ok = true;
      for (const auto& r : verify::run_all(verify_seed, scores, cutoff)) {
        std::cout << verify::format_result(r) << std::endl;
        ok = ok && r.pass;
      }
      std::cout << (ok ? "all checks passed" : "some checks FAILED") << '\n';
      return ok ? 0 : 1;
    } else if (*cif) {
      ensure_dir(cif_dir);
      const auto records = load_records(cif_data);
      for (const auto& r : records) {
        export_cif(r.material, (fs::path(cif_dir) / (r.id + ".cif")).string(), r.id);
      }
      std::cout << "wrote " << records.size() << " CIF files to " << cif_dir << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
