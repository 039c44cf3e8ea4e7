#include "xtal/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <variant>

#include "xtal/error.hpp"

namespace xtal {

namespace {

using Field = std::variant<double RunConfig::*, int RunConfig::*, bool RunConfig::*,
                           std::string RunConfig::*, std::uint64_t RunConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = {
      {"seed", &RunConfig::seed},
      {"cutoff", &RunConfig::cutoff},
      {"layers", &RunConfig::layers},
      {"hidden", &RunConfig::hidden},
      {"rbf_count", &RunConfig::rbf_count},
      {"latent_a_dim", &RunConfig::latent_a_dim},
      {"latent_l_dim", &RunConfig::latent_l_dim},
      {"decoder_hidden", &RunConfig::decoder_hidden},
      {"element_embed_dim", &RunConfig::element_embed_dim},
      {"element_count", &RunConfig::element_count},
      {"max_atoms", &RunConfig::max_atoms},
      {"property_head", &RunConfig::property_head},
      {"learning_rate", &RunConfig::learning_rate},
      {"batch_size", &RunConfig::batch_size},
      {"epochs", &RunConfig::epochs},
      {"clip_norm", &RunConfig::clip_norm},
      {"weight_k", &RunConfig::weight_k},
      {"weight_elements", &RunConfig::weight_elements},
      {"weight_counts", &RunConfig::weight_counts},
      {"weight_lattice", &RunConfig::weight_lattice},
      {"weight_kl", &RunConfig::weight_kl},
      {"weight_dsm", &RunConfig::weight_dsm},
      {"weight_property", &RunConfig::weight_property},
      {"sigma_max", &RunConfig::sigma_max},
      {"sigma_min", &RunConfig::sigma_min},
      {"noise_levels", &RunConfig::noise_levels},
      {"score_matching_mode", &RunConfig::score_matching_mode},
      {"epsilon", &RunConfig::epsilon},
      {"steps_per_level", &RunConfig::steps_per_level},
      {"rebuild_graph_every_step", &RunConfig::rebuild_graph_every_step},
      {"wrap_every_level", &RunConfig::wrap_every_level},
      {"lattice_retry_limit", &RunConfig::lattice_retry_limit},
      {"decode_mode", &RunConfig::decode_mode},
      {"cov_composition", &RunConfig::cov_composition},
      {"cov_structure", &RunConfig::cov_structure},
      {"optimize_steps", &RunConfig::optimize_steps},
      {"optimize_step_size", &RunConfig::optimize_step_size},
      {"optimize_goal", &RunConfig::optimize_goal},
      {"synth_noise", &RunConfig::synth_noise},
  };
  return e;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw InvalidArgument("config key '" + key + "': cannot parse '" + v + "'");
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.emplace_back(e.key);
    return out;
  }();
  return k;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  for (const auto& e : entries()) {
    if (key != e.key) continue;
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, bool>) {
            if (v == "true" || v == "1") {
              this->*member = true;
            } else if (v == "false" || v == "0") {
              this->*member = false;
            } else {
              throw InvalidArgument("config key '" + key + "': expected true|false, got '" + v + "'");
            }
          } else if constexpr (std::is_same_v<T, std::string>) {
            this->*member = v;
          } else {
            this->*member = parse_number<T>(key, v);
          }
        },
        e.field);
    return;
  }
  throw InvalidArgument("unknown config key '" + key + "'");
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", number);
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ParseError("repeated key '" + key + "'", number);
    try {
      c.set(key, line.substr(eq + 1));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), number);
    }
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str());
}

std::string RunConfig::to_text() const {
  std::ostringstream s;
  for (const auto& e : entries()) {
    s << e.key << " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, bool>) {
            s << (this->*member ? "true" : "false");
          } else if constexpr (std::is_same_v<T, double>) {
            s << format_double(this->*member);
          } else {
            s << this->*member;
          }
        },
        e.field);
    s << '\n';
  }
  return s.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_text() == b.to_text(); }

void RunConfig::validate() const {
  auto positive = [](double v, const char* k) {
    if (!(v > 0.0)) throw InvalidArgument(std::string("config key '") + k + "' must be positive");
  };
  auto non_negative = [](double v, const char* k) {
    if (!(v >= 0.0)) throw InvalidArgument(std::string("config key '") + k + "' must be >= 0");
  };
  positive(cutoff, "cutoff");
  positive(learning_rate, "learning_rate");
  positive(batch_size, "batch_size");
  non_negative(epochs, "epochs");
  non_negative(clip_norm, "clip_norm");
  for (const auto& [v, k] : {std::pair{weight_k, "weight_k"}, {weight_elements, "weight_elements"},
                             {weight_counts, "weight_counts"}, {weight_lattice, "weight_lattice"},
                             {weight_kl, "weight_kl"}, {weight_dsm, "weight_dsm"},
                             {weight_property, "weight_property"}}) {
    non_negative(v, k);
  }
  positive(sigma_max, "sigma_max");
  positive(sigma_min, "sigma_min");
  positive(noise_levels, "noise_levels");
  if (noise_levels > 1 && !(sigma_max > sigma_min)) {
    throw InvalidArgument("config: sigma_max must exceed sigma_min");
  }
  non_negative(epsilon, "epsilon");
  positive(steps_per_level, "steps_per_level");
  non_negative(lattice_retry_limit, "lattice_retry_limit");
  positive(cov_composition, "cov_composition");
  positive(cov_structure, "cov_structure");
  non_negative(optimize_steps, "optimize_steps");
  non_negative(optimize_step_size, "optimize_step_size");
  non_negative(synth_noise, "synth_noise");
  if (decode_mode != "argmax" && decode_mode != "sample") {
    throw InvalidArgument("config key 'decode_mode' must be argmax|sample");
  }
  if (optimize_goal != "maximize" && optimize_goal != "minimize") {
    throw InvalidArgument("config key 'optimize_goal' must be maximize|minimize");
  }
  mode();
  score_backbone().validate();
  vae().validate();
}

NoiseSchedule RunConfig::schedule() const {
  return NoiseSchedule::geometric(sigma_max, sigma_min, noise_levels);
}

ScoreMatchingMode RunConfig::mode() const {
  return parse_score_matching_mode(score_matching_mode);
}

BackboneConfig RunConfig::score_backbone() const {
  BackboneConfig b;
  b.layer_count = layers;
  b.hidden_size = hidden;
  b.rbf_count = rbf_count;
  b.cutoff = cutoff;
  b.latent_a_dim = latent_a_dim;
  b.latent_l_dim = latent_l_dim;
  b.noise_level_count = noise_levels;
  b.edge_head = true;
  b.pool_head = false;
  return b;
}

VaeConfig RunConfig::vae() const {
  VaeConfig v;
  v.encoder = score_backbone();
  v.encoder.noise_level_count = 0;
  v.encoder.edge_head = false;
  v.encoder.pool_head = true;
  v.latent_a_dim = latent_a_dim;
  v.latent_l_dim = latent_l_dim;
  v.decoder_hidden = decoder_hidden;
  v.element_embed_dim = element_embed_dim;
  v.element_count = element_count;
  v.max_atoms = max_atoms;
  v.property_head = property_head;
  v.weights = VaeLossWeights{weight_k,   weight_elements, weight_counts,  weight_lattice,
                             weight_kl,  weight_dsm,      weight_property};
  return v;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.adam.learning_rate = learning_rate;
  t.adam.clip_norm = clip_norm;
  t.seed = seed;
  return t;
}

SamplerConfig RunConfig::sampler() const {
  SamplerConfig s;
  s.epsilon = epsilon;
  s.steps_per_level = steps_per_level;
  s.schedule = schedule();
  s.rebuild_graph_every_step = rebuild_graph_every_step;
  s.wrap_every_level = wrap_every_level;
  return s;
}

GenerationOptions RunConfig::generation() const {
  return GenerationOptions{lattice_retry_limit,
                           decode_mode == "sample" ? DecodeMode::Sample : DecodeMode::Argmax};
}

CoverageThresholds RunConfig::coverage() const {
  return CoverageThresholds{cov_composition, cov_structure};
}

PropertyGoal RunConfig::goal() const {
  return optimize_goal == "minimize" ? PropertyGoal::Minimize : PropertyGoal::Maximize;
}

JointModel RunConfig::joint_model(const EdgeStd& edge_std) const {
  ScoreModel score{Backbone(score_backbone(), "score."), schedule(), edge_std, mode(), cutoff};
  return JointModel{TypeLatticeVae(vae(), "vae."), std::move(score)};
}

}  // namespace xtal
