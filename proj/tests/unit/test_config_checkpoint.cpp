#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "xtal/checkpoint.hpp"
#include "xtal/config.hpp"
#include "xtal/error.hpp"

using namespace xtal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "xtal_ckpt_test";
  fs::create_directories(d);
  return d / name;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(RunConfig, DefaultsFollowTrainingSetup) {
  const RunConfig c;
  EXPECT_EQ(c.learning_rate, 1e-3);
  EXPECT_EQ(c.batch_size, 128);
  EXPECT_EQ(c.epsilon, 1e-4);
  EXPECT_EQ(c.steps_per_level, 100);
  EXPECT_EQ(c.noise_levels, 50);
  EXPECT_EQ(c.sigma_max, 10.0);
  EXPECT_EQ(c.sigma_min, 0.01);
  EXPECT_EQ(c.weight_k, 1.0);
  EXPECT_EQ(c.weight_elements, 30.0);
  EXPECT_EQ(c.weight_counts, 1.0);
  EXPECT_EQ(c.weight_lattice, 10.0);
  EXPECT_EQ(c.weight_kl, 0.01);
  EXPECT_EQ(c.weight_dsm, 10.0);
  EXPECT_EQ(c.cutoff, 6.0);
  EXPECT_EQ(c.max_atoms, 20);
  EXPECT_EQ(c.element_count, 100);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, TextRoundTrip) {
  RunConfig c;
  c.seed = 123456789012345ULL;
  c.learning_rate = 0.1 + 0.2;
  c.property_head = false;
  c.score_matching_mode = "coordinate";
  c.sigma_min = 1.0 / 3.0;
  const RunConfig back = RunConfig::parse(c.to_text());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.learning_rate, c.learning_rate);
  EXPECT_EQ(back.sigma_min, c.sigma_min);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_FALSE(back.property_head);
  EXPECT_EQ(RunConfig::keys().size(), 39u);
}

TEST(RunConfig, ParserRules) {
  const RunConfig c = RunConfig::parse("# comment\n\n  epochs = 7  # trailing\nhidden=16\n");
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.hidden, 16);
  auto line_of = [](const std::string& text) {
    try {
      RunConfig::parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("epochs = 3\nbogus = 1\n"), 2);
  EXPECT_EQ(line_of("epochs = 3\nepochs = 4\n"), 2);
  EXPECT_EQ(line_of("epochs 3\n"), 1);
  EXPECT_EQ(line_of("epochs = three\n"), 1);
  EXPECT_EQ(line_of("property_head = maybe\n"), 1);
  EXPECT_THROW(RunConfig::parse("learning_rate = -1\n"), InvalidArgument);
  EXPECT_THROW(RunConfig::parse("score_matching_mode = polar\n"), InvalidArgument);
  EXPECT_THROW(RunConfig::parse("decode_mode = greedy\n"), InvalidArgument);
  EXPECT_THROW(RunConfig::parse("sigma_max = 0.001\n"), InvalidArgument);
}

TEST(RunConfig, Builders) {
  RunConfig c = RunConfig::parse("hidden = 16\nnoise_levels = 7\nlatent_a_dim = 5\nlatent_l_dim = 3\n");
  EXPECT_EQ(c.schedule().size(), 7);
  EXPECT_EQ(c.score_backbone().hidden_size, 16);
  EXPECT_EQ(c.score_backbone().noise_level_count, 7);
  EXPECT_TRUE(c.vae().encoder.pool_head);
  EXPECT_EQ(c.vae().latent_l_dim, 3);
  EXPECT_EQ(c.sampler().schedule.size(), 7);
  const JointModel m = c.joint_model(EdgeStd{std::vector<double>(7, 0.5)});
  const Parameters p = m.init(1);
  EXPECT_TRUE(p.contains("vae.head_e.w1"));
  EXPECT_TRUE(p.contains("score.level_embed"));
}

TEST(Checkpoint, BitExactRoundTrip) {
  RunConfig c = RunConfig::parse("hidden = 8\nnoise_levels = 3\nlatent_a_dim = 4\nlatent_l_dim = 4\n"
                                 "decoder_hidden = 8\nelement_embed_dim = 4\n");
  const EdgeStd s{{0.7, 0.2, 1.0 / 3.0}};
  Parameters p = c.joint_model(s).init(2);
  p.values()(0) = -0.0;
  p.values()(1) = 1e-310;
  const Checkpoint ck{c.to_text(), s, p};
  const fs::path a = scratch("a.xck"), b = scratch("b.xck");
  save_checkpoint(a.string(), ck);
  const Checkpoint back = load_checkpoint(a.string());
  EXPECT_EQ(back.config_text, ck.config_text);
  EXPECT_EQ(back.edge_std.sigma_hats, s.sigma_hats);
  EXPECT_EQ(back.params, p);
  EXPECT_TRUE(std::signbit(back.params.values()(0)));
  save_checkpoint(b.string(), back);
  EXPECT_EQ(read_bytes(a), read_bytes(b));
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const Checkpoint ck{RunConfig{}.to_text(), EdgeStd{{1.0}}, Parameters{}};
  const fs::path a = scratch("c.xck");
  save_checkpoint(a.string(), ck);
  std::string bytes = read_bytes(a);

  auto write = [&](const std::string& data) {
    const fs::path p = scratch("bad.xck");
    std::ofstream(p, std::ios::binary) << data;
    return p.string();
  };
  EXPECT_THROW(load_checkpoint(write("NOTACKPT" + bytes.substr(8))), IoError);
  EXPECT_THROW(load_checkpoint(write(bytes.substr(0, bytes.size() - 3))), IoError);
  EXPECT_THROW(load_checkpoint(write(bytes + "x")), IoError);
  std::string version = bytes;
  version[8] = 9;
  EXPECT_THROW(load_checkpoint(write(version)), IoError);
  EXPECT_THROW(load_checkpoint(scratch("nope.xck").string() + "z"), IoError);
}
