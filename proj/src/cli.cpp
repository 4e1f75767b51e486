// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "binaural/checkpoint.hpp"
#include "binaural/io.hpp"
#include "binaural/model.hpp"
#include "binaural/scenes.hpp"
#include "binaural/training.hpp"

namespace binaural::cli {

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Experiment file with [data], [model] and [train] sections");
  cmd->add_option("--seed", c.seed, "Random seed");
}

ExperimentConfig load_config(const Common& c) {
  return c.config.empty() ? ExperimentConfig{} : ExperimentConfig::from_ini_file(c.config);
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

Model<float> load_model(const std::string& path) { return Model<float>::from_checkpoint(load_checkpoint(path)); }

WeightParams weights_for(const TrainConfig& t, const Model<float>& model) {
  return t.custom_weights ? t.weights : WeightParams::centered(model.config().visual_grid());
}

void check_frame(const Image& frame, const Model<float>& model, const std::string& path) {
  const int s = model.config().image_size;
  if (frame.width != s || frame.height != s)
    throw std::runtime_error("frame " + path + " is " + std::to_string(frame.width) + "x" +
                             std::to_string(frame.height) + ", the model expects " + std::to_string(s) + "x" +
                             std::to_string(s));
}

// Rescales to [0, 1]; a flat grid maps to 0.5.
RealGrid min_max(const RealGrid& g) {
  const double lo = g.minCoeff(), hi = g.maxCoeff();
  if (!(hi > lo)) return RealGrid::Constant(g.rows(), g.cols(), 0.5);
  return (g.array() - lo) / (hi - lo);
}

struct GenData {
  Common common;
  std::string out;
  std::optional<int> scenes;
  std::optional<double> labeled_frac, val_frac, test_frac, duration;
  bool itd = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-data", "Render a seeded synthetic dataset");
    add_common(cmd, common);
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--scenes", scenes, "Number of scenes");
    cmd->add_option("--labeled-frac", labeled_frac, "Fraction of scenes with binaural labels");
    cmd->add_option("--val-frac", val_frac, "Validation fraction");
    cmd->add_option("--test-frac", test_frac, "Test fraction");
    cmd->add_option("--duration", duration, "Scene length in seconds");
    cmd->add_flag("--itd", itd, "Add interaural time differences");
  }

  int run(std::ostream& out_stream) const {
    DatasetConfig d = load_config(common).data;
    if (scenes) d.num_scenes = *scenes;
    if (labeled_frac) d.labeled_fraction = *labeled_frac;
    if (val_frac) d.val_fraction = *val_frac;
    if (test_frac) d.test_fraction = *test_frac;
    if (duration) d.duration = *duration;
    if (itd) d.itd = true;
    if (common.seed) d.seed = *common.seed;
    const auto m = make_dataset(d, out);
    const auto labeled = std::count_if(m.rows.begin(), m.rows.end(), [](const ManifestRow& r) { return r.labeled; });
    out_stream << "wrote " << m.rows.size() << " scenes (" << labeled << " labeled) to " << out << "\n";
    return kExitOk;
  }
};

struct Train {
  Common common;
  std::string data, out, metrics, feature_layers;
  std::optional<int> epochs;
  std::optional<double> lambda_con, labeled_frac, learning_rate;
  bool labeled_only = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train a model on a generated dataset");
    add_common(cmd, common);
    cmd->add_option("--data", data, "Dataset directory")->required();
    cmd->add_option("--out", out, "Checkpoint path")->required();
    cmd->add_option("--metrics", metrics, "Metrics CSV (default: <out>.metrics.csv)");
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--lambda-con", lambda_con, "Weight of the consistency loss");
    cmd->add_option("--labeled-frac", labeled_frac, "Relabel the training split to this labeled fraction");
    cmd->add_option("--learning-rate", learning_rate, "Adam learning rate");
    cmd->add_flag("--labeled-only", labeled_only, "Train on labeled scenes only");
    cmd->add_option("--feature-layers", feature_layers, "Decoder layers for the audio feature, e.g. 1 or 1,2");
  }

  int run(std::ostream& out_stream) const {
    TrainConfig t = load_config(common).train;
    if (common.seed) t.seed = *common.seed;
    if (epochs) t.epochs = *epochs;
    if (lambda_con) t.lambda_con = *lambda_con;
    if (labeled_frac) t.labeled_fraction = *labeled_frac;
    if (learning_rate) t.learning_rate = *learning_rate;
    if (labeled_only) t.labeled_only = true;
    if (!feature_layers.empty()) t.model.set("feature_layers", feature_layers);
    t.validate();
    const auto manifest = read_manifest(data);
    const std::string metrics_path = metrics.empty() ? out + ".metrics.csv" : metrics;
    train(t, manifest, out, metrics_path, [&](const std::string& line) {
      out_stream << line << "\n" << std::flush;
    });
    out_stream << "checkpoint " << out << "\nmetrics " << metrics_path << "\n";
    return kExitOk;
  }
};

struct Eval {
  Common common;
  std::string ckpt, data, split = "test", report;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Score a checkpoint and the Mono baseline on one split");
    add_common(cmd, common);
    cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
    cmd->add_option("--data", data, "Dataset directory")->required();
    cmd->add_option("--split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
    cmd->add_option("--report", report, "Metrics CSV to write");
  }

  int run(std::ostream& out_stream) const {
    const auto model = load_model(ckpt);
    const auto t = load_config(common).train;
    const auto scenes = load_split(read_manifest(data), split);
    for (const auto& s : scenes) check_frame(s.frame, model, s.id);
    const auto ev = evaluate(model, scenes, split, weights_for(t, model));
    if (!report.empty()) write_metrics(report, {ev.model_row, ev.mono_row});
    out_stream << metrics_header() << "\n" << metrics_line(ev.model_row) << "\n" << metrics_line(ev.mono_row) << "\n";
    return kExitOk;
  }
};

struct Spatialize {
  Common common;
  std::string ckpt, mono, out;
  std::vector<std::string> frames;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("spatialize", "Turn a mono recording into binaural audio");
    add_common(cmd, common);
    cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
    cmd->add_option("--mono", mono, "Mono 16 kHz WAV")->required();
    cmd->add_option("--frame", frames, "PPM frame; repeat for frames spread evenly over the clip")->required();
    cmd->add_option("--out", out, "Stereo WAV to write")->required();
  }

  int run(std::ostream& out_stream) const {
    const auto model = load_model(ckpt);
    const auto audio = read_wav_mono(mono);
    const double seconds = static_cast<double>(audio.size()) / audio.sample_rate;
    std::vector<TimedFrame> timed;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      TimedFrame f;
      f.time = (i + 0.5) * seconds / frames.size();
      f.image = read_ppm(frames[i]);
      check_frame(f.image, model, frames[i]);
      timed.push_back(std::move(f));
    }
    write_wav(out, predict_binaural(model, audio, timed));
    out_stream << "wrote " << out << "\n";
    return kExitOk;
  }
};

struct Attend {
  Common common;
  std::string ckpt, mono, frame, out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("attend", "Dump co-attention heat maps for the centered segment");
    add_common(cmd, common);
    cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
    cmd->add_option("--mono", mono, "Mono 16 kHz WAV")->required();
    cmd->add_option("--frame", frame, "PPM frame")->required();
    cmd->add_option("--out", out, "Output directory")->required();
  }

  int run(std::ostream& out_stream) const {
    const auto model = load_model(ckpt);
    const auto audio = read_wav_mono(mono);
    const auto image = read_ppm(frame);
    check_frame(image, model, frame);
    const auto t = load_config(common).train;
    const auto d = attend(model, audio, image, weights_for(t, model));

    const std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    const int cells = d.height * d.width;
    for (int r = 0; r < d.rows; ++r) {
      for (int c = 0; c < d.cols; ++c) {
        const int k = r * d.cols + c;
        RealGrid map(d.height, d.width);
        for (int y = 0; y < d.height; ++y)
          for (int x = 0; x < d.width; ++x) map(y, x) = (d.coattention[k * cells + y * d.width + x] + 1.0) / 2.0;
        write_pgm((dir / ("patch_" + std::to_string(r) + "_" + std::to_string(c) + ".pgm")).string(), map);
      }
    }
    write_pgm((dir / "aggregate.pgm").string(), min_max(d.aggregate));
    write_pgm((dir / "p_a.pgm").string(), d.p_a);
    write_pgm((dir / "p_av.pgm").string(), d.p_av);

    std::ofstream csv(dir / "attention.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "attention.csv").string());
    csv << "row,col,energy,p_a,p_av\n";
    for (int r = 0; r < d.rows; ++r)
      for (int c = 0; c < d.cols; ++c)
        csv << r << "," << c << "," << d.energy[r * d.cols + c] << "," << d.p_a(r, c) << "," << d.p_av(r, c) << "\n";
    if (!csv) throw std::runtime_error("cannot write " + (dir / "attention.csv").string());

    Eigen::Index y = 0, x = 0;
    d.aggregate.maxCoeff(&y, &x);
    out_stream << "aggregate peak at column " << x << " of " << d.width << ", row " << y << " of " << d.height
               << "\nwrote " << d.rows * d.cols + 3 << " heat maps and attention.csv to " << out << "\n";
    return kExitOk;
  }
};

struct Metrics {
  Common common;
  std::string pred, gt;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("metrics", "D_STFT and D_ENV between two stereo WAV files");
    add_common(cmd, common);
    cmd->add_option("--pred", pred, "Predicted stereo WAV")->required();
    cmd->add_option("--gt", gt, "Ground-truth stereo WAV")->required();
  }

  int run(std::ostream& out_stream) const {
    load_config(common);
    const auto a = read_wav_stereo(pred);
    const auto b = read_wav_stereo(gt);
    if (a.left.sample_rate != b.left.sample_rate) throw std::runtime_error("metrics: sample rates differ");
    if (a.size() != b.size()) throw std::runtime_error("metrics: lengths differ");
    const auto s = score(a, b);
    out_stream << "D_STFT " << fixed(s.d_stft) << "\nD_ENV " << fixed(s.d_env) << "\n";
    return kExitOk;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Mono-to-binaural spatialization from a video frame", "binaural");
  app.require_subcommand(1, 1);
  GenData gen;
  Train tr;
  Eval ev;
  Spatialize sp;
  Attend at;
  Metrics me;
  gen.add(app);
  tr.add(app);
  ev.add(app);
  sp.add(app);
  at.add(app);
  me.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (app.got_subcommand("gen-data")) return gen.run(out);
    if (app.got_subcommand("train")) return tr.run(out);
    if (app.got_subcommand("eval")) return ev.run(out);
    if (app.got_subcommand("spatialize")) return sp.run(out);
    if (app.got_subcommand("attend")) return at.run(out);
    return me.run(out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace binaural::cli
