// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "speedest/common.hpp"
#include "speedest/serde.hpp"
#include "speedest/synth.hpp"
#include "speedest/train.hpp"

namespace speedest::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

struct GenerateArgs {
  std::string config_path;
  std::string out_path;
  std::int64_t seed_override = -1;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  synth::DatasetConfig cfg = serde::dataset_config_from_json(serde::load_json_file(a.config_path));
  if (a.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed_override);
  const auto tracks = synth::generate_dataset(cfg);
  dataio::save_tracks(tracks, a.out_path);

  double lo = *tracks.front().speed_kmh, hi = lo;
  for (const auto& t : tracks) {
    lo = std::min(lo, *t.speed_kmh);
    hi = std::max(hi, *t.speed_kmh);
  }
  out << "generated " << tracks.size() << " tracks -> " << a.out_path << "\n"
      << "speed range: " << fmt4(lo) << " to " << fmt4(hi) << " km/h\n";
  return kExitOk;
}

struct TrainArgs {
  std::string data_path;
  std::string model_config_path;
  std::string train_config_path;
  std::string out_path;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const models::ModelConfig mcfg =
      serde::model_config_from_json(serde::load_json_file(a.model_config_path));
  const train::TrainConfig tcfg =
      serde::train_config_from_json(serde::load_json_file(a.train_config_path));
  const auto tracks = dataio::load_tracks(a.data_path);

  Rng rng(tcfg.seed);
  models::SpeedModel model = models::build(mcfg, rng);
  train::TrainResult result = train::train(std::move(model), tracks, tcfg);
  train::save_checkpoint(result.model, tcfg, static_cast<int>(result.history.size()),
                         result.best_val_rmse, a.out_path);
  out << "variant: " << models::variant_name(mcfg.variant) << "\n"
      << "epochs run: " << result.history.size() << "\n"
      << "final train loss: " << fmt4(result.final_train_loss) << "\n"
      << "best validation RMSE: " << fmt4(result.best_val_rmse) << " km/h\n"
      << "checkpoint: " << a.out_path << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint_path;
  std::string data_path;
  std::string report_dir;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, const TestHooks* hooks) {
  const train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint_path);
  const auto tracks = dataio::load_tracks(a.data_path);

  metrics::Metrics m;
  if (hooks && hooks->eval_predictor) {
    m = metrics::evaluate_with(hooks->eval_predictor, tracks);
  } else {
    m = metrics::evaluate(ckpt.model, tracks);
  }
  metrics::ReportEntry entry;
  entry.model = models::variant_name(ckpt.model.config.variant);
  entry.dataset = std::filesystem::path(a.data_path).stem().string();
  entry.metrics = m;
  metrics::emit_report({entry}, a.report_dir);

  out << "tracks evaluated: " << m.n << "\n"
      << "mean accuracy: " << fmt4(m.mean_accuracy_pct) << " %\n"
      << "rmse: " << fmt4(m.rmse_kmh) << " km/h\n"
      << "report: " << (std::filesystem::path(a.report_dir) / "summary.csv").string() << "\n";
  return kExitOk;
}

struct PredictArgs {
  std::string checkpoint_path;
  std::string data_path;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint_path);
  const auto tracks = dataio::load_tracks(a.data_path);

  const std::int64_t need = ckpt.model.config.seq_len + 1;
  std::string too_short;
  for (const auto& t : tracks) {
    if (t.n_frames() < need) too_short += (too_short.empty() ? "" : ", ") + t.track_id;
  }
  if (!too_short.empty()) {
    throw DataError("tracks shorter than seq_len+1 = " + std::to_string(need) +
                    " frames: " + too_short);
  }
  for (const auto& t : tracks) {
    out << t.track_id << " " << fmt4(models::predict_track(ckpt.model, t).speed_kmh) << "\n";
  }
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out_path;
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  // Cell values stay verbatim strings so merging never re-rounds anything.
  struct Cell {
    std::string accuracy, rmse, n;
  };
  std::vector<std::string> model_order, dataset_order;
  std::map<std::pair<std::string, std::string>, Cell> cells;

  for (const auto& input : a.inputs) {
    const auto rows = read_csv(input);
    if (rows.empty() || rows.front() != std::vector<std::string>{"model", "dataset",
                                                                 "mean_accuracy_pct", "rmse_kmh",
                                                                 "n"}) {
      throw ConfigError("malformed summary CSV '" + input + "': unexpected header");
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() != 5) {
        throw ConfigError("malformed summary CSV '" + input + "': row " + std::to_string(i + 1) +
                          " has " + std::to_string(r.size()) + " columns");
      }
      const auto key = std::make_pair(r[0], r[1]);
      if (cells.count(key)) {
        throw ConfigError("duplicate (model, dataset) entry: " + r[0] + ", " + r[1]);
      }
      if (std::find(model_order.begin(), model_order.end(), r[0]) == model_order.end()) {
        model_order.push_back(r[0]);
      }
      if (std::find(dataset_order.begin(), dataset_order.end(), r[1]) == dataset_order.end()) {
        dataset_order.push_back(r[1]);
      }
      cells[key] = Cell{r[2], r[3], r[4]};
    }
  }

  std::ostringstream csv;
  csv << "model";
  for (const auto& d : dataset_order) {
    csv << ',' << d << "_accuracy_pct," << d << "_rmse_kmh," << d << "_n";
  }
  csv << '\n';
  for (const auto& m : model_order) {
    csv << m;
    for (const auto& d : dataset_order) {
      const auto it = cells.find(std::make_pair(m, d));
      if (it == cells.end()) {
        csv << ",,,";
      } else {
        csv << ',' << it->second.accuracy << ',' << it->second.rmse << ',' << it->second.n;
      }
    }
    csv << '\n';
  }
  write_text_atomic(a.out_path, csv.str());

  out << "model";
  for (const auto& d : dataset_order) out << "  |  " << d << " acc% / rmse";
  out << "\n";
  for (const auto& m : model_order) {
    out << m;
    for (const auto& d : dataset_order) {
      const auto it = cells.find(std::make_pair(m, d));
      out << "  |  " << (it == cells.end() ? "-" : it->second.accuracy + " / " + it->second.rmse);
    }
    out << "\n";
  }
  out << "written: " << a.out_path << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const TestHooks* hooks) {
  CLI::App app{"vehicle speed estimation from bounding-box tracks"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "chatty diagnostics on stderr");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "generate a synthetic track dataset");
  c_gen->add_option("--config", gen.config_path, "dataset config JSON")->required();
  c_gen->add_option("--out", gen.out_path, "output track file")->required();
  c_gen->add_option("--seed", gen.seed_override, "override the config seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a model on a labeled track file");
  c_train->add_option("--data", tr.data_path, "track file")->required();
  c_train->add_option("--model-config", tr.model_config_path, "model config JSON")->required();
  c_train->add_option("--train-config", tr.train_config_path, "train config JSON")->required();
  c_train->add_option("--out", tr.out_path, "checkpoint output path")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint on a labeled track file");
  c_eval->add_option("--checkpoint", ev.checkpoint_path, "checkpoint path")->required();
  c_eval->add_option("--data", ev.data_path, "track file")->required();
  c_eval->add_option("--report-dir", ev.report_dir, "directory for CSV reports")->required();

  PredictArgs pr;
  auto* c_predict = app.add_subcommand("predict", "predict speeds for a track file");
  c_predict->add_option("--checkpoint", pr.checkpoint_path, "checkpoint path")->required();
  c_predict->add_option("--data", pr.data_path, "track file")->required();

  ReportArgs rep;
  auto* c_report = app.add_subcommand("report", "merge summary CSVs into one comparison table");
  c_report->add_option("--inputs", rep.inputs, "summary CSV files")->required()->expected(-1);
  c_report->add_option("--out", rep.out_path, "merged CSV output path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*c_gen) return cmd_generate(gen, out);
    if (*c_train) return cmd_train(tr, out);
    if (*c_eval) return cmd_eval(ev, out, hooks);
    if (*c_predict) return cmd_predict(pr, out);
    if (*c_report) return cmd_report(rep, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace speedest::cli
