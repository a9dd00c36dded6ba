// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/dataio.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "speedest/common.hpp"
#include "speedest/rng.hpp"

namespace speedest::dataio {

using nlohmann::json;

void validate_track(const Track& track) {
  const std::string who = "track '" + track.track_id + "': ";
  if (!(std::isfinite(track.fps) && track.fps > 0)) {
    throw DataError(who + "field fps must be finite and positive");
  }
  if (track.speed_kmh && !(std::isfinite(*track.speed_kmh) && *track.speed_kmh >= 0)) {
    throw DataError(who + "field speed_kmh must be finite and non-negative");
  }
  if (track.frames.empty()) throw DataError(who + "field frames must be non-empty");
  std::int64_t prev_idx = 0;
  bool first = true;
  for (const Frame& f : track.frames) {
    if (!first && f.frame_idx <= prev_idx) {
      throw DataError(who + "field frame_idx must be strictly increasing (saw " +
                      std::to_string(f.frame_idx) + " after " + std::to_string(prev_idx) + ")");
    }
    prev_idx = f.frame_idx;
    first = false;
    const BoundingBox& b = f.box;
    for (double v : {b.x1, b.y1, b.x2, b.y2}) {
      if (!std::isfinite(v)) {
        throw DataError(who + "field box has non-finite coordinate at frame " +
                        std::to_string(f.frame_idx));
      }
    }
    if (!(b.x2 > b.x1)) {
      throw DataError(who + "field box requires x2 > x1 at frame " + std::to_string(f.frame_idx));
    }
    if (!(b.y2 > b.y1)) {
      throw DataError(who + "field box requires y2 > y1 at frame " + std::to_string(f.frame_idx));
    }
  }
}

std::string track_to_json_line(const Track& track) {
  json frames = json::array();
  for (const Frame& f : track.frames) {
    frames.push_back(json::array(
        {f.frame_idx, json::array({f.box.x1, f.box.y1, f.box.x2, f.box.y2})}));
  }
  json rec;
  rec["track_id"] = track.track_id;
  rec["fps"] = track.fps;
  if (track.speed_kmh) rec["speed_kmh"] = *track.speed_kmh;
  rec["frames"] = std::move(frames);
  return rec.dump();
}

Track track_from_json_line(const std::string& line) {
  const json rec = json::parse(line);
  if (!rec.is_object()) throw DataError("track record must be a JSON object");
  Track t;
  t.track_id = rec.at("track_id").get<std::string>();
  t.fps = rec.at("fps").get<double>();
  if (rec.contains("speed_kmh")) t.speed_kmh = rec.at("speed_kmh").get<double>();
  for (const json& fr : rec.at("frames")) {
    if (!fr.is_array() || fr.size() != 2 || !fr[1].is_array() || fr[1].size() != 4) {
      throw DataError("track '" + t.track_id + "': malformed frame entry");
    }
    Frame f;
    f.frame_idx = fr[0].get<std::int64_t>();
    f.box = BoundingBox{fr[1][0].get<double>(), fr[1][1].get<double>(), fr[1][2].get<double>(),
                        fr[1][3].get<double>()};
    t.frames.push_back(f);
  }
  validate_track(t);
  return t;
}

std::vector<Track> load_tracks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<Track> tracks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      tracks.push_back(track_from_json_line(line));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": parse error: " + e.what());
    }
  }
  return tracks;
}

void save_tracks(const std::vector<Track>& tracks, const std::filesystem::path& path) {
  for (const Track& t : tracks) validate_track(t);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    for (const Track& t : tracks) out << track_to_json_line(t) << '\n';
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

DatasetSplit split_dataset(const std::vector<Track>& tracks, double train_fraction,
                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split_dataset: train_fraction must be in (0,1)");
  }
  const std::size_t n = tracks.size();
  if (n < 2) throw DataError("split_dataset: need at least 2 tracks, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  auto train_count = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  train_count = std::min(std::max<std::size_t>(train_count, 1), n - 1);

  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < train_count; ++i) in_train[order[i]] = true;

  DatasetSplit split;
  split.seed = seed;
  split.train_fraction = train_fraction;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? split.train : split.test).push_back(tracks[i]);
  }
  return split;
}

}  // namespace speedest::dataio
