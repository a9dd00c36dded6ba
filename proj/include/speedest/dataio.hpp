// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace speedest::dataio {

/// Axis-aligned image rectangle in pixels, origin top-left. Width and height
/// are strictly positive and every coordinate is finite.
struct BoundingBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
};

struct Frame {
  std::int64_t frame_idx = 0;
  BoundingBox box;
};

/// One vehicle's labeled sequence of per-frame bounding boxes. speed_kmh is
/// absent for inference-only tracks.
struct Track {
  std::string track_id;
  double fps = 30.0;
  std::optional<double> speed_kmh;
  std::vector<Frame> frames;

  std::int64_t n_frames() const { return static_cast<std::int64_t>(frames.size()); }
};

struct DatasetSplit {
  std::vector<Track> train;
  std::vector<Track> test;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

/// Throws DataError naming the track and field if any invariant is violated.
void validate_track(const Track& track);

/// Reads newline-delimited track records. Parse failures report the 1-based
/// line number; invariant violations name the track and field.
std::vector<Track> load_tracks(const std::filesystem::path& path);

/// Writes tracks one JSON record per line. Numbers round-trip exactly:
/// load_tracks(save_tracks(ts)) == ts. Writes to a temp file and renames, so
/// a failed save leaves no partial output.
void save_tracks(const std::vector<Track>& tracks, const std::filesystem::path& path);

/// Serialize one track to its canonical single-line record (no newline).
std::string track_to_json_line(const Track& track);
Track track_from_json_line(const std::string& line);

/// Deterministic shuffled split. |train| = round(train_fraction * N), clamped
/// so both sides keep at least one track; each side preserves input order.
/// The shuffle is a Fisher-Yates pass driven by the project Rng (MT19937-64),
/// so seeds are portable across platforms.
DatasetSplit split_dataset(const std::vector<Track>& tracks, double train_fraction,
                           std::uint64_t seed);

}  // namespace speedest::dataio
