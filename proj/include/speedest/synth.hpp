// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "speedest/dataio.hpp"

namespace speedest::synth {

/// Pinhole camera: u = f*X/Z + cx, v = f*Y/Z + cy. Camera frame has X right,
/// Y down, Z forward (into the scene).
struct CameraConfig {
  double focal_px = 2400.0;
  double cx = 1920.0;
  double cy = 1080.0;
  int image_w = 3840;
  int image_h = 2160;
  double fps = 30.0;

  void validate() const;
};

/// World-space axis-aligned box, camera coordinates, meters.
struct Box3 {
  double x_min = 0, x_max = 0;
  double y_min = 0, y_max = 0;
  double z_min = 0, z_max = 0;
};

enum class ScenarioKind { lateral, approach };

/// One synthetic trajectory. Vehicles are flat billboards parallel to the
/// image plane, which keeps the projection laws exactly invertible:
///  - lateral: the plate (length x height) slides along X at fixed depth;
///  - approach: the plate (width x height) closes in along Z toward the
///    camera, ending near z_end_m.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::lateral;
  double depth_m = 50.0;      // lateral: fixed camera distance
  double z0_m = 80.0;         // approach: starting distance
  double vehicle_w_m = 1.8;
  double vehicle_h_m = 1.5;
  double vehicle_l_m = 4.5;
  double speed_kmh = 60.0;
  int n_frames = 45;
  double noise_px_std = 0.5;  // per-corner Gaussian jitter
  std::uint64_t seed = 0;
  int direction = +1;         // lateral travel direction along X
  double x_center_m = 0.0;    // approach lane offset; lateral mid-track center
  double y_center_m = 0.0;    // vertical offset of the plate center

  void validate() const;
};

/// Defaults mirror the reference recordings this generator stands in for:
/// 400 tracks, constant speeds drawn uniformly from 30..105 km/h, 30 fps.
struct DatasetConfig {
  int n_tracks = 400;
  double speed_lo_kmh = 30.0;
  double speed_hi_kmh = 105.0;
  double lateral_fraction = 0.5;
  std::uint64_t seed = 42;
  CameraConfig camera;
  ScenarioConfig proto;  // template; per-track fields are drawn over it

  void validate() const;
};

/// Image bounding box of a world box: min/max over the projected corners,
/// sub-pixel precision. Degenerate extents are widened to 1e-6 px so the
/// box invariants hold. Throws DataError if any corner has Z <= 0.
dataio::BoundingBox project_box(const Box3& world_box, const CameraConfig& cam);

/// Noiseless trajectory plus optional per-corner Gaussian jitter (seeded).
/// The track is labeled with the exact speed. Throws DataError naming the
/// first frame at which the vehicle leaves the camera frustum.
dataio::Track generate_track(const ScenarioConfig& scn, const CameraConfig& cam,
                             const std::string& track_id = "synth-0");

std::vector<dataio::Track> generate_dataset(const DatasetConfig& cfg);

/// Convenience overload mirroring the core knobs.
std::vector<dataio::Track> generate_dataset(int n_tracks, double speed_lo_kmh,
                                            double speed_hi_kmh, double lateral_fraction,
                                            const CameraConfig& cam, std::uint64_t seed);

/// Independent closed-form estimator for lateral tracks: least-squares slope
/// of the box-center u coordinate over time, mapped through v = slope*Z/f.
/// Returns km/h.
double oracle_speed_lateral(const dataio::Track& track, const CameraConfig& cam, double depth_m);

}  // namespace speedest::synth
