// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#include "speedest/synth.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "speedest/common.hpp"
#include "speedest/rng.hpp"

namespace speedest::synth {

namespace {

constexpr double kMinExtentPx = 1e-6;
constexpr double kMinApproachDepthM = 5.0;

double mps(double kmh) { return kmh / kKmhPerMps; }

void widen_if_degenerate(double& lo, double& hi) {
  if (hi - lo < kMinExtentPx) {
    const double mid = 0.5 * (lo + hi);
    lo = mid - 0.5 * kMinExtentPx;
    hi = mid + 0.5 * kMinExtentPx;
  }
}

bool in_frame(const dataio::BoundingBox& b, const CameraConfig& cam) {
  return b.x2 > 0.0 && b.x1 < cam.image_w && b.y2 > 0.0 && b.y1 < cam.image_h;
}

/// Billboard for frame t of a scenario (all corners at one depth).
Box3 plate_at(const ScenarioConfig& scn, const CameraConfig& cam, int t) {
  const double v = mps(scn.speed_kmh);
  Box3 box;
  if (scn.kind == ScenarioKind::lateral) {
    // Sweep is centered on x_center_m so the default track stays in frame.
    const double t_mid = 0.5 * (scn.n_frames - 1);
    const double xc = scn.x_center_m + scn.direction * v * (t - t_mid) / cam.fps;
    box.x_min = xc - 0.5 * scn.vehicle_l_m;
    box.x_max = xc + 0.5 * scn.vehicle_l_m;
    box.z_min = box.z_max = scn.depth_m;
  } else {
    box.x_min = scn.x_center_m - 0.5 * scn.vehicle_w_m;
    box.x_max = scn.x_center_m + 0.5 * scn.vehicle_w_m;
    box.z_min = box.z_max = scn.z0_m - v * t / cam.fps;
  }
  box.y_min = scn.y_center_m - 0.5 * scn.vehicle_h_m;
  box.y_max = scn.y_center_m + 0.5 * scn.vehicle_h_m;
  return box;
}

}  // namespace

void CameraConfig::validate() const {
  if (!(std::isfinite(focal_px) && focal_px > 0)) throw ConfigError("camera: focal_px must be positive");
  if (!(std::isfinite(fps) && fps > 0)) throw ConfigError("camera: fps must be positive");
  if (image_w <= 0 || image_h <= 0) throw ConfigError("camera: image dimensions must be positive");
  if (!(cx >= 0 && cx <= image_w && cy >= 0 && cy <= image_h)) {
    throw ConfigError("camera: principal point must lie inside the image");
  }
}

void ScenarioConfig::validate() const {
  if (!(std::isfinite(speed_kmh) && speed_kmh >= 0)) throw ConfigError("scenario: speed_kmh must be non-negative");
  if (n_frames < 1) throw ConfigError("scenario: n_frames must be >= 1");
  if (!(noise_px_std >= 0)) throw ConfigError("scenario: noise_px_std must be >= 0");
  if (!(vehicle_w_m > 0 && vehicle_h_m > 0 && vehicle_l_m > 0)) {
    throw ConfigError("scenario: vehicle dimensions must be positive");
  }
  if (kind == ScenarioKind::lateral && !(depth_m > 0)) throw ConfigError("scenario: depth_m must be positive");
  if (kind == ScenarioKind::approach && !(z0_m > 0)) throw ConfigError("scenario: z0_m must be positive");
  if (direction != 1 && direction != -1) throw ConfigError("scenario: direction must be +1 or -1");
}

void DatasetConfig::validate() const {
  camera.validate();
  if (n_tracks < 1) throw ConfigError("dataset: n_tracks must be >= 1");
  if (!(speed_lo_kmh < speed_hi_kmh)) throw ConfigError("dataset: speed range must satisfy lo < hi");
  if (!(speed_lo_kmh >= 0)) throw ConfigError("dataset: speeds must be non-negative");
  if (!(lateral_fraction >= 0 && lateral_fraction <= 1)) {
    throw ConfigError("dataset: lateral_fraction must be in [0,1]");
  }
}

dataio::BoundingBox project_box(const Box3& world_box, const CameraConfig& cam) {
  double u_min = 0, u_max = 0, v_min = 0, v_max = 0;
  bool first = true;
  for (double x : {world_box.x_min, world_box.x_max}) {
    for (double y : {world_box.y_min, world_box.y_max}) {
      for (double z : {world_box.z_min, world_box.z_max}) {
        if (!(z > 0)) throw DataError("project_box: corner behind camera (Z <= 0)");
        const double u = cam.focal_px * x / z + cam.cx;
        const double v = cam.focal_px * y / z + cam.cy;
        if (first) {
          u_min = u_max = u;
          v_min = v_max = v;
          first = false;
        } else {
          u_min = std::min(u_min, u);
          u_max = std::max(u_max, u);
          v_min = std::min(v_min, v);
          v_max = std::max(v_max, v);
        }
      }
    }
  }
  widen_if_degenerate(u_min, u_max);
  widen_if_degenerate(v_min, v_max);
  return dataio::BoundingBox{u_min, v_min, u_max, v_max};
}

dataio::Track generate_track(const ScenarioConfig& scn, const CameraConfig& cam,
                             const std::string& track_id) {
  scn.validate();
  cam.validate();
  dataio::Track track;
  track.track_id = track_id;
  track.fps = cam.fps;
  track.speed_kmh = scn.speed_kmh;

  Rng noise_rng(scn.seed);
  for (int t = 0; t < scn.n_frames; ++t) {
    const Box3 plate = plate_at(scn, cam, t);
    dataio::BoundingBox box;
    if (plate.z_min <= kMinApproachDepthM * 0.02) {
      throw DataError(track_id + ": leaves frustum at frame " + std::to_string(t) +
                      " (behind or at camera)");
    }
    box = project_box(plate, cam);
    if (!in_frame(box, cam)) {
      throw DataError(track_id + ": leaves frustum at frame " + std::to_string(t));
    }
    if (scn.noise_px_std > 0) {
      box.x1 += noise_rng.normal(0.0, scn.noise_px_std);
      box.y1 += noise_rng.normal(0.0, scn.noise_px_std);
      box.x2 += noise_rng.normal(0.0, scn.noise_px_std);
      box.y2 += noise_rng.normal(0.0, scn.noise_px_std);
      widen_if_degenerate(box.x1, box.x2);
      widen_if_degenerate(box.y1, box.y2);
    }
    track.frames.push_back(dataio::Frame{t, box});
  }
  dataio::validate_track(track);
  return track;
}

std::vector<dataio::Track> generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  std::vector<dataio::Track> tracks(static_cast<std::size_t>(cfg.n_tracks));
  std::exception_ptr first_error;

#pragma omp parallel for schedule(static)
  for (int i = 0; i < cfg.n_tracks; ++i) {
    try {
      Rng rng = Rng::for_worker(cfg.seed, static_cast<std::uint64_t>(i));
      ScenarioConfig scn = cfg.proto;
      const bool lateral = rng.uniform() < cfg.lateral_fraction;
      scn.speed_kmh = rng.uniform(cfg.speed_lo_kmh, cfg.speed_hi_kmh);
      if (lateral) {
        scn.kind = ScenarioKind::lateral;
        scn.direction = rng.uniform() < 0.5 ? +1 : -1;
        scn.y_center_m = rng.uniform(-1.5, 1.5);
        scn.x_center_m = 0.0;
      } else {
        scn.kind = ScenarioKind::approach;
        // End the run close to the camera, where the scale-change signal is
        // strongest; the start distance follows from speed and length.
        const double z_end = rng.uniform(8.0, 20.0);
        scn.z0_m = z_end + mps(scn.speed_kmh) * (scn.n_frames - 1) / cfg.camera.fps;
        scn.x_center_m = rng.uniform(-1.0, 1.0);
        scn.y_center_m = rng.uniform(1.0, 1.4);
      }
      scn.seed = rng.next_u64();

      std::ostringstream id;
      id << "synth-" << std::setfill('0') << std::setw(6) << i;
      tracks[static_cast<std::size_t>(i)] = generate_track(scn, cfg.camera, id.str());
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const DataError& e) {
      throw DataError(std::string("generate_dataset: infeasible geometry: ") + e.what());
    }
  }
  return tracks;
}

std::vector<dataio::Track> generate_dataset(int n_tracks, double speed_lo_kmh,
                                            double speed_hi_kmh, double lateral_fraction,
                                            const CameraConfig& cam, std::uint64_t seed) {
  DatasetConfig cfg;
  cfg.n_tracks = n_tracks;
  cfg.speed_lo_kmh = speed_lo_kmh;
  cfg.speed_hi_kmh = speed_hi_kmh;
  cfg.lateral_fraction = lateral_fraction;
  cfg.camera = cam;
  cfg.seed = seed;
  return generate_dataset(cfg);
}

double oracle_speed_lateral(const dataio::Track& track, const CameraConfig& cam, double depth_m) {
  if (track.frames.size() < 2) {
    throw DataError("oracle_speed_lateral: track '" + track.track_id + "' too short");
  }
  // Least-squares slope of center-u against time in seconds.
  const double n = static_cast<double>(track.frames.size());
  double sum_t = 0, sum_u = 0;
  for (const auto& f : track.frames) {
    sum_t += f.frame_idx / cam.fps;
    sum_u += f.box.cx();
  }
  const double mean_t = sum_t / n;
  const double mean_u = sum_u / n;
  double cov = 0, var = 0;
  for (const auto& f : track.frames) {
    const double dt = f.frame_idx / cam.fps - mean_t;
    cov += dt * (f.box.cx() - mean_u);
    var += dt * dt;
  }
  const double slope_px_per_s = cov / var;
  return std::fabs(slope_px_per_s) * depth_m / cam.focal_px * kKmhPerMps;
}

}  // namespace speedest::synth
