#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vvccs/geometry.hpp"

namespace vvccs::percep {

using geom::Rect;
using geom::Vec2;

using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat4 = std::array<std::array<double, 4>, 4>;
using Vec4 = std::array<double, 4>;

/// Normalize degrees into (-180, 180].
double wrap_deg(double a);

struct CameraCalib {
    std::string camera_id; // front | left | rear | right
    double yaw_deg = 0.0;  // mounting yaw in ego frame
    double center_px = 435.0;
    double width_px = 870.0;
    double slope = 0.1840; // degrees per pixel
};

/// Default four-camera rig: front 0, left +90, rear 180, right -90 degrees.
std::vector<CameraCalib> default_camera_rig();

struct SensorParams {
    double cam_range = 6.0;       // m
    double cam_min_range = 0.2;   // near blind zone
    double cam_fov_half = 80.0;   // deg, per camera
    double lidar_range = 12.0;    // m
    double lidar_res_deg = 0.45;
    double px_sigma = 0.0;        // pixel noise
    double range_sigma = 0.0;     // lidar range noise, m
    double dropout_prob = 0.0;    // per-target camera dropout
};

struct PixelBox {
    double x0 = 0, x1 = 0;
};

struct Detection {
    std::string camera_id;
    double pixel_x = 0.0;
    PixelBox bbox;
    std::string class_label; // car | person
    double t = 0.0;
};

struct PolarPoint {
    double angle_deg = 0.0; // ego frame
    double range = 0.0;
};

struct FusedObject {
    std::string object_key;
    std::string class_label;
    double rel_angle = 0.0; // deg, ego frame
    double rel_range = 0.0; // m
    Vec2 world_pos;
    Vec2 world_vel;
    Mat2 covariance{};
};

struct KalmanTrack {
    Vec4 state{};  // x, y, vx, vy
    Mat4 covariance{};
    double last_update = 0.0;
    int hits = 0;
    std::string class_label;
    std::string key;
};

struct KalmanNoise {
    // Process noise covers the full braking authority of the tracked cars;
    // anything lower and the constant-velocity model trails an accelerating
    // target by tens of centimeters.
    double accel_sigma = 3.0; // m/s^2
    double meas_sigma = 0.1;  // m measurement noise
};

/// Ego-frame angle for an image column: slope * pixel + bias, where the bias
/// folds in the camera center and mounting yaw. Throws on out-of-range pixels.
double pixel_to_angle(double pixel_x, const CameraCalib& calib);

/// Points inside the angle window, clustered by range; returns the median
/// angle and range of the nearest cluster, or nullopt if the window is empty.
std::optional<PolarPoint> fuse_angle_with_ranges(double window_lo_deg, double window_hi_deg,
                                                 const std::vector<PolarPoint>& cloud);

struct AngleObservation {
    double angle_deg = 0.0;
    std::string class_label;
};

/// Same-class detections at adjacent-camera frame boundaries within
/// theta_merge degrees collapse to one observation at the circular mean.
std::vector<AngleObservation> merge_adjacent_camera_detections(
    const std::vector<Detection>& detections, const std::vector<CameraCalib>& rig,
    double theta_merge_deg = 5.0);

/// Fused objects closer than d_merge collapse to one (positions averaged).
std::vector<FusedObject> merge_duplicates(const std::vector<FusedObject>& fused,
                                          double d_merge = 0.15);

/// One constant-velocity predict/update cycle. Throws if the prior covariance
/// is not symmetric positive semi-definite.
KalmanTrack kalman_update(const KalmanTrack& track, const Vec2& z, double dt,
                          const KalmanNoise& noise);

bool is_spd(const Mat4& m, double tol = 1e-9);

struct EgoPose {
    Vec2 pos;
    double heading_deg = 0.0;
};

struct WorldTarget {
    std::string class_label;
    Vec2 pos;
    double radius = 0.2; // effective half extent
};

struct SenseResult {
    std::vector<Detection> detections;
    std::vector<PolarPoint> cloud;
};

/// Synthetic camera + lidar observation of the world from the ego pose.
/// Targets occluded by a rectangle, inside camera blind zones, or out of
/// range produce nothing; lidar rays are laid on an absolute 0.45 deg grid.
SenseResult sense(const std::vector<WorldTarget>& targets, const EgoPose& ego,
                  const std::vector<Rect>& occluders, const SensorParams& params, double now,
                  std::mt19937_64& rng);

/// Multi-object tracker: associates fused measurements to Kalman tracks and
/// reports smoothed objects. Deterministic given the input order.
class Tracker {
public:
    explicit Tracker(KalmanNoise noise = {}) : noise_(noise) {}

    struct Measurement {
        Vec2 world_pos;
        std::string class_label;
    };

    std::vector<FusedObject> update(const std::vector<Measurement>& measurements, double now);
    const std::vector<KalmanTrack>& tracks() const { return tracks_; }

    double gate_radius = 0.5;
    double stale_after = 0.6; // s without an update before a track is dropped
    int confirm_hits = 2;     // updates before a track is reported

private:
    KalmanNoise noise_;
    std::vector<KalmanTrack> tracks_;
    int next_key_ = 0;
};

/// Full per-ego pipeline: detections -> angles -> lidar fusion -> duplicate
/// merge -> tracker update. Returns confirmed smoothed objects in world frame.
std::vector<FusedObject> run_pipeline(const SenseResult& sensed, const EgoPose& ego,
                                      const std::vector<CameraCalib>& rig, Tracker& tracker,
                                      double now, double fuse_window_deg = 4.0,
                                      double theta_merge_deg = 5.0, double d_merge = 0.15);

} // namespace vvccs::percep
