#include "vvccs/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vvccs::percep {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kClusterGap = 0.5; // m; range gap that splits lidar clusters

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool segment_intersects_rect(const Vec2& a, const Vec2& b, const Rect& r) {
    // slab clipping
    double t0 = 0.0, t1 = 1.0;
    double d[2] = {b.x - a.x, b.y - a.y};
    double lo[2] = {r.x0, r.y0}, hi[2] = {r.x1, r.y1};
    double p[2] = {a.x, a.y};
    for (int i = 0; i < 2; ++i) {
        if (std::abs(d[i]) < 1e-12) {
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        } else {
            double ta = (lo[i] - p[i]) / d[i];
            double tb = (hi[i] - p[i]) / d[i];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
    }
    return true;
}
} // namespace

double wrap_deg(double a) {
    a = std::fmod(a, 360.0);
    if (a <= -180.0) a += 360.0;
    if (a > 180.0) a -= 360.0;
    return a;
}

std::vector<CameraCalib> default_camera_rig() {
    return {
        {"front", 0.0},
        {"left", 90.0},
        {"rear", 180.0},
        {"right", -90.0},
    };
}

double pixel_to_angle(double pixel_x, const CameraCalib& calib) {
    if (pixel_x < 0.0 || pixel_x >= calib.width_px)
        throw std::invalid_argument("pixel out of sensor range for camera '" + calib.camera_id +
                                    "'");
    double bias = calib.yaw_deg - calib.slope * calib.center_px;
    return wrap_deg(calib.slope * pixel_x + bias);
}

std::optional<PolarPoint> fuse_angle_with_ranges(double window_lo_deg, double window_hi_deg,
                                                 const std::vector<PolarPoint>& cloud) {
    double half = wrap_deg(window_hi_deg - window_lo_deg) / 2.0;
    if (half <= 0) return std::nullopt;
    double center = wrap_deg(window_lo_deg + half);

    struct Hit {
        double rel_angle; // relative to window center
        double range;
    };
    std::vector<Hit> hits;
    for (const auto& p : cloud) {
        double rel = wrap_deg(p.angle_deg - center);
        if (std::abs(rel) <= half) hits.push_back({rel, p.range});
    }
    if (hits.empty()) return std::nullopt;

    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.range < b.range; });
    // clusters split on range gaps; nearest cluster wins
    std::size_t cluster_end = 1;
    while (cluster_end < hits.size() &&
           hits[cluster_end].range - hits[cluster_end - 1].range <= kClusterGap)
        ++cluster_end;

    std::vector<double> angles, ranges;
    for (std::size_t i = 0; i < cluster_end; ++i) {
        angles.push_back(hits[i].rel_angle);
        ranges.push_back(hits[i].range);
    }
    return PolarPoint{wrap_deg(center + median(angles)), median(ranges)};
}

std::vector<AngleObservation> merge_adjacent_camera_detections(
    const std::vector<Detection>& detections, const std::vector<CameraCalib>& rig,
    double theta_merge_deg) {
    auto calib_for = [&](const std::string& id) -> const CameraCalib& {
        for (const auto& c : rig)
            if (c.camera_id == id) return c;
        throw std::invalid_argument("unknown camera id '" + id + "'");
    };

    struct Obs {
        double angle;
        double yaw;
        std::string cls;
        bool merged = false;
    };
    std::vector<Obs> obs;
    obs.reserve(detections.size());
    for (const auto& d : detections) {
        const CameraCalib& c = calib_for(d.camera_id);
        obs.push_back({pixel_to_angle(d.pixel_x, c), c.yaw_deg, d.class_label, false});
    }

    std::vector<AngleObservation> out;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (obs[i].merged) continue;
        double angle = obs[i].angle;
        for (std::size_t j = i + 1; j < obs.size(); ++j) {
            if (obs[j].merged || obs[j].cls != obs[i].cls) continue;
            double yaw_diff = std::abs(wrap_deg(obs[j].yaw - obs[i].yaw));
            if (std::abs(yaw_diff - 90.0) > 1e-9) continue; // only adjacent cameras
            double diff = wrap_deg(obs[j].angle - angle);
            if (std::abs(diff) < theta_merge_deg) {
                angle = wrap_deg(angle + diff / 2.0); // circular mean of the pair
                obs[j].merged = true;
            }
        }
        out.push_back({angle, obs[i].cls});
    }
    return out;
}

std::vector<FusedObject> merge_duplicates(const std::vector<FusedObject>& fused, double d_merge) {
    struct Cluster {
        FusedObject obj;
        int count = 1;
    };
    std::vector<Cluster> clusters;
    for (const auto& f : fused) clusters.push_back({f, 1});

    // merge closest pairs until every pairwise distance is >= d_merge
    for (;;) {
        double best = d_merge;
        std::size_t bi = 0, bj = 0;
        bool found = false;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double d = (clusters[i].obj.world_pos - clusters[j].obj.world_pos).norm();
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                    found = true;
                }
            }
        }
        if (!found) break;
        auto& a = clusters[bi];
        const auto& b = clusters[bj];
        double wa = static_cast<double>(a.count) / (a.count + b.count);
        double wb = 1.0 - wa;
        a.obj.world_pos = a.obj.world_pos * wa + b.obj.world_pos * wb;
        a.obj.world_vel = a.obj.world_vel * wa + b.obj.world_vel * wb;
        a.obj.rel_range = a.obj.rel_range * wa + b.obj.rel_range * wb;
        a.obj.rel_angle = wrap_deg(a.obj.rel_angle + wrap_deg(b.obj.rel_angle - a.obj.rel_angle) * wb);
        a.count += b.count;
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    std::vector<FusedObject> out;
    out.reserve(clusters.size());
    for (auto& c : clusters) out.push_back(std::move(c.obj));
    return out;
}

namespace {

Mat4 mat_mul(const Mat4& a, const Mat4& b) {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
            for (int j = 0; j < 4; ++j) r[i][j] += a[i][k] * b[k][j];
    return r;
}

Mat4 transpose(const Mat4& a) {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i][j] = a[j][i];
    return r;
}

Mat4 identity4() {
    Mat4 r{};
    for (int i = 0; i < 4; ++i) r[i][i] = 1.0;
    return r;
}

} // namespace

bool is_spd(const Mat4& m, double tol) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (std::abs(m[i][j] - m[j][i]) > 1e-6) return false;
    // Cholesky on m + tol*I
    Mat4 a = m;
    for (int i = 0; i < 4; ++i) a[i][i] += tol;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = a[i][j];
            for (int k = 0; k < j; ++k) sum -= a[i][k] * a[j][k];
            if (i == j) {
                if (sum <= 0) return false;
                a[i][i] = std::sqrt(sum);
            } else {
                a[i][j] = sum / a[j][j];
            }
        }
    }
    return true;
}

KalmanTrack kalman_update(const KalmanTrack& track, const Vec2& z, double dt,
                          const KalmanNoise& noise) {
    if (dt <= 0) throw std::invalid_argument("kalman_update: dt must be positive");
    if (!is_spd(track.covariance)) throw std::invalid_argument("kalman_update: covariance not SPD");

    // predict
    Mat4 F = identity4();
    F[0][2] = dt;
    F[1][3] = dt;
    Vec4 x{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) x[i] += F[i][j] * track.state[j];

    double q2 = noise.accel_sigma * noise.accel_sigma;
    double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt;
    Mat4 Q{};
    Q[0][0] = Q[1][1] = q2 * dt4 / 4.0;
    Q[0][2] = Q[2][0] = Q[1][3] = Q[3][1] = q2 * dt3 / 2.0;
    Q[2][2] = Q[3][3] = q2 * dt2;
    Mat4 P = mat_mul(mat_mul(F, track.covariance), transpose(F));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) P[i][j] += Q[i][j];

    // update with position measurement; innovation is the 2x2 top-left block
    double r2 = noise.meas_sigma * noise.meas_sigma;
    double s00 = P[0][0] + r2, s01 = P[0][1], s10 = P[1][0], s11 = P[1][1] + r2;
    double det = s00 * s11 - s01 * s10;
    if (std::abs(det) < 1e-30) throw std::invalid_argument("kalman_update: singular innovation");
    double i00 = s11 / det, i01 = -s01 / det, i10 = -s10 / det, i11 = s00 / det;

    double K[4][2];
    for (int i = 0; i < 4; ++i) {
        K[i][0] = P[i][0] * i00 + P[i][1] * i10;
        K[i][1] = P[i][0] * i01 + P[i][1] * i11;
    }
    double y0 = z.x - x[0];
    double y1 = z.y - x[1];
    KalmanTrack next = track;
    for (int i = 0; i < 4; ++i) next.state[i] = x[i] + K[i][0] * y0 + K[i][1] * y1;

    // Joseph form keeps the posterior PSD
    Mat4 IKH = identity4();
    for (int i = 0; i < 4; ++i) {
        IKH[i][0] -= K[i][0];
        IKH[i][1] -= K[i][1];
    }
    Mat4 Pn = mat_mul(mat_mul(IKH, P), transpose(IKH));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) Pn[i][j] += r2 * (K[i][0] * K[j][0] + K[i][1] * K[j][1]);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            double s = 0.5 * (Pn[i][j] + Pn[j][i]);
            Pn[i][j] = Pn[j][i] = s;
        }
    next.covariance = Pn;
    next.hits = track.hits + 1;
    return next;
}

SenseResult sense(const std::vector<WorldTarget>& targets, const EgoPose& ego,
                  const std::vector<Rect>& occluders, const SensorParams& params, double now,
                  std::mt19937_64& rng) {
    SenseResult result;
    auto rig = default_camera_rig();
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (const auto& tgt : targets) {
        Vec2 rel = tgt.pos - ego.pos;
        double range = rel.norm();
        if (range < 1e-6) continue;
        double angle = wrap_deg(std::atan2(rel.y, rel.x) / kDeg - ego.heading_deg);

        bool occluded = false;
        for (const auto& occ : occluders) {
            if (segment_intersects_rect(ego.pos, tgt.pos, occ)) {
                occluded = true;
                break;
            }
        }
        // draw noise regardless of visibility so the rng stream stays aligned
        double drop_u = unit(rng);
        double px_noise = unit_normal(rng) * params.px_sigma;
        if (occluded) continue;

        // camera detection
        if (range >= params.cam_min_range && range <= params.cam_range &&
            drop_u >= params.dropout_prob) {
            const CameraCalib* best = nullptr;
            double best_off = params.cam_fov_half;
            for (const auto& c : rig) {
                double off = std::abs(wrap_deg(angle - c.yaw_deg));
                if (off <= best_off) {
                    best_off = off;
                    best = &c;
                }
            }
            if (best) {
                double cam_angle = wrap_deg(angle - best->yaw_deg);
                double px = best->center_px + cam_angle / best->slope + px_noise;
                if (px >= 0 && px < best->width_px) {
                    double half_ang = std::asin(std::min(1.0, tgt.radius / range)) / kDeg;
                    double half_px = half_ang / best->slope;
                    Detection d;
                    d.camera_id = best->camera_id;
                    d.pixel_x = px;
                    d.bbox = {px - half_px, px + half_px};
                    d.class_label = tgt.class_label;
                    d.t = now;
                    result.detections.push_back(std::move(d));
                }
            }
        }

        // lidar returns on the absolute angular grid
        if (range <= params.lidar_range) {
            double hw = std::asin(std::min(1.0, tgt.radius / range)) / kDeg;
            int k_lo = static_cast<int>(std::ceil((angle - hw) / params.lidar_res_deg));
            int k_hi = static_cast<int>(std::floor((angle + hw) / params.lidar_res_deg));
            for (int k = k_lo; k <= k_hi; ++k) {
                double r = range + unit_normal(rng) * params.range_sigma;
                result.cloud.push_back({wrap_deg(k * params.lidar_res_deg), std::max(0.0, r)});
            }
        }
    }
    return result;
}

std::vector<FusedObject> Tracker::update(const std::vector<Measurement>& measurements,
                                         double now) {
    std::vector<bool> claimed(tracks_.size(), false);
    for (const auto& m : measurements) {
        int best = -1;
        double best_d = gate_radius;
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (claimed[i] || tracks_[i].class_label != m.class_label) continue;
            double dt = now - tracks_[i].last_update;
            Vec2 pred{tracks_[i].state[0] + tracks_[i].state[2] * dt,
                      tracks_[i].state[1] + tracks_[i].state[3] * dt};
            double d = (pred - m.world_pos).norm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        if (best >= 0) {
            auto& trk = tracks_[static_cast<std::size_t>(best)];
            double dt = std::max(1e-3, now - trk.last_update);
            trk = kalman_update(trk, m.world_pos, dt, noise_);
            trk.last_update = now;
            claimed[static_cast<std::size_t>(best)] = true;
        } else {
            KalmanTrack trk;
            trk.state = {m.world_pos.x, m.world_pos.y, 0.0, 0.0};
            trk.covariance = Mat4{};
            trk.covariance[0][0] = trk.covariance[1][1] = 0.25;
            trk.covariance[2][2] = trk.covariance[3][3] = 1.0;
            trk.last_update = now;
            trk.hits = 1;
            trk.class_label = m.class_label;
            trk.key = "trk" + std::to_string(next_key_++);
            tracks_.push_back(trk);
            claimed.push_back(true);
        }
    }
    std::erase_if(tracks_, [&](const KalmanTrack& t) { return now - t.last_update > stale_after; });

    std::vector<FusedObject> out;
    for (const auto& t : tracks_) {
        if (t.hits < confirm_hits) continue;
        FusedObject f;
        f.object_key = t.key;
        f.class_label = t.class_label;
        // tracks that missed this cycle are reported at their predicted
        // position, matching the association gate above
        double coast = now - t.last_update;
        f.world_pos = {t.state[0] + t.state[2] * coast, t.state[1] + t.state[3] * coast};
        f.world_vel = {t.state[2], t.state[3]};
        f.covariance = {{{t.covariance[0][0], t.covariance[0][1]},
                         {t.covariance[1][0], t.covariance[1][1]}}};
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<FusedObject> run_pipeline(const SenseResult& sensed, const EgoPose& ego,
                                      const std::vector<CameraCalib>& rig, Tracker& tracker,
                                      double now, double fuse_window_deg, double theta_merge_deg,
                                      double d_merge) {
    auto angles = merge_adjacent_camera_detections(sensed.detections, rig, theta_merge_deg);

    std::vector<FusedObject> fused;
    for (const auto& obs : angles) {
        auto polar = fuse_angle_with_ranges(obs.angle_deg - fuse_window_deg,
                                            obs.angle_deg + fuse_window_deg, sensed.cloud);
        if (!polar) continue;
        double world_angle = (ego.heading_deg + polar->angle_deg) * kDeg;
        FusedObject f;
        f.class_label = obs.class_label;
        f.rel_angle = polar->angle_deg;
        f.rel_range = polar->range;
        f.world_pos = {ego.pos.x + polar->range * std::cos(world_angle),
                       ego.pos.y + polar->range * std::sin(world_angle)};
        fused.push_back(std::move(f));
    }
    fused = merge_duplicates(fused, d_merge);

    std::vector<Tracker::Measurement> ms;
    ms.reserve(fused.size());
    for (const auto& f : fused) ms.push_back({f.world_pos, f.class_label});
    auto tracks = tracker.update(ms, now);

    for (auto& t : tracks) {
        Vec2 rel = t.world_pos - ego.pos;
        t.rel_range = rel.norm();
        t.rel_angle = wrap_deg(std::atan2(rel.y, rel.x) / kDeg - ego.heading_deg);
    }
    return tracks;
}

} // namespace vvccs::percep
