#include "mt3d/render/renderer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>

#include "mt3d/core/errors.hpp"
#include "mt3d/core/parallel.hpp"

namespace mt3d {

namespace {

constexpr int kTile = 4;
/// Rows per backward work chunk; each chunk owns one gradient buffer.
constexpr int kBandRows = 16;
constexpr double kExtentMargin = 1e-9;

struct Splat {
    std::size_t index = 0;
    ProjectedGaussian proj;
    double opacity = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

/// Compact copy of the per-pixel test data of one splat, stored contiguously per tile.
struct TileEntry {
    double mx, my, ca, cb, cc, opacity;
    int x0, x1, y0, y1;
    int splat;
};

/// Projection, canonical depth order and tile bins shared by forward and backward.
struct Plan {
    std::vector<Splat> splats;
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<TileEntry>> tiles;
    std::vector<TileEntry> all;  // every splat in order, for the unbinned path
};

ProjectedGaussian project_with(const Gaussian3D& g, const CameraPose& cam, const Eigen::Matrix3d& w,
                               double f, const RenderSettings& s) {
    ProjectedGaussian p;
    const Eigen::Vector3d pc = w * (g.mean - cam.position);
    p.camera_point = pc;
    p.depth = pc.z();
    if (!(pc.z() > cam.near && pc.z() < cam.far)) return p;
    const double z = pc.z(), x = pc.x(), y = pc.y();
    Eigen::Matrix<double, 2, 3> j;
    j << f / z, 0.0, -f * x / (z * z), 0.0, f / z, -f * y / (z * z);
    const Eigen::Matrix<double, 2, 3> t = j * w;
    Eigen::Matrix2d cov = t * g.covariance() * t.transpose();
    cov(0, 0) += s.cov2d_floor;
    cov(1, 1) += s.cov2d_floor;
    cov(1, 0) = cov(0, 1);
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
    if (!(det > 0.0)) return p;
    p.cov2d = cov;
    p.conic = {cov(1, 1) / det, -cov(0, 1) / det, cov(0, 0) / det};
    p.mean2d = {f * x / z + cam.cx(), f * y / z + cam.cy()};
    p.extent = {s.truncation_sigma * std::sqrt(cov(0, 0)), s.truncation_sigma * std::sqrt(cov(1, 1))};
    p.visible = true;
    return p;
}

Plan make_plan(const GaussianScene& scene, const CameraPose& cam, const RenderSettings& s) {
    cam.validate();
    const Eigen::Matrix3d w = cam.world_to_camera();
    const double f = cam.focal();
    Plan plan;
    plan.splats.reserve(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian3D& g = scene.gaussians[i];
        if (!g.finite()) throw RenderError(i, "non-finite parameter");
        Splat sp;
        sp.index = i;
        sp.proj = project_with(g, cam, w, f, s);
        if (!sp.proj.visible) continue;
        sp.opacity = g.opacity();
        sp.color = g.color;
        const auto& m = sp.proj.mean2d;
        const auto& e = sp.proj.extent;
        sp.x0 = std::max(0, static_cast<int>(std::ceil(m.x() - e.x() - 0.5 - kExtentMargin)));
        sp.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(m.x() + e.x() - 0.5 + kExtentMargin)));
        sp.y0 = std::max(0, static_cast<int>(std::ceil(m.y() - e.y() - 0.5 - kExtentMargin)));
        sp.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(m.y() + e.y() - 0.5 + kExtentMargin)));
        plan.splats.push_back(std::move(sp));
    }
    std::vector<std::pair<double, std::size_t>> keys(plan.splats.size());
    for (std::size_t k = 0; k < keys.size(); ++k) keys[k] = {plan.splats[k].proj.depth, k};
    // Splats were appended in index order, so equal depths keep the lower index first.
    std::sort(keys.begin(), keys.end());
    std::vector<Splat> sorted;
    sorted.reserve(keys.size());
    for (const auto& key : keys) sorted.push_back(std::move(plan.splats[key.second]));
    plan.splats = std::move(sorted);
    plan.tiles_x = (cam.width + kTile - 1) / kTile;
    plan.tiles_y = (cam.height + kTile - 1) / kTile;
    plan.tiles.assign(static_cast<std::size_t>(plan.tiles_x) * plan.tiles_y, {});
    plan.all.reserve(plan.splats.size());
    for (int si = 0; si < static_cast<int>(plan.splats.size()); ++si) {
        const Splat& sp = plan.splats[si];
        const TileEntry entry{sp.proj.mean2d.x(), sp.proj.mean2d.y(), sp.proj.conic[0], sp.proj.conic[1],
                              sp.proj.conic[2], sp.opacity, sp.x0, sp.x1, sp.y0, sp.y1, si};
        plan.all.push_back(entry);
        if (sp.x0 > sp.x1 || sp.y0 > sp.y1) continue;
        for (int ty = sp.y0 / kTile; ty <= sp.y1 / kTile; ++ty)
            for (int tx = sp.x0 / kTile; tx <= sp.x1 / kTile; ++tx)
                plan.tiles[static_cast<std::size_t>(ty) * plan.tiles_x + tx].push_back(entry);
    }
    return plan;
}

void shade_pixel(const Plan& plan, const std::vector<TileEntry>& list, int px, int py,
                 const Eigen::Vector3d& bg, const RenderSettings& s, RenderedImage& out) {
    const double t2 = s.truncation_sigma * s.truncation_sigma;
    const double cxp = px + 0.5, cyp = py + 0.5;
    double trans = 1.0, acc_alpha = 0.0, acc_depth = 0.0;
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const TileEntry& e : list) {
        if (px < e.x0 || px > e.x1 || py < e.y0 || py > e.y1) continue;
        const double dx = cxp - e.mx;
        const double dy = cyp - e.my;
        const double q = e.ca * dx * dx + 2.0 * e.cb * dx * dy + e.cc * dy * dy;
        if (q > t2) continue;
        const Splat& sp = plan.splats[e.splat];
        const double alpha = std::min(e.opacity * std::exp(-0.5 * q), s.alpha_max);
        const double wgt = alpha * trans;
        c += wgt * sp.color;
        acc_depth += wgt * sp.proj.depth;
        acc_alpha += wgt;
        trans *= 1.0 - alpha;
        if (trans < s.min_transmittance) break;
    }
    c += trans * bg;
    for (int k = 0; k < 3; ++k) out.rgb.at(px, py, k) = c[k];
    out.alpha.at(px, py) = acc_alpha;
    out.depth.at(px, py) = acc_alpha > s.depth_alpha_threshold ? acc_depth / acc_alpha : kBackgroundDepth;
}

}  // namespace

struct RenderPlan::Data {
    Plan plan;
    CameraPose camera;
    RenderSettings settings;
    std::size_t scene_size = 0;
};

namespace {

RenderedImage render_impl(const RenderPlan::Data& data, const Eigen::Vector3d& bg, bool binned) {
    const Plan& plan = data.plan;
    const CameraPose& cam = data.camera;
    const RenderSettings& s = data.settings;
    RenderedImage out(cam.width, cam.height);
    parallel_for_chunks(plan.tiles_y, [&](int ty) {
        for (int py = ty * kTile; py < std::min(cam.height, (ty + 1) * kTile); ++py)
            for (int px = 0; px < cam.width; ++px) {
                const auto& list = binned
                    ? plan.tiles[static_cast<std::size_t>(ty) * plan.tiles_x + px / kTile]
                    : plan.all;
                shade_pixel(plan, list, px, py, bg, s, out);
            }
    });
    return out;
}

/// Screen-space gradient slots per splat: mean2d (2), conic (3), opacity, color (3).
using ScreenGrad = std::array<double, 9>;

struct Record {
    int splat;
    double alpha, gauss, trans, dx, dy;
    bool clamped;
};

}  // namespace

ProjectedGaussian project(const Gaussian3D& g, const CameraPose& camera, const RenderSettings& s) {
    camera.validate();
    return project_with(g, camera, camera.world_to_camera(), camera.focal(), s);
}

RenderPlan::RenderPlan(const GaussianScene& scene, const CameraPose& camera, const RenderSettings& settings) {
    auto data = std::make_shared<Data>();
    data->plan = make_plan(scene, camera, settings);
    data->camera = camera;
    data->settings = settings;
    data->scene_size = scene.size();
    data_ = std::move(data);
}

const CameraPose& RenderPlan::camera() const { return data_->camera; }
const RenderSettings& RenderPlan::settings() const { return data_->settings; }
std::size_t RenderPlan::scene_size() const { return data_->scene_size; }

RenderedImage render(const RenderPlan& plan, const Eigen::Vector3d& background) {
    return render_impl(plan.data(), background, true);
}

RenderedImage render(const GaussianScene& scene, const CameraPose& camera,
                     const Eigen::Vector3d& background, const RenderSettings& settings) {
    return render_impl(RenderPlan(scene, camera, settings).data(), background, true);
}

RenderedImage render_unbinned(const GaussianScene& scene, const CameraPose& camera,
                              const Eigen::Vector3d& background, const RenderSettings& settings) {
    return render_impl(RenderPlan(scene, camera, settings).data(), background, false);
}

GaussianGrad& GaussianGrad::operator+=(const GaussianGrad& o) {
    mean += o.mean;
    log_scale += o.log_scale;
    rotation += o.rotation;
    opacity_logit += o.opacity_logit;
    color += o.color;
    return *this;
}

GaussianGrad GaussianGrad::operator*(double s) const {
    GaussianGrad g = *this;
    g.mean *= s;
    g.log_scale *= s;
    g.rotation *= s;
    g.opacity_logit *= s;
    g.color *= s;
    return g;
}

bool GaussianGrad::finite() const {
    return mean.allFinite() && log_scale.allFinite() && rotation.allFinite() &&
           std::isfinite(opacity_logit) && color.allFinite();
}

bool RenderGradients::finite() const {
    return std::all_of(gaussians.begin(), gaussians.end(), [](const GaussianGrad& g) { return g.finite(); });
}

RenderGradients render_backward(const GaussianScene& scene, const CameraPose& camera,
                                const Eigen::Vector3d& background, const Image& loss_grad,
                                const RenderSettings& settings) {
    return render_backward(RenderPlan(scene, camera, settings), scene, background, loss_grad);
}

RenderGradients render_backward(const RenderPlan& render_plan, const GaussianScene& scene,
                                const Eigen::Vector3d& bg, const Image& loss_grad) {
    const CameraPose& cam = render_plan.camera();
    const RenderSettings& s = render_plan.settings();
    if (scene.size() != render_plan.scene_size())
        throw ContractError("render_backward: plan was built for a scene of a different size");
    if (loss_grad.width != cam.width || loss_grad.height != cam.height || loss_grad.channels != 3)
        throw ContractError("render_backward: loss gradient must be a 3-channel " +
                            std::to_string(cam.width) + "x" + std::to_string(cam.height) + " image");
    const Plan& plan = render_plan.data().plan;
    const std::size_t n_splats = plan.splats.size();
    const double t2 = s.truncation_sigma * s.truncation_sigma;

    const int bands = (cam.height + kBandRows - 1) / kBandRows;
    std::vector<std::vector<ScreenGrad>> partial(bands);
    parallel_for_chunks(bands, [&](int band) {
        auto& acc = partial[band];
        acc.assign(n_splats, ScreenGrad{});
        std::vector<Record> records;
        for (int py = band * kBandRows; py < std::min(cam.height, (band + 1) * kBandRows); ++py) {
            const int ty = py / kTile;
            for (int px = 0; px < cam.width; ++px) {
                const Eigen::Vector3d g(loss_grad.at(px, py, 0), loss_grad.at(px, py, 1),
                                        loss_grad.at(px, py, 2));
                if (g.isZero(0.0)) continue;
                const auto& list = plan.tiles[static_cast<std::size_t>(ty) * plan.tiles_x + px / kTile];
                records.clear();
                double trans = 1.0;
                const double cxp = px + 0.5, cyp = py + 0.5;
                for (const TileEntry& e : list) {
                    if (px < e.x0 || px > e.x1 || py < e.y0 || py > e.y1) continue;
                    const double dx = cxp - e.mx;
                    const double dy = cyp - e.my;
                    const double q = e.ca * dx * dx + 2.0 * e.cb * dx * dy + e.cc * dy * dy;
                    if (q > t2) continue;
                    const double gauss = std::exp(-0.5 * q);
                    const double raw = e.opacity * gauss;
                    const bool clamped = raw > s.alpha_max;
                    const double alpha = clamped ? s.alpha_max : raw;
                    records.push_back({e.splat, alpha, gauss, trans, dx, dy, clamped});
                    trans *= 1.0 - alpha;
                    if (trans < s.min_transmittance) break;
                }
                Eigen::Vector3d behind = bg;  // color composited behind the current splat
                for (auto it = records.rbegin(); it != records.rend(); ++it) {
                    const Splat& sp = plan.splats[it->splat];
                    ScreenGrad& sg = acc[it->splat];
                    const double w = it->alpha * it->trans;
                    sg[6] += g[0] * w;
                    sg[7] += g[1] * w;
                    sg[8] += g[2] * w;
                    const double d_alpha = it->trans * g.dot(sp.color - behind);
                    behind = it->alpha * sp.color + (1.0 - it->alpha) * behind;
                    if (it->clamped) continue;
                    sg[5] += d_alpha * it->gauss;
                    const double d_q = -0.5 * it->gauss * d_alpha * sp.opacity;
                    const auto& k = sp.proj.conic;
                    sg[0] -= d_q * 2.0 * (k[0] * it->dx + k[1] * it->dy);
                    sg[1] -= d_q * 2.0 * (k[1] * it->dx + k[2] * it->dy);
                    sg[2] += d_q * it->dx * it->dx;
                    sg[3] += d_q * 2.0 * it->dx * it->dy;
                    sg[4] += d_q * it->dy * it->dy;
                }
            }
        }
    });

    RenderGradients out;
    out.gaussians.assign(scene.size(), GaussianGrad{});
    out.view_grad_norm.assign(scene.size(), 0.0);
    out.visible.assign(scene.size(), 0);
    const Eigen::Matrix3d w = cam.world_to_camera();
    const double f = cam.focal();

    for (std::size_t si = 0; si < n_splats; ++si) {
        ScreenGrad sg{};
        for (const auto& acc : partial)
            for (int k = 0; k < 9; ++k) sg[k] += acc[si][k];

        const Splat& sp = plan.splats[si];
        const Gaussian3D& gs = scene.gaussians[sp.index];
        GaussianGrad& gr = out.gaussians[sp.index];
        out.visible[sp.index] = 1;
        out.view_grad_norm[sp.index] = std::hypot(sg[0] * 0.5 * cam.width, sg[1] * 0.5 * cam.height);

        gr.color = Eigen::Vector3d(sg[6], sg[7], sg[8]);
        gr.opacity_logit = sg[5] * sp.opacity * (1.0 - sp.opacity);

        // conic -> cov2d
        const double a = sp.proj.cov2d(0, 0), b = sp.proj.cov2d(0, 1), c = sp.proj.cov2d(1, 1);
        const double det = a * c - b * b;
        const double det2 = det * det;
        const double da = sg[2], db = sg[3], dc = sg[4];
        const double d_cov_a = da * (-c * c / det2) + db * (b * c / det2) + dc * (1.0 / det - a * c / det2);
        const double d_cov_b = da * (2.0 * b * c / det2) + db * (-1.0 / det - 2.0 * b * b / det2) +
                               dc * (2.0 * a * b / det2);
        const double d_cov_c = da * (1.0 / det - a * c / det2) + db * (a * b / det2) + dc * (-a * a / det2);
        Eigen::Matrix2d g2;
        g2 << d_cov_a, 0.5 * d_cov_b, 0.5 * d_cov_b, d_cov_c;

        const Eigen::Vector3d& pc = sp.proj.camera_point;
        const double x = pc.x(), y = pc.y(), z = pc.z();
        Eigen::Matrix<double, 2, 3> j;
        j << f / z, 0.0, -f * x / (z * z), 0.0, f / z, -f * y / (z * z);
        const Eigen::Matrix<double, 2, 3> t = j * w;
        const Eigen::Matrix3d sigma = gs.covariance();
        const Eigen::Matrix3d d_sigma = t.transpose() * g2 * t;
        const Eigen::Matrix<double, 2, 3> d_t = 2.0 * g2 * t * sigma;
        const Eigen::Matrix<double, 2, 3> d_j = d_t * w.transpose();

        Eigen::Vector3d d_pc = Eigen::Vector3d::Zero();
        d_pc.x() += sg[0] * f / z;
        d_pc.y() += sg[1] * f / z;
        d_pc.z() += -sg[0] * f * x / (z * z) - sg[1] * f * y / (z * z);
        const double z2 = z * z, z3 = z2 * z;
        d_pc.x() += d_j(0, 2) * (-f / z2);
        d_pc.y() += d_j(1, 2) * (-f / z2);
        d_pc.z() += (d_j(0, 0) + d_j(1, 1)) * (-f / z2) + d_j(0, 2) * (2.0 * f * x / z3) +
                    d_j(1, 2) * (2.0 * f * y / z3);
        gr.mean = w.transpose() * d_pc;

        // Sigma = M M^T with M = R diag(scale)
        const Eigen::Vector4d qn = gs.unit_rotation();
        const Eigen::Matrix3d r = quaternion_to_matrix(qn);
        const Eigen::Vector3d scale = gs.scale();
        const Eigen::Matrix3d m = r * scale.asDiagonal();
        const Eigen::Matrix3d d_m = 2.0 * d_sigma * m;
        for (int k = 0; k < 3; ++k) gr.log_scale[k] = r.col(k).dot(d_m.col(k)) * scale[k];
        const Eigen::Matrix3d d_r = d_m * scale.asDiagonal();

        const double qw = qn[0], qx = qn[1], qy = qn[2], qz = qn[3];
        Eigen::Vector4d d_qn;
        d_qn[0] = d_r(0, 1) * (-2 * qz) + d_r(0, 2) * (2 * qy) + d_r(1, 0) * (2 * qz) +
                  d_r(1, 2) * (-2 * qx) + d_r(2, 0) * (-2 * qy) + d_r(2, 1) * (2 * qx);
        d_qn[1] = d_r(0, 1) * (2 * qy) + d_r(0, 2) * (2 * qz) + d_r(1, 0) * (2 * qy) +
                  d_r(1, 1) * (-4 * qx) + d_r(1, 2) * (-2 * qw) + d_r(2, 0) * (2 * qz) +
                  d_r(2, 1) * (2 * qw) + d_r(2, 2) * (-4 * qx);
        d_qn[2] = d_r(0, 0) * (-4 * qy) + d_r(0, 1) * (2 * qx) + d_r(0, 2) * (2 * qw) +
                  d_r(1, 0) * (2 * qx) + d_r(1, 2) * (2 * qz) + d_r(2, 0) * (-2 * qw) +
                  d_r(2, 1) * (2 * qz) + d_r(2, 2) * (-4 * qy);
        d_qn[3] = d_r(0, 0) * (-4 * qz) + d_r(0, 1) * (-2 * qw) + d_r(0, 2) * (2 * qx) +
                  d_r(1, 0) * (2 * qw) + d_r(1, 1) * (-4 * qz) + d_r(1, 2) * (2 * qy) +
                  d_r(2, 0) * (2 * qx) + d_r(2, 1) * (2 * qy);
        gr.rotation = (d_qn - qn * qn.dot(d_qn)) / gs.rotation.norm();
    }
    return out;
}

void accumulate_view_gradients(GaussianScene& scene, const RenderGradients& grads) {
    if (grads.size() != scene.size()) throw ContractError("accumulate_view_gradients: size mismatch");
    if (scene.view_grad_accum.size() != scene.size()) scene.reset_accumulators();
    for (std::size_t i = 0; i < scene.size(); ++i) {
        if (!grads.visible[i]) continue;
        scene.view_grad_accum[i] += grads.view_grad_norm[i];
        scene.view_grad_count[i] += 1;
    }
}

}  // namespace mt3d
