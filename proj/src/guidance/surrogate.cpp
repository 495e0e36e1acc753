#include "mt3d/guidance/surrogate.hpp"

#include <Eigen/Core>
#include <cmath>
#include <fstream>

#include "mt3d/core/binary_io.hpp"
#include "mt3d/core/errors.hpp"
#include "mt3d/core/rng.hpp"

namespace mt3d {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorMap = Eigen::Map<const Matrix>;

constexpr char kSurrogateMagic[9] = "MT3DSNN1";

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Patches of a (channels x W*H) activation for a 3x3 kernel with zero padding;
/// row index is c * 9 + ky * 3 + kx.
Matrix im2col(const Matrix& x, int width, int height) {
    const int channels = static_cast<int>(x.rows());
    Matrix col = Matrix::Zero(channels * 9, static_cast<Eigen::Index>(width) * height);
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const int row = c * 9 + ky * 3 + kx;
                for (int y = 0; y < height; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= height) continue;
                    for (int xx = 0; xx < width; ++xx) {
                        const int sx = xx + kx - 1;
                        if (sx < 0 || sx >= width) continue;
                        col(row, y * width + xx) = x(c, sy * width + sx);
                    }
                }
            }
    return col;
}

/// Adjoint of im2col.
Matrix col2im(const Matrix& col, int channels, int width, int height) {
    Matrix x = Matrix::Zero(channels, static_cast<Eigen::Index>(width) * height);
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const int row = c * 9 + ky * 3 + kx;
                for (int y = 0; y < height; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= height) continue;
                    for (int xx = 0; xx < width; ++xx) {
                        const int sx = xx + kx - 1;
                        if (sx < 0 || sx >= width) continue;
                        x(c, sy * width + sx) += col(row, y * width + xx);
                    }
                }
            }
    return x;
}

Matrix conv_forward(const ConvLayer& layer, const Matrix& col) {
    const RowMajorMap w(layer.weights.data(), layer.out_channels, layer.in_channels * 9);
    Matrix z = w * col;
    for (int o = 0; o < layer.out_channels; ++o) z.row(o).array() += layer.bias[o];
    return z;
}

struct Activations {
    int width = 0, height = 0;
    std::vector<Matrix> cols;  // im2col of each layer input
    std::vector<Matrix> pre;   // pre-activation of each hidden layer
    Matrix out;
};

Matrix build_input(const Image& noisy, const Image& depth, int t, int max_timestep) {
    if (noisy.channels != 3) throw ContractError("surrogate: expected a 3-channel noisy image");
    const bool has_depth = !depth.empty();
    if (has_depth && (depth.width != noisy.width || depth.height != noisy.height || depth.channels != 1))
        throw ContractError("surrogate: depth condition shape differs from image");
    const Eigen::Index n = static_cast<Eigen::Index>(noisy.pixel_count());
    Matrix x(NoiseSurrogate::kInputChannels, n);
    const std::vector<double> emb = timestep_embedding(t, max_timestep);
    for (Eigen::Index p = 0; p < n; ++p) {
        for (int c = 0; c < 3; ++c) x(c, p) = noisy.data[3 * p + c];
        x(3, p) = has_depth ? depth.data[p] : 0.0;
        for (int k = 0; k < 4; ++k) x(4 + k, p) = emb[k];
    }
    return x;
}

Activations forward(const std::vector<ConvLayer>& layers, const Matrix& input, int width, int height) {
    Activations a;
    a.width = width;
    a.height = height;
    Matrix x = input;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        a.cols.push_back(im2col(x, width, height));
        Matrix z = conv_forward(layers[l], a.cols.back());
        if (l + 1 < layers.size()) {
            x = z.unaryExpr([](double v) { return v * logistic(v); });
            a.pre.push_back(std::move(z));
        } else {
            a.out = std::move(z);
        }
    }
    return a;
}

/// Accumulates parameter gradients for d loss / d out into grad (flattened layer order).
void backward(const std::vector<ConvLayer>& layers, const Activations& a, const Matrix& dout,
              std::vector<double>& grad) {
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& l : layers) {
        offsets.push_back(off);
        off += l.parameter_count();
    }
    Matrix dz = dout;
    for (std::size_t li = layers.size(); li-- > 0;) {
        const ConvLayer& layer = layers[li];
        const Matrix dw = dz * a.cols[li].transpose();
        double* g = grad.data() + offsets[li];
        for (int o = 0; o < layer.out_channels; ++o)
            for (int k = 0; k < layer.in_channels * 9; ++k) g[o * layer.in_channels * 9 + k] += dw(o, k);
        g += layer.weights.size();
        for (int o = 0; o < layer.out_channels; ++o) g[o] += dz.row(o).sum();
        if (li == 0) break;
        const RowMajorMap w(layer.weights.data(), layer.out_channels, layer.in_channels * 9);
        const Matrix dcol = w.transpose() * dz;
        Matrix dx = col2im(dcol, layer.in_channels, a.width, a.height);
        const Matrix& z = a.pre[li - 1];
        dz = dx.binaryExpr(z, [](double d, double v) {
            const double s = logistic(v);
            return d * s * (1.0 + v * (1.0 - s));
        });
    }
}

}  // namespace

std::vector<double> timestep_embedding(int t, int max_timestep) {
    const double u = static_cast<double>(t) / max_timestep;
    return {std::sin(M_PI * u), std::cos(M_PI * u), std::sin(4 * M_PI * u), std::cos(4 * M_PI * u)};
}

NoiseSurrogate::NoiseSurrogate(std::uint64_t seed, AdamHyper hyper) : hyper_(hyper) {
    Rng rng(seed);
    const int dims[4] = {kInputChannels, kHiddenChannels, kHiddenChannels, 3};
    for (int l = 0; l < 3; ++l) {
        ConvLayer layer;
        layer.in_channels = dims[l];
        layer.out_channels = dims[l + 1];
        layer.weights.resize(static_cast<std::size_t>(dims[l]) * dims[l + 1] * 9);
        layer.bias.assign(dims[l + 1], 0.0);
        const double std_dev = std::sqrt(1.0 / (dims[l] * 9.0));
        for (double& w : layer.weights) w = std_dev * rng.normal();
        layers_.push_back(std::move(layer));
    }
    adam_.resize(parameter_count());
}

Image NoiseSurrogate::predict(const Image& noisy, int t, const GuidanceCondition& condition,
                              const PromptEmbedding& prompt) const {
    return predict(noisy, t, condition.depth ? *condition.depth : Image());
}

Image NoiseSurrogate::predict(const Image& noisy, int t, const Image& depth) const {
    const Matrix input = build_input(noisy, depth, t, 1000);
    const Activations a = forward(layers_, input, noisy.width, noisy.height);
    Image out(noisy.width, noisy.height, 3);
    for (Eigen::Index p = 0; p < a.out.cols(); ++p)
        for (int c = 0; c < 3; ++c) out.data[3 * p + c] = a.out(c, p);
    return out;
}

double NoiseSurrogate::loss_and_gradient(const std::vector<DiffusionSample>& samples,
                                         const std::vector<Image>& depths, std::vector<double>* grad) const {
    if (samples.empty()) throw InvalidInput("surrogate: empty batch");
    if (depths.size() != samples.size()) throw ContractError("surrogate: one depth map per sample required");
    std::size_t total = 0;
    for (const auto& s : samples) total += s.noise.data.size();
    if (grad) grad->assign(parameter_count(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < samples.size(); ++b) {
        const DiffusionSample& s = samples[b];
        const Matrix input = build_input(s.noisy, depths[b], s.t, 1000);
        const Activations a = forward(layers_, input, s.noisy.width, s.noisy.height);
        Matrix dout(3, a.out.cols());
        for (Eigen::Index p = 0; p < a.out.cols(); ++p)
            for (int c = 0; c < 3; ++c) {
                const double r = a.out(c, p) - s.noise.data[3 * p + c];
                loss += r * r;
                dout(c, p) = 2.0 * r / static_cast<double>(total);
            }
        if (grad) backward(layers_, a, dout, *grad);
    }
    return loss / static_cast<double>(total);
}

double NoiseSurrogate::train_on_samples(const std::vector<DiffusionSample>& samples,
                                        const std::vector<Image>& depths) {
    std::vector<double> grad;
    const double loss = loss_and_gradient(samples, depths, &grad);
    std::vector<double> params = parameters();
    adam_update(params, grad, adam_, hyper_);
    set_parameters(params);
    return loss;
}

std::size_t NoiseSurrogate::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.parameter_count();
    return n;
}

std::vector<double> NoiseSurrogate::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void NoiseSurrogate::set_parameters(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) throw ContractError("surrogate: parameter vector has the wrong length");
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (double& w : l.weights) w = flat[k++];
        for (double& b : l.bias) b = flat[k++];
    }
}

void NoiseSurrogate::set_zero() { set_parameters(std::vector<double>(parameter_count(), 0.0)); }

void NoiseSurrogate::write(std::ostream& out) const {
    binary::put_magic(out, kSurrogateMagic);
    binary::put_u32(out, static_cast<std::uint32_t>(layers_.size()));
    for (const auto& l : layers_) {
        binary::put_u32(out, static_cast<std::uint32_t>(l.in_channels));
        binary::put_u32(out, static_cast<std::uint32_t>(l.out_channels));
        binary::put_f64s(out, l.weights);
        binary::put_f64s(out, l.bias);
    }
    binary::put_f64(out, hyper_.lr);
    binary::put_f64(out, hyper_.beta1);
    binary::put_f64(out, hyper_.beta2);
    binary::put_f64(out, hyper_.epsilon);
    write_adam_state(out, adam_);
}

NoiseSurrogate NoiseSurrogate::read(std::istream& in) {
    binary::expect_magic(in, kSurrogateMagic, "surrogate checkpoint");
    NoiseSurrogate s;
    const std::uint32_t count = binary::get_u32(in);
    if (count != s.layers_.size()) throw InvalidInput("surrogate checkpoint: unexpected layer count");
    for (auto& l : s.layers_) {
        const int in_c = static_cast<int>(binary::get_u32(in));
        const int out_c = static_cast<int>(binary::get_u32(in));
        if (in_c != l.in_channels || out_c != l.out_channels)
            throw InvalidInput("surrogate checkpoint: layer shape mismatch");
        l.weights = binary::get_f64s(in);
        l.bias = binary::get_f64s(in);
        if (l.weights.size() != static_cast<std::size_t>(in_c) * out_c * 9 || l.bias.size() != static_cast<std::size_t>(out_c))
            throw InvalidInput("surrogate checkpoint: layer size mismatch");
    }
    s.hyper_.lr = binary::get_f64(in);
    s.hyper_.beta1 = binary::get_f64(in);
    s.hyper_.beta2 = binary::get_f64(in);
    s.hyper_.epsilon = binary::get_f64(in);
    s.adam_ = read_adam_state(in);
    if (s.adam_.m.size() != s.parameter_count()) throw InvalidInput("surrogate checkpoint: optimizer state size mismatch");
    return s;
}

void NoiseSurrogate::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    write(out);
}

NoiseSurrogate NoiseSurrogate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    return read(in);
}

bool NoiseSurrogate::operator==(const NoiseSurrogate& o) const {
    if (layers_.size() != o.layers_.size()) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l)
        if (layers_[l].weights != o.layers_[l].weights || layers_[l].bias != o.layers_[l].bias) return false;
    return adam_ == o.adam_ && hyper_.lr == o.hyper_.lr && hyper_.beta1 == o.hyper_.beta1 &&
           hyper_.beta2 == o.hyper_.beta2 && hyper_.epsilon == o.hyper_.epsilon;
}

double surrogate_train_step(NoiseSurrogate& surrogate, const std::vector<SurrogateExample>& batch,
                            const NoiseSchedule& schedule, Rng& rng) {
    if (batch.empty()) throw InvalidInput("surrogate_train_step: empty batch");
    std::vector<DiffusionSample> samples;
    std::vector<Image> depths;
    for (const auto& ex : batch) {
        const int t = schedule.sample_timestep(rng);
        samples.push_back(DiffusionSample::draw(ex.rgb, t, schedule, rng));
        depths.push_back(ex.depth);
    }
    return surrogate.train_on_samples(samples, depths);
}

}  // namespace mt3d
