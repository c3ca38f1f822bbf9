#include "v2xsim/ssim.hpp"

#include "v2xsim/errors.hpp"

#include <cmath>
#include <vector>

namespace v2xsim {
namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    double sum = 0;
    const double mid = 0.5 * (size - 1);
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-(i - mid) * (i - mid) / (2 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Valid-mode separable correlation of a single-channel W x H plane.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
    const int n = int(k.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> tmp(std::size_t(ow) * h), out(std::size_t(ow) * oh);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += k[i] * src[std::size_t(y) * w + x + i];
            tmp[std::size_t(y) * ow + x] = s;
        }
    }
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += k[i] * tmp[std::size_t(y + i) * ow + x];
            out[std::size_t(y) * ow + x] = s;
        }
    }
    return out;
}

// Adjoint of filter_valid: scatters an ow x oh map back onto W x H.
std::vector<double> filter_valid_adjoint(const std::vector<double>& g, int w, int h, const std::vector<double>& k) {
    const int n = int(k.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> tmp(std::size_t(ow) * h, 0.0), out(std::size_t(w) * h, 0.0);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const double v = g[std::size_t(y) * ow + x];
            for (int i = 0; i < n; ++i) tmp[std::size_t(y + i) * ow + x] += k[i] * v;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            const double v = tmp[std::size_t(y) * ow + x];
            for (int i = 0; i < n; ++i) out[std::size_t(y) * w + x + i] += k[i] * v;
        }
    }
    return out;
}

}  // namespace

double ssim_windowed(const Image& a, const Image& b, const SsimOptions& o, const Image& center_mask, Image* d_a) {
    if (!a.same_shape(b)) {
        throw InvalidInput("ssim: image shapes differ");
    }
    if (!center_mask.empty() && (!center_mask.same_size(a) || center_mask.channels() != 1)) {
        throw InvalidInput("ssim: mask must be single-channel with the image size");
    }
    const int w = a.width(), h = a.height(), C = a.channels();
    if (w < o.window || h < o.window) {
        throw InvalidInput("ssim: image smaller than the window");
    }
    const auto k = gaussian_kernel(o.window, o.sigma);
    const int ow = w - o.window + 1, oh = h - o.window + 1;
    const int half = o.window / 2;

    std::vector<double> weight(std::size_t(ow) * oh, 1.0);
    std::size_t counted = std::size_t(ow) * oh;
    if (!center_mask.empty()) {
        counted = 0;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                const bool keep = center_mask.at(x + half, y + half) == 0;
                weight[std::size_t(y) * ow + x] = keep ? 1.0 : 0.0;
                counted += keep;
            }
        }
    }
    if (d_a) {
        *d_a = Image(w, h, C);
    }
    if (counted == 0) {
        return 1.0;
    }
    const double norm = 1.0 / (double(counted) * C);

    const std::size_t np = std::size_t(w) * h;
    std::vector<double> x(np), y(np), xx(np), yy(np), xy(np);
    double total = 0;
    for (int c = 0; c < C; ++c) {
        for (std::size_t p = 0; p < np; ++p) {
            x[p] = a.data()[p * C + c];
            y[p] = b.data()[p * C + c];
            xx[p] = x[p] * x[p];
            yy[p] = y[p] * y[p];
            xy[p] = x[p] * y[p];
        }
        const auto mx = filter_valid(x, w, h, k);
        const auto my = filter_valid(y, w, h, k);
        const auto exx = filter_valid(xx, w, h, k);
        const auto eyy = filter_valid(yy, w, h, k);
        const auto exy = filter_valid(xy, w, h, k);
        std::vector<double> g_mx, g_exx, g_exy;
        if (d_a) {
            g_mx.assign(mx.size(), 0.0);
            g_exx.assign(mx.size(), 0.0);
            g_exy.assign(mx.size(), 0.0);
        }
        for (std::size_t i = 0; i < mx.size(); ++i) {
            if (weight[i] == 0) continue;
            const double sxx = exx[i] - mx[i] * mx[i];
            const double syy = eyy[i] - my[i] * my[i];
            const double sxy = exy[i] - mx[i] * my[i];
            const double A1 = 2 * mx[i] * my[i] + o.c1, A2 = 2 * sxy + o.c2;
            const double B1 = mx[i] * mx[i] + my[i] * my[i] + o.c1, B2 = sxx + syy + o.c2;
            const double s = (A1 * A2) / (B1 * B2);
            total += s;
            if (d_a) {
                const double d_mx = 2 * my[i] * A2 / (B1 * B2) - s * 2 * mx[i] / B1;
                const double d_sxy = 2 * A1 / (B1 * B2);
                const double d_sxx = -s / B2;
                g_mx[i] = norm * (d_mx - 2 * mx[i] * d_sxx - my[i] * d_sxy);
                g_exx[i] = norm * d_sxx;
                g_exy[i] = norm * d_sxy;
            }
        }
        if (d_a) {
            const auto b_mx = filter_valid_adjoint(g_mx, w, h, k);
            const auto b_exx = filter_valid_adjoint(g_exx, w, h, k);
            const auto b_exy = filter_valid_adjoint(g_exy, w, h, k);
            for (std::size_t p = 0; p < np; ++p) {
                d_a->data()[p * C + c] = b_mx[p] + 2 * x[p] * b_exx[p] + y[p] * b_exy[p];
            }
        }
    }
    return total * norm;
}

}  // namespace v2xsim
