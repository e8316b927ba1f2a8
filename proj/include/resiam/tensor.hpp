#ifndef RESIAM_TENSOR_HPP
#define RESIAM_TENSOR_HPP

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace resiam {

/// Dense row-major tensor of 64-bit reals, rank 1..4. Complex tensors store
/// interleaved (re, im) pairs and are flagged; logical element count stays
/// product(shape).
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const std::vector<int>& shape);
    static Tensor zeros_complex(const std::vector<int>& shape);
    static Tensor zeros_like(const Tensor& other);
    static Tensor from_data(const std::vector<int>& shape, std::vector<double> values);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    bool is_complex() const { return complex_; }
    std::size_t size() const { return size_; }

    double* raw() { return data_.data(); }
    const double* raw() const { return data_.data(); }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    // Unchecked element access for real tensors; index count must equal rank.
    template <class... Ix>
    double& at(Ix... ix) { return data_[flat(ix...)]; }
    template <class... Ix>
    double at(Ix... ix) const { return data_[flat(ix...)]; }

    template <class... Ix>
    std::complex<double> cat(Ix... ix) const {
        const std::size_t f = 2 * flat(ix...);
        return {data_[f], data_[f + 1]};
    }
    template <class... Ix>
    void set_c(std::complex<double> v, Ix... ix) {
        const std::size_t f = 2 * flat(ix...);
        data_[f] = v.real();
        data_[f + 1] = v.imag();
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    std::string shape_str() const;

private:
    template <class... Ix>
    std::size_t flat(Ix... ix) const {
        const int idx[] = {static_cast<int>(ix)...};
        constexpr std::size_t n = sizeof...(Ix);
        std::size_t f = 0;
        for (std::size_t a = 0; a < n; ++a) {
            f = f * static_cast<std::size_t>(shape_[a]) + static_cast<std::size_t>(idx[a]);
        }
        return f;
    }

    std::vector<int> shape_;
    std::size_t size_ = 0;
    bool complex_ = false;
    std::vector<double> data_;
};

enum class Interp { Nearest, Bilinear };

/// Image patch [C,H,W] with C in {1,3} and values in [0,1]. Pixel centers sit
/// on the integer grid; the patch center is ((H-1)/2, (W-1)/2).
struct ImagePatch {
    Tensor data;

    ImagePatch() = default;
    explicit ImagePatch(Tensor t);

    int channels() const { return data.extent(0); }
    int height() const { return data.extent(1); }
    int width() const { return data.extent(2); }
};

/// 2D cross-correlation (no kernel flip), the Siamese-tracking "convolution".
/// input [C,H,W], kernels [Chat,C,Sh,Sw], zero padding, "valid" extent:
/// H' = floor((H + 2*padding - Sh)/stride) + 1. output[chat] = sum_c input[c] x kernels[chat,c].
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride = 1, int padding = 0);

/// Exact index-permutation rotation of the last two axes by quarter_turns*90deg
/// counter-clockwise. Odd turn counts require square spatial extent.
Tensor rotate90(const Tensor& t, int quarter_turns);

/// Resampling rotation of the last two axes, counter-clockwise by theta about
/// the spatial center, out-of-support filled with 0.
Tensor rotate_spatial(const Tensor& t, double theta, Interp interp);

/// Rotate an image counter-clockwise about the patch center. theta in (-pi, pi].
/// Multiples of pi/2 take the exact permutation path (square patches; 180deg any
/// shape); everything else resamples with zero fill.
ImagePatch rotate_image(const ImagePatch& img, double theta, Interp interp = Interp::Bilinear);

/// Crop [out_h, out_w] about continuous pixel-center (cx, cy). Out-of-frame
/// area is filled with the per-channel mean of the source frame.
ImagePatch crop_centered(const ImagePatch& img, double cx, double cy, int out_h, int out_w);

ImagePatch resize_bilinear(const ImagePatch& img, int out_h, int out_w);

/// Bicubic upsampling of a [H,W] map to [(H-1)*factor+1, (W-1)*factor+1]
/// (Keys kernel, a = -0.5, replicated border). factor 1 is the identity.
Tensor upsample_bicubic(const Tensor& hw, int factor);

} // namespace resiam

#endif
