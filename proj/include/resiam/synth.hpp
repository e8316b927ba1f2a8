#ifndef RESIAM_SYNTH_HPP
#define RESIAM_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "resiam/box.hpp"
#include "resiam/io.hpp"
#include "resiam/tensor.hpp"

namespace resiam {

inline constexpr int kGlyphSize = 28;

/// Rotating-glyphs sequence generator: the target glyph undergoes Brownian
/// translation and rotation, distractors translate only.
struct SynthConfig {
    int frames = 100;
    int digits_min = 3;
    int digits_max = 5;
    int canvas = 160;
    double sigma_t = 1.5;          // translation diffusion, px/frame
    double sigma_r = 3.0;          // rotation diffusion, deg/frame
    std::string background_dir;    // empty -> flat mid-gray background
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticSequence {
    std::vector<Tensor> frames;                           // [1,H,W] in [0,1]
    std::vector<FrameAnnotation> target;                  // exact by construction
    std::vector<std::vector<FrameAnnotation>> distractors;
};

/// Procedural stroke glyph for digit 0-9, [28,28] intensities in [0,1].
Tensor digit_glyph(int digit);

/// Tight axis-aligned box containing `box` rotated counter-clockwise by
/// angle_deg about the pivot (default: the box's own center).
Box enclosing_box(const Box& box, double angle_deg, double pivot_x, double pivot_y);
Box enclosing_box(const Box& box, double angle_deg);

/// Sequence `index` of the master stream; annotations record the target's
/// cumulative angle relative to frame 0 (frame 0 is always 0).
SyntheticSequence generate_sequence(const SynthConfig& cfg, std::uint64_t index);
SyntheticSequence generate_sequence(const SynthConfig& cfg);

/// Incremental whole-frame rotation: frame t is rotated by t*delta_deg
/// counter-clockwise about the image center, boxes become the tight enclosing
/// boxes of the rotated originals, and angles grow by t*delta_deg.
SyntheticSequence rotate_sequence(const SyntheticSequence& seq, double delta_deg = 0.5);

/// Directory layout shared by the tracker and the evaluator:
/// frames/%06d.png + groundtruth.csv + meta.json.
void write_sequence(const std::string& dir, const SyntheticSequence& seq, const SynthConfig& cfg);

struct StoredSequence {
    std::vector<Tensor> frames;
    std::vector<FrameAnnotation> groundtruth;
};

StoredSequence read_sequence(const std::string& dir);

} // namespace resiam

#endif
