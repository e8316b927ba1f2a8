#ifndef RESIAM_TRAIN_HPP
#define RESIAM_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "resiam/net.hpp"
#include "resiam/rng.hpp"
#include "resiam/synth.hpp"
#include "resiam/tensor.hpp"

namespace resiam {

struct TrainConfig {
    double lr_initial = 1e-2;
    double lr_final = 1e-5;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int batch_size = 8;
    int epochs = 1;
    int steps_per_epoch = 100;
    int checkpoint_every = 0;   // steps between checkpoint callbacks; 0 disables
    std::uint64_t seed = 0;

    void validate() const;
    int total_steps() const { return epochs * steps_per_epoch; }
};

/// Geometric decay from lr_initial (step 0) to lr_final (last step).
double learning_rate(const TrainConfig& cfg, int step, int total_steps);

/// Per-pixel +1/-1 targets with class-balanced weights: each class's weights
/// sum to 0.5, so the loss of an all-zero score map is exactly log 2.
struct LabelMap {
    Tensor labels;    // [H,W] of +1/-1
    Tensor weights;   // [H,W]
    double radius = 0.0;
};

/// +1 inside Euclidean distance `radius` (heatmap px) of (cy, cx), -1 outside.
/// Both classes must be non-empty.
LabelMap make_label_map(int h, int w, double cy, double cx, double radius);

/// Balance-weighted logistic loss: sum over pixels of w * log(1 + exp(-label*score)).
double loss(const Tensor& scores, const LabelMap& labels);
Tensor loss_grad(const Tensor& scores, const LabelMap& labels);

/// Parameter-shaped gradient container (FilterWeights reused as storage).
struct NetGrads {
    std::vector<FilterWeights> layers;
    double head_gain = 0.0;
    double head_bias = 0.0;
};

NetGrads zero_grads(const Network& net);

/// Reverse-mode pass through a recorded forward: accumulates parameter
/// gradients into `grads` (shapes must match net.params) and returns the
/// gradient with respect to the input image.
Tensor network_backward(const Network& net, const ForwardCache& cache, const Tensor& d_output,
                        std::vector<FilterWeights>& grads);

struct PairLoss {
    double loss = 0.0;
    NetGrads grads;
};

/// Loss and gradients for one training pair: both branches share weights, the
/// exemplar is correlated against the search features at orientation 0 only,
/// and the head maps the response to logits. The response is divided by the
/// template element count before the affine head so logit scale is
/// independent of the feature width.
PairLoss siamese_backward(const Network& net, const TrackerHead& head, const ImagePatch& exemplar,
                          const ImagePatch& search, const LabelMap& labels);

struct SgdState {
    std::vector<FilterWeights> velocity;
    double v_gain = 0.0;
    double v_bias = 0.0;
};

SgdState zero_sgd_state(const Network& net);

/// v <- momentum*v + g + weight_decay*p;  p <- p - lr(step)*v.
void sgd_step(Network& net, TrackerHead& head, const NetGrads& grads, SgdState& state,
              const TrainConfig& cfg, int step, int total_steps);

struct TrainSample {
    ImagePatch exemplar;
    ImagePatch search;
    LabelMap labels;
};

using PairSampler = std::function<TrainSample(Rng&)>;
using CheckpointFn = std::function<void(int step, const Network&, const TrackerHead&)>;

/// Geometry for cutting Siamese training pairs out of sequences.
struct SamplerConfig {
    int exemplar_size = 35;
    int search_size = 67;
    int response = 9;           // correlation response side for this geometry
    int stride = 4;             // encoder total stride
    double context = 0.5;
    int max_gap = 25;           // max frame separation of a pair
    int max_offset = 8;         // integer px jitter of the search crop
    double label_radius = 2.0;  // positive radius, response cells

    void validate() const;
};

/// Samples exemplar/search pairs from in-memory sequences: two frames of one
/// sequence at most max_gap apart; the search crop is shifted by a uniform
/// integer pixel offset and the label center moves to match. Draw order per
/// sample: sequence, frame a, frame b, x offset, y offset.
PairSampler make_pair_sampler(std::vector<StoredSequence> sequences, const SamplerConfig& cfg);

/// Loads every sequence subdirectory under dataset_dir (sorted by name) and
/// wraps the result in make_pair_sampler.
PairSampler make_dataset_sampler(const std::string& dataset_dir, const SamplerConfig& cfg);

struct TrainStep {
    int step = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    Network net;
    TrackerHead head;
    std::vector<TrainStep> trace;
};

/// Deterministic SGD loop: batch-averaged gradients, geometric learning-rate
/// decay, loss recorded before each step. Throws if the loss goes non-finite.
TrainResult train(const Network& net, const TrackerHead& head, const PairSampler& sampler,
                  const TrainConfig& cfg, const CheckpointFn& checkpoint = {});

/// One CSV row per step: step,lr,loss.
std::string trace_to_csv(const std::vector<TrainStep>& trace);

} // namespace resiam

#endif
