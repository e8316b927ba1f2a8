#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <stdexcept>
#include <vector>

#include "resiam/basis.hpp"
#include "resiam/eval.hpp"
#include "resiam/io.hpp"
#include "resiam/net.hpp"
#include "resiam/synth.hpp"
#include "resiam/tracker.hpp"
#include "resiam/train.hpp"

namespace py = pybind11;
using namespace resiam;

namespace {

py::array_t<double> tensor_to_array(const Tensor& t) {
    if (t.is_complex()) throw std::invalid_argument("complex tensors are not exposed");
    std::vector<py::ssize_t> shape;
    for (int i = 0; i < t.rank(); ++i) shape.push_back(t.extent(i));
    py::array_t<double> out(shape);
    std::memcpy(out.mutable_data(), t.raw(), t.size() * sizeof(double));
    return out;
}

Tensor array_to_tensor(const py::array& a) {
    const py::array_t<double, py::array::c_style | py::array::forcecast> arr(a);
    if (arr.ndim() < 1 || arr.ndim() > 4)
        throw std::invalid_argument("expected a 1..4-d array");
    std::vector<int> shape;
    for (py::ssize_t i = 0; i < arr.ndim(); ++i)
        shape.push_back(static_cast<int>(arr.shape(i)));
    std::vector<double> data(arr.data(), arr.data() + arr.size());
    return Tensor::from_data(shape, std::move(data));
}

ImagePatch array_to_patch(const py::array& a) {
    Tensor t = array_to_tensor(a);
    if (t.rank() == 2) t = Tensor::from_data({1, t.extent(0), t.extent(1)},
                                             std::vector<double>(t.raw(), t.raw() + t.size()));
    if (t.rank() != 3) throw std::invalid_argument("expected a [H,W] or [C,H,W] image");
    return ImagePatch(t);
}

std::vector<ImagePatch> arrays_to_patches(const std::vector<py::array>& frames) {
    std::vector<ImagePatch> out;
    out.reserve(frames.size());
    for (const py::array& f : frames) out.push_back(array_to_patch(f));
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "rotation-equivariant Siamese tracking core";

    py::class_<Box>(m, "Box")
        .def(py::init<>())
        .def(py::init([](double x, double y, double w, double h) {
                 return Box{x, y, w, h};
             }),
             py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"))
        .def_readwrite("x", &Box::x)
        .def_readwrite("y", &Box::y)
        .def_readwrite("w", &Box::w)
        .def_readwrite("h", &Box::h)
        .def("cx", &Box::cx)
        .def("cy", &Box::cy)
        .def("area", &Box::area)
        .def("__repr__", [](const Box& b) {
            return "Box(" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " +
                   std::to_string(b.w) + ", " + std::to_string(b.h) + ")";
        });
    m.def("iou", &iou, py::arg("a"), py::arg("b"));

    py::class_<FrameAnnotation>(m, "FrameAnnotation")
        .def_readwrite("frame", &FrameAnnotation::frame)
        .def_readwrite("box", &FrameAnnotation::box)
        .def_readwrite("angle_deg", &FrameAnnotation::angle_deg);

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("frames", &SynthConfig::frames)
        .def_readwrite("digits_min", &SynthConfig::digits_min)
        .def_readwrite("digits_max", &SynthConfig::digits_max)
        .def_readwrite("canvas", &SynthConfig::canvas)
        .def_readwrite("sigma_t", &SynthConfig::sigma_t)
        .def_readwrite("sigma_r", &SynthConfig::sigma_r)
        .def_readwrite("background_dir", &SynthConfig::background_dir)
        .def_readwrite("seed", &SynthConfig::seed);

    py::class_<SyntheticSequence>(m, "SyntheticSequence")
        .def_property_readonly("frames",
                               [](const SyntheticSequence& s) {
                                   std::vector<py::array_t<double>> out;
                                   for (const Tensor& f : s.frames) out.push_back(tensor_to_array(f));
                                   return out;
                               })
        .def_readonly("target", &SyntheticSequence::target)
        .def_readonly("distractors", &SyntheticSequence::distractors);

    m.def("digit_glyph", [](int d) { return tensor_to_array(digit_glyph(d)); }, py::arg("digit"));
    m.def("enclosing_box",
          py::overload_cast<const Box&, double>(&enclosing_box), py::arg("box"),
          py::arg("angle_deg"));
    m.def("generate_sequence",
          py::overload_cast<const SynthConfig&, std::uint64_t>(&generate_sequence),
          py::arg("config"), py::arg("index") = 0);
    m.def("rotate_sequence", &rotate_sequence, py::arg("sequence"), py::arg("delta_deg") = 0.5);
    m.def("write_sequence", &write_sequence, py::arg("dir"), py::arg("sequence"),
          py::arg("config"));

    py::class_<StoredSequence>(m, "StoredSequence")
        .def_property_readonly("frames",
                               [](const StoredSequence& s) {
                                   std::vector<py::array_t<double>> out;
                                   for (const Tensor& f : s.frames) out.push_back(tensor_to_array(f));
                                   return out;
                               })
        .def_readonly("groundtruth", &StoredSequence::groundtruth);
    m.def("read_sequence", &read_sequence, py::arg("dir"));

    py::class_<Network>(m, "Network")
        .def_property_readonly("Lambda", [](const Network& n) { return n.spec.group.Lambda; })
        .def("param_count", &Network::param_count)
        .def("total_stride", [](const Network& n) { return n.spec.total_stride(); });
    py::class_<TrackerHead>(m, "TrackerHead")
        .def(py::init<>())
        .def_readwrite("gain", &TrackerHead::gain)
        .def_readwrite("bias", &TrackerHead::bias);

    m.def("desk_network", &desk_network, py::arg("Lambda"), py::arg("seed"));
    m.def("forward",
          [](const Network& net, const py::array& img) {
              return tensor_to_array(forward(net, array_to_patch(img)));
          },
          py::arg("net"), py::arg("image"));
    m.def("save_network", &save_network, py::arg("path"), py::arg("net"), py::arg("head"));
    m.def("load_network", &load_network, py::arg("path"));

    py::class_<TrackerConfig>(m, "TrackerConfig")
        .def(py::init<>())
        .def_readwrite("Lambda", &TrackerConfig::Lambda)
        .def_readwrite("exemplar_size", &TrackerConfig::exemplar_size)
        .def_readwrite("search_size", &TrackerConfig::search_size)
        .def_readwrite("context", &TrackerConfig::context)
        .def_readwrite("scales", &TrackerConfig::scales)
        .def_readwrite("scale_penalty", &TrackerConfig::scale_penalty)
        .def_readwrite("scale_damping", &TrackerConfig::scale_damping)
        .def_readwrite("window_weight", &TrackerConfig::window_weight)
        .def_readwrite("upsample", &TrackerConfig::upsample)
        .def_readwrite("gamma", &TrackerConfig::gamma);

    py::class_<TrackState>(m, "TrackState")
        .def_readonly("frame", &TrackState::frame)
        .def_readonly("cx", &TrackState::cx)
        .def_readonly("cy", &TrackState::cy)
        .def_readonly("w", &TrackState::w)
        .def_readonly("h", &TrackState::h)
        .def_readonly("scale", &TrackState::scale)
        .def_readonly("orientation_index", &TrackState::orientation_index)
        .def_readonly("orientation_deg", &TrackState::orientation_deg)
        .def_readonly("score", &TrackState::score)
        .def("box", &TrackState::box);

    m.def("track_sequence",
          [](const std::vector<py::array>& frames, const Box& init, const Network& net,
             const TrackerConfig& cfg) {
              return track_sequence(arrays_to_patches(frames), init, net, cfg);
          },
          py::arg("frames"), py::arg("init"), py::arg("net"), py::arg("config"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lr_initial", &TrainConfig::lr_initial)
        .def_readwrite("lr_final", &TrainConfig::lr_final)
        .def_readwrite("momentum", &TrainConfig::momentum)
        .def_readwrite("weight_decay", &TrainConfig::weight_decay)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("steps_per_epoch", &TrainConfig::steps_per_epoch)
        .def_readwrite("checkpoint_every", &TrainConfig::checkpoint_every)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<SamplerConfig>(m, "SamplerConfig")
        .def(py::init<>())
        .def_readwrite("exemplar_size", &SamplerConfig::exemplar_size)
        .def_readwrite("search_size", &SamplerConfig::search_size)
        .def_readwrite("response", &SamplerConfig::response)
        .def_readwrite("stride", &SamplerConfig::stride)
        .def_readwrite("context", &SamplerConfig::context)
        .def_readwrite("max_gap", &SamplerConfig::max_gap)
        .def_readwrite("max_offset", &SamplerConfig::max_offset)
        .def_readwrite("label_radius", &SamplerConfig::label_radius);

    m.def("train_on_dataset",
          [](const std::string& dataset_dir, int Lambda, const TrainConfig& tcfg,
             const SamplerConfig& scfg) {
              const PairSampler sampler = make_dataset_sampler(dataset_dir, scfg);
              const Network net = desk_network(Lambda, tcfg.seed);
              TrainResult r = train(net, TrackerHead{}, sampler, tcfg);
              std::vector<double> losses;
              for (const TrainStep& s : r.trace) losses.push_back(s.loss);
              return py::make_tuple(r.net, r.head, losses);
          },
          py::arg("dataset_dir"), py::arg("Lambda"), py::arg("train_config"),
          py::arg("sampler_config") = SamplerConfig{});

    py::class_<EvalCurves>(m, "EvalCurves")
        .def_readonly("success", &EvalCurves::success)
        .def_readonly("precision", &EvalCurves::precision)
        .def_readonly("auc", &EvalCurves::auc)
        .def_readonly("precision_at_20", &EvalCurves::precision_at_20);

    m.def("ope_curves", &ope_curves, py::arg("results"), py::arg("truth"));
    m.def("average_curves", &average_curves, py::arg("per_sequence"));
    m.def("orientation_sr", &orientation_sr, py::arg("pred_deg"), py::arg("truth_deg"),
          py::arg("delta_deg"), py::arg("ious"), py::arg("alpha"));
    m.def("random_baseline", &random_baseline, py::arg("delta_rad"));
    m.def("wrap_angle_deg", &wrap_angle_deg, py::arg("deg"));
}
