#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seedrefine/config.hpp"
#include "seedrefine/edgepredict.hpp"
#include "seedrefine/eval.hpp"
#include "seedrefine/grid_ops.hpp"
#include "seedrefine/mixer.hpp"
#include "seedrefine/pamr.hpp"
#include "seedrefine/scg.hpp"
#include "seedrefine/seedloop.hpp"
#include "seedrefine/types.hpp"

namespace py = pybind11;
using namespace seedrefine;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int32_t, py::array::c_style | py::array::forcecast>;
using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

ScoreMap map_from3(const FloatArray& a, bool probabilistic, const char* name) {
    if (a.ndim() != 3) throw py::value_error(std::string(name) + " must be (classes, h, w)");
    ScoreMap map(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                 static_cast<int>(a.shape(2)), probabilistic);
    std::copy(a.data(), a.data() + a.size(), map.values.begin());
    return map;
}

py::array_t<float> map_to3(const ScoreMap& map) {
    py::array_t<float> out({map.classes, map.height, map.width});
    std::copy(map.values.begin(), map.values.end(), out.mutable_data());
    return out;
}

FeatureLayer layer_from3(const FloatArray& a, const char* name) {
    if (a.ndim() != 3) throw py::value_error(std::string(name) + " must be (channels, h, w)");
    FeatureLayer layer(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                       static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), layer.values.begin());
    return layer;
}

FeatureStack stack_from_list(const std::vector<FloatArray>& arrays) {
    FeatureStack stack;
    for (const auto& a : arrays) stack.layers.push_back(layer_from3(a, "feature layer"));
    return stack;
}

RgbImage image_from3(const FloatArray& a) {
    if (a.ndim() != 3 || a.shape(0) != 3) throw py::value_error("image must be (3, h, w)");
    RgbImage image(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), image.values.begin());
    return image;
}

LabelMask mask_from2(const IntArray& a) {
    if (a.ndim() != 2) throw py::value_error("mask must be (h, w)");
    LabelMask mask(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), mask.labels.begin());
    return mask;
}

py::array_t<int32_t> mask_to2(const LabelMask& mask) {
    py::array_t<int32_t> out({mask.height, mask.width});
    std::copy(mask.labels.begin(), mask.labels.end(), out.mutable_data());
    return out;
}

WindowMask window_from2(const BoolArray& a) {
    if (a.ndim() != 2) throw py::value_error("window must be (h, w)");
    WindowMask window(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    for (py::ssize_t i = 0; i < a.size(); ++i) window.member[i] = a.data()[i] ? 1 : 0;
    return window;
}

py::array_t<float> volume_to2(const CorrelationVolume& vol) {
    const int hw = vol.pixel_count();
    py::array_t<float> out({hw, hw});
    std::copy(vol.values.begin(), vol.values.end(), out.mutable_data());
    return out;
}

py::array_t<bool> bool_to2(const std::vector<uint8_t>& grid, int h, int w) {
    py::array_t<bool> out({h, w});
    for (size_t i = 0; i < grid.size(); ++i) out.mutable_data()[i] = grid[i] != 0;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "seed-refinement pipeline for weak-label segmentation";

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("delta_fg", &PipelineConfig::delta_fg)
        .def_readwrite("delta_bg", &PipelineConfig::delta_bg)
        .def_readwrite("delta_h", &PipelineConfig::delta_h)
        .def_readwrite("delta_l", &PipelineConfig::delta_l)
        .def_readwrite("pamr_iterations", &PipelineConfig::pamr_iterations)
        .def_readwrite("pamr_dilations", &PipelineConfig::pamr_dilations)
        .def_readwrite("pamr_sigma_window", &PipelineConfig::pamr_sigma_window)
        .def_readwrite("pamr_sigma_sq_floor", &PipelineConfig::pamr_sigma_sq_floor)
        .def_readwrite("canny_low", &PipelineConfig::canny_low)
        .def_readwrite("canny_high", &PipelineConfig::canny_high)
        .def_readwrite("ccl_connectivity", &PipelineConfig::ccl_connectivity)
        .def_readwrite("epsilon", &PipelineConfig::epsilon)
        .def_readwrite("rng_seed", &PipelineConfig::rng_seed)
        .def_readwrite("scg_max_volume_pixels", &PipelineConfig::scg_max_volume_pixels)
        .def("check", &PipelineConfig::check);

    m.def(
        "minmax_normalize",
        [](const FloatArray& grid, int axis) {
            if (grid.ndim() != 2) throw py::value_error("grid must be 2-D");
            const int rows = static_cast<int>(grid.shape(0));
            const int cols = static_cast<int>(grid.shape(1));
            const std::vector<float> out = minmax_normalize(
                std::span<const float>(grid.data(), static_cast<size_t>(grid.size())), rows,
                cols, axis);
            py::array_t<float> result({rows, cols});
            std::copy(out.begin(), out.end(), result.mutable_data());
            return result;
        },
        py::arg("grid"), py::arg("axis") = 1,
        "Min-max normalize along an axis; constant slices map to zeros.");

    m.def(
        "first_order_sc",
        [](const FloatArray& layer, float epsilon) {
            return volume_to2(first_order_sc(layer_from3(layer, "layer"), epsilon));
        },
        py::arg("layer"), py::arg("epsilon") = 1e-6f);

    m.def(
        "second_order_sc",
        [](const FloatArray& layer, float epsilon) {
            return volume_to2(second_order_sc(layer_from3(layer, "layer"), epsilon));
        },
        py::arg("layer"), py::arg("epsilon") = 1e-6f);

    m.def(
        "hsc",
        [](const std::vector<FloatArray>& layers, float epsilon) {
            return volume_to2(hsc(stack_from_list(layers), epsilon));
        },
        py::arg("layers"), py::arg("epsilon") = 1e-6f);

    m.def(
        "scg_refine",
        [](const FloatArray& cam, const std::vector<FloatArray>& layers,
           const PipelineConfig& cfg) {
            return map_to3(scg_refine(map_from3(cam, false, "cam"), stack_from_list(layers), cfg));
        },
        py::arg("cam"), py::arg("layers"), py::arg("config") = PipelineConfig{});

    m.def(
        "local_sigma",
        [](const FloatArray& image, int window, float sigma_sq_floor) {
            const RgbImage img = image_from3(image);
            const std::vector<float> sigma = local_sigma(img, window, sigma_sq_floor);
            py::array_t<float> out({img.height, img.width});
            std::copy(sigma.begin(), sigma.end(), out.mutable_data());
            return out;
        },
        py::arg("image"), py::arg("window") = 5, py::arg("sigma_sq_floor") = 1e-4f);

    m.def(
        "pamr_refine",
        [](const FloatArray& map, const FloatArray& image, const BoolArray& window,
           const PipelineConfig& cfg) {
            return map_to3(pamr_refine(map_from3(map, false, "map"), image_from3(image),
                                       window_from2(window), cfg));
        },
        py::arg("map"), py::arg("image"), py::arg("window"),
        py::arg("config") = PipelineConfig{});

    m.def(
        "recurseed_step",
        [](const FloatArray& cam, const std::vector<FloatArray>& layers, const FloatArray& image,
           const PipelineConfig& cfg) {
            return map_to3(recurseed_step(map_from3(cam, false, "cam"), stack_from_list(layers),
                                          image_from3(image), cfg));
        },
        py::arg("cam"), py::arg("layers"), py::arg("image"),
        py::arg("config") = PipelineConfig{});

    m.def(
        "certain_filter",
        [](const FloatArray& rs, const PipelineConfig& cfg) {
            return mask_to2(certain_filter(map_from3(rs, true, "rs"), cfg));
        },
        py::arg("rs"), py::arg("config") = PipelineConfig{},
        "Labels: argmax class above delta_fg, 0 below delta_bg, -1 in between.");

    m.def(
        "softmax_map",
        [](const FloatArray& logits) { return map_to3(softmax_map(map_from3(logits, false, "logits"))); },
        py::arg("logits"));

    m.def(
        "loss_cls",
        [](const FloatArray& cam, const std::vector<uint8_t>& labels, float epsilon) {
            return loss_cls(map_from3(cam, false, "cam"), labels, epsilon);
        },
        py::arg("cam"), py::arg("labels"), py::arg("epsilon") = 1e-6f);

    m.def(
        "loss_seg",
        [](const FloatArray& pred_logits, const IntArray& target, float epsilon) {
            return loss_seg(map_from3(pred_logits, false, "pred"), mask_from2(target), epsilon);
        },
        py::arg("pred_logits"), py::arg("target"), py::arg("epsilon") = 1e-6f);

    m.def(
        "loss_rec",
        [](const FloatArray& a, const FloatArray& b) {
            return loss_rec(map_from3(a, false, "a"), map_from3(b, false, "b"));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "canny",
        [](const FloatArray& gray, float low, float high) {
            if (gray.ndim() != 2) throw py::value_error("gray must be (h, w)");
            const int h = static_cast<int>(gray.shape(0));
            const int w = static_cast<int>(gray.shape(1));
            const std::vector<float> grid(gray.data(), gray.data() + gray.size());
            return bool_to2(canny(grid, h, w, low, high).edge, h, w);
        },
        py::arg("gray"), py::arg("low") = 10.0f, py::arg("high") = 100.0f,
        "Edges of a single-channel grid scaled to [0,255].");

    m.def(
        "connected_components",
        [](const BoolArray& edges, int connectivity) {
            if (edges.ndim() != 2) throw py::value_error("edges must be (h, w)");
            EdgeMap em(static_cast<int>(edges.shape(0)), static_cast<int>(edges.shape(1)));
            for (py::ssize_t i = 0; i < edges.size(); ++i) em.edge[i] = edges.data()[i] ? 1 : 0;
            const SuperpixelLabels sp = connected_components(em, connectivity);
            py::array_t<int32_t> out({sp.height, sp.width});
            std::copy(sp.id.begin(), sp.id.end(), out.mutable_data());
            return out;
        },
        py::arg("edges"), py::arg("connectivity") = 4,
        "Dense raster-ordered component ids; edge pixels get -1.");

    m.def(
        "ep_refine",
        [](const FloatArray& dec, const PipelineConfig& cfg) {
            return map_to3(ep_refine(map_from3(dec, true, "dec"), cfg));
        },
        py::arg("dec"), py::arg("config") = PipelineConfig{});

    m.def(
        "foreground_union",
        [](const FloatArray& ep, const PipelineConfig& cfg) {
            const ScoreMap map = map_from3(ep, true, "ep");
            return bool_to2(foreground_union(map, cfg), map.height, map.width);
        },
        py::arg("ep"), py::arg("config") = PipelineConfig{});

    m.def("mix_partners", &mix_partners, py::arg("batch_size"), py::arg("seed"),
          "Partner index per sample, uniform over the others, deterministic per seed.");

    py::class_<ConfusionTally>(m, "ConfusionTally")
        .def(py::init<int>(), py::arg("num_classes"))
        .def(
            "accumulate",
            [](ConfusionTally& tally, const IntArray& pred, const IntArray& truth) {
                accumulate(mask_from2(pred), mask_from2(truth), tally);
            },
            py::arg("pred"), py::arg("truth"))
        .def("merge", &ConfusionTally::merge)
        .def("miou", [](const ConfusionTally& tally) { return miou(tally); })
        .def("fp_fn_rates", [](const ConfusionTally& tally) { return fp_fn_rates(tally); })
        .def("per_class_iou", [](const ConfusionTally& tally) { return per_class_iou(tally); });
}
