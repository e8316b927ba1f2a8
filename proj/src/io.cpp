#include "resiam/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace resiam {

namespace {

using nlohmann::json;

void check_image_shape(const Tensor& img, const char* who) {
    if (img.rank() != 3 || img.is_complex() || (img.extent(0) != 1 && img.extent(0) != 3))
        throw std::invalid_argument(std::string(who) + ": expected a real [1,H,W] or [3,H,W] image, got " +
                                    img.shape_str());
}

std::vector<double> split_row(const std::string& line, int expected, const char* who) {
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string(who) + ": bad cell '" + cell + "'");
        }
        if (used != cell.size())
            throw std::invalid_argument(std::string(who) + ": bad cell '" + cell + "'");
        vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != expected)
        throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(expected) +
                                    " columns, got " + std::to_string(vals.size()));
    return vals;
}

// Strips the header and yields the data lines of a CSV blob.
std::vector<std::string> csv_lines(const std::string& text, const std::string& header,
                                   const char* who) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    bool first = true;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            if (line != header)
                throw std::invalid_argument(std::string(who) + ": expected header '" + header +
                                            "', got '" + line + "'");
            first = false;
            continue;
        }
        if (!line.empty()) lines.push_back(line);
    }
    if (first) throw std::invalid_argument(std::string(who) + ": empty input");
    return lines;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Lift: return "lift";
        case LayerKind::Group: return "group";
        case LayerKind::PoolSpatial: return "pool_spatial";
        case LayerKind::PoolOrientation: return "pool_orientation";
    }
    throw std::logic_error("kind_name: unknown layer kind");
}

LayerKind kind_from_name(const std::string& s) {
    if (s == "lift") return LayerKind::Lift;
    if (s == "group") return LayerKind::Group;
    if (s == "pool_spatial") return LayerKind::PoolSpatial;
    if (s == "pool_orientation") return LayerKind::PoolOrientation;
    throw std::invalid_argument("network_from_json: unknown layer kind '" + s + "'");
}

} // namespace

Tensor read_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw std::runtime_error("read_png: cannot open '" + path + "': " + image.message);

    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int ch = color ? 3 : 1;
    const int h = static_cast<int>(image.height);
    const int w = static_cast<int>(image.width);
    std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw std::runtime_error("read_png: cannot decode '" + path + "': " + image.message);
    }

    Tensor out = Tensor::zeros({ch, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c)
                out.at(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * ch + c] / 255.0;
    return out;
}

void write_png(const std::string& path, const Tensor& img) {
    check_image_shape(img, "write_png");
    const int ch = img.extent(0);
    const int h = img.extent(1);
    const int w = img.extent(2);

    std::vector<unsigned char> buf(static_cast<std::size_t>(h) * w * ch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
                buf[(static_cast<std::size_t>(y) * w + x) * ch + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }

    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = (ch == 3) ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
        throw std::runtime_error("write_png: cannot write '" + path + "': " + image.message);
}

Tensor to_gray(const Tensor& img) {
    check_image_shape(img, "to_gray");
    if (img.extent(0) == 1) return img;
    const int h = img.extent(1);
    const int w = img.extent(2);
    Tensor out = Tensor::zeros({1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(0, y, x) = 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) +
                              0.114 * img.at(2, y, x);
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_text_file: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_text_file: cannot open '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write_text_file: write failed on '" + path + "'");
}

std::string annotations_to_csv(const std::vector<FrameAnnotation>& rows) {
    std::string out = "frame,x,y,w,h,angle_deg\n";
    for (const FrameAnnotation& r : rows)
        out += std::to_string(r.frame) + "," + fmt(r.box.x) + "," + fmt(r.box.y) + "," +
               fmt(r.box.w) + "," + fmt(r.box.h) + "," + fmt(r.angle_deg) + "\n";
    return out;
}

std::vector<FrameAnnotation> annotations_from_csv(const std::string& text) {
    std::vector<FrameAnnotation> rows;
    for (const std::string& line : csv_lines(text, "frame,x,y,w,h,angle_deg", "annotations_from_csv")) {
        const std::vector<double> v = split_row(line, 6, "annotations_from_csv");
        rows.push_back({static_cast<int>(v[0]), Box{v[1], v[2], v[3], v[4]}, v[5]});
    }
    return rows;
}

std::vector<ResultRow> results_from_csv(const std::string& text) {
    std::vector<ResultRow> rows;
    for (const std::string& line :
         csv_lines(text, "frame,x,y,w,h,orientation_deg,score", "results_from_csv")) {
        const std::vector<double> v = split_row(line, 7, "results_from_csv");
        rows.push_back({static_cast<int>(v[0]), Box{v[1], v[2], v[3], v[4]}, v[5], v[6]});
    }
    return rows;
}

std::string network_to_json(const Network& net, const TrackerHead& head) {
    net.validate();
    json j;
    j["format"] = "resiam-weights";
    j["version"] = 1;
    j["basis"] = net.basis.manifest();
    j["Lambda"] = net.spec.group.Lambda;

    json layers = json::array();
    for (const LayerSpec& l : net.spec.layers) {
        json e;
        e["kind"] = kind_name(l.kind);
        if (l.is_conv()) {
            e["in_ch"] = l.in_ch;
            e["out_ch"] = l.out_ch;
            e["S"] = l.S;
            e["stride"] = l.stride;
            e["norm"] = l.norm;
            e["relu"] = l.relu;
        } else if (l.kind == LayerKind::PoolSpatial) {
            e["factor"] = l.stride;
        } else {
            e["mode"] = (l.pool_mode == PoolMode::Max) ? "max" : "mean";
        }
        layers.push_back(e);
    }
    j["layers"] = layers;

    json params = json::array();
    for (const FilterWeights& w : net.params) {
        json e;
        e["out_ch"] = w.out_ch;
        e["in_ch"] = w.in_ch;
        e["offsets"] = w.offsets;
        e["re"] = w.re.storage();
        e["im"] = w.im.storage();
        e["bias"] = w.bias;
        params.push_back(e);
    }
    j["params"] = params;
    j["head"] = {{"gain", head.gain}, {"bias", head.bias}};
    return j.dump(1);
}

std::pair<Network, TrackerHead> network_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("network_from_json: parse error: ") + e.what());
    }
    try {
        if (j.at("format") != "resiam-weights")
            throw std::invalid_argument("network_from_json: not a weight container");
        if (j.at("version") != 1)
            throw std::invalid_argument("network_from_json: unsupported version");

        Network net;
        net.basis = SteerableBasis::from_manifest(j.at("basis").get<std::string>());
        net.spec.group = GroupSpec::cyclic(j.at("Lambda").get<int>());

        for (const json& e : j.at("layers")) {
            const LayerKind kind = kind_from_name(e.at("kind").get<std::string>());
            switch (kind) {
                case LayerKind::Lift:
                    net.spec.layers.push_back(LayerSpec::lift(
                        e.at("in_ch").get<int>(), e.at("out_ch").get<int>(), e.at("S").get<int>(),
                        e.at("stride").get<int>(), e.at("norm").get<bool>(),
                        e.at("relu").get<bool>()));
                    break;
                case LayerKind::Group:
                    net.spec.layers.push_back(LayerSpec::group(
                        e.at("in_ch").get<int>(), e.at("out_ch").get<int>(), e.at("S").get<int>(),
                        e.at("stride").get<int>(), e.at("norm").get<bool>(),
                        e.at("relu").get<bool>()));
                    break;
                case LayerKind::PoolSpatial:
                    net.spec.layers.push_back(LayerSpec::pool_spatial(e.at("factor").get<int>()));
                    break;
                case LayerKind::PoolOrientation:
                    net.spec.layers.push_back(LayerSpec::pool_orientation(
                        e.at("mode").get<std::string>() == "mean" ? PoolMode::Mean
                                                                  : PoolMode::Max));
                    break;
            }
        }

        for (const json& e : j.at("params")) {
            FilterWeights w = zero_filter_weights(e.at("out_ch").get<int>(),
                                                  e.at("in_ch").get<int>(),
                                                  e.at("offsets").get<int>(), net.basis);
            const auto re = e.at("re").get<std::vector<double>>();
            const auto im = e.at("im").get<std::vector<double>>();
            const auto bias = e.at("bias").get<std::vector<double>>();
            if (re.size() != w.re.storage().size() || im.size() != w.im.storage().size() ||
                bias.size() != w.bias.size())
                throw std::invalid_argument("network_from_json: coefficient array size mismatch");
            w.re.storage() = re;
            w.im.storage() = im;
            w.bias = bias;
            net.params.push_back(std::move(w));
        }

        TrackerHead head;
        head.gain = j.at("head").at("gain").get<double>();
        head.bias = j.at("head").at("bias").get<double>();

        net.validate();
        return {std::move(net), head};
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("network_from_json: malformed container: ") +
                                    e.what());
    }
}

void save_network(const std::string& path, const Network& net, const TrackerHead& head) {
    write_text_file(path, network_to_json(net, head));
}

std::pair<Network, TrackerHead> load_network(const std::string& path) {
    return network_from_json(read_text_file(path));
}

} // namespace resiam
